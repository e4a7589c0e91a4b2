//! Text formats for networks, parameters, dataset manifests and detection results.
//!
//! * edges: `layerId nodeId nodeId weight`
//! * layers: `layerId aspectId label`
//! * couplings: `nodeId layerA aspectA layerB aspectB [magnitude]`
//! * grid layers: `layerId label c_1 ... c_F`
//!
//! Fields are whitespace separated, ids are 1-based and `#` starts a comment. Layer
//! ids are global: the layer file assigns each one to an aspect, and layers of one
//! aspect are ordered as they appear in that file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coupling::{Closeness, CouplingSpec, CouplingStrategy};
use crate::error::{Error, Result};
use crate::modularity::{ModularityParams, Normalization, Partition, SignedResolution};
use crate::mspec::{DetectionResult, Division};
use crate::network::{
    AspectGrid, CouplingSet, GridCoupling, GridLayer, LayerAdjacency, LocationMap, MultilayerNetwork,
};

/// Named text, so parse errors can point at a file and line.
#[derive(Debug, Clone, Copy)]
pub struct Source<'a> {
    pub name: &'a str,
    pub text: &'a str,
}

impl<'a> Source<'a> {
    pub fn new(name: &'a str, text: &'a str) -> Self {
        Self { name, text }
    }

    /// Non-blank lines with comments stripped, with 1-based line numbers.
    fn records(&self) -> impl Iterator<Item = (usize, Vec<&'a str>)> + 'a {
        self.text.lines().enumerate().filter_map(|(i, line)| {
            let body = line.split('#').next().unwrap_or("");
            let fields: Vec<&str> = body.split_whitespace().collect();
            (!fields.is_empty()).then_some((i + 1, fields))
        })
    }

    fn parse_error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            source_name: self.name.to_string(),
            line,
            message: message.into(),
        }
    }

    fn domain_error(&self, line: usize, message: impl std::fmt::Display) -> Error {
        Error::domain(format!("{}:{line}: {message}", self.name))
    }

    fn field<T: FromStr>(&self, line: usize, what: &str, raw: &str) -> Result<T> {
        raw.parse()
            .map_err(|_| self.parse_error(line, format!("cannot parse {what} from {raw:?}")))
    }

    /// A 1-based id, returned 0-based.
    fn id(&self, line: usize, what: &str, raw: &str, limit: Option<usize>) -> Result<usize> {
        let v: usize = self.field(line, what, raw)?;
        match limit {
            _ if v == 0 => Err(self.domain_error(line, format!("{what} 0 outside 1-based range"))),
            Some(limit) if v > limit => Err(self.domain_error(line, format!("{what} {v} outside 1..={limit}"))),
            None if v > MAX_ID => Err(self.domain_error(line, format!("{what} {v} exceeds {MAX_ID}"))),
            _ => Ok(v - 1),
        }
    }
}

/// Upper bound on undeclared ids and on the number of node copies a file may describe.
const MAX_ID: usize = 1 << 20;
const MAX_CELLS: usize = 1 << 22;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary file in the target directory, so failures leave no partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Layer table: aspects with their layer labels, and the flat index of each global layer id.
#[derive(Debug, Clone, PartialEq)]
struct LayerTable {
    aspects: Vec<Vec<String>>,
    flat_of_global: Vec<usize>,
}

impl LayerTable {
    fn single(n_layers: usize) -> Self {
        Self {
            aspects: vec![(1..=n_layers).map(|s| format!("layer{s}")).collect()],
            flat_of_global: (0..n_layers).collect(),
        }
    }

    fn parse(src: Source) -> Result<Self> {
        let mut rows: Vec<(usize, usize, usize, String)> = Vec::new();
        for (line, f) in src.records() {
            if f.len() < 3 {
                return Err(src.parse_error(line, "expected `layerId aspectId label`"));
            }
            let g = src.id(line, "layer id", f[0], None)?;
            let a = src.id(line, "aspect id", f[1], None)?;
            rows.push((line, g, a, f[2..].join(" ")));
        }
        if rows.is_empty() {
            return Err(Error::domain(format!("{}: no layers declared", src.name)));
        }
        let n_layers = rows.len();
        let n_aspects = rows.iter().map(|r| r.2).max().unwrap_or(0) + 1;
        let mut seen = vec![false; n_layers];
        for &(line, g, _, _) in &rows {
            if g >= n_layers {
                return Err(src.domain_error(line, format!("layer id {} outside 1..={n_layers}", g + 1)));
            }
            if std::mem::replace(&mut seen[g], true) {
                return Err(src.domain_error(line, format!("layer id {} declared twice", g + 1)));
            }
        }
        let mut aspects: Vec<Vec<(usize, String)>> = vec![Vec::new(); n_aspects];
        for (_, g, a, label) in rows {
            aspects[a].push((g, label));
        }
        if let Some(empty) = aspects.iter().position(Vec::is_empty) {
            return Err(Error::domain(format!("{}: aspect {} has no layers", src.name, empty + 1)));
        }
        let mut flat_of_global = vec![0; n_layers];
        let mut flat = 0;
        for layers in &aspects {
            for (g, _) in layers {
                flat_of_global[*g] = flat;
                flat += 1;
            }
        }
        Ok(Self {
            aspects: aspects
                .into_iter()
                .map(|a| a.into_iter().map(|(_, label)| label).collect())
                .collect(),
            flat_of_global,
        })
    }
}

/// Parses an edge list and optional layer table.
///
/// Without a layer table all layers `1..=max layerId` form one aspect. With
/// `n_nodes` given, ids above it are rejected and unused ids are isolated nodes;
/// otherwise the node count is the largest id and every id must occur.
pub fn parse_multiplex(edges: Source, layers: Option<Source>, n_nodes: Option<usize>) -> Result<MultilayerNetwork> {
    let mut rows = Vec::new();
    for (line, f) in edges.records() {
        if f.len() != 4 {
            return Err(edges.parse_error(line, "expected `layerId nodeId nodeId weight`"));
        }
        let layer = edges.id(line, "layer id", f[0], None)?;
        let i = edges.id(line, "node id", f[1], n_nodes)?;
        let j = edges.id(line, "node id", f[2], n_nodes)?;
        let w: f64 = edges.field(line, "weight", f[3])?;
        if !w.is_finite() {
            return Err(edges.parse_error(line, format!("weight {w} is not finite")));
        }
        if i == j {
            return Err(edges.domain_error(line, format!("self-loop on node {}", i + 1)));
        }
        rows.push((line, layer, i, j, w));
    }
    let table = match layers {
        Some(src) => LayerTable::parse(src)?,
        None => {
            let max = rows.iter().map(|r| r.1 + 1).max().unwrap_or(1);
            LayerTable::single(max)
        }
    };
    let n = match n_nodes {
        Some(n) => n,
        None => {
            let n = rows.iter().map(|r| r.2.max(r.3) + 1).max().ok_or_else(|| {
                Error::domain(format!("{}: cannot infer the node count of an empty edge list", edges.name))
            })?;
            let mut used = vec![false; n];
            for r in &rows {
                used[r.2] = true;
                used[r.3] = true;
            }
            if let Some(gap) = used.iter().position(|u| !u) {
                return Err(Error::domain(format!(
                    "{}: node id {} never occurs; ids must be contiguous from 1",
                    edges.name,
                    gap + 1
                )));
            }
            n
        }
    };
    let n_layers = table.flat_of_global.len();
    if n.saturating_mul(n_layers) > MAX_CELLS {
        return Err(Error::domain(format!(
            "{}: {n} nodes in {n_layers} layers exceeds {MAX_CELLS} node copies",
            edges.name
        )));
    }
    let mut per_layer: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); n_layers];
    for (line, g, i, j, w) in rows {
        if g >= n_layers {
            return Err(edges.domain_error(line, format!("layer id {} outside 1..={n_layers}", g + 1)));
        }
        per_layer[table.flat_of_global[g]].push((i, j, w));
    }
    let layers = per_layer
        .into_iter()
        .map(|e| LayerAdjacency::from_edges(n, e))
        .collect::<Result<Vec<_>>>()?;
    MultilayerNetwork::new(n, table.aspects, layers, CouplingSet::new())
}

/// Couplings read from a coupling file, with any per-copy magnitudes it lists.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CouplingFile {
    pub set: CouplingSet,
    pub magnitudes: BTreeMap<(usize, usize, usize), f64>,
}

/// Parses a coupling file against the layer table that produced `net`.
pub fn parse_couplings(src: Source, net: &MultilayerNetwork, layers: Option<Source>) -> Result<CouplingFile> {
    let table = match layers {
        Some(l) => LayerTable::parse(l)?,
        None => LayerTable::single(net.n_layers()),
    };
    let mut out = CouplingFile::default();
    for (line, f) in src.records() {
        if f.len() != 5 && f.len() != 6 {
            return Err(src.parse_error(line, "expected `nodeId layerA aspectA layerB aspectB [magnitude]`"));
        }
        let node = src.id(line, "node id", f[0], Some(net.n_nodes()))?;
        let mut flat = [0usize; 2];
        for (k, (lf, af)) in [(f[1], f[2]), (f[3], f[4])].into_iter().enumerate() {
            let g = src.id(line, "layer id", lf, Some(table.flat_of_global.len()))?;
            let a = src.id(line, "aspect id", af, Some(net.n_aspects()))?;
            flat[k] = table.flat_of_global[g];
            if net.layer_ref(flat[k]).aspect != a {
                return Err(src.domain_error(line, format!("layer {} does not belong to aspect {}", g + 1, a + 1)));
            }
        }
        if flat[0] == flat[1] {
            return Err(src.domain_error(line, "a coupling needs two distinct layers"));
        }
        out.set.insert(node, flat[0], flat[1]);
        if let Some(raw) = f.get(5) {
            let e: f64 = src.field(line, "magnitude", raw)?;
            if !e.is_finite() || e < 0.0 {
                return Err(src.domain_error(line, format!("magnitude {e} must be >= 0")));
            }
            out.magnitudes.insert((node, flat[0].min(flat[1]), flat[0].max(flat[1])), e);
        }
    }
    Ok(out)
}

/// Loads a network from files; couplings are attached when a coupling file is given.
pub fn load_multiplex(
    edges: &Path,
    layers: Option<&Path>,
    couplings: Option<&Path>,
    n_nodes: Option<usize>,
) -> Result<(MultilayerNetwork, CouplingFile)> {
    let edge_text = read(edges)?;
    let edge_name = edges.display().to_string();
    let layer_text = layers.map(read).transpose()?;
    let layer_name = layers.map(|p| p.display().to_string()).unwrap_or_default();
    let layer_src = layer_text.as_deref().map(|t| Source::new(&layer_name, t));
    let net = parse_multiplex(Source::new(&edge_name, &edge_text), layer_src, n_nodes)?;
    match couplings {
        Some(path) => {
            let text = read(path)?;
            let name = path.display().to_string();
            let file = parse_couplings(Source::new(&name, &text), &net, layer_src)?;
            let net = net.with_couplings(file.set.clone())?;
            Ok((net, file))
        }
        None => Ok((net, CouplingFile::default())),
    }
}

fn global_layer_ids(net: &MultilayerNetwork) -> Vec<usize> {
    (1..=net.n_layers()).collect()
}

/// Normalized edge list: layers in flat order, `i < j`, one line per edge.
pub fn format_edges(net: &MultilayerNetwork) -> String {
    let mut out = String::from("# layerId nodeId nodeId weight\n");
    let ids = global_layer_ids(net);
    for (flat, layer) in net.layers().iter().enumerate() {
        for (i, j, w) in layer.edges() {
            writeln!(out, "{} {} {} {}", ids[flat], i + 1, j + 1, w).unwrap();
        }
    }
    out
}

pub fn format_layers(net: &MultilayerNetwork) -> String {
    let mut out = String::from("# layerId aspectId label\n");
    for flat in 0..net.n_layers() {
        let r = net.layer_ref(flat);
        writeln!(out, "{} {} {}", flat + 1, r.aspect + 1, net.layer_labels(r.aspect)[r.layer]).unwrap();
    }
    out
}

/// Coupling file for the present couplings, with magnitudes when `spec` is explicit.
pub fn format_couplings(net: &MultilayerNetwork, spec: Option<&CouplingSpec>) -> String {
    let mut out = String::from("# nodeId layerA aspectA layerB aspectB\n");
    for (node, a, b) in net.couplings().iter() {
        let (ra, rb) = (net.layer_ref(a), net.layer_ref(b));
        write!(out, "{} {} {} {} {}", node + 1, a + 1, ra.aspect + 1, b + 1, rb.aspect + 1).unwrap();
        if let Some(CouplingSpec {
            strategy: CouplingStrategy::Explicit(map),
            ..
        }) = spec
        {
            write!(out, " {}", map.get(&(node, a, b)).copied().unwrap_or(0.0)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Writes `<stem>.edges`, `<stem>.layers` and, if any couplings exist, `<stem>.couplings`.
pub fn save_multiplex(net: &MultilayerNetwork, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut files = vec![("edges", format_edges(net)), ("layers", format_layers(net))];
    if !net.couplings().is_empty() {
        files.push(("couplings", format_couplings(net, None)));
    }
    for (ext, text) in files {
        let path = dir.join(format!("{stem}.{ext}"));
        write_atomic(&path, &text)?;
        written.push(path);
    }
    Ok(written)
}

/// Parses an aspect grid: a grid layer table plus an edge list over its layer ids.
/// Couplings are `nodeId layerA layerB` over grid layer ids.
pub fn parse_aspect_grid(edges: Source, grid_layers: Source, couplings: Option<Source>) -> Result<AspectGrid> {
    let mut layers: Vec<(usize, String, Vec<usize>)> = Vec::new();
    for (line, f) in grid_layers.records() {
        if f.len() < 3 {
            return Err(grid_layers.parse_error(line, "expected `layerId label c_1 ... c_F`"));
        }
        let g = grid_layers.id(line, "layer id", f[0], None)?;
        let coords = f[2..]
            .iter()
            .map(|c| grid_layers.id(line, "grid coordinate", c, Some(MAX_ID)).map(|v| v + 1))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = layers.first() {
            if first.2.len() != coords.len() {
                return Err(grid_layers.domain_error(line, "ragged grid: coordinate count differs from the first layer"));
            }
        }
        layers.push((g, f[1].to_string(), coords));
    }
    if layers.is_empty() {
        return Err(Error::domain(format!("{}: no grid layers declared", grid_layers.name)));
    }
    let dims = layers[0].2.len();
    let shape: Vec<usize> = (0..dims).map(|d| layers.iter().map(|l| l.2[d]).max().unwrap_or(0)).collect();
    let n_ids = layers.len();
    let mut slot_of_id = vec![None; n_ids];
    for (k, (g, _, _)) in layers.iter().enumerate() {
        if *g >= n_ids || slot_of_id[*g].replace(k).is_some() {
            return Err(Error::domain(format!(
                "{}: grid layer ids must be 1..={n_ids}, each once",
                grid_layers.name
            )));
        }
    }
    let flat_net = parse_multiplex(edges, None, None)?;
    if flat_net.n_layers() > n_ids {
        return Err(Error::domain(format!(
            "{}: edges reference layer {} but only {n_ids} grid layers exist",
            edges.name,
            flat_net.n_layers()
        )));
    }
    let n = flat_net.n_nodes();
    let grid_layers_out = layers
        .iter()
        .map(|(g, label, coords)| GridLayer {
            coords: coords.clone(),
            label: label.clone(),
            adjacency: if *g < flat_net.n_layers() {
                flat_net.layer(*g).clone()
            } else {
                LayerAdjacency::empty(n)
            },
        })
        .collect();
    let mut grid_couplings = Vec::new();
    if let Some(src) = couplings {
        for (line, f) in src.records() {
            if f.len() != 3 {
                return Err(src.parse_error(line, "expected `nodeId layerA layerB`"));
            }
            let node = src.id(line, "node id", f[0], Some(n))?;
            let a = src.id(line, "layer id", f[1], Some(n_ids))?;
            let b = src.id(line, "layer id", f[2], Some(n_ids))?;
            let ca = layers[slot_of_id[a].expect("checked")].2.clone();
            let cb = layers[slot_of_id[b].expect("checked")].2.clone();
            grid_couplings.push(GridCoupling { node, a: ca, b: cb });
        }
    }
    Ok(AspectGrid {
        n_nodes: n,
        shape,
        layers: grid_layers_out,
        couplings: grid_couplings,
    })
}

/// `layerId c_1 ... c_F` for every flat layer.
pub fn format_location_map(map: &LocationMap) -> String {
    let mut out = String::from("# layerId");
    for d in 1..=map.shape.len() {
        write!(out, " c{d}").unwrap();
    }
    out.push('\n');
    for (flat, coords) in map.coords.iter().enumerate() {
        write!(out, "{}", flat + 1).unwrap();
        for c in coords {
            write!(out, " {c}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// `nodeId label` lines covering every node exactly once; labels returned 0-based.
pub fn parse_labels(src: Source, n_nodes: usize) -> Result<Vec<usize>> {
    let mut labels = vec![None; n_nodes];
    for (line, f) in src.records() {
        if f.len() != 2 {
            return Err(src.parse_error(line, "expected `nodeId label`"));
        }
        let node = src.id(line, "node id", f[0], Some(n_nodes))?;
        let label = src.id(line, "label", f[1], None)?;
        if labels[node].replace(label).is_some() {
            return Err(src.domain_error(line, format!("node {} labeled twice", node + 1)));
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| Error::domain(format!("{}: node {} has no label", src.name, i + 1))))
        .collect()
}

/// Dense whitespace-separated matrix, one row per line.
pub fn parse_matrix(src: Source) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, f) in src.records() {
        let row = f
            .iter()
            .map(|v| src.field::<f64>(line, "matrix entry", v))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(src.parse_error(line, format!("row has {} entries, expected {}", row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::domain(format!("{}: empty matrix", src.name)));
    }
    let cols = rows[0].len();
    Ok(DMatrix::from_row_iterator(rows.len(), cols, rows.into_iter().flatten()))
}

/// A scalar broadcast to every layer or one value per layer.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum LayerValues {
    One(f64),
    PerLayer(Vec<f64>),
}

impl LayerValues {
    pub fn expand(&self, n_layers: usize) -> Vec<f64> {
        match self {
            LayerValues::One(v) => vec![*v; n_layers],
            LayerValues::PerLayer(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    pub strategy: Option<String>,
    /// Closeness matrix file, relative to the parameter file.
    pub closeness: Option<PathBuf>,
}

/// Parameter file contents (TOML key-value pairs).
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterFile {
    pub gamma: Option<LayerValues>,
    pub lambda: Option<LayerValues>,
    pub gamma_plus: Option<LayerValues>,
    pub gamma_minus: Option<LayerValues>,
    pub omega: Option<f64>,
    pub normalization: Option<String>,
    #[serde(default)]
    pub coupling: CouplingSection,
}

impl ParameterFile {
    pub fn parse(src: Source) -> Result<Self> {
        toml::from_str(src.text).map_err(|e| {
            let line = e
                .span()
                .map(|s| src.text[..s.start].matches('\n').count() + 1)
                .unwrap_or(0);
            src.parse_error(line, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read(path)?;
        let mut file = Self::parse(Source::new(&path.display().to_string(), &text))?;
        if let (Some(dir), Some(c)) = (path.parent(), file.coupling.closeness.as_mut()) {
            if c.is_relative() {
                *c = dir.join(&*c);
            }
        }
        Ok(file)
    }

    /// Modularity parameters and coupling spec for `net`; explicit magnitudes come from a coupling file.
    pub fn resolve(
        &self,
        net: &MultilayerNetwork,
        magnitudes: &BTreeMap<(usize, usize, usize), f64>,
    ) -> Result<(ModularityParams, CouplingSpec)> {
        let l = net.n_layers();
        let mut params = ModularityParams::new(l);
        if let Some(g) = &self.gamma {
            params.gamma = g.expand(l);
        }
        if let Some(v) = &self.lambda {
            params.lambda = v.expand(l);
        }
        params.normalization = match self.normalization.as_deref() {
            None | Some("raw") => Normalization::Raw,
            Some("normalized") => Normalization::Normalized,
            Some(other) => return Err(Error::domain(format!("unknown normalization {other:?}"))),
        };
        match (&self.gamma_plus, &self.gamma_minus) {
            (Some(p), Some(m)) => {
                params.signed = Some(SignedResolution {
                    gamma_plus: p.expand(l),
                    gamma_minus: m.expand(l),
                })
            }
            (None, None) => {}
            _ => return Err(Error::domain("gamma_plus and gamma_minus must be given together")),
        }
        let omega = self.omega.unwrap_or(1.0);
        let strategy = self.coupling.strategy.as_deref().unwrap_or("uniform");
        let spec = coupling_spec(strategy, omega, self.coupling.closeness.as_deref(), magnitudes)?;
        params.validate(net)?;
        spec.validate(net)?;
        Ok((params, spec))
    }
}

/// Builds a coupling spec by strategy name.
pub fn coupling_spec(
    strategy: &str,
    omega: f64,
    closeness: Option<&Path>,
    magnitudes: &BTreeMap<(usize, usize, usize), f64>,
) -> Result<CouplingSpec> {
    match strategy {
        "uniform" => Ok(CouplingSpec::uniform(omega)),
        "temporal" => Ok(CouplingSpec::temporal(omega)),
        "closeness" => {
            let path = closeness.ok_or_else(|| Error::domain("closeness strategy needs a closeness matrix file"))?;
            let text = read(path)?;
            let m = parse_matrix(Source::new(&path.display().to_string(), &text))?;
            Ok(CouplingSpec {
                omega,
                strategy: CouplingStrategy::Closeness(Closeness::new(m)?),
            })
        }
        "explicit" => Ok(CouplingSpec::explicit(omega, magnitudes.clone())),
        other => Err(Error::domain(format!("unknown coupling strategy {other:?}"))),
    }
}

/// Dataset description: `key = value` lines, file paths relative to the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub nodes: usize,
    pub layers: usize,
    pub aspects: usize,
    pub edges: PathBuf,
    pub layer_file: Option<PathBuf>,
    pub couplings: Option<PathBuf>,
    pub truth: Option<PathBuf>,
}

impl DatasetManifest {
    pub fn parse(src: Source, base: &Path) -> Result<Self> {
        let mut kv: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, raw) in src.text.lines().enumerate() {
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| src.parse_error(i + 1, "expected `key = value`"))?;
            let k = k.trim();
            if kv.insert(k, (i + 1, v.trim())).is_some() {
                return Err(src.parse_error(i + 1, format!("key {k:?} given twice")));
            }
        }
        let known = ["name", "nodes", "layers", "aspects", "edges", "layer_file", "couplings", "truth"];
        if let Some((k, (line, _))) = kv.iter().find(|(k, _)| !known.contains(k)) {
            return Err(src.parse_error(*line, format!("unknown key {k:?}")));
        }
        let get = |k: &str| kv.get(k).map(|&(_, v)| v);
        let require = |k: &str| get(k).ok_or_else(|| Error::domain(format!("{}: missing key {k:?}", src.name)));
        let count = |k: &str| -> Result<usize> {
            let (line, v) = kv[k];
            src.field(line, k, v)
        };
        require("nodes")?;
        let path = |k: &str| get(k).map(|v| base.join(v));
        Ok(Self {
            name: require("name")?.to_string(),
            nodes: count("nodes")?,
            layers: if kv.contains_key("layers") { count("layers")? } else { 1 },
            aspects: if kv.contains_key("aspects") { count("aspects")? } else { 1 },
            edges: base.join(require("edges")?),
            layer_file: path("layer_file"),
            couplings: path("couplings"),
            truth: path("truth"),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(Source::new(&path.display().to_string(), &text), base)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub network: MultilayerNetwork,
    pub couplings: CouplingFile,
    pub truth: Option<Vec<usize>>,
}

/// Loads every file named by a manifest and checks the declared counts.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let (network, couplings) = load_multiplex(
        &manifest.edges,
        manifest.layer_file.as_deref(),
        manifest.couplings.as_deref(),
        Some(manifest.nodes),
    )?;
    if network.n_layers() != manifest.layers || network.n_aspects() != manifest.aspects {
        return Err(Error::domain(format!(
            "{}: declares {} layers in {} aspects, files hold {} in {}",
            manifest_path.display(),
            manifest.layers,
            manifest.aspects,
            network.n_layers(),
            network.n_aspects()
        )));
    }
    let truth = match &manifest.truth {
        Some(p) => {
            let text = read(p)?;
            Some(parse_labels(Source::new(&p.display().to_string(), &text), manifest.nodes)?)
        }
        None => None,
    };
    Ok(Dataset {
        manifest,
        network,
        couplings,
        truth,
    })
}

const CELLS_MARKER: &str = "%% cells";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ResultHeader {
    algorithm: String,
    q_total: f64,
    normalized: bool,
    chi: f64,
    n_nodes: usize,
    layers_per_aspect: Vec<usize>,
    n_communities: usize,
    q_trace: Vec<f64>,
    diagnostics: Vec<String>,
    #[serde(default)]
    parameters: BTreeMap<String, String>,
    #[serde(default)]
    divisions: Vec<Division>,
}

/// A detection result with the network shape and run parameters it was written with.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedResult {
    pub result: DetectionResult,
    pub n_nodes: usize,
    pub layers_per_aspect: Vec<usize>,
    pub parameters: BTreeMap<String, String>,
}

/// TOML metadata, then one `nodeId layerId aspectId communityId softLabel` row per cell.
///
/// Soft labels are written with 17 significant digits (`-` when absent); community
/// ids are 1-based.
pub fn format_result(
    result: &DetectionResult,
    net: &MultilayerNetwork,
    parameters: &BTreeMap<String, String>,
) -> Result<String> {
    if result.partition.len() != net.supra_size() {
        return Err(Error::domain("result does not label every cell of the network"));
    }
    let header = ResultHeader {
        algorithm: result.algorithm.clone(),
        q_total: result.q_total,
        normalized: result.normalized,
        chi: result.chi,
        n_nodes: net.n_nodes(),
        layers_per_aspect: net.layers_per_aspect(),
        n_communities: result.partition.n_communities(),
        q_trace: result.q_trace.clone(),
        diagnostics: result.diagnostics.clone(),
        parameters: parameters.clone(),
        divisions: result.divisions.clone(),
    };
    let mut out = toml::to_string(&header).map_err(|e| Error::domain(format!("cannot encode result metadata: {e}")))?;
    out.push_str(CELLS_MARKER);
    out.push_str("\n# nodeId layerId aspectId communityId softLabel\n");
    let n = net.n_nodes();
    for x in 0..net.supra_size() {
        let flat = x / n;
        let aspect = net.layer_ref(flat).aspect;
        write!(out, "{} {} {} {} ", x % n + 1, flat + 1, aspect + 1, result.partition.label(x) + 1).unwrap();
        match &result.soft_labels {
            Some(s) => writeln!(out, "{:.16e}", s[x]).unwrap(),
            None => out.push_str("-\n"),
        }
    }
    Ok(out)
}

pub fn parse_result(src: Source) -> Result<SavedResult> {
    let marker = src
        .text
        .split_inclusive('\n')
        .position(|l| l.trim_end() == CELLS_MARKER)
        .ok_or_else(|| Error::domain(format!("{}: no `{CELLS_MARKER}` section", src.name)))?;
    let head_len: usize = src.text.split_inclusive('\n').take(marker).map(str::len).sum();
    let body_start: usize = src.text.split_inclusive('\n').take(marker + 1).map(str::len).sum();
    let head = &src.text[..head_len];
    let body = &src.text[body_start..];
    let header: ResultHeader = toml::from_str(head).map_err(|e| {
        let line = e.span().map(|s| head[..s.start].matches('\n').count() + 1).unwrap_or(0);
        src.parse_error(line, e.message().to_string())
    })?;
    let n = header.n_nodes;
    if header.layers_per_aspect.contains(&0) || header.layers_per_aspect.iter().any(|&v| v > MAX_ID) {
        return Err(Error::domain(format!("{}: invalid layers_per_aspect", src.name)));
    }
    let offsets: Vec<usize> = header
        .layers_per_aspect
        .iter()
        .scan(0, |acc, &v| {
            let start = *acc;
            *acc += v;
            Some(start)
        })
        .collect();
    let n_layers: usize = header.layers_per_aspect.iter().sum();
    let size = n
        .checked_mul(n_layers)
        .filter(|&s| s > 0 && s <= MAX_CELLS)
        .ok_or_else(|| Error::domain(format!("{}: implausible network shape", src.name)))?;
    let mut labels = vec![None; size];
    let mut soft = vec![None; size];
    let body_src = Source::new(src.name, body);
    for (rel, f) in body_src.records() {
        let line = rel + marker + 1;
        if f.len() != 5 {
            return Err(src.parse_error(line, "expected `nodeId layerId aspectId communityId softLabel`"));
        }
        let node = src.id(line, "node id", f[0], Some(n))?;
        let flat = src.id(line, "layer id", f[1], Some(n_layers))?;
        let aspect = src.id(line, "aspect id", f[2], Some(offsets.len()))?;
        if flat < offsets[aspect] || flat >= offsets[aspect] + header.layers_per_aspect[aspect] {
            return Err(src.domain_error(line, format!("layer {} is not in aspect {}", flat + 1, aspect + 1)));
        }
        let community = src.id(line, "community id", f[3], Some(size))?;
        let x = flat * n + node;
        if labels[x].replace(community).is_some() {
            return Err(src.domain_error(line, "cell listed twice"));
        }
        soft[x] = match f[4] {
            "-" => None,
            v => Some(src.field::<f64>(line, "soft label", v)?),
        };
    }
    let labels = labels
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::domain(format!("{}: not every cell is listed", src.name)))?;
    let soft_labels = if soft.iter().all(Option::is_some) {
        Some(soft.into_iter().flatten().collect())
    } else if soft.iter().all(Option::is_none) {
        None
    } else {
        return Err(Error::domain(format!("{}: soft labels given for only some cells", src.name)));
    };
    Ok(SavedResult {
        result: DetectionResult {
            algorithm: header.algorithm,
            partition: Partition::new(labels),
            q_total: header.q_total,
            normalized: header.normalized,
            chi: header.chi,
            divisions: header.divisions,
            q_trace: header.q_trace,
            soft_labels,
            diagnostics: header.diagnostics,
        },
        n_nodes: n,
        layers_per_aspect: header.layers_per_aspect,
        parameters: header.parameters,
    })
}

pub fn save_result(
    path: &Path,
    result: &DetectionResult,
    net: &MultilayerNetwork,
    parameters: &BTreeMap<String, String>,
) -> Result<()> {
    write_atomic(path, &format_result(result, net, parameters)?)
}

pub fn load_result(path: &Path) -> Result<SavedResult> {
    let text = read(path)?;
    parse_result(Source::new(&path.display().to_string(), &text))
}
