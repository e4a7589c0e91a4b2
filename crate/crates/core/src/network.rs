//! Aspect-layer multilayer networks.
//!
//! Every layer shares the same `N` nodes. Layers are grouped by aspect; aspect `v`
//! holds `V_v` layers. Internally a layer is addressed by its *flat* index, which
//! enumerates aspect 1's layers first, then aspect 2's, and so on. A supra vertex
//! (node copy) is addressed by `flat_layer * N + node`, all 0-based. The 1-based
//! mapping `x = i + (s-1)N + sum_{v'<v} V_{v'} N` is available through
//! [`MultilayerNetwork::node_index`] and its inverse.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coupling::CouplingSpec;
use crate::error::{Error, Result};

/// A layer located by its 0-based position inside an aspect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LayerRef {
    pub aspect: usize,
    pub layer: usize,
}

/// A node copy `(i, s, v)`, all components 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub node: usize,
    pub layer: usize,
    pub aspect: usize,
}

/// Symmetric weighted adjacency of one layer, stored as sorted neighbor rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LayerAdjacency {
    rows: Vec<Vec<(usize, f64)>>,
}

impl LayerAdjacency {
    pub fn empty(n_nodes: usize) -> Self {
        Self {
            rows: vec![Vec::new(); n_nodes],
        }
    }

    /// Builds a layer from undirected edges. Duplicates are summed, entries that sum
    /// to zero are dropped.
    pub fn from_edges(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, w) in edges {
            if i >= n_nodes || j >= n_nodes {
                return Err(Error::domain(format!(
                    "edge ({}, {}) references a node outside 1..={n_nodes}",
                    i + 1,
                    j + 1
                )));
            }
            if i == j {
                return Err(Error::domain(format!("self-loop on node {}", i + 1)));
            }
            if !w.is_finite() {
                return Err(Error::domain(format!("non-finite weight on edge ({}, {})", i + 1, j + 1)));
            }
            *acc.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
        }
        let mut rows = vec![Vec::new(); n_nodes];
        for ((i, j), w) in acc {
            if w != 0.0 {
                rows[i].push((j, w));
                rows[j].push((i, w));
            }
        }
        for row in &mut rows {
            row.sort_by_key(|&(j, _)| j);
        }
        Ok(Self { rows })
    }

    pub fn n_nodes(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .map(|pos| self.rows[i][pos].1)
            .unwrap_or(0.0)
    }

    /// Undirected edges `(i, j, w)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().filter(move |&&(j, _)| j > i).map(move |&(j, w)| (i, j, w)))
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_negative(&self) -> bool {
        self.rows.iter().flatten().any(|&(_, w)| w < 0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n_nodes();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m[(i, j)] = w;
            }
        }
        m
    }
}

/// Which part of a signed layer to measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSign {
    All,
    /// Only edges with positive weight.
    Positive,
    /// Only edges with negative weight, measured by magnitude.
    Negative,
}

impl EdgeSign {
    pub(crate) fn select(self, w: f64) -> f64 {
        match self {
            EdgeSign::All => w,
            EdgeSign::Positive => w.max(0.0),
            EdgeSign::Negative => (-w).max(0.0),
        }
    }
}

/// Node strengths `k_i` and total edge weight `m` of one layer, so that `sum k_i = 2m`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStats {
    pub strength: Vec<f64>,
    pub total_weight: f64,
}

impl LayerStats {
    pub fn of(layer: &LayerAdjacency, sign: EdgeSign) -> Self {
        let strength: Vec<f64> = (0..layer.n_nodes())
            .map(|i| layer.row(i).iter().map(|&(_, w)| sign.select(w)).sum())
            .collect();
        let total_weight = strength.iter().sum::<f64>() / 2.0;
        Self {
            strength,
            total_weight,
        }
    }

    pub fn two_m(&self) -> f64 {
        2.0 * self.total_weight
    }
}

/// Presence records `C_isr^{vw}` over node copies. Stored once per unordered pair of
/// flat layers; lookups are symmetric.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CouplingSet {
    present: BTreeSet<(usize, usize, usize)>,
}

impl CouplingSet {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(node: usize, a: usize, b: usize) -> (usize, usize, usize) {
        (node, a.min(b), a.max(b))
    }

    pub fn insert(&mut self, node: usize, a: usize, b: usize) -> bool {
        self.present.insert(Self::key(node, a, b))
    }

    pub fn contains(&self, node: usize, a: usize, b: usize) -> bool {
        self.present.contains(&Self::key(node, a, b))
    }

    /// Number of unordered node-copy pairs.
    pub fn len(&self) -> usize {
        self.present.len()
    }

    pub fn is_empty(&self) -> bool {
        self.present.is_empty()
    }

    /// `(node, a, b)` with `a < b` flat layer indices.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.present.iter().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultilayerNetwork {
    n_nodes: usize,
    /// Layer labels per aspect.
    aspects: Vec<Vec<String>>,
    /// First flat index of each aspect.
    offsets: Vec<usize>,
    layers: Vec<LayerAdjacency>,
    couplings: CouplingSet,
}

impl MultilayerNetwork {
    /// Assembles a network from per-aspect layer labels and flat-ordered layers.
    pub fn new(
        n_nodes: usize,
        aspects: Vec<Vec<String>>,
        layers: Vec<LayerAdjacency>,
        couplings: CouplingSet,
    ) -> Result<Self> {
        if aspects.is_empty() || aspects.iter().any(Vec::is_empty) {
            return Err(Error::domain("every aspect must hold at least one layer"));
        }
        let mut offsets = Vec::with_capacity(aspects.len());
        let mut total = 0;
        for a in &aspects {
            offsets.push(total);
            total += a.len();
        }
        if layers.len() != total {
            return Err(Error::domain(format!(
                "{} layers supplied for {total} declared layer slots",
                layers.len()
            )));
        }
        if let Some(bad) = layers.iter().position(|l| l.n_nodes() != n_nodes) {
            return Err(Error::domain(format!(
                "layer {} has {} nodes, expected {n_nodes}",
                bad + 1,
                layers[bad].n_nodes()
            )));
        }
        for (node, a, b) in couplings.iter() {
            if node >= n_nodes || b >= total || a == b {
                return Err(Error::domain(format!(
                    "invalid coupling record (node {}, layers {} and {})",
                    node + 1,
                    a + 1,
                    b + 1
                )));
            }
        }
        Ok(Self {
            n_nodes,
            aspects,
            offsets,
            layers,
            couplings,
        })
    }

    /// Single-aspect network with unlabeled layers.
    pub fn single_aspect(n_nodes: usize, layers: Vec<LayerAdjacency>, couplings: CouplingSet) -> Result<Self> {
        let labels = (1..=layers.len()).map(|s| format!("layer{s}")).collect();
        Self::new(n_nodes, vec![labels], layers, couplings)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_aspects(&self) -> usize {
        self.aspects.len()
    }

    /// `V_v` for each aspect.
    pub fn layers_per_aspect(&self) -> Vec<usize> {
        self.aspects.iter().map(Vec::len).collect()
    }

    pub fn layer_labels(&self, aspect: usize) -> &[String] {
        &self.aspects[aspect]
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// Number of supra vertices, `N * sum_v V_v`.
    pub fn supra_size(&self) -> usize {
        self.n_nodes * self.layers.len()
    }

    pub fn layer(&self, flat: usize) -> &LayerAdjacency {
        &self.layers[flat]
    }

    pub fn layers(&self) -> &[LayerAdjacency] {
        &self.layers
    }

    pub fn couplings(&self) -> &CouplingSet {
        &self.couplings
    }

    pub fn with_couplings(mut self, couplings: CouplingSet) -> Result<Self> {
        let n = self.n_nodes;
        let l = self.n_layers();
        if let Some((node, a, b)) = couplings.iter().find(|&(node, a, b)| node >= n || b >= l || a == b) {
            return Err(Error::domain(format!(
                "invalid coupling record (node {}, layers {} and {})",
                node + 1,
                a + 1,
                b + 1
            )));
        }
        self.couplings = couplings;
        Ok(self)
    }

    pub fn flat_layer(&self, layer: LayerRef) -> Result<usize> {
        match self.aspects.get(layer.aspect) {
            Some(a) if layer.layer < a.len() => Ok(self.offsets[layer.aspect] + layer.layer),
            _ => Err(Error::domain(format!(
                "layer {} of aspect {} does not exist",
                layer.layer + 1,
                layer.aspect + 1
            ))),
        }
    }

    pub fn layer_ref(&self, flat: usize) -> LayerRef {
        let aspect = match self.offsets.binary_search(&flat) {
            Ok(a) => a,
            Err(a) => a - 1,
        };
        LayerRef {
            aspect,
            layer: flat - self.offsets[aspect],
        }
    }

    /// 0-based supra vertex of a node copy.
    pub fn supra_index(&self, cell: Cell) -> Result<usize> {
        if cell.node >= self.n_nodes {
            return Err(Error::domain(format!("node {} outside 1..={}", cell.node + 1, self.n_nodes)));
        }
        let flat = self.flat_layer(LayerRef {
            aspect: cell.aspect,
            layer: cell.layer,
        })?;
        Ok(flat * self.n_nodes + cell.node)
    }

    pub fn cell(&self, supra: usize) -> Result<Cell> {
        if supra >= self.supra_size() {
            return Err(Error::domain(format!("supra index {supra} outside 0..{}", self.supra_size())));
        }
        let r = self.layer_ref(supra / self.n_nodes);
        Ok(Cell {
            node: supra % self.n_nodes,
            layer: r.layer,
            aspect: r.aspect,
        })
    }

    /// 1-based mapping of node `i` in layer `s` of aspect `v` to its supra index.
    pub fn node_index(&self, i: usize, s: usize, v: usize) -> Result<usize> {
        if i == 0 || s == 0 || v == 0 {
            return Err(Error::domain("node, layer and aspect ids are 1-based"));
        }
        self.supra_index(Cell {
            node: i - 1,
            layer: s - 1,
            aspect: v - 1,
        })
        .map(|x| x + 1)
    }

    /// Inverse of [`node_index`](Self::node_index): 1-based `x` to 1-based `(i, s, v)`.
    pub fn node_index_inverse(&self, x: usize) -> Result<(usize, usize, usize)> {
        if x == 0 {
            return Err(Error::domain("supra indices are 1-based"));
        }
        let c = self.cell(x - 1)?;
        Ok((c.node + 1, c.layer + 1, c.aspect + 1))
    }

    pub fn layer_stats(&self, flat: usize, sign: EdgeSign) -> LayerStats {
        LayerStats::of(&self.layers[flat], sign)
    }

    pub fn has_negative_weights(&self) -> bool {
        self.layers.iter().any(LayerAdjacency::has_negative)
    }
}

/// Builds the supra-adjacency: diagonal blocks hold each layer's adjacency,
/// off-diagonal blocks are diagonal and carry the coupling magnitude `e` for every
/// present coupling.
pub fn build_supra_adjacency(net: &MultilayerNetwork, spec: &CouplingSpec) -> Result<DMatrix<f64>> {
    spec.validate(net)?;
    let n = net.n_nodes();
    let size = net.supra_size();
    let mut m = DMatrix::zeros(size, size);
    for (flat, layer) in net.layers().iter().enumerate() {
        let base = flat * n;
        for i in 0..n {
            for &(j, w) in layer.row(i) {
                m[(base + i, base + j)] = w;
            }
        }
    }
    for (node, a, b) in net.couplings().iter() {
        let e = spec.magnitude(net, node, a, b)?;
        m[(a * n + node, b * n + node)] = e;
        m[(b * n + node, a * n + node)] = e;
    }
    Ok(m)
}

/// Draws each node-copy pair independently with probability `rho`.
///
/// Uses ChaCha8 seeded from the 64-bit `seed`; candidates are visited node by node,
/// then over layer pairs `a < b` in flat order, one uniform draw each.
pub fn generate_couplings(net: &MultilayerNetwork, rho: f64, seed: u64) -> Result<CouplingSet> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::domain(format!("coupling density {rho} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = CouplingSet::new();
    let l = net.n_layers();
    for node in 0..net.n_nodes() {
        for a in 0..l {
            for b in a + 1..l {
                let u: f64 = rng.gen();
                if u < rho {
                    set.insert(node, a, b);
                }
            }
        }
    }
    Ok(set)
}

/// Links every node with all of its copies.
pub fn full_couplings(net: &MultilayerNetwork) -> CouplingSet {
    let mut set = CouplingSet::new();
    let l = net.n_layers();
    for node in 0..net.n_nodes() {
        for a in 0..l {
            for b in a + 1..l {
                set.insert(node, a, b);
            }
        }
    }
    set
}

/// A layer of an aspect-aspect grid, located by 1-based coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayer {
    pub coords: Vec<usize>,
    pub label: String,
    pub adjacency: LayerAdjacency,
}

/// Coupling between the copies of `node` in two grid layers.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCoupling {
    pub node: usize,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

/// Layers arranged on an `F`-dimensional grid (the aspect-aspect representation).
#[derive(Debug, Clone, PartialEq)]
pub struct AspectGrid {
    pub n_nodes: usize,
    pub shape: Vec<usize>,
    pub layers: Vec<GridLayer>,
    pub couplings: Vec<GridCoupling>,
}

/// Grid coordinates of each flat layer after flattening.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationMap {
    pub shape: Vec<usize>,
    pub coords: Vec<Vec<usize>>,
}

impl LocationMap {
    /// Row-major position of 1-based grid coordinates.
    pub fn flat_index(&self, coords: &[usize]) -> Result<usize> {
        row_major(&self.shape, coords)
    }
}

fn row_major(shape: &[usize], coords: &[usize]) -> Result<usize> {
    if coords.len() != shape.len() {
        return Err(Error::domain(format!(
            "coordinates {coords:?} do not match a {}-dimensional grid",
            shape.len()
        )));
    }
    let mut idx = 0;
    for (&c, &extent) in coords.iter().zip(shape) {
        if c == 0 || c > extent {
            return Err(Error::domain(format!("coordinates {coords:?} outside grid shape {shape:?}")));
        }
        idx = idx * extent + (c - 1);
    }
    Ok(idx)
}

/// Flattens an aspect grid into a single aspect, enumerating layers in row-major order.
pub fn flatten_aspect_grid(grid: &AspectGrid) -> Result<(MultilayerNetwork, LocationMap)> {
    if grid.shape.is_empty() || grid.shape.contains(&0) {
        return Err(Error::domain(format!("degenerate grid shape {:?}", grid.shape)));
    }
    let total = grid
        .shape
        .iter()
        .try_fold(1usize, |acc, &e| acc.checked_mul(e))
        .filter(|&t| t <= grid.layers.len())
        .ok_or_else(|| Error::domain(format!("ragged grid: shape {:?} has more cells than layers", grid.shape)))?;
    let mut slots: Vec<Option<&GridLayer>> = vec![None; total];
    for layer in &grid.layers {
        let idx = row_major(&grid.shape, &layer.coords)?;
        if slots[idx].replace(layer).is_some() {
            return Err(Error::domain(format!("grid cell {:?} given twice", layer.coords)));
        }
    }
    if let Some(missing) = slots.iter().position(Option::is_none) {
        return Err(Error::domain(format!(
            "ragged grid: cell {} of shape {:?} has no layer",
            missing + 1,
            grid.shape
        )));
    }
    let slots: Vec<&GridLayer> = slots.into_iter().flatten().collect();
    let labels = slots.iter().map(|l| l.label.clone()).collect();
    let layers = slots.iter().map(|l| l.adjacency.clone()).collect();
    let coords = slots.iter().map(|l| l.coords.clone()).collect();
    let mut couplings = CouplingSet::new();
    for c in &grid.couplings {
        let a = row_major(&grid.shape, &c.a)?;
        let b = row_major(&grid.shape, &c.b)?;
        if a == b || c.node >= grid.n_nodes {
            return Err(Error::domain(format!(
                "invalid grid coupling of node {} between {:?} and {:?}",
                c.node + 1,
                c.a,
                c.b
            )));
        }
        couplings.insert(c.node, a, b);
    }
    let net = MultilayerNetwork::new(grid.n_nodes, vec![labels], layers, couplings)?;
    Ok((
        net,
        LocationMap {
            shape: grid.shape.clone(),
            coords,
        },
    ))
}
