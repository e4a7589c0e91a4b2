//! Multilayer modularity, its Hamiltonian form and the supra-modularity matrix.
//!
//! For a partition `g` of the node copies,
//!
//! ```text
//! Q = sum_{x,y} D_xy [g_x = g_y]
//! D_xy = lambda_l (A_ij - gamma_l k_i k_j / 2m_l)   x = (i, l), y = (j, l)
//!      = C~_i(l, r)                                 x = (i, l), y = (i, r), l != r
//!      = 0                                          otherwise
//! ```
//!
//! The sum runs over ordered pairs, so every coupling contributes twice and the
//! diagonal carries `-lambda gamma k_i^2 / 2m`. Signed layers split into a positive
//! and a negative sub-network, the latter entering with the opposite sign.

use log::warn;
use nalgebra::DMatrix;

use crate::coupling::CouplingSpec;
use crate::error::{Error, Result};
use crate::network::{EdgeSign, LayerAdjacency, LayerStats, MultilayerNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Unnormalized `Q`.
    #[default]
    Raw,
    /// `Q / mu` with `mu = sum_l 2m_l + sum |C~|`.
    Normalized,
}

/// Separate resolutions for the positive and negative sub-networks of each layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedResolution {
    pub gamma_plus: Vec<f64>,
    pub gamma_minus: Vec<f64>,
}

/// Per-layer parameters, indexed by flat layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ModularityParams {
    pub gamma: Vec<f64>,
    pub lambda: Vec<f64>,
    pub normalization: Normalization,
    pub signed: Option<SignedResolution>,
}

impl ModularityParams {
    /// `gamma = lambda = 1` on every layer, raw normalization, unsigned.
    pub fn new(n_layers: usize) -> Self {
        Self {
            gamma: vec![1.0; n_layers],
            lambda: vec![1.0; n_layers],
            normalization: Normalization::Raw,
            signed: None,
        }
    }

    pub fn with_gamma(mut self, gamma: Vec<f64>) -> Self {
        self.gamma = gamma;
        self
    }

    /// Signed mode with the same resolutions for both signs.
    pub fn signed(n_layers: usize, gamma_plus: f64, gamma_minus: f64) -> Self {
        Self {
            signed: Some(SignedResolution {
                gamma_plus: vec![gamma_plus; n_layers],
                gamma_minus: vec![gamma_minus; n_layers],
            }),
            ..Self::new(n_layers)
        }
    }

    pub fn validate(&self, net: &MultilayerNetwork) -> Result<()> {
        let l = net.n_layers();
        let check_len = |name: &str, v: &[f64]| {
            if v.len() != l {
                Err(Error::domain(format!("{name} has {} entries for {l} layers", v.len())))
            } else {
                Ok(())
            }
        };
        check_len("gamma", &self.gamma)?;
        check_len("lambda", &self.lambda)?;
        if let Some(bad) = self.gamma.iter().find(|g| !g.is_finite() || **g <= 0.0) {
            return Err(Error::domain(format!("resolution {bad} must be > 0")));
        }
        if let Some(bad) = self.lambda.iter().find(|g| !g.is_finite() || **g < 0.0) {
            return Err(Error::domain(format!("layer weight {bad} must be >= 0")));
        }
        match &self.signed {
            Some(s) => {
                check_len("gamma_plus", &s.gamma_plus)?;
                check_len("gamma_minus", &s.gamma_minus)?;
                if let Some(bad) = s
                    .gamma_plus
                    .iter()
                    .chain(&s.gamma_minus)
                    .find(|g| !g.is_finite() || **g <= 0.0)
                {
                    return Err(Error::domain(format!("signed resolution {bad} must be > 0")));
                }
            }
            None if net.has_negative_weights() => {
                return Err(Error::domain(
                    "network has negative edge weights; signed parameters are required",
                ))
            }
            None => {}
        }
        Ok(())
    }
}

/// A community label for every node copy, indexed by 0-based supra index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<usize>,
}

impl Partition {
    pub fn new(labels: Vec<usize>) -> Self {
        Self { labels }
    }

    pub fn single(n: usize) -> Self {
        Self { labels: vec![0; n] }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, x: usize) -> usize {
        self.labels[x]
    }

    /// Relabels communities `0..k` in order of first appearance.
    pub fn canonical(&self) -> Partition {
        let mut map = std::collections::HashMap::new();
        let labels = self
            .labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Partition { labels }
    }

    pub fn n_communities(&self) -> usize {
        let mut seen: Vec<usize> = self.labels.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    /// Members of each community of the canonical labelling.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let c = self.canonical();
        let mut out = vec![Vec::new(); c.n_communities()];
        for (x, &l) in c.labels.iter().enumerate() {
            out[l].push(x);
        }
        out
    }
}

/// Newman-Girvan null model `k_i k_j / 2m`.
pub fn null_model_ng(stats: &LayerStats, i: usize, j: usize) -> Result<f64> {
    if stats.total_weight <= 0.0 {
        return Err(Error::domain("null model undefined on a layer without edges"));
    }
    let n = stats.strength.len();
    if i >= n || j >= n {
        return Err(Error::domain(format!("node pair ({}, {}) outside 1..={n}", i + 1, j + 1)));
    }
    Ok(stats.strength[i] * stats.strength[j] / stats.two_m())
}

/// One sign-part of a layer: `sign * (A_sel - gamma k k / 2m)`.
#[derive(Debug, Clone)]
struct LayerPart {
    sign: f64,
    select: EdgeSign,
    gamma: f64,
    stats: LayerStats,
}

impl LayerPart {
    fn penalty(&self, i: usize, j: usize) -> f64 {
        let two_m = self.stats.two_m();
        if two_m > 0.0 {
            self.gamma * self.stats.strength[i] * self.stats.strength[j] / two_m
        } else {
            0.0
        }
    }
}

/// How one layer contributes to the within-layer modularity.
#[derive(Debug, Clone)]
pub(crate) struct LayerModel<'a> {
    adjacency: &'a LayerAdjacency,
    lambda: f64,
    parts: Vec<LayerPart>,
}

impl<'a> LayerModel<'a> {
    pub(crate) fn unsigned(adjacency: &'a LayerAdjacency, gamma: f64, lambda: f64) -> Self {
        Self {
            adjacency,
            lambda,
            parts: vec![LayerPart {
                sign: 1.0,
                select: EdgeSign::All,
                gamma,
                stats: LayerStats::of(adjacency, EdgeSign::All),
            }],
        }
    }

    pub(crate) fn signed(adjacency: &'a LayerAdjacency, gamma_plus: f64, gamma_minus: f64, lambda: f64) -> Self {
        Self {
            adjacency,
            lambda,
            parts: vec![
                LayerPart {
                    sign: 1.0,
                    select: EdgeSign::Positive,
                    gamma: gamma_plus,
                    stats: LayerStats::of(adjacency, EdgeSign::Positive),
                },
                LayerPart {
                    sign: -1.0,
                    select: EdgeSign::Negative,
                    gamma: gamma_minus,
                    stats: LayerStats::of(adjacency, EdgeSign::Negative),
                },
            ],
        }
    }

    pub(crate) fn for_layer(net: &'a MultilayerNetwork, params: &ModularityParams, flat: usize) -> Self {
        let adjacency = net.layer(flat);
        match &params.signed {
            Some(s) => Self::signed(adjacency, s.gamma_plus[flat], s.gamma_minus[flat], params.lambda[flat]),
            None => Self::unsigned(adjacency, params.gamma[flat], params.lambda[flat]),
        }
    }

    /// Names of the sign-parts that have no edges.
    fn empty_parts(&self) -> Vec<&'static str> {
        self.parts
            .iter()
            .filter(|p| p.stats.total_weight <= 0.0)
            .map(|p| match p.select {
                EdgeSign::All => "all edges",
                EdgeSign::Positive => "positive edges",
                EdgeSign::Negative => "negative edges",
            })
            .collect()
    }

    /// Dense `N x N` within-layer block.
    pub(crate) fn block(&self) -> DMatrix<f64> {
        let n = self.adjacency.n_nodes();
        let mut block = DMatrix::zeros(n, n);
        for part in &self.parts {
            let two_m = part.stats.two_m();
            if two_m > 0.0 {
                let k = &part.stats.strength;
                let scale = part.sign * part.gamma / two_m;
                for j in 0..n {
                    for i in 0..n {
                        block[(i, j)] -= scale * k[i] * k[j];
                    }
                }
            }
            for i in 0..n {
                for &(j, w) in self.adjacency.row(i) {
                    block[(i, j)] += part.sign * part.select.select(w);
                }
            }
        }
        block * self.lambda
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        let a = self.adjacency.weight(i, j);
        self.lambda
            * self
                .parts
                .iter()
                .map(|p| p.sign * (p.select.select(a) - p.penalty(i, j)))
                .sum::<f64>()
    }

    /// `sum_{i,j} entry(i, j)`, i.e. `lambda sum_parts sign (1 - gamma) 2m`.
    fn total(&self) -> f64 {
        self.lambda
            * self
                .parts
                .iter()
                .filter(|p| p.stats.total_weight > 0.0)
                .map(|p| p.sign * (1.0 - p.gamma) * p.stats.two_m())
                .sum::<f64>()
    }

    /// Within-layer contribution of a labelling of this layer's nodes.
    fn score(&self, labels: &[usize]) -> f64 {
        let n = labels.len();
        let mut total = 0.0;
        for part in &self.parts {
            let mut inside = 0.0;
            for i in 0..n {
                for &(j, w) in self.adjacency.row(i) {
                    if labels[i] == labels[j] {
                        inside += part.select.select(w);
                    }
                }
            }
            let two_m = part.stats.two_m();
            let mut penalty = 0.0;
            if two_m > 0.0 {
                let mut sums: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
                for (&g, &k) in labels.iter().zip(&part.stats.strength).take(n) {
                    *sums.entry(g).or_insert(0.0) += k;
                }
                penalty = part.gamma * sums.values().map(|s| s * s).sum::<f64>() / two_m;
            }
            total += part.sign * (inside - penalty);
        }
        self.lambda * total
    }

    fn magnitude(&self) -> f64 {
        self.adjacency.edges().map(|(_, _, w)| 2.0 * w.abs()).sum()
    }
}

fn layer_models<'a>(net: &'a MultilayerNetwork, params: &ModularityParams) -> Vec<LayerModel<'a>> {
    (0..net.n_layers()).map(|l| LayerModel::for_layer(net, params, l)).collect()
}

fn empty_layer_diagnostics(net: &MultilayerNetwork, models: &[LayerModel<'_>]) -> Vec<String> {
    let mut out = Vec::new();
    for (flat, model) in models.iter().enumerate() {
        for part in model.empty_parts() {
            let r = net.layer_ref(flat);
            let msg = format!(
                "layer {} of aspect {} has no {part}; its null-model term is 0",
                r.layer + 1,
                r.aspect + 1
            );
            warn!("{msg}");
            out.push(msg);
        }
    }
    out
}

/// Dense supra-modularity matrix `D` with its entry sum `chi`.
#[derive(Debug, Clone)]
pub struct SupraModularityMatrix {
    pub matrix: DMatrix<f64>,
    pub chi: f64,
    pub n_nodes: usize,
    pub diagnostics: Vec<String>,
}

impl SupraModularityMatrix {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// `sum_{x,y} D_xy [g_x = g_y]`, evaluated on the matrix.
    pub fn quadratic_score(&self, partition: &Partition) -> f64 {
        let n = self.size();
        let labels = partition.labels();
        let mut q = 0.0;
        for y in 0..n {
            for x in 0..n {
                if labels[x] == labels[y] {
                    q += self.matrix[(x, y)];
                }
            }
        }
        q
    }
}

/// `chi = sum_l lambda_l (1 - gamma_l) 2m_l + sum_ordered C~`.
pub fn chi(net: &MultilayerNetwork, spec: &CouplingSpec, params: &ModularityParams) -> Result<f64> {
    params.validate(net)?;
    spec.validate(net)?;
    let within: f64 = layer_models(net, params).iter().map(LayerModel::total).sum();
    Ok(within + coupling_total(net, spec)?)
}

fn coupling_total(net: &MultilayerNetwork, spec: &CouplingSpec) -> Result<f64> {
    let mut total = 0.0;
    let couplings = net.couplings();
    for node in 0..net.n_nodes() {
        for a in 0..net.n_layers() {
            for b in a + 1..net.n_layers() {
                total += 2.0 * spec.strength(net, couplings.contains(node, a, b), node, a, b)?;
            }
        }
    }
    Ok(total)
}

pub fn build_modularity_matrix(
    net: &MultilayerNetwork,
    spec: &CouplingSpec,
    params: &ModularityParams,
) -> Result<SupraModularityMatrix> {
    params.validate(net)?;
    spec.validate(net)?;
    let n = net.n_nodes();
    let size = net.supra_size();
    let models = layer_models(net, params);
    let diagnostics = empty_layer_diagnostics(net, &models);
    let mut matrix = DMatrix::zeros(size, size);
    for (flat, model) in models.iter().enumerate() {
        let base = flat * n;
        matrix.view_mut((base, base), (n, n)).copy_from(&model.block());
    }
    let couplings = net.couplings();
    for node in 0..n {
        for a in 0..net.n_layers() {
            for b in a + 1..net.n_layers() {
                let c = spec.strength(net, couplings.contains(node, a, b), node, a, b)?;
                matrix[(a * n + node, b * n + node)] = c;
                matrix[(b * n + node, a * n + node)] = c;
            }
        }
    }
    let chi = models.iter().map(LayerModel::total).sum::<f64>() + coupling_total(net, spec)?;
    Ok(SupraModularityMatrix {
        matrix,
        chi,
        n_nodes: n,
        diagnostics,
    })
}

/// The parts of a modularity evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularityScore {
    pub within: f64,
    pub coupling: f64,
    /// `sum_l 2m_l + sum_ordered |C~|`, with `2m_l` taken over absolute weights.
    pub mu: f64,
}

impl ModularityScore {
    pub fn raw(&self) -> f64 {
        self.within + self.coupling
    }

    pub fn value(&self, normalization: Normalization) -> f64 {
        match normalization {
            Normalization::Raw => self.raw(),
            Normalization::Normalized if self.mu > 0.0 => self.raw() / self.mu,
            Normalization::Normalized => 0.0,
        }
    }
}

fn check_partition(net: &MultilayerNetwork, partition: &Partition) -> Result<()> {
    if partition.len() != net.supra_size() {
        return Err(Error::domain(format!(
            "partition labels {} cells but the network has {}",
            partition.len(),
            net.supra_size()
        )));
    }
    Ok(())
}

/// Evaluates modularity directly from edges, strengths and couplings (no matrix).
pub fn score(
    net: &MultilayerNetwork,
    spec: &CouplingSpec,
    params: &ModularityParams,
    partition: &Partition,
) -> Result<ModularityScore> {
    params.validate(net)?;
    spec.validate(net)?;
    check_partition(net, partition)?;
    let n = net.n_nodes();
    let labels = partition.labels();
    let models = layer_models(net, params);
    let within = models
        .iter()
        .enumerate()
        .map(|(flat, model)| model.score(&labels[flat * n..(flat + 1) * n]))
        .sum();
    let mut coupling = 0.0;
    let mut coupling_mass = 0.0;
    let couplings = net.couplings();
    for node in 0..n {
        for a in 0..net.n_layers() {
            for b in a + 1..net.n_layers() {
                let c = spec.strength(net, couplings.contains(node, a, b), node, a, b)?;
                coupling_mass += 2.0 * c.abs();
                if labels[a * n + node] == labels[b * n + node] {
                    coupling += 2.0 * c;
                }
            }
        }
    }
    let mu = models.iter().map(LayerModel::magnitude).sum::<f64>() + coupling_mass;
    Ok(ModularityScore { within, coupling, mu })
}

/// Multilayer modularity of `partition`, raw or normalized per `params.normalization`.
pub fn modularity(
    net: &MultilayerNetwork,
    spec: &CouplingSpec,
    params: &ModularityParams,
    partition: &Partition,
) -> Result<f64> {
    Ok(score(net, spec, params, partition)?.value(params.normalization))
}

/// Modularity of a signed network; requires `params.signed`.
pub fn modularity_signed(
    net: &MultilayerNetwork,
    spec: &CouplingSpec,
    params: &ModularityParams,
    partition: &Partition,
) -> Result<f64> {
    if params.signed.is_none() {
        return Err(Error::domain("signed modularity needs gamma_plus and gamma_minus"));
    }
    modularity(net, spec, params, partition)
}

/// Potts-style energy
/// `H = -sum_{ijl} lambda_l (A_ij - gamma_l p_ij)(2 delta - 1) - sum_{i,l!=r} C~ (2 delta - 1)`,
/// evaluated term by term. Satisfies `-H/2 = Q_raw - chi/2`.
pub fn hamiltonian(
    net: &MultilayerNetwork,
    spec: &CouplingSpec,
    params: &ModularityParams,
    partition: &Partition,
) -> Result<f64> {
    params.validate(net)?;
    spec.validate(net)?;
    check_partition(net, partition)?;
    let n = net.n_nodes();
    let labels = partition.labels();
    let spin = |x: usize, y: usize| if labels[x] == labels[y] { 1.0 } else { -1.0 };
    let mut h = 0.0;
    for (flat, model) in layer_models(net, params).iter().enumerate() {
        let base = flat * n;
        for i in 0..n {
            for j in 0..n {
                h -= model.entry(i, j) * spin(base + i, base + j);
            }
        }
    }
    let couplings = net.couplings();
    for node in 0..n {
        for a in 0..net.n_layers() {
            for b in 0..net.n_layers() {
                if a != b {
                    let c = spec.strength(net, couplings.contains(node, a, b), node, a, b)?;
                    h -= c * spin(a * n + node, b * n + node);
                }
            }
        }
    }
    Ok(h)
}
