//! Comparison algorithms, all scored with the same multilayer modularity.
//!
//! * [`mlouv`]: generalized Louvain on the supra-modularity matrix, followed by a
//!   single-vertex relocation sweep.
//! * [`smean_spec`]: spectral bisection of the mean layer, labels broadcast to every copy.
//! * [`sfull_spec`]: spectral bisection of each layer on its own, with disjoint label
//!   spaces per layer.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::coupling::CouplingSpec;
use crate::error::Result;
use crate::modularity::{self, build_modularity_matrix, LayerModel, ModularityParams, Normalization, Partition};
use crate::mspec::{divide, DetectionResult, MspecOptions};
use crate::network::{LayerAdjacency, MultilayerNetwork};

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub seed: u64,
    /// Local-moving sweeps per aggregation level.
    pub max_passes: usize,
    pub kl_swap: bool,
    /// Independent shuffled runs; the best one is reported.
    pub restarts: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_passes: 100,
            kl_swap: true,
            restarts: 5,
        }
    }
}

const KL_SWEEPS: usize = 10;

fn gain_eps(w: &DMatrix<f64>) -> f64 {
    1e-12 * (1.0 + w.amax())
}

/// Per-community sums of row `x` of `w`, excluding the diagonal.
fn community_sums(w: &DMatrix<f64>, labels: &[usize], x: usize, n_labels: usize) -> Vec<f64> {
    let mut sums = vec![0.0; n_labels];
    for (y, &l) in labels.iter().enumerate() {
        if y != x {
            sums[l] += w[(x, y)];
        }
    }
    sums
}

/// Louvain local moving on one level. Returns whether anything moved; `q` is kept
/// current and appended to `trace` after every pass that moved.
fn local_moving(
    w: &DMatrix<f64>,
    neighbors: &[Vec<usize>],
    labels: &mut [usize],
    rng: &mut ChaCha8Rng,
    max_passes: usize,
    q: &mut f64,
    trace: &mut Vec<f64>,
) -> bool {
    let n = labels.len();
    let eps = gain_eps(w);
    let mut order: Vec<usize> = (0..n).collect();
    let mut any = false;
    for _ in 0..max_passes {
        order.shuffle(rng);
        let mut moved = false;
        for &x in &order {
            let sums = community_sums(w, labels, x, n);
            let own = labels[x];
            let mut candidates: Vec<usize> = neighbors[x].iter().map(|&y| labels[y]).filter(|&c| c != own).collect();
            candidates.sort_unstable();
            candidates.dedup();
            let mut best = own;
            let mut best_gain = eps;
            for c in candidates {
                let g = 2.0 * (sums[c] - sums[own]);
                if g > best_gain {
                    best_gain = g;
                    best = c;
                }
            }
            if best != own {
                labels[x] = best;
                *q += best_gain;
                moved = true;
            }
        }
        if !moved {
            break;
        }
        any = true;
        trace.push(*q);
    }
    any
}

fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let p = Partition::new(labels.to_vec()).canonical();
    let k = p.n_communities();
    (p.labels().to_vec(), k)
}

fn aggregate(w: &DMatrix<f64>, neighbors: &[Vec<usize>], labels: &[usize], k: usize) -> (DMatrix<f64>, Vec<Vec<usize>>) {
    let n = labels.len();
    let mut agg = DMatrix::zeros(k, k);
    for y in 0..n {
        for x in 0..n {
            agg[(labels[x], labels[y])] += w[(x, y)];
        }
    }
    let mut nb: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (x, list) in neighbors.iter().enumerate() {
        for &y in list {
            if labels[x] != labels[y] {
                nb[labels[x]].push(labels[y]);
            }
        }
    }
    for list in &mut nb {
        list.sort_unstable();
        list.dedup();
    }
    (agg, nb)
}

/// Single-vertex relocations to any existing community while the gain is positive.
fn kl_relocate(w: &DMatrix<f64>, labels: &mut [usize], q: &mut f64, trace: &mut Vec<f64>) {
    let eps = gain_eps(w);
    for _ in 0..KL_SWEEPS {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut moved = false;
        for x in 0..labels.len() {
            let sums = community_sums(w, labels, x, k);
            let own = labels[x];
            let mut best = own;
            let mut best_gain = eps;
            for (c, &s) in sums.iter().enumerate() {
                let g = 2.0 * (s - sums[own]);
                if c != own && g > best_gain {
                    best_gain = g;
                    best = c;
                }
            }
            if best != own {
                labels[x] = best;
                *q += best_gain;
                moved = true;
            }
        }
        if !moved {
            break;
        }
        trace.push(*q);
    }
}

/// Supra vertices joined by a within-layer edge or by a present coupling of positive magnitude.
fn supra_neighbors(net: &MultilayerNetwork, spec: &CouplingSpec) -> Result<Vec<Vec<usize>>> {
    let n = net.n_nodes();
    let mut nb = vec![Vec::new(); net.supra_size()];
    for (flat, layer) in net.layers().iter().enumerate() {
        for i in 0..n {
            nb[flat * n + i].extend(layer.row(i).iter().map(|&(j, _)| flat * n + j));
        }
    }
    for (node, a, b) in net.couplings().iter() {
        if spec.magnitude(net, node, a, b)? > 0.0 {
            nb[a * n + node].push(b * n + node);
            nb[b * n + node].push(a * n + node);
        }
    }
    Ok(nb)
}

fn louvain_run(d: &DMatrix<f64>, neighbors: &[Vec<usize>], config: &BaselineConfig, seed: u64) -> (Vec<usize>, Vec<f64>) {
    let n = d.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = d.diagonal().sum();
    let mut trace = vec![q];
    let mut assignment: Vec<usize> = (0..n).collect();
    let mut w = d.clone();
    let mut nb = neighbors.to_vec();
    loop {
        let mut labels: Vec<usize> = (0..w.nrows()).collect();
        if !local_moving(&w, &nb, &mut labels, &mut rng, config.max_passes, &mut q, &mut trace) {
            break;
        }
        let (labels, k) = compact(&labels);
        for a in assignment.iter_mut() {
            *a = labels[*a];
        }
        let (agg, agg_nb) = aggregate(&w, &nb, &labels, k);
        w = agg;
        nb = agg_nb;
        if k == 1 {
            break;
        }
    }
    if config.kl_swap {
        kl_relocate(d, &mut assignment, &mut q, &mut trace);
    }
    (assignment, trace)
}

/// Generalized Louvain with best-of-`restarts` shuffled visiting orders.
pub fn mlouv(
    net: &MultilayerNetwork,
    spec: &CouplingSpec,
    params: &ModularityParams,
    config: &BaselineConfig,
) -> Result<DetectionResult> {
    let supra = build_modularity_matrix(net, spec, params)?;
    let neighbors = supra_neighbors(net, spec)?;
    let mut best: Option<(Partition, f64, Vec<f64>)> = None;
    for r in 0..config.restarts.max(1) {
        let seed = config.seed.wrapping_add(r as u64);
        let (labels, trace) = louvain_run(&supra.matrix, &neighbors, config, seed);
        let partition = Partition::new(labels).canonical();
        let q = modularity::score(net, spec, params, &partition)?.raw();
        if best.as_ref().is_none_or(|(_, bq, _)| q > *bq) {
            best = Some((partition, q, trace));
        }
    }
    let (partition, _, q_trace) = best.expect("at least one restart");
    finish("mlouv", net, spec, params, partition, supra.chi, Vec::new(), q_trace, supra.diagnostics)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    algorithm: &str,
    net: &MultilayerNetwork,
    spec: &CouplingSpec,
    params: &ModularityParams,
    partition: Partition,
    chi: f64,
    divisions: Vec<crate::mspec::Division>,
    q_trace: Vec<f64>,
    diagnostics: Vec<String>,
) -> Result<DetectionResult> {
    let q_total = modularity::modularity(net, spec, params, &partition)?;
    Ok(DetectionResult {
        algorithm: algorithm.into(),
        partition,
        q_total,
        normalized: params.normalization == Normalization::Normalized,
        chi,
        divisions,
        q_trace,
        soft_labels: None,
        diagnostics,
    })
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Spectral bisection of the mean adjacency matrix, each node's label shared by all its copies.
///
/// The mean layer uses the mean resolution (and, for signed networks, the mean
/// positive and negative resolutions) across layers, with unit weight.
pub fn smean_spec(
    net: &MultilayerNetwork,
    spec: &CouplingSpec,
    params: &ModularityParams,
    options: &MspecOptions,
) -> Result<DetectionResult> {
    params.validate(net)?;
    let n = net.n_nodes();
    let l = net.n_layers() as f64;
    let edges = net.layers().iter().flat_map(|layer| layer.edges().map(move |(i, j, w)| (i, j, w / l)));
    let mean_layer = LayerAdjacency::from_edges(n, edges)?;
    let model = match &params.signed {
        Some(s) => LayerModel::signed(&mean_layer, mean(&s.gamma_plus), mean(&s.gamma_minus), 1.0),
        None => LayerModel::unsigned(&mean_layer, mean(&params.gamma), 1.0),
    };
    let split = divide(&model.block(), options)?;
    let labels = (0..net.supra_size()).map(|x| split.labels[x % n]).collect();
    let chi = modularity::chi(net, spec, params)?;
    finish(
        "smean",
        net,
        spec,
        params,
        Partition::new(labels).canonical(),
        chi,
        split.divisions,
        Vec::new(),
        split.diagnostics,
    )
}

/// Independent spectral bisection of every layer; communities never span layers.
pub fn sfull_spec(
    net: &MultilayerNetwork,
    spec: &CouplingSpec,
    params: &ModularityParams,
    options: &MspecOptions,
) -> Result<DetectionResult> {
    params.validate(net)?;
    let n = net.n_nodes();
    let mut labels = Vec::with_capacity(net.supra_size());
    let mut divisions = Vec::new();
    let mut diagnostics = Vec::new();
    let mut offset = 0;
    for flat in 0..net.n_layers() {
        let block = LayerModel::for_layer(net, params, flat).block();
        let split = divide(&block, options)?;
        let k = split.labels.iter().max().map_or(0, |m| m + 1);
        labels.extend(split.labels.iter().map(|l| l + offset));
        offset += k;
        divisions.extend(split.divisions);
        diagnostics.extend(split.diagnostics);
    }
    debug_assert_eq!(labels.len(), n * net.n_layers());
    let chi = modularity::chi(net, spec, params)?;
    finish(
        "sfull",
        net,
        spec,
        params,
        Partition::new(labels).canonical(),
        chi,
        divisions,
        Vec::new(),
        diagnostics,
    )
}
