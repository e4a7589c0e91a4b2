//! Recursive spectral bisection of the supra-modularity matrix.
//!
//! Every community `C` is split with the leading eigenvector of its subdivision
//! matrix `D^(C)` (the restriction of `D` to `C` with each row sum subtracted from
//! the diagonal). The gain of a split `z` is `dQ = (z^T D^(C) z) / 2` in raw `Q`
//! units; a split is applied only when `dQ > 0`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingSpec;
use crate::eigen::{leading_eigenpair, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::modularity::{build_modularity_matrix, modularity, ModularityParams, Partition};
use crate::network::MultilayerNetwork;

/// One attempted division.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Division {
    pub community: usize,
    pub size: usize,
    pub delta_q: f64,
    pub eigenvalue: f64,
    pub applied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub algorithm: String,
    pub partition: Partition,
    /// Modularity of `partition`, in the mode requested by the parameters.
    pub q_total: f64,
    pub normalized: bool,
    pub chi: f64,
    pub divisions: Vec<Division>,
    /// Objective after each applied step (divisions for spectral methods, passes for Louvain).
    pub q_trace: Vec<f64>,
    pub soft_labels: Option<Vec<f64>>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bisection {
    /// `+1` / `-1` per member.
    pub z: Vec<i8>,
    pub delta_q: f64,
    pub eigenvalue: f64,
    pub eigenvector: DVector<f64>,
}

impl Bisection {
    pub fn is_split(&self) -> bool {
        let plus = self.z.iter().filter(|&&s| s > 0).count();
        plus > 0 && plus < self.z.len()
    }
}

/// `(z^T D z - sum D) / 2`: the raw-`Q` gain of splitting the vertex set of `d` by `z`.
pub fn split_gain(d: &DMatrix<f64>, z: &[i8]) -> f64 {
    let n = d.nrows();
    let mut quad = 0.0;
    let mut total = 0.0;
    for y in 0..n {
        for x in 0..n {
            let v = d[(x, y)];
            total += v;
            if z[x] == z[y] {
                quad += v;
            } else {
                quad -= v;
            }
        }
    }
    0.5 * (quad - total)
}

/// Relative magnitude below which an eigenvector entry is treated as zero.
pub const ZERO_ENTRY: f64 = 1e-8;

/// Splits by the sign of the leading eigenvector, zero entries going to `+1`.
pub fn bisect(d: &DMatrix<f64>) -> Result<Bisection> {
    bisect_with_tolerance(d, DEFAULT_TOLERANCE)
}

fn bisect_with_tolerance(d: &DMatrix<f64>, tol: f64) -> Result<Bisection> {
    let pair = leading_eigenpair(d, tol)?;
    // entries at solver noise level count as zero
    let zero = ZERO_ENTRY * pair.vector.amax();
    let z: Vec<i8> = pair.vector.iter().map(|&u| if u >= -zero { 1 } else { -1 }).collect();
    let delta_q = split_gain(d, &z);
    Ok(Bisection {
        z,
        delta_q,
        eigenvalue: pair.value,
        eigenvector: pair.vector,
    })
}

/// `D^(C)`: `D` restricted to `members`, each diagonal entry reduced by its row sum over `members`.
pub fn subdivision_matrix(d: &DMatrix<f64>, members: &[usize]) -> Result<DMatrix<f64>> {
    if members.is_empty() {
        return Err(Error::domain("subdivision of an empty community"));
    }
    if let Some(&bad) = members.iter().find(|&&x| x >= d.nrows()) {
        return Err(Error::domain(format!("member {bad} outside the matrix")));
    }
    let k = members.len();
    let mut sub = d.select_rows(members).select_columns(members);
    for i in 0..k {
        let row_sum: f64 = sub.row(i).sum();
        sub[(i, i)] -= row_sum;
    }
    Ok(sub)
}

/// Kernighan-Lin style pass over a bisection: flip every vertex once, greedily by best
/// gain, and keep the best prefix of flips. Repeats while a pass improves.
pub fn refine_bisection(b: &DMatrix<f64>, z: &mut [i8]) {
    let n = z.len();
    let eps = 1e-12 * (1.0 + b.amax());
    for _ in 0..32 {
        let mut zz: Vec<f64> = z.iter().map(|&s| s as f64).collect();
        let mut bz: Vec<f64> = (0..n).map(|x| (0..n).map(|y| b[(x, y)] * zz[y]).sum()).collect();
        let mut free = vec![true; n];
        let mut cur = 0.0;
        let mut best = 0.0;
        let mut best_len = 0;
        let mut order = Vec::with_capacity(n);
        for step in 0..n {
            let mut pick = None;
            let mut pick_gain = f64::NEG_INFINITY;
            for x in 0..n {
                if free[x] {
                    // change of (z^T B z)/2 when z_x flips
                    let g = -2.0 * zz[x] * (bz[x] - b[(x, x)] * zz[x]);
                    if g > pick_gain {
                        pick_gain = g;
                        pick = Some(x);
                    }
                }
            }
            let Some(x) = pick else { break };
            free[x] = false;
            cur += pick_gain;
            let old = zz[x];
            zz[x] = -old;
            for y in 0..n {
                bz[y] -= 2.0 * old * b[(y, x)];
            }
            order.push(x);
            if cur > best + eps {
                best = cur;
                best_len = step + 1;
            }
        }
        if best_len == 0 {
            return;
        }
        for &x in &order[..best_len] {
            z[x] = -z[x];
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MspecOptions {
    pub min_community_size: usize,
    /// Deepest division level; `None` means unbounded.
    pub max_depth: Option<usize>,
    /// Run [`refine_bisection`] after every spectral split.
    pub refine: bool,
    pub tolerance: f64,
}

impl Default for MspecOptions {
    fn default() -> Self {
        Self {
            min_community_size: 1,
            max_depth: None,
            refine: false,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// Outcome of the recursion on a bare modularity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSplit {
    pub labels: Vec<usize>,
    pub divisions: Vec<Division>,
    /// `sum_{x,y} D_xy [g_x = g_y]` after each applied division, starting with the whole set.
    pub gains: Vec<f64>,
    pub root: Option<Bisection>,
    pub diagnostics: Vec<String>,
}

/// Recursive bisection of an arbitrary symmetric modularity matrix.
pub fn divide(d: &DMatrix<f64>, options: &MspecOptions) -> Result<SpectralSplit> {
    let n = d.nrows();
    let mut labels = vec![0usize; n];
    let mut divisions = Vec::new();
    let mut diagnostics = Vec::new();
    let mut root = None;
    let mut current = d.sum();
    let mut gains = vec![current];
    let mut next_label = 1;
    let max_depth = options.max_depth.unwrap_or(usize::MAX);
    let min_size = options.min_community_size.max(1);
    let mut depth_hit = false;

    let mut queue: VecDeque<(Vec<usize>, usize)> = VecDeque::new();
    if n > 0 {
        queue.push_back(((0..n).collect(), 0));
    }
    while let Some((members, depth)) = queue.pop_front() {
        if members.len() < 2 || members.len() < 2 * min_size {
            continue;
        }
        if depth >= max_depth {
            depth_hit = true;
            continue;
        }
        let sub = subdivision_matrix(d, &members)?;
        let mut bis = bisect_with_tolerance(&sub, options.tolerance)?;
        if root.is_none() {
            root = Some(bis.clone());
        }
        if options.refine {
            refine_bisection(&sub, &mut bis.z);
            bis.delta_q = split_gain(&sub, &bis.z);
        }
        let plus: Vec<usize> = members.iter().zip(&bis.z).filter(|(_, &s)| s > 0).map(|(&x, _)| x).collect();
        let minus: Vec<usize> = members.iter().zip(&bis.z).filter(|(_, &s)| s < 0).map(|(&x, _)| x).collect();
        let eps = 1e-10 * (1.0 + sub.amax());
        let applied = bis.delta_q > eps && plus.len() >= min_size && minus.len() >= min_size;
        let community = labels[members[0]];
        divisions.push(Division {
            community,
            size: members.len(),
            delta_q: bis.delta_q,
            eigenvalue: bis.eigenvalue,
            applied,
        });
        if applied {
            for &x in &minus {
                labels[x] = next_label;
            }
            next_label += 1;
            current += bis.delta_q;
            gains.push(current);
            queue.push_back((plus, depth + 1));
            queue.push_back((minus, depth + 1));
        }
    }
    if depth_hit {
        diagnostics.push(format!("maximum division depth {max_depth} reached"));
    }
    Ok(SpectralSplit {
        labels,
        divisions,
        gains,
        root,
        diagnostics,
    })
}

/// Multilayer spectral community detection on the supra-modularity matrix.
pub fn mspec_detect(
    net: &MultilayerNetwork,
    spec: &CouplingSpec,
    params: &ModularityParams,
    options: &MspecOptions,
) -> Result<DetectionResult> {
    let supra = build_modularity_matrix(net, spec, params)?;
    let split = divide(&supra.matrix, options)?;
    let partition = Partition::new(split.labels).canonical();
    let q_total = modularity(net, spec, params, &partition)?;
    let soft_labels = match split.root {
        Some(root) => Some(root.eigenvector.iter().copied().collect()),
        None if net.supra_size() == 1 => Some(vec![1.0]),
        None => None,
    };
    let mut diagnostics = supra.diagnostics;
    diagnostics.extend(split.diagnostics);
    Ok(DetectionResult {
        algorithm: "mspec".into(),
        partition,
        q_total,
        normalized: params.normalization == crate::modularity::Normalization::Normalized,
        chi: supra.chi,
        divisions: split.divisions,
        q_trace: split.gains,
        soft_labels,
        diagnostics,
    })
}

/// Continuous community indicators: the leading eigenvector of the root subdivision matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabels {
    /// One value per supra vertex.
    pub values: Vec<f64>,
    pub eigenvalue: f64,
    /// Set when the leading eigenvalue is not positive, i.e. the root admits no improving split.
    pub indivisible: bool,
}

pub fn soft_labels(net: &MultilayerNetwork, spec: &CouplingSpec, params: &ModularityParams) -> Result<SoftLabels> {
    let supra = build_modularity_matrix(net, spec, params)?;
    let all: Vec<usize> = (0..supra.size()).collect();
    let root = bisect(&subdivision_matrix(&supra.matrix, &all)?)?;
    Ok(SoftLabels {
        values: root.eigenvector.iter().copied().collect(),
        eigenvalue: root.eigenvalue,
        indivisible: root.eigenvalue <= 0.0,
    })
}
