//! Independent reference computations for the integration tests.
//!
//! Nothing here calls the library's matrix construction, scorer or eigensolver.

#![allow(dead_code)]

use mlmod::network::generate_couplings;
use mlmod::{CouplingSet, LayerAdjacency, ModularityParams, MultilayerNetwork};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pairwise modularity contributions built straight from the definition, uniform coupling `omega`.
///
/// Unsigned networks only; every layer must have edges.
pub fn oracle_matrix(net: &MultilayerNetwork, params: &ModularityParams, omega: f64) -> DMatrix<f64> {
    let n = net.n_nodes();
    let l = net.n_layers();
    let mut d = DMatrix::zeros(n * l, n * l);
    for s in 0..l {
        let a = net.layer(s).to_dense();
        let k: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
        let two_m: f64 = k.iter().sum();
        for i in 0..n {
            for j in 0..n {
                d[(s * n + i, s * n + j)] = params.lambda[s] * (a[(i, j)] - params.gamma[s] * k[i] * k[j] / two_m);
            }
        }
    }
    for i in 0..n {
        for s in 0..l {
            for r in 0..l {
                if s != r {
                    let present = net.couplings().contains(i, s, r);
                    d[(s * n + i, r * n + i)] = if present { omega } else { -omega };
                }
            }
        }
    }
    d
}

/// `sum_{x,y} d_xy [g_x = g_y]` by plain double loop.
pub fn pairwise_q(d: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let mut q = 0.0;
    for x in 0..labels.len() {
        for y in 0..labels.len() {
            if labels[x] == labels[y] {
                q += d[(x, y)];
            }
        }
    }
    q
}

/// Maximum of `pairwise_q` over every set partition (restricted growth strings).
pub fn exhaustive_max(d: &DMatrix<f64>) -> (f64, Vec<usize>) {
    let n = d.nrows();
    let mut labels = vec![0usize; n];
    let mut best = (f64::NEG_INFINITY, labels.clone());
    fn go(d: &DMatrix<f64>, k: usize, used: usize, q: f64, labels: &mut Vec<usize>, best: &mut (f64, Vec<usize>)) {
        let n = d.nrows();
        if k == n {
            if q > best.0 {
                *best = (q, labels.clone());
            }
            return;
        }
        for c in 0..=used {
            labels[k] = c;
            let mut add = d[(k, k)];
            for j in 0..k {
                if labels[j] == c {
                    add += 2.0 * d[(k, j)];
                }
            }
            go(d, k + 1, used.max(c + 1), q + add, labels, best);
        }
    }
    if n > 0 {
        go(d, 1, 1, d[(0, 0)], &mut labels, &mut best);
    }
    best
}

/// Cyclic Jacobi eigenvalue iteration; returns `(eigenvalues, eigenvectors as columns)`.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm().max(f64::MIN_POSITIVE);
    for _ in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| m[(i, i)]).collect(), v)
}

/// Largest eigenvalue by Jacobi.
pub fn jacobi_top(a: &DMatrix<f64>) -> f64 {
    jacobi_eigen(a).0.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

pub fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

/// Random weighted layer in which every node has at least one edge.
pub fn random_layer(n: usize, density: f64, rng: &mut ChaCha8Rng) -> LayerAdjacency {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                edges.push((i, j, rng.gen_range(0.5..2.0)));
            }
        }
    }
    for i in 0..n {
        if !edges.iter().any(|&(a, b, _)| a == i || b == i) {
            edges.push((i, (i + 1) % n, 1.0));
        }
    }
    LayerAdjacency::from_edges(n, edges).unwrap()
}

/// Desk-scale instance: `n * l <= max_cells`, gamma in {0.5, 1}, omega in {0, 0.5, 1}, rho in {0, 0.5, 1}.
pub fn desk_instance(seed: u64, max_cells: usize) -> (MultilayerNetwork, ModularityParams, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = rng.gen_range(1..=3);
    let n = rng.gen_range(2..=max_cells / l);
    let layers = (0..l).map(|_| random_layer(n, 0.5, &mut rng)).collect();
    let net = MultilayerNetwork::single_aspect(n, layers, CouplingSet::new()).unwrap();
    let rho = [0.0, 0.5, 1.0][rng.gen_range(0..3)];
    let couplings = generate_couplings(&net, rho, seed).unwrap();
    let net = net.with_couplings(couplings).unwrap();
    let mut params = ModularityParams::new(l);
    params.gamma = (0..l).map(|_| [0.5, 1.0][rng.gen_range(0..2)]).collect();
    let omega = [0.0, 0.5, 1.0][rng.gen_range(0..3)];
    (net, params, omega)
}

/// `k` planted groups of equal size in every layer, all node copies coupled.
pub fn planted_instance(n: usize, layers: usize, k: usize, seed: u64) -> MultilayerNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let group = |i: usize| i * k / n;
    let adj = (0..layers)
        .map(|_| {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    let p = if group(i) == group(j) { 0.3 } else { 0.03 };
                    if rng.gen_bool(p) {
                        edges.push((i, j, 1.0));
                    }
                }
            }
            LayerAdjacency::from_edges(n, edges).unwrap()
        })
        .collect();
    let net = MultilayerNetwork::single_aspect(n, adj, CouplingSet::new()).unwrap();
    let c = mlmod::network::full_couplings(&net);
    net.with_couplings(c).unwrap()
}

/// Number of distinct labels.
pub fn count_labels(labels: &[usize]) -> usize {
    let mut v = labels.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}
