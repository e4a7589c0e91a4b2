//! Acceptance gate: every criterion runs at its stated tolerance and prints one line.
//!
//! Runs as a plain binary (`harness = false`) so the criteria execute sequentially
//! and their wall-clock budgets are not distorted by parallel tests.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use mlmod::benchmark::{compare, consistency, default_rho_grid, same_partition, Algorithm, RunOptions};
use mlmod::datasets::{build_karate_replica, karate, karate_truth, replica_gammas};
use mlmod::eigen::{dense_leading, lanczos_leading, leading_eigenpair};
use mlmod::modularity::score;
use mlmod::mspec::split_gain;
use mlmod::{
    build_modularity_matrix, hamiltonian, modularity, modularity_signed, mspec_detect, subdivision_matrix,
    CouplingSet, CouplingSpec, LayerAdjacency, ModularityParams, MspecOptions, MultilayerNetwork, Partition,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> bool {
    elapsed <= budget
}

fn layer_partition(labels: &[usize], n: usize, layer: usize) -> Vec<usize> {
    labels[layer * n..(layer + 1) * n].to_vec()
}

fn replica_sweep() -> Outcome {
    let start = Instant::now();
    let (net, params) = build_karate_replica(&replica_gammas(10)).unwrap();
    let n = net.n_nodes();
    let options = MspecOptions::default();
    let run = |omega: f64| mspec_detect(&net, &CouplingSpec::uniform(omega), &params, &options).unwrap();
    let r0 = run(0.0);
    let r1 = run(1.0);
    let r10 = run(10.0);
    let c1 = consistency(&net, &r1.partition);
    let c10 = consistency(&net, &r10.partition);
    let truth = karate_truth();
    let matches_truth = r1.partition.n_communities() == 2 && same_partition(&layer_partition(r1.partition.labels(), n, 0), &truth);
    let layers0: Vec<Vec<usize>> = (0..10).map(|l| layer_partition(r0.partition.labels(), n, l)).collect();
    let divergent = layers0.iter().any(|p| !same_partition(p, &layers0[0]));
    let elapsed = start.elapsed();
    let pass = c1 == 1.0 && c10 == 1.0 && matches_truth && divergent && within_budget(elapsed, Duration::from_secs(10));
    outcome(
        pass,
        format!(
            "consistency(omega=1)={c1}, consistency(omega=10)={c10}, omega=1 communities={} truth match={matches_truth}, omega=0 layers diverge={divergent}, {:.2?}",
            r1.partition.n_communities(),
            elapsed
        ),
    )
}

fn single_layer_reduction() -> Outcome {
    let start = Instant::now();
    let net = karate();
    let params = ModularityParams::new(1);
    let spec = CouplingSpec::uniform(1.0);
    let d = build_modularity_matrix(&net, &spec, &params).unwrap().matrix;
    let a = net.layer(0).to_dense();
    let k: Vec<f64> = (0..34).map(|i| a.row(i).sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut max_dev: f64 = 0.0;
    for i in 0..34 {
        for j in 0..34 {
            let b = a[(i, j)] - k[i] * k[j] / two_m;
            max_dev = max_dev.max((d[(i, j)] - b).abs());
        }
    }
    let r = mspec_detect(&net, &spec, &params, &MspecOptions::default()).unwrap();
    let first = r.divisions.first().map(|d| d.delta_q).unwrap_or(f64::NAN);
    let elapsed = start.elapsed();
    let pass = max_dev <= 1e-12 && first > 0.0 && within_budget(elapsed, Duration::from_secs(1));
    outcome(pass, format!("max |D - B| = {max_dev:e}, first division dQ = {first:.6}, {elapsed:.2?}"))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst_a: f64 = 0.0;
    let mut worst_c: f64 = 0.0;
    let mut exceed = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for seed in 0..50u64 {
        let (net, params, omega) = common::desk_instance(seed, 12);
        let spec = CouplingSpec::uniform(omega);
        let oracle = common::oracle_matrix(&net, &params, omega);
        let size = net.supra_size();
        // (a) scorer against pairwise summation on random partitions
        for _ in 0..5 {
            let k = rng.gen_range(1..=size);
            let labels: Vec<usize> = (0..size).map(|_| rng.gen_range(0..k)).collect();
            let q = modularity(&net, &spec, &params, &Partition::new(labels.clone())).unwrap();
            let want = common::pairwise_q(&oracle, &labels);
            worst_a = worst_a.max((q - want).abs());
        }
        // (b) never above the exhaustive maximum
        let (best, _) = common::exhaustive_max(&oracle);
        let got = mspec_detect(&net, &spec, &params, &MspecOptions::default()).unwrap().q_total;
        if got > best + 1e-9 {
            exceed += 1;
        }
        // (c) subdivision gain against the direct difference
        let d = build_modularity_matrix(&net, &spec, &params).unwrap().matrix;
        for _ in 0..5 {
            let labels: Vec<usize> = (0..size).map(|_| rng.gen_range(0..2)).collect();
            let members: Vec<usize> = (0..size).filter(|&x| labels[x] == 0).collect();
            if members.len() < 2 {
                continue;
            }
            let z: Vec<i8> = members.iter().map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            let sub = subdivision_matrix(&d, &members).unwrap();
            let gain = split_gain(&sub, &z);
            let mut after = labels.clone();
            for (&x, &s) in members.iter().zip(&z) {
                if s < 0 {
                    after[x] = 2;
                }
            }
            let before_q = score(&net, &spec, &params, &Partition::new(labels.clone())).unwrap().raw();
            let after_q = score(&net, &spec, &params, &Partition::new(after)).unwrap().raw();
            worst_c = worst_c.max((after_q - before_q - gain).abs());
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_a <= 1e-9 && exceed == 0 && worst_c <= 1e-9 && within_budget(elapsed, Duration::from_secs(60));
    outcome(
        pass,
        format!("(a) max dev {worst_a:e}, (b) {exceed} instances above optimum, (c) max dev {worst_c:e}, {elapsed:.2?}"),
    )
}

fn hamiltonian_consistency() -> Outcome {
    let (net, params, _) = common::desk_instance(77, 12);
    let mut params = params;
    params.lambda = vec![0.75; net.n_layers()];
    let spec = CouplingSpec::uniform(0.5);
    let supra = build_modularity_matrix(&net, &spec, &params).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let size = net.supra_size();
    let mut bias = Vec::new();
    for _ in 0..20 {
        let labels: Vec<usize> = (0..size).map(|_| rng.gen_range(0..3)).collect();
        let p = Partition::new(labels);
        let h = hamiltonian(&net, &spec, &params, &p).unwrap();
        let q = score(&net, &spec, &params, &p).unwrap().raw();
        bias.push(-h / 2.0 - q);
    }
    let scale = bias.iter().fold(1.0f64, |m, b| m.max(b.abs()));
    let spread = bias.iter().fold(0.0f64, |m, b| m.max((b - bias[0]).abs())) / scale;
    let sum = supra.matrix.sum();
    let chi_dev = (sum - supra.chi).abs() / supra.chi.abs().max(1.0);
    let bias_dev = (bias[0] + supra.chi / 2.0).abs() / scale;
    let pass = spread <= 1e-9 && chi_dev <= 1e-9 && bias_dev <= 1e-9;
    outcome(
        pass,
        format!("bias spread {spread:e} (relative), |sum D - chi| {chi_dev:e} (relative), bias + chi/2 {bias_dev:e}"),
    )
}

fn comparative_ordering() -> Outcome {
    let start = Instant::now();
    let (net, params) = build_karate_replica(&replica_gammas(10)).unwrap();
    let base = net.with_couplings(CouplingSet::new()).unwrap();
    let cmp = compare(
        &base,
        &CouplingSpec::uniform(1.0),
        &params,
        &Algorithm::ALL,
        &default_rho_grid(),
        20,
        0,
        &RunOptions::default(),
    )
    .unwrap();
    let elapsed = start.elapsed();
    let ms = cmp.row(Algorithm::Mspec).unwrap();
    let mut pass = within_budget(elapsed, Duration::from_secs(300));
    let mut detail = Vec::new();
    for alg in [Algorithm::Mlouv, Algorithm::Smean, Algorithm::Sfull] {
        let row = cmp.row(alg).unwrap();
        let ok = ms.mean >= row.mean;
        pass &= ok;
        detail.push(format!("mean {}={:.2} vs {alg}={:.2} [{}]", Algorithm::Mspec, ms.mean, row.mean, if ok { "ok" } else { "FAIL" }));
    }
    let smean = cmp.row(Algorithm::Smean).unwrap();
    let var_ok = ms.variance <= smean.variance;
    pass &= var_ok;
    detail.push(format!(
        "var mspec={:.2} vs smean={:.2} [{}]",
        ms.variance,
        smean.variance,
        if var_ok { "ok" } else { "FAIL" }
    ));
    detail.push(format!("{elapsed:.2?}"));
    outcome(pass, detail.join(", "))
}

fn eigensolver_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_value: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(4..=64);
        let d = common::random_symmetric(n, &mut rng);
        let norm = d.norm();
        let top = common::jacobi_top(&d);
        for pair in [leading_eigenpair(&d, 1e-10).unwrap(), lanczos_leading(&d, 1e-10).unwrap()] {
            worst_value = worst_value.max((pair.value - top).abs() / norm);
            worst_residual = worst_residual.max(pair.residual(&d) / norm);
        }
        let _ = dense_leading(&d, 1e-10).unwrap();
    }
    let pass = worst_value <= 1e-8 && worst_residual <= 1e-8;
    outcome(
        pass,
        format!("max |beta - oracle|/||D|| = {worst_value:e}, max residual/||D|| = {worst_residual:e} (dense and Lanczos)"),
    )
}

fn signed_behavior() -> Outcome {
    let triangle = LayerAdjacency::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, -1.0)]).unwrap();
    let net = MultilayerNetwork::single_aspect(3, vec![triangle], CouplingSet::new()).unwrap();
    let spec = CouplingSpec::uniform(1.0);
    let params = ModularityParams::signed(1, 1.0, 1.0);
    let r = mspec_detect(&net, &spec, &params, &MspecOptions::default()).unwrap();
    let separated = r.partition.label(0) != r.partition.label(2);
    // exhaustive oracle over the five partitions of three vertices
    let all = [[0, 0, 0], [0, 0, 1], [0, 1, 0], [0, 1, 1], [0, 1, 2]];
    let qs: Vec<f64> = all
        .iter()
        .map(|l| modularity_signed(&net, &spec, &params, &Partition::new(l.to_vec())).unwrap())
        .collect();
    let best = qs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let optimal_separate = all.iter().zip(&qs).all(|(l, &q)| q < best - 1e-12 || l[0] != l[2]);
    let matches = (r.q_total - best).abs() <= 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut reduction_exact = true;
    for seed in 0..10 {
        let (net, params, omega) = common::desk_instance(seed + 500, 12);
        let spec = CouplingSpec::uniform(omega);
        let g = params.gamma[0];
        let mut signed = ModularityParams::signed(net.n_layers(), g, g);
        signed.gamma = vec![g; net.n_layers()];
        let unsigned = ModularityParams::new(net.n_layers()).with_gamma(vec![g; net.n_layers()]);
        let labels: Vec<usize> = (0..net.supra_size()).map(|_| rng.gen_range(0..3)).collect();
        let p = Partition::new(labels);
        let a = modularity_signed(&net, &spec, &signed, &p).unwrap();
        let b = modularity(&net, &spec, &unsigned, &p).unwrap();
        reduction_exact &= a == b;
    }
    let pass = separated && matches && optimal_separate && reduction_exact;
    outcome(
        pass,
        format!(
            "endpoints separated={separated}, Q={:.6} vs exhaustive {best:.6}, every optimum separates={optimal_separate}, unsigned reduction exact={reduction_exact}",
            r.q_total
        ),
    )
}

fn complexity_sanity() -> Outcome {
    let sizes = [128usize, 256, 512];
    let mut times = Vec::new();
    for &size in &sizes {
        let net = common::planted_instance(size / 2, 2, 4, size as u64);
        let params = ModularityParams::new(2);
        let spec = CouplingSpec::uniform(1.0);
        let mut best = Duration::MAX;
        for _ in 0..3 {
            let start = Instant::now();
            let r = mspec_detect(&net, &spec, &params, &MspecOptions::default()).unwrap();
            best = best.min(start.elapsed());
            std::hint::black_box(r);
        }
        times.push(best);
    }
    let ratios: Vec<f64> = times.windows(2).map(|w| w[1].as_secs_f64() / w[0].as_secs_f64()).collect();
    let pass = ratios.iter().all(|&r| r <= 6.0);
    outcome(
        pass,
        format!(
            "times {:.2?} / {:.2?} / {:.2?}, ratios {:.2} and {:.2}",
            times[0], times[1], times[2], ratios[0], ratios[1]
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 replica consistency and ground truth", replica_sweep),
        ("2 single-layer reduction", single_layer_reduction),
        ("3 oracle equivalence at desk scale", oracle_equivalence),
        ("4 hamiltonian consistency", hamiltonian_consistency),
        ("5 comparative ordering over rho", comparative_ordering),
        ("6 eigensolver correctness", eigensolver_correctness),
        ("7 signed behavior", signed_behavior),
        ("8 complexity sanity", complexity_sanity),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("[{}] criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
