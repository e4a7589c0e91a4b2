//! Parameter sweeps over the coupling strength and algorithm comparisons over coupling density.

use std::fmt;
use std::str::FromStr;

use crate::baselines::{mlouv, sfull_spec, smean_spec, BaselineConfig};
use crate::coupling::CouplingSpec;
use crate::error::{Error, Result};
use crate::modularity::{ModularityParams, Partition};
use crate::mspec::{mspec_detect, DetectionResult, MspecOptions};
use crate::network::{generate_couplings, MultilayerNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Mspec,
    Mlouv,
    Smean,
    Sfull,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Mspec, Algorithm::Mlouv, Algorithm::Smean, Algorithm::Sfull];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Mspec => "mspec",
            Algorithm::Mlouv => "mlouv",
            Algorithm::Smean => "smean",
            Algorithm::Sfull => "sfull",
        }
    }

    /// Whether repeated runs depend on a seed beyond the coupling draw.
    pub fn is_stochastic(self) -> bool {
        self == Algorithm::Mlouv
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown algorithm {s:?} (expected mspec, mlouv, smean or sfull)")))
    }
}

/// Settings shared by every algorithm in a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOptions {
    pub mspec: MspecOptions,
    pub baseline: BaselineConfig,
}

pub fn run_algorithm(
    algorithm: Algorithm,
    net: &MultilayerNetwork,
    spec: &CouplingSpec,
    params: &ModularityParams,
    options: &RunOptions,
) -> Result<DetectionResult> {
    match algorithm {
        Algorithm::Mspec => mspec_detect(net, spec, params, &options.mspec),
        Algorithm::Mlouv => mlouv(net, spec, params, &options.baseline),
        Algorithm::Smean => smean_spec(net, spec, params, &options.mspec),
        Algorithm::Sfull => sfull_spec(net, spec, params, &options.mspec),
    }
}

/// Fraction of nodes whose copies all carry the same label.
pub fn consistency(net: &MultilayerNetwork, partition: &Partition) -> f64 {
    let n = net.n_nodes();
    if n == 0 {
        return 1.0;
    }
    let unanimous = (0..n)
        .filter(|&i| (1..net.n_layers()).all(|l| partition.label(l * n + i) == partition.label(i)))
        .count();
    unanimous as f64 / n as f64
}

/// Whether two labelings describe the same partition up to renaming.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && Partition::new(a.to_vec()).canonical() == Partition::new(b.to_vec()).canonical()
}

/// One detection at one coupling strength.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub omega: f64,
    pub result: DetectionResult,
    pub consistency: f64,
}

pub fn sweep_point(
    net: &MultilayerNetwork,
    base: &CouplingSpec,
    params: &ModularityParams,
    omega: f64,
    algorithm: Algorithm,
    options: &RunOptions,
) -> Result<SweepPoint> {
    let spec = CouplingSpec {
        omega,
        strategy: base.strategy.clone(),
    };
    let result = run_algorithm(algorithm, net, &spec, params, options)?;
    let consistency = consistency(net, &result.partition);
    Ok(SweepPoint {
        omega,
        result,
        consistency,
    })
}

/// Runs one detection per coupling strength, in grid order.
pub fn sweep(
    net: &MultilayerNetwork,
    base: &CouplingSpec,
    params: &ModularityParams,
    omegas: &[f64],
    algorithm: Algorithm,
    options: &RunOptions,
) -> Result<Vec<SweepPoint>> {
    omegas
        .iter()
        .map(|&w| sweep_point(net, base, params, w, algorithm, options))
        .collect()
}

/// Cells x runs label table: `nodeId, layerId, aspectId` then one 1-based label column per point.
pub fn label_table(net: &MultilayerNetwork, points: &[SweepPoint]) -> Table {
    let mut header = vec!["nodeId".to_string(), "layerId".to_string(), "aspectId".to_string()];
    header.extend(points.iter().map(|p| format!("omega={}", p.omega)));
    let n = net.n_nodes();
    let rows = (0..net.supra_size())
        .map(|x| {
            let flat = x / n;
            let mut row = vec![
                (x % n + 1).to_string(),
                (flat + 1).to_string(),
                (net.layer_ref(flat).aspect + 1).to_string(),
            ];
            row.extend(points.iter().map(|p| (p.result.partition.label(x) + 1).to_string()));
            row
        })
        .collect();
    Table { header, rows }
}

/// Per-point summary: omega, Q, community count, consistency.
pub fn sweep_summary(points: &[SweepPoint]) -> Table {
    let header = ["omega", "Q", "communities", "consistency"].map(String::from).to_vec();
    let rows = points
        .iter()
        .map(|p| {
            vec![
                p.omega.to_string(),
                format!("{:.6}", p.result.q_total),
                p.result.partition.n_communities().to_string(),
                format!("{:.4}", p.consistency),
            ]
        })
        .collect();
    Table { header, rows }
}

/// One algorithm run at one coupling density and repeat.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareCell {
    pub algorithm: Algorithm,
    pub rho: f64,
    pub repeat: usize,
    pub q: f64,
    pub communities: usize,
}

/// Draws couplings with density `rho` and seed `seed + repeat`, then runs `algorithm`.
///
/// Every algorithm sees the same coupling realization for a given `(rho, repeat)`;
/// the Louvain shuffles are seeded with the same value.
#[allow(clippy::too_many_arguments)]
pub fn compare_cell(
    base_net: &MultilayerNetwork,
    spec: &CouplingSpec,
    params: &ModularityParams,
    algorithm: Algorithm,
    rho: f64,
    repeat: usize,
    seed: u64,
    options: &RunOptions,
) -> Result<CompareCell> {
    let run_seed = seed.wrapping_add(repeat as u64);
    let couplings = generate_couplings(base_net, rho, run_seed)?;
    let net = base_net.clone().with_couplings(couplings)?;
    let mut options = options.clone();
    options.baseline.seed = run_seed;
    let result = run_algorithm(algorithm, &net, spec, params, &options)?;
    Ok(CompareCell {
        algorithm,
        rho,
        repeat,
        q: result.q_total,
        communities: result.partition.n_communities(),
    })
}

/// Mean and population variance.
pub fn mean_variance(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// One row of the comparison: repeat-averaged `Q` per density, with the row's variance and mean.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub algorithm: Algorithm,
    pub q: Vec<f64>,
    pub variance: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rhos: Vec<f64>,
    pub rows: Vec<CompareRow>,
}

impl Comparison {
    /// Aggregates cells; every `(algorithm, rho)` pair must have at least one repeat.
    pub fn from_cells(algorithms: &[Algorithm], rhos: &[f64], cells: &[CompareCell]) -> Result<Self> {
        let mut rows = Vec::with_capacity(algorithms.len());
        for &alg in algorithms {
            let mut q = Vec::with_capacity(rhos.len());
            for &rho in rhos {
                let values: Vec<f64> = cells
                    .iter()
                    .filter(|c| c.algorithm == alg && c.rho == rho)
                    .map(|c| c.q)
                    .collect();
                if values.is_empty() {
                    return Err(Error::domain(format!("no runs of {alg} at rho = {rho}")));
                }
                q.push(mean_variance(&values).0);
            }
            let (mean, variance) = mean_variance(&q);
            rows.push(CompareRow {
                algorithm: alg,
                q,
                variance,
                mean,
            });
        }
        Ok(Self {
            rhos: rhos.to_vec(),
            rows,
        })
    }

    pub fn row(&self, algorithm: Algorithm) -> Option<&CompareRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm)
    }

    /// `algorithm, rho = ..., Variance, Mean`.
    pub fn table(&self) -> Table {
        let mut header = vec!["algorithm".to_string()];
        header.extend(self.rhos.iter().map(|r| format!("rho={r}")));
        header.push("Variance".into());
        header.push("Mean".into());
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![r.algorithm.name().to_string()];
                row.extend(r.q.iter().map(|q| format!("{q:.6}")));
                row.push(format!("{:.6}", r.variance));
                row.push(format!("{:.6}", r.mean));
                row
            })
            .collect();
        Table { header, rows }
    }
}

/// Runs the full density grid sequentially.
#[allow(clippy::too_many_arguments)]
pub fn compare(
    base_net: &MultilayerNetwork,
    spec: &CouplingSpec,
    params: &ModularityParams,
    algorithms: &[Algorithm],
    rhos: &[f64],
    repeats: usize,
    seed: u64,
    options: &RunOptions,
) -> Result<Comparison> {
    let mut cells = Vec::new();
    for &rho in rhos {
        for repeat in 0..repeats.max(1) {
            for &alg in algorithms {
                cells.push(compare_cell(base_net, spec, params, alg, rho, repeat, seed, options)?);
            }
        }
    }
    Comparison::from_cells(algorithms, rhos, &cells)
}

/// `0, 0.1, ..., 1.0`.
pub fn default_rho_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

/// A rectangular string table with CSV and aligned-text renderings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    /// Columns padded to their widest cell, first column left-aligned, the rest right-aligned.
    pub fn to_text(&self) -> String {
        let cols = self.header.len();
        let mut width = vec![0; cols];
        for row in std::iter::once(&self.header).chain(&self.rows) {
            for (w, cell) in width.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        for row in std::iter::once(&self.header).chain(&self.rows) {
            let line: Vec<String> = row
                .iter()
                .zip(&width)
                .enumerate()
                .map(|(k, (cell, &w))| if k == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::build_karate_replica;
    use crate::network::{CouplingSet, LayerAdjacency};

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("louvain".parse::<Algorithm>().is_err());
    }

    #[test]
    fn consistency_counts_unanimous_nodes() {
        let net = MultilayerNetwork::single_aspect(2, vec![LayerAdjacency::empty(2); 2], CouplingSet::new()).unwrap();
        assert_eq!(consistency(&net, &Partition::new(vec![0, 1, 0, 1])), 1.0);
        assert_eq!(consistency(&net, &Partition::new(vec![0, 1, 0, 0])), 0.5);
    }

    #[test]
    fn population_variance() {
        assert_eq!(mean_variance(&[1.0, 3.0]), (2.0, 1.0));
        assert_eq!(mean_variance(&[5.0]), (5.0, 0.0));
    }

    #[test]
    fn single_cell_comparison_has_zero_variance() {
        let (net, params) = build_karate_replica(&[1.0, 1.0]).unwrap();
        let cmp = compare(
            &net,
            &CouplingSpec::uniform(1.0),
            &params,
            &[Algorithm::Mspec],
            &[0.5],
            1,
            7,
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(cmp.rows.len(), 1);
        assert_eq!(cmp.rows[0].q.len(), 1);
        assert_eq!(cmp.rows[0].variance, 0.0);
        assert_eq!(cmp.rows[0].mean, cmp.rows[0].q[0]);
        let t = cmp.table();
        assert_eq!(t.header, vec!["algorithm", "rho=0.5", "Variance", "Mean"]);
    }

    #[test]
    fn table_renderings() {
        let t = Table {
            header: vec!["a".into(), "bb".into()],
            rows: vec![vec!["xyz".into(), "1".into()]],
        };
        assert_eq!(t.to_csv(), "a,bb\nxyz,1\n");
        assert_eq!(t.to_text(), "a    bb\nxyz   1\n");
    }

    #[test]
    fn label_table_shape() {
        let (net, params) = build_karate_replica(&[0.5, 1.0]).unwrap();
        let pts = sweep(&net, &CouplingSpec::uniform(1.0), &params, &[0.0, 1.0], Algorithm::Mspec, &RunOptions::default()).unwrap();
        let t = label_table(&net, &pts);
        assert_eq!(t.rows.len(), 68);
        assert_eq!(t.header.len(), 5);
        assert_eq!(pts[1].consistency, 1.0);
    }
}
