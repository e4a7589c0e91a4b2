use std::collections::BTreeMap;
use std::path::Path;

use log::warn;
use mlmod::baselines::BaselineConfig;
use mlmod::benchmark::{
    compare_cell, default_rho_grid, label_table, run_algorithm, sweep_point, sweep_summary, Algorithm, CompareCell,
    Comparison, RunOptions, Table,
};
use mlmod::datasets::{build_karate_replica, karate, replica_gammas};
use mlmod::io::{
    format_location_map, load_dataset, load_multiplex, parse_aspect_grid, save_multiplex, save_result, write_atomic,
    CouplingFile, LayerValues, ParameterFile, Source,
};
use mlmod::network::flatten_aspect_grid;
use mlmod::{CouplingSet, CouplingSpec, DetectionResult, Error, ModularityParams, MspecOptions, MultilayerNetwork, Result};
use rayon::prelude::*;

use crate::{CompareArgs, ConvertArgs, DetectArgs, InputArgs, ModelArgs, SweepArgs, WORKERS_ENV};

fn input_error(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

struct Loaded {
    net: MultilayerNetwork,
    couplings: CouplingFile,
    /// Resolutions implied by the input (the replica's 0.1..1 ladder).
    default_gamma: Option<Vec<f64>>,
}

fn load(args: &InputArgs) -> Result<Loaded> {
    if let Some(name) = args.input.strip_prefix("builtin:") {
        if name != "karate" {
            return Err(input_error(format!("unknown builtin dataset {name:?} (available: karate)")));
        }
        if args.layers_file.is_some() || args.couplings_file.is_some() {
            return Err(input_error("builtin datasets take no layer or coupling files"));
        }
        return Ok(match args.replica_layers {
            Some(l) => {
                let gammas = replica_gammas(l);
                let (net, _) = build_karate_replica(&gammas)?;
                Loaded {
                    net,
                    couplings: CouplingFile::default(),
                    default_gamma: Some(gammas),
                }
            }
            None => Loaded {
                net: karate(),
                couplings: CouplingFile::default(),
                default_gamma: None,
            },
        });
    }
    if args.replica_layers.is_some() {
        return Err(input_error("--replica-layers applies to builtin:karate only"));
    }
    let path = Path::new(&args.input);
    if path.extension().is_some_and(|e| e == "manifest") {
        let ds = load_dataset(path)?;
        return Ok(Loaded {
            net: ds.network,
            couplings: ds.couplings,
            default_gamma: None,
        });
    }
    let (net, couplings) = load_multiplex(
        path,
        args.layers_file.as_deref(),
        args.couplings_file.as_deref(),
        args.nodes,
    )?;
    Ok(Loaded {
        net,
        couplings,
        default_gamma: None,
    })
}

fn values(v: &[f64]) -> Option<LayerValues> {
    match v {
        [] => None,
        [one] => Some(LayerValues::One(*one)),
        many => Some(LayerValues::PerLayer(many.to_vec())),
    }
}

fn model(m: &ModelArgs, loaded: &Loaded, omega: Option<f64>) -> Result<(ModularityParams, CouplingSpec)> {
    let mut file = match &m.params {
        Some(p) => ParameterFile::load(p)?,
        None => ParameterFile::default(),
    };
    if let Some(g) = values(&m.gamma) {
        file.gamma = Some(g);
    } else if file.gamma.is_none() {
        file.gamma = loaded.default_gamma.clone().map(LayerValues::PerLayer);
    }
    if let Some(v) = values(&m.lambda) {
        file.lambda = Some(v);
    }
    if let Some(v) = values(&m.gamma_plus) {
        file.gamma_plus = Some(v);
    }
    if let Some(v) = values(&m.gamma_minus) {
        file.gamma_minus = Some(v);
    }
    if let Some(w) = omega {
        file.omega = Some(w);
    }
    if m.normalized {
        file.normalization = Some("normalized".into());
    }
    if let Some(s) = &m.coupling_strategy {
        file.coupling.strategy = Some(s.clone());
    }
    if let Some(c) = &m.closeness_file {
        file.coupling.closeness = Some(c.clone());
    }
    file.resolve(&loaded.net, &loaded.couplings.magnitudes)
}

fn run_options(m: &ModelArgs) -> RunOptions {
    RunOptions {
        mspec: MspecOptions {
            min_community_size: m.min_community_size,
            max_depth: m.max_depth,
            refine: m.refine,
            ..MspecOptions::default()
        },
        baseline: BaselineConfig {
            seed: m.seed,
            restarts: m.restarts,
            ..BaselineConfig::default()
        },
    }
}

fn pool() -> Result<rayon::ThreadPool> {
    let workers = match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&w| w > 0)
            .ok_or_else(|| input_error(format!("{WORKERS_ENV}={v:?} is not a positive integer")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| input_error(format!("cannot start worker pool: {e}")))
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_table(dir: &Path, stem: &str, table: &Table) -> Result<()> {
    write_atomic(&dir.join(format!("{stem}.csv")), &table.to_csv())?;
    write_atomic(&dir.join(format!("{stem}.txt")), &table.to_text())
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn run_parameters(
    input: &InputArgs,
    m: &ModelArgs,
    params: &ModularityParams,
    spec: &CouplingSpec,
    algorithm: Algorithm,
) -> BTreeMap<String, String> {
    let mut p = BTreeMap::new();
    p.insert("input".into(), input.input.clone());
    p.insert("algorithm".into(), algorithm.name().into());
    p.insert("gamma".into(), join(&params.gamma));
    p.insert("lambda".into(), join(&params.lambda));
    if let Some(s) = &params.signed {
        p.insert("gamma_plus".into(), join(&s.gamma_plus));
        p.insert("gamma_minus".into(), join(&s.gamma_minus));
    }
    p.insert("omega".into(), spec.omega.to_string());
    p.insert("coupling_strategy".into(), spec.strategy.name().into());
    p.insert("normalization".into(), format!("{:?}", params.normalization).to_lowercase());
    p.insert("min_community_size".into(), m.min_community_size.to_string());
    p.insert("refine".into(), m.refine.to_string());
    if algorithm.is_stochastic() {
        p.insert("seed".into(), m.seed.to_string());
        p.insert("restarts".into(), m.restarts.to_string());
    }
    p
}

fn report(result: &DetectionResult) {
    for d in &result.diagnostics {
        warn!("{d}");
    }
}

fn single_omega(omega: &[f64]) -> Result<Option<f64>> {
    match omega {
        [] => Ok(None),
        [w] => Ok(Some(*w)),
        _ => Err(input_error("detect runs a single coupling strength; use sweep for several")),
    }
}

pub fn detect(a: &DetectArgs) -> Result<()> {
    let algorithm: Algorithm = a.algorithm.parse()?;
    let loaded = load(&a.input)?;
    let (params, spec) = model(&a.model, &loaded, single_omega(&a.omega)?)?;
    let result = run_algorithm(algorithm, &loaded.net, &spec, &params, &run_options(&a.model))?;
    report(&result);
    prepare_out(&a.model.out)?;
    let path = a.model.out.join(format!("{}.result", algorithm.name()));
    save_result(
        &path,
        &result,
        &loaded.net,
        &run_parameters(&a.input, &a.model, &params, &spec, algorithm),
    )?;
    println!(
        "{}: Q = {:.6}, communities = {}, result written to {}",
        algorithm,
        result.q_total,
        result.partition.n_communities(),
        path.display()
    );
    Ok(())
}

pub fn sweep(a: &SweepArgs) -> Result<()> {
    let algorithm: Algorithm = a.algorithm.parse()?;
    if a.omega.is_empty() {
        return Err(input_error("the omega grid is empty"));
    }
    let loaded = load(&a.input)?;
    let (params, base) = model(&a.model, &loaded, Some(a.omega[0]))?;
    for &w in &a.omega {
        CouplingSpec { omega: w, ..base.clone() }.validate(&loaded.net)?;
    }
    let options = run_options(&a.model);
    let points = pool()?.install(|| {
        a.omega
            .par_iter()
            .map(|&w| sweep_point(&loaded.net, &base, &params, w, algorithm, &options))
            .collect::<Result<Vec<_>>>()
    })?;
    prepare_out(&a.model.out)?;
    for (k, p) in points.iter().enumerate() {
        report(&p.result);
        let spec = CouplingSpec { omega: p.omega, ..base.clone() };
        let path = a.model.out.join(format!("sweep_{:02}.result", k + 1));
        save_result(
            &path,
            &p.result,
            &loaded.net,
            &run_parameters(&a.input, &a.model, &params, &spec, algorithm),
        )?;
    }
    write_table(&a.model.out, "sweep_labels", &label_table(&loaded.net, &points))?;
    let summary = sweep_summary(&points);
    write_table(&a.model.out, "sweep_summary", &summary)?;
    print!("{}", summary.to_text());
    Ok(())
}

pub fn compare(a: &CompareArgs) -> Result<()> {
    let algorithms = a
        .algorithm
        .iter()
        .map(|s| s.parse::<Algorithm>())
        .collect::<Result<Vec<_>>>()?;
    let rhos = if a.rho.is_empty() { default_rho_grid() } else { a.rho.clone() };
    if let Some(bad) = rhos.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(input_error(format!("coupling density {bad} outside [0, 1]")));
    }
    if a.repeats == 0 {
        return Err(input_error("--repeats must be at least 1"));
    }
    let loaded = load(&a.input)?;
    let (params, spec) = model(&a.model, &loaded, single_omega(&a.omega)?)?;
    let base = loaded.net.clone().with_couplings(CouplingSet::new())?;
    let options = run_options(&a.model);
    let mut tasks: Vec<(f64, usize, Algorithm)> = Vec::new();
    for &rho in &rhos {
        for r in 0..a.repeats {
            tasks.extend(algorithms.iter().map(|&alg| (rho, r, alg)));
        }
    }
    let cells: Vec<CompareCell> = pool()?.install(|| {
        tasks
            .par_iter()
            .map(|&(rho, r, alg)| compare_cell(&base, &spec, &params, alg, rho, r, a.model.seed, &options))
            .collect::<Result<Vec<_>>>()
    })?;
    let comparison = Comparison::from_cells(&algorithms, &rhos, &cells)?;
    prepare_out(&a.model.out)?;
    let runs = Table {
        header: ["algorithm", "rho", "repeat", "Q", "communities"].map(String::from).to_vec(),
        rows: cells
            .iter()
            .map(|c| {
                vec![
                    c.algorithm.name().to_string(),
                    c.rho.to_string(),
                    c.repeat.to_string(),
                    format!("{:.6}", c.q),
                    c.communities.to_string(),
                ]
            })
            .collect(),
    };
    write_table(&a.model.out, "compare_runs", &runs)?;
    let table = comparison.table();
    write_table(&a.model.out, "compare", &table)?;
    print!("{}", table.to_text());
    Ok(())
}

fn read_source(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn convert(a: &ConvertArgs) -> Result<()> {
    let written = match &a.grid_file {
        Some(grid_path) => {
            let edges = read_source(&a.input)?;
            let grid = read_source(grid_path)?;
            let couplings = a.couplings_file.as_deref().map(read_source).transpose()?;
            let (en, gn) = (a.input.display().to_string(), grid_path.display().to_string());
            let cn = a.couplings_file.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
            let grid = parse_aspect_grid(
                Source::new(&en, &edges),
                Source::new(&gn, &grid),
                couplings.as_deref().map(|t| Source::new(&cn, t)),
            )?;
            let (net, map) = flatten_aspect_grid(&grid)?;
            prepare_out(&a.out)?;
            let mut written = save_multiplex(&net, &a.out, &a.name)?;
            let loc = a.out.join(format!("{}.locations", a.name));
            write_atomic(&loc, &format_location_map(&map))?;
            written.push(loc);
            written
        }
        None => {
            let (net, _) = load_multiplex(&a.input, a.layers_file.as_deref(), a.couplings_file.as_deref(), a.nodes)?;
            prepare_out(&a.out)?;
            save_multiplex(&net, &a.out, &a.name)?
        }
    };
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}
