//! Bundled benchmark data: Zachary's karate club and its multilayer replicas.

use crate::error::{Error, Result};
use crate::io::{self, Source};
use crate::modularity::ModularityParams;
use crate::network::{full_couplings, CouplingSet, LayerAdjacency, MultilayerNetwork};

const KARATE_EDGES: &str = include_str!("../data/karate.edges");
const KARATE_LAYERS: &str = include_str!("../data/karate.layers");
const KARATE_TRUTH: &str = include_str!("../data/karate.truth");

pub const KARATE_NODES: usize = 34;

/// The karate club as a single-layer network.
pub fn karate() -> MultilayerNetwork {
    io::parse_multiplex(
        Source::new("karate.edges", KARATE_EDGES),
        Some(Source::new("karate.layers", KARATE_LAYERS)),
        Some(KARATE_NODES),
    )
        .expect("bundled karate data parses")
}

/// Two-faction labels (0 = instructor, 1 = administrator), indexed by 0-based node.
pub fn karate_truth() -> Vec<usize> {
    io::parse_labels(Source::new("karate.truth", KARATE_TRUTH), KARATE_NODES).expect("bundled karate labels parse")
}

/// `gammas.len()` identical karate layers in one aspect with every node-copy coupling present.
pub fn build_karate_replica(gammas: &[f64]) -> Result<(MultilayerNetwork, ModularityParams)> {
    if gammas.is_empty() {
        return Err(Error::domain("a replica needs at least one layer"));
    }
    let layer: LayerAdjacency = karate().layer(0).clone();
    let net = MultilayerNetwork::single_aspect(KARATE_NODES, vec![layer; gammas.len()], CouplingSet::new())?;
    let couplings = full_couplings(&net);
    let net = net.with_couplings(couplings)?;
    let params = ModularityParams::new(gammas.len()).with_gamma(gammas.to_vec());
    params.validate(&net)?;
    Ok((net, params))
}

/// Resolutions `0.1, 0.2, ..., 1.0` of the ten-layer replica.
pub fn replica_gammas(layers: usize) -> Vec<f64> {
    (1..=layers).map(|s| s as f64 / layers as f64).collect()
}
