//! Community detection in multilayer networks with multiple aspects.
//!
//! Networks are held in aspect-layer form ([`network`]). The multilayer modularity and
//! its supra-modularity matrix live in [`modularity`], coupling strategies in
//! [`coupling`]. [`mspec`] maximizes modularity by recursive spectral bisection of the
//! supra-modularity matrix; [`baselines`] holds the Louvain and single-layer spectral
//! comparators, and [`benchmark`] the parameter sweep and comparison harness.

pub mod baselines;
pub mod benchmark;
pub mod coupling;
pub mod datasets;
pub mod eigen;
pub mod error;
pub mod io;
pub mod modularity;
pub mod mspec;
pub mod network;

pub use coupling::{coupling_strength, CouplingSpec, CouplingStrategy};
pub use error::{Error, Result};
pub use modularity::{
    build_modularity_matrix, hamiltonian, modularity, modularity_signed, ModularityParams, Normalization, Partition,
    SupraModularityMatrix,
};
pub use mspec::{bisect, mspec_detect, soft_labels, subdivision_matrix, DetectionResult, MspecOptions};
pub use network::{Cell, CouplingSet, LayerAdjacency, LayerRef, MultilayerNetwork};
