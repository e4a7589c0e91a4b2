//! Coupling magnitudes `e` and signed coupling strengths `C~ = e * (2C - 1)`.
//!
//! A present coupling rewards co-assigning a node with its copy (`+e`), an absent one
//! penalizes it (`-e`).

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::network::{LayerRef, MultilayerNetwork};

/// Symmetric non-negative closeness between flat layers, with a strictly positive maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct Closeness {
    matrix: DMatrix<f64>,
    max: f64,
}

impl Closeness {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::domain("closeness matrix must be square"));
        }
        if matrix.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain("closeness entries must be finite and non-negative"));
        }
        if matrix != matrix.transpose() {
            return Err(Error::domain("closeness matrix must be symmetric"));
        }
        let max = matrix.iter().cloned().fold(0.0, f64::max);
        if max <= 0.0 {
            return Err(Error::domain("closeness matrix must have a positive entry"));
        }
        Ok(Self { matrix, max })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingStrategy {
    /// `e = omega` for every layer pair.
    Uniform,
    /// `e = omega * M_ab / max M`.
    Closeness(Closeness),
    /// `e = omega` between consecutive layers of one aspect, 0 otherwise.
    Temporal,
    /// Per-copy magnitudes keyed by `(node, a, b)` with flat layers `a < b`; missing keys mean 0.
    Explicit(BTreeMap<(usize, usize, usize), f64>),
}

impl CouplingStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            CouplingStrategy::Uniform => "uniform",
            CouplingStrategy::Closeness(_) => "closeness",
            CouplingStrategy::Temporal => "temporal",
            CouplingStrategy::Explicit(_) => "explicit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpec {
    pub omega: f64,
    pub strategy: CouplingStrategy,
}

impl CouplingSpec {
    pub fn uniform(omega: f64) -> Self {
        Self {
            omega,
            strategy: CouplingStrategy::Uniform,
        }
    }

    pub fn temporal(omega: f64) -> Self {
        Self {
            omega,
            strategy: CouplingStrategy::Temporal,
        }
    }

    pub fn closeness(omega: f64, matrix: DMatrix<f64>) -> Result<Self> {
        Ok(Self {
            omega,
            strategy: CouplingStrategy::Closeness(Closeness::new(matrix)?),
        })
    }

    pub fn explicit(omega: f64, magnitudes: BTreeMap<(usize, usize, usize), f64>) -> Self {
        let magnitudes = magnitudes
            .into_iter()
            .map(|((node, a, b), e)| ((node, a.min(b), a.max(b)), e))
            .collect();
        Self {
            omega,
            strategy: CouplingStrategy::Explicit(magnitudes),
        }
    }

    pub fn validate(&self, net: &MultilayerNetwork) -> Result<()> {
        if !self.omega.is_finite() || self.omega < 0.0 {
            return Err(Error::domain(format!("coupling strength omega = {} must be >= 0", self.omega)));
        }
        match &self.strategy {
            CouplingStrategy::Closeness(c) if c.matrix.nrows() != net.n_layers() => Err(Error::domain(format!(
                "closeness matrix is {0}x{0} but the network has {1} layers",
                c.matrix.nrows(),
                net.n_layers()
            ))),
            CouplingStrategy::Explicit(map) => {
                for (&(node, a, b), &e) in map {
                    if node >= net.n_nodes() || b >= net.n_layers() || a == b {
                        return Err(Error::domain(format!(
                            "explicit coupling magnitude for invalid copy pair (node {}, layers {} and {})",
                            node + 1,
                            a + 1,
                            b + 1
                        )));
                    }
                    if !e.is_finite() || e < 0.0 {
                        return Err(Error::domain(format!("explicit coupling magnitude {e} must be >= 0")));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Coupling magnitude `e` for the copies of `node` in flat layers `a != b`.
    pub fn magnitude(&self, net: &MultilayerNetwork, node: usize, a: usize, b: usize) -> Result<f64> {
        if a == b {
            return Err(Error::domain("a coupling needs two distinct layers"));
        }
        match &self.strategy {
            CouplingStrategy::Uniform => Ok(self.omega),
            CouplingStrategy::Closeness(c) => {
                if a >= c.matrix.nrows() || b >= c.matrix.nrows() {
                    return Err(Error::domain(format!(
                        "closeness matrix has no entry for layers {} and {}",
                        a + 1,
                        b + 1
                    )));
                }
                Ok(self.omega * c.matrix[(a, b)] / c.max)
            }
            CouplingStrategy::Temporal => {
                let (ra, rb) = (net.layer_ref(a), net.layer_ref(b));
                if ra.aspect == rb.aspect && ra.layer.abs_diff(rb.layer) == 1 {
                    Ok(self.omega)
                } else {
                    Ok(0.0)
                }
            }
            CouplingStrategy::Explicit(map) => Ok(map.get(&(node, a.min(b), a.max(b))).copied().unwrap_or(0.0)),
        }
    }

    /// Signed strength `C~ = e * (2C - 1)` for flat layers `a != b`.
    pub fn strength(&self, net: &MultilayerNetwork, present: bool, node: usize, a: usize, b: usize) -> Result<f64> {
        let e = self.magnitude(net, node, a, b)?;
        Ok(if present { e } else { -e })
    }
}

/// Signed coupling strength between the copies of `node` in layers `a` and `b`.
pub fn coupling_strength(
    spec: &CouplingSpec,
    net: &MultilayerNetwork,
    present: bool,
    node: usize,
    a: LayerRef,
    b: LayerRef,
) -> Result<f64> {
    let fa = net.flat_layer(a)?;
    let fb = net.flat_layer(b)?;
    if node >= net.n_nodes() {
        return Err(Error::domain(format!("node {} outside 1..={}", node + 1, net.n_nodes())));
    }
    spec.strength(net, present, node, fa, fb)
}

/// Sum of the magnitudes of the present couplings incident to one node copy.
///
/// Reported as a diagnostic only; no score depends on it.
pub fn between_layer_strength(spec: &CouplingSpec, net: &MultilayerNetwork, node: usize, layer: usize) -> Result<f64> {
    let mut total = 0.0;
    for other in 0..net.n_layers() {
        if other != layer && net.couplings().contains(node, layer, other) {
            total += spec.magnitude(net, node, layer, other)?;
        }
    }
    Ok(total)
}
