//! Algebraically largest eigenpair of a real symmetric matrix.
//!
//! Matrices up to [`DENSE_LIMIT`] rows go through a full symmetric QR
//! decomposition; larger ones through Lanczos with full reorthogonalization.
//! Both paths return a unit eigenvector whose largest-magnitude component is
//! positive, so results are reproducible.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub const DENSE_LIMIT: usize = 64;

/// Default relative residual tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: DVector<f64>,
}

impl Eigenpair {
    /// `||D u - beta u||`.
    pub fn residual(&self, d: &DMatrix<f64>) -> f64 {
        (d * &self.vector - &self.vector * self.value).norm()
    }
}

fn check_square(d: &DMatrix<f64>) -> Result<()> {
    if !d.is_square() || d.nrows() == 0 {
        return Err(Error::domain("eigensolver needs a non-empty square matrix"));
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("eigensolver input has non-finite entries"));
    }
    Ok(())
}

/// Flips `v` so that its first largest-magnitude entry is positive.
fn orient(mut v: DVector<f64>) -> DVector<f64> {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
    v
}

/// Leading eigenpair, with `||D u - beta u|| <= tol * ||D||_F`.
pub fn leading_eigenpair(d: &DMatrix<f64>, tol: f64) -> Result<Eigenpair> {
    check_square(d)?;
    if d.nrows() <= DENSE_LIMIT {
        dense_leading(d, tol)
    } else {
        lanczos_leading(d, tol)
    }
}

pub fn dense_leading(d: &DMatrix<f64>, tol: f64) -> Result<Eigenpair> {
    check_square(d)?;
    let eig = SymmetricEigen::new(d.clone());
    let mut top = 0;
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v > eig.eigenvalues[top] {
            top = i;
        }
    }
    let pair = Eigenpair {
        value: eig.eigenvalues[top],
        vector: orient(eig.eigenvectors.column(top).into_owned()),
    };
    let residual = pair.residual(d);
    if residual > tol.max(1e-12) * d.norm() {
        return Err(Error::NoConvergence { iterations: 1, residual });
    }
    Ok(pair)
}

/// SplitMix64, used for reproducible start and restart vectors.
struct SplitMix(u64);

impl SplitMix {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    fn vector(&mut self, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.next())
    }
}

fn orthogonalize(w: &mut DVector<f64>, basis: &[DVector<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(w);
            w.axpy(-c, q, 1.0);
        }
    }
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t
}

/// Lanczos iteration with full reorthogonalization.
///
/// The start vector is a fixed SplitMix64 sequence. On breakdown the Krylov basis is
/// extended with a fresh vector orthogonal to it, so the iteration ends at the latest
/// once the basis spans the whole space.
pub fn lanczos_leading(d: &DMatrix<f64>, tol: f64) -> Result<Eigenpair> {
    check_square(d)?;
    let n = d.nrows();
    let norm = d.norm();
    if norm == 0.0 {
        let mut v = DVector::zeros(n);
        v[0] = 1.0;
        return Ok(Eigenpair { value: 0.0, vector: v });
    }
    let target = tol.max(1e-14) * norm;
    let breakdown = 1e-12 * norm;
    let mut rng = SplitMix(0x5EED_1A2C_05EA_u64);

    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut q = rng.vector(n);
    q /= q.norm();
    let mut best_residual = f64::INFINITY;
    let mut next_check = 8.min(n);

    loop {
        let mut w = d * &q;
        let a = q.dot(&w);
        basis.push(q);
        alpha.push(a);
        orthogonalize(&mut w, &basis);
        let b = w.norm();
        let k = basis.len();
        let exhausted = k == n;
        let broke = b <= breakdown;

        if k >= next_check || exhausted || broke {
            next_check = k + 8.max(k / 4);
            let eig = SymmetricEigen::new(tridiagonal(&alpha, &beta));
            let mut top = 0;
            for (i, &v) in eig.eigenvalues.iter().enumerate() {
                if v > eig.eigenvalues[top] {
                    top = i;
                }
            }
            let y = eig.eigenvectors.column(top);
            // residual estimate |b * y_k| is only valid inside an unbroken Krylov block
            let estimate = (b * y[k - 1]).abs();
            if estimate <= target || exhausted || broke {
                let mut u = DVector::zeros(n);
                for (coef, v) in y.iter().zip(&basis) {
                    u.axpy(*coef, v, 1.0);
                }
                u /= u.norm();
                let pair = Eigenpair {
                    value: eig.eigenvalues[top],
                    vector: orient(u),
                };
                let residual = pair.residual(d);
                best_residual = best_residual.min(residual);
                if residual <= target {
                    return Ok(pair);
                }
                if exhausted {
                    return Err(Error::NoConvergence {
                        iterations: k,
                        residual: best_residual,
                    });
                }
            }
        }

        if broke {
            // invariant subspace found; continue from a fresh direction
            let mut fresh = rng.vector(n);
            orthogonalize(&mut fresh, &basis);
            let f = fresh.norm();
            if f <= breakdown {
                return Err(Error::NoConvergence {
                    iterations: k,
                    residual: best_residual,
                });
            }
            beta.push(0.0);
            q = fresh / f;
        } else {
            beta.push(b);
            q = w / b;
        }
    }
}
