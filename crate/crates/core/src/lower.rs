//! Exact projection onto `kappa(r)`: symmetric, trace-zero matrices whose
//! `D_hat` block is negative semidefinite with rank at most `r`.
//!
//! Conjugating by `S = Q blockdiag(U, 1)` turns the projection into a
//! separable problem on the diagonal vector `c`:
//!
//! ```text
//! minimize   sum_{i<n} (c_i - lambda_i)^2 + (c_n - xi)^2
//! subject to sum c = 0,  c_i <= 0 (i < n),  c_j = 0 (r < j < n)
//! ```
//!
//! which is solved exactly by a water-filling pass. The projection `D_l` is a
//! certificate: no rank-`r` EDM is closer to `D` than `D_l`.
//!
//! The water-filling counter starts at `candidates + 1`: `c_n` is
//! unconstrained in sign and always absorbs its share of the residual mass,
//! even when `xi(D) = 0`. Entries are visited from the least negative
//! eigenvalue down, so clipped entries form a prefix of the visit order and
//! the level only rises.

use crate::cmds::{cmds_from_hat_spectrum, CmdsResult};
use crate::dissim::{require_symmetric, SquaredDissimilarityMatrix};
use crate::error::{Error, Result};
use crate::linalg::{q_decompose, q_reassemble, symmetric_eigen, QDecomposition, SpectralData};
use crate::scalar::Real;
use nalgebra::{DMatrix, DVector};

/// Result of projecting onto `kappa(r)`.
#[derive(Debug, Clone)]
pub struct KappaProjection<T: Real> {
    pub r: usize,
    /// `c_1..c_{n-1}` in the eigenbasis of `D_hat` (ascending eigenvalue
    /// order) followed by the corrected `c_n`.
    pub c: DVector<T>,
    /// The projection `D_l`. Trace zero but generally not hollow.
    pub d_l: DMatrix<T>,
    /// `||D_l - D||_F^2`.
    pub objective: T,
    /// Nonzero entries among `c_1..c_{n-1}` at the end.
    pub active_count: usize,
    /// Final water level (the multiplier of the trace constraint).
    pub water_level: T,
    /// Eigenpairs of the input's `D_hat` block, reused downstream.
    pub spectrum: SpectralData<T>,
    /// `f` block of the input, carried unchanged into `D_l`.
    pub f: DVector<T>,
    /// `xi` of the input.
    pub xi: T,
}

impl<T: Real> KappaProjection<T> {
    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// The `D_hat` block of `D_l`, i.e. `U diag(c_1..c_{n-1}) U^T`.
    pub fn d_hat(&self) -> DMatrix<T> {
        self.spectrum.reconstruct_with(&self.eigen_coefficients())
    }

    /// `c_1..c_{n-1}`.
    pub fn eigen_coefficients(&self) -> DVector<T> {
        self.c.rows(0, self.c.len() - 1).into_owned()
    }
}

/// Water-filling solution of the diagonal problem.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFill<T: Real> {
    pub c: Vec<T>,
    pub level: T,
    pub active_count: usize,
}

/// Solves the diagonal problem for ascending `lambda`, corner entry `xi` and
/// rank cap `r`.
///
/// Entries past `r` are fixed at zero and their mass is handed to the
/// remaining ones. Every entry up to `r` starts as a candidate; visiting them
/// from the largest eigenvalue down, an entry that would turn positive at the
/// current level is clipped to zero and the level recomputed. For trace-zero
/// input the level is positive whenever a positive eigenvalue is present, so
/// positive eigenvalues are always clipped, exactly as in the two-pass
/// formulation that zeroes them up front; for other inputs a positive
/// eigenvalue may legitimately be pulled below zero.
pub fn water_fill<T: Real>(lambda: &[T], xi: T, r: usize) -> WaterFill<T> {
    let m = lambda.len();
    let mut c: Vec<T> = lambda.to_vec();
    c.push(xi);
    let candidates = r.min(m);
    for x in c.iter_mut().take(m).skip(candidates) {
        *x = T::zero();
    }

    // Mass needed to restore sum(c) = 0.
    let mut mass = -c.iter().fold(T::zero(), |s, &x| s + x);
    let mut slots = candidates + 1;
    let mut level = mass / T::count(slots);
    for i in (0..candidates).rev() {
        if c[i] + level <= T::zero() {
            c[i] += level;
            slots -= 1;
            mass -= level;
        } else {
            slots -= 1;
            mass += c[i];
            c[i] = T::zero();
            level = mass / T::count(slots);
        }
    }
    c[m] += level;

    let active_count = c[..m].iter().filter(|&&x| x != T::zero()).count();
    WaterFill {
        c,
        level,
        active_count,
    }
}

/// Projects a hollow matrix onto `kappa(r)`, `1 <= r <= n - 1`.
pub fn project_onto_kappa<T: Real>(
    d: &SquaredDissimilarityMatrix<T>,
    r: usize,
) -> Result<KappaProjection<T>> {
    project_symmetric_onto_kappa(d.matrix(), r)
}

/// Projects any symmetric matrix onto `kappa(r)`. The trace-zero constraint
/// is enforced against the actual trace of the input, so hollowness is not
/// required.
pub fn project_symmetric_onto_kappa<T: Real>(
    a: &DMatrix<T>,
    r: usize,
) -> Result<KappaProjection<T>> {
    let a = require_symmetric(a)?;
    let qd = q_decompose(&a)?;
    check_rank(qd.n(), r)?;
    let spectrum = symmetric_eigen(&qd.d_hat)?;
    project_from_parts(&qd, spectrum, r)
}

/// Projection from a precomputed q-decomposition and spectrum of its block.
pub fn project_from_parts<T: Real>(
    qd: &QDecomposition<T>,
    spectrum: SpectralData<T>,
    r: usize,
) -> Result<KappaProjection<T>> {
    let n = qd.n();
    check_rank(n, r)?;
    if spectrum.dim() != n - 1 {
        return Err(Error::DimensionMismatch(format!(
            "spectrum has {} eigenvalues, expected {}",
            spectrum.dim(),
            n - 1
        )));
    }
    let fill = water_fill(spectrum.eigenvalues.as_slice(), qd.xi, r);
    let c = DVector::from_vec(fill.c);

    let mut objective = (c[n - 1] - qd.xi).powi(2);
    for i in 0..n - 1 {
        objective += (c[i] - spectrum.eigenvalues[i]).powi(2);
    }

    let d_hat_l = spectrum.reconstruct_with(&c.rows(0, n - 1).into_owned());
    let d_l = q_reassemble(&QDecomposition {
        d_hat: d_hat_l,
        f: qd.f.clone(),
        xi: c[n - 1],
    });
    Ok(KappaProjection {
        r,
        c,
        d_l,
        objective,
        active_count: fill.active_count,
        water_level: fill.level,
        spectrum,
        f: qd.f.clone(),
        xi: qd.xi,
    })
}

fn check_rank(n: usize, r: usize) -> Result<()> {
    if r < 1 || r > n - 1 {
        return Err(Error::InvalidDimension(format!(
            "rank cap {r} outside [1, {}]",
            n - 1
        )));
    }
    Ok(())
}

/// Residuals of the optimality conditions for a projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktCertificate<T: Real> {
    /// Smallest inequality multiplier (must be `>= 0`).
    pub min_multiplier: T,
    /// Largest `|c_i - lambda_i + mu_i - C|` over `i <= r` and
    /// `|c_n - xi - C|`.
    pub max_stationarity: T,
    /// Largest `|mu_i c_i|`.
    pub max_complementarity: T,
    /// Largest violation of `c_i <= 0` for `i < n`.
    pub max_primal_violation: T,
    /// `|sum c|`.
    pub trace_residual: T,
}

impl<T: Real> KktCertificate<T> {
    /// Whether every residual is within `tol`.
    pub fn holds(&self, tol: T) -> bool {
        self.min_multiplier >= -tol
            && self.max_stationarity <= tol
            && self.max_complementarity <= tol
            && self.max_primal_violation <= tol
            && self.trace_residual <= tol
    }
}

/// Builds multipliers `mu_i = lambda_i + C` for zeroed entries with `i <= r`
/// (zero otherwise), `C` the water level, and reports the residuals.
pub fn kkt_certificate<T: Real>(proj: &KappaProjection<T>) -> KktCertificate<T> {
    let n = proj.n();
    let lambda = &proj.spectrum.eigenvalues;
    let level = proj.water_level;
    let mut min_multiplier = T::zero();
    let mut max_stationarity = (proj.c[n - 1] - proj.xi - level).abs();
    let mut max_complementarity = T::zero();
    let mut max_primal_violation = T::zero();
    for i in 0..n - 1 {
        let ci = proj.c[i];
        max_primal_violation = max_primal_violation.max(ci);
        if i >= proj.r {
            max_primal_violation = max_primal_violation.max(ci.abs());
            continue;
        }
        let mu = if ci == T::zero() {
            lambda[i] + level
        } else {
            T::zero()
        };
        min_multiplier = min_multiplier.min(mu);
        max_stationarity = max_stationarity.max((ci - lambda[i] + mu - level).abs());
        max_complementarity = max_complementarity.max((mu * ci).abs());
    }
    let trace_residual = proj.c.iter().fold(T::zero(), |s, &x| s + x).abs();
    KktCertificate {
        min_multiplier,
        max_stationarity,
        max_complementarity,
        max_primal_violation,
        trace_residual,
    }
}

/// Lower+cMDS: project onto `kappa(r)` and embed `D_l` with cMDS.
///
/// `D_hat_l` is negative semidefinite of rank `<= r` with known eigenvectors,
/// so the embedding is read off the projection without a second
/// eigendecomposition.
pub fn lower_cmds<T: Real>(
    d: &SquaredDissimilarityMatrix<T>,
    r: usize,
) -> Result<(CmdsResult<T>, KappaProjection<T>)> {
    let proj = project_onto_kappa(d, r)?;
    let embedded = embed_projection(&proj, r)?;
    Ok((embedded, proj))
}

/// cMDS of `D_l` into `r` dimensions using the projection's eigenbasis.
pub fn embed_projection<T: Real>(proj: &KappaProjection<T>, r: usize) -> Result<CmdsResult<T>> {
    let n = proj.n();
    if r < 1 || r > n {
        return Err(Error::InvalidDimension(format!(
            "target dimension {r} outside [1, {n}]"
        )));
    }
    // Sort c ascending to keep the most negative entries first, matching
    // cMDS order on -D_hat_l / 2.
    let coeffs = proj.eigen_coefficients();
    let mut order: Vec<usize> = (0..n - 1).collect();
    order.sort_by(|&i, &j| coeffs[i].partial_cmp(&coeffs[j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = DVector::from_fn(n - 1, |k, _| coeffs[order[k]]);
    let vectors = DMatrix::from_fn(n - 1, n - 1, |i, k| proj.spectrum.eigenvectors[(i, order[k])]);
    cmds_from_hat_spectrum(&values, &vectors, r, proj.spectrum.positive_threshold())
}

/// `C1 + C2^2 / (r + 1)`, a lower bound on `||D_l - D||_F^2`.
pub fn lower_bound_value<T: Real>(d: &SquaredDissimilarityMatrix<T>, r: usize) -> Result<T> {
    Ok(crate::decomp::decompose_error(d, r)?.lower_bound)
}
