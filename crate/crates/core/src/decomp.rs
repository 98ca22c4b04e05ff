//! Closed-form decomposition of the cMDS SSTRESS error.
//!
//! With `lambda_1 <= ... <= lambda_{n-1}` the eigenvalues of `D_hat`, let the
//! masked vector keep the eigenvalues cMDS throws away:
//! `l_i = lambda_i` if `lambda_i > 0` or `i > r`, else `0`, and `l_n = 0`.
//! With `S = Q blockdiag(U, 1)`:
//!
//! ```text
//! C1 = sum l_i^2
//! C2 = -sum l_i
//! C3 = (n ||(S o S) l||^2 - C2^2) / 2
//! ||D_cmds - D||_F^2 = C1 + C2^2 + C3
//! ```
//!
//! `C1` is four times the STRAIN, `C2^2` the squared change of the corner
//! entry `xi`, and `C3` twice the squared change of `f`. `C2` is
//! nonincreasing in `r`, so once it turns negative `C2^2` grows and the cMDS
//! error increases with the embedding dimension.

use crate::cmds::cmds_from_hat_spectrum;
use crate::dissim::SquaredDissimilarityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{apply_q_left, q_decompose, symmetric_eigen, QDecomposition, SpectralData};
use crate::lower::{embed_projection, project_from_parts, KappaProjection};
use crate::scalar::Real;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Eigenvalues of `D_hat` that cMDS discards at dimension `r`, padded with a
/// trailing zero to length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedSpectrum<T: Real> {
    pub lam_bold: DVector<T>,
    pub r: usize,
    pub threshold: T,
}

/// Masks a spectrum of an `(n-1) x (n-1)` block for dimension `1 <= r <= n`.
pub fn masked_spectrum<T: Real>(spec: &SpectralData<T>, r: usize) -> Result<MaskedSpectrum<T>> {
    let m = spec.dim();
    check_range(m + 1, r)?;
    let threshold = spec.positive_threshold();
    let mut lam_bold = DVector::zeros(m + 1);
    for i in 0..m {
        let l = spec.eigenvalues[i];
        if l > threshold || i >= r {
            lam_bold[i] = l;
        }
    }
    Ok(MaskedSpectrum {
        lam_bold,
        r,
        threshold,
    })
}

/// `S = Q blockdiag(U, 1)` for the eigenvectors `U` of `D_hat`.
pub fn build_s<T: Real>(spec: &SpectralData<T>, n: usize) -> Result<DMatrix<T>> {
    if spec.dim() + 1 != n {
        return Err(Error::DimensionMismatch(format!(
            "spectrum of size {} does not belong to n = {n}",
            spec.dim()
        )));
    }
    let m = n - 1;
    let mut r = DMatrix::zeros(n, n);
    r.view_mut((0, 0), (m, m)).copy_from(&spec.eigenvectors);
    r[(m, m)] = T::one();
    Ok(apply_q_left(&r))
}

/// The error terms for one embedding dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorDecomposition<T: Real> {
    pub r: usize,
    pub c1: T,
    pub c2: T,
    pub c3: T,
    /// `C1 + C2^2 + C3`, the predicted `||D_cmds - D||_F^2`.
    pub total: T,
    /// `C1 + C2^2 / (r + 1)`, a lower bound on `||D_l - D||_F^2`.
    pub lower_bound: T,
}

impl<T: Real> ErrorDecomposition<T> {
    pub fn c2_squared(&self) -> T {
        self.c2 * self.c2
    }
}

/// Hollow-corner diagnostic for the Lower+cMDS embedding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C4Report<T: Real> {
    /// `(n ||(S o S) delta||^2 - C2^2 / (r + 1)) / 2` with
    /// `delta = (lambda - c, 0)` the deviation of the projection in the
    /// eigenbasis.
    pub formula: T,
    /// `(n ||(S o S) delta||^2 - C^2) / 2` with `C` the final water level;
    /// equals `measured` exactly.
    pub exact: T,
    /// `(n ||(S o S) delta||^2 - C2^2 / (r + 1)^2) / 2`, an upper bound on
    /// `measured`.
    pub bound: T,
    /// `2 ||f(D) - f(D_lcmds)||^2`.
    pub measured: T,
}

/// Shared state for evaluating the decomposition at many dimensions: one
/// eigendecomposition of `D_hat` and the entrywise square of `S`.
#[derive(Debug, Clone)]
pub struct ErrorAnalysis<T: Real> {
    n: usize,
    qd: QDecomposition<T>,
    spectrum: SpectralData<T>,
    s_squared: DMatrix<T>,
}

impl<T: Real> ErrorAnalysis<T> {
    pub fn new(d: &SquaredDissimilarityMatrix<T>) -> Result<Self> {
        let qd = q_decompose(d.matrix())?;
        let spectrum = symmetric_eigen(&qd.d_hat)?;
        Self::from_parts(qd, spectrum)
    }

    pub fn from_parts(qd: QDecomposition<T>, spectrum: SpectralData<T>) -> Result<Self> {
        let n = qd.n();
        let s = build_s(&spectrum, n)?;
        let s_squared = s.component_mul(&s);
        Ok(Self {
            n,
            qd,
            spectrum,
            s_squared,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spectrum(&self) -> &SpectralData<T> {
        &self.spectrum
    }

    pub fn q_decomposition(&self) -> &QDecomposition<T> {
        &self.qd
    }

    /// `n ||(S o S) v||^2`.
    fn hadamard_energy(&self, v: &DVector<T>) -> T {
        (&self.s_squared * v).norm_squared() * T::count(self.n)
    }

    /// Decomposition at dimension `1 <= r <= n`.
    pub fn at(&self, r: usize) -> Result<ErrorDecomposition<T>> {
        let masked = masked_spectrum(&self.spectrum, r)?;
        let l = &masked.lam_bold;
        let c1 = l.norm_squared();
        let c2 = -l.sum();
        let c2_sq = c2 * c2;
        let c3 = (self.hadamard_energy(l) - c2_sq) * T::lit(0.5);
        Ok(ErrorDecomposition {
            r,
            c1,
            c2,
            c3,
            total: c1 + c2_sq + c3,
            lower_bound: c1 + c2_sq / T::count(r + 1),
        })
    }

    /// One decomposition per `r` in `r_min..=r_max`.
    pub fn sweep(&self, r_min: usize, r_max: usize) -> Result<Vec<ErrorDecomposition<T>>> {
        check_sweep(self.n, r_min, r_max)?;
        (r_min..=r_max).into_par_iter().map(|r| self.at(r)).collect()
    }

    /// Projection onto `kappa(r)` reusing this analysis' spectrum. Ranks
    /// above `n - 1` use `n - 1`, which describes the same set.
    pub fn projection(&self, r: usize) -> Result<KappaProjection<T>> {
        check_range(self.n, r)?;
        project_from_parts(&self.qd, self.spectrum.clone(), r.min(self.n - 1))
    }

    /// The hollow-corner diagnostic for the projection at `r`.
    pub fn c4(&self, proj: &KappaProjection<T>) -> Result<C4Report<T>> {
        let r = proj.r;
        let decomposition = self.at(r)?;
        let n = self.n;
        let mut delta = DVector::zeros(n);
        for i in 0..n - 1 {
            delta[i] = self.spectrum.eigenvalues[i] - proj.c[i];
        }
        let energy = self.hadamard_energy(&delta);
        let half = T::lit(0.5);
        let c2_sq = decomposition.c2_squared();
        let rp1 = T::count(r + 1);

        let embedded = embed_projection(proj, r)?;
        let lcmds = q_decompose(embedded.d_cmds.matrix())?;
        let measured = (&self.qd.f - &lcmds.f).norm_squared() * T::lit(2.0);
        Ok(C4Report {
            formula: (energy - c2_sq / rp1) * half,
            exact: (energy - proj.water_level * proj.water_level) * half,
            bound: (energy - c2_sq / (rp1 * rp1)) * half,
            measured,
        })
    }
}

/// Decomposes `||D_cmds - D||_F^2` for a hollow `D` at dimension `r`.
pub fn decompose_error<T: Real>(
    d: &SquaredDissimilarityMatrix<T>,
    r: usize,
) -> Result<ErrorDecomposition<T>> {
    check_range(d.n(), r)?;
    ErrorAnalysis::new(d)?.at(r)
}

/// Decompositions for `r_min..=r_max`, sharing one eigendecomposition.
pub fn sweep<T: Real>(
    d: &SquaredDissimilarityMatrix<T>,
    r_min: usize,
    r_max: usize,
) -> Result<Vec<ErrorDecomposition<T>>> {
    check_sweep(d.n(), r_min, r_max)?;
    ErrorAnalysis::new(d)?.sweep(r_min, r_max)
}

/// C4 diagnostic for `D` at dimension `r` using a given projection.
pub fn c4_quantity<T: Real>(
    d: &SquaredDissimilarityMatrix<T>,
    r: usize,
    proj: &KappaProjection<T>,
) -> Result<C4Report<T>> {
    if proj.n() != d.n() || proj.r != r.min(d.n() - 1) {
        return Err(Error::DimensionMismatch(format!(
            "projection is for n = {}, r = {}; asked for n = {}, r = {r}",
            proj.n(),
            proj.r,
            d.n()
        )));
    }
    ErrorAnalysis::new(d)?.c4(proj)
}

/// One line of the decomposition table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionRow<T: Real> {
    pub decomposition: ErrorDecomposition<T>,
    /// `||D_cmds - D||_F^2` from an independent cMDS run.
    pub total_measured: T,
    pub c4: C4Report<T>,
}

/// Predicted and measured error terms for `r_min..=r_max`.
///
/// The measured column runs cMDS through double centering, independently of
/// the spectral route used for the prediction.
pub fn decomposition_table<T: Real>(
    d: &SquaredDissimilarityMatrix<T>,
    r_min: usize,
    r_max: usize,
) -> Result<Vec<DecompositionRow<T>>> {
    check_sweep(d.n(), r_min, r_max)?;
    let analysis = ErrorAnalysis::new(d)?;
    (r_min..=r_max)
        .into_par_iter()
        .map(|r| {
            let decomposition = analysis.at(r)?;
            let total_measured = cmds_from_analysis(&analysis, r)?.sstress(d.matrix());
            let proj = analysis.projection(r)?;
            let c4 = analysis.c4(&proj)?;
            Ok(DecompositionRow {
                decomposition,
                total_measured,
                c4,
            })
        })
        .collect()
}

/// First `r` whose predicted total strictly exceeds the previous one.
pub fn first_increase<T: Real>(rows: &[ErrorDecomposition<T>], tol: T) -> Option<usize> {
    rows.windows(2)
        .find(|w| w[1].total > w[0].total + tol)
        .map(|w| w[1].r)
}

/// cMDS results at each `r` computed from the shared spectrum (no further
/// eigendecompositions).
pub fn cmds_from_analysis<T: Real>(
    analysis: &ErrorAnalysis<T>,
    r: usize,
) -> Result<crate::cmds::CmdsResult<T>> {
    let spec = analysis.spectrum();
    cmds_from_hat_spectrum(
        &spec.eigenvalues,
        &spec.eigenvectors,
        r,
        spec.positive_threshold(),
    )
}

fn check_range(n: usize, r: usize) -> Result<()> {
    if r < 1 || r > n {
        return Err(Error::InvalidDimension(format!(
            "dimension {r} outside [1, {n}]"
        )));
    }
    Ok(())
}

fn check_sweep(n: usize, r_min: usize, r_max: usize) -> Result<()> {
    if r_min < 1 || r_min > r_max || r_max > n {
        return Err(Error::InvalidDimension(format!(
            "sweep range {r_min}..={r_max} must satisfy 1 <= r_min <= r_max <= {n}"
        )));
    }
    Ok(())
}
