//! Classical multidimensional scaling.
//!
//! cMDS double-centers the squared dissimilarities, `X = -V D V / 2`, and
//! embeds with the top `r` eigenpairs of `X`, keeping only strictly positive
//! eigenvalues. Rows for missing positive eigenvalues are zero so the
//! embedding always has exactly `r` rows.

use crate::dissim::{require_symmetric, Embedding, SquaredDissimilarityMatrix};
use crate::error::{Error, Result};
use crate::linalg::{
    apply_q_left, double_center, edm_of_embedding, symmetric_eigen,
};
use crate::scalar::{positive_threshold, Real};
use nalgebra::{DMatrix, DVector};

/// Output of cMDS for one target dimension.
#[derive(Debug, Clone)]
pub struct CmdsResult<T: Real> {
    /// `r x n` coordinates.
    pub embedding: Embedding<T>,
    /// `Y_r = X^T X`, positive semidefinite of rank `<= r`.
    pub gram: DMatrix<T>,
    /// Squared distances of the embedded points.
    pub d_cmds: SquaredDissimilarityMatrix<T>,
    /// Number of strictly positive eigenvalues actually used.
    pub kept_count: usize,
}

impl<T: Real> CmdsResult<T> {
    pub fn dim(&self) -> usize {
        self.embedding.dim()
    }

    /// `||D_cmds - D||_F^2` against an arbitrary reference.
    pub fn sstress(&self, reference: &DMatrix<T>) -> T {
        self.d_cmds.squared_distance(reference)
    }
}

/// cMDS of a squared-dissimilarity matrix into `r` dimensions, `1 <= r <= n`.
pub fn cmds<T: Real>(d: &SquaredDissimilarityMatrix<T>, r: usize) -> Result<CmdsResult<T>> {
    cmds_symmetric(d.matrix(), r)
}

/// cMDS of any symmetric matrix (the input need not be hollow, e.g. the
/// lower-bound matrix `D_l`).
pub fn cmds_symmetric<T: Real>(d: &DMatrix<T>, r: usize) -> Result<CmdsResult<T>> {
    let d = require_symmetric(d)?;
    let n = d.nrows();
    check_dim(n, r)?;

    let centered = double_center(&d);
    // Positivity of mu = -lambda/2 uses the same threshold as the spectrum
    // of D_hat, whose norm equals ||V D V||_F.
    let mu_threshold = positive_threshold(centered.norm()) * T::lit(0.5);
    let x = centered * T::lit(-0.5);
    let spec = symmetric_eigen(&x)?;

    let mut coords = DMatrix::zeros(r, n);
    let mut kept = 0;
    for k in (0..n).rev() {
        if kept == r {
            break;
        }
        let mu = spec.eigenvalues[k];
        if mu <= mu_threshold {
            break;
        }
        let scale = mu.sqrt();
        for j in 0..n {
            coords[(kept, j)] = scale * spec.eigenvectors[(j, k)];
        }
        kept += 1;
    }
    finish(coords, kept)
}

/// cMDS computed from an eigendecomposition of a `D_hat` block, using
/// `-V A V / 2 = Q blockdiag(-A_hat / 2, 0) Q`.
///
/// `eigenvalues` are the (ascending) eigenvalues of the `D_hat` block and
/// `eigenvectors` its orthonormal eigenvectors. Entry `i < r` is embedded
/// when its eigenvalue is below `-threshold`.
pub fn cmds_from_hat_spectrum<T: Real>(
    eigenvalues: &DVector<T>,
    eigenvectors: &DMatrix<T>,
    r: usize,
    threshold: T,
) -> Result<CmdsResult<T>> {
    let n = eigenvalues.len() + 1;
    check_dim(n, r)?;
    let padded = pad_columns(eigenvectors);
    let lifted = apply_q_left(&padded);
    let mut coords = DMatrix::zeros(r, n);
    let mut kept = 0;
    for i in 0..eigenvalues.len() {
        if kept == r {
            break;
        }
        let lam = eigenvalues[i];
        if lam >= -threshold {
            break;
        }
        let scale = (-lam * T::lit(0.5)).sqrt();
        for j in 0..n {
            coords[(kept, j)] = scale * lifted[(j, i)];
        }
        kept += 1;
    }
    finish(coords, kept)
}

fn pad_columns<T: Real>(u: &DMatrix<T>) -> DMatrix<T> {
    let mut out = DMatrix::zeros(u.nrows() + 1, u.ncols());
    out.view_mut((0, 0), (u.nrows(), u.ncols())).copy_from(u);
    out
}

fn finish<T: Real>(coords: DMatrix<T>, kept: usize) -> Result<CmdsResult<T>> {
    let gram = coords.transpose() * &coords;
    let embedding = Embedding::new(coords)?;
    let d_cmds = edm_of_embedding(&embedding)?;
    Ok(CmdsResult {
        embedding,
        gram,
        d_cmds,
        kept_count: kept,
    })
}

fn check_dim(n: usize, r: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!("cMDS needs n >= 2, got {n}")));
    }
    if r < 1 || r > n {
        return Err(Error::InvalidDimension(format!(
            "target dimension {r} outside [1, {n}]"
        )));
    }
    Ok(())
}

/// STRAIN of a cMDS result: `||Y_r - (-V D V / 2)||_F^2`.
pub fn strain_value<T: Real>(d: &DMatrix<T>, result: &CmdsResult<T>) -> T {
    let target = double_center(d) * T::lit(-0.5);
    (&result.gram - target).norm_squared()
}
