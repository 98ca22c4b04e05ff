//! Householder and centering conjugations, the block decomposition of `QAQ`,
//! Gram/EDM conversions and the symmetric eigensolver contract.
//!
//! `Q` is the Householder reflector `I - 2 v v^T / (v^T v)` with
//! `v = [1, ..., 1, 1 + sqrt(n)]`. Conjugating a symmetric `A` by `Q` gives
//!
//! ```text
//! Q A Q = [ A_hat  f  ]
//!         [ f^T    xi ]
//! ```
//!
//! and `V A V = Q blockdiag(A_hat, 0) Q` for the centering matrix `V`. A
//! hollow symmetric `D` is a Euclidean distance matrix of dimension `<= r`
//! iff `D_hat` is negative semidefinite with rank `<= r`.

use crate::dissim::{check_finite, require_symmetric, Embedding, SquaredDissimilarityMatrix};
use crate::error::{Error, Result};
use crate::scalar::{positive_threshold, Real};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use std::cell::Cell;

thread_local! {
    static EIGEN_CALLS: Cell<usize> = const { Cell::new(0) };
}

/// Number of [`symmetric_eigen`] calls made on the current thread. Used by
/// tests to check that sweeps reuse a single decomposition.
pub fn eigen_call_count() -> usize {
    EIGEN_CALLS.with(|c| c.get())
}

/// The vector `v = [1, ..., 1, 1 + sqrt(n)]` defining `Q`.
pub fn householder_vector<T: Real>(n: usize) -> DVector<T> {
    let mut v = DVector::from_element(n, T::one());
    v[n - 1] = T::one() + T::count(n).sqrt();
    v
}

/// Dense Householder reflector `Q` for `n` points.
pub fn householder_q<T: Real>(n: usize) -> Result<DMatrix<T>> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!("Q needs n >= 2, got {n}")));
    }
    let v = householder_vector::<T>(n);
    let beta = T::lit(2.0) / v.norm_squared();
    Ok(DMatrix::identity(n, n) - (&v * v.transpose()) * beta)
}

/// Centering matrix `V = I - J / n`.
pub fn centering_v<T: Real>(n: usize) -> Result<DMatrix<T>> {
    if n < 1 {
        return Err(Error::InvalidDimension("V needs n >= 1".into()));
    }
    let inv = T::one() / T::count(n);
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            T::one() - inv
        } else {
            -inv
        }
    }))
}

/// `Q A Q` in `O(n^2)` using the rank-one structure of `Q`. `A` must be
/// square; symmetry is not checked here.
pub fn conjugate_by_q<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    let v = householder_vector::<T>(n);
    let beta = T::lit(2.0) / v.norm_squared();
    let w = a * &v;
    let wt = a.transpose() * &v;
    let s = v.dot(&w);
    let mut out = a.clone();
    for j in 0..n {
        for i in 0..n {
            out[(i, j)] += -beta * (v[i] * wt[j] + w[i] * v[j]) + beta * beta * s * v[i] * v[j];
        }
    }
    out
}

/// `Q B` in `O(n^2)` for any `n x k` matrix `B`.
pub fn apply_q_left<T: Real>(b: &DMatrix<T>) -> DMatrix<T> {
    let n = b.nrows();
    let v = householder_vector::<T>(n);
    let beta = T::lit(2.0) / v.norm_squared();
    let vt_b = v.transpose() * b;
    b - (&v * vt_b) * beta
}

/// `Q x` for a vector.
pub fn apply_q_vec<T: Real>(x: &DVector<T>) -> DVector<T> {
    let v = householder_vector::<T>(x.len());
    let beta = T::lit(2.0) / v.norm_squared();
    x - &v * (beta * v.dot(x))
}

/// `V A V` by double centering (row, column and grand means).
pub fn double_center<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    let nf = T::count(n);
    let row_means: Vec<T> = (0..n).map(|i| a.row(i).sum() / nf).collect();
    let col_means: Vec<T> = (0..n).map(|j| a.column(j).sum() / nf).collect();
    let grand = row_means.iter().fold(T::zero(), |s, &x| s + x) / nf;
    DMatrix::from_fn(n, n, |i, j| a[(i, j)] - row_means[i] - col_means[j] + grand)
}

/// Embeds an `(n-1) x (n-1)` block as the leading block of an `n x n` zero
/// matrix.
pub fn pad_leading_block<T: Real>(block: &DMatrix<T>) -> DMatrix<T> {
    let m = block.nrows();
    let mut out = DMatrix::zeros(m + 1, m + 1);
    out.view_mut((0, 0), (m, m)).copy_from(block);
    out
}

/// The blocks `(A_hat, f(A), xi(A))` of `Q A Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QDecomposition<T: Real> {
    pub d_hat: DMatrix<T>,
    pub f: DVector<T>,
    pub xi: T,
}

impl<T: Real> QDecomposition<T> {
    /// Assembles a decomposition from parts, checking shapes.
    pub fn from_parts(d_hat: DMatrix<T>, f: DVector<T>, xi: T) -> Result<Self> {
        let m = d_hat.nrows();
        if d_hat.ncols() != m || f.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "d_hat is {}x{}, f has length {}",
                m,
                d_hat.ncols(),
                f.len()
            )));
        }
        if m < 1 {
            return Err(Error::InvalidDimension("d_hat must be at least 1x1".into()));
        }
        Ok(Self { d_hat, f, xi })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            d_hat: DMatrix::zeros(n - 1, n - 1),
            f: DVector::zeros(n - 1),
            xi: T::zero(),
        }
    }

    /// Size `n` of the matrix this decomposes.
    pub fn n(&self) -> usize {
        self.d_hat.nrows() + 1
    }

    /// The block matrix `[[d_hat, f], [f^T, xi]]`.
    pub fn block_matrix(&self) -> DMatrix<T> {
        let m = self.d_hat.nrows();
        let mut b = pad_leading_block(&self.d_hat);
        for i in 0..m {
            b[(i, m)] = self.f[i];
            b[(m, i)] = self.f[i];
        }
        b[(m, m)] = self.xi;
        b
    }
}

/// Splits `Q A Q` into its blocks. `A` must be symmetric.
pub fn q_decompose<T: Real>(a: &DMatrix<T>) -> Result<QDecomposition<T>> {
    let a = require_symmetric(a)?;
    let n = a.nrows();
    if n < 2 {
        return Err(Error::InvalidDimension(format!(
            "q-decomposition needs n >= 2, got {n}"
        )));
    }
    Ok(split_blocks(&conjugate_by_q(&a)))
}

fn split_blocks<T: Real>(b: &DMatrix<T>) -> QDecomposition<T> {
    let m = b.nrows() - 1;
    let mut d_hat = b.view((0, 0), (m, m)).into_owned();
    // Symmetrize against round-off from the conjugation.
    let half = T::lit(0.5);
    for j in 0..m {
        for i in (j + 1)..m {
            let s = (d_hat[(i, j)] + d_hat[(j, i)]) * half;
            d_hat[(i, j)] = s;
            d_hat[(j, i)] = s;
        }
    }
    let f = DVector::from_fn(m, |i, _| (b[(i, m)] + b[(m, i)]) * half);
    QDecomposition {
        d_hat,
        f,
        xi: b[(m, m)],
    }
}

/// Inverse of [`q_decompose`]: `Q [[d_hat, f], [f^T, xi]] Q`.
pub fn q_reassemble<T: Real>(qd: &QDecomposition<T>) -> DMatrix<T> {
    let mut out = conjugate_by_q(&qd.block_matrix());
    symmetrize_in_place(&mut out);
    out
}

pub(crate) fn symmetrize_in_place<T: Real>(a: &mut DMatrix<T>) {
    let n = a.nrows();
    let half = T::lit(0.5);
    for j in 0..n {
        for i in (j + 1)..n {
            let s = (a[(i, j)] + a[(j, i)]) * half;
            a[(i, j)] = s;
            a[(j, i)] = s;
        }
    }
}

/// Ascending eigenvalues with paired orthonormal eigenvectors (columns).
///
/// Each eigenvector is signed so that its largest-magnitude entry (lowest
/// index on ties) is nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData<T: Real> {
    pub eigenvalues: DVector<T>,
    pub eigenvectors: DMatrix<T>,
}

impl<T: Real> SpectralData<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U diag(lambda) U^T`.
    pub fn reconstruct(&self) -> DMatrix<T> {
        self.reconstruct_with(&self.eigenvalues)
    }

    /// `U diag(values) U^T` for replacement eigenvalues.
    pub fn reconstruct_with(&self, values: &DVector<T>) -> DMatrix<T> {
        let mut scaled = self.eigenvectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= values[k];
        }
        let mut out = scaled * self.eigenvectors.transpose();
        symmetrize_in_place(&mut out);
        out
    }

    /// Frobenius norm of the decomposed matrix, `sqrt(sum lambda^2)`.
    pub fn matrix_norm(&self) -> T {
        self.eigenvalues.norm()
    }

    /// Positivity threshold for this spectrum.
    pub fn positive_threshold(&self) -> T {
        positive_threshold(self.matrix_norm())
    }
}

/// Eigendecomposition of a symmetric matrix with ascending eigenvalues and a
/// deterministic sign convention.
pub fn symmetric_eigen<T: Real>(a: &DMatrix<T>) -> Result<SpectralData<T>> {
    let m = a.nrows();
    if m == 0 || a.ncols() != m {
        return Err(Error::InvalidDimension(format!(
            "symmetric eigen needs a non-empty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    check_finite(a).map_err(|e| Error::Numeric(e.to_string()))?;
    let a = require_symmetric(a)?;
    EIGEN_CALLS.with(|c| c.set(c.get() + 1));

    let eig = SymmetricEigen::try_new(a, T::default_epsilon(), 0)
        .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let eigenvalues = DVector::from_fn(m, |k, _| eig.eigenvalues[order[k]]);
    let mut eigenvectors = DMatrix::zeros(m, m);
    for (k, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for i in 1..m {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < T::zero() {
            -T::one()
        } else {
            T::one()
        };
        eigenvectors.set_column(k, &(col * sign));
    }
    Ok(SpectralData {
        eigenvalues,
        eigenvectors,
    })
}

/// `diag(G) 1^T - 2 G + 1 diag(G)^T` for a positive semidefinite Gram matrix.
pub fn gram_to_edm<T: Real>(g: &DMatrix<T>) -> Result<SquaredDissimilarityMatrix<T>> {
    let g = require_symmetric(g)?;
    let n = g.nrows();
    if n < 2 {
        return Err(Error::InvalidDimension(format!(
            "Gram matrix needs n >= 2, got {n}"
        )));
    }
    let norm = g.norm();
    if norm > T::zero() {
        let spec = symmetric_eigen(&g)?;
        let min = spec.eigenvalues[0];
        if min < -T::rel_tol(1e-6) * norm {
            return Err(Error::Domain(format!(
                "Gram matrix is not positive semidefinite (smallest eigenvalue {:e})",
                min.as_f64()
            )));
        }
    }
    let two = T::lit(2.0);
    let mut d = DMatrix::from_fn(n, n, |i, j| g[(i, i)] + g[(j, j)] - two * g[(i, j)]);
    d.fill_diagonal(T::zero());
    SquaredDissimilarityMatrix::new(d)
}

/// Squared Euclidean distances between the columns of an embedding.
pub fn edm_of_embedding<T: Real>(x: &Embedding<T>) -> Result<SquaredDissimilarityMatrix<T>> {
    SquaredDissimilarityMatrix::new(pairwise_sq_distances_cols(x.coords()))
}

/// Squared distances between columns, computed pairwise.
pub(crate) fn pairwise_sq_distances_cols<T: Real>(coords: &DMatrix<T>) -> DMatrix<T> {
    let n = coords.ncols();
    let mut d = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in (j + 1)..n {
            let mut s = T::zero();
            for k in 0..coords.nrows() {
                let t = coords[(k, i)] - coords[(k, j)];
                s += t * t;
            }
            d[(i, j)] = s;
            d[(j, i)] = s;
        }
    }
    d
}

/// The unique `(f, xi)` making `Q [[d_hat, f], [f^T, xi]] Q` hollow:
/// `[2 f; xi] = sqrt(n) Q diag(Q blockdiag(d_hat, 0) Q)`.
pub fn hollow_completion<T: Real>(d_hat: &DMatrix<T>) -> Result<(DVector<T>, T)> {
    let d_hat = require_symmetric(d_hat)?;
    let m = d_hat.nrows();
    let n = m + 1;
    let conj = conjugate_by_q(&pad_leading_block(&d_hat));
    let h = conj.diagonal();
    let g = apply_q_vec(&h) * T::count(n).sqrt();
    let half = T::lit(0.5);
    let f = DVector::from_fn(m, |i, _| g[i] * half);
    Ok((f, g[m]))
}

/// The hollow matrix with the given `d_hat` block.
pub fn hollow_with_block<T: Real>(d_hat: &DMatrix<T>) -> Result<DMatrix<T>> {
    let (f, xi) = hollow_completion(d_hat)?;
    let mut out = q_reassemble(&QDecomposition {
        d_hat: d_hat.clone(),
        f,
        xi,
    });
    out.fill_diagonal(T::zero());
    Ok(out)
}

/// Summary of the spectrum of `D_hat`, used to label matrices as Euclidean
/// or not.
#[derive(Debug, Clone, PartialEq)]
pub struct EdmStatus {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub positive_count: usize,
    pub negative_count: usize,
    pub threshold: f64,
    /// `true` when no eigenvalue of `D_hat` exceeds the positivity threshold.
    pub is_edm: bool,
}

impl EdmStatus {
    /// Numerical embedding dimension (count of negative eigenvalues).
    pub fn dimension(&self) -> usize {
        self.negative_count
    }
}

/// Eigenvalue summary of `D_hat` for a hollow matrix.
pub fn edm_status<T: Real>(d: &SquaredDissimilarityMatrix<T>) -> Result<EdmStatus> {
    let qd = q_decompose(d.matrix())?;
    let spec = symmetric_eigen(&qd.d_hat)?;
    Ok(status_from_spectrum(&spec))
}

pub(crate) fn status_from_spectrum<T: Real>(spec: &SpectralData<T>) -> EdmStatus {
    let eps = spec.positive_threshold();
    let positive_count = spec.eigenvalues.iter().filter(|&&l| l > eps).count();
    let negative_count = spec.eigenvalues.iter().filter(|&&l| l < -eps).count();
    EdmStatus {
        min_eigenvalue: spec.eigenvalues[0].as_f64(),
        max_eigenvalue: spec.eigenvalues[spec.dim() - 1].as_f64(),
        positive_count,
        negative_count,
        threshold: eps.as_f64(),
        is_edm: positive_count == 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    fn random_hollow(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let mut a = random_symmetric(n, rng);
        a.fill_diagonal(0.0);
        a
    }

    fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn q_maps_ones_for_n4() {
        let q = householder_q::<f64>(4).unwrap();
        let y = &q * DVector::from_element(4, 1.0);
        let expected = DVector::from_vec(vec![0.0, 0.0, 0.0, -2.0]);
        assert!((y - expected).amax() < 1e-14);
    }

    #[test]
    fn q_is_symmetric_involution() {
        for n in 2..=64 {
            let q = householder_q::<f64>(n).unwrap();
            assert!((&q - q.transpose()).amax() == 0.0);
            let i = DMatrix::<f64>::identity(n, n);
            assert!((&q * &q - i).amax() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn q_n3_has_determinant_minus_one() {
        let q = householder_q::<f64>(3).unwrap();
        assert_relative_eq!(q.determinant(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn q_rejects_small_n() {
        assert!(householder_q::<f64>(1).is_err());
    }

    #[test]
    fn centering_matrix_properties() {
        let v = centering_v::<f64>(2).unwrap();
        assert_eq!(v, DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]));
        for n in 1..10 {
            let v = centering_v::<f64>(n).unwrap();
            assert!((&v * DVector::from_element(n, 1.0)).amax() < 1e-14);
            assert!((&v * &v - &v).amax() < 1e-12);
        }
    }

    #[test]
    fn connection_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 3, 5, 9, 17, 32] {
            let a = random_symmetric(n, &mut rng);
            let v = centering_v::<f64>(n).unwrap();
            let q = householder_q::<f64>(n).unwrap();
            let lhs = &v * &a * &v;
            let qd = q_decompose(&a).unwrap();
            let rhs = &q * pad_leading_block(&qd.d_hat) * &q;
            assert!((&lhs - &rhs).norm() <= 1e-10 * lhs.norm().max(1.0), "n = {n}");
            assert!((double_center(&a) - lhs).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn fast_conjugation_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_symmetric(7, &mut rng);
        let q = householder_q::<f64>(7).unwrap();
        assert!((conjugate_by_q(&a) - &q * &a * &q).amax() < 1e-13);
        let b = DMatrix::from_fn(7, 3, |_, _| rng.gen_range(-1.0..1.0));
        assert!((apply_q_left(&b) - &q * &b).amax() < 1e-13);
    }

    #[test]
    fn q_decompose_zero_and_trace() {
        let qd = q_decompose(&DMatrix::<f64>::zeros(4, 4)).unwrap();
        assert_eq!(qd, QDecomposition::zeros(4));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 4, 8, 13] {
            let d = random_hollow(n, &mut rng);
            let qd = q_decompose(&d).unwrap();
            assert!((qd.d_hat.trace() + qd.xi).abs() < 1e-12);
            let a = random_symmetric(n, &mut rng);
            let qa = q_decompose(&a).unwrap();
            assert!((qa.d_hat.trace() + qa.xi - a.trace()).abs() <= 1e-10 * (1.0 + a.trace().abs()));
        }
    }

    #[test]
    fn q_decompose_collinear_is_nsd() {
        let d = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 4.0, 1.0, 0.0, 1.0, 4.0, 1.0, 0.0]);
        let qd = q_decompose(&d).unwrap();
        let spec = symmetric_eigen(&qd.d_hat).unwrap();
        assert!(spec.eigenvalues.iter().all(|&l| l <= 1e-10));
    }

    #[test]
    fn q_decompose_rejects_asymmetric() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(matches!(q_decompose(&a), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn reassemble_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_symmetric(6, &mut rng);
        let back = q_reassemble(&q_decompose(&a).unwrap());
        assert!(rel(&back, &a) < 1e-10);
        assert_eq!(q_reassemble(&QDecomposition::<f64>::zeros(5)), DMatrix::zeros(5, 5));

        let pts = DMatrix::from_fn(2, 6, |_, _| rng.gen_range(-2.0..2.0));
        let edm = edm_of_embedding(&Embedding::new(pts).unwrap()).unwrap();
        let back = q_reassemble(&q_decompose(edm.matrix()).unwrap());
        assert!(rel(&back, edm.matrix()) < 1e-10);
    }

    #[test]
    fn from_parts_checks_shapes() {
        let r = QDecomposition::<f64>::from_parts(DMatrix::zeros(2, 2), DVector::zeros(3), 0.0);
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn eigen_identity_and_diagonal() {
        let spec = symmetric_eigen(&DMatrix::<f64>::identity(3, 3)).unwrap();
        assert_eq!(spec.eigenvalues.as_slice(), &[1.0, 1.0, 1.0]);

        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0, 2.0]));
        let spec = symmetric_eigen(&a).unwrap();
        assert_relative_eq!(spec.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(spec.eigenvalues[1], 2.0, epsilon = 1e-14);
        assert_relative_eq!(spec.eigenvalues[2], 3.0, epsilon = 1e-14);
        // Signed unit vectors; the sign convention makes them exactly e_1, e_2, e_0.
        for (k, axis) in [1usize, 2, 0].iter().enumerate() {
            let col = spec.eigenvectors.column(k);
            assert_relative_eq!(col[*axis], 1.0, epsilon = 1e-14);
            assert!(col.amax() <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn eigen_reconstructs_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_symmetric(8, &mut rng);
        let spec = symmetric_eigen(&a).unwrap();
        assert!(rel(&spec.reconstruct(), &a) <= 1e-9);
        let u = &spec.eigenvectors;
        assert!((u.transpose() * u - DMatrix::identity(8, 8)).amax() < 1e-10);
        for k in 0..7 {
            assert!(spec.eigenvalues[k] <= spec.eigenvalues[k + 1]);
        }
    }

    #[test]
    fn eigen_rejects_non_finite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, f64::INFINITY, f64::INFINITY, 1.0]);
        assert!(matches!(symmetric_eigen(&a), Err(Error::Numeric(_))));
    }

    #[test]
    fn gram_to_edm_cases() {
        let d = gram_to_edm(&DMatrix::<f64>::zeros(3, 3)).unwrap();
        assert_eq!(d.matrix(), &DMatrix::zeros(3, 3));

        let x = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let d = gram_to_edm(&(x.transpose() * &x)).unwrap();
        assert_eq!(d.matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));

        let bad = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(gram_to_edm(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn gram_and_embedding_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = DMatrix::from_fn(3, 5, |_, _| rng.gen_range(-3.0..3.0));
        let xc = &x * centering_v::<f64>(5).unwrap();
        let via_gram = gram_to_edm(&(xc.transpose() * &xc)).unwrap();
        let direct = edm_of_embedding(&Embedding::new(x.clone()).unwrap()).unwrap();
        assert!((via_gram.matrix() - direct.matrix()).amax() < 1e-10);
        let uncentered = gram_to_edm(&(x.transpose() * &x)).unwrap();
        assert!((uncentered.matrix() - direct.matrix()).amax() < 1e-10);
    }

    #[test]
    fn edm_of_embedding_examples() {
        let x = DMatrix::from_row_slice(1, 3, &[0.0, 3.0, 4.0]);
        let d = edm_of_embedding(&Embedding::new(x).unwrap()).unwrap();
        assert_eq!(
            d.matrix(),
            &DMatrix::from_row_slice(3, 3, &[0.0, 9.0, 16.0, 9.0, 0.0, 1.0, 16.0, 1.0, 0.0])
        );
        let x = DMatrix::from_fn(2, 4, |i, _| i as f64 + 0.5);
        let d = edm_of_embedding(&Embedding::new(x).unwrap()).unwrap();
        assert_eq!(d.matrix(), &DMatrix::zeros(4, 4));
    }

    #[test]
    fn hollow_completion_recovers_blocks() {
        let (f, xi) = hollow_completion(&DMatrix::<f64>::zeros(4, 4)).unwrap();
        assert_eq!(f, DVector::zeros(4));
        assert_eq!(xi, 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = random_hollow(6, &mut rng);
        let qd = q_decompose(&d).unwrap();
        let (f, xi) = hollow_completion(&qd.d_hat).unwrap();
        assert!((&f - &qd.f).amax() < 1e-10);
        assert!((xi - qd.xi).abs() < 1e-10);

        let block = random_symmetric(5, &mut rng);
        let (f, xi) = hollow_completion(&block).unwrap();
        let full = q_reassemble(&QDecomposition { d_hat: block, f, xi });
        assert!(full.diagonal().amax() < 1e-10);
    }

    #[test]
    fn edm_status_detects_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for d in 1..=4 {
            let x = DMatrix::from_fn(d, 12, |_, _| rng.gen_range(-1.0..1.0));
            let edm = edm_of_embedding(&Embedding::new(x).unwrap()).unwrap();
            let status = edm_status(&edm).unwrap();
            assert!(status.is_edm);
            assert_eq!(status.dimension(), d);
        }
    }

    #[test]
    fn single_precision_round_trip() {
        let a = DMatrix::<f32>::from_row_slice(3, 3, &[0.0, 1.0, 4.0, 1.0, 0.0, 1.0, 4.0, 1.0, 0.0]);
        let back = q_reassemble(&q_decompose(&a).unwrap());
        assert!((back - &a).amax() < 1e-5);
    }
}
