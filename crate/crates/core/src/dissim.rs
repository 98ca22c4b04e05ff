//! Validated matrix types: squared dissimilarities and point embeddings.

use crate::error::{Error, Result};
use crate::scalar::Real;
use nalgebra::DMatrix;

/// Relative asymmetry below which a matrix is silently symmetrized.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Symmetric, hollow `n x n` matrix of squared dissimilarities (`n >= 2`).
///
/// Negative off-diagonal entries are accepted, since perturbed inputs produce
/// them, but they are counted and logged at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredDissimilarityMatrix<T: Real> {
    entries: DMatrix<T>,
    negative_entries: usize,
}

impl<T: Real> SquaredDissimilarityMatrix<T> {
    /// Validates and wraps `entries`.
    ///
    /// Asymmetry up to [`SYMMETRY_TOLERANCE`] (relative Frobenius) is repaired
    /// by averaging with the transpose; diagonal entries must be zero to the
    /// same relative tolerance and are then set to exactly zero.
    pub fn new(entries: DMatrix<T>) -> Result<Self> {
        let n = entries.nrows();
        if n != entries.ncols() {
            return Err(Error::NotSquare {
                rows: n,
                cols: entries.ncols(),
            });
        }
        if n < 2 {
            return Err(Error::InvalidDimension(format!(
                "dissimilarity matrix needs at least 2 points, got {n}"
            )));
        }
        check_finite(&entries)?;
        let mut entries = symmetrize_checked(entries)?;

        let scale = entries.norm().max(T::one());
        let tol = T::rel_tol(SYMMETRY_TOLERANCE) * scale;
        let max_diag = (0..n)
            .map(|i| entries[(i, i)].abs())
            .fold(T::zero(), |a, b| a.max(b));
        if max_diag > tol {
            return Err(Error::NotHollow {
                max_diagonal: max_diag.as_f64(),
            });
        }
        entries.fill_diagonal(T::zero());

        let negative_entries = entries.iter().filter(|&&x| x < T::zero()).count();
        if negative_entries > 0 {
            log::warn!(
                "dissimilarity matrix has {negative_entries} negative entries; \
                 accepted, but it cannot be a distance matrix"
            );
        }
        Ok(Self {
            entries,
            negative_entries,
        })
    }

    /// Builds the matrix from row-major nested vectors.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: rows[bad].len(),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Number of points.
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.entries
    }

    /// Count of strictly negative entries seen at construction.
    pub fn negative_entries(&self) -> usize {
        self.negative_entries
    }

    pub fn has_negative_entries(&self) -> bool {
        self.negative_entries > 0
    }

    pub fn frobenius_norm(&self) -> T {
        self.entries.norm()
    }

    /// Squared Frobenius distance to another matrix of the same size.
    pub fn squared_distance(&self, other: &DMatrix<T>) -> T {
        (&self.entries - other).norm_squared()
    }
}

impl<T: Real> AsRef<DMatrix<T>> for SquaredDissimilarityMatrix<T> {
    fn as_ref(&self) -> &DMatrix<T> {
        &self.entries
    }
}

/// Coordinates of `n` points in `R^r`, one column per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T: Real> {
    coords: DMatrix<T>,
}

impl<T: Real> Embedding<T> {
    pub fn new(coords: DMatrix<T>) -> Result<Self> {
        check_finite(&coords)?;
        Ok(Self { coords })
    }

    /// Target dimension `r` (number of rows).
    pub fn dim(&self) -> usize {
        self.coords.nrows()
    }

    /// Number of embedded points (number of columns).
    pub fn n_points(&self) -> usize {
        self.coords.ncols()
    }

    pub fn coords(&self) -> &DMatrix<T> {
        &self.coords
    }

    pub fn into_coords(self) -> DMatrix<T> {
        self.coords
    }
}

pub(crate) fn check_finite<T: Real>(m: &DMatrix<T>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite_value() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Relative Frobenius asymmetry `||A - A^T|| / max(||A||, 1)`.
pub fn relative_asymmetry<T: Real>(a: &DMatrix<T>) -> T {
    let diff = a - a.transpose();
    diff.norm() / a.norm().max(T::one())
}

/// Returns `(A + A^T) / 2` when `A` is symmetric up to round-off; rejects
/// genuinely asymmetric input.
pub(crate) fn symmetrize_checked<T: Real>(a: DMatrix<T>) -> Result<DMatrix<T>> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let asym = relative_asymmetry(&a);
    if asym > T::rel_tol(SYMMETRY_TOLERANCE) {
        return Err(Error::NotSymmetric {
            asymmetry: asym.as_f64(),
        });
    }
    if asym == T::zero() {
        return Ok(a);
    }
    let half = T::lit(0.5);
    Ok((&a + a.transpose()) * half)
}

/// Validates that `a` is square, finite and symmetric to round-off, returning
/// the exactly symmetric version.
pub(crate) fn require_symmetric<T: Real>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    check_finite(a)?;
    symmetrize_checked(a.clone())
}
