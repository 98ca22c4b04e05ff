//! Approximate SSTRESS solutions by alternating projections between
//! `kappa(r)` and the hollow symmetric matrices.
//!
//! With the rank cap active `kappa(r)` is not convex and Dykstra's iteration
//! can cycle without settling. The solver therefore runs in two phases:
//! Dykstra first, and if that fails to meet the tolerance, plain alternating
//! projections restarted from `D`. Throughout, every `kappa(r)` iterate is
//! turned into a point of `E(r)` (its `D_hat` block with the hollow
//! completion), and the closest such point seen is returned.

use crate::dissim::SquaredDissimilarityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{hollow_with_block, q_decompose};
use crate::lower::project_symmetric_onto_kappa;
use crate::scalar::Real;
use nalgebra::DMatrix;

/// Default stopping threshold on the change of `D_hat` between rounds.
pub const DEFAULT_TOLERANCE: f64 = 0.1;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SstressConfig {
    /// Stop once `||D_hat_k - D_hat_{k-1}||_F` falls to this value.
    pub tolerance: f64,
    /// Cap on rounds per phase.
    pub max_iterations: usize,
    pub use_dykstra_corrections: bool,
}

impl Default for SstressConfig {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            use_dykstra_corrections: true,
        }
    }
}

impl SstressConfig {
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(Error::Domain(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Domain("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// One round of the iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Round<T: Real> {
    pub iteration: usize,
    /// Objective of the best point of `E(r)` found so far.
    pub objective: T,
    /// `||D_hat_k - D_hat_{k-1}||_F` after the hollow projection.
    pub d_hat_change: T,
}

#[derive(Debug, Clone)]
pub struct SstressResult<T: Real> {
    /// Hollow, with `D_hat` negative semidefinite of rank at most `r`.
    pub d_t: DMatrix<T>,
    /// Rounds run over both phases.
    pub iterations: usize,
    /// Whether some phase met the tolerance.
    pub converged: bool,
    /// `||d_t - D||_F^2`.
    pub objective: T,
    pub history: Vec<Round<T>>,
}

/// Nearest hollow symmetric matrix: the diagonal zeroed.
pub fn project_hollow<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    let mut out = a.clone();
    out.fill_diagonal(T::zero());
    out
}

pub fn solve_sstress<T: Real>(
    d: &SquaredDissimilarityMatrix<T>,
    r: usize,
    cfg: &SstressConfig,
) -> Result<SstressResult<T>> {
    solve_sstress_with_progress(d, r, cfg, |_| {})
}

/// As [`solve_sstress`], calling `progress` after every round.
pub fn solve_sstress_with_progress<T: Real, F: FnMut(&Round<T>)>(
    d: &SquaredDissimilarityMatrix<T>,
    r: usize,
    cfg: &SstressConfig,
    mut progress: F,
) -> Result<SstressResult<T>> {
    cfg.validate()?;
    let n = d.n();
    if r < 1 || r > n - 1 {
        return Err(Error::InvalidDimension(format!(
            "rank cap {r} outside [1, {}]",
            n - 1
        )));
    }
    let target = d.matrix();
    let mut state = Tracker {
        target,
        best: None,
        history: Vec::new(),
    };

    let converged_first = run_phase(&mut state, r, cfg, cfg.use_dykstra_corrections, &mut progress)?;
    let converged = converged_first
        || (cfg.use_dykstra_corrections && run_phase(&mut state, r, cfg, false, &mut progress)?);
    if !converged {
        log::warn!(
            "sstress stopped after {} rounds without meeting tolerance {}",
            state.history.len(),
            cfg.tolerance
        );
    }
    let (d_t, objective) = state.best.expect("at least one round");
    Ok(SstressResult {
        d_t,
        iterations: state.history.len(),
        converged,
        objective,
        history: state.history,
    })
}

struct Tracker<'a, T: Real> {
    target: &'a DMatrix<T>,
    best: Option<(DMatrix<T>, T)>,
    history: Vec<Round<T>>,
}

impl<T: Real> Tracker<'_, T> {
    fn offer(&mut self, candidate: DMatrix<T>) -> T {
        let obj = (&candidate - self.target).norm_squared();
        match &self.best {
            Some((_, b)) if *b <= obj => *b,
            _ => {
                self.best = Some((candidate, obj));
                obj
            }
        }
    }
}

/// Runs one phase from `D`; returns whether the tolerance was met.
fn run_phase<T: Real, F: FnMut(&Round<T>)>(
    state: &mut Tracker<'_, T>,
    r: usize,
    cfg: &SstressConfig,
    dykstra: bool,
    progress: &mut F,
) -> Result<bool> {
    let n = state.target.nrows();
    let tol = T::lit(cfg.tolerance);
    let mut x = state.target.clone();
    let mut x_hat = q_decompose(&x)?.d_hat;
    let mut p = DMatrix::<T>::zeros(n, n);
    let mut q = DMatrix::<T>::zeros(n, n);
    for _ in 0..cfg.max_iterations {
        let before_k = if dykstra { &x + &p } else { x.clone() };
        let proj = project_symmetric_onto_kappa(&before_k, r)?;
        let y = proj.d_l.clone();
        if dykstra {
            p = &before_k - &y;
        }
        let objective = state.offer(hollow_with_block(&proj.d_hat())?);

        let before_h = if dykstra { &y + &q } else { y.clone() };
        let x_new = project_hollow(&before_h);
        if dykstra {
            q = &before_h - &x_new;
        }
        let new_hat = q_decompose(&x_new)?.d_hat;
        let change = (&new_hat - &x_hat).norm();
        x = x_new;
        x_hat = new_hat;

        let round = Round {
            iteration: state.history.len() + 1,
            objective,
            d_hat_change: change,
        };
        progress(&round);
        state.history.push(round);
        if change <= tol {
            return Ok(true);
        }
    }
    Ok(false)
}
