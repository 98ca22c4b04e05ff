//! Experiment harness: relative errors, multi-method dimension sweeps and
//! 1-nearest-neighbour classification on embeddings.

use crate::cmds::cmds_symmetric;
use crate::decomp::{cmds_from_analysis, ErrorAnalysis};
use crate::dissim::{Embedding, SquaredDissimilarityMatrix};
use crate::error::{Error, Result};
use crate::lower::embed_projection;
use crate::scalar::Real;
use crate::sstress::{solve_sstress, SstressConfig};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

/// Largest dimension a default sweep visits.
pub const DEFAULT_MAX_SWEEP_DIM: usize = 1000;
/// Largest instance on which a sweep runs the SSTRESS solver by default.
pub const DEFAULT_SSTRESS_MAX_N: usize = 500;
/// Points per run at classification scale, split evenly.
pub const CLASSIFICATION_POINTS: usize = 2000;
pub const CLASSIFICATION_TRAIN: usize = 1000;

/// `||other - reference||_F^2 / ||reference||_F^2`.
pub fn relative_error<T: Real>(reference: &DMatrix<T>, other: &DMatrix<T>) -> Result<T> {
    if reference.shape() != other.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            reference.shape(),
            other.shape()
        )));
    }
    let denom = reference.norm_squared();
    if denom == T::zero() {
        return Err(Error::Domain("reference matrix is zero".into()));
    }
    Ok((other - reference).norm_squared() / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Cmds,
    LowerCmds,
    Sstress,
    /// The projection `D_l` itself: a bound, not an embedding.
    LowerBound,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Cmds,
        Method::LowerCmds,
        Method::Sstress,
        Method::LowerBound,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cmds => "cmds",
            Method::LowerCmds => "lower_cmds",
            Method::Sstress => "sstress",
            Method::LowerBound => "lower_bound",
        }
    }

    pub fn embeds(self) -> bool {
        self != Method::LowerBound
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "cmds" => Ok(Method::Cmds),
            "lower_cmds" => Ok(Method::LowerCmds),
            "sstress" => Ok(Method::Sstress),
            "lower_bound" => Ok(Method::LowerBound),
            other => Err(Error::Domain(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub sstress: SstressConfig,
    /// SSTRESS rows are skipped above this many points.
    pub sstress_max_n: usize,
    /// Evaluate dimensions concurrently.
    pub parallel: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sstress: SstressConfig::default(),
            sstress_max_n: DEFAULT_SSTRESS_MAX_N,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub r: usize,
    /// `||M - D||_F^2`; `None` when the method failed or was skipped.
    pub objective: Option<f64>,
    pub rel_err_input: Option<f64>,
    /// `||M - D_orig||_F^2 / ||D_orig||_F^2` when an original was supplied.
    pub rel_err_original: Option<f64>,
    pub wall_ms: f64,
    /// Why the row has no values.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub n: usize,
    /// Sorted by `(method, r)`.
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn rows_for(&self, method: Method) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |row| row.method == method)
    }

    /// Objectives of one method in increasing `r`.
    pub fn objectives(&self, method: Method) -> Vec<(usize, Option<f64>)> {
        self.rows_for(method).map(|row| (row.r, row.objective)).collect()
    }
}

/// Default sweep range `1..=min(n - 1, 1000)`.
pub fn default_range(n: usize) -> (usize, usize) {
    (1, (n.saturating_sub(1)).clamp(1, DEFAULT_MAX_SWEEP_DIM))
}

fn check_range(n: usize, r_min: usize, r_max: usize) -> Result<()> {
    if r_min < 1 || r_min > r_max || r_max > n - 1 {
        return Err(Error::InvalidDimension(format!(
            "dimension range {r_min}..={r_max} outside 1..={}",
            n - 1
        )));
    }
    Ok(())
}

/// One matrix per method and dimension, all from a single eigendecomposition
/// of `D_hat` (plus the SSTRESS solver's own iterations).
struct Producer<'a, T: Real> {
    d: &'a SquaredDissimilarityMatrix<T>,
    analysis: ErrorAnalysis<T>,
    cfg: SweepConfig,
}

impl<'a, T: Real> Producer<'a, T> {
    fn new(d: &'a SquaredDissimilarityMatrix<T>, cfg: SweepConfig) -> Result<Self> {
        Ok(Self {
            d,
            analysis: ErrorAnalysis::new(d)?,
            cfg,
        })
    }

    fn matrix(&self, method: Method, r: usize) -> Result<DMatrix<T>> {
        Ok(match method {
            Method::Cmds => cmds_from_analysis(&self.analysis, r)?.d_cmds.into_matrix(),
            Method::LowerCmds => {
                let proj = self.analysis.projection(r)?;
                embed_projection(&proj, r)?.d_cmds.into_matrix()
            }
            Method::LowerBound => self.analysis.projection(r)?.d_l,
            Method::Sstress => {
                if self.d.n() > self.cfg.sstress_max_n {
                    return Err(Error::Domain(format!(
                        "skipped: n = {} exceeds the SSTRESS cap {}",
                        self.d.n(),
                        self.cfg.sstress_max_n
                    )));
                }
                solve_sstress(self.d, r, &self.cfg.sstress)?.d_t
            }
        })
    }

    fn embedding(&self, method: Method, r: usize) -> Result<Embedding<T>> {
        Ok(match method {
            Method::Cmds => cmds_from_analysis(&self.analysis, r)?.embedding,
            Method::LowerCmds => embed_projection(&self.analysis.projection(r)?, r)?.embedding,
            Method::Sstress => cmds_symmetric(&self.matrix(Method::Sstress, r)?, r)?.embedding,
            Method::LowerBound => {
                return Err(Error::Domain("lower_bound has no embedding".into()))
            }
        })
    }
}

fn par_map<I, O, F>(items: Vec<I>, parallel: bool, f: F) -> Vec<O>
where
    I: Send,
    O: Send,
    F: Fn(I) -> O + Sync + Send,
{
    if parallel {
        items.into_par_iter().map(f).collect()
    } else {
        items.into_iter().map(f).collect()
    }
}

/// Runs every method at every `r` in `r_min..=r_max` (at most `n - 1`).
/// A failing method yields a row carrying the error instead of aborting.
pub fn run_sweep<T: Real>(
    d: &SquaredDissimilarityMatrix<T>,
    methods: &[Method],
    r_min: usize,
    r_max: usize,
    original: Option<&SquaredDissimilarityMatrix<T>>,
    cfg: &SweepConfig,
) -> Result<SweepReport> {
    let n = d.n();
    check_range(n, r_min, r_max)?;
    if let Some(o) = original {
        if o.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "original has {} points, input has {n}",
                o.n()
            )));
        }
    }
    cfg.sstress.validate()?;
    let producer = Producer::new(d, *cfg)?;
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();
    let jobs: Vec<(Method, usize)> = methods
        .iter()
        .flat_map(|&m| (r_min..=r_max).map(move |r| (m, r)))
        .collect();

    let rows = par_map(jobs, cfg.parallel, |(method, r)| {
        let start = Instant::now();
        let out = producer.matrix(method, r).and_then(|m| {
            let objective = (&m - d.matrix()).norm_squared().as_f64();
            let rel_input = relative_error(d.matrix(), &m)?.as_f64();
            let rel_orig = original
                .map(|o| relative_error(o.matrix(), &m).map(|x| x.as_f64()))
                .transpose()?;
            Ok((objective, rel_input, rel_orig))
        });
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        match out {
            Ok((objective, rel_input, rel_orig)) => SweepRow {
                method,
                r,
                objective: Some(objective),
                rel_err_input: Some(rel_input),
                rel_err_original: rel_orig,
                wall_ms,
                error: None,
            },
            Err(e) => SweepRow {
                method,
                r,
                objective: None,
                rel_err_input: None,
                rel_err_original: None,
                wall_ms,
                error: Some(e.to_string()),
            },
        }
    });
    Ok(SweepReport { n, rows })
}

/// An embedding labelled with how it was produced.
#[derive(Debug, Clone)]
pub struct MethodEmbedding<T: Real> {
    pub method: Method,
    pub r: usize,
    pub embedding: Embedding<T>,
}

/// Embeddings for every embedding method at every `r` in range, sharing one
/// eigendecomposition. Methods that fail are dropped with a warning.
pub fn sweep_embeddings<T: Real>(
    d: &SquaredDissimilarityMatrix<T>,
    methods: &[Method],
    r_min: usize,
    r_max: usize,
    cfg: &SweepConfig,
) -> Result<Vec<MethodEmbedding<T>>> {
    check_range(d.n(), r_min, r_max)?;
    let producer = Producer::new(d, *cfg)?;
    let mut methods: Vec<Method> = methods.iter().copied().filter(|m| m.embeds()).collect();
    methods.sort();
    methods.dedup();
    let jobs: Vec<(Method, usize)> = methods
        .iter()
        .flat_map(|&m| (r_min..=r_max).map(move |r| (m, r)))
        .collect();
    let out = par_map(jobs, cfg.parallel, |(method, r)| {
        producer
            .embedding(method, r)
            .map(|embedding| MethodEmbedding {
                method,
                r,
                embedding,
            })
            .map_err(|e| log::warn!("{method} at r = {r}: {e}"))
            .ok()
    });
    Ok(out.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnRow {
    pub method: Method,
    pub r: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnReport {
    pub rows: Vec<KnnRow>,
}

/// Train/test split: the first `ceil(train_fraction * m)` indices train,
/// after an optional seeded shuffle.
pub fn split_indices(
    m: usize,
    train_fraction: f64,
    split_seed: Option<u64>,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Domain(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let n_train = (train_fraction * m as f64).ceil() as usize;
    if n_train == 0 || n_train >= m {
        return Err(Error::Domain(format!(
            "split of {m} points at fraction {train_fraction} leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..m).collect();
    if let Some(seed) = split_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let test = order.split_off(n_train);
    Ok((order, test))
}

/// 1-NN accuracy of each embedding. Ties go to the earliest training point.
pub fn knn_classify<T: Real>(
    embeddings: &[MethodEmbedding<T>],
    labels: &[usize],
    split_seed: Option<u64>,
    train_fraction: f64,
) -> Result<KnnReport> {
    let m = labels.len();
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Domain("classification needs at least 2 classes".into()));
    }
    let (train, test) = split_indices(m, train_fraction, split_seed)?;
    let rows = embeddings
        .par_iter()
        .map(|e| {
            let x = e.embedding.coords();
            if x.ncols() != m {
                return Err(Error::DimensionMismatch(format!(
                    "{} embedding at r = {} has {} points, {} labels",
                    e.method,
                    e.r,
                    x.ncols(),
                    m
                )));
            }
            let correct = test
                .iter()
                .filter(|&&t| {
                    let mut best = (T::max_value().unwrap_or(T::one()), usize::MAX);
                    for &s in &train {
                        let dist = (x.column(t) - x.column(s)).norm_squared();
                        if best.1 == usize::MAX || dist < best.0 {
                            best = (dist, s);
                        }
                    }
                    labels[best.1] == labels[t]
                })
                .count();
            Ok(KnnRow {
                method: e.method,
                r: e.r,
                n_train: train.len(),
                n_test: test.len(),
                accuracy: correct as f64 / test.len() as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = rows;
    rows.sort_by_key(|row| (row.method, row.r));
    Ok(KnnReport { rows })
}
