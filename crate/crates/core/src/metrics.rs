//! Generators for squared-dissimilarity matrices: exact Euclidean metrics,
//! Gaussian perturbations, kNN geodesics, missing-coordinate estimates and
//! graph shortest paths.
//!
//! Stochastic generators draw from `ChaCha8Rng` seeded with a `u64`, so the
//! same seed gives bit-identical output on every platform.

use crate::dissim::SquaredDissimilarityMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Default neighbourhood size for kNN geodesics.
pub const DEFAULT_K: usize = 10;

/// `m` points in `R^d`, one per row, with optional integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T: Real> {
    points: DMatrix<T>,
    labels: Option<Vec<usize>>,
}

impl<T: Real> PointCloud<T> {
    pub fn new(points: DMatrix<T>, labels: Option<Vec<usize>>) -> Result<Self> {
        crate::dissim::check_finite(&points)?;
        if let Some(l) = &labels {
            if l.len() != points.nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "{} labels for {} points",
                    l.len(),
                    points.nrows()
                )));
            }
        }
        Ok(Self { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &DMatrix<T> {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Coordinates as an `d x m` matrix (points as columns).
    pub fn as_columns(&self) -> DMatrix<T> {
        self.points.transpose()
    }
}

/// A point cloud with a per-coordinate observation mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedPointCloud<T: Real> {
    cloud: PointCloud<T>,
    mask: DMatrix<bool>,
}

impl<T: Real> MaskedPointCloud<T> {
    pub fn new(cloud: PointCloud<T>, mask: DMatrix<bool>) -> Result<Self> {
        if mask.shape() != cloud.points.shape() {
            return Err(Error::DimensionMismatch(format!(
                "mask is {:?}, points are {:?}",
                mask.shape(),
                cloud.points.shape()
            )));
        }
        if let Some(i) = (0..mask.nrows()).find(|&i| !mask.row(i).iter().any(|&b| b)) {
            return Err(Error::Domain(format!("point {i} observes no coordinate")));
        }
        Ok(Self { cloud, mask })
    }

    /// Every coordinate observed.
    pub fn fully_observed(cloud: PointCloud<T>) -> Self {
        let mask = DMatrix::from_element(cloud.len(), cloud.dim(), true);
        Self { cloud, mask }
    }

    pub fn cloud(&self) -> &PointCloud<T> {
        &self.cloud
    }

    pub fn mask(&self) -> &DMatrix<bool> {
        &self.mask
    }
}

/// Random mask hiding each coordinate with probability `drop_fraction`,
/// re-drawing one coordinate for any point left with nothing observed.
pub fn random_mask(m: usize, d: usize, drop_fraction: f64, seed: u64) -> Result<DMatrix<bool>> {
    if !(0.0..1.0).contains(&drop_fraction) {
        return Err(Error::Domain(format!(
            "drop fraction {drop_fraction} outside [0, 1)"
        )));
    }
    if d == 0 {
        return Err(Error::InvalidDimension("points have no coordinates".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = DMatrix::from_fn(m, d, |_, _| rng.gen::<f64>() >= drop_fraction);
    for i in 0..m {
        if !mask.row(i).iter().any(|&b| b) {
            let t = rng.gen_range(0..d);
            mask[(i, t)] = true;
        }
    }
    Ok(mask)
}

/// Exact squared Euclidean distances between rows.
pub fn euclidean_metric<T: Real>(pc: &PointCloud<T>) -> Result<SquaredDissimilarityMatrix<T>> {
    if pc.len() < 2 {
        return Err(Error::InvalidDimension("need at least 2 points".into()));
    }
    SquaredDissimilarityMatrix::new(row_sq_distances(pc.points()))
}

fn row_sq_distances<T: Real>(p: &DMatrix<T>) -> DMatrix<T> {
    let m = p.nrows();
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let mut s = T::zero();
            for t in 0..p.ncols() {
                let x = p[(i, t)] - p[(j, t)];
                s += x * x;
            }
            d[(i, j)] = s;
            d[(j, i)] = s;
        }
    }
    d
}

/// A perturbed matrix together with the signal-to-noise ratio achieved.
#[derive(Debug, Clone)]
pub struct Perturbation<T: Real> {
    pub matrix: SquaredDissimilarityMatrix<T>,
    /// `||signal||_F / ||noise||_F`; infinite when no noise was added.
    pub achieved_snr: f64,
    pub seed: u64,
}

/// Symmetric hollow standard-normal noise.
fn symmetric_noise(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut g = (&g + g.transpose()) * 0.5;
    g.fill_diagonal(0.0);
    g
}

fn check_snr(snr: f64) -> Result<()> {
    if snr.is_nan() || snr <= 0.0 {
        return Err(Error::Domain(format!("SNR must be positive, got {snr}")));
    }
    Ok(())
}

/// Noise scaled so that `||signal|| / ||noise|| = snr`.
fn scaled_noise(signal_norm: f64, n: usize, snr: f64, seed: u64) -> (DMatrix<f64>, f64) {
    let g = symmetric_noise(n, seed);
    let gn = g.norm();
    if snr.is_infinite() || gn == 0.0 || signal_norm == 0.0 {
        return (DMatrix::zeros(n, n), f64::INFINITY);
    }
    let g = g * (signal_norm / (snr * gn));
    let achieved = signal_norm / g.norm();
    (g, achieved)
}

/// Adds symmetric hollow Gaussian noise to the squared entries, scaled to the
/// target `||D||_F / ||G||_F`. `snr = inf` adds no noise.
pub fn perturb_post_square<T: Real>(
    d: &SquaredDissimilarityMatrix<T>,
    snr_target: f64,
    seed: u64,
) -> Result<Perturbation<T>> {
    check_snr(snr_target)?;
    let n = d.n();
    let base = d.matrix().map(|x| x.as_f64());
    let (g, achieved_snr) = scaled_noise(base.norm(), n, snr_target, seed);
    let out = (base + g).map(T::lit);
    Ok(Perturbation {
        matrix: SquaredDissimilarityMatrix::new(out)?,
        achieved_snr,
        seed,
    })
}

/// Adds the noise to the unsquared distances `sqrt(D)` (scaled against
/// `||sqrt(D)||_F`) and squares the result entrywise.
pub fn perturb_pre_square<T: Real>(
    d: &SquaredDissimilarityMatrix<T>,
    snr_target: f64,
    seed: u64,
) -> Result<Perturbation<T>> {
    check_snr(snr_target)?;
    if d.has_negative_entries() {
        return Err(Error::Domain(
            "pre-square perturbation needs nonnegative entries".into(),
        ));
    }
    let n = d.n();
    let root = d.matrix().map(|x| x.as_f64().sqrt());
    let (g, achieved_snr) = scaled_noise(root.norm(), n, snr_target, seed);
    let mut out = (root + g).map(|x| T::lit(x * x));
    out.fill_diagonal(T::zero());
    Ok(Perturbation {
        matrix: SquaredDissimilarityMatrix::new(out)?,
        achieved_snr,
        seed,
    })
}

/// Heap entry ordered by ascending distance.
#[derive(Clone, Copy)]
struct Visit<T> {
    dist: T,
    node: usize,
}

impl<T: PartialOrd> PartialEq for Visit<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: PartialOrd> Eq for Visit<T> {}
impl<T: PartialOrd> PartialOrd for Visit<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: PartialOrd> Ord for Visit<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

type Adjacency<T> = Vec<Vec<(usize, T)>>;

fn dijkstra<T: Real>(adj: &Adjacency<T>, source: usize) -> Vec<Option<T>> {
    let mut dist: Vec<Option<T>> = vec![None; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = Some(T::zero());
    heap.push(Visit {
        dist: T::zero(),
        node: source,
    });
    while let Some(Visit { dist: d, node }) = heap.pop() {
        if let Some(best) = dist[node] {
            if d > best {
                continue;
            }
        }
        for &(next, w) in &adj[node] {
            let cand = d + w;
            if dist[next].is_none_or(|cur| cand < cur) {
                dist[next] = Some(cand);
                heap.push(Visit {
                    dist: cand,
                    node: next,
                });
            }
        }
    }
    dist
}

fn component_sizes<T>(adj: &Adjacency<T>) -> Vec<usize> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut size = 0;
        while let Some(u) = stack.pop() {
            size += 1;
            for &(v, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// All-pairs shortest path lengths; errors when the graph is disconnected.
fn all_pairs<T: Real>(adj: &Adjacency<T>) -> Result<DMatrix<T>> {
    let sizes = component_sizes(adj);
    if sizes.len() > 1 {
        return Err(Error::Disconnected { sizes });
    }
    let n = adj.len();
    let rows: Vec<Vec<Option<T>>> = (0..n).into_par_iter().map(|s| dijkstra(adj, s)).collect();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = rows[i][j].expect("connected graph");
        }
    }
    // Dijkstra from either end may differ in the last bit.
    let half = T::lit(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let s = (out[(i, j)] + out[(j, i)]) * half;
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    Ok(out)
}

fn squared<T: Real>(dist: DMatrix<T>) -> Result<SquaredDissimilarityMatrix<T>> {
    SquaredDissimilarityMatrix::new(dist.map(|x| x * x))
}

/// Undirected weighted edge `(u, v, w)`.
pub type Edge<T> = (usize, usize, T);

/// Shortest-path distances (not squared) of an undirected weighted graph.
pub fn graph_distances<T: Real>(edges: &[Edge<T>], n_nodes: usize) -> Result<DMatrix<T>> {
    if n_nodes < 2 {
        return Err(Error::InvalidDimension("graph needs at least 2 nodes".into()));
    }
    let mut adj: Adjacency<T> = vec![Vec::new(); n_nodes];
    for (idx, &(u, v, w)) in edges.iter().enumerate() {
        if u >= n_nodes || v >= n_nodes {
            return Err(Error::Domain(format!(
                "edge {idx} ({u}, {v}) references a node outside 0..{n_nodes}"
            )));
        }
        if !w.is_finite_value() || w <= T::zero() {
            return Err(Error::Domain(format!(
                "edge {idx} ({u}, {v}) has nonpositive weight {w}"
            )));
        }
        adj[u].push((v, w));
        adj[v].push((u, w));
    }
    all_pairs(&adj)
}

/// Squared shortest-path metric of an undirected weighted graph.
pub fn graph_metric<T: Real>(
    edges: &[Edge<T>],
    n_nodes: usize,
) -> Result<SquaredDissimilarityMatrix<T>> {
    squared(graph_distances(edges, n_nodes)?)
}

/// Geodesic distances (not squared) over the union-symmetrized kNN graph,
/// edges weighted by Euclidean length.
pub fn knn_geodesic_distances<T: Real>(pc: &PointCloud<T>, k: usize) -> Result<DMatrix<T>> {
    let m = pc.len();
    if m < 2 {
        return Err(Error::InvalidDimension("need at least 2 points".into()));
    }
    if k < 1 || k >= m {
        return Err(Error::Domain(format!("k = {k} must satisfy 1 <= k < {m}")));
    }
    let sq = row_sq_distances(pc.points());
    let mut linked = DMatrix::from_element(m, m, false);
    for i in 0..m {
        let mut order: Vec<usize> = (0..m).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| {
            sq[(i, a)]
                .partial_cmp(&sq[(i, b)])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        for &j in order.iter().take(k) {
            linked[(i, j)] = true;
            linked[(j, i)] = true;
        }
    }
    let mut adj: Adjacency<T> = vec![Vec::new(); m];
    for i in 0..m {
        for j in 0..m {
            if linked[(i, j)] {
                adj[i].push((j, sq[(i, j)].sqrt()));
            }
        }
    }
    all_pairs(&adj)
}

/// Squared kNN geodesic metric, the matrix Isomap hands to cMDS.
pub fn knn_geodesic_metric<T: Real>(
    pc: &PointCloud<T>,
    k: usize,
) -> Result<SquaredDissimilarityMatrix<T>> {
    squared(knn_geodesic_distances(pc, k)?)
}

/// Squared distances estimated from commonly observed coordinates,
/// rescaled by `d / |common|`.
pub fn missing_data_metric<T: Real>(
    mpc: &MaskedPointCloud<T>,
) -> Result<SquaredDissimilarityMatrix<T>> {
    let p = mpc.cloud.points();
    let mask = &mpc.mask;
    let (m, d) = p.shape();
    if m < 2 {
        return Err(Error::InvalidDimension("need at least 2 points".into()));
    }
    let dim = T::count(d);
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let mut common = 0usize;
            let mut s = T::zero();
            for t in 0..d {
                if mask[(i, t)] && mask[(j, t)] {
                    common += 1;
                    let x = p[(i, t)] - p[(j, t)];
                    s += x * x;
                }
            }
            if common == 0 {
                return Err(Error::Domain(format!(
                    "points {i} and {j} share no observed coordinate"
                )));
            }
            let v = s * dim / T::count(common);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    SquaredDissimilarityMatrix::new(out)
}

/// Isotropic Gaussian clusters around `centers` (one row each), labelled by
/// cluster index, `per_cluster` points each, in cluster order.
pub fn gaussian_blobs(
    centers: &DMatrix<f64>,
    per_cluster: usize,
    sigma: f64,
    seed: u64,
) -> Result<PointCloud<f64>> {
    let (k, d) = centers.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = DMatrix::zeros(k * per_cluster, d);
    let mut labels = Vec::with_capacity(k * per_cluster);
    for c in 0..k {
        for p in 0..per_cluster {
            let row = c * per_cluster + p;
            for t in 0..d {
                let z: f64 = rng.sample(StandardNormal);
                points[(row, t)] = centers[(c, t)] + sigma * z;
            }
            labels.push(c);
        }
    }
    PointCloud::new(points, Some(labels))
}

/// `m` points drawn uniformly from `[-1, 1]^d`.
pub fn uniform_points(m: usize, d: usize, seed: u64) -> PointCloud<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = DMatrix::from_fn(m, d, |_, _| rng.gen_range(-1.0..1.0));
    PointCloud {
        points,
        labels: None,
    }
}

/// Reorders points with a seeded shuffle, carrying labels along.
pub fn shuffle_points<T: Real>(pc: &PointCloud<T>, seed: u64) -> PointCloud<T> {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..pc.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let points = DMatrix::from_fn(pc.len(), pc.dim(), |i, t| pc.points[(order[i], t)]);
    let labels = pc
        .labels
        .as_ref()
        .map(|l| order.iter().map(|&i| l[i]).collect());
    PointCloud { points, labels }
}
