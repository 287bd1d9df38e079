//! Joint-space embedding: UMAP (exact kNN, fuzzy simplicial set, SGD layout
//! with negative sampling) or PCA, plus the trustworthiness statistic used
//! to judge how well neighbourhoods survive the projection.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::{JointTrajectory, Trajectory};
use crate::scalar::Real;

const NEGATIVE_SAMPLE_RATE: usize = 5;
const INITIAL_ALPHA: f64 = 1.0;
const REPULSION_STRENGTH: f64 = 1.0;
const GRADIENT_CLIP: f64 = 4.0;
const INIT_HALF_WIDTH: f64 = 10.0;
const SIGMA_SEARCH_ITERS: usize = 64;
const SIGMA_TOLERANCE: f64 = 1e-5;
const MIN_DIST_SCALE: f64 = 1e-3;
const SPREAD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("motion {index} has {found} joints, expected {expected}")]
    JointCountMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("invalid embedding parameters: {0}")]
    InvalidParams(String),
    #[error("invalid neighbourhood size k = {k} for {n} samples")]
    InvalidK { k: usize, n: usize },
    #[error("motion index {index} out of range ({count} motions)")]
    IndexOutOfRange { index: usize, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMethod {
    #[default]
    Umap,
    Pca,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingParams {
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub n_epochs: usize,
    pub seed: u64,
    pub method: EmbeddingMethod,
    /// Embed identical configurations once and share the resulting point.
    pub deduplicate: bool,
}

impl Default for EmbeddingParams {
    fn default() -> Self {
        EmbeddingParams {
            n_neighbors: 15,
            min_dist: 0.1,
            n_epochs: 200,
            seed: 0,
            method: EmbeddingMethod::Umap,
            deduplicate: true,
        }
    }
}

impl EmbeddingParams {
    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.n_neighbors < 2 {
            return Err(EmbedError::InvalidParams("n_neighbors must be >= 2".into()));
        }
        if !(self.min_dist >= 0.0 && self.min_dist < 1.0) {
            return Err(EmbedError::InvalidParams("min_dist must be in [0, 1)".into()));
        }
        if self.n_epochs == 0 {
            return Err(EmbedError::InvalidParams("n_epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// Range of embedding rows belonging to one input motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EmbeddingSpan {
    pub start: usize,
    pub len: usize,
}

/// 2D points for every input configuration, in input order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Embedding<T> {
    pub points: Vec<[T; 2]>,
    pub spans: Vec<EmbeddingSpan>,
    pub timestamps: Vec<T>,
    /// Distinct configurations actually laid out.
    pub unique_points: usize,
}

impl<T: Real> Embedding<T> {
    /// Mean embedded position of one motion.
    pub fn centroid(&self, motion_index: usize) -> Result<[T; 2], EmbedError> {
        let span = self.span(motion_index)?;
        let pts = &self.points[span.start..span.start + span.len];
        let n = T::from_usize_lossy(pts.len().max(1));
        let (sx, sy) = pts
            .iter()
            .fold((T::zero(), T::zero()), |(x, y), p| (x + p[0], y + p[1]));
        Ok([sx / n, sy / n])
    }

    fn span(&self, motion_index: usize) -> Result<EmbeddingSpan, EmbedError> {
        self.spans
            .get(motion_index)
            .copied()
            .ok_or(EmbedError::IndexOutOfRange {
                index: motion_index,
                count: self.spans.len(),
            })
    }
}

/// One motion drawn as a connected line in the embedding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointTrace<T> {
    pub points: Vec<[T; 2]>,
    pub timestamps: Vec<T>,
}

pub fn joint_trace_polyline<T: Real>(
    embedding: &Embedding<T>,
    motion_index: usize,
) -> Result<JointTrace<T>, EmbedError> {
    let span = embedding.span(motion_index)?;
    let range = span.start..span.start + span.len;
    Ok(JointTrace {
        points: embedding.points[range.clone()].to_vec(),
        timestamps: embedding.timestamps[range].to_vec(),
    })
}

/// Embeds the configurations of all `motions` jointly into one 2D space.
pub fn embed_joint_states<T: Real>(
    motions: &[JointTrajectory<T>],
    params: &EmbeddingParams,
) -> Result<Embedding<T>, EmbedError> {
    params.validate()?;
    let dof = motions.first().map_or(0, JointTrajectory::dof);
    let mut rows: Vec<&[T]> = Vec::new();
    let mut spans = Vec::with_capacity(motions.len());
    let mut timestamps = Vec::new();
    for (index, m) in motions.iter().enumerate() {
        if m.dof() != dof {
            return Err(EmbedError::JointCountMismatch {
                index,
                expected: dof,
                found: m.dof(),
            });
        }
        spans.push(EmbeddingSpan {
            start: rows.len(),
            len: m.len(),
        });
        rows.extend(m.configurations().iter().map(Vec::as_slice));
        timestamps.extend_from_slice(m.timestamps());
    }
    let needed = match params.method {
        EmbeddingMethod::Umap => params.n_neighbors + 1,
        EmbeddingMethod::Pca => 1,
    };
    if rows.len() < needed {
        return Err(EmbedError::TooFewSamples {
            needed,
            got: rows.len(),
        });
    }

    let (points, unique_points) = match params.method {
        EmbeddingMethod::Pca => (Pca::fit(&rows).project(&rows), rows.len()),
        EmbeddingMethod::Umap => {
            let (unique, index_of) = if params.deduplicate {
                deduplicate(&rows)
            } else {
                (rows.clone(), (0..rows.len()).collect())
            };
            let layout = umap_layout(&unique, params);
            (index_of.iter().map(|u| layout[*u]).collect(), unique.len())
        }
    };
    Ok(Embedding {
        points,
        spans,
        timestamps,
        unique_points,
    })
}

/// Unique rows (first occurrence order) and, per input row, its unique index.
fn deduplicate<'a, T: Real>(rows: &[&'a [T]]) -> (Vec<&'a [T]>, Vec<usize>) {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut unique = Vec::new();
    let index_of = rows
        .iter()
        .map(|r| {
            // + 0 folds -0.0 into 0.0
            let key = r.iter().map(|v| (v.as_f64() + 0.0).to_bits()).collect();
            *seen.entry(key).or_insert_with(|| {
                unique.push(*r);
                unique.len() - 1
            })
        })
        .collect();
    (unique, index_of)
}

fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum()
}

/// Indices of the `k` nearest other rows of `i`, nearest first (ties by index).
fn nearest<T: Real>(rows: &[&[T]], i: usize, k: usize) -> Vec<(usize, T)> {
    let mut d: Vec<(usize, T)> = (0..rows.len())
        .filter(|j| *j != i)
        .map(|j| (j, sq_dist(rows[i], rows[j])))
        .collect();
    let by = |a: &(usize, T), b: &(usize, T)| {
        a.1.partial_cmp(&b.1)
            .expect("finite distances")
            .then(a.0.cmp(&b.0))
    };
    if k < d.len() {
        d.select_nth_unstable_by(k, by);
        d.truncate(k);
    }
    d.sort_by(by);
    d.into_iter().map(|(j, s)| (j, s.sqrt())).collect()
}

/// Fits `1 / (1 + a·x^(2b))` to the min-dist-offset exponential by
/// Levenberg–Marquardt least squares on 300 points over `[0, 3·spread]`.
pub fn fit_ab(min_dist: f64, spread: f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..300).map(|i| 3.0 * spread * i as f64 / 299.0).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| {
            if *x < min_dist {
                1.0
            } else {
                (-(x - min_dist) / spread).exp()
            }
        })
        .collect();
    let residual = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(x, y)| {
                let r = 1.0 / (1.0 + a * x.powf(2.0 * b)) - y;
                r * r
            })
            .sum()
    };
    let (mut a, mut b) = (1.0, 1.0);
    let mut lambda = 1e-3;
    let mut cost = residual(a, b);
    for _ in 0..500 {
        // normal equations J^T J and J^T r
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (x, y) in xs.iter().zip(&ys) {
            let x2b = if *x > 0.0 { x.powf(2.0 * b) } else { 0.0 };
            let den = 1.0 + a * x2b;
            let f = 1.0 / den;
            let r = f - y;
            let da = -x2b / (den * den);
            let db = if *x > 0.0 {
                -a * x2b * 2.0 * x.ln() / (den * den)
            } else {
                0.0
            };
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let mut improved = false;
        for _ in 0..30 {
            let (m11, m22) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = m11 * m22 - jab * jab;
            if det.abs() < f64::MIN_POSITIVE {
                lambda *= 10.0;
                continue;
            }
            let step_a = -(m22 * ga - jab * gb) / det;
            let step_b = -(m11 * gb - jab * ga) / det;
            let trial = residual(a + step_a, b + step_b);
            if trial.is_finite() && trial < cost {
                a += step_a;
                b += step_b;
                let rel = (cost - trial) / cost.max(f64::MIN_POSITIVE);
                cost = trial;
                lambda = (lambda * 0.1).max(1e-12);
                improved = rel > 1e-15;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (a, b)
}

struct FuzzyGraph<T> {
    heads: Vec<usize>,
    tails: Vec<usize>,
    weights: Vec<T>,
}

/// Per-point `(ρ, σ)` calibration and fuzzy-union symmetrization.
fn fuzzy_graph<T: Real>(rows: &[&[T]], n_neighbors: usize) -> FuzzyGraph<T> {
    let n = rows.len();
    // n_neighbors counts the point itself, as in the reference implementation
    let k = (n_neighbors - 1).min(n - 1);
    let target = T::from_usize_lossy(k + 1).log2();
    let knn: Vec<Vec<(usize, T)>> = (0..n).map(|i| nearest(rows, i, k)).collect();

    let all_mean = {
        let total: T = knn.iter().flat_map(|r| r.iter().map(|(_, d)| *d)).sum();
        total / T::from_usize_lossy((n * k).max(1))
    };

    let mut directed: BTreeMap<(usize, usize), T> = BTreeMap::new();
    for (i, nbrs) in knn.iter().enumerate() {
        let rho = nbrs
            .iter()
            .map(|(_, d)| *d)
            .find(|d| *d > T::zero())
            .unwrap_or_else(T::zero);
        let membership_sum = |sigma: T| -> T {
            nbrs.iter()
                .map(|(_, d)| {
                    let gap = *d - rho;
                    if gap > T::zero() {
                        (-gap / sigma).exp()
                    } else {
                        T::one()
                    }
                })
                .sum()
        };
        let (mut lo, mut hi, mut mid) = (T::zero(), T::infinity(), T::one());
        for _ in 0..SIGMA_SEARCH_ITERS {
            let s = membership_sum(mid);
            if (s - target).abs() < T::lit(SIGMA_TOLERANCE) {
                break;
            }
            if s > target {
                hi = mid;
                mid = (lo + hi) * T::lit(0.5);
            } else {
                lo = mid;
                mid = if hi.is_infinite() {
                    mid * T::lit(2.0)
                } else {
                    (lo + hi) * T::lit(0.5)
                };
            }
        }
        let local_mean = nbrs.iter().map(|(_, d)| *d).sum::<T>() / T::from_usize_lossy(nbrs.len().max(1));
        let floor = T::lit(MIN_DIST_SCALE) * if rho > T::zero() { local_mean } else { all_mean };
        let sigma = mid.max(floor).max(T::min_positive_value());
        for (j, d) in nbrs {
            let gap = *d - rho;
            let w = if gap > T::zero() { (-gap / sigma).exp() } else { T::one() };
            directed.insert((i, *j), w);
        }
    }

    // fuzzy union: w_ij + w_ji − w_ij·w_ji
    let mut sym: BTreeMap<(usize, usize), T> = BTreeMap::new();
    for (&(i, j), &w) in &directed {
        let back = directed.get(&(j, i)).copied().unwrap_or_else(T::zero);
        let u = w + back - w * back;
        sym.insert((i, j), u);
        sym.insert((j, i), u);
    }
    let mut graph = FuzzyGraph {
        heads: Vec::with_capacity(sym.len()),
        tails: Vec::with_capacity(sym.len()),
        weights: Vec::with_capacity(sym.len()),
    };
    for ((i, j), w) in sym {
        graph.heads.push(i);
        graph.tails.push(j);
        graph.weights.push(w);
    }
    graph
}

fn umap_layout<T: Real>(rows: &[&[T]], params: &EmbeddingParams) -> Vec<[T; 2]> {
    let n = rows.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    if n == 1 {
        return vec![[T::zero(), T::zero()]];
    }
    let graph = fuzzy_graph(rows, params.n_neighbors);
    let mut y: Vec<[T; 2]> = (0..n)
        .map(|_| {
            [
                T::lit(rng.random_range(-INIT_HALF_WIDTH..INIT_HALF_WIDTH)),
                T::lit(rng.random_range(-INIT_HALF_WIDTH..INIT_HALF_WIDTH)),
            ]
        })
        .collect();

    let (a, b) = fit_ab(params.min_dist, SPREAD);
    let (a, b) = (T::lit(a), T::lit(b));
    let epochs = T::from_usize_lossy(params.n_epochs);
    let max_w = graph.weights.iter().copied().fold(T::zero(), T::max);
    // edges too weak to be sampled even once are dropped
    let edges: Vec<(usize, usize, T)> = graph
        .heads
        .iter()
        .zip(&graph.tails)
        .zip(&graph.weights)
        .filter(|(_, w)| **w >= max_w / epochs && **w > T::zero())
        .map(|((h, t), w)| (*h, *t, max_w / *w))
        .collect();
    let neg_rate = T::from_usize_lossy(NEGATIVE_SAMPLE_RATE);
    let mut next_sample: Vec<T> = edges.iter().map(|e| e.2).collect();
    let per_negative: Vec<T> = edges.iter().map(|e| e.2 / neg_rate).collect();
    let mut next_negative = per_negative.clone();

    let clip = |g: T| g.max(-T::lit(GRADIENT_CLIP)).min(T::lit(GRADIENT_CLIP));
    let two = T::lit(2.0);
    let gamma = T::lit(REPULSION_STRENGTH);
    for epoch in 0..params.n_epochs {
        let e = T::from_usize_lossy(epoch);
        let alpha = T::lit(INITIAL_ALPHA) * (T::one() - e / epochs);
        for (k, &(head, tail, per_sample)) in edges.iter().enumerate() {
            if next_sample[k] > e {
                continue;
            }
            let mut current = y[head];
            let mut other = y[tail];
            let dsq = (current[0] - other[0]).powi(2) + (current[1] - other[1]).powi(2);
            if dsq > T::zero() {
                let coeff = -two * a * b * dsq.powf(b - T::one()) / (a * dsq.powf(b) + T::one());
                for d in 0..2 {
                    let g = clip(coeff * (current[d] - other[d]));
                    current[d] += g * alpha;
                    other[d] -= g * alpha;
                }
                y[head] = current;
                y[tail] = other;
            }
            next_sample[k] += per_sample;

            let n_neg = ((e - next_negative[k]) / per_negative[k])
                .floor()
                .max(T::zero())
                .to_usize()
                .unwrap_or(0);
            for _ in 0..n_neg {
                let j = rng.random_range(0..n as u32) as usize;
                if j == head {
                    continue;
                }
                let other = y[j];
                let dsq = (current[0] - other[0]).powi(2) + (current[1] - other[1]).powi(2);
                if dsq <= T::zero() {
                    continue;
                }
                let coeff = two * gamma * b / ((T::lit(0.001) + dsq) * (a * dsq.powf(b) + T::one()));
                for d in 0..2 {
                    current[d] += clip(coeff * (current[d] - other[d])) * alpha;
                }
            }
            y[head] = current;
            next_negative[k] += T::from_usize_lossy(n_neg) * per_negative[k];
        }
    }
    y
}

/// Principal components of a row set, from the scatter matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca<T> {
    pub mean: Vec<T>,
    /// Eigenvectors, one per row, by decreasing eigenvalue. Each has its
    /// largest-magnitude entry positive.
    pub components: Vec<Vec<T>>,
    /// Eigenvalues of the (unnormalized) scatter matrix, decreasing.
    pub eigenvalues: Vec<T>,
}

impl<T: Real> Pca<T> {
    pub fn fit(rows: &[&[T]]) -> Self {
        let d = rows.first().map_or(0, |r| r.len());
        let n = T::from_usize_lossy(rows.len().max(1));
        let mut mean = vec![T::zero(); d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += *v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut scatter = vec![vec![T::zero(); d]; d];
        for r in rows {
            for p in 0..d {
                let cp = r[p] - mean[p];
                for q in p..d {
                    scatter[p][q] += cp * (r[q] - mean[q]);
                }
            }
        }
        for p in 0..d {
            for q in 0..p {
                scatter[p][q] = scatter[q][p];
            }
        }
        let (values, vectors) = jacobi_eigen(scatter);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|i, j| values[*j].partial_cmp(&values[*i]).expect("finite eigenvalues"));
        let components = order
            .iter()
            .map(|c| {
                let mut v: Vec<T> = (0..d).map(|r| vectors[r][*c]).collect();
                let lead = v
                    .iter()
                    .copied()
                    .fold(T::zero(), |best, x| if x.abs() > best.abs() { x } else { best });
                if lead < T::zero() {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                v
            })
            .collect();
        Pca {
            mean,
            components,
            eigenvalues: order.iter().map(|c| values[*c]).collect(),
        }
    }

    /// Coordinates on the first two components (zero where fewer exist).
    pub fn project(&self, rows: &[&[T]]) -> Vec<[T; 2]> {
        rows.iter()
            .map(|r| {
                let mut out = [T::zero(); 2];
                for (slot, comp) in out.iter_mut().zip(&self.components) {
                    *slot = r
                        .iter()
                        .zip(&self.mean)
                        .zip(comp)
                        .map(|((x, m), c)| (*x - *m) * *c)
                        .sum();
                }
                out
            })
            .collect()
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
/// Returns eigenvalues and the eigenvector matrix (eigenvectors as columns).
fn jacobi_eigen<T: Real>(mut a: Vec<Vec<T>>) -> (Vec<T>, Vec<Vec<T>>) {
    let d = a.len();
    let mut v: Vec<Vec<T>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let total: T = a.iter().flatten().map(|x| *x * *x).sum::<T>().sqrt();
    for _sweep in 0..100 {
        let off: T = (0..d)
            .flat_map(|p| (0..d).filter(move |q| *q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum::<T>()
            .sqrt();
        if off <= T::epsilon() * T::lit(1e-3) * total || off == T::zero() {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p][q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..d).map(|i| a[i][i]).collect(), v)
}

/// Neighbour ranks of every other row of `i` (1 = nearest), ties by index.
fn ranks_from<P: Fn(usize, usize) -> f64>(n: usize, i: usize, dist: P) -> Vec<usize> {
    let mut others: Vec<(usize, f64)> = (0..n).filter(|j| *j != i).map(|j| (j, dist(i, j))).collect();
    others.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut rank = vec![0; n];
    for (r, (j, _)) in others.iter().enumerate() {
        rank[*j] = r + 1;
    }
    rank
}

/// Trustworthiness of a 2D embedding with respect to the original rows.
///
/// `1 − 2/(n·k·(2n − 3k − 1)) · Σᵢ Σ_{j ∈ Uᵢ} (r(i, j) − k)`, where `Uᵢ` holds
/// the embedded k-neighbours of `i` that are not among its original
/// k-neighbours and `r` is the rank in the original space. Requires `2k < n`.
pub fn trustworthiness<T: Real>(high: &[Vec<T>], low: &[[T; 2]], k: usize) -> Result<T, EmbedError> {
    let n = high.len();
    if low.len() != n {
        return Err(EmbedError::InvalidParams(format!(
            "{} original rows but {} embedded points",
            n,
            low.len()
        )));
    }
    if k == 0 || 2 * k >= n {
        return Err(EmbedError::InvalidK { k, n });
    }
    let mut penalty = 0usize;
    for i in 0..n {
        let high_rank = ranks_from(n, i, |a, b| sq_dist(&high[a], &high[b]).as_f64());
        let low_rank = ranks_from(n, i, |a, b| {
            let dx = low[a][0] - low[b][0];
            let dy = low[a][1] - low[b][1];
            (dx * dx + dy * dy).as_f64()
        });
        for j in (0..n).filter(|j| *j != i && low_rank[*j] <= k) {
            if high_rank[j] > k {
                penalty += high_rank[j] - k;
            }
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let score = 1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * penalty as f64;
    Ok(T::lit(score))
}
