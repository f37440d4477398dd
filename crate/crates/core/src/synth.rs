//! Synthetic clustered data, an independent HOOI reference solver, and
//! evaluation metrics for decomposition runs.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{knn_indices, pairwise_sq_distances};
use crate::linalg::sym_eig;
use crate::solver::{CoreSet, FactorSet};
use crate::tensor::{DenseTensor, Matrix, SampleSet};

/// ChaCha stream used by [`generate`].
const SYNTH_STREAM: u64 = 0x5eed;

/// Recipe for a clustered low-multilinear-rank sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub m: usize,
    pub shape: [usize; 3],
    pub ranks: [usize; 3],
    /// Fraction of core entries outside each cluster's support.
    pub sparsity: f64,
    pub clusters: usize,
    /// Scale of the cluster prototypes relative to the unit within-cluster spread.
    pub separation: f64,
    /// Standard deviation of additive Gaussian noise on the samples.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            m: 24,
            shape: [16, 16, 6],
            ranks: [5, 5, 6],
            sparsity: 0.5,
            clusters: 3,
            separation: 4.0,
            noise: 0.01,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        for n in 0..3 {
            if self.ranks[n] == 0 || self.ranks[n] > self.shape[n] {
                return bad(format!(
                    "rank {} of mode {n} must lie in 1..={}",
                    self.ranks[n], self.shape[n]
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.sparsity) {
            return bad(format!(
                "sparsity must lie in [0, 1], got {}",
                self.sparsity
            ));
        }
        if self.clusters == 0 || self.clusters > self.m {
            return bad(format!(
                "clusters must lie in 1..={}, got {}",
                self.m, self.clusters
            ));
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return bad(format!(
                "separation must be finite and nonnegative, got {}",
                self.separation
            ));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!(
                "noise must be finite and nonnegative, got {}",
                self.noise
            ));
        }
        Ok(())
    }
}

/// Generated samples with the ground truth they were built from.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub samples: SampleSet,
    pub factors: FactorSet,
    pub cores: CoreSet,
    /// Cluster index of each sample; samples are assigned round-robin.
    pub labels: Vec<usize>,
}

/// Draws `X_i = G_i ×_1 U_1 ×_2 U_2 ×_3 U_3 + noise`.
///
/// Each cluster owns a random support and a prototype on it; a sample's core
/// is its prototype plus unit Gaussian spread on the same support.
pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    // A separate stream keeps the truth independent of a solver seeded alike.
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(SYNTH_STREAM);
    let factors = FactorSet::random(spec.shape, spec.ranks, &mut rng)?;
    let core_len: usize = spec.ranks.iter().product();
    let support_len = ((1.0 - spec.sparsity) * core_len as f64).round() as usize;

    let mut prototypes = Vec::with_capacity(spec.clusters);
    for _ in 0..spec.clusters {
        let mut idx: Vec<usize> = (0..core_len).collect();
        idx.shuffle(&mut rng);
        idx.truncate(support_len);
        idx.sort_unstable();
        let values: Vec<f64> = idx
            .iter()
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                spec.separation * z
            })
            .collect();
        prototypes.push((idx, values));
    }

    let labels: Vec<usize> = (0..spec.m).map(|i| i % spec.clusters).collect();
    let mut cores = Vec::with_capacity(spec.m);
    for &c in &labels {
        let (support, proto) = &prototypes[c];
        let mut data = vec![0.0; core_len];
        for (&k, &p) in support.iter().zip(proto) {
            let spread: f64 = StandardNormal.sample(&mut rng);
            data[k] = p + spread;
        }
        cores.push(DenseTensor::new(spec.ranks.to_vec(), data)?);
    }

    let mut samples = Vec::with_capacity(spec.m);
    for g in &cores {
        let mut x = factors.expand(g)?;
        if spec.noise > 0.0 {
            for v in x.as_mut_slice() {
                let e: f64 = StandardNormal.sample(&mut rng);
                *v += spec.noise * e;
            }
        }
        samples.push(x);
    }

    Ok(SynthData {
        samples: SampleSet::new(samples)?,
        factors,
        cores: CoreSet::new(cores)?,
        labels,
    })
}

/// Result of the reference orthogonal Tucker solver.
#[derive(Debug, Clone)]
pub struct HooiResult {
    pub factors: FactorSet,
    pub cores: CoreSet,
    /// `½ Σ_i ‖X_i − G_i ×_1 U_1 ×_2 U_2 ×_3 U_3‖_F²` after each iteration.
    pub fit_history: Vec<f64>,
}

impl HooiResult {
    pub fn fit(&self) -> f64 {
        *self
            .fit_history
            .last()
            .expect("HOOI records at least one fit")
    }
}

/// Leading `r` eigenvectors of a symmetric positive semidefinite matrix.
fn leading_subspace(gram: &Matrix, r: usize) -> Result<Matrix> {
    let eig = sym_eig(gram)?;
    let n = gram.rows();
    Ok(Matrix::from_fn(n, r, |i, j| eig.vectors.get(i, j)))
}

fn project_all_but(x: &DenseTensor, u: &[Matrix; 3], skip: Option<usize>) -> Result<DenseTensor> {
    let mut y = x.clone();
    for (k, uk) in u.iter().enumerate() {
        if Some(k) != skip {
            y = y.mode_product_t(uk, k)?;
        }
    }
    Ok(y)
}

/// Higher-order orthogonal iteration on the stacked fourth-order tensor with
/// the sample mode left uncompressed.
///
/// Starts from the truncated HOSVD and stops once the fit changes by less than
/// `tol · ‖X‖_F²` or after `max_iter` sweeps. Orthogonal projection gives
/// `fit = ½ (‖X‖² − Σ ‖G_i‖²)`.
pub fn hooi_oracle(
    samples: &SampleSet,
    ranks: [usize; 3],
    max_iter: usize,
    tol: f64,
) -> Result<HooiResult> {
    let shape = samples.shape();
    for n in 0..3 {
        if ranks[n] == 0 || ranks[n] > shape[n] {
            return Err(Error::DimensionMismatch(format!(
                "rank {} of mode {n} exceeds extent {}",
                ranks[n], shape[n]
            )));
        }
    }
    let energy: f64 = samples.iter().map(|x| x.inner(x)).sum::<Result<f64>>()?;

    let gram_of = |ys: &[DenseTensor], mode: usize| -> Result<Matrix> {
        let mut gram = Matrix::zeros(shape[mode], shape[mode]);
        for y in ys {
            let unf = y.unfold(mode)?;
            gram.add_assign(&unf.matmul_t(&unf)?)?;
        }
        Ok(gram)
    };

    let mut u: [Matrix; 3] = [
        leading_subspace(&gram_of(samples.as_slice(), 0)?, ranks[0])?,
        leading_subspace(&gram_of(samples.as_slice(), 1)?, ranks[1])?,
        leading_subspace(&gram_of(samples.as_slice(), 2)?, ranks[2])?,
    ];

    let fit_of = |u: &[Matrix; 3]| -> Result<(Vec<DenseTensor>, f64)> {
        let cores: Vec<DenseTensor> = samples
            .iter()
            .map(|x| project_all_but(x, u, None))
            .collect::<Result<_>>()?;
        let kept: f64 = cores.iter().map(|g| g.inner(g)).sum::<Result<f64>>()?;
        Ok((cores, 0.5 * (energy - kept).max(0.0)))
    };

    let (mut cores, fit0) = fit_of(&u)?;
    let mut history = vec![fit0];
    for _ in 0..max_iter {
        for mode in 0..3 {
            let ys: Vec<DenseTensor> = samples
                .iter()
                .map(|x| project_all_but(x, &u, Some(mode)))
                .collect::<Result<_>>()?;
            u[mode] = leading_subspace(&gram_of(&ys, mode)?, ranks[mode])?;
        }
        let (next, fit) = fit_of(&u)?;
        cores = next;
        let prev = *history.last().unwrap();
        history.push(fit);
        if (prev - fit).abs() <= tol * energy {
            break;
        }
    }

    Ok(HooiResult {
        factors: FactorSet::new(u),
        cores: CoreSet::new(cores)?,
        fit_history: history,
    })
}

/// Mean fraction of each sample's `k` nearest raw-space neighbors that are
/// also among its `k` nearest core-space neighbors. Ties break by index.
pub fn neighbor_preservation(raw: &SampleSet, cores: &CoreSet, k: usize) -> Result<f64> {
    let m = raw.len();
    if cores.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{m} samples but {} cores",
            cores.len()
        )));
    }
    if k == 0 || k >= m {
        return Err(Error::InvalidParameter(format!(
            "k must lie in 1..{m}, got {k}"
        )));
    }
    let dx = pairwise_sq_distances(raw.as_slice())?;
    let dg = pairwise_sq_distances(cores.as_slice())?;
    let mut total = 0.0;
    for i in 0..m {
        let nx = knn_indices(&dx, i, k);
        let ng = knn_indices(&dg, i, k);
        let shared = nx.iter().filter(|j| ng.contains(j)).count();
        total += shared as f64 / k as f64;
    }
    Ok(total / m as f64)
}

/// Nearest-centroid classifier over flattened feature vectors.
#[derive(Debug, Clone)]
pub struct NearestCentroid<L> {
    classes: Vec<(L, Vec<f64>)>,
}

impl<L: Ord + Clone> NearestCentroid<L> {
    pub fn fit(features: &[&[f64]], labels: &[L]) -> Result<Self> {
        if features.is_empty() || features.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature vectors but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let dim = features[0].len();
        let mut sums: BTreeMap<&L, (Vec<f64>, usize)> = BTreeMap::new();
        for (f, l) in features.iter().zip(labels) {
            if f.len() != dim {
                return Err(Error::DimensionMismatch("feature lengths differ".into()));
            }
            let entry = sums.entry(l).or_insert_with(|| (vec![0.0; dim], 0));
            for (a, &b) in entry.0.iter_mut().zip(f.iter()) {
                *a += b;
            }
            entry.1 += 1;
        }
        let classes = sums
            .into_iter()
            .map(|(l, (s, n))| (l.clone(), s.into_iter().map(|v| v / n as f64).collect()))
            .collect();
        Ok(Self { classes })
    }

    /// Label of the closest centroid; ties go to the smallest label.
    pub fn predict(&self, feature: &[f64]) -> &L {
        let mut best = (f64::INFINITY, &self.classes[0].0);
        for (l, c) in &self.classes {
            let d: f64 = c.iter().zip(feature).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best.0 {
                best = (d, l);
            }
        }
        best.1
    }
}

/// Accuracy of a nearest-centroid classifier on a stratified half split.
///
/// Within each class the samples are shuffled with `split_seed`; the first
/// `⌊n/2⌋` train and the rest test.
pub fn nearest_centroid<L: Ord + Clone>(
    cores: &CoreSet,
    labels: &[L],
    split_seed: u64,
) -> Result<f64> {
    if labels.len() != cores.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} cores but {} labels",
            cores.len(),
            labels.len()
        )));
    }
    let mut by_class: BTreeMap<&L, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if by_class.len() < 2 {
        return Err(Error::InvalidParameter(
            "at least two classes are required".into(),
        ));
    }
    if by_class.values().any(|v| v.len() < 2) {
        return Err(Error::InvalidParameter(
            "every class needs at least two samples".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for idx in by_class.values() {
        let mut idx = idx.clone();
        idx.shuffle(&mut rng);
        let cut = idx.len() / 2;
        train.extend_from_slice(&idx[..cut]);
        test.extend_from_slice(&idx[cut..]);
    }
    let feats: Vec<&[f64]> = train.iter().map(|&i| cores.get(i).as_slice()).collect();
    let train_labels: Vec<L> = train.iter().map(|&i| labels[i].clone()).collect();
    let model = NearestCentroid::fit(&feats, &train_labels)?;
    let correct = test
        .iter()
        .filter(|&&i| model.predict(cores.get(i).as_slice()) == &labels[i])
        .count();
    Ok(correct as f64 / test.len() as f64)
}

/// Summary of per-iteration wall times in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub iterations: usize,
    pub total_ms: Option<f64>,
    pub median_ms: Option<f64>,
}

impl TimingSummary {
    /// `iterations` counts sweeps; `wall_ms` may be empty if timing was not recorded.
    pub fn new(iterations: usize, wall_ms: &[f64]) -> Self {
        if wall_ms.is_empty() {
            return Self {
                iterations,
                total_ms: None,
                median_ms: None,
            };
        }
        let mut sorted = wall_ms.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            0.5 * (sorted[mid - 1] + sorted[mid])
        };
        Self {
            iterations,
            total_ms: Some(sorted.iter().sum()),
            median_ms: Some(median),
        }
    }
}

/// Quality metrics of a finished decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `‖X − X̂‖_F / ‖X‖_F` over the stacked samples.
    pub relative_error: f64,
    pub sparsity: f64,
    pub neighbor_k: usize,
    pub neighbor_preservation: f64,
    /// Absent when the samples carry no labels.
    pub nearest_centroid_accuracy: Option<f64>,
    pub timing: TimingSummary,
}

impl EvalReport {
    pub fn evaluate<L: Ord + Clone>(
        samples: &SampleSet,
        labels: Option<&[L]>,
        factors: &FactorSet,
        cores: &CoreSet,
        k: usize,
        split_seed: u64,
        timing: TimingSummary,
    ) -> Result<Self> {
        if cores.len() != samples.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples but {} cores",
                samples.len(),
                cores.len()
            )));
        }
        let mut resid = 0.0;
        for (x, g) in samples.iter().zip(cores.iter()) {
            resid += x.distance_sq(&factors.expand(g)?)?;
        }
        let norm = samples.frobenius_norm();
        let relative_error = if norm > 0.0 {
            resid.sqrt() / norm
        } else {
            resid.sqrt()
        };
        let nearest_centroid_accuracy = match labels {
            Some(l) => Some(nearest_centroid(cores, l, split_seed)?),
            None => None,
        };
        Ok(Self {
            relative_error,
            sparsity: cores.sparsity(),
            neighbor_k: k,
            neighbor_preservation: neighbor_preservation(samples, cores, k)?,
            nearest_centroid_accuracy,
            timing,
        })
    }

    /// One JSON object on a single line.
    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>, digits: usize| match v {
            Some(v) => format!("{v:.digits$}"),
            None => "-".to_string(),
        };
        writeln!(f, "{:<28}{:.6e}", "relative error", self.relative_error)?;
        writeln!(f, "{:<28}{:.4}", "core sparsity", self.sparsity)?;
        writeln!(
            f,
            "{:<28}{:.4}",
            format!("neighbor preservation (k={})", self.neighbor_k),
            self.neighbor_preservation
        )?;
        writeln!(
            f,
            "{:<28}{}",
            "nearest-centroid accuracy",
            opt(self.nearest_centroid_accuracy, 4)
        )?;
        writeln!(f, "{:<28}{}", "iterations", self.timing.iterations)?;
        writeln!(
            f,
            "{:<28}{}",
            "median iteration ms",
            opt(self.timing.median_ms, 3)
        )?;
        write!(f, "{:<28}{}", "total ms", opt(self.timing.total_ms, 3))
    }
}
