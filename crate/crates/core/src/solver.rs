//! Block coordinate descent for sparse, manifold-regularized orthogonal Tucker.
//!
//! The objective over cores `G_i` and factors `U_1, U_2, U_3` is
//!
//! ```text
//! L = (1/γ) Σ_i ‖G_i‖_1 + ½ Σ_i ‖X_i − G_i ×_1 U_1 ×_2 U_2 ×_3 U_3‖_F²
//!   + (1/β) Σ_{i<j} w_ij ‖G_i − G_j‖_F²
//! ```
//!
//! with every `U_n` constrained to orthonormal columns. One sweep updates
//! `U_1`, `U_2`, `U_3` by the `qf` of their linear coefficient, then every
//! core in ascending index order by soft-thresholding, each core seeing the
//! already updated cores before it.

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightGraph;
use crate::linalg::qf;
use crate::tensor::{DenseTensor, Matrix, SampleSet};

/// How the neighbor average enters the soft-threshold argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AlphaVariant {
    /// `(β D + 2 Σ w_ij G_j) / (β + 2 s_i)`, the exact per-core minimizer.
    #[default]
    Derived,
    /// `(β D + Σ w_ij G_j) / (β + 2 s_i)`, kept for A/B comparisons only.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// ℓ1 weight is `1/gamma`.
    pub gamma: f64,
    /// Manifold weight is `1/beta`.
    pub beta: f64,
    /// Stop when `|L_{k+1} − L_k| / ‖X‖_F < zeta`.
    pub zeta: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Serial fixed-order reductions, so reruns are bit-identical.
    pub deterministic: bool,
    pub alpha: AlphaVariant,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: 1e4,
            beta: 1e-6,
            zeta: 1e-4,
            max_iter: 500,
            seed: 0,
            deterministic: false,
            alpha: AlphaVariant::Derived,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma", self.gamma),
            ("beta", self.beta),
            ("zeta", self.zeta),
        ] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "max_iter must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Three factor matrices with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    pub u: [Matrix; 3],
}

impl FactorSet {
    pub fn new(u: [Matrix; 3]) -> Self {
        Self { u }
    }

    /// `qf` of seeded standard-Gaussian matrices, drawn mode by mode.
    pub fn random(shape: [usize; 3], ranks: [usize; 3], rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut draw = |rows: usize, cols: usize| -> Result<Matrix> {
            let g = Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut *rng));
            qf(&g)
        };
        Ok(Self {
            u: [
                draw(shape[0], ranks[0])?,
                draw(shape[1], ranks[1])?,
                draw(shape[2], ranks[2])?,
            ],
        })
    }

    pub fn ranks(&self) -> [usize; 3] {
        [self.u[0].cols(), self.u[1].cols(), self.u[2].cols()]
    }

    pub fn extents(&self) -> [usize; 3] {
        [self.u[0].rows(), self.u[1].rows(), self.u[2].rows()]
    }

    /// `max_n ‖U_nᵀ U_n − I‖_F`.
    pub fn orthonormality_error(&self) -> f64 {
        self.u
            .iter()
            .map(Matrix::orthonormality_error)
            .fold(0.0, f64::max)
    }

    /// `G ×_1 U_1 ×_2 U_2 ×_3 U_3`.
    pub fn expand(&self, core: &DenseTensor) -> Result<DenseTensor> {
        core.mode_product(&self.u[0], 0)?
            .mode_product(&self.u[1], 1)?
            .mode_product(&self.u[2], 2)
    }

    /// `X ×_1 U_1ᵀ ×_2 U_2ᵀ ×_3 U_3ᵀ`.
    pub fn project(&self, x: &DenseTensor) -> Result<DenseTensor> {
        x.mode_product_t(&self.u[0], 0)?
            .mode_product_t(&self.u[1], 1)?
            .mode_product_t(&self.u[2], 2)
    }
}

/// One core tensor per sample, all of shape `R_1 × R_2 × R_3`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreSet {
    cores: Vec<DenseTensor>,
}

impl CoreSet {
    pub fn new(cores: Vec<DenseTensor>) -> Result<Self> {
        let first = cores
            .first()
            .ok_or_else(|| Error::InvalidShape("core set must not be empty".into()))?;
        if first.order() != 3 || cores.iter().any(|c| c.shape() != first.shape()) {
            return Err(Error::InvalidShape(
                "cores must be order-3 tensors of one shape".into(),
            ));
        }
        Ok(Self { cores })
    }

    pub fn len(&self) -> usize {
        self.cores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cores.is_empty()
    }

    pub fn shape(&self) -> [usize; 3] {
        let s = self.cores[0].shape();
        [s[0], s[1], s[2]]
    }

    pub fn get(&self, i: usize) -> &DenseTensor {
        &self.cores[i]
    }

    pub fn as_slice(&self) -> &[DenseTensor] {
        &self.cores
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DenseTensor> {
        self.cores.iter()
    }

    pub fn into_vec(self) -> Vec<DenseTensor> {
        self.cores
    }

    /// Fraction of core entries that are zero.
    pub fn sparsity(&self) -> f64 {
        let total: usize = self.cores.iter().map(DenseTensor::len).sum();
        let nnz: usize = self.cores.iter().map(|c| c.norms().l0).sum();
        1.0 - nnz as f64 / total as f64
    }

    fn replace(&mut self, i: usize, core: DenseTensor) {
        self.cores[i] = core;
    }
}

/// The objective and its three terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub total: f64,
    pub l1: f64,
    pub fit: f64,
    pub manifold: f64,
}

/// `max{|x| − τ, 0} · sign(x)`.
#[inline]
pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    let mag = x.abs() - tau;
    if mag > 0.0 {
        mag.copysign(x)
    } else {
        0.0
    }
}

fn check_consistent(
    samples: &SampleSet,
    cores: &CoreSet,
    factors: &FactorSet,
    graph: &WeightGraph,
) -> Result<()> {
    if cores.len() != samples.len() || graph.len() != samples.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples, {} cores, graph over {}",
            samples.len(),
            cores.len(),
            graph.len()
        )));
    }
    if factors.extents() != samples.shape() || factors.ranks() != cores.shape() {
        return Err(Error::DimensionMismatch(format!(
            "factors {:?} -> {:?} do not match samples {:?} and cores {:?}",
            factors.ranks(),
            factors.extents(),
            samples.shape(),
            cores.shape()
        )));
    }
    Ok(())
}

fn validate_ranks(shape: [usize; 3], ranks: [usize; 3]) -> Result<()> {
    for n in 0..3 {
        if ranks[n] == 0 || ranks[n] > shape[n] {
            return Err(Error::InvalidParameter(format!(
                "rank {} of mode {n} must lie in 1..={}",
                ranks[n], shape[n]
            )));
        }
    }
    Ok(())
}

fn manifold_sum(cores: &CoreSet, graph: &WeightGraph) -> Result<f64> {
    let mut acc = 0.0;
    for (i, j, w) in graph.edges() {
        acc += w * cores.get(i).distance_sq(cores.get(j))?;
    }
    Ok(acc)
}

fn assemble(l1_raw: f64, fit_sq: f64, manifold_raw: f64, config: &SolverConfig) -> Objective {
    let l1 = l1_raw / config.gamma;
    let fit = 0.5 * fit_sq;
    let manifold = manifold_raw / config.beta;
    Objective {
        total: l1 + fit + manifold,
        l1,
        fit,
        manifold,
    }
}

/// Evaluates the objective; the manifold sum runs over unordered pairs.
pub fn objective(
    samples: &SampleSet,
    cores: &CoreSet,
    factors: &FactorSet,
    graph: &WeightGraph,
    config: &SolverConfig,
) -> Result<Objective> {
    check_consistent(samples, cores, factors, graph)?;
    let mut fit_sq = 0.0;
    for (x, g) in samples.iter().zip(cores.iter()) {
        fit_sq += x.distance_sq(&factors.expand(g)?)?;
    }
    let l1_raw: f64 = cores.iter().map(|g| g.norms().l1).sum();
    Ok(assemble(
        l1_raw,
        fit_sq,
        manifold_sum(cores, graph)?,
        config,
    ))
}

/// `Σ_i X_i(n) Φ_i(n)ᵀ`, computed as `Σ_i (X_i ×_{k≠n} U_kᵀ)_(n) G_i(n)ᵀ`.
fn factor_target(
    samples: &SampleSet,
    cores: &CoreSet,
    factors: &FactorSet,
    mode: usize,
    parallel: bool,
) -> Result<Matrix> {
    let term = |(x, g): (&DenseTensor, &DenseTensor)| -> Result<Matrix> {
        let mut y = x.clone();
        for k in (0..3).filter(|&k| k != mode) {
            y = y.mode_product_t(&factors.u[k], k)?;
        }
        y.unfold(mode)?.matmul_t(&g.unfold(mode)?)
    };
    let zero = || Matrix::zeros(samples.shape()[mode], factors.u[mode].cols());
    let acc = if parallel {
        samples
            .as_slice()
            .par_iter()
            .zip(cores.as_slice().par_iter())
            .map(term)
            .try_reduce(zero, |mut a, b| {
                a.add_assign(&b)?;
                Ok(a)
            })?
    } else {
        let mut acc = zero();
        for pair in samples.iter().zip(cores.iter()) {
            acc.add_assign(&term(pair)?)?;
        }
        acc
    };
    if !acc.is_finite() {
        return Err(Error::NonFinite("factor update accumulation"));
    }
    Ok(acc)
}

/// Minimizes the fit term over `U_mode` with everything else fixed.
pub fn update_factor(
    samples: &SampleSet,
    cores: &CoreSet,
    factors: &FactorSet,
    mode: usize,
) -> Result<Matrix> {
    if mode >= 3 {
        return Err(Error::ModeOutOfRange { mode, order: 3 });
    }
    check_consistent(samples, cores, factors, &WeightGraph::empty(samples.len()))?;
    qf(&factor_target(samples, cores, factors, mode, false)?)
}

/// Soft-threshold argument `α_i` and threshold `τ_i` of the core-`i` subproblem.
pub fn core_prox_argument(
    samples: &SampleSet,
    cores: &CoreSet,
    factors: &FactorSet,
    graph: &WeightGraph,
    config: &SolverConfig,
    i: usize,
) -> Result<(DenseTensor, f64)> {
    let d = factors.project(samples.get(i))?;
    prox_argument(d, cores, graph, config, config.alpha, i)
}

fn prox_argument(
    d: DenseTensor,
    cores: &CoreSet,
    graph: &WeightGraph,
    config: &SolverConfig,
    variant: AlphaVariant,
    i: usize,
) -> Result<(DenseTensor, f64)> {
    let beta = config.beta;
    let s: f64 = graph.neighbors(i).iter().map(|&(_, w)| w).sum();
    let denom = beta + 2.0 * s;
    let tau = beta / (config.gamma * denom);
    let nb_scale = match variant {
        AlphaVariant::Derived => 2.0,
        AlphaVariant::Printed => 1.0,
    };
    let mut alpha = d.scale(beta);
    for &(j, w) in graph.neighbors(i) {
        alpha.axpy(nb_scale * w, cores.get(j))?;
    }
    Ok((alpha.scale(1.0 / denom), tau))
}

/// Closed-form minimizer of the objective over core `i`.
pub fn update_core(
    samples: &SampleSet,
    cores: &CoreSet,
    factors: &FactorSet,
    graph: &WeightGraph,
    config: &SolverConfig,
    i: usize,
) -> Result<DenseTensor> {
    check_consistent(samples, cores, factors, graph)?;
    if i >= samples.len() {
        return Err(Error::InvalidParameter(format!(
            "sample index {i} out of range"
        )));
    }
    let (alpha, tau) = core_prox_argument(samples, cores, factors, graph, config, i)?;
    Ok(alpha.map(|a| soft_threshold(a, tau)))
}

/// `‖X̂_new − X̂_old‖_F / ‖X‖_F` over the stacked reconstructions.
pub fn relative_error(
    prev: &[DenseTensor],
    curr: &[DenseTensor],
    samples: &SampleSet,
) -> Result<f64> {
    if prev.len() != curr.len() || curr.len() != samples.len() {
        return Err(Error::DimensionMismatch(
            "reconstruction lists must match the sample count".into(),
        ));
    }
    let mut num = 0.0;
    for (a, b) in prev.iter().zip(curr) {
        num += a.distance_sq(b)?;
    }
    let den = samples.frobenius_norm();
    Ok(if den > 0.0 {
        num.sqrt() / den
    } else {
        num.sqrt()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: Objective,
    /// Relative change of the stacked reconstruction over this iteration.
    pub relative_error: f64,
    /// `Σ_i (½ + s_i/β) ‖G_i^new − G_i^old‖_F²`.
    pub decrease_bound: f64,
    /// `(L_old − L_new) − decrease_bound`; nonnegative up to rounding.
    pub decrease_slack: f64,
    pub sparsity: f64,
    pub orthonormality_error: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SolverTrace {
    pub initial: Option<Objective>,
    pub records: Vec<IterationRecord>,
}

impl SolverTrace {
    /// Objective values `L_0, L_1, ...`.
    pub fn objectives(&self) -> Vec<f64> {
        self.initial
            .iter()
            .map(|o| o.total)
            .chain(self.records.iter().map(|r| r.objective.total))
            .collect()
    }

    /// Writes `iter,L,l1_term,fit_term,manifold_term,RE,decrease_slack,sparsity,wall_ms`.
    ///
    /// Row 0 holds the initial objective. With `include_timing` off the
    /// `wall_ms` column is left empty so the file depends only on the inputs.
    pub fn write_csv<W: Write>(&self, out: W, include_timing: bool) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record([
            "iter",
            "L",
            "l1_term",
            "fit_term",
            "manifold_term",
            "RE",
            "decrease_slack",
            "sparsity",
            "wall_ms",
        ])?;
        if let Some(o) = &self.initial {
            wtr.write_record([
                "0".to_string(),
                o.total.to_string(),
                o.l1.to_string(),
                o.fit.to_string(),
                o.manifold.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ])?;
        }
        for r in &self.records {
            wtr.write_record([
                r.iter.to_string(),
                r.objective.total.to_string(),
                r.objective.l1.to_string(),
                r.objective.fit.to_string(),
                r.objective.manifold.to_string(),
                r.relative_error.to_string(),
                r.decrease_slack.to_string(),
                r.sparsity.to_string(),
                if include_timing {
                    format!("{:.3}", r.wall_ms)
                } else {
                    String::new()
                },
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingReason {
    /// The relative objective change fell below `zeta`.
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub factors: FactorSet,
    pub cores: CoreSet,
    pub trace: SolverTrace,
    pub stop: StoppingReason,
}

/// Owns the iterate of one solve run.
pub struct BcdSolver<'a> {
    samples: &'a SampleSet,
    graph: &'a WeightGraph,
    config: SolverConfig,
    factors: FactorSet,
    cores: CoreSet,
    row_sums: Vec<f64>,
    recon: Vec<DenseTensor>,
    objective: Objective,
    x_norm: f64,
}

impl<'a> BcdSolver<'a> {
    /// Random orthonormal factors from `config.seed`; cores start at the
    /// projections of the samples onto those factors.
    pub fn new(
        samples: &'a SampleSet,
        graph: &'a WeightGraph,
        ranks: [usize; 3],
        config: SolverConfig,
    ) -> Result<Self> {
        config.validate()?;
        validate_ranks(samples.shape(), ranks)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let factors = FactorSet::random(samples.shape(), ranks, &mut rng)?;
        let cores = CoreSet::new(
            samples
                .iter()
                .map(|x| factors.project(x))
                .collect::<Result<_>>()?,
        )?;
        Self::with_state(samples, graph, config, factors, cores)
    }

    /// Starts from an explicit iterate.
    pub fn with_state(
        samples: &'a SampleSet,
        graph: &'a WeightGraph,
        config: SolverConfig,
        factors: FactorSet,
        cores: CoreSet,
    ) -> Result<Self> {
        config.validate()?;
        check_consistent(samples, &cores, &factors, graph)?;
        let row_sums = graph.row_sums();
        let mut solver = Self {
            samples,
            graph,
            config,
            factors,
            cores,
            row_sums,
            recon: Vec::new(),
            objective: Objective {
                total: 0.0,
                l1: 0.0,
                fit: 0.0,
                manifold: 0.0,
            },
            x_norm: samples.frobenius_norm(),
        };
        solver.recon = solver.reconstructions()?;
        solver.objective = solver.evaluate(&solver.recon)?;
        if !solver.objective.total.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: 0 });
        }
        Ok(solver)
    }

    pub fn factors(&self) -> &FactorSet {
        &self.factors
    }

    pub fn cores(&self) -> &CoreSet {
        &self.cores
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    fn reconstructions(&self) -> Result<Vec<DenseTensor>> {
        let expand = |g: &DenseTensor| self.factors.expand(g);
        if self.config.deterministic {
            self.cores.iter().map(expand).collect()
        } else {
            self.cores.as_slice().par_iter().map(expand).collect()
        }
    }

    fn evaluate(&self, recon: &[DenseTensor]) -> Result<Objective> {
        let mut fit_sq = 0.0;
        for (x, r) in self.samples.iter().zip(recon) {
            fit_sq += x.distance_sq(r)?;
        }
        let l1_raw: f64 = self.cores.iter().map(|g| g.norms().l1).sum();
        Ok(assemble(
            l1_raw,
            fit_sq,
            manifold_sum(&self.cores, self.graph)?,
            &self.config,
        ))
    }

    /// One full Gauss-Seidel sweep: `U_1, U_2, U_3`, then `G_1 .. G_M`.
    pub fn step(&mut self, iter: usize) -> Result<IterationRecord> {
        let start = Instant::now();
        let parallel = !self.config.deterministic;
        for mode in 0..3 {
            let target = factor_target(self.samples, &self.cores, &self.factors, mode, parallel)?;
            self.factors.u[mode] = qf(&target)?;
        }

        let mut bound = 0.0;
        for i in 0..self.samples.len() {
            let d = self.factors.project(self.samples.get(i))?;
            let (alpha, tau) = prox_argument(
                d,
                &self.cores,
                self.graph,
                &self.config,
                self.config.alpha,
                i,
            )?;
            let next = alpha.map(|a| soft_threshold(a, tau));
            let moved = next.distance_sq(self.cores.get(i))?;
            bound += (0.5 + self.row_sums[i] / self.config.beta) * moved;
            self.cores.replace(i, next);
        }

        let recon = self.reconstructions()?;
        let objective = self.evaluate(&recon)?;
        if !objective.total.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: iter });
        }
        let relative_error = relative_error(&self.recon, &recon, self.samples)?;
        let decrease_slack = (self.objective.total - objective.total) - bound;
        self.recon = recon;
        self.objective = objective;
        Ok(IterationRecord {
            iter,
            objective,
            relative_error,
            decrease_bound: bound,
            decrease_slack,
            sparsity: self.cores.sparsity(),
            orthonormality_error: self.factors.orthonormality_error(),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }

    /// Iterates until the relative objective change drops below `zeta` or
    /// `max_iter` sweeps have run.
    pub fn run(mut self) -> Result<Solution> {
        let mut trace = SolverTrace {
            initial: Some(self.objective),
            records: Vec::new(),
        };
        let denom = if self.x_norm > 0.0 { self.x_norm } else { 1.0 };
        let mut stop = StoppingReason::MaxIterations;
        for iter in 1..=self.config.max_iter {
            let prev = self.objective.total;
            let record = self.step(iter)?;
            trace.records.push(record);
            if (record.objective.total - prev).abs() / denom < self.config.zeta {
                stop = StoppingReason::Converged;
                break;
            }
        }
        Ok(Solution {
            factors: self.factors,
            cores: self.cores,
            trace,
            stop,
        })
    }
}

/// Runs the block coordinate descent from a seeded random start.
pub fn solve(
    samples: &SampleSet,
    graph: &WeightGraph,
    ranks: [usize; 3],
    config: &SolverConfig,
) -> Result<Solution> {
    BcdSolver::new(samples, graph, ranks, *config)?.run()
}

/// First-order stationarity measures; all vanish at a stationary point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stationarity {
    /// Norm of the Riemannian gradient of the fit term for each factor.
    pub factor: [f64; 3],
    /// `‖G_i − Prox_{τ_i}(α_i)‖_F` for each core.
    pub core: Vec<f64>,
}

impl Stationarity {
    pub fn max(&self) -> f64 {
        self.factor
            .iter()
            .chain(self.core.iter())
            .copied()
            .fold(0.0, f64::max)
    }
}

/// Evaluates the stationarity residuals at the given iterate.
///
/// The factor gradients are formed from the explicit `Φ_i(n)` matrices, not
/// from the projected shortcut the solver uses.
pub fn stationarity_residual(
    samples: &SampleSet,
    cores: &CoreSet,
    factors: &FactorSet,
    graph: &WeightGraph,
    config: &SolverConfig,
) -> Result<Stationarity> {
    check_consistent(samples, cores, factors, graph)?;
    let mut factor = [0.0; 3];
    for (mode, slot) in factor.iter_mut().enumerate() {
        let u = &factors.u[mode];
        let mut grad = Matrix::zeros(u.rows(), u.cols());
        for (x, g) in samples.iter().zip(cores.iter()) {
            let mut phi = g.clone();
            for k in (0..3).filter(|&k| k != mode) {
                phi = phi.mode_product(&factors.u[k], k)?;
            }
            let phi = phi.unfold(mode)?;
            let resid = x.unfold(mode)?.sub(&u.matmul(&phi)?)?;
            grad = grad.sub(&resid.matmul_t(&phi)?)?;
        }
        let utg = u.t_matmul(&grad)?;
        let sym = utg.add(&utg.transpose())?.scale(0.5);
        let riemannian = grad.sub(&u.matmul(&sym)?)?;
        *slot = riemannian.frobenius_norm();
    }

    let mut core = Vec::with_capacity(cores.len());
    for i in 0..cores.len() {
        let d = factors.project(samples.get(i))?;
        let (alpha, tau) = prox_argument(d, cores, graph, config, AlphaVariant::Derived, i)?;
        let fixed = alpha.map(|a| soft_threshold(a, tau));
        core.push(fixed.distance_sq(cores.get(i))?.sqrt());
    }
    Ok(Stationarity { factor, core })
}
