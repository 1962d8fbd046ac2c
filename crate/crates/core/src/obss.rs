//! Optimization-based signal shaping.
//!
//! The design problem is split into size optimization and entry
//! optimization. Size optimization grows a per-TAC constellation partition
//! one point at a time, starting from an exhaustively searched two-point
//! design. Entry optimization, with the partition fixed, stacks all symbol
//! vectors into one variable `q`: every squared pairwise weighted distance
//! becomes a quadratic form `q^T Q_ij q` assembled from blocks of
//! `R_AW = W^T A^T A W`, and the average-power constraint becomes
//! `||q||^2 <= t`. The resulting max-min QCQP is non-convex; it is solved
//! by sequential convexification with multi-start (see [`solve_entry_qcqp`]).
//!
//! Cost grows steeply with the set size: a step at size `t` solves `|F|`
//! instances with `2 t N_RF` variables and `C(t, 2)` constraints each, so
//! the final steps dominate. This is affordable offline (seconds at desk
//! scale) but heavy for per-channel adaptive use, where the codebook
//! designer is the practical choice.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, substream_indexed};
use crate::shaping::{Provenance, TransmitSet, WeightMatrix};
use crate::tac::{apply_tac, enumerate_tacs, TacDescriptor, TacFamily};

pub use crate::fixtures::load_fixture_set;

/// Candidates whose objective is within this relative slack of the best are
/// treated as ties and resolved by lowest index, so that symmetric
/// configurations select deterministically despite solver noise.
pub const CANDIDATE_TIE_REL: f64 = 1e-7;

/// How many points each TAC's signal constellation holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionIndicator {
    counts: Vec<usize>,
}

impl PartitionIndicator {
    pub fn empty(n_tacs: usize) -> Self {
        PartitionIndicator {
            counts: vec![0; n_tacs],
        }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn n_tacs(&self) -> usize {
        self.counts.len()
    }

    /// A copy with one more point assigned to TAC `k`.
    pub fn with_added(&self, k: usize) -> Self {
        let mut counts = self.counts.clone();
        counts[k] += 1;
        PartitionIndicator { counts }
    }

    /// TAC index of every point in stacking order (TAC-major).
    pub fn point_tacs(&self) -> Vec<usize> {
        let mut tacs = Vec::with_capacity(self.total());
        for (k, &c) in self.counts.iter().enumerate() {
            tacs.extend(std::iter::repeat_n(k, c));
        }
        tacs
    }
}

/// The entry-optimization problem for one fixed partition: `t` points, each
/// a `2 N_RF` symbol block of the stacked variable `q`, pairwise distance
/// quadratic forms read out of `R_AW`, and the power budget `||q||^2 <= t`.
#[derive(Debug, Clone)]
pub struct QcqpInstance {
    n_points: usize,
    block: usize,
    r_aw: DMatrix<f64>,
    point_tacs: Vec<usize>,
    budget: f64,
}

impl QcqpInstance {
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Length of one symbol block, `2 N_RF`.
    pub fn block_len(&self) -> usize {
        self.block
    }

    /// Dimension of the stacked variable, `2 t N_RF`.
    pub fn dim(&self) -> usize {
        self.n_points * self.block
    }

    /// Power budget: `q^T q <= budget`, equal to the point count `t`.
    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn point_tacs(&self) -> &[usize] {
        &self.point_tacs
    }

    pub fn r_aw(&self) -> &DMatrix<f64> {
        &self.r_aw
    }

    /// All unordered point pairs `(i, j)` with `i < j`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.n_points * (self.n_points - 1) / 2);
        for i in 0..self.n_points {
            for j in (i + 1)..self.n_points {
                out.push((i, j));
            }
        }
        out
    }

    /// `q^T Q_ij q`, the squared weighted distance of points `i` and `j`.
    /// Round-off can produce tiny negatives for coincident points; the value
    /// is clamped at zero.
    pub fn quadratic_form(&self, i: usize, j: usize, q: &DVector<f64>) -> f64 {
        let b = self.block;
        let (oi, oj) = (i * b, j * b);
        let mut v = 0.0;
        for r in 0..b {
            let qi_r = q[oi + r];
            let qj_r = q[oj + r];
            for c in 0..b {
                v += qi_r * self.r_aw[(oi + r, oi + c)] * q[oi + c];
                v += qj_r * self.r_aw[(oj + r, oj + c)] * q[oj + c];
                v -= 2.0 * qi_r * self.r_aw[(oi + r, oj + c)] * q[oj + c];
            }
        }
        v.max(0.0)
    }

    /// Smallest pairwise quadratic form at `q`.
    pub fn min_quadratic_form(&self, q: &DVector<f64>) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.n_points {
            for j in (i + 1)..self.n_points {
                best = best.min(self.quadratic_form(i, j, q));
            }
        }
        best
    }

    /// Gradient of `q^T Q_ij q`, nonzero only on blocks `i` and `j`; written
    /// into `(grad_i, grad_j)`.
    fn gradient_blocks(
        &self,
        i: usize,
        j: usize,
        q: &DVector<f64>,
        grad_i: &mut [f64],
        grad_j: &mut [f64],
    ) {
        let b = self.block;
        let (oi, oj) = (i * b, j * b);
        for r in 0..b {
            let mut gi = 0.0;
            let mut gj = 0.0;
            for c in 0..b {
                gi += self.r_aw[(oi + r, oi + c)] * q[oi + c];
                gi -= self.r_aw[(oi + r, oj + c)] * q[oj + c];
                gj += self.r_aw[(oj + r, oj + c)] * q[oj + c];
                gj -= self.r_aw[(oj + r, oi + c)] * q[oi + c];
            }
            grad_i[r] = 2.0 * gi;
            grad_j[r] = 2.0 * gj;
        }
    }

    /// Materialize the dense `Q_ij` (test and diagnostic use; the solver
    /// works on blocks).
    pub fn dense_q(&self, i: usize, j: usize) -> DMatrix<f64> {
        let b = self.block;
        let n = self.dim();
        let (oi, oj) = (i * b, j * b);
        let mut m = DMatrix::zeros(n, n);
        for r in 0..b {
            for c in 0..b {
                m[(oi + r, oi + c)] = self.r_aw[(oi + r, oi + c)];
                m[(oj + r, oj + c)] = self.r_aw[(oj + r, oj + c)];
                m[(oi + r, oj + c)] = -self.r_aw[(oi + r, oj + c)];
                m[(oj + r, oi + c)] = -self.r_aw[(oj + r, oi + c)];
            }
        }
        m
    }

    /// Scatter the symbol blocks of `q` back into transmit vectors.
    pub fn reconstruct_vectors(
        &self,
        family: &TacFamily,
        q: &DVector<f64>,
    ) -> Result<Vec<DVector<f64>>> {
        if q.len() != self.dim() {
            return Err(Error::dims("stacked variable length mismatch"));
        }
        let n_t = family.config().n_t;
        self.point_tacs
            .iter()
            .enumerate()
            .map(|(p, &k)| {
                let block =
                    DVector::from_row_slice(&q.as_slice()[p * self.block..(p + 1) * self.block]);
                apply_tac(family.get(k), &block, n_t)
            })
            .collect()
    }
}

/// Assemble the entry-optimization instance for a partition under weight `A`.
pub fn build_qcqp(
    partition: &PartitionIndicator,
    family: &TacFamily,
    a: &WeightMatrix,
) -> Result<QcqpInstance> {
    let t = partition.total();
    if t < 2 {
        return Err(Error::invalid_config(
            "entry optimization needs at least two points",
        ));
    }
    if partition.n_tacs() != family.len() {
        return Err(Error::dims("partition length differs from TAC family size"));
    }
    let config = family.config();
    if a.dim() != config.real_dim() {
        return Err(Error::dims(format!(
            "weight has {} columns, expected {}",
            a.dim(),
            config.real_dim()
        )));
    }

    let n_t = config.n_t;
    let n_rf = config.n_rf;
    let block = 2 * n_rf;
    let point_tacs = partition.point_tacs();

    // Column index of each selection-matrix column in the 2*N_t vector space.
    let tac_columns = |tac: &TacDescriptor| -> Vec<usize> {
        tac.real_support
            .iter()
            .copied()
            .chain(tac.imag_support.iter().map(|&i| n_t + i))
            .collect::<Vec<_>>()
    };
    let columns: Vec<Vec<usize>> = family.members().iter().map(tac_columns).collect();

    // R_AW = W^T (A^T A) W is a gather of G = A^T A: block (p, p') of R_AW
    // is G indexed by the active columns of the two points' TACs.
    let g = a.matrix().transpose() * a.matrix();
    let dim = t * block;
    let mut r_aw = DMatrix::zeros(dim, dim);
    for (p, &kp) in point_tacs.iter().enumerate() {
        for (pp, &kpp) in point_tacs.iter().enumerate() {
            for r in 0..block {
                for c in 0..block {
                    r_aw[(p * block + r, pp * block + c)] = g[(columns[kp][r], columns[kpp][c])];
                }
            }
        }
    }

    Ok(QcqpInstance {
        n_points: t,
        block,
        r_aw,
        point_tacs,
        budget: t as f64,
    })
}

/// Solver knobs. `max_iters` bounds the outer convexification iterations per
/// restart, `inner_iters` the subgradient steps spent on each surrogate,
/// `tol` the objective improvement under which a restart stops.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub restarts: usize,
    pub inner_iters: usize,
    pub seed: u64,
    pub record_trace: bool,
    /// Deterministic extra start (restart 0), e.g. the previous recursion
    /// step's solution padded with a fresh block.
    pub warm_start: Option<DVector<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 500,
            tol: 1e-6,
            restarts: 20,
            inner_iters: 200,
            seed: 0,
            record_trace: false,
            warm_start: None,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.inner_iters == 0 || self.restarts == 0 {
            return Err(Error::invalid_config(
                "solver iteration and restart counts must be positive",
            ));
        }
        if self.tol <= 0.0 {
            return Err(Error::invalid_config("solver tolerance must be positive"));
        }
        Ok(())
    }
}

/// Result of one entry optimization: the stacked variable, the achieved
/// min squared distance, and whether the winning restart converged before
/// its iteration budget.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub q: DVector<f64>,
    pub dmin_sq: f64,
    pub converged: bool,
    /// Objective after each outer iteration of the winning restart
    /// (populated when `record_trace` is set); non-decreasing.
    pub trace: Vec<f64>,
}

/// One affine lower bound `l_p(y) = g_i . y_i + g_j . y_j + c` of a pair's
/// quadratic form, linearized at the current iterate.
struct PairLinearization {
    i: usize,
    j: usize,
    grad_i: Vec<f64>,
    grad_j: Vec<f64>,
    constant: f64,
}

impl PairLinearization {
    fn eval(&self, y: &DVector<f64>, block: usize) -> f64 {
        let (oi, oj) = (self.i * block, self.j * block);
        let mut v = self.constant;
        for r in 0..block {
            v += self.grad_i[r] * y[oi + r] + self.grad_j[r] * y[oj + r];
        }
        v
    }
}

/// Relative step lengths of the projected-subgradient ladder; each rung gets
/// an equal share of `inner_iters`.
const STEP_LADDER: [f64; 4] = [0.25, 0.08, 0.025, 0.008];

fn min_linearization(lins: &[PairLinearization], y: &DVector<f64>, block: usize) -> (f64, usize) {
    let mut best = f64::INFINITY;
    let mut arg = 0;
    for (p, lin) in lins.iter().enumerate() {
        let v = lin.eval(y, block);
        if v < best {
            best = v;
            arg = p;
        }
    }
    (best, arg)
}

/// Maximize `min_p l_p(y)` over the ball of the given radius by projected
/// subgradient ascent with a decreasing step ladder, starting from `y0`.
/// Returns the best visited point; since `y0` is visited, the result is at
/// least as good as the start.
fn ascend_surrogate(
    inst: &QcqpInstance,
    lins: &[PairLinearization],
    y0: &DVector<f64>,
    radius: f64,
    inner_iters: usize,
) -> (DVector<f64>, f64) {
    let block = inst.block;
    let mut y = y0.clone();
    let (mut best_f, _) = min_linearization(lins, &y, block);
    let mut best_y = y.clone();

    let per_rung = (inner_iters / STEP_LADDER.len()).max(1);
    for &rel_step in &STEP_LADDER {
        for _ in 0..per_rung {
            let (f, p) = min_linearization(lins, &y, block);
            if f > best_f {
                best_f = f;
                best_y.copy_from(&y);
            }
            let lin = &lins[p];
            let gnorm = (lin.grad_i.iter().map(|g| g * g).sum::<f64>()
                + lin.grad_j.iter().map(|g| g * g).sum::<f64>())
            .sqrt();
            if gnorm < 1e-300 {
                return (best_y, best_f);
            }
            let alpha = rel_step * radius / gnorm;
            let (oi, oj) = (lin.i * block, lin.j * block);
            for r in 0..block {
                y[oi + r] += alpha * lin.grad_i[r];
                y[oj + r] += alpha * lin.grad_j[r];
            }
            let n = y.norm();
            if n > radius {
                y *= radius / n;
            }
        }
    }
    let (f, _) = min_linearization(lins, &y, block);
    if f > best_f {
        best_f = f;
        best_y.copy_from(&y);
    }
    (best_y, best_f)
}

fn linearize_all(
    inst: &QcqpInstance,
    pairs: &[(usize, usize)],
    q: &DVector<f64>,
) -> Vec<PairLinearization> {
    let block = inst.block;
    pairs
        .iter()
        .map(|&(i, j)| {
            let mut grad_i = vec![0.0; block];
            let mut grad_j = vec![0.0; block];
            inst.gradient_blocks(i, j, q, &mut grad_i, &mut grad_j);
            // l(y) = 2 q^T Q y - q^T Q q = g . y - qf(q)
            let constant = -inst.quadratic_form(i, j, q);
            PairLinearization {
                i,
                j,
                grad_i,
                grad_j,
                constant,
            }
        })
        .collect()
}

struct RestartResult {
    q: DVector<f64>,
    dmin_sq: f64,
    converged: bool,
    trace: Vec<f64>,
}

fn run_ccp(
    inst: &QcqpInstance,
    pairs: &[(usize, usize)],
    mut q: DVector<f64>,
    opts: &SolverOptions,
) -> RestartResult {
    let radius = inst.budget.sqrt();
    let n = q.norm();
    if n > radius {
        q *= radius / n;
    }
    let mut obj = inst.min_quadratic_form(&q);
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(obj);
    }
    let mut converged = false;
    for _ in 0..opts.max_iters {
        let lins = linearize_all(inst, pairs, &q);
        let (y, _) = ascend_surrogate(inst, &lins, &q, radius, opts.inner_iters);
        let new_obj = inst.min_quadratic_form(&y);
        let improvement = new_obj - obj;
        q = y;
        obj = new_obj;
        if opts.record_trace {
            trace.push(obj);
        }
        if improvement < opts.tol {
            converged = true;
            break;
        }
    }
    // The max-min optimum saturates the power budget; rescale to equality.
    let n = q.norm();
    if n > 0.0 {
        q *= radius / n;
        obj = inst.min_quadratic_form(&q);
        if opts.record_trace {
            trace.push(obj);
        }
    }
    RestartResult {
        q,
        dmin_sq: obj,
        converged,
        trace,
    }
}

fn random_sphere_point<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> DVector<f64> {
    loop {
        let v: DVector<f64> = DVector::from_fn(dim, |_, _| StandardNormal.sample(rng));
        let n = v.norm();
        if n > 1e-12 {
            return v * (radius / n);
        }
    }
}

/// Multi-start entry optimization. Each restart runs sequential
/// convexification: every constraint `q^T Q q >= tau` is replaced by its
/// linearization at the iterate (an affine lower bound), the surrogate
/// max-min problem over the power ball is ascended by projected subgradient,
/// and the process repeats until the true objective improves by less than
/// `tol`. The per-restart objective sequence is non-decreasing by
/// construction. Restarts start uniformly on the budget sphere, plus the
/// deterministic warm start when one is configured. A restart that exhausts
/// `max_iters` reports `converged = false`; the best iterate is still
/// returned.
pub fn solve_entry_qcqp(inst: &QcqpInstance, opts: &SolverOptions) -> Result<SolveOutcome> {
    opts.validate()?;
    if let Some(w) = &opts.warm_start {
        if w.len() != inst.dim() {
            return Err(Error::dims("warm start length differs from instance"));
        }
    }
    let pairs = inst.pairs();
    let radius = inst.budget.sqrt();
    let results: Vec<RestartResult> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let q0 = match (&opts.warm_start, r) {
                (Some(w), 0) => {
                    let n = w.norm();
                    if n > 0.0 {
                        w * (radius / n)
                    } else {
                        w.clone()
                    }
                }
                _ => {
                    let mut rng = substream_indexed(opts.seed, "solver-init", &[r as u64]);
                    random_sphere_point(&mut rng, inst.dim(), radius)
                }
            };
            run_ccp(inst, &pairs, q0, opts)
        })
        .collect();

    let mut best = 0;
    for (r, res) in results.iter().enumerate() {
        if res.dmin_sq > results[best].dmin_sq {
            best = r;
        }
    }
    let winner = &results[best];
    Ok(SolveOutcome {
        q: winner.q.clone(),
        dmin_sq: winner.dmin_sq,
        converged: winner.converged,
        trace: winner.trace.clone(),
    })
}

/// One accepted design state during the recursion.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub vectors: Vec<DVector<f64>>,
    pub partition: PartitionIndicator,
    pub q: DVector<f64>,
    pub dmin: f64,
    pub converged: bool,
    pub candidates_evaluated: usize,
    pub trace: Vec<f64>,
}

/// Per-step record of a recursive design run.
#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    pub size: usize,
    pub dmin: f64,
    pub candidates_evaluated: usize,
    /// TAC appended at this step; `None` for the initial pair search.
    pub added_tac: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct DesignReport {
    pub steps: Vec<StepReport>,
}

/// Pick the best candidate; values within [`CANDIDATE_TIE_REL`] of the
/// maximum tie and resolve to the lowest index.
fn select_candidate(dmins: &[f64]) -> usize {
    let best = dmins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let slack = CANDIDATE_TIE_REL * best.abs().max(1.0);
    dmins
        .iter()
        .position(|&d| d >= best - slack)
        .expect("candidate list is nonempty")
}

/// Exhaustive two-point search: every ordered-with-repetition TAC pair is a
/// candidate partition (`|F|^2` of them), each solved as a two-point QCQP;
/// the best minimum distance wins, ties resolving to the lexicographically
/// first pair.
pub fn exhaustive_x2(
    family: &TacFamily,
    a: &WeightMatrix,
    opts: &SolverOptions,
) -> Result<StepOutcome> {
    if family.is_empty() {
        return Err(Error::invalid_config("empty TAC family"));
    }
    let nf = family.len();
    let candidates: Vec<(usize, usize)> = (0..nf)
        .flat_map(|k1| (0..nf).map(move |k2| (k1, k2)))
        .collect();

    let solved: Vec<(PartitionIndicator, SolveOutcome)> = candidates
        .par_iter()
        .enumerate()
        .map(|(idx, &(k1, k2))| {
            let partition = PartitionIndicator::empty(nf).with_added(k1).with_added(k2);
            let inst = build_qcqp(&partition, family, a)?;
            let mut copts = opts.clone();
            copts.seed = derive_seed(opts.seed, "solver-step", &[2, idx as u64]);
            copts.warm_start = None;
            let outcome = solve_entry_qcqp(&inst, &copts)?;
            Ok((partition, outcome))
        })
        .collect::<Result<_>>()?;

    let dmins: Vec<f64> = solved.iter().map(|(_, o)| o.dmin_sq).collect();
    let winner = select_candidate(&dmins);
    let (partition, outcome) = &solved[winner];
    let inst = build_qcqp(partition, family, a)?;
    let vectors = inst.reconstruct_vectors(family, &outcome.q)?;
    Ok(StepOutcome {
        vectors,
        partition: partition.clone(),
        q: outcome.q.clone(),
        dmin: outcome.dmin_sq.sqrt(),
        converged: outcome.converged,
        candidates_evaluated: candidates.len(),
        trace: outcome.trace.clone(),
    })
}

/// Pad the previous step's solution with a fresh unit block for the point
/// appended to TAC `k`, keeping the TAC-major stacking order.
fn pad_warm_start(
    prev_q: &DVector<f64>,
    prev_partition: &PartitionIndicator,
    k: usize,
    block: usize,
    seed: u64,
) -> DVector<f64> {
    let insert_point: usize = prev_partition.counts()[..=k].iter().sum();
    let offset = insert_point * block;
    let mut rng = substream_indexed(seed, "warm-block", &[k as u64]);
    let fresh = random_sphere_point(&mut rng, block, 1.0);
    let mut q = DVector::zeros(prev_q.len() + block);
    q.rows_mut(0, offset).copy_from(&prev_q.rows(0, offset));
    q.rows_mut(offset, block).copy_from(&fresh);
    q.rows_mut(offset + block, prev_q.len() - offset)
        .copy_from(&prev_q.rows(offset, prev_q.len() - offset));
    q
}

fn recursion_step(
    state: &StepOutcome,
    family: &TacFamily,
    a: &WeightMatrix,
    opts: &SolverOptions,
    t: usize,
) -> Result<(StepOutcome, usize)> {
    let nf = family.len();
    let block = 2 * family.config().n_rf;
    let solved: Vec<(PartitionIndicator, SolveOutcome)> = (0..nf)
        .into_par_iter()
        .map(|k| {
            let partition = state.partition.with_added(k);
            let inst = build_qcqp(&partition, family, a)?;
            let mut copts = opts.clone();
            let step_seed = derive_seed(opts.seed, "solver-step", &[t as u64, k as u64]);
            copts.seed = step_seed;
            copts.warm_start = Some(pad_warm_start(
                &state.q,
                &state.partition,
                k,
                block,
                step_seed,
            ));
            let outcome = solve_entry_qcqp(&inst, &copts)?;
            Ok((partition, outcome))
        })
        .collect::<Result<_>>()?;

    let dmins: Vec<f64> = solved.iter().map(|(_, o)| o.dmin_sq).collect();
    let winner = select_candidate(&dmins);
    let (partition, outcome) = &solved[winner];
    let inst = build_qcqp(partition, family, a)?;
    let vectors = inst.reconstruct_vectors(family, &outcome.q)?;
    Ok((
        StepOutcome {
            vectors,
            partition: partition.clone(),
            q: outcome.q.clone(),
            dmin: outcome.dmin_sq.sqrt(),
            converged: outcome.converged,
            candidates_evaluated: nf,
            trace: outcome.trace.clone(),
        },
        winner,
    ))
}

/// Recursive signal-shaping design: exhaustive two-point search, then one
/// appended TAC per step (`|F|` candidate partitions each, all solved, best
/// kept) until the set holds `2^n` vectors. The returned set is
/// power-normalized and carries the partition in its provenance.
pub fn recursive_design(
    config: &SystemConfig,
    a: &WeightMatrix,
    opts: &SolverOptions,
) -> Result<TransmitSet> {
    recursive_design_with_report(config, a, opts).map(|(set, _)| set)
}

/// As [`recursive_design`], also returning the per-step report.
pub fn recursive_design_with_report(
    config: &SystemConfig,
    a: &WeightMatrix,
    opts: &SolverOptions,
) -> Result<(TransmitSet, DesignReport)> {
    opts.validate()?;
    let n = config.set_size();
    if n < 2 {
        return Err(Error::invalid_config("set size must be at least 2"));
    }
    let family = enumerate_tacs(config)?;
    let mut report = DesignReport::default();

    let mut state = exhaustive_x2(&family, a, opts)?;
    report.steps.push(StepReport {
        size: 2,
        dmin: state.dmin,
        candidates_evaluated: state.candidates_evaluated,
        added_tac: None,
        trace: state.trace.clone(),
    });

    for t in 3..=n {
        let (next, winner) = recursion_step(&state, &family, a, opts, t)?;
        report.steps.push(StepReport {
            size: t,
            dmin: next.dmin,
            candidates_evaluated: next.candidates_evaluated,
            added_tac: Some(winner),
            trace: next.trace.clone(),
        });
        state = next;
    }

    let mut provenance = Provenance::new("obss", a.mode().as_str());
    provenance.seed = Some(opts.seed);
    provenance.partition = Some(state.partition.counts().to_vec());
    let set = TransmitSet::new(state.vectors, *config, provenance)?;
    Ok((set.normalize_power()?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{CsitMode, Scheme};
    use crate::shaping::{make_weight, WeightMode};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn cfg(scheme: Scheme, n_t: usize, n_rf: usize, n_bits: usize) -> SystemConfig {
        SystemConfig::new(scheme, n_t, 2, n_rf, n_bits, CsitMode::None).unwrap()
    }

    fn random_weight(rows: usize, cols: usize, seed: u64) -> WeightMatrix {
        let mut rng = crate::rng::substream(seed, "obss-test-weight");
        WeightMatrix::from_matrix(
            WeightMode::Identity,
            DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0)),
        )
    }

    fn quick_opts(seed: u64) -> SolverOptions {
        SolverOptions {
            max_iters: 120,
            inner_iters: 120,
            restarts: 6,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn keystone_trace_identity() {
        // q^T Q_ij q must equal the directly computed squared weighted
        // distance of the scattered vectors, for random partitions, weights
        // and stacked variables.
        let mut rng = crate::rng::substream(101, "keystone");
        let mut checked = 0;
        'outer: for trial in 0..40 {
            let scheme = if trial % 2 == 0 {
                Scheme::GenSm
            } else {
                Scheme::GenQsm
            };
            let n_t = rng.gen_range(2..=4);
            let n_rf = rng.gen_range(1..=n_t);
            let config = cfg(scheme, n_t, n_rf, 3);
            let family = enumerate_tacs(&config).unwrap();
            let t = rng.gen_range(2..=5);
            let mut partition = PartitionIndicator::empty(family.len());
            for _ in 0..t {
                partition = partition.with_added(rng.gen_range(0..family.len()));
            }
            let m = rng.gen_range(2..=4) * 2;
            let a = random_weight(m, 2 * n_t, 1000 + trial);
            let inst = build_qcqp(&partition, &family, &a).unwrap();
            let q = DVector::from_fn(inst.dim(), |_, _| rng.gen_range(-1.0..1.0));
            let vectors = inst.reconstruct_vectors(&family, &q).unwrap();

            for (i, j) in inst.pairs() {
                let direct = (a.matrix() * (&vectors[i] - &vectors[j])).norm_squared();
                let via_blocks = inst.quadratic_form(i, j, &q);
                let via_dense = (q.transpose() * inst.dense_q(i, j) * &q)[(0, 0)];
                assert!(
                    (direct - via_blocks).abs() < 1e-10,
                    "trial {trial} pair ({i},{j}): direct {direct} vs blocks {via_blocks}"
                );
                assert!(
                    (direct - via_dense.max(0.0)).abs() < 1e-10,
                    "trial {trial} pair ({i},{j}): direct {direct} vs dense {via_dense}"
                );
                checked += 1;
                if checked >= 100 {
                    break 'outer;
                }
            }
        }
        assert!(checked >= 100);
    }

    #[test]
    fn zero_variable_zeroes_all_forms() {
        let config = cfg(Scheme::GenSm, 3, 2, 3);
        let family = enumerate_tacs(&config).unwrap();
        let partition = PartitionIndicator::empty(3).with_added(0).with_added(1);
        let a = make_weight(WeightMode::Identity, 3, None, None).unwrap();
        let inst = build_qcqp(&partition, &family, &a).unwrap();
        let q = DVector::zeros(inst.dim());
        assert_eq!(inst.min_quadratic_form(&q), 0.0);
    }

    #[test]
    fn two_point_single_tac_block_structure() {
        // With A = I and both points on one TAC, Q_01 carries R_AW's two
        // diagonal blocks (identities here) and -1 couplings across.
        let config = cfg(Scheme::GenSm, 3, 2, 1);
        let family = enumerate_tacs(&config).unwrap();
        let partition = PartitionIndicator::empty(3).with_added(0).with_added(0);
        let a = make_weight(WeightMode::Identity, 3, None, None).unwrap();
        let inst = build_qcqp(&partition, &family, &a).unwrap();
        let q01 = inst.dense_q(0, 1);
        let b = inst.block_len();
        for r in 0..b {
            for c in 0..b {
                let eye = if r == c { 1.0 } else { 0.0 };
                assert_eq!(q01[(r, c)], eye);
                assert_eq!(q01[(b + r, b + c)], eye);
                assert_eq!(q01[(r, b + c)], -eye);
                assert_eq!(q01[(b + r, c)], -eye);
            }
        }
    }

    #[test]
    fn pair_matrices_are_psd() {
        let mut rng = crate::rng::substream(7, "psd");
        let config = cfg(Scheme::GenQsm, 3, 2, 3);
        let family = enumerate_tacs(&config).unwrap();
        let mut partition = PartitionIndicator::empty(family.len());
        for _ in 0..4 {
            partition = partition.with_added(rng.gen_range(0..family.len()));
        }
        let a = random_weight(4, 6, 55);
        let inst = build_qcqp(&partition, &family, &a).unwrap();
        for (i, j) in inst.pairs() {
            let eig = inst.dense_q(i, j).symmetric_eigen();
            let min_eig = eig.eigenvalues.min();
            assert!(min_eig >= -1e-8, "pair ({i},{j}) min eig {min_eig}");
        }
    }

    #[test]
    fn antipodal_two_point_optimum() {
        // Two points, one TAC, A = I: the optimum is an antipodal pair at
        // the power budget, d_min = 2.
        let config = cfg(Scheme::GenSm, 2, 1, 1);
        let family = enumerate_tacs(&config).unwrap();
        let partition = PartitionIndicator::empty(2).with_added(0).with_added(0);
        let a = make_weight(WeightMode::Identity, 2, None, None).unwrap();
        let inst = build_qcqp(&partition, &family, &a).unwrap();
        let outcome = solve_entry_qcqp(&inst, &quick_opts(3)).unwrap();
        assert!(outcome.q.norm_squared() <= 2.0 * (1.0 + 1e-9));
        assert_abs_diff_eq!(outcome.dmin_sq, 4.0, epsilon = 1e-6);
    }

    #[test]
    fn solver_scales_with_weight() {
        let config = cfg(Scheme::GenSm, 3, 2, 2);
        let family = enumerate_tacs(&config).unwrap();
        let partition = PartitionIndicator::empty(3)
            .with_added(0)
            .with_added(1)
            .with_added(2);
        let a1 = make_weight(WeightMode::Identity, 3, None, None).unwrap();
        let a2 = WeightMatrix::from_matrix(WeightMode::Identity, a1.matrix() * 2.0);
        let o1 = solve_entry_qcqp(
            &build_qcqp(&partition, &family, &a1).unwrap(),
            &quick_opts(4),
        )
        .unwrap();
        let o2 = solve_entry_qcqp(
            &build_qcqp(&partition, &family, &a2).unwrap(),
            &quick_opts(4),
        )
        .unwrap();
        let ratio = o2.dmin_sq.sqrt() / o1.dmin_sq.sqrt();
        assert!((ratio - 2.0).abs() < 0.04, "ratio {ratio}");
    }

    #[test]
    fn objective_trace_is_monotone() {
        let config = cfg(Scheme::GenQsm, 3, 2, 2);
        let family = enumerate_tacs(&config).unwrap();
        let mut partition = PartitionIndicator::empty(family.len());
        for k in [0, 3, 7, 2] {
            partition = partition.with_added(k);
        }
        let a = random_weight(4, 6, 77);
        let inst = build_qcqp(&partition, &family, &a).unwrap();
        let mut opts = quick_opts(5);
        opts.record_trace = true;
        let outcome = solve_entry_qcqp(&inst, &opts).unwrap();
        assert!(!outcome.trace.is_empty());
        for w in outcome.trace.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-12,
                "trace decreased: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn exhaustive_x2_counts_and_tie_break() {
        let a = make_weight(WeightMode::Identity, 3, None, None).unwrap();
        let opts = quick_opts(6);

        let gensm = enumerate_tacs(&cfg(Scheme::GenSm, 3, 2, 3)).unwrap();
        let out = exhaustive_x2(&gensm, &a, &opts).unwrap();
        assert_eq!(out.candidates_evaluated, 9);
        // Under identity every pair reaches the antipodal optimum 2; the
        // lexicographic tie rule selects the (first, first) pair.
        assert!((out.dmin - 2.0).abs() < 1e-5, "dmin {}", out.dmin);
        assert_eq!(out.partition.counts(), &[2, 0, 0]);

        let genqsm = enumerate_tacs(&cfg(Scheme::GenQsm, 3, 2, 4)).unwrap();
        let out = exhaustive_x2(&genqsm, &a, &opts).unwrap();
        assert_eq!(out.candidates_evaluated, 81);
    }

    #[test]
    fn recursive_design_small_config() {
        let config = cfg(Scheme::GenSm, 3, 2, 2);
        let a = make_weight(WeightMode::Identity, 3, None, None).unwrap();
        let opts = quick_opts(8);
        let (set, report) = recursive_design_with_report(&config, &a, &opts).unwrap();

        assert_eq!(set.len(), 4);
        assert_abs_diff_eq!(set.average_power(), 1.0, epsilon = 1e-12);
        let partition = set.provenance().partition.clone().unwrap();
        assert_eq!(partition.iter().sum::<usize>(), 4);
        for v in set.vectors() {
            assert!(crate::tac::check_sparsity(v, &config));
        }

        // Per-step minimum distance cannot grow as points are added under
        // the same average power.
        assert_eq!(report.steps.len(), 3);
        for w in report.steps.windows(2) {
            assert!(
                w[1].dmin <= w[0].dmin + 1e-9,
                "dmin grew: {} -> {}",
                w[0].dmin,
                w[1].dmin
            );
        }

        // Same seed, same design, bit for bit.
        let (set2, _) = recursive_design_with_report(&config, &a, &opts).unwrap();
        for (u, v) in set.vectors().iter().zip(set2.vectors()) {
            for (x, y) in u.iter().zip(v.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn whole_pipeline_is_homogeneous_in_the_weight() {
        let config = cfg(Scheme::GenSm, 3, 2, 2);
        let a1 = make_weight(WeightMode::Identity, 3, None, None).unwrap();
        let a2 = WeightMatrix::from_matrix(WeightMode::Identity, a1.matrix() * 2.0);
        let opts = quick_opts(17);
        let d1 = recursive_design(&config, &a1, &opts)
            .unwrap()
            .min_distance(&a1)
            .unwrap();
        let d2 = recursive_design(&config, &a2, &opts)
            .unwrap()
            .min_distance(&a2)
            .unwrap();
        let ratio = d2 / d1;
        assert!((ratio - 2.0).abs() < 0.04, "ratio {ratio}");
    }

    #[test]
    fn build_qcqp_rejects_bad_inputs() {
        let config = cfg(Scheme::GenSm, 3, 2, 3);
        let family = enumerate_tacs(&config).unwrap();
        let a = make_weight(WeightMode::Identity, 3, None, None).unwrap();

        let single = PartitionIndicator::empty(3).with_added(0);
        assert!(build_qcqp(&single, &family, &a).is_err());

        let wrong_len = PartitionIndicator::empty(2).with_added(0).with_added(1);
        assert!(build_qcqp(&wrong_len, &family, &a).is_err());

        let wrong_weight = make_weight(WeightMode::Identity, 4, None, None).unwrap();
        let partition = PartitionIndicator::empty(3).with_added(0).with_added(1);
        assert!(build_qcqp(&partition, &family, &wrong_weight).is_err());
    }
}
