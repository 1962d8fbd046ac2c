//! Design evaluation: analytic SER upper bound, Monte-Carlo SER with ML
//! detection, minimum-distance CCDF estimation, and the conventional
//! binary-modulation baselines used for comparison.
//!
//! Monte-Carlo routines take an experiment seed rather than a generator:
//! trials are split into fixed-size chunks, each chunk drawing from named
//! sub-streams (`ser-channel`, `ser-index`, `ser-noise`, `ser-esterr`), so
//! runs are bit-reproducible regardless of thread scheduling and the
//! estimation-error stream never shifts the channel/noise draws (paired
//! comparisons across `eta` values stay paired).

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{perturb_channel, sample_channel, ComplexChannel, CorrelationModel};
use crate::config::{Scheme, SystemConfig};
use crate::error::{Error, Result};
use crate::rng::substream_indexed;
use crate::shaping::{make_weight, Provenance, TransmitSet, WeightMatrix, WeightMode};
use crate::tac::{antenna_subsets, binomial};

const TRIAL_CHUNK: u64 = 4096;

/// Average receive SNR grid, linear scale, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrGrid {
    points: Vec<f64>,
}

impl SnrGrid {
    pub fn from_linear(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid_config("empty SNR grid"));
        }
        for w in points.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::invalid_config(
                    "SNR grid must be strictly increasing",
                ));
            }
        }
        if points[0] <= 0.0 || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid_config(
                "SNR points must be finite and positive",
            ));
        }
        Ok(SnrGrid { points })
    }

    pub fn from_db(db: &[f64]) -> Result<Self> {
        SnrGrid::from_linear(db.iter().map(|d| 10f64.powf(d / 10.0)).collect())
    }

    pub fn linear(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// One simulated operating point.
#[derive(Debug, Clone, Serialize)]
pub struct SerPoint {
    pub rho: f64,
    pub ser: f64,
    pub trials: u64,
    pub errors: u64,
    /// 95% Wilson interval of the estimate.
    pub ci_low: f64,
    pub ci_high: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    let z = 1.96f64;
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Asymptotic SER upper bound over the transmit-correlated Rayleigh model:
/// `c * sum_{i != i'} ||R (x_i - x_i')||^{-2 N_r}` with
/// `c = (rho^{-N_r} / N) * C(2 N_r - 1, N_r)`, ordered pairs counted twice.
pub fn ser_upper_bound(
    set: &TransmitSet,
    corr: &CorrelationModel,
    rho: f64,
    n_r: usize,
) -> Result<f64> {
    if rho <= 0.0 {
        return Err(Error::invalid_config("rho must be positive"));
    }
    let r = corr.weight();
    if r.ncols() != set.config().real_dim() {
        return Err(Error::dims("correlation size differs from set dimension"));
    }
    let n = set.len() as f64;
    let weighted: Vec<DVector<f64>> = set.vectors().iter().map(|x| r * x).collect();
    let mut sum = 0.0;
    for i in 0..set.len() {
        for j in 0..set.len() {
            if i == j {
                continue;
            }
            let d = (&weighted[i] - &weighted[j]).norm();
            if d <= 1e-12 {
                return Err(Error::infeasible(
                    "zero pairwise weighted distance: invalid design",
                ));
            }
            sum += d.powi(-2 * n_r as i32);
        }
    }
    let c = rho.powi(-(n_r as i32)) / n * binomial(2 * n_r - 1, n_r) as f64;
    Ok(c * sum)
}

/// Transmit one random vector over one channel realization and detect it by
/// minimum distance against `sqrt(rho) * H_det * x_j`. Returns the detected
/// index (argmin ties resolve to the lowest index).
fn ml_detect(y: &DVector<f64>, candidates: &[DVector<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in candidates.iter().enumerate() {
        let d = (y - c).norm_squared();
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

#[allow(clippy::too_many_arguments)]
fn simulate_chunk(
    set: &TransmitSet,
    corr: &CorrelationModel,
    n_r: usize,
    rho: f64,
    eta: f64,
    seed: u64,
    chunk: u64,
    trials: u64,
) -> u64 {
    let mut chan_rng = substream_indexed(seed, "ser-channel", &[chunk]);
    let mut idx_rng = substream_indexed(seed, "ser-index", &[chunk]);
    let mut noise_rng = substream_indexed(seed, "ser-noise", &[chunk]);
    let mut est_rng = substream_indexed(seed, "ser-esterr", &[chunk]);

    let sqrt_rho = rho.sqrt();
    let noise_std = (0.5f64).sqrt();
    let n = set.len();
    let mut errors = 0;
    for _ in 0..trials {
        let (ch, real) = sample_channel(&mut chan_rng, corr, n_r);
        let i = idx_rng.gen_range(0..n);
        let mut y = real.matrix() * &set.vectors()[i] * sqrt_rho;
        for v in y.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut noise_rng);
            *v += z * noise_std;
        }
        let det_real = if eta > 0.0 {
            perturb_channel(&ch, eta, rho, &mut est_rng)
                .expect("eta and rho validated by caller")
                .real_expand()
        } else {
            real
        };
        let candidates: Vec<DVector<f64>> = set
            .vectors()
            .iter()
            .map(|x| det_real.matrix() * x * sqrt_rho)
            .collect();
        if ml_detect(&y, &candidates) != i {
            errors += 1;
        }
    }
    errors
}

/// Monte-Carlo SER with per-trial channel draws and ML detection. With
/// `eta > 0` the detector uses an imperfect channel estimate (variance
/// `eta/rho` per entry) while the true channel generates the observation.
pub fn simulate_ser(
    set: &TransmitSet,
    corr: &CorrelationModel,
    n_r: usize,
    rho: f64,
    trials: u64,
    seed: u64,
    eta: f64,
) -> Result<SerPoint> {
    if trials == 0 {
        return Err(Error::invalid_config("trials must be at least 1"));
    }
    if rho <= 0.0 {
        return Err(Error::invalid_config("rho must be positive"));
    }
    if eta < 0.0 {
        return Err(Error::invalid_config("eta must be nonnegative"));
    }
    if corr.n_t() != set.config().n_t {
        return Err(Error::dims("correlation size differs from configuration"));
    }
    let n_chunks = trials.div_ceil(TRIAL_CHUNK);
    let errors: u64 = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * TRIAL_CHUNK;
            let len = TRIAL_CHUNK.min(trials - start);
            simulate_chunk(set, corr, n_r, rho, eta, seed, chunk, len)
        })
        .sum();
    let (ci_low, ci_high) = wilson_interval(errors, trials);
    Ok(SerPoint {
        rho,
        ser: errors as f64 / trials as f64,
        trials,
        errors,
        ci_low,
        ci_high,
        bound: None,
    })
}

/// A full SER curve: one simulated point (with the analytic bound attached)
/// per grid entry.
#[derive(Debug, Clone, Serialize)]
pub struct SerCurve {
    pub points: Vec<SerPoint>,
}

impl SerCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("rho_db,ser,ci_low,ci_high,bound,trials,errors\n");
        for p in &self.points {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                10.0 * p.rho.log10(),
                p.ser,
                p.ci_low,
                p.ci_high,
                p.bound.unwrap_or(f64::NAN),
                p.trials,
                p.errors
            ));
        }
        s
    }
}

/// Simulate a whole SNR grid; each point carries the matching upper bound.
/// Point `i` draws from the `evaluate` sub-stream of `seed` indexed by `i`.
pub fn ser_curve(
    set: &TransmitSet,
    corr: &CorrelationModel,
    n_r: usize,
    grid: &SnrGrid,
    trials: u64,
    seed: u64,
    eta: f64,
) -> Result<SerCurve> {
    let mut points = Vec::with_capacity(grid.len());
    for (gi, &rho) in grid.linear().iter().enumerate() {
        let mut point = simulate_ser(
            set,
            corr,
            n_r,
            rho,
            trials,
            crate::rng::derive_seed(seed, "evaluate", &[gi as u64]),
            eta,
        )?;
        point.bound = Some(ser_upper_bound(set, corr, rho, n_r)?);
        points.push(point);
    }
    Ok(SerCurve { points })
}

/// Monte-Carlo SER over one fixed channel realization (no fading, perfect
/// CSI at the detector). Used to validate the estimator against closed
/// forms.
pub fn simulate_ser_fixed_channel(
    set: &TransmitSet,
    ch: &ComplexChannel,
    rho: f64,
    trials: u64,
    seed: u64,
) -> Result<SerPoint> {
    if trials == 0 {
        return Err(Error::invalid_config("trials must be at least 1"));
    }
    if rho <= 0.0 {
        return Err(Error::invalid_config("rho must be positive"));
    }
    let real = ch.real_expand();
    let sqrt_rho = rho.sqrt();
    let candidates: Vec<DVector<f64>> = set
        .vectors()
        .iter()
        .map(|x| real.matrix() * x * sqrt_rho)
        .collect();
    let noise_std = (0.5f64).sqrt();
    let n = set.len();
    let n_chunks = trials.div_ceil(TRIAL_CHUNK);
    let errors: u64 = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * TRIAL_CHUNK;
            let len = TRIAL_CHUNK.min(trials - start);
            let mut idx_rng = substream_indexed(seed, "ser-index", &[chunk]);
            let mut noise_rng = substream_indexed(seed, "ser-noise", &[chunk]);
            let mut errors = 0;
            for _ in 0..len {
                let i = idx_rng.gen_range(0..n);
                let mut y = candidates[i].clone();
                for v in y.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut noise_rng);
                    *v += z * noise_std;
                }
                if ml_detect(&y, &candidates) != i {
                    errors += 1;
                }
            }
            errors
        })
        .sum();
    let (ci_low, ci_high) = wilson_interval(errors, trials);
    Ok(SerPoint {
        rho,
        ser: errors as f64 / trials as f64,
        trials,
        errors,
        ci_low,
        ci_high,
        bound: None,
    })
}

/// Empirical complementary CDF table of per-channel-draw minimum distances.
#[derive(Debug, Clone, Serialize)]
pub struct CcdfTable {
    pub thresholds: Vec<f64>,
    pub ccdf: Vec<f64>,
    /// Raw per-draw minimum distances (design order).
    pub dmins: Vec<f64>,
}

impl CcdfTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("threshold,ccdf\n");
        for (t, p) in self.thresholds.iter().zip(&self.ccdf) {
            s.push_str(&format!("{t},{p}\n"));
        }
        s
    }
}

/// The CCDF estimator itself: fraction of samples strictly above each
/// threshold.
pub fn ccdf_from_samples(samples: &[f64], thresholds: &[f64]) -> Vec<f64> {
    thresholds
        .iter()
        .map(|&t| samples.iter().filter(|&&d| d > t).count() as f64 / samples.len().max(1) as f64)
        .collect()
}

/// CCDF of the minimum distance achieved by an adaptive designer with
/// instantaneous CSIT: for each independent channel draw the designer is
/// handed the weight `A = H` and its output's `d_min(X, H)` is recorded.
///
/// The designer receives the weight and the draw index (for seed
/// derivation); it must be deterministic given those.
pub fn dmin_ccdf<F>(
    designer: F,
    config: &SystemConfig,
    corr: &CorrelationModel,
    thresholds: &[f64],
    draws: usize,
    seed: u64,
) -> Result<CcdfTable>
where
    F: Fn(&WeightMatrix, u64) -> Result<TransmitSet> + Sync,
{
    if draws == 0 {
        return Err(Error::invalid_config("draws must be at least 1"));
    }
    let dmins: Vec<f64> = (0..draws as u64)
        .into_par_iter()
        .map(|draw| {
            let mut rng = substream_indexed(seed, "ccdf-channel", &[draw]);
            let (_, real) = sample_channel(&mut rng, corr, config.n_r);
            let a = make_weight(WeightMode::Instantaneous, config.n_t, None, Some(&real))?;
            let set = designer(&a, draw)?;
            set.min_distance(&a)
        })
        .collect::<Result<_>>()?;
    Ok(CcdfTable {
        thresholds: thresholds.to_vec(),
        ccdf: ccdf_from_samples(&dmins, thresholds),
        dmins,
    })
}

/// One row of a design-comparison report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub design: String,
    pub rho_db: f64,
    pub ser: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound: f64,
    pub trials: u64,
    pub errors: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ReportRow>,
}

impl ComparisonReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("design,rho_db,ser,ci_low,ci_high,bound,trials,errors\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.design, r.rho_db, r.ser, r.ci_low, r.ci_high, r.bound, r.trials, r.errors
            ));
        }
        s
    }
}

/// Simulate every design over the grid and tabulate SER plus the analytic
/// bound. Designs are labeled by provenance method (suffixed with their
/// index when methods repeat). Channel and noise streams are shared across
/// designs at each grid point, so orderings are paired comparisons.
pub fn compare_designs(
    sets: &[TransmitSet],
    corr: &CorrelationModel,
    n_r: usize,
    grid: &SnrGrid,
    trials: u64,
    seed: u64,
    eta: f64,
) -> Result<ComparisonReport> {
    if sets.is_empty() {
        return Err(Error::invalid_config("no designs to compare"));
    }
    let mut labels = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        let method = &set.provenance().method;
        let repeated = sets
            .iter()
            .filter(|s| &s.provenance().method == method)
            .count()
            > 1;
        labels.push(if repeated {
            format!("{method}-{i}")
        } else {
            method.clone()
        });
    }
    let mut rows = Vec::with_capacity(sets.len() * grid.len());
    for (set, label) in sets.iter().zip(&labels) {
        for (gi, &rho) in grid.linear().iter().enumerate() {
            let point = simulate_ser(
                set,
                corr,
                n_r,
                rho,
                trials,
                crate::rng::derive_seed(seed, "compare", &[gi as u64]),
                eta,
            )?;
            rows.push(ReportRow {
                design: label.clone(),
                rho_db: 10.0 * rho.log10(),
                ser: point.ser,
                ci_low: point.ci_low,
                ci_high: point.ci_high,
                bound: ser_upper_bound(set, corr, rho, n_r)?,
                trials: point.trials,
                errors: point.errors,
            });
        }
    }
    Ok(ComparisonReport { rows })
}

/// Conventional baseline flavour; must match the configuration's scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineFlavor {
    /// Real BPSK per stream, one shared antenna subset (GenSM).
    BpskGenSm,
    /// pi/4-rotated BPSK per stream, independent real/imaginary antenna
    /// subsets (GenQSM).
    QuarterPiBpskGenQsm,
}

fn sign_patterns(n_rf: usize) -> Vec<Vec<f64>> {
    (0..1usize << n_rf)
        .map(|p| {
            (0..n_rf)
                .map(|j| {
                    if (p >> (n_rf - 1 - j)) & 1 == 1 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect()
        })
        .collect()
}

fn floor_log2(v: usize) -> usize {
    debug_assert!(v >= 1);
    (usize::BITS - 1 - v.leading_zeros()) as usize
}

/// Conventional binary-modulation mapping: the strongest TAC subset of size
/// `2^floor(log2 |F|)` (found by exhaustive enumeration under the design
/// weight, lexicographic first among ties) carries index bits, and each
/// stream carries one BPSK (GenSM) or pi/4-BPSK (GenQSM) bit. The rate must
/// decompose exactly; the output is power-normalized.
pub fn baseline_design(
    config: &SystemConfig,
    corr: Option<&CorrelationModel>,
    flavor: BaselineFlavor,
) -> Result<TransmitSet> {
    match (flavor, config.scheme) {
        (BaselineFlavor::BpskGenSm, Scheme::GenSm) => {}
        (BaselineFlavor::QuarterPiBpskGenQsm, Scheme::GenQsm) => {}
        _ => {
            return Err(Error::invalid_config(
                "baseline flavour does not match the scheme",
            ))
        }
    }
    let a = match corr {
        Some(c) => make_weight(WeightMode::Statistical, config.n_t, Some(c), None)?,
        None => make_weight(WeightMode::Identity, config.n_t, None, None)?,
    };
    let subsets = antenna_subsets(config.n_t, config.n_rf);
    let index_bits = floor_log2(subsets.len());
    let chosen = 1usize << index_bits;
    let signs = sign_patterns(config.n_rf);

    let build_gensm = |pick: &[usize]| -> Vec<DVector<f64>> {
        let mut vectors = Vec::with_capacity(pick.len() * signs.len());
        for &s_idx in pick {
            let support = &subsets[s_idx];
            for pattern in &signs {
                let mut x = DVector::zeros(config.real_dim());
                for (j, &antenna) in support.iter().enumerate() {
                    x[antenna] = pattern[j];
                }
                vectors.push(x);
            }
        }
        vectors
    };
    let build_genqsm = |pick_u: &[usize], pick_v: &[usize]| -> Vec<DVector<f64>> {
        let mut vectors = Vec::with_capacity(pick_u.len() * pick_v.len() * signs.len());
        let r = 1.0 / (2.0f64).sqrt();
        for &u_idx in pick_u {
            for &v_idx in pick_v {
                let (u, v) = (&subsets[u_idx], &subsets[v_idx]);
                for pattern in &signs {
                    let mut x = DVector::zeros(config.real_dim());
                    for (j, (&au, &av)) in u.iter().zip(v).enumerate() {
                        x[au] = pattern[j] * r;
                        x[config.n_t + av] = pattern[j] * r;
                    }
                    vectors.push(x);
                }
            }
        }
        vectors
    };

    let candidates: Vec<Vec<DVector<f64>>> = match flavor {
        BaselineFlavor::BpskGenSm => {
            if config.n_bits != index_bits + config.n_rf {
                return Err(Error::invalid_config(format!(
                    "rate mismatch: n = {} but the conventional GenSM mapping carries {} + {} bits",
                    config.n_bits, index_bits, config.n_rf
                )));
            }
            antenna_subsets(subsets.len(), chosen)
                .iter()
                .map(|pick| build_gensm(pick))
                .collect()
        }
        BaselineFlavor::QuarterPiBpskGenQsm => {
            if config.n_bits != 2 * index_bits + config.n_rf {
                return Err(Error::invalid_config(format!(
                    "rate mismatch: n = {} but the conventional GenQSM mapping carries 2*{} + {} bits",
                    config.n_bits, index_bits, config.n_rf
                )));
            }
            let picks = antenna_subsets(subsets.len(), chosen);
            let mut all = Vec::with_capacity(picks.len() * picks.len());
            for pick_u in &picks {
                for pick_v in &picks {
                    all.push(build_genqsm(pick_u, pick_v));
                }
            }
            all
        }
    };

    // Exhaustive subset choice: keep the candidate with the largest weighted
    // minimum distance (after normalization, first among ties).
    let mut best: Option<(f64, TransmitSet)> = None;
    for vectors in candidates {
        let mut provenance = Provenance::new("baseline", a.mode().as_str());
        provenance.delta = corr.map(|c| c.delta());
        let set = TransmitSet::new(vectors, *config, provenance)?.normalize_power()?;
        let d = set.min_distance(&a)?;
        let better = match &best {
            None => true,
            Some((best_d, _)) => d > *best_d * (1.0 + 1e-12),
        };
        if better {
            best = Some((d, set));
        }
    }
    Ok(best.expect("at least one subset candidate exists").1)
}
