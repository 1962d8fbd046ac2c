//! Codebook-based signal shaping.
//!
//! Instead of solving the entry QCQP, candidate transmit vectors are drawn
//! from a QAM codebook: every TAC scattered with every `N_RF`-tuple of
//! `M_c`-ary QAM symbols, `N_c = |F| M_c^{N_RF}` candidates in total. The
//! design subset is then chosen progressively by the constellation figure
//! of merit `CFM = d_min^2 / P`, which is scale-invariant and equivalent to
//! the max-min-distance criterion under the normalized power constraint.
//! All pairwise weighted distances and per-vector powers are computed once
//! up front; the greedy stage only reads the cache.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::shaping::{Provenance, TransmitSet, WeightMatrix, DUPLICATE_TOL};
use crate::tac::{apply_tac, check_sparsity, TacFamily};

/// QAM candidate pool for one configuration.
#[derive(Debug, Clone)]
pub struct Codebook {
    candidates: Vec<DVector<f64>>,
    m_c: usize,
    config: SystemConfig,
}

impl Codebook {
    /// Wrap an explicit candidate list (used by tests and custom pools).
    /// Candidates must satisfy the scheme's sparsity rule.
    pub fn new(candidates: Vec<DVector<f64>>, config: SystemConfig, m_c: usize) -> Result<Self> {
        for (i, c) in candidates.iter().enumerate() {
            if c.len() != config.real_dim() {
                return Err(Error::dims(format!("candidate {i} has wrong dimension")));
            }
            if !check_sparsity(c, &config) {
                return Err(Error::SparsityViolation {
                    index: i,
                    scheme: config.scheme.as_str(),
                });
            }
        }
        Ok(Codebook {
            candidates,
            m_c,
            config,
        })
    }

    pub fn candidates(&self) -> &[DVector<f64>] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn m_c(&self) -> usize {
        self.m_c
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    /// Dump the pool in the transmit-set CSV row format (comment line,
    /// `x1..x{2Nt}` header, one candidate per row).
    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# scheme={} nt={} nr={} nrf={} n={} csit={} method=codebook weight=none mc={}\n",
            self.config.scheme.as_str(),
            self.config.n_t,
            self.config.n_r,
            self.config.n_rf,
            self.config.n_bits,
            self.config.csit.as_str(),
            self.m_c,
        );
        let header: Vec<String> = (1..=self.config.real_dim())
            .map(|i| format!("x{i}"))
            .collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for c in &self.candidates {
            let row: Vec<String> = c.iter().map(|x| format!("{x}")).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Square `M_c`-ary QAM normalized to unit average symbol energy, in
/// row-major grid order (imaginary level outer, real level inner, both
/// ascending).
pub fn qam_constellation(m_c: usize) -> Result<Vec<Complex64>> {
    if ![4, 16, 64].contains(&m_c) {
        return Err(Error::invalid_config(format!(
            "unsupported QAM order {m_c} (square orders 4, 16, 64)"
        )));
    }
    let side = (m_c as f64).sqrt() as usize;
    let levels: Vec<f64> = (0..side)
        .map(|i| (2 * i as i64 - side as i64 + 1) as f64)
        .collect();
    // Mean of level^2 is (side^2 - 1)/3 per dimension.
    let scale = 1.0 / (2.0 * ((side * side - 1) as f64) / 3.0).sqrt();
    let mut points = Vec::with_capacity(m_c);
    for &im in &levels {
        for &re in &levels {
            points.push(Complex64::new(re * scale, im * scale));
        }
    }
    Ok(points)
}

/// Build the candidate pool: each TAC (family order) scattered with every
/// ordered `N_RF`-tuple of QAM symbols (grid order, last stream fastest).
/// Duplicates within the set tolerance are removed keeping the first
/// occurrence, so the pool order stays reproducible.
pub fn build_codebook(config: &SystemConfig, family: &TacFamily, m_c: usize) -> Result<Codebook> {
    if family.config() != config {
        return Err(Error::invalid_config(
            "TAC family was built for a different configuration",
        ));
    }
    let qam = qam_constellation(m_c)?;
    let n_rf = config.n_rf;
    let mut candidates: Vec<DVector<f64>> =
        Vec::with_capacity(family.len() * qam.len().pow(n_rf as u32));
    let mut tuple = vec![0usize; n_rf];
    for tac in family.members() {
        tuple.iter_mut().for_each(|t| *t = 0);
        loop {
            let mut s = DVector::zeros(2 * n_rf);
            for (j, &q) in tuple.iter().enumerate() {
                s[j] = qam[q].re;
                s[n_rf + j] = qam[q].im;
            }
            candidates.push(apply_tac(tac, &s, config.n_t)?);

            // odometer over the symbol tuple, last stream fastest
            let mut pos = n_rf;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                tuple[pos] += 1;
                if tuple[pos] < qam.len() {
                    break;
                }
                tuple[pos] = 0;
            }
            if tuple.iter().all(|&t| t == 0) {
                break;
            }
        }
    }

    let mut unique: Vec<DVector<f64>> = Vec::with_capacity(candidates.len());
    for c in candidates {
        if unique.iter().all(|u| (u - &c).norm() >= DUPLICATE_TOL) {
            unique.push(c);
        }
    }
    Ok(Codebook {
        candidates: unique,
        m_c,
        config: *config,
    })
}

/// One recorded greedy decision.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionStep {
    /// Set size after this step.
    pub size: usize,
    /// Codebook index of the chosen candidate (both indices for the initial
    /// pair).
    pub chosen: Vec<usize>,
    pub cfm: f64,
}

/// Cached geometry of a codebook under one weight: per-candidate powers and
/// the full pairwise weighted-distance table.
pub struct DistanceCache {
    powers: Vec<f64>,
    dist: Vec<f64>,
    n: usize,
}

impl DistanceCache {
    pub fn build(cb: &Codebook, a: &WeightMatrix) -> Result<Self> {
        if a.dim() != cb.config.real_dim() {
            return Err(Error::dims("weight width differs from candidate dimension"));
        }
        let n = cb.len();
        let weighted: Vec<DVector<f64>> = cb.candidates.iter().map(|c| a.matrix() * c).collect();
        let powers: Vec<f64> = cb.candidates.iter().map(|c| c.norm_squared()).collect();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (&weighted[i] - &weighted[j]).norm();
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(DistanceCache { powers, dist, n })
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn power(&self, i: usize) -> f64 {
        self.powers[i]
    }
}

/// Progressive CFM-greedy subset selection.
///
/// The best pair over all `C(N_c, 2)` candidates seeds the set; each later
/// step adds the candidate maximizing the CFM of the augmented set, with
/// ties resolved to the lowest codebook index. The output set is
/// power-normalized. `n` must be a power of two, at least 2, and no larger
/// than the candidate pool.
pub fn progressive_select(cb: &Codebook, a: &WeightMatrix, n: usize) -> Result<TransmitSet> {
    progressive_select_with_trace(cb, a, n).map(|(set, _)| set)
}

/// As [`progressive_select`], also returning the per-step trace.
pub fn progressive_select_with_trace(
    cb: &Codebook,
    a: &WeightMatrix,
    n: usize,
) -> Result<(TransmitSet, Vec<SelectionStep>)> {
    if n > cb.len() {
        return Err(Error::infeasible(format!(
            "cannot select {n} vectors from a pool of {}",
            cb.len()
        )));
    }
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::invalid_config(
            "selection size must be a power of two, at least 2",
        ));
    }
    let cache = DistanceCache::build(cb, a)?;
    let nc = cb.len();

    // Exhaustive best-CFM pair.
    let mut best_pair = (0usize, 1usize);
    let mut best_cfm = f64::NEG_INFINITY;
    for i in 0..nc {
        for j in (i + 1)..nc {
            let d = cache.distance(i, j);
            let p = (cache.power(i) + cache.power(j)) / 2.0;
            if p <= 0.0 {
                continue;
            }
            let cfm = d * d / p;
            if cfm > best_cfm {
                best_cfm = cfm;
                best_pair = (i, j);
            }
        }
    }
    let mut selected = vec![best_pair.0, best_pair.1];
    let mut in_set = vec![false; nc];
    in_set[best_pair.0] = true;
    in_set[best_pair.1] = true;
    let mut power_sum = cache.power(best_pair.0) + cache.power(best_pair.1);
    let mut dmin = cache.distance(best_pair.0, best_pair.1);
    // Min distance from every candidate to the selected set, kept current.
    let mut to_set: Vec<f64> = (0..nc)
        .map(|c| {
            cache
                .distance(c, best_pair.0)
                .min(cache.distance(c, best_pair.1))
        })
        .collect();
    let mut trace = vec![SelectionStep {
        size: 2,
        chosen: vec![best_pair.0, best_pair.1],
        cfm: best_cfm,
    }];

    while selected.len() < n {
        let t = (selected.len() + 1) as f64;
        let mut best_c = None;
        let mut best_cfm = f64::NEG_INFINITY;
        for c in 0..nc {
            if in_set[c] {
                continue;
            }
            let cand_dmin = dmin.min(to_set[c]);
            let cfm = cand_dmin * cand_dmin * t / (power_sum + cache.power(c));
            if cfm > best_cfm {
                best_cfm = cfm;
                best_c = Some(c);
            }
        }
        let c = best_c.ok_or_else(|| Error::infeasible("candidate pool exhausted"))?;
        in_set[c] = true;
        selected.push(c);
        power_sum += cache.power(c);
        dmin = dmin.min(to_set[c]);
        for (other, d) in to_set.iter_mut().enumerate() {
            *d = d.min(cache.distance(other, c));
        }
        trace.push(SelectionStep {
            size: selected.len(),
            chosen: vec![c],
            cfm: best_cfm,
        });
    }

    let vectors: Vec<DVector<f64>> = selected.iter().map(|&i| cb.candidates[i].clone()).collect();
    let provenance = Provenance::new("cbss", a.mode().as_str());
    let set = TransmitSet::new(vectors, cb.config, provenance)?.normalize_power()?;
    Ok((set, trace))
}
