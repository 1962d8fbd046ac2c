//! Transmit antenna combinations (TACs) and the position-constrained
//! sparsity rules.
//!
//! A TAC activates `N_RF` of the `N_t` transmit antennas. GenSM drives the
//! real and imaginary signal parts through one shared antenna subset;
//! GenQSM allows two independent subsets. TACs are stored as index sets
//! (0-based, strictly increasing) rather than dense selection matrices; the
//! dense form is only materialized inside the QCQP builder.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::config::{Scheme, SystemConfig};
use crate::error::{Error, Result};

/// One transmit antenna combination: the active-antenna index sets for the
/// real and imaginary signal parts. For GenSM both sets coincide.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TacDescriptor {
    pub scheme: Scheme,
    /// Active antennas for the real part, 0-based, strictly increasing.
    pub real_support: Vec<usize>,
    /// Active antennas for the imaginary part; equals `real_support` under
    /// GenSM.
    pub imag_support: Vec<usize>,
}

impl TacDescriptor {
    pub fn n_rf(&self) -> usize {
        self.real_support.len()
    }
}

/// The ordered family of all feasible TACs for a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TacFamily {
    config: SystemConfig,
    members: Vec<TacDescriptor>,
}

impl TacFamily {
    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn members(&self) -> &[TacDescriptor] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, k: usize) -> &TacDescriptor {
        &self.members[k]
    }

    /// JSON list of `{real_support, imag_support}` objects (0-based).
    pub fn to_json(&self) -> String {
        let items: Vec<serde_json::Value> = self
            .members
            .iter()
            .map(|t| {
                serde_json::json!({
                    "real_support": t.real_support,
                    "imag_support": t.imag_support,
                })
            })
            .collect();
        serde_json::to_string_pretty(&items).expect("TAC family serialization cannot fail")
    }
}

/// All size-`k` subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut result = Vec::new();
    let mut combo: Vec<usize> = Vec::with_capacity(k);
    fn recurse(
        start: usize,
        n: usize,
        k: usize,
        combo: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if combo.len() == k {
            out.push(combo.clone());
            return;
        }
        let remaining = k - combo.len();
        for i in start..=(n - remaining) {
            combo.push(i);
            recurse(i + 1, n, k, combo, out);
            combo.pop();
        }
    }
    if k <= n {
        recurse(0, n, k, &mut combo, &mut result);
    }
    result
}

/// All size-`n_rf` antenna subsets in lexicographic order (the `C_u`
/// selection-matrix supports).
pub fn antenna_subsets(n_t: usize, n_rf: usize) -> Vec<Vec<usize>> {
    combinations(n_t, n_rf)
}

/// Binomial coefficient C(n, k).
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result: usize = 1;
    for i in 0..k {
        result = result * (n - i) / (i + 1);
    }
    result
}

/// Enumerate the TAC family in a fixed lexicographic order.
///
/// GenSM yields the `C(N_t, N_RF)` antenna subsets; GenQSM yields all
/// `C(N_t, N_RF)^2` ordered (real, imaginary) subset pairs, real-major.
/// Downstream tie-breaking refers to this order.
pub fn enumerate_tacs(config: &SystemConfig) -> Result<TacFamily> {
    config.validate()?;
    let subsets = combinations(config.n_t, config.n_rf);
    let members = match config.scheme {
        Scheme::GenSm => subsets
            .iter()
            .map(|s| TacDescriptor {
                scheme: Scheme::GenSm,
                real_support: s.clone(),
                imag_support: s.clone(),
            })
            .collect(),
        Scheme::GenQsm => {
            let mut members = Vec::with_capacity(subsets.len() * subsets.len());
            for u in &subsets {
                for v in &subsets {
                    members.push(TacDescriptor {
                        scheme: Scheme::GenQsm,
                        real_support: u.clone(),
                        imag_support: v.clone(),
                    });
                }
            }
            members
        }
    };
    Ok(TacFamily {
        config: *config,
        members,
    })
}

/// Scatter a symbol vector `s` (length `2 N_RF`) through a TAC into a
/// real-expanded transmit vector (length `2 N_t`): the first `N_RF` entries
/// land on the real support, the last `N_RF` on the imaginary support.
pub fn apply_tac(tac: &TacDescriptor, s: &DVector<f64>, n_t: usize) -> Result<DVector<f64>> {
    let n_rf = tac.n_rf();
    if s.len() != 2 * n_rf {
        return Err(Error::dims(format!(
            "symbol vector has length {}, expected {}",
            s.len(),
            2 * n_rf
        )));
    }
    if tac.real_support.iter().any(|&i| i >= n_t) || tac.imag_support.iter().any(|&i| i >= n_t) {
        return Err(Error::dims("TAC support index out of range"));
    }
    let mut x = DVector::zeros(2 * n_t);
    for (j, &antenna) in tac.real_support.iter().enumerate() {
        x[antenna] = s[j];
    }
    for (j, &antenna) in tac.imag_support.iter().enumerate() {
        x[n_t + antenna] = s[n_rf + j];
    }
    Ok(x)
}

/// Index set of nonzero entries in the real half of `x`.
pub fn real_support(x: &DVector<f64>, n_t: usize) -> Vec<usize> {
    (0..n_t).filter(|&i| x[i] != 0.0).collect()
}

/// Index set of nonzero entries in the imaginary half of `x`.
pub fn imag_support(x: &DVector<f64>, n_t: usize) -> Vec<usize> {
    (0..n_t).filter(|&i| x[n_t + i] != 0.0).collect()
}

/// Scheme-specific position-constrained sparsity check.
///
/// GenSM: the union of real and imaginary supports has at most `N_RF`
/// antennas. GenQSM: each support separately has at most `N_RF`.
pub fn check_sparsity(x: &DVector<f64>, config: &SystemConfig) -> bool {
    debug_assert_eq!(x.len(), config.real_dim());
    let n_t = config.n_t;
    let re = real_support(x, n_t);
    let im = imag_support(x, n_t);
    match config.scheme {
        Scheme::GenSm => {
            let mut union = re;
            for i in im {
                if !union.contains(&i) {
                    union.push(i);
                }
            }
            union.len() <= config.n_rf
        }
        Scheme::GenQsm => re.len() <= config.n_rf && im.len() <= config.n_rf,
    }
}

/// Conventional sparsity without the position rule: `||x||_0 <= 2 N_RF`.
pub fn check_conventional_sparsity(x: &DVector<f64>, n_rf: usize) -> bool {
    x.iter().filter(|&&v| v != 0.0).count() <= 2 * n_rf
}
