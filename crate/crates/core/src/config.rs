//! System configuration shared by every design and evaluation routine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index-modulation flavour: whether real and imaginary signal parts share
/// one antenna subset (GenSM) or may use two independent ones (GenQSM).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    GenSm,
    GenQsm,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::GenSm => "gensm",
            Scheme::GenQsm => "genqsm",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gensm" => Ok(Scheme::GenSm),
            "genqsm" => Ok(Scheme::GenQsm),
            other => Err(Error::invalid_config(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Channel state information available at the transmitter. Selects the
/// weight matrix used by the design objective: identity (none), the
/// correlation weight (statistical) or the sampled channel (instantaneous).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsitMode {
    None,
    Statistical,
    Instantaneous,
}

impl CsitMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CsitMode::None => "none",
            CsitMode::Statistical => "statistical",
            CsitMode::Instantaneous => "instantaneous",
        }
    }
}

impl std::str::FromStr for CsitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(CsitMode::None),
            "statistical" => Ok(CsitMode::Statistical),
            "instantaneous" => Ok(CsitMode::Instantaneous),
            other => Err(Error::invalid_config(format!(
                "unknown CSIT mode `{other}`"
            ))),
        }
    }
}

/// A `(N_t, N_r, N_RF, n)` system description. Governs the sparsity rule,
/// the transmit-set size `N = 2^n` and every dimension downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemConfig {
    pub scheme: Scheme,
    /// Transmit antennas `N_t`.
    pub n_t: usize,
    /// Receive antennas `N_r`.
    pub n_r: usize,
    /// RF chains `N_RF`; caps the number of simultaneously driven antennas.
    pub n_rf: usize,
    /// Rate in bits per channel use; the set holds `2^n` vectors.
    pub n_bits: usize,
    pub csit: CsitMode,
}

impl SystemConfig {
    pub fn new(
        scheme: Scheme,
        n_t: usize,
        n_r: usize,
        n_rf: usize,
        n_bits: usize,
        csit: CsitMode,
    ) -> Result<Self> {
        let cfg = SystemConfig {
            scheme,
            n_t,
            n_r,
            n_rf,
            n_bits,
            csit,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_t == 0 || self.n_r == 0 {
            return Err(Error::invalid_config("N_t and N_r must be positive"));
        }
        if self.n_rf == 0 || self.n_rf > self.n_t {
            return Err(Error::invalid_config(format!(
                "N_RF must satisfy 1 <= N_RF <= N_t (got N_RF={}, N_t={})",
                self.n_rf, self.n_t
            )));
        }
        if self.n_bits == 0 || self.n_bits >= usize::BITS as usize {
            return Err(Error::invalid_config("n must satisfy n >= 1"));
        }
        Ok(())
    }

    /// Transmit-set size `N = 2^n`.
    pub fn set_size(&self) -> usize {
        1usize << self.n_bits
    }

    /// Dimension of a real-expanded transmit vector, `2 N_t`.
    pub fn real_dim(&self) -> usize {
        2 * self.n_t
    }
}
