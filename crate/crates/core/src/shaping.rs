//! Transmit-set data model and the metrics every design is judged by.
//!
//! A [`TransmitSet`] holds the `N = 2^n` real-expanded transmit vectors of a
//! design together with its configuration and provenance. The three design
//! objectives differ only in the weight applied to pairwise differences:
//! identity (no CSIT), the correlation weight `R` (statistical CSIT) or the
//! real-expanded channel `H` (instantaneous CSIT).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel::{CorrelationModel, RealChannel};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::tac::check_sparsity;

/// Two vectors closer than this are considered duplicates (printed-precision
/// fixtures motivate the loose tolerance).
pub const DUPLICATE_TOL: f64 = 1e-9;

/// Which matrix weighs pairwise differences in the design objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    Identity,
    Statistical,
    Instantaneous,
}

impl WeightMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            WeightMode::Identity => "identity",
            WeightMode::Statistical => "statistical",
            WeightMode::Instantaneous => "instantaneous",
        }
    }
}

impl std::str::FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" => Ok(WeightMode::Identity),
            "statistical" => Ok(WeightMode::Statistical),
            "instantaneous" => Ok(WeightMode::Instantaneous),
            other => Err(Error::invalid_config(format!(
                "unknown weight mode `{other}`"
            ))),
        }
    }
}

/// The weight matrix `A` of the unified objective: `I`, `R` or `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    mode: WeightMode,
    entries: DMatrix<f64>,
}

impl WeightMatrix {
    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Number of columns; must equal `2 N_t` of the sets it weighs.
    pub fn dim(&self) -> usize {
        self.entries.ncols()
    }

    /// Wrap an arbitrary matrix (used by tests and scaling experiments).
    pub fn from_matrix(mode: WeightMode, entries: DMatrix<f64>) -> Self {
        WeightMatrix { mode, entries }
    }
}

/// Build the weight for a CSIT mode: identity needs only `N_t`, statistical
/// needs the correlation model, instantaneous wraps a sampled channel.
pub fn make_weight(
    mode: WeightMode,
    n_t: usize,
    corr: Option<&CorrelationModel>,
    ch: Option<&RealChannel>,
) -> Result<WeightMatrix> {
    let entries = match mode {
        WeightMode::Identity => DMatrix::identity(2 * n_t, 2 * n_t),
        WeightMode::Statistical => {
            let corr = corr.ok_or_else(|| {
                Error::invalid_config("statistical weight requires a correlation model")
            })?;
            if corr.n_t() != n_t {
                return Err(Error::dims("correlation model size differs from N_t"));
            }
            corr.weight().clone()
        }
        WeightMode::Instantaneous => {
            let ch = ch.ok_or_else(|| {
                Error::invalid_config("instantaneous weight requires a channel realization")
            })?;
            if ch.matrix().ncols() != 2 * n_t {
                return Err(Error::dims("channel width differs from 2*N_t"));
            }
            ch.matrix().clone()
        }
    };
    Ok(WeightMatrix { mode, entries })
}

/// Where a set came from; carried through the CSV format and summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub method: String,
    pub weight_mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Signal-constellation size per TAC for recursively designed sets.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl Provenance {
    pub fn new(method: &str, weight_mode: &str) -> Self {
        Provenance {
            method: method.to_string(),
            weight_mode: weight_mode.to_string(),
            ..Default::default()
        }
    }
}

/// An ordered set of `N = 2^n` real-expanded transmit vectors.
///
/// Construction validates the size, the per-vector dimension, the scheme's
/// sparsity rule and pairwise distinctness (a duplicate pair would make the
/// minimum distance zero).
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitSet {
    vectors: Vec<DVector<f64>>,
    config: SystemConfig,
    provenance: Provenance,
}

impl TransmitSet {
    pub fn new(
        vectors: Vec<DVector<f64>>,
        config: SystemConfig,
        provenance: Provenance,
    ) -> Result<Self> {
        config.validate()?;
        if vectors.len() != config.set_size() {
            return Err(Error::invalid_config(format!(
                "set holds {} vectors, expected 2^{} = {}",
                vectors.len(),
                config.n_bits,
                config.set_size()
            )));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != config.real_dim() {
                return Err(Error::dims(format!(
                    "vector {} has dimension {}, expected {}",
                    i,
                    v.len(),
                    config.real_dim()
                )));
            }
            if !check_sparsity(v, &config) {
                return Err(Error::SparsityViolation {
                    index: i,
                    scheme: config.scheme.as_str(),
                });
            }
        }
        for i in 0..vectors.len() {
            for j in (i + 1)..vectors.len() {
                if (&vectors[i] - &vectors[j]).norm() < DUPLICATE_TOL {
                    return Err(Error::DuplicateVectors { a: i, b: j });
                }
            }
        }
        Ok(TransmitSet {
            vectors,
            config,
            provenance,
        })
    }

    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Replace the provenance (e.g. to record the experiment seed before
    /// serializing); the vectors are untouched.
    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Average transmit power `(1/N) sum ||x_i||^2`.
    pub fn average_power(&self) -> f64 {
        let n = self.vectors.len() as f64;
        self.vectors.iter().map(|v| v.norm_squared()).sum::<f64>() / n
    }

    /// Minimum weighted pairwise distance `min ||A (x_i - x_j)||_2`.
    pub fn min_distance(&self, a: &WeightMatrix) -> Result<f64> {
        if self.vectors.len() < 2 {
            return Err(Error::invalid_config(
                "minimum distance needs at least two vectors",
            ));
        }
        if a.dim() != self.config.real_dim() {
            return Err(Error::dims(format!(
                "weight has {} columns, set vectors have dimension {}",
                a.dim(),
                self.config.real_dim()
            )));
        }
        let weighted: Vec<DVector<f64>> = self.vectors.iter().map(|v| a.matrix() * v).collect();
        let mut best = f64::INFINITY;
        for i in 0..weighted.len() {
            for j in (i + 1)..weighted.len() {
                let d = (&weighted[i] - &weighted[j]).norm();
                if d < best {
                    best = d;
                }
            }
        }
        Ok(best)
    }

    /// Constellation figure of merit `d_min^2 / P`; scale-invariant.
    pub fn cfm(&self, a: &WeightMatrix) -> Result<f64> {
        let p = self.average_power();
        if p <= 0.0 {
            return Err(Error::ZeroPower);
        }
        let d = self.min_distance(a)?;
        Ok(d * d / p)
    }

    /// Uniformly rescale so the average power is exactly one.
    pub fn normalize_power(&self) -> Result<TransmitSet> {
        let p = self.average_power();
        if p <= 0.0 {
            return Err(Error::ZeroPower);
        }
        let scale = 1.0 / p.sqrt();
        Ok(TransmitSet {
            vectors: self.vectors.iter().map(|v| v * scale).collect(),
            config: self.config,
            provenance: self.provenance.clone(),
        })
    }

    /// Uniformly scale every vector by `c` (metric tests and comparisons).
    pub fn scaled(&self, c: f64) -> TransmitSet {
        TransmitSet {
            vectors: self.vectors.iter().map(|v| v * c).collect(),
            config: self.config,
            provenance: self.provenance.clone(),
        }
    }

    /// Write the set in its CSV interchange format: a `#` comment line with
    /// the configuration and provenance, a header row, then one vector per
    /// row. Floats use the shortest representation that parses back to the
    /// identical bits, so a write/read cycle is exact.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "# scheme={} nt={} nr={} nrf={} n={} csit={} method={} weight={}",
            self.config.scheme.as_str(),
            self.config.n_t,
            self.config.n_r,
            self.config.n_rf,
            self.config.n_bits,
            self.config.csit.as_str(),
            self.provenance.method,
            self.provenance.weight_mode,
        ));
        if let Some(seed) = self.provenance.seed {
            s.push_str(&format!(" seed={seed}"));
        }
        if let Some(partition) = &self.provenance.partition {
            let counts: Vec<String> = partition.iter().map(|c| c.to_string()).collect();
            s.push_str(&format!(" partition={}", counts.join(";")));
        }
        if let Some(delta) = self.provenance.delta {
            s.push_str(&format!(" delta={delta}"));
        }
        s.push('\n');
        let header: Vec<String> = (1..=self.config.real_dim())
            .map(|i| format!("x{i}"))
            .collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for v in &self.vectors {
            let row: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    /// Parse the format written by [`TransmitSet::to_csv`].
    pub fn from_csv(text: &str) -> Result<TransmitSet> {
        use std::collections::HashMap;

        let mut lines = text.lines().enumerate();
        let (_, comment) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty file".into(),
        })?;
        if !comment.starts_with('#') {
            return Err(Error::Parse {
                line: 1,
                msg: "expected a `# key=value ...` comment line".into(),
            });
        }
        let mut kv: HashMap<&str, &str> = HashMap::new();
        for token in comment[1..].split_whitespace() {
            if let Some((k, v)) = token.split_once('=') {
                kv.insert(k, v);
            }
        }
        fn need<'a>(kv: &HashMap<&str, &'a str>, key: &str) -> Result<&'a str> {
            kv.get(key).copied().ok_or_else(|| Error::Parse {
                line: 1,
                msg: format!("missing `{key}` in the header comment"),
            })
        }
        fn parse_num<T: std::str::FromStr>(value: &str, key: &str) -> Result<T> {
            value.parse().map_err(|_| Error::Parse {
                line: 1,
                msg: format!("bad `{key}` value `{value}`"),
            })
        }
        let config = SystemConfig::new(
            need(&kv, "scheme")?.parse()?,
            parse_num(need(&kv, "nt")?, "nt")?,
            parse_num(need(&kv, "nr")?, "nr")?,
            parse_num(need(&kv, "nrf")?, "nrf")?,
            parse_num(need(&kv, "n")?, "n")?,
            need(&kv, "csit")?.parse()?,
        )?;
        let provenance = Provenance {
            method: need(&kv, "method")?.to_string(),
            weight_mode: need(&kv, "weight")?.to_string(),
            seed: match kv.get("seed") {
                Some(v) => Some(parse_num(v, "seed")?),
                None => None,
            },
            partition: match kv.get("partition") {
                Some(v) => {
                    let counts: Result<Vec<usize>> = v
                        .split(';')
                        .map(|c| parse_num::<usize>(c, "partition"))
                        .collect();
                    Some(counts?)
                }
                None => None,
            },
            delta: match kv.get("delta") {
                Some(v) => Some(parse_num(v, "delta")?),
                None => None,
            },
        };

        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 2,
            msg: "missing header row".into(),
        })?;
        let width = header.split(',').count();
        if width != config.real_dim() {
            return Err(Error::Parse {
                line: 2,
                msg: format!(
                    "header has {} columns, expected {}",
                    width,
                    config.real_dim()
                ),
            });
        }

        let mut vectors = Vec::new();
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != width {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("row has {} columns, expected {}", fields.len(), width),
                });
            }
            let mut v = DVector::zeros(width);
            for (j, f) in fields.iter().enumerate() {
                v[j] = f.trim().parse().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad float `{f}`: {e}"),
                })?;
            }
            vectors.push(v);
        }
        TransmitSet::new(vectors, config, provenance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::make_correlation;
    use crate::config::{CsitMode, Scheme};
    use crate::tac::{apply_tac, enumerate_tacs};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn antipodal_pair() -> TransmitSet {
        let config = SystemConfig::new(Scheme::GenSm, 3, 2, 2, 1, CsitMode::None).unwrap();
        let mut e1 = DVector::zeros(6);
        e1[0] = 1.0;
        TransmitSet::new(
            vec![e1.clone(), -e1],
            config,
            Provenance::new("test", "identity"),
        )
        .unwrap()
    }

    fn random_set(seed: u64) -> TransmitSet {
        let config = SystemConfig::new(Scheme::GenSm, 4, 2, 2, 3, CsitMode::None).unwrap();
        let family = enumerate_tacs(&config).unwrap();
        let mut rng = crate::rng::substream(seed, "shaping-test");
        let vectors: Vec<DVector<f64>> = (0..8)
            .map(|i| {
                let tac = family.get(i % family.len());
                let s = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0f64));
                apply_tac(tac, &s, 4).unwrap()
            })
            .collect();
        TransmitSet::new(vectors, config, Provenance::new("test", "identity")).unwrap()
    }

    #[test]
    fn antipodal_metrics() {
        let set = antipodal_pair();
        let a = make_weight(WeightMode::Identity, 3, None, None).unwrap();
        assert_abs_diff_eq!(set.average_power(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(set.min_distance(&a).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(set.cfm(&a).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn power_scales_quadratically() {
        let set = random_set(1);
        let p = set.average_power();
        assert_abs_diff_eq!(set.scaled(3.0).average_power(), 9.0 * p, epsilon = 1e-12);
    }

    #[test]
    fn min_distance_matches_brute_force() {
        let set = random_set(2);
        let corr = make_correlation(0.3, 4).unwrap();
        let a = make_weight(WeightMode::Statistical, 4, Some(&corr), None).unwrap();
        let d = set.min_distance(&a).unwrap();

        let mut oracle = f64::INFINITY;
        for i in 0..set.len() {
            for j in 0..set.len() {
                if i == j {
                    continue;
                }
                let diff = a.matrix() * (&set.vectors()[i] - &set.vectors()[j]);
                oracle = oracle.min(diff.norm());
            }
        }
        assert_abs_diff_eq!(d, oracle, epsilon = 1e-12);
    }

    #[test]
    fn distance_homogeneity_and_cfm_invariance() {
        let set = random_set(3);
        let a = make_weight(WeightMode::Identity, 4, None, None).unwrap();
        let d = set.min_distance(&a).unwrap();
        let cfm = set.cfm(&a).unwrap();
        for &c in &[0.5, 2.0] {
            let scaled = set.scaled(c);
            assert_abs_diff_eq!(scaled.min_distance(&a).unwrap(), c * d, epsilon = 1e-12);
            assert_abs_diff_eq!(scaled.cfm(&a).unwrap(), cfm, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalize_power_is_exact_and_idempotent() {
        let set = random_set(4).scaled(2.0);
        let a = make_weight(WeightMode::Identity, 4, None, None).unwrap();
        let d_before = set.min_distance(&a).unwrap();
        let p_before = set.average_power();

        let norm = set.normalize_power().unwrap();
        assert_abs_diff_eq!(norm.average_power(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            norm.min_distance(&a).unwrap(),
            d_before / p_before.sqrt(),
            epsilon = 1e-12
        );

        let twice = norm.normalize_power().unwrap();
        for (u, v) in norm.vectors().iter().zip(twice.vectors()) {
            assert!((u - v).norm() < 1e-15);
        }
    }

    #[test]
    fn constructor_rejects_sparsity_violation() {
        let config = SystemConfig::new(Scheme::GenSm, 3, 2, 2, 1, CsitMode::None).unwrap();
        let dense = DVector::from_vec(vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        let ok = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let err = TransmitSet::new(vec![dense, ok], config, Provenance::new("test", "identity"));
        assert!(matches!(
            err,
            Err(Error::SparsityViolation { index: 0, .. })
        ));
    }

    #[test]
    fn constructor_rejects_duplicates_and_bad_size() {
        let config = SystemConfig::new(Scheme::GenSm, 3, 2, 2, 1, CsitMode::None).unwrap();
        let mut e1 = DVector::zeros(6);
        e1[0] = 1.0;
        let mut near = e1.clone();
        near[0] += 1e-12;
        let dup = TransmitSet::new(
            vec![e1.clone(), near],
            config,
            Provenance::new("test", "identity"),
        );
        assert!(matches!(dup, Err(Error::DuplicateVectors { .. })));

        let short = TransmitSet::new(
            vec![e1.clone()],
            config,
            Provenance::new("test", "identity"),
        );
        assert!(short.is_err());
    }

    #[test]
    fn weight_construction() {
        let id = make_weight(WeightMode::Identity, 3, None, None).unwrap();
        assert_eq!(id.matrix(), &DMatrix::<f64>::identity(6, 6));

        let corr0 = make_correlation(0.0, 3).unwrap();
        let r0 = make_weight(WeightMode::Statistical, 3, Some(&corr0), None).unwrap();
        assert_eq!(r0.matrix(), &DMatrix::<f64>::identity(6, 6));

        assert!(make_weight(WeightMode::Statistical, 3, None, None).is_err());
        assert!(make_weight(WeightMode::Instantaneous, 3, None, None).is_err());

        let mut rng = crate::rng::substream(8, "w");
        let (_, real) = crate::channel::sample_channel(&mut rng, &corr0, 2);
        let h = make_weight(WeightMode::Instantaneous, 3, None, Some(&real)).unwrap();
        assert_eq!(h.matrix(), real.matrix());
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let mut set = random_set(5);
        set.provenance.seed = Some(7);
        set.provenance.partition = Some(vec![2, 3, 3]);
        set.provenance.delta = Some(0.1);
        let text = set.to_csv();
        let back = TransmitSet::from_csv(&text).unwrap();
        assert_eq!(back.config(), set.config());
        assert_eq!(back.provenance(), set.provenance());
        for (u, v) in set.vectors().iter().zip(back.vectors()) {
            for (a, b) in u.iter().zip(v.iter()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        // And the re-serialization is byte-identical.
        assert_eq!(text, back.to_csv());
    }

    #[test]
    fn csv_parse_reports_line_numbers() {
        let set = random_set(6);
        let mut text = set.to_csv();
        text.push_str("not,a,valid,row\n");
        match TransmitSet::from_csv(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 11),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
