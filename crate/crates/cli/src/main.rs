//! Batch front-end for transmit-set design and evaluation.
//!
//! Subcommands: `design` (run a designer, write the set CSV and a JSON
//! summary), `evaluate` (SER curve with the analytic bound for a stored
//! set), `ccdf` (minimum-distance CCDF of an adaptive designer over channel
//! draws) and `sweep` (design several methods and tabulate their SER
//! comparison).
//!
//! Every option can also come from a plain-text `key=value` config file
//! (`--config`); explicit flags win. All randomness derives from `--seed`
//! through named sub-streams, so a fixed seed reproduces output files byte
//! for byte (the JSON summaries additionally carry a wall-clock `runtime`
//! field, which is excluded from that guarantee).
//!
//! Exit codes: 0 success, 2 configuration/parse error, 3 numerical or
//! design failure.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use sigshape::cbss::{build_codebook, progressive_select_with_trace};
use sigshape::channel::{make_correlation, sample_channel, CorrelationModel};
use sigshape::config::{CsitMode, Scheme, SystemConfig};
use sigshape::error::Error;
use sigshape::evaluate::{
    baseline_design, compare_designs, dmin_ccdf, ser_curve, BaselineFlavor, SnrGrid,
};
use sigshape::obss::{recursive_design_with_report, SolverOptions};
use sigshape::rng::{derive_seed, substream};
use sigshape::shaping::{make_weight, TransmitSet, WeightMatrix, WeightMode};
use sigshape::tac::enumerate_tacs;

#[derive(Parser)]
#[command(
    name = "sigshape",
    version,
    about = "Design and evaluate GenSM/GenQSM transmit-vector sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design a transmit set and write it as CSV plus a JSON summary.
    Design(CommonArgs),
    /// Simulate the SER curve (with the analytic upper bound) of a stored set.
    Evaluate(CommonArgs),
    /// CCDF of the adaptive minimum distance over instantaneous channel draws.
    Ccdf(CommonArgs),
    /// Design several methods and tabulate an SER comparison report.
    Sweep(CommonArgs),
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Plain-text key=value defaults (one per line, '#' comments); flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// gensm | genqsm
    #[arg(long)]
    scheme: Option<String>,
    /// Transmit antennas N_t.
    #[arg(long)]
    nt: Option<usize>,
    /// Receive antennas N_r.
    #[arg(long)]
    nr: Option<usize>,
    /// RF chains N_RF.
    #[arg(long)]
    nrf: Option<usize>,
    /// Rate in bits per channel use; the set holds 2^n vectors.
    #[arg(long)]
    n: Option<usize>,
    /// obss | cbss | baseline
    #[arg(long)]
    method: Option<String>,
    /// Comma list of methods for `sweep`.
    #[arg(long)]
    methods: Option<String>,
    /// none | statistical | instantaneous
    #[arg(long)]
    csit: Option<String>,
    /// Transmit correlation coefficient in [0,1).
    #[arg(long)]
    delta: Option<f64>,
    /// QAM order of the CBSS codebook (4, 16 or 64).
    #[arg(long)]
    mc: Option<usize>,
    /// Comma list of SNR points in dB.
    #[arg(long, value_name = "DB,DB,...")]
    snr_db: Option<String>,
    /// Monte-Carlo trials per SNR point.
    #[arg(long)]
    trials: Option<u64>,
    /// Channel draws for `ccdf`.
    #[arg(long)]
    draws: Option<usize>,
    /// Comma list of CCDF thresholds.
    #[arg(long)]
    thresholds: Option<String>,
    /// Channel-estimation error level; detector noise variance is eta/rho.
    #[arg(long)]
    eta: Option<f64>,
    /// Experiment seed; all sub-streams derive from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Input set CSV for `evaluate`.
    #[arg(long)]
    set: Option<PathBuf>,
    /// Output file path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Entry-solver restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// Entry-solver outer iterations.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Entry-solver subgradient steps per outer iteration.
    #[arg(long)]
    inner_iters: Option<usize>,
    /// Entry-solver stopping tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Also write solver/selection diagnostics next to the output.
    #[arg(long, default_value_t = false)]
    verbose: bool,
}

/// Options merged from the command line and an optional config file.
struct Resolved {
    args: CommonArgs,
    file: HashMap<String, String>,
}

impl Resolved {
    fn new(args: CommonArgs) -> Result<Self, Error> {
        let file = match &args.config {
            Some(path) => parse_config_file(path)?,
            None => HashMap::new(),
        };
        Ok(Resolved { args, file })
    }

    fn file_value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, Error> {
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                Error::invalid_config(format!("config file: bad value `{raw}` for `{key}`"))
            }),
        }
    }

    fn get<T: std::str::FromStr + Clone>(
        &self,
        key: &str,
        flag: &Option<T>,
    ) -> Result<Option<T>, Error> {
        if let Some(v) = flag {
            return Ok(Some(v.clone()));
        }
        self.file_value(key)
    }

    fn need<T: std::str::FromStr + Clone>(&self, key: &str, flag: &Option<T>) -> Result<T, Error> {
        self.get(key, flag)?
            .ok_or_else(|| Error::invalid_config(format!("missing required option `--{key}`")))
    }

    fn system_config(&self) -> Result<SystemConfig, Error> {
        let scheme: Scheme = self.need::<String>("scheme", &self.args.scheme)?.parse()?;
        let csit: CsitMode = self
            .get::<String>("csit", &self.args.csit)?
            .map(|s| s.parse())
            .transpose()?
            .unwrap_or(CsitMode::None);
        SystemConfig::new(
            scheme,
            self.need("nt", &self.args.nt)?,
            self.need("nr", &self.args.nr)?,
            self.need("nrf", &self.args.nrf)?,
            self.need("n", &self.args.n)?,
            csit,
        )
    }

    fn delta(&self) -> Result<f64, Error> {
        Ok(self.get("delta", &self.args.delta)?.unwrap_or(0.0))
    }

    fn seed(&self) -> Result<u64, Error> {
        Ok(self.get("seed", &self.args.seed)?.unwrap_or(0))
    }

    fn eta(&self) -> Result<f64, Error> {
        Ok(self.get("eta", &self.args.eta)?.unwrap_or(0.0))
    }

    fn solver_options(&self, seed: u64) -> Result<SolverOptions, Error> {
        let mut opts = SolverOptions {
            seed,
            ..Default::default()
        };
        if let Some(v) = self.get("restarts", &self.args.restarts)? {
            opts.restarts = v;
        }
        if let Some(v) = self.get("max-iters", &self.args.max_iters)? {
            opts.max_iters = v;
        }
        if let Some(v) = self.get("inner-iters", &self.args.inner_iters)? {
            opts.inner_iters = v;
        }
        if let Some(v) = self.get("tol", &self.args.tol)? {
            opts.tol = v;
        }
        Ok(opts)
    }

    fn snr_grid(&self) -> Result<SnrGrid, Error> {
        let raw = self.need::<String>("snr-db", &self.args.snr_db)?;
        SnrGrid::from_db(&parse_f64_list(&raw)?)
    }

    fn thresholds(&self) -> Result<Vec<f64>, Error> {
        match self.get::<String>("thresholds", &self.args.thresholds)? {
            Some(raw) => parse_f64_list(&raw),
            // default grid 0, 0.1, ..., 3.0
            None => Ok((0..=30).map(|i| i as f64 * 0.1).collect()),
        }
    }

    fn out(&self) -> Result<PathBuf, Error> {
        if let Some(p) = &self.args.out {
            return Ok(p.clone());
        }
        match self.file.get("out") {
            Some(p) => Ok(PathBuf::from(p)),
            None => Err(Error::invalid_config("missing required option `--out`")),
        }
    }
}

fn parse_config_file(path: &Path) -> Result<HashMap<String, String>, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: lineno + 1,
            msg: format!("expected key=value, got `{line}`"),
        })?;
        // accept snake_case keys for flag names
        map.insert(
            key.trim().replace('_', "-").to_string(),
            value.trim().to_string(),
        );
    }
    Ok(map)
}

fn parse_f64_list(raw: &str) -> Result<Vec<f64>, Error> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse()
                .map_err(|_| Error::invalid_config(format!("bad number `{tok}` in list")))
        })
        .collect()
}

/// Write through a temp file and rename, so readers never see a partial file.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Error> {
    let tmp = path.with_extension(format!(
        "{}.tmp{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or(""),
        std::process::id()
    ));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}.summary.json"))
}

fn trace_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}.trace.csv"))
}

/// The design weight for a CSIT mode; instantaneous mode samples one channel
/// from the `channel` sub-stream of the experiment seed.
fn design_weight(
    config: &SystemConfig,
    corr: &CorrelationModel,
    seed: u64,
) -> Result<WeightMatrix, Error> {
    match config.csit {
        CsitMode::None => make_weight(WeightMode::Identity, config.n_t, None, None),
        CsitMode::Statistical => make_weight(WeightMode::Statistical, config.n_t, Some(corr), None),
        CsitMode::Instantaneous => {
            let mut rng = substream(seed, "channel");
            let (_, real) = sample_channel(&mut rng, corr, config.n_r);
            make_weight(WeightMode::Instantaneous, config.n_t, None, Some(&real))
        }
    }
}

fn run_design_method(
    method: &str,
    config: &SystemConfig,
    corr: &CorrelationModel,
    a: &WeightMatrix,
    resolved: &Resolved,
    seed: u64,
) -> Result<(TransmitSet, Option<String>, serde_json::Value), Error> {
    match method {
        "obss" => {
            let opts = resolved.solver_options(seed)?;
            let record = resolved.args.verbose;
            let opts = SolverOptions {
                record_trace: record,
                ..opts
            };
            let (set, report) = recursive_design_with_report(config, a, &opts)?;
            let trace = if record {
                let mut csv = String::from("size,iteration,objective\n");
                for step in &report.steps {
                    for (it, tau) in step.trace.iter().enumerate() {
                        csv.push_str(&format!("{},{},{}\n", step.size, it, tau));
                    }
                }
                Some(csv)
            } else {
                None
            };
            let extra = serde_json::json!({
                "partition": set.provenance().partition,
                "steps": report.steps.iter().map(|s| {
                    serde_json::json!({"size": s.size, "dmin": s.dmin,
                                       "candidates": s.candidates_evaluated})
                }).collect::<Vec<_>>(),
            });
            Ok((set, trace, extra))
        }
        "cbss" => {
            let m_c = resolved.get("mc", &resolved.args.mc)?.unwrap_or(16);
            let family = enumerate_tacs(config)?;
            let codebook = build_codebook(config, &family, m_c)?;
            let (set, steps) = progressive_select_with_trace(&codebook, a, config.set_size())?;
            let trace = if resolved.args.verbose {
                let mut csv = String::from("size,chosen,cfm\n");
                for s in &steps {
                    let chosen: Vec<String> = s.chosen.iter().map(|c| c.to_string()).collect();
                    csv.push_str(&format!("{},{},{}\n", s.size, chosen.join(";"), s.cfm));
                }
                Some(csv)
            } else {
                None
            };
            let extra = serde_json::json!({"codebook_size": codebook.len(), "mc": m_c});
            Ok((set, trace, extra))
        }
        "baseline" => {
            let flavor = match config.scheme {
                Scheme::GenSm => BaselineFlavor::BpskGenSm,
                Scheme::GenQsm => BaselineFlavor::QuarterPiBpskGenQsm,
            };
            let corr_opt = if corr.delta() > 0.0 { Some(corr) } else { None };
            let set = baseline_design(config, corr_opt, flavor)?;
            Ok((set, None, serde_json::Value::Null))
        }
        other => Err(Error::invalid_config(format!(
            "unknown method `{other}` (obss | cbss | baseline)"
        ))),
    }
}

fn cmd_design(args: CommonArgs) -> Result<(), Error> {
    let resolved = Resolved::new(args)?;
    let config = resolved.system_config()?;
    let delta = resolved.delta()?;
    let seed = resolved.seed()?;
    let method = resolved.need::<String>("method", &resolved.args.method)?;
    let out = resolved.out()?;

    let corr = make_correlation(delta, config.n_t)?;
    let a = design_weight(&config, &corr, seed)?;

    let started = Instant::now();
    let (set, trace, extra) = run_design_method(&method, &config, &corr, &a, &resolved, seed)?;
    let runtime = started.elapsed().as_secs_f64();

    // Stamp experiment metadata into the stored provenance.
    let mut provenance = set.provenance().clone();
    provenance.seed = Some(seed);
    if config.csit != CsitMode::None {
        provenance.delta = Some(delta);
    }
    let set = set.with_provenance(provenance);

    let d_min = set.min_distance(&a)?;
    write_atomic(&out, &set.to_csv())?;
    if let Some(trace) = trace {
        write_atomic(&trace_path(&out), &trace)?;
    }

    let summary = serde_json::json!({
        "method": method,
        "scheme": config.scheme.as_str(),
        "nt": config.n_t,
        "nr": config.n_r,
        "nrf": config.n_rf,
        "n": config.n_bits,
        "csit": config.csit.as_str(),
        "delta": delta,
        "seed": seed,
        "d_min": d_min,
        "power": set.average_power(),
        "partition": set.provenance().partition,
        "runtime": runtime,
        "out": out.to_string_lossy(),
        "detail": extra,
    });
    let summary_text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_atomic(&summary_path(&out), &summary_text)?;
    println!("{summary_text}");
    Ok(())
}

fn cmd_evaluate(args: CommonArgs) -> Result<(), Error> {
    let resolved = Resolved::new(args)?;
    let set_path = resolved
        .get::<PathBuf>("set", &resolved.args.set)?
        .ok_or_else(|| Error::invalid_config("missing required option `--set`"))?;
    let text = std::fs::read_to_string(&set_path)?;
    let set = TransmitSet::from_csv(&text)?;
    let config = *set.config();

    let delta = match resolved.get("delta", &resolved.args.delta)? {
        Some(d) => d,
        None => set.provenance().delta.unwrap_or(0.0),
    };
    let seed = resolved.seed()?;
    let eta = resolved.eta()?;
    let trials = resolved
        .get("trials", &resolved.args.trials)?
        .unwrap_or(100_000);
    let grid = resolved.snr_grid()?;
    let out = resolved.out()?;

    let corr = make_correlation(delta, config.n_t)?;
    // Summary distance under the reconstructible weight.
    let a = if delta > 0.0 {
        make_weight(WeightMode::Statistical, config.n_t, Some(&corr), None)?
    } else {
        make_weight(WeightMode::Identity, config.n_t, None, None)?
    };
    let d_min = set.min_distance(&a)?;

    let started = Instant::now();
    let curve = ser_curve(&set, &corr, config.n_r, &grid, trials, seed, eta)?;
    write_atomic(&out, &curve.to_csv())?;

    let summary = serde_json::json!({
        "set": set_path.to_string_lossy(),
        "d_min": d_min,
        "power": set.average_power(),
        "delta": delta,
        "eta": eta,
        "trials": trials,
        "points": grid.len(),
        "runtime": started.elapsed().as_secs_f64(),
        "out": out.to_string_lossy(),
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    );
    Ok(())
}

fn cmd_ccdf(args: CommonArgs) -> Result<(), Error> {
    let resolved = Resolved::new(args)?;
    let config = resolved.system_config()?;
    if config.csit != CsitMode::Instantaneous {
        return Err(Error::invalid_config(
            "ccdf requires --csit instantaneous (the designer adapts per channel draw)",
        ));
    }
    let delta = resolved.delta()?;
    let seed = resolved.seed()?;
    let draws = resolved.get("draws", &resolved.args.draws)?.unwrap_or(200);
    let method = resolved
        .get::<String>("method", &resolved.args.method)?
        .unwrap_or_else(|| "cbss".to_string());
    let thresholds = resolved.thresholds()?;
    let out = resolved.out()?;
    let corr = make_correlation(delta, config.n_t)?;

    let started = Instant::now();
    let table = match method.as_str() {
        "cbss" => {
            let m_c = resolved.get("mc", &resolved.args.mc)?.unwrap_or(16);
            let family = enumerate_tacs(&config)?;
            let codebook = build_codebook(&config, &family, m_c)?;
            dmin_ccdf(
                |a, _draw| {
                    progressive_select_with_trace(&codebook, a, config.set_size())
                        .map(|(set, _)| set)
                },
                &config,
                &corr,
                &thresholds,
                draws,
                seed,
            )?
        }
        "obss" => {
            if draws > 50 {
                eprintln!(
                    "warning: obss ccdf solves {} recursive designs; this may take a while",
                    draws
                );
            }
            let base_opts = resolved.solver_options(seed)?;
            dmin_ccdf(
                |a, draw| {
                    let opts = SolverOptions {
                        seed: derive_seed(seed, "ccdf-design", &[draw]),
                        ..base_opts.clone()
                    };
                    sigshape::obss::recursive_design(&config, a, &opts)
                },
                &config,
                &corr,
                &thresholds,
                draws,
                seed,
            )?
        }
        other => {
            return Err(Error::invalid_config(format!(
                "unsupported ccdf method `{other}` (cbss | obss)"
            )))
        }
    };
    write_atomic(&out, &table.to_csv())?;

    let summary = serde_json::json!({
        "method": method,
        "draws": draws,
        "thresholds": table.thresholds.len(),
        "runtime": started.elapsed().as_secs_f64(),
        "out": out.to_string_lossy(),
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    );
    Ok(())
}

fn cmd_sweep(args: CommonArgs) -> Result<(), Error> {
    let resolved = Resolved::new(args)?;
    let config = resolved.system_config()?;
    if config.csit == CsitMode::Instantaneous {
        return Err(Error::invalid_config(
            "sweep compares fixed designs over fading; use `ccdf` for adaptive designs",
        ));
    }
    let delta = resolved.delta()?;
    let seed = resolved.seed()?;
    let eta = resolved.eta()?;
    let trials = resolved
        .get("trials", &resolved.args.trials)?
        .unwrap_or(100_000);
    let grid = resolved.snr_grid()?;
    let methods_raw = resolved
        .get::<String>("methods", &resolved.args.methods)?
        .unwrap_or_else(|| "obss,cbss,baseline".to_string());
    let out = resolved.out()?;
    let corr = make_correlation(delta, config.n_t)?;
    let a = design_weight(&config, &corr, seed)?;

    let started = Instant::now();
    let mut sets = Vec::new();
    for method in methods_raw.split(',').map(str::trim) {
        let (set, _, _) = run_design_method(method, &config, &corr, &a, &resolved, seed)?;
        sets.push(set);
    }
    let report = compare_designs(&sets, &corr, config.n_r, &grid, trials, seed, eta)?;
    write_atomic(&out, &report.to_csv())?;

    let summary = serde_json::json!({
        "methods": methods_raw,
        "delta": delta,
        "eta": eta,
        "trials": trials,
        "rows": report.rows.len(),
        "runtime": started.elapsed().as_secs_f64(),
        "out": out.to_string_lossy(),
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    );
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_)
        | Error::Parse { .. }
        | Error::UnknownFixture(_)
        | Error::DimensionMismatch(_)
        | Error::Io(_) => 2,
        Error::NotPsd { .. }
        | Error::SparsityViolation { .. }
        | Error::DuplicateVectors { .. }
        | Error::ZeroPower
        | Error::Infeasible(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design(args) => cmd_design(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Ccdf(args) => cmd_ccdf(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
