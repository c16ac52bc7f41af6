//! Batch front-end: runs one experiment described by a JSON config and writes
//! CSV series plus JSON summaries into an output directory.
//!
//! Artifacts per command:
//!
//! | command           | files                                 |
//! |-------------------|---------------------------------------|
//! | `solve`           | `values.csv`, `summary.json`          |
//! | `verify`          | `values.csv`, `verification.json`     |
//! | `simulate`        | `simulation.csv`                      |
//! | `sweep`           | `sweep.csv`                           |
//! | `explore-nu-zero` | `values.csv`, `summary.json`          |

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{self, DeviationSeries, DropConstants, LemmaId, Verification, Violation};
use crate::engine::{self, EngineError, ValueTable};
use crate::lottery::{ConditionReport, GameSpec, LotteryError, LotterySet};
use crate::oracles::{self, OracleError, Policy, SimConfig};
pub use config::{Command, ExperimentConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Below this, `Δ_n` counts as converged in summaries.
pub const CONVERGENCE_TARGET: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("lottery set fails the convergence hypotheses: {0}")]
    Conditions(String),
    #[error(transparent)]
    Lottery(#[from] LotteryError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_CONFIG
    }
}

/// Overrides taken from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Reads `config_path` and runs `command`.
pub fn run_file(
    command: Command,
    config_path: &Path,
    overrides: &Overrides,
) -> Result<RunOutcome, CliError> {
    let text = fs::read_to_string(config_path).map_err(|source| CliError::Io {
        context: format!("reading {}", config_path.display()),
        source,
    })?;
    let config = ExperimentConfig::from_json(&text)?;
    run(command, &config, overrides)
}

pub fn run(
    command: Command,
    config: &ExperimentConfig,
    overrides: &Overrides,
) -> Result<RunOutcome, CliError> {
    if let Some(declared) = config.command {
        if declared != command {
            return Err(CliError::Config {
                path: "command".into(),
                message: format!(
                    "config declares `{}` but `{}` was requested",
                    declared.name(),
                    command.name()
                ),
            });
        }
    }
    let output = overrides
        .output
        .clone()
        .or_else(|| config.output.clone())
        .ok_or_else(|| CliError::Config {
            path: "output".into(),
            message: "no output directory in config or on the command line".into(),
        })?;
    let mut run = Runner {
        config,
        overrides,
        output,
        outcome: RunOutcome {
            exit_code: EXIT_OK,
            artifacts: Vec::new(),
            warnings: Vec::new(),
        },
    };
    match command {
        Command::Solve => run.solve(false)?,
        Command::ExploreNuZero => run.solve(true)?,
        Command::Verify => run.verify()?,
        Command::Simulate => run.simulate()?,
        Command::Sweep => run.sweep()?,
    }
    Ok(run.outcome)
}

struct Runner<'a> {
    config: &'a ExperimentConfig,
    overrides: &'a Overrides,
    output: PathBuf,
    outcome: RunOutcome,
}

#[derive(Serialize)]
struct Summary {
    n: usize,
    m: usize,
    eta: f64,
    nu: f64,
    eta_ok: bool,
    nu_ok: bool,
    tau: Option<f64>,
    delta: Option<f64>,
    p_n: f64,
    #[serde(rename = "Delta_n")]
    delta_n: f64,
    #[serde(rename = "DeltaBar_n")]
    delta_bar_n: f64,
    convergence_horizon: Option<usize>,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct VerificationJson {
    n: usize,
    m: usize,
    eta: f64,
    nu: f64,
    tau: f64,
    delta: f64,
    slack_tolerance: f64,
    all_passed: bool,
    total_violations: usize,
    reports: Vec<ReportJson>,
    delta_bar_strict_decrease: analysis::StrictDecrease,
}

#[derive(Serialize)]
struct ReportJson {
    lemma_id: LemmaId,
    parameter: Option<f64>,
    checked: usize,
    violations: usize,
    min_slack: Option<f64>,
    first_violations: Vec<Violation>,
}

impl Runner<'_> {
    fn warn(&mut self, message: String) {
        self.outcome.warnings.push(message);
    }

    fn conditions(
        &mut self,
        spec: &GameSpec,
        allow_nu_zero: bool,
    ) -> Result<ConditionReport, CliError> {
        let c = spec.lotteries.conditions()?;
        if !c.eta_ok {
            self.warn(format!(
                "eta = {} is not below 1: pure moves available",
                c.eta
            ));
        }
        if !c.nu_ok {
            if !allow_nu_zero {
                return Err(CliError::Conditions(format!(
                    "nu = {} (some take-count is never played); use explore-nu-zero",
                    c.nu
                )));
            }
            self.warn(format!(
                "nu = {}: convergence hypotheses unmet, bound checks skipped",
                c.nu
            ));
        }
        Ok(c)
    }

    fn drop_constants(&self, c: &ConditionReport) -> Result<Option<DropConstants>, CliError> {
        if !c.hypotheses_hold() {
            return Ok(None);
        }
        DropConstants::from_conditions(c, self.config.tau)
            .map(Some)
            .map_err(|e| CliError::Config {
                path: "tau".into(),
                message: e.to_string(),
            })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.output.join(name);
        write_atomic(&path, contents.as_bytes())?;
        self.outcome.artifacts.push(path);
        Ok(())
    }

    fn solve(&mut self, explore: bool) -> Result<(), CliError> {
        let spec = self.config.game_spec()?;
        let c = self.conditions(&spec, explore)?;
        let dc = self.drop_constants(&c)?;
        let vt = engine::solve(&spec, self.config.tie_rule())?;
        let ds = DeviationSeries::from_table(&vt);
        self.write("values.csv", &values_csv(&vt, &ds, dc.as_ref()))?;

        let n = spec.n as i64;
        let summary = Summary {
            n: spec.n,
            m: spec.m,
            eta: c.eta,
            nu: c.nu,
            eta_ok: c.eta_ok,
            nu_ok: c.nu_ok,
            tau: dc.map(|d| d.tau),
            delta: dc.map(|d| d.delta),
            p_n: vt.p(n),
            delta_n: ds.delta(n),
            delta_bar_n: ds.delta_bar(n),
            convergence_horizon: dc.map(|d| d.convergence_horizon(spec.m, CONVERGENCE_TARGET)),
            warnings: self.outcome.warnings.clone(),
        };
        self.write("summary.json", &to_json(&summary))
    }

    fn verify(&mut self) -> Result<(), CliError> {
        let spec = self.config.game_spec()?;
        let kappa_grid = self.config.kappa_grid()?;
        let c = self.conditions(&spec, false)?;
        let dc = self.drop_constants(&c)?.ok_or_else(|| {
            CliError::Conditions(format!(
                "eta = {}, nu = {}: need eta < 1 and nu > 0",
                c.eta, c.nu
            ))
        })?;
        let vt = engine::solve(&spec, self.config.tie_rule())?;
        let ds = DeviationSeries::from_table(&vt);
        self.write("values.csv", &values_csv(&vt, &ds, Some(&dc)))?;

        let verification = analysis::verify_all(&vt, &c, &dc, &kappa_grid);
        let json = verification_json(&spec, &c, &dc, &verification);
        self.write("verification.json", &to_json(&json))?;
        if !verification.passed() {
            self.outcome.exit_code = EXIT_VIOLATIONS;
        }
        Ok(())
    }

    fn simulate(&mut self) -> Result<(), CliError> {
        let spec = self.config.game_spec()?;
        self.conditions(&spec, false)?;
        let sim = self.config.sim()?;
        let seed = self.overrides.seed.unwrap_or(sim.seed);
        let n_values = sim.n_values.clone().unwrap_or_else(|| vec![spec.n]);
        let horizon = n_values
            .iter()
            .copied()
            .chain([spec.n])
            .max()
            .unwrap_or(spec.n);
        let vt = engine::solve(&spec.with_n(horizon)?, self.config.tie_rule())?;
        let policy = Policy::from_table(&vt);

        let mut csv = String::from("n,replications,seed,p_hat,std_err,p_engine,z_score\n");
        for &n in &n_values {
            let cfg = SimConfig {
                n,
                replications: sim.replications,
                seed,
            };
            let r = oracles::estimate_win_prob(&policy, &cfg)?;
            let p_engine = vt.p(n as i64);
            let _ = writeln!(
                csv,
                "{n},{},{seed},{},{},{},{}",
                r.replications,
                fmt_g17(r.p_hat),
                fmt_g17(r.std_err),
                fmt_g17(p_engine),
                fmt_g17(r.z_score(p_engine)),
            );
        }
        self.write("simulation.csv", &csv)
    }

    fn sweep(&mut self) -> Result<(), CliError> {
        let spec = self.config.game_spec()?;
        let sweep = self.config.sweep()?;
        let n_values = sweep.n_values.clone().unwrap_or_else(|| vec![spec.n]);
        let families: Vec<(Option<f64>, LotterySet)> = match &sweep.epsilon_values {
            None => vec![(None, spec.lotteries.clone())],
            Some(eps) => eps
                .iter()
                .enumerate()
                .map(|(i, &e)| {
                    LotterySet::truncated_simplex(vec![e; spec.m])
                        .map(|set| (Some(e), set))
                        .map_err(|err| CliError::Config {
                            path: format!("sweep.epsilon_values[{i}]"),
                            message: err.to_string(),
                        })
                })
                .collect::<Result<_, _>>()?,
        };
        let horizon = n_values.iter().copied().max().unwrap_or(spec.n);

        let mut csv = String::from(
            "n,m,epsilon,eta,nu,tau,delta,p_n,Delta_n,DeltaBar_n,convergence_horizon\n",
        );
        for (epsilon, set) in families {
            let family = GameSpec::new(horizon, spec.m, set)?;
            let c = self.conditions(&family, false)?;
            let dc = self.drop_constants(&c)?;
            // values at pile size n do not depend on the table's length
            let vt = engine::solve(&family, self.config.tie_rule())?;
            let ds = DeviationSeries::from_table(&vt);
            for &n in &n_values {
                let k = n as i64;
                let _ = writeln!(
                    csv,
                    "{n},{},{},{},{},{},{},{},{},{},{}",
                    spec.m,
                    epsilon.map(fmt_g17).unwrap_or_default(),
                    fmt_g17(c.eta),
                    fmt_g17(c.nu),
                    dc.map(|d| fmt_g17(d.tau)).unwrap_or_default(),
                    dc.map(|d| fmt_g17(d.delta)).unwrap_or_default(),
                    fmt_g17(vt.p(k)),
                    fmt_g17(ds.delta(k)),
                    fmt_g17(ds.delta_bar(k)),
                    dc.map(|d| d
                        .convergence_horizon(spec.m, CONVERGENCE_TARGET)
                        .to_string())
                        .unwrap_or_default(),
                );
            }
        }
        self.write("sweep.csv", &csv)
    }
}

fn verification_json(
    spec: &GameSpec,
    c: &ConditionReport,
    dc: &DropConstants,
    v: &Verification,
) -> VerificationJson {
    VerificationJson {
        n: spec.n,
        m: spec.m,
        eta: c.eta,
        nu: c.nu,
        tau: dc.tau,
        delta: dc.delta,
        slack_tolerance: analysis::SLACK_TOLERANCE,
        all_passed: v.passed(),
        total_violations: v.violation_count(),
        reports: v
            .reports
            .iter()
            .map(|r| ReportJson {
                lemma_id: r.lemma_id,
                parameter: r.parameter,
                checked: r.checked_k.len(),
                violations: r.violations.len(),
                min_slack: r.min_slack,
                first_violations: r.violations.iter().take(5).copied().collect(),
            })
            .collect(),
        delta_bar_strict_decrease: v.strict_decrease,
    }
}

/// Header of the per-pile-size values CSV.
pub const VALUES_HEADER: &str = "k,p,D,Delta,DeltaBar,DeltaPlus,DeltaMinus,envelope,argmax_index";

pub fn values_csv(vt: &ValueTable, ds: &DeviationSeries, dc: Option<&DropConstants>) -> String {
    let mut out = String::with_capacity(vt.n() * 160);
    out.push_str(VALUES_HEADER);
    out.push('\n');
    for k in 1..=vt.n() {
        let i = k as i64;
        let envelope = dc
            .map(|d| fmt_g17(d.envelope(k, vt.m())))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{k},{},{},{},{},{},{},{envelope},{}",
            fmt_g17(vt.p(i)),
            fmt_g17(ds.d(i)),
            fmt_g17(ds.delta(i)),
            fmt_g17(ds.delta_bar(i)),
            fmt_g17(ds.delta_plus(i)),
            fmt_g17(ds.delta_minus(i)),
            vt.argmax(k),
        );
    }
    out
}

/// Formats like C's `%.17g`: 17 significant digits, trailing zeros dropped.
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..17).contains(&exp) {
        return format!(
            "{}e{}{:02}",
            trim_zeros(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        );
    }
    let decimals = (16 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

/// Writes through a sibling temp file and a rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io_err = |context: String| move |source| CliError::Io { context, source };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io_err(format!("writing {}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(io_err(format!("renaming to {}", path.display())))
}
