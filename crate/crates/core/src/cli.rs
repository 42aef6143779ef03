//! Command-line front end: scenario loading, campaign drivers, CSV and
//! SVG artifacts.
//!
//! Three campaign commands share one row pipeline: `analyze` fills the
//! analytic columns, `simulate` the Monte Carlo ones, and `sweep` both,
//! as selected by the config's `sweep.*` section.  Rows are dispatched to
//! a worker pool but always written in sweep order, and every artifact is
//! deterministic in `(config, flags, seed)` byte for byte.
//!
//! `figures` is a pure CSV → SVG transform (it never recomputes), and
//! `validate` prints the config diagnostics and sets the exit status.
//!
//! Exit codes: 0 success, 1 internal/runtime error, 2 config error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::analysis::{
    average_capacity, gain_thresholds, outage_asymptotic, outage_probability, AnalysisError,
};
use crate::model::{
    AcSigma, CorrelationKernel, Diagnostic, FasGrid, PhaseError, RawConfig, ScenarioConfig,
    Severity, User,
};
use crate::simkit;
use crate::specfun::QmcSettings;

/// Fixed CSV schema; consumers key on this exact line.
pub const CSV_HEADER: &str = "scenario_id,user,sweep_var,sweep_value,snr_db,op_exact,op_asym,\
                              op_mc,op_mc_hw,ac_c,ac_p,ac_sum,ac_mc_sum,ac_mc_hw,valid,err_est,seed";

/// Tool version embedded in artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

// ---------------------------------------------------------------------------
// Argument surface
// ---------------------------------------------------------------------------

/// Top-level argument parser.
#[derive(Debug, Parser)]
#[command(
    name = "starfas",
    version,
    about = "Outage and capacity analysis for dual-sided surface-assisted links \
             with port-selection receivers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form outage and capacity curves over the config's SNR grid.
    Analyze(RunArgs),
    /// Monte Carlo outage and capacity estimates over the same grid.
    Simulate(RunArgs),
    /// Parameter sweep per the config's `sweep.*` section.
    Sweep(RunArgs),
    /// Render a results CSV to SVG plots (no recomputation).
    Figures(FiguresArgs),
    /// Check a scenario file and print its diagnostics.
    Validate(ValidateArgs),
}

/// Flags shared by the campaign commands.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for artifacts.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Master seed of Monte Carlo campaigns.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Channel draws per Monte Carlo point (min 1000).
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Worker threads; 0 picks the machine default.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Absolute tolerance target of the copula CDF engine, in (0, 0.1).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Override the config's port-correlation kernel.
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// Override the config's capacity dispersion convention.
    #[arg(long, value_enum)]
    pub ac_sigma: Option<SigmaArg>,
}

/// Flags of the `figures` command.
#[derive(Debug, Args)]
pub struct FiguresArgs {
    /// Results CSV produced by a campaign command.
    #[arg(long)]
    pub csv: PathBuf,
    /// Output directory for the SVG files.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

/// Flags of the `validate` command.
#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Scenario file.
    #[arg(long)]
    pub config: PathBuf,
}

/// `--kernel` values.
#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    Spherical,
    Cylindrical,
}

/// `--ac-sigma` values.
#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SigmaArg {
    Paper,
    Std,
}

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

/// CLI failure, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Problems in the scenario file or flag values → exit 2.
    #[error("config error: {0}")]
    Config(String),
    /// Filesystem trouble → exit 1.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Numerical failure while evaluating a valid scenario → exit 1.
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    /// Malformed results CSV handed to `figures` → exit 1.
    #[error("csv error: {0}")]
    Csv(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Parses `args` and runs the tool; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successes; usage errors are config
            // errors.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            e.exit_code()
        }
    }
}

/// Runs one parsed command, writing artifacts and console output.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze(args) => campaign(args, CampaignKind::Analyze),
        Command::Simulate(args) => campaign(args, CampaignKind::Simulate),
        Command::Sweep(args) => campaign(args, CampaignKind::Sweep),
        Command::Figures(args) => figures(args),
        Command::Validate(args) => validate(args),
    }
}

// ---------------------------------------------------------------------------
// Scenario loading
// ---------------------------------------------------------------------------

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn render_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("\n  ")
}

/// Loads and validates a scenario; errors abort, warnings go to stderr.
/// Also returns the raw key/value entries (for the `sweep.*` section).
fn load_scenario(path: &Path) -> Result<(ScenarioConfig, RawConfig), CliError> {
    let text = read_file(path)?;
    let (raw, _) = RawConfig::parse_str(&text);
    let (cfg, diags) = crate::model::parse_scenario(&text);
    let (errors, warnings): (Vec<_>, Vec<_>) = diags
        .into_iter()
        .partition(|d| d.severity == Severity::Error);
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if !errors.is_empty() {
        return Err(CliError::Config(format!(
            "{} rejected:\n  {}",
            path.display(),
            render_diagnostics(&errors)
        )));
    }
    Ok((cfg, raw))
}

fn apply_overrides(cfg: &mut ScenarioConfig, args: &RunArgs) {
    if let Some(kernel) = args.kernel {
        cfg.kernel = match kernel {
            KernelArg::Spherical => CorrelationKernel::Spherical,
            KernelArg::Cylindrical => CorrelationKernel::Cylindrical,
        };
    }
    if let Some(sigma) = args.ac_sigma {
        cfg.ac_sigma = match sigma {
            SigmaArg::Paper => AcSigma::Paper,
            SigmaArg::Std => AcSigma::Std,
        };
    }
}

fn settings_from(args: &RunArgs) -> Result<QmcSettings, CliError> {
    let mut settings = QmcSettings::default();
    if let Some(tol) = args.tol {
        if !(tol > 0.0 && tol < 0.1) {
            return Err(CliError::Config(format!(
                "--tol must lie in (0, 0.1), got {tol}"
            )));
        }
        settings.target_abs_tol = tol;
    }
    Ok(settings)
}

// ---------------------------------------------------------------------------
// Sweep section
// ---------------------------------------------------------------------------

/// Swept variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    SnrDb,
    KElements,
    BetaR,
    AlphaC,
    Grid,
    Kappa,
}

impl SweepVariable {
    fn parse(s: &str) -> Result<Self, String> {
        Ok(match s {
            "snr_db" => SweepVariable::SnrDb,
            "k_elements" => SweepVariable::KElements,
            "beta_r" => SweepVariable::BetaR,
            "alpha_c" => SweepVariable::AlphaC,
            "grid" => SweepVariable::Grid,
            "kappa" => SweepVariable::Kappa,
            other => {
                return Err(format!(
                    "unknown sweep variable {other:?} (expected snr_db, k_elements, \
                     beta_r, alpha_c, grid, or kappa)"
                ))
            }
        })
    }

    fn name(self) -> &'static str {
        match self {
            SweepVariable::SnrDb => "snr_db",
            SweepVariable::KElements => "k_elements",
            SweepVariable::BetaR => "beta_r",
            SweepVariable::AlphaC => "alpha_c",
            SweepVariable::Grid => "grid",
            SweepVariable::Kappa => "kappa",
        }
    }
}

/// One sweep point: a plain number, or a port grid `N1xN2:AREA` (square
/// aperture of `AREA` squared wavelengths).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepValue {
    Scalar(f64),
    Grid { n1: usize, n2: usize, area: f64 },
}

impl std::fmt::Display for SweepValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepValue::Scalar(v) => write!(f, "{v:?}"),
            SweepValue::Grid { n1, n2, area } => write!(f, "{n1}x{n2}:{area:?}"),
        }
    }
}

fn parse_grid_token(token: &str) -> Result<SweepValue, String> {
    let bad = || format!("expected a grid token like 2x2:0.5, got {token:?}");
    let (dims, area) = token.split_once(':').ok_or_else(bad)?;
    let (n1, n2) = dims.split_once('x').ok_or_else(bad)?;
    let n1: usize = n1.parse().map_err(|_| bad())?;
    let n2: usize = n2.parse().map_err(|_| bad())?;
    let area: f64 = area.parse().map_err(|_| bad())?;
    if n1 == 0 || n2 == 0 || !(area >= 0.0) {
        return Err(bad());
    }
    Ok(SweepValue::Grid { n1, n2, area })
}

/// Which result columns a sweep fills.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    Op,
    OpAsym,
    Ac,
    McOp,
    McAc,
}

impl OutputKind {
    fn parse(s: &str) -> Result<Self, String> {
        Ok(match s {
            "op" => OutputKind::Op,
            "op_asym" => OutputKind::OpAsym,
            "ac" => OutputKind::Ac,
            "mc_op" => OutputKind::McOp,
            "mc_ac" => OutputKind::McAc,
            other => {
                return Err(format!(
                    "unknown output {other:?} (expected op, op_asym, ac, mc_op, or mc_ac)"
                ))
            }
        })
    }
}

/// Parsed `sweep.*` section.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<SweepValue>,
    pub outputs: Vec<OutputKind>,
}

impl SweepSpec {
    /// Extracts the sweep section from raw config entries.  Returns
    /// `Ok(None)` when no `sweep.*` keys are present.
    pub fn from_raw(raw: &RawConfig) -> Result<Option<SweepSpec>, String> {
        let lookup = |key: &str| {
            raw.entries
                .iter()
                .find(|(k, _, _)| k == key)
                .map(|(_, v, _)| v.as_str())
        };
        for (key, _, line) in &raw.entries {
            if key.starts_with("sweep.")
                && !matches!(
                    key.as_str(),
                    "sweep.variable" | "sweep.values" | "sweep.outputs"
                )
            {
                return Err(format!("line {line}: unknown sweep key {key:?}"));
            }
        }
        let Some(variable) = lookup("sweep.variable") else {
            if lookup("sweep.values").is_some() || lookup("sweep.outputs").is_some() {
                return Err("sweep.values/sweep.outputs given without sweep.variable".into());
            }
            return Ok(None);
        };
        let variable =
            SweepVariable::parse(variable).map_err(|e| format!("sweep.variable: {e}"))?;
        let values_text = lookup("sweep.values")
            .ok_or_else(|| "sweep.variable given without sweep.values".to_string())?;
        let mut values = Vec::new();
        for token in values_text.split_whitespace() {
            let value = if variable == SweepVariable::Grid {
                parse_grid_token(token)
            } else {
                token
                    .parse::<f64>()
                    .map(SweepValue::Scalar)
                    .map_err(|_| format!("expected a real number, got {token:?}"))
            };
            values.push(value.map_err(|e| format!("sweep.values: {e}"))?);
        }
        if values.is_empty() {
            return Err("sweep.values: at least one value required".into());
        }
        let outputs = match lookup("sweep.outputs") {
            None => vec![OutputKind::Op, OutputKind::OpAsym, OutputKind::Ac],
            Some(text) => {
                let mut outputs = Vec::new();
                for token in text.split_whitespace() {
                    outputs
                        .push(OutputKind::parse(token).map_err(|e| format!("sweep.outputs: {e}"))?);
                }
                if outputs.is_empty() {
                    return Err("sweep.outputs: at least one output required".into());
                }
                outputs
            }
        };
        Ok(Some(SweepSpec {
            variable,
            values,
            outputs,
        }))
    }
}

/// Applies one sweep value to a copy of the base scenario.
fn apply_sweep_value(
    base: &ScenarioConfig,
    variable: SweepVariable,
    value: SweepValue,
) -> Result<ScenarioConfig, String> {
    let mut cfg = base.clone();
    match (variable, value) {
        (SweepVariable::SnrDb, SweepValue::Scalar(v)) => {
            cfg.snr_grid_db = vec![v];
        }
        (SweepVariable::KElements, SweepValue::Scalar(v)) => {
            if v.fract() != 0.0 || !(1.0..=1e9).contains(&v) {
                return Err(format!(
                    "k_elements sweep value must be a positive integer, got {v}"
                ));
            }
            cfg.k_elements = v as u32;
        }
        (SweepVariable::BetaR, SweepValue::Scalar(v)) => cfg.beta_r = v,
        (SweepVariable::AlphaC, SweepValue::Scalar(v)) => cfg.alpha_c = v,
        (SweepVariable::Kappa, SweepValue::Scalar(v)) => {
            cfg.phase_error = PhaseError::VonMises { kappa: v };
        }
        (SweepVariable::Grid, SweepValue::Grid { n1, n2, area }) => {
            let w = area.sqrt();
            let grid = FasGrid {
                n1,
                n2,
                w1: w,
                w2: w,
            };
            cfg.grid_r = grid;
            cfg.grid_t = grid;
        }
        (variable, value) => {
            return Err(format!(
                "sweep value {value} does not fit variable {}",
                variable.name()
            ))
        }
    }
    // Values must stay inside the variable's domain; feasibility warnings
    // (reachable-SINR checks) are allowed and become valid=false rows.
    let errors: Vec<_> = cfg
        .validate()
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(format!(
            "sweep value {value} leaves the domain:\n  {}",
            render_diagnostics(&errors)
        ))
    }
}

// ---------------------------------------------------------------------------
// Row pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CampaignKind {
    Analyze,
    Simulate,
    Sweep,
}

impl CampaignKind {
    fn name(self) -> &'static str {
        match self {
            CampaignKind::Analyze => "analyze",
            CampaignKind::Simulate => "simulate",
            CampaignKind::Sweep => "sweep",
        }
    }
}

/// One row to evaluate.
struct RowSpec {
    cfg: ScenarioConfig,
    user: User,
    sweep_var: Option<&'static str>,
    sweep_value: Option<String>,
    snr_db: f64,
}

/// One evaluated CSV row; `None` fields print as empty.
#[derive(Debug, Clone, Default)]
struct Row {
    scenario_id: String,
    user: &'static str,
    sweep_var: String,
    sweep_value: String,
    snr_db: f64,
    op_exact: Option<f64>,
    op_asym: Option<f64>,
    op_mc: Option<f64>,
    op_mc_hw: Option<f64>,
    ac_c: Option<f64>,
    ac_p: Option<f64>,
    ac_sum: Option<f64>,
    ac_mc_sum: Option<f64>,
    ac_mc_hw: Option<f64>,
    valid: bool,
    err_est: Option<f64>,
    seed: u64,
}

impl Row {
    fn to_csv(&self) -> String {
        fn num(v: Option<f64>) -> String {
            v.map(|x| format!("{x:?}")).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{:?},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.scenario_id,
            self.user,
            self.sweep_var,
            self.sweep_value,
            self.snr_db,
            num(self.op_exact),
            num(self.op_asym),
            num(self.op_mc),
            num(self.op_mc_hw),
            num(self.ac_c),
            num(self.ac_p),
            num(self.ac_sum),
            num(self.ac_mc_sum),
            num(self.ac_mc_hw),
            self.valid,
            num(self.err_est),
            self.seed
        )
    }
}

fn build_rows(base: &ScenarioConfig, sweep: Option<&SweepSpec>) -> Result<Vec<RowSpec>, CliError> {
    let mut rows = Vec::new();
    match sweep {
        None => {
            for user in User::BOTH {
                for &snr_db in &base.snr_grid_db {
                    rows.push(RowSpec {
                        cfg: base.clone(),
                        user,
                        sweep_var: None,
                        sweep_value: None,
                        snr_db,
                    });
                }
            }
        }
        Some(spec) => {
            for &value in &spec.values {
                let cfg =
                    apply_sweep_value(base, spec.variable, value).map_err(CliError::Config)?;
                for user in User::BOTH {
                    for &snr_db in &cfg.snr_grid_db {
                        rows.push(RowSpec {
                            cfg: cfg.clone(),
                            user,
                            sweep_var: Some(spec.variable.name()),
                            sweep_value: Some(value.to_string()),
                            snr_db,
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

fn evaluate_row(
    spec: &RowSpec,
    outputs: &[OutputKind],
    settings: &QmcSettings,
    samples: u64,
    seed: u64,
) -> Result<Row, AnalysisError> {
    let cfg = &spec.cfg;
    let th = gain_thresholds(cfg, spec.user, spec.snr_db)?;
    let mut row = Row {
        scenario_id: cfg.scenario_id(),
        user: spec.user.label(),
        sweep_var: spec.sweep_var.unwrap_or_default().to_string(),
        sweep_value: spec.sweep_value.clone().unwrap_or_default(),
        snr_db: spec.snr_db,
        valid: th.valid,
        seed,
        ..Row::default()
    };
    for output in outputs {
        match output {
            OutputKind::Op => {
                let r = outage_probability(cfg, spec.user, spec.snr_db, settings)?;
                row.op_exact = Some(r.op);
                row.err_est = Some(r.err_est);
            }
            OutputKind::OpAsym => {
                let r = outage_asymptotic(cfg, spec.user, spec.snr_db, settings)?;
                row.op_asym = Some(r.op);
                if row.err_est.is_none() {
                    row.err_est = Some(r.err_est);
                }
            }
            OutputKind::Ac => {
                let r = average_capacity(cfg, spec.user, spec.snr_db)?;
                row.ac_c = Some(r.common);
                row.ac_p = Some(r.private);
                row.ac_sum = Some(r.sum);
            }
            OutputKind::McOp | OutputKind::McAc => {} // joint campaign below
        }
    }
    let want_mc_op = outputs.contains(&OutputKind::McOp);
    let want_mc_ac = outputs.contains(&OutputKind::McAc);
    if want_mc_op || want_mc_ac {
        let mc = simkit::estimate_point(cfg, spec.user, spec.snr_db, samples, seed)?;
        if want_mc_op {
            row.op_mc = Some(mc.op.value);
            row.op_mc_hw = Some(mc.op.half_width_95);
            if !mc.op.reliable {
                eprintln!(
                    "note: MC outage {:?} at snr {} dB (user {}) is below the reliable \
                     resolution for {} samples",
                    mc.op.value,
                    spec.snr_db,
                    spec.user.label(),
                    samples
                );
            }
        }
        if want_mc_ac {
            row.ac_mc_sum = Some(mc.ac_sum.value);
            row.ac_mc_hw = Some(mc.ac_sum.half_width_95);
        }
    }
    Ok(row)
}

/// Artifact header: tool version, base scenario, command line, and the
/// full base config (strip the `# cfg: ` prefixes to re-run it).
fn csv_preamble(kind: CampaignKind, base: &ScenarioConfig, args: &RunArgs) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# starfas {VERSION}");
    let _ = writeln!(s, "# scenario {}", base.scenario_id());
    let _ = writeln!(
        s,
        "# command {} seed={} samples={}",
        kind.name(),
        args.seed,
        args.samples
    );
    for line in base.canonical_dump().lines() {
        let _ = writeln!(s, "# cfg: {line}");
    }
    s
}

fn write_artifact(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, content).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn campaign(args: &RunArgs, kind: CampaignKind) -> Result<(), CliError> {
    if args.samples < 1_000 {
        return Err(CliError::Config(format!(
            "--samples must be at least 1000, got {}",
            args.samples
        )));
    }
    let settings = settings_from(args)?;
    let (mut base, raw) = load_scenario(&args.config)?;
    apply_overrides(&mut base, args);

    let sweep = match kind {
        CampaignKind::Sweep => Some(
            SweepSpec::from_raw(&raw)
                .map_err(CliError::Config)?
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "{} has no sweep.variable/sweep.values section",
                        args.config.display()
                    ))
                })?,
        ),
        _ => None,
    };
    let outputs: Vec<OutputKind> = match kind {
        CampaignKind::Analyze => vec![OutputKind::Op, OutputKind::OpAsym, OutputKind::Ac],
        CampaignKind::Simulate => vec![OutputKind::McOp, OutputKind::McAc],
        CampaignKind::Sweep => sweep.as_ref().unwrap().outputs.clone(),
    };

    let specs = build_rows(&base, sweep.as_ref())?;
    let evaluate = || -> Result<Vec<Row>, AnalysisError> {
        specs
            .par_iter()
            .map(|spec| evaluate_row(spec, &outputs, &settings, args.samples, args.seed))
            .collect()
    };
    // A scoped pool keeps --threads deterministic and per-invocation.
    let rows = if args.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build()
            .map_err(|e| CliError::Config(format!("--threads {}: {e}", args.threads)))?;
        pool.install(evaluate)
    } else {
        evaluate()
    }?;

    let mut content = csv_preamble(kind, &base, args);
    content.push_str(CSV_HEADER);
    content.push('\n');
    for row in &rows {
        content.push_str(&row.to_csv());
        content.push('\n');
    }
    let path = args
        .out
        .join(format!("{}_{}.csv", kind.name(), base.scenario_id()));
    write_artifact(&path, &content)?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn validate(args: &ValidateArgs) -> Result<(), CliError> {
    let text = read_file(&args.config)?;
    let (cfg, diags) = crate::model::parse_scenario(&text);
    if diags.is_empty() {
        println!("config OK (scenario {})", cfg.scenario_id());
        return Ok(());
    }
    let mut has_error = false;
    for d in &diags {
        println!("{d}");
        has_error |= d.severity == Severity::Error;
    }
    if has_error {
        Err(CliError::Config(format!(
            "{} has errors",
            args.config.display()
        )))
    } else {
        println!("config OK with warnings (scenario {})", cfg.scenario_id());
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// figures
// ---------------------------------------------------------------------------

/// Numeric row view used by the plotter.
#[derive(Debug, Clone)]
struct CsvRow {
    user: String,
    sweep_var: String,
    sweep_value: String,
    snr_db: f64,
    metrics: Vec<Option<f64>>, // op_exact..ac_mc_hw, by OP_COLUMNS/AC_COLUMNS index
}

const METRIC_NAMES: [&str; 9] = [
    "op_exact",
    "op_asym",
    "op_mc",
    "op_mc_hw",
    "ac_c",
    "ac_p",
    "ac_sum",
    "ac_mc_sum",
    "ac_mc_hw",
];

fn parse_results_csv(text: &str) -> Result<Vec<CsvRow>, CliError> {
    let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| CliError::Csv("empty file".into()))?;
    if header != CSV_HEADER {
        return Err(CliError::Csv(format!(
            "unrecognized header {header:?}; this tool only plots its own results CSVs"
        )));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 17 {
            return Err(CliError::Csv(format!(
                "row {}: expected 17 fields, got {}",
                idx + 1,
                fields.len()
            )));
        }
        let parse_opt = |s: &str| -> Result<Option<f64>, CliError> {
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .map(Some)
                .map_err(|_| CliError::Csv(format!("row {}: bad number {s:?}", idx + 1)))
        };
        let snr_db = parse_opt(fields[4])?
            .ok_or_else(|| CliError::Csv(format!("row {}: missing snr_db", idx + 1)))?;
        let metrics = fields[5..14]
            .iter()
            .map(|s| parse_opt(s))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(CsvRow {
            user: fields[1].to_string(),
            sweep_var: fields[2].to_string(),
            sweep_value: fields[3].to_string(),
            snr_db,
            metrics,
        });
    }
    Ok(rows)
}

/// X coordinate and series-grouping policy:
/// curves run over SNR unless a non-SNR sweep pinned the grid to a single
/// SNR point, in which case the swept value is the axis.
fn sweep_value_as_number(s: &str) -> Option<f64> {
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    // Grid tokens plot as their port count.
    if let Ok(SweepValue::Grid { n1, n2, .. }) = parse_grid_token(s) {
        return Some((n1 * n2) as f64);
    }
    None
}

#[derive(Debug, Clone)]
struct Series {
    label: String,
    dashed: bool,
    markers: bool,
    points: Vec<(f64, f64)>,
}

fn collect_series(rows: &[CsvRow], metric_ids: &[usize]) -> (String, Vec<Series>) {
    let sweep_var = rows
        .iter()
        .map(|r| r.sweep_var.as_str())
        .find(|v| !v.is_empty())
        .unwrap_or("")
        .to_string();
    let distinct_snrs = {
        let mut snrs: Vec<f64> = rows.iter().map(|r| r.snr_db).collect();
        snrs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        snrs.dedup();
        snrs.len()
    };
    let x_is_sweep = !sweep_var.is_empty() && sweep_var != "snr_db" && distinct_snrs == 1;
    let x_label = if x_is_sweep {
        sweep_var.clone()
    } else {
        "average SNR (dB)".to_string()
    };

    let mut series: Vec<Series> = Vec::new();
    for row in rows {
        let x = if x_is_sweep {
            match sweep_value_as_number(&row.sweep_value) {
                Some(v) => v,
                None => continue,
            }
        } else {
            row.snr_db
        };
        for &m in metric_ids {
            let Some(y) = row.metrics[m] else { continue };
            let mut label = format!("user {}, {}", row.user, METRIC_NAMES[m]);
            if !x_is_sweep && !sweep_var.is_empty() && sweep_var != "snr_db" {
                label.push_str(&format!(", {}={}", sweep_var, row.sweep_value));
            }
            let dashed = METRIC_NAMES[m] == "op_asym";
            let markers = METRIC_NAMES[m].contains("mc");
            match series.iter_mut().find(|s| s.label == label) {
                Some(s) => s.points.push((x, y)),
                None => series.push(Series {
                    label,
                    dashed,
                    markers,
                    points: vec![(x, y)],
                }),
            }
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    }
    (x_label, series)
}

fn figures(args: &FiguresArgs) -> Result<(), CliError> {
    let text = read_file(&args.csv)?;
    let rows = parse_results_csv(&text)?;
    if rows.is_empty() {
        return Err(CliError::Csv("no data rows".into()));
    }
    let stem = args
        .csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".into());

    let mut written = Vec::new();
    // OP panel: metrics 0..3 (log axis); AC panel: metrics 4..8 sans hw.
    let (x_label, op_series) = collect_series(&rows, &[0, 1, 2]);
    if op_series.iter().any(|s| !s.points.is_empty()) {
        let svg = render_svg(
            &format!("{stem}: outage"),
            &x_label,
            "outage probability",
            true,
            &op_series,
        );
        let path = args.out.join(format!("{stem}_op.svg"));
        write_artifact(&path, &svg)?;
        written.push(path);
    }
    let (x_label, ac_series) = collect_series(&rows, &[4, 5, 6, 7]);
    if ac_series.iter().any(|s| !s.points.is_empty()) {
        let svg = render_svg(
            &format!("{stem}: capacity"),
            &x_label,
            "average capacity (bps/Hz)",
            false,
            &ac_series,
        );
        let path = args.out.join(format!("{stem}_ac.svg"));
        write_artifact(&path, &svg)?;
        written.push(path);
    }
    if written.is_empty() {
        return Err(CliError::Csv(
            "no plottable columns in the CSV (all metric fields empty)".into(),
        ));
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// SVG rendering
// ---------------------------------------------------------------------------

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#e377c2",
];

const PLOT_W: f64 = 640.0;
const PLOT_H: f64 = 480.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 18.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 52.0;

fn nice_ticks(min: f64, max: f64, target: usize) -> Vec<f64> {
    let range = (max - min).max(f64::MIN_POSITIVE);
    let raw_step = range / target as f64;
    let mag = 10f64.powf(raw_step.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| range / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let first = (min / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut t = first;
    while t <= max + 1e-9 * range {
        ticks.push(t);
        t += step;
    }
    ticks
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s.is_empty() || s == "-" {
            "0".into()
        } else {
            s.to_string()
        }
    }
}

/// Renders one panel.  `log_y` plots log10(y) with decade ticks and drops
/// nonpositive values (an outage of exactly 0 has no place on a log axis).
fn render_svg(title: &str, x_label: &str, y_label: &str, log_y: bool, series: &[Series]) -> String {
    let visible: Vec<(usize, &Series)> = series
        .iter()
        .filter(|s| !s.points.is_empty())
        .enumerate()
        .collect();
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (_, s) in &visible {
        for &(x, y) in &s.points {
            if log_y && y <= 0.0 {
                continue;
            }
            xs.push(x);
            ys.push(y);
        }
    }
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_W}" height="{PLOT_H}" viewBox="0 0 {PLOT_W} {PLOT_H}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{PLOT_W}" height="{PLOT_H}" fill="white"/>"#
    );
    if xs.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif">no plottable points</text>"#,
            PLOT_W / 2.0,
            PLOT_H / 2.0
        );
        svg.push_str("</svg>\n");
        return svg;
    }
    let (mut x_min, mut x_max) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if x_max - x_min < 1e-12 {
        x_min -= 1.0;
        x_max += 1.0;
    }
    let (mut y_min, mut y_max) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let (y_lo, y_hi, y_ticks): (f64, f64, Vec<f64>) = if log_y {
        let lo = y_min.log10().floor();
        let hi = y_max.log10().ceil().max(lo + 1.0);
        let ticks = (lo as i64..=hi as i64).map(|d| d as f64).collect();
        (lo, hi, ticks)
    } else {
        if y_max - y_min < 1e-12 {
            y_min -= 0.5;
            y_max += 0.5;
        }
        let pad = 0.05 * (y_max - y_min);
        let (lo, hi) = (y_min - pad, y_max + pad);
        (lo, hi, nice_ticks(lo, hi, 6))
    };

    let x_span = PLOT_W - MARGIN_L - MARGIN_R;
    let y_span = PLOT_H - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * x_span;
    let py = |y: f64| {
        let t = if log_y { y.log10() } else { y };
        PLOT_H - MARGIN_B - (t - y_lo) / (y_hi - y_lo) * y_span
    };

    // Frame, grid, ticks.
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{x_span}" height="{y_span}" fill="none" stroke="black"/>"#
    );
    for t in nice_ticks(x_min, x_max, 7) {
        let x = px(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.1}" y1="{MARGIN_T}" x2="{x:.1}" y2="{:.1}" stroke="#dddddd"/>"##,
            PLOT_H - MARGIN_B
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="11" font-family="sans-serif">{}</text>"#,
            PLOT_H - MARGIN_B + 16.0,
            fmt_tick(t)
        );
    }
    for t in &y_ticks {
        let y = PLOT_H - MARGIN_B - (t - y_lo) / (y_hi - y_lo) * y_span;
        let label = if log_y {
            format!("1e{}", *t as i64)
        } else {
            fmt_tick(*t)
        };
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_L}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/>"##,
            PLOT_W - MARGIN_R
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{y:.1}" text-anchor="end" dominant-baseline="middle" font-size="11" font-family="sans-serif">{label}</text>"#,
            MARGIN_L - 6.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="13" font-family="sans-serif">{title}</text>"#,
        PLOT_W / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12" font-family="sans-serif">{x_label}</text>"#,
        PLOT_W / 2.0,
        PLOT_H - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" font-size="12" font-family="sans-serif" transform="rotate(-90 16 {:.1})">{y_label}</text>"#,
        PLOT_H / 2.0,
        PLOT_H / 2.0
    );

    // Curves and legend.
    for (i, s) in &visible {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter(|&&(_, y)| !log_y || y > 0.0)
            .map(|&(x, y)| (px(x), py(y)))
            .collect();
        if pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let dash = if s.dashed {
                r#" stroke-dasharray="6,3""#
            } else {
                ""
            };
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>"#,
                path.join(" ")
            );
        }
        if s.markers || pts.len() == 1 {
            for (x, y) in &pts {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#
                );
            }
        }
        let ly = MARGIN_T + 16.0 + 15.0 * *i as f64;
        let lx = MARGIN_L + 10.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/>"#,
            ly - 4.0,
            lx + 22.0,
            ly - 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{ly:.1}" font-size="11" font-family="sans-serif">{}</text>"#,
            lx + 28.0,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
