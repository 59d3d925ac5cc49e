//! Command-line front end.
//!
//! ```text
//! medtest analyze --data d.csv --exposure x --mediators m1,m2 --outcome y
//! medtest simulate scenarios/table1.json --reps 2000 --threads 8 --out t1.csv
//! medtest power --mu-alpha 2 --mu-beta 3 --prob 0.6
//! medtest qq pvalues.csv --out qq.csv
//! ```
//!
//! Machine output (CSV or JSON, per `--format`) goes to `--out`, or to
//! stdout when no path is given; the human table then goes to stderr. A
//! CSV written to `--out` gets a JSON sidecar with full metadata next to
//! it.

mod data;
mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use data::{
    fmt_full, load_dataset, read_dataset, write_dataset_csv, AnalysisSpec, DatasetColumns,
    LoadedData, NaPolicy,
};
pub use report::{
    analyze, summaries_to_csv, summaries_to_table, AnalysisReport, MediatorRow, ANALYSIS_COLUMNS,
};

use crate::dist::RngStream;
use crate::error::{Error, Result};
use crate::models::OutcomeFamily;
use crate::simulate::{
    ks_uniform_distance, qq_data, run_study, RunOptions, ScenarioBundle, ScenarioConfig,
    SimulationSummary, StudyKind,
};
use crate::testing::{
    theoretical_power_ajs, theoretical_power_asobel, theoretical_power_js, McEstimate,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else if matches!(err.root(), Error::Domain(_)) {
        EXIT_USAGE
    } else {
        EXIT_DATA
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "medtest",
    version,
    about = "Adaptive tests for mediation effects"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Base seed; overrides scenario seeds.
    #[arg(long, global = true, env = "MEDTEST_SEED")]
    pub seed: Option<u64>,
    /// Replications (simulate) or Monte Carlo draws (power).
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write machine output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test every mediator in a CSV dataset.
    Analyze(AnalyzeArgs),
    /// Run a scenario bundle or single scenario from JSON.
    Simulate(SimulateArgs),
    /// Theoretical JS, AJS and ASobel power.
    Power(PowerArgs),
    /// Uniform Q-Q coordinates for a column of p-values.
    Qq(QqArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub exposure: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub mediators: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    #[arg(long, default_value = "linear")]
    pub family: OutcomeFamily,
    /// Outcome column (linear, logistic).
    #[arg(long)]
    pub outcome: Option<String>,
    /// Follow-up time column (cox).
    #[arg(long)]
    pub time: Option<String>,
    /// Event indicator column (cox).
    #[arg(long)]
    pub event: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = NaPolicy::DropRows)]
    pub na_policy: NaPolicy,
}

impl AnalyzeArgs {
    pub fn spec(&self) -> AnalysisSpec {
        AnalysisSpec {
            data_path: self.data.clone(),
            exposure_column: self.exposure.clone(),
            mediator_columns: self.mediators.clone(),
            covariate_columns: self.covariates.clone(),
            outcome_family: self.family,
            outcome_column: self.outcome.clone(),
            time_column: self.time.clone(),
            event_column: self.event.clone(),
            delta: self.delta,
            na_policy: self.na_policy,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Bundle (`name`, `kind`, `base`, `rows`) or single scenario JSON.
    pub config: PathBuf,
    /// Study kind for a single scenario; defaults by mediator count.
    #[arg(long)]
    pub kind: Option<StudyKindArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StudyKindArg {
    SizePower,
    Fwer,
    Coverage,
}

impl From<StudyKindArg> for StudyKind {
    fn from(k: StudyKindArg) -> Self {
        match k {
            StudyKindArg::SizePower => StudyKind::SizePower,
            StudyKindArg::Fwer => StudyKind::Fwer,
            StudyKindArg::Coverage => StudyKind::Coverage,
        }
    }
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    /// Mean of T_alpha.
    #[arg(long, allow_hyphen_values = true)]
    pub mu_alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub mu_beta: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// P(T_max >= lambda_n).
    #[arg(long)]
    pub prob: f64,
}

#[derive(Debug, Args)]
pub struct QqArgs {
    /// CSV with a header row.
    pub pvalues: PathBuf,
    /// Column to read; optional when the file has one column.
    #[arg(long)]
    pub column: Option<String>,
}

pub const DEFAULT_POWER_DRAWS: usize = 100_000;

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run_from_env() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let output = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a, &cli.common)?,
        Command::Simulate(s) => cmd_simulate(s, &cli.common)?,
        Command::Power(p) => cmd_power(p, &cli.common)?,
        Command::Qq(q) => cmd_qq(q, &cli.common)?,
    };
    output.emit(&cli.common, stdout, stderr)
}

/// What a command produced: a human table plus machine forms.
struct Output {
    table: String,
    csv: String,
    json: serde_json::Value,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `results.csv` → `results.json`; a `.json` output gets `.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    if out.extension().is_some_and(|e| e == "json") {
        out.with_extension("meta.json")
    } else {
        out.with_extension("json")
    }
}

impl Output {
    fn emit(
        &self,
        common: &CommonArgs,
        stdout: &mut dyn Write,
        stderr: &mut dyn Write,
    ) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.json)? + "\n";
        let io = |source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        };
        match &common.out {
            Some(path) => {
                match common.format {
                    Format::Csv => {
                        write_file(path, self.csv.as_bytes())?;
                        write_file(&sidecar_path(path), json.as_bytes())?;
                    }
                    Format::Json => write_file(path, json.as_bytes())?,
                }
                stdout.write_all(self.table.as_bytes()).map_err(io)?;
            }
            None => {
                let machine = match common.format {
                    Format::Csv => &self.csv,
                    Format::Json => &json,
                };
                stdout.write_all(machine.as_bytes()).map_err(io)?;
                stderr.write_all(self.table.as_bytes()).map_err(io)?;
            }
        }
        Ok(())
    }
}

fn cmd_analyze(args: &AnalyzeArgs, _common: &CommonArgs) -> Result<Output> {
    let spec = args.spec();
    let report = analyze(&spec)?;
    Ok(Output {
        table: report.to_table(),
        csv: report.to_csv()?,
        json: serde_json::json!({ "spec": spec, "report": report }),
    })
}

/// Reads a bundle, or a single scenario, from JSON text.
pub fn load_scenarios(
    text: &str,
    fallback_name: &str,
    kind: Option<StudyKind>,
) -> Result<(String, StudyKind, Vec<ScenarioConfig>)> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("rows").is_some() {
        let bundle = ScenarioBundle::from_json(text)?;
        if let Some(k) = kind {
            if k != bundle.kind {
                return Err(Error::config(
                    "kind",
                    format!("bundle is {}, --kind asked for {k}", bundle.kind),
                ));
            }
        }
        let scenarios = bundle.scenarios()?;
        return Ok((bundle.name, bundle.kind, scenarios));
    }
    let mut config: ScenarioConfig =
        serde_json::from_value(value).map_err(|e| Error::config("scenario", e.to_string()))?;
    config.validate()?;
    let kind = kind.unwrap_or(if config.d() == 1 {
        StudyKind::SizePower
    } else {
        StudyKind::Fwer
    });
    if config.name.is_none() {
        config.name = Some(fallback_name.to_string());
    }
    Ok((fallback_name.to_string(), kind, vec![config]))
}

#[derive(Serialize)]
struct SimulationRecord<'a> {
    bundle: &'a str,
    kind: StudyKind,
    seed_override: Option<u64>,
    reps_override: Option<usize>,
    threads: Option<usize>,
    elapsed_seconds: f64,
    summaries: &'a [SimulationSummary],
}

/// Runs every scenario with optional seed/reps overrides.
pub fn run_scenarios(
    scenarios: &[ScenarioConfig],
    kind: StudyKind,
    seed: Option<u64>,
    reps: Option<usize>,
    options: &RunOptions,
) -> Result<Vec<SimulationSummary>> {
    scenarios
        .iter()
        .map(|c| {
            let mut c = c.clone();
            if let Some(s) = seed {
                c.base_seed = s;
            }
            if let Some(r) = reps {
                c.reps = r;
            }
            c.validate()?;
            let name = c.name.clone().unwrap_or_default();
            run_study(&c, kind, options).map_err(|e| match e {
                Error::InvalidConfig { field, message } => Error::InvalidConfig {
                    field,
                    message: format!("{message} (scenario {name})"),
                },
                other => other,
            })
        })
        .collect()
}

fn cmd_simulate(args: &SimulateArgs, common: &CommonArgs) -> Result<Output> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| Error::Io {
        path: args.config.clone(),
        source,
    })?;
    let stem = args
        .config
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    let (name, kind, scenarios) = load_scenarios(&text, &stem, args.kind.map(Into::into))?;
    let options = RunOptions {
        threads: common.threads,
    };
    let started = Instant::now();
    let summaries = run_scenarios(&scenarios, kind, common.seed, common.reps, &options)?;
    let record = SimulationRecord {
        bundle: &name,
        kind,
        seed_override: common.seed,
        reps_override: common.reps,
        threads: common.threads,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        summaries: &summaries,
    };
    Ok(Output {
        table: summaries_to_table(&summaries),
        csv: summaries_to_csv(&summaries)?,
        json: serde_json::to_value(&record)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerReport {
    pub mu_alpha: f64,
    pub mu_beta: f64,
    pub delta: f64,
    pub prob_tmax_ge: f64,
    pub js: f64,
    pub ajs: f64,
    pub asobel: McEstimate,
    pub seed: u64,
}

/// Closed-form JS and AJS power and Monte Carlo ASobel power.
pub fn power_report(
    mu_alpha: f64,
    mu_beta: f64,
    delta: f64,
    prob: f64,
    draws: usize,
    seed: u64,
) -> Result<PowerReport> {
    let js = theoretical_power_js(mu_alpha, mu_beta, delta)?;
    let ajs = theoretical_power_ajs(mu_alpha, mu_beta, delta, prob)?;
    let mut rng = RngStream::new(seed, 0);
    let asobel = theoretical_power_asobel(mu_alpha, mu_beta, delta, prob, draws, &mut rng)?;
    Ok(PowerReport {
        mu_alpha,
        mu_beta,
        delta,
        prob_tmax_ge: prob,
        js,
        ajs,
        asobel,
        seed,
    })
}

fn cmd_power(args: &PowerArgs, common: &CommonArgs) -> Result<Output> {
    let report = power_report(
        args.mu_alpha,
        args.mu_beta,
        args.delta,
        args.prob,
        common.reps.unwrap_or(DEFAULT_POWER_DRAWS),
        common.seed.unwrap_or(0),
    )?;
    let table = format!(
        "mu_alpha = {}, mu_beta = {}, level {}, P(T_max >= lambda_n) = {}\n\
         {:<8} {:>8}\n{:<8} {:>8.4}\n{:<8} {:>8.4}\n{:<8} {:>8.4}  (MC se {:.4}, {} draws)\n",
        report.mu_alpha,
        report.mu_beta,
        report.delta,
        report.prob_tmax_ge,
        "method",
        "power",
        "JS",
        report.js,
        "AJS",
        report.ajs,
        "ASobel",
        report.asobel.estimate,
        report.asobel.standard_error,
        report.asobel.draws,
    );
    let csv = format!(
        "method,power,standard_error\nJS,{},0\nAJS,{},0\nASobel,{},{}\n",
        fmt_full(report.js),
        fmt_full(report.ajs),
        fmt_full(report.asobel.estimate),
        fmt_full(report.asobel.standard_error)
    );
    Ok(Output {
        table,
        csv,
        json: serde_json::to_value(&report)?,
    })
}

/// Reads one numeric column of p-values; rows are numbered from 1 after
/// the header.
pub fn read_pvalues(path: &Path, column: Option<&str>) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let headers = rdr.headers()?.clone();
    let (pos, name) = match column {
        Some(c) => (
            headers
                .iter()
                .position(|h| h.trim() == c)
                .ok_or_else(|| Error::Data {
                    row: 0,
                    column: c.into(),
                    message: "column not found in header".into(),
                })?,
            c.to_string(),
        ),
        None if headers.len() == 1 => (0, headers[0].trim().to_string()),
        None => {
            return Err(Error::config(
                "column",
                format!("file has {} columns; pick one with --column", headers.len()),
            ))
        }
    };
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let cell = rec.get(pos).unwrap_or("").trim();
        let v: f64 = cell.parse().map_err(|_| Error::Data {
            row: i + 1,
            column: name.clone(),
            message: format!("cannot parse `{cell}` as a number"),
        })?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Data {
                row: i + 1,
                column: name.clone(),
                message: format!("p-value {v} outside [0, 1]"),
            });
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::Data {
            row: 0,
            column: name,
            message: "no p-values".into(),
        });
    }
    Ok(values)
}

fn cmd_qq(args: &QqArgs, _common: &CommonArgs) -> Result<Output> {
    let p = read_pvalues(&args.pvalues, args.column.as_deref())?;
    let pairs = qq_data(&p)?;
    let ks = ks_uniform_distance(&p)?;
    let mut csv = String::from("uniform_quantile,sorted_p\n");
    for (u, q) in &pairs {
        csv.push_str(&format!("{},{}\n", fmt_full(*u), fmt_full(*q)));
    }
    let table = format!("{} p-values, KS distance from uniform {:.4}\n", p.len(), ks);
    let json = serde_json::json!({
        "count": p.len(),
        "ks_distance": ks,
        "uniform_quantile": pairs.iter().map(|x| x.0).collect::<Vec<_>>(),
        "sorted_p": pairs.iter().map(|x| x.1).collect::<Vec<_>>(),
    });
    Ok(Output { table, csv, json })
}
