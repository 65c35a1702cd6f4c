//! Command-line front end for the fockbell library.
//!
//! Eight subcommands: `prob` (joint count distributions), `bell` (BCHSH
//! report), `ghz` (three-source parity product and contradiction), `hardy`
//! (forced-record chain), `altstate` (coherent / phase / classical source
//! models), `detection` (pixel accumulation and jitter sweeps), `sweep`
//! (parallel grids), `validate` (cross-check suite).
//!
//! Output is CSV with a header row, or JSON with `--format json`; floats are
//! printed with 17 significant digits and outcomes are ordered
//! lexicographically, so identical invocations produce byte-identical files.
//! Exit codes: 0 success, 2 invalid arguments, 1 computation-domain errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use fockbell::altstate;
use fockbell::bell;
use fockbell::detection::{self, JitterPattern, PixelModel};
use fockbell::engine;
use fockbell::ghz;
use fockbell::hardy;
use fockbell::model::{
    build_network, AngleSettings, Geometry, LossSpec, OutcomeCounts, Placement, SourceSpec,
    Support,
};
use fockbell::oracle;
use fockbell::validation::{self, CheckItem};

#[derive(Parser)]
#[command(
    name = "fockbell",
    version,
    about = "Exact Fock-state interferometry: distributions, inequality reports, sweeps",
    after_help = "All numeric parameters may come from a `--config` file of `key = value` \
                  lines (UTF-8, `#` comments); keys match the long flag names without the \
                  leading dashes. Explicit flags override the file. FOCKBELL_THREADS \
                  overrides the sweep worker count."
)]
struct Cli {
    /// Flat key = value defaults file; flags override its entries.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Joint detection probabilities for one source and geometry.
    Prob(ProbArgs),
    /// Parity-correlator BCHSH maximization report.
    Bell(BellArgs),
    /// Three-source parity product; `--contradiction` emits the
    /// all-or-nothing JSON verdict.
    Ghz(GhzArgs),
    /// Forced-record contradiction chain for the rational four-splitter
    /// tables.
    Hardy(HardyArgs),
    /// Alternative source models: coherent, phase-averaged, fixed-phase,
    /// and the classical BCHSH search.
    Altstate(AltstateArgs),
    /// Pixel-level accumulated probabilities and fringe-jitter sweeps.
    Detection(DetectionArgs),
    /// Parallel grid sweep of a target quantity.
    Sweep(SweepArgs),
    /// Cross-check suite: closed-form moments, normalization chains,
    /// engine/oracle agreement. Exit 1 if any check fails.
    Validate(ValidateArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true, after_help = "Columns: m1..mJ (channel counts), probability. Outcomes with \
                        exactly zero probability are omitted unless --include-zeros.")]
struct ProbArgs {
    /// Network tag: fig1, fig2-source-loss, fig2-2-detector-loss, fig3-ghz,
    /// fig4-hardy-DD, fig4-hardy-DD', fig4-hardy-D'D, fig4-hardy-D'D'.
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long)]
    n_alpha: Option<u32>,
    #[arg(long)]
    n_beta: Option<u32>,
    /// Third source occupation (fig3-ghz only).
    #[arg(long)]
    n_gamma: Option<u32>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// Third interferometer angle (fig3-ghz only).
    #[arg(long)]
    chi: Option<f64>,
    /// Transmission for the loss geometries.
    #[arg(long)]
    transmission: Option<f64>,
    /// Keep exactly-zero records in the table.
    #[arg(long)]
    include_zeros: bool,
}

#[derive(Args)]
#[command(allow_negative_numbers = true, after_help = "Columns: n, m_detected, conditioned, omega_star, q_max, \
                        omega_asymptotic, q_asymptotic.")]
struct BellArgs {
    /// Total particle number N.
    #[arg(long)]
    n: Option<u32>,
    /// Detected count M (default N).
    #[arg(long)]
    m: Option<u32>,
    /// Use the unconditioned correlator (default: conditioned on M).
    #[arg(long)]
    unconditioned: bool,
}

#[derive(Args)]
#[command(allow_negative_numbers = true, after_help = "Columns: n, zeta, theta, chi, abc. With --contradiction the \
                        output is always a JSON report.")]
struct GhzArgs {
    /// Total particle number N (divisible by 3).
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    chi: Option<f64>,
    /// Emit the all-or-nothing contradiction verdict as JSON.
    #[arg(long)]
    contradiction: bool,
}

#[derive(Args)]
#[command(allow_negative_numbers = true, after_help = "Columns: n, pivot, pivot_probability, ddp_forced, \
                        ddp_others_zero, dpd_forced, dpd_others_zero, lr_requires, \
                        lr_lower_bound, qm_probability. Records print as m1-m2-m3-m4.")]
struct HardyArgs {
    /// Total particle number N (even, with N/2 odd: 2, 6, 10, ...).
    #[arg(long)]
    n: Option<u32>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true, after_help = "Models: coherent (--phi-alpha --phi-beta --total), averaged \
                        (--total), phase (--n --phi0), search (--total). Distribution \
                        models output m1..m4, probability; search outputs m, q_max and \
                        the four settings.")]
struct AltstateArgs {
    /// Source model: coherent, averaged, phase, search.
    #[arg(long)]
    model: Option<String>,
    /// Detected total M (coherent, averaged, search).
    #[arg(long)]
    total: Option<u32>,
    /// Particle number N (phase model).
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    phi_alpha: Option<f64>,
    #[arg(long)]
    phi_beta: Option<f64>,
    /// Relative phase of the fixed-phase state.
    #[arg(long)]
    phi0: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true, after_help = "Default mode: columns m1..m4, accumulated (probability of the \
                        canonical pixel assignment at time t). With --sigmas: columns \
                        sigma, correlator (parity correlator under pixel-phase jitter).")]
struct DetectionArgs {
    #[arg(long)]
    n_alpha: Option<u32>,
    #[arg(long)]
    n_beta: Option<u32>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// Pixels per detector (default 100 N^2, the budget the configuration
    /// count asks for; smaller values print a warning to stderr).
    #[arg(long)]
    pixels: Option<usize>,
    /// Mean single-pixel coupling.
    #[arg(long)]
    pbar: Option<f64>,
    /// Accumulation time in [0, 1].
    #[arg(long)]
    t: Option<f64>,
    /// Jitter spreads; presence switches to the sweep mode.
    #[arg(long, value_delimiter = ',')]
    sigmas: Vec<f64>,
    /// Jitter pattern: alternating or seeded.
    #[arg(long)]
    pattern: Option<String>,
    /// Seed for the seeded pattern.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true, after_help = "Targets and their columns:\n  \
            probability: zeta, theta[, chi], probability (needs --geometry, source, --outcome)\n  \
            ab:          n, zeta, theta, ab (conditioned M=N correlator; N even)\n  \
            q:           n, omega, q (needs --omega-grid)\n  \
            abc:         n, zeta, theta, chi, abc (N divisible by 3)\n\
          Grids are start:stop:count (inclusive, count >= 1); omitted grids collapse to \
          the single fixed value of the matching flag. Rows appear in grid order \
          (n, then zeta, theta, chi, omega) regardless of worker count.")]
struct SweepArgs {
    /// Quantity to sweep: probability, ab, q, abc.
    #[arg(long)]
    target: Option<String>,
    /// Particle numbers to sweep.
    #[arg(long, value_delimiter = ',')]
    n_list: Vec<u32>,
    #[arg(long)]
    n: Option<u32>,
    /// Detected count for target q (default n).
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    unconditioned: bool,
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long)]
    n_alpha: Option<u32>,
    #[arg(long)]
    n_beta: Option<u32>,
    #[arg(long)]
    n_gamma: Option<u32>,
    /// Record for target probability, as m1,m2,...
    #[arg(long, value_delimiter = ',')]
    outcome: Vec<u32>,
    #[arg(long)]
    transmission: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    chi: Option<f64>,
    #[arg(long, value_name = "START:STOP:COUNT")]
    zeta_grid: Option<String>,
    #[arg(long, value_name = "START:STOP:COUNT")]
    theta_grid: Option<String>,
    #[arg(long, value_name = "START:STOP:COUNT")]
    chi_grid: Option<String>,
    #[arg(long, value_name = "START:STOP:COUNT")]
    omega_grid: Option<String>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true, after_help = "Columns: check, passed, detail.")]
struct ValidateArgs {
    /// Largest total particle number the chains run to.
    #[arg(long)]
    n_max: Option<u32>,
}

/// Usage errors exit 2 (like a flag clap rejects); domain errors exit 1.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Domain(String),
}

impl From<fockbell::Error> for CliError {
    fn from(e: fockbell::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let (text, code) = match cli.cmd {
        Cmd::Prob(a) => (prob(a, &cfg, cli.format)?, ExitCode::SUCCESS),
        Cmd::Bell(a) => (bell_report(a, &cfg, cli.format)?, ExitCode::SUCCESS),
        Cmd::Ghz(a) => (ghz_report(a, &cfg, cli.format)?, ExitCode::SUCCESS),
        Cmd::Hardy(a) => (hardy_table(a, &cfg, cli.format)?, ExitCode::SUCCESS),
        Cmd::Altstate(a) => (altstate_table(a, &cfg, cli.format)?, ExitCode::SUCCESS),
        Cmd::Detection(a) => (detection_table(a, &cfg, cli.format)?, ExitCode::SUCCESS),
        Cmd::Sweep(a) => (sweep_table(a, &cfg, cli.format)?, ExitCode::SUCCESS),
        Cmd::Validate(a) => validate_table(a, &cfg, cli.format)?,
    };
    match &cli.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Domain(format!("writing {}: {e}", path.display())))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|e| CliError::Domain(format!("writing stdout: {e}")))?;
        }
    }
    Ok(code)
}

// ---------------------------------------------------------------- config

/// Flat `key = value` defaults, `#` starts a comment.
#[derive(Default)]
struct FileConfig(BTreeMap<String, String>);

impl FileConfig {
    fn load(path: &PathBuf) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config {}:{}: expected `key = value`, got `{line}`",
                    path.display(),
                    lineno + 1
                )));
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self(map))
    }

    /// Parsed value for `key`, if present.
    fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                CliError::Usage(format!("config key `{key}`: cannot parse `{raw}`"))
            }),
        }
    }

    /// Flag wins over config; fall back to `default`.
    fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    /// Flag wins over config; error if neither supplies the value.
    fn need<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<T> {
        match flag {
            Some(v) => Ok(v),
            None => self.get(key)?.ok_or_else(|| {
                CliError::Usage(format!("missing --{key} (no flag and no config entry)"))
            }),
        }
    }
}

// ---------------------------------------------------------------- output

/// One table cell; floats render with 17 significant digits in CSV.
enum Cell {
    U(u64),
    F(f64),
    S(String),
    B(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::U(v) => v.to_string(),
            Cell::F(v) => format!("{v:.16e}"),
            Cell::S(v) if v.contains([',', '"', '\n']) => {
                format!("\"{}\"", v.replace('"', "\"\""))
            }
            Cell::S(v) => v.clone(),
            Cell::B(v) => v.to_string(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::U(v) => json!(v),
            Cell::F(v) => json!(v),
            Cell::S(v) => json!(v),
            Cell::B(v) => json!(v),
        }
    }
}

struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new<S: Into<String>>(columns: Vec<S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "ragged table row");
        self.rows.push(row);
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.columns.join(",");
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    let _ = writeln!(out, "{}", cells.join(","));
                }
                out
            }
            Format::Json => {
                let rows: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: serde_json::Map<String, serde_json::Value> = self
                            .columns
                            .iter()
                            .zip(row)
                            .map(|(c, cell)| (c.clone(), cell.json()))
                            .collect();
                        serde_json::Value::Object(obj)
                    })
                    .collect();
                let mut out = serde_json::to_string_pretty(&rows).expect("table to json");
                out.push('\n');
                out
            }
        }
    }
}

fn outcome_cells(outcome: &OutcomeCounts) -> Vec<Cell> {
    outcome
        .counts()
        .iter()
        .map(|&m| Cell::U(u64::from(m)))
        .collect()
}

fn record_label(outcome: &OutcomeCounts) -> String {
    let parts: Vec<String> = outcome.counts().iter().map(u32::to_string).collect();
    parts.join("-")
}

fn count_columns(n_channels: usize) -> Vec<String> {
    (1..=n_channels).map(|j| format!("m{j}")).collect()
}

// ---------------------------------------------------------------- prob

fn prob(args: ProbArgs, cfg: &FileConfig, format: Format) -> CliResult<String> {
    let tag: String = cfg.or(args.geometry, "geometry", "fig1".into())?;
    let geom = tag.parse::<Geometry>().map_err(CliError::from)?;
    let n_alpha: u32 = cfg.need(args.n_alpha, "n-alpha")?;
    let n_beta: u32 = cfg.need(args.n_beta, "n-beta")?;
    let zeta = cfg.or(args.zeta, "zeta", 0.0)?;
    let theta = cfg.or(args.theta, "theta", 0.0)?;

    let three_source = geom == Geometry::ThreeSourceSix;
    let angles = if three_source {
        let chi = cfg.or(args.chi, "chi", 0.0)?;
        AngleSettings::with_chi(zeta, theta, chi)
    } else {
        AngleSettings::new(zeta, theta)
    };
    let source = if three_source {
        let n_gamma: u32 = cfg.need(args.n_gamma, "n-gamma")?;
        SourceSpec::three(n_alpha, n_beta, n_gamma)
    } else {
        SourceSpec::two(n_alpha, n_beta)
    };

    let lossy_placement = match geom {
        Geometry::SourceLoss => Some(Placement::AtSources),
        Geometry::DetectorLoss => Some(Placement::AtDetectors),
        _ => None,
    };

    let mut entries: Vec<(OutcomeCounts, f64)> = Vec::new();
    let n_channels;
    if let Some(placement) = lossy_placement {
        let t: f64 = cfg.need(args.transmission, "transmission")?;
        let loss = LossSpec::new(t, placement)?;
        n_channels = 4;
        for m in 0..=source.total() {
            for outcome in Support::FixedTotal(m).outcomes(4) {
                let p = engine::probability_lossy_parts(&source, &outcome, &loss)?
                    .eval_real(&angles);
                entries.push((outcome, p));
            }
        }
        entries.sort_by(|a, b| a.0.counts().cmp(b.0.counts()));
    } else {
        let map = build_network(geom, angles, &LossSpec::none())?;
        n_channels = map.n_detectors();
        let dist = engine::distribution(&map, &source, &Support::FixedTotal(source.total()))?;
        entries = dist.entries;
    }

    let mut table = Table::new(count_columns(n_channels));
    table.columns.push("probability".into());
    for (outcome, p) in entries {
        if p == 0.0 && !args.include_zeros {
            continue;
        }
        let mut row = outcome_cells(&outcome);
        row.push(Cell::F(p));
        table.push(row);
    }
    Ok(table.render(format))
}

// ---------------------------------------------------------------- bell

fn bell_report(args: BellArgs, cfg: &FileConfig, format: Format) -> CliResult<String> {
    let n: u32 = cfg.need(args.n, "n")?;
    let m: u32 = cfg.or(args.m, "m", n)?;
    let conditioned = !args.unconditioned;
    let r = bell::maximize_q(n, m, conditioned)?;
    let omega_asym = bell::asymptotic_omega(n);
    let q_asym = bell::q_at(n, m, conditioned, omega_asym)?;
    let mut table = Table::new(vec![
        "n",
        "m_detected",
        "conditioned",
        "omega_star",
        "q_max",
        "omega_asymptotic",
        "q_asymptotic",
    ]);
    table.push(vec![
        Cell::U(u64::from(n)),
        Cell::U(u64::from(m)),
        Cell::B(conditioned),
        Cell::F(r.omega_star),
        Cell::F(r.q_max),
        Cell::F(omega_asym),
        Cell::F(q_asym),
    ]);
    Ok(table.render(format))
}

// ---------------------------------------------------------------- ghz

fn ghz_report(args: GhzArgs, cfg: &FileConfig, format: Format) -> CliResult<String> {
    let n: u32 = cfg.need(args.n, "n")?;
    if args.contradiction {
        let c = ghz::ghz_contradiction(n)?;
        let report = json!({
            "n": c.n,
            "pi_settings": c.pi_settings,
            "pi_correlators": c.pi_correlators,
            "zero_setting": c.zero_setting,
            "quantum": c.quantum,
            "local_realism": c.local_realism,
        });
        let mut out = serde_json::to_string_pretty(&report).expect("report to json");
        out.push('\n');
        return Ok(out);
    }
    let zeta = cfg.or(args.zeta, "zeta", 0.0)?;
    let theta = cfg.or(args.theta, "theta", 0.0)?;
    let chi = cfg.or(args.chi, "chi", 0.0)?;
    let abc = ghz::abc_correlator(n, zeta, theta, chi)?;
    let mut table = Table::new(vec!["n", "zeta", "theta", "chi", "abc"]);
    table.push(vec![
        Cell::U(u64::from(n)),
        Cell::F(zeta),
        Cell::F(theta),
        Cell::F(chi),
        Cell::F(abc),
    ]);
    Ok(table.render(format))
}

// ---------------------------------------------------------------- hardy

fn hardy_table(args: HardyArgs, cfg: &FileConfig, format: Format) -> CliResult<String> {
    let n: u32 = cfg.need(args.n, "n")?;
    let report = hardy::hardy_report(n)?;
    let others_zero = |side: &hardy::ForcedSide| {
        side.records
            .iter()
            .all(|(o, a)| o == &side.forced || *a == 0.0)
    };
    let mut table = Table::new(vec![
        "n",
        "pivot",
        "pivot_probability",
        "ddp_forced",
        "ddp_others_zero",
        "dpd_forced",
        "dpd_others_zero",
        "lr_requires",
        "lr_lower_bound",
        "qm_probability",
    ]);
    table.push(vec![
        Cell::U(u64::from(report.n)),
        Cell::S(record_label(&report.pivot)),
        Cell::F(report.pivot_probability),
        Cell::S(record_label(&report.ddp.forced)),
        Cell::B(others_zero(&report.ddp)),
        Cell::S(record_label(&report.dpd.forced)),
        Cell::B(others_zero(&report.dpd)),
        Cell::S(record_label(&report.lr_requires)),
        Cell::F(report.lr_lower_bound),
        Cell::F(report.qm_probability),
    ]);
    Ok(table.render(format))
}

// ---------------------------------------------------------------- altstate

fn altstate_table(args: AltstateArgs, cfg: &FileConfig, format: Format) -> CliResult<String> {
    let model: String = cfg.need(args.model, "model")?;
    let zeta = cfg.or(args.zeta, "zeta", 0.0)?;
    let theta = cfg.or(args.theta, "theta", 0.0)?;
    let angles = AngleSettings::new(zeta, theta);

    let distribution = |total: u32, p: &dyn Fn(&OutcomeCounts) -> fockbell::Result<f64>| {
        let mut table = Table::new(count_columns(4));
        table.columns.push("probability".into());
        for outcome in Support::FixedTotal(total).outcomes(4) {
            let mut row = outcome_cells(&outcome);
            row.push(Cell::F(p(&outcome)?));
            table.push(row);
        }
        Ok::<Table, CliError>(table)
    };

    let table = match model.as_str() {
        "coherent" => {
            let total: u32 = cfg.need(args.total, "total")?;
            let phi_alpha = cfg.need(args.phi_alpha, "phi-alpha")?;
            let phi_beta = cfg.need(args.phi_beta, "phi-beta")?;
            distribution(total, &|o| {
                altstate::coherent_probability(phi_alpha, phi_beta, o, &angles)
            })?
        }
        "averaged" => {
            let total: u32 = cfg.need(args.total, "total")?;
            distribution(total, &|o| altstate::coherent_averaged_probability(o, &angles))?
        }
        "phase" => {
            let n: u32 = cfg.need(args.n, "n")?;
            let phi0 = cfg.need(args.phi0, "phi0")?;
            distribution(n, &|o| altstate::phase_state_probability(n, phi0, o, &angles))?
        }
        "search" => {
            let total: u32 = cfg.need(args.total, "total")?;
            let r = altstate::classical_bchsh_search(total);
            let mut table = Table::new(vec![
                "m",
                "q_max",
                "phi_a",
                "phi_a_prime",
                "phi_b",
                "phi_b_prime",
            ]);
            table.push(vec![
                Cell::U(u64::from(total)),
                Cell::F(r.q_max),
                Cell::F(r.settings[0]),
                Cell::F(r.settings[1]),
                Cell::F(r.settings[2]),
                Cell::F(r.settings[3]),
            ]);
            table
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown model `{other}` (expected coherent, averaged, phase, search)"
            )))
        }
    };
    Ok(table.render(format))
}

// ---------------------------------------------------------------- detection

fn detection_table(args: DetectionArgs, cfg: &FileConfig, format: Format) -> CliResult<String> {
    let n_alpha: u32 = cfg.need(args.n_alpha, "n-alpha")?;
    let n_beta: u32 = cfg.need(args.n_beta, "n-beta")?;
    let zeta = cfg.or(args.zeta, "zeta", 0.0)?;
    let theta = cfg.or(args.theta, "theta", 0.0)?;
    let angles = AngleSettings::new(zeta, theta);
    let source = SourceSpec::two(n_alpha, n_beta);
    let n = source.total();

    let sigmas: Vec<f64> = if args.sigmas.is_empty() {
        match cfg.0.get("sigmas") {
            Some(raw) => raw
                .split(',')
                .map(|s| {
                    s.trim().parse().map_err(|_| {
                        CliError::Usage(format!("config key `sigmas`: cannot parse `{raw}`"))
                    })
                })
                .collect::<CliResult<_>>()?,
            None => Vec::new(),
        }
    } else {
        args.sigmas
    };

    if !sigmas.is_empty() {
        let pattern_name: String = cfg.or(args.pattern, "pattern", "alternating".into())?;
        let pattern = match pattern_name.as_str() {
            "alternating" => JitterPattern::Alternating,
            "seeded" => JitterPattern::Seeded(cfg.or(args.seed, "seed", 1)?),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown pattern `{other}` (expected alternating or seeded)"
                )))
            }
        };
        let points = detection::mismatch_sweep(&source, &angles, &sigmas, pattern)?;
        let mut table = Table::new(vec!["sigma", "correlator"]);
        for p in points {
            table.push(vec![Cell::F(p.sigma), Cell::F(p.correlator)]);
        }
        return Ok(table.render(format));
    }

    let budget = 100 * (n as usize) * (n as usize);
    let pixels = cfg.or(args.pixels, "pixels", budget.max(1))?;
    let pbar = cfg.or(args.pbar, "pbar", 1.0)?;
    let model = PixelModel::aligned(&angles, pixels, pbar);
    if let Some(warning) = model.pixel_budget_warning(n) {
        eprintln!("warning: {warning}");
    }
    let t = cfg.or(args.t, "t", model.t_end())?;
    let mut table = Table::new(count_columns(4));
    table.columns.push("accumulated".into());
    for outcome in Support::FixedTotal(n).outcomes(4) {
        let assignment = detection::canonical_assignment(&outcome);
        let p = detection::accumulated_probability(&model, &assignment, n_alpha, n_beta, t)?;
        let mut row = outcome_cells(&outcome);
        row.push(Cell::F(p));
        table.push(row);
    }
    Ok(table.render(format))
}

// ---------------------------------------------------------------- sweep

/// Inclusive linear grid `start:stop:count`.
struct RangeSpec {
    start: f64,
    stop: f64,
    count: usize,
}

impl RangeSpec {
    fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|i| {
                self.start
                    + (self.stop - self.start) * i as f64 / (self.count - 1) as f64
            })
            .collect()
    }
}

impl FromStr for RangeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid `{s}`: expected start:stop:count"));
        }
        let start: f64 = parts[0].parse().map_err(|_| format!("grid `{s}`: bad start"))?;
        let stop: f64 = parts[1].parse().map_err(|_| format!("grid `{s}`: bad stop"))?;
        let count: usize = parts[2].parse().map_err(|_| format!("grid `{s}`: bad count"))?;
        if count == 0 {
            return Err(format!("grid `{s}`: count must be at least 1"));
        }
        Ok(Self { start, stop, count })
    }
}

fn angle_axis(
    cfg: &FileConfig,
    grid_flag: Option<String>,
    grid_key: &str,
    value_flag: Option<f64>,
    value_key: &str,
) -> CliResult<Vec<f64>> {
    let spec: Option<String> = match grid_flag {
        Some(s) => Some(s),
        None => cfg.get(grid_key)?,
    };
    match spec {
        Some(raw) => {
            let range: RangeSpec = raw.parse().map_err(CliError::Usage)?;
            Ok(range.points())
        }
        None => Ok(vec![cfg.or(value_flag, value_key, 0.0)?]),
    }
}

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let threads = match std::env::var("FOCKBELL_THREADS") {
        Ok(raw) => raw.parse::<usize>().map_err(|_| {
            CliError::Usage(format!("FOCKBELL_THREADS: cannot parse `{raw}`"))
        })?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Domain(format!("thread pool: {e}")))
}

fn sweep_table(args: SweepArgs, cfg: &FileConfig, format: Format) -> CliResult<String> {
    let target: String = cfg.need(args.target, "target")?;
    let pool = thread_pool()?;
    let zetas = angle_axis(cfg, args.zeta_grid, "zeta-grid", args.zeta, "zeta")?;
    let thetas = angle_axis(cfg, args.theta_grid, "theta-grid", args.theta, "theta")?;
    let chis = angle_axis(cfg, args.chi_grid, "chi-grid", args.chi, "chi")?;
    let omegas = angle_axis(cfg, args.omega_grid, "omega-grid", None, "omega")?;

    // Particle-number axis, used by every target except probability.
    let resolve_ns = |n_flag: Option<u32>| -> CliResult<Vec<u32>> {
        if !args.n_list.is_empty() {
            return Ok(args.n_list.clone());
        }
        if let Some(raw) = cfg.get::<String>("n-list")? {
            return raw
                .split(',')
                .map(|s| {
                    s.trim().parse().map_err(|_| {
                        CliError::Usage(format!("config key `n-list`: cannot parse `{raw}`"))
                    })
                })
                .collect();
        }
        Ok(vec![cfg.need(n_flag, "n")?])
    };

    let table = match target.as_str() {
        "probability" => {
            let tag: String = cfg.or(args.geometry, "geometry", "fig1".into())?;
            let geom = tag.parse::<Geometry>().map_err(CliError::from)?;
            let n_alpha: u32 = cfg.need(args.n_alpha, "n-alpha")?;
            let n_beta: u32 = cfg.need(args.n_beta, "n-beta")?;
            let three_source = geom == Geometry::ThreeSourceSix;
            let source = if three_source {
                SourceSpec::three(n_alpha, n_beta, cfg.need(args.n_gamma, "n-gamma")?)
            } else {
                SourceSpec::two(n_alpha, n_beta)
            };
            let counts: Vec<u32> = if args.outcome.is_empty() {
                let raw: String = cfg.need(None, "outcome")?;
                raw.split(',')
                    .map(|s| {
                        s.trim().parse().map_err(|_| {
                            CliError::Usage(format!("config key `outcome`: cannot parse `{raw}`"))
                        })
                    })
                    .collect::<CliResult<_>>()?
            } else {
                args.outcome
            };
            let outcome = OutcomeCounts::new(counts);

            // The record's probability is a fixed trigonometric polynomial in
            // the settings; extract it once, evaluate it per grid point.
            let poly = match geom {
                Geometry::SourceLoss => {
                    let t: f64 = cfg.need(args.transmission, "transmission")?;
                    engine::probability_lossy_parts(
                        &source,
                        &outcome,
                        &LossSpec::new(t, Placement::AtSources)?,
                    )?
                }
                Geometry::DetectorLoss => {
                    let t: f64 = cfg.need(args.transmission, "transmission")?;
                    engine::probability_lossy_parts(
                        &source,
                        &outcome,
                        &LossSpec::new(t, Placement::AtDetectors)?,
                    )?
                }
                _ => {
                    let base = if three_source {
                        AngleSettings::with_chi(0.0, 0.0, 0.0)
                    } else {
                        AngleSettings::new(0.0, 0.0)
                    };
                    let map = build_network(geom, base, &LossSpec::none())?;
                    engine::probability_parts(&map, &source, &outcome)?
                }
            };

            let mut grid = Vec::new();
            for &z in &zetas {
                for &t in &thetas {
                    if three_source {
                        for &c in &chis {
                            grid.push((z, t, Some(c)));
                        }
                    } else {
                        grid.push((z, t, None));
                    }
                }
            }
            let values: Vec<f64> = pool.install(|| {
                grid.par_iter()
                    .map(|&(z, t, c)| {
                        let a = match c {
                            Some(c) => AngleSettings::with_chi(z, t, c),
                            None => AngleSettings::new(z, t),
                        };
                        poly.eval_real(&a)
                    })
                    .collect()
            });
            let mut columns = vec!["zeta".to_string(), "theta".to_string()];
            if three_source {
                columns.push("chi".into());
            }
            columns.push("probability".into());
            let mut table = Table::new(columns);
            for (&(z, t, c), &v) in grid.iter().zip(&values) {
                let mut row = vec![Cell::F(z), Cell::F(t)];
                if let Some(c) = c {
                    row.push(Cell::F(c));
                }
                row.push(Cell::F(v));
                table.push(row);
            }
            table
        }
        "ab" => {
            let ns = resolve_ns(args.n)?;
            let mut grid = Vec::new();
            for &n in &ns {
                for &z in &zetas {
                    for &t in &thetas {
                        grid.push((n, z, t));
                    }
                }
            }
            let values: Vec<fockbell::Result<f64>> = pool.install(|| {
                grid.par_iter()
                    .map(|&(n, z, t)| bell::ab_closed_form(n, z, t))
                    .collect()
            });
            let mut table = Table::new(vec!["n", "zeta", "theta", "ab"]);
            for (&(n, z, t), v) in grid.iter().zip(values) {
                table.push(vec![
                    Cell::U(u64::from(n)),
                    Cell::F(z),
                    Cell::F(t),
                    Cell::F(v?),
                ]);
            }
            table
        }
        "q" => {
            let conditioned = !args.unconditioned;
            let m_flag = args.m;
            let ns = resolve_ns(args.n)?;
            let mut grid = Vec::new();
            for &n in &ns {
                let m: u32 = cfg.or(m_flag, "m", n)?;
                for &w in &omegas {
                    grid.push((n, m, w));
                }
            }
            let values: Vec<fockbell::Result<f64>> = pool.install(|| {
                grid.par_iter()
                    .map(|&(n, m, w)| bell::q_at(n, m, conditioned, w))
                    .collect()
            });
            let mut table = Table::new(vec!["n", "m_detected", "omega", "q"]);
            for (&(n, m, w), v) in grid.iter().zip(values) {
                table.push(vec![
                    Cell::U(u64::from(n)),
                    Cell::U(u64::from(m)),
                    Cell::F(w),
                    Cell::F(v?),
                ]);
            }
            table
        }
        "abc" => {
            let ns = resolve_ns(args.n)?;
            let mut grid = Vec::new();
            for &n in &ns {
                for &z in &zetas {
                    for &t in &thetas {
                        for &c in &chis {
                            grid.push((n, z, t, c));
                        }
                    }
                }
            }
            let values: Vec<fockbell::Result<f64>> = pool.install(|| {
                grid.par_iter()
                    .map(|&(n, z, t, c)| ghz::abc_correlator(n, z, t, c))
                    .collect()
            });
            let mut table = Table::new(vec!["n", "zeta", "theta", "chi", "abc"]);
            for (&(n, z, t, c), v) in grid.iter().zip(values) {
                table.push(vec![
                    Cell::U(u64::from(n)),
                    Cell::F(z),
                    Cell::F(t),
                    Cell::F(c),
                    Cell::F(v?),
                ]);
            }
            table
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown target `{other}` (expected probability, ab, q, abc)"
            )))
        }
    };
    Ok(table.render(format))
}

// ---------------------------------------------------------------- validate

fn validate_table(
    args: ValidateArgs,
    cfg: &FileConfig,
    format: Format,
) -> CliResult<(String, ExitCode)> {
    let n_max: u32 = cfg.or(args.n_max, "n-max", 6)?;
    let mut items = validation::run_all(n_max);
    items.push(oracle_agreement(n_max.min(4))?);

    let mut table = Table::new(vec!["check", "passed", "detail"]);
    let mut all_passed = true;
    for item in &items {
        all_passed &= item.passed;
        table.push(vec![
            Cell::S(item.name.clone()),
            Cell::B(item.passed),
            Cell::S(item.detail.clone()),
        ]);
    }
    let code = if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    };
    Ok((table.render(format), code))
}

/// Engine and brute-force oracle must produce identical exact polynomials.
fn oracle_agreement(n_max: u32) -> CliResult<CheckItem> {
    let mut compared = 0u64;
    let mut ok = true;
    let map = build_network(
        Geometry::TwoSourceFour,
        AngleSettings::new(0.0, 0.0),
        &LossSpec::none(),
    )?;
    for total in 1..=n_max {
        for n_alpha in 0..=total {
            let source = SourceSpec::two(n_alpha, total - n_alpha);
            for outcome in Support::FixedTotal(total).outcomes(4) {
                let e = engine::probability_parts(&map, &source, &outcome)?;
                let o = oracle::oracle_probability_parts(&map, &source, &outcome)?;
                ok &= e == o;
                compared += 1;
            }
        }
    }
    let map3 = build_network(
        Geometry::ThreeSourceSix,
        AngleSettings::with_chi(0.0, 0.0, 0.0),
        &LossSpec::none(),
    )?;
    let source3 = SourceSpec::three(1, 1, 1);
    for outcome in Support::FixedTotal(3).outcomes(6) {
        let e = engine::probability_parts(&map3, &source3, &outcome)?;
        let o = oracle::oracle_probability_parts(&map3, &source3, &outcome)?;
        ok &= e == o;
        compared += 1;
    }
    Ok(CheckItem {
        name: "oracle-agreement".into(),
        passed: ok,
        detail: format!("{compared} records identical as exact polynomials"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_cells_use_seventeen_significant_digits() {
        assert_eq!(Cell::F(0.125).csv(), "1.2500000000000000e-1");
        assert_eq!(Cell::F(0.25).csv(), "2.5000000000000000e-1");
        assert_eq!(Cell::F(-1.0).csv(), "-1.0000000000000000e0");
    }

    #[test]
    fn range_spec_grids_are_inclusive() {
        let r: RangeSpec = "0:1:5".parse().unwrap();
        assert_eq!(r.points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let single: RangeSpec = "0.3:9:1".parse().unwrap();
        assert_eq!(single.points(), vec![0.3]);
        assert!("1:2".parse::<RangeSpec>().is_err());
        assert!("1:2:0".parse::<RangeSpec>().is_err());
    }

    #[test]
    fn config_parses_comments_and_overrides() {
        let dir = std::env::temp_dir().join("fockbell-cli-config-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        fs::write(&path, "# defaults\nzeta = 0.5 # inline\nn-alpha = 3\n\n").unwrap();
        let cfg = FileConfig::load(&path).unwrap();
        assert_eq!(cfg.or(None, "zeta", 0.0).unwrap(), 0.5);
        assert_eq!(cfg.or(Some(1.25), "zeta", 0.0).unwrap(), 1.25);
        assert_eq!(cfg.need::<u32>(None, "n-alpha").unwrap(), 3);
        assert!(matches!(
            cfg.need::<u32>(None, "n-beta"),
            Err(CliError::Usage(_))
        ));
        fs::remove_file(&path).unwrap();
    }

    #[test]
    fn table_rendering_is_stable() {
        let mut table = Table::new(vec!["m1", "probability"]);
        table.push(vec![Cell::U(2), Cell::F(0.5)]);
        assert_eq!(table.render(Format::Csv), "m1,probability\n2,5.0000000000000000e-1\n");
        let json = table.render(Format::Json);
        assert!(json.contains("\"m1\": 2"));
        assert!(json.contains("\"probability\": 0.5"));
    }
}
