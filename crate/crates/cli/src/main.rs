mod config;
mod output;
mod selftest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use qtherm_core::variational::compare_modes;
use qtherm_core::{fit_logbeta, fit_tolman, variational_n0, DetectorConfig, FitWindow, Scanner};

use config::{parse_config, Format, RunConfig};
use output::{Cell, Table};

const SCAN_COLUMNS: &[&str] = &["site", "t_local", "n0", "beta", "n0_variational", "g", "mu"];

#[derive(Parser)]
#[command(
    name = "qtherm",
    version,
    about = "Local thermometry of free-fermion chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Long-time occupation and temperature at every requested site.
    Scan,
    /// Occupation at one site for every configured coupling.
    Gscan,
    /// Time series of the detector occupation at one site.
    Evolve,
    /// Frequencies and weights of the occupation signal at one site.
    Peaks,
    /// Exact versus two-level shifts and weights of every chain mode.
    Variational,
    /// Regression of a position scan.
    Fit {
        #[arg(long, value_enum, default_value_t = Model::Tolman)]
        model: Model,
    },
    /// Consistency checks on built-in small chains.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Scan => "scan",
            Command::Gscan => "gscan",
            Command::Evolve => "evolve",
            Command::Peaks => "peaks",
            Command::Variational => "variational",
            Command::Fit { .. } => "fit",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Model {
    Tolman,
    Logbeta,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum FormatArg {
    Csv,
    Json,
}

enum Failure {
    Config(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numeric(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numeric(m) => m,
        }
    }
}

fn numeric(e: impl std::fmt::Display) -> Failure {
    Failure::Numeric(e.to_string())
}

fn record_row(r: &qtherm_core::ScanRecord) -> Vec<Cell> {
    vec![
        r.site.into(),
        r.t_local.into(),
        r.n0.into(),
        r.beta.into(),
        r.n0_variational.into(),
        r.g.into(),
        r.mu.into(),
    ]
}

fn single_coupling(cfg: &RunConfig, command: &str) -> f64 {
    if cfg.g.len() > 1 {
        warn!(
            "{command} uses the first coupling g = {} of {}",
            cfg.g[0],
            cfg.g.len()
        );
    }
    cfg.g[0]
}

fn compute(command: Command, cfg: &RunConfig) -> Result<Table, Failure> {
    let scanner = Scanner::new(cfg.profile(), cfg.mu, cfg.quench).map_err(numeric)?;
    let sites = cfg.positions.resolve(cfg.profile().sites());
    match command {
        Command::Scan => {
            let mut t = Table::new(SCAN_COLUMNS);
            for &g in &cfg.g {
                for r in scanner.scan_positions(g, &sites).map_err(numeric)? {
                    t.push(record_row(&r));
                }
            }
            Ok(t)
        }
        Command::Gscan => {
            let mut t = Table::new(SCAN_COLUMNS);
            for r in scanner.scan_coupling(cfg.site, &cfg.g).map_err(numeric)? {
                t.push(record_row(&r));
            }
            Ok(t)
        }
        Command::Evolve => {
            let g = single_coupling(cfg, "evolve");
            let q = scanner.setup().attach(cfg.site, g).map_err(numeric)?;
            let times = qtherm_core::quench::uniform_grid(cfg.t_max, cfg.samples);
            let s = q.series(&times);
            let mut t = Table::new(&["time", "n0"]);
            for (time, n0) in s.times.iter().zip(&s.values) {
                t.push(vec![(*time).into(), (*n0).into()]);
            }
            Ok(t)
        }
        Command::Peaks => {
            let g = single_coupling(cfg, "peaks");
            let q = scanner.setup().attach(cfg.site, g).map_err(numeric)?;
            let mut t = Table::new(&["omega", "weight"]);
            for p in q.peaks(cfg.weight_floor, cfg.bin_width).peaks {
                t.push(vec![p.omega.into(), p.weight.into()]);
            }
            Ok(t)
        }
        Command::Variational => {
            let g = single_coupling(cfg, "variational");
            let setup = scanner.setup();
            let q = setup.attach(cfg.site, g).map_err(numeric)?;
            let det = DetectorConfig::new(cfg.site, g, cfg.mu);
            let est = variational_n0(setup.chain_spectrum(), &setup.chain_occupied(), &det)
                .map_err(numeric)?;
            info!(
                "site {}: n0 exact {:e}, two-level {:e}, modes near the pole {}",
                cfg.site,
                q.long_term_average(),
                est.n0,
                est.near_pole
            );
            let mut t = Table::new(&[
                "mode",
                "energy",
                "amplitude",
                "shift_exact",
                "shift_variational",
                "weight_exact",
                "weight_variational",
                "near_pole",
            ]);
            for c in compare_modes(setup.chain_spectrum(), &q) {
                t.push(vec![
                    c.mode.into(),
                    c.energy.into(),
                    c.amplitude.into(),
                    c.shift_exact.into(),
                    c.shift_variational.into(),
                    c.weight_exact.into(),
                    c.weight_variational.into(),
                    c.near_pole.into(),
                ]);
            }
            Ok(t)
        }
        Command::Fit { model } => {
            let l = cfg.profile().sites();
            let window = match (cfg.fit_window, model) {
                (Some(w), _) => w.resolve(l),
                (None, Model::Tolman) => FitWindow::tolman(l, cfg.mu),
                (None, Model::Logbeta) => FitWindow::logbeta(),
            };
            let mut t = Table::new(&["g", "model", "slope", "intercept", "r2", "points", "window"]);
            for &g in &cfg.g {
                let records = scanner.scan_positions(g, &sites).map_err(numeric)?;
                let fit = match model {
                    Model::Tolman => fit_tolman(&records, &window),
                    Model::Logbeta => fit_logbeta(&records, &window),
                }
                .map_err(numeric)?;
                let name = match model {
                    Model::Tolman => "linear",
                    Model::Logbeta => "log",
                };
                t.push(vec![
                    g.into(),
                    name.to_string().into(),
                    fit.slope.into(),
                    fit.intercept.into(),
                    fit.r2.into(),
                    fit.points.into(),
                    fit.window.into(),
                ]);
            }
            Ok(t)
        }
        Command::Selftest => unreachable!(),
    }
}

fn choose_format(cli: &Cli, cfg: &RunConfig, out: Option<&Path>) -> Format {
    if let Some(f) = cli.format {
        return match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    if let Some(f) = cfg.format {
        return f;
    }
    match out.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        Some("csv") => Format::Csv,
        _ if matches!(cli.command, Command::Fit { .. }) => Format::Json,
        _ => Format::Csv,
    }
}

fn run_selftest() -> Result<(), Failure> {
    let checks = selftest::run().map_err(Failure::Numeric)?;
    let mut failed = 0;
    for c in &checks {
        let tag = if c.passed() { "ok" } else { "FAIL" };
        failed += (!c.passed()) as usize;
        println!(
            "{} / {}: {tag} ({:.1e} <= {:.0e})",
            c.instance, c.name, c.value, c.tolerance
        );
    }
    println!("selftest: {} checks, {failed} failed", checks.len());
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Numeric(format!("{failed} selftest checks failed")))
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| {
                Failure::Config(format!("cannot configure {} threads: {e}", cli.threads))
            })?;
    }
    if cli.command == Command::Selftest {
        return run_selftest();
    }
    let path = cli.config.as_ref().ok_or_else(|| {
        Failure::Config(format!("{} requires --config <path>", cli.command.name()))
    })?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = parse_config(&text).map_err(|e| Failure::Config(e.to_string()))?;
    let resolved = cfg.to_json();
    info!("{} with config {}", cli.command.name(), resolved);

    let start = Instant::now();
    let table = compute(cli.command, &cfg)?;
    info!(
        "{}: {} rows in {:.3} s",
        cli.command.name(),
        table.rows.len(),
        start.elapsed().as_secs_f64()
    );

    let out = cli.out.clone().or_else(|| cfg.output.clone());
    let format = choose_format(cli, &cfg, out.as_deref());
    let text = table.render(format, cli.command.name(), &resolved);
    match out {
        Some(p) => std::fs::write(&p, text)
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
