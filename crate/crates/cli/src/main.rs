use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use ou_resolvent_cli::commands::{
    cmd_kernel_dump, cmd_phase_dump, cmd_scan, cmd_semigroup, scan_passed, write_scan_errors, write_semigroup_csv,
};
use ou_resolvent_cli::{verify, LemmaId, RunConfig};

const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "ou-resolvent", version, about = "Uniform resolvent bounds for radially perturbed Ornstein-Uhlenbeck operators")]
struct Cli {
    /// `key = value` configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV destination (default: the config's `output`, else stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    omega0: Option<f64>,
    #[arg(long, global = true)]
    nu0: Option<f64>,
    #[arg(long, global = true)]
    c: Option<f64>,
    /// Accept `omega.min` below `threshold.omega0`.
    #[arg(long, global = true)]
    override_omega_floor: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Operator norms and kernel bounds over the (omega, ell) grid.
    Scan,
    /// Run the invariant suite of one statement.
    Verify {
        #[arg(value_enum)]
        lemma: LemmaId,
    },
    /// Growth bound, semigroup law and Laplace cross-check of the free semigroup.
    Semigroup,
    /// Phase functions at `omega.min` for one angular momentum.
    PhaseDump {
        #[arg(long, default_value_t = 0)]
        ell: u32,
    },
    /// Green kernel against its bound at `omega.min` for one angular momentum.
    KernelDump {
        #[arg(long, default_value_t = 0)]
        ell: u32,
        #[arg(long, default_value_t = 60)]
        points: usize,
    },
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RunConfig::parse(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = cli.omega0 {
        cfg.omega0 = v;
    }
    if let Some(v) = cli.nu0 {
        cfg.nu0 = v;
    }
    if let Some(v) = cli.c {
        cfg.c = v;
    }
    if cli.override_omega_floor {
        cfg.override_omega_floor = true;
    }
    if let Some(p) = &cli.out {
        cfg.output = Some(p.clone());
    }
    cfg.validate()?;
    if cfg.override_omega_floor && cfg.omega_min < cfg.omega0 {
        eprintln!("warning: omega.min = {} is below threshold.omega0 = {}", cfg.omega_min, cfg.omega0);
    }
    Ok(cfg)
}

fn sink(cfg: &RunConfig) -> anyhow::Result<Box<dyn Write>> {
    Ok(match &cfg.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

/// `Ok(true)` when every invariant held.
fn run(cli: &Cli, cfg: &RunConfig) -> anyhow::Result<bool> {
    match &cli.command {
        Command::Scan => {
            let report = cmd_scan(cfg);
            report.write_csv(sink(cfg)?)?;
            write_scan_errors(&report, io::stderr().lock())?;
            eprintln!("{} cells, sup norm estimate {:.6e}", report.rows.len(), report.sup_norm());
            Ok(scan_passed(&report))
        }
        Command::Verify { lemma } => {
            let report = verify::run(*lemma, cfg)?;
            let mut text = io::stderr().lock();
            for line in &report.details {
                writeln!(text, "{line}")?;
            }
            writeln!(
                text,
                "{}: {} (measured constant {:.6e})",
                report.lemma,
                if report.pass { "pass" } else { "FAIL" },
                report.measured_constant
            )?;
            report.write_csv(sink(cfg)?)?;
            Ok(report.pass)
        }
        Command::Semigroup => {
            let rows = cmd_semigroup(cfg)?;
            write_semigroup_csv(&rows, sink(cfg)?)?;
            Ok(rows.iter().all(|r| r.pass()))
        }
        Command::PhaseDump { ell } => {
            cmd_phase_dump(cfg, *ell, sink(cfg)?)?;
            Ok(true)
        }
        Command::KernelDump { ell, points } => {
            cmd_kernel_dump(cfg, *ell, *points, sink(cfg)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match run(&cli, &cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VIOLATION),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_VIOLATION)
        }
    }
}
