use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use stokes_dg::errors::NormKind;
use stokes_dg::harness::{
    run_convergence_study, run_probe, write_report, CellStatus, ProbeKind, StudyConfig, StudyReport,
};
use stokes_dg::manufactured::Equation;
use stokes_dg::mesh::{build_domain, DomainKind};

/// Convergence studies and probes for dG-in-time Taylor-Hood discretizations
/// of the transient Stokes and heat equations.
#[derive(Parser)]
#[command(name = "stokes-dg-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study or a probe from a JSON config.
    #[command(subcommand)]
    Study(Study),
    /// Mesh utilities.
    #[command(subcommand)]
    Mesh(MeshCommand),
}

#[derive(Subcommand)]
enum Study {
    /// Solve every cell, measure errors and check observed orders.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Override the config's equation.
        #[arg(long)]
        equation: Option<Equation>,
        /// Override the config's temporal degree.
        #[arg(long)]
        w: Option<usize>,
        /// Restrict the study to a single norm.
        #[arg(long)]
        norm: Option<NormKind>,
    },
    /// Run a stability, best-approximation, inf-sup or Leray H1 probe.
    Probe {
        #[command(flatten)]
        common: Common,
        /// stability | bestapprox | infsup | leray_h1
        #[arg(long)]
        kind: ProbeKind,
    },
}

#[derive(Args)]
struct Common {
    /// Study configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the output base path; `.csv` and `.json` are appended.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Write a mesh as JSON with `vertices` and `triangles` arrays.
    Dump {
        /// unit_square | l_shape
        #[arg(long)]
        domain: DomainKind,
        /// Subdivisions per unit length.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(common: &Common) -> Result<StudyConfig> {
    let mut cfg = StudyConfig::load(&common.config)
        .with_context(|| format!("reading config {}", common.config.display()))?;
    if let Some(out) = &common.output {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn finish(report: &StudyReport) -> Result<bool> {
    print_summary(report);
    if let Some(base) = &report.config.output {
        let (csv, json) = write_report(report, base).with_context(|| format!("writing report to {}", base.display()))?;
        println!("wrote {} and {}", csv.display(), json.display());
    }
    println!("{}", if report.passed { "PASS" } else { "FAIL" });
    Ok(report.passed)
}

fn print_summary(report: &StudyReport) {
    let cfg = &report.config;
    println!(
        "{} study: problem={} equation={:?} domain={} w={} coupling={} threads={}",
        report.kind.name(),
        cfg.problem,
        cfg.equation,
        cfg.domain.name(),
        cfg.w,
        cfg.coupling.name(),
        report.environment.threads
    );
    for row in &report.rows {
        let m = row.m.map_or_else(|| "-".to_string(), |m| m.to_string());
        let mut line = format!("  family {} n={:<3} M={:<4}", row.family, row.n, m);
        match row.status {
            CellStatus::Ok => {
                for key in report.kind.value_columns() {
                    if let Some(v) = row.value(key) {
                        line.push_str(&format!(" {key}={v:.4e}"));
                    }
                }
            }
            CellStatus::Failed => line.push_str(" failed"),
        }
        if let Some(msg) = &row.message {
            line.push_str(&format!(" ({msg})"));
        }
        println!("{line}");
    }
    for o in &report.orders {
        let observed: Vec<String> = o.observed.iter().map(|v| format!("{v:.3}")).collect();
        let verdict = match o.passed {
            Some(true) => "ok",
            Some(false) => "below expected",
            None => "recorded",
        };
        let expected = o.expected.map_or_else(|| "-".to_string(), |e| format!("{e}"));
        println!(
            "  order {} vs {:?} (family {}): [{}] expected {expected}: {verdict}",
            o.quantity,
            o.parameter,
            o.family,
            observed.join(", ")
        );
    }
    for c in &report.checks {
        println!(
            "  check {}: {:.4} (limit {}) {} - {}",
            c.name,
            c.value,
            c.limit,
            if c.passed { "ok" } else { "violated" },
            c.note
        );
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Study(Study::Convergence { common, equation, w, norm }) => {
            let mut cfg = load(&common)?;
            if let Some(e) = equation {
                cfg.equation = e;
            }
            if let Some(w) = w {
                cfg.w = w;
            }
            if let Some(n) = norm {
                cfg.norms = vec![n];
            }
            cfg.validate()?;
            finish(&run_convergence_study(&cfg)?)
        }
        Command::Study(Study::Probe { common, kind }) => {
            let cfg = load(&common)?;
            finish(&run_probe(kind, &cfg)?)
        }
        Command::Mesh(MeshCommand::Dump { domain, n, out }) => {
            let mesh = build_domain(domain, n)?;
            std::fs::write(&out, mesh.to_json()?).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "wrote {} ({} vertices, {} triangles)",
                out.display(),
                mesh.num_vertices(),
                mesh.num_triangles()
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
