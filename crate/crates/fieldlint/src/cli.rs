//! Command-line front-end. Exit codes are a stable contract:
//! 0 all checks passed, 1 verdict failure, 2 usage/parse/configuration error.

use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::calculus::poly_degree;
use crate::dimension::check_requirements;
use crate::dsl::{parse, render, LagrangianModel};
use crate::report::{Check, Report};
use crate::scenario::{Catalog, ScenarioOptions};
use crate::variation::{
    charge_degree_audit, derive_em_equation, euler_lagrange, gauge_check, stress_energy,
    VariationTarget,
};

#[derive(Parser)]
#[command(
    name = "fieldlint",
    version,
    about = "Symbolic and numeric consistency checks for Lagrangian densities"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Numeric equality tolerance for scenario checks.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Dimension, Lorentz-scalar and charge-degree audits of a model file.
    Check { file: PathBuf },
    /// Derive the field equation for one field of a model file.
    Eom {
        file: PathBuf,
        /// Field to vary: a name or conj(name).
        #[arg(long)]
        vary: String,
    },
    /// Derive the field equation of the vector potential.
    #[command(name = "em-eq")]
    EmEq { file: PathBuf },
    /// Check the potential equation for gauge invariance.
    Gauge { file: PathBuf },
    /// Build the canonical stress-energy tensor of a field.
    Stress {
        file: PathBuf,
        #[arg(long)]
        field: String,
    },
    /// Run one built-in scenario, or the whole catalog with --all.
    Scenario {
        id: Option<String>,
        #[arg(long)]
        all: bool,
        /// Directory of replacement .lagr/catalog.toml files.
        #[arg(long)]
        scenario_dir: Option<PathBuf>,
    },
}

fn load_model(path: &Path) -> Result<LagrangianModel, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_check(path: &Path) -> Result<Report, String> {
    let start = Instant::now();
    let model = load_model(path)?;
    let mut report = check_requirements(&model);
    if model.constant("e").is_some() {
        let audit = charge_degree_audit(&model, "e").map_err(|e| e.to_string())?;
        for (term, deg) in &audit.terms {
            report.push(Check::info("charge_degree").witness(format!("{term}: e^{deg}")));
        }
        if audit.mixed_flag {
            report.push(
                Check::info("mixed_charge_degrees")
                    .witness("interaction mixes linear and quadratic charge terms"),
            );
        }
    }
    report.timing_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

fn cmd_eom(path: &Path, vary: &str) -> Result<Report, String> {
    let start = Instant::now();
    let model = load_model(path)?;
    let target = VariationTarget::parse(vary);
    let eq = euler_lagrange(&model, &target).map_err(|e| e.to_string())?;
    let mut report = Report::new("eom", None);
    report.push(
        Check::pass(&format!("field_equation_{target}"))
            .witness(format!("{} = 0", render(&eq.lhs))),
    );
    if !eq.assumptions_used.is_empty() {
        let used: Vec<String> = eq.assumptions_used.iter().map(|a| a.to_string()).collect();
        report.push(Check::info("assumptions_used").witness(used.join(", ")));
    }
    report.timing_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

fn cmd_em_eq(path: &Path) -> Result<Report, String> {
    let start = Instant::now();
    let model = load_model(path)?;
    let eq = derive_em_equation(&model).map_err(|e| e.to_string())?;
    let mut report = Report::new("em-eq", None);
    report.push(
        Check::pass(&format!("potential_equation_{}", eq.varied.field))
            .witness(format!("{} = 0", render(&eq.lhs))),
    );
    report.timing_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

fn cmd_gauge(path: &Path) -> Result<Report, String> {
    let start = Instant::now();
    let model = load_model(path)?;
    let eq = derive_em_equation(&model).map_err(|e| e.to_string())?;
    let verdict = gauge_check(&eq).map_err(|e| e.to_string())?;
    let mut report = Report::new("gauge", None);
    report.push(Check::info("equation").witness(format!("{} = 0", render(&eq.lhs))));
    if verdict.pass {
        report.push(Check::pass("gauge_invariant").witness(format!(
            "unchanged under {0} -> {0} + d(chi)",
            verdict.gauge_field
        )));
    } else {
        report.push(
            Check::fail("gauge_invariant")
                .witness(format!("residual: {}", render(&verdict.witness))),
        );
    }
    report.timing_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

fn cmd_stress(path: &Path, field: &str) -> Result<Report, String> {
    let start = Instant::now();
    let model = load_model(path)?;
    let t = stress_energy(&model, field).map_err(|e| e.to_string())?;
    let mut report = Report::new("stress", None);
    report.push(Check::pass(&format!("stress_energy_{field}")).witness(render(&t)));
    for c in &model.constants {
        let deg = poly_degree(&t, &c.name).map_err(|e| e.to_string())?;
        if deg > 0 {
            report.push(
                Check::info(&format!("degree_in_{}", c.name)).witness(format!("degree {deg}")),
            );
        }
    }
    report.timing_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

fn cmd_scenario(
    id: Option<&str>,
    all: bool,
    dir: Option<&Path>,
    tolerance: Option<f64>,
) -> Result<Vec<Report>, String> {
    let catalog = match dir {
        Some(d) => Catalog::from_dir(d).map_err(|e| e.to_string())?,
        None => Catalog::builtin(),
    };
    let mut opts = ScenarioOptions::default();
    if let Some(t) = tolerance {
        opts.tolerance = t;
    }
    if all {
        return catalog.run_all(&opts).map_err(|e| e.to_string());
    }
    let id = id.ok_or_else(|| "provide a scenario id or --all".to_string())?;
    Ok(vec![catalog.run(id, &opts).map_err(|e| e.to_string())?])
}

fn use_color() -> bool {
    std::env::var_os("NO_COLOR").is_none() && std::io::stdout().is_terminal()
}

fn emit(reports: &[Report], format: Format) {
    match format {
        Format::Text => {
            let color = use_color();
            for r in reports {
                print!("{}", r.to_text(color));
            }
        }
        Format::Json => {
            if reports.len() == 1 {
                println!("{}", reports[0].to_json());
            } else {
                println!(
                    "{}",
                    serde_json::to_string_pretty(reports).expect("report serialization")
                );
            }
        }
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap uses 0 for --help/--version and 2 for usage errors.
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { 0 } else { 2 };
        }
    };
    let result = match &cli.command {
        Command::Check { file } => cmd_check(file).map(|r| vec![r]),
        Command::Eom { file, vary } => cmd_eom(file, vary).map(|r| vec![r]),
        Command::EmEq { file } => cmd_em_eq(file).map(|r| vec![r]),
        Command::Gauge { file } => cmd_gauge(file).map(|r| vec![r]),
        Command::Stress { file, field } => cmd_stress(file, field).map(|r| vec![r]),
        Command::Scenario {
            id,
            all,
            scenario_dir,
        } => cmd_scenario(id.as_deref(), *all, scenario_dir.as_deref(), cli.tolerance),
    };
    match result {
        Ok(reports) => {
            emit(&reports, cli.format);
            if reports.iter().all(|r| r.passed()) {
                0
            } else {
                1
            }
        }
        Err(msg) => {
            eprintln!("fieldlint: {msg}");
            2
        }
    }
}
