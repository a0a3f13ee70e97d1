use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use probcat_core::doc::{load_document, to_canonical_string, Document, EvalReport, Violation};
use probcat_core::lawcheck::{run_suite, GenConfig};
use probcat_core::Tolerance;
use serde_json::Value;

const TOLERANCE_VAR: &str = "PROBCAT_TOLERANCE";

/// Finite probability spaces, entropic rollbacks and the law suite.
#[derive(Debug, Parser)]
#[command(name = "probcat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a space, collection or pipeline document.
    Check { file: PathBuf },
    /// Roll a terminal payoff back along a pipeline's chain.
    Eval(EvalArgs),
    /// Run the randomized law suite against the entropic measure.
    Laws(LawsArgs),
}

#[derive(Debug, Args)]
struct EvalArgs {
    file: PathBuf,
    /// Override the document's risk aversion.
    #[arg(long, value_parser = positive_lambda)]
    lambda: Option<f64>,
    #[arg(long, conflicts_with = "table")]
    json: bool,
    /// Human-readable output rounded to 6 decimals (default).
    #[arg(long)]
    table: bool,
    /// Also evaluate along the composite arrow and compare with stage 0.
    #[arg(long)]
    residual_check: bool,
}

#[derive(Debug, Args)]
struct LawsArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u64).range(2..))]
    max_outcomes: u64,
    #[arg(long)]
    json: bool,
}

fn positive_lambda(raw: &str) -> Result<f64, String> {
    match raw.parse::<f64>() {
        Ok(x) if x.is_finite() && x > 0.0 => Ok(x),
        Ok(_) => Err("risk aversion must be a positive finite number".into()),
        Err(e) => Err(e.to_string()),
    }
}

enum Failure {
    Domain(String),
    Usage(String),
}

impl Failure {
    fn code(&self) -> ExitCode {
        match self {
            Failure::Domain(_) => ExitCode::from(1),
            Failure::Usage(_) => ExitCode::from(2),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = tolerance().and_then(|tol| match cli.command {
        Command::Check { file } => check(&file),
        Command::Eval(args) => eval(&args, tol),
        Command::Laws(args) => laws(&args, tol),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Domain(msg) | Failure::Usage(msg) if !msg.is_empty() => {
                    eprintln!("probcat: {msg}")
                }
                _ => {}
            }
            failure.code()
        }
    }
}

fn tolerance() -> Result<Tolerance, Failure> {
    match std::env::var(TOLERANCE_VAR) {
        Err(_) => Ok(Tolerance::default()),
        Ok(raw) => match raw.trim().parse::<f64>() {
            Ok(r) if r.is_finite() && r >= 0.0 => Ok(Tolerance::relative(r)),
            _ => Err(Failure::Usage(format!(
                "{TOLERANCE_VAR} must be a non-negative number, got `{raw}`"
            ))),
        },
    }
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Domain(format!("{}: $: invalid JSON: {e}", path.display())))
}

fn report_violations(path: &Path, violations: &[Violation]) -> Failure {
    println!(
        "{}: invalid ({} violation{})",
        path.display(),
        violations.len(),
        if violations.len() == 1 { "" } else { "s" }
    );
    for v in violations {
        println!("  {v}");
    }
    Failure::Domain(String::new())
}

fn load(path: &Path) -> Result<Document, Failure> {
    let value = read_json(path)?;
    load_document(&value).map_err(|v| report_violations(path, &v))
}

fn check(path: &Path) -> Result<(), Failure> {
    let summary = match load(path)? {
        Document::Space(s) => format!(
            "space with {} outcomes and {} atoms",
            s.len(),
            s.sigma().num_atoms()
        ),
        Document::Collection(c) => format!(
            "collection with {} and {}",
            count(c.spaces.len(), "space"),
            count(c.arrows.len(), "arrow")
        ),
        Document::Pipeline(p) => format!(
            "pipeline with {}, {} and a chain of length {}",
            count(p.collection.spaces.len(), "space"),
            count(p.collection.arrows.len(), "arrow"),
            p.chain.len()
        ),
    };
    println!("{}: valid {summary}", path.display());
    Ok(())
}

fn count(n: usize, noun: &str) -> String {
    format!("{n} {noun}{}", if n == 1 { "" } else { "s" })
}

fn eval(args: &EvalArgs, tolerance: Tolerance) -> Result<(), Failure> {
    let Document::Pipeline(pipeline) = load(&args.file)? else {
        return Err(Failure::Domain(format!(
            "{}: eval needs a pipeline document (with `chain` and `terminal`)",
            args.file.display()
        )));
    };
    let report = pipeline
        .evaluate(args.lambda, args.residual_check, tolerance)
        .map_err(|e| Failure::Domain(e.to_string()))?;
    if args.json {
        println!("{}", to_canonical_string(&report.to_json()));
    } else {
        print!("{}", table(&report));
    }
    match &report.residual {
        Some(r) if !r.passed => Err(Failure::Domain(format!(
            "residual {:e} exceeds tolerance (relative {:e})",
            r.max_residual, r.tolerance.relative
        ))),
        _ => Ok(()),
    }
}

fn table(report: &EvalReport) -> String {
    let mut out = format!("lambda = {}\n", report.lambda);
    for stage in &report.stages {
        out.push_str(&format!("stage {} ({})\n", stage.index, stage.space));
        let width = stage.values.iter().map(|(a, _)| a.len()).max().unwrap_or(0);
        for (atom, value) in &stage.values {
            out.push_str(&format!("  {atom:<width$}  {value:.6}\n"));
        }
    }
    if let Some(r) = &report.residual {
        out.push_str(&format!(
            "residual check: max residual {:.6e} ({})\n",
            r.max_residual,
            if r.passed { "ok" } else { "FAILED" }
        ));
    }
    out
}

fn laws(args: &LawsArgs, tolerance: Tolerance) -> Result<(), Failure> {
    let config = GenConfig {
        seed: args.seed,
        trials: args.trials as usize,
        max_outcomes: args.max_outcomes as usize,
        tolerance,
        ..GenConfig::default()
    };
    let report = run_suite(&config).map_err(|e| Failure::Usage(e.to_string()))?;
    if args.json {
        println!("{}", report.to_canonical_json());
    } else {
        print!("{}", report.summary());
    }
    if report.all_passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.failing().map(|r| r.id).collect();
        Err(Failure::Domain(format!(
            "laws failed: {}",
            failed.join(", ")
        )))
    }
}
