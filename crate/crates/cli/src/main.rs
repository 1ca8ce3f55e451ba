use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use bcov_core::pipeline::StageError;
use bcov_core::{
    generate_model, load_model, run_pipeline, DGBVModel, FrobeniusError, HodgeData, Method, ModelError, PipelineError,
    PipelineParams, PipelineReport, Stage, ZooError, ZooParams,
};
use clap::{Parser, Subcommand, ValueEnum};

const EXIT_AXIOM: u8 = 2;
const EXIT_OBSTRUCTED: u8 = 3;
const EXIT_USAGE: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "bcov", version, about = "Exact genus-zero BCOV and Frobenius computations on finite dGBV models")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Model file, or zoo:NAME (e.g. zoo:torus(2), zoo:twostep-del).
    #[arg(long, global = true)]
    model: Option<String>,

    /// Truncation order in τ; for `action`, the largest vertex valence.
    #[arg(long, global = true, visible_alias = "nmax", default_value_t = 4)]
    order: usize,

    /// Highest descendant t-power [default: order − 3].
    #[arg(long, global = true)]
    tmax: Option<u32>,

    #[arg(long, global = true, value_enum, default_value_t = MethodArg::Both)]
    method: MethodArg,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, env = "BCOV_THREADS")]
    threads: Option<usize>,

    /// Also compare over all descendant coordinates (compare, axioms).
    #[arg(long, global = true)]
    descendants: bool,

    /// Include per-stage wall-clock times in the report.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Load and validate a model.
    Validate,
    /// Vertex tables of the action.
    Action,
    /// Classical master equation residual.
    Cme,
    /// Genus-zero potential from trees and/or the perturbation lemma.
    F0,
    /// Maurer–Cartan solution and J-function.
    Mc,
    /// Flat metric, structure constants and potential.
    Frobenius,
    /// Equivalence of the period and tree sides.
    Compare,
    /// Full pipeline with every axiom check.
    Axioms,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MethodArg {
    Hpl,
    Trees,
    Both,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Hpl => Method::Hpl,
            MethodArg::Trees => Method::Trees,
            MethodArg::Both => Method::Both,
        }
    }
}

enum Failure {
    Usage(String),
    Axiom(String),
    Obstructed(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Axiom(_) => EXIT_AXIOM,
            Failure::Obstructed(_) => EXIT_OBSTRUCTED,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Axiom(m) | Failure::Obstructed(m) => m,
        }
    }
}

fn load(cli: &Cli) -> Result<DGBVModel, Failure> {
    let src = cli.model.as_deref().ok_or_else(|| Failure::Usage("--model is required".into()))?;
    if let Some(name) = src.strip_prefix("zoo:") {
        let params = ZooParams::default();
        let spec = generate_model(name, &params).map_err(|e| match e {
            ZooError::UnknownModel(_) | ZooError::ParamError(_) => Failure::Usage(e.to_string()),
        })?;
        return DGBVModel::from_spec(&spec).map_err(model_failure);
    }
    let path = PathBuf::from(src);
    if !path.is_file() {
        return Err(Failure::Usage(format!("no such model file: {}", path.display())));
    }
    load_model(&path).map_err(model_failure)
}

fn model_failure(e: ModelError) -> Failure {
    Failure::Axiom(e.to_string())
}

fn stage_failure(stage: Stage, e: &StageError) -> Failure {
    let msg = format!("stage {stage}: {e}");
    match e {
        StageError::Frobenius(
            FrobeniusError::ObstructionError { .. }
            | FrobeniusError::MiniversalityFailure(_)
            | FrobeniusError::DegenerateMetric,
        ) => Failure::Obstructed(msg),
        StageError::Action(_) => Failure::Usage(msg),
        _ => Failure::Axiom(msg),
    }
}

fn targets(cmd: Command) -> &'static [Stage] {
    match cmd {
        Command::Validate => &[Stage::Load],
        Command::Action => &[Stage::Action],
        Command::Cme => &[Stage::Cme],
        Command::F0 => &[Stage::F0],
        Command::Mc => &[Stage::J],
        Command::Frobenius => &[Stage::Frobenius],
        Command::Compare => &[Stage::Equivalence],
        Command::Axioms => &[Stage::Axioms, Stage::Equivalence],
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => std::fs::write(path, format!("{text}\n"))
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn validate(cli: &Cli, model: &DGBVModel) -> Result<(), Failure> {
    let kahler = match HodgeData::new(model) {
        Ok(h) => match h.check_kahler(model) {
            Ok(()) => "ok".to_string(),
            Err(e) => e.to_string(),
        },
        Err(e) => e.to_string(),
    };
    let out = serde_json::json!({
        "name": model.name(),
        "hash": model.hash(),
        "basis_size": model.len(),
        "valid": true,
        "kahler": kahler,
    });
    emit(cli, &serde_json::to_string_pretty(&out).expect("json"))
}

/// A report whose checks came back negative is an axiom failure, after it has been written.
fn verdict(cmd: Command, report: &PipelineReport) -> Result<(), Failure> {
    let eq_ok = report.equivalence.as_ref().is_none_or(|e| e.all_zero);
    let ax_ok = report.axioms.as_ref().is_none_or(|a| a.all_pass);
    let cme_ok = cmd != Command::Cme || report.cme.as_ref().is_some_and(|c| c.zero);
    if eq_ok && ax_ok && cme_ok {
        Ok(())
    } else {
        Err(Failure::Axiom("checks failed; see report".into()))
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    let model = load(cli)?;
    if cli.command == Command::Validate {
        return validate(cli, &model);
    }
    let mut params = PipelineParams::new(cli.order).until(targets(cli.command));
    if let Some(k) = cli.tmax {
        params.tmax = k;
    }
    params.method = cli.method.into();
    params.descendants = cli.descendants;
    params.vertex_entries = cli.command == Command::Action;
    params.timing = cli.timing;
    match run_pipeline(&Arc::new(model), &params) {
        Ok(report) => {
            emit(cli, &report.to_json())?;
            verdict(cli.command, &report)
        }
        Err(PipelineError::ParamError(m)) => Err(Failure::Usage(m)),
        Err(PipelineError::Stage { stage, source, report }) => {
            emit(cli, &report.to_json())?;
            Err(stage_failure(stage, &source))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("bcov: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
