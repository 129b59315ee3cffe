//! `fwdlab`: type-check, compile, extract and run synchronous forwarders.

use std::fmt::Debug;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fwdlab_core::arbiterize::{arbiter_context, arbiterize, soundness_certificate};
use fwdlab_core::coherence::check_coherence;
use fwdlab_core::dynamics::{compose, compose_typed, normalize, replay, DynamicsError, Trace};
use fwdlab_core::globalize::{extract_global, validate_compound};
use fwdlab_core::json::{derivation_from_json, derivation_to_json, trace_from_json, trace_to_json};
use fwdlab_core::logic_cll::{check_cll, dual_context, erase_context};
use fwdlab_core::logic_sync::{check_sync_runtime_with, check_sync_with, explain, validate, SyncOptions};
use fwdlab_core::oracle::{random_arbiter_composition, random_global_type};
use fwdlab_core::surface::{
    parse_context_in, parse_global_type_in, parse_process_in, parse_proposition, parse_runtime_process,
    print_global_type, print_global_type_pretty, print_process, print_process_pretty, ParseError,
};
use fwdlab_core::terms::{Context, Derivation, GlobalType, Judgement, Name, Process};

#[derive(Parser)]
#[command(name = "fwdlab", version, about = "Synchronous forwarders over classical linear logic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Type-check a process against a context.
    Check(CheckArgs),
    /// Check that a global type is coherent for a context.
    Coherent(CoherentArgs),
    /// Compile a global type to its arbiter process.
    Arbiterize(ArbiterizeArgs),
    /// Extract a global type from a forwarder.
    Globalize(GlobalizeArgs),
    /// Cut two processes together and run the result.
    Compose(ComposeArgs),
    /// Run cut elimination on a process.
    Normalize(NormalizeArgs),
    /// Re-validate and render a JSON derivation or trace.
    Explain(ExplainArgs),
    /// Random pipeline checks seeded by FWDLAB_SEED.
    Fuzz(FuzzArgs),
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    #[arg(long)]
    ctx: PathBuf,
    /// Synchronous forwarder checker (default).
    #[arg(long, conflicts_with = "cll")]
    sync: bool,
    /// Classical linear logic checker.
    #[arg(long)]
    cll: bool,
    #[arg(long)]
    allow_empty_with: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CoherentArgs {
    file: PathBuf,
    #[arg(long)]
    ctx: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ArbiterizeArgs {
    file: PathBuf,
    /// Check coherence first and type the arbiter against the primed context.
    #[arg(long)]
    ctx: Option<PathBuf>,
    #[arg(short = 'o')]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GlobalizeArgs {
    file: PathBuf,
    #[arg(long)]
    ctx: PathBuf,
    #[arg(short = 'o')]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TraceMode {
    Short,
    Full,
}

#[derive(Args)]
struct RunArgs {
    /// Print the reduction trace (`--trace=full` adds the terms).
    #[arg(long, num_args = 0..=1, require_equals = true, default_missing_value = "short")]
    trace: Option<TraceMode>,
    #[arg(long, default_value_t = 10_000)]
    max_steps: usize,
    #[arg(short = 'o')]
    out: Option<PathBuf>,
    /// Print the trace as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ComposeArgs {
    left: PathBuf,
    /// Endpoint of the left process.
    x: String,
    right: PathBuf,
    /// Endpoint of the right process.
    y: String,
    /// Contexts of the left and right process, in that order.
    #[arg(long, num_args = 1)]
    ctx: Vec<PathBuf>,
    /// Type of `x` when no contexts are given.
    #[arg(long = "type")]
    ty: Option<String>,
    /// Write the composition without running it.
    #[arg(long)]
    no_run: bool,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct NormalizeArgs {
    file: PathBuf,
    /// Check every step against this context.
    #[arg(long)]
    ctx: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct ExplainArgs {
    file: PathBuf,
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long, default_value_t = 100)]
    count: u64,
    #[arg(long, default_value_t = 6)]
    size: usize,
}

enum Failure {
    Rejected(String),
    Usage(String),
}

type Outcome = Result<(), Failure>;

fn variant<E: Debug>(e: &E) -> String {
    let s = format!("{:?}", e);
    s.split(|c: char| !c.is_alphanumeric() && c != '_').next().unwrap_or("").to_string()
}

fn rejected<E: Debug + std::fmt::Display>(e: E) -> Failure {
    Failure::Rejected(format!("{}: {}", variant(&e), e))
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e)))
}

fn syntax(e: ParseError) -> Failure {
    Failure::Usage(format!("parse error at {}", e))
}

fn file_name(path: &Path) -> String {
    path.display().to_string()
}

fn load_process(path: &Path) -> Result<Process, Failure> {
    let text = read(path)?;
    match parse_process_in(&text, Some(&file_name(path))) {
        Ok(p) => Ok(p),
        Err(e) => parse_runtime_process(&text).map_err(|_| syntax(e)),
    }
}

fn load_context(path: &Path) -> Result<Context, Failure> {
    parse_context_in(&read(path)?, Some(&file_name(path))).map_err(syntax)
}

fn load_global(path: &Path) -> Result<GlobalType, Failure> {
    parse_global_type_in(&read(path)?, Some(&file_name(path))).map_err(syntax)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Outcome {
    let text = if text.ends_with('\n') { text.to_string() } else { format!("{}\n", text) };
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e))),
        None => {
            print!("{}", text);
            Ok(())
        }
    }
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON values serialize"));
}

fn show_derivation(d: &Derivation, json: bool) {
    if json {
        print_json(&derivation_to_json(d));
    } else {
        print!("{}", explain(d));
    }
}

fn cmd_check(a: CheckArgs) -> Outcome {
    let p = load_process(&a.file)?;
    let ctx = load_context(&a.ctx)?;
    let d = if a.cll {
        check_cll(&p, &erase_context(&ctx)).map_err(rejected)?
    } else {
        let opts = SyncOptions { allow_empty_with: a.allow_empty_with };
        let result = if p.has_cut() { check_sync_runtime_with(&p, &ctx, opts) } else { check_sync_with(&p, &ctx, opts) };
        result.map_err(rejected)?
    };
    show_derivation(&d, a.json);
    Ok(())
}

fn cmd_coherent(a: CoherentArgs) -> Outcome {
    let g = load_global(&a.file)?;
    let delta = load_context(&a.ctx)?;
    let d = check_coherence(&g, &delta).map_err(rejected)?;
    show_derivation(&d, a.json);
    Ok(())
}

fn cmd_arbiterize(a: ArbiterizeArgs) -> Outcome {
    let g = load_global(&a.file)?;
    let p = match &a.ctx {
        Some(path) => {
            let delta = load_context(path)?;
            let (p, d) = soundness_certificate(&g, &delta).map_err(rejected)?;
            if a.json {
                print_json(&derivation_to_json(&d));
            } else {
                eprintln!("arbiter context: {}", arbiter_context(&delta));
            }
            p
        }
        None => arbiterize(&g),
    };
    emit(&a.out, &print_process_pretty(&p))
}

fn cmd_globalize(a: GlobalizeArgs) -> Outcome {
    let p = load_process(&a.file)?;
    let ctx = load_context(&a.ctx)?;
    let g = extract_global(&p, &ctx).map_err(rejected)?;
    emit(&a.out, &print_global_type_pretty(&g))
}

fn check_steps(trace: &Trace, ctx: &Context) -> Outcome {
    let opts = SyncOptions::default();
    for s in &trace.steps {
        check_sync_runtime_with(&s.after, ctx, opts)
            .map_err(|e| Failure::Rejected(format!("{}: {} after {}", variant(&e), e, s.line())))?;
    }
    Ok(())
}

fn run(p: &Process, ctx: Option<&Context>, a: &RunArgs) -> Outcome {
    if let Some(ctx) = ctx {
        check_sync_runtime_with(p, ctx, SyncOptions::default()).map_err(rejected)?;
    }
    let trace = match normalize(p, a.max_steps) {
        Ok(t) => t,
        Err(DynamicsError::StepLimitExceeded { limit, trace }) => {
            if a.trace.is_some() {
                print!("{}", trace.render(a.trace == Some(TraceMode::Full)));
            }
            return Err(Failure::Rejected(format!("StepLimitExceeded: step limit of {} exceeded", limit)));
        }
        Err(e) => return Err(rejected(e)),
    };
    if let Some(ctx) = ctx {
        check_steps(&trace, ctx)?;
    }
    if a.json {
        print_json(&trace_to_json(&trace));
    } else if let Some(mode) = a.trace {
        print!("{}", trace.render(mode == TraceMode::Full));
    }
    let text = print_process_pretty(&trace.result);
    if a.json && a.out.is_none() {
        return Ok(());
    }
    emit(&a.out, &text)
}

fn cmd_compose(a: ComposeArgs) -> Outcome {
    let p = load_process(&a.left)?;
    let q = load_process(&a.right)?;
    let (x, y) = (Name::new(&a.x), Name::new(&a.y));
    let (t, ctx) = match (a.ctx.as_slice(), &a.ty) {
        ([cp, cq], None) => {
            let (t, ctx) = compose_typed(&p, &load_context(cp)?, &x, &q, &load_context(cq)?, &y).map_err(rejected)?;
            (t, Some(ctx))
        }
        ([], Some(ty)) => {
            let a = parse_proposition(ty).map_err(syntax)?;
            (compose(&p, &x, &q, &y, &a).map_err(rejected)?, None)
        }
        _ => return Err(Failure::Usage("compose needs either two --ctx files or --type".into())),
    };
    if a.no_run {
        if let Some(ctx) = &ctx {
            eprintln!("context: {}", ctx);
        }
        return emit(&a.run.out, &print_process(&t));
    }
    run(&t, ctx.as_ref(), &a.run)
}

fn cmd_normalize(a: NormalizeArgs) -> Outcome {
    let p = load_process(&a.file)?;
    let ctx = a.ctx.as_deref().map(load_context).transpose()?;
    run(&p, ctx.as_ref(), &a.run)
}

fn validate_derivation(d: &Derivation) -> Outcome {
    match &d.conclusion {
        Judgement::Sync { .. } => validate(d, SyncOptions::default()).map_err(rejected),
        Judgement::Compound { .. } => validate_compound(d).map_err(rejected),
        Judgement::Coherence { global, context } => {
            let fresh = check_coherence(global, context).map_err(rejected)?;
            same(d, &fresh)
        }
        Judgement::Cll { process, context } => {
            let fresh = check_cll(process, context).map_err(rejected)?;
            same(d, &fresh)
        }
    }
}

fn same(given: &Derivation, fresh: &Derivation) -> Outcome {
    if given == fresh {
        Ok(())
    } else {
        Err(Failure::Rejected("InvalidDerivation: the derivation differs from the checker's".into()))
    }
}

fn cmd_explain(a: ExplainArgs) -> Outcome {
    let text = read(&a.file)?;
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {}", a.file.display(), e)))?;
    if v.get("steps").is_some() {
        let trace = trace_from_json(&v).map_err(|e| Failure::Usage(e.to_string()))?;
        let result = replay(&trace).map_err(rejected)?;
        print!("{}", trace.render(false));
        println!("{}", print_process_pretty(&result));
        return Ok(());
    }
    let d = derivation_from_json(&v).map_err(|e| Failure::Usage(e.to_string()))?;
    validate_derivation(&d)?;
    print!("{}", explain(&d));
    Ok(())
}

fn fuzz_seed() -> Result<u64, Failure> {
    match std::env::var("FWDLAB_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| Failure::Usage(format!("FWDLAB_SEED must be an integer, got {:?}", s))),
        Err(_) => Ok(0),
    }
}

fn fuzz_one(seed: u64, size: usize) -> Result<(), String> {
    let (g, delta) = random_global_type(seed, size);
    check_coherence(&g, &delta).map_err(|e| format!("incoherent {}: {}", g, e))?;
    if parse_global_type_in(&print_global_type(&g), None).ok().as_ref() != Some(&g) {
        return Err(format!("print/parse mismatch on {}", g));
    }
    let (p, _) = soundness_certificate(&g, &delta).map_err(|e| format!("arbiter of {}: {}", g, e))?;
    let back = extract_global(&p, &arbiter_context(&delta)).map_err(|e| format!("extraction of {}: {}", g, e))?;
    check_coherence(&back, &dual_context(&arbiter_context(&delta))).map_err(|e| format!("{}: {}", back, e))?;
    let (t, ctx) = random_arbiter_composition(seed, size);
    let trace = normalize(&t, 10_000).map_err(|e| format!("composition {}: {}", seed, e))?;
    for s in &trace.steps {
        check_sync_runtime_with(&s.after, &ctx, SyncOptions::default())
            .map_err(|e| format!("composition {} {}: {}", seed, s.line(), e))?;
    }
    Ok(())
}

fn cmd_fuzz(a: FuzzArgs) -> Outcome {
    let seed = fuzz_seed()?;
    let mut failures = 0;
    for i in 0..a.count {
        if let Err(msg) = fuzz_one(seed.wrapping_add(i), a.size.max(1)) {
            eprintln!("seed {}: {}", seed.wrapping_add(i), msg);
            failures += 1;
        }
    }
    println!("{} cases from seed {}, {} failures", a.count, seed, failures);
    if failures == 0 {
        Ok(())
    } else {
        Err(Failure::Rejected(format!("{} fuzz failures", failures)))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Coherent(a) => cmd_coherent(a),
        Command::Arbiterize(a) => cmd_arbiterize(a),
        Command::Globalize(a) => cmd_globalize(a),
        Command::Compose(a) => cmd_compose(a),
        Command::Normalize(a) => cmd_normalize(a),
        Command::Explain(a) => cmd_explain(a),
        Command::Fuzz(a) => cmd_fuzz(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Rejected(msg)) => {
            eprintln!("rejected: {}", msg);
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
    }
}
