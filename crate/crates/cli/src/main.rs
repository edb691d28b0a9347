#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use rigidity_core::config::{hyperbolic_splitting, run_pipeline, ActionConfig, PipelineParams};
use rigidity_core::group::{AbcGroup, IntegerMatrix, Word};
use rigidity_core::report::{self, Metadata};
use rigidity_core::spectral::{
    check_hyperbolic, compute_constants, find_k, Overrides, Verdict, DEFAULT_ALPHA, DEFAULT_DELTA,
    DEFAULT_K_CAP, DEFAULT_TOL_SPLIT,
};
use rigidity_core::verify::ManifoldBounds;
use rigidity_core::Error;

const EXIT_AUDIT_FAILURE: u8 = 1;
const EXIT_BAD_INPUT: u8 = 2;
const EXIT_DOMAIN: u8 = 3;

/// Exact group arithmetic, hyperbolic splittings and displacement audits
/// for actions of abelian-by-cyclic groups.
#[derive(Parser)]
#[command(name = "rigidity", version)]
struct Cli {
    #[command(flatten)]
    opts: Options,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Options {
    /// Matrix file: first line n, then n rows of n integers.
    #[arg(long, global = true)]
    matrix: Option<PathBuf>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Embedding dimension of the manifold (1 interval, 2 circle).
    #[arg(long, global = true, default_value_t = 1)]
    ell: usize,
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long = "tol-rel", global = true)]
    tol_rel: Option<f64>,
    #[arg(long = "tol-split", global = true, default_value_t = DEFAULT_TOL_SPLIT)]
    tol_split: f64,
    /// Unit-circle tolerance for the hyperbolicity test.
    #[arg(long, global = true, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Word problem and conjugation powers in the group of the matrix.
    Group {
        #[command(subcommand)]
        op: GroupOp,
    },
    /// Eigenvalue moduli, splitting residuals and the iterate k.
    Spectral,
    /// The constant pipeline as JSON.
    Constants {
        #[arg(long)]
        eta1: Option<f64>,
        #[arg(long)]
        eps0: Option<f64>,
        #[arg(long)]
        eps1: Option<f64>,
    },
    /// Runs every audit and the sweep for an action family config.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum GroupOp {
    /// Normal form, canonical word and identity verdict of a word.
    Normalize {
        /// Tokens such as `a`, `a^-1`, `b1^3`; an empty word is the identity.
        word: Vec<String>,
    },
    /// Exponents of `a^k b_i a^-k` in the generators `b_j`.
    ConjPower {
        #[arg(long)]
        i: usize,
        #[arg(long)]
        k: u32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_domain_error() { EXIT_DOMAIN } else { EXIT_BAD_INPUT })
        }
    }
}

fn read_matrix(path: Option<&Path>) -> Result<IntegerMatrix, Error> {
    let path = path.ok_or_else(|| Error::InvalidParameter("--matrix is required".into()))?;
    std::fs::read_to_string(path)?.parse()
}

fn check_tolerances(o: &Options) -> Result<(), Error> {
    let positive = [("delta", Some(o.delta)), ("tol-split", Some(o.tol_split)), ("tol-rel", o.tol_rel)];
    for (name, v) in positive {
        if let Some(v) = v {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!("--{name} must be positive, got {v}")));
            }
        }
    }
    Ok(())
}

fn print_json(v: &serde_json::Value) -> Result<(), Error> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: &Cli) -> Result<u8, Error> {
    let o = &cli.opts;
    check_tolerances(o)?;
    match &cli.command {
        Command::Group { op } => {
            let group = AbcGroup::new(read_matrix(o.matrix.as_deref())?);
            match op {
                GroupOp::Normalize { word } => {
                    let w: Word = word.join(" ").parse()?;
                    let g = group.from_word(&w)?;
                    let canonical = group.to_word(&g);
                    println!("normal form: {g}");
                    if canonical.is_empty() {
                        println!("word: (empty)");
                    } else {
                        println!("word: {canonical}");
                    }
                    println!("{}", if group.is_identity(&g) { "identity" } else { "nontrivial" });
                }
                GroupOp::ConjPower { i, k } => {
                    let w = group.conjugate_power_word(*i, *k)?;
                    println!("{}", if w.is_empty() { "identity".to_string() } else { w.to_string() });
                }
            }
            Ok(0)
        }
        Command::Spectral => {
            let a = read_matrix(o.matrix.as_deref())?;
            let report = check_hyperbolic(&a, o.delta)?;
            if report.verdict != Verdict::Hyperbolic {
                print_json(&json!({ "hyperbolicity": report }))?;
                eprintln!("error: matrix is not hyperbolic ({})", report.verdict);
                return Ok(EXIT_BAD_INPUT);
            }
            let (_, s) = hyperbolic_splitting(&a, o.delta, o.tol_split)?;
            let choice = find_k(&a, &s, DEFAULT_K_CAP)?;
            print_json(&json!({
                "hyperbolicity": report,
                "dim_u": s.dim_u,
                "dim_s": s.dim_s,
                "residuals": s.residuals(&a.to_f64()),
                "iterate": choice,
            }))?;
            Ok(0)
        }
        Command::Constants { eta1, eps0, eps1 } => {
            let a = read_matrix(o.matrix.as_deref())?;
            let report = check_hyperbolic(&a, o.delta)?;
            if report.verdict != Verdict::Hyperbolic {
                print_json(&serde_json::to_value(&report)?)?;
                eprintln!("error: matrix is not hyperbolic ({})", report.verdict);
                return Ok(EXIT_BAD_INPUT);
            }
            let (_, s) = hyperbolic_splitting(&a, o.delta, o.tol_split)?;
            let overrides = Overrides {
                eta1: *eta1,
                eps0: *eps0,
                eps1: *eps1,
            };
            let bounds = ManifoldBounds::for_ell(o.ell);
            let estimator = bounds.as_ref().map(|b| b as &dyn rigidity_core::spectral::ConstantEstimator);
            let c = compute_constants(&a, &s, o.ell, o.alpha.unwrap_or(DEFAULT_ALPHA), overrides, estimator)?;
            print_json(&serde_json::to_value(&c)?)?;
            if let Some(dir) = &o.out {
                let meta = Metadata::new(&a, &c, o.grid.unwrap_or(0), o.seed);
                std::fs::create_dir_all(dir)?;
                let body = json!({ "metadata": meta.to_json(), "constants": c });
                std::fs::write(dir.join("constants.json"), serde_json::to_string_pretty(&body)? + "\n")?;
            }
            Ok(0)
        }
        Command::Verify { config } => {
            let (mut cfg, base) = ActionConfig::from_file(config)?;
            if o.tol_rel.is_some() {
                cfg.tol_rel = o.tol_rel;
            }
            let a = match &o.matrix {
                Some(p) => read_matrix(Some(p))?,
                None => cfg.load_matrix(&base)?,
            };
            let act = cfg.build(&a, o.grid)?;
            let mut params = PipelineParams {
                alpha: o.alpha.unwrap_or(DEFAULT_ALPHA),
                delta: o.delta,
                tol_split: o.tol_split,
                ..PipelineParams::default()
            }
            .with_config(&cfg, o.alpha.is_some());
            params.audit.seed = o.seed;
            let out = run_pipeline(&act, &params)?;
            let r = &out.report;
            let code = if r.failures() > 0 { EXIT_AUDIT_FAILURE } else { 0 };
            let meta = Metadata::new(&a, &out.constants, act.manifold.grid_resolution, o.seed);
            if let Some(dir) = &o.out {
                report::write_outputs(dir, &meta, &act.family, &out, code as i32)?;
            }
            let verdict = r.sweep.verdict.map(|v| v.to_string()).unwrap_or_default();
            println!("family: {}", act.family);
            println!("verdict: {verdict}");
            println!(
                "records: {} ok, {} hypothesis_violated, {} fail",
                r.ok, r.hypothesis_violated, r.failed
            );
            println!(
                "d(f,id) = {}, d(g,id) = {}, eps = {}",
                r.hypotheses.d_f,
                r.hypotheses.d_g,
                r.hypotheses.eps.map(|e| e.to_string()).unwrap_or_else(|| "unknown".into())
            );
            println!("exit: {code}");
            Ok(code)
        }
    }
}
