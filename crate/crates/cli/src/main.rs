mod input;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;
use varlp::certify::{finite_repr_certificate, verify, Certificate, CertifyBudget, SamplingBudget};
use varlp::embed::{double_embed, up_norm, EmbedConfig, Embedder};
use varlp::exponents::RationalEnum;
use varlp::odenorm::{solver_registry, StepFn};
use varlp::seminorm::{cut_registry, default_schedule, seminorm_converge};
use varlp::seqspace::{double_norm, ladder_norm, ExponentLadder, VarMatrix};

use input::{read, read_step, BasisInput, MatrixInput, SeqInput};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Lib(#[from] varlp::Error),
    #[error("{0} propert{suffix} failed", suffix = if *.0 == 1 { "y" } else { "ies" })]
    Props(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.is_budget() => 3,
            CliError::Props(_) => 1,
            _ => 2,
        }
    }
}

fn lib<E: Into<varlp::Error>>(e: E) -> CliError {
    CliError::Lib(e.into())
}

#[derive(Parser)]
#[command(
    name = "varlp",
    version,
    about = "Varying-exponent L^p norms and their sequence-space embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// L^{p(.)} norm of a step function.
    Norm {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        p: PathBuf,
        /// "step" (exact) or "grid" (midpoint samples).
        #[arg(long, default_value = "step")]
        solver: String,
        /// Cells of the grid solver.
        #[arg(long, default_value_t = 10_000)]
        grid: usize,
    },
    /// Nested l^{p(.)} norm of a finite vector.
    Seqnorm {
        #[arg(long)]
        x: PathBuf,
    },
    /// Norm of a finite matrix in l^{q(.)}(l^{s(.)}).
    Doublenorm {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Bracket seminorms along the default schedule, as CSV.
    Seminorm {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        p: PathBuf,
        #[arg(long, default_value_t = 10)]
        stages: u32,
        #[arg(long, default_value_t = 10)]
        k_max: u32,
        #[command(flatten)]
        cuts: CutsArg,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stage maps of a step function into l^{r(.)} and their limit norm.
    Embed {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        p: PathBuf,
        #[arg(long, default_value_t = 20)]
        stages: u32,
        #[command(flatten)]
        stage: StageArgs,
        /// Final stages used for the limit and its Cauchy width.
        #[arg(long, default_value_t = varlp::embed::DEFAULT_WINDOW)]
        window: usize,
        /// Per-stage CSV trace.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Copy of a matrix's leading k x k block into l^{r(.)}(l^{r(.)}), as JSON.
    Doubleembed {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Finite-representability certificate for the span of a basis, or
    /// re-verification of an existing certificate.
    Certify(CertifyArgs),
    /// Rational enumeration: a prefix as CSV, or the first index in a bracket.
    Enum {
        /// Number of indices to list.
        #[arg(long, default_value_t = 16, conflicts_with = "find")]
        count: u64,
        /// Target exponent to search for.
        #[arg(long, requires = "delta")]
        find: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Search strictly after this index.
        #[arg(long, default_value = "0")]
        after: BigUint,
    },
    /// Runs every registered invariant check.
    Props {
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Args)]
struct CutsArg {
    /// Bracket cut strategy.
    #[arg(long, default_value = "breakpoints-dyadic")]
    cuts: String,
}

#[derive(Args)]
struct StageArgs {
    #[arg(long, default_value_t = 7)]
    k_max: u32,
    #[command(flatten)]
    cuts: CutsArg,
    /// Fixed connector width instead of the (n+1)/n ratio policy.
    #[arg(long)]
    delta: Option<f64>,
    /// Truncation level grows as slope · n.
    #[arg(long, default_value_t = 1.0)]
    slope: f64,
}

impl StageArgs {
    fn config(&self) -> Result<EmbedConfig, CliError> {
        Ok(EmbedConfig {
            truncation: varlp::approx::TruncationSchedule::new(self.slope).map_err(lib)?,
            k_max: self.k_max,
            cuts: self.cuts.cuts.clone(),
            delta: self.delta,
        })
    }
}

#[derive(Args)]
struct CertifyArgs {
    /// Certificate to re-check.
    #[arg(long, conflicts_with_all = ["basis", "p"])]
    verify: Option<PathBuf>,
    /// Sample multiplier for re-checking.
    #[arg(long, default_value_t = 10)]
    factor: usize,
    #[arg(long, required_unless_present = "verify")]
    basis: Option<PathBuf>,
    #[arg(long, required_unless_present = "verify")]
    p: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, required_unless_present = "verify")]
    seed: Option<u64>,
    #[arg(long, default_value_t = SamplingBudget::default().samples)]
    samples: usize,
    #[arg(long, default_value_t = SamplingBudget::default().refine_iters)]
    refine: usize,
    #[arg(long, default_value_t = CertifyBudget::default().max_stage)]
    max_stage: u32,
    #[command(flatten)]
    stage: StageArgs,
    /// Certificate destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn writer(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match out {
        Some(path) => fs::File::create(path)
            .map(|f| Box::new(io::BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            }),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn io_err(path: Option<&Path>) -> impl Fn(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.map_or_else(|| "<stdout>".to_string(), |p| p.display().to_string()),
        source,
    }
}

fn write_text(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    let mut w = writer(out)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(io_err(out))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable records");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct DoubleEmbedReport {
    k: usize,
    row_positions: Vec<String>,
    col_positions: Vec<String>,
    row_connectors: Vec<String>,
    col_connectors: Vec<String>,
    original: f64,
    embedded: f64,
    ratio: f64,
    bound: f64,
    holds: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Norm { f, p, solver, grid } => {
            let (fs, ps) = (read_step(&f)?, read_step(&p)?);
            let registry = solver_registry(grid);
            let solved = registry.get(&solver).map_err(lib)?.solve(&fs, &ps).map_err(lib)?;
            println!("{:?}", solved.terminal());
        }
        Command::Seqnorm { x } => {
            let input: SeqInput = read(&x)?;
            let ladder = ExponentLadder::new(input.connectors).map_err(lib)?;
            println!(
                "{:?}",
                ladder_norm(&input.x, &ladder, input.nesting.into()).map_err(lib)?
            );
        }
        Command::Doublenorm { matrix } => {
            let input: MatrixInput = read(&matrix)?;
            let m = VarMatrix::new(input.rows).map_err(lib)?;
            println!("{:?}", double_norm(&m, &input.outer, &input.inner).map_err(lib)?);
        }
        Command::Seminorm {
            f,
            p,
            stages,
            k_max,
            cuts,
            out,
        } => {
            let (fs, ps) = (read_step(&f)?, read_step(&p)?);
            let registry = cut_registry();
            let strategy = registry.get(&cuts.cuts).map_err(lib)?;
            let target = varlp::odenorm::lp_norm(&fs, &ps).map_err(lib)?;
            let rows = seminorm_converge(&fs, &ps, &default_schedule(&ps, stages, k_max, strategy)).map_err(lib)?;
            let mut csv = String::from("stage,n_value,nprime_value,lp_norm,gap\n");
            for r in rows {
                csv += &format!(
                    "{},{},{},{},{}\n",
                    r.stage,
                    r.n_value,
                    r.nprime_value,
                    target,
                    target - r.n_value
                );
            }
            write_text(out.as_deref(), &csv)?;
        }
        Command::Embed {
            f,
            p,
            stages,
            stage,
            window,
            trace,
        } => {
            let (fs, ps) = (read_step(&f)?, read_step(&p)?);
            let embedder = Embedder::new(ps, stage.config()?, Arc::new(RationalEnum::new())).map_err(lib)?;
            let (u, records) = embedder.embed_traced(&fs, stages).map_err(lib)?;
            if let Some(path) = trace.as_deref() {
                let mut csv = String::from("n,alpha,measure_c,atoms,stage_norm,lp_norm,quasi_ratio\n");
                for r in &records {
                    csv += &format!(
                        "{},{},{},{},{},{},{}\n",
                        r.n, r.alpha, r.measure_c, r.atoms, r.stage_norm, r.lp_norm, r.quasi_ratio
                    );
                }
                write_text(Some(path), &csv)?;
            }
            let (value, width) = up_norm(&u.with_window(window)).map_err(lib)?;
            println!("up_norm {value}");
            println!("cauchy_width {width}");
            println!("lp_norm {}", records[0].lp_norm);
        }
        Command::Doubleembed { matrix, k } => {
            let input: MatrixInput = read(&matrix)?;
            let m = VarMatrix::new(input.rows).map_err(lib)?;
            let d = double_embed(&m, &input.outer, &input.inner, k, &RationalEnum::new()).map_err(lib)?;
            let strings = |v: &[BigUint]| v.iter().map(|i| i.to_string()).collect();
            let report = DoubleEmbedReport {
                k,
                row_positions: strings(&d.row_positions),
                col_positions: strings(&d.col_positions),
                row_connectors: d.row_connectors.iter().map(|q| q.to_string()).collect(),
                col_connectors: d.col_connectors.iter().map(|q| q.to_string()).collect(),
                original: d.original,
                embedded: d.embedded,
                ratio: d.ratio,
                bound: d.bound,
                holds: d.holds(),
            };
            print!("{}", json(&report));
        }
        Command::Certify(args) => certify(args)?,
        Command::Enum {
            count,
            find,
            delta,
            after,
        } => {
            let r = RationalEnum::new();
            match (find, delta) {
                (Some(target), Some(delta)) => {
                    let (index, q) = r.find_index_above(target, delta, &after).map_err(lib)?;
                    println!("index,value\n{index},{q}");
                }
                _ => {
                    let mut csv = String::from("index,value\n");
                    for i in 1..=count {
                        csv += &format!("{i},{}\n", r.enum_rational(i).map_err(lib)?);
                    }
                    write_text(None, &csv)?;
                }
            }
        }
        Command::Props { seed } => {
            let reports = varlp::props::run_all(seed);
            let registry = varlp::props::props_registry();
            let mut failed = 0;
            for r in &reports {
                let description = registry.get(r.name).map(|p| p.description()).unwrap_or_default();
                let verdict = if r.passed { "ok" } else { "FAIL" };
                println!("{verdict:4} {:20} {description}: {}", r.name, r.detail);
                failed += usize::from(!r.passed);
            }
            if failed > 0 {
                return Err(CliError::Props(failed));
            }
        }
    }
    Ok(())
}

fn certify(args: CertifyArgs) -> Result<(), CliError> {
    if let Some(path) = args.verify {
        let cert: Certificate = read(&path)?;
        let check = verify(&cert, args.factor).map_err(lib)?;
        println!("placement_matches {}", check.placement_matches);
        println!("distortion {}", check.remeasured.distortion);
        println!("limit {}", 1.0 + cert.epsilon + cert.tolerance);
        println!("accepted {}", check.accepted);
        if !check.accepted {
            return Err(CliError::Invalid(format!(
                "{}: certificate does not re-verify",
                path.display()
            )));
        }
        return Ok(());
    }
    let (basis_path, p_path) = (args.basis.expect("required by clap"), args.p.expect("required by clap"));
    let seed = args.seed.expect("required by clap");
    let input: BasisInput = read(&basis_path)?;
    let basis = input
        .basis
        .iter()
        .enumerate()
        .map(|(i, r)| {
            StepFn::try_from(r)
                .map_err(|e| CliError::Invalid(format!("{}: field `basis[{i}]`: {e}", basis_path.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let p = read_step(&p_path)?;
    let budget = CertifyBudget {
        max_stage: args.max_stage,
        sampling: SamplingBudget {
            samples: args.samples,
            refine_iters: args.refine,
        },
    };
    let cert = finite_repr_certificate(&basis, &p, args.eps, budget, seed, args.stage.config()?).map_err(lib)?;
    write_text(args.out.as_deref(), &json(&cert))
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(value) = std::env::var("VARLP_THREADS") {
        let threads: usize = value
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Invalid(format!("VARLP_THREADS must be a positive integer, got {value:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Invalid(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
