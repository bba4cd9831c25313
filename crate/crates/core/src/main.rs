use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nsx_core::harness::{self, HarnessError};
use nsx_core::lang::{self, LangError};
use nsx_core::mixed::{self, SolveConfig, SolveError, Verdict};
use nsx_core::nnet::{self, Dataset, MlpModel, NnetError, Optimizer, TrainConfig};
use nsx_core::symsolv::SmtBridge;

const EXIT_UNSAT: u8 = 1;
const EXIT_UNKNOWN: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_INTERNAL: u8 = 70;

#[derive(Parser)]
#[command(name = "nsx", version, about = "Solve constraints that mix symbolic formulas with learned program relations")]
struct Cli {
    /// Worker threads for trials and sampling (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and type-check a constraint file.
    Check {
        file: PathBuf,
        /// Print the canonical form of the file.
        #[arg(long)]
        print_ast: bool,
    },
    /// Train a network on CSV data.
    Train(TrainArgs),
    /// Run a built-in program on random inputs and write the observations as CSV.
    Sample {
        #[arg(long)]
        program: String,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a constraint file.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Print the full key=value report instead of the verdict line.
        #[arg(long)]
        report: bool,
    },
    /// Run a benchmark suite.
    Bench {
        #[arg(long, value_enum, default_value_t = Suite::Loops)]
        suite: Suite,
        /// Restrict the loop suite to these programs.
        #[arg(long = "program")]
        programs: Vec<String>,
        /// Executions sampled per program (default: per program).
        #[arg(long)]
        runs: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Print per-program key=value reports after the table.
        #[arg(long)]
        report: bool,
    },
    /// Rank the inputs of a trained model by weight influence.
    Explain { model: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Loops,
    Exploit,
}

#[derive(Clone, Copy, ValueEnum)]
enum Opt {
    Adam,
    Sgd,
}

#[derive(Args)]
struct TrainArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated input columns.
    #[arg(long = "in", value_delimiter = ',', required = true)]
    inputs: Vec<String>,
    /// Comma-separated output columns.
    #[arg(long = "out", value_delimiter = ',', required = true)]
    outputs: Vec<String>,
    /// Where to write the model.
    #[arg(long)]
    model: PathBuf,
    /// Hidden layer widths, comma-separated.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = Opt::Adam)]
    optimizer: Opt,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SolverArgs {
    /// Enumerations per gradient-search trial.
    #[arg(long)]
    max_enum: Option<usize>,
    /// Gradient-search restarts per symbolic pick.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Report exhausted searches as UNSAT.
    #[arg(long)]
    compat_unsat: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn config(&self) -> Result<SolveConfig, Failure> {
        let mut cfg = SolveConfig::default();
        if let Some(m) = self.max_enum {
            if m == 0 {
                return Err(Failure::usage("--max-enum must be at least 1"));
            }
            cfg.search.max_enumerations = m;
        }
        if let Some(t) = self.trials {
            if t == 0 {
                return Err(Failure::usage("--trials must be at least 1"));
            }
            cfg.max_trial1 = t;
        }
        if let Some(a) = self.alpha {
            cfg.loss.alpha = a;
        }
        if let Some(b) = self.beta {
            cfg.loss.beta = b;
        }
        cfg.loss.validate().map_err(|e| Failure::usage(e.to_string()))?;
        cfg.compat_unsat = self.compat_unsat;
        cfg.search.seed = self.seed;
        cfg.smt = SmtBridge::from_env().map(Arc::new);
        Ok(cfg)
    }
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Failure {
        Failure { code: EXIT_USAGE, msg: msg.into() }
    }

    fn data(msg: impl Into<String>) -> Failure {
        Failure { code: EXIT_DATA, msg: msg.into() }
    }

    fn internal(msg: impl Into<String>) -> Failure {
        Failure { code: EXIT_INTERNAL, msg: msg.into() }
    }
}

impl From<LangError> for Failure {
    fn from(e: LangError) -> Failure {
        Failure::data(e.to_string())
    }
}

impl From<NnetError> for Failure {
    fn from(e: NnetError) -> Failure {
        match e {
            NnetError::NonFinite { .. } => Failure::internal(e.to_string()),
            e => Failure::data(e.to_string()),
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Failure {
        match e {
            SolveError::Sym(_) => Failure::internal(e.to_string()),
            e => Failure::data(e.to_string()),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Failure {
        match e {
            HarnessError::UnknownProgram(_) | HarnessError::Precondition(_) => Failure::usage(e.to_string()),
            HarnessError::Nnet(e) => e.into(),
            HarnessError::Solve(e) => e.into(),
            HarnessError::Lang(e) => e.into(),
            e => Failure::internal(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn check(file: &Path, print_ast: bool) -> Result<u8, Failure> {
    let cf = lang::parse(&read(file)?)?;
    if print_ast {
        print!("{}", lang::print(&cf));
    } else {
        println!(
            "ok: {} declarations, {} assertions, {} neural constraints",
            cf.decls.len(),
            cf.symbolic.len(),
            cf.neural.len()
        );
    }
    Ok(0)
}

fn train(a: &TrainArgs) -> Result<u8, Failure> {
    let data = Dataset::read_csv(&a.data).map_err(|e| Failure::data(format!("{}: {e}", a.data.display())))?;
    let mut cfg = match a.optimizer {
        Opt::Adam => TrainConfig::default(),
        Opt::Sgd => TrainConfig::sgd_baseline(),
    };
    if let Some(lr) = a.lr {
        cfg.optimizer = match a.optimizer {
            Opt::Adam => Optimizer::Adam { lr },
            Opt::Sgd => Optimizer::Sgd { lr },
        };
    }
    if let Some(h) = &a.hidden {
        cfg.hidden = h.clone();
    }
    if let Some(e) = a.epochs {
        cfg.max_epochs = e;
    }
    if let Some(p) = a.patience {
        cfg.patience = p;
    }
    if let Some(b) = a.batch_size {
        cfg.batch_size = b;
    }
    cfg.seed = a.seed;
    let (model, rep) = nnet::train(&data, &a.inputs, &a.outputs, &cfg)?;
    model.save(&a.model).map_err(|e| Failure::internal(format!("{}: {e}", a.model.display())))?;
    println!("model={}", a.model.display());
    println!("rows={}", data.len());
    println!("epochs={}", rep.epochs_run);
    println!("best_epoch={}", rep.best_epoch);
    println!("train_loss={}", rep.final_train_loss);
    match rep.accuracy {
        Some(acc) => println!("accuracy={acc:.4} held_out={}", rep.held_out),
        None => println!("accuracy=n/a"),
    }
    Ok(0)
}

fn sample(program: &str, n: usize, seed: u64, out: Option<&Path>) -> Result<u8, Failure> {
    let p = harness::builtin(program)?;
    let (data, stats) = harness::sample(p.as_ref(), n, seed)?;
    match out {
        Some(path) => {
            data.write_csv(path).map_err(|e| Failure::internal(format!("{}: {e}", path.display())))?;
            eprintln!("runs={} rows={} skipped={}", stats.runs, stats.rows, stats.skipped);
        }
        None => data.to_writer(std::io::stdout().lock())?,
    }
    Ok(0)
}

fn solve(file: &Path, args: &SolverArgs, report: bool) -> Result<u8, Failure> {
    let cfg = args.config()?;
    let cf = lang::parse(&read(file)?)?;
    let base = file.parent().unwrap_or(Path::new("."));
    let models = mixed::load_models(&cf, base)?;
    let r = mixed::solve(&cf, &models, &cfg)?;
    if report {
        print!("{}", r.report());
    } else {
        println!("{}", r.summary_line());
    }
    Ok(match r.verdict {
        Verdict::Sat(_) => 0,
        Verdict::Unsat => EXIT_UNSAT,
        Verdict::Unknown => EXIT_UNKNOWN,
    })
}

fn bench(suite: Suite, programs: &[String], runs: Option<usize>, args: &SolverArgs, report: bool) -> Result<u8, Failure> {
    let solve = args.config()?;
    match suite {
        Suite::Loops => {
            let all = harness::loop_suite();
            let chosen: Vec<_> = if programs.is_empty() {
                all.iter().collect()
            } else {
                programs
                    .iter()
                    .map(|n| all.iter().find(|p| p.name == n).ok_or_else(|| Failure::usage(format!("unknown program `{n}`"))))
                    .collect::<Result<_, _>>()?
            };
            let cfg = harness::LoopTaskConfig { runs, seed: args.seed, solve, ..Default::default() };
            let reports = chosen
                .iter()
                .map(|p| harness::run_loop_task(*p, &p.guard, &cfg))
                .collect::<Result<Vec<_>, _>>()?;
            print!("{}", harness::bench_table(&reports));
            if report {
                for r in &reports {
                    println!();
                    print!("{}", r.to_kv());
                }
            }
        }
        Suite::Exploit => {
            if !programs.is_empty() {
                return Err(Failure::usage("--program applies to the loop suite only"));
            }
            let mut cfg = harness::ExploitConfig { seed: args.seed, solve, ..Default::default() };
            if let Some(n) = runs {
                cfg.samples = n;
            }
            let r = harness::run_exploit_task(&harness::HttpParser::default(), &cfg)?;
            print!("{}", r.to_kv());
        }
    }
    Ok(0)
}

fn explain(path: &Path) -> Result<u8, Failure> {
    let m = MlpModel::load(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    for (name, score) in m.explain() {
        println!("{name} {score:.6}");
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Failure::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().map_err(|e| Failure::internal(e.to_string()))?;
    }
    match cli.cmd {
        Cmd::Check { file, print_ast } => check(&file, print_ast),
        Cmd::Train(a) => train(&a),
        Cmd::Sample { program, n, seed, out } => sample(&program, n, seed, out.as_deref()),
        Cmd::Solve { file, solver, report } => solve(&file, &solver, report),
        Cmd::Bench { suite, programs, runs, solver, report } => bench(suite, &programs, runs, &solver, report),
        Cmd::Explain { model } => explain(&model),
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
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("nsx: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
