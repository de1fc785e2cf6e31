//! `regot`: generate problems, run solvers, benchmark and plot.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use regot::bench::{
    emit_csv, emit_report_csv, emit_svg_plot, parse_report_csv, problem_from_arg, run_benchmark,
    Algorithm, BenchSpec, Metric,
};
use regot::dual::DualPoint;
use regot::problem::{save_problem, GeneratorSpec};
use regot::sinkhorn::{run_sinkhorn, SinkhornConfig};
use regot::splr::{run_splr, Execution, SplrConfig};

#[derive(Parser, Debug)]
#[command(
    name = "regot",
    version,
    about = "Entropic optimal transport solvers and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a problem instance and save it as a binary problem file.
    Gen {
        /// Generator: synth1-iid, synth1-diff or synth2 (or a problem file to re-save).
        spec: String,
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Solve one instance and optionally write its trace.
    Solve {
        /// Generator name or path to a problem file.
        #[arg(long, default_value = "synth2")]
        problem: String,
        #[command(flatten)]
        args: ProblemArgs,
        #[arg(long, default_value = "splr", value_parser = parse_algo)]
        algo: Algorithm,
        #[command(flatten)]
        splr: SplrArgs,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        /// Stop once the marginal error reaches this value; 0 runs all iterations.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Write the per-iteration trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a benchmark described by a keyfile.
    Bench {
        /// Flat `key = value` file; keys match the `solve` flags.
        #[arg(long)]
        spec: PathBuf,
        /// Report CSV (overrides the keyfile's `output`).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write an SVG plot (overrides the keyfile's `plot`).
        #[arg(long)]
        plot: Option<PathBuf>,
        #[arg(long, default_value = "marginal", value_parser = parse_metric)]
        metric: Metric,
    },
    /// Plot one or more benchmark reports as SVG.
    Plot {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long, default_value = "marginal", value_parser = parse_metric)]
        metric: Metric,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args, Debug)]
struct ProblemArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 64)]
    m: usize,
    /// Point dimension for Synthetic I.
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Regularization; problem files keep their stored value unless given.
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Args, Debug)]
struct SplrArgs {
    #[arg(long)]
    tau_max: Option<f64>,
    /// Symbolic refresh period.
    #[arg(long = "S")]
    refresh_period: Option<usize>,
    /// Sinkhorn sweeps per candidate; 0 disables candidates.
    #[arg(long = "J")]
    sinkhorn_candidates: Option<usize>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    /// Overlap the Sinkhorn candidate with the symbolic analysis.
    #[arg(long)]
    overlap: bool,
}

impl SplrArgs {
    fn config(&self, max_iter: usize, tol: f64) -> SplrConfig {
        let d = SplrConfig::default();
        SplrConfig {
            tau_max: self.tau_max.unwrap_or(d.tau_max),
            refresh_period: self.refresh_period.unwrap_or(d.refresh_period),
            sinkhorn_candidates: self.sinkhorn_candidates.unwrap_or(d.sinkhorn_candidates),
            density: self.density.unwrap_or(d.density),
            c1: self.c1.unwrap_or(d.c1),
            c2: self.c2.unwrap_or(d.c2),
            max_iter,
            tol,
            execution: if self.overlap {
                Execution::Overlapped
            } else {
                Execution::Serial
            },
            ..d
        }
    }
}

fn parse_algo(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: regot::Error| e.to_string())
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: regot::Error| e.to_string())
}

fn generator(problem: &str, args: &ProblemArgs) -> GeneratorSpec {
    let (kind, path) = problem_from_arg(problem);
    GeneratorSpec {
        kind,
        n: args.n,
        m: args.m,
        d: args.d,
        seed: args.seed,
        path,
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Gen {
            spec,
            problem,
            output,
        } => {
            let g = generator(&spec, &problem);
            let p = g
                .generate(problem.eta)
                .with_context(|| format!("generating {spec}"))?;
            save_problem(&p, &output)?;
            println!(
                "wrote {} ({}x{}, eta {}) to {}",
                g.describe(),
                p.n(),
                p.m(),
                p.eta(),
                output.display()
            );
        }
        Command::Solve {
            problem,
            args,
            algo,
            splr,
            max_iter,
            tol,
            trace,
        } => {
            let g = generator(&problem, &args);
            let p = g
                .generate(args.eta)
                .with_context(|| format!("loading problem {problem}"))?;
            let x0 = DualPoint::zeros(p.n(), p.m());
            let (_, tr) = match algo {
                Algorithm::Sinkhorn => {
                    let cfg = SinkhornConfig {
                        max_iter,
                        record_every: 1,
                        tol,
                    };
                    run_sinkhorn(&x0, &p, &cfg)?
                }
                Algorithm::Splr => run_splr(&x0, &p, &splr.config(max_iter, tol))?,
            };
            let Some(last) = tr.last() else {
                bail!("solver produced no trace rows");
            };
            println!(
                "{algo} on {}: iter {} wall_ms {:.3} f {:.17e} marginal_error {:.3e} duality_gap {:.3e}",
                g.describe(),
                last.iter,
                last.wall_ms,
                last.f,
                last.marginal_error,
                last.duality_gap
            );
            if let Some(path) = trace {
                emit_csv(&tr, &path)?;
            }
        }
        Command::Bench {
            spec,
            output,
            plot,
            metric,
        } => {
            let text = fs::read_to_string(&spec)
                .with_context(|| format!("reading keyfile {}", spec.display()))?;
            let bs = BenchSpec::from_keyfile(&text)
                .with_context(|| format!("parsing keyfile {}", spec.display()))?;
            let Some(output) = output.or_else(|| bs.output.clone()) else {
                bail!("no report path: pass -o or set `output` in the keyfile");
            };
            let report = run_benchmark(&bs)?;
            let rows = report.rows();
            emit_report_csv(&rows, &output)?;
            for r in &rows {
                println!(
                    "{:>8} iter {:>6} median wall_ms {:>10.3} marginal_error {:.3e}",
                    r.algo, r.iter, r.wall_ms, r.marginal_error
                );
            }
            if let Some(path) = plot.or_else(|| bs.plot.clone()) {
                emit_svg_plot(&rows, metric, &path)?;
            }
        }
        Command::Plot {
            reports,
            metric,
            output,
        } => {
            let mut rows = Vec::new();
            for path in &reports {
                let file = fs::File::open(path)
                    .with_context(|| format!("opening report {}", path.display()))?;
                rows.extend(
                    parse_report_csv(file)
                        .with_context(|| format!("parsing report {}", path.display()))?,
                );
            }
            emit_svg_plot(&rows, metric, &output)?;
        }
    }
    Ok(())
}
