use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use firmlab::output::{export_matrix, output_dir, write_atomic, write_run};
use firmlab::verify::load_extras;
use firmlab::{
    run_scenario, verify_all, CliError, Scenario, ScenarioConfig, VerifyOptions, EXIT_CONFIG,
    EXIT_PASS, EXIT_RUNTIME, EXIT_VERIFY_FAIL,
};
use firmlab_core::productspace::BlockOpKind;
use firmlab_core::Weights;
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "firmlab", version, about = "Iterate firmly nonexpansive maps and check their invariants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario configs in parallel.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Run the invariant suite.
    Verify {
        /// TOML file with extra `[[extra]]` operators to check.
        #[arg(long)]
        extra: Option<PathBuf>,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Random pairs per firm-nonexpansiveness check.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1e-9)]
        mc_tol: f64,
        #[arg(long, default_value_t = 1e-12)]
        algebraic_tol: f64,
        /// Skip the built-in scenario runs.
        #[arg(long)]
        no_scenarios: bool,
    },
    /// List the built-in scenarios.
    ListScenarios,
    /// Print a block operator as a dense CSV matrix.
    ExportMatrix {
        #[arg(long, value_enum)]
        op: MatrixOp,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
        /// Comma-separated weights for `q`; uniform when omitted.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixOp {
    Shift,
    M,
    L,
    Mdagger,
    Pdelta,
    PdeltaPerp,
    Q,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { configs } => run(&configs),
        Command::Verify { extra, seed, samples, mc_tol, algebraic_tol, no_scenarios } => {
            verify(extra, seed, samples, mc_tol, algebraic_tol, no_scenarios)
        }
        Command::ListScenarios => {
            for s in Scenario::ALL {
                println!("{:<22} {}", s.name(), s.description());
            }
            EXIT_PASS
        }
        Command::ExportMatrix { op, m, d, weights, out } => export(op, m, d, weights, out),
    };
    ExitCode::from(code as u8)
}

fn fail(e: &CliError) -> i32 {
    eprintln!("firmlab: {e}");
    e.exit_code()
}

fn run(paths: &[PathBuf]) -> i32 {
    let mut configs = Vec::new();
    for p in paths {
        match ScenarioConfig::from_path(p) {
            Ok(c) => configs.push(c),
            Err(e) => return fail(&e),
        }
    }
    let started = Instant::now();
    let results: Vec<_> = configs
        .par_iter()
        .map(|cfg| {
            let run = run_scenario(cfg)?;
            let files = write_run(&run, &output_dir(cfg))?;
            Ok::<_, CliError>((run, files))
        })
        .collect();

    let mut code = EXIT_PASS;
    for (path, result) in paths.iter().zip(results) {
        match result {
            Ok((run, files)) => {
                let s = &run.summary;
                println!("== {} ({})", s.scenario, path.display());
                print!("{}", firmlab::output::render_summary(s));
                println!("wall_time = {:.3}s", s.wall_time.as_secs_f64());
                for f in files {
                    println!("wrote {}", f.display());
                }
                if !s.passed() && code == EXIT_PASS {
                    code = EXIT_VERIFY_FAIL;
                }
            }
            Err(e) => {
                eprintln!("firmlab: {}: {e}", path.display());
                code = EXIT_RUNTIME;
            }
        }
    }
    println!("total wall_time = {:.3}s", started.elapsed().as_secs_f64());
    code
}

fn verify(
    extra: Option<PathBuf>,
    seed: u64,
    samples: usize,
    mc_tol: f64,
    algebraic_tol: f64,
    no_scenarios: bool,
) -> i32 {
    if samples == 0 || mc_tol.is_nan() || mc_tol <= 0.0 || algebraic_tol.is_nan() || algebraic_tol <= 0.0 {
        eprintln!("firmlab: samples and tolerances must be positive");
        return EXIT_CONFIG;
    }
    let extra = match extra.map(|p| load_extras(&p)).transpose() {
        Ok(e) => e.unwrap_or_default(),
        Err(e) => return fail(&e),
    };
    let opts = VerifyOptions {
        seed,
        samples,
        monte_carlo_tol: mc_tol,
        algebraic_tol,
        extra,
        scenarios: !no_scenarios,
    };
    let started = Instant::now();
    let report = verify_all(&opts);
    print!("{}", report.render());
    println!("wall_time = {:.3}s", started.elapsed().as_secs_f64());
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_VERIFY_FAIL
    }
}

fn export(op: MatrixOp, m: usize, d: usize, weights: Option<Vec<f64>>, out: Option<PathBuf>) -> i32 {
    let kind = match op {
        MatrixOp::Shift => BlockOpKind::Shift,
        MatrixOp::M => BlockOpKind::M,
        MatrixOp::L => BlockOpKind::L,
        MatrixOp::Mdagger => BlockOpKind::MDagger,
        MatrixOp::Pdelta => BlockOpKind::PDelta,
        MatrixOp::PdeltaPerp => BlockOpKind::PDeltaPerp,
        MatrixOp::Q => {
            let w = match weights {
                Some(w) => Weights::new(w),
                None => Weights::uniform(m),
            };
            match w {
                Ok(w) => BlockOpKind::Q(w),
                Err(e) => return fail(&CliError::Config(format!("weights: {e}"))),
            }
        }
    };
    let text = match export_matrix(kind, m, d) {
        Ok(t) => t,
        Err(e) => return fail(&e),
    };
    match out {
        None => {
            print!("{text}");
            EXIT_PASS
        }
        Some(p) => match write_atomic(&p, text.as_bytes()) {
            Ok(()) => EXIT_PASS,
            Err(e) => fail(&CliError::Runtime(format!("{}: {e}", p.display()))),
        },
    }
}
