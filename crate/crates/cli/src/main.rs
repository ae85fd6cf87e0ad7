//! `afem-lab`: adaptive finite element experiments from the command line.

mod settings;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use afem_core::analysis::{
    fit_rate_loglog, random_criterion_instance, rlinear_constants_from_criterion, rlinear_from_tailsum,
    tailsum_from_rlinear, verify_axioms, AxiomReport, DEFAULT_WINDOW, Q_RED,
};
use afem_core::driver::{run_exact, run_nested, run_single, run_uniform, weighted_cost_table, Algorithm, History, RunConfig};
use afem_core::fem::{assemble_a, solve_galerkin_exact, DiscreteFunction, ProblemDef, Space};
use afem_core::iteration::{zarantonello_contraction_bound, zarantonello_update};
use afem_core::mesh::Mesh;
use afem_core::problems::{self, ZSHAPE_ALPHA, ZSHAPE_LIPSCHITZ};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rayon::prelude::*;

use settings::{parse_list, RunFlags, UsageError};

#[derive(Parser)]
#[command(name = "afem-lab", version, about = "Adaptive FEM experiments: runs, parameter sweeps and verification reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one adaptive algorithm and write its history as CSV
    Run(RunArgs),
    /// Run a theta x lambda grid and write the weighted-cost table
    Sweep(SweepArgs),
    /// Small-scale checks of the axioms, solvers and sequence lemmas
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    flags: RunFlags,
    /// CSV output file (default: standard output)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep all levels and write an axiom report to this file
    #[arg(long)]
    axioms: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    flags: RunFlags,
    /// Comma-separated marking parameters
    #[arg(long)]
    thetas: Option<String>,
    /// Comma-separated solver parameters (lambda for single, lambda-alg for nested)
    #[arg(long)]
    lambdas: Option<String>,
    /// Threshold factor: a cell is evaluated at the first step with eta <= factor * eta_0
    #[arg(long = "eta-factor")]
    eta_factor: Option<f64>,
    /// Concurrent runs (capped by AFEM_LAB_THREADS)
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Size of the verification run
    #[arg(long = "max-dofs", default_value_t = 5000)]
    max_dofs: usize,
    /// Random sequence pairs for the lemma checks
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<afem_core::AfemError> for Failure {
    fn from(e: afem_core::AfemError) -> Self {
        Failure::Run(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, result) = match cli.command {
        Command::Run(a) => ("run", cmd_run(a)),
        Command::Sweep(a) => ("sweep", cmd_sweep(a)),
        Command::Verify(a) => ("verify", cmd_verify(a)),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let mut cmd = Cli::command();
            cmd.build();
            let sub = cmd.find_subcommand_mut(name).expect("registered subcommand").clone();
            sub.bin_name(format!("afem-lab {name}")).error(ErrorKind::ValueValidation, msg).exit()
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load_problem(name: &str) -> Result<(ProblemDef, Mesh), Failure> {
    problems::by_name(name).map_err(|e| Failure::Usage(e.to_string()))
}

fn run_algorithm(algo: Algorithm, prob: &ProblemDef, mesh: &Mesh, cfg: &RunConfig) -> afem_core::Result<History> {
    match algo {
        Algorithm::Exact => run_exact(prob, mesh, cfg),
        Algorithm::Uniform => run_uniform(prob, mesh, cfg),
        Algorithm::Single => run_single(prob, mesh, cfg),
        Algorithm::Nested => run_nested(prob, mesh, cfg),
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Run(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn summary(problem: &str, hist: &History) -> String {
    let mut s = String::new();
    let series = hist.level_series();
    let _ = writeln!(s, "problem: {problem}");
    let _ = writeln!(s, "algorithm: {}", hist.algorithm.name());
    let _ = writeln!(s, "levels: {}", hist.n_levels());
    let _ = writeln!(s, "steps: {}", hist.records.len());
    if let Some(r) = hist.records.last() {
        let _ = writeln!(s, "final n_dof: {}", r.n_dof);
        let _ = writeln!(s, "final eta: {:e}", r.eta);
        let _ = writeln!(s, "cumulative cost: {}", r.cum_cost);
    }
    let x: Vec<f64> = series.iter().map(|p| p.0).collect();
    let y: Vec<f64> = series.iter().map(|p| p.1).collect();
    let c: Vec<f64> = series.iter().map(|p| p.2).collect();
    match (fit_rate_loglog(&x, &y, DEFAULT_WINDOW), fit_rate_loglog(&c, &y, DEFAULT_WINDOW)) {
        (Ok(a), Ok(b)) => {
            let _ = writeln!(s, "rate of eta vs n_dof: {a:.4}");
            let _ = writeln!(s, "rate of eta vs cumulative cost: {b:.4}");
        }
        _ => {
            let _ = writeln!(s, "rates: fewer than 3 levels");
        }
    }
    if let Some(q) = hist.q_alg.iter().copied().reduce(f64::max) {
        let _ = writeln!(s, "largest certified solver contraction: {q:.4}");
    }
    if let Some(q) = hist.q_sym {
        let _ = writeln!(s, "linearization contraction: {q:.4}");
    }
    s
}

fn axiom_text(r: &AxiomReport) -> String {
    let mut s = String::new();
    let worst = r.reduction_ratios.iter().copied().fold(0.0, f64::max);
    let _ = writeln!(s, "levels: {}", r.levels);
    let _ = writeln!(
        s,
        "A2 reduction: {} (worst ratio {worst:.4}, q_red {Q_RED:.4}, {} steps)",
        if r.reduction_holds { "PASS" } else { "FAIL" },
        r.reduction_ratios.len()
    );
    let _ = writeln!(s, "A1 stability ratio (max): {:.4}", r.stability_max);
    match r.reliability_max {
        Some(x) => writeln!(s, "A3 reliability ratio (max): {x:.4}"),
        None => writeln!(s, "A3 reliability ratio: no exact solution"),
    }
    .ok();
    let _ = writeln!(s, "QM quasi-monotonicity ratio (max): {:.4}", r.quasi_monotonicity_max);
    let _ = writeln!(s, "A4 orthogonality partial-sum ratio (max): {:.4}", r.orthogonality_max);
    match r.pythagoras_max_residual {
        Some(x) => writeln!(s, "Pythagoras relative residual (max): {x:.3e}"),
        None => writeln!(s, "Pythagoras: not applicable (non-symmetric problem)"),
    }
    .ok();
    s
}

fn cmd_run(mut args: RunArgs) -> Result<ExitCode, Failure> {
    let extra = args.flags.load(&["out", "axioms"])?;
    for (k, v) in extra {
        match k.as_str() {
            "out" => args.out = args.out.or(Some(PathBuf::from(v))),
            _ => args.axioms = args.axioms.or(Some(PathBuf::from(v))),
        }
    }
    let problem = args.flags.problem()?.to_string();
    let (prob, mesh) = load_problem(&problem)?;
    let algo = args.flags.algorithm()?;
    let mut cfg = args.flags.run_config()?;
    cfg.verification = args.axioms.is_some();
    let hist = run_algorithm(algo, &prob, &mesh, &cfg)?;
    write_or_print(args.out.as_deref(), &hist.to_csv())?;
    let mut text = summary(&problem, &hist);
    if let Some(path) = &args.axioms {
        let report = verify_axioms(&prob, &hist, cfg.theta, cfg.seed)?;
        write_or_print(Some(path), &axiom_text(&report))?;
        let _ = writeln!(text, "axiom report: {}", path.display());
    }
    if let Some(out) = &args.out {
        let _ = writeln!(text, "csv: {}", out.display());
        print!("{text}");
    } else {
        eprint!("{text}");
    }
    Ok(ExitCode::SUCCESS)
}

fn thread_count(jobs: Option<usize>) -> Result<usize, Failure> {
    let cap = match std::env::var("AFEM_LAB_THREADS") {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Usage(format!("AFEM_LAB_THREADS must be a positive integer, got `{v}`")))?,
        Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    Ok(jobs.unwrap_or(cap).clamp(1, cap))
}

fn cmd_sweep(mut args: SweepArgs) -> Result<ExitCode, Failure> {
    let extra = args.flags.load(&["thetas", "lambdas", "eta-factor", "jobs", "out"])?;
    for (k, v) in extra {
        match k.as_str() {
            "thetas" => args.thetas = args.thetas.or(Some(v)),
            "lambdas" => args.lambdas = args.lambdas.or(Some(v)),
            "eta-factor" => {
                args.eta_factor =
                    args.eta_factor.or(Some(v.parse().map_err(|_| Failure::Usage(format!("invalid eta-factor `{v}`")))?))
            }
            "jobs" => args.jobs = args.jobs.or(Some(v.parse().map_err(|_| Failure::Usage(format!("invalid jobs `{v}`")))?)),
            _ => args.out = args.out.or(Some(PathBuf::from(v))),
        }
    }
    let problem = args.flags.problem()?.to_string();
    let (prob, mesh) = load_problem(&problem)?;
    let algo = args.flags.algorithm()?;
    if !matches!(algo, Algorithm::Single | Algorithm::Nested) {
        return Err(Failure::Usage("sweeps need --algo single or nested".into()));
    }
    let base = args.flags.run_config()?;
    let thetas = match &args.thetas {
        Some(t) => parse_list("thetas", t)?,
        None => vec![base.theta],
    };
    let lambdas = match &args.lambdas {
        Some(l) => parse_list("lambdas", l)?,
        None if algo == Algorithm::Single => vec![base.lambda],
        None => vec![base.zarantonello.lambda_alg],
    };
    let factor = args.eta_factor.unwrap_or(1e-2);
    let grid: Vec<(f64, f64)> = thetas.iter().flat_map(|&t| lambdas.iter().map(move |&l| (t, l))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(args.jobs)?)
        .build()
        .map_err(|e| Failure::Run(e.to_string()))?;
    let runs: Vec<afem_core::Result<History>> = pool.install(|| {
        grid.par_iter()
            .map(|&(theta, lambda)| {
                let mut cfg = RunConfig { theta, ..base.clone() };
                if algo == Algorithm::Single {
                    cfg.lambda = lambda;
                } else {
                    cfg.zarantonello.lambda_alg = lambda;
                }
                run_algorithm(algo, &prob, &mesh, &cfg)
            })
            .collect()
    });
    let runs = runs.into_iter().collect::<afem_core::Result<Vec<_>>>()?;
    let pairs: Vec<((f64, f64), &History)> = grid.iter().copied().zip(runs.iter()).collect();
    let table = weighted_cost_table(&pairs, factor);
    write_or_print(args.out.as_deref(), &table.to_csv())?;
    let mut text = String::new();
    let _ = writeln!(text, "problem: {problem}, algorithm: {}, threshold: eta <= {factor:e} eta_0", algo.name());
    for (r, best) in table.row_minima(false).iter().enumerate() {
        match best {
            Some(c) => writeln!(text, "theta {}: cheapest lambda {}", table.thetas[r], table.lambdas[*c]),
            None => writeln!(text, "theta {}: threshold not reached", table.thetas[r]),
        }
        .ok();
    }
    if args.out.is_some() {
        print!("{text}");
    } else {
        eprint!("{text}");
    }
    Ok(ExitCode::SUCCESS)
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check_sequences(seed: u64, instances: usize) -> Result<Check, Failure> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let inst = random_criterion_instance(&mut rng);
        let r = rlinear_constants_from_criterion(&inst.a, &inst.b, inst.q, inst.c1, inst.c2, inst.delta)?;
        worst = worst.max(r.fit.max_violation);
        failures += usize::from(!r.fit.holds());
        let (_, fit) = rlinear_from_tailsum(&inst.a, 1.0)?;
        failures += usize::from(!fit.holds());
        if fit.q_lin > 0.0 && fit.q_lin < 1.0 {
            let (_, ratio) = tailsum_from_rlinear(&inst.a, fit.c_lin, fit.q_lin, 1.0)?;
            failures += usize::from(ratio > 1.0 + 1e-9);
            worst = worst.max(ratio);
        }
    }
    Ok(Check {
        name: "sequence lemmas",
        pass: failures == 0,
        detail: format!("{instances} instances, {failures} violations, worst ratio {worst:.6}"),
    })
}

fn check_zarantonello(seed: u64) -> Result<Check, Failure> {
    let (prob, mesh) = problems::zshape_nonlinear();
    let space = Arc::new(Space::new(Arc::new(mesh.uniform_refine().uniform_refine()), 1));
    let delta = 1.0 / ZSHAPE_LIPSCHITZ;
    let bound = zarantonello_contraction_bound(ZSHAPE_ALPHA, ZSHAPE_LIPSCHITZ, delta)?;
    let exact = solve_galerkin_exact(&space, &prob)?;
    let a = assemble_a(&space, &prob)?;
    let dist = |x: &[f64], y: &[f64]| {
        let d: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
        a.bilinear(&d, &d).max(0.0).sqrt()
    };
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut c = exact.coeffs.clone();
        for &d in space.free_dofs() {
            c[d] += rng.random::<f64>() - 0.5;
        }
        let u = DiscreteFunction::new(space.clone(), c)?;
        let phi = zarantonello_update(&prob, delta, &u)?;
        worst = worst.max(dist(&exact.coeffs, &phi.coeffs) / dist(&exact.coeffs, &u.coeffs));
    }
    Ok(Check {
        name: "Zarantonello contraction",
        pass: worst <= bound * (1.0 + 1e-6),
        detail: format!("worst ratio {worst:.4}, bound {bound:.4}"),
    })
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, Failure> {
    let (prob, mesh) = problems::kellogg();
    let cfg = RunConfig {
        verification: true,
        seed: args.seed,
        stop: afem_core::driver::StopRule { max_dofs: args.max_dofs, ..Default::default() },
        ..RunConfig::default()
    };
    let hist = run_single(&prob, &mesh, &cfg)?;
    let axioms = verify_axioms(&prob, &hist, cfg.theta, args.seed)?;
    let worst_q = hist.q_alg.iter().copied().fold(0.0, f64::max);
    let pyth = axioms.pythagoras_max_residual.unwrap_or(f64::INFINITY);
    let checks = vec![
        Check {
            name: "A2 reduction",
            pass: axioms.reduction_holds && !axioms.reduction_ratios.is_empty(),
            detail: format!(
                "{} steps, worst ratio {:.4} <= {Q_RED:.4}",
                axioms.reduction_ratios.len(),
                axioms.reduction_ratios.iter().copied().fold(0.0, f64::max)
            ),
        },
        Check { name: "Pythagoras", pass: pyth <= 1e-9, detail: format!("max relative residual {pyth:.3e}") },
        Check {
            name: "A4 quasi-orthogonality",
            pass: axioms.orthogonality_max <= 1.05,
            detail: format!("max partial-sum ratio {:.4} <= 1.05", axioms.orthogonality_max),
        },
        Check {
            name: "solver contraction",
            pass: worst_q < 1.0,
            detail: format!("{} levels, largest certified factor {worst_q:.4}", hist.q_alg.len()),
        },
        check_zarantonello(args.seed)?,
        check_sequences(args.seed, args.instances)?,
    ];
    let mut text = format!("verification run: kellogg, {} levels, {} dofs\n", hist.n_levels(), hist.records.last().map_or(0, |r| r.n_dof));
    for c in &checks {
        let _ = writeln!(text, "{}: {} ({})", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
    }
    text.push_str(&axiom_text(&axioms));
    if let Some(p) = &args.out {
        write_or_print(Some(p), &text)?;
    }
    print!("{text}");
    Ok(if checks.iter().all(|c| c.pass) { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
