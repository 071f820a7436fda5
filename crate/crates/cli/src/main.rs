//! `rksl`: analyze Runge-Kutta tableaux for stiff semilinear order,
//! stability, error-series consistency, and convergence behavior.
//!
//! Every subcommand is a thin adapter over the library; defaults come from
//! the library's documented config block and are overridable by flags only
//! (no environment variables). Exit codes: 0 success, 1 a requested
//! property failed to hold, 2 usage error.

use clap::{Args, Parser, Subcommand};
use rk_semilinear::conditions;
use rk_semilinear::defaults;
use rk_semilinear::harness;
use rk_semilinear::lte;
use rk_semilinear::problems;
use rk_semilinear::solver::{self, NewtonConfig};
use rk_semilinear::stability::{self, Verdict};
use rk_semilinear::tableau::{self, ButcherTableau};
use rk_semilinear::trees;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rksl", version, about = "Stiff semilinear order analysis for Runge-Kutta methods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Orders, stability verdicts, and the predicted convergence order
    Analyze(AnalyzeArgs),
    /// List rooted trees with redundancy flags and series weights
    Trees(TreesArgs),
    /// Stability function and A/AS/ASI/R-condition verdicts
    Stability(StabilityArgs),
    /// Cross-check the error-series routes against each other
    LteVerify(LteVerifyArgs),
    /// Integrate a built-in problem with constant steps
    Integrate(IntegrateArgs),
    /// Convergence study over a (step size, stiffness) grid
    Converge(ConvergeArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct TableauSource {
    /// Built-in method name (see `analyze --list`)
    #[arg(long)]
    catalog: Option<String>,
    /// Path to a tableau document
    #[arg(long)]
    file: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }

    fn analysis(message: impl Into<String>) -> Failure {
        Failure { code: 1, message: message.into() }
    }
}

impl TableauSource {
    fn load(&self) -> Result<ButcherTableau, Failure> {
        if let Some(name) = &self.catalog {
            return tableau::catalog_lookup(name).map_err(|e| Failure::usage(e.to_string()));
        }
        let path = self.file.as_ref().expect("clap enforces one source");
        let text = std::fs::read_to_string(path).map_err(|e| {
            Failure::usage(format!("cannot read tableau file {}: {e}", path.display()))
        })?;
        tableau::parse_tableau(&text)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: TableauSource,
    /// Residual tolerance for float-mode zero tests
    #[arg(long, default_value_t = defaults::TOL)]
    tol: f64,
    /// Largest tree order checked
    #[arg(long, default_value_t = defaults::MAX_ORDER)]
    max_order: usize,
    /// Also run the checker without the redundant-tree reduction
    #[arg(long)]
    no_reduction: bool,
    /// Print the per-tree condition table
    #[arg(long)]
    detail: bool,
    /// Fail (exit 1) unless all hold; comma-separated from:
    /// p-sl>=N, wso>=N, order>=N, a-stable, as-stable, asi-stable, r-condition
    #[arg(long)]
    require: Option<String>,
}

#[derive(Args)]
struct TreesArgs {
    /// List trees of orders 1..=N
    #[arg(long, default_value_t = defaults::MAX_ORDER)]
    max_order: usize,
    /// Only semi-lone-child-avoiding trees
    #[arg(long)]
    slca_only: bool,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    source: TableauSource,
}

#[derive(Args)]
struct LteVerifyArgs {
    #[command(flatten)]
    source: TableauSource,
    #[arg(long, default_value = "npr-scalar")]
    problem: String,
    #[arg(long, default_value_t = -1e3, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = 0.3)]
    t0: f64,
    /// Step size entering Z = hJ
    #[arg(long, default_value_t = 0.01)]
    h: f64,
    #[arg(long, default_value_t = 4)]
    max_order: usize,
    /// Largest tolerated relative gap between the series routes
    #[arg(long, default_value_t = defaults::TOL)]
    tol: f64,
}

#[derive(Args)]
struct IntegrateArgs {
    #[command(flatten)]
    source: TableauSource,
    #[arg(long, default_value = "npr-scalar")]
    problem: String,
    #[arg(long, default_value_t = -1e2, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = defaults::TIME_INTERVAL.0)]
    t0: f64,
    #[arg(long, default_value_t = defaults::TIME_INTERVAL.1)]
    tf: f64,
    #[arg(long)]
    h: f64,
    /// Write the trajectory table here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    source: TableauSource,
    #[arg(long, default_value = "npr-scalar")]
    problem: String,
    /// Comma-separated stiffness values, e.g. -1e2,-1e6
    #[arg(long, default_value = "-1e2,-1e4,-1e6", allow_hyphen_values = true)]
    lambdas: String,
    /// Either `2^-A..2^-B` or a comma-separated list of step sizes
    #[arg(long, default_value = "2^-3..2^-12")]
    h_grid: String,
    #[arg(long, default_value_t = defaults::TIME_INTERVAL.0)]
    t0: f64,
    #[arg(long, default_value_t = defaults::TIME_INTERVAL.1)]
    tf: f64,
    /// Exit 1 unless every fitted order reaches this minus 0.2
    #[arg(long)]
    require_order: Option<f64>,
    /// Output prefix: writes PREFIX.csv and PREFIX.summary.txt
    #[arg(long)]
    output: Option<PathBuf>,
    /// table or csv
    #[arg(long, default_value = "table")]
    format: String,
    /// Worker threads for study cells
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => run_analyze(args),
        Command::Trees(args) => run_trees(args),
        Command::Stability(args) => run_stability(args),
        Command::LteVerify(args) => run_lte_verify(args),
        Command::Integrate(args) => run_integrate(args),
        Command::Converge(args) => run_converge(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run_analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let tab = args.source.load()?;
    if args.max_order > defaults::MAX_ORDER_CAP {
        return Err(Failure::usage(format!(
            "--max-order {} exceeds the supported cap {}",
            args.max_order,
            defaults::MAX_ORDER_CAP
        )));
    }
    let (stage_order, stage_saturated) = tab.stage_order(args.tol);
    let classical = tab.classical_order(args.tol.max(1e-12));
    let (wso, wso_saturated) = conditions::weak_stage_order(&tab, args.tol);
    let reduced = conditions::semilinear_order(&tab, args.max_order, args.tol, true)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let report = stability::stability_report(&tab);
    let predicted = harness::predicted_order(&tab, args.tol);

    println!(
        "tableau {} (stages: {}, {}, {:?} mode)",
        tab.name(),
        tab.stages(),
        tab.structure(),
        tab.mode()
    );
    println!("  stage order:       {}{}", stage_order, if stage_saturated { "+" } else { "" });
    println!("  classical order:   {classical} (probed up to {})", defaults::CLASSICAL_ORDER_CAP);
    println!("  weak stage order:  {}{}", wso, if wso_saturated { "+" } else { "" });
    println!(
        "  semilinear order:  p_SL = {}{} (tol {:.1e}, max order {})",
        reduced.p_sl,
        if reduced.saturated() { "+" } else { "" },
        args.tol,
        args.max_order
    );
    if args.no_reduction {
        let full = conditions::semilinear_order(&tab, args.max_order, args.tol, false)
            .map_err(|e| Failure::usage(e.to_string()))?;
        println!("  semilinear order without reduction: p_SL = {}", full.p_sl);
        if args.detail {
            print!("{full}");
        }
    } else if args.detail {
        print!("{reduced}");
    }
    println!("  A-stability:   {}", report.a_stable);
    println!("  AS-stability:  {}", report.as_stable);
    println!("  ASI-stability: {}", report.asi_stable);
    println!("  R-condition:   {}", report.r_condition);
    println!("  predicted global order: q = {} ({})", predicted.q, predicted.branch);

    if let Some(requirements) = &args.require {
        for requirement in requirements.split(',').map(str::trim).filter(|r| !r.is_empty()) {
            let ok = if let Some(n) = requirement.strip_prefix("p-sl>=") {
                reduced.p_sl >= parse_usize(n)?
            } else if let Some(n) = requirement.strip_prefix("wso>=") {
                wso >= parse_usize(n)?
            } else if let Some(n) = requirement.strip_prefix("order>=") {
                classical >= parse_usize(n)?
            } else {
                match requirement {
                    "a-stable" => report.a_stable.verdict == Verdict::Holds,
                    "as-stable" => report.as_stable.verdict == Verdict::Holds,
                    "asi-stable" => report.asi_stable.verdict == Verdict::Holds,
                    "r-condition" => report.r_condition.verdict == Verdict::Holds,
                    other => {
                        return Err(Failure::usage(format!("unknown requirement `{other}`")))
                    }
                }
            };
            if !ok {
                return Err(Failure::analysis(format!("requirement `{requirement}` not met")));
            }
        }
    }
    Ok(())
}

fn parse_usize(text: &str) -> Result<usize, Failure> {
    text.parse().map_err(|_| Failure::usage(format!("expected an integer, got `{text}`")))
}

fn run_trees(args: TreesArgs) -> Result<(), Failure> {
    let all = trees::enumerate_trees_up_to(args.max_order)
        .map_err(|e| Failure::usage(e.to_string()))?;
    println!("{:<16} {:>5} {:>6} {:>10}", "tree", "order", "slca", "weight");
    let mut rows = 0;
    for tree in all {
        let slca = tree.is_semi_lone_child_avoiding();
        if args.slca_only && !slca {
            continue;
        }
        println!("{:<16} {:>5} {:>6} {:>10}", tree.encoding(), tree.order(), slca, tree.series_weight());
        rows += 1;
    }
    println!("{rows} trees");
    Ok(())
}

fn run_stability(args: StabilityArgs) -> Result<(), Failure> {
    let tab = args.source.load()?;
    let rf = stability::stability_function(&tab);
    print!("{}", stability::stability_report(&tab));
    let coeffs = |v: &[rk_semilinear::Scalar]| {
        v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
    };
    println!("  R(z) numerator coefficients:   [{}]", coeffs(&rf.numerator));
    println!("  R(z) denominator coefficients: [{}]", coeffs(&rf.denominator));
    Ok(())
}

fn run_lte_verify(args: LteVerifyArgs) -> Result<(), Failure> {
    let tab = args.source.load()?;
    let problem = problems::builtin_problem(&args.problem, args.lambda)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let z = problem.jacobian() * args.h;
    let tree = lte::lte_series_tree(&tab, &problem, args.t0, &z, args.max_order)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let direct = lte::lte_coeffs_direct(&tab, &problem, args.t0, &z, args.max_order)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let reference = lte::order3_reference(&tab, &problem, args.t0, &z)
        .map_err(|e| Failure::usage(e.to_string()))?;

    println!(
        "error series of {} on {} (lambda {:e}, t0 {}, Z = {}J)",
        tab.name(),
        problem.name(),
        args.lambda,
        args.t0,
        args.h
    );
    println!("{:>5} {:>14} {:>14} {:>12}", "order", "|tree route|", "|recursion|", "rel gap");
    let mut worst: f64 = 0.0;
    for i in 1..=args.max_order {
        let a = tree.step_coeff(i);
        let b = direct.step_coeff(i);
        let gap = (a - b).norm() / a.norm().max(b.norm()).max(1e-12);
        worst = worst.max(gap);
        println!("{:>5} {:>14.6e} {:>14.6e} {:>12.2e}", i, a.norm(), b.norm(), gap);
    }
    let mut closed: f64 = 0.0;
    for i in 1..=3.min(args.max_order) {
        let a = tree.step_coeff(i);
        let b = &reference[i - 1];
        closed = closed.max((a - b).norm() / a.norm().max(b.norm()).max(1e-12));
    }
    println!("closed-form agreement through order 3: {closed:.2e}");
    if worst > args.tol || closed > args.tol {
        return Err(Failure::analysis(format!(
            "series routes disagree: tree-vs-recursion {worst:.2e}, closed form {closed:.2e}, tol {:.1e}",
            args.tol
        )));
    }
    println!("series routes agree within {:.1e}", args.tol);
    Ok(())
}

fn run_integrate(args: IntegrateArgs) -> Result<(), Failure> {
    let tab = args.source.load()?;
    let problem = problems::builtin_problem(&args.problem, args.lambda)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let trajectory = solver::integrate(&tab, &problem, args.t0, args.tf, args.h, &NewtonConfig::default())
        .map_err(|e| Failure::analysis(e.to_string()))?;
    let error = (trajectory.final_state() - problem.exact_solution(args.tf)).norm()
        / (problem.dim() as f64).sqrt();
    let table = trajectory.to_delimited();
    match &args.output {
        Some(path) => {
            std::fs::write(path, table)
                .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
            println!("wrote {} rows to {}", trajectory.times.len(), path.display());
        }
        None => print!("{table}"),
    }
    println!(
        "final-time error vs exact solution: {error:.6e} ({} steps, {} Newton iterations)",
        trajectory.times.len() - 1,
        trajectory.total_newton()
    );
    Ok(())
}

fn parse_h_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(Failure::usage("--h-grid must not be empty"));
    }
    if let Some((lo, hi)) = trimmed.split_once("..") {
        let parse_pow = |s: &str| -> Result<u32, Failure> {
            s.trim()
                .strip_prefix("2^-")
                .and_then(|e| e.parse().ok())
                .ok_or_else(|| Failure::usage(format!("expected 2^-K, got `{s}`")))
        };
        let (a, b) = (parse_pow(lo)?, parse_pow(hi)?);
        if a > b {
            return Err(Failure::usage("grid exponents must be increasing"));
        }
        return Ok((a..=b).map(|k| 0.5_f64.powi(k as i32)).collect());
    }
    let grid: Result<Vec<f64>, _> = trimmed.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let grid = grid.map_err(|e| Failure::usage(format!("bad step size in --h-grid: {e}")))?;
    if grid.is_empty() || grid.iter().any(|&h| h <= 0.0) {
        return Err(Failure::usage("--h-grid needs positive step sizes"));
    }
    Ok(grid)
}

fn parse_lambdas(text: &str) -> Result<Vec<f64>, Failure> {
    let values: Result<Vec<f64>, _> =
        text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let values = values.map_err(|e| Failure::usage(format!("bad --lambdas: {e}")))?;
    if values.is_empty() {
        return Err(Failure::usage("--lambdas must not be empty"));
    }
    Ok(values)
}

fn run_converge(args: ConvergeArgs) -> Result<(), Failure> {
    let tab = args.source.load()?;
    let lambdas = parse_lambdas(&args.lambdas)?;
    let h_grid: Vec<f64> =
        parse_h_grid(&args.h_grid)?.iter().map(|h| h * (args.tf - args.t0)).collect();
    let study = harness::run_study(
        &tab,
        &args.problem,
        &lambdas,
        &h_grid,
        args.t0,
        args.tf,
        &NewtonConfig::default(),
        args.jobs,
    )
    .map_err(|e| Failure::usage(e.to_string()))?;

    let csv = study.to_csv();
    let summary = study.to_string();
    match &args.output {
        Some(prefix) => {
            let table_path = prefix.with_extension("csv");
            let summary_path = prefix.with_extension("summary.txt");
            std::fs::write(&table_path, &csv)
                .map_err(|e| Failure::usage(format!("cannot write {}: {e}", table_path.display())))?;
            std::fs::write(&summary_path, &summary).map_err(|e| {
                Failure::usage(format!("cannot write {}: {e}", summary_path.display()))
            })?;
            println!("wrote {} and {}", table_path.display(), summary_path.display());
            print!("{summary}");
        }
        None => {
            if args.format == "csv" {
                print!("{csv}");
            } else {
                print!("{summary}");
            }
        }
    }
    for cell in &study.cells {
        if let Some(failure) = &cell.failure {
            eprintln!("cell lambda {:e} h {:e} failed: {failure}", cell.lambda, cell.h);
        }
    }
    if let Some(required) = args.require_order {
        for (lambda, slope, _) in &study.observed_orders {
            if !(slope >= &(required - 0.2)) {
                return Err(Failure::analysis(format!(
                    "fitted order {slope:.3} at lambda {lambda:e} below required {required} - 0.2"
                )));
            }
        }
        println!("all fitted orders reach {required} - 0.2");
    }
    Ok(())
}
