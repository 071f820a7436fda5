//! Convergence studies over `(h, lambda)` grids: observed-order fits,
//! stiffness-uniformity diagnostics, and the predicted global order from
//! the order/stability analysis.

use crate::conditions;
use crate::problems::{self, ProblemError};
use crate::solver::{self, NewtonConfig, SolverError};
use crate::stability::{self, Verdict};
use crate::tableau::ButcherTableau;
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("order fit needs at least 3 usable points, have {0}")]
    TooFewPoints(usize),
    #[error("empty grid: {0}")]
    EmptyGrid(&'static str),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Global order predicted by the convergence theory for constant steps:
/// `p_SL + 1` when the classical order is exactly one above the semilinear
/// order and the stability-function condition holds, else `p_SL`.
#[derive(Debug, Clone)]
pub struct PredictedOrder {
    pub q: usize,
    pub branch: String,
    pub classical_order: usize,
    pub p_sl: usize,
    pub r_condition: Verdict,
}

pub fn predicted_order(tab: &ButcherTableau, tol: f64) -> PredictedOrder {
    let classical = tab.classical_order(tol.max(1e-12));
    let p_sl = conditions::semilinear_order(tab, crate::defaults::MAX_ORDER, tol, true)
        .expect("max order within cap")
        .p_sl;
    let r = stability::check_r_condition(tab);
    let superconvergent = classical == p_sl + 1 && r.verdict == Verdict::Holds;
    let (q, branch) = if superconvergent {
        (
            p_sl + 1,
            format!("superconvergence: p = {classical} = p_SL + 1 and the stability function condition holds"),
        )
    } else if classical != p_sl + 1 {
        (p_sl, format!("base: p = {classical} != p_SL + 1 = {}", p_sl + 1))
    } else {
        (p_sl, format!("base: stability function condition {}", r.verdict))
    };
    PredictedOrder { q, branch, classical_order: classical, p_sl, r_condition: r.verdict }
}

/// One `(lambda, h)` cell of a study.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub lambda: f64,
    pub h: f64,
    /// Final-time global error in the dimension-scaled Euclidean norm;
    /// `None` when the solver failed on this cell.
    pub error: Option<f64>,
    pub newton_total: usize,
    pub failure: Option<String>,
}

/// Errors over an `(h, lambda)` grid with per-lambda order fits.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub tableau: String,
    pub problem: String,
    pub t0: f64,
    pub tf: f64,
    pub lambdas: Vec<f64>,
    pub h_grid: Vec<f64>,
    /// Row-major: `cells[i * h_grid.len() + j]` is `lambdas[i]`, `h_grid[j]`.
    pub cells: Vec<CellResult>,
    /// `(lambda, fitted slope, fit residual)` per lambda.
    pub observed_orders: Vec<(f64, f64, f64)>,
    pub predicted: PredictedOrder,
    /// Scale of the exact solution, used by the saturation filter.
    pub solution_scale: f64,
    /// Errors below this measure the nonlinear solver, not the method.
    pub noise_floor: f64,
}

impl ConvergenceStudy {
    pub fn cell(&self, lambda_index: usize, h_index: usize) -> &CellResult {
        &self.cells[lambda_index * self.h_grid.len() + h_index]
    }

    /// Machine-readable table, `lambda,h,error,newton_total` per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,h,error,newton_total\n");
        for cell in &self.cells {
            let err = cell.error.map_or(String::from("failed"), |e| format!("{e:.17e}"));
            out.push_str(&format!("{:e},{:e},{},{}\n", cell.lambda, cell.h, err, cell.newton_total));
        }
        out
    }
}

impl fmt::Display for ConvergenceStudy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "convergence study: {} on {} over [{}, {}]",
            self.tableau, self.problem, self.t0, self.tf
        )?;
        writeln!(
            f,
            "predicted order q = {} ({}); classical p = {}, p_SL = {}",
            self.predicted.q, self.predicted.branch, self.predicted.classical_order, self.predicted.p_sl
        )?;
        writeln!(f, "{:>12} {:>10} {:>12}", "lambda", "observed", "fit residual")?;
        for (lambda, slope, residual) in &self.observed_orders {
            writeln!(f, "{lambda:>12.3e} {slope:>10.3} {residual:>12.2e}")?;
        }
        let uniformity = uniformity_report(self);
        writeln!(
            f,
            "uniformity: error-constant spread {:.3}, growth over mildest lambda {:.3}",
            uniformity.ratio, uniformity.growth_ratio
        )
    }
}

/// Parse the CSV table back into cells (the inverse of `to_csv`).
pub fn read_study_csv(text: &str) -> Result<Vec<CellResult>, HarnessError> {
    let mut cells = Vec::new();
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(HarnessError::EmptyGrid("malformed study row"));
        }
        let lambda: f64 = parts[0].parse().map_err(|_| HarnessError::EmptyGrid("bad lambda"))?;
        let h: f64 = parts[1].parse().map_err(|_| HarnessError::EmptyGrid("bad h"))?;
        let error = if parts[2] == "failed" {
            None
        } else {
            Some(parts[2].parse().map_err(|_| HarnessError::EmptyGrid("bad error"))?)
        };
        let newton_total: usize =
            parts[3].trim().parse().map_err(|_| HarnessError::EmptyGrid("bad newton count"))?;
        cells.push(CellResult { lambda, h, error, newton_total, failure: None });
    }
    Ok(cells)
}

/// Default geometric step grid `2^-3 .. 2^-12`, scaled to the interval.
pub fn default_h_grid(t0: f64, tf: f64) -> Vec<f64> {
    let (lo, hi) = crate::defaults::H_GRID_EXPONENTS;
    (lo..=hi).map(|k| (tf - t0) * 0.5_f64.powi(k as i32)).collect()
}

/// Least-squares slope of `log error` against `log h` with the fit
/// residual; points below `100 eps * solution_scale` are dropped as
/// round-off saturated.
pub fn estimate_order(
    h_grid: &[f64],
    errors: &[f64],
    solution_scale: f64,
) -> Result<(f64, f64), HarnessError> {
    assert_eq!(h_grid.len(), errors.len());
    let cutoff = 100.0 * f64::EPSILON * solution_scale.max(f64::MIN_POSITIVE);
    let usable: Vec<(f64, f64)> = h_grid
        .iter()
        .zip(errors)
        .filter(|(_, &e)| e > cutoff)
        .map(|(&h, &e)| (h.ln(), e.ln()))
        .collect();
    if usable.len() < 3 {
        return Err(HarnessError::TooFewPoints(usable.len()));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = usable.iter().map(|(_, y)| y).sum::<f64>() / n;
    let cov: f64 = usable.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = usable.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let slope = cov / var;
    let intercept = my - slope * mx;
    let residual = (usable
        .iter()
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok((slope, residual))
}

/// Integrate every `(lambda, h)` cell from the exact initial state and fit
/// observed orders per lambda. Solver failures are recorded in their cell,
/// not fatal. `jobs > 1` distributes cells across threads; the result is
/// assembled by index and identical for any thread count.
pub fn run_study(
    tab: &ButcherTableau,
    problem_name: &str,
    lambdas: &[f64],
    h_grid: &[f64],
    t0: f64,
    tf: f64,
    cfg: &NewtonConfig,
    jobs: usize,
) -> Result<ConvergenceStudy, HarnessError> {
    if lambdas.is_empty() {
        return Err(HarnessError::EmptyGrid("no lambda values"));
    }
    if h_grid.is_empty() {
        return Err(HarnessError::EmptyGrid("no step sizes"));
    }
    // validate the problem name once up front
    problems::builtin_problem(problem_name, lambdas[0].min(-f64::MIN_POSITIVE))?;

    let tasks: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| h_grid.iter().map(move |&h| (l, h)))
        .collect();
    let run_cell = |&(lambda, h): &(f64, f64)| -> CellResult {
        let problem = match problems::builtin_problem(problem_name, lambda) {
            Ok(p) => p,
            Err(e) => {
                return CellResult { lambda, h, error: None, newton_total: 0, failure: Some(e.to_string()) }
            }
        };
        match solver::integrate(tab, &problem, t0, tf, h, cfg) {
            Ok(traj) => {
                let exact = problem.exact_solution(tf);
                let error = (traj.final_state() - exact).norm() / (problem.dim() as f64).sqrt();
                CellResult { lambda, h, error: Some(error), newton_total: traj.total_newton(), failure: None }
            }
            Err(e @ SolverError::IntegrationAborted { .. }) | Err(e) => CellResult {
                lambda,
                h,
                error: None,
                newton_total: 0,
                failure: Some(e.to_string()),
            },
        }
    };
    let cells = parallel_map(&tasks, jobs.max(1), run_cell);

    let sample = problems::builtin_problem(problem_name, lambdas[0])?;
    let solution_scale = sample.exact_solution(tf).norm() / (sample.dim() as f64).sqrt();

    // errors below the nonlinear-solve tolerance measure the solver, not
    // the method; exclude them from the order fit along with round-off
    let noise_floor = 10.0 * cfg.resolved_abs_tol(sample.dim());
    let mut observed_orders = Vec::with_capacity(lambdas.len());
    for (i, &lambda) in lambdas.iter().enumerate() {
        let errors: Vec<f64> = (0..h_grid.len())
            .map(|j| cells[i * h_grid.len() + j].error.unwrap_or(f64::NAN))
            .collect();
        let finite: Vec<(f64, f64)> = h_grid
            .iter()
            .zip(&errors)
            .filter(|(_, e)| e.is_finite() && **e > noise_floor)
            .map(|(&h, &e)| (h, e))
            .collect();
        let hs: Vec<f64> = finite.iter().map(|(h, _)| *h).collect();
        let es: Vec<f64> = finite.iter().map(|(_, e)| *e).collect();
        match estimate_order(&hs, &es, solution_scale) {
            Ok((slope, residual)) => observed_orders.push((lambda, slope, residual)),
            Err(_) => observed_orders.push((lambda, f64::NAN, f64::NAN)),
        }
    }

    Ok(ConvergenceStudy {
        tableau: tab.name().to_string(),
        problem: problem_name.to_string(),
        t0,
        tf,
        lambdas: lambdas.to_vec(),
        h_grid: h_grid.to_vec(),
        cells,
        observed_orders,
        predicted: predicted_order(tab, crate::defaults::TOL),
        solution_scale,
        noise_floor,
    })
}

// index-deterministic parallel map over a slice
fn parallel_map<T: Sync, R: Send + Clone + Default>(
    items: &[T],
    jobs: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let mut results = vec![R::default(); items.len()];
    let chunk = items.len().div_ceil(jobs);
    std::thread::scope(|scope| {
        for (slot, task_chunk) in results.chunks_mut(chunk).zip(items.chunks(chunk)) {
            let f = &f;
            scope.spawn(move || {
                for (out, item) in slot.iter_mut().zip(task_chunk) {
                    *out = f(item);
                }
            });
        }
    });
    results
}

impl Default for CellResult {
    fn default() -> Self {
        CellResult { lambda: 0.0, h: 0.0, error: None, newton_total: 0, failure: None }
    }
}

/// Per-lambda error constants `C` in `error = C h^q` at the predicted `q`,
/// and their spread. The convergence bound is an upper bound uniform in
/// stiffness, so the meaningful failure direction is growth: `growth_ratio`
/// compares every constant against the one at the mildest lambda. Constants
/// may legitimately shrink as stiffness grows (they do for stiffly accurate
/// methods), which inflates `ratio` but not `growth_ratio`.
#[derive(Debug, Clone)]
pub struct UniformityReport {
    pub q: usize,
    pub constants: Vec<(f64, f64)>,
    /// max/min of the constants (1.0 for a single lambda).
    pub ratio: f64,
    /// max over lambda of `C(lambda) / C(mildest lambda)`.
    pub growth_ratio: f64,
}

pub fn uniformity_report(study: &ConvergenceStudy) -> UniformityReport {
    let q = study.predicted.q as f64;
    let cutoff = (100.0 * f64::EPSILON * study.solution_scale.max(f64::MIN_POSITIVE))
        .max(study.noise_floor);
    let mut constants = Vec::new();
    for (i, &lambda) in study.lambdas.iter().enumerate() {
        let logs: Vec<f64> = (0..study.h_grid.len())
            .filter_map(|j| {
                let cell = &study.cells[i * study.h_grid.len() + j];
                cell.error
                    .filter(|&e| e > cutoff)
                    .map(|e| e.ln() - q * cell.h.ln())
            })
            .collect();
        if !logs.is_empty() {
            constants.push((lambda, (logs.iter().sum::<f64>() / logs.len() as f64).exp()));
        }
    }
    let max = constants.iter().map(|(_, c)| *c).fold(0.0, f64::max);
    let min = constants.iter().map(|(_, c)| *c).fold(f64::INFINITY, f64::min);
    let ratio = if constants.len() <= 1 { 1.0 } else { max / min };
    let mildest = constants
        .iter()
        .min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
        .map(|(_, c)| *c);
    let growth_ratio = match mildest {
        Some(reference) if constants.len() > 1 => max / reference,
        _ => 1.0,
    };
    UniformityReport { q: study.predicted.q, constants, ratio, growth_ratio }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableau::catalog_lookup;

    #[test]
    fn synthetic_power_law_is_fit_exactly() {
        let hs: Vec<f64> = (1..8).map(|k| 0.5_f64.powi(k)).collect();
        let errors: Vec<f64> = hs.iter().map(|h| 3.0 * h * h).collect();
        let (slope, residual) = estimate_order(&hs, &errors, 1.0).unwrap();
        assert!((slope - 2.0).abs() < 1e-12);
        assert!(residual < 1e-12);
    }

    #[test]
    fn saturated_points_are_excluded() {
        let hs = vec![0.1, 0.05, 0.025, 0.0125];
        let mut errors: Vec<f64> = hs.iter().map(|h| h * h).collect();
        errors[3] = 1e-17; // round-off floor
        let (slope, _) = estimate_order(&hs, &errors, 1.0).unwrap();
        assert!((slope - 2.0).abs() < 1e-12);
        // dropping too many points is an error
        let tiny = vec![1e-18, 1e-18, 1e-18, 1e-18];
        assert!(matches!(
            estimate_order(&hs, &tiny, 1.0),
            Err(HarnessError::TooFewPoints(_))
        ));
    }

    #[test]
    fn predicted_orders_for_catalog() {
        let tol = crate::defaults::TOL;
        let p = predicted_order(&catalog_lookup("backward-euler").unwrap(), tol);
        assert_eq!(p.q, 1);
        assert!(p.branch.contains("base"), "{}", p.branch);

        let p = predicted_order(&catalog_lookup("implicit-midpoint").unwrap(), tol);
        assert_eq!(p.q, 2);
        assert!(p.branch.contains("superconvergence"), "{}", p.branch);

        let p = predicted_order(&catalog_lookup("trapezoid").unwrap(), tol);
        assert_eq!(p.q, 2);

        let p = predicted_order(&catalog_lookup("gauss-2").unwrap(), tol);
        assert_eq!(p.q, p.p_sl);
        assert_eq!(p.r_condition, Verdict::Fails);
    }

    #[test]
    fn small_study_matches_prediction() {
        let tab = catalog_lookup("backward-euler").unwrap();
        let h_grid: Vec<f64> = (3..9).map(|k| 0.5_f64.powi(k)).collect();
        let study = run_study(
            &tab,
            "npr-scalar",
            &[-1e2, -1e6],
            &h_grid,
            0.0,
            1.0,
            &NewtonConfig::default(),
            1,
        )
        .unwrap();
        for (lambda, slope, _) in &study.observed_orders {
            assert!((slope - 1.0).abs() <= 0.1, "lambda {lambda}: slope {slope}");
        }
        // stiffening the problem must not inflate the error constant
        let uni = uniformity_report(&study);
        assert!(uni.growth_ratio <= 10.0, "growth {}", uni.growth_ratio);
    }

    #[test]
    fn study_is_thread_count_invariant() {
        let tab = catalog_lookup("trapezoid").unwrap();
        let h_grid: Vec<f64> = (3..7).map(|k| 0.5_f64.powi(k)).collect();
        let run = |jobs| {
            run_study(&tab, "npr-scalar", &[-10.0, -1e4], &h_grid, 0.0, 1.0, &NewtonConfig::default(), jobs)
                .unwrap()
        };
        let a = run(1);
        let b = run(4);
        for (x, y) in a.cells.iter().zip(&b.cells) {
            assert_eq!(x.error, y.error);
            assert_eq!(x.newton_total, y.newton_total);
        }
    }

    #[test]
    fn csv_round_trip() {
        let tab = catalog_lookup("backward-euler").unwrap();
        let h_grid = vec![0.125, 0.0625, 0.03125];
        let study = run_study(
            &tab,
            "npr-scalar",
            &[-5.0],
            &h_grid,
            0.0,
            1.0,
            &NewtonConfig::default(),
            1,
        )
        .unwrap();
        let text = study.to_csv();
        let cells = read_study_csv(&text).unwrap();
        assert_eq!(cells.len(), study.cells.len());
        for (a, b) in cells.iter().zip(&study.cells) {
            assert_eq!(a.lambda, b.lambda);
            assert_eq!(a.h, b.h);
            assert_eq!(a.error, b.error);
            assert_eq!(a.newton_total, b.newton_total);
        }
    }

    #[test]
    fn empty_grids_are_rejected() {
        let tab = catalog_lookup("backward-euler").unwrap();
        assert!(matches!(
            run_study(&tab, "npr-scalar", &[], &[0.1], 0.0, 1.0, &NewtonConfig::default(), 1),
            Err(HarnessError::EmptyGrid(_))
        ));
        assert!(matches!(
            run_study(&tab, "npr-scalar", &[-1.0], &[], 0.0, 1.0, &NewtonConfig::default(), 1),
            Err(HarnessError::EmptyGrid(_))
        ));
    }

    #[test]
    fn single_lambda_uniformity_ratio_is_one() {
        let tab = catalog_lookup("backward-euler").unwrap();
        let h_grid = vec![0.125, 0.0625, 0.03125, 0.015625];
        let study = run_study(
            &tab,
            "npr-scalar",
            &[-100.0],
            &h_grid,
            0.0,
            1.0,
            &NewtonConfig::default(),
            1,
        )
        .unwrap();
        assert_eq!(uniformity_report(&study).ratio, 1.0);
    }

    #[test]
    fn default_grid_spans_the_documented_exponents() {
        let grid = default_h_grid(0.0, 1.0);
        assert_eq!(grid.len(), 10);
        assert_eq!(grid[0], 0.125);
        assert_eq!(*grid.last().unwrap(), 0.5_f64.powi(12));
    }
}
