//! Time steppers for semilinear problems: sequential stage solves for
//! (E)DIRK tableaux, a stacked Newton iteration for fully implicit ones,
//! forward substitution for explicit ones, plus the one-step and
//! difference-propagation probes used by the convergence harness.
//!
//! Stage equations are solved by simplified Newton: the iteration matrix
//! freezes `J + g'` at the initial guess and is refactored only when the
//! update norms stall.

use crate::problems::SemilinearProblem;
use crate::tableau::{ButcherTableau, Structure};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("Newton iteration for stage {stage} did not converge after {iterations} iterations (update norm {update:.3e})")]
    NewtonDivergence { stage: usize, iterations: usize, update: f64 },
    #[error("singular iteration matrix for stage {stage}")]
    SingularStageMatrix { stage: usize },
    #[error("(tf - t0)/h = {steps} is not an integer step count")]
    NonIntegerStepCount { steps: f64 },
    #[error("step {index} failed: {cause}")]
    IntegrationAborted { index: usize, cause: Box<SolverError> },
    #[error("tableau structure {0} is not supported by this path")]
    UnsupportedStructure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    /// Use the problem's analytic first derivative of `g`.
    Analytic,
    /// Assemble `g'` column by column from central differences.
    FiniteDifference,
}

#[derive(Debug, Clone)]
pub struct NewtonConfig {
    /// Absolute update tolerance; `None` resolves to `1e-12 * sqrt(N)`.
    pub abs_tol: Option<f64>,
    pub rel_tol: f64,
    pub max_iterations: usize,
    pub jacobian: JacobianMode,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            abs_tol: None,
            rel_tol: 1e-12,
            max_iterations: 50,
            jacobian: JacobianMode::Analytic,
        }
    }
}

impl NewtonConfig {
    pub fn resolved_abs_tol(&self, dim: usize) -> f64 {
        self.abs_tol.unwrap_or(1e-12 * (dim as f64).sqrt())
    }
}

/// Outcome of one Runge-Kutta step.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub y_next: DVector<f64>,
    /// Stacked stage values, `s` blocks of length `N`.
    pub stages: DVector<f64>,
    /// Newton iterations per stage (one entry for the stacked solve).
    pub newton_iterations: Vec<usize>,
    pub converged: bool,
    /// Max over stages of the stage-equation residual, scaled by the size
    /// of the stiff term it balances.
    pub stage_residual: f64,
}

impl StepResult {
    pub fn total_newton(&self) -> usize {
        self.newton_iterations.iter().sum()
    }
}

fn g_jacobian(problem: &SemilinearProblem, y: &DVector<f64>, mode: JacobianMode) -> DMatrix<f64> {
    match mode {
        JacobianMode::Analytic => problem.g_jacobian(y),
        JacobianMode::FiniteDifference => {
            let n = problem.dim();
            let eps = 1e-7;
            let mut m = DMatrix::zeros(n, n);
            for j in 0..n {
                let mut hi = y.clone();
                let mut lo = y.clone();
                hi[j] += eps;
                lo[j] -= eps;
                m.set_column(j, &((problem.g(&hi) - problem.g(&lo)) / (2.0 * eps)));
            }
            m
        }
    }
}

/// One step of the method from `(t_n, y_n)` with step size `h >= 0`.
pub fn rk_step(
    tab: &ButcherTableau,
    problem: &SemilinearProblem,
    t_n: f64,
    y_n: &DVector<f64>,
    h: f64,
    cfg: &NewtonConfig,
) -> Result<StepResult, SolverError> {
    match tab.structure() {
        Structure::FullyImplicit => rk_step_stacked(tab, problem, t_n, y_n, h, cfg),
        Structure::Dirk | Structure::Explicit => dirk_step(tab, problem, t_n, y_n, h, cfg),
    }
}

fn dirk_step(
    tab: &ButcherTableau,
    problem: &SemilinearProblem,
    t_n: f64,
    y_n: &DVector<f64>,
    h: f64,
    cfg: &NewtonConfig,
) -> Result<StepResult, SolverError> {
    let s = tab.stages();
    let n = problem.dim();
    let a = tab.a_f64();
    let b = tab.b_f64();
    let c = tab.c_f64();
    let jac = problem.jacobian();
    let abs_tol = cfg.resolved_abs_tol(n);

    let mut stages = DVector::<f64>::zeros(s * n);
    let mut f_values: Vec<DVector<f64>> = Vec::with_capacity(s);
    let mut iterations = vec![0usize; s];
    let mut worst_residual: f64 = 0.0;

    for i in 0..s {
        let t_i = t_n + c[i] * h;
        let r_i = problem.forcing(t_i);
        let mut rhs = y_n.clone();
        for (j, f_j) in f_values.iter().enumerate() {
            rhs += f_j * (h * a[(i, j)]);
        }
        let kappa = h * a[(i, i)];
        let y_i = if kappa == 0.0 {
            rhs
        } else {
            let rhs = rhs + &r_i * kappa;
            let mut y = y_n.clone();
            let residual = |y: &DVector<f64>| -> DVector<f64> {
                y - jac * y * kappa - problem.g(y) * kappa - &rhs
            };
            let factor = |point: &DVector<f64>| {
                let m = DMatrix::identity(n, n) - (jac + g_jacobian(problem, point, cfg.jacobian)) * kappa;
                m.lu()
            };
            let mut lu = factor(&y);
            let mut prev_update = f64::INFINITY;
            let mut converged = false;
            for it in 1..=cfg.max_iterations {
                iterations[i] = it;
                let delta = lu
                    .solve(&(-residual(&y)))
                    .ok_or(SolverError::SingularStageMatrix { stage: i + 1 })?;
                let size = delta.norm();
                y += &delta;
                if size <= abs_tol + cfg.rel_tol * y.norm() {
                    converged = true;
                    break;
                }
                // stalled contraction: refresh the frozen Jacobian
                if it >= 3 && size > 0.9 * prev_update {
                    lu = factor(&y);
                }
                prev_update = size;
            }
            if !converged {
                return Err(SolverError::NewtonDivergence {
                    stage: i + 1,
                    iterations: iterations[i],
                    update: prev_update,
                });
            }
            let res = residual(&y).norm();
            let scale = 1.0 + (jac * &y).norm() * kappa.abs() + y.norm();
            worst_residual = worst_residual.max(res / scale);
            y
        };
        let f_i = jac * &y_i + problem.g(&y_i) + r_i;
        stages.rows_mut(i * n, n).copy_from(&y_i);
        f_values.push(f_i);
    }

    let mut y_next = y_n.clone();
    for i in 0..s {
        y_next += &f_values[i] * (h * b[i]);
    }
    Ok(StepResult {
        y_next,
        stages,
        newton_iterations: iterations,
        converged: true,
        stage_residual: worst_residual,
    })
}

/// One step via the stacked `sN` Newton solve, regardless of structure.
/// For DIRK tableaux this reaches the same fixed point as the sequential
/// path and exists mainly to cross-check it.
pub fn rk_step_stacked(
    tab: &ButcherTableau,
    problem: &SemilinearProblem,
    t_n: f64,
    y_n: &DVector<f64>,
    h: f64,
    cfg: &NewtonConfig,
) -> Result<StepResult, SolverError> {
    let s = tab.stages();
    let n = problem.dim();
    let a = tab.a_f64();
    let b = tab.b_f64();
    let c = tab.c_f64();
    let jac = problem.jacobian();
    let abs_tol = cfg.resolved_abs_tol(n) * (s as f64).sqrt();

    let forcing: Vec<DVector<f64>> = (0..s).map(|i| problem.forcing(t_n + c[i] * h)).collect();
    let block = |v: &DVector<f64>, i: usize| -> DVector<f64> { v.rows(i * n, n).into() };

    // F(Y) = Y - 1 (x) y_n - h (A (x) I)(J Y_j + g(Y_j) + r_j)
    let residual = |y: &DVector<f64>| -> DVector<f64> {
        let f_blocks: Vec<DVector<f64>> =
            (0..s).map(|j| {
                let yj = block(y, j);
                jac * &yj + problem.g(&yj) + &forcing[j]
            }).collect();
        let mut out = y.clone();
        for i in 0..s {
            let mut acc = y_n.clone();
            for (j, f_j) in f_blocks.iter().enumerate() {
                acc += f_j * (h * a[(i, j)]);
            }
            let mut rows = out.rows_mut(i * n, n);
            rows -= &acc;
        }
        out
    };
    let factor = |y: &DVector<f64>| {
        let mut m = DMatrix::<f64>::identity(s * n, s * n);
        for j in 0..s {
            let gj = g_jacobian(problem, &block(y, j), cfg.jacobian);
            let dj = (jac + gj) * h;
            for i in 0..s {
                let mut view = m.view_mut((i * n, j * n), (n, n));
                view -= &dj * a[(i, j)];
            }
        }
        m.lu()
    };

    let mut y = DVector::<f64>::zeros(s * n);
    for i in 0..s {
        y.rows_mut(i * n, n).copy_from(y_n);
    }
    let mut lu = factor(&y);
    let mut prev_update = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=cfg.max_iterations {
        iterations = it;
        let delta = lu
            .solve(&(-residual(&y)))
            .ok_or(SolverError::SingularStageMatrix { stage: 0 })?;
        let size = delta.norm();
        y += &delta;
        if size <= abs_tol + cfg.rel_tol * y.norm() {
            converged = true;
            break;
        }
        if it >= 3 && size > 0.9 * prev_update {
            lu = factor(&y);
        }
        prev_update = size;
    }
    if !converged {
        return Err(SolverError::NewtonDivergence { stage: 0, iterations, update: prev_update });
    }

    let res = residual(&y);
    let stiff_scale = 1.0 + (0..s)
        .map(|i| (jac * block(&y, i)).norm() * h)
        .fold(0.0, f64::max)
        + y.norm();
    let mut y_next = y_n.clone();
    for i in 0..s {
        let yi = block(&y, i);
        let f_i = jac * &yi + problem.g(&yi) + &forcing[i];
        y_next += f_i * (h * b[i]);
    }
    Ok(StepResult {
        y_next,
        stages: y,
        newton_iterations: vec![iterations],
        converged: true,
        stage_residual: res.norm() / stiff_scale,
    })
}

/// Constant-step trajectory of the method on `[t0, tf]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub newton_per_step: Vec<usize>,
}

impl Trajectory {
    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory holds at least y0")
    }

    pub fn total_newton(&self) -> usize {
        self.newton_per_step.iter().sum()
    }

    /// Delimiter-separated text: `t, y_1..y_N, newton`.
    pub fn to_delimited(&self) -> String {
        let mut out = String::from("t");
        let n = self.states[0].len();
        for i in 1..=n {
            out.push_str(&format!(",y{i}"));
        }
        out.push_str(",newton\n");
        for (k, (t, y)) in self.times.iter().zip(&self.states).enumerate() {
            out.push_str(&format!("{t:.17e}"));
            for v in y.iter() {
                out.push_str(&format!(",{v:.17e}"));
            }
            let its = if k == 0 { 0 } else { self.newton_per_step[k - 1] };
            out.push_str(&format!(",{its}\n"));
        }
        out
    }
}

/// Integrate with constant steps; `(tf - t0)/h` must be an integer count.
pub fn integrate(
    tab: &ButcherTableau,
    problem: &SemilinearProblem,
    t0: f64,
    tf: f64,
    h: f64,
    cfg: &NewtonConfig,
) -> Result<Trajectory, SolverError> {
    let raw_steps = (tf - t0) / h;
    let steps = raw_steps.round();
    if (raw_steps - steps).abs() > 64.0 * f64::EPSILON * raw_steps.abs().max(1.0) {
        return Err(SolverError::NonIntegerStepCount { steps: raw_steps });
    }
    let steps = steps as usize;

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut newton_per_step = Vec::with_capacity(steps);
    times.push(t0);
    states.push(problem.exact_solution(t0));
    for k in 0..steps {
        let t_n = t0 + k as f64 * h;
        let y_n = states.last().expect("nonempty");
        let result = rk_step(tab, problem, t_n, y_n, h, cfg)
            .map_err(|cause| SolverError::IntegrationAborted { index: k, cause: Box::new(cause) })?;
        times.push(t0 + (k + 1) as f64 * h);
        states.push(result.y_next.clone());
        newton_per_step.push(result.total_newton());
    }
    Ok(Trajectory { times, states, newton_per_step })
}

/// `y(t0 + h) - y_1` with the step started from the exact solution.
pub fn one_step_error(
    tab: &ButcherTableau,
    problem: &SemilinearProblem,
    t0: f64,
    h: f64,
    cfg: &NewtonConfig,
) -> Result<DVector<f64>, SolverError> {
    let y0 = problem.exact_solution(t0);
    let step = rk_step(tab, problem, t0, &y0, h, cfg)?;
    Ok(problem.exact_solution(t0 + h) - step.y_next)
}

/// Apply `R(Z) = I + (b^T (x) Z)(I - A (x) Z)^{-1}(1 (x) I)` to a vector
/// through dense solves, which stays stable for dissipative `Z`.
pub fn apply_stability_matrix(
    tab: &ButcherTableau,
    z: &DMatrix<f64>,
    v: &DVector<f64>,
) -> Result<DVector<f64>, SolverError> {
    let s = tab.stages();
    let n = z.nrows();
    let m = DMatrix::<f64>::identity(s * n, s * n) - tab.a_f64().kronecker(z);
    let mut rhs = DVector::<f64>::zeros(s * n);
    for i in 0..s {
        rhs.rows_mut(i * n, n).copy_from(v);
    }
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or(SolverError::SingularStageMatrix { stage: 0 })?;
    let b = tab.b_f64();
    let mut out = v.clone();
    for i in 0..s {
        out += z * x.rows(i * n, n) * b[i];
    }
    Ok(out)
}

/// Difference propagation probe: from two nearby states, run one step each
/// and measure how far the difference map deviates from multiplication by
/// `R(hJ)`, scaled by `h * ||y_n - y_tilde||`. Bounds the nonlinear
/// propagation matrix in the difference direction.
pub fn c_stability_probe(
    tab: &ButcherTableau,
    problem: &SemilinearProblem,
    t_n: f64,
    y_n: &DVector<f64>,
    y_tilde: &DVector<f64>,
    h: f64,
    cfg: &NewtonConfig,
) -> Result<f64, SolverError> {
    let d0 = y_n - y_tilde;
    assert!(d0.norm() > 0.0, "states must differ");
    let step_a = rk_step(tab, problem, t_n, y_n, h, cfg)?;
    let step_b = rk_step(tab, problem, t_n, y_tilde, h, cfg)?;
    let d1 = step_a.y_next - step_b.y_next;
    let z = problem.jacobian() * h;
    let linear_part = apply_stability_matrix(tab, &z, &d0)?;
    Ok((d1 - linear_part).norm() / (h * d0.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::builtin_problem;
    use crate::stability::stability_function;
    use crate::tableau::catalog_lookup;
    use nalgebra::Complex;
    use std::sync::Arc;

    fn pure_linear(lambda: f64) -> SemilinearProblem {
        SemilinearProblem::new(
            "pure-linear",
            DMatrix::from_element(1, 1, lambda),
            Arc::new(|y: &DVector<f64>| DVector::zeros(y.len())),
            Arc::new(|_, y: &DVector<f64>, _: &[DVector<f64>]| DVector::zeros(y.len())),
            Some(Arc::new(|_| DVector::zeros(1))),
            Arc::new(move |k, t| DVector::from_element(1, lambda.powi(k as i32) * (lambda * t).exp())),
            6,
            0.0,
        )
    }

    #[test]
    fn linear_step_reproduces_stability_function() {
        let lambda = -3.0;
        let problem = pure_linear(lambda);
        let h = 0.17;
        let cfg = NewtonConfig::default();
        for name in crate::tableau::CATALOG {
            let tab = catalog_lookup(name).unwrap();
            let y0 = DVector::from_element(1, 1.0);
            let step = rk_step(&tab, &problem, 0.0, &y0, h, &cfg).unwrap();
            let r = stability_function(&tab).eval(Complex::new(h * lambda, 0.0)).re;
            assert!(
                (step.y_next[0] - r).abs() <= 1e-14 * r.abs().max(1.0),
                "{name}: step {} vs R {}",
                step.y_next[0],
                r
            );
        }
    }

    #[test]
    fn linear_trajectory_is_power_iteration() {
        let lambda = -40.0;
        let problem = pure_linear(lambda);
        let tab = catalog_lookup("trapezoid").unwrap();
        let h = 0.05;
        let traj = integrate(&tab, &problem, 0.0, 1.0, h, &NewtonConfig::default()).unwrap();
        let r = stability_function(&tab).eval(Complex::new(h * lambda, 0.0)).re;
        let expected = r.powi(20);
        assert!((traj.final_state()[0] - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        assert_eq!(traj.states.len(), 21);
    }

    #[test]
    fn stiff_scalar_newton_converges_quickly() {
        let problem = builtin_problem("npr-scalar", -1e6).unwrap();
        let tab = catalog_lookup("backward-euler").unwrap();
        let y0 = problem.exact_solution(0.0);
        let step = rk_step(&tab, &problem, 0.0, &y0, 0.1, &NewtonConfig::default()).unwrap();
        assert!(step.converged);
        assert!(step.newton_iterations[0] <= 5, "took {:?}", step.newton_iterations);
        assert!(step.stage_residual <= 1e-10);
    }

    #[test]
    fn zero_step_is_identity() {
        let problem = builtin_problem("npr-scalar", -1.0).unwrap();
        let tab = catalog_lookup("gauss-2").unwrap();
        let y0 = DVector::from_element(1, 0.37);
        let step = rk_step(&tab, &problem, 0.0, &y0, 0.0, &NewtonConfig::default()).unwrap();
        assert_eq!(step.y_next, y0);
        for i in 0..tab.stages() {
            assert_eq!(step.stages.rows(i, 1)[0], y0[0]);
        }
    }

    #[test]
    fn sequential_and_stacked_paths_agree_on_dirks() {
        let cfg = NewtonConfig::default();
        for name in ["backward-euler", "implicit-midpoint", "trapezoid", "sdirk-norsett-3"] {
            let tab = catalog_lookup(name).unwrap();
            for lambda in [-1.0, -1e4] {
                let problem = builtin_problem("npr-2d", lambda).unwrap();
                let y0 = problem.exact_solution(0.0);
                let a = dirk_step(&tab, &problem, 0.0, &y0, 0.02, &cfg).unwrap();
                let b = rk_step_stacked(&tab, &problem, 0.0, &y0, 0.02, &cfg).unwrap();
                assert!(
                    (a.y_next - b.y_next).norm() <= 1e-11,
                    "{name} lambda {lambda}"
                );
            }
        }
    }

    #[test]
    fn integrate_rejects_partial_final_step() {
        let problem = builtin_problem("npr-scalar", -1.0).unwrap();
        let tab = catalog_lookup("backward-euler").unwrap();
        let err = integrate(&tab, &problem, 0.0, 1.0, 0.3, &NewtonConfig::default()).unwrap_err();
        assert!(matches!(err, SolverError::NonIntegerStepCount { .. }));
        // 10 steps of 0.1 are fine despite float division noise
        assert!(integrate(&tab, &problem, 0.0, 1.0, 0.1, &NewtonConfig::default()).is_ok());
        // zero-length interval
        let traj = integrate(&tab, &problem, 0.0, 0.0, 0.1, &NewtonConfig::default()).unwrap();
        assert_eq!(traj.states.len(), 1);
    }

    #[test]
    fn one_step_error_leading_coefficient_backward_euler() {
        // error/h^2 approaches |y''(0)|/2 = 1/2 on the scalar problem
        let problem = builtin_problem("npr-scalar", -1.0).unwrap();
        let tab = catalog_lookup("backward-euler").unwrap();
        let cfg = NewtonConfig::default();
        let mut prev_ratio: Option<f64> = None;
        for k in [6, 8, 10] {
            let h = 0.5_f64.powi(k);
            let err = one_step_error(&tab, &problem, 0.0, h, &cfg).unwrap();
            let ratio = err.norm() / (h * h);
            if let Some(p) = prev_ratio {
                let improvement_now = (ratio - 0.5_f64).abs();
                let improvement_prev = (p - 0.5_f64).abs();
                assert!(improvement_now < improvement_prev, "not converging to 1/2");
            }
            prev_ratio = Some(ratio);
        }
        assert!((prev_ratio.unwrap() - 0.5).abs() < 1e-2);
    }

    #[test]
    fn trapezoid_one_step_error_is_third_order() {
        let problem = builtin_problem("npr-scalar", -1.0).unwrap();
        let tab = catalog_lookup("trapezoid").unwrap();
        let cfg = NewtonConfig::default();
        let hs: Vec<f64> = (4..9).map(|k| 0.5_f64.powi(k)).collect();
        let errs: Vec<f64> = hs
            .iter()
            .map(|&h| one_step_error(&tab, &problem, 0.0, h, &cfg).unwrap().norm())
            .collect();
        let slope = fit_slope(&hs, &errs);
        assert!(slope >= 2.85, "slope {slope}");
    }

    fn fit_slope(hs: &[f64], errs: &[f64]) -> f64 {
        let n = hs.len() as f64;
        let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        cov / var
    }

    #[test]
    fn probe_vanishes_for_purely_linear_dynamics() {
        let problem = pure_linear(-50.0);
        let tab = catalog_lookup("trapezoid").unwrap();
        let y = DVector::from_element(1, 0.8);
        let y_tilde = DVector::from_element(1, 0.8 + 1e-5);
        let ratio =
            c_stability_probe(&tab, &problem, 0.0, &y, &y_tilde, 0.01, &NewtonConfig::default())
                .unwrap();
        assert!(ratio <= 1e-8, "ratio {ratio}");
    }

    #[test]
    fn probe_ratio_does_not_grow_with_stiffness() {
        // the difference-map deviation from R(hJ) stays bounded by its
        // nonstiff size: stiffness must not amplify it (it in fact decays,
        // since b^T (I - zA)^{-1} -> 0 for AS-stable methods)
        let tab = catalog_lookup("trapezoid").unwrap();
        let cfg = NewtonConfig::default();
        let mut ratios = Vec::new();
        for lambda in [-1e2, -1e4, -1e6, -1e8] {
            let problem = builtin_problem("npr-scalar", lambda).unwrap();
            let y = problem.exact_solution(0.0);
            let y_tilde = y.clone().add_scalar(1e-5);
            ratios.push(
                c_stability_probe(&tab, &problem, 0.0, &y, &y_tilde, 0.01, &cfg).unwrap(),
            );
        }
        let mildest = ratios[0];
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(max <= 10.0 * mildest, "ratios {ratios:?}");
    }

    #[test]
    fn probe_linear_in_perturbation_size() {
        let tab = catalog_lookup("trapezoid").unwrap();
        let cfg = NewtonConfig::default();
        let problem = builtin_problem("npr-scalar", -100.0).unwrap();
        let y = problem.exact_solution(0.0);
        let small = c_stability_probe(&tab, &problem, 0.0, &y, &y.clone().add_scalar(1e-8), 0.01, &cfg).unwrap();
        let large = c_stability_probe(&tab, &problem, 0.0, &y, &y.clone().add_scalar(1e-4), 0.01, &cfg).unwrap();
        assert!((small - large).abs() <= 0.1 * small.max(large), "{small} vs {large}");
    }

    #[test]
    fn trajectory_serialization_round_trips_columns() {
        let problem = builtin_problem("npr-2d", -10.0).unwrap();
        let tab = catalog_lookup("trapezoid").unwrap();
        let traj = integrate(&tab, &problem, 0.0, 0.5, 0.25, &NewtonConfig::default()).unwrap();
        let text = traj.to_delimited();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,y1,y2,newton");
        assert_eq!(lines.count(), traj.states.len());
    }

    #[test]
    fn finite_difference_jacobian_matches_analytic() {
        let problem = builtin_problem("npr-2d", -5.0).unwrap();
        let tab = catalog_lookup("implicit-midpoint").unwrap();
        let y0 = problem.exact_solution(0.0);
        let mut cfg = NewtonConfig::default();
        let a = rk_step(&tab, &problem, 0.0, &y0, 0.05, &cfg).unwrap();
        cfg.jacobian = JacobianMode::FiniteDifference;
        let b = rk_step(&tab, &problem, 0.0, &y0, 0.05, &cfg).unwrap();
        assert!((a.y_next - b.y_next).norm() <= 1e-11);
    }
}
