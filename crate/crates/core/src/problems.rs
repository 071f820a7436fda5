//! Built-in semilinear test problems `y' = J y + g(y) + r(t)` with constant
//! dissipative `J`, globally Lipschitz `g` with analytic directional
//! derivatives, and manufactured exact solutions (the forcing `r` is defined
//! so the chosen solution solves the ODE exactly).

use crate::stability::log_norm;
use nalgebra::{DMatrix, DVector};
use std::fmt;
use std::sync::Arc;

pub type VecFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type DerivFn = Arc<dyn Fn(usize, &DVector<f64>, &[DVector<f64>]) -> DVector<f64> + Send + Sync>;
pub type TimeFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;
pub type ExactFn = Arc<dyn Fn(usize, f64) -> DVector<f64> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProblemError {
    #[error("unknown problem `{0}`; available: npr-scalar, npr-2d, mol-reaction-diffusion")]
    UnknownProblem(String),
    #[error("stiffness parameter must be negative, got {0}")]
    NonNegativeLambda(f64),
    #[error("time derivative of g^({k}) of order {ell} needs derivatives beyond the implemented cap {cap}")]
    DerivativeUnavailable { k: usize, ell: usize, cap: usize },
}

/// A concrete semilinear ODE with manufactured exact solution. Immutable;
/// evaluators are pure and shareable across threads.
#[derive(Clone)]
pub struct SemilinearProblem {
    name: String,
    dim: usize,
    jacobian: DMatrix<f64>,
    g: VecFn,
    g_deriv: DerivFn,
    forcing: TimeFn,
    exact: ExactFn,
    smoothness: usize,
    lipschitz: f64,
    mu: f64,
}

impl fmt::Debug for SemilinearProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SemilinearProblem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("smoothness", &self.smoothness)
            .field("lipschitz", &self.lipschitz)
            .field("mu", &self.mu)
            .finish()
    }
}

impl SemilinearProblem {
    /// Assemble a problem from its evaluators. The logarithmic norm of `J`
    /// is computed here; a missing forcing defaults to zero. `exact(k, t)`
    /// must supply derivatives of the manufactured solution for
    /// `k <= smoothness + 1`, and `g_deriv(k, ..)` for `k <= smoothness`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        jacobian: DMatrix<f64>,
        g: VecFn,
        g_deriv: DerivFn,
        forcing: Option<TimeFn>,
        exact: ExactFn,
        smoothness: usize,
        lipschitz: f64,
    ) -> SemilinearProblem {
        let dim = jacobian.nrows();
        assert_eq!(dim, jacobian.ncols(), "J must be square");
        let forcing = forcing.unwrap_or_else(|| Arc::new(move |_| DVector::zeros(dim)));
        SemilinearProblem {
            name: name.into(),
            dim,
            mu: log_norm(&jacobian),
            jacobian,
            g,
            g_deriv,
            forcing,
            exact,
            smoothness,
            lipschitz,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jacobian(&self) -> &DMatrix<f64> {
        &self.jacobian
    }

    /// Highest order of available `g` derivatives; the exact solution has
    /// one more.
    pub fn smoothness(&self) -> usize {
        self.smoothness
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Cached logarithmic 2-norm of `J`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn g(&self, y: &DVector<f64>) -> DVector<f64> {
        (self.g)(y)
    }

    /// k-linear directional derivative `g^(k)(y)(u_1, .., u_k)`, `k >= 1`.
    pub fn g_derivative(&self, k: usize, y: &DVector<f64>, us: &[DVector<f64>]) -> DVector<f64> {
        assert!(k >= 1 && us.len() == k, "need k directions");
        (self.g_deriv)(k, y, us)
    }

    /// Jacobian matrix of `g`, assembled column by column.
    pub fn g_jacobian(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            m.set_column(j, &self.g_derivative(1, y, &[e]));
        }
        m
    }

    pub fn forcing(&self, t: f64) -> DVector<f64> {
        (self.forcing)(t)
    }

    pub fn exact_solution(&self, t: f64) -> DVector<f64> {
        (self.exact)(0, t)
    }

    /// `k`-th time derivative of the manufactured solution, `k <= smoothness + 1`.
    pub fn exact_derivative(&self, k: usize, t: f64) -> DVector<f64> {
        assert!(k <= self.smoothness + 1, "derivative order {k} beyond smoothness");
        (self.exact)(k, t)
    }

    /// Full right-hand side `J y + g(y) + r(t)`.
    pub fn rhs(&self, t: f64, y: &DVector<f64>) -> DVector<f64> {
        &self.jacobian * y + self.g(y) + self.forcing(t)
    }

    /// `ell`-th time derivative of `t -> g^(k)(y(t))` applied to fixed
    /// directions, expanded by the chain rule along the exact solution.
    /// Implemented for `k + ell <= 4`.
    pub fn g_time_derivative(
        &self,
        k: usize,
        ell: usize,
        t: f64,
        us: &[DVector<f64>],
    ) -> Result<DVector<f64>, ProblemError> {
        if k + ell > 4 {
            return Err(ProblemError::DerivativeUnavailable { k, ell, cap: 4 });
        }
        let y = self.exact_solution(t);
        let with = |extra: &[DVector<f64>]| -> DVector<f64> {
            let mut dirs = us.to_vec();
            dirs.extend_from_slice(extra);
            self.g_derivative(k + extra.len(), &y, &dirs)
        };
        let y1 = self.exact_derivative(1, t);
        Ok(match ell {
            0 => with(&[]),
            1 => with(std::slice::from_ref(&y1)),
            2 => {
                let y2 = self.exact_derivative(2, t);
                with(&[y1.clone(), y1]) + with(std::slice::from_ref(&y2))
            }
            3 => {
                let y2 = self.exact_derivative(2, t);
                let y3 = self.exact_derivative(3, t);
                with(&[y1.clone(), y1.clone(), y1.clone()])
                    + with(&[y1, y2]) * 3.0
                    + with(std::slice::from_ref(&y3))
            }
            _ => unreachable!("capped above"),
        })
    }
}

/// Named problem instance: which builtin, how stiff, on what interval.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub name: String,
    pub lambda: f64,
    pub dim: usize,
    pub t0: f64,
    pub tf: f64,
}

impl ProblemInstance {
    pub fn new(name: &str, lambda: f64) -> Result<ProblemInstance, ProblemError> {
        let p = builtin_problem(name, lambda)?;
        let (t0, tf) = crate::defaults::TIME_INTERVAL;
        Ok(ProblemInstance { name: name.to_string(), lambda, dim: p.dim(), t0, tf })
    }

    pub fn build(&self) -> SemilinearProblem {
        builtin_problem(&self.name, self.lambda).expect("validated at construction")
    }
}

fn sin_cycle(k: usize, x: f64) -> f64 {
    match k % 4 {
        0 => x.sin(),
        1 => x.cos(),
        2 => -x.sin(),
        _ => -x.cos(),
    }
}

fn cos_cycle(k: usize, x: f64) -> f64 {
    sin_cycle(k + 1, x)
}

/// Construct one of the builtin problems at stiffness `lambda < 0`.
///
/// * `npr-scalar`: nonlinear scalar relaxation, `g = sin`, solution `cos t`;
/// * `npr-2d`: non-normal 2x2 linear part with bounded-derivative
///   nonlinearity, solution `(cos t, sin t)`;
/// * `mol-reaction-diffusion`: 50-point second-difference diffusion with a
///   smoothly clipped cubic reaction, solution `sin(pi x) cos t`.
pub fn builtin_problem(name: &str, lambda: f64) -> Result<SemilinearProblem, ProblemError> {
    if lambda >= 0.0 {
        return Err(ProblemError::NonNegativeLambda(lambda));
    }
    let problem = match name {
        "npr-scalar" => {
            let dim = 1;
            let jacobian = DMatrix::from_element(1, 1, lambda);
            let g: VecFn = Arc::new(|y: &DVector<f64>| DVector::from_element(1, y[0].sin()));
            let g_deriv: DerivFn = Arc::new(|k, y, us| {
                let prod: f64 = us.iter().map(|u| u[0]).product();
                DVector::from_element(1, sin_cycle(k, y[0]) * prod)
            });
            let exact: ExactFn = Arc::new(|k, t| DVector::from_element(1, cos_cycle(k, t)));
            let forcing = manufactured_forcing(jacobian.clone(), g.clone(), exact.clone());
            SemilinearProblem {
                name: name.into(),
                dim,
                mu: log_norm(&jacobian),
                jacobian,
                g,
                g_deriv,
                forcing,
                exact,
                smoothness: 6,
                lipschitz: 1.0,
            }
        }
        "npr-2d" => {
            let dim = 2;
            let jacobian =
                DMatrix::from_row_slice(2, 2, &[lambda, 1.0, 0.0, lambda / 2.0]);
            let g: VecFn = Arc::new(|y: &DVector<f64>| {
                DVector::from_vec(vec![rational_sigmoid(0, y[0]), y[1].sin()])
            });
            let g_deriv: DerivFn = Arc::new(|k, y, us| {
                let p0: f64 = us.iter().map(|u| u[0]).product();
                let p1: f64 = us.iter().map(|u| u[1]).product();
                DVector::from_vec(vec![
                    rational_sigmoid(k, y[0]) * p0,
                    sin_cycle(k, y[1]) * p1,
                ])
            });
            let exact: ExactFn = Arc::new(|k, t| {
                DVector::from_vec(vec![cos_cycle(k, t), sin_cycle(k, t)])
            });
            let forcing = manufactured_forcing(jacobian.clone(), g.clone(), exact.clone());
            let raw = SemilinearProblem {
                name: name.into(),
                dim,
                mu: log_norm(&jacobian),
                jacobian,
                g,
                g_deriv,
                forcing,
                exact,
                smoothness: 4,
                lipschitz: 1.0,
            };
            shift_to_dissipative(&raw)
        }
        "mol-reaction-diffusion" => {
            let dim = 50;
            let scale = lambda.abs() * (dim as f64 + 1.0).powi(2);
            let jacobian = DMatrix::from_fn(dim, dim, |i, j| {
                if i == j {
                    -2.0 * scale
                } else if i.abs_diff(j) == 1 {
                    scale
                } else {
                    0.0
                }
            });
            let g: VecFn =
                Arc::new(|y: &DVector<f64>| y.map(|u| clipped_cubic(0, u)));
            let g_deriv: DerivFn = Arc::new(|k, y, us| {
                DVector::from_fn(y.len(), |i, _| {
                    let prod: f64 = us.iter().map(|u| u[i]).product();
                    clipped_cubic(k, y[i]) * prod
                })
            });
            let exact: ExactFn = Arc::new(move |k, t| {
                DVector::from_fn(dim, |i, _| {
                    let x = (i as f64 + 1.0) / (dim as f64 + 1.0);
                    (std::f64::consts::PI * x).sin() * cos_cycle(k, t)
                })
            });
            let forcing = manufactured_forcing(jacobian.clone(), g.clone(), exact.clone());
            // sampled global bound on |phi'|
            let lipschitz = (0..1400)
                .map(|i| -3.5 + i as f64 * 0.005)
                .map(|u| clipped_cubic(1, u).abs())
                .fold(0.0, f64::max);
            SemilinearProblem {
                name: name.into(),
                dim,
                mu: log_norm(&jacobian),
                jacobian,
                g,
                g_deriv,
                forcing,
                exact,
                smoothness: 4,
                lipschitz,
            }
        }
        other => return Err(ProblemError::UnknownProblem(other.to_string())),
    };
    Ok(problem)
}

// r(t) = y'(t) - J y(t) - g(y(t))
fn manufactured_forcing(jacobian: DMatrix<f64>, g: VecFn, exact: ExactFn) -> TimeFn {
    Arc::new(move |t: f64| {
        let y = exact(0, t);
        exact(1, t) - &jacobian * &y - g(&y)
    })
}

/// Derivatives of `x -> x^2/(1+x^2)`, bounded along with all derivatives.
fn rational_sigmoid(k: usize, x: f64) -> f64 {
    let d = 1.0 + x * x;
    match k {
        0 => x * x / d,
        1 => 2.0 * x / d.powi(2),
        2 => (2.0 - 6.0 * x * x) / d.powi(3),
        3 => 24.0 * x * (x * x - 1.0) / d.powi(4),
        4 => 24.0 * (-5.0 * x.powi(4) + 10.0 * x * x - 1.0) / d.powi(5),
        _ => panic!("derivative order {k} not implemented"),
    }
}

/// Derivatives of `u - u^3 B(u)` where `B` is 1 on [-2,2], 0 outside
/// [-3,3], glued by a smoothstep with four continuous derivatives. The
/// cubic is untouched where solutions live and the clip keeps `g` globally
/// Lipschitz.
fn clipped_cubic(k: usize, u: f64) -> f64 {
    let linear = match k {
        0 => u,
        1 => 1.0,
        _ => 0.0,
    };
    // (u^3)^(j)
    let cubic = |j: usize| -> f64 {
        match j {
            0 => u.powi(3),
            1 => 3.0 * u * u,
            2 => 6.0 * u,
            3 => 6.0,
            _ => 0.0,
        }
    };
    let binom = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0, 0.0],
        [1.0, 3.0, 3.0, 1.0, 0.0],
        [1.0, 4.0, 6.0, 4.0, 1.0],
    ];
    let mut clipped = 0.0;
    for j in 0..=k.min(4) {
        clipped += binom[k][j] * cubic(j) * bump(k - j, u);
    }
    linear - clipped
}

// m-th derivative of the bump: 1 on [-2,2], 0 outside [-3,3], nonic
// smoothstep S(3-|u|) in between
fn bump(m: usize, u: f64) -> f64 {
    let a = u.abs();
    if a <= 2.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    if a >= 3.0 {
        return 0.0;
    }
    let x = 3.0 - a;
    // S(x) = 70x^9 - 315x^8 + 540x^7 - 420x^6 + 126x^5 and its derivatives
    let s = |d: usize| -> f64 {
        match d {
            0 => 70.0 * x.powi(9) - 315.0 * x.powi(8) + 540.0 * x.powi(7) - 420.0 * x.powi(6)
                + 126.0 * x.powi(5),
            1 => 630.0 * x.powi(8) - 2520.0 * x.powi(7) + 3780.0 * x.powi(6)
                - 2520.0 * x.powi(5)
                + 630.0 * x.powi(4),
            2 => 5040.0 * x.powi(7) - 17640.0 * x.powi(6) + 22680.0 * x.powi(5)
                - 12600.0 * x.powi(4)
                + 2520.0 * x.powi(3),
            3 => 35280.0 * x.powi(6) - 105840.0 * x.powi(5) + 113400.0 * x.powi(4)
                - 50400.0 * x.powi(3)
                + 7560.0 * x.powi(2),
            4 => 211680.0 * x.powi(5) - 529200.0 * x.powi(4) + 453600.0 * x.powi(3)
                - 151200.0 * x.powi(2)
                + 15120.0 * x,
            _ => panic!("bump derivative order {d} not implemented"),
        }
    };
    // chain rule through x = 3 - |u|: each derivative picks up -sign(u)
    let sign: f64 = if u > 0.0 { -1.0 } else { 1.0 };
    s(m) * sign.powi(m as i32)
}

/// Recast a problem so the linear part is dissipative: when `mu(J) > 0`,
/// move `mu(J) y` from the linear term into `g`. The ODE and its exact
/// solution are unchanged.
pub fn shift_to_dissipative(p: &SemilinearProblem) -> SemilinearProblem {
    let mu = p.mu;
    if mu <= 0.0 {
        return p.clone();
    }
    let jacobian = p.jacobian.clone() - DMatrix::identity(p.dim, p.dim) * mu;
    let inner_g = p.g.clone();
    let g: VecFn = Arc::new(move |y: &DVector<f64>| inner_g(y) + y * mu);
    let inner_deriv = p.g_deriv.clone();
    let g_deriv: DerivFn = Arc::new(move |k, y, us| {
        let mut out = inner_deriv(k, y, us);
        if k == 1 {
            out += &us[0] * mu;
        }
        out
    });
    SemilinearProblem {
        name: p.name.clone(),
        dim: p.dim,
        mu: log_norm(&jacobian),
        jacobian,
        g,
        g_deriv,
        forcing: p.forcing.clone(),
        exact: p.exact.clone(),
        smoothness: p.smoothness,
        lipschitz: p.lipschitz + mu,
    }
}

/// Diagnostic results of [`validate`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub name: String,
    pub consistency_max_residual: f64,
    pub consistency_pass: bool,
    pub mu: f64,
    pub mu_pass: bool,
    /// per derivative order: max relative disagreement with finite differences
    pub derivative_errors: Vec<(usize, f64)>,
    pub derivative_pass: bool,
    pub solution_chain_max_rel: f64,
    pub solution_chain_pass: bool,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.consistency_pass && self.mu_pass && self.derivative_pass && self.solution_chain_pass
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "validation of {}: {}", self.name, if self.pass() { "pass" } else { "FAIL" })?;
        writeln!(
            f,
            "  ODE consistency residual: {:.3e} ({})",
            self.consistency_max_residual,
            if self.consistency_pass { "ok" } else { "FAIL" }
        )?;
        writeln!(f, "  mu(J) = {:.6e} ({})", self.mu, if self.mu_pass { "ok" } else { "FAIL" })?;
        for (k, err) in &self.derivative_errors {
            writeln!(f, "  g derivative order {k} vs finite differences: {err:.3e}")?;
        }
        writeln!(
            f,
            "  solution derivative chain: {:.3e} ({})",
            self.solution_chain_max_rel,
            if self.solution_chain_pass { "ok" } else { "FAIL" }
        )
    }
}

/// Check the problem invariants: the manufactured solution satisfies the
/// ODE, `mu(J) <= 0`, analytic `g` derivatives match finite differences,
/// and the listed solution derivatives chain correctly.
pub fn validate(p: &SemilinearProblem) -> ValidationReport {
    let times: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();

    let mut consistency: f64 = 0.0;
    let mut consistency_pass = true;
    for &t in &times {
        let y = p.exact_solution(t);
        let yp = p.exact_derivative(1, t);
        let residual = (&yp - p.rhs(t, &y)).norm();
        consistency = consistency.max(residual);
        // scaled by the stiff term too: with ||J y|| ~ 1e10 the raw residual
        // cannot beat binary64 cancellation
        let scale = 1.0 + yp.norm() + (p.jacobian() * &y).norm();
        if residual > 1e-10 * scale {
            consistency_pass = false;
        }
    }

    let mu_pass = p.mu() <= 1e-12;

    let eps = 1e-5;
    let mut derivative_errors = Vec::new();
    let mut derivative_pass = true;
    for k in 1..=p.smoothness().min(3) {
        let mut worst: f64 = 0.0;
        for &t in &times[..7] {
            let y = p.exact_solution(t);
            // deterministic non-axis directions
            let dirs: Vec<DVector<f64>> = (0..k)
                .map(|j| {
                    DVector::from_fn(p.dim(), |i, _| {
                        (1.0 + i as f64 * 0.37 + j as f64 * 0.61).sin()
                    })
                })
                .collect();
            let analytic = p.g_derivative(k, &y, &dirs);
            // finite difference of the (k-1)-st derivative in the last direction
            let lower = |point: &DVector<f64>| -> DVector<f64> {
                if k == 1 {
                    p.g(point)
                } else {
                    p.g_derivative(k - 1, point, &dirs[..k - 1])
                }
            };
            let last = &dirs[k - 1];
            let fd = (lower(&(&y + last * eps)) - lower(&(&y - last * eps))) / (2.0 * eps);
            let scale = analytic.norm().max(1e-3);
            worst = worst.max((analytic - fd).norm() / scale);
        }
        derivative_errors.push((k, worst));
        if worst > 1e-6 {
            derivative_pass = false;
        }
    }

    let mut chain: f64 = 0.0;
    for k in 1..=p.smoothness().min(4) {
        for &t in &times[..7] {
            let fd = (p.exact_derivative(k - 1, t + eps) - p.exact_derivative(k - 1, t - eps))
                / (2.0 * eps);
            let analytic = p.exact_derivative(k, t);
            let scale = analytic.norm().max(1e-3);
            chain = chain.max((analytic - fd).norm() / scale);
        }
    }
    let solution_chain_pass = chain <= 1e-6;

    ValidationReport {
        name: p.name().to_string(),
        consistency_max_residual: consistency,
        consistency_pass,
        mu: p.mu(),
        mu_pass,
        derivative_errors,
        derivative_pass,
        solution_chain_max_rel: chain,
        solution_chain_pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_problems_validate() {
        for name in ["npr-scalar", "npr-2d", "mol-reaction-diffusion"] {
            for lambda in [-1.0, -1e3, -1e6] {
                let p = builtin_problem(name, lambda).unwrap();
                let report = validate(&p);
                assert!(report.pass(), "{name} at lambda {lambda}:\n{report}");
                assert!(p.mu() <= 1e-12, "{name}: mu = {}", p.mu());
            }
        }
    }

    #[test]
    fn unknown_name_and_bad_lambda_are_rejected() {
        assert!(matches!(
            builtin_problem("bogus", -1.0),
            Err(ProblemError::UnknownProblem(_))
        ));
        assert!(matches!(
            builtin_problem("npr-scalar", 0.5),
            Err(ProblemError::NonNegativeLambda(_))
        ));
    }

    #[test]
    fn scalar_problem_basics() {
        let p = builtin_problem("npr-scalar", -1.0).unwrap();
        assert_eq!(p.dim(), 1);
        assert!((p.mu() + 1.0).abs() < 1e-12);
        assert_eq!(p.lipschitz(), 1.0);
        // second derivative of sin at 0 vanishes
        let y = DVector::from_element(1, 0.0);
        let u = DVector::from_element(1, 1.3);
        let d2 = p.g_derivative(2, &y, &[u.clone(), u]);
        assert_eq!(d2[0], 0.0);
    }

    #[test]
    fn corrupted_forcing_fails_validation() {
        let p = builtin_problem("npr-scalar", -1.0).unwrap();
        let mut bad = p.clone();
        let inner = bad.forcing.clone();
        bad.forcing = Arc::new(move |t| inner(t).add_scalar(1.0));
        let report = validate(&bad);
        assert!(!report.consistency_pass);
        assert!((report.consistency_max_residual - 1.0).abs() < 1e-9);
    }

    #[test]
    fn shift_moves_positive_mu_into_g() {
        // J = [[1]], g = 0 gets shifted to J = [[0]], g = y
        let one = DMatrix::from_element(1, 1, 1.0);
        let g: VecFn = Arc::new(|y: &DVector<f64>| DVector::zeros(y.len()));
        let g_deriv: DerivFn = Arc::new(|_, y, _| DVector::zeros(y.len()));
        let exact: ExactFn = Arc::new(|k, t| {
            DVector::from_element(1, if k == 0 { t.exp() } else { t.exp() })
        });
        let forcing = manufactured_forcing(one.clone(), g.clone(), exact.clone());
        let p = SemilinearProblem {
            name: "linear-growth".into(),
            dim: 1,
            mu: log_norm(&one),
            jacobian: one,
            g,
            g_deriv,
            forcing,
            exact,
            smoothness: 3,
            lipschitz: 0.0,
        };
        let shifted = shift_to_dissipative(&p);
        assert!(shifted.jacobian()[(0, 0)].abs() < 1e-14);
        let y = DVector::from_element(1, 2.0);
        assert!((shifted.g(&y)[0] - 2.0).abs() < 1e-14);
        assert!((shifted.lipschitz() - 1.0).abs() < 1e-14);
        // rhs unchanged by the shift
        assert!((shifted.rhs(0.3, &y) - p.rhs(0.3, &y)).norm() < 1e-14);
        // dissipative input returns unchanged
        let p2 = builtin_problem("npr-scalar", -2.0).unwrap();
        let same = shift_to_dissipative(&p2);
        assert_eq!(same.jacobian(), p2.jacobian());
    }

    #[test]
    fn npr_2d_is_dissipative_after_construction() {
        for lambda in [-0.01, -1.0, -1e4] {
            let p = builtin_problem("npr-2d", lambda).unwrap();
            assert!(p.mu() <= 1e-12, "lambda {lambda}: mu {}", p.mu());
        }
    }

    #[test]
    fn mol_problem_spectrum_and_clipping() {
        let p = builtin_problem("mol-reaction-diffusion", -1.0).unwrap();
        assert_eq!(p.dim(), 50);
        assert!(p.mu() < 0.0);
        // inside the clip window the reaction is exactly u - u^3
        for u in [-1.5, -0.3, 0.0, 0.9, 2.0] {
            assert!((clipped_cubic(0, u) - (u - u.powi(3))).abs() < 1e-14);
            assert!((clipped_cubic(1, u) - (1.0 - 3.0 * u * u)).abs() < 1e-14);
        }
        // outside the support of the bump only the linear part survives
        for u in [3.0, 4.5, -3.2] {
            assert!((clipped_cubic(0, u) - u).abs() < 1e-14);
            assert!((clipped_cubic(1, u) - 1.0).abs() < 1e-14);
        }
        // the bump glue is smooth: finite differences across the transition
        for m in 0..=3 {
            for u in [2.1, 2.5, 2.9, -2.2, -2.8] {
                let eps = 1e-6;
                let fd = (clipped_cubic(m, u + eps) - clipped_cubic(m, u - eps)) / (2.0 * eps);
                let analytic = clipped_cubic(m + 1, u);
                assert!(
                    (fd - analytic).abs() <= 1e-4 * analytic.abs().max(1.0),
                    "order {m} at {u}: fd {fd} vs {analytic}"
                );
            }
        }
    }

    #[test]
    fn rational_sigmoid_derivatives_match_finite_differences() {
        for k in 0..4 {
            for x in [-2.0, -0.7, 0.0, 0.4, 1.9] {
                let eps = 1e-6;
                let fd = (rational_sigmoid(k, x + eps) - rational_sigmoid(k, x - eps))
                    / (2.0 * eps);
                let analytic = rational_sigmoid(k + 1, x);
                assert!(
                    (fd - analytic).abs() <= 1e-4 * analytic.abs().max(1.0),
                    "order {k} at {x}"
                );
            }
        }
    }

    #[test]
    fn time_derivatives_of_g_follow_chain_rule() {
        let p = builtin_problem("npr-scalar", -1.0).unwrap();
        let u = DVector::from_element(1, 1.0);
        let t = 0.4;
        let eps = 1e-6;
        for ell in 1..=3 {
            let lower = |tt: f64| -> DVector<f64> {
                p.g_time_derivative(1, ell - 1, tt, std::slice::from_ref(&u)).unwrap()
            };
            let fd = (lower(t + eps) - lower(t - eps)) / (2.0 * eps);
            let analytic = p.g_time_derivative(1, ell, t, std::slice::from_ref(&u)).unwrap();
            assert!(
                (fd - &analytic).norm() <= 1e-4 * analytic.norm().max(1.0),
                "ell = {ell}"
            );
        }
        assert!(p.g_time_derivative(2, 3, t, &[u.clone(), u]).is_err());
    }

    #[test]
    fn problem_instance_round_trip() {
        let inst = ProblemInstance::new("npr-2d", -100.0).unwrap();
        assert_eq!(inst.dim, 2);
        let p = inst.build();
        assert_eq!(p.dim(), 2);
        assert!(ProblemInstance::new("npr-2d", 1.0).is_err());
    }
}
