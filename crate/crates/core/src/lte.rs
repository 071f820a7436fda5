//! Local truncation error series for one step from exact initial data,
//! with the stiff matrix argument `Z` held as an independent variable.
//!
//! Two independent evaluation routes are implemented and must agree:
//!
//! * [`lte_coeffs_direct`] runs the order-by-order recursion that couples
//!   the stage error series, the step error series, and the expansion of
//!   the nonlinearity difference;
//! * [`lte_series_tree`] sums per-tree terms weighted by the exact
//!   rational tree weights.
//!
//! The equivalence of the two is the library's central cross-check, and
//! [`abstract_recursion_check`] validates the underlying combinatorial
//! identity on random data independent of any ODE.

use crate::problems::{ProblemError, SemilinearProblem};
use crate::solver::{self, NewtonConfig, SolverError};
use crate::tableau::ButcherTableau;
use crate::trees::{self, RootedTree};
use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LteError {
    #[error("I - A (x) Z is singular for this Z (stability violation)")]
    SingularSystem,
    #[error("series order {requested} exceeds the available smoothness {available}")]
    OrderTooHigh { requested: usize, available: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Truncated error series: coefficient `i` (1-based) multiplies `h^i`.
/// Step coefficients live in state space, stage coefficients in the
/// stacked stage space.
#[derive(Debug, Clone)]
pub struct LteSeries {
    pub max_order: usize,
    pub step_coeffs: Vec<DVector<f64>>,
    pub stage_coeffs: Vec<DVector<f64>>,
}

impl LteSeries {
    pub fn step_coeff(&self, order: usize) -> &DVector<f64> {
        &self.step_coeffs[order - 1]
    }

    pub fn stage_coeff(&self, order: usize) -> &DVector<f64> {
        &self.stage_coeffs[order - 1]
    }

    /// Evaluate the truncated step series at step size `h`.
    pub fn eval_step(&self, h: f64) -> DVector<f64> {
        let mut acc = DVector::zeros(self.step_coeffs[0].len());
        let mut hp = 1.0;
        for coeff in &self.step_coeffs {
            hp *= h;
            acc += coeff * hp;
        }
        acc
    }
}

/// Factorization of `I - A (x) Z` with the block helpers the series
/// recursions need. `Z` is an arbitrary dissipative matrix here; callers
/// typically pass `h J`.
pub struct KroneckerContext<'a> {
    tab: &'a ButcherTableau,
    problem: &'a SemilinearProblem,
    z: DMatrix<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    s: usize,
    n: usize,
}

impl<'a> KroneckerContext<'a> {
    pub fn new(
        tab: &'a ButcherTableau,
        problem: &'a SemilinearProblem,
        z: DMatrix<f64>,
    ) -> Result<Self, LteError> {
        let s = tab.stages();
        let n = problem.dim();
        assert_eq!(z.nrows(), n, "Z must act on state space");
        let a = tab.a_f64();
        let m = DMatrix::<f64>::identity(s * n, s * n) - a.kronecker(&z);
        let lu = m.lu();
        if lu.determinant().abs() == 0.0 {
            return Err(LteError::SingularSystem);
        }
        Ok(KroneckerContext {
            tab,
            problem,
            z,
            a,
            b: tab.b_f64(),
            c: tab.c_f64(),
            lu,
            s,
            n,
        })
    }

    fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>, LteError> {
        self.lu.solve(rhs).ok_or(LteError::SingularSystem)
    }

    fn kron(&self, weights: &[f64], v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.s * self.n);
        for (i, w) in weights.iter().enumerate() {
            out.rows_mut(i * self.n, self.n).copy_from(&(v * *w));
        }
        out
    }

    fn block(&self, v: &DVector<f64>, i: usize) -> DVector<f64> {
        v.rows(i * self.n, self.n).into()
    }

    // (A (x) I) v
    fn apply_a(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.s * self.n);
        for i in 0..self.s {
            let mut acc = DVector::zeros(self.n);
            for j in 0..self.s {
                if self.a[(i, j)] != 0.0 {
                    acc += self.block(v, j) * self.a[(i, j)];
                }
            }
            out.rows_mut(i * self.n, self.n).copy_from(&acc);
        }
        out
    }

    // (C^l (x) I) v
    fn apply_c_power(&self, ell: usize, v: &DVector<f64>) -> DVector<f64> {
        let mut out = v.clone();
        for i in 0..self.s {
            let w = self.c[i].powi(ell as i32);
            let mut rows = out.rows_mut(i * self.n, self.n);
            rows *= w;
        }
        out
    }

    // (b^T (x) Z) v
    fn apply_bz(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut acc = DVector::zeros(self.n);
        for i in 0..self.s {
            acc += &self.z * self.block(v, i) * self.b[i];
        }
        acc
    }

    // (b^T (x) I) v
    fn apply_b(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut acc = DVector::zeros(self.n);
        for i in 0..self.s {
            acc += self.block(v, i) * self.b[i];
        }
        acc
    }

    // stacked multilinear map: block i applies the ell-th time derivative
    // of g^(k) to the i-th blocks of the arguments
    fn apply_g(
        &self,
        k: usize,
        ell: usize,
        t: f64,
        args: &[&DVector<f64>],
    ) -> Result<DVector<f64>, LteError> {
        let mut out = DVector::zeros(self.s * self.n);
        for i in 0..self.s {
            let blocks: Vec<DVector<f64>> = args.iter().map(|u| self.block(u, i)).collect();
            let val = self.problem.g_time_derivative(k, ell, t, &blocks)?;
            out.rows_mut(i * self.n, self.n).copy_from(&val);
        }
        Ok(out)
    }

    fn defect_weights(&self, ell: usize) -> (f64, Vec<f64>) {
        let d = self.tab.defect_pair(ell);
        (d.q_hat.to_f64(), d.s_hat.iter().map(|x| x.to_f64()).collect())
    }
}

/// Truncated defect sums of the exact solution inserted into the scheme:
/// stage defect `sum h^i s_hat_i (x) y_i(t0)` and step defect
/// `sum h^i q_hat_i y_i(t0)`, both up to `h^r`.
pub fn defects(
    tab: &ButcherTableau,
    problem: &SemilinearProblem,
    t0: f64,
    h: f64,
    r: usize,
) -> Result<(DVector<f64>, DVector<f64>), LteError> {
    if r > problem.smoothness() {
        return Err(LteError::OrderTooHigh { requested: r, available: problem.smoothness() });
    }
    let s = tab.stages();
    let n = problem.dim();
    let mut stage = DVector::zeros(s * n);
    let mut step = DVector::zeros(n);
    let mut hp = 1.0;
    for i in 1..=r {
        hp *= h;
        let d = tab.defect_pair(i);
        let y_i = problem.exact_derivative(i, t0);
        for (block, w) in d.s_hat.iter().enumerate() {
            let mut rows = stage.rows_mut(block * n, n);
            rows += &y_i * (w.to_f64() * hp);
        }
        step += &y_i * (d.q_hat.to_f64() * hp);
    }
    Ok((stage, step))
}

/// Stage and step components of one tree's contribution to the error
/// series.
#[derive(Debug, Clone)]
pub struct TreeTerm {
    pub stage: DVector<f64>,
    pub step: DVector<f64>,
}

/// Evaluates tree terms against one context, memoizing stage parts.
pub struct TreeTermEvaluator<'a> {
    ctx: &'a KroneckerContext<'a>,
    t: f64,
    stage_memo: HashMap<RootedTree, DVector<f64>>,
}

impl<'a> TreeTermEvaluator<'a> {
    pub fn new(ctx: &'a KroneckerContext<'a>, t: f64) -> Self {
        TreeTermEvaluator { ctx, t, stage_memo: HashMap::new() }
    }

    fn stage_term(&mut self, tree: &RootedTree) -> Result<DVector<f64>, LteError> {
        if let Some(cached) = self.stage_memo.get(tree) {
            return Ok(cached.clone());
        }
        let ctx = self.ctx;
        let value = if tree.is_bushy() {
            let ell = tree.leaf_count_at_root();
            let (_, s_hat) = ctx.defect_weights(ell + 1);
            let y = ctx.problem.exact_derivative(ell + 1, self.t);
            ctx.solve(&ctx.kron(&s_hat, &y))?
        } else {
            let children: Vec<DVector<f64>> = tree
                .subtrees()
                .iter()
                .map(|child| self.stage_term(child))
                .collect::<Result<_, _>>()?;
            let refs: Vec<&DVector<f64>> = children.iter().collect();
            let g_val = ctx.apply_g(tree.subtrees().len(), tree.leaf_count_at_root(), self.t, &refs)?;
            let u = ctx.apply_c_power(tree.leaf_count_at_root(), &g_val);
            ctx.apply_a(&ctx.solve(&u)?)
        };
        self.stage_memo.insert(tree.clone(), value.clone());
        Ok(value)
    }

    /// Stage and step term of one tree at the evaluator's time.
    pub fn term(&mut self, tree: &RootedTree) -> Result<TreeTerm, LteError> {
        let ctx = self.ctx;
        if tree.is_bushy() {
            let ell = tree.leaf_count_at_root();
            let (q_hat, _) = ctx.defect_weights(ell + 1);
            let y = ctx.problem.exact_derivative(ell + 1, self.t);
            let stage = self.stage_term(tree)?;
            let step = &y * q_hat + ctx.apply_bz(&stage);
            return Ok(TreeTerm { stage, step });
        }
        let children: Vec<DVector<f64>> = tree
            .subtrees()
            .iter()
            .map(|child| self.stage_term(child))
            .collect::<Result<_, _>>()?;
        let refs: Vec<&DVector<f64>> = children.iter().collect();
        let g_val = ctx.apply_g(tree.subtrees().len(), tree.leaf_count_at_root(), self.t, &refs)?;
        let u = ctx.apply_c_power(tree.leaf_count_at_root(), &g_val);
        let w = ctx.solve(&u)?;
        Ok(TreeTerm { stage: ctx.apply_a(&w), step: ctx.apply_b(&w) })
    }
}

/// Stage and step term of a single tree (convenience around the evaluator).
pub fn tree_term(
    tab: &ButcherTableau,
    tree: &RootedTree,
    problem: &SemilinearProblem,
    z: &DMatrix<f64>,
    t: f64,
) -> Result<TreeTerm, LteError> {
    let ctx = KroneckerContext::new(tab, problem, z.clone())?;
    TreeTermEvaluator::new(&ctx, t).term(tree)
}

fn check_order(problem: &SemilinearProblem, max_order: usize) -> Result<(), LteError> {
    let available = problem.smoothness().min(5);
    if max_order > available {
        return Err(LteError::OrderTooHigh { requested: max_order, available });
    }
    Ok(())
}

/// Error series assembled tree by tree: coefficient of `h^i` is the sum of
/// `weight(tau) * term(tau)` over trees with `i` vertices, in canonical
/// order.
pub fn lte_series_tree(
    tab: &ButcherTableau,
    problem: &SemilinearProblem,
    t0: f64,
    z: &DMatrix<f64>,
    max_order: usize,
) -> Result<LteSeries, LteError> {
    check_order(problem, max_order)?;
    let ctx = KroneckerContext::new(tab, problem, z.clone())?;
    let mut evaluator = TreeTermEvaluator::new(&ctx, t0);
    let s = tab.stages();
    let n = problem.dim();
    let mut step_coeffs = Vec::with_capacity(max_order);
    let mut stage_coeffs = Vec::with_capacity(max_order);
    for order in 1..=max_order {
        let mut step = DVector::zeros(n);
        let mut stage = DVector::zeros(s * n);
        for tree in trees::enumerate_trees(order).expect("order <= 5") {
            let weight = tree.series_weight().to_f64().expect("small rational");
            let term = evaluator.term(&tree)?;
            step += term.step * weight;
            stage += term.stage * weight;
        }
        step_coeffs.push(step);
        stage_coeffs.push(stage);
    }
    Ok(LteSeries { max_order, step_coeffs, stage_coeffs })
}

// positive compositions of n into k parts
fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return if n == 0 { vec![vec![]] } else { vec![] };
    }
    if k == 1 {
        return if n >= 1 { vec![vec![n]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=n.saturating_sub(k - 1) {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Error series from the order-by-order recursion: the stage coefficient
/// feeds an expansion of the nonlinearity difference, which feeds the next
/// stage and step coefficients.
pub fn lte_coeffs_direct(
    tab: &ButcherTableau,
    problem: &SemilinearProblem,
    t0: f64,
    z: &DMatrix<f64>,
    max_order: usize,
) -> Result<LteSeries, LteError> {
    check_order(problem, max_order)?;
    let ctx = KroneckerContext::new(tab, problem, z.clone())?;
    let s = tab.stages();
    let n = problem.dim();

    let mut stage_coeffs: Vec<DVector<f64>> = Vec::with_capacity(max_order);
    let mut step_coeffs: Vec<DVector<f64>> = Vec::with_capacity(max_order);
    let mut g_coeffs: Vec<DVector<f64>> = vec![DVector::zeros(s * n)]; // index i <-> h^i

    for i in 1..=max_order {
        let (q_hat, s_hat) = ctx.defect_weights(i);
        let y_i = problem.exact_derivative(i, t0);
        let w = ctx.solve(&ctx.kron(&s_hat, &y_i))?;
        let v = ctx.solve(&g_coeffs[i - 1])?;
        stage_coeffs.push(&w + ctx.apply_a(&v));
        step_coeffs.push(&y_i * q_hat + ctx.apply_bz(&w) + ctx.apply_b(&v));

        if i < max_order {
            // coefficient of h^i in the nonlinearity difference
            let mut acc = DVector::zeros(s * n);
            for ell in 0..i {
                for k in 1..=(i - ell) {
                    let lambda = trees::default_expansion_coefficient(ell, k)
                        .to_f64()
                        .expect("small rational");
                    for parts in compositions(i - ell, k) {
                        // first-order stage coefficients vanish identically
                        if parts.iter().any(|&m| m == 1) {
                            continue;
                        }
                        let args: Vec<&DVector<f64>> =
                            parts.iter().map(|&m| &stage_coeffs[m - 1]).collect();
                        let g_val = ctx.apply_g(k, ell, t0, &args)?;
                        acc += ctx.apply_c_power(ell, &g_val) * lambda;
                    }
                }
            }
            g_coeffs.push(acc);
        }
    }
    Ok(LteSeries { max_order, step_coeffs, stage_coeffs })
}

/// The explicit closed form of the step series through third order,
/// evaluated term by term as an independent reference.
pub fn order3_reference(
    tab: &ButcherTableau,
    problem: &SemilinearProblem,
    t0: f64,
    z: &DMatrix<f64>,
) -> Result<[DVector<f64>; 3], LteError> {
    let ctx = KroneckerContext::new(tab, problem, z.clone())?;
    let y1 = problem.exact_derivative(1, t0);
    let y2 = problem.exact_derivative(2, t0);
    let y3 = problem.exact_derivative(3, t0);
    let (q1, _) = ctx.defect_weights(1);
    let (q2, s2) = ctx.defect_weights(2);
    let (q3, s3) = ctx.defect_weights(3);

    let first = &y1 * q1;

    let w2 = ctx.solve(&ctx.kron(&s2, &y2))?;
    let second = &y2 * q2 + ctx.apply_bz(&w2);

    let w3 = ctx.solve(&ctx.kron(&s3, &y3))?;
    // blockwise multiplication by the Jacobian of g at the initial state
    let gprime = problem.g_jacobian(&problem.exact_solution(t0));
    let mut jw = DVector::zeros(w2.len());
    for i in 0..tab.stages() {
        let block = &gprime * ctx.block(&w2, i);
        jw.rows_mut(i * problem.dim(), problem.dim()).copy_from(&block);
    }
    let third = &y3 * q3 + ctx.apply_bz(&w3) + ctx.apply_b(&ctx.solve(&jw)?);

    Ok([first, second, third])
}

/// Result of [`abstract_recursion_check`].
#[derive(Debug, Clone, Copy)]
pub struct RecursionCheck {
    pub max_rel_diff: f64,
    pub pass: bool,
}

/// Validate the tree-sum solution of the abstract recursion on random
/// data: random inhomogeneous vectors, random symmetric multilinear maps
/// (`k <= 3`, `ell <= 2`), random rational coefficient families. Compares
/// the direct recursion against the weighted tree sum through order 5.
pub fn abstract_recursion_check(dimension: usize, seed: u64) -> RecursionCheck {
    assert!(dimension >= 1 && dimension <= 4, "probe dimension out of range");
    let d = dimension;
    let mut rng = StdRng::seed_from_u64(seed);

    // a_i for i = 1..=4 (order-(i+1) inhomogeneous terms)
    let a: Vec<DVector<f64>> = (0..4)
        .map(|_| DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0)))
        .collect();

    // random rational lambda(ell, k), exact and float views
    let mut lambda_num = HashMap::new();
    for ell in 0..=2usize {
        for k in 1..=3usize {
            let p: i64 = rng.gen_range(-9..=9);
            let q: i64 = rng.gen_range(1..=9);
            lambda_num.insert((ell, k), (p, q));
        }
    }
    let lambda_f64 = |ell: usize, k: usize| -> f64 {
        lambda_num.get(&(ell, k)).map_or(0.0, |&(p, q)| p as f64 / q as f64)
    };
    let lambda_exact = |ell: usize, k: usize| -> BigRational {
        lambda_num
            .get(&(ell, k))
            .map_or_else(|| BigRational::from_integer(0.into()), |&(p, q)| {
                BigRational::new(p.into(), q.into())
            })
    };

    // random tensors behind symmetric k-linear maps
    let mut tensors: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    for ell in 0..=2usize {
        for k in 1..=3usize {
            let len = d * d.pow(k as u32);
            tensors.insert((ell, k), (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect());
        }
    }
    let apply_w = |ell: usize, k: usize, args: &[&DVector<f64>]| -> DVector<f64> {
        let Some(tensor) = tensors.get(&(ell, k)) else {
            return DVector::zeros(d);
        };
        let perms: Vec<Vec<usize>> = match k {
            1 => vec![vec![0]],
            2 => vec![vec![0, 1], vec![1, 0]],
            3 => vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0],
            ],
            _ => unreachable!(),
        };
        let mut out = DVector::zeros(d);
        for perm in &perms {
            for o in 0..d {
                // sum over all index tuples
                let mut idx = vec![0usize; k];
                loop {
                    let mut flat = o;
                    for &i in idx.iter() {
                        flat = flat * d + i;
                    }
                    let mut prod = tensor[flat];
                    for (slot, &i) in idx.iter().enumerate() {
                        prod *= args[perm[slot]][i];
                    }
                    out[o] += prod;
                    // odometer
                    let mut pos = 0;
                    loop {
                        if pos == k {
                            break;
                        }
                        idx[pos] += 1;
                        if idx[pos] < d {
                            break;
                        }
                        idx[pos] = 0;
                        pos += 1;
                    }
                    if pos == k {
                        break;
                    }
                }
            }
        }
        out / perms.len() as f64
    };

    // direct recursion: v[1] = 0, v[i+1] = a_i + sum lambda W(v_parts)
    let mut v: Vec<DVector<f64>> = vec![DVector::zeros(d), DVector::zeros(d)]; // v[0] unused
    for i in 1..=4usize {
        let mut next = a[i - 1].clone();
        for ell in 0..i {
            for k in 1..=(i - ell).min(3) {
                let lam = lambda_f64(ell, k);
                if lam == 0.0 {
                    continue;
                }
                for parts in compositions(i - ell, k) {
                    let args: Vec<&DVector<f64>> = parts.iter().map(|&m| &v[m]).collect();
                    next += apply_w(ell, k, &args) * lam;
                }
            }
        }
        v.push(next);
    }

    // tree evaluation: phi(leaf) = 0, phi(bushy ell) = a_ell, else W applied
    fn phi(
        tree: &RootedTree,
        a: &[DVector<f64>],
        apply_w: &dyn Fn(usize, usize, &[&DVector<f64>]) -> DVector<f64>,
        d: usize,
    ) -> DVector<f64> {
        if tree.order() == 1 {
            return DVector::zeros(d);
        }
        if tree.is_bushy() {
            return a[tree.leaf_count_at_root() - 1].clone();
        }
        let children: Vec<DVector<f64>> = tree
            .subtrees()
            .iter()
            .map(|c| phi(c, a, apply_w, d))
            .collect();
        let refs: Vec<&DVector<f64>> = children.iter().collect();
        apply_w(tree.leaf_count_at_root(), tree.subtrees().len(), &refs)
    }

    let mut max_rel: f64 = 0.0;
    // v[1] must be zero in both formulations
    max_rel = max_rel.max(v[1].norm());
    for i in 2..=5usize {
        let mut tree_sum = DVector::zeros(d);
        for tree in trees::enumerate_trees(i).expect("small order") {
            let weight = tree
                .series_weight_with(&|ell, k| lambda_exact(ell, k))
                .to_f64()
                .expect("small rational");
            tree_sum += phi(&tree, &a, &apply_w, d) * weight;
        }
        let denom = v[i].norm().max(tree_sum.norm()).max(1e-12);
        max_rel = max_rel.max((&v[i] - tree_sum).norm() / denom);
    }
    RecursionCheck { max_rel_diff: max_rel, pass: max_rel <= 1e-10 }
}

/// Remainder-order probe: one-step solver error minus the truncated series
/// through `subtract_order`, fitted on a log-log grid of step sizes.
#[derive(Debug, Clone)]
pub struct RemainderProbe {
    pub slope: f64,
    /// `exp(mean(log r - (m+1) log h))`: the remainder constant at the
    /// expected order `m+1`.
    pub constant: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn one_step_remainder_probe(
    tab: &ButcherTableau,
    problem: &SemilinearProblem,
    t0: f64,
    h_list: &[f64],
    subtract_order: usize,
    cfg: &NewtonConfig,
) -> Result<RemainderProbe, LteError> {
    let mut points = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let err = solver::one_step_error(tab, problem, t0, h, cfg)?;
        let remainder = if subtract_order == 0 {
            err
        } else {
            let z = problem.jacobian() * h;
            let series = lte_series_tree(tab, problem, t0, &z, subtract_order)?;
            err - series.eval_step(h)
        };
        points.push((h, remainder.norm()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(h, _)| h.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, r)| r.max(1e-300).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = cov / var;
    let target = (subtract_order + 1) as f64;
    let constant = (ys
        .iter()
        .zip(&xs)
        .map(|(y, x)| y - target * x)
        .sum::<f64>()
        / n)
        .exp();
    Ok(RemainderProbe { slope, constant, points })
}
