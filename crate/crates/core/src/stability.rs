//! Linear stability analysis: the stability function `R(z)`, A-, AS- and
//! ASI-stability, the superconvergence condition on `R`, logarithmic norms,
//! and the Kronecker-system norm bound behind the stiffness-uniform
//! estimates.
//!
//! Verdicts are tri-state. The supremum checks sample the boundary of the
//! left half-plane through the conformal map `z = (w-1)/(w+1)` of the unit
//! circle plus rays toward infinity; sampling cannot prove a strict bound,
//! so near-threshold results are reported as inconclusive rather than
//! rounded to a boolean.

use crate::linalg::{self, SMat};
use crate::scalar::{Mode, Scalar};
use crate::tableau::ButcherTableau;
use nalgebra::{Complex, DMatrix};
use std::fmt;

/// Guard band around thresholds inside which sampling refuses to decide.
const AXIS_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StabilityError {
    #[error("stacked stage matrix I - A (x) Z is singular (ASI-stability violation for this Z)")]
    SingularKroneckerSystem,
    #[error("Z must be dissipative; logarithmic norm is {0:.3e} > 0")]
    NotDissipative(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds => write!(f, "holds"),
            Verdict::Fails => write!(f, "fails"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// A point witnessing a failed bound, with the offending value there.
#[derive(Debug, Clone, Copy)]
pub struct Witness {
    pub z: Complex<f64>,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    /// Sampled supremum of the checked quantity over the boundary.
    pub sampled_sup: f64,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.verdict)?;
        if self.sampled_sup.is_finite() {
            write!(f, " (sampled sup {:.6e})", self.sampled_sup)?;
        }
        if let Some(w) = &self.witness {
            write!(f, " witness z = {:.6e}{:+.6e}i value {:.6e}", w.z.re, w.z.im, w.value)?;
        }
        Ok(())
    }
}

/// Value of `R` at infinity, by degree comparison of the reduced fraction.
#[derive(Debug, Clone, PartialEq)]
pub enum RAtInfinity {
    Finite(f64),
    Infinite,
}

impl fmt::Display for RAtInfinity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RAtInfinity::Finite(v) => write!(f, "{v:.12}"),
            RAtInfinity::Infinite => write!(f, "infinite"),
        }
    }
}

/// Ratio of polynomials with coefficients in ascending order. The stability
/// function is stored this way; both constant terms are 1.
#[derive(Debug, Clone)]
pub struct RationalFunction {
    pub numerator: Vec<Scalar>,
    pub denominator: Vec<Scalar>,
}

impl RationalFunction {
    pub fn eval(&self, z: Complex<f64>) -> Complex<f64> {
        poly_eval(&self.numerator, z) / poly_eval(&self.denominator, z)
    }

    pub fn at_infinity(&self) -> RAtInfinity {
        let dn = effective_degree(&self.numerator);
        let dd = effective_degree(&self.denominator);
        match dn.cmp(&dd) {
            std::cmp::Ordering::Greater => RAtInfinity::Infinite,
            std::cmp::Ordering::Less => RAtInfinity::Finite(0.0),
            std::cmp::Ordering::Equal => RAtInfinity::Finite(
                self.numerator[dn].to_f64() / self.denominator[dd].to_f64(),
            ),
        }
    }
}

fn poly_eval(coeffs: &[Scalar], z: Complex<f64>) -> Complex<f64> {
    coeffs
        .iter()
        .rev()
        .fold(Complex::new(0.0, 0.0), |acc, c| acc * z + Complex::new(c.to_f64(), 0.0))
}

// degree after discarding trailing coefficients that are zero (or float noise)
fn effective_degree(coeffs: &[Scalar]) -> usize {
    let scale = coeffs.iter().map(Scalar::magnitude).fold(0.0, f64::max);
    let cutoff = match coeffs.first().map(Scalar::mode) {
        Some(Mode::Exact) => 0.0,
        _ => 1e-12 * scale.max(1.0),
    };
    coeffs.iter().rposition(|c| !c.is_zero(cutoff)).unwrap_or(0)
}

/// `R(z) = det(I - zA + z 1 b^T) / det(I - zA)`, computed by exact Lagrange
/// interpolation at integer nodes in rational mode and by float
/// interpolation otherwise (also the fallback for more than 8 stages).
pub fn stability_function(tab: &ButcherTableau) -> RationalFunction {
    let tab_eff;
    let tab = if tab.mode() == Mode::Exact && tab.stages() > 8 {
        tab_eff = tab.to_float_mode();
        &tab_eff
    } else {
        tab
    };
    let s = tab.stages();
    // symmetric integer nodes 0, 1, -1, 2, -2, ...
    let nodes: Vec<Scalar> = (0..=s)
        .map(|k| {
            let v = (k as i64 + 1) / 2 * if k % 2 == 1 { 1 } else { -1 };
            match tab.mode() {
                Mode::Exact => Scalar::from_int(v),
                Mode::Float => Scalar::from_f64(v as f64),
            }
        })
        .collect();

    let mut num_vals = Vec::with_capacity(s + 1);
    let mut den_vals = Vec::with_capacity(s + 1);
    for node in &nodes {
        let mut den_m = SMat::identity(s);
        let mut num_m = SMat::identity(s);
        for i in 0..s {
            for j in 0..s {
                let za = node.clone() * tab.a().at(i, j).clone();
                *den_m.at_mut(i, j) = den_m.at(i, j).clone() - za.clone();
                let zb = node.clone() * tab.b()[j].clone();
                *num_m.at_mut(i, j) = num_m.at(i, j).clone() - za + zb;
            }
        }
        den_vals.push(den_m.det());
        num_vals.push(num_m.det());
    }
    let mut numerator = linalg::lagrange_interpolate(&nodes, &num_vals);
    let mut denominator = linalg::lagrange_interpolate(&nodes, &den_vals);
    numerator.truncate(effective_degree(&numerator) + 1);
    denominator.truncate(effective_degree(&denominator) + 1);
    RationalFunction { numerator, denominator }
}

/// Boundary of the left half-plane: the unit circle pushed through
/// `z = (w-1)/(w+1)`, omitting the preimage of infinity.
pub fn boundary_samples(n: usize) -> Vec<Complex<f64>> {
    (0..n)
        .filter_map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            let w = Complex::new(theta.cos(), theta.sin());
            let denom = w + 1.0;
            (denom.norm() > 1e-12).then(|| (w - 1.0) / denom)
        })
        .collect()
}

// large |z| probes along the negative real axis and the imaginary axis
fn ray_samples() -> Vec<Complex<f64>> {
    [1e3, 1e6, 1e9, 1e12]
        .iter()
        .flat_map(|&t| {
            [Complex::new(-t, 0.0), Complex::new(0.0, t), Complex::new(0.0, -t)]
        })
        .collect()
}

/// Roots of a polynomial (ascending coefficients). Exact zero roots are
/// stripped first; the rest come from a simultaneous (Durand-Kerner)
/// iteration, which stays robust where QR-type eigensolvers stall on
/// nilpotent companion matrices.
pub fn poly_roots(coeffs: &[Scalar]) -> Vec<Complex<f64>> {
    let deg = effective_degree(coeffs);
    if deg == 0 {
        return Vec::new();
    }
    let c: Vec<f64> = coeffs[..=deg].iter().map(Scalar::to_f64).collect();
    let scale = c.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut roots = Vec::with_capacity(deg);
    let mut low = 0;
    while low < deg && c[low].abs() <= 1e-14 * scale {
        roots.push(Complex::new(0.0, 0.0));
        low += 1;
    }
    let c = &c[low..];
    let d = c.len() - 1;
    if d == 0 {
        return roots;
    }
    let monic: Vec<Complex<f64>> =
        c.iter().map(|x| Complex::new(x / c[d], 0.0)).collect();
    let eval = |z: Complex<f64>| -> Complex<f64> {
        monic.iter().rev().fold(Complex::new(0.0, 0.0), |acc, &ck| acc * z + ck)
    };
    let radius = 1.0 + monic.iter().take(d).map(|x| x.norm()).fold(0.0, f64::max);
    let mut zs: Vec<Complex<f64>> = (0..d)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / d as f64 + 0.4;
            Complex::new(radius * angle.cos(), radius * angle.sin())
        })
        .collect();
    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for k in 0..d {
            let mut denom = Complex::new(1.0, 0.0);
            for j in 0..d {
                if j != k {
                    denom *= zs[k] - zs[j];
                }
            }
            if denom.norm() == 0.0 {
                zs[k] += Complex::new(1e-8, 1e-8);
                continue;
            }
            let step = eval(zs[k]) / denom;
            zs[k] -= step;
            max_step = max_step.max(step.norm() / (1.0 + zs[k].norm()));
        }
        if max_step < 1e-14 {
            break;
        }
    }
    roots.extend(zs);
    roots
}

/// Eigenvalues of a small dense matrix: roots of its characteristic
/// polynomial, built by determinant interpolation.
pub fn matrix_eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    if n == 0 {
        return Vec::new();
    }
    let nodes: Vec<f64> = (0..=n)
        .map(|k| ((k as i64 + 1) / 2 * if k % 2 == 1 { 1 } else { -1 }) as f64)
        .collect();
    let values: Vec<Scalar> = nodes
        .iter()
        .map(|&x| {
            let shifted = DMatrix::<f64>::identity(n, n) * x - m;
            Scalar::from_f64(shifted.lu().determinant())
        })
        .collect();
    let node_scalars: Vec<Scalar> = nodes.iter().map(|&x| Scalar::from_f64(x)).collect();
    let char_poly = linalg::lagrange_interpolate(&node_scalars, &values);
    poly_roots(&char_poly)
}

/// A-stability: no pole of `R` in the closed left half-plane and
/// `|R(z)| <= 1` there, checked on the sampled boundary (the maximum
/// principle extends the boundary bound inside). Also scans the negative
/// real axis so failures get an interior witness.
pub fn check_a_stability(tab: &ButcherTableau) -> CheckOutcome {
    let rf = stability_function(tab);
    for root in poly_roots(&rf.denominator) {
        if root.re < -AXIS_GUARD {
            return CheckOutcome {
                verdict: Verdict::Fails,
                witness: Some(Witness { z: root, value: f64::INFINITY }),
                sampled_sup: f64::INFINITY,
            };
        }
        if root.re <= AXIS_GUARD {
            return CheckOutcome {
                verdict: Verdict::Inconclusive,
                witness: None,
                sampled_sup: f64::NAN,
            };
        }
    }
    let mut sup: f64 = 0.0;
    let mut arg = Complex::new(0.0, 0.0);
    for z in boundary_samples(crate::defaults::BOUNDARY_SAMPLES)
        .into_iter()
        .chain(ray_samples())
    {
        let v = rf.eval(z).norm();
        if v > sup {
            sup = v;
            arg = z;
        }
    }
    if let RAtInfinity::Infinite = rf.at_infinity() {
        sup = f64::INFINITY;
    }
    if sup <= 1.0 + 1e-12 {
        return CheckOutcome { verdict: Verdict::Holds, witness: None, sampled_sup: sup };
    }
    if sup > 1.0 + AXIS_GUARD {
        // prefer a real-axis witness when one exists
        let witness = (1..=400)
            .map(|k| Complex::new(-0.05 * k as f64, 0.0))
            .find(|&z| rf.eval(z).norm() > 1.0 + AXIS_GUARD)
            .map(|z| Witness { z, value: rf.eval(z).norm() })
            .unwrap_or(Witness { z: arg, value: sup });
        return CheckOutcome { verdict: Verdict::Fails, witness: Some(witness), sampled_sup: sup };
    }
    CheckOutcome { verdict: Verdict::Inconclusive, witness: None, sampled_sup: sup }
}

fn complex_matrix_norm(m: &DMatrix<Complex<f64>>) -> f64 {
    m.clone().svd(false, false).singular_values[0]
}

fn resolvent(tab: &ButcherTableau, z: Complex<f64>) -> Option<DMatrix<Complex<f64>>> {
    let s = tab.stages();
    let a = tab.a_f64();
    let m = DMatrix::from_fn(s, s, |i, j| {
        let delta = if i == j { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) };
        delta - z * Complex::new(a[(i, j)], 0.0)
    });
    m.try_inverse()
}

/// `||(I - zA)^{-1}||` at one point; infinite when singular.
pub fn resolvent_norm(tab: &ButcherTableau, z: Complex<f64>) -> f64 {
    resolvent(tab, z).map_or(f64::INFINITY, |inv| complex_matrix_norm(&inv))
}

/// `||z b^T (I - zA)^{-1}||` at one point.
pub fn weighted_resolvent_norm(tab: &ButcherTableau, z: Complex<f64>) -> f64 {
    let Some(inv) = resolvent(tab, z) else { return f64::INFINITY };
    let b = tab.b_f64();
    let s = tab.stages();
    let mut row = vec![Complex::new(0.0, 0.0); s];
    for j in 0..s {
        for i in 0..s {
            row[j] += Complex::new(b[i], 0.0) * inv[(i, j)];
        }
    }
    z.norm() * row.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn check_operator_bound(
    tab: &ButcherTableau,
    quantity: impl Fn(Complex<f64>) -> f64,
) -> CheckOutcome {
    // poles of (I - zA)^{-1} sit at z = 1/lambda over eigenvalues of A;
    // 1/lambda lies in the closed left half-plane iff Re(lambda) <= 0
    let a = tab.a_f64();
    let scale = a.amax().max(1.0);
    for lambda in matrix_eigenvalues(&a).iter() {
        if lambda.norm() <= 1e-12 * scale {
            continue;
        }
        if lambda.re < -AXIS_GUARD * lambda.norm() {
            let pole = 1.0 / lambda;
            return CheckOutcome {
                verdict: Verdict::Fails,
                witness: Some(Witness { z: pole, value: f64::INFINITY }),
                sampled_sup: f64::INFINITY,
            };
        }
        if lambda.re <= AXIS_GUARD * lambda.norm() {
            return CheckOutcome {
                verdict: Verdict::Inconclusive,
                witness: None,
                sampled_sup: f64::NAN,
            };
        }
    }

    let mut sup: f64 = 0.0;
    for z in boundary_samples(crate::defaults::BOUNDARY_SAMPLES) {
        sup = sup.max(quantity(z));
    }
    // growth along a ray detects unboundedness as z -> infinity
    let q6 = quantity(Complex::new(-1e6, 0.0));
    let q12 = quantity(Complex::new(-1e12, 0.0));
    sup = sup.max(q6);
    if q12 > 10.0 * q6.max(1.0) {
        return CheckOutcome {
            verdict: Verdict::Fails,
            witness: Some(Witness { z: Complex::new(-1e12, 0.0), value: q12 }),
            sampled_sup: f64::INFINITY,
        };
    }
    sup = sup.max(q12);
    for z in ray_samples() {
        sup = sup.max(quantity(z));
    }
    CheckOutcome { verdict: Verdict::Holds, witness: None, sampled_sup: sup }
}

/// ASI-stability: `(I - zA)^{-1}` exists and stays bounded on the closed
/// left half-plane (infinity included).
pub fn check_asi_stability(tab: &ButcherTableau) -> CheckOutcome {
    check_operator_bound(tab, |z| resolvent_norm(tab, z))
}

/// AS-stability: `z b^T (I - zA)^{-1}` stays bounded on the closed left
/// half-plane.
pub fn check_as_stability(tab: &ButcherTableau) -> CheckOutcome {
    check_operator_bound(tab, |z| weighted_resolvent_norm(tab, z))
}

/// Superconvergence condition on the stability function:
/// `lim R(z) != 1` at infinity and `(1 - R(z))/z` zero-free on the closed
/// left half-plane.
pub fn check_r_condition(tab: &ButcherTableau) -> CheckOutcome {
    let rf = stability_function(tab);
    // (1 - R)/z = (den - num)/(z den); num(0) = den(0) = 1 cancels the pole
    let len = rf.numerator.len().max(rf.denominator.len());
    let coeff = |v: &[Scalar], k: usize| v.get(k).cloned().unwrap_or_else(Scalar::zero);
    let shifted: Vec<Scalar> = (1..len)
        .map(|k| coeff(&rf.denominator, k) - coeff(&rf.numerator, k))
        .collect();
    let mut worst: Option<Witness> = None;
    for root in poly_roots(&shifted) {
        if root.re < -AXIS_GUARD {
            worst = Some(Witness { z: root, value: 0.0 });
        } else if root.re <= AXIS_GUARD {
            return CheckOutcome {
                verdict: Verdict::Inconclusive,
                witness: None,
                sampled_sup: f64::NAN,
            };
        }
    }
    if let Some(w) = worst {
        return CheckOutcome { verdict: Verdict::Fails, witness: Some(w), sampled_sup: f64::NAN };
    }
    let inf_is_one = match rf.at_infinity() {
        RAtInfinity::Infinite => false,
        RAtInfinity::Finite(v) => (v - 1.0).abs() <= AXIS_GUARD,
    };
    if inf_is_one {
        return CheckOutcome {
            verdict: Verdict::Fails,
            witness: Some(Witness { z: Complex::new(f64::INFINITY, 0.0), value: 1.0 }),
            sampled_sup: f64::NAN,
        };
    }
    CheckOutcome { verdict: Verdict::Holds, witness: None, sampled_sup: f64::NAN }
}

/// Largest eigenvalue of `(M + M^T)/2`: the logarithmic 2-norm.
pub fn log_norm(m: &DMatrix<f64>) -> f64 {
    assert_eq!(m.nrows(), m.ncols(), "log norm needs a square matrix");
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.max()
}

/// `||(I - A (x) Z)^{-1}||` for a concrete dissipative `Z`, together with
/// the sampled scalar boundary supremum that bounds it.
pub fn nevanlinna_probe(
    tab: &ButcherTableau,
    z_matrix: &DMatrix<f64>,
) -> Result<(f64, f64), StabilityError> {
    let mu = log_norm(z_matrix);
    if mu > 1e-10 {
        return Err(StabilityError::NotDissipative(mu));
    }
    let kron_norm = kronecker_inverse_norm(tab, z_matrix)?;
    let sup = resolvent_boundary_sup(tab, crate::defaults::BOUNDARY_SAMPLES);
    Ok((kron_norm, sup))
}

/// `||(I - A (x) Z)^{-1}||` in the 2-norm of the stacked stage space.
pub fn kronecker_inverse_norm(
    tab: &ButcherTableau,
    z_matrix: &DMatrix<f64>,
) -> Result<f64, StabilityError> {
    let s = tab.stages();
    let n = z_matrix.nrows();
    let m = DMatrix::<f64>::identity(s * n, s * n) - tab.a_f64().kronecker(z_matrix);
    let inv = m.try_inverse().ok_or(StabilityError::SingularKroneckerSystem)?;
    Ok(inv.svd(false, false).singular_values[0])
}

/// Sampled supremum of `||(I - zA)^{-1}||` over the boundary (plus rays).
pub fn resolvent_boundary_sup(tab: &ButcherTableau, samples: usize) -> f64 {
    boundary_samples(samples)
        .into_iter()
        .chain(ray_samples())
        .map(|z| resolvent_norm(tab, z))
        .fold(0.0, f64::max)
}

/// All stability verdicts for one tableau.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub tableau: String,
    pub a_stable: CheckOutcome,
    pub as_stable: CheckOutcome,
    pub asi_stable: CheckOutcome,
    pub r_condition: CheckOutcome,
    pub r_at_infinity: RAtInfinity,
    pub boundary_samples: usize,
}

pub fn stability_report(tab: &ButcherTableau) -> StabilityReport {
    StabilityReport {
        tableau: tab.name().to_string(),
        a_stable: check_a_stability(tab),
        as_stable: check_as_stability(tab),
        asi_stable: check_asi_stability(tab),
        r_condition: check_r_condition(tab),
        r_at_infinity: stability_function(tab).at_infinity(),
        boundary_samples: crate::defaults::BOUNDARY_SAMPLES,
    }
}

impl fmt::Display for StabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "stability report for {} ({} boundary samples)",
            self.tableau, self.boundary_samples
        )?;
        writeln!(f, "  A-stability:   {}", self.a_stable)?;
        writeln!(f, "  AS-stability:  {}", self.as_stable)?;
        writeln!(f, "  ASI-stability: {}", self.asi_stable)?;
        writeln!(f, "  R-condition:   {}", self.r_condition)?;
        writeln!(f, "  R at infinity: {}", self.r_at_infinity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableau::catalog_lookup;
    use nalgebra::DVector;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn stability_function_backward_euler() {
        let rf = stability_function(&catalog_lookup("backward-euler").unwrap());
        assert_eq!(rf.numerator, vec![Scalar::one()]);
        assert_eq!(rf.denominator, vec![Scalar::one(), Scalar::from_int(-1)]);
        assert_eq!(rf.at_infinity(), RAtInfinity::Finite(0.0));
    }

    #[test]
    fn stability_function_implicit_midpoint() {
        let rf = stability_function(&catalog_lookup("implicit-midpoint").unwrap());
        assert_eq!(rf.numerator, vec![Scalar::one(), Scalar::ratio(1, 2)]);
        assert_eq!(rf.denominator, vec![Scalar::one(), Scalar::ratio(-1, 2)]);
        assert_eq!(rf.at_infinity(), RAtInfinity::Finite(-1.0));
    }

    #[test]
    fn stability_function_classical_rk4_is_truncated_exponential() {
        let rf = stability_function(&catalog_lookup("classical-rk4").unwrap());
        assert_eq!(rf.denominator, vec![Scalar::one()]);
        let expected = vec![
            Scalar::one(),
            Scalar::one(),
            Scalar::ratio(1, 2),
            Scalar::ratio(1, 6),
            Scalar::ratio(1, 24),
        ];
        assert_eq!(rf.numerator, expected);
    }

    #[test]
    fn determinant_formula_matches_direct_evaluation() {
        let mut rng = StdRng::seed_from_u64(7);
        for name in crate::tableau::CATALOG {
            let tab = catalog_lookup(name).unwrap();
            let rf = stability_function(&tab);
            for _ in 0..50 {
                let z = Complex::new(rng.gen_range(-3.0..1.0), rng.gen_range(-3.0..3.0));
                let Some(inv) = resolvent(&tab, z) else { continue };
                let b = tab.b_f64();
                let ones = DVector::from_element(tab.stages(), Complex::new(1.0, 0.0));
                let x = inv * ones;
                let direct = Complex::new(1.0, 0.0)
                    + z * (0..tab.stages())
                        .map(|i| Complex::new(b[i], 0.0) * x[i])
                        .sum::<Complex<f64>>();
                let via_dets = rf.eval(z);
                assert!(
                    (direct - via_dets).norm() <= 1e-10 * direct.norm().max(1.0),
                    "{name} at z = {z}"
                );
            }
        }
    }

    #[test]
    fn poly_roots_handles_zero_and_simple_roots() {
        // z^4: all roots at the origin (nilpotent companion case)
        let quartic = vec![
            Scalar::zero(),
            Scalar::zero(),
            Scalar::zero(),
            Scalar::zero(),
            Scalar::one(),
        ];
        let roots = poly_roots(&quartic);
        assert_eq!(roots.len(), 4);
        assert!(roots.iter().all(|r| r.norm() < 1e-12));

        // (z - 1)(z - 2)(z + 3) = z^3 - 7z + 6
        let cubic = vec![
            Scalar::from_int(6),
            Scalar::from_int(-7),
            Scalar::zero(),
            Scalar::one(),
        ];
        let mut reals: Vec<f64> = poly_roots(&cubic).iter().map(|r| r.re).collect();
        reals.sort_by(f64::total_cmp);
        assert!((reals[0] + 3.0).abs() < 1e-10);
        assert!((reals[1] - 1.0).abs() < 1e-10);
        assert!((reals[2] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn eigenvalues_of_nilpotent_matrix_terminate() {
        let a = catalog_lookup("classical-rk4").unwrap().a_f64();
        let eigs = matrix_eigenvalues(&a);
        assert_eq!(eigs.len(), 4);
        assert!(eigs.iter().all(|e| e.norm() < 1e-10), "{eigs:?}");
        // and a defective cluster: the SDIRK diagonal gamma, three times
        let sdirk = catalog_lookup("sdirk-norsett-3").unwrap().a_f64();
        let gamma = sdirk[(0, 0)];
        for e in matrix_eigenvalues(&sdirk) {
            assert!((e - Complex::new(gamma, 0.0)).norm() < 1e-4, "{e}");
        }
    }

    #[test]
    fn a_stability_verdicts() {
        let verdict =
            |name: &str| check_a_stability(&catalog_lookup(name).unwrap()).verdict;
        assert_eq!(verdict("backward-euler"), Verdict::Holds);
        assert_eq!(verdict("implicit-midpoint"), Verdict::Holds);
        assert_eq!(verdict("gauss-2"), Verdict::Holds);
        let rk4 = check_a_stability(&catalog_lookup("classical-rk4").unwrap());
        assert_eq!(rk4.verdict, Verdict::Fails);
        let w = rk4.witness.expect("failure carries a witness");
        assert!(w.z.im.abs() < 1e-12 && w.z.re < 0.0, "real-axis witness, got {:?}", w.z);
        assert!(w.value > 1.0);
    }

    #[test]
    fn asi_and_as_verdicts() {
        for name in [
            "backward-euler",
            "implicit-midpoint",
            "trapezoid",
            "gauss-2",
            "gauss-3",
            "radau-iia-2",
            "radau-iia-3",
            "sdirk-norsett-3",
        ] {
            let tab = catalog_lookup(name).unwrap();
            assert_eq!(check_asi_stability(&tab).verdict, Verdict::Holds, "{name} ASI");
            assert_eq!(check_as_stability(&tab).verdict, Verdict::Holds, "{name} AS");
        }
        let rk4 = catalog_lookup("classical-rk4").unwrap();
        assert_eq!(check_asi_stability(&rk4).verdict, Verdict::Fails);
        assert_eq!(check_as_stability(&rk4).verdict, Verdict::Fails);
    }

    #[test]
    fn backward_euler_resolvent_sup_is_one() {
        let be = catalog_lookup("backward-euler").unwrap();
        let out = check_asi_stability(&be);
        assert_eq!(out.verdict, Verdict::Holds);
        assert!((out.sampled_sup - 1.0).abs() < 1e-6, "sup {}", out.sampled_sup);
        let asq = check_as_stability(&be);
        assert!(
            asq.sampled_sup >= 1.0 - 1e-6 && asq.sampled_sup <= 1.0 + 1e-9,
            "sup {}",
            asq.sampled_sup
        );
    }

    #[test]
    fn r_condition_verdicts() {
        let verdict =
            |name: &str| check_r_condition(&catalog_lookup(name).unwrap()).verdict;
        assert_eq!(verdict("backward-euler"), Verdict::Holds);
        assert_eq!(verdict("implicit-midpoint"), Verdict::Holds);
        assert_eq!(verdict("trapezoid"), Verdict::Holds);
        assert_eq!(verdict("gauss-2"), Verdict::Fails);
        // the gauss-2 failure comes from the limit at infinity being 1
        let rf = stability_function(&catalog_lookup("gauss-2").unwrap());
        match rf.at_infinity() {
            RAtInfinity::Finite(v) => assert!((v - 1.0).abs() < 1e-12),
            RAtInfinity::Infinite => panic!("diagonal approximant is finite at infinity"),
        }
    }

    #[test]
    fn log_norm_examples() {
        let neg_id = DMatrix::from_diagonal(&DVector::from_element(3, -1.0));
        assert!((log_norm(&neg_id) + 1.0).abs() < 1e-14);

        let shear = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -1.0]);
        assert!(log_norm(&shear).abs() < 1e-14);

        // scaled second-difference matrix with Dirichlet ends
        let n = 10;
        let lap = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                -2.0
            } else if i.abs_diff(j) == 1 {
                1.0
            } else {
                0.0
            }
        }) * (n as f64 + 1.0).powi(2);
        assert!(log_norm(&lap) < 0.0);
    }

    #[test]
    fn nevanlinna_probe_scalar_cases() {
        let be = catalog_lookup("backward-euler").unwrap();
        let zero = DMatrix::<f64>::zeros(1, 1);
        let (norm, sup) = nevanlinna_probe(&be, &zero).unwrap();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(sup >= 1.0 - 1e-6);

        let stiff = DMatrix::from_element(1, 1, -1e6);
        let (norm, sup) = nevanlinna_probe(&be, &stiff).unwrap();
        assert!(norm <= 1.0 && norm < 1e-5);
        assert!(norm <= sup + 1e-6);

        let bad = DMatrix::from_element(1, 1, 2.0);
        assert!(matches!(nevanlinna_probe(&be, &bad), Err(StabilityError::NotDissipative(_))));
    }

    #[test]
    fn nevanlinna_bound_on_random_dissipative_matrices() {
        let mut rng = StdRng::seed_from_u64(42);
        let be = catalog_lookup("backward-euler").unwrap();
        let trap = catalog_lookup("trapezoid").unwrap();
        for _ in 0..10 {
            let n = rng.gen_range(1..=4);
            let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let mu = log_norm(&raw);
            let z = &raw - DMatrix::identity(n, n) * (mu + 0.1);
            for tab in [&be, &trap] {
                let (norm, sup) = nevanlinna_probe(tab, &z).unwrap();
                assert!(norm <= sup + 1e-6, "{}: {norm} vs {sup}", tab.name());
            }
        }
    }

    #[test]
    fn report_prints_all_verdicts() {
        let text = stability_report(&catalog_lookup("gauss-2").unwrap()).to_string();
        assert!(text.contains("A-stability:   holds"), "{text}");
        assert!(text.contains("R-condition:   fails"), "{text}");
    }
}
