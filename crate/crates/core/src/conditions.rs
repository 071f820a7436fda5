//! Semilinear order conditions.
//!
//! Each rooted tree `tau` carries a vector space `V_tau` in stage space:
//!
//! * `tau = [tau_0^l]` (bushy): `V_tau = span{ A^j s_hat_(l+1) }`,
//! * `tau = [tau_0^l t_1..t_k]`: `V_tau = span{ A^(j+1) C^l (b_1 x .. x b_k) }`
//!   over `j` and basis vectors `b_i` of the child spaces (`x` elementwise).
//!
//! The method has semilinear order `p_SL` when, for every tree of order up
//! to `p_SL`, the weight vector `b` is orthogonal to the associated
//! expressions: `q_hat_(l+1) = 0` and `b^T beta = 0` for bushy trees,
//! `b^T A^j C^l (b_1 x .. x b_k) = 0` otherwise. Trees that are not
//! semi-lone-child-avoiding yield conditions implied by smaller trees and
//! can be skipped.

use crate::linalg::{self, SpanBasis};
use crate::scalar::{Mode, Scalar};
use crate::tableau::ButcherTableau;
use crate::trees::{self, RootedTree};
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConditionError {
    #[error("the single-vertex tree has no stage space")]
    LeafHasNoSpace,
    #[error("max_order {0} exceeds the supported cap {1}")]
    MaxOrderTooLarge(usize, usize),
    #[error("unknown condition label `{0}`")]
    UnknownLabel(String),
    #[error(transparent)]
    Tree(#[from] trees::TreeError),
}

/// Basis of `V_tau` for one tableau. In exact mode the columns are the
/// generators that increased the rank; in float mode they are orthonormal.
#[derive(Debug, Clone)]
pub struct TreeSpaceBasis {
    pub tree: RootedTree,
    basis: SpanBasis,
    pub generators_tried: usize,
}

impl TreeSpaceBasis {
    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    pub fn columns(&self) -> &[Vec<Scalar>] {
        self.basis.columns()
    }

    pub fn mode(&self) -> Mode {
        self.basis.mode()
    }

    /// Residual of `v` against the span (0 when contained, exact mode).
    pub fn span_residual(&self, v: &[Scalar]) -> f64 {
        self.basis.residual_of(v)
    }

    /// Max residual of `A*beta` against the span over basis columns `beta`.
    /// Zero (up to the tolerance) certifies A-invariance of the space.
    pub fn a_invariance_residual(&self, tab: &ButcherTableau) -> f64 {
        self.columns()
            .iter()
            .map(|beta| self.basis.residual_of(&tab.a().mul_vec(beta)))
            .fold(0.0, f64::max)
    }
}

/// Per-tree outcome inside an [`OrderReport`].
#[derive(Debug, Clone)]
pub struct TreeConditionRecord {
    pub tree: RootedTree,
    pub satisfied: bool,
    pub max_residual: f64,
    pub skipped_as_redundant: bool,
}

/// Result of the semilinear order check up to `max_order`.
#[derive(Debug, Clone)]
pub struct OrderReport {
    pub p_sl: usize,
    pub records: Vec<TreeConditionRecord>,
    pub tol: f64,
    pub reduction_used: bool,
    pub max_order: usize,
}

impl OrderReport {
    /// True when every examined order passed, i.e. `p_sl` hit `max_order`.
    pub fn saturated(&self) -> bool {
        self.p_sl == self.max_order
    }
}

impl fmt::Display for OrderReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "semilinear order p_SL = {}{} (tol {:.1e}, reduction {})",
            self.p_sl,
            if self.saturated() { " (saturated at max order)" } else { "" },
            self.tol,
            if self.reduction_used { "on" } else { "off" },
        )?;
        writeln!(
            f,
            "{:<14} {:>5} {:>10} {:>13} {:>8}",
            "tree", "order", "satisfied", "max_residual", "skipped"
        )?;
        for r in &self.records {
            writeln!(
                f,
                "{:<14} {:>5} {:>10} {:>13.3e} {:>8}",
                r.tree.encoding(),
                r.tree.order(),
                r.satisfied,
                r.max_residual,
                r.skipped_as_redundant,
            )?;
        }
        Ok(())
    }
}

/// Caches the `V_tau` bases of one tableau across related queries.
pub struct SpaceCache<'a> {
    tab: &'a ButcherTableau,
    rank_tol: f64,
    spaces: HashMap<RootedTree, TreeSpaceBasis>,
}

impl<'a> SpaceCache<'a> {
    pub fn new(tab: &'a ButcherTableau, rank_tol: f64) -> SpaceCache<'a> {
        SpaceCache { tab, rank_tol, spaces: HashMap::new() }
    }

    pub fn space(&mut self, tree: &RootedTree) -> Result<&TreeSpaceBasis, ConditionError> {
        if tree.order() == 1 {
            return Err(ConditionError::LeafHasNoSpace);
        }
        if !self.spaces.contains_key(tree) {
            let built = self.build(tree)?;
            self.spaces.insert(tree.clone(), built);
        }
        Ok(&self.spaces[tree])
    }

    fn build(&mut self, tree: &RootedTree) -> Result<TreeSpaceBasis, ConditionError> {
        let s = self.tab.stages();
        let mut basis = SpanBasis::new(self.tab.mode(), s, self.rank_tol);
        let mut tried = 0;

        if tree.is_bushy() {
            // Krylov chain on s_hat_(l+1); a failed insertion saturates it.
            let mut v = self.tab.defect_pair(tree.leaf_count_at_root() + 1).s_hat;
            for _ in 0..s {
                tried += 1;
                if !basis.try_insert(&v) {
                    break;
                }
                v = self.tab.a().mul_vec(&v);
            }
        } else {
            let products = self.child_products(tree)?;
            let mut current: Vec<Vec<Scalar>> =
                products.iter().map(|w| self.tab.a().mul_vec(w)).collect();
            for _ in 0..s {
                let mut grew = false;
                for w in &current {
                    tried += 1;
                    grew |= basis.try_insert(w);
                }
                // a pass that adds nothing keeps adding nothing: the span
                // is then already invariant under multiplication by A
                if !grew {
                    break;
                }
                current = current.iter().map(|w| self.tab.a().mul_vec(w)).collect();
            }
        }

        Ok(TreeSpaceBasis { tree: tree.clone(), basis, generators_tried: tried })
    }

    /// Vectors `C^l (b_1 x .. x b_k)` over all child basis combinations.
    fn child_products(&mut self, tree: &RootedTree) -> Result<Vec<Vec<Scalar>>, ConditionError> {
        let children = tree.subtrees().to_vec();
        if children.is_empty() {
            return Ok(Vec::new());
        }
        let mut child_cols: Vec<Vec<Vec<Scalar>>> = Vec::with_capacity(children.len());
        for child in &children {
            let cols = self.space(child)?.columns().to_vec();
            if cols.is_empty() {
                return Ok(Vec::new()); // a rank-0 child space kills every product
            }
            child_cols.push(cols);
        }
        let c_pow = linalg::elementwise_pow(self.tab.c(), tree.leaf_count_at_root());
        let mut products = Vec::new();
        let mut combo = vec![0usize; children.len()];
        loop {
            let mut w = c_pow.clone();
            for (cols, &idx) in child_cols.iter().zip(&combo) {
                w = linalg::hadamard(&w, &cols[idx]);
            }
            products.push(w);
            // advance the mixed-radix counter
            let mut pos = 0;
            loop {
                if pos == combo.len() {
                    return Ok(products);
                }
                combo[pos] += 1;
                if combo[pos] < child_cols[pos].len() {
                    break;
                }
                combo[pos] = 0;
                pos += 1;
            }
        }
    }

    /// Residuals whose joint vanishing is the order condition of `tree`.
    pub fn condition_residuals(
        &mut self,
        tree: &RootedTree,
    ) -> Result<Vec<Scalar>, ConditionError> {
        let tab = self.tab;
        if tree.order() == 1 {
            return Ok(vec![tab.defect_pair(1).q_hat]);
        }
        if tree.is_bushy() {
            let mut residuals = vec![tab.defect_pair(tree.leaf_count_at_root() + 1).q_hat];
            let space = self.space(tree)?;
            for beta in space.columns() {
                residuals.push(linalg::dot(tab.b(), beta));
            }
            return Ok(residuals);
        }
        let products = self.child_products(tree)?;
        let mut residuals = Vec::new();
        for w in products {
            let mut v = w;
            for _ in 0..tab.stages() {
                residuals.push(linalg::dot(tab.b(), &v));
                v = tab.a().mul_vec(&v);
            }
        }
        Ok(residuals)
    }
}

/// Build the basis of `V_tau`. Errors on the single-vertex tree.
pub fn v_space(
    tab: &ButcherTableau,
    tree: &RootedTree,
    rank_tol: f64,
) -> Result<TreeSpaceBasis, ConditionError> {
    let mut cache = SpaceCache::new(tab, rank_tol);
    cache.space(tree).cloned()
}

/// Residuals of the order condition attached to `tree`; the condition is
/// satisfied when all of them vanish (exactly, or within a tolerance).
pub fn condition_residuals(
    tab: &ButcherTableau,
    tree: &RootedTree,
    rank_tol: f64,
) -> Result<Vec<Scalar>, ConditionError> {
    SpaceCache::new(tab, rank_tol).condition_residuals(tree)
}

/// Check all trees (or only the semi-lone-child-avoiding ones when
/// `use_reduction`) of order `1..=max_order` and report `p_SL`.
pub fn semilinear_order(
    tab: &ButcherTableau,
    max_order: usize,
    tol: f64,
    use_reduction: bool,
) -> Result<OrderReport, ConditionError> {
    if max_order > crate::defaults::MAX_ORDER_CAP {
        return Err(ConditionError::MaxOrderTooLarge(
            max_order,
            crate::defaults::MAX_ORDER_CAP,
        ));
    }
    let mut cache = SpaceCache::new(tab, tol);
    let mut records = Vec::new();
    let mut p_sl = 0;
    let mut blocked = false;
    for order in 1..=max_order {
        let mut order_ok = true;
        for tree in trees::enumerate_trees(order)? {
            let skip = use_reduction && !tree.is_semi_lone_child_avoiding();
            if skip {
                records.push(TreeConditionRecord {
                    tree,
                    satisfied: true,
                    max_residual: 0.0,
                    skipped_as_redundant: true,
                });
                continue;
            }
            let residuals = cache.condition_residuals(&tree)?;
            let satisfied = residuals.iter().all(|r| r.is_zero(tol));
            let max_residual = residuals.iter().map(Scalar::magnitude).fold(0.0, f64::max);
            order_ok &= satisfied;
            records.push(TreeConditionRecord {
                tree,
                satisfied,
                max_residual,
                skipped_as_redundant: false,
            });
        }
        if order_ok && !blocked {
            p_sl = order;
        } else {
            blocked = true;
        }
    }
    Ok(OrderReport { p_sl, records, tol, reduction_used: use_reduction, max_order })
}

/// Largest `m` such that for `l = 0..m-1`: `b^T c^l = 1/(l+1)` and
/// `b^T A^i (c^(l+1)/(l+1) - A c^l) = 0` for `i = 0..s-1`. Identical to the
/// bushy-tree subset of the semilinear conditions. Saturates at the probe cap.
pub fn weak_stage_order(tab: &ButcherTableau, tol: f64) -> (usize, bool) {
    let cap = crate::defaults::ORDER_PROBE_CAP;
    let s = tab.stages();
    for m in 1..=cap {
        let ell = m - 1;
        let quad = Scalar::ratio(1, ell as i64 + 1)
            - linalg::dot(tab.b(), &linalg::elementwise_pow(tab.c(), ell));
        if !quad.is_zero(tol) {
            return (m - 1, false);
        }
        let c_next = linalg::elementwise_pow(tab.c(), ell + 1);
        let c_pow = linalg::elementwise_pow(tab.c(), ell);
        let mut v = linalg::sub(
            &linalg::scale(&c_next, &Scalar::ratio(1, ell as i64 + 1)),
            &tab.a().mul_vec(&c_pow),
        );
        for _ in 0..s {
            if !linalg::dot(tab.b(), &v).is_zero(tol) {
                return (m - 1, false);
            }
            v = tab.a().mul_vec(&v);
        }
    }
    (cap, true)
}

/// Rows of the expanded order-condition listing through order five, written
/// with explicit matrix-power indices. Row `5h` is omitted: derived from the
/// tree-space definition, its condition involves the third-order stage defect
/// and no printed row matches it, so only the definition-based checker covers
/// that tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionLabel {
    L1a,
    L2a,
    L3a,
    L3b,
    L4a,
    L4b,
    L4c,
    L4d,
    L5a,
    L5b,
    L5c,
    L5d,
    L5e,
    L5f,
    L5g,
    L5i,
}

pub const CONDITION_LABELS: &[ConditionLabel] = &[
    ConditionLabel::L1a,
    ConditionLabel::L2a,
    ConditionLabel::L3a,
    ConditionLabel::L3b,
    ConditionLabel::L4a,
    ConditionLabel::L4b,
    ConditionLabel::L4c,
    ConditionLabel::L4d,
    ConditionLabel::L5a,
    ConditionLabel::L5b,
    ConditionLabel::L5c,
    ConditionLabel::L5d,
    ConditionLabel::L5e,
    ConditionLabel::L5f,
    ConditionLabel::L5g,
    ConditionLabel::L5i,
];

impl ConditionLabel {
    pub fn parse(text: &str) -> Result<ConditionLabel, ConditionError> {
        use ConditionLabel::*;
        Ok(match text {
            "1a" => L1a,
            "2a" => L2a,
            "3a" => L3a,
            "3b" => L3b,
            "4a" => L4a,
            "4b" => L4b,
            "4c" => L4c,
            "4d" => L4d,
            "5a" => L5a,
            "5b" => L5b,
            "5c" => L5c,
            "5d" => L5d,
            "5e" => L5e,
            "5f" => L5f,
            "5g" => L5g,
            "5i" => L5i,
            other => return Err(ConditionError::UnknownLabel(other.to_string())),
        })
    }

    pub fn as_str(&self) -> &'static str {
        use ConditionLabel::*;
        match self {
            L1a => "1a",
            L2a => "2a",
            L3a => "3a",
            L3b => "3b",
            L4a => "4a",
            L4b => "4b",
            L4c => "4c",
            L4d => "4d",
            L5a => "5a",
            L5b => "5b",
            L5c => "5c",
            L5d => "5d",
            L5e => "5e",
            L5f => "5f",
            L5g => "5g",
            L5i => "5i",
        }
    }

    /// The rooted tree whose condition this row expands.
    pub fn tree(&self) -> RootedTree {
        use ConditionLabel::*;
        let enc = match self {
            L1a => "[]",
            L2a => "[[]]",
            L3a => "[[][]]",
            L3b => "[[[]]]",
            L4a => "[[][][]]",
            L4b => "[[[]][]]",
            L4c => "[[[][]]]",
            L4d => "[[[[]]]]",
            L5a => "[[][][][]]",
            L5b => "[[[]][][]]",
            L5c => "[[[]][[]]]",
            L5d => "[[[][]][]]",
            L5e => "[[[[]]][]]",
            L5f => "[[[][][]]]",
            L5g => "[[[[]][]]]",
            L5i => "[[[[[]]]]]",
        };
        RootedTree::parse(enc).expect("static encoding")
    }
}

/// Evaluate one labeled row verbatim over all index tuples in `{0..s-1}`.
pub fn labeled_condition_residuals(tab: &ButcherTableau, label: ConditionLabel) -> Vec<Scalar> {
    use ConditionLabel::*;
    let s = tab.stages();
    let c = tab.c();
    let cpow = |k: usize| linalg::elementwise_pow(c, k);
    // w_k = c^k/(k-1)!k - A c^(k-1)/(k-1)! as printed: c^2/2 - Ac, c^3/6 - Ac^2/2, ...
    let w = |k: usize, den_hi: i64, den_lo: i64| {
        linalg::sub(
            &linalg::scale(&cpow(k), &Scalar::ratio(1, den_hi)),
            &linalg::scale(&tab.a().mul_vec(&cpow(k - 1)), &Scalar::ratio(1, den_lo)),
        )
    };
    let w2 = w(2, 2, 1);
    let w3 = w(3, 6, 2);
    let w4 = w(4, 24, 6);
    let w5 = w(5, 120, 24);

    // powers[i] = A^i v for i = 0..=max_power
    let powers = |v: &[Scalar], max_power: usize| -> Vec<Vec<Scalar>> {
        let mut out = vec![v.to_vec()];
        for _ in 0..max_power {
            out.push(tab.a().mul_vec(out.last().unwrap()));
        }
        out
    };
    let dot_b = |v: &[Scalar]| linalg::dot(tab.b(), v);
    let quad = |k: usize, fact: i64| {
        Scalar::ratio(1, fact * k as i64)
            - linalg::dot(tab.b(), &cpow(k - 1)) * Scalar::ratio(1, fact)
    };

    let mut out = Vec::new();
    match label {
        L1a => out.push(Scalar::one() - dot_b(&vec![Scalar::one(); s])),
        L2a | L3a | L4a | L5a => {
            let (k, fact, wk) = match label {
                L2a => (2, 1, &w2),
                L3a => (3, 2, &w3),
                L4a => (4, 6, &w4),
                _ => (5, 24, &w5),
            };
            out.push(quad(k, fact));
            for v in powers(wk, s - 1) {
                out.push(dot_b(&v));
            }
        }
        L3b => {
            let pw = powers(&w2, 2 * (s - 1));
            for i1 in 0..s {
                for i2 in 0..s {
                    out.push(dot_b(&pw[i1 + i2]));
                }
            }
        }
        L4b | L5b | L5d => {
            let (wk, ell) = match label {
                L4b => (&w2, 1),
                L5b => (&w2, 2),
                _ => (&w3, 1),
            };
            let c_ell = cpow(ell);
            for u in powers(wk, s - 1) {
                let v = linalg::hadamard(&c_ell, &u);
                for row in powers(&v, s - 1) {
                    out.push(dot_b(&row));
                }
            }
        }
        L4c | L5f => {
            let wk = if label == L4c { &w3 } else { &w4 };
            let pw = powers(wk, 2 * (s - 1));
            for i1 in 0..s {
                for i2 in 0..s {
                    out.push(dot_b(&pw[i1 + i2]));
                }
            }
        }
        L4d => {
            let pw = powers(&w2, 3 * (s - 1) + 1);
            for i1 in 0..s {
                for i2 in 0..s {
                    for i3 in 0..s {
                        out.push(dot_b(&pw[i1 + i2 + i3 + 1]));
                    }
                }
            }
        }
        L5c => {
            let pw = powers(&w2, s - 1);
            for i2 in 0..s {
                for i3 in 0..s {
                    let prod = linalg::hadamard(&pw[i2], &pw[i3]);
                    for row in powers(&prod, s - 1) {
                        out.push(dot_b(&row));
                    }
                }
            }
        }
        L5e => {
            let inner = powers(&w2, 2 * (s - 1) + 1);
            for i2 in 0..s {
                for i3 in 0..s {
                    let v = linalg::hadamard(c, &inner[i2 + i3 + 1]);
                    for row in powers(&v, s - 1) {
                        out.push(dot_b(&row));
                    }
                }
            }
        }
        L5g => {
            let inner = powers(&w2, s - 1);
            for i3 in 0..s {
                let v = linalg::hadamard(c, &inner[i3]);
                let rows = powers(&v, 2 * (s - 1) + 1);
                for i1 in 0..s {
                    for i2 in 0..s {
                        out.push(dot_b(&rows[i1 + i2 + 1]));
                    }
                }
            }
        }
        L5i => {
            let pw = powers(&w2, 4 * (s - 1) + 2);
            for i1 in 0..s {
                for i2 in 0..s {
                    for i3 in 0..s {
                        for i4 in 0..s {
                            out.push(dot_b(&pw[i1 + i2 + i3 + i4 + 2]));
                        }
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults::TOL;
    use crate::tableau::catalog_lookup;

    fn tree(enc: &str) -> RootedTree {
        RootedTree::parse(enc).unwrap()
    }

    #[test]
    fn backward_euler_order_two_bushy_space() {
        let be = catalog_lookup("backward-euler").unwrap();
        let space = v_space(&be, &tree("[[]]"), TOL).unwrap();
        assert_eq!(space.rank(), 1);
        assert_eq!(space.columns()[0], vec![Scalar::ratio(-1, 2)]);
    }

    #[test]
    fn trapezoid_order_two_space_is_trivial() {
        let trap = catalog_lookup("trapezoid").unwrap();
        let space = v_space(&trap, &tree("[[]]"), TOL).unwrap();
        assert_eq!(space.rank(), 0);
    }

    #[test]
    fn leaf_tree_has_no_space() {
        let be = catalog_lookup("backward-euler").unwrap();
        assert!(matches!(
            v_space(&be, &RootedTree::leaf(), TOL),
            Err(ConditionError::LeafHasNoSpace)
        ));
    }

    #[test]
    fn chain_space_contained_in_bushy_space() {
        // V of [[tau0]] is spanned by A-images of V of [tau0] generators
        for name in crate::tableau::CATALOG {
            let tab = catalog_lookup(name).unwrap();
            let outer = v_space(&tab, &tree("[[]]"), TOL).unwrap();
            let inner = v_space(&tab, &tree("[[[]]]"), TOL).unwrap();
            for beta in inner.columns() {
                assert!(outer.span_residual(beta) <= 1e-10, "{name}");
            }
        }
    }

    #[test]
    fn residual_examples() {
        let be = catalog_lookup("backward-euler").unwrap();
        let r1 = condition_residuals(&be, &RootedTree::leaf(), TOL).unwrap();
        assert_eq!(r1.len(), 1);
        assert!(r1[0].is_zero(0.0));

        let r2 = condition_residuals(&be, &tree("[[]]"), TOL).unwrap();
        assert!(r2.iter().any(|r| *r == Scalar::ratio(-1, 2)));
        assert!(!r2.iter().all(|r| r.is_zero(TOL)));

        let trap = catalog_lookup("trapezoid").unwrap();
        let r2 = condition_residuals(&trap, &tree("[[]]"), TOL).unwrap();
        assert!(r2.iter().all(|r| r.is_zero(0.0)));
    }

    #[test]
    fn semilinear_orders_of_catalog() {
        let p_sl = |name: &str| {
            semilinear_order(&catalog_lookup(name).unwrap(), 5, TOL, false).unwrap().p_sl
        };
        assert_eq!(p_sl("backward-euler"), 1);
        assert_eq!(p_sl("implicit-midpoint"), 1);
        assert_eq!(p_sl("trapezoid"), 2);
        assert!(p_sl("gauss-2") >= 2);
        assert!(p_sl("radau-iia-2") >= 2);
    }

    #[test]
    fn max_order_is_capped() {
        let be = catalog_lookup("backward-euler").unwrap();
        assert!(semilinear_order(&be, 7, TOL, false).is_err());
        assert!(semilinear_order(&be, 6, TOL, false).is_ok());
    }

    #[test]
    fn weak_stage_orders() {
        let wso = |name: &str| weak_stage_order(&catalog_lookup(name).unwrap(), TOL).0;
        assert_eq!(wso("backward-euler"), 1);
        assert_eq!(wso("trapezoid"), 2);
        assert_eq!(wso("implicit-midpoint"), 1);
        assert_eq!(wso("gauss-3"), 3);
    }

    #[test]
    fn weak_stage_order_equals_bushy_subset() {
        for name in crate::tableau::CATALOG {
            let tab = catalog_lookup(name).unwrap();
            let (wso, _) = weak_stage_order(&tab, TOL);
            let mut cache = SpaceCache::new(&tab, TOL);
            // largest m with all bushy conditions of orders <= m satisfied,
            // probed to the same cap as the weak-stage-order loop
            let mut bushy_order = 0;
            for order in 1..=crate::defaults::ORDER_PROBE_CAP {
                let bushy = RootedTree::node(order - 1, Vec::new());
                let ok = cache
                    .condition_residuals(&bushy)
                    .unwrap()
                    .iter()
                    .all(|r| r.is_zero(TOL));
                if ok {
                    bushy_order = order;
                } else {
                    break;
                }
            }
            assert_eq!(wso, bushy_order, "{name}");
        }
    }

    #[test]
    fn p_sl_at_least_stage_order() {
        for name in crate::tableau::CATALOG {
            let tab = catalog_lookup(name).unwrap();
            let (q, _) = tab.stage_order(TOL);
            let report = semilinear_order(&tab, 5, TOL, false).unwrap();
            assert!(report.p_sl >= q.min(5), "{name}: p_SL {} < q {q}", report.p_sl);
        }
    }

    #[test]
    fn labeled_rows_match_examples() {
        for name in crate::tableau::CATALOG {
            let tab = catalog_lookup(name).unwrap();
            let r = labeled_condition_residuals(&tab, ConditionLabel::L1a);
            assert!(r.iter().all(|x| x.is_zero(1e-14)), "{name} 1a");
        }
        let trap = catalog_lookup("trapezoid").unwrap();
        let r = labeled_condition_residuals(&trap, ConditionLabel::L2a);
        assert!(r.iter().all(|x| x.is_zero(0.0)));

        let be = catalog_lookup("backward-euler").unwrap();
        let r = labeled_condition_residuals(&be, ConditionLabel::L3b);
        assert_eq!(r, vec![Scalar::ratio(-1, 2)]);
    }

    #[test]
    fn labeled_rows_agree_with_tree_conditions_on_catalog() {
        for name in crate::tableau::CATALOG {
            let tab = catalog_lookup(name).unwrap();
            for &label in CONDITION_LABELS {
                let printed_zero = labeled_condition_residuals(&tab, label)
                    .iter()
                    .all(|r| r.is_zero(TOL));
                let tree_zero = condition_residuals(&tab, &label.tree(), TOL)
                    .unwrap()
                    .iter()
                    .all(|r| r.is_zero(TOL));
                assert_eq!(printed_zero, tree_zero, "{name} row {}", label.as_str());
            }
        }
    }

    #[test]
    fn label_parsing() {
        assert_eq!(ConditionLabel::parse("4b").unwrap(), ConditionLabel::L4b);
        assert!(ConditionLabel::parse("5h").is_err());
        assert!(ConditionLabel::parse("6a").is_err());
        for &label in CONDITION_LABELS {
            assert_eq!(ConditionLabel::parse(label.as_str()).unwrap(), label);
        }
    }

    #[test]
    fn report_display_lists_every_tree() {
        let trap = catalog_lookup("trapezoid").unwrap();
        let report = semilinear_order(&trap, 5, TOL, true).unwrap();
        let text = report.to_string();
        assert_eq!(report.records.len(), 17);
        assert!(text.contains("p_SL = 2"), "{text}");
        assert!(text.lines().count() >= 19);
    }
}
