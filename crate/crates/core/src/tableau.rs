//! Butcher tableaux: construction, file parsing, a catalog of classic
//! methods, simplifying-assumption residuals, and stage/classical order.

use crate::linalg::{self, SMat};
use crate::scalar::{Mode, Scalar};
use crate::trees::{self, RootedTree};
use serde_json::Value;
use std::fmt;

/// Sparsity class of the coefficient matrix `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    Explicit,
    Dirk,
    FullyImplicit,
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Structure::Explicit => write!(f, "explicit"),
            Structure::Dirk => write!(f, "DIRK"),
            Structure::FullyImplicit => write!(f, "fully-implicit"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TableauError {
    #[error("A must be square with one row per stage; row {row} has {got} entries, expected {expected}")]
    Dimension { row: usize, got: usize, expected: usize },
    #[error("b has {got} entries, expected {expected}")]
    WeightLength { got: usize, expected: usize },
    #[error("c has {got} entries, expected {expected}")]
    AbscissaLength { got: usize, expected: usize },
    #[error("c mismatch at row {row}: supplied {supplied} but A*1 gives {derived}")]
    CMismatch { row: usize, supplied: String, derived: String },
    #[error("{location}: {source}")]
    Entry {
        location: String,
        #[source]
        source: crate::scalar::ParseScalarError,
    },
    #[error("tableau document: {0}")]
    Document(String),
    #[error("unknown tableau `{0}`; available: {1}")]
    UnknownName(String, String),
}

/// The coefficient triple `(A, b, c)` of a Runge-Kutta method, with
/// `c = A*1` enforced at construction. Immutable once built.
#[derive(Debug, Clone)]
pub struct ButcherTableau {
    name: String,
    stages: usize,
    a: SMat,
    b: Vec<Scalar>,
    c: Vec<Scalar>,
    mode: Mode,
    structure: Structure,
}

/// Scaled residuals of the `B(ell)` and `C(ell)` simplifying assumptions:
/// `q_hat = 1/ell! - b^T c^(ell-1)/(ell-1)!` and
/// `s_hat = c^ell/ell! - A c^(ell-1)/(ell-1)!`.
#[derive(Debug, Clone)]
pub struct DefectPair {
    pub ell: usize,
    pub q_hat: Scalar,
    pub s_hat: Vec<Scalar>,
}

impl ButcherTableau {
    pub fn new(
        name: impl Into<String>,
        a_rows: Vec<Vec<Scalar>>,
        b: Vec<Scalar>,
        c: Option<Vec<Scalar>>,
    ) -> Result<ButcherTableau, TableauError> {
        let s = a_rows.len();
        for (i, row) in a_rows.iter().enumerate() {
            if row.len() != s {
                return Err(TableauError::Dimension { row: i + 1, got: row.len(), expected: s });
            }
        }
        if b.len() != s {
            return Err(TableauError::WeightLength { got: b.len(), expected: s });
        }
        if let Some(c) = &c {
            if c.len() != s {
                return Err(TableauError::AbscissaLength { got: c.len(), expected: s });
            }
        }

        // Homogeneous mode: one float entry demotes the whole tableau.
        let all_entries = a_rows.iter().flatten().chain(&b).chain(c.iter().flatten());
        let mode = if all_entries.clone().all(|e| e.mode() == Mode::Exact) {
            Mode::Exact
        } else {
            Mode::Float
        };
        let demote = |v: Vec<Scalar>| -> Vec<Scalar> {
            match mode {
                Mode::Exact => v,
                Mode::Float => v.iter().map(Scalar::to_float_scalar).collect(),
            }
        };
        let a = SMat::from_rows(a_rows.into_iter().map(demote).collect());
        let b = demote(b);
        let supplied_c = c.map(demote);

        // c is derived; a supplied c is only cross-checked.
        let derived_c = a.mul_vec(&vec![Scalar::one(); s]);
        if let Some(supplied) = supplied_c {
            for i in 0..s {
                let diff = supplied[i].clone() - derived_c[i].clone();
                let ok = match mode {
                    Mode::Exact => diff.is_zero(0.0),
                    Mode::Float => diff.magnitude() <= 1e-14,
                };
                if !ok {
                    return Err(TableauError::CMismatch {
                        row: i + 1,
                        supplied: supplied[i].to_string(),
                        derived: derived_c[i].to_string(),
                    });
                }
            }
        }

        let strictly_lower = (0..s).all(|i| (i..s).all(|j| a.at(i, j).is_zero(0.0)));
        let lower = (0..s).all(|i| (i + 1..s).all(|j| a.at(i, j).is_zero(0.0)));
        let structure = if strictly_lower {
            Structure::Explicit
        } else if lower {
            Structure::Dirk
        } else {
            Structure::FullyImplicit
        };

        Ok(ButcherTableau {
            name: name.into(),
            stages: s,
            a,
            b,
            c: derived_c,
            mode,
            structure,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn a(&self) -> &SMat {
        &self.a
    }

    pub fn b(&self) -> &[Scalar] {
        &self.b
    }

    pub fn c(&self) -> &[Scalar] {
        &self.c
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn a_f64(&self) -> nalgebra::DMatrix<f64> {
        self.a.to_f64()
    }

    pub fn b_f64(&self) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(self.stages, self.b.iter().map(Scalar::to_f64))
    }

    pub fn c_f64(&self) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(self.stages, self.c.iter().map(Scalar::to_f64))
    }

    /// Copy with every entry demoted to binary64.
    pub fn to_float_mode(&self) -> ButcherTableau {
        let a_rows = (0..self.stages)
            .map(|i| self.a.row(i).iter().map(Scalar::to_float_scalar).collect())
            .collect();
        let b = self.b.iter().map(Scalar::to_float_scalar).collect();
        ButcherTableau::new(self.name.clone(), a_rows, b, None).expect("same shape")
    }

    pub fn defect_pair(&self, ell: usize) -> DefectPair {
        assert!(ell >= 1, "defect index starts at 1");
        let inv_fact = |n: usize| {
            let mut f = num_bigint::BigInt::from(1);
            for k in 2..=n {
                f *= k as i64;
            }
            Scalar::Exact(num_rational::BigRational::new(1.into(), f))
        };
        let c_prev = linalg::elementwise_pow(&self.c, ell - 1);
        let c_pow = linalg::elementwise_pow(&self.c, ell);
        let q_hat = inv_fact(ell)
            - linalg::dot(&self.b, &c_prev) * inv_fact(ell - 1);
        let s_hat = linalg::sub(
            &linalg::scale(&c_pow, &inv_fact(ell)),
            &linalg::scale(&self.a.mul_vec(&c_prev), &inv_fact(ell - 1)),
        );
        DefectPair { ell, q_hat, s_hat }
    }

    /// Largest `q <= 10` with `q_hat_k = 0` and `s_hat_k = 0` for `k <= q`;
    /// the flag reports saturation at the probe cap.
    pub fn stage_order(&self, tol: f64) -> (usize, bool) {
        let cap = crate::defaults::ORDER_PROBE_CAP;
        let mut q = 0;
        for k in 1..=cap {
            let d = self.defect_pair(k);
            if d.q_hat.is_zero(tol) && d.s_hat.iter().all(|x| x.is_zero(tol)) {
                q = k;
            } else {
                return (q, false);
            }
        }
        (cap, true)
    }

    /// Elementary weight vector of a rooted tree:
    /// `phi(leaf) = 1`, `phi([t0^l t_1..t_k]) = c^l x prod(A phi(t_i))`.
    pub fn elementary_weight(&self, tree: &RootedTree) -> Vec<Scalar> {
        if tree.order() == 1 {
            return vec![Scalar::one(); self.stages];
        }
        let mut w = linalg::elementwise_pow(&self.c, tree.leaf_count_at_root());
        for child in tree.subtrees() {
            w = linalg::hadamard(&w, &self.a.mul_vec(&self.elementary_weight(child)));
        }
        w
    }

    /// Density `gamma`: `gamma(leaf) = 1`, `gamma(tau) = |tau| prod gamma(t_i)`.
    pub fn density(tree: &RootedTree) -> i64 {
        if tree.order() == 1 {
            return 1;
        }
        tree.order() as i64 * tree.subtrees().iter().map(Self::density).product::<i64>()
    }

    /// Largest `p <= 5` with all rooted-tree conditions `b^T phi(tau) = 1/gamma(tau)`
    /// satisfied through order `p`.
    pub fn classical_order(&self, tol: f64) -> usize {
        let cap = crate::defaults::CLASSICAL_ORDER_CAP;
        let mut p = 0;
        for order in 1..=cap {
            let ok = trees::enumerate_trees(order).expect("order within cap").iter().all(|tree| {
                let residual = linalg::dot(&self.b, &self.elementary_weight(tree))
                    - Scalar::ratio(1, Self::density(tree));
                residual.is_zero(tol)
            });
            if ok {
                p = order;
            } else {
                break;
            }
        }
        p
    }

    /// Structured-text document with bit-exact rational entries.
    pub fn to_document(&self) -> String {
        let entry = |s: &Scalar| format!("\"{s}\"");
        let vector = |v: &[Scalar]| {
            let items: Vec<String> = v.iter().map(entry).collect();
            format!("[{}]", items.join(", "))
        };
        let rows: Vec<String> = (0..self.stages).map(|i| vector(self.a.row(i))).collect();
        format!(
            "{{\n  \"name\": \"{}\",\n  \"A\": [{}],\n  \"b\": {},\n  \"c\": {}\n}}\n",
            self.name.replace('"', "'"),
            rows.join(", "),
            vector(&self.b),
            vector(&self.c),
        )
    }
}

/// Parse the tableau file format: a JSON document with fields `name`
/// (string), `A` (list of rows), `b` (list), optional `c` (list). Entries
/// are `"p/q"` strings, integers, or decimal numbers.
pub fn parse_tableau(text: &str) -> Result<ButcherTableau, TableauError> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| TableauError::Document(e.to_string()))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| TableauError::Document("top level must be an object".into()))?;
    let name = obj
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| TableauError::Document("missing string field `name`".into()))?;

    let parse_entry = |v: &Value, location: String| -> Result<Scalar, TableauError> {
        let text = match v {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            other => format!("{other}"),
        };
        Scalar::parse(&text).map_err(|source| TableauError::Entry { location, source })
    };
    let parse_vector = |v: &Value, what: &str| -> Result<Vec<Scalar>, TableauError> {
        let arr = v
            .as_array()
            .ok_or_else(|| TableauError::Document(format!("`{what}` must be a list")))?;
        arr.iter()
            .enumerate()
            .map(|(j, e)| parse_entry(e, format!("{what}[{}]", j + 1)))
            .collect()
    };

    let a_val = obj
        .get("A")
        .ok_or_else(|| TableauError::Document("missing field `A`".into()))?;
    let a_arr = a_val
        .as_array()
        .ok_or_else(|| TableauError::Document("`A` must be a list of rows".into()))?;
    let mut a_rows = Vec::with_capacity(a_arr.len());
    for (i, row) in a_arr.iter().enumerate() {
        let row_arr = row
            .as_array()
            .ok_or_else(|| TableauError::Document(format!("A row {} must be a list", i + 1)))?;
        let mut entries = Vec::with_capacity(row_arr.len());
        for (j, e) in row_arr.iter().enumerate() {
            entries.push(parse_entry(e, format!("A[{},{}]", i + 1, j + 1))?);
        }
        a_rows.push(entries);
    }

    let b = parse_vector(
        obj.get("b")
            .ok_or_else(|| TableauError::Document("missing field `b`".into()))?,
        "b",
    )?;
    let c = obj.get("c").map(|v| parse_vector(v, "c")).transpose()?;

    ButcherTableau::new(name, a_rows, b, c)
}

pub const CATALOG: &[&str] = &[
    "backward-euler",
    "implicit-midpoint",
    "trapezoid",
    "gauss-2",
    "gauss-3",
    "radau-iia-2",
    "radau-iia-3",
    "sdirk-norsett-3",
    "classical-rk4",
];

/// Look up a built-in method by name. Rational coefficients are stored
/// exactly; Gauss/Radau nodes with irrational entries are float.
pub fn catalog_lookup(name: &str) -> Result<ButcherTableau, TableauError> {
    let r = Scalar::ratio;
    let f = Scalar::from_f64;
    let tab = match name {
        // Hairer & Wanner, Solving ODEs II, Table IV.6.1 family
        "backward-euler" => ButcherTableau::new(name, vec![vec![r(1, 1)]], vec![r(1, 1)], None),
        "implicit-midpoint" => {
            ButcherTableau::new(name, vec![vec![r(1, 2)]], vec![r(1, 1)], None)
        }
        // a.k.a. Crank-Nicolson in its EDIRK form
        "trapezoid" => ButcherTableau::new(
            name,
            vec![vec![r(0, 1), r(0, 1)], vec![r(1, 2), r(1, 2)]],
            vec![r(1, 2), r(1, 2)],
            None,
        ),
        // two-stage Gauss-Legendre, order 4 (Hairer & Wanner, Table IV.5.1)
        "gauss-2" => {
            let s3 = 3.0_f64.sqrt();
            ButcherTableau::new(
                name,
                vec![
                    vec![f(0.25), f(0.25 - s3 / 6.0)],
                    vec![f(0.25 + s3 / 6.0), f(0.25)],
                ],
                vec![f(0.5), f(0.5)],
                None,
            )
        }
        // three-stage Gauss-Legendre, order 6 (Hairer & Wanner, Table IV.5.2)
        "gauss-3" => {
            let s15 = 15.0_f64.sqrt();
            ButcherTableau::new(
                name,
                vec![
                    vec![f(5.0 / 36.0), f(2.0 / 9.0 - s15 / 15.0), f(5.0 / 36.0 - s15 / 30.0)],
                    vec![f(5.0 / 36.0 + s15 / 24.0), f(2.0 / 9.0), f(5.0 / 36.0 - s15 / 24.0)],
                    vec![f(5.0 / 36.0 + s15 / 30.0), f(2.0 / 9.0 + s15 / 15.0), f(5.0 / 36.0)],
                ],
                vec![f(5.0 / 18.0), f(4.0 / 9.0), f(5.0 / 18.0)],
                None,
            )
        }
        // two-stage Radau IIA, order 3 (Hairer & Wanner, Table IV.5.5)
        "radau-iia-2" => ButcherTableau::new(
            name,
            vec![vec![r(5, 12), r(-1, 12)], vec![r(3, 4), r(1, 4)]],
            vec![r(3, 4), r(1, 4)],
            None,
        ),
        // three-stage Radau IIA, order 5 (Hairer & Wanner, Table IV.5.6)
        "radau-iia-3" => {
            let s6 = 6.0_f64.sqrt();
            ButcherTableau::new(
                name,
                vec![
                    vec![
                        f((88.0 - 7.0 * s6) / 360.0),
                        f((296.0 - 169.0 * s6) / 1800.0),
                        f((-2.0 + 3.0 * s6) / 225.0),
                    ],
                    vec![
                        f((296.0 + 169.0 * s6) / 1800.0),
                        f((88.0 + 7.0 * s6) / 360.0),
                        f((-2.0 - 3.0 * s6) / 225.0),
                    ],
                    vec![f((16.0 - s6) / 36.0), f((16.0 + s6) / 36.0), f(1.0 / 9.0)],
                ],
                vec![f((16.0 - s6) / 36.0), f((16.0 + s6) / 36.0), f(1.0 / 9.0)],
                None,
            )
        }
        // Norsett's three-stage SDIRK of classical order 4
        // (Hairer & Wanner, Table IV.6.3 with gamma = 1/2 + cos(pi/18)/sqrt(3))
        "sdirk-norsett-3" => {
            let gamma = 0.5 + (std::f64::consts::PI / 18.0).cos() / 3.0_f64.sqrt();
            let delta = 1.0 / (6.0 * (1.0 - 2.0 * gamma).powi(2));
            ButcherTableau::new(
                name,
                vec![
                    vec![f(gamma), f(0.0), f(0.0)],
                    vec![f(0.5 - gamma), f(gamma), f(0.0)],
                    vec![f(2.0 * gamma), f(1.0 - 4.0 * gamma), f(gamma)],
                ],
                vec![f(delta), f(1.0 - 2.0 * delta), f(delta)],
                None,
            )
        }
        // the classical explicit fourth-order method
        "classical-rk4" => ButcherTableau::new(
            name,
            vec![
                vec![r(0, 1), r(0, 1), r(0, 1), r(0, 1)],
                vec![r(1, 2), r(0, 1), r(0, 1), r(0, 1)],
                vec![r(0, 1), r(1, 2), r(0, 1), r(0, 1)],
                vec![r(0, 1), r(0, 1), r(1, 1), r(0, 1)],
            ],
            vec![r(1, 6), r(1, 3), r(1, 3), r(1, 6)],
            None,
        ),
        other => {
            return Err(TableauError::UnknownName(other.to_string(), CATALOG.join(", ")))
        }
    };
    tab.map_err(|e| TableauError::Document(format!("catalog entry `{name}`: {e}")))
}
