//! Small dense linear algebra over [`Scalar`]: exact where the data is
//! rational, standard numerical rank decisions where it is float.
//!
//! Everything here operates at tableau scale (dimension = stage count), so
//! plain dense algorithms are used throughout.

use crate::scalar::{Mode, Scalar};

/// Row-major dense matrix of [`Scalar`].
#[derive(Debug, Clone, PartialEq)]
pub struct SMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Scalar>,
}

impl SMat {
    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> SMat {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        SMat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn identity(n: usize) -> SMat {
        let mut m = SMat::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Scalar::one();
        }
        m
    }

    pub fn zeros(rows: usize, cols: usize) -> SMat {
        SMat { rows, cols, data: vec![Scalar::zero(); rows * cols] }
    }

    pub fn at(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Scalar {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(Scalar::zero(), |acc, (a, x)| acc + a.clone() * x.clone())
            })
            .collect()
    }

    /// `M^T v`, used for products of the form `b^T A^j`.
    pub fn tmul_vec(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(self.rows, v.len());
        (0..self.cols)
            .map(|j| {
                (0..self.rows)
                    .fold(Scalar::zero(), |acc, i| acc + self.at(i, j).clone() * v[i].clone())
            })
            .collect()
    }

    pub fn mul_mat(&self, other: &SMat) -> SMat {
        assert_eq!(self.cols, other.rows);
        let mut out = SMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k).clone();
                if a.is_zero(0.0) && a.mode() == Mode::Exact {
                    continue;
                }
                for j in 0..other.cols {
                    *out.at_mut(i, j) =
                        out.at(i, j).clone() + a.clone() * other.at(k, j).clone();
                }
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(&Scalar) -> Scalar) -> SMat {
        SMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j).to_f64())
    }

    /// Determinant by Gaussian elimination with magnitude pivoting.
    pub fn det(&self) -> Scalar {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Scalar::one();
        let mut sign = false;
        for k in 0..n {
            let pivot = (k..n)
                .filter(|&i| !m.at(i, k).is_zero(0.0))
                .max_by(|&a, &b| {
                    m.at(a, k).magnitude().total_cmp(&m.at(b, k).magnitude())
                });
            let Some(p) = pivot else { return Scalar::zero() };
            if p != k {
                for j in 0..n {
                    let hi = p * n + j;
                    let lo = k * n + j;
                    m.data.swap(hi, lo);
                }
                sign = !sign;
            }
            let pv = m.at(k, k).clone();
            det = det * pv.clone();
            for i in k + 1..n {
                let factor = m.at(i, k).clone() / pv.clone();
                if factor.is_zero(0.0) {
                    continue;
                }
                for j in k..n {
                    *m.at_mut(i, j) = m.at(i, j).clone() - factor.clone() * m.at(k, j).clone();
                }
            }
        }
        if sign { -det } else { det }
    }
}

pub fn dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(Scalar::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Elementwise product.
pub fn hadamard(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.clone() * y.clone()).collect()
}

/// Elementwise power `v^k` with `v^0 = 1`.
pub fn elementwise_pow(v: &[Scalar], k: usize) -> Vec<Scalar> {
    v.iter()
        .map(|x| {
            let mut acc = Scalar::one();
            for _ in 0..k {
                acc = acc * x.clone();
            }
            acc
        })
        .collect()
}

pub fn sub(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect()
}

pub fn scale(a: &[Scalar], s: &Scalar) -> Vec<Scalar> {
    a.iter().map(|x| x.clone() * s.clone()).collect()
}

pub fn norm_f64(v: &[Scalar]) -> f64 {
    v.iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt()
}

/// Incrementally maintained basis of a span of vectors.
///
/// In exact mode the reported basis columns are the inserted generators that
/// increased the rank ("pivot generators"); independence decisions use exact
/// Gaussian elimination. In float mode the reported columns are orthonormal
/// and independence uses a norm threshold.
#[derive(Debug, Clone)]
pub struct SpanBasis {
    mode: Mode,
    dim: usize,
    tol: f64,
    columns: Vec<Vec<Scalar>>,
    // exact mode: reduced echelon forms and their pivot positions
    reduced: Vec<Vec<Scalar>>,
    pivots: Vec<usize>,
    // float mode: orthonormal columns
    ortho: Vec<Vec<f64>>,
    max_norm_seen: f64,
}

impl SpanBasis {
    pub fn new(mode: Mode, dim: usize, tol: f64) -> SpanBasis {
        SpanBasis {
            mode,
            dim,
            tol,
            columns: Vec::new(),
            reduced: Vec::new(),
            pivots: Vec::new(),
            ortho: Vec::new(),
            max_norm_seen: 0.0,
        }
    }

    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    /// Basis columns: pivot generators (exact) or orthonormal vectors (float).
    pub fn columns(&self) -> &[Vec<Scalar>] {
        &self.columns
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    fn zero_cutoff(&self) -> f64 {
        self.tol.max(self.dim as f64 * f64::EPSILON * self.max_norm_seen)
    }

    /// Insert a generator; returns true iff it increased the rank.
    pub fn try_insert(&mut self, v: &[Scalar]) -> bool {
        assert_eq!(v.len(), self.dim);
        match self.mode {
            Mode::Exact => {
                let mut w = v.to_vec();
                for (r, &p) in self.reduced.iter().zip(&self.pivots) {
                    if !w[p].is_zero(0.0) {
                        let factor = w[p].clone() / r[p].clone();
                        for j in 0..self.dim {
                            w[j] = w[j].clone() - factor.clone() * r[j].clone();
                        }
                    }
                }
                let Some(pivot) = w.iter().position(|x| !x.is_zero(0.0)) else {
                    return false;
                };
                self.columns.push(v.to_vec());
                self.reduced.push(w);
                self.pivots.push(pivot);
                true
            }
            Mode::Float => {
                let vf: Vec<f64> = v.iter().map(Scalar::to_f64).collect();
                let norm = vf.iter().map(|x| x * x).sum::<f64>().sqrt();
                self.max_norm_seen = self.max_norm_seen.max(norm);
                if norm <= self.zero_cutoff() {
                    return false;
                }
                let w = self.project_out(&vf);
                let wnorm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                if wnorm <= self.zero_cutoff().max(1e2 * f64::EPSILON * norm) {
                    return false;
                }
                let q: Vec<f64> = w.iter().map(|x| x / wnorm).collect();
                self.columns.push(q.iter().map(|&x| Scalar::Float(x)).collect());
                self.ortho.push(q);
                true
            }
        }
    }

    // Two Gram-Schmidt passes for float orthogonality.
    fn project_out(&self, v: &[f64]) -> Vec<f64> {
        let mut w = v.to_vec();
        for _ in 0..2 {
            for q in &self.ortho {
                let coeff: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= coeff * qi;
                }
            }
        }
        w
    }

    /// Residual of `v` against the span: exactly zero (exact mode) or the
    /// Euclidean norm of the projection remainder (float mode) when `v` is
    /// contained; a positive value otherwise.
    pub fn residual_of(&self, v: &[Scalar]) -> f64 {
        match self.mode {
            Mode::Exact => {
                let mut w = v.to_vec();
                for (r, &p) in self.reduced.iter().zip(&self.pivots) {
                    if !w[p].is_zero(0.0) {
                        let factor = w[p].clone() / r[p].clone();
                        for j in 0..self.dim {
                            w[j] = w[j].clone() - factor.clone() * r[j].clone();
                        }
                    }
                }
                if w.iter().all(|x| x.is_zero(0.0)) {
                    0.0
                } else {
                    norm_f64(&w)
                }
            }
            Mode::Float => {
                let vf: Vec<f64> = v.iter().map(Scalar::to_f64).collect();
                let w = self.project_out(&vf);
                w.iter().map(|x| x * x).sum::<f64>().sqrt()
            }
        }
    }
}

/// Coefficients (ascending) of the unique polynomial of degree `< nodes.len()`
/// interpolating `(nodes[i], values[i])`.
pub fn lagrange_interpolate(nodes: &[Scalar], values: &[Scalar]) -> Vec<Scalar> {
    assert_eq!(nodes.len(), values.len());
    let n = nodes.len();
    let mut acc = vec![Scalar::zero(); n];
    for i in 0..n {
        // numerator polynomial prod_{j != i} (x - x_j)
        let mut poly = vec![Scalar::one()];
        let mut denom = Scalar::one();
        for j in 0..n {
            if j == i {
                continue;
            }
            poly = poly_mul_linear(&poly, &nodes[j]);
            denom = denom * (nodes[i].clone() - nodes[j].clone());
        }
        let weight = values[i].clone() / denom;
        for (k, c) in poly.iter().enumerate() {
            acc[k] = acc[k].clone() + c.clone() * weight.clone();
        }
    }
    acc
}

// poly * (x - a)
fn poly_mul_linear(poly: &[Scalar], a: &Scalar) -> Vec<Scalar> {
    let mut out = vec![Scalar::zero(); poly.len() + 1];
    for (k, c) in poly.iter().enumerate() {
        out[k + 1] = out[k + 1].clone() + c.clone();
        out[k] = out[k].clone() - a.clone() * c.clone();
    }
    out
}
