use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Sparse linear row `Σ coeff · x[var]` compared against `rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Self { coeffs, rhs }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, a)| a * x[i]).sum()
    }
}

/// `minimize ½ xᵀPx + qᵀx + constant` subject to `eq` rows (`=`), `ineq`
/// rows (`≤`) and variable bounds.
///
/// `p` holds the upper triangle (`row ≤ col`) of the symmetric matrix, so
/// symmetry holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProgram {
    pub p: Vec<(usize, usize, f64)>,
    pub q: Vec<f64>,
    pub constant: f64,
    pub eq: Vec<Row>,
    pub ineq: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl QuadraticProgram {
    pub fn num_vars(&self) -> usize {
        self.q.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::invalid("bound vectors do not match variable count"));
        }
        for &(r, c, v) in &self.p {
            if r > c || c >= n || !v.is_finite() {
                return Err(Error::invalid(format!(
                    "bad objective entry ({r}, {c}, {v})"
                )));
            }
        }
        if self.q.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite linear objective"));
        }
        for row in self.eq.iter().chain(&self.ineq) {
            if !row.rhs.is_finite() {
                return Err(Error::invalid("non-finite constraint right-hand side"));
            }
            for &(i, a) in &row.coeffs {
                if i >= n || !a.is_finite() {
                    return Err(Error::invalid(format!("bad constraint entry ({i}, {a})")));
                }
            }
        }
        for i in 0..n {
            if self.lower[i].is_nan() || self.upper[i].is_nan() || self.lower[i] > self.upper[i] {
                return Err(Error::invalid(format!(
                    "variable {i} has bounds [{}, {}]",
                    self.lower[i], self.upper[i]
                )));
            }
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut v = self.constant;
        for (qi, xi) in self.q.iter().zip(x) {
            v += qi * xi;
        }
        for &(r, c, p) in &self.p {
            if r == c {
                v += 0.5 * p * x[r] * x[r];
            } else {
                v += p * x[r] * x[c];
            }
        }
        v
    }

    /// `P x` using the symmetric expansion of the stored triangle.
    pub fn hessian_product(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_vars()];
        for &(r, c, p) in &self.p {
            out[r] += p * x[c];
            if r != c {
                out[c] += p * x[r];
            }
        }
        out
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.eq {
            worst = worst.max((row.activity(x) - row.rhs).abs());
        }
        for row in &self.ineq {
            worst = worst.max(row.activity(x) - row.rhs);
        }
        for (i, &xi) in x.iter().enumerate() {
            worst = worst.max(self.lower[i] - xi).max(xi - self.upper[i]);
        }
        worst
    }

    /// Minimum eigenvalue of `P`, computed per connected block of its sparsity graph.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.num_vars();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for &(r, c, _) in &self.p {
            let (a, b) = (find(&mut parent, r), find(&mut parent, c));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let touched: std::collections::BTreeSet<usize> =
            self.p.iter().flat_map(|&(r, c, _)| [r, c]).collect();
        for &i in &touched {
            let root = find(&mut parent, i);
            blocks.entry(root).or_default().push(i);
        }
        let mut local = vec![usize::MAX; n];
        let mut min_eig: f64 = 0.0;
        let mut block_of = vec![usize::MAX; n];
        let members: Vec<Vec<usize>> = blocks.into_values().collect();
        for (b, vars) in members.iter().enumerate() {
            for (k, &v) in vars.iter().enumerate() {
                local[v] = k;
                block_of[v] = b;
            }
        }
        let mut mats: Vec<DMatrix<f64>> = members
            .iter()
            .map(|v| DMatrix::zeros(v.len(), v.len()))
            .collect();
        for &(r, c, p) in &self.p {
            let m = &mut mats[block_of[r]];
            m[(local[r], local[c])] += p;
            if r != c {
                m[(local[c], local[r])] += p;
            }
        }
        for m in mats {
            let eig = SymmetricEigen::new(m).eigenvalues;
            min_eig = min_eig.min(eig.min());
        }
        min_eig
    }

    /// Writes the program as plain-text sparse triplets:
    ///
    /// ```text
    /// # P (upper triangle)   row col value
    /// # q                    index value
    /// # A_eq / A_ineq        row col value, then b rows as "row value"
    /// # bounds               index lower upper
    /// ```
    pub fn write_triplets<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(self.triplet_text().as_bytes())
    }

    pub fn triplet_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vars {}", self.num_vars());
        let _ = writeln!(s, "constant {:e}", self.constant);
        let _ = writeln!(s, "P {}", self.p.len());
        for &(r, c, v) in &self.p {
            let _ = writeln!(s, "{r} {c} {v:e}");
        }
        let _ = writeln!(s, "q {}", self.q.len());
        for (i, v) in self.q.iter().enumerate() {
            let _ = writeln!(s, "{i} {v:e}");
        }
        for (name, rows) in [("Aeq", &self.eq), ("Aineq", &self.ineq)] {
            let nnz: usize = rows.iter().map(|r| r.coeffs.len()).sum();
            let _ = writeln!(s, "{name} {} {nnz}", rows.len());
            for (k, row) in rows.iter().enumerate() {
                for &(i, a) in &row.coeffs {
                    let _ = writeln!(s, "{k} {i} {a:e}");
                }
            }
            let _ = writeln!(s, "b{} {}", &name[1..], rows.len());
            for (k, row) in rows.iter().enumerate() {
                let _ = writeln!(s, "{k} {:e}", row.rhs);
            }
        }
        let _ = writeln!(s, "bounds {}", self.num_vars());
        for i in 0..self.num_vars() {
            let _ = writeln!(s, "{i} {:e} {:e}", self.lower[i], self.upper[i]);
        }
        s
    }
}

/// Incremental assembly of a [`QuadraticProgram`]. Objective entries are
/// accumulated, so several model components may contribute to the same cell.
#[derive(Debug, Default)]
pub struct ProgramBuilder {
    p: BTreeMap<(usize, usize), f64>,
    q: Vec<f64>,
    constant: f64,
    eq: Vec<Row>,
    ineq: Vec<Row>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    names: Vec<String>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> usize {
        self.q.push(0.0);
        self.lower.push(lower);
        self.upper.push(upper);
        self.names.push(name.into());
        self.q.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.q.len()
    }

    pub fn name(&self, var: usize) -> &str {
        &self.names[var]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn add_linear(&mut self, var: usize, coeff: f64) {
        self.q[var] += coeff;
    }

    pub fn add_constant(&mut self, value: f64) {
        self.constant += value;
    }

    /// Adds `value` to `P[i][j]` and `P[j][i]` (once on the diagonal).
    pub fn add_quadratic(&mut self, i: usize, j: usize, value: f64) {
        if value != 0.0 {
            *self.p.entry((i.min(j), i.max(j))).or_insert(0.0) += value;
        }
    }

    pub fn add_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.eq.push(Row::new(coeffs, rhs));
        self.eq.len() - 1
    }

    pub fn add_le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.ineq.push(Row::new(coeffs, rhs));
        self.ineq.len() - 1
    }

    pub fn build(self) -> QuadraticProgram {
        QuadraticProgram {
            p: self
                .p
                .into_iter()
                .filter(|&(_, v)| v != 0.0)
                .map(|((r, c), v)| (r, c, v))
                .collect(),
            q: self.q,
            constant: self.constant,
            eq: self.eq,
            ineq: self.ineq,
            lower: self.lower,
            upper: self.upper,
        }
    }
}
