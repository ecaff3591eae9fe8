//! Relaxed histogram MI surrogate used as the controller's privacy term.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::domain::BinningScheme;
use crate::error::{Error, Result};
use crate::optimizer::ProgramBuilder;

pub const NU: f64 = std::f64::consts::LOG2_E;

/// Default trailing history window (one week of hourly samples).
pub const DEFAULT_WINDOW: usize = 168;
/// Default additive smoothing; with 24×24 bins this gives `N_ε ≈ 201.6`.
pub const DEFAULT_EPSILON: f64 = 0.0583;
/// Gap closing the strict upper inequality of the bin link rows, in kW.
pub const DEFAULT_LINK_GAP: f64 = 1e-6;

/// Smoothed joint and marginal frequencies of the trailing history window.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramConstants {
    m: usize,
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    n_eps: f64,
    window: usize,
    epsilon: f64,
}

impl HistogramConstants {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Joint constant for 0-based bins `(i, j)`.
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn b(&self, j: usize) -> f64 {
        self.b[j]
    }

    pub fn c(&self, i: usize) -> f64 {
        self.c[i]
    }

    pub fn n_eps(&self) -> f64 {
        self.n_eps
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Builds the constants from the trailing `window` samples of the history.
pub fn update_constants(
    history_x: &[f64],
    history_y: &[f64],
    binning: &BinningScheme,
    epsilon: f64,
    window: usize,
) -> Result<HistogramConstants> {
    if history_x.len() != history_y.len() {
        return Err(Error::LengthMismatch {
            what: "history x/y",
            left: history_x.len(),
            right: history_y.len(),
        });
    }
    if window == 0 {
        return Err(Error::invalid("history window must be positive"));
    }
    if history_x.len() < window {
        return Err(Error::ColdStart {
            need: window,
            got: history_x.len(),
        });
    }
    if !(epsilon >= 0.0) {
        return Err(Error::invalid("smoothing constant must be nonnegative"));
    }
    let (m, n) = (binning.m(), binning.n());
    let start = history_x.len() - window;
    let xi = binning.x_edges.bin_all(&history_x[start..])?;
    let yj = binning.y_edges.bin_all(&history_y[start..])?;

    let mut counts = vec![0.0; m * n];
    for (&i, &j) in xi.iter().zip(&yj) {
        counts[(i - 1) * n + (j - 1)] += 1.0;
    }
    let n_eps = window as f64 + epsilon * (m * n) as f64;
    if n_eps <= 0.0 {
        return Err(Error::invalid("empty histogram with zero smoothing"));
    }
    let a: Vec<f64> = counts.iter().map(|k| (k + epsilon) / n_eps).collect();
    let mut b = vec![0.0; n];
    let mut c = vec![0.0; m];
    for i in 0..m {
        for j in 0..n {
            b[j] += counts[i * n + j];
            c[i] += counts[i * n + j];
        }
    }
    for v in &mut b {
        *v = (*v + m as f64 * epsilon) / n_eps;
    }
    for v in &mut c {
        *v = (*v + n as f64 * epsilon) / n_eps;
    }
    Ok(HistogramConstants {
        m,
        n,
        a,
        b,
        c,
        n_eps,
        window,
        epsilon,
    })
}

/// Quadratic-form coefficients of the surrogate over the compact variables
/// `z[τ·n + j]` (the `i*_τ` row of each step).
#[derive(Debug, Clone)]
pub struct MiCoefficients {
    pub constant: f64,
    pub linear: Vec<f64>,
    /// One `(W+1)×(W+1)` Hessian block per Y bin; bins never couple.
    pub blocks: Vec<DMatrix<f64>>,
}

impl MiCoefficients {
    /// `constant + linearᵀz + ½ zᵀHz`.
    pub fn evaluate(&self, z: &[f64]) -> f64 {
        let n = self.blocks.len();
        let steps = z.len() / n;
        let mut v = self.constant;
        for (k, zk) in z.iter().enumerate() {
            v += self.linear[k] * zk;
        }
        for (j, h) in self.blocks.iter().enumerate() {
            for t in 0..steps {
                for s in 0..steps {
                    v += 0.5 * h[(t, s)] * z[t * n + j] * z[s * n + j];
                }
            }
        }
        v
    }
}

/// Variables created by [`MiApproxProgram::emit`].
#[derive(Debug, Clone)]
pub struct MiEmission {
    /// `z[τ][j]` variable indices.
    pub z: Vec<Vec<usize>>,
    /// Largest eigenvalue magnitude removed by the PSD projection (0 when
    /// the Hessian was already PSD).
    pub projection: f64,
}

#[derive(Debug, Clone)]
pub struct MiApproxProgram {
    istar: Vec<usize>,
    constants: HistogramConstants,
    y_edges: Vec<f64>,
}

/// Assembles the surrogate for a forecast window of sensitive load.
pub fn build_mi_program(
    x_forecast: &[f64],
    constants: &HistogramConstants,
    binning: &BinningScheme,
) -> Result<MiApproxProgram> {
    if x_forecast.is_empty() {
        return Err(Error::Empty("forecast window"));
    }
    if binning.m() != constants.m || binning.n() != constants.n {
        return Err(Error::invalid("binning does not match histogram constants"));
    }
    let istar = binning
        .x_edges
        .bin_all(x_forecast)?
        .into_iter()
        .map(|i| i - 1)
        .collect();
    Ok(MiApproxProgram {
        istar,
        constants: constants.clone(),
        y_edges: binning.y_edges.as_slice().to_vec(),
    })
}

impl MiApproxProgram {
    pub fn horizon(&self) -> usize {
        self.istar.len()
    }

    /// 0-based X bin of each forecast step.
    pub fn istar(&self) -> &[usize] {
        &self.istar
    }

    pub fn constants(&self) -> &HistogramConstants {
        &self.constants
    }

    fn log_ratio(&self, i: usize, j: usize) -> f64 {
        let k = &self.constants;
        (k.a(i, j) / (k.b(j) * k.c(i))).log2()
    }

    /// Evaluates the surrogate directly from a full assignment laid out as
    /// `z[(τ·m + i)·n + j]`. Rows `i ≠ i*_τ` are ignored.
    pub fn evaluate(&self, z: &[f64]) -> Result<f64> {
        let (m, n) = (self.constants.m, self.constants.n);
        let steps = self.horizon();
        if z.len() != steps * m * n {
            return Err(Error::LengthMismatch {
                what: "z assignment",
                left: z.len(),
                right: steps * m * n,
            });
        }
        let compact: Vec<f64> = (0..steps)
            .flat_map(|t| {
                let row = (t * m + self.istar[t]) * n;
                z[row..row + n].iter().copied()
            })
            .collect();
        self.evaluate_compact(&compact)
    }

    /// Direct evaluation on the compact layout `z[τ·n + j]`.
    pub fn evaluate_compact(&self, z: &[f64]) -> Result<f64> {
        self.check_assignment(z)?;
        let k = &self.constants;
        let (m, n) = (k.m, k.n);
        let mut zsum = vec![0.0; m * n];
        for (t, &i) in self.istar.iter().enumerate() {
            for j in 0..n {
                zsum[i * n + j] += z[t * n + j];
            }
        }
        let mut col = vec![0.0; n];
        for i in 0..m {
            for j in 0..n {
                col[j] += zsum[i * n + j];
            }
        }
        let ne = k.n_eps;
        let mut total = 0.0;
        for i in 0..m {
            for j in 0..n {
                let a = k.a(i, j);
                let zij = zsum[i * n + j];
                total += (a + zij / ne)
                    * (self.log_ratio(i, j) + NU * zij / (a * ne) - NU * col[j] / (k.b(j) * ne));
            }
        }
        Ok(total)
    }

    fn check_assignment(&self, z: &[f64]) -> Result<()> {
        let n = self.constants.n;
        if z.len() != self.horizon() * n {
            return Err(Error::LengthMismatch {
                what: "z assignment",
                left: z.len(),
                right: self.horizon() * n,
            });
        }
        for t in 0..self.horizon() {
            let row = &z[t * n..(t + 1) * n];
            if row.iter().any(|&v| !(-1e-8..=1.0 + 1e-8).contains(&v)) {
                return Err(Error::invalid(format!("z outside [0, 1] at step {t}")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-8 {
                return Err(Error::invalid(format!(
                    "z row of step {t} sums to {s}, expected 1"
                )));
            }
        }
        Ok(())
    }

    /// Exact expansion of the surrogate into constant, linear and quadratic parts.
    pub fn coefficients(&self) -> MiCoefficients {
        let k = &self.constants;
        let (m, n) = (k.m, k.n);
        let steps = self.horizon();
        let ne = k.n_eps;

        let mut constant = 0.0;
        let mut col_a = vec![0.0; n];
        for i in 0..m {
            for j in 0..n {
                constant += k.a(i, j) * self.log_ratio(i, j);
                col_a[j] += k.a(i, j);
            }
        }
        let mut linear = vec![0.0; steps * n];
        for (t, &i) in self.istar.iter().enumerate() {
            for j in 0..n {
                linear[t * n + j] =
                    (NU + self.log_ratio(i, j)) / ne - NU * col_a[j] / (k.b(j) * ne);
            }
        }
        let scale = 2.0 * NU / (ne * ne);
        let blocks = (0..n)
            .map(|j| {
                DMatrix::from_fn(steps, steps, |t, s| {
                    let same = if self.istar[t] == self.istar[s] {
                        1.0 / k.a(self.istar[t], j)
                    } else {
                        0.0
                    };
                    scale * (same - 1.0 / k.b(j))
                })
            })
            .collect();
        MiCoefficients {
            constant,
            linear,
            blocks,
        }
    }

    /// Adds `weight · Ĩ` and the z constraints to `builder`, linking step `τ`
    /// to the grid-load variable `y[τ]`. Bins outside a step's current y
    /// bounds are fixed to zero.
    pub fn emit(
        &self,
        builder: &mut ProgramBuilder,
        y: &[usize],
        weight: f64,
        gap: f64,
    ) -> Result<MiEmission> {
        let steps = self.horizon();
        if y.len() != steps {
            return Err(Error::LengthMismatch {
                what: "y variables",
                left: y.len(),
                right: steps,
            });
        }
        let n = self.constants.n;
        let edges = &self.y_edges;
        let mut z = Vec::with_capacity(steps);
        for (t, &yv) in y.iter().enumerate() {
            let (lo, hi) = builder.bounds(yv);
            let row: Vec<usize> = (0..n)
                .map(|j| {
                    let reachable = edges[j] <= hi && edges[j + 1] - gap >= lo;
                    builder.add_var(format!("z[{t}][{}]", j + 1), 0.0, if reachable { 1.0 } else { 0.0 })
                })
                .collect();
            builder.add_eq(row.iter().map(|&v| (v, 1.0)).collect(), 1.0);
            let mut low: Vec<(usize, f64)> = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| edges[j] != 0.0)
                .map(|(j, &v)| (v, edges[j]))
                .collect();
            low.push((yv, -1.0));
            builder.add_le(low, 0.0);
            let mut high: Vec<(usize, f64)> = row
                .iter()
                .enumerate()
                .map(|(j, &v)| (v, -edges[j + 1]))
                .collect();
            high.push((yv, 1.0));
            builder.add_le(high, -gap);
            z.push(row);
        }
        if weight == 0.0 {
            return Ok(MiEmission { z, projection: 0.0 });
        }

        let coef = self.coefficients();
        builder.add_constant(weight * coef.constant);
        for t in 0..steps {
            for j in 0..n {
                builder.add_linear(z[t][j], weight * coef.linear[t * n + j]);
            }
        }
        if self.marginals_consistent() {
            self.emit_sum_of_squares(builder, &z, weight);
            return Ok(MiEmission { z, projection: 0.0 });
        }
        let mut projection: f64 = 0.0;
        for (j, block) in coef.blocks.into_iter().enumerate() {
            let scale = block.amax().max(f64::MIN_POSITIVE);
            let eig = SymmetricEigen::new(block.clone());
            let min = eig.eigenvalues.min();
            let block = if min < -1e-12 * scale {
                projection = projection.max(-min);
                let clamped = eig.eigenvalues.map(|l| l.max(0.0));
                &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose()
            } else {
                block
            };
            for t in 0..steps {
                for s in t..steps {
                    builder.add_quadratic(z[t][j], z[s][j], weight * block[(t, s)]);
                }
            }
        }
        Ok(MiEmission { z, projection })
    }

    /// True when `b_j = Σ_i a_ij` for every bin, which makes each Hessian
    /// block PSD by Cauchy-Schwarz.
    pub fn marginals_consistent(&self) -> bool {
        let k = &self.constants;
        (0..k.n).all(|j| {
            let col: f64 = (0..k.m).map(|i| k.a(i, j)).sum();
            (col - k.b(j)).abs() <= 1e-12 * k.b(j).max(1.0)
        })
    }

    /// Emits the quadratic part as
    /// `ν/N² Σ_j [Σ_{i∈S} (Z_ij − a_ij C_j / b_j)² / a_ij + (Σ_{i∉S} a_ij) C_j² / b_j²]`
    /// with `Z_ij` the z mass of the horizon steps in X bin `i`, `C_j` the
    /// column total and `S` the X bins present in the horizon. This equals
    /// the expanded form when the marginals are consistent, and keeps the
    /// KKT system sparse.
    fn emit_sum_of_squares(&self, builder: &mut ProgramBuilder, z: &[Vec<usize>], weight: f64) {
        let k = &self.constants;
        let scale = weight * 2.0 * NU / (k.n_eps * k.n_eps);
        let mut present: Vec<usize> = self.istar.clone();
        present.sort_unstable();
        present.dedup();
        let steps = self.horizon() as f64;
        for j in 0..k.n {
            let b = k.b(j);
            let c = builder.add_var(format!("C[{}]", j + 1), 0.0, steps);
            let mut row: Vec<(usize, f64)> = z.iter().map(|r| (r[j], -1.0)).collect();
            row.push((c, 1.0));
            builder.add_eq(row, 0.0);
            let mut absent = 0.0;
            for i in 0..k.m {
                let a = k.a(i, j);
                if present.binary_search(&i).is_err() {
                    absent += a;
                    continue;
                }
                let w = builder.add_var(format!("w[{}][{}]", i + 1, j + 1), f64::NEG_INFINITY, f64::INFINITY);
                let mut row: Vec<(usize, f64)> = self
                    .istar
                    .iter()
                    .enumerate()
                    .filter(|&(_, &s)| s == i)
                    .map(|(t, _)| (z[t][j], -1.0))
                    .collect();
                row.push((w, 1.0));
                row.push((c, a / b));
                builder.add_eq(row, 0.0);
                builder.add_quadratic(w, w, scale / a);
            }
            builder.add_quadratic(c, c, scale * absent / (b * b));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binning() -> BinningScheme {
        BinningScheme::uniform(6.0, 24, 0.0, 12.0, 24).unwrap()
    }

    #[test]
    fn effective_sample_count_default_window() {
        let x = vec![0.1; 168];
        let k = update_constants(&x, &x, &binning(), DEFAULT_EPSILON, DEFAULT_WINDOW).unwrap();
        assert!((k.n_eps() - 201.5808).abs() < 1e-9);
        assert!((k.n_eps() - 201.6).abs() < 0.05);
        let total: f64 = (0..24).flat_map(|i| (0..24).map(move |j| (i, j))).map(|(i, j)| k.a(i, j)).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_history_without_smoothing() {
        let b = BinningScheme::uniform(2.0, 2, 0.0, 2.0, 2).unwrap();
        let x = [0.5, 0.5, 1.5, 1.5];
        let y = [0.5, 1.5, 0.5, 1.5];
        let k = update_constants(&x, &y, &b, 0.0, 4).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(k.a(i, j), 0.25);
            }
        }
    }

    #[test]
    fn single_sample_smoothing() {
        let b = BinningScheme::uniform(1.0, 1, 0.0, 2.0, 2).unwrap();
        let k = update_constants(&[0.5], &[0.5], &b, 1.0, 1).unwrap();
        assert_eq!(k.n_eps(), 3.0);
        assert!((k.a(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((k.a(0, 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn short_history_is_a_cold_start() {
        let x = vec![0.1; 100];
        let err = update_constants(&x, &x, &binning(), DEFAULT_EPSILON, DEFAULT_WINDOW).unwrap_err();
        assert!(matches!(err, Error::ColdStart { need: 168, got: 100 }));
    }

    #[test]
    fn off_rows_do_not_matter() {
        let x: Vec<f64> = (0..168).map(|t| (t % 7) as f64 * 0.8).collect();
        let k = update_constants(&x, &x, &binning(), DEFAULT_EPSILON, DEFAULT_WINDOW).unwrap();
        let p = build_mi_program(&[1.0, 3.0], &k, &binning()).unwrap();
        let mut z = vec![0.0; 2 * 24 * 24];
        for t in 0..2 {
            z[(t * 24 + p.istar()[t]) * 24 + 5] = 1.0;
        }
        let v1 = p.evaluate(&z).unwrap();
        z[(0 * 24 + (p.istar()[0] + 1) % 24) * 24 + 3] = 0.7;
        assert_eq!(v1, p.evaluate(&z).unwrap());
    }

    #[test]
    fn blocks_are_psd() {
        let x: Vec<f64> = (0..168).map(|t| ((t * 37) % 11) as f64 * 0.5).collect();
        let k = update_constants(&x, &x, &binning(), DEFAULT_EPSILON, DEFAULT_WINDOW).unwrap();
        let fc: Vec<f64> = (0..24).map(|t| ((t * 5) % 9) as f64 * 0.6).collect();
        let p = build_mi_program(&fc, &k, &binning()).unwrap();
        for h in p.coefficients().blocks {
            let min = SymmetricEigen::new(h).eigenvalues.min();
            assert!(min >= -1e-9, "{min}");
        }
    }

    #[test]
    fn sum_of_squares_matches_expansion() {
        use rand::{Rng, SeedableRng};
        let x: Vec<f64> = (0..168).map(|t| ((t * 37) % 11) as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| v + ((v * 7.0) % 3.0)).collect();
        let k = update_constants(&x, &y, &binning(), DEFAULT_EPSILON, DEFAULT_WINDOW).unwrap();
        let fc: Vec<f64> = (0..6).map(|t| ((t * 5) % 9) as f64 * 0.6).collect();
        let p = build_mi_program(&fc, &k, &binning()).unwrap();
        assert!(p.marginals_consistent());
        let mut b = ProgramBuilder::new();
        let yv: Vec<usize> = (0..6).map(|t| b.add_var(format!("y{t}"), 0.0, 12.0)).collect();
        let em = p.emit(&mut b, &yv, 1.7, DEFAULT_LINK_GAP).unwrap();
        let names = b.names().to_vec();
        let qp = b.build();
        let coef = p.coefficients();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut zc = vec![0.0; 6 * 24];
            for t in 0..6 {
                let w: Vec<f64> = (0..24).map(|_| rng.gen::<f64>()).collect();
                let s: f64 = w.iter().sum();
                for j in 0..24 {
                    zc[t * 24 + j] = w[j] / s;
                }
            }
            let mut v = vec![0.0; qp.num_vars()];
            for t in 0..6 {
                for j in 0..24 {
                    v[em.z[t][j]] = zc[t * 24 + j];
                }
            }
            let col = |j: usize| (0..6).map(|t| zc[t * 24 + j]).sum::<f64>();
            for (idx, name) in names.iter().enumerate() {
                if let Some(j) = name.strip_prefix("C[") {
                    let j: usize = j.trim_end_matches(']').parse::<usize>().unwrap() - 1;
                    v[idx] = col(j);
                } else if let Some(rest) = name.strip_prefix("w[") {
                    let parts: Vec<usize> = rest
                        .trim_end_matches(']')
                        .split("][")
                        .map(|s| s.parse::<usize>().unwrap() - 1)
                        .collect();
                    let (i, j) = (parts[0], parts[1]);
                    let zs: f64 = (0..6).filter(|&t| p.istar()[t] == i).map(|t| zc[t * 24 + j]).sum();
                    v[idx] = zs - k.a(i, j) / k.b(j) * col(j);
                }
            }
            let want = 1.7 * coef.evaluate(&zc);
            let got = qp.objective(&v);
            assert!((want - got).abs() < 1e-9 * want.abs().max(1.0), "{want} {got}");
            assert!((coef.evaluate(&zc) - p.evaluate_compact(&zc).unwrap()).abs() < 1e-9);
        }
    }
}
