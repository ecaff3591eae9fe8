use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::qp::QuadraticProgram;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSettings {
    /// Bound on every KKT residual for an `Optimal` status.
    pub kkt_tolerance: f64,
    /// Most negative Hessian eigenvalue accepted as PSD (scaled by the largest entry).
    pub psd_tolerance: f64,
    pub max_iter: u32,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            kkt_tolerance: 1e-6,
            psd_tolerance: 1e-9,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub status: QpStatus,
    pub x: Vec<f64>,
    /// Multipliers of the equality rows.
    pub eq_duals: Vec<f64>,
    /// Nonnegative multipliers of the `≤` rows.
    pub ineq_duals: Vec<f64>,
    pub lower_duals: Vec<f64>,
    pub upper_duals: Vec<f64>,
    pub objective: f64,
    pub kkt: KktResiduals,
    pub iterations: u32,
}

/// Where each conic row of the solver came from.
#[derive(Clone, Copy)]
enum Origin {
    Eq(usize),
    Fixed(usize),
    Ineq(usize),
    Upper(usize),
    Lower(usize),
}

/// Solves a convex QP with a primal-dual interior-point method and verifies
/// the KKT conditions on the returned point.
pub fn solve_qp(qp: &QuadraticProgram, settings: &QpSettings) -> Result<QpSolution> {
    qp.validate()?;
    let scale = qp.p.iter().fold(1.0f64, |m, &(_, _, v)| m.max(v.abs()));
    let min_eig = qp.min_eigenvalue();
    if min_eig < -settings.psd_tolerance * scale {
        return Err(Error::NotPsd { min_eig });
    }

    let first = solve_once(qp, settings, 1e-8)?;
    if first.status == QpStatus::Optimal && first.kkt.max() > settings.kkt_tolerance {
        let second = solve_once(qp, settings, 1e-11)?;
        if second.status == QpStatus::Optimal && second.kkt.max() <= settings.kkt_tolerance {
            return Ok(second);
        }
        return Err(Error::Solver(format!(
            "KKT residuals above tolerance: {:?}",
            second.kkt
        )));
    }
    Ok(first)
}

fn solve_once(qp: &QuadraticProgram, settings: &QpSettings, tol: f64) -> Result<QpSolution> {
    let n = qp.num_vars();
    let mut origins = Vec::new();
    let (mut ri, mut ci, mut vals) = (Vec::new(), Vec::new(), Vec::new());
    let mut b = Vec::new();
    let mut push_row = |coeffs: &[(usize, f64)], rhs: f64, origin: Origin, origins: &mut Vec<Origin>| {
        let r = origins.len();
        for &(i, a) in coeffs {
            ri.push(r);
            ci.push(i);
            vals.push(a);
        }
        b.push(rhs);
        origins.push(origin);
    };

    for (k, row) in qp.eq.iter().enumerate() {
        push_row(&row.coeffs, row.rhs, Origin::Eq(k), &mut origins);
    }
    for i in 0..n {
        if qp.lower[i] == qp.upper[i] {
            push_row(&[(i, 1.0)], qp.lower[i], Origin::Fixed(i), &mut origins);
        }
    }
    let n_zero = origins.len();
    for (k, row) in qp.ineq.iter().enumerate() {
        push_row(&row.coeffs, row.rhs, Origin::Ineq(k), &mut origins);
    }
    for i in 0..n {
        if qp.lower[i] == qp.upper[i] {
            continue;
        }
        if qp.upper[i].is_finite() {
            push_row(&[(i, 1.0)], qp.upper[i], Origin::Upper(i), &mut origins);
        }
        if qp.lower[i].is_finite() {
            push_row(&[(i, -1.0)], -qp.lower[i], Origin::Lower(i), &mut origins);
        }
    }
    let m = origins.len();

    let a = CscMatrix::new_from_triplets(m, n, ri, ci, vals);
    let (pr, pc, pv): (Vec<_>, Vec<_>, Vec<_>) = {
        let mut r = Vec::with_capacity(qp.p.len());
        let mut c = Vec::with_capacity(qp.p.len());
        let mut v = Vec::with_capacity(qp.p.len());
        for &(i, j, x) in &qp.p {
            r.push(i);
            c.push(j);
            v.push(x);
        }
        (r, c, v)
    };
    let p = CscMatrix::new_from_triplets(n, n, pr, pc, pv);
    let mut cones = Vec::new();
    if n_zero > 0 {
        cones.push(SupportedConeT::ZeroConeT(n_zero));
    }
    if m > n_zero {
        cones.push(SupportedConeT::NonnegativeConeT(m - n_zero));
    }

    let clarabel_settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(settings.max_iter)
        .tol_gap_abs(tol)
        .tol_gap_rel(tol)
        .tol_feas(tol)
        .presolve_enable(false)
        .build()
        .map_err(|e| Error::Solver(format!("settings: {e:?}")))?;
    let mut solver = DefaultSolver::new(&p, &qp.q, &a, &b, &cones, clarabel_settings)
        .map_err(|e| Error::Solver(format!("setup: {e}")))?;
    solver.solve();
    let sol = &solver.solution;

    let status = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => QpStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            QpStatus::Infeasible
        }
        SolverStatus::MaxIterations | SolverStatus::MaxTime => QpStatus::IterationLimit,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            return Err(Error::Solver("objective is unbounded below".into()))
        }
        other => return Err(Error::Solver(format!("interior point failed: {other:?}"))),
    };

    let mut eq_duals = vec![0.0; qp.eq.len()];
    let mut ineq_duals = vec![0.0; qp.ineq.len()];
    let mut lower_duals = vec![0.0; n];
    let mut upper_duals = vec![0.0; n];
    for (origin, &z) in origins.iter().zip(&sol.z) {
        match *origin {
            Origin::Eq(k) => eq_duals[k] = z,
            // a fixed variable's multiplier is split by sign onto its bounds
            Origin::Fixed(i) => {
                if z >= 0.0 {
                    upper_duals[i] = z;
                } else {
                    lower_duals[i] = -z;
                }
            }
            Origin::Ineq(k) => ineq_duals[k] = z,
            Origin::Upper(i) => upper_duals[i] = z,
            Origin::Lower(i) => lower_duals[i] = z,
        }
    }

    let mut solution = QpSolution {
        status,
        x: sol.x.clone(),
        eq_duals,
        ineq_duals,
        lower_duals,
        upper_duals,
        objective: 0.0,
        kkt: KktResiduals::default(),
        iterations: sol.iterations,
    };
    if status != QpStatus::Infeasible {
        solution.objective = qp.objective(&solution.x);
        solution.kkt = kkt_residuals(qp, &solution);
    }
    Ok(solution)
}

/// KKT residuals of a primal-dual pair under the sign convention
/// `Px + q + A_eqᵀλ + A_inᵀμ + ν_up − ν_low = 0`, `μ, ν ≥ 0`.
pub fn kkt_residuals(qp: &QuadraticProgram, sol: &QpSolution) -> KktResiduals {
    let x = &sol.x;
    let mut grad = qp.hessian_product(x);
    for (g, q) in grad.iter_mut().zip(&qp.q) {
        *g += q;
    }
    for (row, &l) in qp.eq.iter().zip(&sol.eq_duals) {
        for &(i, a) in &row.coeffs {
            grad[i] += a * l;
        }
    }
    for (row, &mu) in qp.ineq.iter().zip(&sol.ineq_duals) {
        for &(i, a) in &row.coeffs {
            grad[i] += a * mu;
        }
    }
    for i in 0..x.len() {
        grad[i] += sol.upper_duals[i] - sol.lower_duals[i];
    }
    let stationarity = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let primal = qp.max_violation(x);

    let mut dual: f64 = 0.0;
    let mut comp: f64 = 0.0;
    for (row, &mu) in qp.ineq.iter().zip(&sol.ineq_duals) {
        dual = dual.max(-mu);
        comp = comp.max((mu * (row.rhs - row.activity(x))).abs());
    }
    for i in 0..x.len() {
        dual = dual.max(-sol.upper_duals[i]).max(-sol.lower_duals[i]);
        if qp.lower[i] != qp.upper[i] {
            if qp.upper[i].is_finite() {
                comp = comp.max((sol.upper_duals[i] * (qp.upper[i] - x[i])).abs());
            }
            if qp.lower[i].is_finite() {
                comp = comp.max((sol.lower_duals[i] * (x[i] - qp.lower[i])).abs());
            }
        }
    }
    KktResiduals {
        stationarity,
        primal,
        dual,
        complementarity: comp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::qp::ProgramBuilder;

    #[test]
    fn scalar_with_lower_bound() {
        let mut b = ProgramBuilder::new();
        let x = b.add_var("x", f64::NEG_INFINITY, f64::INFINITY);
        b.add_quadratic(x, x, 2.0);
        b.add_le(vec![(x, -1.0)], -1.0);
        let qp = b.build();
        let s = solve_qp(&qp, &QpSettings::default()).unwrap();
        assert_eq!(s.status, QpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-6);
        assert!((s.objective - 1.0).abs() < 1e-6);
        assert!(s.kkt.max() <= 1e-6);
    }

    #[test]
    fn projection_onto_simplex_of_interior_point() {
        let c = [0.2, 0.3, 0.5];
        let mut b = ProgramBuilder::new();
        let vars: Vec<usize> = (0..3).map(|k| b.add_var(format!("x{k}"), 0.0, 1.0)).collect();
        for (&v, &ck) in vars.iter().zip(&c) {
            b.add_quadratic(v, v, 2.0);
            b.add_linear(v, -2.0 * ck);
            b.add_constant(ck * ck);
        }
        b.add_eq(vars.iter().map(|&v| (v, 1.0)).collect(), 1.0);
        let s = solve_qp(&b.build(), &QpSettings::default()).unwrap();
        for (xi, ci) in s.x.iter().zip(&c) {
            assert!((xi - ci).abs() < 1e-6);
        }
        assert!(s.objective.abs() < 1e-6);
    }

    #[test]
    fn detects_infeasibility() {
        let mut b = ProgramBuilder::new();
        let x = b.add_var("x", 0.0, 1.0);
        b.add_quadratic(x, x, 1.0);
        b.add_eq(vec![(x, 1.0)], 2.0);
        let s = solve_qp(&b.build(), &QpSettings::default()).unwrap();
        assert_eq!(s.status, QpStatus::Infeasible);
    }

    #[test]
    fn rejects_indefinite_objective() {
        let mut b = ProgramBuilder::new();
        let x = b.add_var("x", 0.0, 1.0);
        b.add_quadratic(x, x, -1.0);
        assert!(matches!(
            solve_qp(&b.build(), &QpSettings::default()),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn fixed_variables_are_honoured() {
        let mut b = ProgramBuilder::new();
        let x = b.add_var("x", 0.3, 0.3);
        let y = b.add_var("y", 0.0, 1.0);
        b.add_quadratic(y, y, 2.0);
        b.add_linear(x, 1.0);
        b.add_eq(vec![(x, 1.0), (y, -1.0)], 0.0);
        let s = solve_qp(&b.build(), &QpSettings::default()).unwrap();
        assert!((s.x[0] - 0.3).abs() < 1e-8);
        assert!((s.x[1] - 0.3).abs() < 1e-7);
        assert!(s.kkt.max() < 1e-6);
    }
}
