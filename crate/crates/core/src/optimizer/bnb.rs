use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use super::qp::QuadraticProgram;
use super::solve::{solve_qp, QpSettings, QpStatus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiqpSettings {
    pub qp: QpSettings,
    pub relative_gap: f64,
    pub integrality_tolerance: f64,
    pub feasibility_tolerance: f64,
    pub max_nodes: usize,
}

impl Default for MiqpSettings {
    fn default() -> Self {
        Self {
            qp: QpSettings::default(),
            relative_gap: 1e-6,
            integrality_tolerance: 1e-6,
            feasibility_tolerance: 1e-6,
            max_nodes: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiqpStatus {
    Optimal,
    Infeasible,
    /// Node budget exhausted; `x` is the best incumbent and `gap` is reported.
    NodeLimit,
}

/// A subproblem with some binaries fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct MipNode {
    pub fixed: BTreeMap<usize, u8>,
    /// Lower bound valid for every completion of this node.
    pub bound: f64,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiqpSolution {
    pub status: MiqpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    /// Variables branched on, in order.
    pub branch_log: Vec<usize>,
    pub max_kkt_residual: f64,
    /// `(node bound, incumbent objective at that time)` for every solved node.
    pub bound_trace: Vec<(f64, f64)>,
}

struct Queued {
    bound: f64,
    id: usize,
    node: MipNode,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    // max-heap: the smallest bound, then the oldest node, pops first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Best-first branch-and-bound over `binaries`, branching on the most
/// fractional variable (lowest index on ties) and exploring the 0-branch first.
pub fn solve_miqp(
    qp: &QuadraticProgram,
    binaries: &[usize],
    settings: &MiqpSettings,
) -> Result<MiqpSolution> {
    qp.validate()?;
    for &b in binaries {
        if b >= qp.num_vars() || qp.lower[b] > 0.0 && qp.lower[b] < 1.0 || qp.upper[b] < 1.0 && qp.upper[b] > 0.0 {
            return Err(Error::invalid(format!("variable {b} cannot be binary")));
        }
    }
    if binaries.len() > 64 {
        return Err(Error::invalid(format!(
            "{} binaries exceed the supported 64",
            binaries.len()
        )));
    }

    let rows_of = binary_rows(qp, binaries);
    let mut heap = BinaryHeap::new();
    let mut next_id = 0;
    heap.push(Queued {
        bound: f64::NEG_INFINITY,
        id: next_id,
        node: MipNode {
            fixed: BTreeMap::new(),
            bound: f64::NEG_INFINITY,
            depth: 0,
        },
    });
    next_id += 1;

    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let mut nodes = 0;
    let mut branch_log = Vec::new();
    let mut max_kkt: f64 = 0.0;
    let mut bound_trace = Vec::new();
    let mut hit_limit = false;
    let tol = |inc: f64| settings.relative_gap * inc.abs().max(1.0);

    while let Some(Queued { node, .. }) = heap.pop() {
        if let Some((_, inc)) = &incumbent {
            if node.bound >= inc - tol(*inc) {
                continue;
            }
        }
        if nodes >= settings.max_nodes {
            heap.push(Queued {
                bound: node.bound,
                id: next_id,
                node,
            });
            hit_limit = true;
            break;
        }
        nodes += 1;

        let mut relaxed = qp.clone();
        for (&var, &v) in &node.fixed {
            relaxed.lower[var] = v as f64;
            relaxed.upper[var] = v as f64;
        }
        let sol = solve_qp(&relaxed, &settings.qp)?;
        match sol.status {
            QpStatus::Infeasible => continue,
            QpStatus::IterationLimit => {
                return Err(Error::Solver(format!(
                    "node relaxation hit the iteration limit at depth {}",
                    node.depth
                )))
            }
            QpStatus::Optimal => {}
        }
        max_kkt = max_kkt.max(sol.kkt.max());
        let bound = sol.objective.max(node.bound);
        bound_trace.push((
            bound,
            incumbent.as_ref().map_or(f64::INFINITY, |(_, v)| *v),
        ));
        if let Some((_, inc)) = &incumbent {
            if bound >= inc - tol(*inc) {
                continue;
            }
        }

        let fractional: Vec<usize> = binaries
            .iter()
            .copied()
            .filter(|&b| {
                let v = sol.x[b];
                v.min(1.0 - v).abs() > settings.integrality_tolerance
            })
            .collect();

        let candidate = if fractional.is_empty() {
            let mut x = sol.x.clone();
            for &b in binaries {
                x[b] = x[b].round();
            }
            Some(x)
        } else {
            round_binaries(qp, &sol.x, binaries, &rows_of, settings.feasibility_tolerance)
        };
        if let Some(mut x) = candidate {
            if qp.max_violation(&x) > settings.feasibility_tolerance {
                // interior-point iterates sit slightly off their bounds; polish
                // by re-solving with the rounded binaries fixed
                let mut fixed = qp.clone();
                for &b in binaries {
                    fixed.lower[b] = x[b];
                    fixed.upper[b] = x[b];
                }
                let polished = solve_qp(&fixed, &settings.qp)?;
                if polished.status == QpStatus::Optimal {
                    max_kkt = max_kkt.max(polished.kkt.max());
                    x = polished.x;
                    for &b in binaries {
                        x[b] = fixed.lower[b];
                    }
                }
            }
            if qp.max_violation(&x) <= settings.feasibility_tolerance {
                let obj = qp.objective(&x);
                if incumbent.as_ref().map_or(true, |(_, v)| obj < *v) {
                    incumbent = Some((x, obj));
                }
            }
        }
        if fractional.is_empty() {
            continue;
        }
        if let Some((_, inc)) = &incumbent {
            if bound >= inc - tol(*inc) {
                continue;
            }
        }

        let var = fractional
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let fa = (sol.x[a] - 0.5).abs();
                let fb = (sol.x[b] - 0.5).abs();
                fa.total_cmp(&fb).then(a.cmp(&b))
            })
            .expect("fractional set is non-empty");
        branch_log.push(var);
        for value in [0u8, 1u8] {
            let mut fixed = node.fixed.clone();
            fixed.insert(var, value);
            heap.push(Queued {
                bound,
                id: next_id,
                node: MipNode {
                    fixed,
                    bound,
                    depth: node.depth + 1,
                },
            });
            next_id += 1;
        }
    }

    let open_bound = heap
        .iter()
        .map(|q| q.bound)
        .fold(f64::INFINITY, f64::min);
    match incumbent {
        None if hit_limit => Err(Error::Solver(format!(
            "node limit {} reached without an integer-feasible point",
            settings.max_nodes
        ))),
        None => Ok(MiqpSolution {
            status: MiqpStatus::Infeasible,
            x: Vec::new(),
            objective: f64::INFINITY,
            bound: f64::INFINITY,
            gap: 0.0,
            nodes,
            branch_log,
            max_kkt_residual: max_kkt,
            bound_trace,
        }),
        Some((x, obj)) => {
            let bound = open_bound.min(obj);
            let gap = ((obj - bound) / obj.abs().max(1.0)).max(0.0);
            Ok(MiqpSolution {
                status: if hit_limit {
                    MiqpStatus::NodeLimit
                } else {
                    MiqpStatus::Optimal
                },
                x,
                objective: obj,
                bound,
                gap,
                nodes,
                branch_log,
                max_kkt_residual: max_kkt,
                bound_trace,
            })
        }
    }
}

/// Equality and inequality row indices touching each binary.
fn binary_rows(qp: &QuadraticProgram, binaries: &[usize]) -> BTreeMap<usize, (Vec<usize>, Vec<usize>)> {
    let mut map: BTreeMap<usize, (Vec<usize>, Vec<usize>)> =
        binaries.iter().map(|&b| (b, Default::default())).collect();
    for (k, row) in qp.eq.iter().enumerate() {
        for &(i, _) in &row.coeffs {
            if let Some(e) = map.get_mut(&i) {
                e.0.push(k);
            }
        }
    }
    for (k, row) in qp.ineq.iter().enumerate() {
        for &(i, _) in &row.coeffs {
            if let Some(e) = map.get_mut(&i) {
                e.1.push(k);
            }
        }
    }
    map
}

/// Rounds each binary to whichever of {0, 1} leaves the rows it touches
/// least violated, keeping the continuous part of `x` unchanged.
fn round_binaries(
    qp: &QuadraticProgram,
    x: &[f64],
    binaries: &[usize],
    rows_of: &BTreeMap<usize, (Vec<usize>, Vec<usize>)>,
    tol: f64,
) -> Option<Vec<f64>> {
    let mut xr = x.to_vec();
    for &b in binaries {
        let nearest = x[b].round().clamp(0.0, 1.0);
        let (eqs, ineqs) = &rows_of[&b];
        let violation = |xr: &[f64]| {
            let mut worst: f64 = 0.0;
            for &k in eqs {
                worst = worst.max((qp.eq[k].activity(xr) - qp.eq[k].rhs).abs());
            }
            for &k in ineqs {
                worst = worst.max(qp.ineq[k].activity(xr) - qp.ineq[k].rhs);
            }
            worst
        };
        xr[b] = nearest;
        let v_near = violation(&xr);
        if v_near > tol {
            xr[b] = 1.0 - nearest;
            let v_other = violation(&xr);
            if v_other >= v_near {
                xr[b] = nearest;
            }
        }
    }
    Some(xr)
}
