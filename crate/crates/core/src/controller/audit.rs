//! Independent re-check of a committed run at 3600 s and 300 s resolution.
//!
//! The auditor replays the plant from the run's initial state using only the
//! committed set-points and its own copy of the device equations.

use serde::Serialize;

use super::dispatch::{Element, SLOTS};
use super::plan::{Committed, StepStatus};
use super::run::RunOutput;
use crate::config::ScenarioConfig;
use crate::devices::{DischargeConvention, ErhModel, EssModel, EwhModel, UpperNodeBase};
use crate::error::{Error, Result};
use crate::profiles::ProfileBundle;

const BREACH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditIssue {
    pub step: usize,
    pub slot: Option<usize>,
    pub what: String,
    pub magnitude: f64,
    /// The controller already reported this step as degraded.
    pub excused: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub steps: usize,
    pub slots: usize,
    /// Steps where `y ≠ x + Σ S` bit for bit.
    pub balance_violations: usize,
    /// Thermal-only steps with `y < x`.
    pub discharge_violations: usize,
    /// Largest bound breach outside excused steps.
    pub max_bound_violation: f64,
    /// Largest difference between replayed and recorded states.
    pub max_state_mismatch: f64,
    /// Slots whose flag disagrees with the replayed breach test.
    pub flag_mismatches: usize,
    /// Hours deviating more than one slot from the request without a flag.
    pub unflagged_deviations: usize,
    pub issues: Vec<AuditIssue>,
}

impl AuditReport {
    /// No balance, discharge or flag errors; bounds and replay within `tol`.
    pub fn is_clean(&self, tol: f64) -> bool {
        self.balance_violations == 0
            && self.discharge_violations == 0
            && self.flag_mismatches == 0
            && self.unflagged_deviations == 0
            && self.max_bound_violation <= tol
            && self.max_state_mismatch <= tol
    }

    fn issue(&mut self, step: usize, slot: Option<usize>, what: impl Into<String>, magnitude: f64, excused: bool) {
        self.issues.push(AuditIssue {
            step,
            slot,
            what: what.into(),
            magnitude,
            excused,
        });
    }

    fn bound(&mut self, step: usize, slot: Option<usize>, what: &str, magnitude: f64, excused: bool) {
        if magnitude > 0.0 {
            if !excused {
                self.max_bound_violation = self.max_bound_violation.max(magnitude);
            }
            self.issue(step, slot, what, magnitude, excused);
        }
    }

    fn mismatch(&mut self, step: usize, slot: Option<usize>, what: &str, replayed: f64, recorded: Option<f64>) {
        let d = recorded.map_or(f64::INFINITY, |r| (r - replayed).abs());
        self.max_state_mismatch = self.max_state_mismatch.max(d);
        if d > 1e-9 {
            self.issue(step, slot, format!("{what} replay differs from record"), d, false);
        }
    }
}

fn ess_next(m: &EssModel, e: f64, pc: f64, pd: f64) -> f64 {
    let out = match m.discharge_convention {
        DischargeConvention::Divide => pd / m.eta_discharge,
        DischargeConvention::Multiply => pd * m.eta_discharge,
    };
    e + m.eta_charge * pc - out
}

fn ewh_next(m: &EwhModel, (tl, tu): (f64, f64), air: f64, draw: f64, ul: f64, uu: f64, dt: f64) -> (f64, f64) {
    let d = draw.clamp(0.0, m.tank_litres / 2.0);
    let low = tl + dt / m.c_low * (m.ua_low * (air - tl) + m.power_kw * ul) + d * m.cp / m.c_low * (m.t_mains - tl);
    let start = if m.upper_node_base == UpperNodeBase::Low { tl } else { tu };
    let up = start + dt / m.c_up * (m.ua_up * (air - tu) + m.power_kw * uu) + d * m.cp / m.c_up * (tl - tu);
    (low, up)
}

fn ewh_breach(m: &EwhModel, (tl, tu): (f64, f64)) -> f64 {
    (tu - m.t_absmax).max(0.0) + (m.t_absmin - tu).max(0.0) + (tl - tu).max(0.0)
}

fn erh_next(m: &ErhModel, t: f64, out: f64, sun: f64, u: f64, dt: f64) -> f64 {
    let r = dt / 3600.0;
    t + r * m.gamma[0] * (out - t) + r * m.gamma[1] * u * m.power_kw + r * m.gamma[2] * sun
}

pub fn audit_run(config: &ScenarioConfig, bundle: &ProfileBundle, run: &RunOutput) -> Result<AuditReport> {
    let x_all = bundle.load.values();
    if run.offset + run.steps.len() > x_all.len() {
        return Err(Error::TooShort {
            need: run.offset + run.steps.len(),
            got: x_all.len(),
        });
    }
    let ess = config.ess();
    let ewh = config.ewh();
    let erh = config.erh();
    let thermal_only = ess.is_none();
    let dispatching = !run.dispatch.is_empty();
    if dispatching && run.dispatch.len() != run.steps.len() {
        return Err(Error::invalid("dispatch plans do not cover every step"));
    }
    let (y_lo, y_hi) = (run.binning.y_edges.lo(), run.binning.y_edges.hi());

    let mut rep = AuditReport {
        steps: run.steps.len(),
        ..AuditReport::default()
    };
    let mut energy = run.initial_state.energy;
    let mut tank = run.initial_state.ewh.map(|s| (s.t_low, s.t_up));
    let mut t_in = run.initial_state.t_in;

    for (k, rec) in run.steps.iter().enumerate() {
        let t = run.offset + k;
        let c = &rec.committed;
        let excused = matches!(rec.status, StepStatus::SoftBounds | StepStatus::Passthrough);

        if c.x != x_all[t] {
            rep.issue(k, None, "committed x differs from the load profile", (c.x - x_all[t]).abs(), false);
            rep.balance_violations += 1;
        }
        let s = c.s_ess + c.s_ewh + c.s_erh;
        if c.s != s || c.y != c.x + s {
            rep.balance_violations += 1;
            rep.issue(k, None, "grid load is not x + S", (c.y - c.x - s).abs(), false);
        }
        if thermal_only && c.y < c.x {
            rep.discharge_violations += 1;
            rep.issue(k, None, "thermal loads reduced the grid load", c.x - c.y, false);
        }
        rep.bound(k, None, "grid load below Y min", y_lo - c.y, false);
        rep.bound(k, None, "grid load above Y max", c.y - y_hi, false);

        if let (Some(m), Some(e)) = (ess, energy) {
            rep.bound(k, None, "charge power", c.p_charge - m.charge_kw, false);
            rep.bound(k, None, "discharge power", c.p_discharge - m.discharge_kw, false);
            rep.bound(k, None, "negative storage power", (-c.p_charge).max(-c.p_discharge), false);
            if c.p_charge > 0.0 && c.p_discharge > 0.0 {
                rep.issue(k, None, "simultaneous charge and discharge", c.p_charge.min(c.p_discharge), false);
                rep.max_bound_violation = rep.max_bound_violation.max(c.p_charge.min(c.p_discharge));
            }
            if c.s_ess != c.p_charge - c.p_discharge {
                rep.balance_violations += 1;
                rep.issue(k, None, "storage load is not P_c − P_d", (c.s_ess - c.p_charge + c.p_discharge).abs(), false);
            }
            let next = ess_next(m, e, c.p_charge, c.p_discharge);
            rep.bound(k, None, "storage energy below 0", -next, false);
            rep.bound(k, None, "storage energy above capacity", next - m.capacity_kwh, false);
            rep.mismatch(k, None, "storage energy", next, rec.energy);
            energy = Some(next);
        }

        for (what, u) in [("U_low", c.u_low), ("U_up", c.u_up), ("U_erh", c.u_erh)] {
            rep.bound(k, None, &format!("{what} outside [0, 1]"), (u - 1.0).max(-u), false);
        }
        rep.bound(k, None, "U_low + U_up above 1", c.u_low + c.u_up - 1.0 - 1e-12, false);
        if let Some(m) = ewh {
            let s = c.s_ewh - m.power_kw * (c.u_low + c.u_up);
            rep.bound(k, None, "water heater load disagrees with duties", s.abs() - 1e-12, false);
        }
        if let Some(m) = erh {
            rep.bound(k, None, "space heater load disagrees with duty", (c.s_erh - m.power_kw * c.u_erh).abs() - 1e-12, false);
        }

        if dispatching {
            let plan = &run.dispatch[k];
            rep.slots += plan.slots.len();
            let counts = |u: f64| (u * SLOTS as f64).round() as usize;
            let (mut low, mut up) = (counts(plan.requested[0]), counts(plan.requested[1]));
            if low + up > SLOTS {
                let fl = plan.requested[0] * SLOTS as f64 - low as f64;
                let fu = plan.requested[1] * SLOTS as f64 - up as f64;
                if fl < fu {
                    low -= 1;
                } else {
                    up -= 1;
                }
            }
            let mut heat = counts(plan.requested[2]);
            let mut on = [0usize; 3];
            let mut flagged_hour = false;
            for (sl, slot) in plan.slots.iter().enumerate() {
                let air = t_in.unwrap_or(config.indoor_temp);
                if let (Some(m), Some(state)) = (ewh, tank) {
                    let draw = bundle.fine_draw(t, sl);
                    let desired = if up > 0 { (0.0, 1.0) } else if low > 0 { (1.0, 0.0) } else { (0.0, 0.0) };
                    let trial = ewh_next(m, state, air, draw, desired.0, desired.1, 300.0);
                    let breach = ewh_breach(m, trial) > BREACH_TOL;
                    if breach != slot.flagged {
                        rep.flag_mismatches += 1;
                        rep.issue(k, Some(sl), "flag disagrees with the breach test", ewh_breach(m, trial), false);
                    }
                    flagged_hour |= slot.flagged;
                    let applied = match slot.applied {
                        Element::Off => (0.0, 0.0),
                        Element::Low => (1.0, 0.0),
                        Element::Up => (0.0, 1.0),
                    };
                    if !slot.flagged && applied != desired {
                        rep.issue(k, Some(sl), "unflagged slot departs from the greedy schedule", 1.0, false);
                        rep.flag_mismatches += 1;
                    }
                    if applied.0 > 0.0 {
                        low = low.saturating_sub(1);
                        on[0] += 1;
                    }
                    if applied.1 > 0.0 {
                        up = up.saturating_sub(1);
                        on[1] += 1;
                    }
                    let next = ewh_next(m, state, air, draw, applied.0, applied.1, 300.0);
                    let b = ewh_breach(m, next);
                    // A logged unavoidable breach is reported by the dispatcher itself.
                    rep.bound(k, Some(sl), "tank bound breach", b, slot.violation > 0.0 || excused);
                    rep.mismatch(k, Some(sl), "tank lower node", next.0, slot.ewh.map(|s| s.t_low));
                    rep.mismatch(k, Some(sl), "tank upper node", next.1, slot.ewh.map(|s| s.t_up));
                    tank = Some(next);
                }
                if let (Some(m), Some(ti)) = (erh, t_in) {
                    let u = if heat > 0 { 1.0 } else { 0.0 };
                    heat = heat.saturating_sub(1);
                    if slot.erh_on != (u > 0.0) {
                        rep.flag_mismatches += 1;
                        rep.issue(k, Some(sl), "space heater slot departs from the schedule", 1.0, false);
                    }
                    on[2] += u as usize;
                    let next = erh_next(m, ti, bundle.fine_outdoor(t, sl), bundle.fine_sun(t, sl), u, 300.0);
                    rep.mismatch(k, Some(sl), "indoor temperature", next, slot.t_in);
                    t_in = Some(next);
                }
            }
            if let Some((tl, tu)) = tank {
                rep.mismatch(k, None, "end-of-hour lower node", tl, rec.t_low);
                rep.mismatch(k, None, "end-of-hour upper node", tu, rec.t_up);
            }
            if let Some(ti) = t_in {
                rep.mismatch(k, None, "end-of-hour indoor temperature", ti, rec.t_in);
            }
            for (d, &n) in on.iter().enumerate() {
                let achieved = n as f64 / SLOTS as f64;
                if (achieved - c_duty(c, d)).abs() > 1e-12 {
                    rep.issue(k, None, "recorded duty differs from the slot count", (achieved - c_duty(c, d)).abs(), false);
                    rep.balance_violations += 1;
                }
                let dev = (achieved - plan.requested[d]).abs();
                if dev > 1.0 / SLOTS as f64 + 1e-12 && !(flagged_hour && d < 2) {
                    rep.unflagged_deviations += 1;
                    rep.issue(k, None, "duty deviates by more than one slot without a flag", dev, false);
                }
            }
        } else {
            if let (Some(m), Some(state)) = (ewh, tank) {
                let air = t_in.unwrap_or(config.indoor_temp);
                let next = ewh_next(m, state, air, bundle.draw(t), c.u_low, c.u_up, 3600.0);
                let (tl, tu) = next;
                rep.bound(k, None, "upper node above T_absmax", tu - m.t_absmax, excused);
                rep.bound(k, None, "upper node below T_absmin", m.t_absmin - tu, excused);
                rep.bound(k, None, "node ordering", tl - tu, excused);
                rep.mismatch(k, None, "tank lower node", tl, rec.t_low);
                rep.mismatch(k, None, "tank upper node", tu, rec.t_up);
                tank = Some(next);
            }
            if let (Some(m), Some(ti)) = (erh, t_in) {
                let next = erh_next(m, ti, bundle.outdoor(t), bundle.sun(t), c.u_erh, 3600.0);
                rep.mismatch(k, None, "indoor temperature", next, rec.t_in);
                t_in = Some(next);
            }
        }
    }
    Ok(rep)
}

fn c_duty(c: &Committed, d: usize) -> f64 {
    [c.u_low, c.u_up, c.u_erh][d]
}
