//! 5-minute on/off realisation of hourly thermal duties.

use serde::Serialize;

use crate::devices::{ErhModel, EwhModel, EwhState};
use crate::domain::FIVE_MINUTES;
use crate::error::Result;

pub const SLOTS: usize = 12;
const BREACH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Element {
    Off,
    Low,
    Up,
}

/// Inputs for one 5-minute slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotInputs {
    /// Litres drawn during the slot.
    pub draw: f64,
    pub outdoor: f64,
    pub irradiance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotRecord {
    pub desired: Element,
    pub applied: Element,
    pub erh_on: bool,
    /// Set when the desired element would breach a tank bound this slot.
    pub flagged: bool,
    /// Breach that remained after the best available action.
    pub violation: f64,
    pub ewh: Option<EwhState>,
    pub t_in: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispatchPlan {
    pub requested: [f64; 3],
    pub achieved: [f64; 3],
    pub slots: Vec<SlotRecord>,
}

impl DispatchPlan {
    pub fn flagged(&self) -> bool {
        self.slots.iter().any(|s| s.flagged)
    }

    /// Largest `|achieved − requested|` over the three duties.
    pub fn deviation(&self) -> f64 {
        (0..3)
            .map(|k| (self.achieved[k] - self.requested[k]).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_violation(&self) -> f64 {
        self.slots.iter().map(|s| s.violation).fold(0.0, f64::max)
    }
}

/// Slot counts for hourly duties `(U_low, U_up)`; the pair never exceeds 12.
pub fn slot_counts(u_low: f64, u_up: f64) -> (usize, usize) {
    let up = (u_up * SLOTS as f64).round() as usize;
    let low = (u_low * SLOTS as f64).round() as usize;
    if low + up > SLOTS {
        let (rl, ru) = (u_low * SLOTS as f64 - low as f64, u_up * SLOTS as f64 - up as f64);
        if rl < ru {
            (low - 1, up)
        } else {
            (low, up - 1)
        }
    } else {
        (low, up)
    }
}

fn breach(model: &EwhModel, s: EwhState) -> f64 {
    let (hi, lo, order) = model.breaches(s);
    hi + lo + order
}

fn duties(e: Element) -> (f64, f64) {
    match e {
        Element::Off => (0.0, 0.0),
        Element::Low => (1.0, 0.0),
        Element::Up => (0.0, 1.0),
    }
}

/// Greedy front-loaded slot assignment for one hour. The upper element is
/// served first; at most one element is on per slot. A slot whose desired
/// action would breach a tank bound is flagged and replaced by the first
/// non-breaching alternative.
pub fn dispatch_5min(
    ewh: Option<(&EwhModel, EwhState)>,
    erh: Option<(&ErhModel, f64)>,
    duties_in: [f64; 3],
    indoor_temp: f64,
    inputs: &[SlotInputs],
) -> Result<DispatchPlan> {
    let dt = FIVE_MINUTES as f64;
    let (mut n_low, mut n_up) = slot_counts(duties_in[0], duties_in[1]);
    let mut n_erh = (duties_in[2] * SLOTS as f64).round() as usize;
    let mut tank = ewh.map(|(_, s)| s);
    let mut t_in = erh.map(|(_, t)| t);
    let mut slots = Vec::with_capacity(SLOTS);
    let mut on = [0usize; 3];

    for inp in inputs.iter().take(SLOTS) {
        let air = t_in.unwrap_or(indoor_temp);
        let mut rec = SlotRecord {
            desired: Element::Off,
            applied: Element::Off,
            erh_on: false,
            flagged: false,
            violation: 0.0,
            ewh: None,
            t_in: None,
        };
        if let (Some((m, _)), Some(s)) = (ewh, tank) {
            let desired = if n_up > 0 {
                Element::Up
            } else if n_low > 0 {
                Element::Low
            } else {
                Element::Off
            };
            let sim = |e: Element| -> Result<EwhState> {
                let (ul, uu) = duties(e);
                m.step(s, air, inp.draw, ul, uu, dt)
            };
            let first = sim(desired)?;
            let (applied, next) = if breach(m, first) <= BREACH_TOL {
                (desired, first)
            } else {
                rec.flagged = true;
                let mut best = (desired, first, breach(m, first));
                for e in [Element::Off, Element::Up, Element::Low] {
                    if e == desired {
                        continue;
                    }
                    let n = sim(e)?;
                    let b = breach(m, n);
                    if b < best.2 - BREACH_TOL {
                        best = (e, n, b);
                    }
                    if b <= BREACH_TOL {
                        break;
                    }
                }
                if best.2 > BREACH_TOL {
                    log::warn!("unavoidable tank bound breach of {:.3} K", best.2);
                    rec.violation = best.2;
                }
                (best.0, best.1)
            };
            match applied {
                Element::Up => {
                    n_up = n_up.saturating_sub(1);
                    on[1] += 1;
                }
                Element::Low => {
                    n_low = n_low.saturating_sub(1);
                    on[0] += 1;
                }
                Element::Off => {}
            }
            rec.desired = desired;
            rec.applied = applied;
            rec.ewh = Some(next);
            tank = Some(next);
        }
        if let (Some((m, _)), Some(t)) = (erh, t_in) {
            let u = if n_erh > 0 { 1.0 } else { 0.0 };
            n_erh = n_erh.saturating_sub(1);
            rec.erh_on = u > 0.0;
            on[2] += u as usize;
            let next = m.step(t, inp.outdoor, inp.irradiance, u, dt)?;
            rec.t_in = Some(next);
            t_in = Some(next);
        }
        slots.push(rec);
    }
    Ok(DispatchPlan {
        requested: duties_in,
        achieved: on.map(|k| k as f64 / SLOTS as f64),
        slots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn calm() -> Vec<SlotInputs> {
        vec![
            SlotInputs {
                draw: 0.0,
                outdoor: 0.0,
                irradiance: 0.0
            };
            SLOTS
        ]
    }

    #[test]
    fn half_duty_is_front_loaded() {
        let m = EwhModel {
            upper_node_base: crate::devices::UpperNodeBase::Up,
            ..EwhModel::default()
        };
        let s = EwhState { t_low: 60.0, t_up: 62.0 };
        let p = dispatch_5min(Some((&m, s)), None, [0.0, 0.5, 0.0], 20.0, &calm()).unwrap();
        let on: Vec<bool> = p.slots.iter().map(|r| r.applied == Element::Up).collect();
        assert_eq!(on, [vec![true; 6], vec![false; 6]].concat());
        assert!(!p.flagged());
        assert_eq!(p.achieved[1], 0.5);
    }

    #[test]
    fn hot_tank_defers_and_flags() {
        let m = EwhModel {
            upper_node_base: crate::devices::UpperNodeBase::Up,
            ..EwhModel::default()
        };
        let s = EwhState { t_low: 80.0, t_up: 88.0 };
        let p = dispatch_5min(Some((&m, s)), None, [0.0, 1.0, 0.0], 20.0, &calm()).unwrap();
        assert!(p.flagged());
        assert!(p.achieved[1] < 1.0);
        for r in &p.slots {
            assert!(r.ewh.unwrap().t_up <= m.t_absmax + 1e-9);
        }
    }

    #[test]
    fn verbatim_base_heats_to_keep_ordering() {
        let m = EwhModel::default();
        let s = EwhState { t_low: 60.0, t_up: 62.0 };
        let p = dispatch_5min(Some((&m, s)), None, [0.0, 0.5, 0.0], 20.0, &calm()).unwrap();
        assert!(p.slots[6].flagged);
        assert_eq!(p.slots[6].desired, Element::Off);
        assert_ne!(p.slots[6].applied, Element::Off);
    }

    #[test]
    fn zero_duty_is_free_response() {
        let m = EwhModel::default();
        let s = m.initial_state();
        let p = dispatch_5min(Some((&m, s)), None, [0.0, 0.0, 0.0], 20.0, &calm()).unwrap();
        let mut t = s;
        for r in &p.slots {
            t = m.step(t, 20.0, 0.0, 0.0, 0.0, 300.0).unwrap();
            assert_eq!(r.applied, Element::Off);
            assert_eq!(r.ewh.unwrap(), t);
        }
    }

    #[test]
    fn counts_never_overlap() {
        assert_eq!(slot_counts(0.5, 0.5), (6, 6));
        let (l, u) = slot_counts(0.54, 0.46);
        assert!(l + u <= 12);
    }
}
