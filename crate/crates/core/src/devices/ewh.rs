use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{finite, LoadTerms};
use crate::domain::PrivacyCategory;
use crate::error::{Error, Result};
use crate::optimizer::ProgramBuilder;

/// Which temperature the upper-node update starts from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpperNodeBase {
    /// `T_up' = T_low + …`, as the model is usually printed.
    #[default]
    Low,
    /// `T_up' = T_up + …`.
    Up,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EwhModel {
    pub power_kw: f64,
    pub c_low: f64,
    pub c_up: f64,
    pub ua_low: f64,
    pub ua_up: f64,
    pub cp: f64,
    pub t_mains: f64,
    pub t_set: f64,
    pub t_absmin: f64,
    pub t_absmax: f64,
    pub deadband: f64,
    pub tank_litres: f64,
    pub upper_node_base: UpperNodeBase,
    pub category: PrivacyCategory,
}

impl Default for EwhModel {
    fn default() -> Self {
        Self {
            power_kw: 5.5,
            c_low: 356.15,
            c_up: 356.15,
            ua_low: 5.82e-4,
            ua_up: 5.82e-4,
            cp: 4.19,
            t_mains: 10.0,
            t_set: 75.0,
            t_absmin: 50.0,
            t_absmax: 90.0,
            deadband: 1.0,
            tank_litres: 170.0,
            upper_node_base: UpperNodeBase::Low,
            category: PrivacyCategory::NotSensitive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EwhState {
    pub t_low: f64,
    pub t_up: f64,
}

impl EwhModel {
    pub fn validate(&self) -> Result<()> {
        let params = [
            self.power_kw,
            self.c_low,
            self.c_up,
            self.ua_low,
            self.ua_up,
            self.cp,
            self.t_mains,
            self.t_set,
            self.t_absmin,
            self.t_absmax,
            self.deadband,
            self.tank_litres,
        ];
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Model("non-finite water heater parameter".into()));
        }
        if self.t_absmin > self.t_absmax {
            return Err(Error::Model(format!(
                "water heater bounds [{}, {}] are empty",
                self.t_absmin, self.t_absmax
            )));
        }
        if self.c_low <= 0.0 || self.c_up <= 0.0 || self.cp <= 0.0 || self.tank_litres <= 0.0 {
            return Err(Error::Model("water heater capacities must be positive".into()));
        }
        if self.power_kw < 0.0 || self.ua_low < 0.0 || self.ua_up < 0.0 || self.deadband < 0.0 {
            return Err(Error::Model("negative water heater rating".into()));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> EwhState {
        EwhState {
            t_low: self.t_set,
            t_up: self.t_set,
        }
    }

    pub fn node_litres(&self) -> f64 {
        self.tank_litres / 2.0
    }

    /// Limits a per-step draw to one node volume.
    pub fn clip_draw(&self, draw: f64) -> f64 {
        let cap = self.node_litres();
        if draw > cap {
            log::warn!("hot water draw {draw:.1} L exceeds node volume {cap:.1} L; clipped");
            cap
        } else {
            draw.max(0.0)
        }
    }

    /// Advances both nodes by `dt_seconds`. `draw` is litres drawn during the step.
    pub fn step(
        &self,
        state: EwhState,
        t_air: f64,
        draw: f64,
        u_low: f64,
        u_up: f64,
        dt_seconds: f64,
    ) -> Result<EwhState> {
        finite("water heater input", &[state.t_low, state.t_up, t_air, draw, u_low, u_up, dt_seconds])?;
        if !(0.0..=1.0).contains(&u_low) || !(0.0..=1.0).contains(&u_up) || u_low + u_up > 1.0 + 1e-9 {
            return Err(Error::invalid(format!(
                "water heater duties ({u_low}, {u_up}) violate U_low + U_up <= 1"
            )));
        }
        let d = self.clip_draw(draw);
        let EwhState { t_low, t_up } = state;
        let low = t_low
            + dt_seconds / self.c_low * (self.ua_low * (t_air - t_low) + self.power_kw * u_low)
            + d * self.cp / self.c_low * (self.t_mains - t_low);
        let base = match self.upper_node_base {
            UpperNodeBase::Low => t_low,
            UpperNodeBase::Up => t_up,
        };
        let up = base
            + dt_seconds / self.c_up * (self.ua_up * (t_air - t_up) + self.power_kw * u_up)
            + d * self.cp / self.c_up * (t_low - t_up);
        Ok(EwhState { t_low: low, t_up: up })
    }

    /// Positive magnitudes of bound and ordering breaches of a state.
    pub fn breaches(&self, state: EwhState) -> (f64, f64, f64) {
        (
            (state.t_up - self.t_absmax).max(0.0),
            (self.t_absmin - state.t_up).max(0.0),
            (state.t_low - state.t_up).max(0.0),
        )
    }
}

/// Indoor air temperature seen by the tank: a forecast or planning variables.
#[derive(Debug, Clone, Copy)]
pub enum AirTemp<'a> {
    Fixed(&'a [f64]),
    Vars(&'a [usize]),
}

#[derive(Debug, Clone)]
pub struct EwhPlanVars {
    pub u_low: Vec<usize>,
    pub u_up: Vec<usize>,
    pub t_low: Vec<usize>,
    pub t_up: Vec<usize>,
    pub comfort: Vec<usize>,
}

impl EwhPlanVars {
    pub fn load_terms(&self, model: &EwhModel, t: usize) -> LoadTerms {
        vec![(self.u_low[t], model.power_kw), (self.u_up[t], model.power_kw)]
    }
}

/// Accumulates `Σ coeff·var = rhs` with merged duplicates.
struct AffineRow {
    coeffs: BTreeMap<usize, f64>,
    rhs: f64,
}

impl AffineRow {
    fn new() -> Self {
        Self {
            coeffs: BTreeMap::new(),
            rhs: 0.0,
        }
    }

    fn add(&mut self, var: usize, c: f64) {
        *self.coeffs.entry(var).or_insert(0.0) += c;
    }

    fn add_air(&mut self, air: AirTemp<'_>, t: usize, c: f64) {
        match air {
            AirTemp::Fixed(v) => self.rhs -= c * v[t],
            AirTemp::Vars(v) => self.add(v[t], c),
        }
    }

    fn emit_eq(self, b: &mut ProgramBuilder) {
        b.add_eq(self.coeffs.into_iter().filter(|&(_, c)| c != 0.0).collect(), self.rhs);
    }
}

/// Emits the tank dynamics, temperature bounds, node ordering, duty limits
/// and comfort hinges. Bounds and hinges apply to the temperatures reached
/// at the end of each step.
pub fn ewh_constraints(
    model: &EwhModel,
    builder: &mut ProgramBuilder,
    state: EwhState,
    draws: &[f64],
    air: AirTemp<'_>,
    dt_seconds: f64,
) -> Result<EwhPlanVars> {
    model.validate()?;
    let steps = draws.len();
    let air_len = match air {
        AirTemp::Fixed(v) => {
            finite("indoor temperature forecast", v)?;
            v.len()
        }
        AirTemp::Vars(v) => v.len(),
    };
    if air_len < steps {
        return Err(Error::LengthMismatch {
            what: "indoor temperature forecast",
            left: air_len,
            right: steps,
        });
    }
    finite("draw forecast", draws)?;
    finite("water heater state", &[state.t_low, state.t_up])?;

    let mut v = EwhPlanVars {
        u_low: Vec::with_capacity(steps),
        u_up: Vec::with_capacity(steps),
        t_low: vec![builder.add_var("Tlow[0]", state.t_low, state.t_low)],
        t_up: vec![builder.add_var("Tup[0]", state.t_up, state.t_up)],
        comfort: Vec::with_capacity(steps),
    };
    let (kl, ku) = (dt_seconds / model.c_low, dt_seconds / model.c_up);
    for (t, &raw) in draws.iter().enumerate() {
        let d = model.clip_draw(raw);
        let ul = builder.add_var(format!("Ulow[{t}]"), 0.0, 1.0);
        let uu = builder.add_var(format!("Uup[{t}]"), 0.0, 1.0);
        let tl = builder.add_var(format!("Tlow[{}]", t + 1), f64::NEG_INFINITY, f64::INFINITY);
        let tu = builder.add_var(format!("Tup[{}]", t + 1), model.t_absmin, model.t_absmax);
        let z = builder.add_var(format!("zcomf_ewh[{t}]"), 0.0, f64::INFINITY);
        let (tl0, tu0) = (v.t_low[t], v.t_up[t]);
        let (ml, mu) = (d * model.cp / model.c_low, d * model.cp / model.c_up);

        let mut low = AffineRow::new();
        low.add(tl, 1.0);
        low.add(tl0, -(1.0 - kl * model.ua_low - ml));
        low.add_air(air, t, -kl * model.ua_low);
        low.add(ul, -kl * model.power_kw);
        low.rhs += ml * model.t_mains;
        low.emit_eq(builder);

        let mut up = AffineRow::new();
        up.add(tu, 1.0);
        match model.upper_node_base {
            UpperNodeBase::Low => up.add(tl0, -1.0),
            UpperNodeBase::Up => up.add(tu0, -1.0),
        }
        up.add(tu0, ku * model.ua_up + mu);
        up.add(tl0, -mu);
        up.add_air(air, t, -ku * model.ua_up);
        up.add(uu, -ku * model.power_kw);
        up.emit_eq(builder);

        builder.add_le(vec![(ul, 1.0), (uu, 1.0)], 1.0);
        builder.add_le(vec![(tl, 1.0), (tu, -1.0)], 0.0);
        builder.add_le(vec![(tl, -1.0), (z, -1.0)], -(model.t_set - model.deadband));
        builder.add_le(vec![(tu, 1.0), (z, -1.0)], model.t_set + model.deadband);

        v.u_low.push(ul);
        v.u_up.push(uu);
        v.t_low.push(tl);
        v.t_up.push(tu);
        v.comfort.push(z);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standing_loss_one_hour() {
        let m = EwhModel::default();
        let s = m
            .step(EwhState { t_low: 75.0, t_up: 75.0 }, 20.0, 0.0, 0.0, 0.0, 3600.0)
            .unwrap();
        let expected = 75.0 - 3600.0 * 5.82e-4 * 55.0 / 356.15;
        assert!((s.t_low - expected).abs() < 1e-12);
        assert!((s.t_low - 74.676).abs() < 5e-4);
    }

    #[test]
    fn full_power_rise() {
        let m = EwhModel {
            ua_low: 0.0,
            ua_up: 0.0,
            ..EwhModel::default()
        };
        let s = m
            .step(EwhState { t_low: 20.0, t_up: 20.0 }, 20.0, 0.0, 1.0, 0.0, 3600.0)
            .unwrap();
        assert!((s.t_low - 20.0 - 5.5 * 3600.0 / 356.15).abs() < 1e-12);
        assert!((s.t_low - 20.0 - 55.59).abs() < 5e-3);
    }

    #[test]
    fn draw_cools_lower_node() {
        let m = EwhModel::default();
        let s0 = EwhState { t_low: 60.0, t_up: 70.0 };
        let s = m.step(s0, 20.0, m.node_litres(), 0.0, 0.0, 3600.0).unwrap();
        assert!(s.t_low < s0.t_low);
        let huge = m.step(s0, 20.0, 10.0 * m.node_litres(), 0.0, 0.0, 3600.0).unwrap();
        assert_eq!(huge, s);
    }

    #[test]
    fn rejects_overlapping_duties() {
        let m = EwhModel::default();
        assert!(m.step(m.initial_state(), 20.0, 0.0, 0.6, 0.6, 3600.0).is_err());
    }

    #[test]
    fn empty_bounds_are_a_model_error() {
        let m = EwhModel {
            t_absmin: 95.0,
            ..EwhModel::default()
        };
        let mut b = ProgramBuilder::new();
        let err = ewh_constraints(&m, &mut b, m.initial_state(), &[0.0], AirTemp::Fixed(&[20.0]), 3600.0);
        assert!(matches!(err, Err(Error::Model(_))));
    }
}
