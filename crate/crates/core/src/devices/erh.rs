use serde::{Deserialize, Serialize};

use super::{finite, LoadTerms};
use crate::domain::{PrivacyCategory, HOURLY};
use crate::error::{Error, Result};
use crate::optimizer::ProgramBuilder;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErhModel {
    pub power_kw: f64,
    /// `(γ1, γ2, γ3)` fitted at the hourly step.
    pub gamma: [f64; 3],
    pub t_set: f64,
    pub deadband: f64,
    pub comfort_weight: f64,
    pub category: PrivacyCategory,
}

impl Default for ErhModel {
    fn default() -> Self {
        Self {
            power_kw: 4.5,
            gamma: [0.015, 0.186, 0.345],
            t_set: 22.0,
            deadband: 1.0,
            comfort_weight: 10.0,
            category: PrivacyCategory::NotSensitive,
        }
    }
}

impl ErhModel {
    pub fn validate(&self) -> Result<()> {
        let all = [self.power_kw, self.t_set, self.deadband, self.comfort_weight];
        if all.iter().chain(&self.gamma).any(|v| !v.is_finite()) {
            return Err(Error::Model("non-finite space heater parameter".into()));
        }
        if self.power_kw < 0.0 || self.deadband < 0.0 || self.comfort_weight < 0.0 {
            return Err(Error::Model("negative space heater rating".into()));
        }
        Ok(())
    }

    /// Coefficients rescaled from the hourly fit to a step of `dt_seconds`.
    pub fn gamma_at(&self, dt_seconds: f64) -> [f64; 3] {
        let r = dt_seconds / HOURLY as f64;
        self.gamma.map(|g| g * r)
    }

    pub fn step(&self, t_in: f64, t_out: f64, irradiance: f64, duty: f64, dt_seconds: f64) -> Result<f64> {
        finite("space heater input", &[t_in, t_out, irradiance, duty, dt_seconds])?;
        if !(0.0..=1.0).contains(&duty) {
            return Err(Error::invalid(format!("space heater duty {duty} outside [0, 1]")));
        }
        let [g1, g2, g3] = self.gamma_at(dt_seconds);
        Ok(t_in + g1 * (t_out - t_in) + g2 * (duty * self.power_kw) + g3 * irradiance)
    }

    /// Indoor temperature the heater settles at under constant conditions.
    pub fn steady_state(&self, t_out: f64, irradiance: f64, duty: f64) -> f64 {
        let [g1, g2, g3] = self.gamma;
        t_out + (g2 * duty * self.power_kw + g3 * irradiance) / g1
    }
}

#[derive(Debug, Clone)]
pub struct ErhPlanVars {
    pub duty: Vec<usize>,
    /// Indoor temperature at the start of each step, plus the final one.
    pub t_in: Vec<usize>,
    pub comfort: Vec<usize>,
}

impl ErhPlanVars {
    pub fn load_terms(&self, model: &ErhModel, t: usize) -> LoadTerms {
        vec![(self.duty[t], model.power_kw)]
    }
}

/// Emits the indoor air dynamics and the weighted comfort hinges.
pub fn erh_constraints(
    model: &ErhModel,
    builder: &mut ProgramBuilder,
    t_in0: f64,
    t_out: &[f64],
    irradiance: &[f64],
    dt_seconds: f64,
) -> Result<ErhPlanVars> {
    model.validate()?;
    if t_out.len() != irradiance.len() {
        return Err(Error::LengthMismatch {
            what: "weather forecast",
            left: t_out.len(),
            right: irradiance.len(),
        });
    }
    finite("outdoor temperature forecast", t_out)?;
    finite("irradiance forecast", irradiance)?;
    finite("indoor temperature", &[t_in0])?;
    let [g1, g2, g3] = model.gamma_at(dt_seconds);
    let w = model.comfort_weight;
    let mut v = ErhPlanVars {
        duty: Vec::with_capacity(t_out.len()),
        t_in: vec![builder.add_var("Tin[0]", t_in0, t_in0)],
        comfort: Vec::with_capacity(t_out.len()),
    };
    for t in 0..t_out.len() {
        let u = builder.add_var(format!("Uerh[{t}]"), 0.0, 1.0);
        let next = builder.add_var(format!("Tin[{}]", t + 1), f64::NEG_INFINITY, f64::INFINITY);
        let z = builder.add_var(format!("zcomf_erh[{t}]"), 0.0, f64::INFINITY);
        builder.add_eq(
            vec![(next, 1.0), (v.t_in[t], -(1.0 - g1)), (u, -g2 * model.power_kw)],
            g1 * t_out[t] + g3 * irradiance[t],
        );
        builder.add_le(vec![(next, -w), (z, -1.0)], -w * (model.t_set - model.deadband));
        builder.add_le(vec![(next, w), (z, -1.0)], w * (model.t_set + model.deadband));
        v.duty.push(u);
        v.t_in.push(next);
        v.comfort.push(z);
    }
    Ok(v)
}
