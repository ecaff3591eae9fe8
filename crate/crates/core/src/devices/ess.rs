use serde::{Deserialize, Serialize};

use super::LoadTerms;
use crate::error::{Error, Result};
use crate::optimizer::ProgramBuilder;

/// How the discharge efficiency enters the energy balance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DischargeConvention {
    /// `E' = E + Δt(η_c P_c − P_d / η_d)`: stored energy covers conversion losses.
    #[default]
    Divide,
    /// `E' = E + Δt(η_c P_c − η_d P_d)`.
    Multiply,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EssModel {
    pub capacity_kwh: f64,
    pub charge_kw: f64,
    pub discharge_kw: f64,
    pub eta_charge: f64,
    pub eta_discharge: f64,
    pub initial_soc: f64,
    pub discharge_convention: DischargeConvention,
}

impl Default for EssModel {
    fn default() -> Self {
        Self {
            capacity_kwh: 6.29,
            charge_kw: 5.5,
            discharge_kw: 5.5,
            eta_charge: 0.96,
            eta_discharge: 0.96,
            initial_soc: 0.5,
            discharge_convention: DischargeConvention::Divide,
        }
    }
}

impl EssModel {
    pub fn validate(&self) -> Result<()> {
        let ok = self.capacity_kwh >= 0.0
            && self.charge_kw >= 0.0
            && self.discharge_kw >= 0.0
            && self.eta_charge > 0.0
            && self.eta_charge <= 1.0
            && self.eta_discharge > 0.0
            && self.eta_discharge <= 1.0
            && (0.0..=1.0).contains(&self.initial_soc)
            && self.capacity_kwh.is_finite()
            && self.charge_kw.is_finite()
            && self.discharge_kw.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Model(format!("invalid storage parameters {self:?}")))
        }
    }

    pub fn initial_energy(&self) -> f64 {
        self.initial_soc * self.capacity_kwh
    }

    pub fn round_trip_loss(&self) -> f64 {
        1.0 - self.eta_charge * self.eta_discharge
    }

    /// Stored energy removed per kWh delivered.
    pub fn discharge_factor(&self) -> f64 {
        match self.discharge_convention {
            DischargeConvention::Divide => 1.0 / self.eta_discharge,
            DischargeConvention::Multiply => self.eta_discharge,
        }
    }

    pub fn step(&self, energy: f64, p_charge: f64, p_discharge: f64, dt_hours: f64) -> f64 {
        energy + dt_hours * (self.eta_charge * p_charge - self.discharge_factor() * p_discharge)
    }

    /// Snaps a planned `(P_c, P_d, B)` to an exactly admissible pair: powers
    /// within their ratings, the inactive direction zeroed, and the next
    /// energy kept inside `[0, E_max]`.
    pub fn admissible(&self, energy: f64, p_charge: f64, p_discharge: f64, charging: bool, dt_hours: f64) -> (f64, f64) {
        if charging {
            let room = ((self.capacity_kwh - energy) / (self.eta_charge * dt_hours)).max(0.0);
            (p_charge.clamp(0.0, self.charge_kw).min(room), 0.0)
        } else {
            let avail = (energy / (self.discharge_factor() * dt_hours)).max(0.0);
            (0.0, p_discharge.clamp(0.0, self.discharge_kw).min(avail))
        }
    }
}

/// Variable indices of a storage plan. `energy` has one more entry than the
/// power vectors; `energy[0]` is fixed to the current state.
#[derive(Debug, Clone)]
pub struct EssPlanVars {
    pub p_charge: Vec<usize>,
    pub p_discharge: Vec<usize>,
    pub charging: Vec<usize>,
    pub energy: Vec<usize>,
}

impl EssPlanVars {
    pub fn load_terms(&self, t: usize) -> LoadTerms {
        vec![(self.p_charge[t], 1.0), (self.p_discharge[t], -1.0)]
    }
}

/// Emits charge/discharge gating by the binary `B`, energy bounds and
/// dynamics over `steps` planning steps.
pub fn ess_constraints(
    model: &EssModel,
    builder: &mut ProgramBuilder,
    energy0: f64,
    steps: usize,
    dt_hours: f64,
) -> Result<EssPlanVars> {
    model.validate()?;
    if !(0.0..=model.capacity_kwh + 1e-9).contains(&energy0) {
        return Err(Error::Model(format!(
            "storage energy {energy0} outside [0, {}]",
            model.capacity_kwh
        )));
    }
    let energy0 = energy0.clamp(0.0, model.capacity_kwh);
    let mut vars = EssPlanVars {
        p_charge: Vec::with_capacity(steps),
        p_discharge: Vec::with_capacity(steps),
        charging: Vec::with_capacity(steps),
        energy: vec![builder.add_var("E[0]", energy0, energy0)],
    };
    for t in 0..steps {
        let pc = builder.add_var(format!("Pc[{t}]"), 0.0, model.charge_kw);
        let pd = builder.add_var(format!("Pd[{t}]"), 0.0, model.discharge_kw);
        let b = builder.add_var(format!("B[{t}]"), 0.0, 1.0);
        let e = builder.add_var(format!("E[{}]", t + 1), 0.0, model.capacity_kwh);
        builder.add_le(vec![(pc, 1.0), (b, -model.charge_kw)], 0.0);
        builder.add_le(vec![(pd, 1.0), (b, model.discharge_kw)], model.discharge_kw);
        builder.add_eq(
            vec![
                (e, 1.0),
                (vars.energy[t], -1.0),
                (pc, -dt_hours * model.eta_charge),
                (pd, dt_hours * model.discharge_factor()),
            ],
            0.0,
        );
        vars.p_charge.push(pc);
        vars.p_discharge.push(pd);
        vars.charging.push(b);
        vars.energy.push(e);
    }
    Ok(vars)
}
