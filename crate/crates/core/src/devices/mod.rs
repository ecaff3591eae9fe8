//! Device models: energy storage, two-node water heater, space heater.
//!
//! Each model has a simulation `step` and a constraint builder that emits
//! its planning rows into a [`ProgramBuilder`](crate::optimizer::ProgramBuilder).
//! Builders return the per-step terms of the device load `S_τ` in kW.

pub mod comfort;
pub mod erh;
pub mod ess;
pub mod ewh;

pub use comfort::{erh_hinge, ewh_hinge};
pub use erh::{erh_constraints, ErhModel, ErhPlanVars};
pub use ess::{ess_constraints, DischargeConvention, EssModel, EssPlanVars};
pub use ewh::{ewh_constraints, AirTemp, EwhModel, EwhPlanVars, EwhState, UpperNodeBase};

/// Linear terms `(variable, coefficient)` of a device's load at one step, in kW.
pub type LoadTerms = Vec<(usize, f64)>;

pub(crate) fn finite(name: &str, values: &[f64]) -> crate::Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(crate::Error::invalid(format!(
            "non-finite {name} at position {k}"
        ))),
        None => Ok(()),
    }
}
