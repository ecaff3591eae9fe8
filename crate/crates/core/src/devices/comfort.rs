use super::{ErhModel, EwhModel, EwhState};

/// Smallest comfort slack admitted by the water heater hinges at `state`.
pub fn ewh_hinge(model: &EwhModel, state: EwhState) -> f64 {
    let lower = (model.t_set - model.deadband) - state.t_low;
    let upper = state.t_up - (model.t_set + model.deadband);
    lower.max(upper).max(0.0)
}

/// Smallest weighted comfort slack admitted by the space heater hinges.
pub fn erh_hinge(model: &ErhModel, t_in: f64) -> f64 {
    let w = model.comfort_weight;
    let lower = w * ((model.t_set - model.deadband) - t_in);
    let upper = w * (t_in - (model.t_set + model.deadband));
    lower.max(upper).max(0.0)
}
