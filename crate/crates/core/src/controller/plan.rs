use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::devices::{
    erh_constraints, ess_constraints, ewh_constraints, AirTemp, ErhPlanVars, EssPlanVars,
    EwhPlanVars, EwhState,
};
use crate::domain::{BinningScheme, HOURLY};
use crate::error::{Error, Result};
use crate::objective::{build_mi_program, HistogramConstants, MiApproxProgram, MiEmission};
use crate::optimizer::{
    solve_miqp, solve_qp, MiqpSettings, MiqpStatus, ProgramBuilder, QpStatus, QuadraticProgram,
};

/// Device state carried between control steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PlantState {
    pub energy: Option<f64>,
    pub ewh: Option<EwhState>,
    pub t_in: Option<f64>,
}

impl PlantState {
    pub fn initial(config: &ScenarioConfig) -> Self {
        Self {
            energy: config.ess().map(|m| m.initial_energy()),
            ewh: config.ewh().map(|m| m.initial_state()),
            t_in: config.erh().map(|m| m.t_set),
        }
    }
}

/// Horizon slices starting at the step being planned.
#[derive(Debug, Clone, Copy)]
pub struct Forecast<'a> {
    pub x: &'a [f64],
    /// Objective prices, cents/kWh (all zero in cost-blind mode).
    pub prices: &'a [f64],
    /// Litres per step.
    pub draws: &'a [f64],
    pub outdoor: &'a [f64],
    pub irradiance: &'a [f64],
}

impl Forecast<'_> {
    fn check(&self, needs_draws: bool, needs_weather: bool) -> Result<usize> {
        let n = self.x.len();
        let bad = |what: &'static str, len: usize| Error::LengthMismatch {
            what,
            left: len,
            right: n,
        };
        if n == 0 {
            return Err(Error::Empty("forecast"));
        }
        if self.prices.len() != n {
            return Err(bad("price forecast", self.prices.len()));
        }
        if needs_draws && self.draws.len() != n {
            return Err(bad("draw forecast", self.draws.len()));
        }
        if needs_weather && (self.outdoor.len() != n || self.irradiance.len() != n) {
            return Err(bad("weather forecast", self.outdoor.len().min(self.irradiance.len())));
        }
        Ok(n)
    }
}

/// First-step decisions actually applied to the plant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Committed {
    pub x: f64,
    pub y: f64,
    pub s: f64,
    pub s_ess: f64,
    pub s_ewh: f64,
    pub s_erh: f64,
    pub p_charge: f64,
    pub p_discharge: f64,
    pub charging: bool,
    pub u_low: f64,
    pub u_up: f64,
    pub u_erh: f64,
}

impl Committed {
    pub fn passthrough(x: f64) -> Self {
        Self {
            x,
            y: x,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ObjectiveBreakdown {
    /// `(1/(W+1)) Σ c_τ y_τ`
    pub cost: f64,
    /// `μ · Ĩ`
    pub privacy: f64,
    /// `ρ ‖z_comf‖²`
    pub comfort: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepStatus {
    Optimal,
    /// Branch-and-bound stopped at its node limit with a feasible incumbent.
    NodeLimit,
    /// Solved only after dropping the absolute water temperature bounds.
    SoftBounds,
    /// No plan; the devices were idled for this step.
    Passthrough,
}

impl StepStatus {
    pub fn name(self) -> &'static str {
        match self {
            StepStatus::Optimal => "optimal",
            StepStatus::NodeLimit => "node-limit",
            StepStatus::SoftBounds => "soft-bounds",
            StepStatus::Passthrough => "passthrough",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlStepResult {
    pub committed: Committed,
    pub plan_y: Vec<f64>,
    pub breakdown: ObjectiveBreakdown,
    pub status: StepStatus,
    pub gap: f64,
    pub nodes: usize,
    pub max_kkt: f64,
    pub projection: f64,
    /// Comfort slack of the first planned step.
    pub comfort_slack: f64,
}

struct Assembled {
    qp: QuadraticProgram,
    mi: MiApproxProgram,
    y: Vec<usize>,
    emission: MiEmission,
    ess: Option<EssPlanVars>,
    ewh: Option<EwhPlanVars>,
    erh: Option<ErhPlanVars>,
}

impl Assembled {
    fn comfort_vars(&self) -> Vec<Vec<usize>> {
        [&self.ewh.as_ref().map(|v| v.comfort.clone()), &self.erh.as_ref().map(|v| v.comfort.clone())]
            .into_iter()
            .flatten()
            .cloned()
            .collect()
    }
}

/// Solver knobs for one control step.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlanSettings {
    pub miqp: MiqpSettings,
    /// Drop the absolute water temperature bounds.
    pub soft_bounds: bool,
}

impl PlanSettings {
    /// The scenario's gap and node budget on default solver tolerances.
    pub fn for_config(config: &ScenarioConfig) -> Self {
        Self {
            miqp: MiqpSettings {
                relative_gap: config.mip_gap,
                max_nodes: config.mip_nodes,
                ..MiqpSettings::default()
            },
            soft_bounds: false,
        }
    }
}

fn assemble(
    config: &ScenarioConfig,
    binning: &BinningScheme,
    constants: &HistogramConstants,
    fc: &Forecast<'_>,
    state: &PlantState,
    soft_bounds: bool,
) -> Result<Assembled> {
    let ess = config.ess();
    let ewh = config.ewh();
    let erh = config.erh();
    let steps = fc.check(ewh.is_some(), erh.is_some())?;
    let dt_h = HOURLY as f64 / 3600.0;
    let dt_s = HOURLY as f64;

    let (s_min, s_max) = match ess {
        Some(m) => (-m.discharge_kw, m.charge_kw),
        None => (0.0, ewh.map_or(0.0, |m| m.power_kw) + erh.map_or(0.0, |m| m.power_kw)),
    };
    let y_min = binning.y_edges.lo();
    let y_max = binning.y_edges.hi() - config.link_gap;

    let mut b = ProgramBuilder::new();
    let mut y = Vec::with_capacity(steps);
    for (t, &x) in fc.x.iter().enumerate() {
        let lo = y_min.max(x + s_min);
        let hi = y_max.min(x + s_max);
        if lo > hi {
            return Err(Error::Model(format!(
                "no admissible grid load at forecast step {t} (x = {x} kW)"
            )));
        }
        y.push(b.add_var(format!("y[{t}]"), lo, hi));
    }

    let ess_vars = match ess {
        Some(m) => {
            let e0 = state.energy.ok_or_else(|| Error::Model("missing storage state".into()))?;
            Some(ess_constraints(m, &mut b, e0, steps, dt_h)?)
        }
        None => None,
    };
    let erh_vars = match erh {
        Some(m) => {
            let t0 = state.t_in.ok_or_else(|| Error::Model("missing indoor temperature".into()))?;
            Some(erh_constraints(m, &mut b, t0, fc.outdoor, fc.irradiance, dt_s)?)
        }
        None => None,
    };
    let indoor = vec![config.indoor_temp; steps];
    let ewh_vars = match ewh {
        Some(m) => {
            let s0 = state.ewh.ok_or_else(|| Error::Model("missing water heater state".into()))?;
            let air = match &erh_vars {
                Some(v) => AirTemp::Vars(&v.t_in),
                None => AirTemp::Fixed(&indoor),
            };
            let v = ewh_constraints(m, &mut b, s0, fc.draws, air, dt_s)?;
            if soft_bounds {
                for &t in &v.t_up[1..] {
                    b.set_bounds(t, f64::NEG_INFINITY, f64::INFINITY);
                }
            }
            Some(v)
        }
        None => None,
    };

    for t in 0..steps {
        let mut row = vec![(y[t], 1.0)];
        if let Some(v) = &ess_vars {
            row.extend(v.load_terms(t).into_iter().map(|(i, c)| (i, -c)));
        }
        if let (Some(v), Some(m)) = (&ewh_vars, ewh) {
            row.extend(v.load_terms(m, t).into_iter().map(|(i, c)| (i, -c)));
        }
        if let (Some(v), Some(m)) = (&erh_vars, erh) {
            row.extend(v.load_terms(m, t).into_iter().map(|(i, c)| (i, -c)));
        }
        b.add_eq(row, fc.x[t]);
        b.add_linear(y[t], fc.prices[t] * dt_h / steps as f64);
    }

    let mi = build_mi_program(fc.x, constants, binning)?;
    let emission = mi.emit(&mut b, &y, config.mu, config.link_gap)?;

    for v in [&ewh_vars.as_ref().map(|v| &v.comfort), &erh_vars.as_ref().map(|v| &v.comfort)]
        .into_iter()
        .flatten()
    {
        for &z in v.iter() {
            b.add_quadratic(z, z, 2.0 * config.rho);
        }
    }

    Ok(Assembled {
        qp: b.build(),
        mi,
        y,
        emission,
        ess: ess_vars,
        ewh: ewh_vars,
        erh: erh_vars,
    })
}

/// Builds the horizon program for `state` and returns it with the indices
/// of the ESS binaries, for inspection or external cross-checks.
pub fn horizon_program(
    config: &ScenarioConfig,
    binning: &BinningScheme,
    constants: &HistogramConstants,
    fc: &Forecast<'_>,
    state: &PlantState,
) -> Result<(QuadraticProgram, Vec<usize>)> {
    let a = assemble(config, binning, constants, fc, state, false)?;
    let bins = a.ess.as_ref().map_or(Vec::new(), |v| v.charging.clone());
    Ok((a.qp, bins))
}

fn solve(a: &Assembled, settings: &MiqpSettings) -> Result<Option<(Vec<f64>, StepStatus, f64, usize, f64)>> {
    match &a.ess {
        Some(v) => {
            let sol = solve_miqp(&a.qp, &v.charging, settings)?;
            Ok(match sol.status {
                MiqpStatus::Infeasible => None,
                MiqpStatus::Optimal => Some((sol.x, StepStatus::Optimal, sol.gap, sol.nodes, sol.max_kkt_residual)),
                MiqpStatus::NodeLimit => Some((sol.x, StepStatus::NodeLimit, sol.gap, sol.nodes, sol.max_kkt_residual)),
            })
        }
        None => {
            let sol = solve_qp(&a.qp, &settings.qp)?;
            Ok(match sol.status {
                QpStatus::Optimal => Some((sol.x, StepStatus::Optimal, 0.0, 1, sol.kkt.max())),
                QpStatus::Infeasible => None,
                QpStatus::IterationLimit => {
                    return Err(Error::Solver("control step hit the iteration limit".into()))
                }
            })
        }
    }
}

/// Plans one receding-horizon step and returns the decisions for its first step.
pub fn plan_step(
    config: &ScenarioConfig,
    binning: &BinningScheme,
    constants: &HistogramConstants,
    fc: &Forecast<'_>,
    state: &PlantState,
    settings: &PlanSettings,
) -> Result<ControlStepResult> {
    let mut assembled = assemble(config, binning, constants, fc, state, settings.soft_bounds)?;
    let mut solved = solve(&assembled, &settings.miqp)?;
    if solved.is_none() && config.ewh().is_some() && !settings.soft_bounds {
        log::warn!("water heater plan infeasible; retrying without absolute bounds");
        assembled = assemble(config, binning, constants, fc, state, true)?;
        solved = solve(&assembled, &settings.miqp)?.map(|mut s| {
            s.1 = StepStatus::SoftBounds;
            s
        });
    }
    let Some((x, status, gap, nodes, max_kkt)) = solved else {
        return Err(Error::Solver("control step is infeasible".into()));
    };
    let a = &assembled;
    let steps = a.y.len();

    let plan_y: Vec<f64> = a.y.iter().map(|&v| x[v]).collect();
    let z: Vec<f64> = a.emission.z.iter().flat_map(|row| row.iter().map(|&v| x[v])).collect();
    let comfort = a.comfort_vars();
    let breakdown = ObjectiveBreakdown {
        cost: fc.prices.iter().zip(&plan_y).map(|(c, y)| c * y).sum::<f64>() / steps as f64,
        privacy: config.mu * a.mi.coefficients().evaluate(&z),
        comfort: config.rho * comfort.iter().flatten().map(|&v| x[v] * x[v]).sum::<f64>(),
    };
    let comfort_slack = comfort.iter().map(|v| x[v[0]]).sum();

    let committed = commit(config, fc.x[0], state, a, &x, binning.y_edges.hi());
    Ok(ControlStepResult {
        committed,
        plan_y,
        breakdown,
        status,
        gap,
        nodes,
        max_kkt,
        projection: a.emission.projection,
        comfort_slack,
    })
}

/// Turns the first planned step into exactly admissible device set-points.
fn commit(config: &ScenarioConfig, x0: f64, state: &PlantState, a: &Assembled, sol: &[f64], y_max: f64) -> Committed {
    let mut c = Committed::passthrough(x0);
    if let (Some(m), Some(v), Some(e)) = (config.ess(), &a.ess, state.energy) {
        let charging = sol[v.charging[0]] > 0.5;
        let (mut pc, mut pd) = m.admissible(e, sol[v.p_charge[0]], sol[v.p_discharge[0]], charging, 1.0);
        if charging {
            pc = pc.min(y_max - x0).max(0.0);
        } else {
            pd = pd.min(x0);
        }
        c.charging = charging;
        c.p_charge = pc;
        c.p_discharge = pd;
        c.s_ess = pc - pd;
    }
    if let (Some(m), Some(v)) = (config.ewh(), &a.ewh) {
        let ul = sol[v.u_low[0]].clamp(0.0, 1.0);
        let uu = sol[v.u_up[0]].clamp(0.0, 1.0 - ul);
        c.u_low = ul;
        c.u_up = uu;
        c.s_ewh = m.power_kw * ul + m.power_kw * uu;
    }
    if let (Some(m), Some(v)) = (config.erh(), &a.erh) {
        c.u_erh = sol[v.duty[0]].clamp(0.0, 1.0);
        c.s_erh = m.power_kw * c.u_erh;
    }
    c.s = c.s_ess + c.s_ewh + c.s_erh;
    c.y = c.x + c.s;
    c
}

/// ESS-only control step.
pub fn plan_step_ess(
    state: &PlantState,
    fc: &Forecast<'_>,
    config: &ScenarioConfig,
    binning: &BinningScheme,
    constants: &HistogramConstants,
) -> Result<ControlStepResult> {
    if config.ess().is_none() || config.ewh().is_some() || config.erh().is_some() {
        return Err(Error::Config("ESS step needs exactly one storage device and no thermal loads".into()));
    }
    plan_step(config, binning, constants, fc, state, &PlanSettings::for_config(config))
}

/// Thermal-load control step for the configured subset of {EWH, ERH}.
pub fn plan_step_ftl(
    state: &PlantState,
    fc: &Forecast<'_>,
    config: &ScenarioConfig,
    binning: &BinningScheme,
    constants: &HistogramConstants,
) -> Result<ControlStepResult> {
    if config.ess().is_some() || (config.ewh().is_none() && config.erh().is_none()) {
        return Err(Error::Config("thermal step needs a water or space heater and no storage".into()));
    }
    plan_step(config, binning, constants, fc, state, &PlanSettings::for_config(config))
}
