use chrono::NaiveDateTime;
use serde::Serialize;

use super::dispatch::{dispatch_5min, DispatchPlan, SlotInputs, SLOTS};
use super::plan::{plan_step, Committed, ControlStepResult, Forecast, ObjectiveBreakdown, PlanSettings, PlantState, StepStatus};
use crate::config::ScenarioConfig;
use crate::devices::{erh_hinge, ewh_hinge};
use crate::domain::{energy_cost, BinningScheme, LoadProfile, Role};
use crate::error::{Error, Result};
use crate::metrics::score;
use crate::objective::update_constants;
use crate::profiles::ProfileBundle;

/// One committed control step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub timestamp: NaiveDateTime,
    #[serde(flatten)]
    pub committed: Committed,
    /// State at the end of the step.
    pub energy: Option<f64>,
    pub t_low: Option<f64>,
    pub t_up: Option<f64>,
    pub t_in: Option<f64>,
    #[serde(flatten)]
    pub breakdown: ObjectiveBreakdown,
    pub status: StepStatus,
    pub gap: f64,
    pub nodes: usize,
    pub max_kkt: f64,
    pub projection: f64,
    /// Comfort hinge of the realised end-of-step state (water + weighted air).
    pub comfort_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub name: String,
    pub system: String,
    pub mu: f64,
    pub include_energy_cost: bool,
    pub step_load: bool,
    pub iid_mi_bits: f64,
    pub markov_mi_bits: f64,
    pub entropy_x_bits: f64,
    pub k: usize,
    /// Upper X bin edge used for scoring.
    pub x_max: f64,
    /// cents, at the real tariff
    pub total_cost: f64,
    pub avg_daily_cost: f64,
    pub comfort_violations: usize,
    pub max_comfort_violation: f64,
    pub failed_steps: usize,
    pub soft_bound_steps: usize,
    pub node_limit_steps: usize,
    pub total_nodes: usize,
    pub max_gap: f64,
    pub max_kkt: f64,
    pub max_projection: f64,
    pub dispatch_flagged_slots: usize,
    pub max_dispatch_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: RunReport,
    pub steps: Vec<StepRecord>,
    /// One entry per hour in step-load mode.
    pub dispatch: Vec<DispatchPlan>,
    pub initial_state: PlantState,
    pub binning: BinningScheme,
    /// Offset of the first controlled hour in the bundle.
    pub offset: usize,
}

impl RunOutput {
    pub fn x(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.committed.x).collect()
    }

    pub fn y(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.committed.y).collect()
    }
}

/// Samples the bundle must hold for `config`: history, run and lookahead.
pub fn required_samples(config: &ScenarioConfig) -> usize {
    config.window + config.days * 24 + config.horizon - 1
}

fn check_inputs(config: &ScenarioConfig, bundle: &ProfileBundle) -> Result<()> {
    bundle.validate()?;
    let need = required_samples(config);
    if bundle.len() < need {
        return Err(Error::TooShort {
            need,
            got: bundle.len(),
        });
    }
    if config.ewh().is_some() && bundle.draws.is_none() {
        return Err(Error::Config("water heater configured but no hot water draws supplied".into()));
    }
    if config.erh().is_some() && (bundle.outdoor_temp.is_none() || bundle.irradiance.is_none()) {
        return Err(Error::Config(
            "space heater configured but outdoor temperature or irradiance missing".into(),
        ));
    }
    Ok(())
}

/// Runs the controller over `config.days` days following a `config.window`
/// hour history, committing one hour at a time.
pub fn run_receding_horizon(config: &ScenarioConfig, bundle: &ProfileBundle) -> Result<RunOutput> {
    run_with(config, bundle, &PlanSettings::for_config(config))
}

pub fn run_with(config: &ScenarioConfig, bundle: &ProfileBundle, settings: &PlanSettings) -> Result<RunOutput> {
    config.validate()?;
    check_inputs(config, bundle)?;
    let x_all = bundle.load.values();
    let binning = config.binning.scheme(x_all)?;
    let grid = bundle.load.grid();
    let objective_prices = config.objective_tariff().prices(grid);
    let w = config.window;
    let steps = config.days * 24;
    let h = config.horizon;
    let thermal = config.ewh().is_some() || config.erh().is_some();
    let dispatching = config.step_load && thermal;

    let draws: Vec<f64> = (0..bundle.len()).map(|t| bundle.draw(t)).collect();
    let outdoor: Vec<f64> = (0..bundle.len()).map(|t| bundle.outdoor(t)).collect();
    let sun: Vec<f64> = (0..bundle.len()).map(|t| bundle.sun(t)).collect();

    let mut x_hist: Vec<f64> = x_all[..w].to_vec();
    let mut y_hist = x_hist.clone();
    let initial_state = PlantState::initial(config);
    let mut state = initial_state;
    let mut records = Vec::with_capacity(steps);
    let mut dispatch = Vec::new();

    for k in 0..steps {
        let t = w + k;
        let constants = update_constants(&x_hist, &y_hist, &binning, config.epsilon, w)?;
        let fc = Forecast {
            x: &x_all[t..t + h],
            prices: &objective_prices[t..t + h],
            draws: &draws[t..t + h],
            outdoor: &outdoor[t..t + h],
            irradiance: &sun[t..t + h],
        };
        let planned = if config.devices.is_empty() {
            Ok(ControlStepResult {
                committed: Committed::passthrough(x_all[t]),
                plan_y: fc.x.to_vec(),
                breakdown: ObjectiveBreakdown::default(),
                status: StepStatus::Optimal,
                gap: 0.0,
                nodes: 0,
                max_kkt: 0.0,
                projection: 0.0,
                comfort_slack: 0.0,
            })
        } else {
            plan_step(config, &binning, &constants, &fc, &state, settings)
        };
        let (mut committed, breakdown, status, gap, nodes, kkt, projection) = match planned {
            Ok(r) => (r.committed, r.breakdown, r.status, r.gap, r.nodes, r.max_kkt, r.projection),
            Err(e) => {
                log::warn!("step {k}: {e}; idling devices");
                (Committed::passthrough(x_all[t]), ObjectiveBreakdown::default(), StepStatus::Passthrough, 0.0, 0, 0.0, 0.0)
            }
        };

        let mut next = state;
        if let (Some(m), Some(e)) = (config.ess(), state.energy) {
            next.energy = Some(m.step(e, committed.p_charge, committed.p_discharge, 1.0));
        }
        if dispatching {
            let inputs: Vec<SlotInputs> = (0..SLOTS)
                .map(|s| SlotInputs {
                    draw: bundle.fine_draw(t, s),
                    outdoor: bundle.fine_outdoor(t, s),
                    irradiance: bundle.fine_sun(t, s),
                })
                .collect();
            let plan = dispatch_5min(
                config.ewh().zip(state.ewh),
                config.erh().zip(state.t_in),
                [committed.u_low, committed.u_up, committed.u_erh],
                config.indoor_temp,
                &inputs,
            )?;
            let [ul, uu, ue] = plan.achieved;
            committed.u_low = ul;
            committed.u_up = uu;
            committed.u_erh = ue;
            committed.s_ewh = config.ewh().map_or(0.0, |m| m.power_kw * ul + m.power_kw * uu);
            committed.s_erh = config.erh().map_or(0.0, |m| m.power_kw * ue);
            committed.s = committed.s_ess + committed.s_ewh + committed.s_erh;
            committed.y = committed.x + committed.s;
            let last = plan.slots.last().expect("twelve slots");
            next.ewh = last.ewh;
            next.t_in = last.t_in;
            dispatch.push(plan);
        } else {
            if let (Some(m), Some(s)) = (config.ewh(), state.ewh) {
                let air = state.t_in.unwrap_or(config.indoor_temp);
                next.ewh = Some(m.step(s, air, draws[t], committed.u_low, committed.u_up, 3600.0)?);
            }
            if let (Some(m), Some(ti)) = (config.erh(), state.t_in) {
                next.t_in = Some(m.step(ti, outdoor[t], sun[t], committed.u_erh, 3600.0)?);
            }
        }

        let comfort_violation = config.ewh().zip(next.ewh).map_or(0.0, |(m, s)| ewh_hinge(m, s))
            + config.erh().zip(next.t_in).map_or(0.0, |(m, ti)| erh_hinge(m, ti));
        records.push(StepRecord {
            timestamp: grid.timestamp(t),
            committed,
            energy: next.energy,
            t_low: next.ewh.map(|s| s.t_low),
            t_up: next.ewh.map(|s| s.t_up),
            t_in: next.t_in,
            breakdown,
            status,
            gap,
            nodes,
            max_kkt: kkt,
            projection,
            comfort_violation,
        });
        x_hist.push(committed.x);
        y_hist.push(committed.y);
        state = next;
    }

    let report = summarize(config, bundle, &binning, &records, &dispatch, w)?;
    Ok(RunOutput {
        report,
        steps: records,
        dispatch,
        initial_state,
        binning,
        offset: w,
    })
}

fn summarize(
    config: &ScenarioConfig,
    bundle: &ProfileBundle,
    binning: &BinningScheme,
    records: &[StepRecord],
    dispatch: &[DispatchPlan],
    offset: usize,
) -> Result<RunReport> {
    let x: Vec<f64> = records.iter().map(|r| r.committed.x).collect();
    let y: Vec<f64> = records.iter().map(|r| r.committed.y).collect();
    let mi = score(&x, &y, binning, config.score_epsilon)?;
    let grid = bundle.load.grid().slice(offset, records.len())?;
    let total_cost = energy_cost(&LoadProfile::new(grid, y, Role::Grid)?, &config.tariff)?;
    let count = |s: StepStatus| records.iter().filter(|r| r.status == s).count();
    Ok(RunReport {
        name: config.name.clone(),
        system: config.system_label(),
        mu: config.mu,
        include_energy_cost: config.include_energy_cost,
        step_load: config.step_load,
        iid_mi_bits: mi.iid_mi_bits,
        markov_mi_bits: mi.markov_mi_bits,
        entropy_x_bits: mi.entropy_x_bits,
        k: mi.k,
        x_max: binning.x_edges.hi(),
        total_cost,
        avg_daily_cost: total_cost / config.days as f64,
        comfort_violations: records.iter().filter(|r| r.comfort_violation > 1e-6).count(),
        max_comfort_violation: records.iter().map(|r| r.comfort_violation).fold(0.0, f64::max),
        failed_steps: count(StepStatus::Passthrough),
        soft_bound_steps: count(StepStatus::SoftBounds),
        node_limit_steps: count(StepStatus::NodeLimit),
        total_nodes: records.iter().map(|r| r.nodes).sum(),
        max_gap: records.iter().map(|r| r.gap).fold(0.0, f64::max),
        max_kkt: records.iter().map(|r| r.max_kkt).fold(0.0, f64::max),
        max_projection: records.iter().map(|r| r.projection).fold(0.0, f64::max),
        dispatch_flagged_slots: dispatch.iter().flat_map(|d| &d.slots).filter(|s| s.flagged).count(),
        max_dispatch_violation: dispatch.iter().map(|d| d.max_violation()).fold(0.0, f64::max),
    })
}
