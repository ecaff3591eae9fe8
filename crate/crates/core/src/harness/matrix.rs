//! Scenario matrices: μ × cost mode × device set × simulation mode.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ingest::ingest_profiles;
use super::synthetic::{archetype, generate_synthetic_profile};
use crate::config::{DeviceSpec, ScenarioConfig};
use crate::controller::{run_receding_horizon, RunOutput, RunReport};
use crate::devices::{ErhModel, EssModel, EwhModel};
use crate::error::{Error, Result};
use crate::profiles::ProfileBundle;

/// Device sets compared by the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Ess,
    Ewh,
    EwhErh,
}

impl SystemKind {
    pub fn label(self) -> &'static str {
        match self {
            SystemKind::Ess => "ESS",
            SystemKind::Ewh => "EWH",
            SystemKind::EwhErh => "EWH and ERH",
        }
    }

    pub fn thermal(self) -> bool {
        self != SystemKind::Ess
    }

    /// Devices for this system, taking parameters from `template` where it
    /// declares a device of the same kind.
    pub fn devices(self, template: &ScenarioConfig) -> Vec<DeviceSpec> {
        let ess = template.ess().cloned().unwrap_or_else(EssModel::default);
        let ewh = template.ewh().cloned().unwrap_or_else(EwhModel::default);
        let erh = template.erh().cloned().unwrap_or_else(ErhModel::default);
        match self {
            SystemKind::Ess => vec![DeviceSpec::Ess(ess)],
            SystemKind::Ewh => vec![DeviceSpec::Ewh(ewh)],
            SystemKind::EwhErh => vec![DeviceSpec::Ewh(ewh), DeviceSpec::Erh(erh)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentMatrix {
    pub template: ScenarioConfig,
    pub mu: Vec<f64>,
    /// `include_energy_cost` values.
    pub cost_modes: Vec<bool>,
    pub systems: Vec<SystemKind>,
    /// Step-load values for thermal systems; ESS rows always run continuous.
    pub step_load: Vec<bool>,
    pub master_seed: u64,
    pub replicates: usize,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
}

impl Default for ExperimentMatrix {
    fn default() -> Self {
        Self {
            template: ScenarioConfig::default(),
            mu: vec![0.0, 5.0, 10.0],
            cost_modes: vec![true, false],
            systems: vec![SystemKind::Ess, SystemKind::Ewh, SystemKind::EwhErh],
            step_load: vec![false],
            master_seed: 23618,
            replicates: 1,
            threads: 0,
        }
    }
}

/// One resolved cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub system: SystemKind,
    pub include_energy_cost: bool,
    pub mu: f64,
    pub step_load: bool,
    pub replicate: usize,
    /// Derived from the master seed and the cell index.
    pub seed: u64,
    /// Seed of the synthetic profile; shared by every cell of a replicate so
    /// systems are compared on the same load.
    pub profile_seed: u64,
    /// Cost-blind μ = 0 cell, the row's cost basis. For the ESS it runs
    /// without devices (the original load).
    pub baseline: bool,
    pub config: ScenarioConfig,
}

/// SplitMix64 step, used as a counter-based seed derivation.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    let mut z = master.wrapping_add(counter.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl ExperimentMatrix {
    pub fn validate(&self) -> Result<()> {
        if self.mu.is_empty() || self.cost_modes.is_empty() || self.systems.is_empty() || self.step_load.is_empty() {
            return Err(Error::Config("every matrix axis needs at least one value".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.mu.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Config("μ values must be finite and nonnegative".into()));
        }
        Ok(())
    }

    /// Cells in deterministic order: replicate, system, simulation mode,
    /// cost mode, μ.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        self.validate()?;
        let mut cells = Vec::new();
        for r in 0..self.replicates {
            let profile_seed = if r == 0 {
                self.master_seed
            } else {
                derive_seed(self.master_seed, u64::MAX - r as u64)
            };
            for &system in &self.systems {
                let modes: Vec<bool> = if system.thermal() { self.step_load.clone() } else { vec![false] };
                for step_load in modes {
                    for &cost in &self.cost_modes {
                        for &mu in &self.mu {
                            let index = cells.len();
                            let seed = derive_seed(self.master_seed, index as u64);
                            let baseline = !cost && mu == 0.0;
                            let mut config = self.template.clone();
                            config.devices = if baseline && system == SystemKind::Ess {
                                Vec::new()
                            } else {
                                system.devices(&self.template)
                            };
                            config.mu = mu;
                            config.include_energy_cost = cost;
                            config.step_load = step_load;
                            config.seed = seed;
                            config.name = format!(
                                "{}-{}-{}-mu{}-r{}",
                                system.label().replace(' ', "-").to_lowercase(),
                                if step_load { "step" } else { "continuous" },
                                if cost { "cost" } else { "nocost" },
                                mu,
                                r
                            );
                            cells.push(Cell {
                                index,
                                system,
                                include_energy_cost: cost,
                                mu,
                                step_load,
                                replicate: r,
                                seed,
                                profile_seed,
                                baseline,
                                config,
                            });
                        }
                    }
                }
            }
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    pub output: std::result::Result<RunOutput, String>,
}

impl CellResult {
    pub fn report(&self) -> Option<&RunReport> {
        self.output.as_ref().ok().map(|o| &o.report)
    }
}

#[derive(Debug, Clone)]
pub struct MatrixOutcome {
    /// In cell order, regardless of completion order.
    pub results: Vec<CellResult>,
}

impl MatrixOutcome {
    pub fn all_succeeded(&self) -> bool {
        self.results.iter().all(|r| r.output.is_ok())
    }

    fn find(&self, system: SystemKind, step: bool, cost: bool, mu: f64, rep: usize) -> Option<&CellResult> {
        self.results.iter().find(|r| {
            let c = &r.cell;
            c.system == system && c.step_load == step && c.include_energy_cost == cost && c.mu == mu && c.replicate == rep
        })
    }

    /// Cost basis of a row: the cost-blind μ = 0 cell of the same system.
    pub fn baseline_cost(&self, cell: &Cell) -> Option<f64> {
        self.find(cell.system, cell.step_load, false, 0.0, cell.replicate)
            .and_then(|r| r.report())
            .map(|r| r.avg_daily_cost)
    }

    /// `100 · (cost − basis) / basis` for non-baseline cells.
    pub fn cost_delta_percent(&self, cell: &Cell) -> Option<f64> {
        if cell.baseline {
            return None;
        }
        let base = self.baseline_cost(cell)?;
        let own = self.find(cell.system, cell.step_load, cell.include_energy_cost, cell.mu, cell.replicate)?.report()?;
        Some(percent_delta(own.avg_daily_cost, base))
    }

    fn rows(&self) -> Vec<(usize, SystemKind, bool, bool)> {
        let mut rows = Vec::new();
        for r in &self.results {
            let key = (r.cell.replicate, r.cell.system, r.cell.step_load, r.cell.include_energy_cost);
            if !rows.contains(&key) {
                rows.push(key);
            }
        }
        rows
    }

    fn mus(&self) -> Vec<f64> {
        let mut mus: Vec<f64> = Vec::new();
        for r in &self.results {
            if !mus.contains(&r.cell.mu) {
                mus.push(r.cell.mu);
            }
        }
        mus
    }

    /// Privacy table: one row per system × mode × cost mode, IID and Markov
    /// MI per μ, bits to 3 decimals.
    pub fn privacy_table_csv(&self) -> String {
        let mus = self.mus();
        let mut s = String::from("replicate,system,cost_mode");
        for mu in &mus {
            let _ = write!(s, ",mu{mu}_iid_mi,mu{mu}_markov_mi");
        }
        s.push('\n');
        for (rep, system, step, cost) in self.rows() {
            let _ = write!(s, "{rep},{},{}", row_label(system, step), cost_label(cost));
            for &mu in &mus {
                match self.find(system, step, cost, mu, rep).map(|r| (r.cell.baseline && system == SystemKind::Ess, r.report())) {
                    Some((false, Some(r))) => {
                        let _ = write!(s, ",{:.3},{:.3}", r.iid_mi_bits, r.markov_mi_bits);
                    }
                    Some((true, _)) => s.push_str(",-,-"),
                    _ => s.push_str(",failed,failed"),
                }
            }
            s.push('\n');
        }
        s
    }

    /// Cost table: baseline cells carry the absolute average daily cost in
    /// cents, the others the % change against it.
    pub fn cost_table_csv(&self) -> String {
        let mus = self.mus();
        let mut s = String::from("replicate,system,cost_mode");
        for mu in &mus {
            let _ = write!(s, ",mu{mu}");
        }
        s.push('\n');
        for (rep, system, step, cost) in self.rows() {
            let _ = write!(s, "{rep},{},{}", row_label(system, step), cost_label(cost));
            for &mu in &mus {
                let cell = self.find(system, step, cost, mu, rep);
                match cell {
                    Some(r) if r.cell.baseline => match r.report() {
                        Some(rep) => {
                            let _ = write!(s, ",{:.3} c/day", rep.avg_daily_cost);
                        }
                        None => s.push_str(",failed"),
                    },
                    Some(r) => match self.cost_delta_percent(&r.cell) {
                        Some(d) => {
                            let _ = write!(s, ",{d:+.3}%");
                        }
                        None => s.push_str(",failed"),
                    },
                    None => s.push_str(",-"),
                }
            }
            s.push('\n');
        }
        s
    }

    /// Every cell's full report.
    pub fn cells_csv(&self) -> String {
        let mut s = String::from(
            "index,name,system,step_load,include_energy_cost,mu,replicate,seed,baseline,status,iid_mi_bits,markov_mi_bits,entropy_x_bits,total_cost,avg_daily_cost,cost_delta_percent,comfort_violations,max_comfort_violation,failed_steps,soft_bound_steps,node_limit_steps,max_gap,max_kkt,max_projection,dispatch_flagged_slots,max_dispatch_violation\n",
        );
        for r in &self.results {
            let c = &r.cell;
            let _ = write!(
                s,
                "{},{},{},{},{},{},{},{},{},",
                c.index,
                c.config.name,
                c.system.label(),
                c.step_load,
                c.include_energy_cost,
                c.mu,
                c.replicate,
                c.seed,
                c.baseline
            );
            match &r.output {
                Ok(o) => {
                    let p = &o.report;
                    let delta = self.cost_delta_percent(c).map_or(String::new(), |d| d.to_string());
                    let _ = writeln!(
                        s,
                        "ok,{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                        p.iid_mi_bits,
                        p.markov_mi_bits,
                        p.entropy_x_bits,
                        p.total_cost,
                        p.avg_daily_cost,
                        delta,
                        p.comfort_violations,
                        p.max_comfort_violation,
                        p.failed_steps,
                        p.soft_bound_steps,
                        p.node_limit_steps,
                        p.max_gap,
                        p.max_kkt,
                        p.max_projection,
                        p.dispatch_flagged_slots,
                        p.max_dispatch_violation
                    );
                }
                Err(e) => {
                    let _ = writeln!(s, "\"error: {}\"{}", e.replace('"', "'"), ",".repeat(16));
                }
            }
        }
        s
    }
}

pub fn percent_delta(value: f64, basis: f64) -> f64 {
    100.0 * (value - basis) / basis
}

fn row_label(system: SystemKind, step: bool) -> String {
    match (system, step) {
        (SystemKind::Ess, _) => "ESS".into(),
        (s, true) => format!("Step load {}", s.label()),
        (s, false) => format!("Non-step load {}", s.label()),
    }
}

fn cost_label(cost: bool) -> &'static str {
    if cost {
        "with energy costs"
    } else {
        "without energy costs"
    }
}

/// Input profiles for a cell: the template's files when configured,
/// otherwise the synthetic archetype at the replicate's profile seed.
pub fn cell_profiles(cell: &Cell) -> Result<ProfileBundle> {
    scenario_profiles(&cell.config, cell.profile_seed)
}

/// Input profiles for a scenario: its files, or a synthetic month long enough
/// for history, run and lookahead.
pub fn scenario_profiles(cfg: &ScenarioConfig, profile_seed: u64) -> Result<ProfileBundle> {
    if cfg.inputs.load.is_some() {
        return ingest_profiles(&cfg.inputs);
    }
    let days = cfg.window.div_ceil(24) + cfg.days + cfg.horizon.div_ceil(24);
    generate_synthetic_profile(profile_seed, days.max(7), archetype(&cfg.archetype)?)
}

/// Runs every cell, in parallel when `threads != 1`. Results are stored in
/// cell order; a failing cell does not stop the others.
pub fn run_matrix(matrix: &ExperimentMatrix) -> Result<MatrixOutcome> {
    let cells = matrix.cells()?;
    let run_cell = |cell: Cell| -> CellResult {
        let output = cell_profiles(&cell)
            .and_then(|b| run_receding_horizon(&cell.config, &b))
            .map_err(|e| e.to_string());
        if let Err(e) = &output {
            log::error!("cell {} ({}) failed: {e}", cell.index, cell.config.name);
        }
        CellResult { cell, output }
    };
    let results: Vec<CellResult> = if matrix.threads == 1 {
        cells.into_iter().map(run_cell).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(matrix.threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| cells.into_par_iter().map(run_cell).collect())
    };
    Ok(MatrixOutcome { results })
}
