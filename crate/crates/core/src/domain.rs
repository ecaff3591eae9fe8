//! Time grids, load profiles, tariffs and the quantization used by every
//! estimator and controller in the crate.
//!
//! Units: power in kW, energy in kWh, temperature in °C, prices in cents/kWh.

use std::collections::BTreeSet;

use chrono::{Duration, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Control resolution.
pub const HOURLY: u32 = 3600;
/// Secondary dispatch resolution.
pub const FIVE_MINUTES: u32 = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeGrid {
    start: NaiveDateTime,
    step_seconds: u32,
    count: usize,
}

impl TimeGrid {
    pub fn new(start: NaiveDateTime, step_seconds: u32, count: usize) -> Result<Self> {
        if step_seconds == 0 {
            return Err(Error::invalid("time step must be positive"));
        }
        if 3600 % step_seconds != 0 && step_seconds % 3600 != 0 {
            return Err(Error::invalid(format!(
                "time step {step_seconds}s neither divides nor is a multiple of one hour"
            )));
        }
        if count == 0 {
            return Err(Error::Empty("time grid"));
        }
        Ok(Self {
            start,
            step_seconds,
            count,
        })
    }

    pub fn hourly(start: NaiveDateTime, count: usize) -> Result<Self> {
        Self::new(start, HOURLY, count)
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn step_seconds(&self) -> u32 {
        self.step_seconds
    }

    pub fn step_hours(&self) -> f64 {
        self.step_seconds as f64 / 3600.0
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn timestamp(&self, index: usize) -> NaiveDateTime {
        assert!(index < self.count, "grid index {index} out of range");
        self.start + Duration::seconds(self.step_seconds as i64 * index as i64)
    }

    pub fn hour_of_day(&self, index: usize) -> u32 {
        self.timestamp(index).hour()
    }

    /// Sub-grid `[offset, offset + count)`.
    pub fn slice(&self, offset: usize, count: usize) -> Result<Self> {
        if offset + count > self.count {
            return Err(Error::TooShort {
                need: offset + count,
                got: self.count,
            });
        }
        Self::new(self.timestamp(offset), self.step_seconds, count)
    }

    /// True if `other` is this grid with a finer step covering the same span.
    pub fn is_refined_by(&self, other: &TimeGrid) -> bool {
        other.start == self.start
            && self.step_seconds % other.step_seconds == 0
            && other.count * other.step_seconds as usize == self.count * self.step_seconds as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Sensitive household load X.
    Sensitive,
    /// Grid-visible load Y.
    Grid,
    /// Net device load S.
    Device,
    ThermalDemand,
    Irradiance,
    /// Outdoor air temperature in °C.
    OutdoorTemp,
    /// Hot-water draw in litres per step.
    HotWaterDraw,
}

impl Role {
    pub fn is_power(self) -> bool {
        matches!(
            self,
            Role::Sensitive | Role::Grid | Role::Device | Role::ThermalDemand
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Sensitive => "sensitive",
            Role::Grid => "grid",
            Role::Device => "device",
            Role::ThermalDemand => "thermal_demand",
            Role::Irradiance => "irradiance",
            Role::OutdoorTemp => "outdoor_temp",
            Role::HotWaterDraw => "hot_water_draw",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfile {
    grid: TimeGrid,
    values: Vec<f64>,
    role: Role,
}

impl LoadProfile {
    pub fn new(grid: TimeGrid, values: Vec<f64>, role: Role) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::LengthMismatch {
                what: "profile values vs grid",
                left: values.len(),
                right: grid.count(),
            });
        }
        if let Some(step) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "{} profile has a non-finite value at step {step}",
                role.name()
            )));
        }
        let nonnegative = matches!(role, Role::Sensitive | Role::HotWaterDraw);
        if nonnegative {
            if let Some(step) = values.iter().position(|&v| v < 0.0) {
                return Err(Error::OutOfRange {
                    step,
                    value: values[step],
                    lo: 0.0,
                    hi: f64::INFINITY,
                });
            }
        }
        Ok(Self { grid, values, role })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn slice(&self, offset: usize, count: usize) -> Result<Self> {
        let grid = self.grid.slice(offset, count)?;
        Ok(Self {
            grid,
            values: self.values[offset..offset + count].to_vec(),
            role: self.role,
        })
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    /// Averages consecutive blocks down to `step_seconds` (e.g. 5-minute to hourly).
    pub fn resample_mean(&self, step_seconds: u32) -> Result<Self> {
        let own = self.grid.step_seconds();
        if step_seconds == own {
            return Ok(self.clone());
        }
        if step_seconds % own != 0 {
            return Err(Error::invalid(format!(
                "cannot average a {own}s grid onto {step_seconds}s"
            )));
        }
        let factor = (step_seconds / own) as usize;
        if self.values.len() % factor != 0 {
            return Err(Error::invalid(format!(
                "{} samples do not fill whole {step_seconds}s intervals",
                self.values.len()
            )));
        }
        let values: Vec<f64> = self
            .values
            .chunks(factor)
            .map(|c| c.iter().sum::<f64>() / factor as f64)
            .collect();
        let grid = TimeGrid::new(self.grid.start(), step_seconds, values.len())?;
        Self::new(grid, values, self.role)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tariff {
    /// cents/kWh
    pub peak_price: f64,
    /// cents/kWh
    pub offpeak_price: f64,
    pub peak_hours: BTreeSet<u32>,
}

impl Default for Tariff {
    fn default() -> Self {
        Self {
            peak_price: 24.6,
            offpeak_price: 13.15,
            peak_hours: (6..=21).collect(),
        }
    }
}

impl Tariff {
    pub fn validate(&self) -> Result<()> {
        if !(self.peak_price >= self.offpeak_price && self.offpeak_price >= 0.0) {
            return Err(Error::Config(format!(
                "tariff requires peak ({}) >= off-peak ({}) >= 0",
                self.peak_price, self.offpeak_price
            )));
        }
        if let Some(h) = self.peak_hours.iter().find(|&&h| h > 23) {
            return Err(Error::Config(format!("peak hour {h} is not in 0..=23")));
        }
        Ok(())
    }

    /// Flat zero tariff for cost-blind controllers.
    pub fn zero() -> Self {
        Self {
            peak_price: 0.0,
            offpeak_price: 0.0,
            peak_hours: BTreeSet::new(),
        }
    }

    pub fn price_at_hour(&self, hour: u32) -> f64 {
        if self.peak_hours.contains(&hour) {
            self.peak_price
        } else {
            self.offpeak_price
        }
    }

    pub fn prices(&self, grid: &TimeGrid) -> Vec<f64> {
        (0..grid.count())
            .map(|i| self.price_at_hour(grid.hour_of_day(i)))
            .collect()
    }
}

/// Total cost in cents of drawing `y` under `tariff`: Σ c_τ · y_τ · Δt.
pub fn energy_cost(y: &LoadProfile, tariff: &Tariff) -> Result<f64> {
    if !y.role().is_power() {
        return Err(Error::invalid(format!(
            "energy cost needs a power profile, got {}",
            y.role().name()
        )));
    }
    let dt = y.grid().step_hours();
    Ok(y
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| tariff.price_at_hour(y.grid().hour_of_day(i)) * v * dt)
        .sum())
}

/// Ascending bin edges. Bin `j` (1-based) is `[edges[j-1], edges[j])`; the
/// last bin also contains its right edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Edges(Vec<f64>);

impl Edges {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::invalid("need at least two bin edges"));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("bin edges must be finite and strictly ascending"));
        }
        Ok(Self(edges))
    }

    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return Err(Error::invalid(format!(
                "cannot split [{lo}, {hi}] into {bins} bins"
            )));
        }
        let width = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..bins).map(|k| lo + width * k as f64).collect();
        edges.push(hi);
        Self::new(edges)
    }

    pub fn bins(&self) -> usize {
        self.0.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn lo(&self) -> f64 {
        self.0[0]
    }

    pub fn hi(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// Lower edge of 1-based bin `j`.
    pub fn lower(&self, j: usize) -> f64 {
        self.0[j - 1]
    }

    /// Upper edge of 1-based bin `j`.
    pub fn upper(&self, j: usize) -> f64 {
        self.0[j]
    }

    pub fn bin_index(&self, value: f64) -> Option<usize> {
        if !(value >= self.lo() && value <= self.hi()) {
            return None;
        }
        if value == self.hi() {
            return Some(self.bins());
        }
        Some(self.0.partition_point(|&e| e <= value))
    }

    /// 1-based bin of every value; errors name the first offending step.
    pub fn bin_all(&self, values: &[f64]) -> Result<Vec<usize>> {
        values
            .iter()
            .enumerate()
            .map(|(step, &v)| {
                self.bin_index(v).ok_or(Error::OutOfRange {
                    step,
                    value: v,
                    lo: self.lo(),
                    hi: self.hi(),
                })
            })
            .collect()
    }
}

/// 1-based histogram bin of `value` over ascending `edges`.
pub fn bin_index(value: f64, edges: &[f64]) -> Result<usize> {
    let edges = Edges::new(edges.to_vec())?;
    edges.bin_index(value).ok_or(Error::OutOfRange {
        step: 0,
        value,
        lo: edges.lo(),
        hi: edges.hi(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinningScheme {
    pub x_edges: Edges,
    pub y_edges: Edges,
}

impl BinningScheme {
    pub fn new(x_edges: Edges, y_edges: Edges) -> Self {
        Self { x_edges, y_edges }
    }

    /// `m` uniform X bins over `[0, x_max]` and `n` uniform Y bins over `[y_min, y_max]`.
    pub fn uniform(x_max: f64, m: usize, y_min: f64, y_max: f64, n: usize) -> Result<Self> {
        Ok(Self {
            x_edges: Edges::uniform(0.0, x_max, m)?,
            y_edges: Edges::uniform(y_min, y_max, n)?,
        })
    }

    pub fn m(&self) -> usize {
        self.x_edges.bins()
    }

    pub fn n(&self) -> usize {
        self.y_edges.bins()
    }
}

/// Privacy sensitivity of a flexible load's own usage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrivacyCategory {
    /// Neither usage nor presence reveals anything.
    #[default]
    NotSensitive,
    /// Time-of-use is sensitive, presence is not.
    TimeOfUse,
    /// Both time-of-use and presence are sensitive.
    TimeOfUseAndPresence,
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn t0() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2020, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap()
    }

    fn y_edges() -> Edges {
        Edges::uniform(0.0, 12.0, 24).unwrap()
    }

    #[test]
    fn bin_index_boundaries() {
        let e = y_edges();
        assert_eq!(bin_index(0.0, e.as_slice()).unwrap(), 1);
        assert_eq!(bin_index(12.0, e.as_slice()).unwrap(), 24);
        assert_eq!(bin_index(3.2, e.as_slice()).unwrap(), 7);
        // interior edges go to the upper bin
        assert_eq!(e.bin_index(0.5), Some(2));
        assert_eq!(e.bin_index(11.999999), Some(24));
    }

    #[test]
    fn bin_index_out_of_range_names_step() {
        let e = y_edges();
        match e.bin_all(&[1.0, 2.0, 12.5]) {
            Err(Error::OutOfRange { step, .. }) => assert_eq!(step, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(bin_index(-0.1, e.as_slice()).is_err());
        assert!(bin_index(f64::NAN, e.as_slice()).is_err());
    }

    #[test]
    fn bin_index_is_monotone_and_surjective() {
        let e = y_edges();
        let mut last = 0;
        let mut seen = BTreeSet::new();
        for k in 0..=2400 {
            let v = 12.0 * k as f64 / 2400.0;
            let j = e.bin_index(v).unwrap();
            assert!(j >= last);
            last = j;
            seen.insert(j);
        }
        assert_eq!(seen.len(), 24);
        for j in 1..=24 {
            let mid = 0.5 * (e.lower(j) + e.upper(j));
            assert_eq!(e.bin_index(mid), Some(j));
        }
    }

    #[test]
    fn rejects_bad_edges_and_grids() {
        assert!(Edges::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(Edges::new(vec![0.0]).is_err());
        assert!(TimeGrid::new(t0(), 7, 10).is_err());
        assert!(TimeGrid::new(t0(), 7200, 10).is_ok());
        assert!(TimeGrid::new(t0(), 300, 0).is_err());
    }

    #[test]
    fn energy_cost_examples() {
        let tariff = Tariff::default();
        let grid = TimeGrid::hourly(t0(), 24).unwrap();
        let zero = LoadProfile::new(grid, vec![0.0; 24], Role::Grid).unwrap();
        assert_eq!(energy_cost(&zero, &tariff).unwrap(), 0.0);

        let one = LoadProfile::new(grid, vec![1.0; 24], Role::Grid).unwrap();
        let cost = energy_cost(&one, &tariff).unwrap();
        assert!((cost - (16.0 * 24.6 + 8.0 * 13.15)).abs() < 1e-9);
        assert!((cost - 498.8).abs() < 1e-9);

        let g1 = TimeGrid::hourly(t0(), 1).unwrap();
        let two = LoadProfile::new(g1, vec![2.0], Role::Grid).unwrap();
        assert!((energy_cost(&two, &tariff).unwrap() - 26.3).abs() < 1e-12);
    }

    #[test]
    fn energy_cost_on_five_minute_grid_uses_hours() {
        let grid = TimeGrid::new(t0(), 300, 12).unwrap();
        let p = LoadProfile::new(grid, vec![2.0; 12], Role::Grid).unwrap();
        assert!((energy_cost(&p, &Tariff::default()).unwrap() - 26.3).abs() < 1e-9);
    }

    #[test]
    fn tariff_validation() {
        let mut t = Tariff::default();
        assert!(t.validate().is_ok());
        t.peak_hours.insert(24);
        assert!(t.validate().is_err());
        let t = Tariff {
            peak_price: 1.0,
            offpeak_price: 2.0,
            peak_hours: BTreeSet::new(),
        };
        assert!(t.validate().is_err());
    }

    #[test]
    fn profile_invariants() {
        let grid = TimeGrid::hourly(t0(), 3).unwrap();
        assert!(LoadProfile::new(grid, vec![1.0, -0.1, 2.0], Role::Sensitive).is_err());
        assert!(LoadProfile::new(grid, vec![1.0, -0.1, 2.0], Role::OutdoorTemp).is_ok());
        assert!(LoadProfile::new(grid, vec![1.0, f64::NAN, 2.0], Role::Grid).is_err());
        assert!(LoadProfile::new(grid, vec![1.0], Role::Grid).is_err());
    }

    #[test]
    fn resample_mean_to_hourly() {
        let grid = TimeGrid::new(t0(), 300, 24).unwrap();
        let values: Vec<f64> = (0..24).map(|i| i as f64).collect();
        let p = LoadProfile::new(grid, values, Role::OutdoorTemp).unwrap();
        let h = p.resample_mean(3600).unwrap();
        assert_eq!(h.values(), &[5.5, 17.5]);
        assert!(h.grid().is_refined_by(p.grid()));
    }
}
