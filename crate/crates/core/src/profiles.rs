//! Aligned input series for one household.

use crate::domain::{LoadProfile, Role, FIVE_MINUTES, HOURLY};
use crate::error::{Error, Result};

/// 5-minute companions used by the dispatch layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FineProfiles {
    pub draws: Option<LoadProfile>,
    pub outdoor_temp: Option<LoadProfile>,
    pub irradiance: Option<LoadProfile>,
}

/// Hourly sensitive load with optional hot water draws (litres per hour)
/// and weather, all on the load's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileBundle {
    pub load: LoadProfile,
    pub draws: Option<LoadProfile>,
    pub outdoor_temp: Option<LoadProfile>,
    pub irradiance: Option<LoadProfile>,
    pub fine: Option<FineProfiles>,
}

impl ProfileBundle {
    pub fn len(&self) -> usize {
        self.load.len()
    }

    pub fn is_empty(&self) -> bool {
        self.load.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.load.grid().step_seconds() != HOURLY {
            return Err(Error::invalid("sensitive load must be hourly"));
        }
        if self.load.role() != Role::Sensitive {
            return Err(Error::invalid("load profile must carry the sensitive role"));
        }
        for p in [&self.draws, &self.outdoor_temp, &self.irradiance].into_iter().flatten() {
            if p.grid() != self.load.grid() {
                return Err(Error::invalid(format!(
                    "{} profile is not aligned with the load grid",
                    p.role().name()
                )));
            }
        }
        if let Some(f) = &self.fine {
            for p in [&f.draws, &f.outdoor_temp, &f.irradiance].into_iter().flatten() {
                let g = p.grid();
                if g.step_seconds() != FIVE_MINUTES
                    || g.start() != self.load.grid().start()
                    || g.count() != self.len() * 12
                {
                    return Err(Error::invalid(format!(
                        "5-minute {} profile does not refine the load grid",
                        p.role().name()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Hourly draw in litres, 0 when draws are absent.
    pub fn draw(&self, t: usize) -> f64 {
        self.draws.as_ref().map_or(0.0, |p| p.values()[t])
    }

    pub fn outdoor(&self, t: usize) -> f64 {
        self.outdoor_temp.as_ref().map_or(0.0, |p| p.values()[t])
    }

    pub fn sun(&self, t: usize) -> f64 {
        self.irradiance.as_ref().map_or(0.0, |p| p.values()[t])
    }

    /// Draw during 5-minute slot `s` of hour `t`: the fine series if present,
    /// otherwise the hourly draw spread evenly.
    pub fn fine_draw(&self, t: usize, s: usize) -> f64 {
        match self.fine.as_ref().and_then(|f| f.draws.as_ref()) {
            Some(p) => p.values()[t * 12 + s],
            None => self.draw(t) / 12.0,
        }
    }

    pub fn fine_outdoor(&self, t: usize, s: usize) -> f64 {
        match self.fine.as_ref().and_then(|f| f.outdoor_temp.as_ref()) {
            Some(p) => p.values()[t * 12 + s],
            None => self.outdoor(t),
        }
    }

    pub fn fine_sun(&self, t: usize, s: usize) -> f64 {
        match self.fine.as_ref().and_then(|f| f.irradiance.as_ref()) {
            Some(p) => p.values()[t * 12 + s],
            None => self.sun(t),
        }
    }
}
