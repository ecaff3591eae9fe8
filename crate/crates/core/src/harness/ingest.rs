//! CSV series ingestion: `timestamp,value` rows after a header.

use std::io::Write;
use std::path::Path;

use chrono::NaiveDateTime;

use crate::config::InputPaths;
use crate::domain::{LoadProfile, Role, TimeGrid, FIVE_MINUTES, HOURLY};
use crate::error::{Error, Result};
use crate::profiles::{FineProfiles, ProfileBundle};

const FORMATS: [&str; 4] = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"];

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    FORMATS.iter().find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

/// Parses one series. Errors carry the 1-based line number of the offending row.
pub fn parse_series(text: &str, path: &Path, role: Role) -> Result<LoadProfile> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() != 2 || parse_timestamp(cols[0]).is_some() {
        return Err(err(hline + 1, "expected a `timestamp,value` header row".into()));
    }

    let mut stamps: Vec<(usize, NaiveDateTime)> = Vec::new();
    let mut values = Vec::new();
    for (n, line) in lines {
        let line_no = n + 1;
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(err(line_no, format!("expected 2 columns, found {}", cols.len())));
        }
        let ts = parse_timestamp(cols[0]).ok_or_else(|| err(line_no, format!("bad timestamp `{}`", cols[0])))?;
        let v: f64 = cols[1]
            .parse()
            .map_err(|_| err(line_no, format!("bad value `{}`", cols[1])))?;
        if !v.is_finite() {
            return Err(err(line_no, format!("non-finite value `{}`", cols[1])));
        }
        if let Some(&(_, prev)) = stamps.last() {
            if ts == prev {
                return Err(err(line_no, format!("duplicate timestamp {ts}")));
            }
            if ts < prev {
                return Err(err(line_no, format!("timestamp {ts} goes backwards")));
            }
        }
        stamps.push((line_no, ts));
        values.push(v);
    }
    if stamps.len() < 2 {
        return Err(err(hline + 1, "need at least two rows to infer the time step".into()));
    }
    let step = (stamps[1].1 - stamps[0].1).num_seconds();
    for w in stamps.windows(2) {
        if (w[1].1 - w[0].1).num_seconds() != step {
            return Err(err(w[1].0, format!("irregular spacing: expected a {step}s step")));
        }
    }
    let step = u32::try_from(step).map_err(|_| err(stamps[1].0, "time step out of range".into()))?;
    let grid = TimeGrid::new(stamps[0].1, step, values.len()).map_err(|e| err(stamps[1].0, e.to_string()))?;
    LoadProfile::new(grid, values, role).map_err(|e| match e {
        Error::OutOfRange { step, value, .. } => err(stamps[step].0, format!("negative value {value}")),
        other => other,
    })
}

pub fn read_series(path: &Path, role: Role) -> Result<LoadProfile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_series(&text, path, role)
}

pub fn write_series<W: Write>(profile: &LoadProfile, mut out: W) -> std::io::Result<()> {
    writeln!(out, "timestamp,value")?;
    for (t, v) in profile.values().iter().enumerate() {
        writeln!(out, "{},{}", profile.grid().timestamp(t).format("%Y-%m-%dT%H:%M:%S"), v)?;
    }
    Ok(())
}

/// Sums blocks of a draw series (litres) onto `step_seconds`.
fn resample_sum(p: &LoadProfile, step_seconds: u32) -> Result<LoadProfile> {
    let mean = p.resample_mean(step_seconds)?;
    let factor = (step_seconds / p.grid().step_seconds()) as f64;
    let values = mean.values().iter().map(|v| v * factor).collect();
    LoadProfile::new(*mean.grid(), values, p.role())
}

/// Hourly companion for control plus, for 5-minute input, the fine series
/// kept for dispatch.
fn companion(
    path: &Path,
    role: Role,
    load_grid: &TimeGrid,
    sum: bool,
) -> Result<(LoadProfile, Option<LoadProfile>)> {
    let p = read_series(path, role)?;
    let step = p.grid().step_seconds();
    let (hourly, fine) = match step {
        HOURLY => (p, None),
        FIVE_MINUTES => {
            let h = if sum { resample_sum(&p, HOURLY)? } else { p.resample_mean(HOURLY)? };
            (h, Some(p))
        }
        other => {
            return Err(Error::invalid(format!(
                "{}: unsupported {other}s step (hourly or 5-minute expected)",
                path.display()
            )))
        }
    };
    if hourly.grid() != load_grid {
        return Err(Error::invalid(format!(
            "{}: grid misaligned with the load (starts {}, {} hours; load starts {}, {} hours)",
            path.display(),
            hourly.grid().start(),
            hourly.len(),
            load_grid.start(),
            load_grid.count()
        )));
    }
    Ok((hourly, fine))
}

/// Reads and aligns the configured input files.
pub fn ingest_profiles(paths: &InputPaths) -> Result<ProfileBundle> {
    let load_path = paths
        .load
        .as_deref()
        .ok_or_else(|| Error::Config("no sensitive load file configured".into()))?;
    let raw = read_series(load_path, Role::Sensitive)?;
    let load = match raw.grid().step_seconds() {
        HOURLY => raw,
        FIVE_MINUTES => raw.resample_mean(HOURLY)?,
        other => {
            return Err(Error::invalid(format!(
                "{}: unsupported {other}s step (hourly or 5-minute expected)",
                load_path.display()
            )))
        }
    };
    let grid = *load.grid();
    let mut fine = FineProfiles {
        draws: None,
        outdoor_temp: None,
        irradiance: None,
    };
    let get = |p: &Option<std::path::PathBuf>, role, sum| -> Result<Option<(LoadProfile, Option<LoadProfile>)>> {
        p.as_deref().map(|p| companion(p, role, &grid, sum)).transpose()
    };
    let draws = get(&paths.draws, Role::HotWaterDraw, true)?;
    let outdoor = get(&paths.outdoor_temp, Role::OutdoorTemp, false)?;
    let sun = get(&paths.irradiance, Role::Irradiance, false)?;
    let split = |c: Option<(LoadProfile, Option<LoadProfile>)>, slot: &mut Option<LoadProfile>| {
        c.map(|(h, f)| {
            *slot = f;
            h
        })
    };
    let draws = split(draws, &mut fine.draws);
    let outdoor_temp = split(outdoor, &mut fine.outdoor_temp);
    let irradiance = split(sun, &mut fine.irradiance);
    let any_fine = fine.draws.is_some() || fine.outdoor_temp.is_some() || fine.irradiance.is_some();
    let bundle = ProfileBundle {
        load,
        draws,
        outdoor_temp,
        irradiance,
        fine: any_fine.then_some(fine),
    };
    bundle.validate()?;
    Ok(bundle)
}

/// Writes a bundle as one CSV per role into `dir`, returning the paths.
pub fn write_bundle(bundle: &ProfileBundle, dir: &Path) -> Result<InputPaths> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let put = |name: &str, p: &LoadProfile| -> Result<std::path::PathBuf> {
        let path = dir.join(name);
        let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_series(p, std::io::BufWriter::new(f)).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    };
    Ok(InputPaths {
        load: Some(put("load.csv", &bundle.load)?),
        draws: bundle.draws.as_ref().map(|p| put("draws.csv", p)).transpose()?,
        outdoor_temp: bundle.outdoor_temp.as_ref().map(|p| put("outdoor_temp.csv", p)).transpose()?,
        irradiance: bundle.irradiance.as_ref().map(|p| put("irradiance.csv", p)).transpose()?,
    })
}
