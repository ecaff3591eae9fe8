//! Per-run CSV emission. Floats use the shortest round-trip representation,
//! so re-reading a file reproduces the committed values bit for bit.

use std::io::{Read, Write};

use super::run::RunOutput;
use crate::error::{Error, Result};

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io("<csv stream>", e),
        other => Error::invalid(format!("csv: {other:?}")),
    }
}

pub const PROFILE_HEADER: [&str; 18] = [
    "timestamp", "x", "y", "s", "s_ess", "s_ewh", "s_erh", "p_charge", "p_discharge", "charging", "u_low",
    "u_up", "u_erh", "energy", "t_low", "t_up", "t_in", "status",
];

/// Committed profiles: loads, device set-points and end-of-step states.
pub fn write_profiles_csv<W: Write>(run: &RunOutput, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROFILE_HEADER).map_err(csv_err)?;
    for r in &run.steps {
        let c = &r.committed;
        w.write_record([
            r.timestamp.format("%Y-%m-%dT%H:%M:%S").to_string(),
            c.x.to_string(),
            c.y.to_string(),
            c.s.to_string(),
            c.s_ess.to_string(),
            c.s_ewh.to_string(),
            c.s_erh.to_string(),
            c.p_charge.to_string(),
            c.p_discharge.to_string(),
            u8::from(c.charging).to_string(),
            c.u_low.to_string(),
            c.u_up.to_string(),
            c.u_erh.to_string(),
            opt(r.energy),
            opt(r.t_low),
            opt(r.t_up),
            opt(r.t_in),
            r.status.name().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv stream>", e))
}

/// Objective terms and solver diagnostics of every step.
pub fn write_breakdown_csv<W: Write>(run: &RunOutput, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "timestamp",
        "cost",
        "privacy",
        "comfort",
        "status",
        "gap",
        "nodes",
        "max_kkt",
        "projection",
        "comfort_violation",
    ])
    .map_err(csv_err)?;
    for r in &run.steps {
        let b = &r.breakdown;
        w.write_record([
            r.timestamp.format("%Y-%m-%dT%H:%M:%S").to_string(),
            b.cost.to_string(),
            b.privacy.to_string(),
            b.comfort.to_string(),
            r.status.name().to_string(),
            r.gap.to_string(),
            r.nodes.to_string(),
            r.max_kkt.to_string(),
            r.projection.to_string(),
            r.comfort_violation.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv stream>", e))
}

/// Reads `(x, y)` back from a profiles CSV.
pub fn read_profiles_xy<R: Read>(input: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::invalid(format!("profiles csv has no `{name}` column")))
    };
    let (ix, iy) = (col("x")?, col("y")?);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .unwrap_or("")
                .parse()
                .map_err(|_| Error::Parse {
                    path: "<profiles csv>".into(),
                    line: n + 2,
                    msg: format!("bad number `{}`", rec.get(i).unwrap_or("")),
                })
        };
        x.push(parse(ix)?);
        y.push(parse(iy)?);
    }
    Ok((x, y))
}

/// One row per report, full precision.
pub fn write_reports_csv<W: Write>(reports: &[&super::run::RunReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv stream>", e))
}
