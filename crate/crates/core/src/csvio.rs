//! CSV schemas shared by the command-line driver and the plotting scripts.
//! Floats are written with 17 significant digits so they round-trip.

use std::io::{Read, Write};

use crate::diagnostics::FrontTrace;
use crate::discrete::StripGrid;
use crate::error::{Error, Result};
use crate::simulate::{ProbeSeries, State};
use crate::steady::SteadyState;

pub const SNAPSHOT_HEADER: [&str; 5] = ["t", "x", "y", "u", "v"];
pub const PROBE_HEADER: [&str; 3] = ["t", "probe_name", "value"];
pub const STEADY_HEADER: [&str; 4] = ["x", "y", "U", "V"];
pub const DISPERSION_HEADER: [&str; 5] = ["alpha", "R", "lambda", "residual", "iterations"];
pub const HALFPLANE_HEADER: [&str; 6] = ["alpha", "R", "lambda", "residual", "iterations", "converged"];
pub const SPEED_HEADER: [&str; 6] = ["mode", "R", "direction", "alpha_star", "c_star", "evaluations"];
pub const FRONT_HEADER: [&str; 3] = ["t", "pos_left", "pos_right"];
pub const SUMMARY_HEADER: [&str; 4] = ["c_hat", "stderr", "r2", "deviation"];

/// `{:.16e}`: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

/// Road rows (`y`, `v` empty) then field rows (`u` empty) per snapshot.
pub fn write_snapshots<W: Write>(out: W, grid: &StripGrid, snapshots: &[State]) -> Result<()> {
    let mut w = writer(out, &SNAPSHOT_HEADER)?;
    for s in snapshots {
        let t = fmt_f64(s.t);
        for i in 0..grid.nx {
            w.write_record([t.as_str(), &fmt_f64(grid.x(i)), "", &fmt_f64(s.u[i]), ""])?;
        }
        for j in 0..grid.ny {
            let y = fmt_f64(grid.y(j));
            for i in 0..grid.nx {
                w.write_record([t.as_str(), &fmt_f64(grid.x(i)), &y, "", &fmt_f64(s.v[j * grid.nx + i])])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_probes<W: Write>(out: W, series: &[ProbeSeries]) -> Result<()> {
    let mut w = writer(out, &PROBE_HEADER)?;
    if let Some(first) = series.first() {
        for k in 0..first.times.len() {
            for s in series {
                w.write_record([fmt_f64(s.times[k]), s.name.to_string(), fmt_f64(s.values[k])])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_steady<W: Write>(out: W, steady: &SteadyState) -> Result<()> {
    let grid = &steady.grid;
    let mut w = writer(out, &STEADY_HEADER)?;
    for i in 0..grid.nx {
        w.write_record([fmt_f64(grid.x(i)), String::new(), fmt_f64(steady.u[i]), String::new()])?;
    }
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            w.write_record([
                fmt_f64(grid.x(i)),
                fmt_f64(grid.y(j)),
                String::new(),
                fmt_f64(steady.v[j * grid.nx + i]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionRow {
    pub alpha: f64,
    pub width: f64,
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
}

pub fn write_dispersion<W: Write>(out: W, rows: &[DispersionRow]) -> Result<()> {
    let mut w = writer(out, &DISPERSION_HEADER)?;
    for r in rows {
        w.write_record([
            fmt_f64(r.alpha),
            fmt_f64(r.width),
            fmt_f64(r.lambda),
            fmt_f64(r.residual),
            r.iterations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per width of the schedule; `converged` repeats the flag of the limit.
pub fn write_halfplane<W: Write>(out: W, rows: &[(DispersionRow, bool)]) -> Result<()> {
    let mut w = writer(out, &HALFPLANE_HEADER)?;
    for (r, converged) in rows {
        w.write_record([
            fmt_f64(r.alpha),
            fmt_f64(r.width),
            fmt_f64(r.lambda),
            fmt_f64(r.residual),
            r.iterations.to_string(),
            converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeedRow {
    pub mode: String,
    /// Strip width; `None` for the half-plane.
    pub width: Option<f64>,
    pub direction: String,
    pub alpha_star: f64,
    pub c_star: f64,
    pub evaluations: usize,
}

pub fn write_speed<W: Write>(out: W, rows: &[SpeedRow]) -> Result<()> {
    let mut w = writer(out, &SPEED_HEADER)?;
    for r in rows {
        w.write_record([
            r.mode.clone(),
            r.width.map(fmt_f64).unwrap_or_default(),
            r.direction.clone(),
            fmt_f64(r.alpha_star),
            fmt_f64(r.c_star),
            r.evaluations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_front<W: Write>(out: W, trace: &FrontTrace) -> Result<()> {
    let mut w = writer(out, &FRONT_HEADER)?;
    for k in 0..trace.times.len() {
        w.write_record([fmt_f64(trace.times[k]), fmt_f64(trace.pos_left[k]), fmt_f64(trace.pos_right[k])])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub c_hat: f64,
    pub stderr: f64,
    pub r2: f64,
    pub deviation: Option<f64>,
}

pub fn write_summary<W: Write>(out: W, s: &Summary) -> Result<()> {
    let mut w = writer(out, &SUMMARY_HEADER)?;
    w.write_record([
        fmt_f64(s.c_hat),
        fmt_f64(s.stderr),
        fmt_f64(s.r2),
        s.deviation.map(fmt_f64).unwrap_or_default(),
    ])?;
    w.flush()?;
    Ok(())
}

/// One parsed line of a snapshot file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SnapshotRow {
    Road { t: f64, x: f64, u: f64 },
    Field { t: f64, x: f64, y: f64, v: f64 },
}

fn bad(line: u64, msg: impl std::fmt::Display) -> Error {
    Error::Diagnostics(format!("snapshot CSV line {line}: {msg}"))
}

fn parse_num(field: &str, name: &str, line: u64) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| bad(line, format_args!("column {name} is not a number: {field:?}")))?;
    if v.is_nan() {
        return Err(bad(line, format_args!("column {name} is NaN")));
    }
    Ok(v)
}

/// Parses a `t,x,y,u,v` file. Road rows leave `y` and `v` empty, field rows
/// leave `u` empty.
pub fn read_snapshots<R: Read>(input: R) -> Result<Vec<SnapshotRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().map(str::trim).ne(SNAPSHOT_HEADER) {
        return Err(Error::Diagnostics(format!(
            "snapshot CSV header must be t,x,y,u,v (got {})",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let col = |k: usize| rec.get(k).unwrap_or("").trim();
        let t = parse_num(col(0), "t", line)?;
        let x = parse_num(col(1), "x", line)?;
        let row = match (col(2).is_empty(), col(3).is_empty(), col(4).is_empty()) {
            (true, false, true) => SnapshotRow::Road {
                t,
                x,
                u: parse_num(col(3), "u", line)?,
            },
            (false, true, false) => SnapshotRow::Field {
                t,
                x,
                y: parse_num(col(2), "y", line)?,
                v: parse_num(col(4), "v", line)?,
            },
            _ => return Err(bad(line, "expected either (y, v) empty or u empty")),
        };
        rows.push(row);
    }
    Ok(rows)
}

/// Road profile of one snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct RoadProfile {
    pub t: f64,
    pub xs: Vec<f64>,
    pub us: Vec<f64>,
}

/// Groups road rows by time, in file order; `x` must increase within a group.
pub fn road_profiles(rows: &[SnapshotRow]) -> Result<Vec<RoadProfile>> {
    let mut out: Vec<RoadProfile> = Vec::new();
    for row in rows {
        let SnapshotRow::Road { t, x, u } = *row else {
            continue;
        };
        match out.last_mut() {
            Some(p) if p.t == t => {
                if !(x > *p.xs.last().unwrap()) {
                    return Err(Error::Diagnostics(format!(
                        "road positions must increase within a snapshot (t={t}, x={x})"
                    )));
                }
                p.xs.push(x);
                p.us.push(u);
            }
            _ => {
                if out.iter().any(|p| p.t == t) {
                    return Err(Error::Diagnostics(format!("snapshot t={t} is split across the file")));
                }
                out.push(RoadProfile {
                    t,
                    xs: vec![x],
                    us: vec![u],
                });
            }
        }
    }
    Ok(out)
}
