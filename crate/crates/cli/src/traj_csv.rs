//! Trajectory CSV: header `t,u,du,p,E`, one row per sample, floats at 17
//! significant digits.

use std::io::{self, BufRead, Write};

use singosc::model::velocity_from_flux;
use singosc::Trajectory;

use crate::json::fmt_float;

pub const HEADER: &str = "t,u,du,p,E";

pub fn write_trajectory<W: Write>(traj: &Trajectory, out: &mut W) -> io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for s in &traj.samples {
        let du = velocity_from_flux(&traj.params, s.p);
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_float(s.t),
            fmt_float(s.u),
            fmt_float(du),
            fmt_float(s.p),
            fmt_float(s.energy)
        )?;
    }
    Ok(())
}

/// One parsed row of a trajectory CSV.
#[derive(Debug, Clone, Copy)]
pub struct Row {
    pub t: f64,
    pub u: f64,
    pub du: f64,
    pub p: f64,
    pub e: f64,
}

/// Parse a trajectory CSV; the header must be exactly `t,u,du,p,E`.
pub fn read_rows<R: BufRead>(input: R) -> io::Result<Vec<Row>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim_end() != HEADER {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("expected header `{HEADER}`"),
        ));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut f = line.split(',').map(|s| {
            s.trim().parse::<f64>().map_err(|e| {
                io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("line {}: {e}", lineno + 2),
                )
            })
        });
        let mut next = || {
            f.next().unwrap_or_else(|| {
                Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("line {}: missing field", lineno + 2),
                ))
            })
        };
        rows.push(Row {
            t: next()?,
            u: next()?,
            du: next()?,
            p: next()?,
            e: next()?,
        });
    }
    Ok(rows)
}

/// Grid-function CSV: header `t,value`.
pub fn write_grid_function<W: Write>(
    g: &singosc::constructor::GridFunction,
    out: &mut W,
) -> io::Result<()> {
    writeln!(out, "t,value")?;
    for (&t, &v) in g.nodes().iter().zip(g.values()) {
        writeln!(out, "{},{}", fmt_float(t), fmt_float(v))?;
    }
    Ok(())
}
