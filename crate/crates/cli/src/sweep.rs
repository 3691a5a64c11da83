//! Parameter sweeps: a JSON grid file expands to the Cartesian product in
//! lexicographic order (l, alpha, beta, c, d, ic); entries run isolated and
//! concurrently up to the requested job count, and results are emitted in
//! grid order, so the output is byte-identical for any --jobs value.

use rayon::prelude::*;
use serde::Deserialize;

use singosc::analysis::{classify_empirical, energy_audit, fit_decay_exponent};
use singosc::integrator::{integrate_with, IntegrateOptions};
use singosc::model::classify_theoretical;
use singosc::{Params, Regime, Trajectory};

use crate::report::RunReport;
use crate::CliError;

/// Grid file: explicit value lists, no range syntax.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub l: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    /// Initial conditions as [u0, du0] pairs.
    pub ics: Vec<(f64, f64)>,
    pub t_end: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    crate::report::DEFAULT_TOL
}

/// One expanded grid entry.
#[derive(Debug, Clone, Copy)]
pub struct Entry {
    pub index: usize,
    pub params: Params,
    pub u0: f64,
    pub du0: f64,
    pub t_end: f64,
    pub tol: f64,
}

impl SweepGrid {
    /// Expand to the Cartesian product; validates every parameter tuple up
    /// front so a bad grid fails before any work starts.
    pub fn entries(&self) -> Result<Vec<Entry>, CliError> {
        if self.l.is_empty()
            || self.alpha.is_empty()
            || self.beta.is_empty()
            || self.c.is_empty()
            || self.d.is_empty()
            || self.ics.is_empty()
        {
            return Err(CliError::Validation(
                "every grid axis needs at least one value".into(),
            ));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(CliError::Validation("grid t_end must be > 0".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::Validation("grid tol must be > 0".into()));
        }
        let mut out = Vec::new();
        let mut index = 0;
        for &l in &self.l {
            for &alpha in &self.alpha {
                for &beta in &self.beta {
                    for &c in &self.c {
                        for &d in &self.d {
                            for &(u0, du0) in &self.ics {
                                let params = Params::new(l, alpha, beta, c, d).map_err(|e| {
                                    CliError::Validation(format!("grid entry {index}: {e}"))
                                })?;
                                out.push(Entry {
                                    index,
                                    params,
                                    u0,
                                    du0,
                                    t_end: self.t_end,
                                    tol: self.tol,
                                });
                                index += 1;
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Samples per run used for audits and fits.
const SWEEP_SAMPLES: f64 = 20_000.0;

/// Run one grid entry to a report. Ill-posed parameter tuples classify
/// theoretically and skip the integration.
pub fn run_entry(e: &Entry) -> RunReport {
    let theoretical = classify_theoretical(&e.params);
    let mut report = RunReport {
        grid_index: e.index,
        params: e.params,
        u0: e.u0,
        du0: e.du0,
        t_end: e.t_end,
        tol: e.tol,
        regime_theoretical: theoretical,
        outcome: "SkippedIllPosed",
        regime_empirical: Regime::OutsideTheory,
        u_zero_count: None,
        du_zero_count: None,
        fit_energy: None,
        fit_u: None,
        fit_du: None,
        audit: None,
    };
    if !e.params.well_posed() {
        return report;
    }

    let opts = IntegrateOptions {
        tol: e.tol,
        sample_dt: Some(e.t_end / SWEEP_SAMPLES),
        ..IntegrateOptions::default()
    };
    let traj = match integrate_with(&e.params, e.u0, e.du0, e.t_end, &opts) {
        Ok(t) => t,
        Err(_) => return report,
    };
    report.outcome = RunReport::outcome_of(traj.status);
    report.u_zero_count = Some(traj.u_zeros.len());
    report.du_zero_count = Some(traj.du_zeros.len());
    report.regime_empirical =
        classify_empirical(&e.params, &traj, 1).unwrap_or(Regime::OutsideTheory);
    report.audit = energy_audit(&e.params, &traj, 0.25).ok();

    let window = (e.t_end / 4.0, e.t_end);
    report.fit_energy = fit_series(&traj, window, |s, _| s.energy);
    report.fit_u = fit_series(&traj, window, |s, _| s.u.abs());
    report.fit_du = fit_series(&traj, window, |s, t| s.du(&t.params).abs());
    report
}

fn fit_series(
    traj: &Trajectory,
    window: (f64, f64),
    value: impl Fn(&singosc::Sample, &Trajectory) -> f64,
) -> Option<singosc::analysis::RateEstimate> {
    let series: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .map(|s| (s.t, value(s, traj)))
        .collect();
    fit_decay_exponent(&series, window).ok()
}

/// Run the whole grid with an isolated thread pool of `jobs` workers.
/// Reports come back in grid order regardless of scheduling.
pub fn run_sweep(grid: &SweepGrid, jobs: usize) -> Result<Vec<RunReport>, CliError> {
    let entries = grid.entries()?;
    if jobs == 0 {
        return Err(CliError::Validation("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    Ok(pool.install(|| entries.par_iter().map(run_entry).collect()))
}

/// Render reports as the sweep CSV (header + one row per entry, grid order).
pub fn sweep_csv(reports: &[RunReport]) -> String {
    let mut out = String::new();
    out.push_str(RunReport::csv_header());
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_grid() -> SweepGrid {
        serde_json::from_str(
            r#"{
                "l": [0.0], "alpha": [0.5, 1.0], "beta": [1.0],
                "c": [1.0], "d": [1.0, 2.0],
                "ics": [[1.0, 0.0]],
                "t_end": 20.0, "tol": 1e-8
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn entries_enumerate_lexicographically() {
        let grid = tiny_grid();
        let entries = grid.entries().unwrap();
        assert_eq!(entries.len(), 4);
        assert_eq!(entries[0].params.alpha, 0.5);
        assert_eq!(entries[0].params.d, 1.0);
        assert_eq!(entries[1].params.alpha, 0.5);
        assert_eq!(entries[1].params.d, 2.0);
        assert_eq!(entries[2].params.alpha, 1.0);
        assert!(entries.iter().enumerate().all(|(i, e)| e.index == i));
    }

    #[test]
    fn sweep_output_independent_of_jobs() {
        let grid = tiny_grid();
        let a = sweep_csv(&run_sweep(&grid, 1).unwrap());
        let b = sweep_csv(&run_sweep(&grid, 4).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 5);
    }

    #[test]
    fn empty_axis_is_rejected() {
        let grid: SweepGrid = serde_json::from_str(
            r#"{"l": [], "alpha": [1.0], "beta": [1.0], "c": [1.0], "d": [1.0],
                "ics": [[1.0, 0.0]], "t_end": 10.0}"#,
        )
        .unwrap();
        assert!(grid.entries().is_err());
    }
}
