//! Subcommand implementations. Each returns the JSON/CSV text it would print
//! so the binary and the tests share one code path.

use std::fs;
use std::io::BufReader;
use std::path::Path;

use singosc::analysis::{classify_empirical, energy_audit, fit_decay_exponent};
use singosc::constructor::{build_fast_solution, phi_cap, FastSolutionOptions};
use singosc::integrator::integrate;
use singosc::model::{
    alpha_star, asymptotic_constants, classify_theoretical, critical_c0,
};
use singosc::regions::{region_certificate, region_invariance_test, RegionSpec};
use singosc::math::pow_abs;
use singosc::{Params, Status};

use crate::json::Json;
use crate::report::{defaults_json, rate_json, DEFAULT_T_END, DEFAULT_TOL};
use crate::sweep::{run_sweep, sweep_csv, SweepGrid};
use crate::traj_csv;
use crate::CliError;

fn params_json_fields(p: &Params) -> Vec<(&'static str, Json)> {
    vec![
        ("l", Json::Float(p.l)),
        ("alpha", Json::Float(p.alpha)),
        ("beta", Json::Float(p.beta)),
        ("c", Json::Float(p.c)),
        ("d", Json::Float(p.d)),
    ]
}

fn status_guard(status: Status) -> Result<(), CliError> {
    if status == Status::StepFailure {
        Err(CliError::Numerical(
            "step size underflow; trajectory truncated".into(),
        ))
    } else {
        Ok(())
    }
}

/// `simulate`: integrate and render the trajectory CSV.
pub fn simulate(
    params: &Params,
    u0: f64,
    du0: f64,
    t_end: f64,
    tol: f64,
) -> Result<String, CliError> {
    let traj = integrate(params, u0, du0, t_end, tol)?;
    let mut buf = Vec::new();
    traj_csv::write_trajectory(&traj, &mut buf)
        .map_err(|e| CliError::Io(format!("trajectory serialization: {e}")))?;
    status_guard(traj.status)?;
    Ok(String::from_utf8(buf).expect("csv is ascii"))
}

/// Options for `classify --empirical`.
pub struct EmpiricalRun {
    pub u0: f64,
    pub du0: f64,
    pub t_end: f64,
    pub tol: f64,
}

/// `classify`: theoretical regime, optionally backed by an integration.
/// Without the empirical run this never integrates.
pub fn classify(params: &Params, empirical: Option<&EmpiricalRun>) -> Result<Json, CliError> {
    let mut fields = params_json_fields(params);
    fields.push(("alpha_star", Json::Float(alpha_star(params))));
    fields.push(("critical_c0", Json::Float(critical_c0(params))));
    fields.push(("well_posed", Json::Bool(params.well_posed())));
    fields.push((
        "regime_theoretical",
        Json::Str(classify_theoretical(params).as_str().to_string()),
    ));
    if let Ok(k) = asymptotic_constants(params) {
        fields.push(("k_u", Json::Float(k.k_u)));
        fields.push(("k_du", Json::Float(k.k_du)));
    }

    if let Some(run) = empirical {
        let traj = integrate(params, run.u0, run.du0, run.t_end, run.tol)?;
        fields.push(("u0", Json::Float(run.u0)));
        fields.push(("du0", Json::Float(run.du0)));
        fields.push(("t_end", Json::Float(run.t_end)));
        fields.push(("tol", Json::Float(run.tol)));
        fields.push(("status", Json::Str(traj.status.as_str().to_string())));
        let emp = classify_empirical(params, &traj, 1)
            .map(|r| r.as_str().to_string())
            .unwrap_or_else(|e| format!("Unclassified: {e}"));
        fields.push(("regime_empirical", Json::Str(emp)));
        fields.push(("u_zero_count", Json::Int(traj.u_zeros.len() as i64)));
        fields.push(("du_zero_count", Json::Int(traj.du_zeros.len() as i64)));
        fields.push((
            "u_zeros",
            Json::Array(traj.u_zeros.iter().copied().map(Json::Float).collect()),
        ));
        fields.push((
            "du_zeros",
            Json::Array(traj.du_zeros.iter().copied().map(Json::Float).collect()),
        ));
        if let Ok(audit) = energy_audit(params, &traj, 0.25) {
            fields.push(("audit", crate::report::audit_json(&Some(audit))));
        }
        status_guard(traj.status)?;
    }
    fields.push(("defaults", defaults_json()));
    Ok(Json::Object(fields))
}

/// Which column `rate` fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Series {
    Energy,
    U,
    Du,
}

impl Series {
    pub fn name(&self) -> &'static str {
        match self {
            Series::Energy => "E",
            Series::U => "u",
            Series::Du => "du",
        }
    }
}

/// `rate`: power-law fit of a stored trajectory column over a window.
/// u and du are fitted in absolute value.
pub fn rate(traj_path: &Path, series: Series, window: (f64, f64)) -> Result<Json, CliError> {
    let file = fs::File::open(traj_path).map_err(crate::io_err(traj_path))?;
    let rows = traj_csv::read_rows(BufReader::new(file)).map_err(crate::io_err(traj_path))?;
    let data: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| {
            let v = match series {
                Series::Energy => r.e,
                Series::U => r.u.abs(),
                Series::Du => r.du.abs(),
            };
            (r.t, v)
        })
        .collect();
    let fit = fit_decay_exponent(&data, window)?;
    Ok(Json::Object(vec![
        ("traj", Json::Str(traj_path.display().to_string())),
        ("series", Json::Str(series.name().to_string())),
        ("n_rows", Json::Int(rows.len() as i64)),
        ("fit", rate_json(&Some(fit))),
        (
            "conclusive",
            Json::Bool(fit.goodness >= singosc::analysis::CONCLUSIVE_R2),
        ),
        ("defaults", defaults_json()),
    ]))
}

/// Artifacts produced by `construct-fast`.
pub struct ConstructArtifacts {
    pub summary: Json,
    pub csvs: Vec<(String, String)>,
}

/// `construct-fast`: build the fast solution (c = d = 1) and report the
/// fitted late-time exponent and the asymptotic-constant ratio.
#[allow(clippy::too_many_arguments)]
pub fn construct_fast(
    l: f64,
    alpha: f64,
    beta: f64,
    phi_arg: Option<f64>,
    t_max: f64,
    eps_fp: Option<f64>,
    max_iter: usize,
    fp_tol: f64,
    out_prefix: Option<&str>,
) -> Result<ConstructArtifacts, CliError> {
    let params = Params::new(l, alpha, beta, 1.0, 1.0)?;
    let phi = match phi_arg {
        Some(v) => v,
        None => phi_cap(&params)?,
    };
    let opts = FastSolutionOptions {
        t_max,
        eps_fp,
        max_iter,
        fp_tol,
        ..FastSolutionOptions::default()
    };
    let sol = build_fast_solution(&params, phi, &opts)?;

    // late-window diagnostics on |u'|
    let gap = alpha - l;
    let window = (t_max / 4.0, t_max / 2.0);
    let du_series: Vec<(f64, f64)> = sol
        .du
        .nodes()
        .iter()
        .zip(sol.du.values())
        .map(|(&t, &v)| (t, v.abs()))
        .collect();
    let fit_du = fit_decay_exponent(&du_series, window).ok();
    let k_du = asymptotic_constants(&params).map(|k| k.k_du).ok();
    let ratio_median = k_du.and_then(|k| {
        let mut ratios: Vec<f64> = du_series
            .iter()
            .filter(|(t, _)| *t >= window.0 && *t <= window.1)
            .map(|&(t, v)| pow_abs(t, 1.0 / gap) * v / k)
            .collect();
        if ratios.is_empty() {
            None
        } else {
            ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
            Some(ratios[ratios.len() / 2])
        }
    });

    let summary = Json::Object(vec![
        ("l", Json::Float(l)),
        ("alpha", Json::Float(alpha)),
        ("beta", Json::Float(beta)),
        ("phi", Json::Float(sol.phi)),
        ("phi_cap", Json::Float(phi_cap(&params)?)),
        ("t_max", Json::Float(t_max)),
        ("n_nodes", Json::Int(sol.v.len() as i64)),
        ("eps_fp", Json::Float(sol.eps_fp)),
        ("c_est", Json::Float(sol.c_est)),
        ("iterations", Json::Int(sol.iterations as i64)),
        ("residual", Json::Float(sol.residual)),
        ("fit_du", rate_json(&fit_du)),
        ("expected_du_exponent", Json::Float(-1.0 / gap)),
        ("k_du", Json::float_opt(k_du)),
        ("constant_ratio_median", Json::float_opt(ratio_median)),
        ("defaults", defaults_json()),
    ]);

    let mut csvs = Vec::new();
    if let Some(prefix) = out_prefix {
        for (name, g) in [("v", &sol.v), ("u", &sol.u), ("du", &sol.du)] {
            let mut buf = Vec::new();
            traj_csv::write_grid_function(g, &mut buf)
                .map_err(|e| CliError::Io(format!("grid serialization: {e}")))?;
            csvs.push((
                format!("{prefix}{name}.csv"),
                String::from_utf8(buf).expect("csv is ascii"),
            ));
        }
    }
    Ok(ConstructArtifacts { summary, csvs })
}

/// Default boundary slack fraction for the invariance simulation.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-3;

/// `region-check`: boundary certificate, optionally plus direct invariance
/// simulation of sampled initial conditions.
pub fn region_check(
    params: &Params,
    eps_r: f64,
    slope: f64,
    n_samples: usize,
    invariance: Option<(usize, f64)>,
) -> Result<Json, CliError> {
    let spec = RegionSpec::new(eps_r, slope)?;
    let cert = region_certificate(params, &spec, n_samples)?;
    let mut fields = params_json_fields(params);
    fields.push(("M", Json::Float(slope)));
    fields.push(("eps_r", Json::Float(eps_r)));
    fields.push(("exponent_damping", Json::Float(cert.exponents.0)));
    fields.push(("exponent_restoring", Json::Float(cert.exponents.1)));
    let pieces: Vec<Json> = cert
        .pieces
        .iter()
        .map(|p| {
            Json::Object(vec![
                ("piece", Json::Str(p.name.to_string())),
                ("samples", Json::Int(p.samples as i64)),
                ("worst_margin", Json::Float(p.worst_margin)),
                ("pass", Json::Bool(p.pass)),
            ])
        })
        .collect();
    fields.push(("pieces", Json::Array(pieces)));
    fields.push(("pass", Json::Bool(cert.pass)));

    if let Some((n_ics, t_end)) = invariance {
        let rep = region_invariance_test(params, &spec, n_ics, t_end, DEFAULT_BOUNDARY_TOL)?;
        let runs: Vec<Json> = rep
            .runs
            .iter()
            .map(|r| {
                Json::Object(vec![
                    ("u0", Json::Float(r.u0)),
                    ("du0", Json::Float(r.du0)),
                    ("contained", Json::Bool(r.contained)),
                    ("worst_violation", Json::Float(r.worst_violation)),
                    ("fitted_exponent", Json::float_opt(r.fitted_exponent)),
                    ("goodness", Json::float_opt(r.goodness)),
                ])
            })
            .collect();
        fields.push((
            "invariance",
            Json::Object(vec![
                ("n_ics", Json::Int(n_ics as i64)),
                ("t_end", Json::Float(t_end)),
                ("boundary_tol", Json::Float(DEFAULT_BOUNDARY_TOL)),
                ("contained_fraction", Json::Float(rep.contained_fraction)),
                ("slow_rate", Json::Float(rep.slow_rate)),
                ("fast_rate", Json::Float(rep.fast_rate)),
                ("runs", Json::Array(runs)),
            ]),
        ));
    }
    fields.push(("defaults", defaults_json()));
    Ok(Json::Object(fields))
}

/// `sweep`: expand the grid file and render the CSV.
pub fn sweep(grid_path: &Path, jobs: usize) -> Result<String, CliError> {
    let text = fs::read_to_string(grid_path).map_err(crate::io_err(grid_path))?;
    let grid: SweepGrid = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", grid_path.display())))?;
    let reports = run_sweep(&grid, jobs)?;
    Ok(sweep_csv(&reports))
}

/// Shared helper for flags -> validated params.
pub fn make_params(l: f64, alpha: f64, beta: f64, c: f64, d: f64) -> Result<Params, CliError> {
    Ok(Params::new(l, alpha, beta, c, d)?)
}

/// Defaults used by the CLI surface.
pub fn default_tol() -> f64 {
    DEFAULT_TOL
}

pub fn default_t_end() -> f64 {
    DEFAULT_T_END
}
