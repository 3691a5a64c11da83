//! Per-run reports and their CSV/JSON forms.

use singosc::analysis::{AuditReport, RateEstimate};
use singosc::{Params, Regime, Status};

use crate::json::{fmt_float, Json};

/// Defaults stamped into every JSON report for provenance.
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_T_END: f64 = 200.0;
pub const DEFAULT_T_MAX: f64 = 1e4;

pub fn defaults_json() -> Json {
    Json::Object(vec![
        ("tol", Json::Float(DEFAULT_TOL)),
        ("t_end", Json::Float(DEFAULT_T_END)),
        ("t_max", Json::Float(DEFAULT_T_MAX)),
    ])
}

/// Everything one sweep entry (or one classify run) produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub grid_index: usize,
    pub params: Params,
    pub u0: f64,
    pub du0: f64,
    pub t_end: f64,
    pub tol: f64,
    pub regime_theoretical: Regime,
    /// "Completed", "EnergyFloorReached", "StepFailure" or "SkippedIllPosed".
    pub outcome: &'static str,
    /// Always populated; OutsideTheory when no usable trajectory evidence
    /// exists (skipped or unclassifiable runs).
    pub regime_empirical: Regime,
    pub u_zero_count: Option<usize>,
    pub du_zero_count: Option<usize>,
    pub fit_energy: Option<RateEstimate>,
    pub fit_u: Option<RateEstimate>,
    pub fit_du: Option<RateEstimate>,
    pub audit: Option<AuditReport>,
}

impl RunReport {
    pub fn outcome_of(status: Status) -> &'static str {
        status.as_str()
    }

    pub fn csv_header() -> &'static str {
        "grid_index,l,alpha,beta,c,d,u0,du0,t_end,tol,status,regime_theoretical,regime_empirical,\
         u_zero_count,du_zero_count,exp_energy,r2_energy,exp_u,r2_u,exp_du,r2_du,\
         max_energy_increase,dissipation_residual,tail_liminf,alpha_star,critical_c0"
    }

    pub fn csv_row(&self) -> String {
        let f = fmt_float;
        let opt_count = |v: &Option<usize>| v.map_or(String::new(), |n| n.to_string());
        let fit_cols = |v: &Option<RateEstimate>| match v {
            None => ",".to_string(),
            Some(r) => format!("{},{}", f(r.exponent), f(r.goodness)),
        };
        let audit_cols = match &self.audit {
            None => ",,".to_string(),
            Some(a) => format!(
                "{},{},{}",
                f(a.max_energy_increase),
                f(a.dissipation_residual),
                a.tail_liminf_statistic.map_or(String::new(), f)
            ),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.grid_index,
            f(self.params.l),
            f(self.params.alpha),
            f(self.params.beta),
            f(self.params.c),
            f(self.params.d),
            f(self.u0),
            f(self.du0),
            f(self.t_end),
            f(self.tol),
            self.outcome,
            self.regime_theoretical.as_str(),
            self.regime_empirical.as_str(),
            opt_count(&self.u_zero_count),
            opt_count(&self.du_zero_count),
            fit_cols(&self.fit_energy),
            fit_cols(&self.fit_u),
            fit_cols(&self.fit_du),
            audit_cols,
            f(singosc::model::alpha_star(&self.params)),
            f(singosc::model::critical_c0(&self.params)),
        )
    }

    pub fn to_json(&self) -> Json {
        Json::Object(vec![
            ("grid_index", Json::Int(self.grid_index as i64)),
            ("l", Json::Float(self.params.l)),
            ("alpha", Json::Float(self.params.alpha)),
            ("beta", Json::Float(self.params.beta)),
            ("c", Json::Float(self.params.c)),
            ("d", Json::Float(self.params.d)),
            ("u0", Json::Float(self.u0)),
            ("du0", Json::Float(self.du0)),
            ("t_end", Json::Float(self.t_end)),
            ("tol", Json::Float(self.tol)),
            ("status", Json::Str(self.outcome.to_string())),
            (
                "regime_theoretical",
                Json::Str(self.regime_theoretical.as_str().to_string()),
            ),
            (
                "regime_empirical",
                Json::Str(self.regime_empirical.as_str().to_string()),
            ),
            (
                "u_zero_count",
                self.u_zero_count.map_or(Json::Null, |n| Json::Int(n as i64)),
            ),
            (
                "du_zero_count",
                self.du_zero_count.map_or(Json::Null, |n| Json::Int(n as i64)),
            ),
            ("fit_energy", rate_json(&self.fit_energy)),
            ("fit_u", rate_json(&self.fit_u)),
            ("fit_du", rate_json(&self.fit_du)),
            ("audit", audit_json(&self.audit)),
            ("defaults", defaults_json()),
        ])
    }
}

pub fn rate_json(r: &Option<RateEstimate>) -> Json {
    match r {
        None => Json::Null,
        Some(r) => Json::Object(vec![
            ("exponent", Json::Float(r.exponent)),
            ("amplitude", Json::Float(r.amplitude)),
            ("goodness", Json::Float(r.goodness)),
            (
                "window",
                Json::Array(vec![Json::Float(r.window.0), Json::Float(r.window.1)]),
            ),
        ]),
    }
}

pub fn audit_json(a: &Option<AuditReport>) -> Json {
    match a {
        None => Json::Null,
        Some(a) => Json::Object(vec![
            ("max_energy_increase", Json::Float(a.max_energy_increase)),
            ("dissipation_residual", Json::Float(a.dissipation_residual)),
            (
                "tail_liminf_statistic",
                Json::float_opt(a.tail_liminf_statistic),
            ),
            ("samples_used", Json::Int(a.samples_used as i64)),
        ]),
    }
}
