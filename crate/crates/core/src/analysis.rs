//! Trajectory post-processing: energy-law audit, decay-rate fits, empirical
//! oscillation classification, polar diagnostics.
//!
//! The energy E = ((l+1)/(l+2))|u'|^{l+2} + (d/(beta+2))|u|^{beta+2} obeys
//! E' = -c|u'|^{alpha+2} <= 0 along solutions, so a trajectory is audited by
//! (i) the largest energy increase between consecutive samples, (ii) the
//! defect of E(t) - E(0) against trapezoidal quadrature of -c|u'|^{alpha+2},
//! and (iii) the tail statistic min t^{(l+2)/(alpha-l)} E(t), whose positive
//! lower bound is the sharp-rate certificate for alpha > l.
//!
//! Rates are measured as least-squares slopes of log(value) against log(t):
//! the model is value ~ amplitude · t^exponent over a window.

use alloc::vec::Vec;

use crate::error::Error;
use crate::integrator::{State, Trajectory};
use crate::math::{pow_abs, sgn, signed_pow};
use crate::model::{Params, Regime};

/// Fitted power law value ~ amplitude · t^exponent over [window.0, window.1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub exponent: f64,
    pub amplitude: f64,
    /// Coefficient of determination of the log-log fit, in [0, 1].
    pub goodness: f64,
    pub window: (f64, f64),
}

/// Polar representation: x = sqrt(d(l+2)/((beta+2)(l+1)))|u|^{beta/2}u = r cos(theta),
/// y = |u'|^{l/2}u' = r sin(theta), so that r^2 = ((l+2)/(l+1)) E.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarState {
    pub r: f64,
    /// In (-pi, pi]; 0 by convention when r = 0.
    pub theta: f64,
}

/// Energy-law audit statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditReport {
    /// max(0, max_k E(t_{k+1}) - E(t_k)).
    pub max_energy_increase: f64,
    /// max_k |E(t_k) - E(0) + c·Q_k|, Q_k the running trapezoid of |u'|^{alpha+2}.
    pub dissipation_residual: f64,
    /// min over tail samples of t^{(l+2)/(alpha-l)}·E(t); absent when alpha <= l.
    pub tail_liminf_statistic: Option<f64>,
    /// Number of samples inspected.
    pub samples_used: usize,
}

/// Audit a trajectory against the dissipation law. `tail_fraction` in (0, 1]
/// selects the trailing part of the span for the liminf statistic.
pub fn energy_audit(
    params: &Params,
    traj: &Trajectory,
    tail_fraction: f64,
) -> Result<AuditReport, Error> {
    if traj.samples.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: traj.samples.len(),
        });
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::DomainError("tail_fraction must be in (0, 1]"));
    }

    let e0 = traj.samples[0].energy;
    let mut max_inc = 0.0f64;
    let mut resid = 0.0f64;
    let mut q = 0.0;
    let mut prev = &traj.samples[0];
    let mut prev_f = pow_abs(prev.du(params), params.alpha + 2.0);
    for s in &traj.samples[1..] {
        let f = pow_abs(s.du(params), params.alpha + 2.0);
        q += 0.5 * (prev_f + f) * (s.t - prev.t);
        max_inc = max_inc.max(s.energy - prev.energy);
        resid = resid.max(libm::fabs(s.energy - e0 + params.c * q));
        prev = s;
        prev_f = f;
    }

    let tail = if params.strict_gap() {
        let kappa = (params.l + 2.0) / (params.alpha - params.l);
        let t_lo = traj.t_last() - tail_fraction * (traj.t_last() - traj.t_first());
        let mut m = f64::INFINITY;
        for s in &traj.samples {
            if s.t >= t_lo {
                m = m.min(pow_abs(s.t, kappa) * s.energy);
            }
        }
        Some(m)
    } else {
        None
    };

    Ok(AuditReport {
        max_energy_increase: max_inc,
        dissipation_residual: resid,
        tail_liminf_statistic: tail,
        samples_used: traj.samples.len(),
    })
}

/// Least-squares fit of log(value) against log(t) over the window.
/// Needs at least 8 samples inside the window, all with t > 0 and value > 0.
pub fn fit_decay_exponent(
    series: &[(f64, f64)],
    window: (f64, f64),
) -> Result<RateEstimate, Error> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::DomainError("fit window must satisfy t_lo < t_hi"));
    }
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for &(t, v) in series {
        if t < lo || t > hi {
            continue;
        }
        if !(t > 0.0 && v > 0.0) {
            return Err(Error::NonPositiveValue { t, value: v });
        }
        xs.push(libm::log(t));
        ys.push(libm::log(v));
    }
    let n = xs.len();
    if n < 8 {
        return Err(Error::InsufficientData { needed: 8, got: n });
    }

    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DomainError("all fit abscissae coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = (syy - slope * sxy).max(0.0);
    let goodness = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateEstimate {
        exponent: slope,
        amplitude: libm::exp(intercept),
        goodness,
        window,
    })
}

/// R^2 above which a rate fit is conventionally reported as conclusive.
/// Reported, never enforced: oscillatory energies carry ripple on top of the
/// envelope trend, and the fit targets the trend.
pub const CONCLUSIVE_R2: f64 = 0.995;

/// Minimum span for the at-most-one-zero verdict.
pub const CRITICAL_T_MIN: f64 = 100.0;

/// Dyadic evidence windows start at max(t_first, span/20).
const WINDOW_START_DIV: f64 = 20.0;

/// Classify a trajectory empirically.
///
/// - Oscillatory: every dyadic window [T, 2T] inside the span holds at least
///   `min_window_zeros` zeros of u.
/// - NonOscillatoryFiniteZeros: the final half of the span has no zeros of u
///   or u' and sign(u)·sign(u') = -1 at every sample there.
/// - CriticalAtMostOneZero: at most one zero of u over a span of at least
///   [`CRITICAL_T_MIN`].
/// - OutsideTheory otherwise, and for the zero-energy (equilibrium)
///   trajectory, which carries no evidence either way.
pub fn classify_empirical(
    params: &Params,
    traj: &Trajectory,
    min_window_zeros: usize,
) -> Result<Regime, Error> {
    let _ = params;
    if traj.samples.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: traj.samples.len(),
        });
    }
    let t0 = traj.t_first();
    let t1 = traj.t_last();
    let span = t1 - t0;
    let w0 = (span / WINDOW_START_DIV).max(t0);
    if !(w0 > 0.0) || t1 < 4.0 * w0 {
        return Err(Error::SpanTooShort {
            span,
            required: 4.0 * w0,
        });
    }

    if traj.samples[0].energy == 0.0 {
        return Ok(Regime::OutsideTheory);
    }

    // oscillation evidence over dyadic windows
    let mut t = w0;
    let mut windows = 0usize;
    let mut oscillatory = true;
    while 2.0 * t <= t1 {
        let count = traj
            .u_zeros
            .iter()
            .filter(|&&z| z >= t && z <= 2.0 * t)
            .count();
        if count < min_window_zeros {
            oscillatory = false;
            break;
        }
        windows += 1;
        t *= 2.0;
    }
    if oscillatory && windows >= 2 {
        return Ok(Regime::Oscillatory);
    }

    // eventual monotone decay toward 0 from one side
    let t_mid = t0 + 0.5 * span;
    let clean_tail = !traj.u_zeros.iter().any(|&z| z >= t_mid)
        && !traj.du_zeros.iter().any(|&z| z >= t_mid);
    if clean_tail {
        let opposed = traj
            .samples
            .iter()
            .filter(|s| s.t >= t_mid)
            .all(|s| sgn(s.u) * sgn(s.p) == -1.0);
        if opposed {
            return Ok(Regime::NonOscillatoryFiniteZeros);
        }
    }

    if traj.u_zeros.len() <= 1 && span >= CRITICAL_T_MIN {
        return Ok(Regime::CriticalAtMostOneZero);
    }
    Ok(Regime::OutsideTheory)
}

/// Polar coordinates of a state; r = 0 maps to theta = 0 by convention.
pub fn to_polar(params: &Params, s: &State) -> PolarState {
    let du = s.du(params);
    let cx = libm::sqrt(
        params.d * (params.l + 2.0) / ((params.beta + 2.0) * (params.l + 1.0)),
    );
    let x = cx * signed_pow(s.u, params.beta / 2.0 + 1.0);
    let y = signed_pow(du, params.l / 2.0 + 1.0);
    let r = libm::hypot(x, y);
    let theta = if r == 0.0 { 0.0 } else { libm::atan2(y, x) };
    PolarState { r, theta }
}

/// The half-power pair (|u|^{beta/2}u·sqrt(...), |u'|^{l/2}u') recovered from
/// a polar state: (r cos theta / C, r sin theta) with C the x-normalization.
pub fn polar_to_halfpowers(params: &Params, ps: &PolarState) -> (f64, f64) {
    let cx = libm::sqrt(
        params.d * (params.l + 2.0) / ((params.beta + 2.0) * (params.l + 1.0)),
    );
    (ps.r * libm::cos(ps.theta) / cx, ps.r * libm::sin(ps.theta))
}

/// Polar states of every sample with theta lifted continuously (unwrapped
/// modulo 2·pi jumps). Zero counting uses crossings of the lift through
/// multiples of pi.
pub fn polar_path(params: &Params, traj: &Trajectory) -> Vec<(f64, PolarState)> {
    let mut out = Vec::with_capacity(traj.samples.len());
    let mut offset = 0.0;
    let mut prev_raw: Option<f64> = None;
    for s in &traj.samples {
        let ps = to_polar(
            params,
            &State {
                t: s.t,
                u: s.u,
                p: s.p,
            },
        );
        if let Some(pr) = prev_raw {
            let mut d = ps.theta - pr;
            while d > core::f64::consts::PI {
                d -= 2.0 * core::f64::consts::PI;
                offset -= 2.0 * core::f64::consts::PI;
            }
            while d < -core::f64::consts::PI {
                d += 2.0 * core::f64::consts::PI;
                offset += 2.0 * core::f64::consts::PI;
            }
        }
        prev_raw = Some(ps.theta);
        out.push((
            s.t,
            PolarState {
                r: ps.r,
                theta: ps.theta + offset,
            },
        ));
    }
    out
}

/// Angular velocity of the polar angle at a non-singular point:
///
/// ```text
/// theta' = -A r^{2(alpha-l)/(l+2)} sin cos |sin|^{2(alpha-l)/(l+2)}
///          -B r^{2(beta+1)/(beta+2) - 2(l+1)/(l+2)} |cos|^{beta/(beta+2)} |sin|^{-l/(l+2)}
/// A = c(l+2)/(2(l+1)),   B = ((l+2)/(2(l+1)))·((beta+2)(l+1)/(d(l+2)))^{(beta+1)/(beta+2)}
/// ```
///
/// Singular where sin(theta) = 0 (through |sin|^{-l/(l+2)}); trig values
/// within 4 eps of 0 are snapped to 0, so axis states produced by `atan2`
/// behave exactly.
pub fn theta_rate(params: &Params, ps: &PolarState) -> Result<f64, Error> {
    let snap = |x: f64| if libm::fabs(x) < 4.0 * f64::EPSILON { 0.0 } else { x };
    let s = snap(libm::sin(ps.theta));
    let co = snap(libm::cos(ps.theta));
    if s == 0.0 {
        return Err(Error::DomainError(
            "theta rate is singular where sin(theta) = 0",
        ));
    }
    let l = params.l;
    let (a, b) = theta_rate_constants(params);
    let e1 = 2.0 * (params.alpha - l) / (l + 2.0);
    let e2 = 2.0 * (params.beta + 1.0) / (params.beta + 2.0) - 2.0 * (l + 1.0) / (l + 2.0);
    let term_a = a * pow_abs(ps.r, e1) * s * co * pow_abs(s, e1);
    let term_b = b
        * pow_abs(ps.r, e2)
        * pow_abs(co, params.beta / (params.beta + 2.0))
        * pow_abs(s, -l / (l + 2.0));
    Ok(-term_a - term_b)
}

/// The constants (A, B) of the theta equation.
pub fn theta_rate_constants(params: &Params) -> (f64, f64) {
    let l = params.l;
    let half = (l + 2.0) / (2.0 * (l + 1.0));
    let a = params.c * half;
    let b = half
        * pow_abs(
            (params.beta + 2.0) * (l + 1.0) / (params.d * (l + 2.0)),
            (params.beta + 1.0) / (params.beta + 2.0),
        );
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::integrate;
    use crate::model::energy;

    fn params(l: f64, alpha: f64, beta: f64, c: f64, d: f64) -> Params {
        Params::new(l, alpha, beta, c, d).unwrap()
    }

    fn synth_power(a: f64, e: f64) -> Vec<(f64, f64)> {
        (0..200)
            .map(|i| {
                let t = 10.0 + 90.0 * i as f64 / 199.0;
                (t, a * pow_abs(t, e))
            })
            .collect()
    }

    #[test]
    fn fit_recovers_exact_power_laws() {
        let fit = fit_decay_exponent(&synth_power(1.0, -2.0), (10.0, 100.0)).unwrap();
        assert!((fit.exponent + 2.0).abs() < 1e-10);
        assert!((fit.amplitude - 1.0).abs() < 1e-10);
        assert!((fit.goodness - 1.0).abs() < 1e-10);
        let fit = fit_decay_exponent(&synth_power(5.0, -2.0), (10.0, 100.0)).unwrap();
        assert!((fit.exponent + 2.0).abs() < 1e-10);
        assert!((fit.amplitude - 5.0).abs() < 1e-9);
    }

    #[test]
    fn fit_error_paths() {
        let few: Vec<(f64, f64)> = (0..5).map(|i| (10.0 + i as f64, 1.0)).collect();
        assert!(matches!(
            fit_decay_exponent(&few, (1.0, 100.0)),
            Err(Error::InsufficientData { .. })
        ));
        let mut bad = synth_power(1.0, -2.0);
        bad[3].1 = 0.0;
        assert!(matches!(
            fit_decay_exponent(&bad, (10.0, 100.0)),
            Err(Error::NonPositiveValue { .. })
        ));
        assert!(fit_decay_exponent(&synth_power(1.0, -2.0), (100.0, 10.0)).is_err());
    }

    #[test]
    fn audit_of_equilibrium_is_zero() {
        let p = params(0.0, 1.0, 1.0, 1.0, 1.0);
        let traj = integrate(&p, 0.0, 0.0, 120.0, 1e-9).unwrap();
        let audit = energy_audit(&p, &traj, 0.25).unwrap();
        assert_eq!(audit.max_energy_increase, 0.0);
        assert_eq!(audit.dissipation_residual, 0.0);
        assert_eq!(audit.tail_liminf_statistic, Some(0.0));
        assert!(audit.samples_used >= 2);
    }

    #[test]
    fn audit_statistic_absent_without_gap() {
        let p = params(1.0, 1.0, 2.0, 1.0, 1.0); // alpha = l
        let traj = integrate(&p, 0.5, 0.0, 20.0, 1e-8).unwrap();
        let audit = energy_audit(&p, &traj, 0.5).unwrap();
        assert!(audit.tail_liminf_statistic.is_none());
        assert!(audit.max_energy_increase <= 50.0 * traj.tol);
    }

    #[test]
    fn polar_conventions() {
        let p = params(0.0, 1.0, 1.0, 1.0, 1.0);
        let ps = to_polar(&p, &State { t: 0.0, u: 0.0, p: 0.0 });
        assert_eq!((ps.r, ps.theta), (0.0, 0.0));
        // pure momentum state sits on the positive y axis
        let ps = to_polar(&p, &State { t: 0.0, u: 0.0, p: 2.0 });
        assert!((ps.theta - core::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn polar_energy_identity_and_roundtrip() {
        let p = params(0.7, 1.3, 2.2, 0.9, 1.4);
        for &(u, du) in &[(0.4, -1.1), (-0.2, 0.0), (1.5, 2.0), (-0.7, -0.3)] {
            let st = State {
                t: 0.0,
                u,
                p: signed_pow(du, p.l + 1.0),
            };
            let ps = to_polar(&p, &st);
            let e = energy(&p, u, du);
            let want = (p.l + 2.0) / (p.l + 1.0) * e;
            assert!((ps.r * ps.r - want).abs() <= 1e-12 * want.max(1.0));
            let (hx, hy) = polar_to_halfpowers(&p, &ps);
            assert!((hx - signed_pow(u, p.beta / 2.0 + 1.0)).abs() < 1e-12);
            assert!((hy - signed_pow(du, p.l / 2.0 + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_rate_constants_and_signs() {
        // l=0, beta=2, c=d=1: A = 1, B = 2^{3/4}
        let p = params(0.0, 1.0, 2.0, 1.0, 1.0);
        let (a, b) = theta_rate_constants(&p);
        assert!((a - 1.0).abs() < 1e-15);
        assert!((b - libm::pow(2.0, 0.75)).abs() < 1e-14);

        // theta' = 0 exactly on the momentum axis
        let ps = PolarState {
            r: 0.8,
            theta: core::f64::consts::FRAC_PI_2,
        };
        assert_eq!(theta_rate(&p, &ps).unwrap(), 0.0);

        // singular on the u axis
        assert!(theta_rate(&p, &PolarState { r: 0.8, theta: 0.0 }).is_err());
        assert!(theta_rate(&p, &PolarState { r: 0.8, theta: core::f64::consts::PI }).is_err());

        // strictly negative in the open first quadrant
        for &th in &[0.3, 0.9, 1.4] {
            assert!(theta_rate(&p, &PolarState { r: 0.5, theta: th }).unwrap() < 0.0);
        }
    }

    #[test]
    fn classify_empirical_cases() {
        let posc = params(0.0, 1.0, 1.0, 1.0, 1.0);
        let traj = integrate(&posc, 1.0, 0.0, 200.0, 1e-7).unwrap();
        assert_eq!(
            classify_empirical(&posc, &traj, 1).unwrap(),
            Regime::Oscillatory
        );

        let pnon = params(1.0, 1.2, 3.0, 1.0, 1.0);
        let traj = integrate(&pnon, 1.0, -0.3, 200.0, 1e-7).unwrap();
        assert_eq!(
            classify_empirical(&pnon, &traj, 1).unwrap(),
            Regime::NonOscillatoryFiniteZeros
        );

        let traj = integrate(&posc, 0.0, 0.0, 200.0, 1e-9).unwrap();
        assert_eq!(
            classify_empirical(&posc, &traj, 1).unwrap(),
            Regime::OutsideTheory
        );
    }

    #[test]
    fn classify_rejects_short_span() {
        // a window that starts late relative to its length leaves no room
        // for two dyadic evidence windows
        let p = params(0.0, 1.0, 1.0, 1.0, 1.0);
        let samples: Vec<_> = (0..100)
            .map(|i| {
                let t = 100.0 + 0.5 * i as f64;
                crate::integrator::Sample {
                    t,
                    u: libm::sin(t),
                    p: libm::cos(t),
                    energy: 0.5,
                }
            })
            .collect();
        let traj = Trajectory {
            samples,
            u_zeros: Vec::new(),
            du_zeros: Vec::new(),
            params: p,
            tol: 1e-9,
            status: crate::integrator::Status::Completed,
        };
        assert!(matches!(
            classify_empirical(&p, &traj, 1),
            Err(Error::SpanTooShort { .. })
        ));
    }
}
