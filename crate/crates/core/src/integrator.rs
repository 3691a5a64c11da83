//! Integration of the flux system through the singular layer.
//!
//! In the variables (u, p) with p = |u'|^l u' the equation becomes
//!
//! ```text
//! u' = sign(p) |p|^{1/(l+1)},
//! p' = -c sign(p) |p|^{(alpha+1)/(l+1)} - d |u|^beta u,
//! ```
//!
//! whose right-hand side is continuous everywhere and locally Lipschitz away
//! from p = 0. u'' may blow up where u' vanishes, but p never loses C^1
//! regularity along solutions, so a standard explicit embedded pair works,
//! provided the step size is capped inside the Holder layer |p| ~ 0.
//!
//! The epsilon-regularized system
//!
//! ```text
//! u'' = -(c|u'|^alpha u' + d|u|^beta u) / (eps + (l+1)|u'|^l)
//! ```
//!
//! is smooth for eps > 0 and serves as an independent validation path; its
//! trajectories converge to the flux-system trajectories as eps -> 0.

use alloc::vec::Vec;

use crate::error::Error;
use crate::math::{pow_abs, sgn};
use crate::model::{energy, flux_from_velocity, velocity_from_flux, Params};
use crate::rk;

/// Phase state in flux variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: f64,
    /// Flux p = |u'|^l u'.
    pub p: f64,
}

impl State {
    /// Velocity u' = sign(p)|p|^{1/(l+1)} recovered from the flux.
    pub fn du(&self, params: &Params) -> f64 {
        velocity_from_flux(params, self.p)
    }
}

/// One stored sample of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub u: f64,
    /// Flux p = |u'|^l u'.
    pub p: f64,
    /// Energy of the state (cached at sampling time).
    pub energy: f64,
}

impl Sample {
    pub fn du(&self, params: &Params) -> f64 {
        velocity_from_flux(params, self.p)
    }
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Reached t_end.
    Completed,
    /// Energy fell below the configured floor near the equilibrium;
    /// the trajectory is truncated there.
    EnergyFloorReached,
    /// The step size underflowed the configured minimum; the trajectory is
    /// truncated at the last accepted step.
    StepFailure,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Completed => "Completed",
            Status::EnergyFloorReached => "EnergyFloorReached",
            Status::StepFailure => "StepFailure",
        }
    }
}

/// Result of an integration: samples, localized zeros and termination status.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Strictly increasing in t.
    pub samples: Vec<Sample>,
    /// Times where u changes sign, strictly increasing.
    pub u_zeros: Vec<f64>,
    /// Times where u' (equivalently p) changes sign, strictly increasing.
    pub du_zeros: Vec<f64>,
    pub params: Params,
    /// Tolerance the run was produced with.
    pub tol: f64,
    pub status: Status,
}

impl Trajectory {
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// First sample time.
    pub fn t_first(&self) -> f64 {
        self.samples.first().map_or(0.0, |s| s.t)
    }

    /// Last sample time.
    pub fn t_last(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// Position at an arbitrary time inside the span, by cubic Hermite
    /// interpolation on (u, u') between the enclosing samples.
    pub fn eval_u(&self, t: f64) -> Option<f64> {
        if self.samples.is_empty() || t < self.t_first() || t > self.t_last() {
            return None;
        }
        let idx = match self
            .samples
            .binary_search_by(|s| s.t.partial_cmp(&t).unwrap())
        {
            Ok(i) => return Some(self.samples[i].u),
            Err(i) => i,
        };
        let a = &self.samples[idx - 1];
        let b = &self.samples[idx];
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        let (ua, ub) = (a.u, b.u);
        let (da, db) = (a.du(&self.params), b.du(&self.params));
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        Some(h00 * ua + h10 * h * da + h01 * ub + h11 * h * db)
    }
}

/// Flux-system vector field: (du, dp) at a state. Continuous in (u, p),
/// locally Lipschitz away from p = 0; the origin is an exact fixed point.
pub fn vector_field(params: &Params, s: &State) -> (f64, f64) {
    let du = sgn(s.p) * pow_abs(s.p, 1.0 / (params.l + 1.0));
    let dp = -params.c * sgn(s.p) * pow_abs(s.p, (params.alpha + 1.0) / (params.l + 1.0))
        - params.d * sgn(s.u) * pow_abs(s.u, params.beta + 1.0);
    (du, dp)
}

/// Regularized vector field: (du, u'') with the denominator eps + (l+1)|u'|^l >= eps.
pub fn vector_field_regularized(params: &Params, eps: f64, u: f64, du: f64) -> (f64, f64) {
    let num = params.c * sgn(du) * pow_abs(du, params.alpha + 1.0)
        + params.d * sgn(u) * pow_abs(u, params.beta + 1.0);
    let den = eps + (params.l + 1.0) * pow_abs(du, params.l);
    (du, -num / den)
}

/// Knobs for [`integrate_with`] / [`integrate_regularized_with`].
#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    /// Local error tolerance per step (absolute and relative). Default 1e-9.
    pub tol: f64,
    /// Minimum step as a fraction of t_end; underflow truncates with
    /// [`Status::StepFailure`]. Default 1e-14.
    pub min_step_frac: f64,
    /// Step cap inside the Holder layer, as a fraction of t_end. Default 1e-3.
    pub singular_step_frac: f64,
    /// The layer is |p| < p_small_rel · max(1, |p0|). Default 1e-8.
    pub p_small_rel: f64,
    /// Early termination once E < energy_floor_rel · E(0). Default 1e-24.
    pub energy_floor_rel: f64,
    /// When set, samples are emitted on the uniform grid k·dt (plus the final
    /// time) via dense output instead of at accepted steps.
    pub sample_dt: Option<f64>,
    /// Hard cap on the step size. Default t_end / 10.
    pub max_step: Option<f64>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            tol: 1e-9,
            min_step_frac: 1e-14,
            singular_step_frac: 1e-3,
            p_small_rel: 1e-8,
            energy_floor_rel: 1e-24,
            sample_dt: None,
            max_step: None,
        }
    }
}

impl IntegrateOptions {
    pub fn with_tol(tol: f64) -> Self {
        IntegrateOptions {
            tol,
            ..Default::default()
        }
    }
}

/// Integrate the flux system from (u0, |du0|^l du0) over [0, t_end].
///
/// Requires well-posed parameters (l <= min(alpha, beta)), t_end > 0, tol > 0.
/// Zeros of u and u' are localized by bisection on the dense output to time
/// accuracy tol.
pub fn integrate(
    params: &Params,
    u0: f64,
    du0: f64,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory, Error> {
    integrate_with(params, u0, du0, t_end, &IntegrateOptions::with_tol(tol))
}

/// [`integrate`] with full control over the options.
pub fn integrate_with(
    params: &Params,
    u0: f64,
    du0: f64,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory, Error> {
    if !params.well_posed() {
        return Err(Error::InvalidParams(
            "integration needs well-posedness: l <= min(alpha, beta)",
        ));
    }
    check_run_args(u0, du0, t_end, opts)?;

    let pr = *params;
    let mut rhs = move |_t: f64, y: &[f64; 2]| {
        let (du, dp) = vector_field(
            &pr,
            &State {
                t: 0.0,
                u: y[0],
                p: y[1],
            },
        );
        [du, dp]
    };
    let p0 = flux_from_velocity(params, du0);
    let singular_cap = Some(SingularCap {
        p_small: opts.p_small_rel * libm::fabs(p0).max(1.0),
        h_cap: opts.singular_step_frac * t_end,
    });
    let energy_of = move |y: &[f64; 2]| energy(&pr, y[0], velocity_from_flux(&pr, y[1]));
    Ok(drive(
        &mut rhs,
        [u0, p0],
        t_end,
        opts,
        singular_cap,
        &energy_of,
        params,
        |y| y[1],
    ))
}

/// Integrate the eps-regularized system in (u, u') over [0, t_end].
///
/// Same trajectory contract as [`integrate`]; the stored flux is |u'|^l u'
/// of the computed velocity. No well-posedness restriction is needed.
pub fn integrate_regularized(
    params: &Params,
    eps: f64,
    u0: f64,
    du0: f64,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory, Error> {
    integrate_regularized_with(params, eps, u0, du0, t_end, &IntegrateOptions::with_tol(tol))
}

/// [`integrate_regularized`] with full control over the options.
pub fn integrate_regularized_with(
    params: &Params,
    eps: f64,
    u0: f64,
    du0: f64,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory, Error> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::DomainError("regularization eps must be > 0"));
    }
    check_run_args(u0, du0, t_end, opts)?;

    let pr = *params;
    let mut rhs = move |_t: f64, y: &[f64; 2]| {
        let (du, ddu) = vector_field_regularized(&pr, eps, y[0], y[1]);
        [du, ddu]
    };
    let energy_of = move |y: &[f64; 2]| energy(&pr, y[0], y[1]);
    let mut traj = drive(
        &mut rhs,
        [u0, du0],
        t_end,
        opts,
        None,
        &energy_of,
        params,
        |y| y[1],
    );
    // stored second component must be the flux, not the velocity
    for s in &mut traj.samples {
        s.p = flux_from_velocity(params, s.p);
    }
    Ok(traj)
}

fn check_run_args(u0: f64, du0: f64, t_end: f64, opts: &IntegrateOptions) -> Result<(), Error> {
    if !(u0.is_finite() && du0.is_finite()) {
        return Err(Error::DomainError("initial data must be finite"));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::DomainError("t_end must be finite and > 0"));
    }
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(Error::DomainError("tol must be finite and > 0"));
    }
    if let Some(dt) = opts.sample_dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::DomainError("sample_dt must be finite and > 0"));
        }
    }
    Ok(())
}

struct SingularCap {
    p_small: f64,
    h_cap: f64,
}

/// Which component a zero list tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroTarget {
    U,
    Du,
}

/// Re-extract the sign-change times of u or u' from the stored samples,
/// refined by linear interpolation on the two adjacent samples. Intended for
/// externally loaded trajectories; fresh integrations already carry
/// dense-output zeros.
///
/// Only sign *changes* count: samples that merely touch zero (including
/// identically zero stretches) produce no entries.
pub fn locate_zeros(traj: &Trajectory, which: ZeroTarget) -> Vec<f64> {
    let comp = |s: &Sample| match which {
        ZeroTarget::U => s.u,
        ZeroTarget::Du => s.p, // sign(u') = sign(p)
    };
    let mut out = Vec::new();
    let mut last_nz: Option<(f64, f64)> = None;
    for s in &traj.samples {
        let v = comp(s);
        if v == 0.0 {
            continue;
        }
        if let Some((ta, va)) = last_nz {
            if va * v < 0.0 {
                out.push(ta - va * (s.t - ta) / (v - va));
            }
        }
        last_nz = Some((s.t, v));
    }
    out
}

const EVENT_SCAN: usize = 8; // dense-output subintervals scanned per step
const MAX_BISECT: usize = 80;

/// Shared adaptive driver. `sign_comp` picks the state component whose
/// magnitude gates the singular step cap (the flux for the direct system).
#[allow(clippy::too_many_arguments)]
fn drive<F, G, H>(
    rhs: &mut F,
    y0: [f64; 2],
    t_end: f64,
    opts: &IntegrateOptions,
    singular: Option<SingularCap>,
    energy_of: &G,
    params: &Params,
    sign_comp: H,
) -> Trajectory
where
    F: FnMut(f64, &[f64; 2]) -> [f64; 2],
    G: Fn(&[f64; 2]) -> f64,
    H: Fn(&[f64; 2]) -> f64,
{
    let tol = opts.tol;
    let hmax = opts.max_step.unwrap_or(t_end / 10.0).min(t_end);
    let hmin = opts.min_step_frac * t_end;
    let e0 = energy_of(&y0);
    let floor = opts.energy_floor_rel * e0;

    let mut samples = Vec::new();
    let mut u_zeros: Vec<f64> = Vec::new();
    let mut du_zeros: Vec<f64> = Vec::new();

    let push_sample = |samples: &mut Vec<Sample>, t: f64, y: &[f64; 2]| {
        if samples.last().is_none_or(|s: &Sample| t > s.t) {
            samples.push(Sample {
                t,
                u: y[0],
                p: y[1],
                energy: energy_of(y),
            });
        }
    };
    push_sample(&mut samples, 0.0, &y0);

    let mut t = 0.0;
    let mut y = y0;
    let mut f0 = rhs(t, &y);
    let mut h = rk::initial_step(rhs, t, &y, &f0, tol, hmax);
    // per-unit-step control: global error stays proportional to tol while
    // the per-step error never exceeds it (the scale is capped at tol)
    let mut ctrl = rk::Controller::new(rk::EXPO1_PER_UNIT_STEP);
    let mut next_grid: u64 = 1; // next sample index when sample_dt is set

    let status = 'outer: loop {
        if t >= t_end {
            break Status::Completed;
        }
        // step caps: global max, singular layer, final landing
        h = h.min(hmax);
        if let Some(cap) = &singular {
            if libm::fabs(sign_comp(&y)) < cap.p_small {
                h = h.min(cap.h_cap);
            }
        }
        let landing = t + h >= t_end - 1e-12 * t_end;
        if landing {
            h = t_end - t;
        } else if h < hmin {
            break Status::StepFailure;
        }

        let (step, errv) = rk::try_step(rhs, t, &y, &f0, h);
        let finite = step.y1.iter().all(|v| v.is_finite());
        // per-unit-step scale, floored at the roundoff level of the error
        // estimate so tiny steps inside singular layers stay acceptable
        let scale = (tol * h.min(1.0)).max(16.0 * f64::EPSILON);
        let err = if finite {
            rk::error_norm(&errv, &step.y0, &step.y1, scale)
        } else {
            f64::INFINITY
        };

        if err > 1.0 {
            h = if finite {
                ctrl.reject(h, err)
            } else {
                h * 0.25
            };
            continue;
        }

        let t1 = if landing { t_end } else { t + h };

        // events first, then samples, then the floor check
        scan_events(&step, t1, tol, &mut u_zeros, &mut du_zeros);

        match opts.sample_dt {
            None => push_sample(&mut samples, t1, &step.y1),
            Some(dt) => {
                loop {
                    let tg = next_grid as f64 * dt;
                    if tg > t1 + 1e-12 * t_end || tg > t_end {
                        break;
                    }
                    let yg = if tg >= t1 { step.y1 } else { step.eval(tg) };
                    push_sample(&mut samples, tg, &yg);
                    next_grid += 1;
                }
                if t1 >= t_end {
                    push_sample(&mut samples, t_end, &step.y1);
                }
            }
        }

        let e1 = energy_of(&step.y1);
        if e1 < floor {
            if opts.sample_dt.is_some() {
                push_sample(&mut samples, t1, &step.y1);
            }
            break 'outer Status::EnergyFloorReached;
        }

        t = t1;
        y = step.y1;
        f0 = step.k[6]; // FSAL
        h = ctrl.accept(h, err);
    };

    // a truncated run must still end on a recorded sample
    if status != Status::Completed && opts.sample_dt.is_some() {
        if let Some(s) = samples.last() {
            if s.t < t {
                push_sample(&mut samples, t, &y);
            }
        }
    }

    Trajectory {
        samples,
        u_zeros,
        du_zeros,
        params: *params,
        tol,
        status,
    }
}

/// Scan the dense output of one accepted step for sign changes of u and p
/// and refine each bracket by bisection to time accuracy `tol`. Only sign
/// changes count; touching zero (and identically zero stretches) does not.
fn scan_events(
    step: &rk::Step<2>,
    t1: f64,
    tol: f64,
    u_zeros: &mut Vec<f64>,
    du_zeros: &mut Vec<f64>,
) {
    for comp in 0..2 {
        let out: &mut Vec<f64> = if comp == 0 { u_zeros } else { du_zeros };
        let mut last_nz: Option<(f64, f64)> = None;
        for j in 0..=EVENT_SCAN {
            let tj = if j == EVENT_SCAN {
                t1
            } else {
                step.t0 + step.h * (j as f64 / EVENT_SCAN as f64)
            };
            let vj = if j == 0 {
                step.y0[comp]
            } else if j == EVENT_SCAN {
                step.y1[comp]
            } else {
                step.eval(tj)[comp]
            };
            if vj == 0.0 {
                continue;
            }
            if let Some((ta, va)) = last_nz {
                if va * vj < 0.0 {
                    let tz = bisect(step, comp, ta, tj, va, tol);
                    push_event(out, tz, tol);
                }
            }
            last_nz = Some((tj, vj));
        }
    }
}

fn push_event(out: &mut Vec<f64>, t: f64, tol: f64) {
    if out.last().is_none_or(|&last| t > last + 4.0 * tol) {
        out.push(t);
    }
}

fn bisect(step: &rk::Step<2>, comp: usize, mut a: f64, mut b: f64, va: f64, tol: f64) -> f64 {
    let mut sa = va;
    for _ in 0..MAX_BISECT {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let vm = step.eval(m)[comp];
        if vm == 0.0 {
            return m;
        }
        if sa * vm < 0.0 {
            b = m;
        } else {
            a = m;
            sa = vm;
        }
    }
    0.5 * (a + b)
}
