//! Invariant-sector certification for slow solutions.
//!
//! In the half-power coordinates
//!
//! ```text
//! z = sqrt(d(l+2)/((beta+2)(l+1))) |u|^{beta/2} u,      w = |u'|^{l/2} u',
//! ```
//!
//! the equation becomes the planar field
//!
//! ```text
//! z' = a |z|^{beta/(beta+2)} |w|^{2/(l+2)} sign(w)
//! w' = -a |w|^{-l/(l+2)} |z|^{beta/(beta+2)} z - c((l+2)/(2(l+1))) |w|^{(2a-l+2)/(l+2)} sign(w)
//! a  = (d(l+2)/(2(l+1))) ((beta+2)(l+1)/(d(l+2)))^{(beta+1)/(beta+2)}
//! ```
//!
//! with the exact radial dissipation identity
//! z z' + w w' = -c((l+2)/(2(l+1))) |w|^{2(alpha+2)/(l+2)} <= 0.
//!
//! For l < alpha < alpha* the sector
//! S = { z < 0, z^2 + w^2 < eps^2, 0 < w/|z| < M } is positively invariant
//! once eps is small enough: the field is inward on the disc arc (radial
//! identity), inward on the ray w = M|z| because the damping exponent
//! (2alpha-l)/(l+2) beats the restoring exponent beta/(beta+2) as the radius
//! shrinks, and w' > 0 near the horizontal axis. Certification samples each
//! boundary piece; invariance is additionally tested by direct simulation.

use alloc::vec::Vec;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::fit_decay_exponent;
use crate::error::Error;
use crate::integrator::{integrate_with, IntegrateOptions};
use crate::math::{pow_abs, sgn, signed_pow};
use crate::model::{alpha_star, Params};

/// A point of the (z, w) plane. w here is the half-power momentum
/// |u'|^{l/2}u', distinct from the integrator's flux |u'|^l u'.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub z: f64,
    pub w: f64,
}

/// The sector S = { z < 0, z^2 + w^2 < eps_r^2, 0 < w/|z| < slope }.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSpec {
    /// Disc radius eps.
    pub eps_r: f64,
    /// Slope bound M.
    pub slope: f64,
}

impl RegionSpec {
    pub fn new(eps_r: f64, slope: f64) -> Result<Self, Error> {
        if !(eps_r > 0.0 && eps_r.is_finite()) {
            return Err(Error::DomainError("eps_r must be finite and > 0"));
        }
        if !(slope > 0.0 && slope.is_finite()) {
            return Err(Error::DomainError("slope bound M must be finite and > 0"));
        }
        Ok(RegionSpec { eps_r, slope })
    }
}

fn z_scale(p: &Params) -> f64 {
    libm::sqrt(p.d * (p.l + 2.0) / ((p.beta + 2.0) * (p.l + 1.0)))
}

/// Coefficient a of the planar field.
pub fn field_coefficient(p: &Params) -> f64 {
    p.d * (p.l + 2.0) / (2.0 * (p.l + 1.0))
        * pow_abs(
            (p.beta + 2.0) * (p.l + 1.0) / (p.d * (p.l + 2.0)),
            (p.beta + 1.0) / (p.beta + 2.0),
        )
}

/// Map a state (u, u') to the (z, w) plane.
pub fn phase_from_state(p: &Params, u: f64, du: f64) -> PhasePoint {
    PhasePoint {
        z: z_scale(p) * signed_pow(u, p.beta / 2.0 + 1.0),
        w: signed_pow(du, p.l / 2.0 + 1.0),
    }
}

/// Inverse of [`phase_from_state`].
pub fn state_from_phase(p: &Params, pt: &PhasePoint) -> (f64, f64) {
    let u = sgn(pt.z) * pow_abs(libm::fabs(pt.z) / z_scale(p), 2.0 / (p.beta + 2.0));
    let du = sgn(pt.w) * pow_abs(pt.w, 2.0 / (p.l + 2.0));
    (u, du)
}

/// The planar field (z', w'). Singular at w = 0 for l > 0 through
/// |w|^{-l/(l+2)}.
pub fn field_zw(p: &Params, pt: &PhasePoint) -> Result<(f64, f64), Error> {
    if pt.w == 0.0 && p.l > 0.0 {
        return Err(Error::DomainError(
            "the w-equation is singular at w = 0 for l > 0",
        ));
    }
    let a = field_coefficient(p);
    let zb = pow_abs(pt.z, p.beta / (p.beta + 2.0));
    let dz = a * zb * pow_abs(pt.w, 2.0 / (p.l + 2.0)) * sgn(pt.w);
    let damping = p.c * (p.l + 2.0) / (2.0 * (p.l + 1.0));
    let dw = -a * pow_abs(pt.w, -p.l / (p.l + 2.0)) * zb * pt.z
        - damping * pow_abs(pt.w, (2.0 * p.alpha - p.l + 2.0) / (p.l + 2.0)) * sgn(pt.w);
    Ok((dz, dw))
}

/// Exact right-hand side of the radial dissipation identity,
/// -c((l+2)/(2(l+1))) |w|^{2(alpha+2)/(l+2)}.
pub fn radial_dissipation(p: &Params, w: f64) -> f64 {
    -p.c * (p.l + 2.0) / (2.0 * (p.l + 1.0)) * pow_abs(w, 2.0 * (p.alpha + 2.0) / (p.l + 2.0))
}

/// Sign check of one boundary piece of the sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PieceReport {
    pub name: &'static str,
    pub samples: usize,
    /// For "arc": the largest radial component (pass while <= 0).
    /// For "ray": the smallest inward component (pass while > 0).
    /// For "axis": the smallest w' at the smallest sampled w (pass while > 0).
    pub worst_margin: f64,
    pub pass: bool,
}

/// Field-sign certificate over the three boundary pieces of the sector.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    /// ((2 alpha - l)/(l+2), beta/(beta+2)); admissibility is strict "<".
    pub exponents: (f64, f64),
    pub pieces: Vec<PieceReport>,
    pub pass: bool,
}

/// Sample the boundary of S and check the field points inward.
///
/// Pieces: the disc arc inside the sector (radial component <= 0, an exact
/// identity), the ray w = M|z| on a logarithmic lambda grid (inward normal
/// component > 0), and the approach to the horizontal axis (w' > 0 at the
/// smallest sampled w for fixed z < 0).
pub fn region_certificate(
    p: &Params,
    spec: &RegionSpec,
    n_samples: usize,
) -> Result<CertificateReport, Error> {
    if !(p.l < p.alpha && p.alpha < alpha_star(p)) {
        return Err(Error::RegimeNotApplicable(
            "the sector certificate needs l < alpha < alpha*",
        ));
    }
    if n_samples < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: n_samples,
        });
    }
    let psi_max = libm::atan(spec.slope);

    // disc arc
    let mut worst_radial = f64::NEG_INFINITY;
    for i in 0..n_samples {
        let psi = psi_max * (i as f64 + 0.5) / n_samples as f64;
        let pt = PhasePoint {
            z: -spec.eps_r * libm::cos(psi),
            w: spec.eps_r * libm::sin(psi),
        };
        let (dz, dw) = field_zw(p, &pt)?;
        worst_radial = worst_radial.max(pt.z * dz + pt.w * dw);
    }
    let arc = PieceReport {
        name: "arc",
        samples: n_samples,
        worst_margin: worst_radial,
        pass: worst_radial <= 1e-12 * spec.eps_r,
    };

    // ray w = M|z|, lambda log grid concentrated near 0
    let lam_hi = spec.eps_r / libm::sqrt(1.0 + spec.slope * spec.slope);
    let lam_lo = 1e-6 * spec.eps_r;
    let norm = libm::sqrt(1.0 + spec.slope * spec.slope);
    let mut worst_inward = f64::INFINITY;
    for i in 0..n_samples {
        let s = i as f64 / (n_samples - 1) as f64;
        let lam = lam_lo * libm::exp(s * libm::log(lam_hi / lam_lo));
        let pt = PhasePoint {
            z: -lam,
            w: spec.slope * lam,
        };
        let (dz, dw) = field_zw(p, &pt)?;
        worst_inward = worst_inward.min(-(spec.slope * dz + dw) / norm);
    }
    let ray = PieceReport {
        name: "ray",
        samples: n_samples,
        worst_margin: worst_inward,
        pass: worst_inward > 0.0,
    };

    // horizontal axis approach: w' at the smallest sampled w, for a spread
    // of fixed z < 0 along the axis
    let mut worst_axis = f64::INFINITY;
    let w_min = 1e-12 * spec.eps_r;
    for i in 0..n_samples {
        let zf = 0.05 + 0.9 * (i as f64 + 0.5) / n_samples as f64;
        let (_, dw) = field_zw(
            p,
            &PhasePoint {
                z: -zf * spec.eps_r,
                w: w_min,
            },
        )?;
        worst_axis = worst_axis.min(dw);
    }
    let axis = PieceReport {
        name: "axis",
        samples: n_samples,
        worst_margin: worst_axis,
        pass: worst_axis > 0.0,
    };

    let pass = arc.pass && ray.pass && axis.pass;
    let pieces = alloc::vec![arc, ray, axis];
    Ok(CertificateReport {
        exponents: (
            (2.0 * p.alpha - p.l) / (p.l + 2.0),
            p.beta / (p.beta + 2.0),
        ),
        pieces,
        pass,
    })
}

/// One initial condition of the invariance simulation.
#[derive(Debug, Clone, Copy)]
pub struct IcReport {
    pub u0: f64,
    pub du0: f64,
    /// Stayed in the slack-inflated closure of S at every sample.
    pub contained: bool,
    /// Largest signed violation of any sector constraint (negative = inside).
    pub worst_violation: f64,
    /// Fitted E-exponent over the trailing three quarters of the run.
    pub fitted_exponent: Option<f64>,
    pub goodness: Option<f64>,
}

/// Result of [`region_invariance_test`].
#[derive(Debug, Clone)]
pub struct InvarianceReport {
    pub runs: Vec<IcReport>,
    /// Fraction of initial conditions that stayed contained.
    pub contained_fraction: f64,
    /// Slow reference rate -(alpha+1)(beta+2)/(beta-alpha).
    pub slow_rate: f64,
    /// Fast reference rate -(l+2)/(alpha-l).
    pub fast_rate: f64,
}

/// Simulate `n_ics` phase points sampled inside S forward for time `t_end`
/// and check containment in the closure of S inflated by distance
/// `boundary_tol`·eps_r. Sampling is deterministic (fixed seed), so reports
/// are reproducible.
pub fn region_invariance_test(
    p: &Params,
    spec: &RegionSpec,
    n_ics: usize,
    t_end: f64,
    boundary_tol: f64,
) -> Result<InvarianceReport, Error> {
    if !(p.l < p.alpha && p.alpha < alpha_star(p)) {
        return Err(Error::RegimeNotApplicable(
            "the invariance test needs l < alpha < alpha*",
        ));
    }
    if !(boundary_tol >= 0.0) {
        return Err(Error::DomainError("boundary_tol must be >= 0"));
    }
    let slow_rate = -(p.alpha + 1.0) * (p.beta + 2.0) / (p.beta - p.alpha);
    let fast_rate = -(p.l + 2.0) / (p.alpha - p.l);

    let mut rng = ChaCha8Rng::seed_from_u64(0x5ec7_0e5d);
    let psi_max = libm::atan(spec.slope);
    let mut runs = Vec::with_capacity(n_ics);
    let mut contained_count = 0usize;

    for _ in 0..n_ics {
        // log-uniform radius, uniform angle, both kept off the boundary
        let s: f64 = rng.random();
        let rho = spec.eps_r * 0.05 * libm::exp(s * libm::log(0.8 / 0.05));
        let psi = psi_max * (0.05 + 0.9 * rng.random::<f64>());
        let pt = PhasePoint {
            z: -rho * libm::cos(psi),
            w: rho * libm::sin(psi),
        };
        let (u0, du0) = state_from_phase(p, &pt);

        let opts = IntegrateOptions::default();
        let traj = integrate_with(p, u0, du0, t_end, &opts)?;

        let slack = boundary_tol * spec.eps_r;
        let norm = libm::sqrt(1.0 + spec.slope * spec.slope);
        let mut worst = f64::NEG_INFINITY;
        for smp in &traj.samples {
            let ph = phase_from_state(p, smp.u, smp.du(p));
            let radial = libm::hypot(ph.z, ph.w) - spec.eps_r;
            let sector = (ph.w + spec.slope * ph.z) / norm;
            worst = worst.max(ph.z).max(radial).max(-ph.w).max(sector);
        }
        let contained = worst <= slack;
        contained_count += contained as usize;

        let series: Vec<(f64, f64)> = traj.samples.iter().map(|s| (s.t, s.energy)).collect();
        let fit = fit_decay_exponent(&series, (t_end / 4.0, t_end)).ok();
        runs.push(IcReport {
            u0,
            du0,
            contained,
            worst_violation: worst,
            fitted_exponent: fit.map(|f| f.exponent),
            goodness: fit.map(|f| f.goodness),
        });
    }

    Ok(InvarianceReport {
        contained_fraction: if n_ics == 0 {
            0.0
        } else {
            contained_count as f64 / n_ics as f64
        },
        runs,
        slow_rate,
        fast_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast_params() -> Params {
        Params::new(0.0, 0.3, 2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn field_hand_values_l0() {
        // l=0, alpha=1, beta=1, c=d=1, z=-1, w=1:
        // a = (3/2)^{2/3}; dz = a; dw = a - 1
        let p = Params::new(0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let a = field_coefficient(&p);
        assert!((a - 1.310_370_697_104_448_3).abs() < 1e-14);
        let (dz, dw) = field_zw(&p, &PhasePoint { z: -1.0, w: 1.0 }).unwrap();
        assert!((dz - a).abs() < 1e-14);
        assert!((dw - (a - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn pure_damping_on_momentum_axis() {
        // exactly on z = 0 the restoring terms vanish and only damping acts
        let p = fast_params();
        let (dz, dw) = field_zw(&p, &PhasePoint { z: 0.0, w: 0.5 }).unwrap();
        assert_eq!(dz, 0.0);
        assert!(dw < 0.0);
        // infinitesimally off the axis the z-flow is forward
        let (dz, _) = field_zw(&p, &PhasePoint { z: -1e-9, w: 0.5 }).unwrap();
        assert!(dz > 0.0);
    }

    #[test]
    fn singular_at_w_zero_only_for_positive_l() {
        let p = Params::new(1.0, 1.1, 3.0, 1.0, 1.0).unwrap();
        assert!(field_zw(&p, &PhasePoint { z: -0.5, w: 0.0 }).is_err());
        let p0 = fast_params();
        assert!(field_zw(&p0, &PhasePoint { z: -0.5, w: 0.0 }).is_ok());
    }

    #[test]
    fn radial_dissipation_identity_exact() {
        let p = Params::new(0.7, 1.1, 2.5, 1.3, 0.8).unwrap();
        for &(z, w) in &[(-0.5, 0.2), (0.3, -0.9), (-1e-4, 1e-5), (2.0, 1.0)] {
            let (dz, dw) = field_zw(&p, &PhasePoint { z, w }).unwrap();
            let lhs = z * dz + w * dw;
            let rhs = radial_dissipation(&p, w);
            let scale = (z * dz).abs().max((w * dw).abs()).max(rhs.abs());
            assert!(
                (lhs - rhs).abs() <= 1e-12 * scale,
                "({z},{w}): {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn coordinate_roundtrip() {
        let p = Params::new(0.4, 0.9, 2.2, 1.0, 1.5).unwrap();
        for &(u, du) in &[(-0.7, 0.4), (0.2, -0.1), (-1e-3, 1e-4)] {
            let pt = phase_from_state(&p, u, du);
            let (ub, dub) = state_from_phase(&p, &pt);
            assert!((ub - u).abs() <= 1e-12 * u.abs().max(1.0));
            assert!((dub - du).abs() <= 1e-12 * du.abs().max(1.0));
        }
    }

    #[test]
    fn certificate_passes_for_small_sector() {
        let p = fast_params();
        let spec = RegionSpec::new(1e-4, 1.0).unwrap();
        let report = region_certificate(&p, &spec, 200).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.exponents.0 < report.exponents.1);
        // exponent precheck example: 0.3 vs 0.5
        assert!((report.exponents.0 - 0.3).abs() < 1e-15);
        assert!((report.exponents.1 - 0.5).abs() < 1e-15);
        // denser sampling agrees
        let dense = region_certificate(&p, &spec, 2000).unwrap();
        assert!(dense.pass);
    }

    #[test]
    fn certificate_rejects_oscillatory_regime() {
        let p = Params::new(0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let spec = RegionSpec::new(0.1, 1.0).unwrap();
        assert!(region_certificate(&p, &spec, 100).is_err());
    }

    #[test]
    fn empty_invariance_report() {
        let p = fast_params();
        let spec = RegionSpec::new(1e-4, 1.0).unwrap();
        let rep = region_invariance_test(&p, &spec, 0, 10.0, 1e-3).unwrap();
        assert!(rep.runs.is_empty());
        assert_eq!(rep.contained_fraction, 0.0);
    }
}
