//! Parameters and the closed-form quantities of the theory.
//!
//! For l < alpha and l <= beta the qualitative behavior is governed by the
//! critical damping exponent
//!
//! ```text
//! alpha* = (beta(l+1) + l) / (beta + 2)        (alpha* in [l, l+1) for beta >= l)
//! ```
//!
//! and, exactly at alpha = alpha*, by the critical damping constant c0:
//! damping exponents above alpha* force oscillation, below alpha* forbid it,
//! and on the threshold the sign of c - c0 decides.

use crate::error::Error;
use crate::math::{pow_abs, sgn};

/// Relative tolerance for the equality comparisons `alpha = alpha*` and
/// `c = c0` in [`classify_theoretical`]. The thresholds are closed-form reals
/// compared against user-entered parameters, so the critical case must be
/// reachable by exact-intent inputs like alpha = 1/3 with beta = 1, l = 0.
pub const CRITICAL_REL_TOL: f64 = 1e-12;

/// The five coefficients of (|u'|^l u')' + c|u'|^alpha u' + d|u|^beta u = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    /// Exponent of the singular leading term, l >= 0.
    pub l: f64,
    /// Damping exponent, alpha > 0.
    pub alpha: f64,
    /// Stiffness exponent, beta > 0.
    pub beta: f64,
    /// Damping coefficient, c > 0.
    pub c: f64,
    /// Stiffness coefficient, d > 0.
    pub d: f64,
}

impl Params {
    /// Validates the sign and finiteness constraints.
    pub fn new(l: f64, alpha: f64, beta: f64, c: f64, d: f64) -> Result<Self, Error> {
        let p = Params { l, alpha, beta, c, d };
        if !(l.is_finite() && l >= 0.0) {
            return Err(Error::InvalidParams("l must be finite and >= 0"));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParams("alpha must be finite and > 0"));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParams("beta must be finite and > 0"));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParams("c must be finite and > 0"));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidParams("d must be finite and > 0"));
        }
        Ok(p)
    }

    /// Uniqueness regime: l <= min(alpha, beta).
    pub fn well_posed(&self) -> bool {
        self.l <= self.alpha.min(self.beta)
    }

    /// Decay-theory regime: l < alpha.
    pub fn strict_gap(&self) -> bool {
        self.l < self.alpha
    }
}

/// Oscillation classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// u and u' change sign on every half-line (alpha above critical, or
    /// critical with weak damping c < c0).
    Oscillatory,
    /// Finitely many zeros; eventually sign(u)·sign(u') = -1.
    NonOscillatoryFiniteZeros,
    /// Critical exponent with c >= c0: at most one zero of u.
    CriticalAtMostOneZero,
    /// The hypotheses l <= beta and l < alpha fail (or no evidence either way
    /// in the empirical classifier).
    OutsideTheory,
}

impl Regime {
    /// Stable name used in reports.
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Oscillatory => "Oscillatory",
            Regime::NonOscillatoryFiniteZeros => "NonOscillatoryFiniteZeros",
            Regime::CriticalAtMostOneZero => "CriticalAtMostOneZero",
            Regime::OutsideTheory => "OutsideTheory",
        }
    }
}

impl core::fmt::Display for Regime {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Critical damping exponent alpha* = (beta(l+1)+l)/(beta+2).
pub fn alpha_star(p: &Params) -> f64 {
    (p.beta * (p.l + 1.0) + p.l) / (p.beta + 2.0)
}

/// Critical damping constant
/// c0 = (beta+2)·((beta+2)(l+1)/(d(beta+1)(l+2)))^{(beta+1)/(beta+2)}.
///
/// Strictly decreasing in d.
pub fn critical_c0(p: &Params) -> f64 {
    let inner = (p.beta + 2.0) * (p.l + 1.0) / (p.d * (p.beta + 1.0) * (p.l + 2.0));
    (p.beta + 2.0) * pow_abs(inner, (p.beta + 1.0) / (p.beta + 2.0))
}

fn approx_eq_rel(x: f64, y: f64) -> bool {
    libm::fabs(x - y) <= CRITICAL_REL_TOL * libm::fabs(x).max(libm::fabs(y))
}

/// Theoretical regime of the parameters. Total: every valid [`Params`] maps
/// to exactly one tag. Returns [`Regime::OutsideTheory`] whenever l > beta or
/// alpha <= l rather than guessing.
pub fn classify_theoretical(p: &Params) -> Regime {
    if !(p.l < p.alpha && p.l <= p.beta) {
        return Regime::OutsideTheory;
    }
    let astar = alpha_star(p);
    if approx_eq_rel(p.alpha, astar) {
        let c0 = critical_c0(p);
        if p.c < c0 && !approx_eq_rel(p.c, c0) {
            Regime::Oscillatory
        } else {
            Regime::CriticalAtMostOneZero
        }
    } else if p.alpha > astar {
        Regime::Oscillatory
    } else {
        Regime::NonOscillatoryFiniteZeros
    }
}

/// Energy E(u, u') = ((l+1)/(l+2))|u'|^{l+2} + (d/(beta+2))|u|^{beta+2}.
///
/// Nonnegative, zero iff (u, u') = (0, 0), even in (u, u').
pub fn energy(p: &Params, u: f64, du: f64) -> f64 {
    (p.l + 1.0) / (p.l + 2.0) * pow_abs(du, p.l + 2.0)
        + p.d / (p.beta + 2.0) * pow_abs(u, p.beta + 2.0)
}

/// Exact limits of the fast-solution amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticConstants {
    /// lim t^{(1-alpha+l)/(alpha-l)} |u(t)|.
    pub k_u: f64,
    /// lim t^{1/(alpha-l)} |u'(t)|.
    pub k_du: f64,
}

/// Exact asymptotic constants of fast solutions:
/// K_du = ((l+1)/(c(alpha-l)))^{1/(alpha-l)}, K_u = ((alpha-l)/(1-alpha+l))·K_du.
///
/// Requires the fast-solution regime l < alpha < alpha* (which also forces
/// alpha < l+1, so 1-alpha+l > 0).
pub fn asymptotic_constants(p: &Params) -> Result<AsymptoticConstants, Error> {
    let gap = p.alpha - p.l;
    if !(gap > 0.0 && p.alpha < alpha_star(p)) {
        return Err(Error::RegimeNotApplicable(
            "asymptotic constants need l < alpha < alpha*",
        ));
    }
    if !(p.alpha < p.l + 1.0) {
        return Err(Error::RegimeNotApplicable(
            "asymptotic constants need alpha < l + 1",
        ));
    }
    let k_du = pow_abs((p.l + 1.0) / (p.c * gap), 1.0 / gap);
    let k_u = gap / (1.0 - p.alpha + p.l) * k_du;
    Ok(AsymptoticConstants { k_u, k_du })
}

/// Super-solution bound w(t) = ((l+2)/(alpha-l))^{(l+1)/(alpha-l)} · t^{-(l+1)/(alpha-l)}
/// dominating the constructor iterates. Strictly decreasing in t.
pub fn comparison_bound(p: &Params, t: f64) -> Result<f64, Error> {
    let gap = p.alpha - p.l;
    if !(gap > 0.0) {
        return Err(Error::DomainError("comparison bound needs alpha > l"));
    }
    let e = (p.l + 1.0) / gap;
    Ok(pow_abs((p.l + 2.0) / gap, e) * pow_abs(t, -e))
}

/// Flux variable p = |u'|^l u' from the velocity.
pub fn flux_from_velocity(p: &Params, du: f64) -> f64 {
    sgn(du) * pow_abs(du, p.l + 1.0)
}

/// Velocity u' = sign(p)·|p|^{1/(l+1)} from the flux.
pub fn velocity_from_flux(p: &Params, flux: f64) -> f64 {
    sgn(flux) * pow_abs(flux, 1.0 / (p.l + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(l: f64, alpha: f64, beta: f64, c: f64, d: f64) -> Params {
        Params::new(l, alpha, beta, c, d).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Params::new(-0.1, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(Params::new(0.0, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(Params::new(0.0, 1.0, -1.0, 1.0, 1.0).is_err());
        assert!(Params::new(0.0, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(Params::new(0.0, 1.0, 1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn alpha_star_values() {
        // l=0, beta=1 -> 1/3; l=1, beta=1 -> 1; beta=l collapses to l
        assert!((alpha_star(&params(0.0, 1.0, 1.0, 1.0, 1.0)) - 1.0 / 3.0).abs() < 1e-15);
        assert!((alpha_star(&params(1.0, 2.0, 1.0, 1.0, 1.0)) - 1.0).abs() < 1e-15);
        for &l in &[0.5, 1.0, 2.0] {
            let p = params(l, l + 0.5, l, 1.0, 1.0);
            assert!((alpha_star(&p) - l).abs() < 1e-14);
        }
    }

    #[test]
    fn alpha_star_reduces_to_scalar_threshold_at_l_zero() {
        for &beta in &[0.5, 1.0, 2.0, 3.7] {
            let p = params(0.0, 1.0, beta, 1.0, 1.0);
            assert_eq!(alpha_star(&p), beta / (beta + 2.0));
        }
    }

    #[test]
    fn critical_boundary_is_sharp() {
        // exactly at c = c0 the verdict is critical; strictly below, oscillatory
        let base = params(0.0, 1.0 / 3.0, 1.0, 1.0, 1.0);
        let c0 = critical_c0(&base);
        let at = params(0.0, 1.0 / 3.0, 1.0, c0, 1.0);
        assert_eq!(classify_theoretical(&at), Regime::CriticalAtMostOneZero);
        let below = params(0.0, 1.0 / 3.0, 1.0, c0 * (1.0 - 1e-9), 1.0);
        assert_eq!(classify_theoretical(&below), Regime::Oscillatory);
        let above = params(0.0, 1.0 / 3.0, 1.0, c0 * (1.0 + 1e-9), 1.0);
        assert_eq!(classify_theoretical(&above), Regime::CriticalAtMostOneZero);
    }

    #[test]
    fn alpha_star_range() {
        // alpha* < l+1 always; alpha* >= l iff beta >= l
        for &(l, beta) in &[(0.0, 1.0), (1.0, 3.0), (2.0, 2.0), (1.5, 0.5), (0.3, 7.0)] {
            let p = params(l, l + 0.1, beta, 1.0, 1.0);
            let a = alpha_star(&p);
            assert!(a < l + 1.0);
            assert_eq!(a >= l - 1e-15, beta >= l);
        }
    }

    #[test]
    fn critical_c0_values() {
        // l=0, beta=1, d=1 -> 3 (3/4)^{2/3}
        let c0 = critical_c0(&params(0.0, 1.0, 1.0, 1.0, 1.0));
        assert!((c0 - 2.476_445_436_670_97).abs() < 1e-14);
        // l=0, beta=2, d=1 -> 4 (2/3)^{3/4}
        let c0 = critical_c0(&params(0.0, 1.0, 2.0, 1.0, 1.0));
        assert!((c0 - 2.951_151_785_867_524_2).abs() < 1e-14);
        // strictly decreasing in d
        let a = critical_c0(&params(0.0, 1.0, 1.0, 1.0, 1.0));
        let b = critical_c0(&params(0.0, 1.0, 1.0, 1.0, 2.0));
        assert!(a > b);
    }

    #[test]
    fn classify_examples() {
        use Regime::*;
        assert_eq!(classify_theoretical(&params(0.0, 1.0, 1.0, 1.0, 1.0)), Oscillatory);
        assert_eq!(
            classify_theoretical(&params(1.0, 1.2, 3.0, 1.0, 1.0)),
            NonOscillatoryFiniteZeros
        );
        // alpha = alpha* = 1/3 exactly (as an f64 fraction), c = 3 > c0 ~ 2.4764
        assert_eq!(
            classify_theoretical(&params(0.0, 1.0 / 3.0, 1.0, 3.0, 1.0)),
            CriticalAtMostOneZero
        );
        // same threshold, weak damping
        assert_eq!(
            classify_theoretical(&params(0.0, 1.0 / 3.0, 1.0, 1.0, 1.0)),
            Oscillatory
        );
        // hypotheses fail
        assert_eq!(classify_theoretical(&params(2.0, 1.0, 3.0, 1.0, 1.0)), OutsideTheory);
        assert_eq!(classify_theoretical(&params(1.0, 2.0, 0.5, 1.0, 1.0)), OutsideTheory);
    }

    #[test]
    fn energy_values() {
        let p = params(0.0, 1.0, 2.0, 1.0, 1.0);
        assert_eq!(energy(&p, 0.0, 0.0), 0.0);
        assert!((energy(&p, 1.0, 1.0) - 0.75).abs() < 1e-15);
        let p = params(1.0, 1.5, 1.0, 1.0, 1.0);
        assert!((energy(&p, 0.0, 1.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn energy_even_symmetry() {
        let p = params(0.7, 1.1, 2.3, 0.8, 1.7);
        for &(u, du) in &[(0.3, -1.2), (2.0, 0.0), (-0.5, 0.01)] {
            assert_eq!(energy(&p, u, du), energy(&p, -u, -du));
        }
    }

    #[test]
    fn asymptotic_constant_values() {
        // l=0, alpha=0.5, c=1: K_du = 2^2 = 4, K_u = (0.5/0.5)·4 = 4
        let p = params(0.0, 0.5, 3.0, 1.0, 1.0); // alpha* = 3/5 > 1/2
        let k = asymptotic_constants(&p).unwrap();
        assert!((k.k_du - 4.0).abs() < 1e-14);
        assert!((k.k_u - 4.0).abs() < 1e-14);
        // outside the regime
        assert!(asymptotic_constants(&params(0.0, 1.0, 1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn asymptotic_constant_c_scaling() {
        // K_du(c = 2^k) = 2^{-k/(alpha-l)} K_du(c = 1), exactly in closed form
        let base = params(0.0, 0.5, 3.0, 1.0, 1.0);
        let k1 = asymptotic_constants(&base).unwrap().k_du;
        for k in 1..4 {
            let scaled = params(0.0, 0.5, 3.0, libm::exp2(k as f64), 1.0);
            let kc = asymptotic_constants(&scaled).unwrap().k_du;
            let expect = libm::exp2(-(k as f64) / 0.5) * k1;
            assert!((kc - expect).abs() <= 1e-13 * expect.abs());
        }
    }

    #[test]
    fn comparison_bound_values() {
        let p = params(0.0, 0.5, 2.0, 1.0, 1.0);
        assert!((comparison_bound(&p, 1.0).unwrap() - 16.0).abs() < 1e-12);
        assert!((comparison_bound(&p, 4.0).unwrap() - 1.0).abs() < 1e-13);
        // strictly decreasing in t
        let mut prev = f64::INFINITY;
        for i in 1..30 {
            let w = comparison_bound(&p, i as f64).unwrap();
            assert!(w < prev);
            prev = w;
        }
        assert!(comparison_bound(&params(1.0, 0.5, 2.0, 1.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn flux_velocity_roundtrip() {
        let p = params(1.3, 2.0, 2.0, 1.0, 1.0);
        for &du in &[-2.0, -1e-4, 0.0, 0.7, 3.0] {
            let back = velocity_from_flux(&p, flux_from_velocity(&p, du));
            assert!((back - du).abs() <= 1e-13 * du.abs().max(1.0));
        }
    }
}
