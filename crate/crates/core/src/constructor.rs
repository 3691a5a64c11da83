//! Constructive realization of fast solutions (regime l < alpha < alpha*,
//! normalization c = d = 1).
//!
//! Writing v = (-u')^{l+1} for a positive decreasing solution, the equation
//! turns into the integro-differential fixed point
//!
//! ```text
//! v' + v^{(alpha+1)/(l+1)} = eps · K(v),
//! K(v)(t) = (∫_t^∞ v^{1/(l+1)}(s) ds)^{beta+1},      v(1) = phi,
//! ```
//!
//! solved by iterating v_{n+1} = solve(source = eps·K(v_n)) from v_0 = 0.
//! Every iterate stays pinned under the explicit super-solution
//!
//! ```text
//! w(t) = ((l+2)/(alpha-l))^{(l+1)/(alpha-l)} · t^{-(l+1)/(alpha-l)}
//! ```
//!
//! provided phi and the source respect the admissibility caps, and the
//! iteration is monotone nondecreasing. The solution u is recovered by
//! u(t) = ∫_{t+1}^∞ v^{1/(l+1)}, u'(t) = -v^{1/(l+1)}(t+1); it satisfies the
//! original equation with damping coefficient 1 and stiffness coefficient
//! eps, which leaves the fast decay exponents and the u'-asymptotic constant
//! (they depend only on l, alpha, c) intact.
//!
//! Discretization: a geometric grid on [1, T_max] (power-law solutions have
//! uniform relative resolution there), trapezoidal quadrature for K
//! accumulated from the right, and the embedded 5(4) pair for the scalar
//! forced equation between nodes with the source interpolated linearly.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::math::pow_abs;
use crate::model::{alpha_star, comparison_bound, Params};
use crate::rk;

/// Nonnegative sampled function on a strictly increasing node set.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl GridFunction {
    /// Build from matching node/value arrays; nodes must be finite and
    /// strictly increasing, values finite.
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self, Error> {
        if nodes.len() != values.len() {
            return Err(Error::DomainError("node and value arrays differ in length"));
        }
        if nodes.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if !nodes.iter().all(|x| x.is_finite()) || !values.iter().all(|x| x.is_finite()) {
            return Err(Error::DomainError("grid entries must be finite"));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::DomainError("nodes must be strictly increasing"));
        }
        Ok(GridFunction { nodes, values })
    }

    /// Geometric node set t_i = q^i covering [t0, t1] with n nodes.
    pub fn geometric_nodes(t0: f64, t1: f64, n: usize) -> Vec<f64> {
        let mut nodes = Vec::with_capacity(n);
        let lq = (libm::log(t1) - libm::log(t0)) / (n - 1) as f64;
        for i in 0..n {
            let t = if i == n - 1 {
                t1
            } else {
                t0 * libm::exp(i as f64 * lq)
            };
            nodes.push(t);
        }
        nodes
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest node spacing.
    pub fn max_spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Piecewise-linear value at t (clamped to the covered range).
    pub fn interp(&self, t: f64) -> f64 {
        let n = self.nodes.len();
        if t <= self.nodes[0] {
            return self.values[0];
        }
        if t >= self.nodes[n - 1] {
            return self.values[n - 1];
        }
        let idx = match self
            .nodes
            .binary_search_by(|x| x.partial_cmp(&t).unwrap())
        {
            Ok(i) => return self.values[i],
            Err(i) => i,
        };
        let (ta, tb) = (self.nodes[idx - 1], self.nodes[idx]);
        let (va, vb) = (self.values[idx - 1], self.values[idx]);
        va + (vb - va) * (t - ta) / (tb - ta)
    }
}

/// How the integral over [T_max, ∞) is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMode {
    /// Drop the tail (underestimates K near T_max).
    Truncate,
    /// Add the closed-form tail of the comparison bound,
    /// ∫_{T_max}^∞ w(s)^{1/(l+1)} ds.
    BoundTail,
}

fn check_fast_regime(p: &Params) -> Result<(), Error> {
    if !(p.l < p.alpha && p.alpha < alpha_star(p)) {
        return Err(Error::RegimeNotApplicable(
            "fast-solution construction needs l < alpha < alpha*",
        ));
    }
    Ok(())
}

/// Closed-form tail ∫_{t1}^∞ w(s)^{1/(l+1)} ds of the comparison bound.
fn bound_tail_integral(p: &Params, t1: f64) -> f64 {
    let gap = p.alpha - p.l;
    let w0 = pow_abs((p.l + 2.0) / gap, (p.l + 1.0) / gap);
    // integrand W0^{1/(l+1)} s^{-1/gap}, exponent -1/gap < -1 in this regime
    let ex = 1.0 / gap;
    pow_abs(w0, 1.0 / (p.l + 1.0)) * pow_abs(t1, 1.0 - ex) / (ex - 1.0)
}

/// Right-to-left trapezoid of v^{1/(l+1)}: I(t_i) = ∫_{t_i}^{T_max} + tail.
/// The bound tail is dropped when v(T_max) = 0: the fixed-point flow
/// continues a vanishing endpoint by zero, so the exact tail is zero there.
fn right_integral(p: &Params, v: &GridFunction, tail: TailMode) -> Vec<f64> {
    let n = v.len();
    let e = 1.0 / (p.l + 1.0);
    let mut acc = match tail {
        TailMode::Truncate => 0.0,
        TailMode::BoundTail if v.values[n - 1] == 0.0 => 0.0,
        TailMode::BoundTail => bound_tail_integral(p, v.nodes[n - 1]),
    };
    let mut out = vec![0.0; n];
    out[n - 1] = acc;
    for i in (0..n - 1).rev() {
        let fa = pow_abs(v.values[i], e);
        let fb = pow_abs(v.values[i + 1], e);
        acc += 0.5 * (fa + fb) * (v.nodes[i + 1] - v.nodes[i]);
        out[i] = acc;
    }
    out
}

/// The integral operator K(v)(t) = (∫_t^∞ v^{1/(l+1)} ds)^{beta+1} evaluated
/// at the nodes of v. Monotone: v1 <= v2 nodewise implies K(v1) <= K(v2).
pub fn operator_k(p: &Params, v: &GridFunction, tail: TailMode) -> Result<GridFunction, Error> {
    check_fast_regime(p)?;
    if let Some(&bad) = v.values.iter().find(|&&x| x < 0.0) {
        return Err(Error::BoundViolation {
            what: "operator K needs nonnegative input values",
            value: bad,
            limit: 0.0,
        });
    }
    let integral = right_integral(p, v, tail);
    let values = integral
        .iter()
        .map(|&i| pow_abs(i, p.beta + 1.0))
        .collect();
    GridFunction::new(v.nodes.clone(), values)
}

/// Admissibility cap for the initial value: phi_max = ((l+2)/(alpha-l))^{(l+1)/(alpha-l)}.
pub fn phi_cap(p: &Params) -> Result<f64, Error> {
    check_fast_regime(p)?;
    let gap = p.alpha - p.l;
    Ok(pow_abs((p.l + 2.0) / gap, (p.l + 1.0) / gap))
}

const FORCED_ODE_TOL: f64 = 1e-12;

/// Solve v' + v^{(alpha+1)/(l+1)} = f(t), v(grid[0]) = phi, on the given grid
/// with the source read from `source` by linear interpolation.
///
/// Admissibility (checked): 0 <= phi <= phi_cap and the weighted source
/// norm max_i t_i^{(alpha+1)/(alpha-l)} f(t_i) <= phi_cap/(alpha-l). Under
/// these the solution is nonnegative and dominated nodewise by the
/// comparison bound, which is verified on output.
pub fn solve_forced_ode(
    p: &Params,
    source: &GridFunction,
    phi: f64,
    grid: &[f64],
) -> Result<GridFunction, Error> {
    check_fast_regime(p)?;
    if grid.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: grid.len(),
        });
    }
    let gap = p.alpha - p.l;
    let cap = phi_cap(p)?;
    if !(0.0..=cap * (1.0 + 1e-12)).contains(&phi) {
        return Err(Error::BoundViolation {
            what: "initial value phi outside the admissible cap",
            value: phi,
            limit: cap,
        });
    }
    let source_cap = cap / gap;
    for (&t, &f) in source.nodes().iter().zip(source.values()) {
        if f < 0.0 {
            return Err(Error::BoundViolation {
                what: "source must be nonnegative",
                value: f,
                limit: 0.0,
            });
        }
        let weighted = pow_abs(t, (p.alpha + 1.0) / gap) * f;
        if weighted > source_cap * (1.0 + 1e-9) {
            return Err(Error::BoundViolation {
                what: "weighted source norm outside the admissible cap",
                value: weighted,
                limit: source_cap,
            });
        }
    }

    let m = (p.alpha + 1.0) / (p.l + 1.0);
    let mut rhs = |t: f64, y: &[f64; 1]| [source.interp(t) - pow_abs(y[0].max(0.0), m)];

    let mut values = Vec::with_capacity(grid.len());
    values.push(phi);
    let mut y = [phi];
    let mut k1 = rhs(grid[0], &y);
    let mut ctrl = rk::Controller::new(rk::EXPO1_PER_STEP);
    let span = grid[grid.len() - 1] - grid[0];
    let hmin = 1e-14 * span;
    let mut h = rk::initial_step(&mut rhs, grid[0], &y, &k1, FORCED_ODE_TOL, span / 10.0);

    for w in grid.windows(2) {
        let (mut t, t_next) = (w[0], w[1]);
        while t < t_next {
            h = h.min(span / 10.0);
            let landing = t + h >= t_next - 1e-13 * span;
            if landing {
                h = t_next - t;
            }
            if h < hmin {
                return Err(Error::NoConvergence {
                    iterations: 0,
                    last_change: h,
                });
            }
            let (step, errv) = rk::try_step(&mut rhs, t, &y, &k1, h);
            let err = if step.y1[0].is_finite() {
                rk::error_norm(&errv, &step.y0, &step.y1, FORCED_ODE_TOL)
            } else {
                f64::INFINITY
            };
            if err > 1.0 {
                h = if step.y1[0].is_finite() {
                    ctrl.reject(h, err)
                } else {
                    h * 0.25
                };
                continue;
            }
            t = if landing { t_next } else { t + h };
            y = step.y1;
            if y[0] < 0.0 {
                // the exact flow preserves v >= 0; clip solver undershoot
                y[0] = 0.0;
            }
            k1 = step.k[6];
            h = ctrl.accept(h, err);
        }
        values.push(y[0]);
    }

    // admissible data keep the solution under the explicit super-solution
    for (&t, &v) in grid.iter().zip(values.iter()) {
        let bound = comparison_bound(p, t)?;
        if v > bound * (1.0 + 1e-9) + 1e-300 {
            return Err(Error::BoundViolation {
                what: "forced-equation solution exceeds the comparison bound",
                value: v,
                limit: bound,
            });
        }
    }

    GridFunction::new(grid.to_vec(), values)
}

/// Options for [`build_fast_solution`].
#[derive(Debug, Clone, Copy)]
pub struct FastSolutionOptions {
    /// Right end of the grid. Default 1e4.
    pub t_max: f64,
    /// Node count of the geometric grid on [1, t_max]. Default 2000.
    pub n_nodes: usize,
    /// Source strength; None picks half the admissible maximum. Default None.
    pub eps_fp: Option<f64>,
    /// Fixed-point iteration cap. Default 50.
    pub max_iter: usize,
    /// Nodewise sup-change convergence threshold. Default 1e-8.
    pub fp_tol: f64,
    /// Tail handling. Default BoundTail (Truncate starves K near T_max and
    /// poisons the asymptotic-constant check).
    pub tail: TailMode,
}

impl Default for FastSolutionOptions {
    fn default() -> Self {
        FastSolutionOptions {
            t_max: 1e4,
            n_nodes: 2000,
            eps_fp: None,
            max_iter: 50,
            fp_tol: 1e-8,
            tail: TailMode::BoundTail,
        }
    }
}

/// A constructed fast solution.
#[derive(Debug, Clone)]
pub struct FastSolution {
    /// Fixed point v = (-u')^{l+1} on the grid over [1, T_max].
    pub v: GridFunction,
    /// u(t) = ∫_{t+1}^∞ v^{1/(l+1)}, on nodes shifted down by 1.
    pub u: GridFunction,
    /// u'(t) = -v^{1/(l+1)}(t+1), on the same shifted nodes.
    pub du: GridFunction,
    /// Final defect max_i |v' + v^{(alpha+1)/(l+1)} - eps·K(v)| at the nodes,
    /// with v' taken from the forced equation the last iterate solved.
    pub residual: f64,
    /// Iterations performed.
    pub iterations: usize,
    /// Source strength actually used.
    pub eps_fp: f64,
    /// Grid estimate of the K-continuity constant in ||K(v)||_Y <= C ||v||_X^{beta+1}.
    pub c_est: f64,
    /// Initial value v(1).
    pub phi: f64,
}

/// Iterate the integro-differential fixed point from v = 0 and reconstruct
/// the solution. Requires c = d = 1 (the construction's homogeneity
/// normalization) and l < alpha < alpha*.
pub fn build_fast_solution(
    p: &Params,
    phi: f64,
    opts: &FastSolutionOptions,
) -> Result<FastSolution, Error> {
    check_fast_regime(p)?;
    if p.c != 1.0 || p.d != 1.0 {
        return Err(Error::InvalidParams(
            "fast-solution construction uses the c = d = 1 normalization",
        ));
    }
    if !(opts.t_max > 1.0 && opts.t_max.is_finite()) {
        return Err(Error::DomainError("t_max must be finite and > 1"));
    }
    if opts.n_nodes < 16 {
        return Err(Error::InsufficientData {
            needed: 16,
            got: opts.n_nodes,
        });
    }
    if !(opts.fp_tol > 0.0) {
        return Err(Error::DomainError("fp_tol must be > 0"));
    }

    let gap = p.alpha - p.l;
    let cap = phi_cap(p)?;
    let nodes = GridFunction::geometric_nodes(1.0, opts.t_max, opts.n_nodes);

    // grid estimate of the K-continuity constant from the comparison bound
    let wb = GridFunction::new(
        nodes.clone(),
        nodes
            .iter()
            .map(|&t| comparison_bound(p, t))
            .collect::<Result<Vec<_>, _>>()?,
    )?;
    let kw = operator_k(p, &wb, opts.tail)?;
    let y_norm = kw
        .nodes()
        .iter()
        .zip(kw.values())
        .map(|(&t, &v)| pow_abs(t, (p.alpha + 1.0) / gap) * v)
        .fold(0.0, f64::max);
    let c_est = y_norm / pow_abs(cap, p.beta + 1.0);

    // admissible source strength: eps·C_est·cap^{(beta+1)/(l+1)} <= cap/gap
    let eps_max = cap / (gap * c_est * pow_abs(cap, (p.beta + 1.0) / (p.l + 1.0)));
    let eps_fp = match opts.eps_fp {
        None => 0.5 * eps_max,
        Some(e) => {
            if !(e >= 0.0 && e <= eps_max * (1.0 + 1e-9)) {
                return Err(Error::BoundViolation {
                    what: "eps_fp outside the contraction-admissible range",
                    value: e,
                    limit: eps_max,
                });
            }
            e
        }
    };

    let mut v = GridFunction::new(nodes.clone(), vec![0.0; nodes.len()])?;
    let mut source = GridFunction::new(nodes.clone(), vec![0.0; nodes.len()])?;
    let mut iterations = 0;
    let mut converged = phi == 0.0 && eps_fp == 0.0;
    let mut last_change = 0.0;
    while iterations < opts.max_iter && !converged {
        let kv = operator_k(p, &v, opts.tail)?;
        let next_source = GridFunction::new(
            nodes.clone(),
            kv.values().iter().map(|&x| eps_fp * x).collect(),
        )?;
        let next = solve_forced_ode(p, &next_source, phi, &nodes)?;
        last_change = next
            .values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max);
        v = next;
        source = next_source;
        iterations += 1;
        converged = last_change <= opts.fp_tol;
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations,
            last_change,
        });
    }

    // residual against the final iterate's own K image; v' is exactly
    // source - v^m along the computed solution
    let kv = operator_k(p, &v, opts.tail)?;
    let residual = kv
        .values()
        .iter()
        .zip(source.values())
        .map(|(&k, &f)| libm::fabs(eps_fp * k - f))
        .fold(0.0, f64::max);

    // reconstruction on nodes shifted down by 1
    let integral = right_integral(p, &v, opts.tail);
    let shifted: Vec<f64> = nodes.iter().map(|&t| t - 1.0).collect();
    let u_vals = integral;
    let du_vals: Vec<f64> = v
        .values()
        .iter()
        .map(|&x| -pow_abs(x, 1.0 / (p.l + 1.0)))
        .collect();
    let u = GridFunction::new(shifted.clone(), u_vals)?;
    let du = GridFunction::new(shifted, du_vals)?;

    Ok(FastSolution {
        v,
        u,
        du,
        residual,
        iterations,
        eps_fp,
        c_est,
        phi,
    })
}
