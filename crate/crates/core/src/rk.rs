//! Dormand-Prince 5(4) embedded pair with the quartic dense-output
//! interpolant and the classic PI (Lund-stabilized) step controller.
//!
//! The pair is FSAL: the 7th stage of an accepted step is the first stage of
//! the next. Drivers in [`crate::integrator`] and [`crate::constructor`] own
//! their step loops; this module only provides one attempted step, the error
//! norm, the controller arithmetic, and interpolation inside a step.

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

/// 5th-order weights (also the 7th stage row: FSAL).
pub const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

/// Error weights b5 - b4 of the embedded 4th-order solution.
pub const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Dense-output polynomial coefficients: y(t0 + th) = y0 + h Σ_i k_i Σ_j P[i][j] t^{j+1}.
pub const P: [[f64; 4]; 7] = [
    [
        1.0,
        -8048581381.0 / 2820520608.0,
        8663915743.0 / 2820520608.0,
        -12715105075.0 / 11282082432.0,
    ],
    [0.0, 0.0, 0.0, 0.0],
    [
        0.0,
        131558114200.0 / 32700410799.0,
        -68118460800.0 / 10900136933.0,
        87487479700.0 / 32700410799.0,
    ],
    [
        0.0,
        -1754552775.0 / 470086768.0,
        14199869525.0 / 1410260304.0,
        -10690763975.0 / 1880347072.0,
    ],
    [
        0.0,
        127303824393.0 / 49829197408.0,
        -318862633887.0 / 49829197408.0,
        701980252875.0 / 199316789632.0,
    ],
    [
        0.0,
        -282668133.0 / 205662961.0,
        2019193451.0 / 616988883.0,
        -1453857185.0 / 822651844.0,
    ],
    [
        0.0,
        40617522.0 / 29380423.0,
        -110615467.0 / 29380423.0,
        69997945.0 / 29380423.0,
    ],
];

/// One attempted step with everything needed for dense output.
#[derive(Debug, Clone)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub h: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    pub k: [[f64; N]; 7],
}

impl<const N: usize> Step<N> {
    /// Interpolated state at t in [t0, t0 + h].
    pub fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let mut y = self.y0;
        for (ki, pi) in self.k.iter().zip(P.iter()) {
            // Horner in theta, lowest power theta^1
            let w = theta * (pi[0] + theta * (pi[1] + theta * (pi[2] + theta * pi[3])));
            for n in 0..N {
                y[n] += self.h * w * ki[n];
            }
        }
        y
    }
}

#[inline]
fn axpy<const N: usize>(y: &mut [f64; N], a: f64, x: &[f64; N]) {
    for n in 0..N {
        y[n] += a * x[n];
    }
}

/// Attempt one step of size h from (t, y) with k1 = f(t, y) already known.
/// Returns the step record and the raw (unscaled) error vector h·Σ E_i k_i.
pub fn try_step<const N: usize, F: FnMut(f64, &[f64; N]) -> [f64; N]>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
) -> (Step<N>, [f64; N]) {
    let mut k = [[0.0; N]; 7];
    k[0] = *k1;

    let mut yt = *y;
    axpy(&mut yt, h * A21, &k[0]);
    k[1] = f(t + C2 * h, &yt);

    let mut yt = *y;
    axpy(&mut yt, h * A31, &k[0]);
    axpy(&mut yt, h * A32, &k[1]);
    k[2] = f(t + C3 * h, &yt);

    let mut yt = *y;
    axpy(&mut yt, h * A41, &k[0]);
    axpy(&mut yt, h * A42, &k[1]);
    axpy(&mut yt, h * A43, &k[2]);
    k[3] = f(t + C4 * h, &yt);

    let mut yt = *y;
    axpy(&mut yt, h * A51, &k[0]);
    axpy(&mut yt, h * A52, &k[1]);
    axpy(&mut yt, h * A53, &k[2]);
    axpy(&mut yt, h * A54, &k[3]);
    k[4] = f(t + C5 * h, &yt);

    let mut yt = *y;
    axpy(&mut yt, h * A61, &k[0]);
    axpy(&mut yt, h * A62, &k[1]);
    axpy(&mut yt, h * A63, &k[2]);
    axpy(&mut yt, h * A64, &k[3]);
    axpy(&mut yt, h * A65, &k[4]);
    k[5] = f(t + h, &yt);

    let mut y1 = *y;
    for i in 0..6 {
        axpy(&mut y1, h * B[i], &k[i]);
    }
    k[6] = f(t + h, &y1);

    let mut err = [0.0; N];
    for i in 0..7 {
        axpy(&mut err, h * E[i], &k[i]);
    }

    (
        Step {
            t0: t,
            h,
            y0: *y,
            y1,
            k,
        },
        err,
    )
}

/// RMS error norm scaled by atol + rtol·max(|y0|, |y1|).
pub fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], tol: f64) -> f64 {
    let mut s = 0.0;
    for n in 0..N {
        let sc = tol + tol * libm::fabs(y0[n]).max(libm::fabs(y1[n]));
        let e = err[n] / sc;
        s += e * e;
    }
    libm::sqrt(s / N as f64)
}

/// PI step controller with Lund stabilization (the DOPRI5 defaults:
/// safety 0.9, beta 0.04, growth capped to 10x, shrink to 5x).
pub struct Controller {
    facold: f64,
    expo1: f64,
}

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
/// Controller exponent when the scaled error targets the local error per
/// step (estimate order 5).
pub const EXPO1_PER_STEP: f64 = 0.2 - BETA * 0.75;
/// Controller exponent when the scaled error targets the error per unit
/// step (effective order 4). Per-unit-step control keeps the *global* error
/// proportional to the tolerance.
pub const EXPO1_PER_UNIT_STEP: f64 = 0.25 - BETA * 0.75;
const FAC_SHRINK_MAX: f64 = 5.0; // h may shrink at most 5x per rejection
const FAC_GROW_MAX: f64 = 10.0; // h may grow at most 10x per acceptance

impl Controller {
    pub fn new(expo1: f64) -> Self {
        Controller {
            facold: 1e-4,
            expo1,
        }
    }

    /// Next step size after an accepted step with scaled error `err`.
    pub fn accept(&mut self, h: f64, err: f64) -> f64 {
        let fac11 = libm::pow(err.max(1e-30), self.expo1);
        let fac = fac11 / libm::pow(self.facold, BETA);
        let fac = (fac / SAFE).clamp(1.0 / FAC_GROW_MAX, FAC_SHRINK_MAX);
        self.facold = err.max(1e-4);
        h / fac
    }

    /// Next step size after a rejected step.
    pub fn reject(&self, h: f64, err: f64) -> f64 {
        let fac11 = libm::pow(err.max(1e-30), self.expo1);
        h / FAC_SHRINK_MAX.min(fac11 / SAFE)
    }
}

/// Starting step size (Hairer's HINIT): match the scale of y and f, then
/// refine with one explicit Euler probe of the second derivative.
pub fn initial_step<const N: usize, F: FnMut(f64, &[f64; N]) -> [f64; N]>(
    f: &mut F,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    tol: f64,
    hmax: f64,
) -> f64 {
    let sc = |y: &[f64; N], i: usize| tol + tol * libm::fabs(y[i]);
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        dnf += (f0[i] / sc(y0, i)) * (f0[i] / sc(y0, i));
        dny += (y0[i] / sc(y0, i)) * (y0[i] / sc(y0, i));
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        0.01 * libm::sqrt(dny / dnf)
    };
    h = h.min(hmax);

    let mut y1 = *y0;
    axpy(&mut y1, h, f0);
    let f1 = f(t0 + h, &y1);
    let mut der2 = 0.0;
    for i in 0..N {
        let e = (f1[i] - f0[i]) / sc(y0, i);
        der2 += e * e;
    }
    let der2 = libm::sqrt(der2) / h;
    let der12 = der2.max(libm::sqrt(dnf));
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        libm::pow(0.01 / der12, 0.2)
    };
    (100.0 * h).min(h1).min(hmax)
}
