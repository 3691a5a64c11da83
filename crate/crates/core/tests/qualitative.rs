//! Dynamics-level checks of the integrator and analysis stack against
//! independent routes: finite differences, quadrature identities, dyadic
//! zero counting, and closed forms.

use singosc::analysis::{
    classify_empirical, energy_audit, fit_decay_exponent, polar_path, theta_rate,
};
use singosc::constructor::{
    build_fast_solution, operator_k, FastSolutionOptions, TailMode,
};
use singosc::integrator::{
    integrate, integrate_regularized_with, integrate_with, IntegrateOptions,
};
use singosc::math::pow_abs;
use singosc::model::{classify_theoretical, comparison_bound, energy};
use singosc::{Params, Regime, Status};

fn p1() -> Params {
    Params::new(0.0, 1.0, 1.0, 1.0, 1.0).unwrap()
}

#[test]
fn oscillatory_run_interlaces_and_fills_windows() {
    let p = p1();
    let traj = integrate(&p, 1.0, 0.0, 100.0, 1e-9).unwrap();
    assert_eq!(traj.status, Status::Completed);
    assert_eq!(classify_theoretical(&p), Regime::Oscillatory);
    assert_eq!(classify_empirical(&p, &traj, 1).unwrap(), Regime::Oscillatory);

    // dyadic windows hold zeros
    for t in [5.0, 10.0, 20.0, 40.0] {
        let n = traj
            .u_zeros
            .iter()
            .filter(|&&z| z >= t && z <= 2.0 * t)
            .count();
        assert!(n >= 1, "window [{t}, {}] empty", 2.0 * t);
    }

    // between consecutive zeros of u' there is exactly one zero of u
    for w in traj.du_zeros.windows(2) {
        let n = traj
            .u_zeros
            .iter()
            .filter(|&&z| z > w[0] && z < w[1])
            .count();
        assert_eq!(n, 1, "interlacing broken in ({}, {})", w[0], w[1]);
    }
}

#[test]
fn energy_fit_tracks_the_sharp_rate() {
    let p = p1();
    let traj = integrate(&p, 1.0, 0.0, 100.0, 1e-9).unwrap();
    let series: Vec<(f64, f64)> = traj.samples.iter().map(|s| (s.t, s.energy)).collect();
    let fit = fit_decay_exponent(&series, (25.0, 100.0)).unwrap();
    // -(l+2)/(alpha-l) = -2
    assert!((fit.exponent + 2.0).abs() < 0.25, "{}", fit.exponent);
    assert!(fit.goodness > 0.99);
}

#[test]
fn dissipation_audit_with_dense_sampling() {
    let p = p1();
    let opts = IntegrateOptions {
        sample_dt: Some(1e-3),
        ..IntegrateOptions::default()
    };
    let traj = integrate_with(&p, 1.0, 0.0, 100.0, &opts).unwrap();
    let audit = energy_audit(&p, &traj, 0.5).unwrap();
    assert!(audit.max_energy_increase <= 50.0 * traj.tol);
    assert!(
        audit.dissipation_residual <= 1e-5,
        "residual {}",
        audit.dissipation_residual
    );
    // sharp-rate tail statistic stays away from zero
    let tail = audit.tail_liminf_statistic.unwrap();
    assert!(tail > 0.1, "tail statistic {tail}");

    // the pointwise envelope: |E(t_k) - E(0) + c Q_k| <= 100 tol (1 + t_k)
    let e0 = traj.samples[0].energy;
    let mut q = 0.0;
    let mut prev = &traj.samples[0];
    let mut prev_f = pow_abs(prev.du(&p), p.alpha + 2.0);
    for s in &traj.samples[1..] {
        let f = pow_abs(s.du(&p), p.alpha + 2.0);
        q += 0.5 * (prev_f + f) * (s.t - prev.t);
        let resid = (s.energy - e0 + p.c * q).abs();
        assert!(
            resid <= 100.0 * traj.tol * (1.0 + s.t),
            "envelope broken at t = {}: {resid}",
            s.t
        );
        prev = s;
        prev_f = f;
    }
}

#[test]
fn theta_rate_agrees_with_finite_differences() {
    let p = p1();
    let opts = IntegrateOptions {
        sample_dt: Some(1e-3),
        ..IntegrateOptions::default()
    };
    let traj = integrate_with(&p, 1.0, 0.0, 50.0, &opts).unwrap();
    let path = polar_path(&p, &traj);
    let mut checked = 0usize;
    for w in path.windows(3) {
        let (t0, _) = w[0];
        let (_, mid) = w[1];
        let (t2, _) = w[2];
        let s = libm::sin(mid.theta);
        let c = libm::cos(mid.theta);
        if s.abs() < 0.05 || c.abs() < 0.05 || mid.r < 1e-6 {
            continue;
        }
        let fd = (w[2].1.theta - w[0].1.theta) / (t2 - t0);
        let rate = theta_rate(&p, &mid).unwrap();
        assert!(
            (fd - rate).abs() <= 1e-3 * rate.abs(),
            "t={}: fd {fd} vs rate {rate}",
            w[1].0
        );
        checked += 1;
    }
    assert!(checked > 10_000, "only {checked} points checked");
}

#[test]
fn regularized_energy_identity() {
    // d/dt [ (eps/2)(u')^2 + E ] = -c|u'|^{alpha+2} for the regularized flow
    let p = Params::new(1.0, 1.5, 2.0, 1.0, 1.0).unwrap();
    let eps = 1e-2;
    let opts = IntegrateOptions {
        tol: 1e-10,
        sample_dt: Some(1e-3),
        ..IntegrateOptions::default()
    };
    let traj = integrate_regularized_with(&p, eps, 1.0, 0.0, 10.0, &opts).unwrap();
    let du0 = 0.0f64;
    let mut q = 0.0;
    let mut prev_t = traj.samples[0].t;
    let mut prev_f = 0.0;
    let mut worst: f64 = 0.0;
    let e0 = traj.samples[0].energy;
    for s in &traj.samples {
        let du = s.du(&p);
        let f = pow_abs(du, p.alpha + 2.0);
        q += 0.5 * (prev_f + f) * (s.t - prev_t);
        let lhs = s.energy + p.c * q + 0.5 * eps * (du * du - du0 * du0) - e0;
        worst = worst.max(lhs.abs());
        prev_t = s.t;
        prev_f = f;
    }
    assert!(worst <= 5e-6, "identity defect {worst}");
}

#[test]
fn regularized_deviation_shrinks_with_eps() {
    let p = Params::new(1.0, 1.5, 2.0, 1.0, 1.0).unwrap();
    let opts = IntegrateOptions {
        tol: 1e-10,
        sample_dt: Some(0.01),
        ..IntegrateOptions::default()
    };
    let reference = integrate_with(&p, 1.0, 0.0, 10.0, &opts).unwrap();
    let mut prev = f64::INFINITY;
    for eps in [1e-2, 1e-3, 1e-4] {
        let reg = integrate_regularized_with(&p, eps, 1.0, 0.0, 10.0, &opts).unwrap();
        assert_eq!(reg.samples.len(), reference.samples.len());
        let dev = reg
            .samples
            .iter()
            .zip(&reference.samples)
            .map(|(a, b)| (a.u - b.u).abs())
            .fold(0.0, f64::max);
        assert!(dev < prev, "eps={eps}: {dev} !< {prev}");
        prev = dev;
    }
}

#[test]
fn terminal_error_decreases_with_tolerance() {
    let p = p1();
    let truth = integrate(&p, 1.0, 0.0, 40.0, 1e-13).unwrap();
    let (ut, pt) = {
        let s = truth.samples.last().unwrap();
        (s.u, s.p)
    };
    // decade-spaced tolerances; adjacent halvings fluctuate with the phase
    // of the sign-change layers, decades average that out
    let tols = [1e-5, 1e-7, 1e-9, 1e-11];
    let mut errs = Vec::new();
    for &tol in &tols {
        let t = integrate(&p, 1.0, 0.0, 40.0, tol).unwrap();
        let s = t.samples.last().unwrap();
        errs.push(libm::hypot(s.u - ut, s.p - pt));
    }
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "errors not decreasing: {errs:?}");
    }
    // empirical order in tol across the whole range
    let order = libm::log(errs[0] / errs[3]) / libm::log(tols[0] / tols[3]);
    assert!(order >= 1.0, "order {order}, errors {errs:?}");
}

#[test]
fn constructed_solution_satisfies_the_equation() {
    // finite-difference residual of v' + v^{(a+1)/(l+1)} = eps K(v), which is
    // exactly the reconstructed equation residual shifted by one time unit
    let p = Params::new(0.0, 0.3, 2.0, 1.0, 1.0).unwrap();
    let run = |n: usize, fp_tol: f64| {
        let opts = FastSolutionOptions {
            t_max: 1e3,
            n_nodes: n,
            fp_tol,
            ..FastSolutionOptions::default()
        };
        let sol = build_fast_solution(&p, 100.0, &opts).unwrap();
        let kv = operator_k(&p, &sol.v, TailMode::BoundTail).unwrap();
        let nodes = sol.v.nodes();
        let vals = sol.v.values();
        let m = (p.alpha + 1.0) / (p.l + 1.0);
        let mut worst: f64 = 0.0;
        for i in 1..nodes.len() - 1 {
            let t = nodes[i];
            if !(5.0..=100.0).contains(&t) {
                continue;
            }
            // 3-point derivative on the uneven grid
            let (h0, h1) = (nodes[i] - nodes[i - 1], nodes[i + 1] - nodes[i]);
            let dv = (vals[i + 1] * h0 * h0 - vals[i - 1] * h1 * h1
                + vals[i] * (h1 * h1 - h0 * h0))
                / (h0 * h1 * (h0 + h1));
            let resid = dv + pow_abs(vals[i], m) - sol.eps_fp * kv.values()[i];
            worst = worst.max(resid.abs());
        }
        (sol, worst)
    };

    let (sol, worst) = run(1000, 1e-8);
    assert!(sol.residual <= 1e-6, "fixed-point residual {}", sol.residual);
    assert!(worst <= 1e-3, "fd residual {worst}");

    // u positive decreasing, du negative
    for w in sol.u.values().windows(2) {
        assert!(w[0] > w[1]);
        assert!(w[1] > 0.0);
    }
    assert!(sol.du.values().iter().all(|&x| x < 0.0));
    // v dominated by the comparison bound
    for (&t, &v) in sol.v.nodes().iter().zip(sol.v.values()) {
        assert!(v <= comparison_bound(&p, t).unwrap() * (1.0 + 1e-9));
    }

    // refining the grid and the fixed-point tolerance shrinks the defect
    let (_, worst_fine) = run(2000, 5e-9);
    assert!(worst_fine < worst, "{worst_fine} !< {worst}");
}

#[test]
fn tail_statistic_stable_toward_the_far_end() {
    // shrinking the tail window toward the far end cannot lower the
    // statistic, and the far-end minimum keeps at least half the value the
    // statistic takes at the window midpoint
    let p = p1();
    let traj = integrate(&p, 1.0, 0.0, 200.0, 1e-9).unwrap();
    let mut prev = 0.0;
    for frac in [0.9, 0.5, 0.25, 0.1] {
        let stat = energy_audit(&p, &traj, frac)
            .unwrap()
            .tail_liminf_statistic
            .unwrap();
        assert!(stat >= prev - 1e-15, "frac {frac}: {stat} < {prev}");
        prev = stat;
    }
    let kappa = 2.0; // (l+2)/(alpha-l)
    let t_mid = 0.5 * traj.t_last();
    let mid_value = traj
        .samples
        .iter()
        .min_by(|a, b| {
            (a.t - t_mid)
                .abs()
                .partial_cmp(&(b.t - t_mid).abs())
                .unwrap()
        })
        .map(|s| pow_abs(s.t, kappa) * s.energy)
        .unwrap();
    assert!(prev >= 0.5 * mid_value, "{prev} < half of {mid_value}");
}

#[test]
fn regularized_equilibrium_stays_zero() {
    let p = Params::new(1.0, 1.5, 2.0, 1.0, 1.0).unwrap();
    let traj = integrate_regularized_with(
        &p,
        1e-3,
        0.0,
        0.0,
        20.0,
        &IntegrateOptions::default(),
    )
    .unwrap();
    assert!(traj
        .samples
        .iter()
        .all(|s| s.u == 0.0 && s.p == 0.0 && s.energy == 0.0));
    assert!(traj.u_zeros.is_empty() && traj.du_zeros.is_empty());
}

#[test]
fn containment_improves_as_the_sector_shrinks() {
    use singosc::regions::{region_invariance_test, RegionSpec};
    let p = Params::new(0.0, 0.3, 2.0, 1.0, 1.0).unwrap();
    let loose = region_invariance_test(&p, &RegionSpec::new(1e-3, 1.0).unwrap(), 16, 100.0, 1e-3)
        .unwrap();
    let tight = region_invariance_test(&p, &RegionSpec::new(1e-4, 1.0).unwrap(), 16, 100.0, 1e-3)
        .unwrap();
    assert!(
        tight.contained_fraction >= loose.contained_fraction,
        "{} < {}",
        tight.contained_fraction,
        loose.contained_fraction
    );
    // trapped trajectories decay at the slow rate, not the fast one: every
    // fitted exponent sits closer to the slow reference
    let closer_to_slow = tight
        .runs
        .iter()
        .filter_map(|r| r.fitted_exponent)
        .filter(|e| (e - tight.slow_rate).abs() < (e - tight.fast_rate).abs())
        .count();
    assert!(
        2 * closer_to_slow > tight.runs.len(),
        "{closer_to_slow} of {}",
        tight.runs.len()
    );
}

#[test]
fn energy_floor_terminates_near_equilibrium() {
    // crank the floor up so it actually triggers within the horizon
    let p = p1();
    let opts = IntegrateOptions {
        energy_floor_rel: 1e-6,
        ..IntegrateOptions::default()
    };
    let traj = integrate_with(&p, 1.0, 0.0, 10_000.0, &opts).unwrap();
    assert_eq!(traj.status, Status::EnergyFloorReached);
    let e0 = energy(&p, 1.0, 0.0);
    let last = traj.samples.last().unwrap();
    assert!(last.energy < 1e-6 * e0);
    assert!(last.t < 10_000.0);
}
