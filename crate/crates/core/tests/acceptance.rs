//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N ... PASS|FAIL` line with the measured quantities.

use std::f64::consts::PI;
use std::time::Instant;

use bravl::channel_operator::{assemble, build_grid, mass_difference_bound_check, ChannelFunction, GridMap};
use bravl::kinematics::{critical_nu, critical_z, critical_z_prime, FINE_STRUCTURE};
use bravl::legendre::{verify_convolution_identities, verify_identities};
use bravl::spectral::{classify_bound_states, classify_embedded, refine, relative_bound_ratio, SpectralOptions};
use bravl::virial::{
    bound_profile, non_eigenfunction_residual, virial_residual, virial_residual_theorem_form, ProfileId, PROFILE_RANGE,
    PROFILE_SAMPLES,
};
use bravl::{Channel, PhysicalParams, QuadratureLevel, Spin};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

const SEQUENCE: [usize; 3] = [100, 200, 400];

fn report(n: u32, name: &str, ok: bool, detail: String) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {n} [{name}]: {verdict} :: {detail}");
}

fn channel(l: u32, spin: Spin) -> Channel {
    Channel::new(l, spin).unwrap()
}

#[test]
fn criterion_1_integral_identities() {
    let start = Instant::now();
    let ids = verify_identities(QuadratureLevel::DEFAULT);
    let six = [
        "g1_over_u",
        "g1_unit_interval",
        "g1_upper_interval",
        "g1_over_u2",
        "g0_halfpower",
        "g0_threehalfpower",
    ];
    let mut max_abs: f64 = 0.0;
    let mut ok = true;
    for id in six {
        let r = ids.iter().find(|r| r.id == id).expect("identity present");
        max_abs = max_abs.max(r.abs_error);
        ok &= r.within_abs(1e-8);
    }
    let conv = verify_convolution_identities(&[1.0, 4.0], QuadratureLevel::DEFAULT).unwrap();
    let max_rel = conv.iter().fold(0.0f64, |m, r| m.max(r.rel_error));
    ok &= conv.len() == 4 && conv.iter().all(|r| r.within_rel(1e-7));
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed <= 5.0;
    report(
        1,
        "integral identities",
        ok,
        format!("max abs err {max_abs:.2e} (tol 1e-8), convolution max rel err {max_rel:.2e} (tol 1e-7), {elapsed:.2}s (limit 5s)"),
    );
    assert!(ok);
}

#[test]
fn criterion_2_extremal_constants() {
    let start = Instant::now();
    let r = bound_profile(ProfileId::RatioR, PROFILE_RANGE, 0.0, PROFILE_SAMPLES).unwrap();
    let s = bound_profile(ProfileId::RatioS, PROFILE_RANGE, 0.0, PROFILE_SAMPLES).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let (rmin, ssup) = (r.extremum.value, s.extremum.value);
    let ok = (rmin - 0.75).abs() <= 1e-6 && (ssup - 2.0).abs() <= 1e-6 && elapsed <= 1.0;
    report(
        2,
        "extremal constants",
        ok,
        format!("min r = {rmin:.12} (0.75 ± 1e-6), sup s = {ssup:.12} (2 ± 1e-6), {elapsed:.3}s (limit 1s)"),
    );
    assert!(ok);
}

#[test]
fn criterion_3_critical_charges() {
    let zc = critical_z(FINE_STRUCTURE).unwrap();
    let zcp = critical_z_prime(FINE_STRUCTURE).unwrap();
    let ok = (zc - 124.16).abs() <= 0.01 && (zcp - 102.78).abs() <= 0.01;
    report(
        3,
        "critical charges",
        ok,
        format!("Z_c = {zc:.6} (124.16 ± 0.01), Z_c' = {zcp:.6} (102.78 ± 0.01)"),
    );
    assert!(ok);
}

#[test]
fn criterion_4_relative_bound_saturation() {
    let start = Instant::now();
    let grid = build_grid(400, GridMap::default()).unwrap();
    let at_critical = PhysicalParams::natural(critical_nu()).unwrap();
    let low = relative_bound_ratio(&assemble(channel(0, Spin::Up), &grid, &at_critical).unwrap()).unwrap();
    let high = relative_bound_ratio(&assemble(channel(5, Spin::Up), &grid, &at_critical).unwrap()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let ok = (0.90..=1.02).contains(&low) && high < 0.9 && elapsed <= 60.0;
    report(
        4,
        "relative-bound saturation",
        ok,
        format!("(0,+1/2) ratio {low:.6} in [0.90, 1.02], (5,+1/2) ratio {high:.6} < 0.9, {elapsed:.1}s (limit 60s)"),
    );
    assert!(ok);
}

#[test]
fn criterion_5_virial_convergence() {
    let params = PhysicalParams::natural(0.5).unwrap();
    let refinement = refine(channel(0, Spin::Up), &params, &SEQUENCE, SpectralOptions::default()).unwrap();
    let bound = classify_bound_states(&refinement);
    let ground = bound.ground_state().copied();
    let mut corollary = Vec::new();
    let mut theorem = Vec::new();
    for (matrix, solution) in &refinement.levels {
        let phi =
            ChannelFunction::from_symmetric_vector(matrix.shared_grid(), solution.eigenvectors.column(0).as_slice())
                .unwrap();
        let lambda = solution.eigenvalues[0];
        corollary.push(virial_residual(lambda, &phi, matrix).unwrap().relative_residual);
        theorem.push(
            virial_residual_theorem_form(lambda, &phi, matrix)
                .unwrap()
                .relative_residual,
        );
    }
    let decreasing = corollary.windows(2).all(|w| w[1] < w[0]);
    let small = corollary[2] <= 1e-3;
    let agree = corollary
        .iter()
        .zip(&theorem)
        .all(|(c, t)| t / c <= 2.0 && c / t <= 2.0);
    let ok = ground.is_some_and(|g| g.index == 0) && decreasing && small && agree;
    report(
        5,
        "virial residual convergence",
        ok,
        format!(
            "ground state {:?}, corollary residuals {corollary:?}, theorem residuals {theorem:?}",
            ground.map(|g| g.value)
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_6_embedded_exclusion() {
    let start = Instant::now();
    let channels = [
        channel(0, Spin::Up),
        channel(1, Spin::Down),
        channel(1, Spin::Up),
        channel(2, Spin::Down),
    ];
    let mut ok = true;
    let mut details = Vec::new();
    for ch in channels {
        let base = refine(
            ch,
            &PhysicalParams::natural(0.0).unwrap(),
            &SEQUENCE,
            SpectralOptions::default(),
        )
        .unwrap();
        for nu in [0.25, 0.5, 0.75] {
            let params = PhysicalParams::natural(nu).unwrap();
            let refinement = base.recoupled(&params).unwrap();
            let embedded = classify_embedded(&refinement).unwrap();
            let lower = (1.0 - params.charge_ratio()) * params.rest_energy();
            let mut bound_ok = true;
            for (_, s) in &refinement.levels {
                for &l in s.eigenvalues.iter().filter(|&&l| l < 1.0) {
                    bound_ok &= l >= lower - 1e-3;
                }
            }
            let row_ok = embedded.stable_embedded.is_empty() && bound_ok;
            ok &= row_ok;
            details.push(format!(
                "{ch} nu={nu}: stable>=mc2 {} of {}, lower bound {}",
                embedded.stable_embedded.len(),
                embedded.examined,
                if bound_ok { "ok" } else { "VIOLATED" }
            ));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed <= 600.0;
    report(
        6,
        "embedded-eigenvalue exclusion",
        ok,
        format!("{}; {elapsed:.1}s (limit 600s)", details.join("; ")),
    );
    assert!(ok);
}

#[test]
fn criterion_7_scaling_covariance() {
    let grid = build_grid(100, GridMap::default()).unwrap();
    let params = PhysicalParams::natural(0.5).unwrap();
    let ch = channel(0, Spin::Up);
    let base = assemble(ch, &grid, &params).unwrap();
    let mut worst: f64 = 0.0;
    for a in [0.5, 2.0] {
        let scaled = assemble(ch, &grid.scaled(a).unwrap(), &params.with_mass(a).unwrap()).unwrap();
        for (x, y) in scaled.matrix().iter().zip(base.matrix().iter()) {
            let target = a * y;
            worst = worst.max((x - target).abs() / target.abs().max(f64::MIN_POSITIVE));
        }
    }
    let ok = worst <= 1e-12;
    report(
        7,
        "scaling covariance",
        ok,
        format!("max entrywise relative deviation {worst:.2e} (tol 1e-12), a in {{0.5, 2}}, N = 100"),
    );
    assert!(ok);
}

fn random_vector(rng: &mut StdRng) -> [f64; 3] {
    // log-uniform magnitude on [1e-3, 1e3], isotropic direction
    let r = 10f64.powf(rng.random_range(-3.0..3.0));
    let cos_theta: f64 = rng.random_range(-1.0..1.0);
    let phi = rng.random_range(0.0..2.0 * PI);
    let sin_theta = (1.0 - cos_theta * cos_theta).sqrt();
    [r * sin_theta * phi.cos(), r * sin_theta * phi.sin(), r * cos_theta]
}

#[test]
fn criterion_8_mass_difference_bound() {
    let mut rng = StdRng::seed_from_u64(0x5eed_2024);
    let pairs: Vec<_> = (0..10_000)
        .map(|_| (random_vector(&mut rng), random_vector(&mut rng)))
        .collect();
    let params = PhysicalParams::natural(0.5).unwrap();
    let r = mass_difference_bound_check(&pairs, &params).unwrap();
    let ok = r.holds();
    report(
        8,
        "mass-difference kernel bound",
        ok,
        format!(
            "{} of {} pairs violate the bracket bound (max ratio {:.6}, worst pair {:?}); \
             {} exceed sqrt(2) times the bound",
            r.violations, r.samples, r.max_ratio, r.worst_pair, r.inflated_violations
        ),
    );
    assert!(ok, "the stated bound fails on {} sampled pairs", r.violations);
}

#[test]
fn criterion_9_non_eigenfunction_rejection() {
    let params = PhysicalParams::natural(0.0).unwrap();
    let mut ok = true;
    let mut min_value = f64::INFINITY;
    let mut max_dev: f64 = 0.0;
    for k in 0..1000 {
        let p = 10f64.powf(-4.0 + 8.0 * k as f64 / 999.0);
        let value = non_eigenfunction_residual(p, &params).unwrap();
        ok &= value > 0.0;
        min_value = min_value.min(value);
        // both brackets collapse to (e - 1)(e + 1)/e = p²/e
        let closed = p * p / p.hypot(1.0);
        max_dev = max_dev.max((closed - value).abs() / closed);
    }
    ok &= max_dev <= 1e-12;
    report(
        9,
        "non-eigenfunction rejection",
        ok,
        format!("1000 log-spaced p in [1e-4, 1e4]: min residual {min_value:.3e} > 0, closed form p^2/e deviation {max_dev:.1e} (tol 1e-12)"),
    );
    assert!(ok);
}
