//! Legendre functions of the second kind on `(1, ∞)`, the kernel profiles
//! `g_l(u) = Q_l((u + 1/u)/2)`, and quadrature checks of the closed-form
//! integrals of those profiles.
//!
//! `Q_l` is the recessive solution of the three-term recurrence. Forward
//! recurrence is used only where its error growth, about `ξ^{2l}` with
//! `ξ = t + sqrt(t² - 1)`, stays below `10`; everywhere else Miller's
//! backward recurrence is normalized against the exact `Q_0 = atanh(1/t)`.
//! All entry points accept the shifted argument `δ = t - 1` so callers can
//! pass `(p - p')² / (2pp')` without cancellation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{graded_rule_cached, GradedRule, QuadratureLevel};

/// Largest supported order.
pub const L_MAX: u32 = 12;

/// Arguments with `t - 1` below this are rejected.
pub const NEAR_SINGULAR_DELTA: f64 = 1e-12;

const FORWARD_GROWTH_LIMIT: f64 = std::f64::consts::LN_10;
const MILLER_DIGITS: f64 = 39.2; // ln(1e17)

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LegendreOrder(u32);

impl LegendreOrder {
    pub fn new(l: u32) -> Result<Self> {
        if l > L_MAX {
            return Err(Error::OrderTooLarge { order: l, max: L_MAX });
        }
        Ok(Self(l))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

/// `Q_l(t)` for `t > 1`.
pub fn legendre_q(order: LegendreOrder, t: f64) -> Result<f64> {
    if t.is_nan() || t <= 1.0 {
        return Err(Error::ArgumentOutOfDomain(t));
    }
    legendre_q_shifted(order, t - 1.0)
}

/// `Q_l(1 + δ)`.
pub fn legendre_q_shifted(order: LegendreOrder, delta: f64) -> Result<f64> {
    let mut out = [0.0; L_MAX as usize + 1];
    let values = q_sequence(order.get(), delta, &mut out)?;
    Ok(values[order.get() as usize])
}

/// `Q_0 .. Q_max` at `1 + δ`, written into `out[..=max]`.
pub fn q_sequence(max: u32, delta: f64, out: &mut [f64]) -> Result<&[f64]> {
    if max > L_MAX {
        return Err(Error::OrderTooLarge { order: max, max: L_MAX });
    }
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::ArgumentOutOfDomain(1.0 + delta));
    }
    if delta < NEAR_SINGULAR_DELTA {
        return Err(Error::NearSingular { delta });
    }
    let max = max as usize;
    let out = &mut out[..=max];
    fill_q(delta, out);
    Ok(out)
}

fn fill_q(delta: f64, out: &mut [f64]) {
    let max = out.len() - 1;
    let t = 1.0 + delta;
    let q0 = 0.5 * (2.0 / delta).ln_1p();
    out[0] = q0;
    if max == 0 {
        return;
    }
    // acosh(t), written through δ to keep precision near t = 1
    let log_xi = (delta + (delta * (2.0 + delta)).sqrt()).ln_1p();

    if 2.0 * max as f64 * log_xi <= FORWARD_GROWTH_LIMIT {
        out[1] = t * q0 - 1.0;
        for k in 1..max {
            let kf = k as f64;
            out[k + 1] = ((2.0 * kf + 1.0) * t * out[k] - kf * out[k - 1]) / (kf + 1.0);
        }
        return;
    }

    let start = max + (MILLER_DIGITS / (2.0 * log_xi)).ceil() as usize + 2;
    let mut upper = 0.0; // Q_{k+1}
    let mut current = 1.0; // Q_k
    for slot in out.iter_mut() {
        *slot = 0.0;
    }
    if start <= max {
        out[start] = current;
    }
    for k in (1..=start).rev() {
        let kf = k as f64;
        let lower = ((2.0 * kf + 1.0) * t * current - (kf + 1.0) * upper) / kf;
        upper = current;
        current = lower;
        if k - 1 <= max {
            out[k - 1] = current;
        }
        if current.abs() > 1e250 {
            upper *= 1e-250;
            current *= 1e-250;
            for slot in out.iter_mut() {
                *slot *= 1e-250;
            }
        }
    }
    let scale = q0 / current;
    for slot in out.iter_mut() {
        *slot *= scale;
    }
    out[0] = q0;
}

/// `(Q_a(1 + δ), Q_b(1 + δ))` from one recurrence pass, no near-singular guard.
pub(crate) fn q_two_orders_unchecked(a: u32, b: u32, delta: f64) -> (f64, f64) {
    if delta.is_nan() || delta <= 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let mut out = [0.0; L_MAX as usize + 1];
    fill_q(delta, &mut out[..=a.max(b) as usize]);
    (out[a as usize], out[b as usize])
}

/// `t - 1` for `t = (u + 1/u)/2`, given `u` and `u - 1` separately.
#[inline]
pub(crate) fn profile_delta(u: f64, u_minus_one: f64) -> f64 {
    u_minus_one * u_minus_one / (2.0 * u)
}

/// `g_l(u) = Q_l((u + 1/u)/2)`; symmetric under `u -> 1/u`.
pub fn g_profile(order: LegendreOrder, u: f64) -> Result<f64> {
    if u.is_nan() || u <= 0.0 || u == 1.0 {
        return Err(Error::InvalidParameter {
            name: "u",
            reason: format!("profile argument must be positive and != 1, got {u}"),
        });
    }
    legendre_q_shifted(order, profile_delta(u, u - 1.0))
}

fn g_unchecked(l: u32, u: f64, u_minus_one: f64) -> f64 {
    q_unchecked(l, profile_delta(u, u_minus_one))
}

/// `Q_l(1 + δ)` without the near-singular guard, for quadrature nodes that
/// approach the logarithmic singularity on purpose.
pub(crate) fn q_unchecked(l: u32, delta: f64) -> f64 {
    if delta.is_nan() || delta <= 0.0 {
        return f64::NAN;
    }
    let mut out = [0.0; L_MAX as usize + 1];
    fill_q(delta, &mut out[..=l as usize]);
    out[l as usize]
}

/// Outcome of one quadrature check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResult {
    pub id: String,
    pub computed: f64,
    pub reference: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub level: u32,
    /// Level and level + 1 agree to `1e-12` relative.
    pub converged: bool,
}

impl IdentityResult {
    fn new(id: &str, computed: f64, finer: f64, reference: f64, level: QuadratureLevel) -> Self {
        let abs_error = (computed - reference).abs();
        let scale = reference.abs().max(f64::MIN_POSITIVE);
        let converged = computed.is_finite() && (computed - finer).abs() <= 1e-12 * computed.abs().max(1.0);
        Self {
            id: id.to_string(),
            computed,
            reference,
            abs_error,
            rel_error: abs_error / scale,
            level: level.0,
            converged,
        }
    }

    pub fn within_abs(&self, tol: f64) -> bool {
        self.converged && self.abs_error <= tol
    }

    pub fn within_rel(&self, tol: f64) -> bool {
        self.converged && self.rel_error <= tol
    }
}

/// `∫_0^1 f(u, u - 1) du`.
fn integral_below_one(rule: &GradedRule, f: &impl Fn(f64, f64) -> f64) -> f64 {
    rule.integrate(0.5, |s| f(s, s - 1.0)) + rule.integrate(0.5, |s| f(1.0 - s, -s))
}

/// `∫_1^∞ f(u, u - 1) du` through `u = 1/v`.
fn integral_above_one(rule: &GradedRule, f: &impl Fn(f64, f64) -> f64) -> f64 {
    let near_infinity = rule.integrate(0.5, |v| f(1.0 / v, (1.0 - v) / v) / (v * v));
    let near_one = rule.integrate(0.5, |s| {
        let v = 1.0 - s;
        f(1.0 / v, s / v) / (v * v)
    });
    near_infinity + near_one
}

struct ProfileIntegrals {
    g1_over_u: f64,
    g1_below: f64,
    g1_above: f64,
    g1_over_u2: f64,
    g0_half_below: f64,
    g0_half_above: f64,
    g0_three_half_below: f64,
    g0_three_half_above: f64,
}

fn profile_integrals(level: QuadratureLevel) -> ProfileIntegrals {
    let rule = graded_rule_cached(level);
    let g1_over_u = |u: f64, d: f64| g_unchecked(1, u, d) / u;
    let g1 = |u: f64, d: f64| g_unchecked(1, u, d);
    let g1_over_u2 = |u: f64, d: f64| g_unchecked(1, u, d) / (u * u);
    let g0_half = |u: f64, d: f64| g_unchecked(0, u, d) / u.sqrt();
    let g0_three_half = |u: f64, d: f64| g_unchecked(0, u, d) / (u * u.sqrt());
    ProfileIntegrals {
        g1_over_u: integral_below_one(rule, &g1_over_u) + integral_above_one(rule, &g1_over_u),
        g1_below: integral_below_one(rule, &g1),
        g1_above: integral_above_one(rule, &g1),
        g1_over_u2: integral_below_one(rule, &g1_over_u2) + integral_above_one(rule, &g1_over_u2),
        g0_half_below: integral_below_one(rule, &g0_half),
        g0_half_above: integral_above_one(rule, &g0_half),
        g0_three_half_below: integral_below_one(rule, &g0_three_half),
        g0_three_half_above: integral_above_one(rule, &g0_three_half),
    }
}

/// Quadrature checks of the closed-form integrals of `g_0` and `g_1`.
/// Note `g_0(u) = ln|(u+1)/(u-1)|`.
pub fn verify_identities(level: QuadratureLevel) -> Vec<IdentityResult> {
    let a = profile_integrals(level);
    let b = profile_integrals(level.next());
    let quarter_pi2 = PI * PI / 4.0;
    let eighth_pi2 = PI * PI / 8.0;
    let two_pi = 2.0 * PI;
    vec![
        IdentityResult::new("g1_over_u", a.g1_over_u, b.g1_over_u, 2.0, level),
        IdentityResult::new("g1_unit_interval", a.g1_below, b.g1_below, eighth_pi2 - 0.5, level),
        IdentityResult::new("g1_upper_interval", a.g1_above, b.g1_above, eighth_pi2 + 0.5, level),
        IdentityResult::new("g1_over_u2", a.g1_over_u2, b.g1_over_u2, quarter_pi2, level),
        IdentityResult::new(
            "g1_full_line",
            a.g1_below + a.g1_above,
            b.g1_below + b.g1_above,
            quarter_pi2,
            level,
        ),
        IdentityResult::new(
            "g0_halfpower",
            a.g0_half_below + a.g0_half_above,
            b.g0_half_below + b.g0_half_above,
            two_pi,
            level,
        ),
        IdentityResult::new(
            "g0_threehalfpower",
            a.g0_three_half_below + a.g0_three_half_above,
            b.g0_three_half_below + b.g0_three_half_above,
            two_pi,
            level,
        ),
        IdentityResult::new(
            "g0_reflection_lower",
            a.g0_half_below,
            b.g0_half_below,
            a.g0_three_half_above,
            level,
        ),
        IdentityResult::new(
            "g0_reflection_upper",
            a.g0_half_above,
            b.g0_half_above,
            a.g0_three_half_below,
            level,
        ),
    ]
}

/// `∫_{ℝ³} |p - p'|^{-2} |p'|^{-exponent} dp'` after the angular integration
/// `∫ dΩ' |p - p'|^{-2} = (2π / (p p')) ln|(p + p')/(p - p')|`.
pub fn convolution_integral(p: f64, exponent: f64, level: QuadratureLevel) -> f64 {
    let rule = graded_rule_cached(level);
    // radial integrand in p', with the offset p' - p supplied separately
    let radial = |q: f64, offset: f64| {
        let angular = 2.0 * PI / (p * q) * g_unchecked(0, q / p, offset / p);
        q * q * q.powf(-exponent) * angular
    };
    let below = rule.integrate(0.5 * p, |s| radial(s, s - p)) + rule.integrate(0.5 * p, |s| radial(p - s, -s));
    let above = rule.integrate(0.5, |v| radial(p / v, p * (1.0 - v) / v) * p / (v * v))
        + rule.integrate(0.5, |s| {
            let v = 1.0 - s;
            radial(p / v, p * s / v) * p / (v * v)
        });
    below + above
}

/// Checks `∫ |p-p'|^{-2}|p'|^{-3/2} = 4π² p^{-1/2}` and
/// `∫ |p-p'|^{-2}|p'|^{-5/2} = 4π² p^{-3/2}` at each sample.
pub fn verify_convolution_identities(samples: &[f64], level: QuadratureLevel) -> Result<Vec<IdentityResult>> {
    let mut out = Vec::with_capacity(2 * samples.len());
    for &p in samples {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidParameter {
                name: "p",
                reason: format!("convolution sample must be positive, got {p}"),
            });
        }
        for (exponent, power, tag) in [(1.5, -0.5, "3_2"), (2.5, -1.5, "5_2")] {
            let computed = convolution_integral(p, exponent, level);
            let finer = convolution_integral(p, exponent, level.next());
            let reference = 4.0 * PI * PI * p.powf(power);
            out.push(IdentityResult::new(
                &format!("convolution_{tag}_p{p}"),
                computed,
                finer,
                reference,
                level,
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(l: u32) -> LegendreOrder {
        LegendreOrder::new(l).unwrap()
    }

    /// `Q_l(t) = ∫_0^∞ (t + sqrt(t²-1) cosh s)^{-l-1} ds`, trapezoid on the
    /// even extension (geometrically convergent for this analytic integrand).
    fn integral_representation(l: u32, t: f64) -> f64 {
        let root = (t * t - 1.0).sqrt();
        let f = |s: f64| (t + root * s.cosh()).powi(-(l as i32) - 1);
        let h = 1e-3;
        let mut sum = 0.5 * f(0.0);
        let mut k = 1;
        loop {
            let v = f(k as f64 * h);
            sum += v;
            if v < 1e-22 * sum {
                break;
            }
            k += 1;
        }
        sum * h
    }

    #[test]
    fn closed_form_examples() {
        // ½ ln 2, 0.625 ln 9 - 1 (extended precision)
        let q0 = legendre_q(order(0), 3.0).unwrap();
        assert!((q0 - 0.346_573_590_279_972_65).abs() < 1e-15);
        let q1 = legendre_q(order(1), 1.25).unwrap();
        assert!((q1 - 0.373_265_360_835_137_3).abs() < 1e-14, "{q1}");
        // Q_2(t) = ¼(3t² - 1) ln((t+1)/(t-1)) - 3t/2
        let q2 = legendre_q(order(2), 2.0).unwrap();
        let expected = 0.25 * 11.0 * 3f64.ln() - 3.0;
        assert!((q2 - expected).abs() < 1e-14, "{q2} vs {expected}");
        assert!((q2 - integral_representation(2, 2.0)).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(legendre_q(order(0), 1.0), Err(Error::ArgumentOutOfDomain(_))));
        assert!(matches!(legendre_q(order(0), 0.5), Err(Error::ArgumentOutOfDomain(_))));
        assert!(matches!(
            legendre_q_shifted(order(3), 1e-13),
            Err(Error::NearSingular { .. })
        ));
        assert!(matches!(LegendreOrder::new(13), Err(Error::OrderTooLarge { .. })));
        assert!(g_profile(order(0), 1.0).is_err());
        assert!(g_profile(order(0), -2.0).is_err());
    }

    #[test]
    fn recurrence_matches_integral_representation() {
        for l in 0..=6 {
            for &t in &[1.000_1, 1.01, 1.1, 1.5, 2.0, 3.7, 10.0, 150.0, 1e4] {
                let q = legendre_q(order(l), t).unwrap();
                let oracle = integral_representation(l, t);
                let err = (q - oracle).abs();
                assert!(
                    err <= 1e-10 * oracle.max(1e-300) + 1e-300,
                    "l={l} t={t}: {q} vs {oracle}"
                );
            }
        }
    }

    #[test]
    fn high_orders_stay_accurate() {
        // large t: Q_l(t) ≈ l! / ((2l+1)!! t^{l+1}) (1 + O(t^-2))
        let t = 1e6;
        for l in 0..=L_MAX {
            let q = legendre_q(order(l), t).unwrap();
            let mut lead = 1.0;
            for k in 1..=l {
                lead *= k as f64 / (2 * k + 1) as f64;
            }
            lead /= t.powi(l as i32 + 1);
            assert!(((q - lead) / lead).abs() < 1e-9, "l={l}");
        }
    }

    #[test]
    fn profile_examples() {
        for l in 0..=2 {
            let a = g_profile(order(l), 2.0).unwrap();
            let b = g_profile(order(l), 0.5).unwrap();
            assert!((a - b).abs() <= 1e-14 * a);
        }
        let g0 = g_profile(order(0), 3.0).unwrap();
        assert!((g0 - 2f64.ln()).abs() < 1e-15);
        let tail: Vec<f64> = [1e1, 1e2, 1e3, 1e4]
            .iter()
            .map(|&u| g_profile(order(1), u).unwrap())
            .collect();
        assert!(tail.windows(2).all(|w| w[1] < w[0]));
        assert!(tail[3] < 1e-7);
    }

    #[test]
    fn identities_at_default_level() {
        for r in verify_identities(QuadratureLevel::DEFAULT) {
            assert!(r.converged, "{r:?}");
            assert!(r.abs_error <= 1e-8, "{r:?}");
        }
    }

    #[test]
    fn identity_values_match_quoted_constants() {
        let all = verify_identities(QuadratureLevel::DEFAULT);
        let get = |id: &str| all.iter().find(|r| r.id == id).unwrap().computed;
        assert!((get("g1_unit_interval") - 0.733_700_550_136_169_8).abs() < 1e-10);
        assert!((get("g0_halfpower") - std::f64::consts::TAU).abs() < 1e-10);
        assert!((get("g1_over_u") - 2.0).abs() < 1e-10);
    }

    #[test]
    fn convolution_examples() {
        let res = verify_convolution_identities(&[1.0, 4.0], QuadratureLevel::DEFAULT).unwrap();
        assert_eq!(res.len(), 4);
        for r in &res {
            assert!(r.rel_error < 1e-7, "{r:?}");
        }
        let four_pi2 = 4.0 * PI * PI;
        assert!((res[0].computed - four_pi2).abs() < 1e-6);
        assert!((res[2].computed - 2.0 * PI * PI).abs() < 1e-6);
        assert!((res[1].computed - four_pi2).abs() < 1e-6);
        assert!(verify_convolution_identities(&[0.0], QuadratureLevel::DEFAULT).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn monotone_in_order(log_t in -9.0f64..6.0) {
                // t - 1 log-spaced from 1e-9 to 1e6
                let t = 1.0 + 10f64.powf(log_t);
                let mut out = [0.0; L_MAX as usize + 1];
                let q = q_sequence(L_MAX, t - 1.0, &mut out).unwrap();
                for w in q.windows(2) {
                    prop_assert!(w[0] > w[1], "t={t}: {:?}", q);
                }
                prop_assert!(q[L_MAX as usize] > 0.0);
            }

            #[test]
            fn profile_symmetry(log_u in -6.0f64..6.0, l in 0u32..=L_MAX) {
                let u = 10f64.powf(log_u);
                prop_assume!((u - 1.0).abs() > 1e-5);
                let a = g_profile(order(l), u).unwrap();
                let b = g_profile(order(l), 1.0 / u).unwrap();
                prop_assert!((a - b).abs() <= 1e-13 * a.abs().max(1e-300));
            }
        }
    }
}
