use serde::{Deserialize, Serialize};

use super::channel::Channel;
use crate::error::{Error, Result};
use crate::kinematics::{pauli_dot, Mat2, PhysicalParams};
use crate::legendre::{legendre_q_shifted, q_two_orders_unchecked, LegendreOrder};

/// Per-momentum factors `(e(p) + e(0))/n(p)` and `c p / n(p)` so that
/// `k¹ = a' Q_l a` and `k² = b' Q_{l+2s} b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct NodeFactors {
    pub a: f64,
    pub b: f64,
}

impl NodeFactors {
    #[inline]
    pub fn at(p: f64, params: &PhysicalParams) -> Self {
        let e = params.energy_unchecked(p);
        let n = params.normalizer_unchecked(p);
        Self {
            a: (e + params.rest_energy()) / n,
            b: params.light_speed() * p / n,
        }
    }
}

/// `t - 1` for `t = (p/q + q/p)/2`, from `q = p + offset`.
#[inline]
pub(crate) fn shifted_argument(p: f64, q: f64, offset: f64) -> f64 {
    offset * offset / (2.0 * p * q)
}

/// `(k¹, k²)` at `(p, q)` with `q - p = offset` supplied separately. Used
/// by quadrature that deliberately approaches the diagonal.
#[inline]
pub(crate) fn kernel_pair_offset(channel: Channel, params: &PhysicalParams, p: f64, q: f64, offset: f64) -> (f64, f64) {
    let fp = NodeFactors::at(p, params);
    let fq = NodeFactors::at(q, params);
    let delta = shifted_argument(p, q, offset);
    let (q1, q2) = q_two_orders_unchecked(channel.k1_order().get(), channel.k2_order().get(), delta);
    (fq.a * q1 * fp.a, fq.b * q2 * fp.b)
}

fn check_pair(p_prime: f64, p: f64) -> Result<()> {
    for x in [p_prime, p] {
        if x.is_nan() || x < 0.0 {
            return Err(Error::NegativeMomentum(x));
        }
        if x == 0.0 || !x.is_finite() {
            return Err(Error::InvalidParameter {
                name: "p",
                reason: format!("kernel momenta must be positive and finite, got {x}"),
            });
        }
    }
    if p_prime == p {
        return Err(Error::CoincidentArguments(p));
    }
    Ok(())
}

/// `k¹_l(p', p) = [e(p')+e(0)] Q_l(½[p'/p + p/p']) [e(p)+e(0)] / (n(p') n(p))`.
pub fn kernel_k1(l: LegendreOrder, p_prime: f64, p: f64, params: &PhysicalParams) -> Result<f64> {
    check_pair(p_prime, p)?;
    let q = legendre_q_shifted(l, shifted_argument(p, p_prime, p_prime - p))?;
    Ok(NodeFactors::at(p_prime, params).a * q * NodeFactors::at(p, params).a)
}

/// `k²_{l,s}(p', p) = c² p' Q_{l+2s}(½[p'/p + p/p']) p / (n(p') n(p))`.
pub fn kernel_k2(channel: Channel, p_prime: f64, p: f64, params: &PhysicalParams) -> Result<f64> {
    check_pair(p_prime, p)?;
    let q = legendre_q_shifted(channel.k2_order(), shifted_argument(p, p_prime, p_prime - p))?;
    Ok(NodeFactors::at(p_prime, params).b * q * NodeFactors::at(p, params).b)
}

/// `k_{l,s} = k¹_l + k²_{l,s}`.
pub fn kernel_channel(channel: Channel, p_prime: f64, p: f64, params: &PhysicalParams) -> Result<f64> {
    Ok(kernel_k1(channel.k1_order(), p_prime, p, params)? + kernel_k2(channel, p_prime, p, params)?)
}

/// Pointwise 3D kernel split as `K = K¹ + K²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullKernel {
    pub k1: Mat2,
    pub k2: Mat2,
}

impl FullKernel {
    pub fn total(&self) -> Mat2 {
        self.k1 + self.k2
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    v[0].hypot(v[1]).hypot(v[2])
}

/// `K¹ = [e(p')+e(0)][e(p)+e(0)] Id / (n(p') |p-p'|² n(p))`,
/// `K² = c² (p'·σ)(p·σ) / (n(p') |p-p'|² n(p))`.
pub fn kernel_full(p_prime: [f64; 3], p: [f64; 3], params: &PhysicalParams) -> Result<FullKernel> {
    if p_prime.iter().chain(&p).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("kernel_full arguments"));
    }
    let diff = [p[0] - p_prime[0], p[1] - p_prime[1], p[2] - p_prime[2]];
    let dist2 = diff.iter().map(|d| d * d).sum::<f64>();
    if dist2 == 0.0 {
        return Err(Error::CoincidentArguments(norm3(p)));
    }
    let (r_prime, r) = (norm3(p_prime), norm3(p));
    let e0 = params.rest_energy();
    let (n_prime, n) = (params.normalizer_unchecked(r_prime), params.normalizer_unchecked(r));
    let denom = n_prime * dist2 * n;
    let c = params.light_speed();
    if denom == 0.0 {
        // one momentum is zero in the massless case; K¹ and K² both vanish there
        return Err(Error::InvalidParameter {
            name: "p",
            reason: "massless kernel is undefined at zero momentum".into(),
        });
    }
    let s1 = (params.energy_unchecked(r_prime) + e0) * (params.energy_unchecked(r) + e0) / denom;
    let pauli = pauli_dot(p_prime).into_matrix() * pauli_dot(p).into_matrix();
    Ok(FullKernel {
        k1: Mat2::scalar(s1),
        k2: pauli.scale(c * c / denom),
    })
}

/// One pair of the mass-difference estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassDifferenceSample {
    /// `‖K_m(p',p) - K_0(p',p)‖` (operator norm).
    pub difference: f64,
    /// `[mc²/(2e(p)) + mc²/(2e(p')) + (mc²)²/(4e(p)e(p'))] / |p-p'|²`.
    pub bound: f64,
}

impl MassDifferenceSample {
    pub fn ratio(&self) -> f64 {
        if self.bound == 0.0 {
            if self.difference == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.difference / self.bound
        }
    }
}

pub fn mass_difference_sample(p_prime: [f64; 3], p: [f64; 3], params: &PhysicalParams) -> Result<MassDifferenceSample> {
    let massless = params.with_mass(0.0)?;
    let km = kernel_full(p_prime, p, params)?.total();
    let k0 = kernel_full(p_prime, p, &massless)?.total();
    let difference = (km - k0).operator_norm();
    let diff = [p[0] - p_prime[0], p[1] - p_prime[1], p[2] - p_prime[2]];
    let dist2 = diff.iter().map(|d| d * d).sum::<f64>();
    let m = params.rest_energy();
    let (e_prime, e) = (
        params.energy_unchecked(norm3(p_prime)),
        params.energy_unchecked(norm3(p)),
    );
    let bracket = m / (2.0 * e) + m / (2.0 * e_prime) + m * m / (4.0 * e * e_prime);
    Ok(MassDifferenceSample {
        difference,
        bound: bracket / dist2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassDifferenceReport {
    pub samples: usize,
    /// Pairs with `difference > bound` (relative slack `1e-12`).
    pub violations: usize,
    /// Pairs exceeding `sqrt(2) · bound`.
    pub inflated_violations: usize,
    pub max_ratio: f64,
    pub worst_pair: Option<([f64; 3], [f64; 3])>,
}

impl MassDifferenceReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Evaluates the mass-difference estimate on every pair. Violations are
/// findings, not errors.
pub fn mass_difference_bound_check(
    pairs: &[([f64; 3], [f64; 3])],
    params: &PhysicalParams,
) -> Result<MassDifferenceReport> {
    let mut report = MassDifferenceReport {
        samples: pairs.len(),
        violations: 0,
        inflated_violations: 0,
        max_ratio: 0.0,
        worst_pair: None,
    };
    for &(p_prime, p) in pairs {
        let s = mass_difference_sample(p_prime, p, params)?;
        let slack = 1.0 + 1e-12;
        if s.difference > s.bound * slack {
            report.violations += 1;
        }
        if s.difference > std::f64::consts::SQRT_2 * s.bound * slack {
            report.inflated_violations += 1;
        }
        let ratio = s.ratio();
        if ratio > report.max_ratio || report.worst_pair.is_none() {
            report.max_ratio = ratio;
            report.worst_pair = Some((p_prime, p));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_operator::Spin;
    use num_complex::Complex64;

    fn unit() -> PhysicalParams {
        PhysicalParams::natural(0.5).unwrap()
    }

    #[test]
    fn k1_example() {
        // e(2)=√5, n(2)=sqrt(2√5(√5+1)), n(1)=sqrt(2√2(√2+1)), Q_0(1.25)=½ln9
        let s5 = 5f64.sqrt();
        let s2 = 2f64.sqrt();
        let expected = (s5 + 1.0) * (s2 + 1.0) * 0.5 * 9f64.ln()
            / ((2.0 * s5 * (s5 + 1.0)).sqrt() * (2.0 * s2 * (s2 + 1.0)).sqrt());
        let k = kernel_k1(LegendreOrder::new(0).unwrap(), 2.0, 1.0, &unit()).unwrap();
        assert!((k - expected).abs() < 1e-15);
        assert!((k - 0.863_398_157_496_478_4).abs() < 1e-12, "{k}");
    }

    #[test]
    fn channel_kernel_symmetric_and_positive() {
        let params = unit();
        for (l, s) in [(0, Spin::Up), (1, Spin::Down), (3, Spin::Up)] {
            let ch = Channel::new(l, s).unwrap();
            for &(a, b) in &[(0.3, 1.7), (1e-3, 5.0), (10.0, 10.5)] {
                let k = kernel_channel(ch, a, b, &params).unwrap();
                let k_rev = kernel_channel(ch, b, a, &params).unwrap();
                assert!(k > 0.0);
                assert!((k - k_rev).abs() <= 1e-15 * k);
            }
        }
    }

    #[test]
    fn down_channel_k2_uses_q0() {
        let params = unit();
        let ch = Channel::new(1, Spin::Down).unwrap();
        let k2 = kernel_k2(ch, 2.0, 1.0, &params).unwrap();
        let fp = NodeFactors::at(1.0, &params);
        let fq = NodeFactors::at(2.0, &params);
        assert!((k2 - fq.b * 0.5 * 9f64.ln() * fp.b).abs() < 1e-15);
    }

    #[test]
    fn kernel_errors() {
        let params = unit();
        let l0 = LegendreOrder::new(0).unwrap();
        assert!(matches!(
            kernel_k1(l0, 1.0, 1.0, &params),
            Err(Error::CoincidentArguments(_))
        ));
        assert!(kernel_k1(l0, -1.0, 1.0, &params).is_err());
        assert!(kernel_k1(l0, 0.0, 1.0, &params).is_err());
        assert!(matches!(
            kernel_k1(l0, 1.0 + 1e-13, 1.0, &params),
            Err(Error::NearSingular { .. })
        ));
    }

    #[test]
    fn full_kernel_massless_form() {
        let params = unit().with_mass(0.0).unwrap();
        let (a, b) = ([0.3, -1.2, 0.4], [1.1, 0.2, -0.7]);
        let k = kernel_full(a, b, &params).unwrap();
        let dist2: f64 = (0..3).map(|i| (a[i] - b[i]).powi(2)).sum();
        assert!((k.k1.get(0, 0).re - 0.5 / dist2).abs() < 1e-15);
        assert_eq!(k.k1.get(0, 1), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn full_kernel_adjoint_symmetry_and_trace() {
        let params = unit();
        let (a, b) = ([0.3, -1.2, 0.4], [1.1, 0.2, -0.7]);
        let kab = kernel_full(a, b, &params).unwrap().total();
        let kba = kernel_full(b, a, &params).unwrap().total();
        assert!((kab - kba.adjoint()).max_abs() < 1e-15);
        // orthogonal, equal length: tr((p'·σ)(p·σ)) = 2 p'·p = 0
        let k = kernel_full([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], &params).unwrap();
        assert!(k.k2.trace().im.abs() < 1e-16);
        assert!(k.k2.trace().re.abs() < 1e-16);
        assert!(kernel_full(a, a, &params).is_err());
    }

    #[test]
    fn mass_difference_zero_when_massless() {
        let params = unit().with_mass(0.0).unwrap();
        let s = mass_difference_sample([0.3, 0.1, 0.0], [1.0, 2.0, -1.0], &params).unwrap();
        assert_eq!(s.difference, 0.0);
        assert_eq!(s.ratio(), 0.0);
    }

    #[test]
    fn mass_difference_decays_at_large_momentum() {
        let params = unit();
        let near = mass_difference_sample([1.0, 0.0, 0.0], [2.0, 0.0, 0.0], &params).unwrap();
        let far = mass_difference_sample([1e4, 0.0, 0.0], [1e4 + 1.0, 0.0, 0.0], &params).unwrap();
        assert!(far.difference < 1e-3 * near.difference);
    }

    #[test]
    fn mass_difference_antiparallel_exceeds_bracket() {
        // one soft and one hard momentum, antiparallel: the ratio tends to √2
        let params = unit();
        let s = mass_difference_sample([-1e-4, 0.0, 0.0], [1e4, 0.0, 0.0], &params).unwrap();
        assert!(
            s.ratio() > 1.41 && s.ratio() <= std::f64::consts::SQRT_2 + 1e-12,
            "{}",
            s.ratio()
        );
        let soft = mass_difference_sample([-1e-3, 0.0, 0.0], [2e-3, 0.0, 0.0], &params).unwrap();
        assert!((soft.ratio() - 0.8).abs() < 1e-5, "{}", soft.ratio());
    }
}
