//! Virial identities evaluated on computed eigenpairs, the bound profiles
//! behind the embedded-eigenvalue exclusion, and the exclusion thresholds.
//!
//! With `v = sqrt(w) φ` and `K¹w`, `K²w` the weighted kernel matrices, the
//! channel identities read
//!
//! * corollary form:
//!   `(λ/e₀ - 1) ∑|v|²[1 - e₀/e + e₀²/e²]
//!    = (αcZ/π) ∑∑ v̄_i K²w_ij v_j [1/e_i + 1/e_j] - ∑|v|²(e - e₀)(2e - e₀)/e²`
//! * theorem form:
//!   `λ‖v‖² = ∑ (e₀²/e)|v|² - (αcZ/2π) e₀ v̄ᵀ(K¹w ∘ [f_i + f_j])v
//!            + (αcZ/2π) e₀ v̄ᵀ(K²w ∘ [g_i + g_j])v`
//!   with `f = 1/e - e₀/e²`, `g = 1/e + e₀/e²`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel_operator::{Channel, ChannelFunction, ChannelMatrix, Spin};
use crate::error::{invalid, Error, Result};
use crate::kinematics::{critical_nu, PhysicalParams, CRITICAL_NU_PRIME};
use crate::spectral::{classify_bound_states, classify_embedded, refine, SpectralOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VirialForm {
    Corollary,
    Theorem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTerm {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirialReport {
    pub channel: Channel,
    pub form: VirialForm,
    /// Units of `mc²`.
    pub eigenvalue: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Individual right-hand-side contributions.
    pub terms: Vec<NamedTerm>,
    pub residual: f64,
    /// `residual / max(|lhs|, |rhs|, ‖φ‖²)`.
    pub relative_residual: f64,
    pub norm_sq: f64,
    /// Largest imaginary part met in a quadratic form, relative to its scale.
    pub max_imaginary: f64,
    pub nodes: usize,
    pub sigma: f64,
}

fn build_report(
    matrix: &ChannelMatrix,
    form: VirialForm,
    eigenvalue: f64,
    lhs: f64,
    terms: Vec<(&str, f64)>,
    norm_sq: f64,
    max_imaginary: f64,
) -> VirialReport {
    let rhs: f64 = terms.iter().map(|t| t.1).sum();
    let residual = (lhs - rhs).abs();
    let scale = lhs.abs().max(rhs.abs()).max(norm_sq);
    VirialReport {
        channel: matrix.channel(),
        form,
        eigenvalue,
        lhs,
        rhs,
        terms: terms
            .into_iter()
            .map(|(name, value)| NamedTerm {
                name: name.to_string(),
                value,
            })
            .collect(),
        residual,
        relative_residual: if scale > 0.0 { residual / scale } else { 0.0 },
        norm_sq,
        max_imaginary,
        nodes: matrix.len(),
        sigma: matrix.grid().sigma(),
    }
}

/// `∑_ij v̄_i K_ij v_j (b_i + b_j)`, returned with its imaginary part.
fn bracketed_form(k: &DMatrix<f64>, v: &[Complex64], bracket: &[f64]) -> (f64, f64) {
    let n = v.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += v[j] * (k[(i, j)] * (bracket[i] + bracket[j]));
        }
        acc += v[i].conj() * row;
    }
    (acc.re, acc.im)
}

fn prepare<'a>(phi: &ChannelFunction, matrix: &'a ChannelMatrix) -> Result<(Vec<Complex64>, &'a [f64], f64)> {
    if phi.grid().len() != matrix.len() || phi.grid().nodes() != matrix.grid().nodes() {
        return Err(Error::GridMismatch(
            "eigenfunction and matrix live on different grids".into(),
        ));
    }
    let e0 = matrix.params().rest_energy();
    if e0 <= 0.0 {
        return Err(invalid("mass", "virial identities need m > 0"));
    }
    Ok((phi.symmetric_vector(), matrix.energies(), e0))
}

fn relative_imag(im: f64, re: f64, norm_sq: f64) -> f64 {
    im.abs() / re.abs().max(norm_sq).max(f64::MIN_POSITIVE)
}

/// Corollary-form terms; all zero for `φ = 0`.
pub fn corollary_terms(eigenvalue: f64, phi: &ChannelFunction, matrix: &ChannelMatrix) -> Result<VirialReport> {
    let (v, e, e0) = prepare(phi, matrix)?;
    let coupling = matrix.params().channel_coupling();
    let norm_sq: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    let lhs = (eigenvalue / e0 - 1.0)
        * v.iter()
            .zip(e)
            .map(|(x, &e)| x.norm_sqr() * (1.0 - e0 / e + e0 * e0 / (e * e)))
            .sum::<f64>();
    let inv_e: Vec<f64> = e.iter().map(|e| e.recip()).collect();
    let (k2, k2_im) = bracketed_form(matrix.k2_weighted(), &v, &inv_e);
    let mass: f64 = v
        .iter()
        .zip(e)
        .map(|(x, &e)| x.norm_sqr() * (e - e0) * (2.0 * e - e0) / (e * e))
        .sum();
    Ok(build_report(
        matrix,
        VirialForm::Corollary,
        eigenvalue,
        lhs,
        vec![("k2_double_sum", coupling * k2), ("mass_term", -mass)],
        norm_sq,
        relative_imag(k2_im, k2, norm_sq),
    ))
}

/// Theorem-form terms; all zero for `φ = 0`.
pub fn theorem_terms(eigenvalue: f64, phi: &ChannelFunction, matrix: &ChannelMatrix) -> Result<VirialReport> {
    let (v, e, e0) = prepare(phi, matrix)?;
    let half = 0.5 * matrix.params().channel_coupling() * e0;
    let norm_sq: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    let kinetic: f64 = v.iter().zip(e).map(|(x, &e)| x.norm_sqr() * e0 * e0 / e).sum();
    let f: Vec<f64> = e.iter().map(|&e| 1.0 / e - e0 / (e * e)).collect();
    let g: Vec<f64> = e.iter().map(|&e| 1.0 / e + e0 / (e * e)).collect();
    let (k1, k1_im) = bracketed_form(matrix.k1_weighted(), &v, &f);
    let (k2, k2_im) = bracketed_form(matrix.k2_weighted(), &v, &g);
    let imag = relative_imag(k1_im, k1, norm_sq).max(relative_imag(k2_im, k2, norm_sq));
    Ok(build_report(
        matrix,
        VirialForm::Theorem,
        eigenvalue,
        eigenvalue * norm_sq,
        vec![
            ("rest_energy_term", kinetic),
            ("k1_double_sum", -half * k1),
            ("k2_double_sum", half * k2),
        ],
        norm_sq,
        imag,
    ))
}

fn require_nonzero(phi: &ChannelFunction) -> Result<()> {
    if phi.norm_sq() == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(())
}

/// Corollary-form identity on an eigenpair of `matrix`.
pub fn virial_residual(eigenvalue: f64, phi: &ChannelFunction, matrix: &ChannelMatrix) -> Result<VirialReport> {
    require_nonzero(phi)?;
    corollary_terms(eigenvalue, phi, matrix)
}

/// Theorem-form identity on an eigenpair of `matrix`.
pub fn virial_residual_theorem_form(
    eigenvalue: f64,
    phi: &ChannelFunction,
    matrix: &ChannelMatrix,
) -> Result<VirialReport> {
    require_nonzero(phi)?;
    theorem_terms(eigenvalue, phi, matrix)
}

/// `LHS - RHS` of the corollary form for the `Z = 0` pseudo-eigenpair
/// concentrated at momentum `p`, in units where `e₀ = mc²`:
/// `(e/e₀ - 1)(1 - e₀/e + e₀²/e²) + (e - e₀)(2e - e₀)/e²`.
pub fn non_eigenfunction_residual(p: f64, params: &PhysicalParams) -> Result<f64> {
    let e = params.energy(p)?;
    let e0 = params.rest_energy();
    if e0 <= 0.0 {
        return Err(invalid("mass", "needs m > 0"));
    }
    // e - e₀ = c²p² / (e + e₀) avoids cancellation for small p
    let cp = params.light_speed() * p;
    let excess = cp * cp / (e + e0);
    Ok(excess / e0 * (1.0 - e0 / e + e0 * e0 / (e * e)) + excess * (2.0 * e - e0) / (e * e))
}

/// Lower edge (units of `mc²`) of the region proven free of eigenvalues,
/// `+∞` when nothing is proven. Channel `(1, -1/2)` follows the full
/// operator: `max{1, 2ν - 1/2}`. Every other channel is free of
/// eigenvalues in `[mc², ∞)` below the critical coupling.
pub fn embedded_threshold(channel: Channel, nu: f64) -> Result<f64> {
    check_nu(nu)?;
    if channel.l() == 1 && channel.spin() == Spin::Down {
        return Ok(full_operator_threshold_unchecked(nu));
    }
    Ok(if nu < critical_nu() { 1.0 } else { f64::INFINITY })
}

/// `max{1, 2ν - 1/2}` for the unreduced operator.
pub fn full_operator_threshold(nu: f64) -> Result<f64> {
    check_nu(nu)?;
    Ok(full_operator_threshold_unchecked(nu))
}

fn full_operator_threshold_unchecked(nu: f64) -> f64 {
    1f64.max(2.0 * nu - 0.5)
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu.is_finite() && nu >= 0.0) {
        return Err(invalid("nu", format!("coupling must be finite and >= 0, got {nu}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileId {
    Phi,
    Psi,
    Theta,
    RatioR,
    RatioS,
}

impl ProfileId {
    pub const ALL: [ProfileId; 5] = [
        ProfileId::Phi,
        ProfileId::Psi,
        ProfileId::Theta,
        ProfileId::RatioR,
        ProfileId::RatioS,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProfileId::Phi => "phi",
            ProfileId::Psi => "psi",
            ProfileId::Theta => "theta",
            ProfileId::RatioR => "ratio_r",
            ProfileId::RatioS => "ratio_s",
        }
    }

    pub fn evaluate(self, p: f64, nu: f64) -> f64 {
        match self {
            ProfileId::RatioR => ratio_r(p),
            ProfileId::RatioS => ratio_s(p),
            ProfileId::Phi | ProfileId::Theta => ratio_s(p) * (nu - ratio_r(p)),
            ProfileId::Psi => {
                let e = p.hypot(1.0);
                let outer = p * p * e / ((e + 1.0) * (p * p + 2.0 - e));
                outer * (psi_coefficient(nu) - (2.0 * e - 1.0) / e)
            }
        }
    }
}

impl fmt::Display for ProfileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProfileId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProfileId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| invalid("profile", format!("unknown profile `{s}`")))
    }
}

/// `(2E - 1)/(p + E)` with `E = sqrt(p² + 1)`; minimum 3/4 at `p = 3/4`.
pub fn ratio_r(p: f64) -> f64 {
    let e = p.hypot(1.0);
    (2.0 * e - 1.0) / (p + e)
}

/// `p²(p + E)/((E + 1)(p² + 2 - E))`; tends to 2 from below.
pub fn ratio_s(p: f64) -> f64 {
    let e = p.hypot(1.0);
    p * p * (p + e) / ((e + 1.0) * (p * p + 2.0 - e))
}

/// `(ν/2π)(π²/4 + 2)`.
pub fn psi_coefficient(nu: f64) -> f64 {
    nu / (2.0 * PI) * (PI * PI / 4.0 + 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Min,
    Max,
    /// Supremum approached at the upper end of the range.
    Sup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub kind: ExtremumKind,
    pub value: f64,
    /// Momentum of the extremum; `None` for a supremum at infinity.
    pub location: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundProfile {
    pub id: ProfileId,
    pub nu: f64,
    pub momenta: Vec<f64>,
    pub values: Vec<f64>,
    pub extremum: Extremum,
}

pub const PROFILE_SAMPLES: usize = 10_000;
pub const PROFILE_RANGE: (f64, f64) = (1e-4, 1e4);

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (a.abs() + b.abs()).max(1e-300) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Samples a profile on `samples` log-spaced momenta in `range`, then
/// refines the extremum: minimum for `ratio_r`, supremum for `ratio_s`,
/// maximum otherwise.
pub fn bound_profile(id: ProfileId, range: (f64, f64), nu: f64, samples: usize) -> Result<BoundProfile> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(invalid("range", format!("need 0 < lo < hi < ∞, got ({lo}, {hi})")));
    }
    if samples < 3 {
        return Err(invalid("samples", "need at least three samples"));
    }
    check_nu(nu)?;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let momenta: Vec<f64> = (0..samples)
        .map(|k| (llo + (lhi - llo) * k as f64 / (samples - 1) as f64).exp())
        .collect();
    let values: Vec<f64> = momenta.iter().map(|&p| id.evaluate(p, nu)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("bound profile"));
    }
    let sign = if id == ProfileId::RatioR { 1.0 } else { -1.0 };
    let best = (0..samples)
        .min_by(|&a, &b| (sign * values[a]).total_cmp(&(sign * values[b])))
        .expect("nonempty");
    let extremum = if id == ProfileId::RatioS && best == samples - 1 {
        // tail 2 - c/p² + O(p⁻³): Richardson on (P, 2P)
        let p = hi;
        Extremum {
            kind: ExtremumKind::Sup,
            value: (4.0 * ratio_s(2.0 * p) - ratio_s(p)) / 3.0,
            location: None,
        }
    } else {
        let a = momenta[best.saturating_sub(1)];
        let b = momenta[(best + 1).min(samples - 1)];
        let objective = |p: f64| sign * id.evaluate(p, nu);
        let at = golden_section(objective, a, b, 1e-12);
        let refined = id.evaluate(at, nu);
        let (location, value) = if sign * refined <= sign * values[best] {
            (at, refined)
        } else {
            (momenta[best], values[best])
        };
        Extremum {
            kind: if sign > 0.0 {
                ExtremumKind::Min
            } else {
                ExtremumKind::Max
            },
            value,
            location: Some(location),
        }
    };
    Ok(BoundProfile {
        id,
        nu,
        momenta,
        values,
        extremum,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiCoefficientReport {
    /// `(ν_c/2π)(π²/4 + 2)`.
    pub coefficient: f64,
    /// `(π² + 8)/(2(π² + 4))`.
    pub closed_form: f64,
    pub samples: usize,
    pub max_psi: f64,
    pub strictly_negative: bool,
}

impl PsiCoefficientReport {
    pub fn passes(&self) -> bool {
        self.coefficient < 1.0 && (self.coefficient - self.closed_form).abs() < 1e-14 && self.strictly_negative
    }
}

/// At the critical coupling the `Ψ` bracket coefficient is below one, so
/// `Ψ < 0` on `(0, ∞)`; checked on `10³` log-spaced momenta.
pub fn psi_coefficient_check() -> Result<PsiCoefficientReport> {
    let nu = critical_nu();
    let profile = bound_profile(ProfileId::Psi, PROFILE_RANGE, nu, 1000)?;
    let max_psi = profile.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    Ok(PsiCoefficientReport {
        coefficient: psi_coefficient(nu),
        closed_form: (PI * PI + 8.0) / (2.0 * (PI * PI + 4.0)),
        samples: profile.values.len(),
        max_psi,
        strictly_negative: max_psi < 0.0,
    })
}

/// Upper envelope of `Φ` and `Θ`: `0` for `ν <= 3/4`, `2(ν - 3/4)` beyond.
pub fn theta_envelope(nu: f64) -> f64 {
    2.0 * (nu - CRITICAL_NU_PRIME).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

/// One `(ν, N)` row of a coupling sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub nu: f64,
    pub nodes: usize,
    /// Lowest eigenvalue on this grid if it is below `mc²`.
    pub lambda_min_over_mc2: Option<f64>,
    pub lower_bound: f64,
    pub lower_bound_ok: bool,
    pub residual_corollary: Option<f64>,
    pub residual_theorem: Option<f64>,
    pub stable_bound_states: usize,
    pub embedded_verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub channel: Channel,
    pub sequence: Vec<usize>,
    pub rows: Vec<SweepRow>,
    pub warnings: Vec<String>,
}

/// Tolerance on `λ >= (1 - Z/Z_c) mc²` in sweep rows.
pub const LOWER_BOUND_SLACK: f64 = 1e-3;

/// Bound states, lower-bound check, embedded scan and ground-state virial
/// residuals for each coupling; one row per `(ν, N)`. Kernels are
/// assembled once and recoupled for every `ν`.
pub fn z_sweep(
    channel: Channel,
    nus: &[f64],
    base: &PhysicalParams,
    sequence: &[usize],
    options: SpectralOptions,
) -> Result<SweepTable> {
    for &nu in nus {
        check_nu(nu)?;
    }
    let reference = refine(channel, &base.with_nu(0.0)?, sequence, options)?;
    let per_nu: Vec<Result<(Vec<SweepRow>, Vec<String>)>> = nus
        .par_iter()
        .map(|&nu| {
            let params = base.with_nu(nu)?;
            let refinement = reference.recoupled(&params)?;
            let bound = classify_bound_states(&refinement);
            let embedded = classify_embedded(&refinement)?;
            let verdict = Verdict::from_bool(embedded.passes());
            let e0 = params.rest_energy();
            let mut rows = Vec::new();
            for (matrix, solution) in &refinement.levels {
                let lowest = solution.eigenvalues.first().copied();
                let (lambda, res_c, res_t) = match lowest {
                    Some(l) if l < e0 => {
                        let phi = ChannelFunction::from_symmetric_vector(
                            matrix.shared_grid(),
                            solution.eigenvectors.column(0).as_slice(),
                        )?;
                        let c = virial_residual(l, &phi, matrix)?;
                        let t = virial_residual_theorem_form(l, &phi, matrix)?;
                        (Some(l / e0), Some(c.relative_residual), Some(t.relative_residual))
                    }
                    _ => (None, None, None),
                };
                let lower_ok = solution
                    .eigenvalues
                    .first()
                    .is_none_or(|&l| l >= bound.lower_bound - LOWER_BOUND_SLACK * e0);
                rows.push(SweepRow {
                    nu,
                    nodes: matrix.len(),
                    lambda_min_over_mc2: lambda,
                    lower_bound: bound.lower_bound / e0,
                    lower_bound_ok: lower_ok,
                    residual_corollary: res_c,
                    residual_theorem: res_t,
                    stable_bound_states: bound.stable.len(),
                    embedded_verdict: verdict,
                });
            }
            Ok((rows, refinement.warnings))
        })
        .collect();
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for item in per_nu {
        let (r, w) = item?;
        rows.extend(r);
        for msg in w {
            if !warnings.contains(&msg) {
                warnings.push(msg);
            }
        }
    }
    Ok(SweepTable {
        channel,
        sequence: sequence.to_vec(),
        rows,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_operator::{assemble, build_grid, GridMap};
    use std::sync::Arc;

    fn up0() -> Channel {
        Channel::new(0, Spin::Up).unwrap()
    }

    #[test]
    fn zero_function_gives_zero_terms() {
        let grid = build_grid(12, GridMap::default()).unwrap();
        let params = PhysicalParams::natural(0.4).unwrap();
        let m = assemble(up0(), &grid, &params).unwrap();
        let phi = ChannelFunction::from_symmetric_vector(m.shared_grid(), &[0.0; 12]).unwrap();
        for r in [
            corollary_terms(0.8, &phi, &m).unwrap(),
            theorem_terms(0.8, &phi, &m).unwrap(),
        ] {
            assert_eq!(r.lhs, 0.0);
            assert_eq!(r.rhs, 0.0);
            assert_eq!(r.residual, 0.0);
        }
        assert!(matches!(virial_residual(0.8, &phi, &m), Err(Error::ZeroNorm)));
    }

    #[test]
    fn grid_mismatch_rejected() {
        let params = PhysicalParams::natural(0.4).unwrap();
        let m = assemble(up0(), &build_grid(12, GridMap::default()).unwrap(), &params).unwrap();
        let other = Arc::new(build_grid(14, GridMap::default()).unwrap());
        let phi = ChannelFunction::from_symmetric_vector(other, &[1.0; 14]).unwrap();
        assert!(matches!(virial_residual(0.8, &phi, &m), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn zero_charge_basis_vectors_match_analytic_residual() {
        let grid = build_grid(16, GridMap::default()).unwrap();
        let params = PhysicalParams::natural(0.0).unwrap();
        let m = assemble(up0(), &grid, &params).unwrap();
        for i in [0, 5, 15] {
            let mut v = vec![0.0; 16];
            v[i] = 1.0;
            let phi = ChannelFunction::from_symmetric_vector(m.shared_grid(), &v).unwrap();
            let lambda = m.energies()[i];
            let r = virial_residual(lambda, &phi, &m).unwrap();
            let analytic = non_eigenfunction_residual(grid.nodes()[i], &params).unwrap();
            assert!(
                ((r.lhs - r.rhs) - analytic).abs() < 1e-12 * analytic.max(1.0),
                "node {i}"
            );
            assert!(analytic > 0.0);
        }
    }

    #[test]
    fn thresholds() {
        let down1 = Channel::new(1, Spin::Down).unwrap();
        let up3 = Channel::new(3, Spin::Up).unwrap();
        assert_eq!(embedded_threshold(down1, 0.7).unwrap(), 1.0);
        assert_eq!(embedded_threshold(down1, 1.0).unwrap(), 1.5);
        assert_eq!(embedded_threshold(up3, 0.8).unwrap(), 1.0);
        assert_eq!(embedded_threshold(up3, 0.95).unwrap(), f64::INFINITY);
        assert!(embedded_threshold(up3, -0.1).is_err());
        let mut last = 0.0;
        for k in 0..=200 {
            let nu = k as f64 * 0.01;
            let t = full_operator_threshold(nu).unwrap();
            assert!(t >= last);
            if nu <= 0.75 {
                assert_eq!(t, 1.0);
            }
            last = t;
        }
    }

    #[test]
    fn extremal_constants() {
        let r = bound_profile(ProfileId::RatioR, PROFILE_RANGE, 0.0, PROFILE_SAMPLES).unwrap();
        assert_eq!(r.extremum.kind, ExtremumKind::Min);
        assert!((r.extremum.value - 0.75).abs() < 1e-6);
        assert!((r.extremum.location.unwrap() - 0.75).abs() < 1e-4);
        assert_eq!(ratio_r(0.0), 1.0);
        let s = bound_profile(ProfileId::RatioS, PROFILE_RANGE, 0.0, PROFILE_SAMPLES).unwrap();
        assert_eq!(s.extremum.kind, ExtremumKind::Sup);
        assert!((s.extremum.value - 2.0).abs() < 1e-6);
        assert_eq!(ratio_s(0.0), 0.0);
    }

    #[test]
    fn theta_envelopes() {
        for nu in [0.1, 0.5, 0.75, 0.8, 0.9] {
            for id in [ProfileId::Phi, ProfileId::Theta] {
                let prof = bound_profile(id, PROFILE_RANGE, nu, PROFILE_SAMPLES).unwrap();
                let max = prof.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                assert!(max <= theta_envelope(nu) + 1e-9, "{id} nu={nu}: {max}");
            }
        }
    }

    #[test]
    fn psi_check() {
        let r = psi_coefficient_check().unwrap();
        assert!((r.coefficient - 0.644_200_219_571_000_5).abs() < 1e-15);
        assert!(r.passes());
        // affine in the coupling
        let (a, b) = (ProfileId::Psi.evaluate(2.0, 0.2), ProfileId::Psi.evaluate(2.0, 0.6));
        let mid = ProfileId::Psi.evaluate(2.0, 0.4);
        assert!((mid - 0.5 * (a + b)).abs() < 1e-15);
    }

    #[test]
    fn profile_errors() {
        assert!(bound_profile(ProfileId::Phi, (0.0, 1.0), 0.5, 10).is_err());
        assert!(bound_profile(ProfileId::Phi, (1.0, 0.5), 0.5, 10).is_err());
        assert!("omega".parse::<ProfileId>().is_err());
        assert_eq!("ratio_s".parse::<ProfileId>().unwrap(), ProfileId::RatioS);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn non_eigenfunction_residual_positive(log_p in -6.0f64..6.0) {
                let p = 10f64.powf(log_p);
                let params = PhysicalParams::natural(0.0).unwrap();
                prop_assert!(non_eigenfunction_residual(p, &params).unwrap() > 0.0);
            }
        }
    }
}
