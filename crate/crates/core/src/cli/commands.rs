//! One function per command. Each returns the payload, verdicts and
//! tables; writing them out is left to the caller.

use serde::{Deserialize, Serialize};

use super::config::{CommandId, MassMode, RunConfig};
use super::output::{matrix_csv, matrix_sidecar, opt17, sig17, Quantity, Series, Table, Units, VerdictEntry};
use crate::channel_operator::{Channel, ChannelFunction};
use crate::error::Result;
use crate::legendre::{verify_convolution_identities, verify_identities, IdentityResult};
use crate::spectral::{classify_bound_states, classify_embedded, refine, TrackedEigenvalue};
use crate::virial::{
    bound_profile, psi_coefficient_check, theta_envelope, virial_residual, virial_residual_theorem_form, z_sweep,
    ExtremumKind, ProfileId, Verdict, VirialReport, LOWER_BOUND_SLACK, PROFILE_RANGE, PROFILE_SAMPLES,
};

/// Momenta at which the convolution identities are checked.
pub const CONVOLUTION_SAMPLES: [f64; 2] = [1.0, 4.0];

/// Eigen-residual tolerance relative to the matrix norm.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-9;

/// Allowed imaginary part of a virial quadratic form relative to its scale.
pub const IMAGINARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Identities(IdentitiesPayload),
    Spectrum(SpectrumPayload),
    Virial(VirialPayload),
    Bounds(BoundsPayload),
    Sweep(SweepPayload),
}

#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub payload: Payload,
    pub verdicts: Vec<VerdictEntry>,
    pub warnings: Vec<String>,
    /// CSV tables, by file stem.
    pub tables: Vec<(String, Table)>,
    /// Extra files written regardless of the format selection.
    pub exports: Vec<(String, Vec<u8>)>,
}

pub fn run_command(config: &RunConfig) -> Result<CommandOutput> {
    match config.command {
        CommandId::Identities => cmd_identities(config),
        CommandId::Spectrum => cmd_spectrum(config),
        CommandId::Virial => cmd_virial(config),
        CommandId::Bounds => cmd_bounds(config),
        CommandId::Sweep => cmd_sweep(config),
    }
}

// ---- identities

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub id: String,
    pub family: String,
    pub computed: Quantity,
    pub reference: Quantity,
    pub abs_error: Quantity,
    pub rel_error: Quantity,
    pub converged: bool,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitiesPayload {
    pub quadrature_level: u32,
    pub tolerance: Quantity,
    pub identities: Vec<IdentityRow>,
}

fn identity_row(r: &IdentityResult, family: &str, ok: bool) -> Result<IdentityRow> {
    Ok(IdentityRow {
        id: r.id.clone(),
        family: family.into(),
        computed: Quantity::dimensionless(r.computed)?,
        reference: Quantity::dimensionless(r.reference)?,
        abs_error: Quantity::dimensionless(r.abs_error)?,
        rel_error: Quantity::dimensionless(r.rel_error)?,
        converged: r.converged,
        verdict: Verdict::from_bool(ok),
    })
}

/// Integral identities are judged on absolute error, convolution
/// identities on relative error.
pub fn cmd_identities(config: &RunConfig) -> Result<CommandOutput> {
    let tol = config.tolerance;
    let level = config.quadrature_level;
    let mut rows = Vec::new();
    for r in verify_identities(level) {
        rows.push(identity_row(&r, "integral", r.within_abs(tol))?);
    }
    for r in verify_convolution_identities(&CONVOLUTION_SAMPLES, level)? {
        rows.push(identity_row(&r, "convolution", r.within_rel(tol))?);
    }
    let verdicts = rows
        .iter()
        .map(|r| VerdictEntry {
            name: format!("identity:{}", r.id),
            verdict: r.verdict,
            detail: format!(
                "abs err {:.3e}, rel err {:.3e}, tol {tol:e}",
                r.abs_error.value, r.rel_error.value
            ),
        })
        .collect();
    let mut table = Table::new([
        "id",
        "family",
        "computed",
        "reference",
        "abs_error",
        "rel_error",
        "converged",
        "verdict",
    ]);
    for r in &rows {
        table.push(vec![
            r.id.clone(),
            r.family.clone(),
            sig17(r.computed.value),
            sig17(r.reference.value),
            sig17(r.abs_error.value),
            sig17(r.rel_error.value),
            r.converged.to_string(),
            r.verdict.to_string(),
        ]);
    }
    Ok(CommandOutput {
        payload: Payload::Identities(IdentitiesPayload {
            quadrature_level: level.0,
            tolerance: Quantity::dimensionless(tol)?,
            identities: rows,
        }),
        verdicts,
        warnings: Vec::new(),
        tables: vec![("identities".into(), table)],
        exports: Vec::new(),
    })
}

// ---- spectrum

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRow {
    pub index: usize,
    pub value: Quantity,
    pub partner: Option<Quantity>,
    pub overlap: Quantity,
    /// Absent when no coarse partner was found.
    pub drift: Option<Quantity>,
    pub stable: bool,
}

impl StateRow {
    fn new(t: &TrackedEigenvalue, scale: f64, units: Units) -> Result<Self> {
        Ok(StateRow {
            index: t.index,
            value: Quantity::new(t.value / scale, units)?,
            partner: t.partner.map(|p| Quantity::new(p / scale, units)).transpose()?,
            overlap: Quantity::dimensionless(t.overlap)?,
            drift: Quantity::finite_or_none(t.drift, Units::Dimensionless)?,
            stable: t.stable,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub nodes: usize,
    pub eigenvalues: Series,
    pub residuals: Series,
    pub matrix_norm: Quantity,
    pub orthonormality_error: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedSummary {
    /// Lower edge of the proven eigenvalue-free region; absent when none
    /// is proven.
    pub threshold: Option<Quantity>,
    pub examined: usize,
    pub stable_embedded: Vec<StateRow>,
    pub in_exclusion_region: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPayload {
    pub channel: Channel,
    pub nu: Quantity,
    pub nuclear_charge: Quantity,
    pub mass: MassMode,
    pub sigma: Quantity,
    pub sequence: Vec<usize>,
    pub levels: Vec<LevelSummary>,
    pub bound_states: Vec<StateRow>,
    pub unstable_below_threshold: Vec<StateRow>,
    pub lower_bound: Quantity,
    pub lower_bound_margin: Quantity,
    pub all_positive: bool,
    pub embedded: Option<EmbeddedSummary>,
}

pub fn cmd_spectrum(config: &RunConfig) -> Result<CommandOutput> {
    let params = config.params(config.nu[0])?;
    let refinement = refine(config.channel, &params, &config.nodes, config.spectral_options()?)?;
    let bound = classify_bound_states(&refinement);
    let (units, scale) = match config.mass {
        MassMode::Massive => (Units::Mc2, params.rest_energy()),
        MassMode::Massless => (Units::CSigma, params.light_speed() * config.sigma),
    };

    let mut levels = Vec::new();
    let mut worst_residual: f64 = 0.0;
    let mut spectrum_table = Table::new([
        "nodes".to_string(),
        "index".to_string(),
        format!("eigenvalue_{}", units.tag()),
        format!("residual_{}", units.tag()),
    ]);
    for (m, s) in &refinement.levels {
        worst_residual = worst_residual.max(s.max_residual() / s.matrix_norm.max(1.0));
        for (k, (v, r)) in s.eigenvalues.iter().zip(&s.residuals).enumerate() {
            spectrum_table.push(vec![
                m.len().to_string(),
                k.to_string(),
                sig17(v / scale),
                sig17(r / scale),
            ]);
        }
        levels.push(LevelSummary {
            nodes: m.len(),
            eigenvalues: Series::new(s.eigenvalues.iter().map(|v| v / scale).collect(), units)?,
            residuals: Series::new(s.residuals.iter().map(|v| v / scale).collect(), units)?,
            matrix_norm: Quantity::new(s.matrix_norm / scale, units)?,
            orthonormality_error: Quantity::dimensionless(s.orthonormality_error())?,
        });
    }

    let rows = |ts: &[TrackedEigenvalue]| {
        ts.iter()
            .map(|t| StateRow::new(t, scale, units))
            .collect::<Result<Vec<_>>>()
    };
    let bound_states = rows(&bound.stable)?;
    let unstable = rows(&bound.unstable)?;
    let embedded = match config.mass {
        MassMode::Massive => {
            let e = classify_embedded(&refinement)?;
            Some(EmbeddedSummary {
                threshold: Quantity::finite_or_none(e.threshold, Units::Mc2)?,
                examined: e.examined,
                stable_embedded: rows(&e.stable_embedded)?,
                in_exclusion_region: e.in_exclusion_region.len(),
            })
        }
        MassMode::Massless => None,
    };

    let margin_ok = bound.lower_bound_margin >= -LOWER_BOUND_SLACK * scale;
    let mut verdicts = vec![
        VerdictEntry::new(
            "eigen_residuals",
            worst_residual <= EIGEN_RESIDUAL_TOL,
            format!("max ‖Av - λv‖ / max(‖A‖, 1) = {worst_residual:.3e}, tol {EIGEN_RESIDUAL_TOL:e}"),
        ),
        VerdictEntry::new(
            "lower_bound",
            margin_ok,
            format!(
                "min λ - (1 - Z/Z_c) mc² = {:.6e} {}",
                bound.lower_bound_margin / scale,
                units.tag()
            ),
        ),
    ];
    if let Some(e) = &embedded {
        verdicts.push(VerdictEntry::new(
            "embedded_exclusion",
            e.in_exclusion_region == 0,
            format!(
                "{} grid-stable of {} eigenvalues >= mc², {} in the excluded region",
                e.stable_embedded.len(),
                e.examined,
                e.in_exclusion_region
            ),
        ));
    }

    let mut states_table = Table::new([
        "class".to_string(),
        "index".to_string(),
        format!("value_{}", units.tag()),
        format!("partner_{}", units.tag()),
        "overlap".to_string(),
        "drift".to_string(),
    ]);
    let groups = [("bound_stable", &bound_states), ("bound_unstable", &unstable)];
    let empty = Vec::new();
    let embedded_rows = embedded.as_ref().map_or(&empty, |e| &e.stable_embedded);
    for (class, group) in groups.into_iter().chain([("embedded_stable", embedded_rows)]) {
        for r in group {
            states_table.push(vec![
                class.to_string(),
                r.index.to_string(),
                sig17(r.value.value),
                opt17(r.partner.map(|q| q.value)),
                sig17(r.overlap.value),
                opt17(r.drift.map(|q| q.value)),
            ]);
        }
    }

    let mut exports = Vec::new();
    let (finest_matrix, finest) = refinement.finest();
    if config.export_matrix {
        let stem = format!("matrix_N{}", finest_matrix.len());
        exports.push((format!("{stem}.csv"), matrix_csv(finest_matrix)?));
        exports.push((format!("{stem}.json"), matrix_sidecar(finest_matrix)?));
    }
    if config.export_eigenvectors {
        let mut header = vec!["p_momentum_mc".to_string(), "weight".to_string()];
        header.extend(bound_states.iter().map(|r| format!("phi_{}", r.index)));
        let mut t = Table::new(header);
        let grid = finest_matrix.shared_grid();
        let phis = bound_states
            .iter()
            .map(|r| {
                ChannelFunction::from_symmetric_vector(grid.clone(), finest.eigenvectors.column(r.index).as_slice())
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, (&p, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
            let mut row = vec![sig17(p), sig17(w)];
            row.extend(phis.iter().map(|f| sig17(f.values()[i].re)));
            t.push(row);
        }
        exports.push(("eigenvectors.csv".into(), t.to_csv()?));
    }

    Ok(CommandOutput {
        payload: Payload::Spectrum(SpectrumPayload {
            channel: config.channel,
            nu: Quantity::dimensionless(params.nu())?,
            nuclear_charge: Quantity::dimensionless(params.nuclear_charge())?,
            mass: config.mass,
            sigma: Quantity::new(config.sigma, Units::MomentumMc)?,
            sequence: refinement.sequence(),
            levels,
            bound_states,
            unstable_below_threshold: unstable,
            lower_bound: Quantity::new(bound.lower_bound / scale, units)?,
            lower_bound_margin: Quantity::new(bound.lower_bound_margin / scale, units)?,
            all_positive: bound.all_positive,
            embedded,
        }),
        verdicts,
        warnings: refinement.warnings.clone(),
        tables: vec![
            ("spectrum".into(), spectrum_table),
            ("bound_states".into(), states_table),
        ],
        exports,
    })
}

// ---- virial

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRow {
    pub name: String,
    pub value: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormSummary {
    pub lhs: Quantity,
    pub rhs: Quantity,
    pub terms: Vec<TermRow>,
    pub residual: Quantity,
    pub relative_residual: Quantity,
    pub max_imaginary: Quantity,
}

impl FormSummary {
    fn new(r: &VirialReport, units: Units) -> Result<Self> {
        Ok(FormSummary {
            lhs: Quantity::new(r.lhs, units)?,
            rhs: Quantity::new(r.rhs, units)?,
            terms: r
                .terms
                .iter()
                .map(|t| {
                    Ok(TermRow {
                        name: t.name.clone(),
                        value: Quantity::new(t.value, units)?,
                    })
                })
                .collect::<Result<_>>()?,
            residual: Quantity::new(r.residual, units)?,
            relative_residual: Quantity::dimensionless(r.relative_residual)?,
            max_imaginary: Quantity::dimensionless(r.max_imaginary)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirialLevel {
    pub nodes: usize,
    pub eigenvalue: Quantity,
    /// Both sides divided by `mc²`.
    pub corollary: FormSummary,
    pub theorem: FormSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirialPayload {
    pub channel: Channel,
    pub nu: Quantity,
    pub sigma: Quantity,
    /// Finest-grid index of the ground state; absent without a stable bound state.
    pub ground_state_index: Option<usize>,
    pub levels: Vec<VirialLevel>,
}

pub fn cmd_virial(config: &RunConfig) -> Result<CommandOutput> {
    let params = config.params(config.nu[0])?;
    let refinement = refine(config.channel, &params, &config.nodes, config.spectral_options()?)?;
    let bound = classify_bound_states(&refinement);
    let ground = bound.ground_state().map(|g| g.index);
    let mut levels = Vec::new();
    let mut table = Table::new([
        "nodes",
        "form",
        "eigenvalue_mc2",
        "lhs",
        "rhs",
        "residual",
        "relative_residual",
        "max_imaginary",
    ]);
    if let Some(k) = ground {
        for (matrix, solution) in &refinement.levels {
            let lambda = solution.eigenvalues[k];
            let phi = ChannelFunction::from_symmetric_vector(
                matrix.shared_grid(),
                solution.eigenvectors.column(k).as_slice(),
            )?;
            let c = virial_residual(lambda, &phi, matrix)?;
            let t = virial_residual_theorem_form(lambda, &phi, matrix)?;
            for (form, r) in [("corollary", &c), ("theorem", &t)] {
                table.push(vec![
                    matrix.len().to_string(),
                    form.into(),
                    sig17(lambda),
                    sig17(r.lhs),
                    sig17(r.rhs),
                    sig17(r.residual),
                    sig17(r.relative_residual),
                    sig17(r.max_imaginary),
                ]);
            }
            levels.push(VirialLevel {
                nodes: matrix.len(),
                eigenvalue: Quantity::new(lambda, Units::Mc2)?,
                corollary: FormSummary::new(&c, Units::Dimensionless)?,
                theorem: FormSummary::new(&t, Units::Mc2)?,
            });
        }
    }

    let corollary: Vec<f64> = levels.iter().map(|l| l.corollary.relative_residual.value).collect();
    let theorem: Vec<f64> = levels.iter().map(|l| l.theorem.relative_residual.value).collect();
    let imaginary = levels
        .iter()
        .flat_map(|l| [l.corollary.max_imaginary.value, l.theorem.max_imaginary.value])
        .fold(0.0f64, f64::max);
    let finest = corollary.last().copied();
    let tol = config.tolerance;
    let verdicts = vec![
        VerdictEntry::new(
            "ground_state",
            ground.is_some(),
            match ground {
                Some(k) => format!("grid-stable ground state at index {k}"),
                None => "no grid-stable eigenvalue below mc²".into(),
            },
        ),
        VerdictEntry::new(
            "residual_decreasing",
            !corollary.is_empty() && corollary.windows(2).all(|w| w[1] < w[0]),
            format!("corollary relative residuals {corollary:?}"),
        ),
        VerdictEntry::new(
            "finest_residual",
            finest.is_some_and(|r| r <= tol),
            format!("finest relative residual {finest:?}, tol {tol:e}"),
        ),
        VerdictEntry::new(
            "forms_agree",
            !corollary.is_empty()
                && corollary
                    .iter()
                    .zip(&theorem)
                    .all(|(c, t)| t / c <= 2.0 && c / t <= 2.0),
            format!("theorem-form relative residuals {theorem:?}"),
        ),
        VerdictEntry::new(
            "imaginary_parts",
            imaginary <= IMAGINARY_TOL,
            format!("max relative imaginary part {imaginary:.3e}, tol {IMAGINARY_TOL:e}"),
        ),
    ];

    Ok(CommandOutput {
        payload: Payload::Virial(VirialPayload {
            channel: config.channel,
            nu: Quantity::dimensionless(params.nu())?,
            sigma: Quantity::new(config.sigma, Units::MomentumMc)?,
            ground_state_index: ground,
            levels,
        }),
        verdicts,
        warnings: refinement.warnings.clone(),
        tables: vec![("virial".into(), table)],
        exports: Vec::new(),
    })
}

// ---- bounds

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub id: ProfileId,
    pub kind: ExtremumKind,
    pub value: Quantity,
    /// Absent for a supremum approached as `p → ∞`.
    pub location: Option<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiSummary {
    pub coefficient: Quantity,
    pub closed_form: Quantity,
    pub max_psi: Quantity,
    pub strictly_negative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsPayload {
    pub nu: Quantity,
    pub range: [Quantity; 2],
    pub samples: usize,
    pub extrema: Vec<ProfileSummary>,
    pub theta_envelope: Quantity,
    pub psi_at_critical: PsiSummary,
}

/// Envelope slack on the sampled maxima of `Φ` and `Θ`.
pub const ENVELOPE_SLACK: f64 = 1e-9;

pub fn cmd_bounds(config: &RunConfig) -> Result<CommandOutput> {
    let nu = config.nu[0];
    let profiles = ProfileId::ALL
        .iter()
        .map(|&id| bound_profile(id, PROFILE_RANGE, nu, PROFILE_SAMPLES))
        .collect::<Result<Vec<_>>>()?;
    let tol = config.tolerance;
    let envelope = theta_envelope(nu);
    let psi = psi_coefficient_check()?;

    let mut verdicts = Vec::new();
    let mut extrema = Vec::new();
    let mut extrema_table = Table::new(["profile", "kind", "value", "location_momentum_mc"]);
    for p in &profiles {
        let e = p.extremum;
        extrema.push(ProfileSummary {
            id: p.id,
            kind: e.kind,
            value: Quantity::dimensionless(e.value)?,
            location: e.location.map(|x| Quantity::new(x, Units::MomentumMc)).transpose()?,
        });
        extrema_table.push(vec![
            p.id.name().into(),
            format!("{:?}", e.kind).to_lowercase(),
            sig17(e.value),
            opt17(e.location),
        ]);
        match p.id {
            ProfileId::RatioR => verdicts.push(VerdictEntry::new(
                "ratio_r_min",
                (e.value - 0.75).abs() <= tol,
                format!("min r = {:.12} vs 3/4, tol {tol:e}", e.value),
            )),
            ProfileId::RatioS => verdicts.push(VerdictEntry::new(
                "ratio_s_sup",
                (e.value - 2.0).abs() <= tol,
                format!("sup s = {:.12} vs 2, tol {tol:e}", e.value),
            )),
            ProfileId::Phi | ProfileId::Theta => verdicts.push(VerdictEntry::new(
                format!("{}_envelope", p.id.name()),
                e.value <= envelope + ENVELOPE_SLACK,
                format!("max {} = {:.6e} vs envelope {envelope:.6e}", p.id.name(), e.value),
            )),
            ProfileId::Psi => {}
        }
    }
    verdicts.push(VerdictEntry::new(
        "psi_coefficient",
        psi.passes(),
        format!(
            "coefficient {:.16} at the critical coupling, max Ψ = {:.3e}",
            psi.coefficient, psi.max_psi
        ),
    ));

    let mut samples = Table::new(["p_momentum_mc", "phi", "psi", "theta", "ratio_r", "ratio_s"]);
    let momenta = &profiles[0].momenta;
    for (i, &p) in momenta.iter().enumerate() {
        let mut row = vec![sig17(p)];
        row.extend(profiles.iter().map(|prof| sig17(prof.values[i])));
        samples.push(row);
    }

    Ok(CommandOutput {
        payload: Payload::Bounds(BoundsPayload {
            nu: Quantity::dimensionless(nu)?,
            range: [
                Quantity::new(PROFILE_RANGE.0, Units::MomentumMc)?,
                Quantity::new(PROFILE_RANGE.1, Units::MomentumMc)?,
            ],
            samples: PROFILE_SAMPLES,
            extrema,
            theta_envelope: Quantity::dimensionless(envelope)?,
            psi_at_critical: PsiSummary {
                coefficient: Quantity::dimensionless(psi.coefficient)?,
                closed_form: Quantity::dimensionless(psi.closed_form)?,
                max_psi: Quantity::dimensionless(psi.max_psi)?,
                strictly_negative: psi.strictly_negative,
            },
        }),
        verdicts,
        warnings: Vec::new(),
        tables: vec![("bounds".into(), samples), ("bounds_extrema".into(), extrema_table)],
        exports: Vec::new(),
    })
}

// ---- sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRowOut {
    pub nu: Quantity,
    pub nodes: usize,
    pub lambda_min_over_mc2: Option<Quantity>,
    pub lower_bound: Quantity,
    pub lower_bound_ok: bool,
    pub residual_corollary: Option<Quantity>,
    pub residual_theorem: Option<Quantity>,
    pub stable_bound_states: usize,
    pub embedded_verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPayload {
    pub channel: Channel,
    pub sequence: Vec<usize>,
    pub rows: Vec<SweepRowOut>,
}

/// Checks that, at fixed `N`, `λ_min` does not increase and the bound-state
/// count does not decrease as `ν` grows.
fn monotone_in_nu(rows: &[SweepRowOut]) -> (bool, bool) {
    let mut sorted: Vec<&SweepRowOut> = rows.iter().collect();
    sorted.sort_by(|a, b| a.nodes.cmp(&b.nodes).then(a.nu.value.total_cmp(&b.nu.value)));
    let mut lambda_ok = true;
    let mut count_ok = true;
    for w in sorted.windows(2) {
        if w[0].nodes != w[1].nodes {
            continue;
        }
        let lam = |r: &SweepRowOut| r.lambda_min_over_mc2.map_or(1.0, |q| q.value);
        lambda_ok &= lam(w[1]) <= lam(w[0]) + 1e-12;
        count_ok &= w[1].stable_bound_states >= w[0].stable_bound_states;
    }
    (lambda_ok, count_ok)
}

pub fn cmd_sweep(config: &RunConfig) -> Result<CommandOutput> {
    let base = config.params(0.0)?;
    let sweep = z_sweep(
        config.channel,
        &config.nu,
        &base,
        &config.nodes,
        config.spectral_options()?,
    )?;
    let rows = sweep
        .rows
        .iter()
        .map(|r| {
            Ok(SweepRowOut {
                nu: Quantity::dimensionless(r.nu)?,
                nodes: r.nodes,
                lambda_min_over_mc2: r
                    .lambda_min_over_mc2
                    .map(|v| Quantity::new(v, Units::Mc2))
                    .transpose()?,
                lower_bound: Quantity::new(r.lower_bound, Units::Mc2)?,
                lower_bound_ok: r.lower_bound_ok,
                residual_corollary: r.residual_corollary.map(Quantity::dimensionless).transpose()?,
                residual_theorem: r.residual_theorem.map(Quantity::dimensionless).transpose()?,
                stable_bound_states: r.stable_bound_states,
                embedded_verdict: r.embedded_verdict,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let embedded_fail = rows.iter().filter(|r| r.embedded_verdict == Verdict::Fail).count();
    let lower_fail = rows.iter().filter(|r| !r.lower_bound_ok).count();
    let (lambda_ok, count_ok) = monotone_in_nu(&rows);
    let verdicts = vec![
        VerdictEntry::new(
            "embedded_exclusion",
            embedded_fail == 0,
            format!("{embedded_fail} of {} rows FAIL", rows.len()),
        ),
        VerdictEntry::new(
            "lower_bound",
            lower_fail == 0,
            format!(
                "{lower_fail} of {} rows below (1 - Z/Z_c) mc² by more than {LOWER_BOUND_SLACK:e}",
                rows.len()
            ),
        ),
        VerdictEntry::new("lambda_min_monotone", lambda_ok, "λ_min nonincreasing in ν at fixed N"),
        VerdictEntry::new(
            "bound_count_monotone",
            count_ok,
            "stable bound-state count nondecreasing in ν",
        ),
    ];

    let mut table = Table::new([
        "nu",
        "N",
        "lambda_min_over_mc2",
        "lower_bound",
        "residual_corollary",
        "residual_theorem",
        "embedded_verdict",
        "stable_bound_states",
        "lower_bound_ok",
    ]);
    for r in &rows {
        table.push(vec![
            sig17(r.nu.value),
            r.nodes.to_string(),
            opt17(r.lambda_min_over_mc2.map(|q| q.value)),
            sig17(r.lower_bound.value),
            opt17(r.residual_corollary.map(|q| q.value)),
            opt17(r.residual_theorem.map(|q| q.value)),
            r.embedded_verdict.to_string(),
            r.stable_bound_states.to_string(),
            r.lower_bound_ok.to_string(),
        ]);
    }

    Ok(CommandOutput {
        payload: Payload::Sweep(SweepPayload {
            channel: sweep.channel,
            sequence: sweep.sequence,
            rows,
        }),
        verdicts,
        warnings: sweep.warnings,
        tables: vec![("sweep".into(), table)],
        exports: Vec::new(),
    })
}
