//! Dense symmetric eigendecomposition of channel matrices, grid-refinement
//! stability classification, bound states and the embedded-eigenvalue scan.
//!
//! An eigenvalue on the finest grid is *grid-stable* when the next coarser
//! grid carries an eigenvector that, interpolated onto the finest grid,
//! overlaps it by at least `min_overlap`, and the two eigenvalues agree to
//! the relative drift tolerance. Matching by eigenvector rather than by
//! nearest eigenvalue keeps dense continuum eigenvalues from pairing up
//! with an unrelated neighbour.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::channel_operator::{
    assemble_with, build_grid, AssemblyOptions, Channel, ChannelMatrix, GridMap, MomentumGrid,
};
use crate::error::{invalid, Error, Result};
use crate::kinematics::{critical_nu, PhysicalParams, CRITICAL_NU_PRIME};
use crate::virial::embedded_threshold;

pub const DEFAULT_SEQUENCE: [usize; 3] = [100, 200, 400];
pub const MIN_REFINEMENTS: usize = 3;

/// Full eigendecomposition of one matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub channel: Channel,
    pub grid: Arc<MomentumGrid>,
    pub eigenvalues: Vec<f64>,
    /// Columns are orthonormal eigenvectors of the symmetrized matrix.
    pub eigenvectors: DMatrix<f64>,
    /// `‖A v - λ v‖`.
    pub residuals: Vec<f64>,
    /// Spectral norm `max |λ|`.
    pub matrix_norm: f64,
}

/// Eigenvalues (ascending), eigenvectors and residual norms of a dense
/// symmetric matrix.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>, Vec<f64>)> {
    if !a.is_square() {
        return Err(invalid("matrix", "must be square"));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix entries"));
    }
    let n = a.nrows();
    let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0).ok_or(Error::NonFinite("eigensolver"))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let av = a * &vectors;
    let residuals = (0..n)
        .map(|k| (av.column(k) - vectors.column(k) * values[k]).norm())
        .collect();
    Ok((values, vectors, residuals))
}

pub fn eigendecompose(matrix: &ChannelMatrix) -> Result<EigenSolution> {
    let (eigenvalues, eigenvectors, residuals) = symmetric_eigen(matrix.matrix())?;
    let matrix_norm = eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(EigenSolution {
        channel: matrix.channel(),
        grid: matrix.shared_grid(),
        eigenvalues,
        eigenvectors,
        residuals,
        matrix_norm,
    })
}

impl EigenSolution {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, &r| m.max(r))
    }

    /// `max |VᵀV - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.len();
        let gram = self.eigenvectors.transpose() * &self.eigenvectors;
        (gram - DMatrix::<f64>::identity(n, n)).amax()
    }

    pub fn eigenvector(&self, k: usize) -> DVector<f64> {
        self.eigenvectors.column(k).into_owned()
    }
}

/// Interpolation matrix taking values `g(x_j)` on the coarse Gauss–Legendre
/// nodes to the fine nodes (barycentric Lagrange form).
fn interpolation_matrix(coarse: &MomentumGrid, fine: &MomentumGrid) -> DMatrix<f64> {
    let xc = coarse.reference_nodes();
    let wc = coarse.reference_weights();
    let bary: Vec<f64> = xc
        .iter()
        .zip(wc)
        .enumerate()
        .map(|(j, (&x, &w))| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * ((1.0 - x * x) * w).sqrt()
        })
        .collect();
    let xf = fine.reference_nodes();
    let mut out = DMatrix::zeros(xf.len(), xc.len());
    for (i, &x) in xf.iter().enumerate() {
        if let Some(j) = xc.iter().position(|&c| c == x) {
            out[(i, j)] = 1.0;
            continue;
        }
        let terms: Vec<f64> = xc.iter().zip(&bary).map(|(&c, &b)| b / (x - c)).collect();
        let total: f64 = terms.iter().sum();
        for (j, t) in terms.into_iter().enumerate() {
            out[(i, j)] = t / total;
        }
    }
    out
}

/// Coarse eigenvectors transferred to the fine grid and renormalized. The
/// smooth quantity interpolated in `x` is `v / sqrt(w_x)`.
fn transfer_eigenvectors(coarse: &EigenSolution, fine_grid: &MomentumGrid) -> DMatrix<f64> {
    let interp = interpolation_matrix(&coarse.grid, fine_grid);
    let mut g = coarse.eigenvectors.clone();
    for (r, &w) in coarse.grid.reference_weights().iter().enumerate() {
        let s = w.sqrt().recip();
        g.row_mut(r).scale_mut(s);
    }
    let mut t = interp * g;
    for (r, &w) in fine_grid.reference_weights().iter().enumerate() {
        t.row_mut(r).scale_mut(w.sqrt());
    }
    for mut col in t.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    /// Relative drift tolerance between the two finest grids.
    pub tolerance: f64,
    /// Minimum eigenvector overlap with the coarse partner.
    pub min_overlap: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            min_overlap: 0.99,
        }
    }
}

/// One finest-grid eigenvalue and its coarse partner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackedEigenvalue {
    pub index: usize,
    pub value: f64,
    pub partner: Option<f64>,
    pub overlap: f64,
    /// `|λ_fine - λ_coarse| / |λ_fine|`; infinite without a partner.
    pub drift: f64,
    pub stable: bool,
}

/// Classifies every eigenvalue of `fine` against `coarse`.
pub fn track_eigenvalues(
    fine: &EigenSolution,
    coarse: &EigenSolution,
    options: StabilityOptions,
) -> Vec<TrackedEigenvalue> {
    let transferred = transfer_eigenvectors(coarse, &fine.grid);
    let overlaps = fine.eigenvectors.transpose() * transferred;
    (0..fine.len())
        .map(|k| {
            let row = overlaps.row(k);
            let (best, overlap) = row
                .iter()
                .enumerate()
                .map(|(j, v)| (j, v.abs()))
                .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            let value = fine.eigenvalues[k];
            let (partner, drift) = if best == usize::MAX || overlap < options.min_overlap {
                (None, f64::INFINITY)
            } else {
                let other = coarse.eigenvalues[best];
                (Some(other), (value - other).abs() / value.abs().max(f64::MIN_POSITIVE))
            };
            TrackedEigenvalue {
                index: k,
                value,
                partner,
                overlap,
                drift,
                stable: drift < options.tolerance,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpectralOptions {
    pub map: GridMap,
    pub assembly: AssemblyOptions,
    pub stability: StabilityOptions,
    pub allow_supercritical: bool,
}

/// Matrices and eigendecompositions along a refinement sequence.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub channel: Channel,
    pub params: PhysicalParams,
    pub options: SpectralOptions,
    pub levels: Vec<(ChannelMatrix, EigenSolution)>,
    pub warnings: Vec<String>,
}

fn check_sequence(sequence: &[usize]) -> Result<()> {
    if sequence.len() < MIN_REFINEMENTS {
        return Err(Error::RefinementTooShort {
            required: MIN_REFINEMENTS,
            got: sequence.len(),
        });
    }
    if !sequence.windows(2).all(|w| w[0] < w[1]) {
        return Err(invalid("nodes", "refinement sequence must be strictly increasing"));
    }
    Ok(())
}

/// Warnings for couplings where results are not authoritative; an error
/// at or above the critical coupling unless explicitly allowed.
pub fn coupling_warnings(channel: Channel, params: &PhysicalParams, allow_supercritical: bool) -> Result<Vec<String>> {
    let nu = params.nu();
    let mut warnings = Vec::new();
    if nu >= critical_nu() {
        if !allow_supercritical {
            return Err(Error::Supercritical {
                nu,
                critical: critical_nu(),
            });
        }
        warnings.push(format!(
            "nu = {nu} is at or above the critical coupling {}; the form is not bounded below",
            critical_nu()
        ));
    }
    if nu > CRITICAL_NU_PRIME && channel.is_strongly_coupled() {
        warnings.push(format!(
            "nu = {nu} exceeds 3/4 in channel {channel}: the self-adjoint realization is not unique and \
             the discretization selects one; results are non-authoritative"
        ));
    }
    Ok(warnings)
}

/// Assembles and diagonalizes the channel on every grid of the sequence.
/// The kernel is assembled once per grid; `Z` enters only as a coupling.
pub fn refine(
    channel: Channel,
    params: &PhysicalParams,
    sequence: &[usize],
    options: SpectralOptions,
) -> Result<Refinement> {
    check_sequence(sequence)?;
    let warnings = coupling_warnings(channel, params, options.allow_supercritical)?;
    let mut levels = Vec::with_capacity(sequence.len());
    for &n in sequence {
        let grid = Arc::new(build_grid(n, options.map)?);
        let matrix = assemble_with(channel, grid, params, options.assembly)?;
        let solution = eigendecompose(&matrix)?;
        levels.push((matrix, solution));
    }
    Ok(Refinement {
        channel,
        params: *params,
        options,
        levels,
        warnings,
    })
}

impl Refinement {
    pub fn finest(&self) -> &(ChannelMatrix, EigenSolution) {
        self.levels.last().expect("refinement has at least three levels")
    }

    /// Same grids and kernels at a different nuclear charge.
    pub fn recoupled(&self, params: &PhysicalParams) -> Result<Refinement> {
        let warnings = coupling_warnings(self.channel, params, self.options.allow_supercritical)?;
        let levels = self
            .levels
            .iter()
            .map(|(m, _)| {
                let m = m.recoupled(params)?;
                let s = eigendecompose(&m)?;
                Ok((m, s))
            })
            .collect::<Result<_>>()?;
        Ok(Refinement {
            params: *params,
            levels,
            warnings,
            ..self.clone()
        })
    }

    /// Finest-grid eigenvalues tracked against the next coarser grid.
    pub fn tracked(&self) -> Vec<TrackedEigenvalue> {
        let k = self.levels.len();
        track_eigenvalues(&self.levels[k - 1].1, &self.levels[k - 2].1, self.options.stability)
    }

    pub fn sequence(&self) -> Vec<usize> {
        self.levels.iter().map(|(m, _)| m.len()).collect()
    }
}

/// Eigenvalues below `mc²` on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementLevel {
    pub nodes: usize,
    pub below_threshold: Vec<f64>,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStateSet {
    pub channel: Channel,
    pub nu: f64,
    /// Grid-stable eigenvalues below `mc²` on the finest grid, ascending.
    pub stable: Vec<TrackedEigenvalue>,
    /// Finest-grid eigenvalues below `mc²` that failed the stability test.
    pub unstable: Vec<TrackedEigenvalue>,
    pub history: Vec<RefinementLevel>,
    /// `(1 - Z/Z_c) mc²`.
    pub lower_bound: f64,
    /// Smallest `λ - lower_bound` over all grids' eigenvalues (infinite if none).
    pub lower_bound_margin: f64,
    pub all_positive: bool,
    pub warnings: Vec<String>,
}

impl BoundStateSet {
    pub fn ground_state(&self) -> Option<&TrackedEigenvalue> {
        self.stable.first()
    }
}

pub fn classify_bound_states(refinement: &Refinement) -> BoundStateSet {
    let e0 = refinement.params.rest_energy();
    let lower_bound = (1.0 - refinement.params.charge_ratio()) * e0;
    let mut margin = f64::INFINITY;
    let mut all_positive = true;
    let history = refinement
        .levels
        .iter()
        .map(|(m, s)| {
            let below: Vec<f64> = s.eigenvalues.iter().copied().filter(|&x| x < e0).collect();
            for &x in &s.eigenvalues {
                all_positive &= x > 0.0;
            }
            if let Some(&min) = s.eigenvalues.first() {
                margin = margin.min(min - lower_bound);
            }
            RefinementLevel {
                nodes: m.len(),
                below_threshold: below,
                max_residual: s.max_residual(),
            }
        })
        .collect();
    let (stable, unstable): (Vec<_>, Vec<_>) = refinement
        .tracked()
        .into_iter()
        .filter(|t| t.value < e0)
        .partition(|t| t.stable);
    BoundStateSet {
        channel: refinement.channel,
        nu: refinement.params.nu(),
        stable,
        unstable,
        history,
        lower_bound,
        lower_bound_margin: margin,
        all_positive,
        warnings: refinement.warnings.clone(),
    }
}

/// Grid-stable eigenvalues below `mc²` across the refinement sequence.
pub fn bound_states(
    channel: Channel,
    params: &PhysicalParams,
    sequence: &[usize],
    options: SpectralOptions,
) -> Result<BoundStateSet> {
    Ok(classify_bound_states(&refine(channel, params, sequence, options)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedReport {
    pub channel: Channel,
    pub nu: f64,
    /// Lower edge of the proven eigenvalue-free region, units of `mc²`
    /// (infinite when no exclusion is proven).
    pub threshold: f64,
    /// Grid-stable eigenvalues at or above `mc²` on the finest grid.
    pub stable_embedded: Vec<TrackedEigenvalue>,
    /// Of those, the ones inside `[threshold·mc², ∞)`.
    pub in_exclusion_region: Vec<TrackedEigenvalue>,
    /// Finest-grid eigenvalues at or above `mc²` examined.
    pub examined: usize,
    pub warnings: Vec<String>,
}

impl EmbeddedReport {
    /// No grid-stable eigenvalue where the exclusion theorem forbids one.
    pub fn passes(&self) -> bool {
        self.in_exclusion_region.is_empty()
    }
}

pub fn classify_embedded(refinement: &Refinement) -> Result<EmbeddedReport> {
    let e0 = refinement.params.rest_energy();
    let threshold = embedded_threshold(refinement.channel, refinement.params.nu())?;
    let candidates: Vec<TrackedEigenvalue> = refinement.tracked().into_iter().filter(|t| t.value >= e0).collect();
    let examined = candidates.len();
    let stable_embedded: Vec<TrackedEigenvalue> = candidates.into_iter().filter(|t| t.stable).collect();
    let in_exclusion_region = stable_embedded
        .iter()
        .copied()
        .filter(|t| t.value >= threshold * e0)
        .collect();
    Ok(EmbeddedReport {
        channel: refinement.channel,
        nu: refinement.params.nu(),
        threshold,
        stable_embedded,
        in_exclusion_region,
        examined,
        warnings: refinement.warnings.clone(),
    })
}

/// Grid-stable eigenvalues in the continuum `[mc², ∞)`.
pub fn embedded_scan(
    channel: Channel,
    params: &PhysicalParams,
    sequence: &[usize],
    options: SpectralOptions,
) -> Result<EmbeddedReport> {
    classify_embedded(&refine(channel, params, sequence, options)?)
}

/// Largest eigenvalue of `E^{-1/2} (αcZ/π) K E^{-1/2}` at the matrix's own
/// coupling; equals `Z/Z_c` times the saturation ratio.
pub fn relative_bound_ratio(matrix: &ChannelMatrix) -> Result<f64> {
    let scale: Vec<f64> = matrix.energies().iter().map(|e| e.sqrt().recip()).collect();
    let k = matrix.kernel_weighted();
    let coupling = matrix.params().channel_coupling();
    let n = matrix.len();
    let b = DMatrix::from_fn(n, n, |i, j| coupling * scale[i] * k[(i, j)] * scale[j]);
    let (values, _, _) = symmetric_eigen(&b)?;
    values.last().copied().ok_or(Error::ZeroNorm)
}
