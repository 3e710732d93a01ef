use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::channel::Channel;
use super::grid::{GridMap, MomentumGrid};
use super::kernel::kernel_pair_offset;
use crate::error::{Error, Result};
use crate::kinematics::PhysicalParams;
use crate::quadrature::{graded_rule_cached, QuadratureLevel};

/// How the weighted diagonal `w_i k(p_i, p_i)` of the Nyström matrix is
/// replaced, since the kernel is logarithmically singular there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalRule {
    /// Singularity subtraction against `ψ_i(q) = 2 p_i q / (p_i² + q²)`,
    /// integrated exactly over the resolved momentum window.
    #[default]
    Subtraction,
    /// Average of `k(p_i, ·)` over the Gauss–Legendre cell of node `i`.
    CellAverage,
}

impl std::str::FromStr for DiagonalRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "subtraction" => Ok(DiagonalRule::Subtraction),
            "cell_average" | "cell-average" => Ok(DiagonalRule::CellAverage),
            other => Err(Error::Config(format!("unknown diagonal rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AssemblyOptions {
    pub rule: DiagonalRule,
    pub level: QuadratureLevel,
}

/// Effective diagonal kernel values `(k¹, k²)` at node `i`, unweighted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalKernel {
    pub k1: f64,
    pub k2: f64,
}

impl DiagonalKernel {
    pub fn total(&self) -> f64 {
        self.k1 + self.k2
    }
}

#[inline]
fn subtraction_profile(p: f64, q: f64) -> f64 {
    2.0 * p * q / (p * p + q * q)
}

/// `∫_lo^hi k(p, q) f(p, q) dq` with graded panels on each side of `p`.
fn integrate_across(
    channel: Channel,
    params: &PhysicalParams,
    p: f64,
    lo: f64,
    hi: f64,
    level: QuadratureLevel,
    weight: impl Fn(f64) -> f64,
) -> (f64, f64) {
    let rule = graded_rule_cached(level);
    let (mut s1, mut s2) = (0.0, 0.0);
    for (u, w) in rule.points() {
        let below = (p - lo) * u;
        let q = p - below;
        let (k1, k2) = kernel_pair_offset(channel, params, p, q, -below);
        let f = weight(q) * w * (p - lo);
        s1 += k1 * f;
        s2 += k2 * f;
    }
    for (u, w) in rule.points() {
        let above = (hi - p) * u;
        let q = p + above;
        let (k1, k2) = kernel_pair_offset(channel, params, p, q, above);
        let f = weight(q) * w * (hi - p);
        s1 += k1 * f;
        s2 += k2 * f;
    }
    (s1, s2)
}

fn check_node(grid: &MomentumGrid, i: usize) -> Result<()> {
    if i >= grid.len() {
        return Err(Error::GridMismatch(format!(
            "node index {i} out of range for a grid of {} nodes",
            grid.len()
        )));
    }
    Ok(())
}

/// Cell-averaged diagonal `(1/w_i) ∫_{cell_i} k(p_i, q) dq`.
pub fn cell_average_diagonal(
    channel: Channel,
    i: usize,
    grid: &MomentumGrid,
    params: &PhysicalParams,
    level: QuadratureLevel,
) -> Result<DiagonalKernel> {
    check_node(grid, i)?;
    let p = grid.nodes()[i];
    let (lo, hi) = grid.cell(i);
    let (s1, s2) = integrate_across(channel, params, p, lo, hi, level, |_| 1.0);
    let w = grid.weights()[i];
    Ok(DiagonalKernel { k1: s1 / w, k2: s2 / w })
}

/// Subtraction diagonal: `(R_i - ∑_{j≠i} w_j k_ij ψ_i(p_j)) / w_i` with
/// `R_i = ∫ k(p_i, q) ψ_i(q) dq` over the window.
pub fn subtraction_diagonal(
    channel: Channel,
    i: usize,
    grid: &MomentumGrid,
    params: &PhysicalParams,
    level: QuadratureLevel,
) -> Result<DiagonalKernel> {
    check_node(grid, i)?;
    let p = grid.nodes()[i];
    let (lo, hi) = grid.window();
    let (mut r1, mut r2) = integrate_across(channel, params, p, lo, hi, level, |q| subtraction_profile(p, q));
    for (j, (&q, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
        if j == i {
            continue;
        }
        let (k1, k2) = kernel_pair_offset(channel, params, p, q, q - p);
        let f = w * subtraction_profile(p, q);
        r1 -= k1 * f;
        r2 -= k2 * f;
    }
    let w = grid.weights()[i];
    Ok(DiagonalKernel { k1: r1 / w, k2: r2 / w })
}

/// Effective diagonal kernel at node `i` under the default rule.
pub fn diagonal_kernel(
    channel: Channel,
    i: usize,
    grid: &MomentumGrid,
    params: &PhysicalParams,
) -> Result<DiagonalKernel> {
    diagonal_kernel_with(channel, i, grid, params, AssemblyOptions::default())
}

pub fn diagonal_kernel_with(
    channel: Channel,
    i: usize,
    grid: &MomentumGrid,
    params: &PhysicalParams,
    options: AssemblyOptions,
) -> Result<DiagonalKernel> {
    match options.rule {
        DiagonalRule::Subtraction => subtraction_diagonal(channel, i, grid, params, options.level),
        DiagonalRule::CellAverage => cell_average_diagonal(channel, i, grid, params, options.level),
    }
}

/// Symmetric Nyström matrix
/// `A_ij = e(p_i) δ_ij - (αcZ/π) sqrt(w_i w_j) k_{l,s}(p_i, p_j)`.
#[derive(Debug, Clone)]
pub struct ChannelMatrix {
    channel: Channel,
    grid: Arc<MomentumGrid>,
    params: PhysicalParams,
    options: AssemblyOptions,
    energies: Vec<f64>,
    k1_weighted: DMatrix<f64>,
    k2_weighted: DMatrix<f64>,
    matrix: DMatrix<f64>,
}

/// JSON sidecar describing an exported matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMetadata {
    pub channel: Channel,
    pub params: PhysicalParams,
    pub nu: f64,
    pub map: GridMap,
    pub nodes: usize,
    pub diagonal_rule: DiagonalRule,
    pub quadrature_level: QuadratureLevel,
}

pub fn assemble(channel: Channel, grid: &MomentumGrid, params: &PhysicalParams) -> Result<ChannelMatrix> {
    assemble_with(channel, Arc::new(grid.clone()), params, AssemblyOptions::default())
}

pub fn assemble_with(
    channel: Channel,
    grid: Arc<MomentumGrid>,
    params: &PhysicalParams,
    options: AssemblyOptions,
) -> Result<ChannelMatrix> {
    let n = grid.len();
    let nodes = grid.nodes();
    let weights = grid.weights();
    if params.rest_energy() == 0.0 && nodes.first().is_some_and(|&p| p == 0.0) {
        return Err(Error::GridMismatch(
            "massless kernel needs strictly positive nodes".into(),
        ));
    }

    // upper triangle by rows; every entry is computed independently
    let rows: Vec<Vec<(f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = nodes[i];
            (i + 1..n)
                .map(|j| {
                    let q = nodes[j];
                    kernel_pair_offset(channel, params, p, q, q - p)
                })
                .collect()
        })
        .collect();
    let diagonal: Vec<DiagonalKernel> = (0..n)
        .into_par_iter()
        .map(|i| diagonal_kernel_with(channel, i, &grid, params, options))
        .collect::<Result<_>>()?;

    let mut k1w = DMatrix::zeros(n, n);
    let mut k2w = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (offset, &(k1, k2)) in row.iter().enumerate() {
            let j = i + 1 + offset;
            let s = (weights[i] * weights[j]).sqrt();
            k1w[(i, j)] = s * k1;
            k1w[(j, i)] = s * k1;
            k2w[(i, j)] = s * k2;
            k2w[(j, i)] = s * k2;
        }
        k1w[(i, i)] = weights[i] * diagonal[i].k1;
        k2w[(i, i)] = weights[i] * diagonal[i].k2;
    }
    if k1w.iter().chain(k2w.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("channel kernel assembly"));
    }
    let energies: Vec<f64> = nodes.iter().map(|&p| params.energy_unchecked(p)).collect();
    let matrix = couple(&energies, &k1w, &k2w, params.channel_coupling());
    Ok(ChannelMatrix {
        channel,
        grid,
        params: *params,
        options,
        energies,
        k1_weighted: k1w,
        k2_weighted: k2w,
        matrix,
    })
}

fn couple(energies: &[f64], k1w: &DMatrix<f64>, k2w: &DMatrix<f64>, coupling: f64) -> DMatrix<f64> {
    let n = energies.len();
    DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { energies[i] } else { 0.0 };
        diag - coupling * (k1w[(i, j)] + k2w[(i, j)])
    })
}

impl ChannelMatrix {
    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> Arc<MomentumGrid> {
        Arc::clone(&self.grid)
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn options(&self) -> AssemblyOptions {
        self.options
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// `e(p_i)`.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// `sqrt(w_i w_j) k¹_ij`, effective diagonal included.
    pub fn k1_weighted(&self) -> &DMatrix<f64> {
        &self.k1_weighted
    }

    /// `sqrt(w_i w_j) k²_ij`, effective diagonal included.
    pub fn k2_weighted(&self) -> &DMatrix<f64> {
        &self.k2_weighted
    }

    pub fn kernel_weighted(&self) -> DMatrix<f64> {
        &self.k1_weighted + &self.k2_weighted
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Same kernel with a different nuclear charge. The kernel does not
    /// depend on `Z`, so nothing is reassembled.
    pub fn recoupled(&self, params: &PhysicalParams) -> Result<ChannelMatrix> {
        if params.mass() != self.params.mass() || params.light_speed() != self.params.light_speed() {
            return Err(Error::GridMismatch(
                "recoupling requires the same mass and light speed".into(),
            ));
        }
        Ok(ChannelMatrix {
            matrix: couple(
                &self.energies,
                &self.k1_weighted,
                &self.k2_weighted,
                params.channel_coupling(),
            ),
            params: *params,
            ..self.clone()
        })
    }

    pub fn metadata(&self) -> MatrixMetadata {
        MatrixMetadata {
            channel: self.channel,
            params: self.params,
            nu: self.params.nu(),
            map: self.grid.map(),
            nodes: self.len(),
            diagonal_rule: self.options.rule,
            quadrature_level: self.options.level,
        }
    }
}

/// Samples `φ(p_i)` of a reduced radial function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFunction {
    grid: Arc<MomentumGrid>,
    values: Vec<Complex64>,
}

impl ChannelFunction {
    pub fn new(grid: Arc<MomentumGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// From a column `v` of the symmetrized matrix: `φ_i = v_i / sqrt(w_i)`.
    pub fn from_symmetric_vector(grid: Arc<MomentumGrid>, v: &[f64]) -> Result<Self> {
        if v.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "vector of length {} for a grid of {} nodes",
                v.len(),
                grid.len()
            )));
        }
        let values = v
            .iter()
            .zip(grid.weights())
            .map(|(&x, &w)| Complex64::new(x / w.sqrt(), 0.0))
            .collect();
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `v_i = sqrt(w_i) φ_i`.
    pub fn symmetric_vector(&self) -> Vec<Complex64> {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(&f, &w)| f * w.sqrt())
            .collect()
    }

    /// `∑ w_i |φ_i|²`.
    pub fn norm_sq(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(f, &w)| w * f.norm_sqr())
            .sum()
    }
}
