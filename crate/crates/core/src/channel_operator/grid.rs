use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::gauss_legendre_cached;

/// Map from Gauss–Legendre nodes on `(-1, 1)` to momenta on `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum GridMap {
    /// `p = σ (1 + x) / (1 - x)`.
    Rational { sigma: f64 },
}

impl GridMap {
    pub fn rational(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid("sigma", format!("grid scale must be positive, got {sigma}")));
        }
        Ok(GridMap::Rational { sigma })
    }

    pub fn name(&self) -> &'static str {
        match self {
            GridMap::Rational { .. } => "rational",
        }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            GridMap::Rational { sigma } => sigma,
        }
    }

    pub fn momentum(&self, x: f64) -> f64 {
        let sigma = self.sigma();
        sigma * (1.0 + x) / (1.0 - x)
    }

    /// `dp/dx`.
    pub fn jacobian(&self, x: f64) -> f64 {
        let sigma = self.sigma();
        2.0 * sigma / ((1.0 - x) * (1.0 - x))
    }

    fn scaled(&self, a: f64) -> Self {
        match *self {
            GridMap::Rational { sigma } => GridMap::Rational { sigma: sigma * a },
        }
    }
}

impl Default for GridMap {
    fn default() -> Self {
        GridMap::Rational { sigma: 1.0 }
    }
}

impl fmt::Display for GridMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(sigma={})", self.name(), self.sigma())
    }
}

/// Parses a map name; the scale comes separately.
impl FromStr for GridMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rational" => Ok(GridMap::default()),
            other => Err(invalid("map", format!("unknown grid map `{other}`"))),
        }
    }
}

/// Quadrature nodes and weights on `(0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    map: GridMap,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    reference_nodes: Vec<f64>,
    reference_weights: Vec<f64>,
    /// Momentum edges of the Gauss–Legendre cells (cumulative weights);
    /// the unbounded last cell is closed at the window edge.
    cell_edges: Vec<f64>,
    window: (f64, f64),
}

pub const MIN_NODES: usize = 8;

/// Gauss–Legendre nodes mapped to momenta; weights carry the Jacobian.
pub fn build_grid(n: usize, map: GridMap) -> Result<MomentumGrid> {
    if n < MIN_NODES {
        return Err(invalid("N", format!("grid needs at least {MIN_NODES} nodes, got {n}")));
    }
    let map = GridMap::rational(map.sigma())?;
    let gl = gauss_legendre_cached(n);
    let nodes: Vec<f64> = gl.nodes.iter().map(|&x| map.momentum(x)).collect();
    let weights: Vec<f64> = gl
        .nodes
        .iter()
        .zip(&gl.weights)
        .map(|(&x, &w)| w * map.jacobian(x))
        .collect();

    let mut edges_x = Vec::with_capacity(n + 1);
    let mut acc = -1.0;
    edges_x.push(acc);
    for w in &gl.weights[..n - 1] {
        acc += w;
        edges_x.push(acc);
    }
    let x_lo = 0.5 * (gl.nodes[0] - 1.0);
    let x_hi = 0.5 * (gl.nodes[n - 1] + 1.0);
    edges_x.push(x_hi);
    let cell_edges = edges_x.iter().map(|&x| map.momentum(x)).collect();

    let window = (map.momentum(x_lo), map.momentum(x_hi));

    let grid = MomentumGrid {
        map,
        nodes,
        weights,
        reference_nodes: gl.nodes.clone(),
        reference_weights: gl.weights.clone(),
        cell_edges,
        window,
    };
    grid.check()?;
    Ok(grid)
}

impl MomentumGrid {
    fn check(&self) -> Result<()> {
        let ok = self.nodes.iter().all(|p| p.is_finite() && *p > 0.0)
            && self.nodes.windows(2).all(|w| w[0] < w[1])
            && self.weights.iter().all(|w| w.is_finite() && *w > 0.0)
            && self.cell_edges.windows(2).all(|w| w[0] < w[1])
            && self.cell_edges.iter().all(|p| p.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::NonFinite("grid construction"))
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn map(&self) -> GridMap {
        self.map
    }

    pub fn sigma(&self) -> f64 {
        self.map.sigma()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Gauss–Legendre nodes on `(-1, 1)` behind the momentum nodes.
    pub fn reference_nodes(&self) -> &[f64] {
        &self.reference_nodes
    }

    pub fn reference_weights(&self) -> &[f64] {
        &self.reference_weights
    }

    /// Cell `[lo, hi]` containing node `i`.
    pub fn cell(&self, i: usize) -> (f64, f64) {
        (self.cell_edges[i], self.cell_edges[i + 1])
    }

    /// Momentum range resolved by the nodes: images of the midpoints
    /// between the outermost nodes and `±1`.
    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// `∑ w_i f(p_i)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }

    /// Grid with momenta and weights multiplied by `a`.
    pub fn scaled(&self, a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(invalid("a", format!("dilation must be positive, got {a}")));
        }
        Ok(Self {
            map: self.map.scaled(a),
            nodes: self.nodes.iter().map(|p| a * p).collect(),
            weights: self.weights.iter().map(|w| a * w).collect(),
            reference_nodes: self.reference_nodes.clone(),
            reference_weights: self.reference_weights.clone(),
            cell_edges: self.cell_edges.iter().map(|p| a * p).collect(),
            window: (a * self.window.0, a * self.window.1),
        })
    }
}
