//! Gauss–Legendre rules and geometrically graded panel quadrature.
//!
//! Integrands with a logarithmic or weak algebraic singularity at an
//! endpoint are handled by panels shrinking geometrically toward that
//! endpoint, each carrying a fixed Gauss–Legendre rule. Integrands are
//! always evaluated through their *offset* from the singular endpoint so
//! that cancellation in `t - 1` never reaches the caller.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Gauss–Legendre nodes (ascending, in `(-1, 1)`) and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from the Tricomi initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_p_and_derivative(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_p_and_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
            nodes[i] = -x;
            weights[i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        half * sum
    }
}

fn legendre_p_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Accuracy knob for graded quadrature. Level `k` uses `12 + 2k` points per
/// panel and `20 + 8k` geometric panels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct QuadratureLevel(pub u32);

impl QuadratureLevel {
    pub const DEFAULT: QuadratureLevel = QuadratureLevel(3);

    pub fn points_per_panel(self) -> usize {
        12 + 2 * self.0 as usize
    }

    pub fn panels(self) -> usize {
        20 + 8 * self.0 as usize
    }

    pub fn next(self) -> Self {
        QuadratureLevel(self.0 + 1)
    }
}

impl Default for QuadratureLevel {
    fn default() -> Self {
        Self::DEFAULT
    }
}

const GRADING_RATIO: f64 = 0.15;

/// Offsets and weights for `∫_0^L f(offset) d offset` with panels refined
/// geometrically toward `offset = 0`.
#[derive(Debug, Clone)]
pub struct GradedRule {
    offsets: Vec<f64>,
    weights: Vec<f64>,
}

impl GradedRule {
    /// Rule on the unit interval; scale with [`GradedRule::integrate`].
    pub fn new(level: QuadratureLevel) -> Self {
        let gl = gauss_legendre_cached(level.points_per_panel());
        let panels = level.panels();
        let mut offsets = Vec::with_capacity(gl.len() * (panels + 1));
        let mut weights = Vec::with_capacity(offsets.capacity());
        let mut edges = Vec::with_capacity(panels + 1);
        edges.push(0.0);
        for k in (0..panels).rev() {
            edges.push(GRADING_RATIO.powi(k as i32));
        }
        for pair in edges.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                offsets.push(mid + half * x);
                weights.push(half * w);
            }
        }
        Self { offsets, weights }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// `∫_0^length f(offset) d offset`; summation runs from the singular end
    /// outward, in a fixed order.
    pub fn integrate(&self, length: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        if length == 0.0 {
            return 0.0;
        }
        let mut sum = 0.0;
        for (u, w) in self.offsets.iter().zip(&self.weights) {
            sum += w * f(length * u);
        }
        length * sum
    }

    /// Unit-interval offsets and weights.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.offsets.iter().copied().zip(self.weights.iter().copied())
    }
}

/// `∫_0^1 f` with graded refinement toward both endpoints. `near_zero`
/// receives `u`, `near_one` receives `1 - u`; both describe the same
/// integrand.
pub fn integrate_unit_interval(
    rule: &GradedRule,
    near_zero: impl FnMut(f64) -> f64,
    near_one: impl FnMut(f64) -> f64,
) -> f64 {
    rule.integrate(0.5, near_zero) + rule.integrate(0.5, near_one)
}

pub(crate) fn gauss_legendre_cached(n: usize) -> &'static GaussLegendre {
    static CACHE: OnceLock<std::sync::Mutex<Vec<(usize, &'static GaussLegendre)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| std::sync::Mutex::new(Vec::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    if let Some((_, rule)) = guard.iter().find(|(k, _)| *k == n) {
        return rule;
    }
    let rule: &'static GaussLegendre = Box::leak(Box::new(GaussLegendre::new(n)));
    guard.push((n, rule));
    rule
}

pub(crate) fn graded_rule_cached(level: QuadratureLevel) -> &'static GradedRule {
    static CACHE: OnceLock<std::sync::Mutex<Vec<(QuadratureLevel, &'static GradedRule)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| std::sync::Mutex::new(Vec::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    if let Some((_, rule)) = guard.iter().find(|(k, _)| *k == level) {
        return rule;
    }
    let rule: &'static GradedRule = Box::leak(Box::new(GradedRule::new(level)));
    guard.push((level, rule));
    rule
}
