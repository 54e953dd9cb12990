//! Gauss–Legendre rules, trigonometric and logarithmic moments, and the
//! weakly singular aperture integrals.

mod cross;
mod moments;
mod singular;

use std::f64::consts::PI;

pub use cross::{aperture_nodes, cross_block, cross_blocks};
pub use moments::{
    double_poly_trig, log_double_moment, log_double_moment_cos, log_double_moment_sin,
    log_double_moment_direct, log_power_moment, log_power_moment_direct, poly_trig_integral,
    poly_trig_table, recursion_step, LogMomentTables,
};
pub use singular::{effective_bessel_k, singular_block, SingularBlockCache, SingularBlocks};

pub const TWO_PI: f64 = 2.0 * PI;

/// Sine or cosine factor `trig(n s / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trig {
    Sin,
    Cos,
}

impl Trig {
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Trig::Sin => x.sin(),
            Trig::Cos => x.cos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `q`-point Gauss–Legendre rule on `[-1, 1]` (Newton iteration on `P_q`).
pub fn gauss_rule(q: usize) -> GaussRule {
    assert!(q >= 2, "gauss_rule needs q >= 2");
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let qf = q as f64;
    for i in 0..q.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=q {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = qf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

/// Nodes and weights of a rule on the panels given by consecutive `edges`.
pub fn rule_on_edges(edges: &[f64], rule: &GaussRule) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(edges.len() * rule.nodes.len());
    let mut w = Vec::with_capacity(x.capacity());
    for e in edges.windows(2) {
        let (mid, half) = (0.5 * (e[0] + e[1]), 0.5 * (e[1] - e[0]));
        for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
            x.push(mid + half * t);
            w.push(half * wt);
        }
    }
    (x, w)
}

/// Composite rule with `panels` equal panels on `[a, b]`.
pub fn composite_rule(a: f64, b: f64, panels: usize, rule: &GaussRule) -> (Vec<f64>, Vec<f64>) {
    let h = (b - a) / panels as f64;
    let edges: Vec<f64> = (0..=panels).map(|i| if i == panels { b } else { a + i as f64 * h }).collect();
    rule_on_edges(&edges, rule)
}

pub fn composite_integral_1d(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, rule: &GaussRule) -> f64 {
    let (x, w) = composite_rule(a, b, panels, rule);
    x.iter().zip(&w).map(|(&xi, &wi)| wi * f(xi)).sum()
}

/// Tensor-product composite rule over `[0, 2 pi]^2`.
pub fn composite_integral_2d(f: impl Fn(f64, f64) -> f64, panels: usize, rule: &GaussRule) -> f64 {
    let (x, w) = composite_rule(0.0, TWO_PI, panels, rule);
    let mut total = 0.0;
    for (&s, &ws) in x.iter().zip(&w) {
        let mut row = 0.0;
        for (&t, &wt) in x.iter().zip(&w) {
            row += wt * f(s, t);
        }
        total += ws * row;
    }
    total
}

/// Rule on `[0, 2 pi]` for integrands with a logarithmic endpoint
/// singularity at 0 and oscillation up to frequency `max_freq`.
///
/// Uniform panels of width at most `min(0.5, 4 / max_freq)` cover
/// `[h0, 2 pi]`; `[0, h0]` is split geometrically with ratio 1/4 down to
/// `~1e-19`, each panel carrying 16 points.
pub fn log_endpoint_rule(max_freq: f64) -> (Vec<f64>, Vec<f64>) {
    let hmax = 0.5f64.min(4.0 / max_freq.max(1e-3));
    let count = (TWO_PI / hmax).ceil() as usize;
    let h = TWO_PI / count as f64;
    let mut edges = vec![0.0];
    let mut inner = Vec::new();
    let mut e = h;
    while e > 1e-19 {
        inner.push(e);
        e *= 0.25;
    }
    edges.extend(inner.into_iter().rev());
    edges.extend((2..=count).map(|i| if i == count { TWO_PI } else { i as f64 * h }));
    rule_on_edges(&edges, &gauss_rule(16))
}
