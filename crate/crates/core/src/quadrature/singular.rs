//! Weakly singular aperture blocks
//! `int int trig(ns/2) H0(c|s-t|) trig(mt/2) ds dt` over `[0, 2 pi]^2`.
//!
//! The kernel is split as
//! `H0(cu) = R(u) + (2i/pi) sum_{k<=K} (-1)^k (c/2)^{2k}/(k!)^2 u^{2k} ln u
//!         + (2i/pi) r_K(cu) ln u`,
//! with `R` smooth and `r_K` the tail of the `J0` series. `R` goes through
//! tensor Gauss on the production grid and the middle sum is
//! `sum_k ... S_{2k+1}` (or `P_{2k+1}`). The tail term is `C^{2K+1}` only; with
//! the recursion it is integrated by tensor Gauss like `R`, with the
//! reduction it is integrated in `u = |t - s|` on the graded mesh, which keeps
//! full accuracy when `K` has to stay small for large `c`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::moments::{log_double_moment, reduced_pair, reduced_pair_sums, LogMomentTables};
use super::{gauss_rule, log_endpoint_rule, Trig, TWO_PI};
use crate::error::Result;
use crate::model::{LiftMethod, QuadratureConfig};
use crate::special::{j0_series_remainder, regularized_kernel_abs, ComplexValue, KernelScale};

/// Largest term `(c pi)^{2k}/(k!)^2` allowed in the split-off series.
///
/// The log moments are accurate relative to their own size, so a partial
/// sum whose terms exceed the total by many orders would cancel digits away.
const MAX_SERIES_TERM: f64 = 1e4;

/// Number of `J0` series terms split off for scale `c`: at most `k_max`, and
/// no more than keeps every term `(c pi)^{2k}/(k!)^2` below `1e4` (the rest
/// stays in the smooth remainder), but never fewer than `min(2, k_max)`.
pub fn effective_bessel_k(c: f64, k_max: usize) -> usize {
    let x = (c * PI).powi(2);
    let mut term = 1.0;
    let mut k_eff = 0;
    for k in 1..=k_max {
        term *= x / (k * k) as f64;
        if term > MAX_SERIES_TERM {
            break;
        }
        k_eff = k;
    }
    k_eff.max(k_max.min(2))
}

fn series_coefficients(c: f64, k_eff: usize) -> Vec<f64> {
    let x = 0.25 * c * c;
    let mut coef = Vec::with_capacity(k_eff + 1);
    let mut term = 1.0;
    for k in 0..=k_eff {
        if k > 0 {
            term *= -x / (k * k) as f64;
        }
        coef.push(term);
    }
    coef
}

/// Smooth kernel part `R(u)`, plus `(2i/pi) r_K(cu) ln u` when `tail`.
fn smooth_kernel(u: f64, c: f64, k_eff: usize, tail: bool) -> Complex64 {
    let mut g = regularized_kernel_abs(u, c);
    if tail && u > 0.0 {
        g += Complex64::new(0.0, 2.0 / PI * j0_series_remainder(c * u, k_eff) * u.ln());
    }
    g
}

/// Production grid on `[0, 2 pi]` together with the panel/node layout used
/// for the Toeplitz kernel lookup.
struct Grid {
    panels: usize,
    q: usize,
    h: f64,
    xi: Vec<f64>,
    x: Vec<f64>,
    w: Vec<f64>,
}

impl Grid {
    fn new(cfg: &QuadratureConfig) -> Self {
        let rule = gauss_rule(cfg.points_per_panel);
        let h = TWO_PI / cfg.panels as f64;
        let mut x = Vec::new();
        let mut w = Vec::new();
        for p in 0..cfg.panels {
            for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
                x.push((p as f64 + 0.5 * (1.0 + t)) * h);
                w.push(0.5 * h * wt);
            }
        }
        Grid { panels: cfg.panels, q: cfg.points_per_panel, h, xi: rule.nodes, x, w }
    }

    /// Kernel values for every distinct node difference, indexed by
    /// `((dp + P - 1) q + r) q + r'`.
    fn kernel_table(&self, c: f64, k_eff: usize, tail: bool) -> Vec<Complex64> {
        let (p, q) = (self.panels, self.q);
        (0..(2 * p - 1) * q * q)
            .into_par_iter()
            .map(|idx| {
                let rr = idx % q;
                let r = (idx / q) % q;
                let dp = (idx / (q * q)) as f64 - (p as f64 - 1.0);
                let u = (dp * self.h + 0.5 * (self.xi[r] - self.xi[rr]) * self.h).abs();
                smooth_kernel(u, c, k_eff, tail)
            })
            .collect()
    }

    fn kernel_at(&self, table: &[Complex64], i: usize, j: usize) -> Complex64 {
        let (pi, ri) = (i / self.q, i % self.q);
        let (pj, rj) = (j / self.q, j % self.q);
        table[((pi + self.panels - 1 - pj) * self.q + ri) * self.q + rj]
    }
}

/// Graded nodes on `[0, 2 pi]` and weights `w_i r_K(c u_i) ln u_i` for the
/// reduced tail integral.
fn tail_weights(c: f64, k_eff: usize, n_max: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = log_endpoint_rule(0.5 * n_max as f64 + c);
    let g = x.iter().zip(&w).map(|(&u, &wu)| wu * j0_series_remainder(c * u, k_eff) * u.ln()).collect();
    (x, g)
}

/// Sine and cosine blocks for every `0 <= m, n <= n_max` at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularBlocks {
    pub c: f64,
    pub n_max: usize,
    pub k_eff: usize,
    sin: Vec<ComplexValue>,
    cos: Vec<ComplexValue>,
}

impl SingularBlocks {
    pub fn get(&self, kind: Trig, m: usize, n: usize) -> ComplexValue {
        let i = n * (self.n_max + 1) + m;
        match kind {
            Trig::Sin => self.sin[i],
            Trig::Cos => self.cos[i],
        }
    }

    pub fn compute(c: KernelScale, n_max: usize, cfg: &QuadratureConfig) -> Result<Self> {
        let sin_t = LogMomentTables::compute(Trig::Sin, n_max, cfg.bessel_k, cfg)?;
        let cos_t = LogMomentTables::compute(Trig::Cos, n_max, cfg.bessel_k, cfg)?;
        Ok(Self::with_tables(c, n_max, cfg, &sin_t, &cos_t))
    }

    fn with_tables(
        c: KernelScale,
        n_max: usize,
        cfg: &QuadratureConfig,
        sin_t: &LogMomentTables,
        cos_t: &LogMomentTables,
    ) -> Self {
        let c = c.value();
        let k_eff = effective_bessel_k(c, cfg.bessel_k);
        let coef = series_coefficients(c, k_eff);
        let reduce = cfg.lift_method == LiftMethod::Reduction;
        let grid = Grid::new(cfg);
        let table = grid.kernel_table(c, k_eff, !reduce);
        let tail = if reduce { Some(tail_weights(c, k_eff, n_max)) } else { None };
        let d = n_max + 1;
        let np = grid.x.len();
        let mut blocks = Vec::with_capacity(2);
        for (kind, tabs) in [(Trig::Sin, sin_t), (Trig::Cos, cos_t)] {
            // wv[m][j] = w_j trig(m x_j / 2)
            let wv: Vec<Vec<f64>> = (0..d)
                .map(|m| grid.x.iter().zip(&grid.w).map(|(&x, &w)| w * kind.eval(0.5 * m as f64 * x)).collect())
                .collect();
            // y[m][i] = sum_j G(i, j) wv[m][j]
            let y: Vec<Vec<Complex64>> = (0..d)
                .into_par_iter()
                .map(|m| {
                    (0..np)
                        .map(|i| {
                            let mut acc = Complex64::new(0.0, 0.0);
                            for (j, &v) in wv[m].iter().enumerate() {
                                acc += grid.kernel_at(&table, i, j) * v;
                            }
                            acc
                        })
                        .collect()
                })
                .collect();
            let tail_sums = tail.as_ref().map(|(x, g)| reduced_pair_sums(kind, n_max, x, std::slice::from_ref(g)));
            let mut out = vec![Complex64::new(0.0, 0.0); d * d];
            for n in 0..d {
                for m in (0..d).filter(|m| (m + n) % 2 == 0) {
                    let smooth: Complex64 = wv[n].iter().zip(&y[m]).map(|(&a, &b)| b * a).sum();
                    let mut log: f64 = coef.iter().enumerate().map(|(k, a)| a * tabs.get(2 * k + 1, m, n)).sum();
                    if let Some(t) = &tail_sums {
                        log += t[0][n * d + m];
                    }
                    out[n * d + m] = smooth + Complex64::new(0.0, 2.0 / PI * log);
                }
            }
            blocks.push(out);
        }
        let cos = blocks.pop().unwrap_or_default();
        let sin = blocks.pop().unwrap_or_default();
        SingularBlocks { c, n_max, k_eff, sin, cos }
    }
}

/// One block entry. Zero without any quadrature when `m + n` is odd.
pub fn singular_block(m: usize, n: usize, c: KernelScale, kind: Trig, cfg: &QuadratureConfig) -> Result<ComplexValue> {
    if (m + n) % 2 == 1 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let c = c.value();
    let k_eff = effective_bessel_k(c, cfg.bessel_k);
    let reduce = cfg.lift_method == LiftMethod::Reduction;
    let grid = Grid::new(cfg);
    let table = grid.kernel_table(c, k_eff, !reduce);
    let np = grid.x.len();
    let fm: Vec<f64> = grid.x.iter().zip(&grid.w).map(|(&x, &w)| w * kind.eval(0.5 * m as f64 * x)).collect();
    let fnn: Vec<f64> = grid.x.iter().zip(&grid.w).map(|(&x, &w)| w * kind.eval(0.5 * n as f64 * x)).collect();
    let mut smooth = Complex64::new(0.0, 0.0);
    for i in 0..np {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..np {
            row += grid.kernel_at(&table, i, j) * fm[j];
        }
        smooth += row * fnn[i];
    }
    let mut log = 0.0;
    for (k, a) in series_coefficients(c, k_eff).into_iter().enumerate() {
        log += a * log_double_moment(kind, 2 * k + 1, m, n, cfg)?;
    }
    if reduce {
        let (x, g) = tail_weights(c, k_eff, m.max(n));
        log += reduced_pair(kind, m, n, &x, &g);
    }
    Ok(smooth + Complex64::new(0.0, 2.0 / PI * log))
}

fn scale_key(c: f64) -> String {
    format!("{c:.14e}")
}

/// Blocks keyed by the kernel scale rounded to 15 significant digits. The
/// log-moment tables do not depend on the scale and are shared.
///
/// Populate with [`SingularBlockCache::ensure`] before handing the cache to
/// concurrent readers.
#[derive(Debug, Clone)]
pub struct SingularBlockCache {
    cfg: QuadratureConfig,
    n_max: usize,
    tables: Option<Arc<(LogMomentTables, LogMomentTables)>>,
    blocks: HashMap<String, Arc<SingularBlocks>>,
}

impl SingularBlockCache {
    pub fn new(cfg: &QuadratureConfig, n_max: usize) -> Self {
        SingularBlockCache { cfg: *cfg, n_max, tables: None, blocks: HashMap::new() }
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.cfg
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Computes the blocks for scale `c` unless already present.
    pub fn ensure(&mut self, c: KernelScale) -> Result<Arc<SingularBlocks>> {
        let key = scale_key(c.value());
        if let Some(b) = self.blocks.get(&key) {
            return Ok(b.clone());
        }
        let tables = match &self.tables {
            Some(t) => t.clone(),
            None => {
                let t = Arc::new((
                    LogMomentTables::compute(Trig::Sin, self.n_max, self.cfg.bessel_k, &self.cfg)?,
                    LogMomentTables::compute(Trig::Cos, self.n_max, self.cfg.bessel_k, &self.cfg)?,
                ));
                self.tables = Some(t.clone());
                t
            }
        };
        let b = Arc::new(SingularBlocks::with_tables(c, self.n_max, &self.cfg, &tables.0, &tables.1));
        self.blocks.insert(key, b.clone());
        Ok(b)
    }

    /// Cached blocks for `c`, if populated.
    pub fn blocks(&self, c: KernelScale) -> Option<&SingularBlocks> {
        self.blocks.get(&scale_key(c.value())).map(|b| b.as_ref())
    }

    /// Cached entry; `None` when the scale was never populated or the mode
    /// exceeds the cache range.
    pub fn get(&self, kind: Trig, m: usize, n: usize, c: KernelScale) -> Option<ComplexValue> {
        if m > self.n_max || n > self.n_max {
            return None;
        }
        self.blocks(c).map(|b| b.get(kind, m, n))
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}
