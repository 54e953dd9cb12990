//! Polynomial–trigonometric moments on `[0, 2 pi]` and the logarithmic
//! moments that carry the singular part of the aperture integrals:
//!
//! * `W_k(n) = int s^{k+1} ln s sin(ns/2) ds`, `X_k(n) = int s^k ln s cos(ns/2) ds`
//! * `S_k(n,m) = int int (t-s)^{k-1} ln|t-s| sin(mt/2) sin(ns/2) ds dt`,
//!   `P_k(n,m)` the same with cosines.
//!
//! `S_k` and `P_k` can be obtained two ways. The recursion seeds the top
//! order by tensor Gauss and steps down with closed-form `T`/`U` moments and
//! `W`/`X`. The reduction writes the double integral as a single integral
//! over `u = |t - s|`,
//! `S_k = int_0^{2 pi} u^{k-1} ln u Q(u) du`, with `Q` the closed-form
//! overlap of the two trigonometric factors, and integrates it on a graded
//! mesh. The recursion subtracts terms of size `(2 pi)^k` to produce `O(1)`
//! results and loses roughly `k log10(2 pi) - 1` digits once the mode index
//! exceeds a few units; the reduction has no cancellation and is the
//! default.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{composite_rule, gauss_rule, log_endpoint_rule, Trig, TWO_PI};
use crate::error::{Error, Result};
use crate::model::{LiftMethod, QuadratureConfig};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `E_p = int_0^1 x^p e^{i theta x} dx` for `p = 0..=pmax`.
///
/// Upward recurrence `E_p = (e^{i theta} - p E_{p-1}) / (i theta)` when
/// `theta >= pmax`, otherwise downward `E_{p-1} = (e^{i theta} - i theta E_p) / p`
/// from well above `pmax`, where the recurrence contracts.
fn unit_moments(pmax: usize, n: usize) -> Vec<Complex64> {
    let theta = PI * n as f64;
    if n == 0 {
        return (0..=pmax).map(|p| Complex64::new(1.0 / (p as f64 + 1.0), 0.0)).collect();
    }
    let eit = Complex64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    let mut e = vec![Complex64::new(0.0, 0.0); pmax + 1];
    if theta >= pmax as f64 {
        e[0] = (eit - 1.0) / (I * theta);
        for p in 1..=pmax {
            e[p] = (eit - p as f64 * e[p - 1]) / (I * theta);
        }
    } else {
        let top = pmax + 40 + theta as usize;
        let mut cur = eit / Complex64::new(top as f64 + 1.0, -theta);
        for p in (1..=top).rev() {
            let prev = (eit - I * theta * cur) / p as f64;
            if p - 1 <= pmax {
                e[p - 1] = prev;
            }
            cur = prev;
        }
    }
    e
}

/// `(C_p, S_p)` with `C_p = int_0^{2 pi} s^p cos(ns/2) ds` and `S_p` the sine
/// counterpart, for `p = 0..=pmax`.
pub fn poly_trig_table(pmax: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let e = unit_moments(pmax, n);
    let mut scale = TWO_PI;
    let mut c = Vec::with_capacity(pmax + 1);
    let mut s = Vec::with_capacity(pmax + 1);
    for ep in e {
        c.push(scale * ep.re);
        s.push(scale * ep.im);
        scale *= TWO_PI;
    }
    (c, s)
}

/// `int_0^{2 pi} s^p trig(ns/2) ds`.
pub fn poly_trig_integral(p: usize, n: usize, kind: Trig) -> f64 {
    let (c, s) = poly_trig_table(p, n);
    match kind {
        Trig::Cos => c[p],
        Trig::Sin => s[p],
    }
}

fn binomial(k: usize, j: usize) -> f64 {
    let j = j.min(k - j);
    let mut b = 1.0;
    for i in 0..j {
        b = b * (k - i) as f64 / (i + 1) as f64;
    }
    b.round()
}

fn double_from_tables(k: usize, mt: &[f64], ns: &[f64]) -> f64 {
    (0..=k)
        .map(|j| {
            let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(k, j) * mt[j] * ns[k - j]
        })
        .sum()
}

/// `int int (t-s)^k trig_n(ns/2) trig_m(mt/2) ds dt` over `[0, 2 pi]^2`, by
/// binomial expansion into single moments.
pub fn double_poly_trig(k: usize, m: usize, n: usize, kind_m: Trig, kind_n: Trig) -> Result<f64> {
    if k > 40 {
        return Err(Error::OrderTooHigh(k));
    }
    let (cm, sm) = poly_trig_table(k, m);
    let (cn, sn) = poly_trig_table(k, n);
    let mt = if kind_m == Trig::Sin { &sm } else { &cm };
    let ns = if kind_n == Trig::Sin { &sn } else { &cn };
    Ok(double_from_tables(k, mt, ns))
}

/// `W_k(n)` (sine) or `X_k(n)` (cosine) by direct quadrature on a mesh
/// graded toward the logarithmic endpoint.
pub fn log_power_moment_direct(k: usize, n: usize, kind: Trig) -> f64 {
    let (x, w) = log_endpoint_rule(0.5 * n as f64);
    let p = match kind {
        Trig::Sin => k as i32 + 1,
        Trig::Cos => k as i32,
    };
    x.iter()
        .zip(&w)
        .map(|(&s, &ws)| ws * s.powi(p) * s.ln() * kind.eval(0.5 * n as f64 * s))
        .sum()
}

/// One downward step `W_k` from `W_{k+2}` (sine) or `X_k` from `X_{k+2}`
/// (cosine); `cs` holds `(C_p, S_p)` up to at least `k + 2`.
fn power_moment_step(k: usize, n: usize, kind: Trig, upper: f64, cs: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (kf, half) = (k as f64, 0.5 * n as f64);
    let sign_n = if n % 2 == 0 { 1.0 } else { -1.0 };
    let ln2pi = TWO_PI.ln();
    match kind {
        Trig::Sin => {
            let a = half / (kf + 2.0) * (1.0 / (kf + 2.0) + 1.0 / (kf + 3.0)) * cs.0[k + 2]
                - sign_n * n as f64 / (2.0 * (kf + 2.0) * (kf + 3.0)) * TWO_PI.powi(k as i32 + 3) * ln2pi;
            a - half * half / ((kf + 2.0) * (kf + 3.0)) * upper
        }
        Trig::Cos => {
            let y = -half / (kf + 1.0) * (1.0 / (kf + 1.0) + 1.0 / (kf + 2.0)) * cs.1[k + 1]
                + sign_n * TWO_PI.powi(k as i32 + 1) / ((kf + 1.0) * (kf + 1.0)) * ((kf + 1.0) * ln2pi - 1.0);
            y - half * half / ((kf + 1.0) * (kf + 2.0)) * upper
        }
    }
}

/// `W_k(n)` / `X_k(n)`: direct for `k >= lift_threshold`, otherwise the
/// downward recurrences from the first order of the same parity at or above
/// the threshold.
pub fn log_power_moment(k: usize, n: usize, kind: Trig, lift_threshold: usize) -> f64 {
    if k >= lift_threshold {
        return log_power_moment_direct(k, n, kind);
    }
    let top = k + 2 * (lift_threshold - k).div_ceil(2);
    let cs = poly_trig_table(top + 3, n);
    let mut v = log_power_moment_direct(top, n, kind);
    let mut j = top;
    while j > k {
        j -= 2;
        v = power_moment_step(j, n, kind, v, &cs);
    }
    v
}

/// `S_k` (sine) or `P_k` (cosine) by tensor Gauss on the composite grid of
/// `panels` panels with `q` points each. Nodes on the diagonal contribute
/// the integrand's limit (zero for `k > 1`).
pub fn log_double_moment_direct(k: usize, m: usize, n: usize, kind: Trig, panels: usize, q: usize) -> f64 {
    let (x, w) = composite_rule(0.0, TWO_PI, panels, &gauss_rule(q));
    let mut total = 0.0;
    for (&s, &ws) in x.iter().zip(&w) {
        let fs = ws * kind.eval(0.5 * n as f64 * s);
        let mut row = 0.0;
        for (&t, &wt) in x.iter().zip(&w) {
            let d = t - s;
            if d != 0.0 {
                row += wt * d.powi(k as i32 - 1) * d.abs().ln() * kind.eval(0.5 * m as f64 * t);
            }
        }
        total += fs * row;
    }
    total
}

/// One downward step of the `S`/`P` recursion: the order-`k` value from the
/// order-`k+2` value `upper` and `W_k(n)` / `X_k(n)` in `wx`.
pub fn recursion_step(k: usize, m: usize, n: usize, kind: Trig, upper: f64, wx: f64) -> Result<f64> {
    if k + 1 > 40 {
        return Err(Error::OrderTooHigh(k + 1));
    }
    let (cm, sm) = poly_trig_table(k + 1, m);
    let (cn, sn) = poly_trig_table(k + 1, n);
    Ok(step_from_tables(k, m, n, kind, upper, wx, (&cm, &sm), (&cn, &sn)))
}

#[allow(clippy::too_many_arguments)]
fn step_from_tables(
    k: usize,
    m: usize,
    n: usize,
    kind: Trig,
    upper: f64,
    wx: f64,
    tm: (&[f64], &[f64]),
    tn: (&[f64], &[f64]),
) -> f64 {
    let (kf, mf) = (k as f64, m as f64);
    let hm2 = 0.25 * mf * mf;
    let sigma = (if (m + n) % 2 == 0 { 1.0 } else { -1.0 }) - (if k % 2 == 0 { 1.0 } else { -1.0 });
    match kind {
        Trig::Sin => {
            let t1 = double_from_tables(k + 1, tm.1, tn.1);
            let t2 = double_from_tables(k, tm.0, tn.1);
            let t3 = tn.1[k + 1];
            -hm2 / (kf * (kf + 1.0)) * upper + hm2 / (kf * (kf + 1.0) * (kf + 1.0)) * t1 + mf / (2.0 * kf * kf) * t2
                - mf / (2.0 * kf * (kf + 1.0) * (kf + 1.0)) * sigma * t3
                + mf / (2.0 * kf * (kf + 1.0)) * sigma * wx
        }
        Trig::Cos => {
            let u1 = double_from_tables(k + 1, tm.0, tn.0);
            let u2 = double_from_tables(k, tm.1, tn.0);
            let u3 = tn.0[k];
            -hm2 / (kf * (kf + 1.0)) * upper + hm2 / (kf * (kf + 1.0) * (kf + 1.0)) * u1 - mf / (2.0 * kf * kf) * u2
                - sigma / (kf * kf) * u3
                + sigma / kf * wx
        }
    }
}

/// `Q(u)` such that the double integral of `f(t - s) trig(mt/2) trig(ns/2)`
/// equals `int_0^{2 pi} f(u) Q(u) du` for even `f`. `sa`, `sb`, `cb` are
/// `sin(a u/2)`, `sin(b u/2)`, `cos(b u/2)`; only even `a + b` is supported.
#[inline]
fn overlap(kind: Trig, a: usize, b: usize, u: f64, sa: f64, sb: f64, cb: f64) -> f64 {
    let (minus, plus) = if a == b {
        if a == 0 {
            (2.0 * (TWO_PI - u), 2.0 * (TWO_PI - u))
        } else {
            (2.0 * (TWO_PI - u) * cb, -4.0 * sa / a as f64)
        }
    } else {
        (
            4.0 * (sb - sa) / (a as f64 - b as f64),
            -4.0 * (sa + sb) / (a + b) as f64,
        )
    };
    match kind {
        Trig::Sin => 0.5 * (minus - plus),
        Trig::Cos => 0.5 * (minus + plus),
    }
}

fn overlap_direct(kind: Trig, m: usize, n: usize, u: f64) -> f64 {
    let (sa, sb, cb) = ((0.5 * n as f64 * u).sin(), (0.5 * m as f64 * u).sin(), (0.5 * m as f64 * u).cos());
    overlap(kind, n, m, u, sa, sb, cb)
}

/// `sum_i g_i Q_{mn}(x_i)` for a single pair.
pub(super) fn reduced_pair(kind: Trig, m: usize, n: usize, x: &[f64], g: &[f64]) -> f64 {
    x.iter().zip(g).map(|(&u, &gi)| gi * overlap_direct(kind, m, n, u)).sum()
}

/// `S_k` / `P_k` by the one-dimensional reduction.
fn log_double_moment_reduced(k: usize, m: usize, n: usize, kind: Trig) -> f64 {
    let (x, w) = log_endpoint_rule(0.5 * m.max(n) as f64);
    x.iter()
        .zip(&w)
        .map(|(&u, &wu)| wu * u.powi(k as i32 - 1) * u.ln() * overlap_direct(kind, m, n, u))
        .sum()
}

/// `S_k` / `P_k` for odd `k`; zero when `m + n` is odd.
pub fn log_double_moment(kind: Trig, k: usize, m: usize, n: usize, cfg: &QuadratureConfig) -> Result<f64> {
    if k % 2 == 0 {
        return Err(Error::Domain(format!("log double moment needs odd k, got {k}")));
    }
    if (m + n) % 2 == 1 {
        return Ok(0.0);
    }
    match cfg.lift_method {
        LiftMethod::Reduction => Ok(log_double_moment_reduced(k, m, n, kind)),
        LiftMethod::Recursion => {
            let tables = LogMomentTables::compute(kind, m.max(n), k.div_ceil(2) - 1, cfg)?;
            Ok(tables.get(k, m, n))
        }
    }
}

pub fn log_double_moment_sin(k: usize, m: usize, n: usize, cfg: &QuadratureConfig) -> Result<f64> {
    log_double_moment(Trig::Sin, k, m, n, cfg)
}

pub fn log_double_moment_cos(k: usize, m: usize, n: usize, cfg: &QuadratureConfig) -> Result<f64> {
    log_double_moment(Trig::Cos, k, m, n, cfg)
}

/// `S_{2j+1}(n, m)` or `P_{2j+1}(n, m)` for `j = 0..=jmax` and all
/// `0 <= m, n <= n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogMomentTables {
    pub kind: Trig,
    pub n_max: usize,
    pub jmax: usize,
    values: Vec<f64>,
}

impl LogMomentTables {
    fn index(&self, j: usize, m: usize, n: usize) -> usize {
        let d = self.n_max + 1;
        (j * d + n) * d + m
    }

    /// Order-`k` value (odd `k <= 2 jmax + 1`).
    pub fn get(&self, k: usize, m: usize, n: usize) -> f64 {
        self.values[self.index((k - 1) / 2, m, n)]
    }

    pub fn compute(kind: Trig, n_max: usize, jmax: usize, cfg: &QuadratureConfig) -> Result<Self> {
        let mut t = LogMomentTables { kind, n_max, jmax, values: vec![0.0; (jmax + 1) * (n_max + 1) * (n_max + 1)] };
        match cfg.lift_method {
            LiftMethod::Reduction => t.fill_reduced(),
            LiftMethod::Recursion => t.fill_recursive(cfg)?,
        }
        Ok(t)
    }

    fn fill_reduced(&mut self) {
        let (x, w) = log_endpoint_rule(0.5 * self.n_max as f64);
        // weights u^{2j} ln u per order
        let lw: Vec<Vec<f64>> = (0..=self.jmax)
            .map(|j| x.iter().zip(&w).map(|(&u, &wu)| wu * u.powi(2 * j as i32) * u.ln()).collect())
            .collect();
        let sums = reduced_pair_sums(self.kind, self.n_max, &x, &lw);
        let d = self.n_max + 1;
        for (j, table) in sums.into_iter().enumerate() {
            self.values[j * d * d..(j + 1) * d * d].copy_from_slice(&table);
        }
    }

    fn fill_recursive(&mut self, cfg: &QuadratureConfig) -> Result<()> {
        let kind = self.kind;
        let kmax = 2 * self.jmax + 1;
        let lift = cfg.lift_threshold + 1 - cfg.lift_threshold % 2;
        let top = lift.max(kmax);
        if top + 1 > 40 {
            return Err(Error::OrderTooHigh(top + 1));
        }
        let d = self.n_max + 1;
        let (x, w) = composite_rule(0.0, TWO_PI, cfg.panels, &gauss_rule(cfg.points_per_panel));
        let tables: Vec<(Vec<f64>, Vec<f64>)> = (0..d).map(|n| poly_trig_table(top + 3, n)).collect();
        // W_k(n) / X_k(n) for odd k below the seed, by the downward recurrences
        let wx: Vec<Vec<f64>> = (0..d)
            .map(|n| {
                let mut v = vec![0.0; top + 1];
                let mut cur = log_power_moment_direct(lift, n, kind);
                v[lift] = cur;
                let mut j = lift;
                while j >= 3 {
                    j -= 2;
                    cur = power_moment_step(j, n, kind, cur, &tables[n]);
                    v[j] = cur;
                }
                v
            })
            .collect();
        // seeds: every odd order from the threshold up to `top` by tensor Gauss
        let mut direct = std::collections::BTreeMap::new();
        let mut k = lift;
        while k <= top {
            direct.insert(k, tensor_log_moments(kind, k, self.n_max, &x, &w));
            k += 2;
        }
        for n in 0..d {
            for m in (0..d).filter(|m| (m + n) % 2 == 0) {
                let mut vals = vec![0.0; top + 1];
                for (&k, mat) in &direct {
                    vals[k] = mat[n * d + m];
                }
                let mut k = lift;
                while k >= 3 {
                    k -= 2;
                    let tm = (&tables[m].0[..], &tables[m].1[..]);
                    let tn = (&tables[n].0[..], &tables[n].1[..]);
                    vals[k] = step_from_tables(k, m, n, kind, vals[k + 2], wx[n][k], tm, tn);
                }
                for j in 0..=self.jmax {
                    let i = self.index(j, m, n);
                    self.values[i] = vals[2 * j + 1];
                }
            }
        }
        Ok(())
    }
}

/// For each weight vector `g` on the nodes `x`, the table `[n * d + m]` of
/// `sum_i g_i Q_{nm}(x_i)`, i.e. the double integral of `f(t - s)`
/// against `trig(mt/2) trig(ns/2)` when `g_i = w_i f(x_i)`. Odd `m + n`
/// entries are left at zero.
pub(super) fn reduced_pair_sums(kind: Trig, n_max: usize, x: &[f64], weights: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = n_max + 1;
    let sines: Vec<Vec<f64>> = (0..d).map(|a| x.iter().map(|&u| (0.5 * a as f64 * u).sin()).collect()).collect();
    let cosines: Vec<Vec<f64>> = (0..d).map(|a| x.iter().map(|&u| (0.5 * a as f64 * u).cos()).collect()).collect();
    let rows: Vec<Vec<(usize, usize, Vec<f64>)>> = (0..d)
        .into_par_iter()
        .map(|n| {
            let mut out = Vec::new();
            let mut q = vec![0.0; x.len()];
            for m in (n..d).step_by(2) {
                for (i, &u) in x.iter().enumerate() {
                    q[i] = overlap(kind, n, m, u, sines[n][i], sines[m][i], cosines[m][i]);
                }
                let vals = weights.iter().map(|g| g.iter().zip(&q).map(|(a, b)| a * b).sum()).collect();
                out.push((n, m, vals));
            }
            out
        })
        .collect();
    let mut tables = vec![vec![0.0; d * d]; weights.len()];
    for (n, m, vals) in rows.into_iter().flatten() {
        for (t, v) in tables.iter_mut().zip(vals) {
            t[n * d + m] = v;
            t[m * d + n] = v;
        }
    }
    tables
}

/// `[n * d + m]` table of `int int (t-s)^{k-1} ln|t-s| trig(mt/2) trig(ns/2)`
/// on the tensor grid `x`, `w`.
fn tensor_log_moments(kind: Trig, k: usize, n_max: usize, x: &[f64], w: &[f64]) -> Vec<f64> {
    let d = n_max + 1;
    let np = x.len();
    let v: Vec<f64> = (0..d)
        .flat_map(|m| x.iter().zip(w).map(move |(&s, &ws)| ws * kind.eval(0.5 * m as f64 * s)))
        .collect();
    // y[m][i] = sum_j F(i, j) v[m][j]
    let y: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|m| {
            (0..np)
                .map(|i| {
                    let mut acc = 0.0;
                    for j in 0..np {
                        let dlt = x[j] - x[i];
                        if dlt != 0.0 {
                            acc += dlt.powi(k as i32 - 1) * dlt.abs().ln() * v[m * np + j];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let mut out = vec![0.0; d * d];
    for n in 0..d {
        for m in 0..d {
            out[n * d + m] = (0..np).map(|i| v[n * np + i] * y[m][i]).sum();
        }
    }
    out
}
