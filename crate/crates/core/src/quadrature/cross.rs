//! Smooth aperture-to-aperture blocks between two disjoint cavities.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{gauss_rule, rule_on_edges, Trig};
use crate::error::{Error, Result};
use crate::model::{Cavity, QuadratureConfig};
use crate::special::{hankel1_0, ComplexValue};

/// Local nodes and weights on `[0, w]` of `cavity`'s aperture for
/// interaction with `other`. When the gap is smaller than one panel, the
/// panel facing `other` is split geometrically (ratio 1/2) until its
/// smallest piece is no longer than the gap.
pub fn aperture_nodes(cavity: &Cavity, other: &Cavity, cfg: &QuadratureConfig) -> (Vec<f64>, Vec<f64>) {
    let w = cavity.width();
    let h = w / cfg.panels as f64;
    let gap = if other.a >= cavity.b { other.a - cavity.b } else { cavity.a - other.b };
    let faces_right = other.a >= cavity.b;
    // distances from the facing end: panel edges, with the facing panel
    // split at h/2, h/4, ... down to the first piece not longer than the gap
    let mut dist: Vec<f64> = (0..=cfg.panels).map(|i| i as f64 * h).collect();
    if gap < h {
        let mut len = 0.5 * h;
        loop {
            dist.push(len);
            if len <= gap {
                break;
            }
            len *= 0.5;
        }
    }
    let mut edges: Vec<f64> = dist
        .into_iter()
        .map(|d| if faces_right { (w - d).max(0.0) } else { d.min(w) })
        .collect();
    edges.sort_by(|a, b| a.total_cmp(b));
    edges.dedup();
    rule_on_edges(&edges, &gauss_rule(cfg.points_per_panel))
}

fn mode_weights(x: &[f64], w: &[f64], width: f64, n_max: usize, kind: Trig) -> Vec<Vec<f64>> {
    (0..=n_max)
        .map(|m| x.iter().zip(w).map(|(&xi, &wi)| wi * kind.eval(m as f64 * PI * xi / width)).collect())
        .collect()
}

/// All blocks `[m * (n_max + 1) + n]` of
/// `int_0^{w_k} int_0^{w_j} trig(n pi y / w_j) H0(kappa0 |x + a_k - y - a_j|) trig(m pi x / w_k) dy dx`
/// for each requested kind.
pub fn cross_blocks(
    ck: &Cavity,
    cj: &Cavity,
    kappa0: f64,
    kinds: &[Trig],
    n_max: usize,
    cfg: &QuadratureConfig,
) -> Result<Vec<Vec<ComplexValue>>> {
    if !(ck.b < cj.a || cj.b < ck.a) {
        return Err(Error::Domain("cross block needs disjoint cavities".into()));
    }
    let (xk, wk) = aperture_nodes(ck, cj, cfg);
    let (xj, wj) = aperture_nodes(cj, ck, cfg);
    let kernel: Vec<Vec<Complex64>> = xk
        .par_iter()
        .map(|&x| xj.iter().map(|&y| hankel1_0(kappa0 * (x + ck.a - y - cj.a).abs())).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let d = n_max + 1;
    let mut out = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let vk = mode_weights(&xk, &wk, ck.width(), n_max, kind);
        let vj = mode_weights(&xj, &wj, cj.width(), n_max, kind);
        // y[i][n] = sum_l H(i, l) vj[n][l]
        let y: Vec<Vec<Complex64>> = kernel
            .par_iter()
            .map(|row| (0..d).map(|n| row.iter().zip(&vj[n]).map(|(h, &v)| h * v).sum()).collect())
            .collect();
        let mut block = vec![Complex64::new(0.0, 0.0); d * d];
        for m in 0..d {
            for n in 0..d {
                block[m * d + n] = vk[m].iter().zip(&y).map(|(&v, yi)| yi[n] * v).sum();
            }
        }
        out.push(block);
    }
    Ok(out)
}

/// Single entry of [`cross_blocks`].
pub fn cross_block(
    m: usize,
    n: usize,
    ck: &Cavity,
    cj: &Cavity,
    kappa0: f64,
    kind: Trig,
    cfg: &QuadratureConfig,
) -> Result<ComplexValue> {
    if !(ck.b < cj.a || cj.b < ck.a) {
        return Err(Error::Domain("cross block needs disjoint cavities".into()));
    }
    let (xk, wk) = aperture_nodes(ck, cj, cfg);
    let (xj, wj) = aperture_nodes(cj, ck, cfg);
    let mut total = Complex64::new(0.0, 0.0);
    for (&x, &wx) in xk.iter().zip(&wk) {
        let fx = wx * kind.eval(m as f64 * PI * x / ck.width());
        let mut row = Complex64::new(0.0, 0.0);
        for (&y, &wy) in xj.iter().zip(&wj) {
            row += hankel1_0(kappa0 * (x + ck.a - y - cj.a).abs())? * (wy * kind.eval(n as f64 * PI * y / cj.width()));
        }
        total += row * fx;
    }
    Ok(total)
}
