//! Slow reference evaluators used to cross-check the production engine.
//!
//! Nothing here goes through the production quadrature: the Gauss rule comes
//! from the Golub–Welsch eigenvalue problem, the graded mesh is built locally
//! and the singular integrals are integrated in the difference variable
//! without any moment tables.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::Solved;
use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::modal::{connection_matrix_te, connection_matrix_tm, mode_coefficients, solve_tridiagonal_unit};
use crate::model::{Cavity, Polarization, QuadratureConfig};
pub use crate::postprocess::least_squares_slope;
use crate::postprocess::FieldEvaluator;
use crate::quadrature::{singular_block, Trig};
use crate::special::{hankel1_0, ComplexValue, KernelScale};

const TWO_PI: f64 = 2.0 * PI;

/// Default grading ratio of the panels next to the singular set.
pub const GRADING_RATIO: f64 = 0.15;
/// Default number of graded panels.
pub const GRADING_LEVELS: usize = 12;
/// Default convergence tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
const GAUSS_POINTS: usize = 16;
const MAX_REFINEMENTS: usize = 6;

/// One oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub case: String,
    pub oracle: ComplexValue,
    pub production: ComplexValue,
    pub abs_err: f64,
    pub rel_err: f64,
    /// Grid or ladder description at convergence.
    pub grid: String,
    /// Observed convergence order, for checks that measure one.
    pub order: Option<f64>,
}

impl OracleReport {
    fn compare(case: String, oracle: ComplexValue, production: ComplexValue, grid: String) -> Self {
        let abs_err = (oracle - production).norm();
        let rel_err = if oracle.norm() > 0.0 { abs_err / oracle.norm() } else { abs_err };
        OracleReport { case, oracle, production, abs_err, rel_err, grid, order: None }
    }
}

/// CSV with one row per report.
pub fn reports_csv(reports: &[OracleReport]) -> String {
    let mut s = String::from("case,re_oracle,im_oracle,re_production,im_production,abs_err,rel_err,order,grid\n");
    for r in reports {
        let order = r.order.map(|p| format!("{p:.16e}")).unwrap_or_default();
        s.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}\n",
            r.case, r.oracle.re, r.oracle.im, r.production.re, r.production.im, r.abs_err, r.rel_err, order, r.grid
        ));
    }
    s
}

/// Gauss–Legendre rule on `[-1, 1]` from the eigen-decomposition of the
/// Jacobi matrix (implicit QL, tracking first eigenvector components only).
fn golub_welsch(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0_f64; q];
    let mut e: Vec<f64> =
        (1..q).map(|k| k as f64 / ((4 * k * k - 1) as f64).sqrt()).chain(std::iter::once(0.0)).collect();
    let mut z = vec![0.0; q];
    z[0] = 1.0;
    for l in 0..q {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < q {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 60, "Jacobi eigenvalue iteration stalled");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z).map(|(x, v)| (x, 2.0 * v * v)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Panel breakpoints on `[0, len]` graded toward 0: `levels` panels shrinking
/// by `ratio`, then `uniform` equal panels.
fn graded_breaks(len: f64, ratio: f64, levels: usize, uniform: usize) -> Vec<f64> {
    let h = len / uniform as f64;
    let mut b = vec![0.0];
    b.extend((0..levels).rev().map(|j| h * ratio.powi(j as i32 + 1)));
    b.extend((1..=uniform).map(|j| if j == uniform { len } else { h * j as f64 }));
    b
}

struct PanelRule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl PanelRule {
    fn on(breaks: &[f64], nodes: &[f64], weights: &[f64]) -> Self {
        let mut x = Vec::with_capacity((breaks.len() - 1) * nodes.len());
        let mut w = Vec::with_capacity(x.capacity());
        for p in breaks.windows(2) {
            let (mid, half) = (0.5 * (p[0] + p[1]), 0.5 * (p[1] - p[0]));
            for (t, wt) in nodes.iter().zip(weights) {
                x.push(mid + half * t);
                w.push(half * wt);
            }
        }
        PanelRule { x, w }
    }
}

/// Mesh parameters of one oracle pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleGrid {
    pub ratio: f64,
    pub levels: usize,
    pub outer_panels: usize,
    pub inner_panels: usize,
    pub points: usize,
}

impl OracleGrid {
    fn refined(self) -> Self {
        OracleGrid {
            levels: self.levels + 4,
            outer_panels: 2 * self.outer_panels,
            inner_panels: 2 * self.inner_panels,
            ..self
        }
    }

    fn describe(&self) -> String {
        format!(
            "ratio={} levels={} outer={} inner={} q={}",
            self.ratio, self.levels, self.outer_panels, self.inner_panels, self.points
        )
    }
}

impl Default for OracleGrid {
    fn default() -> Self {
        OracleGrid { ratio: GRADING_RATIO, levels: GRADING_LEVELS, outer_panels: 8, inner_panels: 8, points: GAUSS_POINTS }
    }
}

/// One pass over `[0, 2 pi]^2` split along the diagonal. With `u = |s - t|`
/// each triangle becomes `int_0^{2pi} du int f(s, s -+ u) ds`; the inner
/// integrals are smooth and the outer one carries the singularity at `u = 0`.
fn singular_pass<F>(f: &F, g: OracleGrid) -> ComplexValue
where
    F: Fn(f64, f64) -> ComplexValue + Sync,
{
    let (nodes, weights) = golub_welsch(g.points);
    let outer = PanelRule::on(&graded_breaks(TWO_PI, g.ratio, g.levels, g.outer_panels), &nodes, &weights);
    let inner = |u: f64| {
        let len = TWO_PI - u;
        let breaks: Vec<f64> = (0..=g.inner_panels).map(|j| len * j as f64 / g.inner_panels as f64).collect();
        let r = PanelRule::on(&breaks, &nodes, &weights);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in r.x.iter().zip(&r.w) {
            // lower triangle t = s - u with s in [u, 2pi]; upper t = s + u.
            // Nodes whose offset is lost to rounding carry negligible weight.
            let s = x + u;
            if s != *x {
                acc += *w * (f(s, *x) + f(*x, s));
            }
        }
        acc
    };
    let terms: Vec<ComplexValue> = outer.x.par_iter().zip(outer.w.par_iter()).map(|(&u, &w)| w * inner(u)).collect();
    terms.into_iter().sum()
}

/// Converged value and the grid it converged on.
pub fn graded_singular_integral_with<F>(f: &F, tol: f64, abs_floor: f64, start: OracleGrid) -> Result<(ComplexValue, OracleGrid)>
where
    F: Fn(f64, f64) -> ComplexValue + Sync,
{
    let mut grid = start;
    let mut prev = singular_pass(f, grid);
    let mut history = vec![prev];
    for _ in 0..MAX_REFINEMENTS {
        grid = grid.refined();
        let cur = singular_pass(f, grid);
        history.push(cur);
        if !(cur.re.is_finite() && cur.im.is_finite()) {
            return Err(Error::NoConvergence(format!("non-finite value on grid {}", grid.describe())));
        }
        if (cur - prev).norm() <= tol * cur.norm() + abs_floor {
            return Ok((cur, grid));
        }
        prev = cur;
    }
    let diffs: Vec<String> = history.windows(2).map(|p| format!("{:.3e}", (p[1] - p[0]).norm())).collect();
    Err(Error::NoConvergence(format!(
        "last grid {}, successive differences [{}]",
        grid.describe(),
        diffs.join(", ")
    )))
}

/// `int_0^{2pi} int_0^{2pi} f(s, t) ds dt` for `f` smooth except for a
/// log-type singularity on `s = t`, refined until two successive passes
/// agree to `tol` (relative).
pub fn graded_singular_integral<F>(f: &F, tol: f64) -> Result<ComplexValue>
where
    F: Fn(f64, f64) -> ComplexValue + Sync,
{
    graded_singular_integral_with(f, tol, 0.0, OracleGrid::default()).map(|r| r.0)
}

/// Reference value of the aperture block
/// `int int trig(ns/2) H0(c|s-t|) trig(mt/2) ds dt`.
pub fn singular_block_oracle(m: usize, n: usize, c: f64, kind: Trig, tol: f64, abs_floor: f64) -> Result<(ComplexValue, OracleGrid)> {
    let (hm, hn) = (0.5 * m as f64, 0.5 * n as f64);
    let f = |s: f64, t: f64| {
        let u = (s - t).abs();
        let h = if u > 0.0 { hankel1_0(c * u).unwrap_or_default() } else { Complex64::new(0.0, 0.0) };
        h * (kind.eval(hn * s) * kind.eval(hm * t))
    };
    graded_singular_integral_with(&f, tol, abs_floor, OracleGrid::default())
}

/// One block case for the equivalence suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCase {
    pub m: usize,
    pub n: usize,
    pub c: f64,
    pub kind: Trig,
}

impl BlockCase {
    pub fn id(&self) -> String {
        format!("block_{:?}_m{}_n{}_c{}", self.kind, self.m, self.n, self.c).to_lowercase()
    }
}

/// Even-sum cases with `m, n` in `modes` for each scale and both kinds
/// (sine cases with a zero index vanish identically and are left out).
pub fn block_grid(modes: std::ops::RangeInclusive<usize>, scales: &[f64]) -> Vec<BlockCase> {
    let mut v = Vec::new();
    for &c in scales {
        for kind in [Trig::Sin, Trig::Cos] {
            for m in modes.clone() {
                for n in modes.clone() {
                    if (m + n) % 2 == 0 && !(kind == Trig::Sin && (m == 0 || n == 0)) {
                        v.push(BlockCase { m, n, c, kind });
                    }
                }
            }
        }
    }
    v
}

/// Compares [`singular_block`] against the oracle. The oracle is converged
/// to a tenth of `tol`.
pub fn block_check(case: BlockCase, tol: f64, cfg: &QuadratureConfig) -> Result<OracleReport> {
    let (oracle, grid) = singular_block_oracle(case.m, case.n, case.c, case.kind, 0.1 * tol, 0.0)?;
    let production = singular_block(case.m, case.n, KernelScale::new(case.c)?, case.kind, cfg)?;
    Ok(OracleReport::compare(case.id(), oracle, production, grid.describe()))
}

/// Odd-sum case: the oracle value (converged to an absolute floor `floor`)
/// against the exact zero returned by production.
pub fn parity_check(case: BlockCase, floor: f64, cfg: &QuadratureConfig) -> Result<OracleReport> {
    let (oracle, grid) = singular_block_oracle(case.m, case.n, case.c, case.kind, 0.0, floor)?;
    let production = singular_block(case.m, case.n, KernelScale::new(case.c)?, case.kind, cfg)?;
    let abs_err = (oracle - production).norm();
    Ok(OracleReport {
        case: case.id(),
        oracle,
        production,
        abs_err,
        rel_err: abs_err,
        grid: grid.describe(),
        order: None,
    })
}

/// Thirty odd-sum cases spread over `1 <= m, n <= 12`, ten per scale
/// `0.3, 1, 5`, alternating kinds.
pub fn parity_cases() -> Vec<BlockCase> {
    let pairs: Vec<(usize, usize)> =
        (1..=12).flat_map(|m| (1..=12).map(move |n| (m, n))).filter(|(m, n)| (m + n) % 2 == 1).collect();
    let mut v = Vec::with_capacity(30);
    for (s, &c) in [0.3, 1.0, 5.0].iter().enumerate() {
        for i in 0..10 {
            let (m, n) = pairs[(7 * i + 23 * s) % pairs.len()];
            let kind = if (i + s) % 2 == 0 { Trig::Sin } else { Trig::Cos };
            v.push(BlockCase { m, n, c, kind });
        }
    }
    v
}

/// Largest production block magnitude over even-sum `m, n <= n_max`, both
/// kinds, at scale `c`.
pub fn even_block_scale(c: f64, n_max: usize, cfg: &QuadratureConfig) -> Result<f64> {
    let sc = KernelScale::new(c)?;
    let mut best: f64 = 0.0;
    for kind in [Trig::Sin, Trig::Cos] {
        for m in 0..=n_max {
            for n in (0..=n_max).filter(|n| (m + n) % 2 == 0) {
                best = best.max(singular_block(m, n, sc, kind, cfg)?.norm());
            }
        }
    }
    Ok(best)
}

/// Random stack of 1 to `max_layers` layers with a mix of real and lossy
/// wavenumbers.
pub fn random_cavity(rng: &mut StdRng, max_layers: usize) -> Cavity {
    let layers = rng.gen_range(1..=max_layers);
    let mut y = 0.0;
    let stack: Vec<(f64, Complex64)> = (0..layers)
        .map(|_| {
            y -= rng.gen_range(0.05..0.4);
            let im = if rng.gen_bool(0.5) { rng.gen_range(0.0..3.0) } else { 0.0 };
            (y, Complex64::new(rng.gen_range(0.5..30.0), im))
        })
        .collect();
    Cavity::new(0.0, rng.gen_range(0.1..1.0), &stack)
}

/// [`connection_check`] over `stacks` random cavities (up to 8 layers),
/// modes `1..=5`, both polarizations. Resonant systems are skipped.
pub fn connection_suite(stacks: usize, seed: u64) -> Vec<OracleReport> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::new();
    for s in 0..stacks {
        let cav = random_cavity(&mut rng, 8);
        for pol in [Polarization::TM, Polarization::TE] {
            for n in 1..=5 {
                if let Ok(mut r) = connection_check(&cav, n, pol) {
                    r.case = format!("stack{s}_{}", r.case);
                    out.push(r);
                }
            }
        }
    }
    out
}

/// Re-solves the symmetric tri-diagonal system `(diag, off) x = e_1` by
/// dense LU and reports the largest elementwise deviation from the Thomas
/// solve. When both paths fail the common error is returned; when only one
/// fails the report carries an infinite error.
pub fn dense_tridiag_check(case: &str, diag: &[Complex64], off: &[Complex64]) -> Result<OracleReport> {
    let m = diag.len();
    let a = Matrix::from_fn(m, m, |i, j| {
        if i == j {
            diag[i]
        } else if i + 1 == j {
            off[i]
        } else if j + 1 == i {
            off[j]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let mut rhs = vec![Complex64::new(0.0, 0.0); m];
    if m > 0 {
        rhs[0] = Complex64::new(1.0, 0.0);
    }
    let dense = Lu::factor(&a).ok().map(|lu| lu.solve(&rhs)).filter(|x| x.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    let thomas = solve_tridiagonal_unit(diag, off);
    match (dense, thomas) {
        (None, None) => Err(Error::ConnectionResonance { cavity: 0, n: 0 }),
        (Some(x), Some(y)) => {
            let (i, dev) = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b).norm())
                .enumerate()
                .fold((0, 0.0), |best, (i, d)| if d > best.1 { (i, d) } else { best });
            let scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let (o, p) = if m > 0 { (x[i], y[i]) } else { (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)) };
            Ok(OracleReport {
                case: case.to_string(),
                oracle: o,
                production: p,
                abs_err: dev,
                rel_err: if scale > 0.0 { dev / scale } else { dev },
                grid: format!("size={m}"),
                order: None,
            })
        }
        _ => Ok(OracleReport {
            case: case.to_string(),
            oracle: Complex64::new(f64::NAN, 0.0),
            production: Complex64::new(f64::NAN, 0.0),
            abs_err: f64::INFINITY,
            rel_err: f64::INFINITY,
            grid: format!("size={m} (one path failed)"),
            order: None,
        }),
    }
}

/// [`dense_tridiag_check`] on the connection system of `cavity`, mode `n`.
pub fn connection_check(cavity: &Cavity, n: usize, polarization: Polarization) -> Result<OracleReport> {
    let coeffs = mode_coefficients(cavity, n)?;
    let (d, e) = match polarization {
        Polarization::TM => connection_matrix_tm(&coeffs),
        Polarization::TE => connection_matrix_te(cavity, &coeffs),
    };
    dense_tridiag_check(&format!("connection_{polarization}_n{n}_L{}", cavity.layers.len()), &d, &e)
        .map_err(|_| Error::ConnectionResonance { cavity: 0, n })
}

/// Central-difference Helmholtz residual `Delta_h u + kappa_l^2 u` at random
/// interior points of every layer, for each step of `steps`. Each layer's
/// field is evaluated with its own modal profile, so stencils may reach past
/// the layer's interfaces. The report carries the relative residual at the
/// finest step and the least-squares order over the ladder.
pub fn fd_interior_check(solved: &Solved, steps: &[f64], points_per_layer: usize, seed: u64) -> Result<OracleReport> {
    if steps.len() < 2 {
        return Err(Error::Domain("fd_interior_check needs at least two steps".into()));
    }
    let spec = &solved.spec;
    let ev = FieldEvaluator::new(spec, &solved.tables, &solved.solution);
    let mut rng = StdRng::seed_from_u64(seed);
    let mut samples = Vec::new();
    for (k, cav) in spec.cavities.iter().enumerate() {
        for (l, lay) in cav.layers.iter().enumerate() {
            for _ in 0..points_per_layer {
                let x = cav.a + cav.width() * rng.gen_range(0.1..0.9);
                let y = lay.y_top + lay.h() * rng.gen_range(0.1..0.9);
                samples.push((k, l, x, y, lay.kappa * lay.kappa));
            }
        }
    }
    let mut residuals = Vec::with_capacity(steps.len());
    let mut scale = 0.0;
    for &h in steps {
        let mut res = 0.0;
        scale = 0.0;
        for &(k, l, x, y, k2) in &samples {
            let u = |dx: f64, dy: f64| ev.value_in_layer(k, l, x + dx, y + dy).map(|p| p.0);
            let c = u(0.0, 0.0)?;
            let lap = (u(h, 0.0)? + u(-h, 0.0)? + u(0.0, h)? + u(0.0, -h)? - 4.0 * c) / (h * h);
            res += (lap + k2 * c).norm();
            scale += (k2 * c).norm();
        }
        residuals.push(res);
    }
    let rel = |r: f64| if scale > 0.0 { r / scale } else { r };
    let order = if residuals.iter().all(|&r| r > 0.0) {
        Some(least_squares_slope(
            &steps.iter().map(|h| h.ln()).collect::<Vec<_>>(),
            &residuals.iter().map(|r| r.ln()).collect::<Vec<_>>(),
        ))
    } else {
        None
    };
    let finest = *residuals.last().unwrap_or(&0.0);
    Ok(OracleReport {
        case: "fd_interior".into(),
        oracle: Complex64::new(0.0, 0.0),
        production: Complex64::new(finest, 0.0),
        abs_err: finest,
        rel_err: rel(finest),
        grid: format!(
            "steps=[{}] points={}",
            steps.iter().map(|h| format!("{h:e}")).collect::<Vec<_>>().join(" "),
            samples.len()
        ),
        order,
    })
}
