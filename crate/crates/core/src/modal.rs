//! Per-mode vertical problem inside a layered cavity.
//!
//! In layer `l` the Fourier coefficient of mode `n` solves
//! `u'' + beta_l^2 u = 0` between the interface values `u_{l-1}` (top) and
//! `u_l` (bottom). Matching derivatives across interfaces gives a symmetric
//! tri-diagonal system (the connection formula) linking every interface to
//! the aperture coefficient `u_0`.
//!
//! Layer thicknesses follow the convention `h_l = y_l - y_{l-1} < 0`.
//! Exponentials are evaluated in scaled form: with `Im beta >= 0` and `h < 0`
//! the factor `exp(i beta h)` dominates, so every ratio is rewritten in terms
//! of `q = exp(-2 i beta h)` with `|q| <= 1`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{upper_sqrt, Cavity, Layer, Polarization, ProblemSpec};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative threshold below which `beta` is treated as zero.
pub const BETA_ZERO_TOL: f64 = 1e-14;

/// `|1 - exp(-2 i beta h)|` below this raises a modal resonance.
pub const RESONANCE_TOL: f64 = 1e-13;

/// Pivot magnitude (relative to the row scale) treated as singular.
pub const PIVOT_TOL: f64 = 1e-14;

/// `(kappa^2 - (n pi / w)^2)^{1/2}` with `Im >= 0`.
pub fn beta(kappa: Complex64, w: f64, n: usize) -> Complex64 {
    let p = n as f64 * PI / w;
    if kappa.im == 0.0 && n > 0 && (kappa.re * w / (n as f64 * PI) - 1.0).abs() <= BETA_ZERO_TOL {
        return Complex64::new(0.0, 0.0);
    }
    let b = upper_sqrt((kappa - p) * (kappa + p));
    if b.norm() <= BETA_ZERO_TOL * kappa.norm().max(p) {
        Complex64::new(0.0, 0.0)
    } else {
        b
    }
}

/// Layer coefficients `(a, b)` for vertical wavenumber `beta` and thickness
/// `h < 0`:
/// `a = -2 i beta / zeta`, `b = i beta (e^{i beta h} + e^{-i beta h}) / zeta`,
/// `zeta = e^{i beta h} - e^{-i beta h}`; for `beta = 0`, `a = -1/h`, `b = 1/h`.
///
/// A vanishing `zeta` is reported as `Error::ModalResonance` with zero mode
/// and layer indices; [`mode_coefficients`] fills those in.
pub fn layer_coeffs(beta: Complex64, h: f64) -> Result<(Complex64, Complex64)> {
    if h == 0.0 || !h.is_finite() {
        return Err(Error::Domain(format!("layer thickness must be nonzero, got {h}")));
    }
    if beta == Complex64::new(0.0, 0.0) {
        return Ok((Complex64::new(-1.0 / h, 0.0), Complex64::new(1.0 / h, 0.0)));
    }
    // orient so the dominant exponential is the one factored out
    let (bb, hh) = if (beta * h).im <= 0.0 { (beta, h) } else { (-beta, h) };
    let q = (-2.0 * I * bb * hh).exp();
    let one_m_q = 1.0 - q;
    if one_m_q.norm() <= RESONANCE_TOL {
        return Err(Error::ModalResonance { cavity: 0, n: 0, layer: 0 });
    }
    let a = -2.0 * I * bb * (-I * bb * hh).exp() / one_m_q;
    let b = I * bb * (1.0 + q) / one_m_q;
    Ok((a, b))
}

/// Closed-form aperture coefficient of an empty TM cavity of depth `d > 0`:
/// `s = -i beta (1 + e^{2 i beta d}) / (1 - e^{2 i beta d})`.
pub fn empty_cavity_s(beta: Complex64, d: f64) -> Complex64 {
    if beta == Complex64::new(0.0, 0.0) {
        return Complex64::new(1.0 / d, 0.0);
    }
    let e = (2.0 * I * beta * d).exp();
    -I * beta * (1.0 + e) / (1.0 - e)
}

/// Closed-form aperture coefficient of an empty TE cavity of depth `d > 0`:
/// `t = i beta (e^{2 i beta d} - 1) / (1 + e^{2 i beta d})`.
pub fn empty_cavity_t(beta: Complex64, d: f64) -> Complex64 {
    let e = (2.0 * I * beta * d).exp();
    I * beta * (e - 1.0) / (1.0 + e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoefficients {
    pub n: usize,
    pub beta: Vec<Complex64>,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
}

/// Solution of the connection system with a unit right-hand side, and the
/// resulting aperture impedance (`s_hat` for TM, `t_hat` for TE).
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionSolution {
    pub u_hat: Vec<Complex64>,
    pub impedance: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeEntry {
    pub coeffs: ModeCoefficients,
    pub connection: ConnectionSolution,
}

/// Per-cavity tables for the modes of one polarization.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalTables {
    pub polarization: Polarization,
    pub first_mode: usize,
    pub cavities: Vec<Vec<ModeEntry>>,
}

impl ModalTables {
    pub fn entry(&self, cavity: usize, n: usize) -> &ModeEntry {
        &self.cavities[cavity][n - self.first_mode]
    }
}

pub fn mode_coefficients(cavity: &Cavity, n: usize) -> Result<ModeCoefficients> {
    let w = cavity.width();
    let mut c = ModeCoefficients { n, beta: vec![], a: vec![], b: vec![] };
    for (l, layer) in cavity.layers.iter().enumerate() {
        let bt = beta(layer.kappa, w, n);
        let (a, b) = layer_coeffs(bt, layer.h()).map_err(|e| match e {
            Error::ModalResonance { cavity, .. } => Error::ModalResonance { cavity, n, layer: l + 1 },
            e => e,
        })?;
        c.beta.push(bt);
        c.a.push(a);
        c.b.push(b);
    }
    Ok(c)
}

/// Thomas elimination for the symmetric tri-diagonal system with diagonal
/// `d`, off-diagonal `e` and right-hand side `[1, 0, ..., 0]`.
pub fn solve_tridiagonal_unit(d: &[Complex64], e: &[Complex64]) -> Option<Vec<Complex64>> {
    let m = d.len();
    let mut piv = vec![Complex64::new(0.0, 0.0); m];
    let mut rhs = vec![Complex64::new(0.0, 0.0); m];
    if m == 0 {
        return Some(vec![]);
    }
    rhs[0] = Complex64::new(1.0, 0.0);
    let scale = |i: usize| {
        let mut s = d[i].norm();
        if i > 0 {
            s = s.max(e[i - 1].norm());
        }
        if i + 1 < m {
            s = s.max(e[i].norm());
        }
        s
    };
    piv[0] = d[0];
    if piv[0].norm() <= PIVOT_TOL * scale(0) {
        return None;
    }
    for i in 1..m {
        let f = e[i - 1] / piv[i - 1];
        piv[i] = d[i] - f * e[i - 1];
        rhs[i] = rhs[i] - f * rhs[i - 1];
        if piv[i].norm() <= PIVOT_TOL * scale(i) {
            return None;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); m];
    x[m - 1] = rhs[m - 1] / piv[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = (rhs[i] - e[i] * x[i + 1]) / piv[i];
    }
    if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Tri-diagonal TM connection matrix `(diag, off)` of size `L - 1`.
pub fn connection_matrix_tm(c: &ModeCoefficients) -> (Vec<Complex64>, Vec<Complex64>) {
    let l = c.a.len();
    let d = (0..l.saturating_sub(1)).map(|i| c.b[i] + c.b[i + 1]).collect();
    let e = (1..l.saturating_sub(1)).map(|i| c.a[i]).collect();
    (d, e)
}

/// Tri-diagonal TE connection matrix `(diag, off)` of size `L`, weighted by
/// `1/kappa_l^2`.
pub fn connection_matrix_te(cavity: &Cavity, c: &ModeCoefficients) -> (Vec<Complex64>, Vec<Complex64>) {
    let inv: Vec<Complex64> = cavity.layers.iter().map(|l| 1.0 / (l.kappa * l.kappa)).collect();
    let l = c.a.len();
    let d = (0..l)
        .map(|i| c.b[i] * inv[i] + if i + 1 < l { c.b[i + 1] * inv[i + 1] } else { Complex64::new(0.0, 0.0) })
        .collect();
    let e = (1..l).map(|i| c.a[i] * inv[i]).collect();
    (d, e)
}

/// TM connection solve; `s_hat = -b_1 + a_1^2 u_hat_1` (`-b_1` when `L = 1`).
pub fn connection_tm(cavity: &Cavity, n: usize) -> Result<ModeEntry> {
    let coeffs = mode_coefficients(cavity, n)?;
    let (d, e) = connection_matrix_tm(&coeffs);
    let u_hat = solve_tridiagonal_unit(&d, &e).ok_or(Error::ConnectionResonance { cavity: 0, n })?;
    let impedance = match u_hat.first() {
        Some(&u1) => -coeffs.b[0] + coeffs.a[0] * coeffs.a[0] * u1,
        None => -coeffs.b[0],
    };
    Ok(ModeEntry { coeffs, connection: ConnectionSolution { u_hat, impedance } })
}

/// TE connection solve;
/// `t_hat = (kappa0/kappa_1)^2 [(1/kappa_1^2) a_1^2 u_hat_1 - b_1]`.
pub fn connection_te(cavity: &Cavity, n: usize, kappa0: f64) -> Result<ModeEntry> {
    let coeffs = mode_coefficients(cavity, n)?;
    let (d, e) = connection_matrix_te(cavity, &coeffs);
    let u_hat = solve_tridiagonal_unit(&d, &e).ok_or(Error::ConnectionResonance { cavity: 0, n })?;
    let k1 = cavity.layers[0].kappa;
    let k1sq = k1 * k1;
    let impedance = kappa0 * kappa0 / k1sq * (coeffs.a[0] * coeffs.a[0] * u_hat[0] / k1sq - coeffs.b[0]);
    if !(impedance.re.is_finite() && impedance.im.is_finite()) {
        return Err(Error::ConnectionResonance { cavity: 0, n });
    }
    Ok(ModeEntry { coeffs, connection: ConnectionSolution { u_hat, impedance } })
}

pub fn build_modal_tables(spec: &ProblemSpec) -> Result<ModalTables> {
    let first_mode = *spec.modes().start();
    let mut cavities = Vec::with_capacity(spec.cavities.len());
    for (k, cav) in spec.cavities.iter().enumerate() {
        let entries = spec
            .modes()
            .map(|n| match spec.polarization {
                Polarization::TM => connection_tm(cav, n),
                Polarization::TE => connection_te(cav, n, spec.wave.kappa0),
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.in_cavity(k))?;
        cavities.push(entries);
    }
    Ok(ModalTables { polarization: spec.polarization, first_mode, cavities })
}

/// Interface coefficients `u_0..u_L` for aperture coefficient `u0`.
pub fn interior_coefficients(
    polarization: Polarization,
    cavity: &Cavity,
    entry: &ModeEntry,
    u0: Complex64,
) -> Vec<Complex64> {
    let l = cavity.layers.len();
    let a1 = entry.coeffs.a[0];
    let mut u = Vec::with_capacity(l + 1);
    u.push(u0);
    match polarization {
        Polarization::TM => {
            u.extend(entry.connection.u_hat.iter().map(|&uh| -a1 * u0 * uh));
            u.push(Complex64::new(0.0, 0.0));
        }
        Polarization::TE => {
            let k1 = cavity.layers[0].kappa;
            let f = -a1 * u0 / (k1 * k1);
            u.extend(entry.connection.u_hat.iter().map(|&uh| f * uh));
        }
    }
    u
}

/// `g(d) / g(h)` and its derivative in `d`, with `g(d) = e^{i beta d} - e^{-i beta d}`,
/// for `d` between `h < 0` and `-h`.
fn sin_ratio(beta: Complex64, d: f64, h: f64) -> (Complex64, Complex64) {
    let bb = if (beta * h).im <= 0.0 { beta } else { -beta };
    let den = 1.0 - (-2.0 * I * bb * h).exp();
    if d <= 0.0 {
        let p = (I * bb * (d - h)).exp();
        let r = (-2.0 * I * bb * d).exp();
        (p * (1.0 - r) / den, I * bb * p * (1.0 + r) / den)
    } else {
        let p = (-I * bb * (d + h)).exp();
        let r = (2.0 * I * bb * d).exp();
        (-p * (1.0 - r) / den, I * bb * p * (1.0 + r) / den)
    }
}

/// `u_l(y)` and `u_l'(y)` inside `layer` from its interface values.
pub fn vertical_profile_with_derivative(
    layer: &Layer,
    beta: Complex64,
    u_top: Complex64,
    u_bottom: Complex64,
    y: f64,
) -> (Complex64, Complex64) {
    let h = layer.h();
    if beta == Complex64::new(0.0, 0.0) {
        let val = ((u_bottom - u_top) * y + u_top * layer.y_bottom - u_bottom * layer.y_top) / h;
        return (val, (u_bottom - u_top) / h);
    }
    let (r1, d1) = sin_ratio(beta, y - layer.y_top, h);
    let (r2, d2) = sin_ratio(beta, y - layer.y_bottom, h);
    (r1 * u_bottom - r2 * u_top, d1 * u_bottom - d2 * u_top)
}

/// `u_l(y)` inside `layer` from its interface values.
pub fn vertical_profile(
    layer: &Layer,
    beta: Complex64,
    u_top: Complex64,
    u_bottom: Complex64,
    y: f64,
) -> Result<Complex64> {
    if beta != Complex64::new(0.0, 0.0) {
        let bb = if (beta * layer.h()).im <= 0.0 { beta } else { -beta };
        if (1.0 - (-2.0 * I * bb * layer.h()).exp()).norm() <= RESONANCE_TOL {
            return Err(Error::ModalResonance { cavity: 0, n: 0, layer: 0 });
        }
    }
    Ok(vertical_profile_with_derivative(layer, beta, u_top, u_bottom, y).0)
}
