//! Interior field reconstruction, backscatter RCS, enhancement factor and
//! CSV export.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::assembly::{build_rhs, exp_integral, prepare_cache, ApertureSolution, FactoredSystem, Solved};
use crate::error::{Error, Result};
use crate::modal::{build_modal_tables, interior_coefficients, vertical_profile_with_derivative, ModalTables};
use crate::model::{validate, Cavity, IncidentWave, Polarization, ProblemSpec};
use crate::quadrature::gauss_rule;
use crate::special::ComplexValue;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub x: f64,
    pub y: f64,
    /// Zero-based cavity index.
    pub cavity: usize,
    /// Zero-based layer index.
    pub layer: usize,
    pub value: ComplexValue,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FieldMap {
    pub points: Vec<FieldPoint>,
}

impl FieldMap {
    pub fn max_abs(&self) -> f64 {
        self.points.iter().map(|p| p.value.norm()).fold(0.0, f64::max)
    }
}

/// Per-mode interface coefficients of every cavity, ready for repeated
/// point evaluation.
#[derive(Debug, Clone)]
pub struct FieldEvaluator<'a> {
    spec: &'a ProblemSpec,
    tables: &'a ModalTables,
    /// `interfaces[k][n - first][l] = u_{l,k}^{(n)}`
    interfaces: Vec<Vec<Vec<Complex64>>>,
}

impl<'a> FieldEvaluator<'a> {
    pub fn new(spec: &'a ProblemSpec, tables: &'a ModalTables, solution: &ApertureSolution) -> Self {
        let interfaces = spec
            .cavities
            .iter()
            .enumerate()
            .map(|(k, cav)| {
                spec.modes()
                    .map(|n| interior_coefficients(spec.polarization, cav, tables.entry(k, n), solution.coefficient(k, n)))
                    .collect()
            })
            .collect();
        FieldEvaluator { spec, tables, interfaces }
    }

    fn cavity(&self, k: usize) -> Result<&'a Cavity> {
        self.spec.cavities.get(k).ok_or_else(|| Error::Domain(format!("no cavity {k}")))
    }

    fn check_inside(&self, k: usize, x: f64, y: f64) -> Result<(&'a Cavity, usize)> {
        let cav = self.cavity(k)?;
        let tol = 1e-12 * cav.width().max(cav.depth());
        if x < cav.a - tol || x > cav.b + tol {
            return Err(Error::Domain(format!("x = {x} outside cavity {k} [{}, {}]", cav.a, cav.b)));
        }
        if y > tol || y < -cav.depth() - tol {
            return Err(Error::Domain(format!("y = {y} outside cavity {k} (depth {})", cav.depth())));
        }
        let l = cav.layer_at(y.clamp(-cav.depth(), 0.0)).unwrap_or(cav.layers.len() - 1);
        Ok((cav, l))
    }

    /// Mode sums of `u` and `du/dy` at `(x, y)` in layer `layer`.
    fn eval_in_layer(&self, k: usize, layer: usize, x: f64, y: f64) -> (Complex64, Complex64) {
        let cav = &self.spec.cavities[k];
        let lay = &cav.layers[layer];
        let w = cav.width();
        let mut u = Complex64::new(0.0, 0.0);
        let mut du = Complex64::new(0.0, 0.0);
        for (i, n) in self.spec.modes().enumerate() {
            let coeffs = &self.interfaces[k][i];
            let beta = self.tables.entry(k, n).coeffs.beta[layer];
            let (v, d) = vertical_profile_with_derivative(lay, beta, coeffs[layer], coeffs[layer + 1], y);
            let arg = n as f64 * PI * (x - cav.a) / w;
            let t = match self.spec.polarization {
                Polarization::TM => arg.sin(),
                Polarization::TE => arg.cos(),
            };
            u += v * t;
            du += d * t;
        }
        (u, du)
    }

    /// Total field at `(x, y)` inside cavity `k`.
    pub fn value(&self, k: usize, x: f64, y: f64) -> Result<ComplexValue> {
        let (_, l) = self.check_inside(k, x, y)?;
        Ok(self.eval_in_layer(k, l, x, y).0)
    }

    /// Field and vertical derivative evaluated with the profile of layer
    /// `layer` (which may be evaluated at its bounding interfaces).
    pub fn value_in_layer(&self, k: usize, layer: usize, x: f64, y: f64) -> Result<(ComplexValue, ComplexValue)> {
        let cav = self.cavity(k)?;
        if layer >= cav.layers.len() {
            return Err(Error::Domain(format!("cavity {k} has no layer {layer}")));
        }
        Ok(self.eval_in_layer(k, layer, x, y))
    }

    /// `int_{-h}^0 |u^{(n)}(y)|^2 dy` summed over modes with the modal norms
    /// `c_n` (`w/2`, or `w` for the TE mode 0).
    pub fn l2_norm_squared(&self, k: usize) -> Result<f64> {
        let cav = self.cavity(k)?;
        let w = cav.width();
        let rule = gauss_rule(16);
        let mut total = 0.0;
        for (i, n) in self.spec.modes().enumerate() {
            let cn = if self.spec.polarization == Polarization::TE && n == 0 { w } else { 0.5 * w };
            let coeffs = &self.interfaces[k][i];
            for (l, lay) in cav.layers.iter().enumerate() {
                let beta = self.tables.entry(k, n).coeffs.beta[l];
                let thick = -lay.h();
                // 16-point Gauss per layer, split further when the profile oscillates
                let pieces = 1 + (beta.re.abs() * thick / 4.0) as usize;
                let step = thick / pieces as f64;
                for p in 0..pieces {
                    let top = lay.y_top - p as f64 * step;
                    for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
                        let y = top - 0.5 * step * (1.0 + t);
                        let (v, _) = vertical_profile_with_derivative(lay, beta, coeffs[l], coeffs[l + 1], y);
                        total += cn * 0.5 * step * wt * v.norm_sqr();
                    }
                }
            }
        }
        Ok(total)
    }
}

/// Total field at `(x, y)` inside cavity `k`.
pub fn field_at(
    spec: &ProblemSpec,
    tables: &ModalTables,
    solution: &ApertureSolution,
    x: f64,
    y: f64,
    k: usize,
) -> Result<ComplexValue> {
    FieldEvaluator::new(spec, tables, solution).value(k, x, y)
}

/// Cavity containing `(x, y)`, if any.
pub fn locate(spec: &ProblemSpec, x: f64, y: f64) -> Option<usize> {
    spec.cavities.iter().position(|c| x >= c.a && x <= c.b && y <= 0.0 && y >= -c.depth())
}

/// `nx` by `ny` samples over each cavity (edges included), cavity by cavity,
/// rows from the aperture downwards.
pub fn field_grid(solved: &Solved, nx: usize, ny: usize) -> Result<FieldMap> {
    let ev = FieldEvaluator::new(&solved.spec, &solved.tables, &solved.solution);
    let mut points = Vec::with_capacity(solved.spec.cavities.len() * nx * ny);
    for (k, cav) in solved.spec.cavities.iter().enumerate() {
        for j in 0..ny {
            let y = if ny == 1 { 0.0 } else { -cav.depth() * j as f64 / (ny - 1) as f64 };
            let layer = cav.layer_at(y).unwrap_or(cav.layers.len() - 1);
            for i in 0..nx {
                let x = if nx == 1 { 0.5 * (cav.a + cav.b) } else { cav.a + cav.width() * i as f64 / (nx - 1) as f64 };
                let value = ev.value_in_layer(k, layer, x, y)?.0;
                points.push(FieldPoint { x, y, cavity: k, layer, value });
            }
        }
    }
    Ok(FieldMap { points })
}

/// `samples` points on the diagonal of cavity `k` from `(a, 0)` to `(b, -h)`.
pub fn diagonal_trace(solved: &Solved, k: usize, samples: usize) -> Result<FieldMap> {
    let ev = FieldEvaluator::new(&solved.spec, &solved.tables, &solved.solution);
    let cav = ev.cavity(k)?;
    let mut points = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = if samples == 1 { 0.0 } else { i as f64 / (samples - 1) as f64 };
        let (x, y) = (cav.a + t * cav.width(), -t * cav.depth());
        let layer = cav.layer_at(y).unwrap_or(cav.layers.len() - 1);
        let value = ev.value_in_layer(k, layer, x, y)?.0;
        points.push(FieldPoint { x, y, cavity: k, layer, value });
    }
    Ok(FieldMap { points })
}

/// `sigma(phi) = kappa0 |sin phi sum_k int_{Gamma_k} u e^{i kappa0 cos(phi) x} dx|^2`
/// from the aperture trace (equal to the scattered trace in TM).
pub fn rcs_tm(spec: &ProblemSpec, solution: &ApertureSolution, phi: f64) -> Result<f64> {
    if spec.polarization != Polarization::TM {
        return Err(Error::UnsupportedPolarization("RCS is available for TM only".into()));
    }
    if !(phi > 0.0 && phi < PI) {
        return Err(Error::Domain(format!("observation angle must lie in (0, pi), got {phi}")));
    }
    let lambda = spec.wave.kappa0 * phi.cos();
    let mut total = Complex64::new(0.0, 0.0);
    for (k, cav) in spec.cavities.iter().enumerate() {
        let w = cav.width();
        let phase = Complex64::from_polar(1.0, lambda * cav.a);
        for n in spec.modes() {
            let kn = n as f64 * PI / w;
            let int = (exp_integral(lambda + kn, w) - exp_integral(lambda - kn, w)) / Complex64::new(0.0, 2.0);
            total += solution.coefficient(k, n) * phase * int;
        }
    }
    Ok(spec.wave.kappa0 * (phi.sin() * total).norm_sqr())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RcsSweep {
    pub angles: Vec<f64>,
    pub sigma: Vec<f64>,
    pub sigma_db: Vec<f64>,
}

/// Backscatter RCS at each observation angle `phi`, with incidence
/// `theta = pi/2 - phi` (the aperture formula's kernel `e^{+i kappa0 cos(phi) x}`
/// looks in direction `pi - phi`, which is then opposite to the incident
/// propagation). The aperture matrix is factored once.
pub fn backscatter_sweep(spec: &ProblemSpec, angles: &[f64]) -> Result<RcsSweep> {
    if spec.polarization != Polarization::TM {
        return Err(Error::UnsupportedPolarization("RCS is available for TM only".into()));
    }
    let spec = validate(spec)?;
    let tables = build_modal_tables(&spec)?;
    let cache = prepare_cache(&spec)?;
    let sys = FactoredSystem::new(&spec, &tables, &cache)?;
    let mut sigma = Vec::with_capacity(angles.len());
    for &phi in angles {
        if !(phi > 0.0 && phi < PI) {
            return Err(Error::Domain(format!("observation angle must lie in (0, pi), got {phi}")));
        }
        let wave = IncidentWave::new(spec.wave.kappa0, FRAC_PI_2 - phi);
        let sol = sys.solve(&build_rhs(&spec, &wave));
        sigma.push(rcs_tm(&spec, &sol, phi)?);
    }
    let sigma_db = sigma.iter().map(|s| 10.0 * s.log10()).collect();
    Ok(RcsSweep { angles: angles.to_vec(), sigma, sigma_db })
}

/// `n` angles evenly spaced over `[lo, hi]` (endpoints included).
pub fn angle_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `Q_E = ||u||_{L2(D_k)} / ||u^i||_{L2(D_k)}` with `||u^i||^2 = w h`.
pub fn enhancement(spec: &ProblemSpec, tables: &ModalTables, solution: &ApertureSolution, k: usize) -> Result<f64> {
    let ev = FieldEvaluator::new(spec, tables, solution);
    let cav = ev.cavity(k)?;
    Ok((ev.l2_norm_squared(k)? / (cav.width() * cav.depth())).sqrt())
}

/// Same problem at free-space wavenumber `kappa`; every layer wavenumber is
/// scaled by `kappa / kappa0` so relative material constants are kept.
pub fn rescale_wavenumber(spec: &ProblemSpec, kappa: f64) -> ProblemSpec {
    let f = kappa / spec.wave.kappa0;
    let mut s = spec.with_wave(kappa, spec.wave.theta);
    for cav in &mut s.cavities {
        for l in &mut cav.layers {
            l.kappa *= f;
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnhancementSweep {
    pub kappas: Vec<f64>,
    /// `q_e[i][k]` for wavenumber `i` and cavity `k`.
    pub q_e: Vec<Vec<f64>>,
    /// Wavenumbers dropped because the modal or aperture problem was
    /// singular there, with the reason.
    pub skipped: Vec<(f64, String)>,
}

/// `Q_E` of every cavity across `kappas` (see [`rescale_wavenumber`]).
pub fn enhancement_sweep(spec: &ProblemSpec, kappas: &[f64]) -> Result<EnhancementSweep> {
    let mut out = EnhancementSweep { kappas: vec![], q_e: vec![], skipped: vec![] };
    for &kappa in kappas {
        let s = rescale_wavenumber(spec, kappa);
        match crate::assembly::solve_spec(&s) {
            Ok(solved) => {
                let q = (0..s.cavities.len())
                    .map(|k| enhancement(&solved.spec, &solved.tables, &solved.solution, k))
                    .collect::<Result<Vec<_>>>()?;
                out.kappas.push(kappa);
                out.q_e.push(q);
            }
            Err(e @ (Error::ModalResonance { .. } | Error::ConnectionResonance { .. } | Error::SingularSystem(_))) => {
                out.skipped.push((kappa, e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Panel-refinement study: aperture coefficients at `panels[i]` compared in
/// the discrete L2 norm with the finest level.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub panels: Vec<usize>,
    /// `errors[i]` for `panels[i]`; the finest level is the reference and has
    /// no entry.
    pub errors: Vec<f64>,
    /// Order between consecutive levels.
    pub orders: Vec<f64>,
    /// Least-squares slope of `-ln error` against `ln panels`.
    pub fitted_order: f64,
}

/// Solves `spec` with `coarsest * 2^i` panels for `i < levels` and measures
/// each level against the last.
pub fn self_convergence(spec: &ProblemSpec, coarsest: usize, levels: usize) -> Result<ConvergenceStudy> {
    if levels < 3 {
        return Err(Error::field("levels", "at least three refinement levels are needed"));
    }
    if coarsest == 0 {
        return Err(Error::field("panels", "must be positive"));
    }
    let panels: Vec<usize> = (0..levels).map(|i| coarsest << i).collect();
    let mut runs = Vec::with_capacity(levels);
    for &p in &panels {
        let mut s = spec.clone();
        s.quad.panels = p;
        let solved = crate::assembly::solve_spec(&s)?;
        runs.push(solved.solution.coefficients.concat());
    }
    let reference = runs.last().cloned().unwrap_or_default();
    let errors: Vec<f64> = runs[..levels - 1]
        .iter()
        .map(|u| u.iter().zip(&reference).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let orders = errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
    let x: Vec<f64> = panels[..levels - 1].iter().map(|&p| (p as f64).ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| -e.ln()).collect();
    Ok(ConvergenceStudy { panels, errors, orders, fitted_order: least_squares_slope(&x, &y) })
}

/// Least-squares slope of `y` against `x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// CSV `panels,error,order` (the reference row has empty error and order;
/// the first row has no order).
pub fn convergence_csv(study: &ConvergenceStudy) -> String {
    let mut s = String::from("panels,error,order\n");
    for (i, p) in study.panels.iter().enumerate() {
        let err = study.errors.get(i).map(|e| fmt_f64(*e)).unwrap_or_default();
        let ord = i.checked_sub(1).and_then(|j| study.orders.get(j)).map(|o| fmt_f64(*o)).unwrap_or_default();
        let _ = writeln!(s, "{p},{err},{ord}");
    }
    s
}

pub fn export_convergence(study: &ConvergenceStudy, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &convergence_csv(study))
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::Io { path: path.display().to_string(), message: e.to_string() };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, text).map_err(io)
}

pub fn grid_csv(map: &FieldMap) -> String {
    let mut s = String::from("x,y,cavity,layer,re_u,im_u,abs_u\n");
    for p in &map.points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_f64(p.x),
            fmt_f64(p.y),
            p.cavity + 1,
            p.layer + 1,
            fmt_f64(p.value.re),
            fmt_f64(p.value.im),
            fmt_f64(p.value.norm())
        );
    }
    s
}

pub fn sweep_csv(sweep: &RcsSweep) -> String {
    let mut s = String::from("phi_rad,sigma,sigma_db\n");
    for ((phi, sig), db) in sweep.angles.iter().zip(&sweep.sigma).zip(&sweep.sigma_db) {
        let _ = writeln!(s, "{},{},{}", fmt_f64(*phi), fmt_f64(*sig), fmt_f64(*db));
    }
    s
}

pub fn enhancement_csv(sweep: &EnhancementSweep) -> String {
    let cols = sweep.q_e.first().map_or(0, |r| r.len());
    let mut s = String::from("kappa");
    for k in 0..cols {
        let _ = write!(s, ",Q_E_{}", k + 1);
    }
    s.push('\n');
    for (kappa, row) in sweep.kappas.iter().zip(&sweep.q_e) {
        s.push_str(&fmt_f64(*kappa));
        for q in row {
            s.push(',');
            s.push_str(&fmt_f64(*q));
        }
        s.push('\n');
    }
    s
}

/// Field map as CSV `x,y,cavity,layer,re_u,im_u,abs_u` (cavity and layer
/// numbered from 1).
pub fn export_grid(map: &FieldMap, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &grid_csv(map))
}

/// RCS sweep as CSV `phi_rad,sigma,sigma_db`.
pub fn export_sweep(sweep: &RcsSweep, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &sweep_csv(sweep))
}

/// Enhancement spectrum as CSV `kappa,Q_E_1,...`.
pub fn export_enhancement(sweep: &EnhancementSweep, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &enhancement_csv(sweep))
}
