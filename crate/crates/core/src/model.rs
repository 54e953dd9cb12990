//! Scattering scenario: incident wave, cavities with layer stacks, truncation
//! and quadrature settings. Validation fills in derived quantities and the
//! JSON form is read and written here.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Minimum gap between neighbouring apertures, relative to the widest cavity.
pub const MIN_RELATIVE_GAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    TM,
    TE,
}

impl std::fmt::Display for Polarization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Polarization::TM => write!(f, "TM"),
            Polarization::TE => write!(f, "TE"),
        }
    }
}

/// Plane wave `exp(i(alpha x - beta y))` arriving from above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidentWave {
    pub kappa0: f64,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl IncidentWave {
    pub fn new(kappa0: f64, theta: f64) -> Self {
        IncidentWave { kappa0, theta, alpha: kappa0 * theta.sin(), beta: kappa0 * theta.cos() }
    }
}

/// Homogeneous slab `y_bottom < y < y_top` inside a cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub y_top: f64,
    pub y_bottom: f64,
    pub kappa: Complex64,
}

impl Layer {
    /// `h_l = y_l - y_{l-1}`; negative by construction.
    pub fn h(&self) -> f64 {
        self.y_bottom - self.y_top
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cavity {
    pub a: f64,
    pub b: f64,
    pub layers: Vec<Layer>,
}

impl Cavity {
    /// Cavity over `[a, b]` with layers given by their bottom ordinates, top
    /// to bottom.
    pub fn new(a: f64, b: f64, stack: &[(f64, Complex64)]) -> Self {
        let mut top = 0.0;
        let layers = stack
            .iter()
            .map(|&(y_bottom, kappa)| {
                let l = Layer { y_top: top, y_bottom, kappa };
                top = y_bottom;
                l
            })
            .collect();
        Cavity { a, b, layers }
    }

    /// Single homogeneous layer of depth `h`.
    pub fn empty(a: f64, b: f64, h: f64, kappa: Complex64) -> Self {
        Cavity::new(a, b, &[(-h, kappa)])
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn depth(&self) -> f64 {
        self.layers.last().map_or(0.0, |l| -l.y_bottom)
    }

    /// Interface ordinates `y_0 = 0 > y_1 > ... > y_L`.
    pub fn interfaces(&self) -> Vec<f64> {
        let mut y = vec![0.0];
        y.extend(self.layers.iter().map(|l| l.y_bottom));
        y
    }

    /// Index of the layer containing `y` (upper layer wins on an interface).
    pub fn layer_at(&self, y: f64) -> Option<usize> {
        self.layers.iter().position(|l| y <= l.y_top && y >= l.y_bottom)
    }
}

/// Which algorithm fills the log-moment tables for the singular blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LiftMethod {
    /// One-dimensional reduction in `u = t - s` integrated on a graded mesh.
    #[default]
    Reduction,
    /// Direct seed at `lift_threshold` followed by the downward recursions.
    Recursion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub panels: usize,
    pub points_per_panel: usize,
    #[serde(rename = "bessel_K")]
    pub bessel_k: usize,
    pub lift_threshold: usize,
    #[serde(default, skip_serializing_if = "is_default_lift")]
    pub lift_method: LiftMethod,
}

fn is_default_lift(m: &LiftMethod) -> bool {
    *m == LiftMethod::Reduction
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            panels: 64,
            points_per_panel: 4,
            bessel_k: 8,
            lift_threshold: 11,
            lift_method: LiftMethod::Reduction,
        }
    }
}

impl QuadratureConfig {
    pub fn with_panels(mut self, panels: usize) -> Self {
        self.panels = panels;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub wave: IncidentWave,
    pub polarization: Polarization,
    pub cavities: Vec<Cavity>,
    pub n_modes: usize,
    pub quad: QuadratureConfig,
}

impl ProblemSpec {
    /// Mode indices carried per cavity: `1..=N` (TM) or `0..=N` (TE).
    pub fn modes(&self) -> std::ops::RangeInclusive<usize> {
        match self.polarization {
            Polarization::TM => 1..=self.n_modes,
            Polarization::TE => 0..=self.n_modes,
        }
    }

    pub fn modes_per_cavity(&self) -> usize {
        match self.polarization {
            Polarization::TM => self.n_modes,
            Polarization::TE => self.n_modes + 1,
        }
    }

    pub fn with_wave(&self, kappa0: f64, theta: f64) -> Self {
        let mut s = self.clone();
        s.wave = IncidentWave::new(kappa0, theta);
        s
    }
}

/// Check every invariant and recompute the derived fields.
pub fn validate(spec: &ProblemSpec) -> Result<ProblemSpec> {
    let w = &spec.wave;
    if !(w.kappa0 > 0.0 && w.kappa0.is_finite()) {
        return Err(Error::field("kappa0", format!("must be positive, got {}", w.kappa0)));
    }
    if w.theta.is_nan() || w.theta.abs() >= FRAC_PI_2 {
        return Err(Error::field("theta", format!("must lie in (-pi/2, pi/2), got {}", w.theta)));
    }
    if spec.n_modes < 1 {
        return Err(Error::field("N", "must be at least 1"));
    }
    let q = &spec.quad;
    if q.panels < 1 {
        return Err(Error::field("quadrature.panels", "must be at least 1"));
    }
    if q.points_per_panel < 2 {
        return Err(Error::field("quadrature.points_per_panel", "must be at least 2"));
    }
    if q.bessel_k < 1 {
        return Err(Error::field("quadrature.bessel_K", "must be at least 1"));
    }
    if q.lift_threshold < 8 {
        return Err(Error::field("quadrature.lift_threshold", "must be at least 8"));
    }
    if spec.cavities.is_empty() {
        return Err(Error::field("cavities", "at least one cavity is required"));
    }
    let mut cavities = Vec::with_capacity(spec.cavities.len());
    for (k, c) in spec.cavities.iter().enumerate() {
        let name = |f: &str| format!("cavities[{k}].{f}");
        if !(c.a.is_finite() && c.b.is_finite() && c.a < c.b) {
            return Err(Error::field(name("b"), format!("aperture needs a < b, got [{}, {}]", c.a, c.b)));
        }
        if c.layers.is_empty() {
            return Err(Error::field(name("layers"), "at least one layer is required"));
        }
        let mut top = 0.0;
        let mut layers = Vec::with_capacity(c.layers.len());
        for (l, layer) in c.layers.iter().enumerate() {
            let lname = |f: &str| name(&format!("layers[{l}].{f}"));
            if layer.y_top != top {
                return Err(Error::field(
                    lname("y_top"),
                    format!("layers must be contiguous from y = 0; expected {top}, got {}", layer.y_top),
                ));
            }
            if !(layer.y_bottom.is_finite() && layer.y_bottom < layer.y_top) {
                return Err(Error::field(
                    lname("y_bottom"),
                    format!("interfaces must decrease; {} is not below {}", layer.y_bottom, layer.y_top),
                ));
            }
            let kap = layer.kappa;
            if !(kap.re.is_finite() && kap.im.is_finite()) || kap.im < 0.0 {
                return Err(Error::field(lname("kappa"), "must be finite with Im(kappa) >= 0"));
            }
            if kap.norm() == 0.0 {
                return Err(Error::field(lname("kappa"), "must be nonzero"));
            }
            layers.push(*layer);
            top = layer.y_bottom;
        }
        cavities.push(Cavity { a: c.a, b: c.b, layers });
    }
    let wmax = cavities.iter().map(Cavity::width).fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..cavities.len()).collect();
    order.sort_by(|&i, &j| cavities[i].a.total_cmp(&cavities[j].a));
    for pair in order.windows(2) {
        let (p, n) = (&cavities[pair[0]], &cavities[pair[1]]);
        if n.a - p.b <= MIN_RELATIVE_GAP * wmax {
            return Err(Error::field(
                format!("cavities[{}]", pair[1]),
                format!(
                    "overlaps or touches cavities[{}]: [{}, {}] vs [{}, {}]",
                    pair[0], p.a, p.b, n.a, n.b
                ),
            ));
        }
    }
    Ok(ProblemSpec {
        wave: IncidentWave::new(w.kappa0, w.theta),
        polarization: spec.polarization,
        cavities,
        n_modes: spec.n_modes,
        quad: *q,
    })
}

/// `kappa = (omega^2 eps mu + i omega mu sigma)^{1/2}` with `Im kappa >= 0`.
pub fn kappa_from_material(omega: f64, eps: Complex64, mu: f64, sigma: f64) -> Complex64 {
    let k2 = omega * omega * eps * mu + Complex64::new(0.0, omega * mu * sigma);
    upper_sqrt(k2)
}

/// Wavenumber of a medium with relative permittivity and permeability.
pub fn kappa_relative(kappa0: f64, eps_r: Complex64, mu_r: f64) -> Complex64 {
    kappa0 * upper_sqrt(eps_r * mu_r)
}

pub(crate) fn upper_sqrt(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 || (r.im == 0.0 && r.re < 0.0) {
        -r
    } else {
        r
    }
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    y_bottom: f64,
    kappa: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct CavityFile {
    a: f64,
    b: f64,
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    schema: u32,
    polarization: Polarization,
    kappa0: f64,
    theta: f64,
    #[serde(rename = "N")]
    n: usize,
    quadrature: QuadratureConfig,
    cavities: Vec<CavityFile>,
}

#[derive(Deserialize)]
struct SchemaProbe {
    schema: Option<u32>,
}

impl From<&ProblemSpec> for SpecFile {
    fn from(s: &ProblemSpec) -> Self {
        SpecFile {
            schema: SCHEMA_VERSION,
            polarization: s.polarization,
            kappa0: s.wave.kappa0,
            theta: s.wave.theta,
            n: s.n_modes,
            quadrature: s.quad,
            cavities: s
                .cavities
                .iter()
                .map(|c| CavityFile {
                    a: c.a,
                    b: c.b,
                    layers: c
                        .layers
                        .iter()
                        .map(|l| LayerFile { y_bottom: l.y_bottom, kappa: [l.kappa.re, l.kappa.im] })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl From<SpecFile> for ProblemSpec {
    fn from(f: SpecFile) -> Self {
        ProblemSpec {
            wave: IncidentWave::new(f.kappa0, f.theta),
            polarization: f.polarization,
            cavities: f
                .cavities
                .into_iter()
                .map(|c| {
                    let stack: Vec<_> = c
                        .layers
                        .iter()
                        .map(|l| (l.y_bottom, Complex64::new(l.kappa[0], l.kappa[1])))
                        .collect();
                    Cavity::new(c.a, c.b, &stack)
                })
                .collect(),
            n_modes: f.n,
            quad: f.quadrature,
        }
    }
}

/// Parse a scenario from JSON text.
pub fn parse_spec(text: &str, origin: &str) -> Result<ProblemSpec> {
    let perr = |e: serde_json::Error| Error::Parse {
        path: origin.to_string(),
        message: format!("{e} (line {}, column {})", e.line(), e.column()),
    };
    let probe: SchemaProbe = serde_json::from_str(text).map_err(perr)?;
    match probe.schema {
        Some(SCHEMA_VERSION) => {}
        Some(found) => return Err(Error::Schema { expected: SCHEMA_VERSION, found }),
        None => {
            return Err(Error::Parse { path: origin.to_string(), message: "missing field `schema`".into() })
        }
    }
    let file: SpecFile = serde_json::from_str(text).map_err(perr)?;
    Ok(file.into())
}

pub fn spec_to_json(spec: &ProblemSpec) -> String {
    let mut s = serde_json::to_string_pretty(&SpecFile::from(spec)).expect("spec serializes");
    s.push('\n');
    s
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<ProblemSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_spec(&text, &path.display().to_string())
}

pub fn save_spec(spec: &ProblemSpec, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, spec_to_json(spec))
        .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })
}
