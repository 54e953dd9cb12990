//! Aperture linear systems `(D - M) U = F` (TM) and `(D - M) U = G` (TE).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::modal::{build_modal_tables, ModalTables};
use crate::model::{Cavity, IncidentWave, Polarization, ProblemSpec};
use crate::quadrature::{cross_blocks, SingularBlockCache, Trig, TWO_PI};
use crate::special::{ComplexValue, KernelScale};

/// Below this reciprocal condition number a solution carries a warning.
pub const RCOND_WARN: f64 = 1e-14;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `int_0^w e^{i lambda x} dx = w e^{i lambda w/2} sinc(lambda w/2)`.
pub(crate) fn exp_integral(lambda: f64, w: f64) -> Complex64 {
    let x = 0.5 * lambda * w;
    let sinc = if x.abs() < 1e-4 { 1.0 - x * x / 6.0 + x.powi(4) / 120.0 } else { x.sin() / x };
    w * sinc * Complex64::from_polar(1.0, x)
}

/// `F_k(m) = -2 i beta int_0^{w} e^{i alpha (x + a)} sin(m pi x / w) dx`.
pub fn incident_vector_tm(wave: &IncidentWave, cavity: &Cavity, m: usize) -> ComplexValue {
    let w = cavity.width();
    let k = m as f64 * PI / w;
    let int = (exp_integral(wave.alpha + k, w) - exp_integral(wave.alpha - k, w)) / (2.0 * I);
    -2.0 * I * wave.beta * Complex64::from_polar(1.0, wave.alpha * cavity.a) * int
}

/// `G_k(m) = 2 int_0^{w} e^{i alpha (x + a)} cos(m pi x / w) dx`.
pub fn incident_vector_te(wave: &IncidentWave, cavity: &Cavity, m: usize) -> ComplexValue {
    let w = cavity.width();
    let k = m as f64 * PI / w;
    let int = 0.5 * (exp_integral(wave.alpha + k, w) + exp_integral(wave.alpha - k, w));
    2.0 * Complex64::from_polar(1.0, wave.alpha * cavity.a) * int
}

/// Row/column map `(cavity k, mode n) -> k * modes_per_cavity + n - first_mode`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub cavities: usize,
    pub first_mode: usize,
    pub modes_per_cavity: usize,
}

impl Layout {
    pub fn for_spec(spec: &ProblemSpec) -> Self {
        Layout { cavities: spec.cavities.len(), first_mode: *spec.modes().start(), modes_per_cavity: spec.modes_per_cavity() }
    }

    pub fn dim(&self) -> usize {
        self.cavities * self.modes_per_cavity
    }

    pub fn index(&self, cavity: usize, n: usize) -> usize {
        cavity * self.modes_per_cavity + n - self.first_mode
    }

    pub fn modes(&self) -> std::ops::Range<usize> {
        self.first_mode..self.first_mode + self.modes_per_cavity
    }
}

#[derive(Debug, Clone)]
pub struct ApertureSystem {
    pub polarization: Polarization,
    pub lhs: Matrix,
    pub rhs: Vec<ComplexValue>,
    pub layout: Layout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApertureSolution {
    pub polarization: Polarization,
    pub layout: Layout,
    /// `coefficients[k][n - first_mode] = u_{0,k}^{(n)}`.
    pub coefficients: Vec<Vec<ComplexValue>>,
    pub rcond: f64,
    pub warning: Option<String>,
}

impl ApertureSolution {
    pub fn coefficient(&self, cavity: usize, n: usize) -> ComplexValue {
        self.coefficients[cavity][n - self.layout.first_mode]
    }

    fn from_vector(polarization: Polarization, layout: Layout, x: &[Complex64], rcond: f64) -> Self {
        let coefficients = x.chunks(layout.modes_per_cavity).map(|c| c.to_vec()).collect();
        let warning = (rcond < RCOND_WARN).then(|| format!("ill-conditioned aperture system (rcond = {rcond:.3e})"));
        ApertureSolution { polarization, layout, coefficients, rcond, warning }
    }
}

/// Kernel scale `kappa0 w / (2 pi)` of a cavity's diagonal block.
pub fn cavity_scale(kappa0: f64, cavity: &Cavity) -> Result<KernelScale> {
    KernelScale::from_wave(kappa0, cavity.width())
}

/// Singular-block cache populated for every cavity scale of `spec`.
pub fn prepare_cache(spec: &ProblemSpec) -> Result<SingularBlockCache> {
    let mut cache = SingularBlockCache::new(&spec.quad, spec.n_modes);
    for cav in &spec.cavities {
        cache.ensure(cavity_scale(spec.wave.kappa0, cav)?)?;
    }
    Ok(cache)
}

/// Left-hand side `D - M`; it does not depend on the incidence angle.
pub fn build_matrix(spec: &ProblemSpec, tables: &ModalTables, cache: &SingularBlockCache) -> Result<Matrix> {
    let layout = Layout::for_spec(spec);
    let kappa0 = spec.wave.kappa0;
    let pol = spec.polarization;
    let mut lhs = Matrix::zeros(layout.dim(), layout.dim());
    let impedance = |k: usize, n: usize| tables.entry(k, n).connection.impedance;
    for (k, ck) in spec.cavities.iter().enumerate() {
        let wk = ck.width();
        let c = cavity_scale(kappa0, ck)?;
        let blocks = cache
            .blocks(c)
            .ok_or_else(|| Error::Domain(format!("singular blocks missing for scale {}", c.value())))?;
        if cache.n_max() < spec.n_modes {
            return Err(Error::Domain("singular block cache has too few modes".into()));
        }
        let scale = (wk / TWO_PI).powi(2);
        for m in layout.modes() {
            let row = layout.index(k, m);
            lhs[(row, row)] += match pol {
                Polarization::TM => 0.5 * wk * impedance(k, m),
                Polarization::TE => Complex64::new(if m == 0 { wk } else { 0.5 * wk }, 0.0),
            };
            for n in layout.modes().filter(|n| (m + n) % 2 == 0) {
                let col = layout.index(k, n);
                let mkk = match pol {
                    Polarization::TM => {
                        0.5 * I * kappa0 * kappa0 * scale * blocks.get(Trig::Sin, m, n)
                            - I * (m * n) as f64 * PI * PI / (2.0 * wk * wk) * scale * blocks.get(Trig::Cos, m, n)
                    }
                    Polarization::TE => impedance(k, n) * (-0.5 * I) * scale * blocks.get(Trig::Cos, m, n),
                };
                lhs[(row, col)] -= mkk;
            }
        }
        for (j, cj) in spec.cavities.iter().enumerate() {
            if j == k {
                continue;
            }
            let wj = cj.width();
            let d = spec.n_modes + 1;
            match pol {
                Polarization::TM => {
                    let b = cross_blocks(ck, cj, kappa0, &[Trig::Sin, Trig::Cos], spec.n_modes, &spec.quad)?;
                    for m in layout.modes() {
                        for n in layout.modes() {
                            let v = 0.5 * I * kappa0 * kappa0 * b[0][m * d + n]
                                - I * (m * n) as f64 * PI * PI / (2.0 * wj * wk) * b[1][m * d + n];
                            lhs[(layout.index(k, m), layout.index(j, n))] -= v;
                        }
                    }
                }
                Polarization::TE => {
                    let b = cross_blocks(ck, cj, kappa0, &[Trig::Cos], spec.n_modes, &spec.quad)?;
                    for m in layout.modes() {
                        for n in layout.modes() {
                            let v = -0.5 * I * impedance(j, n) * b[0][m * d + n];
                            lhs[(layout.index(k, m), layout.index(j, n))] -= v;
                        }
                    }
                }
            }
        }
    }
    if !lhs.is_finite() {
        return Err(Error::Domain("aperture matrix has non-finite entries".into()));
    }
    Ok(lhs)
}

/// Incident right-hand side `F` (TM) or `G` (TE) for `wave`.
pub fn build_rhs(spec: &ProblemSpec, wave: &IncidentWave) -> Vec<ComplexValue> {
    let layout = Layout::for_spec(spec);
    let mut rhs = vec![Complex64::new(0.0, 0.0); layout.dim()];
    for (k, cav) in spec.cavities.iter().enumerate() {
        for m in layout.modes() {
            rhs[layout.index(k, m)] = match spec.polarization {
                Polarization::TM => incident_vector_tm(wave, cav, m),
                Polarization::TE => incident_vector_te(wave, cav, m),
            };
        }
    }
    rhs
}

pub fn build_system(spec: &ProblemSpec, tables: &ModalTables, cache: &SingularBlockCache) -> Result<ApertureSystem> {
    if tables.polarization != spec.polarization {
        return Err(Error::Domain("modal tables built for the other polarization".into()));
    }
    Ok(ApertureSystem {
        polarization: spec.polarization,
        lhs: build_matrix(spec, tables, cache)?,
        rhs: build_rhs(spec, &spec.wave),
        layout: Layout::for_spec(spec),
    })
}

pub fn solve_system(sys: &ApertureSystem) -> Result<ApertureSolution> {
    let lu = Lu::factor(&sys.lhs)?;
    let x = lu.solve(&sys.rhs);
    Ok(ApertureSolution::from_vector(sys.polarization, sys.layout, &x, lu.rcond()))
}

/// Factored aperture matrix for repeated solves with different incident
/// waves at the same wavenumber.
#[derive(Debug, Clone)]
pub struct FactoredSystem {
    pub polarization: Polarization,
    pub layout: Layout,
    lu: Lu,
    rcond: f64,
}

impl FactoredSystem {
    pub fn new(spec: &ProblemSpec, tables: &ModalTables, cache: &SingularBlockCache) -> Result<Self> {
        let lu = Lu::factor(&build_matrix(spec, tables, cache)?)?;
        let rcond = lu.rcond();
        Ok(FactoredSystem { polarization: spec.polarization, layout: Layout::for_spec(spec), lu, rcond })
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    pub fn solve(&self, rhs: &[ComplexValue]) -> ApertureSolution {
        ApertureSolution::from_vector(self.polarization, self.layout, &self.lu.solve(rhs), self.rcond)
    }
}

/// Everything needed after a solve: modal tables and aperture coefficients.
#[derive(Debug, Clone)]
pub struct Solved {
    pub spec: ProblemSpec,
    pub tables: ModalTables,
    pub solution: ApertureSolution,
}

/// Validates, builds and solves `spec`.
pub fn solve_spec(spec: &ProblemSpec) -> Result<Solved> {
    let spec = crate::model::validate(spec)?;
    let tables = build_modal_tables(&spec)?;
    let cache = prepare_cache(&spec)?;
    let sys = build_system(&spec, &tables, &cache)?;
    let solution = solve_system(&sys)?;
    Ok(Solved { spec, tables, solution })
}
