//! Ready-made configurations for the reference experiments.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::model::{Cavity, IncidentWave, Polarization, ProblemSpec, QuadratureConfig};

fn real(k: f64) -> Complex64 {
    Complex64::new(k, 0.0)
}

fn spec(pol: Polarization, kappa0: f64, theta: f64, cavities: Vec<Cavity>, n: usize) -> ProblemSpec {
    ProblemSpec {
        wave: IncidentWave::new(kappa0, theta),
        polarization: pol,
        cavities,
        n_modes: n,
        quad: QuadratureConfig::default(),
    }
}

/// Empty cavity `[-0.5, 0.5]`, depth 1.5, `kappa0 = 1.5`, `theta = pi/9`,
/// `N = 30`; used for the panel-refinement study.
pub fn order_of_accuracy(pol: Polarization) -> ProblemSpec {
    spec(pol, 1.5, PI / 9.0, vec![Cavity::empty(-0.5, 0.5, 1.5, real(1.5))], 30)
}

/// TM backscatter benchmark: `kappa0 = 32 pi`, width one wavelength, depth a
/// quarter wavelength, `theta = pi/3`. `lossy` fills the cavity with
/// `eps = 4 + i`, `mu = 1`.
pub fn radar_cross_section(n: usize, lossy: bool) -> ProblemSpec {
    let kappa0 = 32.0 * PI;
    let lambda = 2.0 * PI / kappa0;
    let kappa = if lossy { kappa0 * Complex64::new(4.0, 1.0).sqrt() } else { real(kappa0) };
    let mut s = spec(
        Polarization::TM,
        kappa0,
        PI / 3.0,
        vec![Cavity::empty(-0.5 * lambda, 0.5 * lambda, 0.25 * lambda, kappa)],
        n,
    );
    // the trig factors reach frequency N/2 on [0, 2 pi]; keep about four
    // nodes per period of the highest mode
    s.quad.panels = s.quad.panels.max(n.div_ceil(2) * 2);
    s
}

/// Narrow empty TE cavity (width 0.05, depth 1) at normal incidence; its
/// enhancement factor peaks near `kappa = pi/2 + n pi`.
pub fn single_enhancement(kappa: f64) -> ProblemSpec {
    spec(Polarization::TE, kappa, 0.0, vec![Cavity::empty(-0.025, 0.025, 1.0, real(kappa))], 20)
}

/// Two empty TE cavities of width 0.2 and depth 1.5 separated by a gap of
/// 0.5, `theta = -pi/9`.
pub fn paired_enhancement(kappa: f64) -> ProblemSpec {
    spec(
        Polarization::TE,
        kappa,
        -PI / 9.0,
        vec![Cavity::empty(-0.45, -0.25, 1.5, real(kappa)), Cavity::empty(0.25, 0.45, 1.5, real(kappa))],
        20,
    )
}

/// The pair's single-cavity reference: same width and depth, alone.
pub fn isolated_enhancement(kappa: f64) -> ProblemSpec {
    spec(Polarization::TE, kappa, -PI / 9.0, vec![Cavity::empty(-0.45, -0.25, 1.5, real(kappa))], 20)
}

/// Three cavities: `[-0.6, -0.1]` depth 0.1 (empty), `[0, 0.2]` depth 0.5
/// with layers `pi, 2 pi, 10 pi` split at `-1/6, -1/3`, and `[0.3, 0.6]`
/// depth 0.3 with `1 + 0.5i` over `0.5` split at `-0.15`. Incident wave
/// `kappa0 = pi`, `theta = pi/6`.
pub fn multiple_cavities(pol: Polarization, n: usize) -> ProblemSpec {
    let kappa0 = PI;
    let mut s = spec(
        pol,
        kappa0,
        PI / 6.0,
        vec![
            Cavity::empty(-0.6, -0.1, 0.1, real(kappa0)),
            Cavity::new(0.0, 0.2, &[(-1.0 / 6.0, real(PI)), (-1.0 / 3.0, real(2.0 * PI)), (-0.5, real(10.0 * PI))]),
            Cavity::new(0.3, 0.6, &[(-0.15, Complex64::new(1.0, 0.5)), (-0.3, real(0.5))]),
        ],
        n,
    );
    s.quad.panels = s.quad.panels.max(n.div_ceil(2) * 2);
    s
}
