//! Real-argument Bessel functions of orders 0 and 1, the Hankel function of
//! the first kind, and the log-subtracted Hankel kernel.
//!
//! Three regimes are used:
//!
//! * `x < 2`: power series (with the logarithmic series for Y).
//! * `2 <= x < 25`: Miller's backward recurrence for J_n normalised by
//!   `J0 + 2 sum J_2k = 1`, with Neumann series for Y0 and Y1.
//! * `x >= 25`: Hankel asymptotic expansion, summed until the terms stop
//!   decreasing (truncation error below `exp(-2x)`).

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_43;

/// Complex values carried through the solver.
pub type ComplexValue = Complex64;

const SERIES_MAX: f64 = 2.0;
const ASYMPTOTIC_MIN: f64 = 25.0;

/// Scale factor `c = kappa0 * w / (2 pi)` multiplying `|s - t|` in the
/// normalised aperture integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelScale(f64);

impl KernelScale {
    pub fn new(c: f64) -> Result<Self> {
        if c > 0.0 && c.is_finite() {
            Ok(KernelScale(c))
        } else {
            Err(Error::Domain(format!("kernel scale must be positive, got {c}")))
        }
    }

    pub fn from_wave(kappa0: f64, w: f64) -> Result<Self> {
        Self::new(kappa0 * w / (2.0 * PI))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `[J0, J1, Y0, Y1]` at `x > 0`.
pub(crate) fn jy01(x: f64) -> [f64; 4] {
    if x < SERIES_MAX {
        series_jy(x)
    } else if x < ASYMPTOTIC_MIN {
        miller_jy(x)
    } else {
        asymptotic_jy(x)
    }
}

fn series_j(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let (mut t0, mut t1) = (1.0, 0.5 * x);
    let (mut j0, mut j1) = (t0, t1);
    for k in 1..40 {
        let kf = k as f64;
        t0 *= -q / (kf * kf);
        t1 *= -q / (kf * (kf + 1.0));
        j0 += t0;
        j1 += t1;
        if t0.abs() < 1e-18 * j0.abs() && t1.abs() < 1e-18 * j1.abs().max(1e-300) {
            break;
        }
    }
    (j0, j1)
}

fn series_jy(x: f64) -> [f64; 4] {
    let (j0, j1) = series_j(x);
    let q = 0.25 * x * x;
    let lx = (0.5 * x).ln();

    // Y0: sum_{k>=1} (-1)^{k+1} H_k q^k / (k!)^2
    let mut t = 1.0;
    let mut h = 0.0;
    let mut s0 = 0.0;
    for k in 1..40 {
        let kf = k as f64;
        t *= -q / (kf * kf);
        h += 1.0 / kf;
        s0 -= h * t;
        if t.abs() < 1e-18 {
            break;
        }
    }
    let y0 = 2.0 / PI * ((lx + EULER_GAMMA) * j0 + s0);

    // Y1: (psi(k+1) + psi(k+2)) (-1)^k (x/2)^{2k+1} / (k! (k+1)!)
    let mut t = 0.5 * x;
    let mut hk = 0.0;
    let mut s1 = (1.0 - 2.0 * EULER_GAMMA) * t;
    for k in 1..40 {
        let kf = k as f64;
        t *= -q / (kf * (kf + 1.0));
        hk += 1.0 / kf;
        let hk1 = hk + 1.0 / (kf + 1.0);
        s1 += (hk + hk1 - 2.0 * EULER_GAMMA) * t;
        if t.abs() < 1e-18 {
            break;
        }
    }
    let y1 = -2.0 / (PI * x) + 2.0 / PI * lx * j1 - s1 / PI;
    [j0, j1, y0, y1]
}

fn miller_jy(x: f64) -> [f64; 4] {
    let mut m = (x + 24.0 + 8.0 * x.sqrt()) as usize;
    m += m % 2;
    let (mut jp, mut jk) = (0.0_f64, 1e-30_f64);
    let (mut norm, mut s0, mut s1) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut j1 = 0.0;
    // jk holds J_k, jp holds J_{k+1}
    let mut k = m;
    loop {
        if k % 2 == 0 {
            if k > 0 {
                norm += 2.0 * jk;
                let half = (k / 2) as f64;
                let sgn = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                s0 += sgn * jk / half;
            }
        } else if k >= 3 {
            let kk = ((k - 1) / 2) as f64;
            let sgn = if ((k - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            s1 += sgn * (1.0 + 2.0 * kk) * jk / (kk * (1.0 + kk));
        }
        if k == 1 {
            j1 = jk;
        }
        if k == 0 {
            break;
        }
        let jm = 2.0 * k as f64 / x * jk - jp;
        jp = jk;
        jk = jm;
        k -= 1;
        if jk.abs() > 1e250 {
            let r = 1e-250;
            jk *= r;
            jp *= r;
            norm *= r;
            s0 *= r;
            s1 *= r;
            j1 *= r;
        }
    }
    norm += jk;
    let j0 = jk / norm;
    let j1 = j1 / norm;
    let lx = (0.5 * x).ln();
    let y0 = 2.0 / PI * (lx + EULER_GAMMA) * j0 - 4.0 / PI * s0 / norm;
    let y1 = -2.0 / (PI * x) * j0 + 2.0 / PI * (lx - 1.0 + EULER_GAMMA) * j1 - 2.0 / PI * s1 / norm;
    [j0, j1, y0, y1]
}

/// Hankel expansion; returns (P, Q) for order `nu`.
fn hankel_pq(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let (mut p, mut q) = (1.0, 0.0);
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..80 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        a *= (mu - odd * odd) / (kf * 8.0 * x);
        if a.abs() >= prev || a == 0.0 {
            break;
        }
        prev = a.abs();
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    (p, q)
}

fn asymptotic_jy(x: f64) -> [f64; 4] {
    let amp = (2.0 / (PI * x)).sqrt();
    let (sx, cx) = x.sin_cos();
    // chi = x - pi/4 and x - 3pi/4
    let (c0, s0) = (FRAC_1_SQRT_2 * (cx + sx), FRAC_1_SQRT_2 * (sx - cx));
    let (c1, s1) = (FRAC_1_SQRT_2 * (sx - cx), -FRAC_1_SQRT_2 * (sx + cx));
    let (p0, q0) = hankel_pq(0.0, x);
    let (p1, q1) = hankel_pq(1.0, x);
    [
        amp * (p0 * c0 - q0 * s0),
        amp * (p1 * c1 - q1 * s1),
        amp * (p0 * s0 + q0 * c0),
        amp * (p1 * s1 + q1 * c1),
    ]
}

/// J0(x); even in x.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 {
        return 1.0;
    }
    if x < SERIES_MAX {
        return series_j(x).0;
    }
    jy01(x)[0]
}

/// J1(x); odd in x.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    if ax == 0.0 {
        return 0.0;
    }
    let v = if ax < SERIES_MAX { series_j(ax).1 } else { jy01(ax)[1] };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn check_positive(x: f64, name: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} requires x > 0, got {x}")))
    }
}

pub fn bessel_y0(x: f64) -> Result<f64> {
    check_positive(x, "y0")?;
    Ok(jy01(x)[2])
}

pub fn bessel_y1(x: f64) -> Result<f64> {
    check_positive(x, "y1")?;
    Ok(jy01(x)[3])
}

/// H0^(1)(x) = J0(x) + i Y0(x).
pub fn hankel1_0(x: f64) -> Result<ComplexValue> {
    check_positive(x, "hankel1_0")?;
    let v = jy01(x);
    Ok(Complex64::new(v[0], v[2]))
}

/// H1^(1)(x) = J1(x) + i Y1(x).
pub fn hankel1_1(x: f64) -> Result<ComplexValue> {
    check_positive(x, "hankel1_1")?;
    let v = jy01(x);
    Ok(Complex64::new(v[1], v[3]))
}

/// Value of the kernel at `s = t`.
pub fn regularized_kernel_diagonal(c: f64) -> ComplexValue {
    Complex64::new(1.0, 2.0 / PI * (EULER_GAMMA + (0.5 * c).ln()))
}

/// `H0(c|s-t|) - (2i/pi) J0(c|s-t|) ln|s-t|`, analytic across `s = t`.
pub fn regularized_kernel(s: f64, t: f64, scale: KernelScale) -> ComplexValue {
    regularized_kernel_abs((s - t).abs(), scale.value())
}

/// Same kernel as a function of `u = |s - t|`.
///
/// For `c u <= 2` the log-free series
/// `J0 + (2i/pi)[(ln(c/2) + gamma) J0 + sum_k (-1)^{k+1} H_k (z^2/4)^k / (k!)^2]`
/// is summed directly, so `ln u` is never formed near the diagonal.
pub fn regularized_kernel_abs(u: f64, c: f64) -> ComplexValue {
    if u == 0.0 {
        return regularized_kernel_diagonal(c);
    }
    let z = c * u;
    if z <= SERIES_MAX {
        let q = 0.25 * z * z;
        let mut t = 1.0;
        let mut h = 0.0;
        let mut j0 = 1.0;
        let mut s = 0.0;
        for k in 1..40 {
            let kf = k as f64;
            t *= -q / (kf * kf);
            h += 1.0 / kf;
            j0 += t;
            s -= h * t;
            if t.abs() < 1e-18 {
                break;
            }
        }
        Complex64::new(j0, 2.0 / PI * (((0.5 * c).ln() + EULER_GAMMA) * j0 + s))
    } else {
        let v = jy01(z);
        Complex64::new(v[0], v[2] - 2.0 / PI * v[0] * u.ln())
    }
}

/// Partial sum `sum_{k=0}^{K} (-1)^k (z/2)^{2k} / (k!)^2`.
pub fn j0_partial_sum(z: f64, k_max: usize) -> f64 {
    let q = 0.25 * z * z;
    let mut t = 1.0;
    let mut s = 1.0;
    for k in 1..=k_max {
        let kf = k as f64;
        t *= -q / (kf * kf);
        s += t;
    }
    s
}

/// `J0(z) - sum_{k=0}^{K} (-1)^k (z/2)^{2k} / (k!)^2`.
///
/// For `z <= 2` the tail of the series is summed so that the relative
/// accuracy survives as `z -> 0`; otherwise the difference is formed.
pub fn j0_series_remainder(z: f64, k_max: usize) -> f64 {
    let z = z.abs();
    if z == 0.0 {
        return 0.0;
    }
    if z <= SERIES_MAX {
        let q = 0.25 * z * z;
        let mut t = 1.0;
        for k in 1..=k_max {
            let kf = k as f64;
            t *= -q / (kf * kf);
        }
        let mut s = 0.0;
        let mut k = k_max + 1;
        loop {
            let kf = k as f64;
            t *= -q / (kf * kf);
            s += t;
            if t.abs() <= 1e-18 * s.abs() || k > k_max + 60 {
                break;
            }
            k += 1;
        }
        s
    } else {
        bessel_j0(z) - j0_partial_sum(z, k_max)
    }
}
