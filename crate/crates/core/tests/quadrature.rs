use std::f64::consts::PI;

use cavity_core::model::{LiftMethod, QuadratureConfig};
use cavity_core::quadrature::*;
use cavity_core::{Error, KernelScale};
use num_complex::Complex64;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn crel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn recursion_cfg() -> QuadratureConfig {
    QuadratureConfig { lift_method: LiftMethod::Recursion, ..QuadratureConfig::default() }
}

// (symbol, k, m, n, value) from 20-digit adaptive quadrature
const LOG_MOMENTS: [(char, usize, usize, usize, f64); 10] = [
    ('S', 1, 1, 1, 0.947684603238048319),
    ('S', 1, 2, 4, -2.21208567374205147),
    ('S', 3, 3, 5, 36.1546605293548293),
    ('S', 1, 7, 7, -2.73630152229693596),
    ('S', 5, 6, 2, -1103.75152207030371),
    ('P', 1, 0, 0, 13.3388519266433507),
    ('P', 1, 1, 3, 1.16165999774928489),
    ('P', 3, 0, 2, 135.362343094130107),
    ('P', 1, 8, 8, -2.40509539830408778),
    ('P', 7, 4, 4, 10513.476229899954),
];

const POWER_MOMENTS: [(char, usize, usize, f64); 5] = [
    ('W', 1, 1, 64.6733327605320702),
    ('W', 3, 4, -1291.16491027905627),
    ('X', 0, 0, 5.26453687288593418),
    ('X', 2, 3, -12.064717304594376),
    ('X', 5, 6, 1688.43943118263464),
];

const BLOCKS: [(f64, usize, usize, Trig, f64, f64); 8] = [
    (0.25, 1, 1, Trig::Sin, 15.0998011699327798, -13.8356075876460908),
    (1.0, 2, 4, Trig::Sin, 1.4962221150014836, 1.38085433461433737),
    (4.0, 3, 3, Trig::Sin, 1.69683222263060223, -0.0123867078315174374),
    (1.0, 0, 0, Trig::Cos, 12.2089069467143974, -0.777512086760334867),
    (0.25, 2, 2, Trig::Cos, 0.0540657371175149771, -5.98191074430536965),
    (4.0, 5, 1, Trig::Cos, 0.0215944475834812577, -0.136141553700631737),
    (1.0, 9, 9, Trig::Sin, 0.128368641390116964, -1.56814228210245906),
    (4.0, 10, 8, Trig::Cos, 0.321652340703067496, 0.59570831040020929),
];

fn kind_of(c: char) -> Trig {
    if c == 'S' || c == 'W' {
        Trig::Sin
    } else {
        Trig::Cos
    }
}

#[test]
fn gauss_rule_examples() {
    let r = gauss_rule(2);
    let v: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x * x).sum();
    assert!((v - 2.0 / 3.0).abs() < 1e-15);
    let g4 = gauss_rule(4);
    assert!(composite_integral_1d(f64::sin, 0.0, TWO_PI, 4, &g4).abs() < 1e-12);
    let e = composite_integral_1d(f64::exp, 0.0, TWO_PI, 8, &g4);
    assert!((e - (TWO_PI.exp() - 1.0)).abs() < 1e-10 * TWO_PI.exp());
    let d = composite_integral_2d(|s, t| (s - t).powi(2), 2, &g4);
    let exact = 2.0 * TWO_PI.powi(4) / 12.0;
    assert!(rel(d, exact) < 1e-13);
}

#[test]
fn gauss_rule_is_exact_to_degree_2q_minus_1() {
    for q in 2..=20 {
        let r = gauss_rule(q);
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14, "q = {q}");
        assert!(r.weights.iter().all(|&w| w > 0.0));
        for p in 0..2 * q {
            let v: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(p as i32)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((v - exact).abs() < 1e-14, "q = {q}, p = {p}");
        }
    }
}

#[test]
fn poly_trig_examples() {
    assert!(poly_trig_integral(0, 2, Trig::Sin).abs() < 1e-15);
    assert!((poly_trig_integral(0, 0, Trig::Cos) - TWO_PI).abs() < 1e-15);
    // s sin(s/2) over [0, 2 pi] integrates to 4 pi
    assert!((poly_trig_integral(1, 1, Trig::Sin) - 4.0 * PI).abs() < 1e-13);
    assert!(rel(poly_trig_integral(4, 0, Trig::Cos), TWO_PI.powi(5) / 5.0) < 1e-15);
}

#[test]
fn poly_trig_table_matches_gauss_for_large_orders() {
    let g = gauss_rule(12);
    for n in [0usize, 1, 3, 10, 40, 200] {
        let (c, s) = poly_trig_table(30, n);
        for p in [0usize, 5, 17, 30] {
            let panels = 40 + n / 2;
            let gc = composite_integral_1d(|x| x.powi(p as i32) * (0.5 * n as f64 * x).cos(), 0.0, TWO_PI, panels, &g);
            let gs = composite_integral_1d(|x| x.powi(p as i32) * (0.5 * n as f64 * x).sin(), 0.0, TWO_PI, panels, &g);
            let scale = TWO_PI.powi(p as i32 + 1);
            assert!((c[p] - gc).abs() < 1e-13 * scale, "cos n={n} p={p}");
            assert!((s[p] - gs).abs() < 1e-13 * scale, "sin n={n} p={p}");
        }
    }
}

#[test]
fn double_poly_trig_examples() {
    // k = 0 factorizes into two single integrals of sin s
    assert!(double_poly_trig(0, 2, 2, Trig::Sin, Trig::Sin).unwrap().abs() < 1e-13);
    assert!((double_poly_trig(0, 1, 1, Trig::Sin, Trig::Sin).unwrap() - 16.0).abs() < 1e-13);
    assert!(double_poly_trig(0, 1, 2, Trig::Sin, Trig::Sin).unwrap().abs() < 1e-13);
    let g = gauss_rule(8);
    for (k, m, n, km, kn) in [(1, 1, 1, Trig::Sin, Trig::Sin), (4, 3, 1, Trig::Cos, Trig::Sin), (7, 2, 5, Trig::Cos, Trig::Cos)] {
        let exact = double_poly_trig(k, m, n, km, kn).unwrap();
        let quad = composite_integral_2d(
            |s, t| (t - s).powi(k as i32) * kn.eval(0.5 * n as f64 * s) * km.eval(0.5 * m as f64 * t),
            8,
            &g,
        );
        assert!((exact - quad).abs() < 1e-11 * TWO_PI.powi(k as i32 + 2), "k={k} m={m} n={n}");
    }
    assert_eq!(double_poly_trig(41, 1, 1, Trig::Sin, Trig::Sin), Err(Error::OrderTooHigh(41)));
}

#[test]
fn power_moment_closed_forms() {
    let x00 = log_power_moment(0, 0, Trig::Cos, 11);
    assert!(rel(x00, TWO_PI * (TWO_PI.ln() - 1.0)) < 1e-13);
    for k in 0..15 {
        assert_eq!(log_power_moment(k, 0, Trig::Sin, 11), 0.0);
    }
}

#[test]
fn power_moments_match_reference() {
    for (sym, k, n, v) in POWER_MOMENTS {
        let kind = kind_of(sym);
        assert!(rel(log_power_moment_direct(k, n, kind), v) < 1e-12, "{sym}_{k}({n}) direct");
        assert!(rel(log_power_moment(k, n, kind, 11), v) < 1e-9, "{sym}_{k}({n}) recursion");
    }
}

#[test]
fn log_moments_match_reference() {
    let cfg = QuadratureConfig::default();
    for (sym, k, m, n, v) in LOG_MOMENTS {
        let got = log_double_moment(kind_of(sym), k, m, n, &cfg).unwrap();
        assert!(rel(got, v) < 1e-11, "{sym}_{k}({m},{n}) = {got}, want {v}");
    }
    let p100 = 4.0 * PI * PI * (TWO_PI.ln() - 1.5);
    assert!(rel(log_double_moment_cos(1, 0, 0, &cfg).unwrap(), p100) < 1e-13);
    assert!(rel(log_double_moment_sin(1, 1, 1, &cfg).unwrap(), 0.947684603238048319) < 1e-12);
}

#[test]
fn recursion_path_matches_reference_at_low_modes() {
    let cfg = recursion_cfg();
    for (sym, k, m, n, v) in LOG_MOMENTS.iter().copied().filter(|t| t.2.max(t.3) <= 4) {
        let got = log_double_moment(kind_of(sym), k, m, n, &cfg).unwrap();
        assert!(rel(got, v) < 1e-8, "{sym}_{k}({m},{n}) = {got}, want {v}");
    }
}

#[test]
fn odd_sum_log_moments_vanish() {
    let cfg = QuadratureConfig::default();
    for kind in [Trig::Sin, Trig::Cos] {
        assert_eq!(log_double_moment(kind, 3, 1, 2, &cfg).unwrap(), 0.0);
    }
    assert!(log_double_moment(Trig::Sin, 2, 1, 1, &cfg).is_err());
}

#[test]
fn one_recursion_step_agrees_with_direct_quadrature() {
    let cfg = QuadratureConfig::default();
    for kind in [Trig::Sin, Trig::Cos] {
        for (m, n) in [(1, 1), (2, 4), (3, 5), (0, 2)] {
            if kind == Trig::Sin && (m == 0 || n == 0) {
                continue;
            }
            for k in [11usize, 13] {
                let upper = log_double_moment_direct(k + 2, m, n, kind, cfg.panels, cfg.points_per_panel);
                let wx = log_power_moment_direct(k, n, kind);
                let stepped = recursion_step(k, m, n, kind, upper, wx).unwrap();
                let direct = log_double_moment_direct(k, m, n, kind, cfg.panels, cfg.points_per_panel);
                assert!(rel(stepped, direct) < 1e-9, "{kind:?} k={k} ({m},{n}): {stepped} vs {direct}");
            }
        }
    }
    for kind in [Trig::Sin, Trig::Cos] {
        for n in [1usize, 3, 6] {
            for k in [11usize, 13] {
                let via = log_power_moment(k, n, kind, k + 2);
                let direct = log_power_moment_direct(k, n, kind);
                assert!(rel(via, direct) < 1e-9, "{kind:?} k={k} n={n}");
            }
        }
    }
}

#[test]
fn moment_tables_agree_with_single_evaluations() {
    let cfg = QuadratureConfig::default();
    let t = LogMomentTables::compute(Trig::Cos, 6, 3, &cfg).unwrap();
    for (m, n) in [(0, 0), (2, 4), (5, 3), (6, 6)] {
        for k in [1usize, 3, 5, 7] {
            let single = log_double_moment(Trig::Cos, k, m, n, &cfg).unwrap();
            assert!(rel(t.get(k, m, n), single) < 1e-14);
            assert_eq!(t.get(k, m, n), t.get(k, n, m));
        }
    }
    assert_eq!(t.get(1, 1, 2), 0.0);
}

#[test]
fn singular_blocks_match_reference() {
    let cfg = QuadratureConfig::default();
    for (c, m, n, kind, re, im) in BLOCKS {
        let want = Complex64::new(re, im);
        let got = singular_block(m, n, KernelScale::new(c).unwrap(), kind, &cfg).unwrap();
        assert!(crel(got, want) < 1e-8, "c={c} ({m},{n}) {kind:?}: {got} vs {want}");
    }
}

#[test]
fn block_tables_match_single_entries() {
    let cfg = QuadratureConfig::default();
    let c = KernelScale::new(1.0).unwrap();
    let blocks = SingularBlocks::compute(c, 10, &cfg).unwrap();
    for (m, n) in [(0, 0), (1, 1), (2, 4), (9, 9), (10, 8)] {
        for kind in [Trig::Sin, Trig::Cos] {
            let single = singular_block(m, n, c, kind, &cfg).unwrap();
            assert!(crel(blocks.get(kind, m, n), single) < 1e-13 || single.norm() < 1e-300);
        }
    }
    for (c, m, n, kind, re, im) in BLOCKS.iter().copied().filter(|b| b.0 == 1.0) {
        assert!(crel(blocks.get(kind, m, n), Complex64::new(re, im)) < 1e-8, "c={c} ({m},{n})");
    }
}

#[test]
fn odd_sum_blocks_are_exactly_zero() {
    let cfg = QuadratureConfig::default();
    for c in [0.3, 1.0, 5.0] {
        let c = KernelScale::new(c).unwrap();
        let blocks = SingularBlocks::compute(c, 12, &cfg).unwrap();
        for m in 0..=12 {
            for n in 0..=12 {
                if (m + n) % 2 == 1 {
                    for kind in [Trig::Sin, Trig::Cos] {
                        assert_eq!(blocks.get(kind, m, n), Complex64::new(0.0, 0.0));
                    }
                }
            }
        }
        assert_eq!(singular_block(1, 2, c, Trig::Sin, &cfg).unwrap(), Complex64::new(0.0, 0.0));
    }
}

#[test]
fn recursion_path_blocks_match_reference_at_low_modes() {
    let cfg = recursion_cfg();
    for (c, m, n, kind, re, im) in BLOCKS.iter().copied().filter(|b| b.1.max(b.2) <= 4) {
        let got = singular_block(m, n, KernelScale::new(c).unwrap(), kind, &cfg).unwrap();
        assert!(crel(got, Complex64::new(re, im)) < 1e-8, "c={c} ({m},{n}) {kind:?}");
    }
}

#[test]
fn effective_k_is_capped_for_large_scales() {
    assert_eq!(effective_bessel_k(0.25, 8), 8);
    assert_eq!(effective_bessel_k(1.0, 8), 8);
    assert_eq!(effective_bessel_k(4.0, 8), 2);
    assert_eq!(effective_bessel_k(16.0, 8), 2);
    assert_eq!(effective_bessel_k(16.0, 1), 1);
}

#[test]
fn cache_reuses_blocks_by_rounded_scale() {
    let cfg = QuadratureConfig::default();
    let mut cache = SingularBlockCache::new(&cfg, 6);
    assert!(cache.is_empty());
    let c = KernelScale::new(0.7).unwrap();
    cache.ensure(c).unwrap();
    cache.ensure(KernelScale::new(0.7 * (1.0 + 1e-16)).unwrap()).unwrap();
    assert_eq!(cache.len(), 1);
    let direct = singular_block(2, 4, c, Trig::Sin, &cfg).unwrap();
    assert!(crel(cache.get(Trig::Sin, 2, 4, c).unwrap(), direct) < 1e-13);
    assert_eq!(cache.get(Trig::Sin, 7, 1, c), None);
    assert_eq!(cache.get(Trig::Sin, 1, 1, KernelScale::new(0.8).unwrap()), None);
}

#[test]
fn single_block_converges_at_eighth_order() {
    let c = KernelScale::new(0.25).unwrap();
    let vals: Vec<Complex64> = [4usize, 8, 16, 32, 64]
        .iter()
        .map(|&p| singular_block(3, 3, c, Trig::Sin, &QuadratureConfig::default().with_panels(p)).unwrap())
        .collect();
    let d: Vec<f64> = vals.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let order = (d[1] / d[2]).log2();
    assert!(order >= 7.5, "observed order {order}, differences {d:?}");
}

#[test]
fn cross_blocks_decay_and_converge() {
    use cavity_core::model::Cavity;
    let one = Complex64::new(1.0, 0.0);
    let left = Cavity::empty(0.0, 0.2, 0.5, one);
    let near = Cavity::empty(0.3, 0.5, 0.5, one);
    let far = Cavity::empty(20.2, 20.4, 0.5, one);
    let cfg = QuadratureConfig::default();
    let coarse = cross_block(2, 3, &left, &near, 10.0, Trig::Sin, &cfg.with_panels(16)).unwrap();
    let fine = cross_block(2, 3, &left, &near, 10.0, Trig::Sin, &cfg).unwrap();
    assert!(crel(coarse, fine) < 1e-9);
    // nearly constant kernel over both apertures: |block| ~ w_k w_j |H0(kappa0 d)|
    let b = cross_block(0, 0, &left, &far, 1.0, Trig::Cos, &cfg).unwrap();
    let scale = 0.04 * cavity_core::special::hankel1_0(20.2).unwrap().norm();
    assert!((b.norm() / scale - 1.0).abs() < 0.02, "{} vs {scale}", b.norm());
    // equal widths: swapping roles of the two cavities
    let ab = cross_block(1, 3, &left, &near, 10.0, Trig::Sin, &cfg).unwrap();
    let ba = cross_block(3, 1, &near, &left, 10.0, Trig::Sin, &cfg).unwrap();
    assert!(crel(ab, ba) < 1e-13);
    let all = cross_blocks(&left, &near, 10.0, &[Trig::Sin, Trig::Cos], 4, &cfg).unwrap();
    assert!(crel(all[0][2 * 5 + 3], fine) < 1e-13);
    assert!(cross_block(0, 0, &left, &left, 1.0, Trig::Cos, &cfg).is_err());
}

#[test]
fn close_cavities_get_graded_nodes() {
    use cavity_core::model::Cavity;
    let one = Complex64::new(1.0, 0.0);
    let a = Cavity::empty(0.0, 1.0, 1.0, one);
    let b = Cavity::empty(1.001, 2.0, 1.0, one);
    let cfg = QuadratureConfig::default();
    let (xa, wa) = aperture_nodes(&a, &b, &cfg);
    let (xb, _) = aperture_nodes(&b, &a, &cfg);
    assert!((wa.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    assert!(1.0 - xa.iter().cloned().fold(0.0, f64::max) < 1e-3);
    assert!(xb.iter().cloned().fold(1.0, f64::min) < 1e-3);
    let coarse = cross_block(1, 1, &a, &b, 3.0, Trig::Sin, &cfg.with_panels(16)).unwrap();
    let fine = cross_block(1, 1, &a, &b, 3.0, Trig::Sin, &cfg.with_panels(64)).unwrap();
    assert!(crel(coarse, fine) < 1e-6);
}

proptest! {
    #[test]
    fn cos_blocks_are_symmetric(m in 0usize..10, half in 0usize..5, c in 0.1f64..4.0) {
        let n = (m + 2 * half) % 10;
        let n = if (m + n) % 2 == 1 { n + 1 } else { n };
        let cfg = QuadratureConfig::default().with_panels(8);
        let c = KernelScale::new(c).unwrap();
        let a = singular_block(m, n, c, Trig::Cos, &cfg).unwrap();
        let b = singular_block(n, m, c, Trig::Cos, &cfg).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-12));
    }

    #[test]
    fn poly_trig_matches_gauss(p in 0usize..20, n in 0usize..60) {
        let g = gauss_rule(10);
        for kind in [Trig::Sin, Trig::Cos] {
            let q = composite_integral_1d(|x| x.powi(p as i32) * kind.eval(0.5 * n as f64 * x), 0.0, TWO_PI, 64, &g);
            prop_assert!((poly_trig_integral(p, n, kind) - q).abs() < 1e-12 * TWO_PI.powi(p as i32 + 1));
        }
    }

    #[test]
    fn double_moments_are_symmetric_in_order_parity(k in 0usize..12, m in 0usize..8, n in 0usize..8) {
        // (t - s)^k with the roles of the two factors exchanged picks up (-1)^k
        let a = double_poly_trig(k, m, n, Trig::Sin, Trig::Cos).unwrap();
        let b = double_poly_trig(k, n, m, Trig::Cos, Trig::Sin).unwrap();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((a - sign * b).abs() <= 1e-12 * TWO_PI.powi(k as i32 + 2));
    }
}
