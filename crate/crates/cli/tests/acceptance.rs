//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p cavity-cli --test acceptance`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use cavity_core::assembly::{solve_spec, Solved};
use cavity_core::modal::{beta, connection_te, connection_tm, empty_cavity_s, empty_cavity_t, layer_coeffs};
use cavity_core::model::{Cavity, Polarization, QuadratureConfig};
use cavity_core::oracle::{
    block_check, block_grid, connection_suite, even_block_scale, fd_interior_check, parity_cases, parity_check,
};
use cavity_core::postprocess::{
    angle_grid, backscatter_sweep, diagonal_trace, enhancement_sweep, field_grid, self_convergence, FieldEvaluator,
};
use cavity_core::quadrature::{singular_block, Trig};
use cavity_core::{scenarios, KernelScale};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict { pass, detail: detail.into() }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Verdict::new(false, format!("error: {e}"))
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for pol in [Polarization::TM, Polarization::TE] {
        match self_convergence(&scenarios::order_of_accuracy(pol), 8, 5) {
            Ok(study) => {
                pass &= study.fitted_order >= 7.5;
                detail.push(format!("{pol} fitted order {:.2}", study.fitted_order));
            }
            Err(e) => return Verdict::error(e),
        }
    }
    let t = start.elapsed();
    pass &= t <= Duration::from_secs(120);
    detail.push(format!("{:.1}s", t.as_secs_f64()));
    Verdict::new(pass, detail.join(", "))
}

fn criterion_2() -> Verdict {
    let cfg = QuadratureConfig::default();
    let mut nonzero = 0;
    for c in [0.25, 0.3, 1.0, 4.0, 5.0] {
        let sc = KernelScale::new(c).unwrap();
        for m in 0..=12 {
            for n in (0..=12).filter(|n| (m + n) % 2 == 1) {
                for kind in [Trig::Sin, Trig::Cos] {
                    match singular_block(m, n, sc, kind, &cfg) {
                        Ok(v) if v == c0() => {}
                        Ok(_) => nonzero += 1,
                        Err(e) => return Verdict::error(e),
                    }
                }
            }
        }
    }
    let mut worst: f64 = 0.0;
    let cases = parity_cases();
    for case in &cases {
        let scale = match even_block_scale(case.c, 12, &cfg) {
            Ok(s) => s,
            Err(e) => return Verdict::error(e),
        };
        match parity_check(*case, 1e-10 * scale, &cfg) {
            Ok(r) => {
                if r.production != c0() {
                    nonzero += 1;
                }
                worst = worst.max(r.oracle.norm() / scale);
            }
            Err(e) => return Verdict::error(e),
        }
    }
    Verdict::new(
        nonzero == 0 && worst <= 1e-9 && cases.len() == 30,
        format!("{nonzero} nonzero odd-sum blocks, {} oracle cases, worst |oracle|/scale {worst:.2e}", cases.len()),
    )
}

fn c0() -> Complex64 {
    c(0.0, 0.0)
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let cfg = QuadratureConfig::default();
    let cases = block_grid(1..=10, &[0.25, 1.0, 4.0]);
    let mut worst = (0.0, String::new());
    for case in &cases {
        match block_check(*case, 1e-8, &cfg) {
            Ok(r) if r.rel_err > worst.0 => worst = (r.rel_err, r.case),
            Ok(_) => {}
            Err(e) => return Verdict::error(e),
        }
    }
    let t = start.elapsed();
    Verdict::new(
        cases.len() == 300 && worst.0 <= 1e-8 && t <= Duration::from_secs(300),
        format!("{} cases, worst rel {:.2e} ({}), {:.1}s", cases.len(), worst.0, worst.1, t.as_secs_f64()),
    )
}

fn split(cav: &Cavity, layer: usize, frac: f64) -> Cavity {
    let mut stack: Vec<(f64, Complex64)> = cav.layers.iter().map(|l| (l.y_bottom, l.kappa)).collect();
    let l = cav.layers[layer];
    stack.insert(layer, (l.y_top + frac * l.h(), l.kappa));
    Cavity::new(cav.a, cav.b, &stack)
}

fn criterion_4() -> Verdict {
    // a^2 - b^2 = beta^2
    let mut rng = StdRng::seed_from_u64(4);
    let (mut draws, mut identity): (usize, f64) = (0, 0.0);
    while draws < 10_000 {
        let bt = c(rng.gen_range(-20.0..20.0), rng.gen_range(0.0..20.0));
        let h = -rng.gen_range(0.01..2.0);
        let Ok((a, b)) = layer_coeffs(bt, h) else { continue };
        draws += 1;
        let scale = (a * a).norm().max((b * b).norm()).max((bt * bt).norm());
        identity = identity.max((a * a - b * b - bt * bt).norm() / scale);
    }

    let base = Cavity::new(-0.2, 0.4, &[(-0.25, c(6.0, 0.0)), (-0.7, c(9.0, 1.5)), (-1.0, c(3.0, 0.1))]);
    let mut splitting: f64 = 0.0;
    for layer in 0..3 {
        for frac in [0.5, 0.3] {
            let cut = split(&base, layer, frac);
            for n in 1..20 {
                let pairs = [
                    (connection_tm(&base, n), connection_tm(&cut, n)),
                    (connection_te(&base, n, 4.0), connection_te(&cut, n, 4.0)),
                ];
                for (a, b) in pairs {
                    match (a, b) {
                        (Ok(a), Ok(b)) => splitting = splitting.max(rel(b.connection.impedance, a.connection.impedance)),
                        (Err(e), _) | (_, Err(e)) => return Verdict::error(e),
                    }
                }
            }
        }
    }

    let mut closed: f64 = 0.0;
    for kappa in [1.5, 4.0, 11.0] {
        let cav = Cavity::empty(-0.5, 0.5, 1.5, c(kappa, 0.0));
        for n in 1..30 {
            let bt = beta(c(kappa, 0.0), 1.0, n);
            let (tm, te) = match (connection_tm(&cav, n), connection_te(&cav, n, kappa)) {
                (Ok(tm), Ok(te)) => (tm, te),
                (Err(e), _) | (_, Err(e)) => return Verdict::error(e),
            };
            closed = closed.max(rel(tm.connection.impedance, empty_cavity_s(bt, 1.5)));
            closed = closed.max(rel(te.connection.impedance, empty_cavity_t(bt, 1.5)));
        }
    }
    Verdict::new(
        identity <= 1e-12 && splitting <= 1e-11 && closed <= 1e-12,
        format!("{draws} draws max {identity:.2e}; splitting {splitting:.2e}; closed forms {closed:.2e}"),
    )
}

fn criterion_5() -> Verdict {
    let reports = connection_suite(200, 5);
    let worst = reports.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    Verdict::new(!reports.is_empty() && worst <= 1e-12, format!("{} systems, worst {worst:.2e}", reports.len()))
}

fn criterion_6() -> Verdict {
    let mut detail = Vec::new();
    let mut pass = true;
    let mut min_order = f64::INFINITY;
    for pol in [Polarization::TM, Polarization::TE] {
        for (name, spec, per_layer) in [
            ("example1", scenarios::order_of_accuracy(pol), 6),
            ("example4", scenarios::multiple_cavities(pol, 24), 20),
        ] {
            let solved = match solve_spec(&spec) {
                Ok(s) => s,
                Err(e) => return Verdict::error(format!("{name} {pol}: {e}")),
            };
            match fd_interior_check(&solved, &[1e-2, 5e-3, 2.5e-3], per_layer, 3) {
                Ok(r) => min_order = min_order.min(r.order.unwrap_or(f64::NAN)),
                Err(e) => return Verdict::error(e),
            }
        }
    }
    pass &= min_order >= 1.9;
    detail.push(format!("FD order min {min_order:.2}"));

    let tm = match solve_spec(&scenarios::multiple_cavities(Polarization::TM, 24)) {
        Ok(s) => s,
        Err(e) => return Verdict::error(e),
    };
    let (wall, cont) = match (boundary_ratio(&tm), continuity(&tm)) {
        (Ok(w), Ok((c, _))) => (w, c),
        (Err(e), _) | (_, Err(e)) => return Verdict::error(e),
    };
    let te = match solve_spec(&scenarios::multiple_cavities(Polarization::TE, 24)) {
        Ok(s) => s,
        Err(e) => return Verdict::error(e),
    };
    let flux = match continuity(&te) {
        Ok((_, f)) => f,
        Err(e) => return Verdict::error(e),
    };
    pass &= wall <= 1e-12 && cont <= 1e-10 && flux <= 1e-8;
    detail.push(format!("TM walls {wall:.2e}, TM continuity {cont:.2e}, TE flux {flux:.2e}"));
    Verdict::new(pass, detail.join("; "))
}

/// Largest TM field on walls and bottom relative to the cavity maximum.
fn boundary_ratio(s: &Solved) -> cavity_core::Result<f64> {
    let ev = FieldEvaluator::new(&s.spec, &s.tables, &s.solution);
    let map = field_grid(s, 41, 41)?;
    let mut worst: f64 = 0.0;
    for (k, cav) in s.spec.cavities.iter().enumerate() {
        let max = map.points.iter().filter(|p| p.cavity == k).map(|p| p.value.norm()).fold(0.0, f64::max);
        for i in 0..=40 {
            let t = i as f64 / 40.0;
            for (x, y) in [(cav.a, -t * cav.depth()), (cav.b, -t * cav.depth()), (cav.a + t * cav.width(), -cav.depth())] {
                worst = worst.max(ev.value(k, x, y)?.norm() / max);
            }
        }
    }
    Ok(worst)
}

/// Relative jumps of the value and of the weighted flux across interfaces.
fn continuity(s: &Solved) -> cavity_core::Result<(f64, f64)> {
    let ev = FieldEvaluator::new(&s.spec, &s.tables, &s.solution);
    let (mut value, mut flux): (f64, f64) = (0.0, 0.0);
    for (k, cav) in s.spec.cavities.iter().enumerate() {
        for l in 0..cav.layers.len() - 1 {
            let y = cav.layers[l].y_bottom;
            let (k1, k2) = (cav.layers[l].kappa, cav.layers[l + 1].kappa);
            for t in [0.13, 0.5, 0.77] {
                let x = cav.a + t * cav.width();
                let (u1, d1) = ev.value_in_layer(k, l, x, y)?;
                let (u2, d2) = ev.value_in_layer(k, l + 1, x, y)?;
                value = value.max((u1 - u2).norm() / u1.norm().max(u2.norm()));
                let (f1, f2) = (d1 / (k1 * k1), d2 / (k2 * k2));
                flux = flux.max((f1 - f2).norm() / f1.norm().max(f2.norm()));
            }
        }
    }
    Ok((value, flux))
}

fn local_maxima(kappas: &[f64], q: &[f64]) -> Vec<f64> {
    (1..q.len().saturating_sub(1)).filter(|&i| q[i] > q[i - 1] && q[i] > q[i + 1]).map(|i| kappas[i]).collect()
}

fn steps(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    angle_grid(lo, hi, ((hi - lo) / h).round() as usize + 1)
}

fn criterion_7() -> Verdict {
    let mut pass = true;
    let mut detail = Vec::new();

    let single = match enhancement_sweep(&scenarios::single_enhancement(1.0), &steps(0.3, 9.0, 0.01)) {
        Ok(s) => s,
        Err(e) => return Verdict::error(e),
    };
    let q: Vec<f64> = single.q_e.iter().map(|r| r[0]).collect();
    let peaks = local_maxima(&single.kappas, &q);
    for n in 0..3 {
        let target = PI / 2.0 + n as f64 * PI;
        let nearest = peaks.iter().copied().min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()));
        match nearest {
            Some(p) => {
                let off = (p - target) / target;
                pass &= off.abs() <= 0.05;
                detail.push(format!("n={n} peak {p:.3} vs {target:.3} ({:+.1}%)", 100.0 * off));
            }
            None => {
                pass = false;
                detail.push(format!("n={n} no peak"));
            }
        }
    }

    let kappas = steps(0.2, 3.2, 0.005);
    let (iso, pair) = match (
        enhancement_sweep(&scenarios::isolated_enhancement(1.0), &kappas),
        enhancement_sweep(&scenarios::paired_enhancement(1.0), &kappas),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Verdict::error(e),
    };
    let q_iso: Vec<f64> = iso.q_e.iter().map(|r| r[0]).collect();
    let Some(i_max) = (0..q_iso.len()).max_by(|&a, &b| q_iso[a].total_cmp(&q_iso[b])) else {
        return Verdict::new(false, "empty isolated sweep");
    };
    let res = iso.kappas[i_max];
    let in_window = |k: &f64| (*k - res).abs() <= 0.3 * res;
    let iso_peaks = local_maxima(&iso.kappas, &q_iso).into_iter().filter(in_window).count();
    let pair_peaks: Vec<usize> = (0..2)
        .map(|k| {
            let q: Vec<f64> = pair.q_e.iter().map(|r| r[k]).collect();
            local_maxima(&pair.kappas, &q).into_iter().filter(in_window).count()
        })
        .collect();
    pass &= iso_peaks == 1 && pair_peaks.contains(&2);
    detail.push(format!("isolated resonance {res:.3}: isolated {iso_peaks} peak(s), pair {pair_peaks:?} peaks"));
    Verdict::new(pass, detail.join("; "))
}

fn criterion_8() -> Verdict {
    let angles = angle_grid(PI / 360.0, PI * 359.0 / 360.0, 181);
    let mut pass = true;
    let mut detail = Vec::new();
    for lossy in [false, true] {
        let (a, b) = match (
            backscatter_sweep(&scenarios::radar_cross_section(150, lossy), &angles),
            backscatter_sweep(&scenarios::radar_cross_section(200, lossy), &angles),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return Verdict::error(e),
        };
        let change = a.sigma.iter().zip(&b.sigma).map(|(x, y)| (x - y).abs() / y.abs()).fold(0.0, f64::max);
        let peak = b.sigma.iter().copied().fold(0.0, f64::max);
        let edge = match backscatter_sweep(&scenarios::radar_cross_section(200, lossy), &[1e-6, PI - 1e-6]) {
            Ok(s) => s.sigma.iter().copied().fold(0.0, f64::max) / peak,
            Err(e) => return Verdict::error(e),
        };
        pass &= change < 0.01 && edge < 1e-9 && a.sigma.iter().all(|s| s.is_finite() && *s >= 0.0);
        let name = if lossy { "lossy" } else { "empty" };
        detail.push(format!("{name}: max change {:.3}%, grazing/peak {edge:.1e}", 100.0 * change));
    }
    Verdict::new(pass, detail.join("; "))
}

fn criterion_9() -> Verdict {
    let mut pass = true;
    let mut detail = Vec::new();
    for pol in [Polarization::TM, Polarization::TE] {
        let start = Instant::now();
        let (coarse, fine) = match (
            solve_spec(&scenarios::multiple_cavities(pol, 80)),
            solve_spec(&scenarios::multiple_cavities(pol, 160)),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return Verdict::error(format!("{pol}: {e}")),
        };
        let mut l2: f64 = 0.0;
        let mut max_norm: f64 = 0.0;
        for k in 0..3 {
            let (a, b) = match (diagonal_trace(&coarse, k, 200), diagonal_trace(&fine, k, 200)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => return Verdict::error(e),
            };
            let ua: Vec<f64> = a.points.iter().map(|p| p.value.norm()).collect();
            let ub: Vec<f64> = b.points.iter().map(|p| p.value.norm()).collect();
            let diff: f64 = ua.iter().zip(&ub).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let norm: f64 = ub.iter().map(|y| y * y).sum::<f64>().sqrt();
            l2 = l2.max(diff / norm);
            let top = ub.iter().copied().fold(0.0, f64::max);
            max_norm = max_norm.max(ua.iter().zip(&ub).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / top);
        }
        let t = start.elapsed();
        pass &= l2 < 0.01 && t <= Duration::from_secs(60);
        detail.push(format!(
            "{pol}: L2 change {:.3}% (max-norm {:.2}%), {:.1}s",
            100.0 * l2,
            100.0 * max_norm,
            t.as_secs_f64()
        ));
    }
    Verdict::new(pass, detail.join("; "))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_all(out: &Path) -> Result<(), String> {
    let cfg = configs();
    let spec = |name: &str| cfg.join(name).display().to_string();
    let runs: Vec<Vec<String>> = vec![
        vec!["solve".into(), "--spec".into(), spec("example1_tm.json")],
        vec!["field".into(), "--spec".into(), spec("example4_te.json"), "--grid".into(), "9".into(), "7".into()],
        vec!["rcs".into(), "--spec".into(), spec("example2_lossy.json"), "--angles".into(), "37".into()],
        vec![
            "enhance".into(),
            "--spec".into(),
            spec("example3_pair.json"),
            "--kappa-min".into(),
            "0.8".into(),
            "--kappa-max".into(),
            "1.1".into(),
            "--kappa-steps".into(),
            "7".into(),
        ],
        vec!["convergence".into(), "--spec".into(), spec("example1_te.json"), "--levels".into(), "4".into()],
        vec!["validate".into()],
    ];
    for args in runs {
        let dir = out.join(&args[0]);
        let status = Command::new(env!("CARGO_BIN_EXE_cavity"))
            .args(&args)
            .arg("--out")
            .arg(&dir)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("{} failed: {}", args[0], String::from_utf8_lossy(&status.stderr)));
        }
    }
    Ok(())
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).into_iter().flatten().flatten() {
        let p = entry.path();
        if p.is_dir() {
            out.extend(files(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn criterion_10() -> Verdict {
    let (Ok(a), Ok(b)) = (tempfile::tempdir(), tempfile::tempdir()) else {
        return Verdict::new(false, "no temporary directory");
    };
    for dir in [a.path(), b.path()] {
        if let Err(e) = run_all(dir) {
            return Verdict::error(e);
        }
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    let rel_a: Vec<_> = fa.iter().map(|p| p.strip_prefix(a.path()).unwrap().to_path_buf()).collect();
    let rel_b: Vec<_> = fb.iter().map(|p| p.strip_prefix(b.path()).unwrap().to_path_buf()).collect();
    if rel_a != rel_b {
        return Verdict::new(false, "different output file sets");
    }
    let differing: Vec<String> = rel_a
        .iter()
        .zip(fa.iter().zip(&fb))
        .filter(|(_, (x, y))| std::fs::read(x).ok() != std::fs::read(y).ok())
        .map(|(r, _)| r.display().to_string())
        .collect();
    Verdict::new(
        differing.is_empty() && rel_a.len() >= 13,
        format!("{} files compared across 6 subcommands, differing: {differing:?}", rel_a.len()),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("convergence order", criterion_1),
        ("parity", criterion_2),
        ("oracle equivalence", criterion_3),
        ("algebraic identities", criterion_4),
        ("connection solver", criterion_5),
        ("PDE and boundary fidelity", criterion_6),
        ("enhancement resonances", criterion_7),
        ("radar cross section", criterion_8),
        ("three-cavity refinement", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        println!("criterion {:>2} {:<26} {}  {}", i + 1, name, if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
