//! One function per subcommand. Each reads its inputs, writes its CSV
//! outputs and finally the manifest.

use std::fmt::Write as _;
use std::path::Path;

use cavity_core::assembly::{solve_spec, Solved};
use cavity_core::model::{self, load_spec, spec_to_json, ProblemSpec};
use cavity_core::oracle::{
    block_check, block_grid, connection_suite, even_block_scale, fd_interior_check, parity_cases, parity_check,
    OracleReport, DEFAULT_TOL,
};
use cavity_core::postprocess::{
    angle_grid, backscatter_sweep, convergence_csv, diagonal_trace, enhancement_csv, enhancement_sweep, field_grid,
    fmt_f64, grid_csv, self_convergence, sweep_csv, FieldMap,
};
use cavity_core::{scenarios, Error};
use cavity_core::model::{Polarization, QuadratureConfig};
use serde_json::Value;

use crate::output::{CliError, CliResult, RunManifest};
use crate::{Common, Profile};

pub enum Outcome {
    Success,
    ValidationFailed,
}

/// Loads and validates the scenario file, prefixing any error with the file name.
fn load(common: &Common) -> CliResult<ProblemSpec> {
    let path = common.spec.display().to_string();
    let spec = load_spec(&common.spec).and_then(|s| model::validate(&s)).map_err(|e| match CliError::from(e) {
        CliError::Input(m) if !m.contains(&path) => CliError::Input(format!("{path}: {m}")),
        e => e,
    })?;
    Ok(spec)
}

fn manifest(name: &str, common: &Common, spec: &ProblemSpec) -> RunManifest {
    let mut m = RunManifest::new(name, &common.out, common.timing);
    m.spec_path = Some(common.spec.display().to_string());
    m.spec = serde_json::from_str(&spec_to_json(spec)).ok();
    m
}

fn record_solution(m: &mut RunManifest, solved: &Solved) {
    let sol = &solved.solution;
    m.diagnostic("rcond", sol.rcond);
    m.diagnostic("system_size", sol.layout.dim());
    m.diagnostic("modes_per_cavity", sol.layout.modes_per_cavity);
    m.diagnostic("cavities", solved.spec.cavities.len());
    if let Some(w) = &sol.warning {
        m.diagnostic("warning", w.as_str());
    }
}

fn coefficients_csv(solved: &Solved) -> String {
    let sol = &solved.solution;
    let mut s = String::from("cavity,mode,re_u0,im_u0\n");
    for (k, row) in sol.coefficients.iter().enumerate() {
        for (n, c) in sol.layout.modes().zip(row) {
            let _ = writeln!(s, "{},{},{},{}", k + 1, n, fmt_f64(c.re), fmt_f64(c.im));
        }
    }
    s
}

pub fn solve(common: &Common) -> CliResult<Outcome> {
    let spec = load(common)?;
    let mut m = manifest("solve", common, &spec);
    let solved = solve_spec(&spec)?;
    record_solution(&mut m, &solved);
    m.emit("coefficients.csv", &coefficients_csv(&solved))?;
    m.finish()?;
    Ok(Outcome::Success)
}

pub fn field(common: &Common, nx: usize, ny: usize, diagonal: usize) -> CliResult<Outcome> {
    if nx < 1 || ny < 1 {
        return Err(CliError::flag("grid", "NX and NY must be at least 1"));
    }
    if diagonal < 1 {
        return Err(CliError::flag("diagonal", "must be at least 1"));
    }
    let spec = load(common)?;
    let mut m = manifest("field", common, &spec);
    m.option("grid", vec![nx, ny]);
    m.option("diagonal", diagonal);
    let solved = solve_spec(&spec)?;
    record_solution(&mut m, &solved);
    let grid = field_grid(&solved, nx, ny)?;
    let mut diag = FieldMap::default();
    for k in 0..spec.cavities.len() {
        diag.points.extend(diagonal_trace(&solved, k, diagonal)?.points);
    }
    m.diagnostic("max_abs_u", grid.max_abs());
    m.emit("field.csv", &grid_csv(&grid))?;
    m.emit("diagonal.csv", &grid_csv(&diag))?;
    m.finish()?;
    Ok(Outcome::Success)
}

pub fn rcs(common: &Common, angles: usize, phi_min: f64, phi_max: f64) -> CliResult<Outcome> {
    if angles < 1 {
        return Err(CliError::flag("angles", "must be at least 1"));
    }
    let inside = |p: f64| p > 0.0 && p < std::f64::consts::PI;
    if !(inside(phi_min) && inside(phi_max) && phi_min <= phi_max) {
        return Err(CliError::flag("phi-min/--phi-max", "need 0 < phi-min <= phi-max < pi"));
    }
    let spec = load(common)?;
    if spec.polarization != Polarization::TM {
        return Err(Error::UnsupportedPolarization(format!("rcs needs TM, spec is {}", spec.polarization)).into());
    }
    let mut m = manifest("rcs", common, &spec);
    m.option("angles", angles);
    m.option("phi_min", phi_min);
    m.option("phi_max", phi_max);
    let sweep = backscatter_sweep(&spec, &angle_grid(phi_min, phi_max, angles))?;
    m.diagnostic("system_size", spec.cavities.len() * spec.modes_per_cavity());
    m.emit("rcs.csv", &sweep_csv(&sweep))?;
    m.finish()?;
    Ok(Outcome::Success)
}

pub fn enhance(
    common: &Common,
    kappa_min: f64,
    kappa_max: f64,
    steps: usize,
    cavity: Option<usize>,
) -> CliResult<Outcome> {
    if !(kappa_min > 0.0 && kappa_min <= kappa_max && kappa_max.is_finite()) {
        return Err(CliError::flag("kappa-min/--kappa-max", "need 0 < kappa-min <= kappa-max"));
    }
    if steps < 1 {
        return Err(CliError::flag("kappa-steps", "must be at least 1"));
    }
    let spec = load(common)?;
    if let Some(k) = cavity {
        if k < 1 || k > spec.cavities.len() {
            return Err(CliError::flag("cavity", format!("must lie in 1..={}", spec.cavities.len())));
        }
    }
    let mut m = manifest("enhance", common, &spec);
    m.option("kappa_min", kappa_min);
    m.option("kappa_max", kappa_max);
    m.option("kappa_steps", steps);
    m.option("cavity", cavity.map_or(Value::Null, Value::from));
    let mut sweep = enhancement_sweep(&spec, &angle_grid(kappa_min, kappa_max, steps))?;
    if let Some(k) = cavity {
        for row in &mut sweep.q_e {
            *row = vec![row[k - 1]];
        }
    }
    let skipped: Vec<Value> =
        sweep.skipped.iter().map(|(k, why)| serde_json::json!({ "kappa": k, "reason": why })).collect();
    m.diagnostic("skipped", skipped);
    let mut csv = enhancement_csv(&sweep);
    if let Some(k) = cavity {
        // name the column after the selected cavity
        csv = csv.replacen("Q_E_1", &format!("Q_E_{k}"), 1);
    }
    m.emit("enhancement.csv", &csv)?;
    m.finish()?;
    Ok(Outcome::Success)
}

pub fn convergence(common: &Common, levels: usize) -> CliResult<Outcome> {
    if levels < 3 {
        return Err(CliError::flag("levels", "at least three levels are needed"));
    }
    let spec = load(common)?;
    let mut m = manifest("convergence", common, &spec);
    m.option("levels", levels);
    m.option("coarsest_panels", spec.quad.panels);
    let study = self_convergence(&spec, spec.quad.panels, levels)?;
    m.diagnostic("fitted_order", study.fitted_order);
    m.diagnostic("panels", study.panels.clone());
    m.emit("convergence.csv", &convergence_csv(&study))?;
    m.finish()?;
    Ok(Outcome::Success)
}

/// A report together with the bound it has to meet.
struct Checked {
    report: OracleReport,
    tolerance: f64,
    pass: bool,
}

impl Checked {
    fn error_bound(report: OracleReport, tolerance: f64) -> Self {
        let pass = report.rel_err <= tolerance;
        Checked { report, tolerance, pass }
    }
}

fn checked_csv(rows: &[Checked]) -> String {
    let mut s = String::from(
        "suite,case,re_oracle,im_oracle,re_production,im_production,abs_err,rel_err,order,grid,tolerance,pass\n",
    );
    for (suite, c) in rows.iter().map(|c| (suite_of(&c.report.case), c)) {
        let r = &c.report;
        let order = r.order.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(
            s,
            "{suite},{},{},{},{},{},{},{},{order},{},{},{}",
            r.case,
            fmt_f64(r.oracle.re),
            fmt_f64(r.oracle.im),
            fmt_f64(r.production.re),
            fmt_f64(r.production.im),
            fmt_f64(r.abs_err),
            fmt_f64(r.rel_err),
            r.grid,
            fmt_f64(c.tolerance),
            c.pass
        );
    }
    s
}

fn suite_of(case: &str) -> &'static str {
    if case.starts_with("parity_") {
        "parity"
    } else if case.starts_with("block_") {
        "block"
    } else if case.starts_with("stack") {
        "connection"
    } else {
        "fd"
    }
}

/// Runs the oracle suites. `Default` uses reduced case grids, `Strict` the
/// full ones.
pub fn validate(out: &Path, profile: Profile, timing: bool) -> CliResult<Outcome> {
    let mut m = RunManifest::new("validate", out, timing);
    let strict = profile == Profile::Strict;
    let (modes, stacks) = if strict { (10, 200) } else { (4, 20) };
    m.option("tolerance_profile", if strict { "strict" } else { "default" });
    m.option("block_modes", modes);
    m.option("connection_stacks", stacks);

    let cfg = QuadratureConfig::default();
    let mut rows = Vec::new();

    for case in block_grid(1..=modes, &[0.25, 1.0, 4.0]) {
        let r = block_check(case, 1e-8, &cfg)?;
        rows.push(Checked::error_bound(r, 1e-8));
    }

    for case in parity_cases() {
        let scale = even_block_scale(case.c, 12, &cfg)?;
        let mut r = parity_check(case, 1e-10 * scale, &cfg)?;
        r.case = format!("parity_{}", r.case);
        // measured against the even-sum magnitude at the same scale
        r.rel_err = r.oracle.norm().max(r.production.norm()) / scale;
        rows.push(Checked::error_bound(r, 1e-9));
    }

    for r in connection_suite(stacks, 2024) {
        rows.push(Checked::error_bound(r, 1e-12));
    }

    for pol in [Polarization::TM, Polarization::TE] {
        let solved = solve_spec(&scenarios::order_of_accuracy(pol))?;
        let mut r = fd_interior_check(&solved, &[1e-2, 5e-3, 2.5e-3], 6, 7)?;
        r.case = format!("fd_example1_{pol}");
        let pass = r.order.is_some_and(|p| p >= 1.9);
        rows.push(Checked { report: r, tolerance: 1.9, pass });
    }

    let failed: Vec<&str> = rows.iter().filter(|c| !c.pass).map(|c| c.report.case.as_str()).collect();
    m.diagnostic("cases", rows.len());
    m.diagnostic("failed", failed.clone());
    m.diagnostic("default_oracle_tol", DEFAULT_TOL);
    m.emit("oracle_reports.csv", &checked_csv(&rows))?;
    m.finish()?;
    if failed.is_empty() {
        Ok(Outcome::Success)
    } else {
        for case in &failed {
            eprintln!("failed: {case}");
        }
        Ok(Outcome::ValidationFailed)
    }
}
