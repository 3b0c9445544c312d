use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use pumped_core::dynamics::{
    entropy, integrate_direct_at, positivity_monitor, propagate_spectral, steady_state, EntropySign,
};
use pumped_core::ensemble::{accumulate_for_model, stencil_times, verify_master_equation};
use pumped_core::linalg::{ComplexVector, C64};
use pumped_core::model::{build_superoperator, validate, DensityMatrix};
use pumped_core::spectral::{build_metric, decompose_default, verify_similarity};
use pumped_core::twolevel::{
    analytic_population_difference, reference_cases, population_difference, to_model,
    to_reversed_order, PARAM_NAMES,
};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::format::{complex, num, row};

pub const ENSEMBLE_THRESHOLD: f64 = 1e-4;
pub const FIXTURE_EIGENVALUE_TOL: f64 = 1e-3;
pub const FIXTURE_STEADY_STATE_TOL: f64 = 1e-6;

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn trajectory_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for i in 1..=n {
        for j in 1..=n {
            h.push(format!("rho_{i}_{j}_re"));
            h.push(format!("rho_{i}_{j}_im"));
        }
    }
    h.push("total_population".into());
    for i in 1..=n {
        for j in i + 1..=n {
            h.push(format!("abs_coherence_{i}_{j}"));
        }
    }
    h
}

fn trajectory_row(t: f64, rho: &DensityMatrix) -> Vec<String> {
    let n = rho.dim();
    let mut r = vec![num(t)];
    for i in 0..n {
        for j in 0..n {
            let z = rho.get(i, j);
            r.push(num(z.re));
            r.push(num(z.im));
        }
    }
    r.push(num(rho.total_population()));
    for i in 0..n {
        for j in i + 1..n {
            r.push(num(rho.get(i, j).norm()));
        }
    }
    r
}

/// Writes `trajectory.csv`, `lyapunov.csv` and `method_delta.csv`.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let l = build_superoperator(&cfg.model)?;
    let dec = decompose_default(&l)?;
    let metric = build_metric(&dec)?;
    let rho0 = steady_state(&l, cfg.model.pump())?;
    let times = cfg.times();

    let spectral = propagate_spectral(&dec, &rho0, &cfg.init, &times)?.with_lyapunov(&metric, &rho0)?;
    let direct = integrate_direct_at(&l, cfg.model.pump(), &cfg.init, cfg.dt, &times)?;
    let deltas = spectral.max_deviation(&direct)?;

    let mut traj = row(&trajectory_header(cfg.levels()));
    for (&t, s) in times.iter().zip(spectral.states()) {
        traj.push_str(&row(&trajectory_row(t, s)));
    }

    let raw = spectral.lyapunov_values().expect("attached above");
    let normalized = spectral.normalized_lyapunov().expect("attached above");
    let mut lyap = row(&["t".into(), "m_omega_normalized".into(), "s_omega".into()]);
    for ((&t, &m), &mn) in times.iter().zip(raw).zip(&normalized) {
        let s = entropy(m, EntropySign::Minus).unwrap_or(f64::NAN);
        lyap.push_str(&row(&[num(t), num(mn), num(s)]));
    }

    let mut delta = row(&["t".into(), "max_abs_delta".into()]);
    for (&t, &d) in times.iter().zip(&deltas) {
        delta.push_str(&row(&[num(t), num(d)]));
    }

    let paths = [
        write_file(out, "trajectory.csv", &traj)?,
        write_file(out, "lyapunov.csv", &lyap)?,
        write_file(out, "method_delta.csv", &delta)?,
    ];

    let last = spectral.last().expect("at least two samples");
    let positivity = positivity_monitor(&spectral);
    let mut report = String::new();
    for p in &paths {
        writeln!(report, "wrote {}", p.display()).unwrap();
    }
    writeln!(report, "samples            {}", times.len()).unwrap();
    writeln!(report, "final population   {}", num(last.total_population())).unwrap();
    writeln!(report, "steady population  {}", num(rho0.total_population())).unwrap();
    writeln!(
        report,
        "max method delta   {}",
        num(deltas.iter().copied().fold(0.0, f64::max))
    )
    .unwrap();
    writeln!(report, "final M_omega/M(0) {}", num(*normalized.last().unwrap())).unwrap();
    if positivity.is_clean() {
        writeln!(report, "populations        nonnegative").unwrap();
    } else {
        let v = &positivity.violations[0];
        writeln!(
            report,
            "populations        {} negative samples, first at t = {} (level {}, {})",
            positivity.violations.len(),
            num(v.time),
            v.level + 1,
            num(v.value)
        )
        .unwrap();
    }
    Ok(report)
}

pub fn spectrum(cfg: &RunConfig) -> Result<String, CliError> {
    let mut report = String::new();
    let checks = validate(&cfg.model);
    writeln!(report, "validation").unwrap();
    for line in checks.to_string().lines() {
        writeln!(report, "  {line}").unwrap();
    }

    let l = build_superoperator(&cfg.model)?;
    let dec = decompose_default(&l)?;
    let metric = build_metric(&dec)?;
    let rho0 = steady_state(&l, cfg.model.pump())?;
    let sim = verify_similarity(&l, &dec, &metric);

    writeln!(report, "eigenvalues").unwrap();
    for (k, z) in dec.eigenvalues().iter().enumerate() {
        writeln!(report, "  {:>2}  {}", k + 1, complex(*z)).unwrap();
    }
    let n = cfg.levels();
    writeln!(report, "steady state (row-major rho_ij)").unwrap();
    let v = rho0.vectorize();
    for (k, z) in v.iter().enumerate() {
        writeln!(report, "  rho_{}_{}  {}", k / n + 1, k % n + 1, complex(*z)).unwrap();
    }
    if n == 2 {
        writeln!(report, "steady state (rho_22, rho_21, rho_12, rho_11)").unwrap();
        for z in to_reversed_order(&v).iter() {
            writeln!(report, "  {}", complex(*z)).unwrap();
        }
    }
    writeln!(report, "similarity residual        {}", num(sim.similarity)).unwrap();
    writeln!(report, "rearranged similarity      {}", num(sim.rearranged)).unwrap();
    writeln!(report, "biorthonormality residual  {}", num(dec.biorthonormality_residual())).unwrap();
    writeln!(report, "completeness residual      {}", num(dec.completeness_residual())).unwrap();
    writeln!(report, "metric inverse residual    {}", num(metric.inverse_residual())).unwrap();
    Ok(report)
}

/// Evenly spaced grid including both end points.
pub fn grid(from: f64, to: f64, steps: usize) -> Vec<f64> {
    let last = (steps - 1) as f64;
    (0..steps)
        .map(|k| if k + 1 == steps { to } else { from + (to - from) * k as f64 / last })
        .collect()
}

/// Writes `sweep.csv`. Points are solved in parallel; rows come out in grid
/// order and the first failing point (in grid order) aborts the sweep.
pub fn sweep(cfg: &RunConfig, param: &str, from: f64, to: f64, steps: usize, out: &Path) -> Result<String, CliError> {
    if !PARAM_NAMES.contains(&param) {
        return Err(CliError::Usage(format!(
            "unknown parameter `{param}` (expected one of {})",
            PARAM_NAMES.join(", ")
        )));
    }
    if steps < 2 {
        return Err(CliError::Usage(format!("--steps must be at least 2, got {steps}")));
    }
    if !(from.is_finite() && to.is_finite()) {
        return Err(CliError::Usage("--from and --to must be finite".into()));
    }
    if cfg.two_level.is_none() {
        return Err(CliError::Usage("sweep needs a config written with the two-level keys".into()));
    }

    let values = grid(from, to, steps);
    let rows: Vec<Result<[f64; 4], CliError>> = values
        .par_iter()
        .map(|&x| {
            sweep_point(cfg, param, x).map_err(|e| CliError::AtPoint {
                param: param.to_string(),
                value: x,
                source: Box::new(e),
            })
        })
        .collect();

    let mut csv = row(&[
        "value".into(),
        "population_difference".into(),
        "analytic".into(),
        "abs_deviation".into(),
    ]);
    let mut worst: f64 = 0.0;
    for r in rows {
        let r = r?;
        if r[3].is_finite() {
            worst = worst.max(r[3]);
        }
        csv.push_str(&row(&r.map(num)));
    }
    let path = write_file(out, "sweep.csv", &csv)?;
    Ok(format!(
        "wrote {}\nswept {param} over {steps} points\nmax analytic deviation {}\n",
        path.display(),
        num(worst)
    ))
}

fn sweep_point(cfg: &RunConfig, param: &str, x: f64) -> Result<[f64; 4], CliError> {
    let point = cfg.with_parameter(param, x)?;
    let p = point.two_level.expect("two-level config");
    let model = &point.model;
    let l = build_superoperator(model)?;
    let d = population_difference(&steady_state(&l, model.pump())?);
    let analytic = if p.pump_21 == C64::new(0.0, 0.0) {
        analytic_population_difference(&p).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    Ok([x, d, analytic, (d - analytic).abs()])
}

/// Residual of the accumulated ensemble against the master equation at step
/// `q` and `q/2`; fails with [`CliError::Threshold`] above
/// [`ENSEMBLE_THRESHOLD`].
pub fn ensemble_verify(cfg: &RunConfig, quad_step: f64) -> Result<String, CliError> {
    if !(quad_step > 0.0 && quad_step.is_finite()) {
        return Err(CliError::Usage(format!("--quad-step must be positive, got {quad_step}")));
    }
    let centers: Vec<f64> = (0..=4).map(|k| cfg.t_end * k as f64 / 4.0).collect();
    let residual = |q: f64| -> Result<f64, CliError> {
        let res = accumulate_for_model(&cfg.model, &stencil_times(&centers, q), q)?;
        Ok(verify_master_equation(&res, &cfg.model)?)
    };
    let coarse = residual(quad_step)?;
    let fine = residual(0.5 * quad_step)?;
    let ratio = if fine > 0.0 { coarse / fine } else { f64::NAN };
    let pass = coarse <= ENSEMBLE_THRESHOLD;
    let report = format!(
        "quad step {}   residual {}\nquad step {}   residual {}\nrefinement ratio {}\nthreshold {}   {}\n",
        num(quad_step),
        num(coarse),
        num(0.5 * quad_step),
        num(fine),
        num(ratio),
        num(ENSEMBLE_THRESHOLD),
        if pass { "PASS" } else { "FAIL" }
    );
    if pass {
        Ok(report)
    } else {
        Err(CliError::Threshold {
            message: format!("ensemble residual {} exceeds {}", num(coarse), num(ENSEMBLE_THRESHOLD)),
            report,
        })
    }
}

/// Nearest-match distance between two eigenvalue lists of equal length.
fn eigenvalue_mismatch(printed: &[C64], computed: &[C64]) -> f64 {
    let mut pool = computed.to_vec();
    let mut worst: f64 = 0.0;
    for z in printed {
        let (k, d) = pool
            .iter()
            .enumerate()
            .map(|(k, w)| (k, (w - z).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("lists have equal length");
        worst = worst.max(d);
        pool.remove(k);
    }
    worst
}

/// Recomputes the bundled reference cases and compares them with the
/// printed values.
pub fn fixtures(out: Option<&Path>) -> Result<String, CliError> {
    let mut report = format!(
        "{:>4}  {:>18}  {:>18}  {}\n",
        "case", "max |d rho0|", "max |d lambda|", "status"
    );
    let mut csv = row(&[
        "case".into(),
        "max_steady_state_delta".into(),
        "max_eigenvalue_delta".into(),
        "pass".into(),
    ]);
    let mut failed = Vec::new();
    for f in reference_cases() {
        let model = to_model(&f.params)?;
        let l = build_superoperator(&model)?;
        let rho0 = steady_state(&l, model.pump())?;
        let dec = decompose_default(&l)?;
        let printed: ComplexVector = f.steady_state.iter().copied().collect();
        let d_rho = (&to_reversed_order(&rho0.vectorize()) - &printed).max_abs();
        let d_lambda = eigenvalue_mismatch(&f.eigenvalues, dec.eigenvalues());
        let pass = d_rho <= FIXTURE_STEADY_STATE_TOL && d_lambda <= FIXTURE_EIGENVALUE_TOL;
        if !pass {
            failed.push(f.case_id);
        }
        writeln!(
            report,
            "{:>4}  {:>18}  {:>18}  {}",
            f.case_id,
            num(d_rho),
            num(d_lambda),
            if pass { "ok" } else { "FAIL" }
        )
        .unwrap();
        writeln!(report, "      rho0 (rho_22, rho_21, rho_12, rho_11):").unwrap();
        for z in &f.steady_state {
            writeln!(report, "        {}", complex(*z)).unwrap();
        }
        writeln!(report, "      eigenvalues:").unwrap();
        for z in &f.eigenvalues {
            writeln!(report, "        {}", complex(*z)).unwrap();
        }
        csv.push_str(&row(&[
            f.case_id.to_string(),
            num(d_rho),
            num(d_lambda),
            pass.to_string(),
        ]));
    }
    if let Some(dir) = out {
        let path = write_file(dir, "fixtures.csv", &csv)?;
        writeln!(report, "wrote {}", path.display()).unwrap();
    }
    if failed.is_empty() {
        Ok(report)
    } else {
        Err(CliError::Threshold {
            report,
            message: format!("cases {failed:?} outside tolerance"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_hits_end_points() {
        let g = grid(0.01, 50.0, 7);
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[6], 50.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn header_for_two_levels() {
        assert_eq!(
            trajectory_header(2).join(","),
            "t,rho_1_1_re,rho_1_1_im,rho_1_2_re,rho_1_2_im,rho_2_1_re,rho_2_1_im,rho_2_2_re,rho_2_2_im,total_population,abs_coherence_1_2"
        );
        assert_eq!(trajectory_header(3).len(), 1 + 18 + 1 + 3);
    }

    #[test]
    fn eigenvalue_matching_is_one_to_one() {
        let a = [C64::new(-1.0, 0.0), C64::new(-1.0, 0.0)];
        let b = [C64::new(-1.0, 0.0), C64::new(-2.0, 0.0)];
        assert_eq!(eigenvalue_mismatch(&a, &b), 1.0);
    }
}
