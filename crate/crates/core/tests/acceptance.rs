//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use pumped_core::dynamics::{integrate_direct_at, propagate_spectral, steady_state};
use pumped_core::ensemble::{accumulate_for_model, stencil_times, verify_master_equation};
use pumped_core::linalg::C64;
use pumped_core::model::{build_superoperator, DensityMatrix, ModelSpec, Superoperator};
use pumped_core::spectral::{
    build_metric, conjugate_pair_orthogonality, decompose_default, reconstruct, verify_similarity,
};
use pumped_core::twolevel::{
    analytic_population_difference, reference_cases, eta_squared, gamma2_zero_limit_difference,
    population_difference, to_model, TwoLevelParams,
};

type Outcome = Result<String, String>;

struct Gate {
    failures: usize,
}

impl Gate {
    fn run(&mut self, id: u32, name: &str, limit: Duration, check: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (mut passed, mut detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        if elapsed > limit {
            passed = false;
            detail = format!("{detail}; runtime over limit");
        }
        if !passed {
            self.failures += 1;
        }
        println!(
            "criterion {id:>2} {} {name}: {detail} [{:.3} s, limit {} s]",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fixture_models() -> Vec<(u32, TwoLevelParams, ModelSpec, Superoperator)> {
    reference_cases()
        .into_iter()
        .map(|f| {
            let model = to_model(&f.params).expect("fixture parameters are valid");
            let l = build_superoperator(&model).expect("fixture models validate");
            (f.case_id, f.params, model, l)
        })
        .collect()
}

fn eigenvalue_regression() -> Outcome {
    let mut worst: f64 = 0.0;
    for f in reference_cases() {
        let l = build_superoperator(&to_model(&f.params).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let dec = decompose_default(&l).map_err(|e| format!("case {}: {e}", f.case_id))?;
        let mut unused: Vec<C64> = dec.eigenvalues().to_vec();
        for printed in f.eigenvalues {
            let (k, d) = unused
                .iter()
                .enumerate()
                .map(|(k, z)| (k, (z - printed).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .ok_or("eigenvalue count mismatch")?;
            unused.remove(k);
            worst = worst.max(d);
        }
    }
    verdict(worst <= 1e-3, format!("max |Δλ| = {worst:.2e} (tol 1e-3)"))
}

fn steady_state_regression() -> Outcome {
    let mut worst: f64 = 0.0;
    for f in reference_cases() {
        let model = to_model(&f.params).map_err(|e| e.to_string())?;
        let l = build_superoperator(&model).map_err(|e| e.to_string())?;
        let rho0 = steady_state(&l, model.pump()).map_err(|e| e.to_string())?;
        let d = (&rho0.vectorize() - &f.steady_state_canonical()).max_abs();
        worst = worst.max(d);
    }
    verdict(worst <= 1e-6, format!("max element error = {worst:.2e} (tol 1e-6)"))
}

fn closed_form_cross_check() -> Outcome {
    let mut rng = common::rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = common::random_two_level(&mut rng);
        let model = to_model(&p).map_err(|e| e.to_string())?;
        let l = build_superoperator(&model).map_err(|e| e.to_string())?;
        let solved = population_difference(&steady_state(&l, model.pump()).map_err(|e| e.to_string())?);
        let closed = analytic_population_difference(&p).map_err(|e| e.to_string())?;
        let scale = solved.abs().max(closed.abs());
        let rel = if scale == 0.0 { 0.0 } else { (solved - closed).abs() / scale };
        worst = worst.max(rel);
    }
    verdict(worst <= 1e-10, format!("100 draws, max relative error = {worst:.2e} (tol 1e-10)"))
}

fn gamma2_zero_limit() -> Outcome {
    let printed = [(1, 0.0625), (2, 0.3125)];
    let mut worst: f64 = 0.0;
    for (case, expected) in printed {
        let f = reference_cases()
            .into_iter()
            .find(|f| f.case_id == case)
            .ok_or("missing fixture")?;
        let model = to_model(&f.params).map_err(|e| e.to_string())?;
        let l = build_superoperator(&model).map_err(|e| e.to_string())?;
        let solved = population_difference(&steady_state(&l, model.pump()).map_err(|e| e.to_string())?);
        let limit = gamma2_zero_limit_difference(&f.params).map_err(|e| e.to_string())?;
        worst = worst.max((solved - limit).abs()).max((solved - expected).abs());
    }
    verdict(worst <= 1e-9, format!("cases 1-2, max |Δ| = {worst:.2e} (tol 1e-9)"))
}

fn lyapunov_monotonicity() -> Outcome {
    let times: Vec<f64> = (0..2000).map(|k| 20.0 * k as f64 / 1999.0).collect();
    let mut worst_rise: f64 = 0.0;
    let mut worst_tail: f64 = 0.0;
    for f in reference_cases() {
        let model = to_model(&f.params).map_err(|e| e.to_string())?;
        let l = build_superoperator(&model).map_err(|e| e.to_string())?;
        let rho0 = steady_state(&l, model.pump()).map_err(|e| e.to_string())?;
        let dec = decompose_default(&l).map_err(|e| e.to_string())?;
        let metric = build_metric(&dec).map_err(|e| e.to_string())?;
        let traj = propagate_spectral(&dec, &rho0, &f.initial.density_matrix(2), &times)
            .and_then(|t| t.with_lyapunov(&metric, &rho0))
            .map_err(|e| e.to_string())?;
        let m = traj.normalized_lyapunov().ok_or("missing Lyapunov values")?;
        if m[0] == 0.0 {
            return Err(format!("case {} starts at the steady state", f.case_id));
        }
        for w in m.windows(2) {
            worst_rise = worst_rise.max(w[1] - w[0]);
        }
        worst_tail = worst_tail.max(*m.last().unwrap());
    }
    verdict(
        worst_rise <= 1e-10 && worst_tail <= 1e-6,
        format!(
            "4 cases x 2000 points, max rise = {worst_rise:.2e} (slack 1e-10), max M(20)/M(0) = {worst_tail:.2e} (tol 1e-6)"
        ),
    )
}

fn oracle_gap(model: &ModelSpec, init: &DensityMatrix, times: &[f64]) -> Result<f64, String> {
    let l = build_superoperator(model).map_err(|e| e.to_string())?;
    let rho0 = steady_state(&l, model.pump()).map_err(|e| e.to_string())?;
    let dec = decompose_default(&l).map_err(|e| e.to_string())?;
    let spectral = propagate_spectral(&dec, &rho0, init, times).map_err(|e| e.to_string())?;
    let direct = integrate_direct_at(&l, model.pump(), init, 1e-3, times).map_err(|e| e.to_string())?;
    let gaps = spectral.max_deviation(&direct).map_err(|e| e.to_string())?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

fn oracle_equivalence() -> Outcome {
    let times: Vec<f64> = (0..=400).map(|k| 0.05 * k as f64).collect();
    let mut worst: f64 = 0.0;
    for f in reference_cases() {
        let model = to_model(&f.params).map_err(|e| e.to_string())?;
        worst = worst.max(oracle_gap(&model, &f.initial.density_matrix(2), &times)?);
    }
    let mut rng = common::rng(6);
    for k in 0..20 {
        let (model, n) = match k % 3 {
            0 => (to_model(&common::random_two_level_coherent_pump(&mut rng)).map_err(|e| e.to_string())?, 2),
            1 => (common::random_model(&mut rng, 3), 3),
            _ => (common::random_lifetime_model(&mut rng, 2), 2),
        };
        let init = common::random_density(&mut rng, n);
        worst = worst.max(oracle_gap(&model, &init, &times)?);
    }
    verdict(
        worst <= 1e-6,
        format!("4 cases + 20 random models, max element gap = {worst:.2e} (tol 1e-6)"),
    )
}

fn structural_residuals(l: &Superoperator) -> Result<[f64; 5], String> {
    let dec = decompose_default(l).map_err(|e| e.to_string())?;
    let metric = build_metric(&dec).map_err(|e| e.to_string())?;
    let recon = (reconstruct(&dec).matrix() - l.matrix()).frobenius_norm() / l.matrix().frobenius_norm();
    Ok([
        dec.biorthonormality_residual(),
        dec.completeness_residual(),
        recon,
        verify_similarity(l, &dec, &metric).max(),
        conjugate_pair_orthogonality(&dec, &metric),
    ])
}

fn structural_identities() -> Outcome {
    let mut worst = [0.0f64; 5];
    let mut generators: Vec<Superoperator> = fixture_models().into_iter().map(|(_, _, _, l)| l).collect();
    let mut rng = common::rng(7);
    generators.extend((0..100).map(|_| common::random_stable_generator(&mut rng)));
    for l in &generators {
        for (w, r) in worst.iter_mut().zip(structural_residuals(l)?) {
            *w = w.max(r);
        }
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    verdict(
        max <= 1e-7,
        format!(
            "4 cases + 100 random, biorthonormality {:.1e}, completeness {:.1e}, reconstruction {:.1e}, similarity {:.1e}, conjugate pairs {:.1e} (tol 1e-7)",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

fn eta_bound() -> Outcome {
    let mut rng = common::rng(3);
    let mut lowest = f64::INFINITY;
    for _ in 0..100 {
        let p = common::random_two_level(&mut rng);
        lowest = lowest.min(eta_squared(&p).map_err(|e| e.to_string())?);
    }
    let mut equal = common::random_two_level(&mut rng);
    equal.decay_1 = 1.0;
    equal.decay_2 = 1.0;
    equal.coherence_decay = 1.0;
    let at_equality = eta_squared(&equal).map_err(|e| e.to_string())?;
    verdict(
        lowest >= 4.0 - 1e-12 && (at_equality - 4.0).abs() <= 1e-12,
        format!("min η² = {lowest:.6} over 100 draws, η²(Γ1=Γ2=γ=1) = {at_equality}"),
    )
}

fn ensemble_oracle() -> Outcome {
    let mut models: Vec<(String, ModelSpec)> = Vec::new();
    for (case, p, model, _) in fixture_models() {
        if (p.coherence_decay - 0.5 * (p.decay_1 + p.decay_2)).abs() <= 1e-12 {
            models.push((format!("case {case}"), model));
        }
    }
    let mut rng = common::rng(9);
    for k in 0..3 {
        models.push((format!("random {k}"), common::random_lifetime_model(&mut rng, 2)));
    }
    let centers = [0.0, 0.5, 1.3, 3.0];
    let mut worst: f64 = 0.0;
    let mut worst_ratio = f64::INFINITY;
    let mut best_ratio: f64 = 0.0;
    for (name, model) in &models {
        let coarse = {
            let q = 1e-3;
            let res = accumulate_for_model(model, &stencil_times(&centers, q), q)
                .map_err(|e| format!("{name}: {e}"))?;
            verify_master_equation(&res, model).map_err(|e| format!("{name}: {e}"))?
        };
        let fine = {
            let q = 5e-4;
            let res = accumulate_for_model(model, &stencil_times(&centers, q), q)
                .map_err(|e| format!("{name}: {e}"))?;
            verify_master_equation(&res, model).map_err(|e| format!("{name}: {e}"))?
        };
        worst = worst.max(coarse);
        let ratio = coarse / fine;
        worst_ratio = worst_ratio.min(ratio);
        best_ratio = best_ratio.max(ratio);
    }
    verdict(
        worst <= 1e-4 && worst_ratio >= 3.0 && best_ratio <= 5.0,
        format!(
            "{} models, max residual {worst:.2e} at step 1e-3 (tol 1e-4), halving ratio {worst_ratio:.2}-{best_ratio:.2}",
            models.len()
        ),
    )
}

fn eigenvalue_sum() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut params: Vec<(TwoLevelParams, Option<f64>)> = reference_cases()
        .into_iter()
        .map(|f| {
            let printed: f64 = f.eigenvalues.iter().map(|z| z.re).sum();
            (f.params, Some(printed))
        })
        .collect();
    let mut rng = common::rng(10);
    params.extend((0..100).map(|_| (common::random_two_level(&mut rng), None)));
    for (p, printed) in &params {
        let l = build_superoperator(&to_model(p).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let dec = decompose_default(&l).map_err(|e| e.to_string())?;
        let sum: C64 = dec.eigenvalues().iter().sum();
        let expected = -(p.decay_1 + p.decay_2 + 2.0 * p.coherence_decay);
        worst = worst.max((sum - C64::new(expected, 0.0)).norm());
        if let Some(printed) = printed {
            if (printed - expected).abs() > 1e-3 {
                return Err(format!("printed eigenvalues sum to {printed}, expected {expected}"));
            }
        }
    }
    verdict(
        worst <= 1e-10,
        format!("4 cases + 100 random, max |Σλ + Γ1 + Γ2 + 2γ| = {worst:.2e} (tol 1e-10)"),
    )
}

fn main() -> ExitCode {
    let mut gate = Gate { failures: 0 };
    let s = Duration::from_secs;
    gate.run(1, "reference-case eigenvalues", s(1), eigenvalue_regression);
    gate.run(2, "reference-case steady states", s(1), steady_state_regression);
    gate.run(3, "closed-form population difference", s(5), closed_form_cross_check);
    gate.run(4, "vanishing upper-level decay limit", s(1), gamma2_zero_limit);
    gate.run(5, "Lyapunov monotonicity", s(5), lyapunov_monotonicity);
    gate.run(6, "spectral vs direct integration", s(30), oracle_equivalence);
    gate.run(7, "structural identities", s(10), structural_identities);
    gate.run(8, "eta squared bound", s(1), eta_bound);
    gate.run(9, "pump ensemble oracle", s(30), ensemble_oracle);
    gate.run(10, "eigenvalue sum", s(1), eigenvalue_sum);
    if gate.failures == 0 {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", gate.failures);
        ExitCode::FAILURE
    }
}
