#![allow(dead_code)]

use pumped_core::linalg::{eig_general, ComplexMatrix, C64};
use pumped_core::model::{
    validate, DensityMatrix, ModelSpec, PumpMatrix, RelaxationSpec, Superoperator,
};
use pumped_core::twolevel::TwoLevelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex(rng: &mut ChaCha8Rng, scale: f64) -> C64 {
    C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| complex(rng, scale))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> ComplexMatrix {
    let a = random_matrix(rng, n, scale);
    (&a + &a.adjoint()).scale(C64::new(0.5, 0.0))
}

/// `A A†`, positive semidefinite by construction.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> ComplexMatrix {
    let a = random_matrix(rng, n, scale.sqrt());
    let p = &a * &a.adjoint();
    (&p + &p.adjoint()).scale(C64::new(0.5, 0.0))
}

pub fn random_density(rng: &mut ChaCha8Rng, n: usize) -> DensityMatrix {
    DensityMatrix::new(random_psd(rng, n, 1.0)).unwrap()
}

/// Parameter draw with `Λ21 = 0`, `Γ ∈ [0.1, 5]`,
/// `γ ∈ [(Γ1+Γ2)/2, (Γ1+Γ2)/2 + 5]`, `V ∈ [0, 10]`, `ω ∈ [-10, 10]`.
pub fn random_two_level(rng: &mut ChaCha8Rng) -> TwoLevelParams {
    let decay_1 = rng.random_range(0.1..=5.0);
    let decay_2 = rng.random_range(0.1..=5.0);
    TwoLevelParams {
        pump_1: rng.random_range(0.0..=5.0),
        pump_2: rng.random_range(0.0..=5.0),
        pump_21: C64::new(0.0, 0.0),
        decay_1,
        decay_2,
        coherence_decay: 0.5 * (decay_1 + decay_2) + rng.random_range(0.0..=5.0),
        detuning: rng.random_range(-10.0..=10.0),
        coupling: rng.random_range(0.0..=10.0),
    }
}

/// Two-level draw with a coherent pump term inside the positivity bound.
pub fn random_two_level_coherent_pump(rng: &mut ChaCha8Rng) -> TwoLevelParams {
    let mut p = random_two_level(rng);
    let bound = (p.pump_1 * p.pump_2).sqrt();
    let r = bound * rng.random_range(0.0..1.0);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    p.pump_21 = C64::from_polar(r, phase);
    p
}

/// Lifetime-broadened relaxation, `γ_nm = (Γ_n + Γ_m)/2`.
pub fn random_lifetime_model(rng: &mut ChaCha8Rng, n: usize) -> ModelSpec {
    let gammas: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..=2.0)).collect();
    let h = random_hermitian(rng, n, 3.0);
    let pump = PumpMatrix::new(random_psd(rng, n, 1.0)).unwrap();
    ModelSpec::new(h, RelaxationSpec::lifetime_broadened(gammas), pump).unwrap()
}

/// Validated N-level model with extra pure dephasing on every coherence.
pub fn random_model(rng: &mut ChaCha8Rng, n: usize) -> ModelSpec {
    let gammas: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..=2.0)).collect();
    let mut coherence = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let g = 0.5 * (gammas[i] + gammas[j]) + rng.random_range(0.0..=1.0);
            coherence[i][j] = g;
            coherence[j][i] = g;
        }
    }
    let h = random_hermitian(rng, n, 3.0);
    let pump = PumpMatrix::new(random_psd(rng, n, 1.0)).unwrap();
    let model = ModelSpec::new(
        h,
        RelaxationSpec::decay(gammas, coherence).unwrap(),
        pump,
    )
    .unwrap();
    assert!(validate(&model).all_passed());
    model
}

/// Random complex 4×4 generator shifted so its rightmost eigenvalue sits at
/// `-U(0.1, 1)`.
pub fn random_stable_generator(rng: &mut ChaCha8Rng) -> Superoperator {
    let a = random_matrix(rng, 4, 1.0);
    let top = eig_general(&a)
        .unwrap()
        .iter()
        .map(|p| p.value.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let shift = top + rng.random_range(0.1..=1.0);
    let m = &a - &ComplexMatrix::identity(4).scale(C64::new(shift, 0.0));
    Superoperator::new(2, m).unwrap()
}
