//! Pumped ensemble built from injected pure-state trajectories.
//!
//! Systems enter at times `t₀` in state `c(0)` with weight `P_ψ` and then
//! evolve under `H_eff = H - (i/2) diag Γ`. The ensemble
//!
//! ```text
//! ρ̃(t) = rate Σ_ψ P_ψ ∫_{start}^{t} c(t - t₀) c(t - t₀)† dt₀
//! ```
//!
//! is accumulated with the composite trapezoid rule and checked against
//! `∂ρ/∂t = Λ + Lρ` with centered differences.

use crate::error::{Error, Result};
use crate::linalg::{eig_general, inverse, ComplexMatrix, ComplexVector, C64, I};
use crate::model::{build_superoperator, DensityMatrix, ModelSpec, PumpMatrix, RelaxationSpec};
use crate::tolerances::Tolerances;

const WEIGHT_SUM_TOL: f64 = 1e-12;
const UNIT_NORM_TOL: f64 = 1e-10;
/// `e^{-κ (t - start)} ≤ 10⁻¹²` for the default start time.
const HISTORY_DECADES: f64 = 12.0;

#[derive(Clone, Debug)]
pub struct InjectedState {
    pub amplitudes: ComplexVector,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct InjectionSpec {
    states: Vec<InjectedState>,
    rate: f64,
    start_time: Option<f64>,
}

impl InjectionSpec {
    pub fn new(states: Vec<InjectedState>, rate: f64, start_time: Option<f64>) -> Result<Self> {
        let mut problems = Vec::new();
        if states.is_empty() {
            problems.push("at least one injected state is required".to_string());
        }
        if let Some(first) = states.first() {
            if states.iter().any(|s| s.amplitudes.len() != first.amplitudes.len()) {
                problems.push("injected states differ in dimension".into());
            }
        }
        for (k, s) in states.iter().enumerate() {
            if !(s.weight >= 0.0 && s.weight.is_finite()) {
                problems.push(format!("weight {k} is {}", s.weight));
            }
            let norm = s.amplitudes.norm();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                problems.push(format!("state {k} has norm {norm}"));
            }
        }
        let total: f64 = states.iter().map(|s| s.weight).sum();
        if !states.is_empty() && (total - 1.0).abs() > WEIGHT_SUM_TOL {
            problems.push(format!("weights sum to {total}"));
        }
        if !(rate >= 0.0 && rate.is_finite()) {
            problems.push(format!("rate must be nonnegative, got {rate}"));
        }
        if start_time.is_some_and(|t| !t.is_finite()) {
            problems.push("start time must be finite".into());
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(Self {
            states,
            rate,
            start_time,
        })
    }

    /// A single state injected at `rate`.
    pub fn pure(amplitudes: ComplexVector, rate: f64) -> Result<Self> {
        Self::new(
            vec![InjectedState {
                amplitudes,
                weight: 1.0,
            }],
            rate,
            None,
        )
    }

    /// Decomposes a positive semidefinite pump into eigenstates:
    /// `rate = Tr Λ`, weights are the eigenvalues over the trace.
    pub fn from_pump(pump: &PumpMatrix) -> Result<Self> {
        let m = pump.matrix();
        let tol = Tolerances::DEFAULT;
        if !m.is_hermitian(tol.hermitian * m.max_abs().max(1.0)) {
            return Err(Error::Validation(vec!["pump is not Hermitian".into()]));
        }
        let trace = pump.trace();
        let n = pump.dim();
        if trace <= 0.0 {
            if m.max_abs() == 0.0 {
                return Self::pure(ComplexVector::basis(n, 0), 0.0);
            }
            return Err(Error::Validation(vec![format!("pump trace is {trace}")]));
        }
        let floor = tol.pump_psd * m.max_abs();
        let mut states = Vec::new();
        for pair in eig_general(m)? {
            let p = pair.value.re;
            if p < -floor {
                return Err(Error::Validation(vec![format!(
                    "pump has negative eigenvalue {p}"
                )]));
            }
            if p > floor {
                states.push(InjectedState {
                    amplitudes: pair.vector.normalized(),
                    weight: p / trace,
                });
            }
        }
        let total: f64 = states.iter().map(|s| s.weight).sum();
        for s in &mut states {
            s.weight /= total;
        }
        let spec = Self::new(states, trace, None)?;
        let defect = (spec.pump_matrix().matrix() - m).max_abs();
        if defect > 1e-10 * m.max_abs() {
            return Err(Error::Defective {
                eigenvalue: C64::new(defect, 0.0),
            });
        }
        Ok(spec)
    }

    pub fn states(&self) -> &[InjectedState] {
        &self.states
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn start_time(&self) -> Option<f64> {
        self.start_time
    }

    pub fn with_start_time(mut self, t: f64) -> Self {
        self.start_time = Some(t);
        self
    }

    pub fn dim(&self) -> usize {
        self.states[0].amplitudes.len()
    }

    /// `Λ = rate Σ_ψ P_ψ c(0) c(0)†`.
    pub fn pump_matrix(&self) -> PumpMatrix {
        let n = self.dim();
        let mut m = ComplexMatrix::zeros(n, n);
        for s in &self.states {
            let term = ComplexMatrix::outer(&s.amplitudes, &s.amplitudes);
            m = &m + &term.scale(C64::new(self.rate * s.weight, 0.0));
        }
        PumpMatrix::new(m).expect("square by construction")
    }
}

/// `exp(-i H_eff τ)` through the eigendecomposition of `H_eff`.
#[derive(Clone, Debug)]
pub struct EffectiveEvolution {
    mu: Vec<C64>,
    vectors: ComplexMatrix,
    inverse: ComplexMatrix,
}

impl EffectiveEvolution {
    pub fn new(h: &ComplexMatrix, gammas: &[f64]) -> Result<Self> {
        if !h.is_square() || h.rows() != gammas.len() {
            return Err(Error::dimension(format!(
                "Hamiltonian is {}x{}, {} decay rates given",
                h.rows(),
                h.cols(),
                gammas.len()
            )));
        }
        let damping = ComplexMatrix::diagonal(
            &gammas.iter().map(|g| C64::new(0.0, -0.5 * g)).collect::<Vec<_>>(),
        );
        let h_eff = h + &damping;
        let pairs = eig_general(&h_eff)?;
        let mu: Vec<C64> = pairs.iter().map(|p| p.value).collect();
        let vectors = ComplexMatrix::from_columns(
            &pairs.iter().map(|p| p.vector.clone()).collect::<Vec<_>>(),
        )?;
        let inverse = match inverse(&vectors) {
            Ok(inv) => inv,
            Err(Error::Singular { .. }) => return Err(Error::Defective { eigenvalue: mu[0] }),
            Err(e) => return Err(e),
        };
        let resid = (&(&inverse * &vectors) - &ComplexMatrix::identity(mu.len())).max_abs();
        if resid > 1e-8 {
            return Err(Error::Defective { eigenvalue: mu[0] });
        }
        Ok(Self {
            mu,
            vectors,
            inverse,
        })
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.mu
    }

    /// Decay rate of `|c|²` for the slowest mode, `2 min(-Im μ)`.
    pub fn slowest_decay(&self) -> f64 {
        self.mu.iter().map(|m| -2.0 * m.im).fold(f64::INFINITY, f64::min)
    }

    fn coefficients(&self, c0: &ComplexVector) -> ComplexVector {
        self.inverse.apply(c0)
    }

    fn synthesize(&self, a: &ComplexVector, tau: f64) -> ComplexVector {
        let scaled: ComplexVector = a
            .iter()
            .zip(&self.mu)
            .map(|(ak, mk)| ak * (-I * mk * tau).exp())
            .collect();
        self.vectors.apply(&scaled)
    }

    pub fn evolve(&self, c0: &ComplexVector, tau: f64) -> Result<ComplexVector> {
        if c0.len() != self.mu.len() {
            return Err(Error::dimension(format!(
                "state has length {}, expected {}",
                c0.len(),
                self.mu.len()
            )));
        }
        if !(tau >= 0.0) {
            return Err(Error::Domain(format!("tau must be nonnegative, got {tau}")));
        }
        Ok(self.synthesize(&self.coefficients(c0), tau))
    }
}

/// `c(τ) = exp(-i (H - (i/2) diag Γ) τ) c(0)`.
pub fn evolve_single(
    h: &ComplexMatrix,
    gammas: &[f64],
    c0: &ComplexVector,
    tau: f64,
) -> Result<ComplexVector> {
    EffectiveEvolution::new(h, gammas)?.evolve(c0, tau)
}

#[derive(Clone, Debug)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub quad_step: f64,
    pub start_time: f64,
}

/// Start time such that the oldest injected systems have decayed by `10⁻¹²`.
pub fn default_start_time(evolution: &EffectiveEvolution) -> Result<f64> {
    let kappa = evolution.slowest_decay();
    if !(kappa > 0.0) {
        let slow = evolution
            .eigenvalues()
            .iter()
            .copied()
            .min_by(|a, b| b.im.total_cmp(&a.im))
            .unwrap_or_default();
        return Err(Error::NonDecayingMode { eigenvalue: slow });
    }
    Ok(-HISTORY_DECADES * std::f64::consts::LN_10 / kappa)
}

/// Accumulates `ρ̃(t)` for increasing `times` with a trapezoid grid in the
/// injection age `τ = t - t₀`. Ages not on the grid close with a partial
/// panel.
pub fn accumulate(
    spec: &InjectionSpec,
    h: &ComplexMatrix,
    gammas: &[f64],
    times: &[f64],
    quad_step: f64,
) -> Result<EnsembleResult> {
    if !(quad_step > 0.0 && quad_step.is_finite()) {
        return Err(Error::Domain(format!(
            "quadrature step must be positive, got {quad_step}"
        )));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::Trajectory("times must be finite and strictly increasing".into()));
    }
    if spec.dim() != gammas.len() {
        return Err(Error::dimension(format!(
            "injected states have length {}, model has {} levels",
            spec.dim(),
            gammas.len()
        )));
    }
    let evolution = EffectiveEvolution::new(h, gammas)?;
    let start = match spec.start_time() {
        Some(t) => t,
        None => default_start_time(&evolution)?,
    };
    let n = gammas.len();
    let coeffs: Vec<(f64, ComplexVector)> = spec
        .states()
        .iter()
        .map(|s| (spec.rate() * s.weight, evolution.coefficients(&s.amplitudes)))
        .collect();
    let integrand = |tau: f64| -> ComplexMatrix {
        let mut f = ComplexMatrix::zeros(n, n);
        for (w, a) in &coeffs {
            let c = evolution.synthesize(a, tau);
            f = &f + &ComplexMatrix::outer(&c, &c).scale(C64::new(*w, 0.0));
        }
        f
    };

    let mut states = Vec::with_capacity(times.len());
    let mut acc = ComplexMatrix::zeros(n, n);
    let mut node = 0usize;
    let mut f_node = integrand(0.0);
    for &t in times {
        let age = t - start;
        if age <= 0.0 {
            states.push(DensityMatrix::zeros(n));
            continue;
        }
        let full = (age / quad_step + 1e-9).floor() as usize;
        while node < full {
            let f_next = integrand((node + 1) as f64 * quad_step);
            acc = &acc + &(&f_node + &f_next).scale(C64::new(0.5 * quad_step, 0.0));
            f_node = f_next;
            node += 1;
        }
        let tail = age - node as f64 * quad_step;
        let total = if tail > 1e-12 * quad_step {
            &acc + &(&f_node + &integrand(age)).scale(C64::new(0.5 * tail, 0.0))
        } else {
            acc.clone()
        };
        states.push(DensityMatrix::new(total)?);
    }
    Ok(EnsembleResult {
        times: times.to_vec(),
        states,
        quad_step,
        start_time: start,
    })
}

/// `[t - h, t, t + h]` for every center, for centered differences.
pub fn stencil_times(centers: &[f64], h: f64) -> Vec<f64> {
    centers.iter().flat_map(|&t| [t - h, t, t + h]).collect()
}

/// Decay rates when the relaxation is pure lifetime broadening,
/// `γ_nm = (Γ_n + Γ_m)/2`.
pub fn lifetime_rates(relaxation: &RelaxationSpec) -> Result<Vec<f64>> {
    match relaxation {
        RelaxationSpec::Decay {
            population,
            coherence,
        } => {
            let n = population.len();
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let expected = 0.5 * (population[i] + population[j]);
                    let got = coherence[i * n + j];
                    if (got - expected).abs() > 1e-12 * expected.abs().max(1.0) {
                        return Err(Error::UnsupportedRelaxation(format!(
                            "coherence decay ({i},{j}) is {got}, trajectories reproduce only {expected}"
                        )));
                    }
                }
            }
            Ok(population.clone())
        }
        RelaxationSpec::Superoperator(_) => Err(Error::UnsupportedRelaxation(
            "general relaxation superoperators have no trajectory representation".into(),
        )),
    }
}

/// Accumulates the ensemble for `model` injecting the eigenstates of its pump.
pub fn accumulate_for_model(
    model: &ModelSpec,
    times: &[f64],
    quad_step: f64,
) -> Result<EnsembleResult> {
    let gammas = lifetime_rates(model.relaxation())?;
    let spec = InjectionSpec::from_pump(model.pump())?;
    accumulate(&spec, model.hamiltonian(), &gammas, times, quad_step)
}

/// Largest element of `(ρ̃(t+h) - ρ̃(t-h))/(2h) - Λ - Lρ̃(t)` over every
/// equally spaced triple of consecutive samples.
pub fn verify_master_equation(result: &EnsembleResult, model: &ModelSpec) -> Result<f64> {
    lifetime_rates(model.relaxation())?;
    let l = build_superoperator(model)?;
    let n = model.dim();
    if result.states.iter().any(|s| s.dim() != n) {
        return Err(Error::dimension("ensemble and model dimensions differ"));
    }
    let pump = model.pump().matrix();
    let mut worst: Option<f64> = None;
    for i in 1..result.times.len().saturating_sub(1) {
        let (t0, t1, t2) = (result.times[i - 1], result.times[i], result.times[i + 1]);
        let (h0, h1) = (t1 - t0, t2 - t1);
        if (h0 - h1).abs() > 1e-9 * h0.max(h1) {
            continue;
        }
        let derivative = (result.states[i + 1].matrix() - result.states[i - 1].matrix())
            .scale(C64::new(1.0 / (t2 - t0), 0.0));
        let rhs = pump + &l.apply(result.states[i].matrix())?;
        let r = (&derivative - &rhs).max_abs();
        worst = Some(worst.map_or(r, |w| w.max(r)));
    }
    worst.ok_or_else(|| Error::Trajectory("no equally spaced sample triple to difference".into()))
}
