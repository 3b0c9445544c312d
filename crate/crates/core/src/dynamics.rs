//! Steady state, time evolution and the Lyapunov functional.
//!
//! Propagation works on the deviation `δρ = ρ - ρ₀`, which obeys the
//! homogeneous equation `∂δρ/∂t = L δρ`, and adds `ρ₀` back for output.
//! [`integrate_direct`] integrates the inhomogeneous equation with classic
//! fixed-step RK4 and serves as an independent oracle for the spectral path.

use crate::error::{Error, Result};
use crate::linalg::{solve_linear, ComplexVector, C64, ONE};
use crate::model::{DensityMatrix, PumpMatrix, Superoperator};
use crate::spectral::{MetricOperator, SpectralDecomposition};
use crate::tolerances::Tolerances;

/// `ρ₀ = -L⁻¹Λ`.
pub fn steady_state(l: &Superoperator, pump: &PumpMatrix) -> Result<DensityMatrix> {
    let n = l.levels();
    if pump.dim() != n {
        return Err(Error::dimension(format!(
            "pump is {0}x{0}, generator acts on {n}x{n}",
            pump.dim()
        )));
    }
    let rhs = -&pump.vectorize();
    let v = solve_linear(l.matrix(), &rhs).map_err(|e| match e {
        Error::Singular { rank_deficiency } => Error::TrappedSubspace { rank_deficiency },
        other => other,
    })?;
    DensityMatrix::from_vector(&v, n)
}

/// `‖Lρ₀ + Λ‖ / ‖Λ‖` (absolute when `Λ = 0`).
pub fn steady_state_residual(l: &Superoperator, pump: &PumpMatrix, rho0: &DensityMatrix) -> f64 {
    let lv = l.matrix().mul_vec(&rho0.vectorize()).expect("dimensions checked");
    let p = pump.vectorize();
    let r = (&lv + &p).norm();
    let scale = p.norm();
    if scale > 0.0 {
        r / scale
    } else {
        r
    }
}

/// Expansion coefficients `r_ν = ⟨⟨y_ν|δρ⟩⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeAmplitudes(pub Vec<C64>);

impl ModeAmplitudes {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }
}

pub fn mode_amplitudes(dec: &SpectralDecomposition, delta_rho0: &DensityMatrix) -> Result<ModeAmplitudes> {
    let v = delta_rho0.vectorize();
    if v.len() != dec.len() {
        return Err(Error::dimension(format!(
            "state has {} components, decomposition has {} modes",
            v.len(),
            dec.len()
        )));
    }
    Ok(ModeAmplitudes(dec.left_vectors().iter().map(|y| y.dot(&v)).collect()))
}

/// `Σ_ν r_ν e^{λ_ν t} x_ν`.
pub fn evolve_deviation(dec: &SpectralDecomposition, r: &ModeAmplitudes, t: f64) -> ComplexVector {
    let mut v = ComplexVector::zeros(dec.len());
    for ((x, &lambda), &rv) in dec.right_vectors().iter().zip(dec.eigenvalues()).zip(&r.0) {
        v.axpy(rv * (lambda * t).exp(), x);
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Spectral,
    Direct,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DensityMatrix>,
    lyapunov: Option<Vec<f64>>,
    method: Method,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<DensityMatrix>, method: Method) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::Trajectory(format!(
                "{} times but {} states",
                times.len(),
                states.len()
            )));
        }
        check_increasing(&times)?;
        Ok(Self {
            times,
            states,
            lyapunov: None,
            method,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }

    pub fn lyapunov_values(&self) -> Option<&[f64]> {
        self.lyapunov.as_deref()
    }

    /// Attaches `M_Ω(ρ(t) - ρ₀)` at every sample.
    pub fn with_lyapunov(mut self, metric: &MetricOperator, rho0: &DensityMatrix) -> Result<Self> {
        let values = self
            .states
            .iter()
            .map(|s| lyapunov(metric, &s.sub(rho0)))
            .collect::<Result<Vec<_>>>()?;
        self.lyapunov = Some(values);
        Ok(self)
    }

    /// `M_Ω(t)/M_Ω(0)`, or all zeros when the trajectory starts at the steady
    /// state.
    pub fn normalized_lyapunov(&self) -> Option<Vec<f64>> {
        self.lyapunov.as_deref().map(normalize_lyapunov)
    }

    /// Largest `|ρ_nm(t) - ρ'_nm(t)|` per sample against another trajectory on
    /// the same time grid.
    pub fn max_deviation(&self, other: &Trajectory) -> Result<Vec<f64>> {
        if self.times.len() != other.times.len()
            || self
                .times
                .iter()
                .zip(&other.times)
                .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
        {
            return Err(Error::Trajectory("time grids differ".into()));
        }
        Ok(self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| (a.matrix() - b.matrix()).max_abs())
            .collect())
    }
}

fn check_increasing(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::Trajectory("non-finite time".into()));
    }
    if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Trajectory(format!(
            "times must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

pub fn normalize_lyapunov(values: &[f64]) -> Vec<f64> {
    match values.first() {
        Some(&m0) if m0 > 0.0 => values.iter().map(|m| m / m0).collect(),
        _ => vec![0.0; values.len()],
    }
}

/// `ρ(t) = ρ₀ + Σ_ν r_ν e^{λ_ν t} x_ν` with `r_ν = ⟨⟨y_ν|ρ(0) - ρ₀⟩⟩`; the
/// entries of `times` are measured from the initial state.
pub fn propagate_spectral(
    dec: &SpectralDecomposition,
    rho0: &DensityMatrix,
    rho_init: &DensityMatrix,
    times: &[f64],
) -> Result<Trajectory> {
    check_increasing(times)?;
    if times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Trajectory("times must be nonnegative".into()));
    }
    let n = dec.levels();
    let r = mode_amplitudes(dec, &rho_init.sub(rho0))?;
    let base = rho0.vectorize();
    let states = times
        .iter()
        .map(|&t| DensityMatrix::from_vector(&(&base + &evolve_deviation(dec, &r, t)), n))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(times.to_vec(), states, Method::Spectral)
}

struct Rk4<'a> {
    l: &'a Superoperator,
    pump: ComplexVector,
    scale: f64,
    blow_up: f64,
}

impl Rk4<'_> {
    fn rhs(&self, y: &ComplexVector) -> ComplexVector {
        let mut d = self.l.matrix().mul_vec(y).expect("dimensions checked");
        d.axpy(ONE, &self.pump);
        d
    }

    fn step(&self, y: &mut ComplexVector, h: f64) {
        let half = C64::new(0.5 * h, 0.0);
        let k1 = self.rhs(y);
        let mut tmp = y.clone();
        tmp.axpy(half, &k1);
        let k2 = self.rhs(&tmp);
        tmp = y.clone();
        tmp.axpy(half, &k2);
        let k3 = self.rhs(&tmp);
        tmp = y.clone();
        tmp.axpy(C64::new(h, 0.0), &k3);
        let k4 = self.rhs(&tmp);
        let w1 = C64::new(h / 6.0, 0.0);
        let w2 = C64::new(h / 3.0, 0.0);
        y.axpy(w1, &k1);
        y.axpy(w2, &k2);
        y.axpy(w2, &k3);
        y.axpy(w1, &k4);
    }

    fn advance(&self, y: &mut ComplexVector, span: f64, dt: f64, t_now: f64) -> Result<()> {
        let steps = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for k in 0..steps {
            self.step(y, h);
            let norm = y.norm();
            if !norm.is_finite() || norm > self.blow_up * self.scale {
                return Err(Error::Instability {
                    time: t_now + (k + 1) as f64 * h,
                });
            }
        }
        Ok(())
    }
}

fn integrator<'a>(
    l: &'a Superoperator,
    pump: &PumpMatrix,
    rho_init: &DensityMatrix,
    dt: f64,
) -> Result<Rk4<'a>> {
    let n = l.levels();
    if pump.dim() != n || rho_init.dim() != n {
        return Err(Error::dimension(format!(
            "generator acts on {n}x{n}, got pump {0}x{0} and state {1}x{1}",
            pump.dim(),
            rho_init.dim()
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("step must be positive, got {dt}")));
    }
    let pump = pump.vectorize();
    let scale = 1f64.max(rho_init.vectorize().norm()).max(pump.norm());
    Ok(Rk4 {
        l,
        pump,
        scale,
        blow_up: Tolerances::DEFAULT.blow_up,
    })
}

/// Fixed-step RK4 for `∂ρ/∂t = Λ + Lρ` from `t = 0` to `t_end`, recording
/// every step. The step is shrunk to `t_end / ⌈t_end/dt⌉` so the grid ends
/// exactly at `t_end`.
pub fn integrate_direct(
    l: &Superoperator,
    pump: &PumpMatrix,
    rho_init: &DensityMatrix,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory> {
    let rk = integrator(l, pump, rho_init, dt)?;
    if !(t_end >= dt) {
        return Err(Error::Domain(format!(
            "t_end = {t_end} must be at least one step ({dt})"
        )));
    }
    let steps = ((t_end / dt) - 1e-9).ceil() as usize;
    let h = t_end / steps as f64;
    let n = l.levels();
    let mut y = rho_init.vectorize();
    let mut times = vec![0.0];
    let mut states = vec![rho_init.clone()];
    for k in 1..=steps {
        rk.advance(&mut y, h, h, (k - 1) as f64 * h)?;
        times.push(k as f64 * h);
        states.push(DensityMatrix::from_vector(&y, n)?);
    }
    Trajectory::new(times, states, Method::Direct)
}

/// Like [`integrate_direct`] but reports the state only at `times`
/// (`times[0]` is the initial time), stepping each interval with the largest
/// uniform step not exceeding `dt`.
pub fn integrate_direct_at(
    l: &Superoperator,
    pump: &PumpMatrix,
    rho_init: &DensityMatrix,
    dt: f64,
    times: &[f64],
) -> Result<Trajectory> {
    let rk = integrator(l, pump, rho_init, dt)?;
    check_increasing(times)?;
    let n = l.levels();
    let mut y = rho_init.vectorize();
    let mut states = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        if k > 0 {
            rk.advance(&mut y, t - times[k - 1], dt, times[k - 1])?;
        }
        states.push(DensityMatrix::from_vector(&y, n)?);
    }
    Trajectory::new(times.to_vec(), states, Method::Direct)
}

/// `M_Ω(δρ) = ⟨⟨δρ|Ω|δρ⟩⟩`.
pub fn lyapunov(m: &MetricOperator, delta_rho: &DensityMatrix) -> Result<f64> {
    let v = delta_rho.vectorize();
    if v.len() != m.omega().rows() {
        return Err(Error::dimension(format!(
            "state has {} components, metric is {}x{}",
            v.len(),
            m.omega().rows(),
            m.omega().cols()
        )));
    }
    let q = m.inner(&v, &v);
    let scale = m.omega().frobenius_norm() * v.norm().powi(2);
    if q.im.abs() > Tolerances::DEFAULT.metric_imaginary * scale.max(q.re.abs()).max(1e-300) {
        return Err(Error::MetricCorruption { imaginary: q.im });
    }
    Ok(q.re.max(0.0))
}

/// `dM_Ω/dt = Σ_ν |r_ν|² (λ_ν + conj λ_ν) e^{(λ_ν + conj λ_ν) t}`.
///
/// With `⟨⟨y_ν|x_μ⟩⟩ = δ_νμ` one has `M_Ω(t) = Σ_ν |r_ν|² e^{2 Re λ_ν t}`
/// exactly, so no cross terms appear whatever the gauge.
pub fn lyapunov_rate(dec: &SpectralDecomposition, r: &ModeAmplitudes, t: f64) -> f64 {
    dec.eigenvalues()
        .iter()
        .zip(&r.0)
        .map(|(lambda, rv)| {
            let s = 2.0 * lambda.re;
            rv.norm_sqr() * s * (s * t).exp()
        })
        .sum()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EntropySign {
    Plus,
    /// `S_Ω = -log M_Ω`, nondecreasing along trajectories.
    #[default]
    Minus,
}

pub fn entropy(m_omega: f64, sign: EntropySign) -> Result<f64> {
    if !(m_omega > 0.0) {
        return Err(Error::Domain(format!(
            "entropy needs M_Ω > 0, got {m_omega} (steady state reached)"
        )));
    }
    Ok(match sign {
        EntropySign::Plus => m_omega.ln(),
        EntropySign::Minus => -m_omega.ln(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PopulationViolation {
    pub time: f64,
    pub level: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PositivityReport {
    pub violations: Vec<PopulationViolation>,
    /// Two-level only: `min_t ρ11 ρ22 - |ρ12|²`, diagnostic, may be negative
    /// in driven cases.
    pub min_coherence_margin: Option<f64>,
}

impl PositivityReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn positivity_monitor(traj: &Trajectory) -> PositivityReport {
    let floor = Tolerances::DEFAULT.population_floor;
    let mut violations = Vec::new();
    let mut margin: Option<f64> = None;
    for (&t, s) in traj.times.iter().zip(&traj.states) {
        for (level, p) in s.populations().into_iter().enumerate() {
            if p < -floor {
                violations.push(PopulationViolation {
                    time: t,
                    level,
                    value: p,
                });
            }
        }
        if s.dim() == 2 {
            let m = s.get(0, 0).re * s.get(1, 1).re - s.get(0, 1).norm_sqr();
            margin = Some(margin.map_or(m, |old| old.min(m)));
        }
    }
    PositivityReport {
        violations,
        min_coherence_margin: margin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;

    fn scalar_decay() -> Superoperator {
        Superoperator::new(2, ComplexMatrix::identity(4).scale(C64::new(-1.0, 0.0))).unwrap()
    }

    #[test]
    fn rk4_exact_exponential() {
        let l = scalar_decay();
        let traj = integrate_direct(
            &l,
            &PumpMatrix::zeros(2),
            &DensityMatrix::from_populations(&[1.0, 1.0]),
            1e-3,
            1.0,
        )
        .unwrap();
        assert_eq!(traj.len(), 1001);
        let last = traj.last().unwrap();
        let expected = (-1.0f64).exp();
        assert!((last.get(0, 0).re - expected).abs() < 1e-8);
        assert!((last.get(1, 1).re - expected).abs() < 1e-8);
        assert!((traj.times()[1000] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rk4_rejects_bad_steps() {
        let l = scalar_decay();
        let rho = DensityMatrix::zeros(2);
        let pump = PumpMatrix::zeros(2);
        assert!(matches!(integrate_direct(&l, &pump, &rho, 0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(integrate_direct(&l, &pump, &rho, 0.5, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn rk4_detects_blow_up() {
        let l = Superoperator::new(1, ComplexMatrix::from_real_rows(&[&[-1000.0]]).unwrap()).unwrap();
        let err = integrate_direct(
            &l,
            &PumpMatrix::zeros(1),
            &DensityMatrix::from_populations(&[1.0]),
            0.01,
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Instability { .. }));
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(1.0, EntropySign::Minus).unwrap(), 0.0);
        assert_eq!(entropy(1.0, EntropySign::Plus).unwrap(), 0.0);
        let s: Vec<f64> = [1.0, 0.5, 0.25]
            .iter()
            .map(|&m| entropy(m, EntropySign::default()).unwrap())
            .collect();
        assert!((s[1] - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((s[2] - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!(matches!(entropy(0.0, EntropySign::Minus), Err(Error::Domain(_))));
        assert!(matches!(entropy(-1.0, EntropySign::Plus), Err(Error::Domain(_))));
    }

    #[test]
    fn normalization_of_zero_curve() {
        assert_eq!(normalize_lyapunov(&[0.0, 0.0, 0.0]), vec![0.0; 3]);
        assert_eq!(normalize_lyapunov(&[2.0, 1.0, 0.5]), vec![1.0, 0.5, 0.25]);
    }

    #[test]
    fn positivity_flags_negative_population() {
        let traj = Trajectory::new(
            vec![0.0, 1.0, 2.0],
            vec![
                DensityMatrix::from_populations(&[1.0, 1.0]),
                DensityMatrix::from_populations(&[-1.0, 1.0]),
                DensityMatrix::from_populations(&[1.0, 1.0]),
            ],
            Method::Direct,
        )
        .unwrap();
        let report = positivity_monitor(&traj);
        assert_eq!(
            report.violations,
            vec![PopulationViolation {
                time: 1.0,
                level: 0,
                value: -1.0
            }]
        );
        assert_eq!(report.min_coherence_margin, Some(-1.0));
    }

    #[test]
    fn constant_trajectory_is_clean() {
        let traj = Trajectory::new(
            vec![0.0, 1.0],
            vec![DensityMatrix::from_populations(&[1.0, 1.0]); 2],
            Method::Spectral,
        )
        .unwrap();
        let report = positivity_monitor(&traj);
        assert!(report.is_clean());
        assert_eq!(report.min_coherence_margin, Some(1.0));
    }

    #[test]
    fn trajectory_requires_increasing_times() {
        let s = vec![DensityMatrix::zeros(1); 2];
        assert!(Trajectory::new(vec![0.0, 0.0], s.clone(), Method::Direct).is_err());
        assert!(Trajectory::new(vec![1.0, 0.5], s.clone(), Method::Direct).is_err());
        assert!(Trajectory::new(vec![0.0], s, Method::Direct).is_err());
    }
}
