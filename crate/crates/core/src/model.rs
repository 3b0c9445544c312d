//! Model definition and Liouvillian assembly.
//!
//! A [`ModelSpec`] holds the Hamiltonian `H` (ħ = 1, so in units of rate),
//! the relaxation superoperator `R` and the pump `Λ`. The built
//! [`Superoperator`] is `L = -i[H, ·] + R` in the lexicographic vectorization
//! of [`crate::linalg::vectorize`].

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{
    eig_general, unvectorize, vec_index, vectorize, ComplexMatrix, ComplexVector, C64, I,
};
use crate::tolerances::Tolerances;

/// Hermitian `N x N` state. Diagonal entries are level populations; the trace
/// is not normalized because a pumped system gains and loses population.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    /// Accepts square matrices that are Hermitian to `1e-9` relative to their
    /// largest entry. Negative populations are allowed here and reported by
    /// [`crate::dynamics::positivity_monitor`].
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dimension(format!(
                "density matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let defect = m.hermitian_defect();
        if defect > 1e-9 * m.max_abs().max(1.0) {
            return Err(Error::Domain(format!(
                "density matrix is not Hermitian (defect {defect:e})"
            )));
        }
        Ok(Self(m))
    }

    pub fn zeros(n: usize) -> Self {
        Self(ComplexMatrix::zeros(n, n))
    }

    pub fn from_populations(p: &[f64]) -> Self {
        let d: Vec<C64> = p.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self(ComplexMatrix::diagonal(&d))
    }

    pub fn from_vector(v: &ComplexVector, n: usize) -> Result<Self> {
        Self::new(unvectorize(v, n)?)
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn vectorize(&self) -> ComplexVector {
        vectorize(&self.0)
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    pub fn total_population(&self) -> f64 {
        self.0.trace().re
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.0.hermitian_defect()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }
}

/// Source term `Λ`, in units of rate.
#[derive(Clone, Debug, PartialEq)]
pub struct PumpMatrix(ComplexMatrix);

impl PumpMatrix {
    /// Only shape is checked here; positivity is part of [`validate`].
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dimension(format!(
                "pump matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(Self(m))
    }

    pub fn diagonal(rates: &[f64]) -> Self {
        let d: Vec<C64> = rates.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self(ComplexMatrix::diagonal(&d))
    }

    pub fn zeros(n: usize) -> Self {
        Self(ComplexMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn vectorize(&self) -> ComplexVector {
        vectorize(&self.0)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RelaxationSpec {
    /// Arbitrary `N² x N²` relaxation superoperator.
    Superoperator(ComplexMatrix),
    /// Population `n` decays out of the system at `population[n]`; coherence
    /// `ρ_nm` decays at `coherence[n * N + m]` (diagonal entries unused).
    Decay {
        population: Vec<f64>,
        coherence: Vec<f64>,
    },
}

impl RelaxationSpec {
    pub fn decay(population: Vec<f64>, coherence: Vec<Vec<f64>>) -> Result<Self> {
        let n = population.len();
        if coherence.len() != n || coherence.iter().any(|row| row.len() != n) {
            return Err(Error::dimension(format!(
                "coherence decay table must be {n}x{n}"
            )));
        }
        Ok(Self::Decay {
            population,
            coherence: coherence.concat(),
        })
    }

    /// Decay-out class with coherences damped at the mean of the two
    /// population rates.
    pub fn lifetime_broadened(population: Vec<f64>) -> Self {
        let n = population.len();
        let coherence = (0..n * n)
            .map(|k| 0.5 * (population[k / n] + population[k % n]))
            .collect();
        Self::Decay {
            population,
            coherence,
        }
    }

    pub fn superoperator(&self, n: usize) -> Result<ComplexMatrix> {
        match self {
            Self::Superoperator(r) => {
                if r.rows() != n * n || r.cols() != n * n {
                    return Err(Error::dimension(format!(
                        "relaxation superoperator must be {0}x{0}, got {1}x{2}",
                        n * n,
                        r.rows(),
                        r.cols()
                    )));
                }
                Ok(r.clone())
            }
            Self::Decay {
                population,
                coherence,
            } => {
                if population.len() != n || coherence.len() != n * n {
                    return Err(Error::dimension(format!(
                        "decay rates given for {} levels, model has {n}",
                        population.len()
                    )));
                }
                let mut r = ComplexMatrix::zeros(n * n, n * n);
                for a in 0..n {
                    for b in 0..n {
                        let k = vec_index(n, a, b);
                        let rate = if a == b {
                            population[a]
                        } else {
                            coherence[a * n + b]
                        };
                        r[(k, k)] = C64::new(-rate, 0.0);
                    }
                }
                Ok(r)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    hamiltonian: ComplexMatrix,
    relaxation: RelaxationSpec,
    pump: PumpMatrix,
}

impl ModelSpec {
    pub fn new(hamiltonian: ComplexMatrix, relaxation: RelaxationSpec, pump: PumpMatrix) -> Result<Self> {
        if !hamiltonian.is_square() {
            return Err(Error::dimension("Hamiltonian must be square"));
        }
        let n = hamiltonian.rows();
        if pump.dim() != n {
            return Err(Error::dimension(format!(
                "pump is {0}x{0}, Hamiltonian is {n}x{n}",
                pump.dim()
            )));
        }
        relaxation.superoperator(n)?;
        Ok(Self {
            hamiltonian,
            relaxation,
            pump,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.rows()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn relaxation(&self) -> &RelaxationSpec {
        &self.relaxation
    }

    pub fn pump(&self) -> &PumpMatrix {
        &self.pump
    }
}

/// `N² x N²` generator acting on vectorized density matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    n: usize,
    matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn new(n: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != n * n || matrix.cols() != n * n {
            return Err(Error::dimension(format!(
                "superoperator for {n} levels must be {0}x{0}, got {1}x{2}",
                n * n,
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(Self { n, matrix })
    }

    /// `ρ ↦ -i[H, ρ]`.
    pub fn commutator(h: &ComplexMatrix) -> Self {
        let n = h.rows();
        let mut m = ComplexMatrix::zeros(n * n, n * n);
        for a in 0..n {
            for b in 0..n {
                let row = vec_index(n, a, b);
                for k in 0..n {
                    // (Hρ)_ab = Σ_k H_ak ρ_kb
                    m[(row, vec_index(n, k, b))] += -I * h[(a, k)];
                    // (ρH)_ab = Σ_k ρ_ak H_kb
                    m[(row, vec_index(n, a, k))] += I * h[(k, b)];
                }
            }
        }
        Self { n, matrix: m }
    }

    pub fn levels(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let v = self.matrix.mul_vec(&vectorize(rho))?;
        unvectorize(&v, self.n)
    }
}

/// One named constraint and its outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &'static str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name,
            passed,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<28} {}  {}",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.detail
            )?;
        }
        Ok(())
    }
}

pub const CHECK_HAMILTONIAN: &str = "hamiltonian-hermitian";
pub const CHECK_PUMP: &str = "pump-positivity";
pub const CHECK_RATES: &str = "decay-rates-nonnegative";
pub const CHECK_COHERENCE: &str = "coherence-decay-constraint";

pub fn validate(model: &ModelSpec) -> ValidationReport {
    validate_with(model, &Tolerances::DEFAULT)
}

pub fn validate_with(model: &ModelSpec, tol: &Tolerances) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = model.dim();

    let h = &model.hamiltonian;
    let defect = h.hermitian_defect();
    report.push(
        CHECK_HAMILTONIAN,
        defect <= tol.hermitian * h.max_abs().max(1.0),
        format!("max |H_nm - conj(H_mn)| = {defect:.3e}"),
    );

    report.checks.push(pump_check(&model.pump, tol));

    match &model.relaxation {
        RelaxationSpec::Superoperator(_) => {
            report.push(CHECK_RATES, true, "explicit relaxation superoperator");
            report.push(CHECK_COHERENCE, true, "not applicable to explicit relaxation");
        }
        RelaxationSpec::Decay {
            population,
            coherence,
        } => {
            let bad: Vec<String> = population
                .iter()
                .enumerate()
                .filter(|(_, g)| !(g.is_finite() && **g >= 0.0))
                .map(|(i, g)| format!("Gamma_{} = {g}", i + 1))
                .chain(
                    coherence
                        .iter()
                        .enumerate()
                        .filter(|(k, g)| k / n != k % n && !(g.is_finite() && **g >= 0.0))
                        .map(|(k, g)| format!("gamma_{}{} = {g}", k / n + 1, k % n + 1)),
                )
                .collect();
            report.push(
                CHECK_RATES,
                bad.is_empty(),
                if bad.is_empty() {
                    "all rates finite and nonnegative".to_string()
                } else {
                    bad.join(", ")
                },
            );

            let mut violations = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    let g_ab = coherence[a * n + b];
                    let g_ba = coherence[b * n + a];
                    let bound = 0.5 * (population[a] + population[b]);
                    let slack = 1e-12 * bound.abs().max(1.0);
                    if (g_ab - g_ba).abs() > slack {
                        violations.push(format!(
                            "gamma_{0}{1} = {g_ab} differs from gamma_{1}{0} = {g_ba}",
                            a + 1,
                            b + 1
                        ));
                    }
                    if g_ab < bound - slack {
                        violations.push(format!(
                            "gamma_{}{} = {g_ab} < (Gamma_{} + Gamma_{})/2 = {bound}",
                            a + 1,
                            b + 1,
                            a + 1,
                            b + 1
                        ));
                    }
                }
            }
            report.push(
                CHECK_COHERENCE,
                violations.is_empty(),
                if violations.is_empty() {
                    "gamma_nm >= (Gamma_n + Gamma_m)/2 for all pairs".to_string()
                } else {
                    violations.join(", ")
                },
            );
        }
    }
    report
}

fn pump_check(pump: &PumpMatrix, tol: &Tolerances) -> Check {
    let m = pump.matrix();
    let scale = m.max_abs().max(1.0);
    let mut problems = Vec::new();
    let defect = m.hermitian_defect();
    if defect > tol.hermitian * scale {
        problems.push(format!("not Hermitian (defect {defect:.3e})"));
    }
    for i in 0..m.rows() {
        if m[(i, i)].re < 0.0 {
            problems.push(format!("Lambda_{} = {} < 0", i + 1, m[(i, i)].re));
        }
    }
    if problems.is_empty() {
        // Hermitian here, so eigenvalues are real up to rounding.
        match eig_general(m) {
            Ok(pairs) => {
                let min = pairs.iter().map(|p| p.value.re).fold(f64::INFINITY, f64::min);
                if min < -tol.pump_psd * scale {
                    problems.push(format!("smallest eigenvalue {min:.3e} < 0"));
                }
            }
            Err(e) => problems.push(format!("eigenvalues unavailable: {e}")),
        }
    }
    Check {
        name: CHECK_PUMP,
        passed: problems.is_empty(),
        detail: if problems.is_empty() {
            "Hermitian, positive semidefinite, nonnegative diagonal".to_string()
        } else {
            problems.join(", ")
        },
    }
}

/// Assembles `L = -i[H, ·] + R`. Aborts with every failed constraint if the
/// model does not validate.
pub fn build_superoperator(model: &ModelSpec) -> Result<Superoperator> {
    let report = validate(model);
    if !report.all_passed() {
        return Err(Error::Validation(report.failures()));
    }
    let n = model.dim();
    let mut l = Superoperator::commutator(&model.hamiltonian);
    let r = model.relaxation.superoperator(n)?;
    l.matrix = &l.matrix + &r;
    Ok(l)
}

/// `|Tr(Rρ₀) + Tr Λ|`: at a steady state the relaxation removes exactly the
/// population the pump injects.
pub fn probability_balance(model: &ModelSpec, rho0: &DensityMatrix) -> Result<f64> {
    let n = model.dim();
    if rho0.dim() != n {
        return Err(Error::dimension(format!(
            "state is {0}x{0}, model has {n} levels",
            rho0.dim()
        )));
    }
    let r = model.relaxation.superoperator(n)?;
    let relaxed = unvectorize(&r.mul_vec(&rho0.vectorize())?, n)?;
    let total = relaxed.trace() + model.pump.matrix().trace();
    Ok(total.norm())
}
