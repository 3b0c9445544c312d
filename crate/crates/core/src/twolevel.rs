//! Driven two-level system with pumping into both levels and decay out of
//! the system.
//!
//! Level 1 is the lower level (index 0), level 2 the upper (index 1). In the
//! rotating frame the Hamiltonian is `[[ω/2, -V], [-V, -ω/2]]`, which gives
//!
//! ```text
//! d/dt ρ22 = Λ2 - Γ2 ρ22 - iV ρ21 + iV ρ12
//! d/dt ρ21 = Λ21 - iV ρ22 + (iω - γ) ρ21 + iV ρ11
//! d/dt ρ11 = Λ1 - Γ1 ρ11 + iV ρ21 - iV ρ12
//! ```
//!
//! The reference cases list vectors in level-reversed order
//! `(ρ22, ρ21, ρ12, ρ11)`, the exact reverse of the canonical lexicographic
//! layout; [`to_reversed_order`] and [`from_reversed_order`] convert between the two.

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, C64};
use crate::model::{DensityMatrix, ModelSpec, PumpMatrix, RelaxationSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelParams {
    /// Λ1
    pub pump_1: f64,
    /// Λ2
    pub pump_2: f64,
    /// Λ21, the coherent part of the pump.
    pub pump_21: C64,
    /// Γ1
    pub decay_1: f64,
    /// Γ2
    pub decay_2: f64,
    /// γ
    pub coherence_decay: f64,
    /// ω
    pub detuning: f64,
    /// V
    pub coupling: f64,
}

/// Names accepted by [`TwoLevelParams::set`] and [`TwoLevelParams::get`].
pub const PARAM_NAMES: [&str; 9] = [
    "pump_1",
    "pump_2",
    "pump_21_re",
    "pump_21_im",
    "decay_1",
    "decay_2",
    "coherence_decay",
    "detuning",
    "coupling_v",
];

impl TwoLevelParams {
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "pump_1" => self.pump_1,
            "pump_2" => self.pump_2,
            "pump_21_re" => self.pump_21.re,
            "pump_21_im" => self.pump_21.im,
            "decay_1" => self.decay_1,
            "decay_2" => self.decay_2,
            "coherence_decay" => self.coherence_decay,
            "detuning" => self.detuning,
            "coupling_v" => self.coupling,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "pump_1" => self.pump_1 = value,
            "pump_2" => self.pump_2 = value,
            "pump_21_re" => self.pump_21.re = value,
            "pump_21_im" => self.pump_21.im = value,
            "decay_1" => self.decay_1 = value,
            "decay_2" => self.decay_2 = value,
            "coherence_decay" => self.coherence_decay = value,
            "detuning" => self.detuning = value,
            "coupling_v" => self.coupling = value,
            _ => {
                return Err(Error::Domain(format!(
                    "unknown two-level parameter `{name}` (expected one of {})",
                    PARAM_NAMES.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Every violated constraint, empty when the parameters are physical.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let values = [
            ("pump_1", self.pump_1),
            ("pump_2", self.pump_2),
            ("pump_21_re", self.pump_21.re),
            ("pump_21_im", self.pump_21.im),
            ("decay_1", self.decay_1),
            ("decay_2", self.decay_2),
            ("coherence_decay", self.coherence_decay),
            ("detuning", self.detuning),
            ("coupling_v", self.coupling),
        ];
        for (name, v) in values {
            if !v.is_finite() {
                out.push(format!("{name} = {v} is not finite"));
            }
        }
        for (name, v) in [
            ("pump_1", self.pump_1),
            ("pump_2", self.pump_2),
            ("decay_1", self.decay_1),
            ("decay_2", self.decay_2),
            ("coherence_decay", self.coherence_decay),
        ] {
            if v < 0.0 {
                out.push(format!("{name} = {v} must be nonnegative"));
            }
        }
        let bound = 0.5 * (self.decay_1 + self.decay_2);
        if self.coherence_decay < bound - 1e-12 * bound.max(1.0) {
            out.push(format!(
                "coherence_decay = {} < (decay_1 + decay_2)/2 = {bound}",
                self.coherence_decay
            ));
        }
        if self.pump_21.norm_sqr() > self.pump_1 * self.pump_2 * (1.0 + 1e-12) {
            out.push(format!(
                "|pump_21|^2 = {} exceeds pump_1 * pump_2 = {}",
                self.pump_21.norm_sqr(),
                self.pump_1 * self.pump_2
            ));
        }
        out
    }

    pub fn hamiltonian(&self) -> ComplexMatrix {
        let w = 0.5 * self.detuning;
        let v = self.coupling;
        ComplexMatrix::from_real_rows(&[&[w, -v], &[-v, -w]]).expect("finite 2x2")
    }

    pub fn pump_matrix(&self) -> PumpMatrix {
        let m = ComplexMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => C64::new(self.pump_1, 0.0),
            (1, 1) => C64::new(self.pump_2, 0.0),
            (1, 0) => self.pump_21,
            _ => self.pump_21.conj(),
        });
        PumpMatrix::new(m).expect("square")
    }

    pub fn relaxation(&self) -> RelaxationSpec {
        let g = self.coherence_decay;
        RelaxationSpec::decay(vec![self.decay_1, self.decay_2], vec![vec![0.0, g], vec![g, 0.0]])
            .expect("2x2 table")
    }
}

pub fn to_model(p: &TwoLevelParams) -> Result<ModelSpec> {
    let problems = p.violations();
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }
    ModelSpec::new(p.hamiltonian(), p.relaxation(), p.pump_matrix())
}

/// Reverses a length-4 vector between canonical `(ρ11, ρ12, ρ21, ρ22)` and
/// reversed `(ρ22, ρ21, ρ12, ρ11)` order. The map is its own inverse.
pub fn to_reversed_order(v: &ComplexVector) -> ComplexVector {
    v.iter().rev().copied().collect()
}

pub fn from_reversed_order(v: &ComplexVector) -> ComplexVector {
    to_reversed_order(v)
}

/// `P L Pᵀ` with `P` the order reversal.
pub fn superoperator_in_reversed_order(l: &ComplexMatrix) -> ComplexMatrix {
    let n = l.rows();
    ComplexMatrix::from_fn(n, n, |i, j| l[(n - 1 - i, n - 1 - j)])
}

/// `ρ22 - ρ11`.
pub fn population_difference(rho: &DensityMatrix) -> f64 {
    rho.get(1, 1).re - rho.get(0, 0).re
}

/// Closed-form `ρ22(∞) - ρ11(∞)`:
/// `(Λ2/Γ2 - Λ1/Γ1) (1 - η²V² / (ω² + γ² + η²V²))`.
///
/// Valid for `Λ21 = 0` and both decay rates positive; steady states are
/// otherwise obtained from the linear solve.
pub fn analytic_population_difference(p: &TwoLevelParams) -> Result<f64> {
    let eta2 = eta_squared(p)?;
    let v2 = p.coupling * p.coupling;
    let lorentz = p.detuning * p.detuning + p.coherence_decay * p.coherence_decay;
    let bare = p.pump_2 / p.decay_2 - p.pump_1 / p.decay_1;
    if lorentz + eta2 * v2 == 0.0 {
        // γ = ω = V = 0: levels uncoupled, the bare difference survives
        return Ok(bare);
    }
    Ok(bare * lorentz / (lorentz + eta2 * v2))
}

/// `η² = 2γ(Γ1 + Γ2)/(Γ1 Γ2)`, bounded below by 4 for physical parameters.
pub fn eta_squared(p: &TwoLevelParams) -> Result<f64> {
    if !(p.decay_1 > 0.0 && p.decay_2 > 0.0) {
        return Err(Error::Domain(format!(
            "closed form needs decay_1 > 0 and decay_2 > 0 (got {}, {}); use the steady-state solve",
            p.decay_1, p.decay_2
        )));
    }
    Ok(2.0 * p.coherence_decay * (p.decay_1 + p.decay_2) / (p.decay_1 * p.decay_2))
}

/// Limit of the closed form as `Γ2 → 0`: `Λ2(ω² + γ²)/(2γV²)`, independent
/// of `Λ1` and `Γ1`.
pub fn gamma2_zero_limit_difference(p: &TwoLevelParams) -> Result<f64> {
    if p.decay_2 != 0.0 {
        return Err(Error::Domain(format!(
            "limit applies to decay_2 = 0, got {}",
            p.decay_2
        )));
    }
    if p.coupling == 0.0 {
        if p.pump_2 > 0.0 {
            return Err(Error::UnboundedGrowth(
                "upper level is pumped but has neither decay nor coupling".into(),
            ));
        }
        return Err(Error::Domain("limit needs coupling_v != 0".into()));
    }
    if !(p.decay_1 > 0.0 && p.coherence_decay > 0.0) {
        return Err(Error::Domain(format!(
            "limit needs decay_1 > 0 and coherence_decay > 0 (got {}, {})",
            p.decay_1, p.coherence_decay
        )));
    }
    let w2g2 = p.detuning * p.detuning + p.coherence_decay * p.coherence_decay;
    Ok(p.pump_2 * w2g2 / (2.0 * p.coherence_decay * p.coupling * p.coupling))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialState {
    Zero,
    Excited,
}

impl InitialState {
    pub fn density_matrix(self, n: usize) -> DensityMatrix {
        match self {
            Self::Zero => DensityMatrix::zeros(n),
            Self::Excited => {
                let mut p = vec![0.0; n];
                p[n - 1] = 1.0;
                DensityMatrix::from_populations(&p)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceCase {
    pub case_id: u32,
    pub params: TwoLevelParams,
    /// Initial state used for the time-evolution reference runs.
    pub initial: InitialState,
    /// `(ρ22, ρ21, ρ12, ρ11)`
    pub steady_state: [C64; 4],
    pub eigenvalues: [C64; 4],
}

impl ReferenceCase {
    pub fn steady_state_canonical(&self) -> ComplexVector {
        from_reversed_order(&self.steady_state.iter().copied().collect())
    }

    pub fn eigenvalue_sum(&self) -> f64 {
        -(self.params.decay_1 + self.params.decay_2 + 2.0 * self.params.coherence_decay)
    }
}

/// Raw contents of `data/reference_cases.csv`.
pub const FIXTURE_DATA: &str = include_str!("../data/reference_cases.csv");

pub fn reference_cases() -> Vec<ReferenceCase> {
    parse_fixtures(FIXTURE_DATA).expect("bundled fixture table is well formed")
}

pub fn reference_case(case_id: u32) -> Result<ReferenceCase> {
    reference_cases()
        .into_iter()
        .find(|f| f.case_id == case_id)
        .ok_or(Error::InvalidFixture(case_id))
}

fn parse_fixtures(text: &str) -> Result<Vec<ReferenceCase>> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Domain("fixture table has no header".into()))?
        .split(',')
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::Domain(format!("fixture table lacks column `{name}`")))
    };
    let mut out = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let num = |name: &str| -> Result<f64> {
            let s = fields[col(name)?];
            s.parse()
                .map_err(|_| Error::Domain(format!("bad number `{s}` in column {name}")))
        };
        let cplx = |stem: &str| -> Result<C64> {
            Ok(C64::new(num(&format!("{stem}_re"))?, num(&format!("{stem}_im"))?))
        };
        let initial = match fields[col("init_rho")?] {
            "zero" => InitialState::Zero,
            "excited" => InitialState::Excited,
            other => return Err(Error::Domain(format!("unknown initial state `{other}`"))),
        };
        out.push(ReferenceCase {
            case_id: num("case")? as u32,
            params: TwoLevelParams {
                pump_1: num("pump_1")?,
                pump_2: num("pump_2")?,
                pump_21: cplx("pump_21")?,
                decay_1: num("decay_1")?,
                decay_2: num("decay_2")?,
                coherence_decay: num("coherence_decay")?,
                detuning: num("detuning")?,
                coupling: num("coupling_v")?,
            },
            initial,
            steady_state: [cplx("rho22")?, cplx("rho21")?, cplx("rho12")?, cplx("rho11")?],
            eigenvalues: [
                cplx("lambda1")?,
                cplx("lambda2")?,
                cplx("lambda3")?,
                cplx("lambda4")?,
            ],
        });
    }
    Ok(out)
}
