//! Numerical thresholds shared across the crate.
//!
//! Every threshold lives in [`Tolerances`]. Routines that accept a custom
//! record have a `_with` variant; the plain variants use [`Tolerances::DEFAULT`].

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative size of a subdiagonal entry below which QR iteration deflates.
    pub deflation: f64,
    /// QR sweeps allowed per eigenvalue before giving up.
    pub max_qr_iterations_per_eigenvalue: usize,
    /// Pivot magnitude, relative to the largest entry, treated as zero.
    pub singular_pivot: f64,
    /// Cluster width for degenerate eigenvalues, relative to the Frobenius norm of the generator.
    pub cluster_relative: f64,
    /// Smallest acceptable pivot of a cluster Gram matrix.
    pub gram_singular: f64,
    /// Eigenvalues with real part at or above `-non_decaying` are rejected.
    pub non_decaying: f64,
    /// Components below this modulus are skipped when fixing the eigenvector phase.
    pub gauge_threshold: f64,
    /// Hermiticity tolerance for Hamiltonians and density matrices.
    pub hermitian: f64,
    /// Populations may dip this far below zero before being flagged.
    pub population_floor: f64,
    /// Smallest pump eigenvalue accepted as positive semidefinite.
    pub pump_psd: f64,
    /// Imaginary residue allowed in the Lyapunov quadratic form.
    pub metric_imaginary: f64,
    /// Growth factor over the initial scale that signals integrator blow-up.
    pub blow_up: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        deflation: 1e-12,
        max_qr_iterations_per_eigenvalue: 60,
        singular_pivot: 1e-13,
        cluster_relative: 1e-8,
        gram_singular: 1e-10,
        non_decaying: 1e-12,
        gauge_threshold: 1e-8,
        hermitian: 1e-12,
        population_floor: 1e-9,
        pump_psd: 1e-10,
        metric_imaginary: 1e-10,
        blow_up: 1e12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
