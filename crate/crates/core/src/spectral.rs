//! Biorthogonal eigendecomposition of a Liouvillian and its metric operator.
//!
//! Right eigenvectors `x_ν` satisfy `L x_ν = λ_ν x_ν`, left eigenvectors
//! `y_ν` satisfy `L† y_ν = conj(λ_ν) y_ν`, normalized so that
//! `⟨⟨y_ν|x_μ⟩⟩ = δ_νμ`. The metric `Ω = Σ y_ν y_ν†` has inverse
//! `Ω⁻¹ = Σ x_ν x_ν†` and maps every `x_ν` to `y_ν`.
//!
//! Gauge: each `x_ν` has unit 2-norm and its first component above
//! [`Tolerances::gauge_threshold`] real and positive. `Ω` depends on this
//! choice (and on the basis picked inside degenerate clusters); the
//! monotonicity and orthogonality statements checked here do not.

use crate::error::{Error, Result};
use crate::linalg::{eig_general, ComplexMatrix, ComplexVector, LuFactors, C64, ONE, ZERO};
use crate::model::Superoperator;
use crate::tolerances::Tolerances;

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    levels: usize,
    eigenvalues: Vec<C64>,
    right: Vec<ComplexVector>,
    left: Vec<ComplexVector>,
    cluster_tol: f64,
}

/// Default cluster width `1e-8 ‖L‖_F`.
pub fn default_cluster_tol(l: &Superoperator) -> f64 {
    Tolerances::DEFAULT.cluster_relative * l.matrix().frobenius_norm()
}

pub fn decompose(l: &Superoperator, cluster_tol: f64) -> Result<SpectralDecomposition> {
    decompose_with(l, cluster_tol, &Tolerances::DEFAULT)
}

pub fn decompose_default(l: &Superoperator) -> Result<SpectralDecomposition> {
    decompose(l, default_cluster_tol(l))
}

pub fn decompose_with(
    l: &Superoperator,
    cluster_tol: f64,
    tol: &Tolerances,
) -> Result<SpectralDecomposition> {
    let a = l.matrix();
    let right = eig_general(a)?;

    if let Some(worst) = right
        .iter()
        .map(|p| p.value)
        .filter(|z| z.re >= -tol.non_decaying)
        .max_by(|p, q| p.re.total_cmp(&q.re))
    {
        return Err(Error::NonDecayingMode { eigenvalue: worst });
    }

    let eigenvalues: Vec<C64> = right.iter().map(|p| p.value).collect();
    let xs: Vec<ComplexVector> = right
        .into_iter()
        .map(|p| fix_gauge(p.vector, tol.gauge_threshold))
        .collect();

    // Left eigenvectors, each paired with the nearest conjugated eigenvalue.
    let mut left_pool: Vec<Option<(C64, ComplexVector)>> = eig_general(&a.adjoint())?
        .into_iter()
        .map(|p| Some((p.value.conj(), p.vector)))
        .collect();
    let mut ys: Vec<ComplexVector> = Vec::with_capacity(xs.len());
    for &lambda in &eigenvalues {
        let best = left_pool
            .iter()
            .enumerate()
            .filter_map(|(i, slot)| slot.as_ref().map(|(mu, _)| (i, (mu - lambda).norm())))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .map(|(i, _)| i)
            .expect("left and right spectra have equal size");
        ys.push(left_pool[best].take().expect("slot is filled").1);
    }

    for cluster in clusters(&eigenvalues, cluster_tol) {
        biorthonormalize_cluster(&cluster, &eigenvalues, &xs, &mut ys, tol)?;
    }

    let dec = SpectralDecomposition {
        levels: l.levels(),
        eigenvalues,
        right: xs,
        left: ys,
        cluster_tol,
    };
    // Cross-cluster overlaps vanish only up to the eigenvector conditioning;
    // a large residual here means the generator is numerically defective.
    let (residual, worst) = dec.biorthonormality_with_worst();
    if residual > 1e-8 {
        return Err(Error::Defective {
            eigenvalue: dec.eigenvalues[worst],
        });
    }
    Ok(dec)
}

fn fix_gauge(v: ComplexVector, threshold: f64) -> ComplexVector {
    let v = v.normalized();
    match v.iter().find(|z| z.norm() > threshold) {
        Some(&z) => v.scale(z.conj() / z.norm()),
        None => v,
    }
}

/// Groups indices whose eigenvalues are connected by links shorter than `tol`.
fn clusters(values: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= tol {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut seen: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = root(&mut label, i);
        match seen[r] {
            Some(g) => groups[g].push(i),
            None => {
                seen[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

/// Replaces the cluster's left vectors `Y_c` by `Y_c G^{-†}` with
/// `G_ij = ⟨⟨y_i|x_j⟩⟩`, so that `Y_c† X_c = I`.
fn biorthonormalize_cluster(
    members: &[usize],
    eigenvalues: &[C64],
    xs: &[ComplexVector],
    ys: &mut [ComplexVector],
    tol: &Tolerances,
) -> Result<()> {
    let k = members.len();
    let gram = ComplexMatrix::from_fn(k, k, |i, j| ys[members[i]].dot(&xs[members[j]]));
    let defective = || Error::Defective {
        eigenvalue: eigenvalues[members[0]],
    };
    let exact_only = Tolerances {
        singular_pivot: 0.0,
        ..*tol
    };
    let lu = LuFactors::new_with(&gram, &exact_only).map_err(|_| defective())?;
    if lu.min_pivot() <= tol.gram_singular {
        return Err(defective());
    }
    // column j of G⁻¹
    let inv_cols: Vec<ComplexVector> = (0..k)
        .map(|j| lu.solve(&ComplexVector::basis(k, j)))
        .collect::<Result<_>>()?;
    let old: Vec<ComplexVector> = members.iter().map(|&m| ys[m].clone()).collect();
    for (j, &m) in members.iter().enumerate() {
        // (G^{-†})_{ij} = conj((G⁻¹)_{ji})
        let mut y = ComplexVector::zeros(old[0].len());
        for (i, yi) in old.iter().enumerate() {
            y.axpy(inv_cols[i][j].conj(), yi);
        }
        ys[m] = y;
    }
    Ok(())
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    pub fn right_vectors(&self) -> &[ComplexVector] {
        &self.right
    }

    pub fn left_vectors(&self) -> &[ComplexVector] {
        &self.left
    }

    pub fn cluster_tol(&self) -> f64 {
        self.cluster_tol
    }

    /// Eigenvalue with the largest real part.
    pub fn slowest(&self) -> C64 {
        self.eigenvalues
            .iter()
            .copied()
            .max_by(|a, b| a.re.total_cmp(&b.re))
            .unwrap_or(ZERO)
    }

    /// Rescales `x_ν → c_ν x_ν` and `y_ν → y_ν / conj(c_ν)`, which keeps
    /// biorthonormality but changes `Ω`.
    pub fn regauge(&self, factors: &[C64]) -> Result<Self> {
        if factors.len() != self.len() {
            return Err(Error::dimension(format!(
                "{} gauge factors for {} modes",
                factors.len(),
                self.len()
            )));
        }
        if factors.iter().any(|c| c.norm() == 0.0 || !c.is_finite()) {
            return Err(Error::Domain("gauge factors must be finite and nonzero".into()));
        }
        let mut out = self.clone();
        for ((x, y), &c) in out.right.iter_mut().zip(out.left.iter_mut()).zip(factors) {
            *x = x.scale(c);
            *y = y.scale(ONE / c.conj());
        }
        Ok(out)
    }

    /// `max |⟨⟨y_ν|x_μ⟩⟩ - δ_νμ|`.
    pub fn biorthonormality_residual(&self) -> f64 {
        self.biorthonormality_with_worst().0
    }

    fn biorthonormality_with_worst(&self) -> (f64, usize) {
        let mut worst = (0.0, 0);
        for (i, y) in self.left.iter().enumerate() {
            for (j, x) in self.right.iter().enumerate() {
                let target = if i == j { ONE } else { ZERO };
                let d = (y.dot(x) - target).norm();
                if d > worst.0 {
                    worst = (d, i);
                }
            }
        }
        worst
    }

    /// `max |Σ_ν x_ν y_ν† - I|`.
    pub fn completeness_residual(&self) -> f64 {
        let n = self.len();
        let mut sum = ComplexMatrix::zeros(n, n);
        for (x, y) in self.right.iter().zip(&self.left) {
            sum = &sum + &ComplexMatrix::outer(x, y);
        }
        (&sum - &ComplexMatrix::identity(n)).max_abs()
    }

    /// `Σ_ν f(λ_ν) x_ν y_ν†`.
    pub fn spectral_sum(&self, f: impl Fn(C64) -> C64) -> ComplexMatrix {
        let n = self.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for ((x, y), &lambda) in self.right.iter().zip(&self.left).zip(&self.eigenvalues) {
            let w = f(lambda);
            for i in 0..n {
                let xi = x[i] * w;
                for j in 0..n {
                    out[(i, j)] += xi * y[j].conj();
                }
            }
        }
        out
    }

    /// `L* = Σ conj(λ_ν) x_ν y_ν†`, conjugating eigenvalues but not states.
    pub fn conjugated_generator(&self) -> ComplexMatrix {
        self.spectral_sum(|z| z.conj())
    }

    /// `max_ν ‖L x_ν - λ_ν x_ν‖` and the same for the left vectors.
    pub fn eigen_residual(&self, l: &Superoperator) -> f64 {
        let a = l.matrix();
        let ah = a.adjoint();
        let mut worst: f64 = 0.0;
        for ((x, y), &lambda) in self.right.iter().zip(&self.left).zip(&self.eigenvalues) {
            let rx = &a.mul_vec(x).expect("dims") - &x.scale(lambda);
            let ry = &ah.mul_vec(y).expect("dims") - &y.scale(lambda.conj());
            worst = worst.max(rx.norm()).max(ry.norm() / y.norm().max(1.0));
        }
        worst
    }
}

/// `Σ_ν λ_ν x_ν y_ν†`.
pub fn reconstruct(dec: &SpectralDecomposition) -> Superoperator {
    Superoperator::new(dec.levels, dec.spectral_sum(|z| z))
        .expect("decomposition dimensions match its level count")
}

#[derive(Clone, Debug)]
pub struct MetricOperator {
    omega: ComplexMatrix,
    omega_inverse: ComplexMatrix,
}

impl MetricOperator {
    pub fn omega(&self) -> &ComplexMatrix {
        &self.omega
    }

    pub fn omega_inverse(&self) -> &ComplexMatrix {
        &self.omega_inverse
    }

    /// `max |Ω Ω⁻¹ - I|`.
    pub fn inverse_residual(&self) -> f64 {
        let n = self.omega.rows();
        (&(&self.omega * &self.omega_inverse) - &ComplexMatrix::identity(n)).max_abs()
    }

    /// `⟨⟨a|Ω|b⟩⟩`.
    pub fn inner(&self, a: &ComplexVector, b: &ComplexVector) -> C64 {
        a.dot(&self.omega.mul_vec(b).expect("dimension matches metric"))
    }

    /// Smallest eigenvalue of `Ω` (real for a Hermitian matrix).
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eig_general(&self.omega)?
            .iter()
            .map(|p| p.value.re)
            .fold(f64::INFINITY, f64::min))
    }
}

/// `Ω = Σ y_ν y_ν†` and `Ω⁻¹ = Σ x_ν x_ν†`.
pub fn build_metric(dec: &SpectralDecomposition) -> Result<MetricOperator> {
    let n = dec.len();
    let mut omega = ComplexMatrix::zeros(n, n);
    let mut omega_inverse = ComplexMatrix::zeros(n, n);
    for (x, y) in dec.right.iter().zip(&dec.left) {
        omega = &omega + &ComplexMatrix::outer(y, y);
        omega_inverse = &omega_inverse + &ComplexMatrix::outer(x, x);
    }
    let metric = MetricOperator {
        omega,
        omega_inverse,
    };
    let scale = metric.omega.max_abs().max(metric.omega_inverse.max_abs());
    let herm = metric
        .omega
        .hermitian_defect()
        .max(metric.omega_inverse.hermitian_defect());
    if herm > 1e-8 * scale.max(1.0) {
        return Err(Error::Domain(format!(
            "metric operator is not Hermitian (defect {herm:e})"
        )));
    }
    let inv = metric.inverse_residual();
    if inv > 1e-8 {
        return Err(Error::Defective {
            eigenvalue: dec.slowest(),
        });
    }
    Ok(metric)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimilarityReport {
    /// `‖Ω L Ω⁻¹ - L*†‖_F / ‖L‖_F`
    pub similarity: f64,
    /// Largest relative residual of `ΩL = L*†Ω`, `LΩ⁻¹ = Ω⁻¹L*†`,
    /// `ΩL* = L†Ω` and `L*Ω⁻¹ = Ω⁻¹L†`.
    pub rearranged: f64,
}

impl SimilarityReport {
    pub fn max(&self) -> f64 {
        self.similarity.max(self.rearranged)
    }
}

/// Checks `Ω L Ω⁻¹ = L*†`, where `L*† = Σ λ_ν y_ν x_ν†` is the adjoint of
/// the generator with conjugated eigenvalues. For a real spectrum this is
/// `L†`, i.e. `L` is self-adjoint in the `Ω` inner product.
pub fn verify_similarity(
    l: &Superoperator,
    dec: &SpectralDecomposition,
    m: &MetricOperator,
) -> SimilarityReport {
    let a = l.matrix();
    let lnorm = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let l_star = dec.conjugated_generator();
    let l_star_dag = l_star.adjoint();
    let l_dag = a.adjoint();
    let om = &m.omega;
    let omi = &m.omega_inverse;

    let lhs = &(om * a) * omi;
    let similarity = (&lhs - &l_star_dag).frobenius_norm() / lnorm;

    let on = om.frobenius_norm() * lnorm;
    let oin = omi.frobenius_norm() * lnorm;
    let rearranged = [
        (&(om * a) - &(&l_star_dag * om)).frobenius_norm() / on,
        (&(a * omi) - &(omi * &l_star_dag)).frobenius_norm() / oin,
        (&(om * &l_star) - &(&l_dag * om)).frobenius_norm() / on,
        (&(&l_star * omi) - &(omi * &l_dag)).frobenius_norm() / oin,
    ]
    .into_iter()
    .fold(0.0, f64::max);

    SimilarityReport {
        similarity,
        rearranged,
    }
}

/// Largest `|⟨⟨x_μ|Ω|x_μ'⟩⟩|` over modes whose eigenvalues are complex
/// conjugates of each other. Zero when the spectrum has no such pair.
pub fn conjugate_pair_orthogonality(dec: &SpectralDecomposition, m: &MetricOperator) -> f64 {
    let tol = dec.cluster_tol;
    let mut worst: f64 = 0.0;
    for (i, li) in dec.eigenvalues.iter().enumerate() {
        if li.im.abs() <= tol {
            continue;
        }
        for (j, lj) in dec.eigenvalues.iter().enumerate() {
            if i != j && (lj - li.conj()).norm() <= tol {
                worst = worst.max(m.inner(&dec.right[i], &dec.right[j]).norm());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_generator() {
        let l = Superoperator::new(
            2,
            ComplexMatrix::diagonal(&[
                C64::new(-1.0, 0.0),
                C64::new(-2.0, 0.0),
                C64::new(-3.0, 0.0),
                C64::new(-4.0, 0.0),
            ]),
        )
        .unwrap();
        let dec = decompose_default(&l).unwrap();
        let vals: Vec<f64> = dec.eigenvalues().iter().map(|z| z.re).collect();
        assert_eq!(vals, vec![-1.0, -2.0, -3.0, -4.0]);
        for (k, (x, y)) in dec.right_vectors().iter().zip(dec.left_vectors()).enumerate() {
            assert_eq!(x, &ComplexVector::basis(4, k));
            assert_eq!(y, &ComplexVector::basis(4, k));
        }
        let m = build_metric(&dec).unwrap();
        assert!((m.omega() - &ComplexMatrix::identity(4)).max_abs() < 1e-15);
        let r = verify_similarity(&l, &dec, &m);
        assert!(r.max() < 1e-15);
        assert_eq!(conjugate_pair_orthogonality(&dec, &m), 0.0);
        assert!((reconstruct(&dec).matrix() - l.matrix()).max_abs() < 1e-15);
    }

    #[test]
    fn jordan_block_is_defective() {
        let j = Superoperator::new(
            2,
            ComplexMatrix::from_real_rows(&[
                &[-1.0, 1.0, 0.0, 0.0],
                &[0.0, -1.0, 0.0, 0.0],
                &[0.0, 0.0, -2.0, 0.0],
                &[0.0, 0.0, 0.0, -3.0],
            ])
            .unwrap(),
        )
        .unwrap();
        assert!(matches!(decompose_default(&j), Err(Error::Defective { .. })));
    }

    #[test]
    fn zero_eigenvalue_rejected() {
        let l = Superoperator::new(
            2,
            ComplexMatrix::diagonal(&[ZERO, C64::new(-1.0, 0.0), C64::new(-1.0, 0.0), C64::new(-2.0, 0.0)]),
        )
        .unwrap();
        match decompose_default(&l) {
            Err(Error::NonDecayingMode { eigenvalue }) => assert_eq!(eigenvalue, ZERO),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hermitian_generator_has_identity_metric() {
        // negative definite Hermitian generator with non-trivial eigenvectors
        let h = ComplexMatrix::from_rows(&[
            vec![C64::new(-3.0, 0.0), C64::new(0.5, 0.5), ZERO, ZERO],
            vec![C64::new(0.5, -0.5), C64::new(-2.0, 0.0), C64::new(0.2, 0.0), ZERO],
            vec![ZERO, C64::new(0.2, 0.0), C64::new(-1.5, 0.0), C64::new(0.0, 0.3)],
            vec![ZERO, ZERO, C64::new(0.0, -0.3), C64::new(-1.0, 0.0)],
        ])
        .unwrap();
        let l = Superoperator::new(2, h).unwrap();
        let dec = decompose_default(&l).unwrap();
        let m = build_metric(&dec).unwrap();
        assert!((m.omega() - &ComplexMatrix::identity(4)).max_abs() < 1e-12);
        assert!((m.omega_inverse() - &ComplexMatrix::identity(4)).max_abs() < 1e-12);
    }

    #[test]
    fn gauge_first_component_real_positive() {
        let v = ComplexVector::new(vec![ZERO, C64::new(0.0, -2.0), C64::new(1.0, 1.0)]).unwrap();
        let g = fix_gauge(v, 1e-8);
        assert!((g.norm() - 1.0).abs() < 1e-15);
        assert!(g[1].im.abs() < 1e-15 && g[1].re > 0.0);
    }

    #[test]
    fn clustering_links_transitively() {
        let vals = [
            C64::new(-1.0, 0.0),
            C64::new(-1.0 + 5e-9, 0.0),
            C64::new(-1.0 + 1e-8 + 4e-9, 0.0),
            C64::new(-2.0, 0.0),
        ];
        let groups = clusters(&vals, 1e-8);
        assert_eq!(groups, vec![vec![0, 1, 2], vec![3]]);
    }
}
