//! General (non-Hermitian) dense eigensolver.
//!
//! Balancing, Householder reduction to upper Hessenberg form, and explicitly
//! shifted complex QR sweeps (Wilkinson shift, Givens rotations) produce a
//! Schur form `A = Z T Z†`. Eigenvectors of `T` come from one inverse
//! iteration step per eigenvalue, which on a triangular matrix reduces to
//! back-substitution with near-zero denominators perturbed to `ε‖T‖`.

use std::cmp::Ordering;

use super::{ComplexMatrix, ComplexVector, C64, ONE, ZERO};
use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub value: C64,
    /// Unit 2-norm right eigenvector.
    pub vector: ComplexVector,
}

pub fn eig_general(a: &ComplexMatrix) -> Result<Vec<EigenPair>> {
    eig_general_with(a, &Tolerances::DEFAULT)
}

/// Eigenpairs of `a`, sorted by real part descending then imaginary part
/// ascending.
pub fn eig_general_with(a: &ComplexMatrix, tol: &Tolerances) -> Result<Vec<EigenPair>> {
    if !a.is_square() {
        return Err(Error::dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let (mut h, scale) = balance(a);
    let mut z = reduce_to_hessenberg(&mut h);
    schur_iterate(&mut h, &mut z, tol)?;

    let vectors = triangular_eigenvectors(&h);
    let mut pairs: Vec<EigenPair> = (0..n)
        .map(|k| {
            let w = &vectors[k];
            let mut v = ComplexVector::zeros(n);
            for i in 0..n {
                let mut s = ZERO;
                for (j, wj) in w.iter().enumerate().take(k + 1) {
                    s += z[(i, j)] * wj;
                }
                v[i] = s * scale[i];
            }
            EigenPair {
                value: h[(k, k)],
                vector: v.normalized(),
            }
        })
        .collect();

    sort_pairs(&mut pairs, a.frobenius_norm());
    Ok(pairs)
}

fn sort_pairs(pairs: &mut [EigenPair], norm: f64) {
    // Real parts are compared on a grid so that rounding noise does not
    // reorder conjugate pairs or degenerate clusters.
    let quantum = 1e-10 * norm.max(f64::MIN_POSITIVE);
    let key = |z: &C64| (z.re / quantum).round();
    pairs.sort_by(|p, q| {
        key(&q.value)
            .total_cmp(&key(&p.value))
            .then_with(|| p.value.im.total_cmp(&q.value.im))
            .then(Ordering::Equal)
    });
}

/// Diagonal similarity `D⁻¹ A D` with power-of-two scalings that equalize
/// row and column norms. Returns the balanced matrix and the diagonal of `D`.
fn balance(a: &ComplexMatrix) -> (ComplexMatrix, Vec<f64>) {
    const RADIX: f64 = 2.0;
    let n = a.rows();
    let mut b = a.clone();
    let mut d = vec![1.0; n];
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += b[(j, i)].norm();
                    r += b[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                d[i] *= f;
                for j in 0..n {
                    b[(i, j)] /= f;
                    b[(j, i)] *= f;
                }
            }
        }
    }
    (b, d)
}

/// Overwrites `h` with its upper Hessenberg form and returns the unitary
/// `Q` with `A = Q H Q†`.
fn reduce_to_hessenberg(h: &mut ComplexMatrix) -> ComplexMatrix {
    let n = h.rows();
    let mut q = ComplexMatrix::identity(n);
    if n < 3 {
        return q;
    }
    for k in 0..n - 2 {
        let m = n - k - 1;
        let mut v: Vec<C64> = (0..m).map(|i| h[(k + 1 + i, k)]).collect();
        let xnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = v[0];
        let phase = if x0 == ZERO { ONE } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H <- P H with P = I - 2 v v†, acting on rows k+1..n.
        for j in 0..n {
            let s: C64 = (0..m).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum();
            for i in 0..m {
                h[(k + 1 + i, j)] -= 2.0 * v[i] * s;
            }
        }
        // H <- H P and Q <- Q P, acting on columns k+1..n.
        for mat in [&mut *h, &mut q] {
            for i in 0..n {
                let s: C64 = (0..m).map(|j| mat[(i, k + 1 + j)] * v[j]).sum();
                for j in 0..m {
                    mat[(i, k + 1 + j)] -= 2.0 * s * v[j].conj();
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    q
}

#[derive(Clone, Copy)]
struct Givens {
    c: f64,
    s: C64,
}

impl Givens {
    /// Rotation `G = [[c, s], [-conj(s), c]]` with `G (a, b)ᵀ = (r, 0)ᵀ`.
    fn zeroing(a: C64, b: C64) -> Self {
        if b == ZERO {
            return Self { c: 1.0, s: ZERO };
        }
        if a == ZERO {
            return Self { c: 0.0, s: ONE };
        }
        let an = a.norm();
        let nu = an.hypot(b.norm());
        let alpha = a / an;
        Self {
            c: an / nu,
            s: alpha * b.conj() / nu,
        }
    }

    fn apply_left(&self, m: &mut ComplexMatrix, r1: usize, r2: usize, cols: std::ops::Range<usize>) {
        for j in cols {
            let x = m[(r1, j)];
            let y = m[(r2, j)];
            m[(r1, j)] = self.c * x + self.s * y;
            m[(r2, j)] = -self.s.conj() * x + self.c * y;
        }
    }

    /// `M <- M G†` on columns `c1, c2`.
    fn apply_right_adjoint(
        &self,
        m: &mut ComplexMatrix,
        c1: usize,
        c2: usize,
        rows: std::ops::Range<usize>,
    ) {
        for i in rows {
            let x = m[(i, c1)];
            let y = m[(i, c2)];
            m[(i, c1)] = self.c * x + self.s.conj() * y;
            m[(i, c2)] = -self.s * x + self.c * y;
        }
    }
}

fn wilkinson_shift(h: &ComplexMatrix, hi: usize) -> C64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * (a - d) * 0.25 + b * c).sqrt();
    let mu1 = half_tr + disc;
    let mu2 = half_tr - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

/// Drives the Hessenberg matrix `h` to upper triangular form, accumulating
/// the rotations into `z`.
fn schur_iterate(h: &mut ComplexMatrix, z: &mut ComplexMatrix, tol: &Tolerances) -> Result<()> {
    let n = h.rows();
    let hnorm = h.frobenius_norm();
    if n < 2 || hnorm == 0.0 {
        return Ok(());
    }
    let budget = tol.max_qr_iterations_per_eigenvalue;
    let mut hi = n - 1;
    let mut iter = 0;
    let mut total = 0;
    let mut rotations: Vec<Givens> = Vec::with_capacity(n);

    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let mut s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if s == 0.0 {
                s = hnorm;
            }
            if h[(lo, lo - 1)].norm() <= tol.deflation * s {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }

        iter += 1;
        total += 1;
        if iter > budget {
            return Err(Error::NoConvergence { iterations: total });
        }
        let shift = if iter % 10 == 0 {
            // exceptional shift to break cycles
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].norm(), 0.5 * h[(hi, hi - 1)].norm())
        } else {
            wilkinson_shift(h, hi)
        };

        for k in lo..=hi {
            h[(k, k)] -= shift;
        }
        rotations.clear();
        for k in lo..hi {
            let g = Givens::zeroing(h[(k, k)], h[(k + 1, k)]);
            g.apply_left(h, k, k + 1, k..n);
            h[(k + 1, k)] = ZERO;
            rotations.push(g);
        }
        for (offset, g) in rotations.iter().enumerate() {
            let k = lo + offset;
            g.apply_right_adjoint(h, k, k + 1, 0..(k + 2).min(hi + 1));
            g.apply_right_adjoint(z, k, k + 1, 0..n);
        }
        for k in lo..=hi {
            h[(k, k)] += shift;
        }
    }

    // Clear rounding residue below the diagonal.
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok(())
}

/// Column `k` of the result solves `(T - t_kk) w = 0` with `w_k = 1` and
/// `w_i = 0` for `i > k`.
fn triangular_eigenvectors(t: &ComplexMatrix) -> Vec<Vec<C64>> {
    let n = t.rows();
    let smin = (f64::EPSILON * t.frobenius_norm()).max(f64::MIN_POSITIVE);
    (0..n)
        .map(|k| {
            let lambda = t[(k, k)];
            let mut w = vec![ZERO; k + 1];
            w[k] = ONE;
            for i in (0..k).rev() {
                let mut s = ZERO;
                for j in i + 1..=k {
                    s += t[(i, j)] * w[j];
                }
                let d = t[(i, i)] - lambda;
                let dn = d.norm();
                // Divide by modulus and phase separately so tiny denominators
                // do not underflow.
                w[i] = if dn < smin {
                    -s / smin
                } else {
                    -(s / dn) * (d.conj() / dn)
                };
                let big = w[i].norm();
                if big > 1e150 {
                    for x in w.iter_mut() {
                        *x /= big;
                    }
                }
            }
            w
        })
        .collect()
}
