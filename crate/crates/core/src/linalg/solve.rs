use super::{ComplexMatrix, ComplexVector, C64, ONE, ZERO};
use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct LuFactors {
    lu: ComplexMatrix,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        Self::new_with(a, &Tolerances::DEFAULT)
    }

    pub fn new_with(a: &ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dimension(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let threshold = tol.singular_pivot * a.max_abs().max(f64::MIN_POSITIVE);
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut deficiency = 0;

        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= threshold {
                deficiency += 1;
                continue;
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= factor * u;
                }
            }
        }
        if deficiency > 0 {
            return Err(Error::Singular {
                rank_deficiency: deficiency,
            });
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve(&self, b: &ComplexVector) -> Result<ComplexVector> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::dimension(format!(
                "right-hand side has length {}, expected {n}",
                b.len()
            )));
        }
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        Ok(ComplexVector(x))
    }

    pub fn min_pivot(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.lu[(k, k)].norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Solves `a x = b` by pivoted elimination followed by two rounds of
/// iterative refinement.
pub fn solve_linear(a: &ComplexMatrix, b: &ComplexVector) -> Result<ComplexVector> {
    solve_linear_with(a, b, &Tolerances::DEFAULT)
}

pub fn solve_linear_with(
    a: &ComplexMatrix,
    b: &ComplexVector,
    tol: &Tolerances,
) -> Result<ComplexVector> {
    if b.len() != a.rows() {
        return Err(Error::dimension(format!(
            "right-hand side has length {}, matrix has {} rows",
            b.len(),
            a.rows()
        )));
    }
    let lu = LuFactors::new_with(a, tol)?;
    let mut x = lu.solve(b)?;
    for _ in 0..2 {
        let r = b - &a.apply(&x);
        let dx = lu.solve(&r)?;
        x.axpy(ONE, &dx);
    }
    Ok(x)
}

pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let lu = LuFactors::new(a)?;
    let n = a.rows();
    let cols = (0..n)
        .map(|k| lu.solve(&ComplexVector::basis(n, k)))
        .collect::<Result<Vec<_>>>()?;
    ComplexMatrix::from_columns(&cols)
}
