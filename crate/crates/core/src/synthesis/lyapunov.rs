//! Dense Lyapunov solver on the vectorized symmetric unknown.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};

/// Largest real part of the spectrum.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// LU factorization of X -> A^T X + X A restricted to symmetric X.
pub struct LyapunovOperator {
    n: usize,
    lu: LU<f64, Dyn, Dyn>,
}

fn sym_index(i: usize, j: usize, n: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * (2 * n - i + 1) / 2 + j - i
}

impl LyapunovOperator {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!("A is {}x{}", n, a.ncols())));
        }
        let m = n * (n + 1) / 2;
        let mut op = DMatrix::zeros(m, m);
        for i in 0..n {
            for j in i..n {
                let r = sym_index(i, j, n);
                for k in 0..n {
                    op[(r, sym_index(k, j, n))] += a[(k, i)];
                    op[(r, sym_index(i, k, n))] += a[(k, j)];
                }
            }
        }
        Ok(Self { n, lu: op.lu() })
    }

    /// Solves A^T X + X A = rhs for symmetric X.
    pub fn solve(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.n;
        if rhs.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side is {:?}, expected {n}x{n}",
                rhs.shape()
            )));
        }
        let mut b = DVector::zeros(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                b[sym_index(i, j, n)] = 0.5 * (rhs[(i, j)] + rhs[(j, i)]);
            }
        }
        let x = self
            .lu
            .solve(&b)
            .ok_or_else(|| Error::SolveSingular("Lyapunov operator".into()))?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolveSingular("Lyapunov operator".into()));
        }
        Ok(DMatrix::from_fn(n, n, |i, j| x[sym_index(i, j, n)]))
    }
}

/// Frobenius norm of A^T P + P A + Q.
pub fn lyapunov_residual(a: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    (a.transpose() * p + p * a + q).norm()
}

/// P solving F1^T P + P F1 + 2 delta P = -I, with F1 + delta I Hurwitz.
pub fn solve_shifted_lyapunov(f1: &DMatrix<f64>, delta: f64) -> Result<DMatrix<f64>> {
    let n = f1.nrows();
    let a = f1 + DMatrix::identity(n, n) * delta;
    let max_real = spectral_abscissa(&a);
    if max_real >= 0.0 {
        return Err(Error::NotHurwitz { max_real });
    }
    let q = DMatrix::identity(n, n);
    let p = LyapunovOperator::new(&a)?.solve(&(-&q))?;
    let residual = lyapunov_residual(&a, &p, &q);
    if residual > 1e-8 * (1.0 + p.norm()) {
        return Err(Error::SolveSingular(format!("Lyapunov residual {residual:e}")));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn index_map_is_bijective() {
        for n in 1..7 {
            let mut seen = vec![false; n * (n + 1) / 2];
            for i in 0..n {
                for j in i..n {
                    let k = sym_index(i, j, n);
                    assert!(!seen[k]);
                    seen[k] = true;
                }
            }
        }
    }

    #[test]
    fn identity_case() {
        let p = solve_shifted_lyapunov(&(-DMatrix::<f64>::identity(4, 4)), 0.0).unwrap();
        assert!((p - DMatrix::identity(4, 4) * 0.5).norm() < 1e-14);
    }

    #[test]
    fn diagonal_case() {
        let f1 = DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, -3.0]);
        let p = solve_shifted_lyapunov(&f1, 0.5).unwrap();
        assert!((p[(0, 0)] - 1.0 / 3.0).abs() < 1e-14);
        assert!((p[(1, 1)] - 0.2).abs() < 1e-14);
        assert!(p[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn unstable_rejected() {
        let f1 = DMatrix::from_row_slice(1, 1, &[-0.2]);
        assert!(matches!(
            solve_shifted_lyapunov(&f1, 0.5),
            Err(Error::NotHurwitz { .. })
        ));
    }

    proptest! {
        #[test]
        fn residual_is_small(
            n in 1usize..=8,
            entries in proptest::collection::vec(-1.0f64..1.0, 64),
        ) {
            let mut f = DMatrix::from_fn(n, n, |i, j| entries[i * 8 + j]);
            let shift = spectral_abscissa(&f) + 1.0;
            f -= DMatrix::identity(n, n) * shift;
            let p = solve_shifted_lyapunov(&f, 0.5).unwrap();
            let a = &f + DMatrix::identity(n, n) * 0.5;
            let r = lyapunov_residual(&a, &p, &DMatrix::identity(n, n));
            prop_assert!(r <= 1e-8 * (1.0 + p.norm()));
            prop_assert!(p.symmetric_eigen().eigenvalues.min() > 0.0);
        }
    }
}
