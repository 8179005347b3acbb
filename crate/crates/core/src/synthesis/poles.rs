//! Single-input pole assignment (Ackermann) and its observer dual.

use nalgebra::{Complex, DMatrix, DVector};

use super::kalman::{kalman_matrix, rank_test};
use crate::error::{Error, Result};

/// Condition number of the column-scaled controllability matrix above which
/// placement is refused.
pub const CONDITION_LIMIT: f64 = 1e12;
/// Relative tolerance for the placed spectrum.
pub const PLACEMENT_TOLERANCE: f64 = 1e-6;

/// Real coefficients c_0..c_n of the monic polynomial with the given roots.
fn characteristic_polynomial(roots: &[Complex<f64>]) -> Result<Vec<f64>> {
    let mut c = vec![Complex::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex::new(0.0, 0.0); c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i + 1] += ci;
            next[i] -= ci * r;
        }
        c = next;
    }
    let scale = c.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if c.iter().any(|z| z.im.abs() > 1e-9 * scale) {
        return Err(Error::InvalidArgument(
            "targets are not closed under conjugation".into(),
        ));
    }
    Ok(c.iter().map(|z| z.re).collect())
}

/// Largest relative distance between `eigs` and `targets` under greedy
/// nearest matching.
pub fn spectrum_mismatch(eigs: &[Complex<f64>], targets: &[Complex<f64>]) -> f64 {
    let mut used = vec![false; targets.len()];
    let mut worst: f64 = 0.0;
    for e in eigs {
        let mut best = (f64::INFINITY, usize::MAX);
        for (j, t) in targets.iter().enumerate() {
            let d = (e - t).norm();
            if !used[j] && d < best.0 {
                best = (d, j);
            }
        }
        if best.1 == usize::MAX {
            return f64::INFINITY;
        }
        used[best.1] = true;
        worst = worst.max(best.0 / targets[best.1].norm().max(1.0));
    }
    worst
}

/// Returns the row K with eig(A + B K) = targets.
pub fn place_poles(a: &DMatrix<f64>, b: &DVector<f64>, targets: &[Complex<f64>]) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n || targets.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, B has length {}, {} targets",
            n,
            a.ncols(),
            b.len(),
            targets.len()
        )));
    }
    let coeffs = characteristic_polynomial(targets)?;
    let ctrb = kalman_matrix(a, b);
    let rank = rank_test(&ctrb);
    if !rank.full_rank {
        return Err(Error::Uncontrollable { ratio: rank.ratio });
    }
    let mut scaled = ctrb.clone();
    for mut col in scaled.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    let sv = scaled.singular_values();
    let condition = sv.max() / sv.min();
    if condition > CONDITION_LIMIT {
        return Err(Error::IllConditioned { condition });
    }

    // phi(A) by Horner
    let mut phi = DMatrix::identity(n, n);
    for c in coeffs.iter().rev().skip(1) {
        phi = a * &phi + DMatrix::identity(n, n) * *c;
    }
    let mut en = DVector::zeros(n);
    en[n - 1] = 1.0;
    let x = ctrb
        .transpose()
        .lu()
        .solve(&en)
        .ok_or_else(|| Error::SolveSingular("controllability matrix".into()))?;
    let k = -(x.transpose() * phi);
    let k: Vec<f64> = k.iter().copied().collect();

    let closed = a + b * DMatrix::from_row_slice(1, n, &k);
    let eigs: Vec<_> = closed.complex_eigenvalues().iter().copied().collect();
    if spectrum_mismatch(&eigs, targets) > PLACEMENT_TOLERANCE {
        return Err(Error::IllConditioned { condition });
    }
    Ok(k)
}

/// Observer gain L with eig(A0 - L C0) = targets, by duality.
pub fn design_l(a0: &DMatrix<f64>, c0: &DMatrix<f64>, targets: &[Complex<f64>]) -> Result<Vec<f64>> {
    if c0.nrows() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "C0 has {} rows, expected 1",
            c0.nrows()
        )));
    }
    let k = place_poles(&a0.transpose(), &c0.row(0).transpose(), targets)?;
    Ok(k.iter().map(|v| -v).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn real(v: &[f64]) -> Vec<Complex<f64>> {
        v.iter().map(|x| Complex::new(*x, 0.0)).collect()
    }

    #[test]
    fn scalar_case() {
        let k = place_poles(&DMatrix::zeros(1, 1), &DVector::from_element(1, 1.0), &real(&[-2.0])).unwrap();
        assert!((k[0] + 2.0).abs() < 1e-14);
        let l = design_l(&DMatrix::zeros(1, 1), &DMatrix::from_element(1, 1, 1.0), &real(&[-1.0])).unwrap();
        assert!((l[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn double_pole() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let b = DVector::from_vec(vec![1.0, 1.0]);
        let k = place_poles(&a, &b, &real(&[-1.0, -1.0])).unwrap();
        // closed-form: trace and determinant of A + B K
        let m = &a + &b * DMatrix::from_row_slice(1, 2, &k);
        assert!((m.trace() + 2.0).abs() < 1e-10);
        assert!((m.determinant() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn complex_pair() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 3.0, 0.0]);
        let b = DVector::from_vec(vec![0.0, 1.0]);
        let t = vec![Complex::new(-1.0, 2.0), Complex::new(-1.0, -2.0)];
        let k = place_poles(&a, &b, &t).unwrap();
        assert!((k[0] + 8.0).abs() < 1e-12 && (k[1] + 2.0).abs() < 1e-12);
        assert!(place_poles(&a, &b, &t[..1].repeat(2)).is_err());
    }

    #[test]
    fn uncontrollable_rejected() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0]));
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(
            place_poles(&a, &b, &real(&[-1.0, -2.0])),
            Err(Error::Uncontrollable { .. })
        ));
    }

    proptest! {
        #[test]
        fn placement_is_exact(
            n in 1usize..=6,
            entries in proptest::collection::vec(-2.0f64..2.0, 36),
            bvals in proptest::collection::vec(0.5f64..1.5, 6),
            gaps in proptest::collection::vec(0.3f64..1.0, 6),
        ) {
            let a = DMatrix::from_fn(n, n, |i, j| entries[i * 6 + j]);
            let b = DVector::from_fn(n, |i, _| bvals[i]);
            let mut t = Vec::new();
            let mut x = -0.5;
            for g in gaps.iter().take(n) {
                x -= g;
                t.push(Complex::new(x, 0.0));
            }
            let ctrb = kalman_matrix(&a, &b);
            let sv = ctrb.singular_values();
            // single-input placement amplifies round-off by roughly the Kalman condition
            prop_assume!(sv.min() / sv.max() > 1e-3);
            let k = place_poles(&a, &b, &t).unwrap();
            let m = &a + &b * DMatrix::from_row_slice(1, n, &k);
            let eigs: Vec<_> = m.complex_eigenvalues().iter().copied().collect();
            prop_assert!(spectrum_mismatch(&eigs, &t) <= PLACEMENT_TOLERANCE);
        }
    }
}
