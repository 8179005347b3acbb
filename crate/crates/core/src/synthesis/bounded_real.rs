//! H-infinity norm by the Hamiltonian level-set iteration, and the
//! stabilizing solution of the bounded-real Riccati equation.

use nalgebra::{Complex, DMatrix};

use super::lyapunov::spectral_abscissa;
use crate::error::{Error, Result};

/// Relative gap between the returned upper value and the best lower value.
pub const HINF_TOLERANCE: f64 = 1e-6;

/// Largest singular value of C (j omega I - A)^{-1} B.
pub fn frequency_gain(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, omega: f64) -> f64 {
    let n = a.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j {
            Complex::new(0.0, omega)
        } else {
            Complex::new(0.0, 0.0)
        };
        diag - Complex::new(a[(i, j)], 0.0)
    });
    let bc = b.map(|v| Complex::new(v, 0.0));
    let cc = c.map(|v| Complex::new(v, 0.0));
    match m.lu().solve(&bc) {
        Some(x) => (cc * x).singular_values().max(),
        None => f64::INFINITY,
    }
}

/// Imaginary parts (>= 0) of the eigenvalues of `h` on the imaginary axis.
fn imaginary_crossings(h: &DMatrix<f64>) -> Vec<f64> {
    let scale = h.norm().max(1.0);
    let mut w: Vec<f64> = h
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.re.abs() <= 1e-8 * scale && z.im >= 0.0)
        .map(|z| z.im)
        .collect();
    w.sort_by(f64::total_cmp);
    w
}

/// Upper value of ||C (sI - A)^{-1} B||_inf for Hurwitz A, within a relative
/// gap of `HINF_TOLERANCE` of an attained lower value.
pub fn hinf_norm(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    let max_real = spectral_abscissa(a);
    if max_real >= 0.0 {
        return Err(Error::NotHurwitz { max_real });
    }
    let mut omegas = vec![0.0];
    let eigs = a.complex_eigenvalues();
    let mut top: f64 = 1.0;
    for z in eigs.iter() {
        omegas.push(z.im.abs());
        omegas.push(z.norm());
        top = top.max(z.norm());
    }
    for k in 0..=60 {
        omegas.push(1e-3 * (1e4 * top / 1e-3).powf(k as f64 / 60.0));
    }
    let mut lower = omegas.iter().map(|w| frequency_gain(a, b, c, *w)).fold(0.0, f64::max);
    if lower == 0.0 {
        return Ok(0.0);
    }
    let bbt = b * b.transpose();
    let ctc = c.transpose() * c;
    let mut upper = lower * (1.0 + 2.0 * HINF_TOLERANCE);
    for _ in 0..100 {
        upper = lower * (1.0 + 2.0 * HINF_TOLERANCE);
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        h.view_mut((0, 0), (n, n)).copy_from(a);
        h.view_mut((0, n), (n, n)).copy_from(&(&bbt / (upper * upper)));
        h.view_mut((n, 0), (n, n)).copy_from(&(-&ctc));
        h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
        let crossings = imaginary_crossings(&h);
        if crossings.is_empty() {
            return Ok(upper);
        }
        let mut probes = crossings.clone();
        probes.extend(crossings.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        let next = probes.iter().map(|w| frequency_gain(a, b, c, *w)).fold(lower, f64::max);
        if next <= lower * (1.0 + 1e-12) {
            // spurious crossings within round-off: keep the current value
            return Ok(upper);
        }
        lower = next;
    }
    Ok(upper)
}

/// Stabilizing solution of A^T P + P A + P R P + Q = 0 (R, Q symmetric),
/// i.e. A + R P Hurwitz, by the Hamiltonian matrix sign function.
pub fn riccati_stabilizing(a: &DMatrix<f64>, r: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let m = 2 * n;
    let mut z = DMatrix::zeros(m, m);
    z.view_mut((0, 0), (n, n)).copy_from(a);
    z.view_mut((0, n), (n, n)).copy_from(r);
    z.view_mut((n, 0), (n, n)).copy_from(&(-q));
    z.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    let mut scaling = true;
    let mut converged = false;
    for _ in 0..100 {
        let lu = z.clone().lu();
        let inv = lu
            .try_inverse()
            .ok_or_else(|| Error::SolveSingular("Hamiltonian has an eigenvalue at zero".into()))?;
        let c = if scaling {
            let log_det: f64 = z.clone().lu().u().diagonal().iter().map(|v| v.abs().ln()).sum();
            (-log_det / m as f64).exp()
        } else {
            1.0
        };
        let next = (&z * c + inv / c) * 0.5;
        let change = (&next - &z).norm() / next.norm();
        z = next;
        if change < 1e-2 {
            scaling = false;
        }
        if change < 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged || z.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolveSingular(
            "sign iteration did not converge (imaginary-axis eigenvalues)".into(),
        ));
    }
    let id = DMatrix::<f64>::identity(n, n);
    let mut lhs = DMatrix::zeros(m, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&z.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n)).copy_from(&(z.view((n, n), (n, n)) + &id));
    let mut rhs = DMatrix::zeros(m, n);
    rhs.view_mut((0, 0), (n, n))
        .copy_from(&(-(z.view((0, 0), (n, n)) + &id)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-z.view((n, 0), (n, n))));
    let p = lhs
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::SolveSingular(e.to_string()))?;
    let p = (&p + p.transpose()) * 0.5;
    let max_real = spectral_abscissa(&(a + r * &p));
    if max_real >= 0.0 {
        return Err(Error::NotHurwitz { max_real });
    }
    Ok(p)
}

/// Frobenius norm of A^T P + P A + P R P + Q.
pub fn riccati_residual(a: &DMatrix<f64>, r: &DMatrix<f64>, q: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    (a.transpose() * p + p * a + p * r * p + q).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_lag() {
        // 1/(s + 2): peak gain 1/2 at omega = 0
        let a = DMatrix::from_element(1, 1, -2.0);
        let b = DMatrix::from_element(1, 1, 1.0);
        let h = hinf_norm(&a, &b, &b).unwrap();
        assert!((0.5..=0.5 * (1.0 + 3e-6)).contains(&h), "{h}");
    }

    #[test]
    fn resonant_peak() {
        // 1/(s^2 + 0.2 s + 1): peak 1/(2 zeta sqrt(1 - zeta^2)) with zeta = 0.1
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -0.2]);
        let b = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let exact = 1.0 / (0.2 * (1.0f64 - 0.01).sqrt());
        let h = hinf_norm(&a, &b, &c).unwrap();
        assert!(h >= exact * (1.0 - 1e-12) && h <= exact * (1.0 + 3e-6), "{h} {exact}");
    }

    #[test]
    fn scalar_riccati() {
        // -2p + r p^2 + q = 0 with a = -1, r = 1, q = 0.75: p = 0.5 (stabilizing)
        let a = DMatrix::from_element(1, 1, -1.0);
        let r = DMatrix::from_element(1, 1, 1.0);
        let q = DMatrix::from_element(1, 1, 0.75);
        let p = riccati_stabilizing(&a, &r, &q).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-12, "{p}");
        assert!(riccati_residual(&a, &r, &q, &p) < 1e-12);
    }

    #[test]
    fn riccati_against_lyapunov_limit() {
        let a = DMatrix::from_row_slice(3, 3, &[-1.0, 0.3, 0.0, 0.0, -2.0, 0.5, 0.2, 0.0, -1.5]);
        let r = DMatrix::from_fn(3, 3, |i, j| 0.01 * ((i + 1) * (j + 1)) as f64);
        let q = DMatrix::identity(3, 3);
        let p = riccati_stabilizing(&a, &r, &q).unwrap();
        assert!(riccati_residual(&a, &r, &q, &p) < 1e-10 * (1.0 + p.norm()));
        assert!(p.symmetric_eigen().eigenvalues.min() > 0.0);
    }
}
