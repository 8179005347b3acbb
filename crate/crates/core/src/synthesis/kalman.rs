//! Kalman rank tests and the Cauchy shooting condition.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{dormand_prince, Tolerance};
use crate::spectral_model::PlantSpec;

/// Relative singular-value threshold for rank decisions.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// |f'(0)| at or below this value fails the Cauchy condition.
pub const CAUCHY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankTest {
    pub full_rank: bool,
    /// Smallest singular value of the Kalman matrix.
    pub margin: f64,
    /// Smallest over largest singular value.
    pub ratio: f64,
}

/// [b, Ab, ..., A^{n-1} b].
pub fn kalman_matrix(a: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut k = DMatrix::zeros(n, n);
    let mut col = b.clone();
    for j in 0..n {
        k.set_column(j, &col);
        col = a * &col;
    }
    k
}

pub fn rank_test(m: &DMatrix<f64>) -> RankTest {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    RankTest {
        full_rank: max > 0.0 && ratio > RANK_TOLERANCE,
        margin: min,
        ratio,
    }
}

pub fn check_controllability(a1: &DMatrix<f64>, b1: &DVector<f64>) -> Result<RankTest> {
    if a1.nrows() != a1.ncols() || b1.len() != a1.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, B has length {}",
            a1.nrows(),
            a1.ncols(),
            b1.len()
        )));
    }
    Ok(rank_test(&kalman_matrix(a1, b1)))
}

/// Observability of (A0, C0) with C0 a single row.
pub fn check_observability(a0: &DMatrix<f64>, c0: &DMatrix<f64>) -> Result<RankTest> {
    if c0.nrows() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "C0 has {} rows, expected 1",
            c0.nrows()
        )));
    }
    check_controllability(&a0.transpose(), &c0.row(0).transpose())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchyCheck {
    /// |f'(0)| for the solution of (p f')' + (q_c - q) f = 0, f(1) = 1, f'(1) = 0.
    pub value: f64,
    pub holds: bool,
}

/// Shoots the static equation backward from x = 1 with adaptive Dormand-Prince.
pub fn check_cauchy_condition(plant: &PlantSpec) -> Result<CauchyCheck> {
    let p = &plant.p;
    let q = &plant.q;
    let q_c = plant.q_c;
    // s = 1 - x; state (f, p f').
    let sys = (2usize, |s: f64, y: &[f64], dy: &mut [f64]| {
        let x = 1.0 - s;
        dy[0] = -y[1] / p.eval(x);
        dy[1] = (q_c - q.eval(x)) * y[0];
    });
    let mut y = [1.0, 0.0];
    let tol = Tolerance {
        rtol: 1e-12,
        atol: 1e-14,
    };
    dormand_prince(&sys, 0.0, &mut y, 1.0, tol, &[], |_, _| Ok(()))?;
    let value = (y[1] / p.eval(0.0)).abs();
    if !value.is_finite() {
        return Err(Error::IntegrationFailure("non-finite shooting result".into()));
    }
    Ok(CauchyCheck {
        value,
        holds: value > CAUCHY_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_model::Scenario;
    use std::f64::consts::PI;

    #[test]
    fn zero_dynamics_not_controllable() {
        let a = DMatrix::zeros(3, 3);
        let mut b = DVector::zeros(3);
        b[0] = 1.0;
        assert!(!check_controllability(&a, &b).unwrap().full_rank);
    }

    #[test]
    fn distinct_diagonal_controllable() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 0.5, 2.0, 3.5]));
        let b = DVector::repeat(4, 1.0);
        assert!(check_controllability(&a, &b).unwrap().full_rank);
    }

    #[test]
    fn cauchy_closed_form() {
        let plant = PlantSpec::constant(1.0, 0.0, 3.0, Scenario::DirichletMeasNeumannReg);
        let c = check_cauchy_condition(&plant).unwrap();
        let exact = 3f64.sqrt() * 3f64.sqrt().sin();
        assert!((c.value - exact).abs() < 1e-9, "{}", c.value);
        assert!(c.holds);
        let plant = PlantSpec::constant(1.0, 0.0, PI * PI, Scenario::DirichletMeasNeumannReg);
        assert!(check_cauchy_condition(&plant).unwrap().value < 1e-6);
        let plant = PlantSpec::constant(1.0, 0.0, 0.0, Scenario::DirichletMeasNeumannReg);
        assert!(!check_cauchy_condition(&plant).unwrap().holds);
    }
}
