//! Closed-loop equilibrium for a constant reference.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{derivative, simpson};
use crate::spectral_model::ReducedModel;

/// Residual of each line of the equilibrium system, max-abs over its rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumResiduals {
    /// (-lambda_n + q_c) w_n + a_n u + b_n v, n up to the tail horizon.
    pub plant_modes: f64,
    /// v_e - K W_a
    pub feedback: f64,
    /// Integrator right-hand side.
    pub integrator: f64,
    /// Observer rows 1..N0 (with output injection).
    pub observer_injected: f64,
    /// Observer rows N0+1..N.
    pub observer_free: f64,
    /// max |w_hat_n - w_n|, n <= N.
    pub estimation_error: f64,
    /// |y_e - r_e| with y_e from the regulated trace series.
    pub regulation: f64,
    /// Bound on the part of y_e beyond the tail horizon.
    pub regulation_remainder_bound: f64,
}

impl EquilibriumResiduals {
    pub fn max_line(&self) -> f64 {
        [
            self.plant_modes,
            self.feedback,
            self.integrator,
            self.observer_injected,
            self.observer_free,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumState {
    pub r_e: f64,
    pub u_e: f64,
    pub v_e: f64,
    pub xi_e: f64,
    pub w_hat_e: Vec<f64>,
    /// Modal coefficients to the tail horizon.
    pub w_e_modal: Vec<f64>,
    /// Measured output (untransformed).
    pub y_m_e: f64,
    /// Regulated output (untransformed).
    pub y_e: f64,
    pub residuals: EquilibriumResiduals,
}

/// W_a = (A1 + B1 K)^{-1} B_r r_e, then the remaining modes from the plant rows.
pub fn solve_equilibrium(model: &ReducedModel, r_e: f64) -> Result<EquilibriumState> {
    let modes = &model.modes;
    let (n0, n) = (model.n0, model.n);
    let h = modes.horizon();
    let acl = model.closed_loop_controller();
    let wa = acl.lu().solve(&(&model.br * r_e)).ok_or(Error::SingularClosedLoop)?;
    if wa.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularClosedLoop);
    }
    let u_e = wa[0];
    let xi_e = wa[n0 + 1];
    let v_e = (DMatrix::from_row_slice(1, n0 + 2, &model.k) * &wa)[(0, 0)];

    // Every plant mode follows from its own row; the observer copies modes
    // N0+1..N and takes the first N0 from W_a.
    let w: Vec<f64> = (0..h)
        .map(|i| -(modes.a[i] * u_e + modes.b[i] * v_e) / modes.mu[i])
        .collect();
    let mut w_hat = w[..n].to_vec();
    w_hat[..n0].copy_from_slice(&wa.as_slice()[1..=n0]);

    let plant_modes = (0..h)
        .map(|i| (modes.mu[i] * w[i] + modes.a[i] * u_e + modes.b[i] * v_e).abs())
        .fold(0.0, f64::max);
    let tails = &model.tails;
    let integrator =
        ((0..n0).map(|i| modes.d[i] * w_hat[i]).sum::<f64>() + tails.alpha0.value * u_e + tails.beta0.value * v_e
            - r_e)
            .abs();
    let y_tilde: f64 = (0..h).map(|i| modes.c[i] * w[i]).sum();
    let innovation = (0..n).map(|i| modes.c[i] * w_hat[i]).sum::<f64>() - tails.alpha1.value * u_e - y_tilde;
    let observer_injected = (0..n0)
        .map(|i| (modes.mu[i] * w_hat[i] + modes.a[i] * u_e + modes.b[i] * v_e - model.l[i] * innovation).abs())
        .fold(0.0, f64::max);
    let observer_free = (n0..n)
        .map(|i| (modes.mu[i] * w_hat[i] + modes.a[i] * u_e + modes.b[i] * v_e).abs())
        .fold(0.0, f64::max);
    let estimation_error = (0..n).map(|i| (w_hat[i] - w[i]).abs()).fold(0.0, f64::max);

    let scenario = model.scenario();
    let y_e = (0..h).map(|i| modes.d[i] * w[i]).sum::<f64>() + scenario.reg_offset() * u_e;
    let y_m_e = y_tilde + scenario.meas_offset() * u_e;
    let residuals = EquilibriumResiduals {
        plant_modes,
        feedback: v_e.abs(),
        integrator,
        observer_injected,
        observer_free,
        estimation_error,
        regulation: (y_e - r_e).abs(),
        regulation_remainder_bound: (tails.alpha0.remainder_bound * u_e.abs()
            + tails.beta0.remainder_bound * v_e.abs()),
    };
    Ok(EquilibriumState {
        r_e,
        u_e,
        v_e,
        xi_e,
        w_hat_e: w_hat,
        w_e_modal: w,
        y_m_e,
        y_e,
        residuals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumProfile {
    pub x: Vec<f64>,
    pub z_e: Vec<f64>,
    /// L2 norm of (p z_e')' + (q_c - q) z_e on interior points, by finite differences.
    pub static_residual_l2: f64,
    /// |u_e| times the L2 norm of the unresolved part of a.
    pub truncation_bound: f64,
    /// z_e(1) - u_e
    pub boundary_error: f64,
}

/// z_e = sum w_n phi_n + lift u_e on the basis grid, over the retained modes.
pub fn equilibrium_profile(state: &EquilibriumState, model: &ReducedModel) -> EquilibriumProfile {
    let modes = &model.modes;
    let basis = &modes.basis;
    let grid = basis.grid;
    let scenario = model.scenario();
    let terms = basis.retained().min(state.w_e_modal.len());
    let x = grid.nodes();
    let mut z: Vec<f64> = x.iter().map(|x| scenario.lift(*x) * state.u_e).collect();
    for (pair, w) in basis.pairs.iter().zip(&state.w_e_modal).take(terms) {
        for (zi, phi) in z.iter_mut().zip(&pair.phi) {
            *zi += w * phi;
        }
    }
    let p = basis.p();
    let q = basis.q();
    let dz = derivative(&z, grid.h);
    let flux: Vec<f64> = x.iter().zip(&dz).map(|(x, d)| p.eval(*x) * d).collect();
    let dflux = derivative(&flux, grid.h);
    let mut res: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, xi)| dflux[i] + (modes.plant.q_c - q.eval(*xi)) * z[i])
        .collect();
    // the one-sided stencils at the ends see the boundary layer of the truncated series
    let skip = 2;
    let len = res.len();
    for r in res.iter_mut().take(skip) {
        *r = 0.0;
    }
    for r in res.iter_mut().skip(len - skip) {
        *r = 0.0;
    }
    let sq: Vec<f64> = res.iter().map(|r| r * r).collect();
    let captured: f64 = modes.a[..terms].iter().map(|v| v * v).sum();
    let a_tail = (modes.a_norm2 - captured).max(0.0).sqrt();
    EquilibriumProfile {
        static_residual_l2: simpson(&sq, grid.h).sqrt(),
        truncation_bound: state.u_e.abs() * a_tail,
        boundary_error: z[len - 1] - state.u_e,
        x,
        z_e: z,
    }
}

/// The equilibrium Ŵ_a vector col(u, w_hat_1..N0, xi).
pub fn augmented_state(state: &EquilibriumState, n0: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n0 + 2);
    v[0] = state.u_e;
    v.rows_mut(1, n0).copy_from_slice(&state.w_hat_e[..n0]);
    v[n0 + 1] = state.xi_e;
    v
}

#[cfg(test)]
mod tests {
    use std::sync::{Arc, OnceLock};

    use proptest::prelude::*;

    use super::*;
    use crate::spectral_model::{build_reduced_matrices, ModelOptions, PlantModes, PlantSpec, Scenario};

    fn model() -> &'static ReducedModel {
        static MODEL: OnceLock<ReducedModel> = OnceLock::new();
        MODEL.get_or_init(|| {
            let plant = PlantSpec::constant(1.0, 0.0, 3.0, Scenario::DirichletMeasNeumannReg);
            let options = ModelOptions {
                grid_points: Some(1601),
                tail_horizon: 200,
                tail_tolerance: None,
            };
            let modes = Arc::new(PlantModes::new(&plant, options).unwrap());
            build_reduced_matrices(&modes, 1, 3, &[-10.4134, -11.3747, 2.31], &[1.4373], 0.5).unwrap()
        })
    }

    #[test]
    fn zero_reference_gives_zero_state() {
        let s = solve_equilibrium(model(), 0.0).unwrap();
        assert_eq!(s.u_e, 0.0);
        assert_eq!(s.xi_e, 0.0);
        assert!(s.w_e_modal.iter().all(|w| *w == 0.0));
        assert_eq!(s.y_e, 0.0);
    }

    #[test]
    fn unit_reference_is_regulated() {
        let s = solve_equilibrium(model(), 1.0).unwrap();
        assert!(s.residuals.max_line() < 1e-12, "{:?}", s.residuals);
        assert!(s.residuals.regulation <= 1e-12 + s.residuals.regulation_remainder_bound);
        assert_eq!(s.v_e, 0.0);
        assert!(s.residuals.estimation_error < 1e-12);
        let profile = equilibrium_profile(&s, model());
        assert!(profile.boundary_error.abs() < 1e-12);
        assert!(profile.static_residual_l2 <= profile.truncation_bound);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn linear_in_reference(r in -5.0f64..5.0) {
            let one = solve_equilibrium(model(), 1.0).unwrap();
            let s = solve_equilibrium(model(), r).unwrap();
            let tol = 1e-12 * (1.0 + r.abs());
            prop_assert!((s.u_e - r * one.u_e).abs() <= tol * (1.0 + one.u_e.abs()));
            prop_assert!((s.xi_e - r * one.xi_e).abs() <= tol * (1.0 + one.xi_e.abs()));
            for (a, b) in s.w_e_modal.iter().zip(&one.w_e_modal) {
                prop_assert!((a - r * b).abs() <= tol * (1.0 + b.abs()));
            }
        }
    }
}
