//! Lifted inputs, modal coefficients, tail constants and the reduced
//! closed-loop matrices for the three measurement/regulation scenarios.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coefficient::CoefficientFunction;
use crate::error::{Error, Result};
use crate::quadrature::{simpson, Grid};
use crate::sturm_liouville::{
    solve_eigenproblem_with, BoundaryDomain, SolveOptions, SpectralBasis, DEFAULT_GRID_POINTS,
};

pub const DEFAULT_TAIL_HORIZON: usize = 600;
pub const DEFAULT_EPSILON: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Dirichlet measurement z(t,0), Dirichlet regulated output z(t,0).
    DirichletMeasDirichletReg,
    /// Neumann measurement z_x(t,0), Neumann regulated output z_x(t,0).
    NeumannMeasNeumannReg,
    /// Dirichlet measurement z(t,0), Neumann regulated output z_x(t,1).
    DirichletMeasNeumannReg,
}

/// Which boundary trace of the eigenfunctions a row of the model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trace {
    Value0,
    Slope0,
    Slope1,
}

impl Trace {
    /// Exponent t with trace^2 = O(lambda^t).
    fn growth(self) -> f64 {
        match self {
            Trace::Value0 => 0.0,
            Trace::Slope0 | Trace::Slope1 => 1.0,
        }
    }
}

impl Scenario {
    pub fn domain(self) -> BoundaryDomain {
        match self {
            Scenario::NeumannMeasNeumannReg => BoundaryDomain::DirichletDirichlet,
            _ => BoundaryDomain::NeumannDirichlet,
        }
    }

    pub fn measured_trace(self) -> Trace {
        match self {
            Scenario::NeumannMeasNeumannReg => Trace::Slope0,
            _ => Trace::Value0,
        }
    }

    pub fn regulated_trace(self) -> Trace {
        match self {
            Scenario::DirichletMeasDirichletReg => Trace::Value0,
            Scenario::NeumannMeasNeumannReg => Trace::Slope0,
            Scenario::DirichletMeasNeumannReg => Trace::Slope1,
        }
    }

    /// y_m = y~ + meas_offset u.
    pub fn meas_offset(self) -> f64 {
        match self {
            Scenario::NeumannMeasNeumannReg => 1.0,
            _ => 0.0,
        }
    }

    /// y_r = (regulated trace series) + reg_offset u; this is also the constant
    /// in alpha_0.
    pub fn reg_offset(self) -> f64 {
        match self {
            Scenario::DirichletMeasDirichletReg => 0.0,
            Scenario::NeumannMeasNeumannReg => 1.0,
            Scenario::DirichletMeasNeumannReg => 2.0,
        }
    }

    /// Exponent s of the error scaling e~_n = lambda_n^s e_n.
    pub fn error_scaling(self) -> f64 {
        match self {
            Scenario::NeumannMeasNeumannReg => 1.0,
            _ => 0.5,
        }
    }

    pub fn lift(self, x: f64) -> f64 {
        match self {
            Scenario::NeumannMeasNeumannReg => x,
            _ => x * x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub p: CoefficientFunction,
    pub q: CoefficientFunction,
    pub q_c: f64,
    pub scenario: Scenario,
}

impl PlantSpec {
    pub fn constant(p: f64, q: f64, q_c: f64, scenario: Scenario) -> Self {
        Self {
            p: CoefficientFunction::constant(p),
            q: CoefficientFunction::constant(q),
            q_c,
            scenario,
        }
    }

    pub fn a(&self, x: f64) -> f64 {
        let (p, dp, q) = (self.p.eval(x), self.p.derivative(x), self.q.eval(x));
        match self.scenario {
            Scenario::NeumannMeasNeumannReg => dp + (self.q_c - q) * x,
            _ => 2.0 * p + 2.0 * x * dp + (self.q_c - q) * x * x,
        }
    }

    pub fn b(&self, x: f64) -> f64 {
        -self.scenario.lift(x)
    }
}

/// Lifted input functions sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedInputs {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub lift: Vec<f64>,
    pub meas_offset: f64,
    pub reg_offset: f64,
}

pub fn lifted_inputs(plant: &PlantSpec, grid: &Grid) -> LiftedInputs {
    LiftedInputs {
        a: grid.sample(|x| plant.a(x)),
        b: grid.sample(|x| plant.b(x)),
        lift: grid.sample(|x| plant.scenario.lift(x)),
        meas_offset: plant.scenario.meas_offset(),
        reg_offset: plant.scenario.reg_offset(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOptions {
    /// Spectral grid; defaults to max(4001, 8 * tail_horizon + 1).
    pub grid_points: Option<usize>,
    pub tail_horizon: usize,
    /// Fail with TailNotConverged when a remainder bound exceeds this.
    pub tail_tolerance: Option<f64>,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            grid_points: None,
            tail_horizon: DEFAULT_TAIL_HORIZON,
            tail_tolerance: None,
        }
    }
}

impl ModelOptions {
    pub fn resolved_grid_points(&self) -> usize {
        self.grid_points
            .unwrap_or_else(|| DEFAULT_GRID_POINTS.max(8 * self.tail_horizon + 1))
    }
}

/// Modal data of a plant up to the tail horizon, computed once and shared by
/// every reduced model built for it.
#[derive(Debug, Clone)]
pub struct PlantModes {
    pub plant: PlantSpec,
    pub basis: SpectralBasis,
    pub options: ModelOptions,
    /// -lambda_n + q_c
    pub mu: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Measured trace row c_n.
    pub c: Vec<f64>,
    /// Regulated trace row d_n.
    pub d: Vec<f64>,
    pub a_norm2: f64,
    pub b_norm2: f64,
    /// sup_n c_n^2 / lambda_n^t over computed modes, with a 5% margin.
    pub c_growth: f64,
    pub d_growth: f64,
}

impl PlantModes {
    pub fn new(plant: &PlantSpec, options: ModelOptions) -> Result<Self> {
        let horizon = options.tail_horizon;
        if horizon < 2 {
            return Err(Error::InvalidArgument("tail_horizon must be at least 2".into()));
        }
        let grid_points = options.resolved_grid_points();
        let a = |x: f64| plant.a(x);
        let b = |x: f64| plant.b(x);
        let solve = SolveOptions {
            retain: None,
            projections: vec![&a, &b],
        };
        let (basis, proj) = solve_eigenproblem_with(
            &plant.p,
            &plant.q,
            plant.scenario.domain(),
            horizon,
            grid_points,
            &solve,
        )?;
        Self::from_basis(plant, basis, proj[0].clone(), proj[1].clone(), options)
    }

    fn from_basis(
        plant: &PlantSpec,
        basis: SpectralBasis,
        a: Vec<f64>,
        b: Vec<f64>,
        options: ModelOptions,
    ) -> Result<Self> {
        let trace = |t: Trace| -> Vec<f64> {
            basis
                .pairs
                .iter()
                .map(|p| match t {
                    Trace::Value0 => p.trace0,
                    Trace::Slope0 => p.dtrace0,
                    Trace::Slope1 => p.dtrace1,
                })
                .collect()
        };
        let c = trace(plant.scenario.measured_trace());
        let d = trace(plant.scenario.regulated_trace());
        let mu: Vec<f64> = basis.pairs.iter().map(|p| -p.lambda + plant.q_c).collect();
        if let Some(n) = mu.iter().position(|m| *m == 0.0) {
            return Err(Error::SolveSingular(format!("-lambda_{} + q_c vanishes", n + 1)));
        }
        let fine = Grid::new(2 * basis.grid.points - 1);
        let a_norm2 = simpson(&fine.sample(|x| plant.a(x).powi(2)), fine.h);
        let b_norm2 = simpson(&fine.sample(|x| plant.b(x).powi(2)), fine.h);
        let growth = |row: &[f64], t: Trace| -> f64 {
            let e = t.growth();
            1.05 * row
                .iter()
                .zip(&basis.pairs)
                .skip(1)
                .map(|(v, p)| v * v / p.lambda.powf(e))
                .fold(0.0, f64::max)
        };
        let c_growth = growth(&c, plant.scenario.measured_trace());
        let d_growth = growth(&d, plant.scenario.regulated_trace());
        Ok(Self {
            plant: plant.clone(),
            basis,
            options,
            mu,
            a,
            b,
            c,
            d,
            a_norm2,
            b_norm2,
            c_growth,
            d_growth,
        })
    }

    pub fn horizon(&self) -> usize {
        self.mu.len()
    }

    pub fn lambda(&self, n: usize) -> f64 {
        self.basis.lambda(n)
    }

    /// sqrt of the part of ||f||^2 not captured by the computed coefficients.
    fn tail_norm(&self, coeffs: &[f64], norm2: f64) -> f64 {
        let captured: f64 = coeffs.iter().map(|v| v * v).sum();
        (norm2 - captured).max(1e-12 * norm2).sqrt()
    }

    /// Lower bound pi^2 (n-1)^2 p_* for lambda_n.
    fn lambda_floor(&self, n: usize) -> f64 {
        PI * PI * ((n - 1) as f64).powi(2) * self.basis.p_min
    }

    /// Upper bound for sum_{n > H} lambda_n^{-e} with lambda_n >= pi^2 (n-1)^2 p_*,
    /// valid for 2e > 1.
    fn power_tail(&self, e: f64) -> f64 {
        let h = self.horizon() as f64;
        (PI * PI * self.basis.p_min).powf(-e) * (h.powf(-2.0 * e) + h.powf(1.0 - 2.0 * e) / (2.0 * e - 1.0))
    }

    /// Remainder bound for sum_{n > H} f_n t_n / (-lambda_n + q_c).
    fn cross_remainder(&self, f: &[f64], f_norm2: f64, t: Trace, growth: f64) -> f64 {
        let h = self.horizon();
        let floor = self.lambda_floor(h + 1);
        let rho = (self.plant.q_c.max(0.0) / floor).min(0.999);
        let e = 2.0 - t.growth();
        let second = growth * self.power_tail(e) / (1.0 - rho).powi(2);
        self.tail_norm(f, f_norm2) * second.sqrt()
    }
}

/// A truncated series with a bound on the omitted part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailSum {
    pub value: f64,
    pub remainder_bound: f64,
    pub terms: usize,
}

impl TailSum {
    /// value + bound, for inequalities where the series enters with a plus sign.
    pub fn upper(&self) -> f64 {
        self.value + self.remainder_bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailConstants {
    pub alpha0: TailSum,
    pub beta0: TailSum,
    pub alpha1: TailSum,
    pub m1_phi: TailSum,
    pub m2_phi: TailSum,
    pub epsilon: f64,
}

/// Smallest N0 >= 1 with -lambda_n + q_c < -delta for every n > N0.
pub fn select_n0(q_c: f64, basis: &SpectralBasis, delta: f64) -> Result<usize> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    // lambda_n is increasing, so only n = N0 + 1 needs checking.
    for n0 in 1..basis.len() {
        if -basis.lambda(n0 + 1) + q_c < -delta {
            return Ok(n0);
        }
    }
    Err(Error::InsufficientModes {
        available: basis.len(),
        required: basis.len() + 1,
    })
}

pub fn tail_constants(modes: &PlantModes, n0: usize, n: usize, epsilon: f64) -> Result<TailConstants> {
    let h = modes.horizon();
    if n0 == 0 || n <= n0 || n >= h {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= N0 < N < tail horizon, got N0 = {n0}, N = {n}, horizon = {h}"
        )));
    }
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1/2], got {epsilon}"
        )));
    }
    let scenario = modes.plant.scenario;
    let ratio_sum = |f: &[f64], t: &[f64], from: usize| -> f64 { (from..h).map(|i| f[i] * t[i] / modes.mu[i]).sum() };
    let reg = scenario.regulated_trace();
    let meas = scenario.measured_trace();
    let alpha0 = TailSum {
        value: scenario.reg_offset() - ratio_sum(&modes.a, &modes.d, n0),
        remainder_bound: modes.cross_remainder(&modes.a, modes.a_norm2, reg, modes.d_growth),
        terms: h - n0,
    };
    let beta0 = TailSum {
        value: -ratio_sum(&modes.b, &modes.d, n0),
        remainder_bound: modes.cross_remainder(&modes.b, modes.b_norm2, reg, modes.d_growth),
        terms: h - n0,
    };
    let alpha1 = TailSum {
        value: ratio_sum(&modes.a, &modes.c, n),
        remainder_bound: modes.cross_remainder(&modes.a, modes.a_norm2, meas, modes.c_growth),
        terms: h - n,
    };
    let lam = |i: usize| modes.basis.pairs[i].lambda;
    // Both certificate constants use the Dirichlet (M1) or Neumann (M2) trace at 0.
    let value0: Vec<f64> = modes.basis.pairs.iter().map(|p| p.trace0).collect();
    let slope0: Vec<f64> = modes.basis.pairs.iter().map(|p| p.dtrace0).collect();
    let m1_phi = {
        let growth = 1.05 * value0.iter().skip(1).map(|v| v * v).fold(0.0, f64::max);
        TailSum {
            value: (1..h).map(|i| value0[i].powi(2) / lam(i)).sum(),
            remainder_bound: growth * modes.power_tail(1.0),
            terms: h - 1,
        }
    };
    let m2_phi = {
        let growth = 1.05
            * slope0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, v)| v * v / lam(i))
                .fold(0.0, f64::max);
        TailSum {
            value: (1..h).map(|i| slope0[i].powi(2) / lam(i).powf(1.5 + epsilon)).sum(),
            remainder_bound: growth * modes.power_tail(0.5 + epsilon),
            terms: h - 1,
        }
    };
    let tails = TailConstants {
        alpha0,
        beta0,
        alpha1,
        m1_phi,
        m2_phi,
        epsilon,
    };
    if let Some(tol) = modes.options.tail_tolerance {
        let relevant: [(&str, TailSum); 4] = [
            ("alpha0", alpha0),
            ("beta0", beta0),
            ("alpha1", alpha1),
            match scenario {
                Scenario::NeumannMeasNeumannReg => ("M2_phi", m2_phi),
                _ => ("M1_phi", m1_phi),
            },
        ];
        for (name, s) in relevant {
            if s.remainder_bound > tol {
                return Err(Error::TailNotConverged {
                    name: name.into(),
                    bound: s.remainder_bound,
                    tolerance: tol,
                });
            }
        }
    }
    Ok(tails)
}

/// Reduced closed-loop model for observer order N with gains K, L.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub modes: Arc<PlantModes>,
    pub n0: usize,
    pub n: usize,
    pub delta: f64,
    pub k: Vec<f64>,
    pub l: Vec<f64>,
    pub tails: TailConstants,
    pub a0: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    pub b0a: DVector<f64>,
    pub b0b: DVector<f64>,
    pub b2a: DVector<f64>,
    pub b2b: DVector<f64>,
    pub c0: DMatrix<f64>,
    pub c1: DMatrix<f64>,
    /// Regulated trace row over the first N0 modes (section 5 only).
    pub c0star: Option<DMatrix<f64>>,
    pub a1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub br: DVector<f64>,
    /// Full composite matrix, including the alpha_1 coupling.
    pub f: DMatrix<f64>,
    /// F with the alpha_1 blocks removed.
    pub f1: DMatrix<f64>,
    pub lcal: DVector<f64>,
    pub lcal_r: DVector<f64>,
    pub g: DMatrix<f64>,
    pub g_bound: f64,
    /// Row K~ = [K 0 0 0] selecting v from X.
    pub k_tilde: DMatrix<f64>,
}

impl ReducedModel {
    pub fn dim(&self) -> usize {
        2 * self.n + 2
    }

    pub fn scenario(&self) -> Scenario {
        self.modes.plant.scenario
    }

    /// Constant of the Gamma_n tail term: M1 (upper value) for the Dirichlet
    /// measurement scenarios, M2(eps) for the Neumann one.
    pub fn tail_constant(&self) -> f64 {
        match self.scenario() {
            Scenario::NeumannMeasNeumannReg => self.tails.m2_phi.upper(),
            _ => self.tails.m1_phi.upper(),
        }
    }

    pub fn closed_loop_controller(&self) -> DMatrix<f64> {
        &self.a1 + &self.b1 * DMatrix::from_row_slice(1, self.k.len(), &self.k)
    }

    pub fn closed_loop_observer(&self) -> DMatrix<f64> {
        &self.a0 - DMatrix::from_column_slice(self.n0, 1, &self.l) * &self.c0
    }
}

/// Assembles every reduced matrix. `k` has length N0 + 2 and `l` length N0.
pub fn build_reduced_matrices(
    modes: &Arc<PlantModes>,
    n0: usize,
    n: usize,
    k: &[f64],
    l: &[f64],
    delta: f64,
) -> Result<ReducedModel> {
    if k.len() != n0 + 2 {
        return Err(Error::DimensionMismatch(format!(
            "K has length {}, expected N0 + 2 = {}",
            k.len(),
            n0 + 2
        )));
    }
    if l.len() != n0 {
        return Err(Error::DimensionMismatch(format!(
            "L has length {}, expected N0 = {n0}",
            l.len()
        )));
    }
    if n < n0 + 1 {
        return Err(Error::DimensionMismatch(format!(
            "N = {n} must be at least N0 + 1 = {}",
            n0 + 1
        )));
    }
    if n + 1 >= modes.horizon() {
        return Err(Error::InsufficientModes {
            available: modes.horizon(),
            required: n + 2,
        });
    }
    let tails = tail_constants(modes, n0, n, DEFAULT_EPSILON)?;
    let scenario = modes.plant.scenario;
    let s = scenario.error_scaling();
    let m = n - n0;

    let a0 = DMatrix::from_diagonal(&DVector::from_column_slice(&modes.mu[..n0]));
    let a2 = DMatrix::from_diagonal(&DVector::from_column_slice(&modes.mu[n0..n]));
    let b0a = DVector::from_column_slice(&modes.a[..n0]);
    let b0b = DVector::from_column_slice(&modes.b[..n0]);
    let b2a = DVector::from_column_slice(&modes.a[n0..n]);
    let b2b = DVector::from_column_slice(&modes.b[n0..n]);
    let c0 = DMatrix::from_row_slice(1, n0, &modes.c[..n0]);
    let c1 = DMatrix::from_fn(1, m, |_, j| {
        let i = n0 + j;
        modes.c[i] / modes.lambda(i + 1).powf(s)
    });
    let creg = DMatrix::from_row_slice(1, n0, &modes.d[..n0]);
    let c0star = (scenario == Scenario::DirichletMeasNeumannReg).then(|| creg.clone());

    let na = n0 + 2;
    let mut a1 = DMatrix::zeros(na, na);
    a1.view_mut((1, 0), (n0, 1)).copy_from(&b0a);
    a1.view_mut((1, 1), (n0, n0)).copy_from(&a0);
    a1[(n0 + 1, 0)] = tails.alpha0.value;
    a1.view_mut((n0 + 1, 1), (1, n0)).copy_from(&creg);
    let mut b1 = DVector::zeros(na);
    b1[0] = 1.0;
    b1.rows_mut(1, n0).copy_from(&b0b);
    b1[n0 + 1] = tails.beta0.value;
    let mut br = DVector::zeros(na);
    br[n0 + 1] = 1.0;

    let krow = DMatrix::from_row_slice(1, na, k);
    let lcol = DMatrix::from_column_slice(n0, 1, l);
    let mut ltilde = DMatrix::zeros(na, 1);
    ltilde.view_mut((1, 0), (n0, 1)).copy_from(&lcol);
    let mut e1 = DMatrix::zeros(1, na);
    e1[(0, 0)] = 1.0;

    let dim = 2 * n + 2;
    let (r0, r1, r2, r3) = (0, na, na + n0, na + n0 + m);
    let mut f1 = DMatrix::zeros(dim, dim);
    f1.view_mut((r0, r0), (na, na)).copy_from(&(&a1 + &b1 * &krow));
    f1.view_mut((r0, r1), (na, n0)).copy_from(&(&ltilde * &c0));
    f1.view_mut((r0, r3), (na, m)).copy_from(&(&ltilde * &c1));
    f1.view_mut((r1, r1), (n0, n0)).copy_from(&(&a0 - &lcol * &c0));
    f1.view_mut((r1, r3), (n0, m)).copy_from(&(-(&lcol * &c1)));
    let mut lower = &b2b * &krow;
    lower.column_mut(0).axpy(1.0, &b2a, 1.0);
    f1.view_mut((r2, r0), (m, na)).copy_from(&lower);
    f1.view_mut((r2, r2), (m, m)).copy_from(&a2);
    f1.view_mut((r3, r3), (m, m)).copy_from(&a2);

    let alpha1 = tails.alpha1.value;
    let mut f = f1.clone();
    let mut top = f.view_mut((r0, r0), (na, na));
    top += &ltilde * &e1 * alpha1;
    let mut middle = f.view_mut((r1, r0), (n0, na));
    middle -= &lcol * &e1 * alpha1;

    let mut lcal = DVector::zeros(dim);
    lcal.rows_mut(1, n0).copy_from(&DVector::from_column_slice(l));
    lcal.rows_mut(r1, n0).copy_from(&(-DVector::from_column_slice(l)));
    let mut lcal_r = DVector::zeros(dim);
    lcal_r.rows_mut(0, na).copy_from(&br);

    let mut e = DMatrix::zeros(1, dim);
    e[(0, 0)] = 1.0;
    let mut k_tilde = DMatrix::zeros(1, dim);
    k_tilde.view_mut((0, 0), (1, na)).copy_from(&krow);
    let g = e.transpose() * &e * modes.a_norm2 + k_tilde.transpose() * &k_tilde * modes.b_norm2;
    let k_norm2: f64 = k.iter().map(|v| v * v).sum();
    let g_bound = modes.a_norm2 + modes.b_norm2 * k_norm2;

    Ok(ReducedModel {
        modes: Arc::clone(modes),
        n0,
        n,
        delta,
        k: k.to_vec(),
        l: l.to_vec(),
        tails,
        a0,
        a2,
        b0a,
        b0b,
        b2a,
        b2b,
        c0,
        c1,
        c0star,
        a1,
        b1,
        br,
        f,
        f1,
        lcal,
        lcal_r,
        g,
        g_bound,
        k_tilde,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn modes(scenario: Scenario, horizon: usize) -> Arc<PlantModes> {
        let plant = PlantSpec::constant(1.0, 0.0, 3.0, scenario);
        let options = ModelOptions {
            grid_points: Some(8 * horizon + 1),
            tail_horizon: horizon,
            tail_tolerance: None,
        };
        Arc::new(PlantModes::new(&plant, options).unwrap())
    }

    #[test]
    fn lifted_inputs_substitution() {
        let grid = Grid::new(5);
        let plant = PlantSpec::constant(1.0, 0.0, 3.0, Scenario::DirichletMeasDirichletReg);
        let li = lifted_inputs(&plant, &grid);
        assert!((li.a[2] - (2.0 + 3.0 * 0.25)).abs() < 1e-15);
        assert!((li.b[2] + 0.25).abs() < 1e-15);
        let plant = PlantSpec::constant(1.0, 0.0, 3.0, Scenario::NeumannMeasNeumannReg);
        let li = lifted_inputs(&plant, &grid);
        assert!((li.a[2] - 1.5).abs() < 1e-15);
        assert!((li.b[2] + 0.5).abs() < 1e-15);
        assert_eq!(li.meas_offset, 1.0);
        assert_eq!(Scenario::DirichletMeasNeumannReg.reg_offset(), 2.0);
    }

    #[test]
    fn n0_selection() {
        let m = modes(Scenario::DirichletMeasNeumannReg, 20);
        assert_eq!(select_n0(3.0, &m.basis, 0.5).unwrap(), 1);
        assert_eq!(select_n0(0.1, &m.basis, 0.5).unwrap(), 1);
        let m = modes(Scenario::NeumannMeasNeumannReg, 20);
        assert_eq!(select_n0(45.0, &m.basis, 1.0).unwrap(), 2);
    }

    #[test]
    fn m1_closed_form() {
        let m = modes(Scenario::DirichletMeasDirichletReg, 200);
        let t = tail_constants(&m, 1, 3, DEFAULT_EPSILON).unwrap();
        let exact = 1.0 - 8.0 / (PI * PI);
        assert!((t.m1_phi.value - exact).abs() <= t.m1_phi.remainder_bound + 1e-9);
        assert!(t.m1_phi.upper() >= exact);
    }

    #[test]
    fn zero_gain_structure() {
        let m = modes(Scenario::DirichletMeasNeumannReg, 50);
        let model = build_reduced_matrices(&m, 1, 3, &[0.0; 3], &[0.0], 0.5).unwrap();
        assert_eq!(model.f.shape(), (8, 8));
        // block upper-right parts vanish with zero gains
        assert!(model.f.view((0, 3), (3, 5)).iter().all(|v| *v == 0.0));
        assert!(model.f.view((6, 0), (2, 6)).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn paper_observer_gain() {
        let m = modes(Scenario::DirichletMeasNeumannReg, 50);
        let model = build_reduced_matrices(&m, 1, 3, &[-10.4134, -11.3747, 2.31], &[1.4373], 0.5).unwrap();
        let v = model.closed_loop_observer()[(0, 0)];
        assert!((v + 1.5).abs() < 1e-3, "{v}");
        assert_eq!(model.c0star.as_ref().unwrap().ncols(), 1);
    }

    #[test]
    fn dimension_checks() {
        let m = modes(Scenario::DirichletMeasNeumannReg, 50);
        assert!(matches!(
            build_reduced_matrices(&m, 1, 3, &[0.0; 2], &[0.0], 0.5),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            build_reduced_matrices(&m, 1, 1, &[0.0; 3], &[0.0], 0.5),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
