//! Closed-loop simulation on M plant modes with observer, integrator and
//! state feedback, and metrics computed from the trajectory.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::coefficient::CoefficientFunction;
use crate::equilibrium::EquilibriumState;
use crate::error::{Error, Result};
use crate::ode::{dormand_prince, Rk4, System, Tolerance};
use crate::quadrature::simpson_product;
use crate::spectral_model::{ReducedModel, Scenario};

/// State norm treated as blow-up.
pub const INSTABILITY_LIMIT: f64 = 1e12;
/// Fixed-step states below this magnitude are set to zero.
const FLUSH_FLOOR: f64 = 1e-200;
/// Tolerance of the boundary compatibility check on z0.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Reference {
    Constant {
        value: f64,
    },
    /// Holds values[j] on [times[j], times[j+1]); zero before times[0].
    Piecewise {
        times: Vec<f64>,
        values: Vec<f64>,
    },
    /// Linear interpolation, held constant outside the samples.
    Sampled {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

impl Default for Reference {
    fn default() -> Self {
        Reference::Constant { value: 1.0 }
    }
}

impl Reference {
    fn validate(&self) -> Result<()> {
        match self {
            Reference::Constant { value } if value.is_finite() => Ok(()),
            Reference::Constant { .. } => Err(Error::InvalidArgument("reference value must be finite".into())),
            Reference::Piecewise { times, values } | Reference::Sampled { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(Error::InvalidArgument(
                        "reference times and values must be non-empty and of equal length".into(),
                    ));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidArgument("reference times must increase".into()));
                }
                Ok(())
            }
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            Reference::Constant { value } => *value,
            Reference::Piecewise { times, values } => match times.iter().rposition(|s| *s <= t) {
                Some(j) => values[j],
                None => 0.0,
            },
            Reference::Sampled { times, values } => {
                let j = times.partition_point(|s| *s <= t);
                if j == 0 {
                    values[0]
                } else if j == times.len() {
                    values[j - 1]
                } else {
                    let w = (t - times[j - 1]) / (times[j] - times[j - 1]);
                    values[j - 1] * (1.0 - w) + values[j] * w
                }
            }
        }
    }

    /// Time after which the reference no longer changes.
    pub fn settles_at(&self) -> f64 {
        match self {
            Reference::Constant { .. } => 0.0,
            Reference::Piecewise { times, .. } | Reference::Sampled { times, .. } => *times.last().unwrap_or(&0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepControl {
    /// Classical RK4; `h` defaults to 1 / (2 (lambda_M + |q_c|)).
    Fixed { h: Option<f64> },
    /// Dormand-Prince 5(4).
    Adaptive { rtol: f64, atol: f64 },
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Fixed { h: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub modal_order: usize,
    pub horizon: f64,
    pub step: StepControl,
    /// Output spacing; defaults to horizon / 2000.
    pub output_dt: Option<f64>,
    pub reference: Reference,
    /// Initial profile z0; defaults to the lifting function.
    pub z0: Option<CoefficientFunction>,
    /// Initial boundary input; defaults to z0(1).
    pub u0: Option<f64>,
    /// Add the quasi-static response of modes beyond M to the outputs.
    pub static_tail_correction: bool,
    /// K = 0, L = 0 and no integrator: the uncontrolled plant.
    pub open_loop: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            modal_order: 50,
            horizon: 20.0,
            step: StepControl::default(),
            output_dt: None,
            reference: Reference::default(),
            z0: None,
            u0: None,
            static_tail_correction: true,
            open_loop: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub xi: f64,
    pub y_m: f64,
    pub y_r: f64,
    pub y_tilde: f64,
    /// sum_{N < n <= M} c_n w_n
    pub zeta: f64,
    pub r: f64,
    pub err: f64,
    /// sum lambda_n w_n^2
    pub energy: f64,
    pub w: Vec<f64>,
    pub w_hat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub scenario: Scenario,
    pub modal_order: usize,
    pub observer_order: usize,
    /// Fixed step; absent for adaptive runs.
    pub step: Option<f64>,
    /// Set for adaptive runs.
    pub tolerance: Option<(f64, f64)>,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least the initial sample")
    }
}

struct ClosedLoop<'a> {
    model: &'a ReducedModel,
    m: usize,
    reference: &'a Reference,
    open_loop: bool,
    /// Quasi-static tail coefficients (u, v) for the measured and regulated series.
    tail_c: (f64, f64),
    tail_d: (f64, f64),
}

impl ClosedLoop<'_> {
    fn v(&self, y: &[f64]) -> f64 {
        if self.open_loop {
            return 0.0;
        }
        let (m, n0) = (self.m, self.model.n0);
        let k = &self.model.k;
        let mut v = k[0] * y[m] + k[n0 + 1] * y[m + 1];
        for i in 0..n0 {
            v += k[i + 1] * y[m + 2 + i];
        }
        v
    }

    fn y_tilde(&self, y: &[f64], v: f64) -> f64 {
        let c = &self.model.modes.c;
        let s: f64 = (0..self.m).map(|i| c[i] * y[i]).sum();
        s + self.tail_c.0 * y[self.m] + self.tail_c.1 * v
    }

    fn y_reg(&self, y: &[f64], v: f64) -> f64 {
        let d = &self.model.modes.d;
        let s: f64 = (0..self.m).map(|i| d[i] * y[i]).sum();
        s + self.tail_d.0 * y[self.m] + self.tail_d.1 * v
    }

    fn sample(&self, t: f64, y: &[f64]) -> Sample {
        let model = self.model;
        let modes = &model.modes;
        let (m, n) = (self.m, model.n);
        let scenario = model.scenario();
        let v = self.v(y);
        let u = y[m];
        let y_tilde = self.y_tilde(y, v);
        let y_r = self.y_reg(y, v) + scenario.reg_offset() * u;
        let r = self.reference.at(t);
        Sample {
            t,
            u,
            v,
            xi: y[m + 1],
            y_m: y_tilde + scenario.meas_offset() * u,
            y_r,
            y_tilde,
            zeta: (n..m).map(|i| modes.c[i] * y[i]).sum(),
            r,
            err: y_r - r,
            energy: (0..m).map(|i| modes.lambda(i + 1) * y[i] * y[i]).sum(),
            w: y[..m].to_vec(),
            w_hat: y[m + 2..m + 2 + n].to_vec(),
        }
    }
}

impl System for ClosedLoop<'_> {
    fn dim(&self) -> usize {
        self.m + 2 + self.model.n
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let model = self.model;
        let modes = &model.modes;
        let (m, n, n0) = (self.m, model.n, model.n0);
        let v = self.v(y);
        let u = y[m];
        for i in 0..m {
            dy[i] = modes.mu[i] * y[i] + modes.a[i] * u + modes.b[i] * v;
        }
        dy[m] = v;
        let what = &y[m + 2..m + 2 + n];
        dy[m + 1] = if self.open_loop {
            0.0
        } else {
            let est: f64 = (0..n0).map(|i| modes.d[i] * what[i]).sum();
            est + model.tails.alpha0.value * u + model.tails.beta0.value * v - self.reference.at(t)
        };
        let innovation =
            (0..n).map(|i| modes.c[i] * what[i]).sum::<f64>() - model.tails.alpha1.value * u - self.y_tilde(y, v);
        for i in 0..n {
            let mut d = modes.mu[i] * what[i] + modes.a[i] * u + modes.b[i] * v;
            if i < n0 && !self.open_loop {
                d -= model.l[i] * innovation;
            }
            dy[m + 2 + i] = d;
        }
    }
}

/// Checks z0 against the boundary conditions of the scenario.
fn check_compatibility(scenario: Scenario, z0: &CoefficientFunction, u0: f64) -> Result<()> {
    let scale = 1.0 + u0.abs();
    if (z0.eval(1.0) - u0).abs() > COMPATIBILITY_TOLERANCE * scale {
        return Err(Error::IncompatibleInitialCondition(format!(
            "z0(1) = {} differs from u0 = {u0}",
            z0.eval(1.0)
        )));
    }
    match scenario {
        Scenario::NeumannMeasNeumannReg => {
            if z0.eval(0.0).abs() > COMPATIBILITY_TOLERANCE * scale {
                return Err(Error::IncompatibleInitialCondition(format!(
                    "z0(0) = {} is not zero",
                    z0.eval(0.0)
                )));
            }
        }
        _ => {
            let slope = z0.derivative(0.0);
            if slope.abs() > COMPATIBILITY_TOLERANCE * scale {
                return Err(Error::IncompatibleInitialCondition(format!(
                    "z0'(0) = {slope} is not zero"
                )));
            }
        }
    }
    Ok(())
}

fn default_z0(scenario: Scenario) -> CoefficientFunction {
    let coefficients = match scenario {
        Scenario::NeumannMeasNeumannReg => vec![0.0, 1.0],
        _ => vec![0.0, 0.0, 1.0],
    };
    CoefficientFunction::polynomial(coefficients).expect("finite coefficients")
}

/// Modal coefficients <z0 - lift u0, phi_n>, n = 1..M.
fn initial_modes(model: &ReducedModel, z0: &CoefficientFunction, u0: f64, m: usize) -> Result<Vec<f64>> {
    let basis = &model.modes.basis;
    if basis.retained() < m {
        return Err(Error::InsufficientModes {
            available: basis.retained(),
            required: m,
        });
    }
    let scenario = model.scenario();
    let w0 = basis.grid.sample(|x| z0.eval(x) - scenario.lift(x) * u0);
    Ok(basis.pairs[..m]
        .iter()
        .map(|p| simpson_product(&w0, &p.phi, basis.grid.h))
        .collect())
}

pub fn simulate(model: &ReducedModel, config: &SimConfig) -> Result<Trajectory> {
    let modes = &model.modes;
    let m = config.modal_order;
    let n = model.n;
    if m < n + 1 {
        return Err(Error::InvalidArgument(format!(
            "modal order M = {m} must be at least N + 1 = {}",
            n + 1
        )));
    }
    if m >= modes.horizon() {
        return Err(Error::InsufficientModes {
            available: modes.horizon(),
            required: m + 1,
        });
    }
    if !(config.horizon > 0.0 && config.horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive, got {}",
            config.horizon
        )));
    }
    config.reference.validate()?;
    let scenario = model.scenario();
    let z0 = config.z0.clone().unwrap_or_else(|| default_z0(scenario));
    let u0 = config.u0.unwrap_or_else(|| z0.eval(1.0));
    check_compatibility(scenario, &z0, u0)?;

    let tail = |row: &[f64], coef: &[f64]| -> f64 {
        if !config.static_tail_correction {
            return 0.0;
        }
        (m..modes.horizon()).map(|i| -row[i] * coef[i] / modes.mu[i]).sum()
    };
    let sys = ClosedLoop {
        model,
        m,
        reference: &config.reference,
        open_loop: config.open_loop,
        tail_c: (tail(&modes.c, &modes.a), tail(&modes.c, &modes.b)),
        tail_d: (tail(&modes.d, &modes.a), tail(&modes.d, &modes.b)),
    };
    let dim = sys.dim();
    let mut y = vec![0.0; dim];
    y[..m].copy_from_slice(&initial_modes(model, &z0, u0, m)?);
    y[m] = u0;

    let output_dt = config.output_dt.unwrap_or(config.horizon / 2000.0);
    if !(output_dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "output_dt must be positive, got {output_dt}"
        )));
    }
    let outputs = (config.horizon / output_dt).round().max(1.0) as usize;
    let output_dt = config.horizon / outputs as f64;
    let mut samples = Vec::with_capacity(outputs + 1);
    samples.push(sys.sample(0.0, &y));
    let blown = |t: f64, y: &[f64]| -> Result<()> {
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm <= INSTABILITY_LIMIT) {
            return Err(Error::Instability {
                time: t,
                limit: INSTABILITY_LIMIT,
            });
        }
        Ok(())
    };

    let (step, tolerance) = match config.step {
        StepControl::Fixed { h } => {
            let h_max = h.unwrap_or(1.0 / (2.0 * (modes.lambda(m) + modes.plant.q_c.abs())));
            if !(h_max > 0.0) {
                return Err(Error::InvalidArgument(format!("step must be positive, got {h_max}")));
            }
            let per_output = (output_dt / h_max).ceil().max(1.0) as usize;
            let h = output_dt / per_output as f64;
            let mut rk = Rk4::new(dim);
            for j in 0..outputs {
                let t0 = j as f64 * output_dt;
                for s in 0..per_output {
                    rk.step(&sys, t0 + s as f64 * h, &mut y, h);
                    // decayed fast modes would otherwise turn subnormal and crawl
                    for v in y.iter_mut().filter(|v| v.abs() < FLUSH_FLOOR) {
                        *v = 0.0;
                    }
                }
                let t = (j + 1) as f64 * output_dt;
                blown(t, &y)?;
                samples.push(sys.sample(t, &y));
            }
            (Some(h), None)
        }
        StepControl::Adaptive { rtol, atol } => {
            if !(rtol > 0.0 && atol > 0.0) {
                return Err(Error::InvalidArgument("adaptive tolerances must be positive".into()));
            }
            let stops: Vec<f64> = (1..=outputs).map(|j| j as f64 * output_dt).collect();
            dormand_prince(
                &sys,
                0.0,
                &mut y,
                config.horizon,
                Tolerance { rtol, atol },
                &stops,
                |t, y| {
                    blown(t, y)?;
                    samples.push(sys.sample(t, y));
                    Ok(())
                },
            )?;
            (None, Some((rtol, atol)))
        }
    };
    Ok(Trajectory {
        scenario,
        modal_order: m,
        observer_order: n,
        step,
        tolerance,
        samples,
    })
}

/// max_t ||E~(t) - exp(A2 t) E~(0)|| over the modes N0+1..N, with
/// E~_n = lambda_n^s (w_n - w_hat_n).
pub fn observer_error_check(trajectory: &Trajectory, model: &ReducedModel) -> f64 {
    let modes = &model.modes;
    let s = model.scenario().error_scaling();
    let scaled = |sample: &Sample, i: usize| modes.lambda(i + 1).powf(s) * (sample.w[i] - sample.w_hat[i]);
    let first = &trajectory.samples[0];
    trajectory
        .samples
        .iter()
        .map(|sample| {
            (model.n0..model.n)
                .map(|i| {
                    let exact = (modes.mu[i] * sample.t).exp() * scaled(first, i);
                    (scaled(sample, i) - exact).powi(2)
                })
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayMetrics {
    /// Least-squares slope of log D(t) over the window.
    pub fitted_rate: Option<f64>,
    pub window: (f64, f64),
    /// sup_t |y_r(t) - r(t)|
    pub tracking_sup: f64,
    /// |y_r(T) - r_e|
    pub steady_error: f64,
    /// Start already at equilibrium: the fit is skipped.
    pub skipped: bool,
}

/// sqrt(du^2 + dxi^2 + sum dw_hat^2 + sum lambda_n dw_n^2) relative to the equilibrium.
pub fn deviation_norm(sample: &Sample, eq: &EquilibriumState, model: &ReducedModel) -> f64 {
    let modes = &model.modes;
    let du = sample.u - eq.u_e;
    let dxi = sample.xi - eq.xi_e;
    let hat: f64 = sample.w_hat.iter().zip(&eq.w_hat_e).map(|(a, b)| (a - b).powi(2)).sum();
    let modal: f64 = sample
        .w
        .iter()
        .zip(&eq.w_e_modal)
        .enumerate()
        .map(|(i, (a, b))| modes.lambda(i + 1) * (a - b).powi(2))
        .sum();
    (du * du + dxi * dxi + hat + modal).sqrt()
}

/// Least-squares slope of ln(values) against times.
pub fn fit_log_slope(times: &[f64], values: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > 0.0)
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    if pts.len() < 10 {
        return Err(Error::WindowTooShort(format!("{} usable samples", pts.len())));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::WindowTooShort("window has zero length".into()));
    }
    Ok(sxy / sxx)
}

/// Fits the decay of the deviation from equilibrium. The window ends at the last
/// sample above 1e-9 of the peak deviation and starts at a quarter of that time
/// (or where the reference settles, if later).
pub fn fit_decay_metrics(
    trajectory: &Trajectory,
    eq: &EquilibriumState,
    model: &ReducedModel,
    reference: &Reference,
) -> Result<DecayMetrics> {
    let samples = &trajectory.samples;
    let dev: Vec<f64> = samples.iter().map(|s| deviation_norm(s, eq, model)).collect();
    let tracking_sup = samples.iter().map(|s| s.err.abs()).fold(0.0, f64::max);
    let steady_error = (trajectory.last().y_r - eq.r_e).abs();
    let peak = dev.iter().copied().fold(0.0, f64::max);
    let scale = 1.0 + eq.u_e.abs() + eq.xi_e.abs();
    if peak <= 1e-12 * scale {
        return Ok(DecayMetrics {
            fitted_rate: None,
            window: (0.0, 0.0),
            tracking_sup,
            steady_error,
            skipped: true,
        });
    }
    let last = dev.iter().rposition(|d| *d > 1e-9 * peak).unwrap_or(0);
    let t_b = samples[last].t;
    let t_a = (t_b / 4.0).max(reference.settles_at());
    let (times, values): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .zip(&dev)
        .filter(|(s, _)| s.t >= t_a && s.t <= t_b)
        .map(|(s, d)| (s.t, *d))
        .unzip();
    let rate = fit_log_slope(&times, &values)?;
    Ok(DecayMetrics {
        fitted_rate: Some(rate),
        window: (t_a, t_b),
        tracking_sup,
        steady_error,
        skipped: false,
    })
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header t,u,xi,y_m,y_r,r,err,energy,w_1..w_M,what_1..what_N.
pub fn write_trajectory_csv(trajectory: &Trajectory, out: &mut impl Write) -> std::io::Result<()> {
    let mut header: Vec<String> = ["t", "u", "xi", "y_m", "y_r", "r", "err", "energy"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=trajectory.modal_order).map(|i| format!("w_{i}")));
    header.extend((1..=trajectory.observer_order).map(|i| format!("what_{i}")));
    writeln!(out, "{}", header.join(","))?;
    for s in &trajectory.samples {
        let mut row: Vec<String> = [s.t, s.u, s.xi, s.y_m, s.y_r, s.r, s.err, s.energy]
            .into_iter()
            .map(fmt)
            .collect();
        row.extend(s.w.iter().chain(&s.w_hat).map(|v| fmt(*v)));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// z(t, x) = sum w_n phi_n + lift u on every `space_stride`-th grid point, for
/// every `time_stride`-th sample. First column is t, header lists x.
pub fn write_snapshot_csv(
    trajectory: &Trajectory,
    model: &ReducedModel,
    time_stride: usize,
    space_stride: usize,
    out: &mut impl Write,
) -> std::io::Result<()> {
    let basis = &model.modes.basis;
    let scenario = model.scenario();
    let idx: Vec<usize> = (0..basis.grid.points).step_by(space_stride.max(1)).collect();
    let xs: Vec<f64> = idx.iter().map(|i| basis.grid.x(*i)).collect();
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(xs.iter().map(|x| fmt(*x)))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for s in trajectory.samples.iter().step_by(time_stride.max(1)) {
        let mut row = vec![fmt(s.t)];
        for (&i, &x) in idx.iter().zip(&xs) {
            let mut z = scenario.lift(x) * s.u;
            for (pair, w) in basis.pairs.iter().zip(&s.w) {
                z += w * pair.phi[i];
            }
            row.push(fmt(z));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Two columns x, z_e.
pub fn write_profile_csv(x: &[f64], z: &[f64], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "x,z_e")?;
    for (x, z) in x.iter().zip(z) {
        writeln!(out, "{},{}", fmt(*x), fmt(*z))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_shapes() {
        let p = Reference::Piecewise {
            times: vec![1.0, 2.0],
            values: vec![3.0, 4.0],
        };
        assert_eq!(p.at(0.5), 0.0);
        assert_eq!(p.at(1.0), 3.0);
        assert_eq!(p.at(7.0), 4.0);
        let s = Reference::Sampled {
            times: vec![0.0, 2.0],
            values: vec![0.0, 4.0],
        };
        assert_eq!(s.at(-1.0), 0.0);
        assert_eq!(s.at(0.5), 1.0);
        assert_eq!(s.at(3.0), 4.0);
        assert!(Reference::Sampled {
            times: vec![1.0, 1.0],
            values: vec![0.0, 0.0]
        }
        .validate()
        .is_err());
    }

    #[test]
    fn log_slope_recovers_exponent() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        assert!((fit_log_slope(&t, &v).unwrap() + 0.7).abs() < 1e-12);
        assert!(matches!(fit_log_slope(&t[..5], &v[..5]), Err(Error::WindowTooShort(_))));
    }

    #[test]
    fn compatibility() {
        let lift = default_z0(Scenario::DirichletMeasNeumannReg);
        assert!(check_compatibility(Scenario::DirichletMeasNeumannReg, &lift, 1.0).is_ok());
        assert!(check_compatibility(Scenario::DirichletMeasNeumannReg, &lift, 0.5).is_err());
        let slope = CoefficientFunction::polynomial(vec![0.0, 1.0]).unwrap();
        assert!(check_compatibility(Scenario::DirichletMeasDirichletReg, &slope, 1.0).is_err());
        assert!(check_compatibility(Scenario::NeumannMeasNeumannReg, &slope, 1.0).is_ok());
    }

    #[test]
    fn config_round_trip() {
        let c = SimConfig {
            step: StepControl::Adaptive {
                rtol: 1e-8,
                atol: 1e-10,
            },
            reference: Reference::Piecewise {
                times: vec![0.0],
                values: vec![1.0],
            },
            ..SimConfig::default()
        };
        let back: SimConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
        assert!(serde_json::from_str::<SimConfig>(r#"{"modal_ordr": 3}"#).is_err());
    }
}
