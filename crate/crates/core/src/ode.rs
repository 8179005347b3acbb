//! Explicit Runge-Kutta integrators: classical RK4 with fixed step and
//! Dormand-Prince 5(4) with adaptive step.

use crate::error::{Error, Result};

/// Right-hand side y' = f(t, y), written into the last argument.
pub trait System {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

impl<F: Fn(f64, &[f64], &mut [f64])> System for (usize, F) {
    fn dim(&self) -> usize {
        self.0
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        (self.1)(t, y, dy)
    }
}

pub struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
        }
    }

    pub fn step(&mut self, sys: &impl System, t: f64, y: &mut [f64], h: f64) {
        let n = y.len();
        let [k1, k2, k3, k4] = &mut self.k;
        sys.rhs(t, y, k1);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        sys.rhs(t + 0.5 * h, &self.tmp, k2);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        sys.rhs(t + 0.5 * h, &self.tmp, k3);
        for i in 0..n {
            self.tmp[i] = y[i] + h * k3[i];
        }
        sys.rhs(t + h, &self.tmp, k4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AdaptiveStats {
    pub accepted: usize,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Fifth-order weights are the last row of A; these are fifth minus fourth.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates from `t0` to `t1` with Dormand-Prince 5(4), stopping exactly at
/// every time in `stops` (ascending, within (t0, t1]) and calling `on_stop`
/// there. Returns step statistics.
pub fn dormand_prince(
    sys: &impl System,
    t0: f64,
    y: &mut [f64],
    t1: f64,
    tol: Tolerance,
    stops: &[f64],
    mut on_stop: impl FnMut(f64, &[f64]) -> Result<()>,
) -> Result<AdaptiveStats> {
    let n = y.len();
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut stats = AdaptiveStats::default();
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(stats);
    }
    let mut t = t0;
    let mut h = initial_step(sys, t0, y, tol, span);
    let mut next_stop = 0;
    sys.rhs(t, y, &mut k[0]);
    while t < t1 {
        let target = stops.get(next_stop).copied().unwrap_or(t1).min(t1);
        let mut hit = false;
        if t + h >= target - 1e-14 * span.max(1.0) {
            h = target - t;
            hit = true;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                tmp[i] = y[i] + h * acc;
            }
            sys.rhs(t + C[s] * h, &tmp, &mut k[s]);
        }
        // The sixth stage argument is the fifth-order solution (FSAL).
        y5.copy_from_slice(&tmp);
        let mut err = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            let sc = tol.atol + tol.rtol * y[i].abs().max(y5[i].abs());
            err += (h * e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::IntegrationFailure(format!(
                "non-finite error estimate at t = {t}"
            )));
        }
        if err <= 1.0 {
            stats.accepted += 1;
            t = if hit { target } else { t + h };
            y.copy_from_slice(&y5);
            let (first, rest) = k.split_at_mut(6);
            first[0].copy_from_slice(&rest[0]);
            if hit && next_stop < stops.len() && stops[next_stop] <= t1 {
                on_stop(t, y)?;
                next_stop += 1;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
        if h < 1e-14 * span.max(1.0) {
            return Err(Error::IntegrationFailure(format!("step size underflow at t = {t}")));
        }
    }
    Ok(stats)
}

fn initial_step(sys: &impl System, t: f64, y: &[f64], tol: Tolerance, span: f64) -> f64 {
    let n = y.len();
    let mut dy = vec![0.0; n];
    sys.rhs(t, y, &mut dy);
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..n {
        let sc = tol.atol + tol.rtol * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (dy[i] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / n as f64).sqrt(), (d1 / n as f64).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_order() {
        let sys = (1usize, |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = -2.0 * y[0]);
        let run = |steps: usize| {
            let mut y = [1.0];
            let mut rk = Rk4::new(1);
            let h = 1.0 / steps as f64;
            for i in 0..steps {
                rk.step(&sys, i as f64 * h, &mut y, h);
            }
            (y[0] - (-2.0f64).exp()).abs()
        };
        let order = (run(20) / run(40)).log2();
        assert!((order - 4.0).abs() < 0.1, "{order}");
    }

    #[test]
    fn dormand_prince_harmonic_oscillator() {
        let sys = (2usize, |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        });
        let mut y = [1.0, 0.0];
        let mut seen = Vec::new();
        let tol = Tolerance {
            rtol: 1e-11,
            atol: 1e-13,
        };
        dormand_prince(&sys, 0.0, &mut y, 10.0, tol, &[1.0, 2.5], |t, y| {
            seen.push((t, y[0]));
            Ok(())
        })
        .unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-8);
        assert_eq!(seen.len(), 2);
        assert!((seen[1].1 - 2.5f64.cos()).abs() < 1e-9);
    }
}
