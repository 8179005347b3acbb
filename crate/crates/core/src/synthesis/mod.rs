//! Gain synthesis, Kalman and Cauchy conditions, and the stability certificate.

pub mod bounded_real;
pub mod certificate;
pub mod kalman;
pub mod lyapunov;
pub mod poles;

use std::sync::Arc;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

pub use certificate::{
    brute_force_gamma, certify_at, evaluate_gamma_margin, evaluate_theta, find_minimal_n, verify_certificate,
    Candidate, Construction, DesignCertificate, GammaMargin, SoundnessReport, ThetaCheck,
};
pub use kalman::{check_cauchy_condition, check_controllability, check_observability, CauchyCheck, RankTest};
pub use lyapunov::solve_shifted_lyapunov;
pub use poles::{design_l, place_poles};

use crate::error::{Error, Result};
use crate::spectral_model::{build_reduced_matrices, PlantModes, ReducedModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pole {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<Pole> for Complex<f64> {
    fn from(p: Pole) -> Self {
        Complex::new(p.re, p.im)
    }
}

impl From<Complex<f64>> for Pole {
    fn from(z: Complex<f64>) -> Self {
        Self { re: z.re, im: z.im }
    }
}

fn sorted_poles(m: &DMatrix<f64>) -> Vec<Pole> {
    let mut p: Vec<Pole> = m.complex_eigenvalues().iter().map(|z| Pole::from(*z)).collect();
    p.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    p
}

/// Controller row K, observer column L and the resulting closed-loop spectra.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainSet {
    pub n0: usize,
    pub k: Vec<f64>,
    pub l: Vec<f64>,
    pub delta: f64,
    /// eig(A1 + B1 K)
    pub controller_poles: Vec<Pole>,
    /// eig(A0 - L C0)
    pub observer_poles: Vec<Pole>,
}

impl GainSet {
    /// Largest real part over both spectra.
    pub fn max_real(&self) -> f64 {
        self.controller_poles
            .iter()
            .chain(&self.observer_poles)
            .map(|p| p.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Matrices A1, B1, A0, C0 for a given N0 (independent of N and the gains).
pub fn design_blocks(modes: &Arc<PlantModes>, n0: usize, delta: f64) -> Result<ReducedModel> {
    build_reduced_matrices(modes, n0, n0 + 1, &vec![0.0; n0 + 2], &vec![0.0; n0], delta)
}

/// Wraps given gains and checks that both spectra lie left of -delta.
pub fn gains_from(modes: &Arc<PlantModes>, n0: usize, k: &[f64], l: &[f64], delta: f64) -> Result<GainSet> {
    let blocks = design_blocks(modes, n0, delta)?;
    if k.len() != n0 + 2 || l.len() != n0 {
        return Err(Error::DimensionMismatch(format!(
            "gains have lengths {} and {}, expected {} and {n0}",
            k.len(),
            l.len(),
            n0 + 2
        )));
    }
    let ctrl = &blocks.a1 + &blocks.b1 * DMatrix::from_row_slice(1, n0 + 2, k);
    let obs = &blocks.a0 - DMatrix::from_column_slice(n0, 1, l) * &blocks.c0;
    let gains = GainSet {
        n0,
        k: k.to_vec(),
        l: l.to_vec(),
        delta,
        controller_poles: sorted_poles(&ctrl),
        observer_poles: sorted_poles(&obs),
    };
    let max_real = gains.max_real();
    if max_real >= -delta {
        return Err(Error::NotHurwitz {
            max_real: max_real + delta,
        });
    }
    Ok(gains)
}

/// Default controller targets -delta - k, k = 1..N0+2.
pub fn default_controller_targets(n0: usize, delta: f64) -> Vec<Complex<f64>> {
    (1..=n0 + 2).map(|k| Complex::new(-delta - k as f64, 0.0)).collect()
}

/// Default observer targets min(-3 delta - k + 1, mu_k), k = 1..N0: an open-loop
/// mode that already meets the margin is left in place.
pub fn default_observer_targets(mu: &[f64], delta: f64) -> Vec<Complex<f64>> {
    mu.iter()
        .enumerate()
        .map(|(i, m)| Complex::new((-3.0 * delta - i as f64).min(*m), 0.0))
        .collect()
}

/// Kalman rank margins of the design pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KalmanReport {
    pub controllability: RankTest,
    pub observability: RankTest,
}

pub fn kalman_report(modes: &Arc<PlantModes>, n0: usize, delta: f64) -> Result<KalmanReport> {
    let blocks = design_blocks(modes, n0, delta)?;
    Ok(KalmanReport {
        controllability: check_controllability(&blocks.a1, &blocks.b1)?,
        observability: check_observability(&blocks.a0, &blocks.c0)?,
    })
}

/// Pole placement for K and L; `None` targets select the defaults.
pub fn design_gains(
    modes: &Arc<PlantModes>,
    n0: usize,
    delta: f64,
    controller_targets: Option<&[Complex<f64>]>,
    observer_targets: Option<&[Complex<f64>]>,
) -> Result<GainSet> {
    let blocks = design_blocks(modes, n0, delta)?;
    let ct = controller_targets
        .map(<[_]>::to_vec)
        .unwrap_or_else(|| default_controller_targets(n0, delta));
    let ot = observer_targets
        .map(<[_]>::to_vec)
        .unwrap_or_else(|| default_observer_targets(&modes.mu[..n0], delta));
    let k = place_poles(&blocks.a1, &blocks.b1, &ct)?;
    let l = design_l(&blocks.a0, &blocks.c0, &ot)?;
    gains_from(modes, n0, &k, &l, delta)
}
