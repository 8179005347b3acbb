//! The Lyapunov certificate (Theta < 0, Gamma_n <= 0) and the search for the
//! smallest certifiable observer order.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use super::bounded_real::{hinf_norm, riccati_residual, riccati_stabilizing};
use super::lyapunov::{lyapunov_residual, solve_shifted_lyapunov, spectral_abscissa};
use super::GainSet;
use crate::error::{CertificateAttempt, Error, Result};
use crate::spectral_model::{build_reduced_matrices, tail_constants, PlantModes, ReducedModel, Scenario};

/// Bounded-real slack factors tried in order; rho = (1 + kappa) h^2.
pub const KAPPAS: [f64; 3] = [0.25, 0.05, 0.01];
/// Modes past N covered by the brute-force Gamma_n check.
pub const SOUNDNESS_HORIZON: usize = 500;

/// How P was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// F1^T P + P F1 + 2 delta P = -I with a scalar schedule and grid.
    ShiftedLyapunov,
    /// Stabilizing Riccati solution sized by the H-infinity norm.
    BoundedReal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaCheck {
    /// Largest eigenvalue of the full block matrix Theta.
    pub max_eig: f64,
    /// Largest eigenvalue of the Schur complement form.
    pub schur_max_eig: f64,
    pub verdicts_agree: bool,
}

impl ThetaCheck {
    pub fn negative(&self) -> bool {
        self.max_eig < 0.0 && self.schur_max_eig < 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaMargin {
    /// Worst Gamma_n over n >= N+1 (exact for the Dirichlet measurement, the
    /// affine majorant for the Neumann one).
    pub margin: f64,
    /// Coefficient of lambda_n in the affine form.
    pub slope: f64,
    pub lambda_next: f64,
    pub tail_constant: f64,
}

impl GammaMargin {
    pub fn feasible(&self) -> bool {
        self.margin <= 0.0 && self.slope <= 0.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignCertificate {
    pub n: usize,
    #[serde(skip)]
    pub p: DMatrix<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub theta_max_eig: f64,
    pub theta_schur_max_eig: f64,
    pub verdicts_agree: bool,
    pub gamma_n_margin: f64,
    pub gamma_slope: f64,
    pub tail_constant: f64,
    pub feasible: bool,
    pub construction: Construction,
    pub hinf_norm: Option<f64>,
    pub kappa: Option<f64>,
    pub eta: Option<f64>,
    /// Residual of the equation that defines P.
    pub defining_residual: f64,
    pub residual_tolerance: f64,
    pub p_min_eig: f64,
    pub p_max_eig: f64,
}

fn check_scalars(alpha: f64, beta: f64, gamma: f64) -> Result<()> {
    if !(alpha > 0.0 && beta > 0.0 && gamma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha, beta, gamma must be positive, got {alpha}, {beta}, {gamma}"
        )));
    }
    Ok(())
}

/// Upper-left block F^T P + P F + 2 delta P + alpha gamma G.
fn theta_block(model: &ReducedModel, p: &DMatrix<f64>, alpha: f64, gamma: f64, delta: f64) -> DMatrix<f64> {
    let f = &model.f;
    let block = f.transpose() * p + p * f + p * (2.0 * delta) + &model.g * (alpha * gamma);
    (&block + block.transpose()) * 0.5
}

/// The symmetric (2N+3)x(2N+3) matrix Theta.
pub fn theta_matrix(
    model: &ReducedModel,
    p: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
) -> Result<DMatrix<f64>> {
    let dim = model.dim();
    if p.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch(format!(
            "P is {:?}, expected {dim}x{dim}",
            p.shape()
        )));
    }
    check_scalars(alpha, beta, gamma)?;
    let pl = p * &model.lcal;
    let mut theta = DMatrix::zeros(dim + 1, dim + 1);
    theta
        .view_mut((0, 0), (dim, dim))
        .copy_from(&theta_block(model, p, alpha, gamma, delta));
    theta.view_mut((0, dim), (dim, 1)).copy_from(&pl);
    theta.view_mut((dim, 0), (1, dim)).copy_from(&pl.transpose());
    theta[(dim, dim)] = -beta;
    Ok(theta)
}

/// Schur complement form F^T P + P F + 2 delta P + alpha gamma G + P Lcal Lcal^T P / beta.
pub fn theta_schur(
    model: &ReducedModel,
    p: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
) -> Result<DMatrix<f64>> {
    let dim = model.dim();
    if p.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch(format!(
            "P is {:?}, expected {dim}x{dim}",
            p.shape()
        )));
    }
    check_scalars(alpha, beta, gamma)?;
    let pl = p * &model.lcal;
    Ok(theta_block(model, p, alpha, gamma, delta) + &pl * pl.transpose() / beta)
}

pub fn evaluate_theta(
    model: &ReducedModel,
    p: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
) -> Result<ThetaCheck> {
    let max_eig = theta_matrix(model, p, alpha, beta, gamma, delta)?
        .symmetric_eigen()
        .eigenvalues
        .max();
    let schur_max_eig = theta_schur(model, p, alpha, beta, gamma, delta)?
        .symmetric_eigen()
        .eigenvalues
        .max();
    Ok(ThetaCheck {
        max_eig,
        schur_max_eig,
        verdicts_agree: (max_eig < 0.0) == (schur_max_eig < 0.0),
    })
}

/// Exponent s of the tail term beta M lambda_n^s / (2 gamma) in Gamma_n.
fn tail_exponent(scenario: Scenario, epsilon: f64) -> f64 {
    match scenario {
        Scenario::NeumannMeasNeumannReg => 0.5 + epsilon,
        _ => 0.0,
    }
}

fn tail_constant_for(model: &ReducedModel, epsilon: f64) -> Result<f64> {
    if model.scenario() == Scenario::NeumannMeasNeumannReg && epsilon != model.tails.epsilon {
        Ok(tail_constants(&model.modes, model.n0, model.n, epsilon)?.m2_phi.upper())
    } else {
        Ok(model.tail_constant())
    }
}

/// Gamma_n evaluated at a given lambda_n.
pub fn gamma_n(
    model: &ReducedModel,
    lambda: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    epsilon: f64,
    delta: f64,
) -> Result<f64> {
    let m = tail_constant_for(model, epsilon)?;
    let s = tail_exponent(model.scenario(), epsilon);
    Ok(-lambda + model.modes.plant.q_c + delta + lambda / alpha + beta * m / (2.0 * gamma) * lambda.powf(s))
}

/// Reduces Gamma_n <= 0 for all n >= N+1 to an affine check at lambda_{N+1}.
pub fn evaluate_gamma_margin(
    model: &ReducedModel,
    alpha: f64,
    beta: f64,
    gamma: f64,
    epsilon: f64,
    delta: f64,
) -> Result<GammaMargin> {
    if !(alpha > 1.0) {
        return Err(Error::AlphaTooSmall { alpha });
    }
    check_scalars(alpha, beta, gamma)?;
    let scenario = model.scenario();
    if scenario == Scenario::NeumannMeasNeumannReg && !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1/2], got {epsilon}"
        )));
    }
    let m = tail_constant_for(model, epsilon)?;
    let lambda = model.modes.lambda(model.n + 1);
    let q_c = model.modes.plant.q_c;
    let (slope, offset) = match scenario {
        Scenario::NeumannMeasNeumannReg => {
            let coef = beta * m / (2.0 * gamma * lambda.powf(0.5 - epsilon));
            (-(1.0 - 1.0 / alpha - coef), q_c + delta)
        }
        _ => (1.0 / alpha - 1.0, q_c + delta + beta * m / (2.0 * gamma)),
    };
    Ok(GammaMargin {
        margin: slope * lambda + offset,
        slope,
        lambda_next: lambda,
        tail_constant: m,
    })
}

/// Max of Gamma_n over the computed modes n in [N+1, N+count], with the range used.
pub fn brute_force_gamma(
    model: &ReducedModel,
    alpha: f64,
    beta: f64,
    gamma: f64,
    epsilon: f64,
    delta: f64,
    count: usize,
) -> Result<(f64, usize, usize)> {
    let from = model.n + 1;
    let to = (model.n + count).min(model.modes.horizon());
    let mut worst = f64::NEG_INFINITY;
    for n in from..=to {
        worst = worst.max(gamma_n(
            model,
            model.modes.lambda(n),
            alpha,
            beta,
            gamma,
            epsilon,
            delta,
        )?);
    }
    Ok((worst, from, to))
}

fn residual_tolerance(p: &DMatrix<f64>) -> f64 {
    1e-8 * (1.0 + p.norm())
}

/// Residual of the equation that produced P.
pub fn defining_residual(model: &ReducedModel, cert: &DesignCertificate) -> f64 {
    let dim = model.dim();
    let id = DMatrix::<f64>::identity(dim, dim);
    match cert.construction {
        Construction::ShiftedLyapunov => lyapunov_residual(&(&model.f1 + &id * cert.delta), &cert.p, &id),
        Construction::BoundedReal => {
            let (r, q) = riccati_data(
                model,
                cert.alpha,
                cert.beta,
                cert.gamma,
                cert.kappa.unwrap_or(0.0),
                cert.eta.unwrap_or(0.0),
            );
            riccati_residual(&(&model.f + &id * cert.delta), &r, &q, &cert.p)
        }
    }
}

/// R = Lcal Lcal^T / beta_s and Q = alpha gamma G + eta I, beta_s = beta / (1 + kappa/2).
fn riccati_data(
    model: &ReducedModel,
    alpha: f64,
    beta: f64,
    gamma: f64,
    kappa: f64,
    eta: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let dim = model.dim();
    let beta_s = beta / (1.0 + 0.5 * kappa);
    let r = &model.lcal * model.lcal.transpose() / beta_s;
    let q = &model.g * (alpha * gamma) + DMatrix::identity(dim, dim) * eta;
    (r, q)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    model: &ReducedModel,
    p: DMatrix<f64>,
    (alpha, beta, gamma, epsilon): (f64, f64, f64, f64),
    theta: ThetaCheck,
    gm: GammaMargin,
    construction: Construction,
    extra: (Option<f64>, Option<f64>, Option<f64>),
) -> DesignCertificate {
    let eig = p.clone().symmetric_eigen().eigenvalues;
    let mut cert = DesignCertificate {
        n: model.n,
        alpha,
        beta,
        gamma,
        epsilon,
        delta: model.delta,
        theta_max_eig: theta.max_eig,
        theta_schur_max_eig: theta.schur_max_eig,
        verdicts_agree: theta.verdicts_agree,
        gamma_n_margin: gm.margin,
        gamma_slope: gm.slope,
        tail_constant: gm.tail_constant,
        feasible: false,
        construction,
        hinf_norm: extra.0,
        kappa: extra.1,
        eta: extra.2,
        defining_residual: 0.0,
        residual_tolerance: residual_tolerance(&p),
        p_min_eig: eig.min(),
        p_max_eig: eig.max(),
        p,
    };
    cert.defining_residual = defining_residual(model, &cert);
    cert.feasible = theta.negative()
        && theta.verdicts_agree
        && gm.feasible()
        && cert.p_min_eig > 0.0
        && cert.defining_residual <= cert.residual_tolerance;
    cert
}

struct StageOutcome {
    certificate: Option<DesignCertificate>,
    best_theta: f64,
    best_gamma: f64,
    note: String,
}

impl StageOutcome {
    fn failed(note: impl Into<String>) -> Self {
        Self {
            certificate: None,
            best_theta: f64::INFINITY,
            best_gamma: f64::INFINITY,
            note: note.into(),
        }
    }
}

/// The proof's scalar schedule for (alpha, beta, gamma).
pub fn proof_schedule(scenario: Scenario, n: usize) -> (f64, f64, f64) {
    let n = n as f64;
    match scenario {
        Scenario::NeumannMeasNeumannReg => (n.powf(0.125), n.powf(0.125), n.powf(-3.0 / 16.0)),
        _ => (n.sqrt(), n.sqrt(), 1.0 / n),
    }
}

fn stage_a(model: &ReducedModel, epsilon: f64) -> Result<StageOutcome> {
    let delta = model.delta;
    let p = match solve_shifted_lyapunov(&model.f1, delta) {
        Ok(p) => p,
        Err(e @ (Error::NotHurwitz { .. } | Error::SolveSingular(_))) => {
            return Ok(StageOutcome::failed(format!("Lyapunov: {e}")))
        }
        Err(e) => return Err(e),
    };
    let (a0, b0, g0) = proof_schedule(model.scenario(), model.n);
    let mut candidates = vec![(a0, b0, g0)];
    let steps: Vec<f64> = (-3..=3).map(|k| 10f64.powf(k as f64 / 3.0)).collect();
    for sa in &steps {
        for sb in &steps {
            for sg in &steps {
                candidates.push((a0 * sa, b0 * sb, g0 * sg));
            }
        }
    }
    let mut out =
        StageOutcome::failed("shifted Lyapunov: no scalar triple on the schedule grid satisfies both conditions");
    for (i, (alpha, beta, gamma)) in candidates.into_iter().enumerate() {
        if alpha <= 1.0 {
            continue;
        }
        let gm = evaluate_gamma_margin(model, alpha, beta, gamma, epsilon, delta)?;
        out.best_gamma = out.best_gamma.min(gm.margin);
        if !gm.feasible() && i > 0 {
            continue;
        }
        let theta = evaluate_theta(model, &p, alpha, beta, gamma, delta)?;
        out.best_theta = out.best_theta.min(theta.max_eig);
        if gm.feasible() && theta.negative() {
            let cert = assemble(
                model,
                p.clone(),
                (alpha, beta, gamma, epsilon),
                theta,
                gm,
                Construction::ShiftedLyapunov,
                (None, None, None),
            );
            if cert.feasible {
                out.certificate = Some(cert);
                return Ok(out);
            }
        }
    }
    Ok(out)
}

/// Row block C_G with G = C_G^T C_G.
fn g_factor(model: &ReducedModel) -> DMatrix<f64> {
    let dim = model.dim();
    let mut c = DMatrix::zeros(2, dim);
    c[(0, 0)] = model.modes.a_norm2.sqrt();
    c.row_mut(1)
        .copy_from(&(model.k_tilde.row(0) * model.modes.b_norm2.sqrt()));
    c
}

fn stage_b(model: &ReducedModel, epsilon: f64) -> Result<StageOutcome> {
    let delta = model.delta;
    let dim = model.dim();
    let a = &model.f + DMatrix::identity(dim, dim) * delta;
    let max_real = spectral_abscissa(&a);
    if max_real >= 0.0 {
        return Ok(StageOutcome::failed(format!(
            "bounded real: F + delta I not Hurwitz (max real part {max_real:.3e})"
        )));
    }
    let lcal = DMatrix::from_column_slice(dim, 1, model.lcal.as_slice());
    let h = hinf_norm(&a, &lcal, &g_factor(model))?;
    let scenario = model.scenario();
    let s = tail_exponent(scenario, epsilon);
    let lambda = model.modes.lambda(model.n + 1);
    let m = tail_constant_for(model, epsilon)?;
    // the Neumann majorant needs 2/alpha < 1 at the optimum
    let alpha_floor = match scenario {
        Scenario::NeumannMeasNeumannReg => 2.0,
        _ => 1.0,
    } * (1.0 + 1e-3);
    let mut out = StageOutcome::failed(format!("bounded real: h = {h:.6e}, no slack factor succeeded"));
    for kappa in KAPPAS {
        // with Lcal = 0 any beta works; the floor keeps the beta block away from round-off
        let rho = (1.0 + kappa) * (h * h).max(1e-4);
        let alpha = (2.0 * lambda.powf(1.0 - s) / (rho * m)).sqrt().max(alpha_floor);
        let gamma = 1.0 / alpha;
        let beta = rho * alpha * gamma;
        let gm = evaluate_gamma_margin(model, alpha, beta, gamma, epsilon, delta)?;
        out.best_gamma = out.best_gamma.min(gm.margin);
        if !gm.feasible() {
            continue;
        }
        let scale = 1.0 + (&model.g * (alpha * gamma)).norm();
        for e in 2..=8 {
            let eta = scale * 10f64.powi(-e);
            let (r, q) = riccati_data(model, alpha, beta, gamma, kappa, eta);
            let p = match riccati_stabilizing(&a, &r, &q) {
                Ok(p) => p,
                Err(Error::NotHurwitz { .. } | Error::SolveSingular(_)) => continue,
                Err(e) => return Err(e),
            };
            let theta = evaluate_theta(model, &p, alpha, beta, gamma, delta)?;
            out.best_theta = out.best_theta.min(theta.max_eig);
            let cert = assemble(
                model,
                p,
                (alpha, beta, gamma, epsilon),
                theta,
                gm,
                Construction::BoundedReal,
                (Some(h), Some(kappa), Some(eta)),
            );
            if cert.feasible {
                out.certificate = Some(cert);
                return Ok(out);
            }
        }
    }
    Ok(out)
}

/// Outcome of certifying one observer order.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub model: ReducedModel,
    pub certificate: Option<DesignCertificate>,
    pub attempt: CertificateAttempt,
}

/// Tries the shifted-Lyapunov construction, then the bounded-real one, at order N.
pub fn certify_at(modes: &Arc<PlantModes>, gains: &GainSet, n: usize) -> Result<Candidate> {
    let model = build_reduced_matrices(modes, gains.n0, n, &gains.k, &gains.l, gains.delta)?;
    let epsilon = model.tails.epsilon;
    let a = stage_a(&model, epsilon)?;
    let (b, certificate) = match a.certificate {
        Some(c) => (None, Some(c)),
        None => {
            let b = stage_b(&model, epsilon)?;
            let c = b.certificate.clone();
            (Some(b), c)
        }
    };
    let mut note = a.note.clone();
    let (mut theta, mut gamma) = (a.best_theta, a.best_gamma);
    if let Some(b) = &b {
        note = format!("{}; {}", a.note, b.note);
        theta = theta.min(b.best_theta);
        gamma = gamma.min(b.best_gamma);
    }
    if let Some(c) = &certificate {
        theta = c.theta_max_eig;
        gamma = c.gamma_n_margin;
        note = format!("certified ({:?})", c.construction);
    }
    Ok(Candidate {
        model,
        certificate,
        attempt: CertificateAttempt {
            n,
            theta_max_eig: theta,
            gamma_n_margin: gamma,
            note,
        },
    })
}

/// First N in N0+1..=n_max with a feasible certificate.
pub fn find_minimal_n(modes: &Arc<PlantModes>, gains: &GainSet, n_max: usize) -> Result<Candidate> {
    if n_max < gains.n0 + 1 {
        return Err(Error::InvalidArgument(format!(
            "N_max = {n_max} is below N0 + 1 = {}",
            gains.n0 + 1
        )));
    }
    let mut attempts = Vec::new();
    for n in gains.n0 + 1..=n_max {
        let candidate = certify_at(modes, gains, n)?;
        if candidate.certificate.is_some() {
            return Ok(candidate);
        }
        attempts.push(candidate.attempt);
    }
    Err(Error::NotFeasibleUpToNMax { n_max, attempts })
}

/// Independent re-check of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoundnessReport {
    pub theta_max_eig: f64,
    pub theta_schur_max_eig: f64,
    /// -Theta and the negated Schur form admit Cholesky factorizations.
    pub theta_cholesky: bool,
    pub p_cholesky: bool,
    pub gamma_bruteforce_max: f64,
    pub gamma_range: (usize, usize),
    /// Brute-force maximum is consistent with the reported margin.
    pub gamma_reduction_consistent: bool,
    pub defining_residual: f64,
    pub residual_tolerance: f64,
    pub sound: bool,
}

pub fn verify_certificate(model: &ReducedModel, cert: &DesignCertificate) -> Result<SoundnessReport> {
    let (alpha, beta, gamma, epsilon, delta) = (cert.alpha, cert.beta, cert.gamma, cert.epsilon, cert.delta);
    let theta = theta_matrix(model, &cert.p, alpha, beta, gamma, delta)?;
    let schur = theta_schur(model, &cert.p, alpha, beta, gamma, delta)?;
    let theta_max_eig = theta.clone().symmetric_eigen().eigenvalues.max();
    let theta_schur_max_eig = schur.clone().symmetric_eigen().eigenvalues.max();
    let theta_cholesky = (-theta).cholesky().is_some() && (-schur).cholesky().is_some();
    let p_cholesky = cert.p.clone().cholesky().is_some();
    let (worst, from, to) = brute_force_gamma(model, alpha, beta, gamma, epsilon, delta, SOUNDNESS_HORIZON)?;
    let lambda = model.modes.lambda(model.n + 1);
    let scale = model.modes.plant.q_c.abs() + delta + lambda;
    let consistent = match model.scenario() {
        Scenario::NeumannMeasNeumannReg => worst <= cert.gamma_n_margin + 1e-12 * scale,
        _ => (worst - cert.gamma_n_margin).abs() <= 1e-12 * scale,
    };
    let residual = defining_residual(model, cert);
    let tolerance = residual_tolerance(&cert.p);
    let sound = theta_max_eig < 0.0
        && theta_schur_max_eig < 0.0
        && theta_cholesky
        && p_cholesky
        && worst <= 0.0
        && consistent
        && residual <= tolerance;
    Ok(SoundnessReport {
        theta_max_eig,
        theta_schur_max_eig,
        theta_cholesky,
        p_cholesky,
        gamma_bruteforce_max: worst,
        gamma_range: (from, to),
        gamma_reduction_consistent: consistent,
        defining_residual: residual,
        residual_tolerance: tolerance,
        sound,
    })
}
