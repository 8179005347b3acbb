//! The four subcommands and their reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rdreg::equilibrium::{equilibrium_profile, solve_equilibrium, EquilibriumProfile, EquilibriumState};
use rdreg::simulator::{
    fit_decay_metrics, fit_log_slope, observer_error_check, simulate, write_profile_csv, write_snapshot_csv,
    write_trajectory_csv, DecayMetrics, Reference, SimConfig,
};
use rdreg::spectral_model::{select_n0, PlantModes, ReducedModel, Scenario, TailConstants};
use rdreg::sturm_liouville::{solve_eigenproblem, BoundaryDomain, DEFAULT_GRID_POINTS};
use rdreg::synthesis::{
    certify_at, check_cauchy_condition, design_gains, find_minimal_n, gains_from, kalman_report, verify_certificate,
    CauchyCheck, DesignCertificate, GainSet, KalmanReport, SoundnessReport,
};
use rdreg::{CoefficientFunction, Error};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Stage, StageExt};

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn write_json<T: Serialize>(dir: &Path, name: &str, config: &RunConfig, body: T) -> Result<(), CliError> {
    let report = Report {
        tool: "rdreg",
        version: env!("CARGO_PKG_VERSION"),
        config,
        body,
    };
    let mut out = BufWriter::new(File::create(dir.join(name))?);
    serde_json::to_writer_pretty(&mut out, &report).map_err(std::io::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

#[derive(Serialize)]
struct EigMode {
    n: usize,
    lambda: f64,
    lambda_error: f64,
    trace0: f64,
    dtrace0: f64,
    trace1: f64,
    dtrace1: f64,
    band: (f64, f64),
    band_holds: bool,
}

#[derive(Serialize)]
struct EigReport {
    domain: BoundaryDomain,
    grid_points: usize,
    max_lambda_error: f64,
    all_bands_hold: bool,
    warnings: Vec<String>,
    modes: Vec<EigMode>,
}

pub fn eig(config: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let plant = &config.plant;
    let grid_points = config.eig.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
    let domain = plant.scenario.domain();
    let basis = solve_eigenproblem(&plant.p, &plant.q, domain, config.eig.n_max, grid_points).at(Stage::Setup)?;
    let modes: Vec<EigMode> = basis
        .pairs
        .iter()
        .map(|pair| EigMode {
            n: pair.index,
            lambda: pair.lambda,
            lambda_error: pair.lambda_error,
            trace0: pair.trace0,
            dtrace0: pair.dtrace0,
            trace1: pair.trace1,
            dtrace1: pair.dtrace1,
            band: basis.band(pair.index),
            band_holds: basis.band_holds(pair.index),
        })
        .collect();
    let report = EigReport {
        domain,
        grid_points,
        max_lambda_error: basis.max_lambda_error(),
        all_bands_hold: modes.iter().all(|m| m.band_holds),
        warnings: basis.warnings.clone(),
        modes,
    };
    write_json(dir, &config.output.eig_report, config, &report)?;
    println!(
        "eig: {} modes on {:?}, lambda_1 = {:.10}",
        report.modes.len(),
        domain,
        basis.lambda(1)
    );
    println!(
        "eig: band check {}",
        if report.all_bands_hold { "holds" } else { "VIOLATED" }
    );
    Ok(())
}

/// Everything the design stage produces.
pub struct Design {
    pub modes: Arc<PlantModes>,
    pub gains: GainSet,
    pub gain_source: &'static str,
    pub kalman: KalmanReport,
    pub cauchy: Option<CauchyCheck>,
    pub model: ReducedModel,
    pub certificate: DesignCertificate,
    pub soundness: Option<SoundnessReport>,
}

pub fn run_design(config: &RunConfig) -> Result<Design, CliError> {
    let plant = &config.plant;
    let delta = config.design.delta;
    let modes = Arc::new(PlantModes::new(plant, config.model).at(Stage::Setup)?);
    let n0 = match config.design.n0 {
        Some(n0) => n0,
        None => select_n0(plant.q_c, &modes.basis, delta).at(Stage::Design)?,
    };
    let kalman = kalman_report(&modes, n0, delta).at(Stage::Design)?;
    if !kalman.controllability.full_rank {
        return Err(CliError::Core(
            Error::Uncontrollable {
                ratio: kalman.controllability.ratio,
            },
            Stage::Design,
        ));
    }
    if !kalman.observability.full_rank {
        return Err(CliError::Core(
            Error::Uncontrollable {
                ratio: kalman.observability.ratio,
            },
            Stage::Design,
        ));
    }
    let cauchy = if plant.scenario == Scenario::DirichletMeasNeumannReg {
        let check = check_cauchy_condition(plant).at(Stage::Design)?;
        if !check.holds {
            return Err(CliError::Core(
                Error::CauchyConditionFailed { value: check.value },
                Stage::Design,
            ));
        }
        Some(check)
    } else {
        None
    };

    let (gains, gain_source) = match (&config.design.k, &config.design.l) {
        (Some(k), Some(l)) => (gains_from(&modes, n0, k, l, delta).at(Stage::Design)?, "override"),
        _ => {
            let ct: Option<Vec<_>> = config
                .design
                .controller_poles
                .as_ref()
                .map(|v| v.iter().map(|p| (*p).into()).collect());
            let ot: Option<Vec<_>> = config
                .design
                .observer_poles
                .as_ref()
                .map(|v| v.iter().map(|p| (*p).into()).collect());
            let gains = design_gains(&modes, n0, delta, ct.as_deref(), ot.as_deref()).at(Stage::Design)?;
            (gains, "pole_placement")
        }
    };

    let candidate = match config.certify.n {
        Some(n) => {
            let c = certify_at(&modes, &gains, n).at(Stage::Design)?;
            if c.certificate.is_none() {
                return Err(CliError::Core(
                    Error::NotFeasibleUpToNMax {
                        n_max: n,
                        attempts: vec![c.attempt],
                    },
                    Stage::Design,
                ));
            }
            c
        }
        None => find_minimal_n(&modes, &gains, config.certify.n_max).at(Stage::Design)?,
    };
    let certificate = candidate.certificate.expect("checked above");
    let soundness = if config.certify.verify {
        Some(verify_certificate(&candidate.model, &certificate).at(Stage::Design)?)
    } else {
        None
    };
    Ok(Design {
        modes,
        gains,
        gain_source,
        kalman,
        cauchy,
        model: candidate.model,
        certificate,
        soundness,
    })
}

/// Final value of the reference, used as the equilibrium set point.
fn set_point(reference: &Reference) -> f64 {
    reference.at(reference.settles_at())
}

#[derive(Serialize)]
struct EquilibriumSummary<'a> {
    state: &'a EquilibriumState,
    static_residual_l2: f64,
    truncation_bound: f64,
    boundary_error: f64,
}

impl<'a> EquilibriumSummary<'a> {
    fn new(state: &'a EquilibriumState, profile: &EquilibriumProfile) -> Self {
        Self {
            state,
            static_residual_l2: profile.static_residual_l2,
            truncation_bound: profile.truncation_bound,
            boundary_error: profile.boundary_error,
        }
    }
}

#[derive(Serialize)]
struct DesignReport<'a> {
    n0: usize,
    gain_source: &'a str,
    gains: &'a GainSet,
    kalman: &'a KalmanReport,
    cauchy: Option<&'a CauchyCheck>,
    n: usize,
    tail_constants: &'a TailConstants,
    certificate: &'a DesignCertificate,
    soundness: Option<&'a SoundnessReport>,
    equilibrium: EquilibriumSummary<'a>,
}

fn design_report<'a>(d: &'a Design, eq: &'a EquilibriumState, profile: &EquilibriumProfile) -> DesignReport<'a> {
    DesignReport {
        n0: d.gains.n0,
        gain_source: d.gain_source,
        gains: &d.gains,
        kalman: &d.kalman,
        cauchy: d.cauchy.as_ref(),
        n: d.certificate.n,
        tail_constants: &d.model.tails,
        certificate: &d.certificate,
        soundness: d.soundness.as_ref(),
        equilibrium: EquilibriumSummary::new(eq, profile),
    }
}

fn print_design(d: &Design) {
    println!("design: N0 = {}, gains from {}", d.gains.n0, d.gain_source);
    println!("design: K = {:?}, L = {:?}", d.gains.k, d.gains.l);
    println!("design: max Re of closed-loop poles = {:.6}", d.gains.max_real());
    if let Some(c) = &d.cauchy {
        println!("design: Cauchy value |f'(0)| = {:.6}", c.value);
    }
    let c = &d.certificate;
    println!(
        "design: certificate at N = {} ({:?}), Theta max eig = {:.3e}, Gamma margin = {:.3e}",
        c.n, c.construction, c.theta_max_eig, c.gamma_n_margin
    );
    if let Some(s) = &d.soundness {
        println!(
            "design: independent re-check {}",
            if s.sound { "sound" } else { "NOT SOUND" }
        );
    }
}

pub fn design(config: &RunConfig, dir: &Path) -> Result<Design, CliError> {
    let d = run_design(config)?;
    let eq = solve_equilibrium(&d.model, set_point(&config.simulate.reference)).at(Stage::Design)?;
    let profile = equilibrium_profile(&eq, &d.model);
    write_json(
        dir,
        &config.output.design_report,
        config,
        design_report(&d, &eq, &profile),
    )?;
    let mut out = create(dir, &config.output.profile)?;
    write_profile_csv(&profile.x, &profile.z_e, &mut out)?;
    out.flush()?;
    print_design(&d);
    Ok(d)
}

#[derive(Serialize)]
pub struct Metrics {
    pub decay: DecayMetrics,
    /// Decay required of a certified design: fitted rate <= -0.9 delta.
    pub certified_decay_holds: Option<bool>,
    pub observer_error: f64,
    pub final_y_r: f64,
    pub final_u: f64,
    pub step: Option<f64>,
    pub samples: usize,
}

pub struct SimulationOutcome {
    pub design: Design,
    pub metrics: Metrics,
}

pub fn simulate_cmd(config: &RunConfig, dir: &Path) -> Result<SimulationOutcome, CliError> {
    let d = design(config, dir)?;
    let sim = &config.simulate;
    let traj = simulate(&d.model, sim).at(Stage::Simulate)?;
    let eq = solve_equilibrium(&d.model, set_point(&sim.reference)).at(Stage::Simulate)?;
    let decay = fit_decay_metrics(&traj, &eq, &d.model, &sim.reference).at(Stage::Simulate)?;
    let last = traj.last();
    let metrics = Metrics {
        certified_decay_holds: decay.fitted_rate.map(|r| r <= -0.9 * d.gains.delta),
        decay,
        observer_error: observer_error_check(&traj, &d.model),
        final_y_r: last.y_r,
        final_u: last.u,
        step: traj.step,
        samples: traj.samples.len(),
    };
    let mut out = create(dir, &config.output.trajectory)?;
    write_trajectory_csv(&traj, &mut out)?;
    out.flush()?;
    if let Some(name) = &config.output.snapshot {
        let mut out = create(dir, name)?;
        write_snapshot_csv(
            &traj,
            &d.model,
            config.output.snapshot_time_stride,
            config.output.snapshot_space_stride,
            &mut out,
        )?;
        out.flush()?;
    }
    write_json(dir, &config.output.metrics_report, config, &metrics)?;
    match metrics.decay.fitted_rate {
        Some(rate) => println!("simulate: fitted decay rate {rate:.4}"),
        None => println!("simulate: started at equilibrium, decay fit skipped"),
    }
    println!(
        "simulate: y_r(T) = {:.10}, steady error {:.3e}, observer-error check {:.3e}",
        metrics.final_y_r, metrics.decay.steady_error, metrics.observer_error
    );
    Ok(SimulationOutcome { design: d, metrics })
}

/// Growth rate of sqrt(sum lambda_n w_n^2) for the uncontrolled plant from
/// z0 = 1 - x^2, fitted on [T/4, T].
fn open_loop_rate(model: &ReducedModel, sim: &SimConfig) -> Result<f64, CliError> {
    let z0 = match model.scenario() {
        Scenario::NeumannMeasNeumannReg => CoefficientFunction::polynomial(vec![0.0, 1.0, -1.0]),
        _ => CoefficientFunction::polynomial(vec![1.0, 0.0, -1.0]),
    }
    .at(Stage::Simulate)?;
    let config = SimConfig {
        open_loop: true,
        z0: Some(z0),
        u0: Some(0.0),
        reference: Reference::Constant { value: 0.0 },
        ..sim.clone()
    };
    let traj = simulate(model, &config).at(Stage::Simulate)?;
    let start = config.horizon / 4.0;
    let (t, e): (Vec<f64>, Vec<f64>) = traj
        .samples
        .iter()
        .filter(|s| s.t >= start)
        .map(|s| (s.t, s.energy.sqrt()))
        .unzip();
    fit_log_slope(&t, &e).at(Stage::Simulate)
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    target: String,
    pass: bool,
}

pub fn reproduce_paper(config: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let outcome = simulate_cmd(config, dir)?;
    let d = &outcome.design;
    let m = &outcome.metrics;
    let lambda1 = d.modes.lambda(1);
    let open_loop_expected = d.modes.plant.q_c - lambda1;
    let open_loop = open_loop_rate(&d.model, &config.simulate)?;
    let observer = d.gains.observer_poles.first().map(|p| p.re).unwrap_or(f64::NAN);
    let controller_max = d
        .gains
        .controller_poles
        .iter()
        .map(|p| p.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let r_e = set_point(&config.simulate.reference);
    let mut checks = vec![
        Check {
            name: "N0",
            value: d.gains.n0 as f64,
            target: "= 1".into(),
            pass: d.gains.n0 == 1,
        },
        Check {
            name: "max Re eig(A1 + B1 K)",
            value: controller_max,
            target: format!("< {}", -d.gains.delta),
            pass: controller_max < -d.gains.delta,
        },
        Check {
            name: "eig(A0 - L C0)",
            value: observer,
            target: "-1.5 +- 1e-3".into(),
            pass: (observer + 1.5).abs() <= 1e-3,
        },
        Check {
            name: "certificate N",
            value: d.certificate.n as f64,
            target: "feasible at 3".into(),
            pass: d.certificate.n == 3 && d.certificate.feasible,
        },
        Check {
            name: "|y_r(T) - r|",
            value: (m.final_y_r - r_e).abs(),
            target: "<= 1e-3".into(),
            pass: (m.final_y_r - r_e).abs() <= 1e-3 * r_e.abs().max(1.0),
        },
        Check {
            name: "fitted decay rate",
            value: m.decay.fitted_rate.unwrap_or(f64::NAN),
            target: format!("<= {}", -0.9 * d.gains.delta),
            pass: m.decay.fitted_rate.is_some_and(|r| r <= -0.9 * d.gains.delta),
        },
        Check {
            name: "open-loop growth rate",
            value: open_loop,
            target: format!("{open_loop_expected:.4} +- 5%"),
            pass: (open_loop - open_loop_expected).abs() <= 0.05 * open_loop_expected.abs(),
        },
    ];
    if let Some(s) = &d.soundness {
        checks.push(Check {
            name: "certificate re-check",
            value: s.theta_max_eig,
            target: "sound".into(),
            pass: s.sound,
        });
    }
    #[derive(Serialize)]
    struct Checks<'a> {
        checks: &'a [Check],
    }
    write_json(dir, "reproduction.json", config, Checks { checks: &checks })?;
    for c in &checks {
        println!(
            "{} {:<24} {:>14.6e}  (target {})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.target
        );
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(CliError::Checks(format!("{failed} reproduction check(s) failed")));
    }
    Ok(())
}
