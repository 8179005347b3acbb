use std::sync::{Arc, OnceLock};

use rdreg::equilibrium::solve_equilibrium;
use rdreg::simulator::{fit_decay_metrics, simulate, Reference, SimConfig, StepControl};
use rdreg::spectral_model::{
    build_reduced_matrices, select_n0, ModelOptions, PlantModes, PlantSpec, ReducedModel, Scenario,
};
use rdreg::synthesis::{design_gains, find_minimal_n};
use rdreg::CoefficientFunction;

const SCENARIOS: [Scenario; 3] = [
    Scenario::DirichletMeasDirichletReg,
    Scenario::NeumannMeasNeumannReg,
    Scenario::DirichletMeasNeumannReg,
];

fn modes(scenario: Scenario) -> Arc<PlantModes> {
    static CACHE: OnceLock<Vec<Arc<PlantModes>>> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        SCENARIOS
            .iter()
            .map(|s| {
                let options = ModelOptions {
                    grid_points: Some(2401),
                    tail_horizon: 300,
                    tail_tolerance: None,
                };
                Arc::new(PlantModes::new(&PlantSpec::constant(1.0, 0.0, 3.0, *s), options).unwrap())
            })
            .collect()
    });
    all[SCENARIOS.iter().position(|s| *s == scenario).unwrap()].clone()
}

fn paper_model() -> ReducedModel {
    let m = modes(Scenario::DirichletMeasNeumannReg);
    build_reduced_matrices(&m, 1, 3, &[-10.4134, -11.3747, 2.31], &[1.4373], 0.5).unwrap()
}

/// z0 = x^2 + 0.5 (1 - x^2)^2: compatible with u0 = 1 and excites every mode.
fn rich_z0() -> CoefficientFunction {
    CoefficientFunction::polynomial(vec![0.5, 0.0, 0.0, 0.0, 0.5]).unwrap()
}

#[test]
fn zero_data_give_zero_trajectory() {
    let model = paper_model();
    let config = SimConfig {
        horizon: 1.0,
        reference: Reference::Constant { value: 0.0 },
        z0: Some(CoefficientFunction::constant(0.0)),
        u0: Some(0.0),
        ..SimConfig::default()
    };
    let traj = simulate(&model, &config).unwrap();
    for s in &traj.samples {
        assert_eq!(s.u, 0.0);
        assert_eq!(s.xi, 0.0);
        assert_eq!(s.y_r, 0.0);
        assert!(s.w.iter().chain(&s.w_hat).all(|v| *v == 0.0));
    }
}

#[test]
fn fixed_step_converges_at_fourth_order() {
    let model = paper_model();
    let run = |h: f64| {
        let config = SimConfig {
            modal_order: 10,
            horizon: 1.0,
            output_dt: Some(0.05),
            step: StepControl::Fixed { h: Some(h) },
            z0: Some(rich_z0()),
            ..SimConfig::default()
        };
        simulate(&model, &config).unwrap().last().y_r
    };
    let (a, b, c) = (run(2e-3), run(1e-3), run(5e-4));
    let order = ((a - b).abs() / (b - c).abs()).log2();
    assert!(order >= 3.9, "order {order}: {a} {b} {c}");
}

#[test]
fn fifty_modes_are_enough() {
    let model = paper_model();
    let sup = |m: usize| {
        let config = SimConfig {
            modal_order: m,
            horizon: 10.0,
            z0: Some(rich_z0()),
            ..SimConfig::default()
        };
        let traj = simulate(&model, &config).unwrap();
        traj.samples.iter().map(|s| s.y_r.abs()).fold(0.0, f64::max)
    };
    let (a, b) = (sup(50), sup(80));
    assert!((a - b).abs() <= 0.01 * b, "{a} vs {b}");
}

#[test]
fn input_is_the_integral_of_v() {
    let model = paper_model();
    let config = SimConfig {
        horizon: 4.0,
        output_dt: Some(1e-3),
        z0: Some(rich_z0()),
        ..SimConfig::default()
    };
    let traj = simulate(&model, &config).unwrap();
    let s = &traj.samples;
    let scale = s.iter().map(|x| x.v.abs()).fold(0.0, f64::max);
    for i in 1..s.len() - 1 {
        let du = (s[i + 1].u - s[i - 1].u) / (s[i + 1].t - s[i - 1].t);
        assert!(
            (du - s[i].v).abs() <= 1e-4 * scale,
            "t = {}: {du} vs {}",
            s[i].t,
            s[i].v
        );
    }
}

#[test]
fn reconstruction_respects_boundary_conditions() {
    for scenario in SCENARIOS {
        let m = modes(scenario);
        let gains = design_gains(&m, select_n0(3.0, &m.basis, 0.5).unwrap(), 0.5, None, None).unwrap();
        let model = build_reduced_matrices(&m, gains.n0, 4, &gains.k, &gains.l, 0.5).unwrap();
        let traj = simulate(
            &model,
            &SimConfig {
                horizon: 2.0,
                ..SimConfig::default()
            },
        )
        .unwrap();
        let basis = &m.basis;
        let last = basis.grid.points - 1;
        for s in traj.samples.iter().step_by(100) {
            let z1: f64 =
                s.w.iter().zip(&basis.pairs).map(|(w, p)| w * p.phi[last]).sum::<f64>() + scenario.lift(1.0) * s.u;
            assert_eq!(z1, s.u);
            // left boundary: Dirichlet z(t,0) = 0 or Neumann z_x(t,0) = 0 through the traces
            let left: f64 = match scenario.domain() {
                rdreg::sturm_liouville::BoundaryDomain::DirichletDirichlet => {
                    s.w.iter().zip(&basis.pairs).map(|(w, p)| w * p.trace0).sum::<f64>()
                }
                rdreg::sturm_liouville::BoundaryDomain::NeumannDirichlet => {
                    s.w.iter().zip(&basis.pairs).map(|(w, p)| w * p.dtrace0).sum::<f64>()
                }
            };
            assert!(left.abs() <= 1e-10 * (1.0 + s.u.abs()), "{scenario:?}: {left:e}");
        }
    }
}

#[test]
fn certified_designs_decay_at_the_certified_rate() {
    for scenario in SCENARIOS {
        let m = modes(scenario);
        let gains = design_gains(&m, select_n0(3.0, &m.basis, 0.5).unwrap(), 0.5, None, None).unwrap();
        let candidate = find_minimal_n(&m, &gains, 20).unwrap();
        let model = candidate.model;
        let config = SimConfig {
            z0: Some(match scenario {
                Scenario::NeumannMeasNeumannReg => CoefficientFunction::polynomial(vec![0.0, 1.0, 0.5, -0.5]).unwrap(),
                _ => rich_z0(),
            }),
            ..SimConfig::default()
        };
        let traj = simulate(&model, &config).unwrap();
        let eq = solve_equilibrium(&model, 1.0).unwrap();
        let metrics = fit_decay_metrics(&traj, &eq, &model, &config.reference).unwrap();
        let rate = metrics.fitted_rate.unwrap();
        assert!(rate <= -0.9 * 0.5, "{scenario:?}: {rate}");
        assert!(metrics.steady_error <= 1e-3, "{scenario:?}: {}", metrics.steady_error);
    }
}

#[test]
fn start_at_equilibrium_skips_the_fit() {
    let model = paper_model();
    let eq = solve_equilibrium(&model, 0.0).unwrap();
    let config = SimConfig {
        horizon: 1.0,
        reference: Reference::Constant { value: 0.0 },
        z0: Some(CoefficientFunction::constant(0.0)),
        u0: Some(0.0),
        ..SimConfig::default()
    };
    let traj = simulate(&model, &config).unwrap();
    let metrics = fit_decay_metrics(&traj, &eq, &model, &config.reference).unwrap();
    assert!(metrics.skipped && metrics.fitted_rate.is_none());
}

#[test]
fn divergence_is_reported() {
    let m = modes(Scenario::DirichletMeasNeumannReg);
    // destabilizing feedback on the input
    let model = build_reduced_matrices(&m, 1, 3, &[40.0, 0.0, 0.0], &[0.0], 0.5).unwrap();
    let err = simulate(&model, &SimConfig::default()).unwrap_err();
    assert!(matches!(err, rdreg::Error::Instability { .. }), "{err}");
}
