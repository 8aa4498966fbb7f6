use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;
use crate::fixtures::{self, Fixture};
use crate::market::ZoneCostModel;
use crate::nlp::{check_derivatives, solve, NlpProblem, SolveOutcome, SolverOptions, StartPoint, INFINITE_BOUND};

fn build(f: &Fixture, scenario: ScenarioKind) -> OpfProblem<'_> {
    build_problem(&f.model, &f.costs, &f.inputs, scenario).unwrap()
}

fn run(f: &Fixture, scenario: ScenarioKind) -> (DispatchResult, SolveOutcome) {
    let p = build(f, scenario);
    let out = solve(&p, &StartPoint::flat(&p), &SolverOptions::default());
    assert!(out.converged(), "{scenario}: {:?} after {} iterations", out.status, out.iterations);
    (extract_solution(&p, &out).unwrap(), out)
}

fn interior_point(p: &OpfProblem<'_>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (lo, hi) = p.bounds();
    let x0 = p.initial_point();
    (0..p.num_vars())
        .map(|i| {
            if lo[i] > -INFINITE_BOUND && hi[i] < INFINITE_BOUND {
                lo[i] + rng.gen_range(0.1..0.9) * (hi[i] - lo[i])
            } else {
                x0[i] + rng.gen_range(-0.5..0.5)
            }
        })
        .collect()
}

#[test]
fn two_bus_si_has_no_zonal_variables() {
    let f = fixtures::two_bus();
    let p = build(&f, ScenarioKind::SI);
    let l = p.layout();
    assert_eq!(l.vm.len() + l.va.len(), 4);
    assert_eq!(l.pg.len() + l.qg.len(), 2);
    assert_eq!(l.len(), 6);
    assert!(l.zone_pn.is_empty() && l.zone_pg.is_empty() && l.zone_pd.is_empty());
    assert!(p.zone_balance_rows().iter().all(Option::is_none));
}

#[test]
fn market_coupling_adds_three_equalities_per_zone() {
    let f = fixtures::lossless_star(1000.0);
    let si = build(&f, ScenarioKind::SI);
    let sii = build(&f, ScenarioKind::SII);
    let zones = f.model.zones.len();
    assert_eq!(sii.num_eq(), si.num_eq() + 3 * zones);
    assert_eq!(sii.num_vars(), si.num_vars() + 3 * zones);
    assert_eq!(sii.num_ineq(), si.num_ineq());
    let (lo, hi) = sii.bounds();
    for (k, m) in sii.zone_models().iter().enumerate() {
        let v = sii.layout().zone_pn.start + k;
        assert_eq!(lo[v], m.pn_min / f.model.base_mva);
        assert_eq!(hi[v], m.pn_max / f.model.base_mva);
    }
}

#[test]
fn si_objective_hand_value() {
    let f = fixtures::two_bus();
    let layout = DecisionLayout::new(&f.model, ScenarioKind::SI);
    let prices = BTreeMap::from([("Z".to_string(), 100.0)]);
    let obj = objective_si(&f.model, &layout, &prices, &[]).unwrap();
    let mut x = vec![0.0; layout.len()];
    x[layout.pg.start] = 10.0 / f.model.base_mva;
    assert!((obj.value_eur(&x) - 1000.0).abs() < 1e-9);
}

#[test]
fn si_offshore_output_is_free() {
    let f = fixtures::hub_pair(2000.0, 0.01, 40.0);
    let layout = DecisionLayout::new(&f.model, ScenarioKind::SI);
    let prices = BTreeMap::from([("P".to_string(), 40.0), ("Q".to_string(), 40.0)]);
    let obj = objective_si(&f.model, &layout, &prices, &[2000.0]).unwrap();
    let mut x = vec![0.0; layout.len()];
    for g in layout.gamma.clone() {
        x[g] = 0.7;
    }
    assert_eq!(obj.value(&x), 0.0);
}

#[test]
fn si_objective_requires_prices() {
    let f = fixtures::two_bus();
    let layout = DecisionLayout::new(&f.model, ScenarioKind::SI);
    let err = objective_si(&f.model, &layout, &BTreeMap::new(), &[]).unwrap_err();
    assert!(matches!(err, Error::MissingZonePrice(z) if z == "Z"));
}

#[test]
fn sii_objective_hand_value() {
    let f = fixtures::two_bus();
    let layout = DecisionLayout::new(&f.model, ScenarioKind::SII);
    let m = ZoneCostModel::from_coefficients(0.01, 50.0, 50.0).unwrap();
    let obj = objective_sii(&layout, &[m], f.model.base_mva);
    let mut x = vec![0.0; layout.len()];
    assert_eq!(obj.value(&x), 0.0);
    x[layout.zone_pn.start] = 100.0 / f.model.base_mva;
    assert!((obj.value_eur(&x) - 5100.0).abs() < 1e-9);
    let mut g = vec![0.0; layout.len()];
    obj.gradient(&x, &mut g);
    let price = g[layout.zone_pn.start] / (OBJ_SCALE * f.model.base_mva);
    assert!((price - 52.0).abs() < 1e-9);
}

#[test]
fn derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cases = [
        fixtures::two_bus(),
        fixtures::two_zone_link(0.01, 1000.0, (0.01, 30.0), (0.01, 60.0)),
        fixtures::lossless_star(1500.0),
        fixtures::hub_pair(3000.0, 0.05, 50.0),
    ];
    for f in &cases {
        for scenario in ScenarioKind::ALL {
            let p = build(f, scenario);
            for _ in 0..3 {
                let x = interior_point(&p, &mut rng);
                let err = check_derivatives(&p, &x, 1e-6);
                assert!(err < 1e-5, "{scenario}: derivative error {err}");
            }
        }
    }
}

#[test]
fn flat_start_jacobian_check() {
    let f = fixtures::two_bus();
    let p = build(&f, ScenarioKind::SII);
    assert!(check_derivatives(&p, &p.initial_point(), 1e-6) < 1e-5);
}

#[test]
fn siii_is_sii_without_wind() {
    let f = fixtures::hub_pair(2500.0, 0.01, 40.0);
    let mut calm = f.clone();
    for v in calm.inputs.values.iter_mut().filter(|(k, _)| k.starts_with('W')) {
        *v.1 = 0.0;
    }
    let a = build(&f, ScenarioKind::SIII);
    let b = build(&calm, ScenarioKind::SII);
    assert!(a.available_mw().iter().all(|&v| v == 0.0));
    assert_eq!(a.num_vars(), b.num_vars());
    assert_eq!(a.num_eq(), b.num_eq());
    assert_eq!(a.num_ineq(), b.num_ineq());
    assert_eq!(a.bounds(), b.bounds());
    assert_eq!(a.initial_point(), b.initial_point());
    assert_eq!(a.eq_jacobian_structure(), b.eq_jacobian_structure());
    assert_eq!(a.hessian_structure(), b.hessian_structure());
    for r in 0..a.num_eq() {
        assert_eq!(a.eq_label(r), b.eq_label(r));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = interior_point(&a, &mut rng);
    let (mut ga, mut gb) = (vec![0.0; a.num_eq()], vec![0.0; b.num_eq()]);
    a.eq_values(&x, &mut ga);
    b.eq_values(&x, &mut gb);
    assert_eq!(ga, gb);
    assert_eq!(a.objective(&x), b.objective(&x));
}

#[test]
fn build_errors() {
    let f = fixtures::two_bus();
    let err = build_problem(&f.model, &BTreeMap::new(), &f.inputs, ScenarioKind::SII).unwrap_err();
    assert!(matches!(err, Error::MissingCostModel(z) if z == "Z"));

    let err = build_problem(&f.model, &f.costs, &StepInputs::new(7), ScenarioKind::SI).unwrap_err();
    assert!(matches!(err, Error::MissingProfile { ref profile, timestep: 7 } if profile == "L"));

    let mut bad = f.clone();
    bad.model.ac_nodes[1].v_min = 1.2;
    let err = build_problem(&bad.model, &bad.costs, &bad.inputs, ScenarioKind::SI).unwrap_err();
    assert!(matches!(err, Error::InfeasibleBounds(_)));
}

#[test]
fn availability_capped_at_capacity() {
    let mut f = fixtures::hub_pair(0.0, 0.01, 40.0);
    f.inputs = f.inputs.with("W_H", 9000.0);
    let p = build(&f, ScenarioKind::SII);
    assert_eq!(p.available_mw(), &[4000.0]);
}

#[test]
fn two_bus_solution_is_feasible() {
    let f = fixtures::two_bus();
    for scenario in ScenarioKind::ALL {
        let p = build(&f, scenario);
        let out = solve(&p, &StartPoint::flat(&p), &SolverOptions::default());
        assert!(out.converged());
        let mut g = vec![0.0; p.num_eq()];
        p.eq_values(&out.x, &mut g);
        assert!(g.iter().all(|v| v.abs() < 1e-6));
        let mut h = vec![0.0; p.num_ineq()];
        p.ineq_values(&out.x, &mut h);
        assert!(h.iter().all(|&v| v < 1e-6));
        let d = extract_solution(&p, &out).unwrap();
        let z = d.zone("Z").unwrap();
        // isolated zone: net position is the branch loss
        assert!(d.total_losses > 0.0);
        assert!((z.p_n - d.total_losses).abs() < 1e-3, "{} vs {}", z.p_n, d.total_losses);
        assert!((d.gen_p[0] - 100.0 - d.total_losses).abs() < 1e-3);
    }
}

#[test]
fn isolated_lossless_zone_reports_beta() {
    let f = fixtures::lossless_star(1500.0);
    let (d, _) = run(&f, ScenarioKind::SII);
    let iso = d.zone("ISO").unwrap();
    assert_eq!(iso.p_n, 0.0);
    assert_eq!(iso.price, 52.5);
    assert!(d.curtailment.iter().all(|c| *c < 1e-3));
}

#[test]
fn prices_match_balance_duals() {
    let f = fixtures::lossless_star(1500.0);
    for scenario in [ScenarioKind::SII, ScenarioKind::SIII] {
        let (d, _) = run(&f, scenario);
        for z in d.zones.iter().filter(|z| f.costs.contains_key(&z.zone)) {
            let dual = z.balance_dual.unwrap();
            assert!((dual - z.price).abs() <= 1e-4 * z.price.abs().max(1.0), "{}: {dual} vs {}", z.zone, z.price);
        }
    }
}

#[test]
fn connected_prices_equilibrate_without_wind() {
    let f = fixtures::lossless_star(1500.0);
    let (d, _) = run(&f, ScenarioKind::SIII);
    let prices: Vec<f64> = ["X", "Y", "Z"].iter().map(|z| d.zone(z).unwrap().price).collect();
    for p in &prices {
        assert!((p - prices[0]).abs() < 0.01, "{prices:?}");
    }
    assert!(d.zone("H").unwrap().p_n.abs() < 1e-6);
}

#[test]
fn import_caps_force_curtailment() {
    let f = fixtures::hub_pair(3000.0, 0.05, 50.0);
    let (d, _) = run(&f, ScenarioKind::SII);
    assert!(d.curtailment[0] > 0.1, "{:?}", d.curtailment);
    for z in ["P", "Q"] {
        let o = d.zone(z).unwrap();
        assert!(o.p_n >= o.pn_min - 1e-6);
    }
}

#[test]
fn si_reports_input_prices() {
    let f = fixtures::negative_price_export();
    let (d, out) = run(&f, ScenarioKind::SI);
    assert_eq!(d.zone("N").unwrap().price, -10.0);
    assert_eq!(d.zone("P").unwrap().price, 40.0);
    assert!(d.zone("N").unwrap().balance_dual.is_none());
    assert!(out.iterations > 0);
    let best = d.dc_line_p_from.iter().chain(&d.dc_line_p_to).fold(0.0f64, |a, b| a.max(b.abs()));
    assert!(best >= 0.999 * 2000.0, "{:?} {:?}", d.dc_line_p_from, d.dc_line_p_to);
}

#[test]
fn non_converged_outcome_is_rejected() {
    let f = fixtures::two_bus();
    let p = build(&f, ScenarioKind::SI);
    let opts = SolverOptions { max_iter: 1, ..SolverOptions::default() };
    let out = solve(&p, &StartPoint::flat(&p), &opts);
    assert!(matches!(extract_solution(&p, &out), Err(Error::NotConverged(_))));
}

#[test]
fn converter_loss_tracks_magnitude() {
    let f = fixtures::hub_pair(3000.0, 0.05, 50.0);
    let (d, _) = run(&f, ScenarioKind::SII);
    let base = f.model.base_mva;
    for (k, c) in f.model.converters.iter().enumerate() {
        let p = d.converter_p_ac[k];
        let exact = c.loss_a + c.loss_b * p.abs() + c.loss_c * p * p;
        assert!(d.converter_loss[k] >= 0.0);
        assert!((d.converter_loss[k] - exact).abs() <= c.loss_b * LOSS_EPSILON * base + 1e-6, "{}", c.id);
    }
}

#[test]
fn step_limit_stops_at_loss_bend() {
    let f = fixtures::hub_pair(3000.0, 0.05, 50.0);
    let p = build(&f, ScenarioKind::SII);
    let k = p.layout().conv_p_ac.start;
    let mut x = p.initial_point();
    let mut dx = vec![0.0; x.len()];
    dx[k] = -3.0;
    x[k] = 1.0;
    assert!((p.step_limit(&x, &dx) - 1.0 / 3.0).abs() < 1e-15);
    x[k] = 0.5 * LOSS_EPSILON;
    assert_eq!(p.step_limit(&x, &dx), 1.0);
    x[k] = 4.0;
    assert_eq!(p.step_limit(&x, &dx), 1.0);
}

#[test]
fn reported_objective_excludes_reactive_regularization() {
    let f = fixtures::two_zone_link(0.01, 2000.0, (0.01, 30.0), (0.02, 60.0));
    let (d, _) = run(&f, ScenarioKind::SII);
    let cg: f64 = d.zones.iter().map(|z| z.cg).sum();
    assert!(d.gen_q.iter().any(|q| q.abs() > 100.0));
    assert!((d.objective - cg).abs() < 1e-6 * cg.abs(), "{} vs {cg}", d.objective);
}
