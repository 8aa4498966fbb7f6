use super::*;
use crate::fixtures;

fn wavy(t: i64, id: &str, v: f64) -> f64 {
    let phase = if id.starts_with('W') { 0.7 } else { 0.0 };
    v * (1.0 + 0.05 * ((t as f64) * 0.9 + phase).sin())
}

#[test]
fn single_step_two_bus() {
    let inputs = fixtures::two_bus().run_inputs(0..1);
    let s = run_loaded(&inputs, 0..1, &RunOptions::new(ScenarioKind::SI)).unwrap();
    assert_eq!(s.steps.len(), 1);
    assert!(s.steps[0].converged());
    assert!(!s.steps[0].warm_started);
    assert_eq!(s.indicators.converged, 1);
    assert_eq!(s.elements.zones, vec!["Z".to_string()]);
    assert_eq!(s.price_series(0), vec![(0, Some(40.0))]);
}

#[test]
fn later_steps_are_warm_started() {
    let inputs = fixtures::hub_pair(1200.0, 0.01, 40.0).run_inputs_with(10..15, wavy);
    let s = run_loaded(&inputs, 10..15, &RunOptions::new(ScenarioKind::SII)).unwrap();
    assert_eq!(s.steps.iter().map(|r| r.timestep).collect::<Vec<_>>(), vec![10, 11, 12, 13, 14]);
    assert!(s.steps.iter().all(TimestepResult::converged));
    assert!(s.steps[1..].iter().all(|r| r.warm_started));
}

#[test]
fn excess_wind_is_curtailed_and_pins_imports() {
    let inputs = fixtures::hub_pair(3000.0, 0.05, 50.0).run_inputs_with(0..4, wavy);
    let s = run_loaded(&inputs, 0..4, &RunOptions::new(ScenarioKind::SII)).unwrap();
    assert!(s.steps.iter().all(TimestepResult::converged));
    assert!(s.indicators.curtailed_energy_mwh > 0.0);
    assert!(s.curtailment_percent(0).iter().all(|(_, c)| c.unwrap() > 0.0));
    for z in ["P", "Q"] {
        assert_eq!(s.indicators.pn_bound_binding[z].at_min, 4, "{:?}", s.indicators.pn_bound_binding);
        assert_eq!(s.indicators.pn_bound_binding[z].at_max, 0);
    }
}

#[test]
fn no_curtailment_with_import_headroom() {
    let inputs = fixtures::hub_pair(1000.0, 0.002, 40.0).run_inputs(0..2);
    let s = run_loaded(&inputs, 0..2, &RunOptions::new(ScenarioKind::SII)).unwrap();
    for (_, c) in s.curtailment_percent(0) {
        assert!(c.unwrap() < 0.1);
    }
    assert!(s.indicators.curtailment["wind_H"].max_pu < 1e-3);
}

#[test]
fn disconnected_zone_keeps_its_beta() {
    let inputs = fixtures::lossless_star(1500.0).run_inputs_with(0..3, wavy);
    let s = run_loaded(&inputs, 0..3, &RunOptions::new(ScenarioKind::SIII)).unwrap();
    let k = s.elements.zones.iter().position(|z| z == "ISO").unwrap();
    for (_, p) in s.price_series(k) {
        assert!((p.unwrap() - 52.5).abs() < 1e-4);
    }
}

#[test]
fn siii_matches_sii_on_calm_inputs() {
    let f = fixtures::hub_pair(2500.0, 0.01, 40.0);
    let windy = f.run_inputs_with(0..4, wavy);
    let calm = f.run_inputs_with(0..4, |t, id, v| if id.starts_with('W') { 0.0 } else { wavy(t, id, v) });
    let a = run_loaded(&windy, 0..4, &RunOptions::new(ScenarioKind::SIII)).unwrap();
    let b = run_loaded(&calm, 0..4, &RunOptions::new(ScenarioKind::SII)).unwrap();
    for (x, y) in a.steps.iter().zip(&b.steps) {
        assert!(x.converged());
        assert_eq!(x.dispatch, y.dispatch);
        assert_eq!(x.iterations, y.iterations);
    }
}

#[test]
fn chunks_preserve_order_and_results() {
    let inputs = fixtures::hub_pair(1500.0, 0.01, 40.0).run_inputs_with(0..6, wavy);
    let seq = run_loaded(&inputs, 0..6, &RunOptions::new(ScenarioKind::SII)).unwrap();
    let opts = RunOptions { chunks: 3, ..RunOptions::new(ScenarioKind::SII) };
    let par = run_loaded(&inputs, 0..6, &opts).unwrap();
    assert_eq!(par.steps.len(), 6);
    let warm: Vec<bool> = par.steps.iter().map(|r| r.warm_started).collect();
    assert_eq!(warm, vec![false, true, false, true, false, true]);
    for (a, b) in seq.steps.iter().zip(&par.steps) {
        assert_eq!(a.timestep, b.timestep);
        let (da, db) = (a.dispatch.as_ref().unwrap(), b.dispatch.as_ref().unwrap());
        for (za, zb) in da.zones.iter().zip(&db.zones) {
            assert!((za.price - zb.price).abs() < 1e-3);
        }
    }
    let again = run_loaded(&inputs, 0..6, &opts).unwrap();
    for (a, b) in par.steps.iter().zip(&again.steps) {
        assert_eq!(a.dispatch, b.dispatch);
    }
}

#[test]
fn failed_steps_are_recorded() {
    let inputs = fixtures::two_bus().run_inputs(0..3);
    let mut opts = RunOptions::new(ScenarioKind::SII);
    opts.solver.max_iter = 1;
    let s = run_loaded(&inputs, 0..3, &opts).unwrap();
    assert_eq!(s.steps.len(), 3);
    for r in &s.steps {
        assert_eq!(r.status, StepStatus::IterationLimit);
        assert!(r.dispatch.is_none());
        assert!(!r.warm_started);
    }
    assert_eq!(s.indicators.failed, 3);
    assert!(matches!(compute_indicators(&inputs.model, ScenarioKind::SII, &s.steps), Err(Error::EmptyRun)));
}

#[test]
fn zero_curtailment_series_when_no_wind_is_lost() {
    let inputs = fixtures::lossless_star(500.0).run_inputs(0..2);
    let s = run_loaded(&inputs, 0..2, &RunOptions::new(ScenarioKind::SII)).unwrap();
    for (_, c) in s.curtailment_percent(0) {
        assert!(c.unwrap() < 1e-3);
    }
}

#[test]
fn missing_data_aborts_before_solving() {
    let inputs = fixtures::two_bus().run_inputs(0..2);
    let err = run_loaded(&inputs, 0..3, &RunOptions::new(ScenarioKind::SI)).unwrap_err();
    assert!(matches!(err, Error::MissingProfile { timestep: 2, .. }));
    let mut no_curves = inputs.clone();
    no_curves.curves = CurveArchive::new();
    let err = run_loaded(&no_curves, 0..2, &RunOptions::new(ScenarioKind::SI)).unwrap_err();
    assert!(matches!(err, Error::MissingCurves { .. }));
    assert!(matches!(run_loaded(&inputs, 1..1, &RunOptions::new(ScenarioKind::SI)), Err(Error::Config(_))));
}

#[test]
fn binding_tolerance() {
    assert!(binding(-2499.0, -2500.0));
    assert!(!binding(-2490.0, -2500.0));
    assert!(binding(0.0005, 0.0));
    assert!(!binding(0.01, 0.0));
}

#[test]
fn config_validation() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x");
    std::fs::write(&p, "").unwrap();
    let ok = RunConfig::new(ScenarioKind::SII, 0..2, &p, &p, &p);
    assert!(ok.validate().is_ok());
    let bad = RunConfig::new(ScenarioKind::SII, std::ops::Range { start: 3, end: 2 }, &p, &p, &p);
    assert!(matches!(bad.validate(), Err(Error::Config(_))));
    let missing = RunConfig::new(ScenarioKind::SII, 0..2, dir.path().join("nope"), &p, &p);
    assert!(matches!(missing.validate(), Err(Error::Config(_))));
    let zero = RunConfig { chunks: 0, ..ok };
    assert!(zero.validate().is_err());
}
