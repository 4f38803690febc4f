use pvrfid_core::ic_load::{MeasurementSchedule, Mode};
use pvrfid_core::presets;
use pvrfid_core::simulator::{self, LightProfile, Scenario, TraceRecord};
use pvrfid_core::sizing::{self, AvailabilityMetric, Objective, SizingError, SizingRequest};
use pvrfid_core::storage::{self, CapacitorModel, Leak};
use pvrfid_core::IcProfile;

fn net_flow_residual(s: &Scenario, trace: &[TraceRecord]) -> f64 {
    let c = s.cap.capacitance;
    let de =
        storage::stored_energy(c, trace.last().unwrap().v) - storage::stored_energy(c, trace[0].v);
    let (mut net, mut gross) = (0.0, 0.0);
    for r in &trace[..trace.len() - 1] {
        net += (r.p_in - r.p_load - r.p_leak) * s.dt;
        gross += (r.p_in.abs() + r.p_load.abs() + r.p_leak.abs()) * s.dt;
    }
    (de - net).abs() / gross.max(f64::MIN_POSITIVE)
}

fn scenarios() -> Vec<Scenario> {
    let base = presets::charge_scenario(7200.0);
    let mut out = vec![base.with_light_pulse(2700.0).unwrap()];
    let mut strong = base.with_light_pulse(7200.0).unwrap();
    strong.photocurrent_scale *= 10.0;
    out.push(strong);
    let mut drain = base.clone();
    drain.initial_v = 3.0;
    drain.cap = CapacitorModel::new(0.05, 3.0, Leak::ConstantCurrent(40e-6)).unwrap();
    out.push(drain);
    let mut windowed = base.with_light_pulse(600.0).unwrap();
    windowed.schedule = MeasurementSchedule {
        rate_per_hour: 100_000.0,
        active_window: Some((1000.0, 4000.0)),
    };
    out.push(windowed);
    out
}

#[test]
fn energy_is_conserved_over_whole_runs() {
    for s in scenarios() {
        let trace = simulator::simulate(&s).unwrap();
        let r = net_flow_residual(&s, &trace);
        assert!(r <= 1e-4, "residual {r}");
    }
}

#[test]
fn trace_respects_bounds_and_modes() {
    for s in scenarios() {
        let trace = simulator::simulate(&s).unwrap();
        assert_eq!(trace.len(), s.steps() + 1);
        assert_eq!(trace[0].v, s.initial_v);
        let mut count = 0;
        for (i, r) in trace.iter().enumerate() {
            assert_eq!(r.t, i as f64 * s.dt);
            assert!((0.0..=s.cap.v_max).contains(&r.v));
            assert!(r.p_in >= 0.0 && r.p_load >= 0.0 && r.p_leak >= 0.0, "{r:?}");
            assert!(r.measurement_count >= count);
            count = r.measurement_count;
            match r.mode {
                Mode::Off => assert!(r.v < s.ic.v_threshold),
                Mode::Sleep => assert!(!s.schedule.is_active(r.t)),
                Mode::Ready | Mode::Measure => assert!(r.v >= s.ic.v_threshold),
            }
        }
    }
}

#[test]
fn identical_inputs_give_identical_traces() {
    let s = &scenarios()[0];
    let a = simulator::simulate(s).unwrap();
    let b = simulator::simulate(s).unwrap();
    assert_eq!(a, b);
    assert_eq!(simulator::trace_to_csv(&a), simulator::trace_to_csv(&b));
}

#[test]
fn halving_dt_moves_crossings_less_than_one_percent() {
    let coarse = presets::charge_scenario(3000.0)
        .with_light_pulse(3000.0)
        .unwrap();
    let fine = Scenario {
        dt: 0.5,
        ..coarse.clone()
    };
    let tc = simulator::simulate(&coarse).unwrap();
    let tf = simulator::simulate(&fine).unwrap();
    for v in [0.3, 1.0, 1.5, 2.5, 2.9] {
        let a = simulator::time_to_voltage(&tc, v).unwrap();
        let b = simulator::time_to_voltage(&tf, v).unwrap();
        assert!((a - b).abs() / b < 0.01, "v = {v}: {a} vs {b}");
    }
}

#[test]
fn dark_discharge_follows_rc_decay() {
    let mut s = presets::charge_scenario(10_000.0);
    s.ic = s.ic.unloaded();
    s.initial_v = 3.0;
    s.dt = 0.5;
    let trace = simulator::simulate(&s).unwrap();
    let tau = presets::leak_resistance() * presets::CAPACITANCE;
    for r in trace.iter().step_by(2000) {
        let exact = 3.0 * (-r.t / tau).exp();
        assert!((r.v - exact).abs() / exact < 2e-3, "t = {}", r.t);
    }
}

#[test]
fn no_light_no_charge() {
    let s = presets::charge_scenario(3600.0);
    let trace = simulator::simulate(&s).unwrap();
    assert!(trace.iter().all(|r| r.v == 0.0 && r.mode == Mode::Off));
    assert_eq!(simulator::on_time_experiment(&s, 0.0).unwrap(), 0.0);
}

#[test]
fn lossless_idle_node_stays_on_after_charging() {
    let mut s = presets::charge_scenario(3600.0);
    s.ic = s.ic.unloaded();
    s.cap = CapacitorModel::new(1.0, 3.0, Leak::None).unwrap();
    let lit = s.with_light_pulse(1800.0).unwrap();
    let trace = simulator::simulate(&lit).unwrap();
    let t_on = simulator::time_to_voltage(&trace, lit.ic.v_threshold).unwrap();
    let on = simulator::on_time_experiment(&s, 1800.0).unwrap();
    assert!((on - (3600.0 - t_on)).abs() < 1e-9);
}

#[test]
fn on_time_grows_with_light_duration() {
    let s = presets::charge_scenario(6.0 * 3600.0);
    let mut prev = 0.0;
    for minutes in [5.0, 15.0, 30.0, 45.0] {
        let on = simulator::on_time_experiment(&s, minutes * 60.0).unwrap();
        assert!(on >= prev);
        prev = on;
    }
}

fn persistence_template() -> Scenario {
    let mut s = presets::charge_scenario(86_400.0);
    s.schedule = MeasurementSchedule::continuous(0.0);
    s.initial_v = 3.0;
    s.dt = 60.0;
    s
}

#[test]
fn persistence_surface_is_monotone_and_bounded() {
    let caps = [1e-6, 1e-3, 1.0, 100.0];
    let leaks = [0.0, 10e-6, 20e-6, 40e-6];
    let table = sizing::persistence_sweep(&caps, &leaks, &persistence_template()).unwrap();
    for metric in [
        AvailabilityMetric::EnergyBalance,
        AvailabilityMetric::TraceFraction,
    ] {
        let v = table.values(metric);
        assert_eq!(v[2][0], 1.0);
        for row in &v {
            assert!(row.iter().all(|x| (0.0..=1.0).contains(x)));
            assert!(row.windows(2).all(|w| w[1] <= w[0]));
        }
        for pair in v.windows(2) {
            assert!(pair[0].iter().zip(&pair[1]).all(|(lo, hi)| hi >= lo));
        }
    }
    let csv = table.to_csv(AvailabilityMetric::EnergyBalance);
    assert!(csv.starts_with("capacitance_F,leak_0uA,leak_10uA,leak_20uA,leak_40uA\n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn persistence_sweep_is_order_independent() {
    let template = persistence_template();
    let a = sizing::persistence_sweep(&[1e-3, 1.0], &[0.0, 20e-6], &template).unwrap();
    let b = sizing::persistence_sweep(&[1e-3, 1.0], &[0.0, 20e-6], &template).unwrap();
    assert_eq!(a, b);
}

fn exhaustive(req: &SizingRequest) -> Option<(f64, f64)> {
    let key = |a: f64, c: f64| match req.objective {
        Objective::Lexicographic => (a, c),
        Objective::Weighted {
            cost_per_cm2,
            cost_per_farad,
        } => (a * cost_per_cm2 + c * cost_per_farad, 0.0),
    };
    let mut best: Option<(f64, f64)> = None;
    for &c in &req.cap_grid {
        for &a in &req.area_grid {
            if req.evaluate(a, c).unwrap() >= req.target_availability
                && best.is_none_or(|(ba, bc)| key(a, c) < key(ba, bc))
            {
                best = Some((a, c));
            }
        }
    }
    best
}

fn base_request() -> SizingRequest {
    SizingRequest {
        target_availability: 0.9,
        light: LightProfile::constant(0.0, 6.0 * 3600.0, 0.01).unwrap(),
        schedule: MeasurementSchedule::continuous(20_000.0),
        ic: IcProfile::default(),
        area_grid: vec![0.01, 0.05, 0.2, 1.06],
        cap_grid: vec![1e-3, 0.1, 1.0, 10.0],
        leak: Leak::ConstantCurrent(5e-6),
        base_cell: presets::pv_module(),
        photocurrent_scale: 1.0,
        v_max: 3.0,
        initial_v: 0.0,
        dt: 120.0,
        metric: AvailabilityMetric::EnergyBalance,
        objective: Objective::Lexicographic,
    }
}

#[test]
fn size_system_matches_exhaustive_search() {
    let grids = [
        (vec![0.01, 0.05, 0.2, 1.06], vec![1e-3, 0.1, 1.0, 10.0]),
        (vec![0.001, 0.003, 0.01, 0.03], vec![0.01, 0.3, 3.0, 30.0]),
        (vec![0.1, 0.5, 2.0, 5.0], vec![1e-6, 1e-4, 1e-2, 1.0]),
    ];
    let mut feasible = 0;
    let mut distinct = std::collections::BTreeSet::new();
    for (areas, caps) in &grids {
        for metric in [
            AvailabilityMetric::EnergyBalance,
            AvailabilityMetric::TraceFraction,
        ] {
            for objective in [
                Objective::Lexicographic,
                Objective::Weighted {
                    cost_per_cm2: 1.0,
                    cost_per_farad: 0.05,
                },
            ] {
                for (target, initial_v) in [(0.9, 0.0), (1.0, 3.0), (0.3, 1.0)] {
                    let req = SizingRequest {
                        area_grid: areas.clone(),
                        cap_grid: caps.clone(),
                        metric,
                        objective,
                        target_availability: target,
                        initial_v,
                        ..base_request()
                    };
                    let fast = match sizing::size_system(&req) {
                        Ok(r) => {
                            assert!(r.availability >= target);
                            Some((r.area_cm2, r.capacitance))
                        }
                        Err(SizingError::Infeasible { .. }) => None,
                        Err(e) => panic!("{e}"),
                    };
                    assert_eq!(fast, exhaustive(&req), "{req:?}");
                    if let Some((a, c)) = fast {
                        feasible += 1;
                        distinct.insert((a.to_bits(), c.to_bits()));
                    }
                }
            }
        }
    }
    // The cases exercise more than one corner of the grids.
    assert!(feasible > 10);
    assert!(distinct.len() > 3);
}

#[test]
fn dark_sizing_without_stored_charge_is_infeasible() {
    let req = SizingRequest {
        light: LightProfile::dark(),
        ..base_request()
    };
    assert!(matches!(
        sizing::size_system(&req),
        Err(SizingError::Infeasible { .. })
    ));
}
