use proptest::prelude::*;
use rocketlite::pipeline::{load_corpus, prepare_split, quantize, train, RunConfig};
use rocketlite::signal::synth::SynthConfig;
use rocketlite::signal::{Recording, RecordingMeta, USAGE};
use rocketlite::sim::{
    battery_life, parse_scenario, render_scenario, simulate, write_trace_csv, EnergyProfile, EventKind,
    RenderSettings, ScenarioSegment, SimSettings, SimTrace, SECONDS_PER_YEAR,
};
use std::sync::OnceLock;

const SCENARIO: &str = r#"[
  {"t_start_s": 10, "t_end_s": 70, "activity": "drilling"},
  {"t_start_s": 80, "t_end_s": 120, "activity": "walking"},
  {"t_start_s": 130, "t_end_s": 200, "activity": "sawing"},
  {"t_start_s": 220, "t_end_s": 250, "activity": "driving"},
  {"t_start_s": 260, "t_end_s": 330, "activity": "grinding"}
]"#;

fn scenario_motion() -> &'static Recording {
    static REC: OnceLock<Recording> = OnceLock::new();
    REC.get_or_init(|| {
        let segments = parse_scenario(SCENARIO).unwrap();
        render_scenario(&segments, 360.0, &RenderSettings::default()).unwrap()
    })
}

fn scenario_trace() -> &'static SimTrace {
    static TRACE: OnceLock<SimTrace> = OnceLock::new();
    TRACE.get_or_init(|| {
        simulate(scenario_motion(), None, &EnergyProfile::default(), &SimSettings::default(), 360.0).unwrap()
    })
}

fn still(seconds: f64) -> Recording {
    let n = (seconds * 200.0) as usize;
    Recording {
        id: 0,
        samples: vec![vec![3.0; n], vec![-2.0; n], vec![998.0; n]],
        labels: vec![0; n],
        rate_hz: 200.0,
        meta: RecordingMeta {
            brand: "x".into(),
            family: "x".into(),
            activity: "rest".into(),
            source_rate_hz: 200.0,
        },
    }
}

#[test]
fn rendered_scenario_follows_segments() {
    let rec = scenario_motion();
    assert_eq!(rec.len(), 360 * 200);
    assert_eq!(rec.channels(), 3);
    assert_eq!(rec.labels[15 * 200], USAGE);
    assert_ne!(rec.labels[100 * 200], USAGE);
    assert_ne!(rec.labels[5 * 200], USAGE);
    let again = render_scenario(&parse_scenario(SCENARIO).unwrap(), 360.0, &RenderSettings::default()).unwrap();
    assert_eq!(&again, rec);
}

#[test]
fn energy_ledger_is_additive() {
    let t = scenario_trace();
    let events: f64 = t.events.iter().map(|e| e.energy_uj).sum();
    assert_eq!(t.event_energy_uj, events);
    assert_eq!(t.total_energy_uj, t.idle_energy_uj + t.event_energy_uj);
    assert_eq!(t.idle_energy_uj, 4.7 * 360.0);
    assert!(t.events.windows(2).all(|w| w[1].cum_uj >= w[0].cum_uj && w[1].t_s >= w[0].t_s));
    let p = EnergyProfile::default();
    let expected = t.idle_energy_uj
        + t.count(EventKind::Sample) as f64 * p.sample_event_uj
        + t.count(EventKind::Infer) as f64 * p.inference_event_uj
        + t.count(EventKind::Advertise) as f64 * p.advertisement_event_uj;
    assert!((t.total_energy_uj - expected).abs() < 1e-6);
}

#[test]
fn at_most_one_inference_per_period() {
    let t = scenario_trace();
    let infers: Vec<f64> = t.events.iter().filter(|e| e.kind == EventKind::Infer).map(|e| e.t_s).collect();
    assert!(!infers.is_empty());
    for (i, &a) in infers.iter().enumerate() {
        let in_window = infers[i..].iter().take_while(|&&b| b < a + 7.0).count();
        assert_eq!(in_window, 1, "two inferences within 7 s of {a}");
    }
}

#[test]
fn runtime_has_period_granularity() {
    let t = scenario_trace();
    let periods = t.runtime_s / 7.0;
    assert_eq!(periods, periods.round());
    for (tick, runtime) in &t.runtime_ledger {
        assert_eq!((tick / 7.0).fract(), 0.0);
        assert_eq!((runtime / 7.0).fract(), 0.0);
    }
    assert!(t.runtime_ledger.windows(2).all(|w| w[1].1 >= w[0].1));
    assert_eq!(t.runtime_ledger.len(), 51);
}

#[test]
fn wakes_cover_usage() {
    let rec = scenario_motion();
    let t = scenario_trace();
    let wakes: Vec<f64> = t.events.iter().filter(|e| e.kind == EventKind::Wake).map(|e| e.t_s).collect();
    let (mut usage, mut covered) = (0, 0);
    for s in 0..360 {
        if rec.labels[s * 200..(s + 1) * 200].iter().all(|&l| l == USAGE) {
            usage += 1;
            let mid = s as f64 + 0.5;
            if wakes.iter().any(|&w| w <= mid && mid < w + 7.0) {
                covered += 1;
            }
        }
    }
    assert_eq!(usage, 200);
    assert!(covered as f64 >= 0.95 * usage as f64, "{covered}/{usage}");
}

#[test]
fn classifying_device_tracks_runtime() {
    let config = RunConfig {
        train_count: 400,
        val_count: 40,
        test_limit: 10,
        synth: SynthConfig {
            session_duration_s: 90.0,
            ..SynthConfig::with_brands(&["A", "B"], 4)
        },
        ..RunConfig::default()
    };
    let corpus = load_corpus(&config, &[200.0]).unwrap().remove(0);
    let split = prepare_split(&config, &corpus).unwrap();
    let (mut bundle, _) = train(&config, &split).unwrap();
    quantize(&mut bundle, 16_000, 32).unwrap();
    let t = simulate(scenario_motion(), Some(&bundle), &EnergyProfile::default(), &SimSettings::default(), 360.0)
        .unwrap();
    assert!(t.runtime_s > 0.0);
    assert_eq!((t.runtime_s / 7.0).fract(), 0.0);
    assert!(t.runtime_s <= 7.0 * t.count(EventKind::Infer) as f64);
    let correct = t
        .classifications
        .iter()
        .filter(|c| c.class == Some(c.truth as usize))
        .count();
    let acc = correct as f64 / t.classifications.len() as f64;
    assert!(acc >= 0.8, "on-device accuracy {acc}");
    let infer = t.events.iter().find(|e| e.kind == EventKind::Infer).unwrap();
    assert!(matches!(infer.result.as_deref(), Some("usage" | "transport")));
}

#[test]
fn no_motion_day_stays_below_budget() {
    let day = 24.0 * 3600.0;
    let t = simulate(&still(day), None, &EnergyProfile::default(), &SimSettings::default(), day).unwrap();
    assert_eq!(t.count(EventKind::Wake), 0);
    let ticks = (day / 7.0).floor();
    assert_eq!(t.count(EventKind::Advertise) as f64, ticks);
    let expected = (4.7 * day + 67.0 * ticks) / day;
    assert!((t.average_power_uw - expected).abs() < 1e-9);
    assert!((t.average_power_uw - (4.7 + 67.0 / 7.0)).abs() < 0.01);
    assert!(t.average_power_uw < 15.0);
}

#[test]
fn trace_csv_has_one_row_per_event() {
    let mut buf = Vec::new();
    write_trace_csv(scenario_trace(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), scenario_trace().events.len() + 1);
    let last = text.lines().last().unwrap();
    let cum: f64 = last.split(',').nth(3).unwrap().parse().unwrap();
    assert!((cum - scenario_trace().events.last().unwrap().cum_uj).abs() < 1e-3);
}

#[test]
fn battery_anchor_values() {
    let p = EnergyProfile::default();
    let zero = battery_life(&p, 225.0, 0.0).unwrap();
    let closed_form = (0.225 * 3.0 * 3600.0 * 0.8) / (p.baseline_power_uw() * 1e-6 * SECONDS_PER_YEAR);
    assert!((zero.years - closed_form).abs() < 1e-12);
    assert!((zero.years - 4.3).abs() < 0.1);
    assert!(battery_life(&p, 225.0, 1500.0).unwrap().years >= 3.0);
    assert!(battery_life(&p, 225.0, 250.0).unwrap().years >= 4.0);
    let big = battery_life(&p, 500.0, 0.0).unwrap().years;
    assert!((8.0..=10.0).contains(&big), "{big}");
}

#[test]
fn invalid_inputs_rejected() {
    let p = EnergyProfile::default();
    let bad = EnergyProfile {
        battery_efficiency: 1.5,
        ..p.clone()
    };
    assert!(battery_life(&bad, 225.0, 0.0).is_err());
    assert!(battery_life(&p, 225.0, -1.0).is_err());
    assert!(simulate(&still(10.0), None, &p, &SimSettings::default(), 0.0).is_err());
    let seg = vec![ScenarioSegment {
        t_start_s: 0.0,
        t_end_s: 5.0,
        activity: "juggling".into(),
    }];
    assert!(render_scenario(&seg, 10.0, &RenderSettings::default()).is_err());
}

proptest! {
    #[test]
    fn battery_monotone(
        capacity in 50.0f64..1000.0,
        extra_capacity in 1.0f64..500.0,
        hours in 0.0f64..2000.0,
        extra_hours in 1.0f64..500.0,
    ) {
        let p = EnergyProfile::default();
        let base = battery_life(&p, capacity, hours).unwrap();
        let more_use = battery_life(&p, capacity, hours + extra_hours).unwrap();
        let bigger = battery_life(&p, capacity + extra_capacity, hours).unwrap();
        // strict while the usage hours fit inside the lifetime
        if more_use.years * SECONDS_PER_YEAR > (hours + extra_hours) * 3600.0 {
            prop_assert!(more_use.years < base.years);
        } else {
            prop_assert!(more_use.years <= base.years);
        }
        prop_assert!(bigger.years > base.years);
        prop_assert!(more_use.years_if_hours_recur_yearly < base.years_if_hours_recur_yearly);
    }

    #[test]
    fn idle_energy_is_exact(seconds in 10.0f64..400.0) {
        let n = (seconds.ceil() as usize) * 200;
        let mut rec = still(n as f64 / 200.0);
        rec.labels.truncate(n);
        let t = simulate(&rec, None, &EnergyProfile::default(), &SimSettings::default(), seconds).unwrap();
        let ticks = (seconds / 7.0).floor();
        prop_assert_eq!(t.count(EventKind::Advertise) as f64, ticks);
        prop_assert!((t.total_energy_uj - (4.7 * seconds + 67.0 * ticks)).abs() < 1e-6);
    }
}
