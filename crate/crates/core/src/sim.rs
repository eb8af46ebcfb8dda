//! Duty-cycled device simulation: motion wake-up, window acquisition,
//! inference, advertisement ticks, and the resulting energy and battery
//! estimates.
//!
//! The device sleeps until its accelerometer's motion detector fires. It then
//! records one window, classifies it and keeps the result until the next
//! advertisement tick, which broadcasts it. Wake-ups are suppressed for one
//! advertisement period after each wake, so at most one inference happens
//! per period.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::ModelBundle;
use crate::quant::{predict_q, transform_q};
use crate::ridge::predict_float;
use crate::signal::synth::{is_usage_activity, ActivityRenderer, REST_ACTIVITY};
use crate::signal::{class_name, resample, Recording, RecordingMeta, USAGE};
use crate::transform::Window;

/// Seconds in a Julian year.
pub const SECONDS_PER_YEAR: f64 = 3.15576e7;
pub const DEFAULT_MOTION_THRESHOLD_MG: f32 = 64.0;
/// Rate of the accelerometer's low-power motion detector.
pub const MOTION_GATE_RATE_HZ: f64 = 12.5;

/// Energy costs of the device. Powers in µW, energies in µJ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyProfile {
    pub idle_power_uw: f64,
    /// One window acquisition.
    pub sample_event_uj: f64,
    pub inference_event_uj: f64,
    pub advertisement_event_uj: f64,
    pub advertisement_period_s: f64,
    /// Usable fraction of nominal capacity, self-discharge included.
    pub battery_efficiency: f64,
    pub battery_voltage: f64,
}

impl Default for EnergyProfile {
    fn default() -> Self {
        Self {
            idle_power_uw: 4.7,
            sample_event_uj: 630.0,
            inference_event_uj: 72.0,
            advertisement_event_uj: 67.0,
            advertisement_period_s: 7.0,
            battery_efficiency: 0.8,
            battery_voltage: 3.0,
        }
    }
}

impl EnergyProfile {
    pub fn validate(&self) -> Result<()> {
        let values = [
            self.idle_power_uw,
            self.sample_event_uj,
            self.inference_event_uj,
            self.advertisement_event_uj,
            self.advertisement_period_s,
            self.battery_voltage,
        ];
        if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Config("energy profile values must be positive".into()));
        }
        if !(self.battery_efficiency > 0.0 && self.battery_efficiency <= 1.0) {
            return Err(Error::Config("battery efficiency must be in (0, 1]".into()));
        }
        Ok(())
    }

    /// Average power with no motion at all: idle plus advertising.
    pub fn baseline_power_uw(&self) -> f64 {
        self.idle_power_uw + self.advertisement_event_uj / self.advertisement_period_s
    }

    /// Energy of one acquisition plus inference.
    pub fn usage_event_uj(&self) -> f64 {
        self.sample_event_uj + self.inference_event_uj
    }
}

/// One scenario entry; gaps between entries are spent at rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSegment {
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub activity: String,
}

/// Parses a scenario JSON list and checks that segments are ordered,
/// non-overlapping and name known activities.
pub fn parse_scenario(json: &str) -> Result<Vec<ScenarioSegment>> {
    let segments: Vec<ScenarioSegment> =
        serde_json::from_str(json).map_err(|e| Error::Scenario(e.to_string()))?;
    validate_scenario(&segments)?;
    Ok(segments)
}

pub fn validate_scenario(segments: &[ScenarioSegment]) -> Result<()> {
    let mut last_end = 0.0;
    for (i, s) in segments.iter().enumerate() {
        if !s.t_start_s.is_finite() || !s.t_end_s.is_finite() || s.t_start_s < 0.0 || s.t_end_s <= s.t_start_s {
            return Err(Error::Scenario(format!("segment {i}: bad time span")));
        }
        if s.t_start_s < last_end {
            return Err(Error::Scenario(format!("segment {i}: overlaps the previous segment")));
        }
        if s.t_end_s > 1e7 {
            return Err(Error::Scenario(format!("segment {i}: too long")));
        }
        if s.activity != REST_ACTIVITY && is_usage_activity(&s.activity).is_none() {
            return Err(Error::Scenario(format!("segment {i}: unknown activity {:?}", s.activity)));
        }
        last_end = s.t_end_s;
    }
    Ok(())
}

/// Signal synthesis settings for scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderSettings {
    /// Rate at which motion is synthesized before anti-aliased resampling.
    pub source_rate_hz: f64,
    /// Output rate, the rate the model runs at.
    pub rate_hz: f64,
    pub seed: u64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            source_rate_hz: 3200.0,
            rate_hz: 200.0,
            seed: 0,
        }
    }
}

/// Longest stretch synthesized at the source rate in one piece.
const RENDER_CHUNK_S: f64 = 30.0;

/// Synthesizes a tri-axial labeled recording for a scenario over
/// `[0, duration_s)`. Motion is generated at the source rate and resampled in
/// chunks; rest periods are generated at the output rate directly.
pub fn render_scenario(segments: &[ScenarioSegment], duration_s: f64, settings: &RenderSettings) -> Result<Recording> {
    validate_scenario(segments)?;
    if !(duration_s > 0.0) || duration_s > 1e7 {
        return Err(Error::Scenario("duration must be positive".into()));
    }
    let out_rate = settings.rate_hz;
    let total = (duration_s * out_rate).round() as usize;
    let mut source = ActivityRenderer::new(settings.source_rate_hz, settings.seed);
    let mut rest = ActivityRenderer::new(out_rate, settings.seed ^ 0x5eed);
    let mut axes = (0..3).map(|_| Vec::with_capacity(total)).collect::<Vec<_>>();
    let mut labels = Vec::with_capacity(total);
    let to_index = |t: f64| ((t * out_rate).round() as usize).min(total);

    let mut spans = Vec::new();
    let mut cursor = 0;
    for s in segments {
        let (a, b) = (to_index(s.t_start_s), to_index(s.t_end_s));
        if a > cursor {
            spans.push((REST_ACTIVITY, cursor, a));
        }
        if b > a {
            spans.push((s.activity.as_str(), a, b));
        }
        cursor = cursor.max(b);
    }
    if cursor < total {
        spans.push((REST_ACTIVITY, cursor, total));
    }

    for (activity, a, b) in spans {
        if activity == REST_ACTIVITY {
            let label = rest.render(activity, b - a, &mut axes).unwrap_or_default();
            labels.extend(std::iter::repeat_n(label, b - a));
            continue;
        }
        let chunk = ((RENDER_CHUNK_S * out_rate) as usize).max(1);
        let mut start = a;
        while start < b {
            let n = chunk.min(b - start);
            let source_n = (n as f64 * settings.source_rate_hz / out_rate).round() as usize;
            let mut piece = (0..3).map(|_| Vec::with_capacity(source_n)).collect::<Vec<_>>();
            let label = source
                .render(activity, source_n, &mut piece)
                .ok_or_else(|| Error::Scenario(format!("unknown activity {activity}")))?;
            let rec = Recording {
                id: 0,
                labels: vec![label; source_n],
                samples: piece,
                rate_hz: settings.source_rate_hz,
                meta: scenario_meta(settings.source_rate_hz),
            };
            let down = resample(&rec, out_rate)?;
            for (axis, resampled) in axes.iter_mut().zip(&down.samples) {
                let mut v = resampled.clone();
                v.resize(n, *resampled.last().unwrap_or(&0.0));
                axis.extend(v);
            }
            labels.extend(std::iter::repeat_n(label, n));
            start += n;
        }
    }
    Ok(Recording {
        id: 0,
        samples: axes,
        labels,
        rate_hz: out_rate,
        meta: scenario_meta(out_rate),
    })
}

fn scenario_meta(rate: f64) -> RecordingMeta {
    RecordingMeta {
        brand: "scenario".into(),
        family: "scenario".into(),
        activity: "mixed".into(),
        source_rate_hz: rate,
    }
}

/// Point-subsamples a recording to the motion detector rate, without
/// anti-aliasing, as a low-power accelerometer does.
pub fn gate_stream(recording: &Recording, gate_rate_hz: f64) -> Vec<Vec<f32>> {
    let step = recording.rate_hz / gate_rate_hz;
    let n = (recording.len() as f64 / step).floor() as usize;
    recording
        .samples
        .iter()
        .map(|axis| (0..n).map(|k| axis[((k as f64 * step).round() as usize).min(axis.len() - 1)]).collect())
        .collect()
}

/// Wake times (seconds) from a motion detector stream: a wake fires when any
/// axis changes by more than `threshold_mg` between consecutive samples, and
/// further wakes are suppressed for `hysteresis_s` after each wake.
pub fn motion_gate(samples: &[Vec<f32>], rate_hz: f64, threshold_mg: f32, hysteresis_s: f64) -> Vec<f64> {
    let n = samples.iter().map(Vec::len).min().unwrap_or(0);
    let mut wakes = Vec::new();
    let mut armed_at = 0.0f64;
    for i in 1..n {
        let t = i as f64 / rate_hz;
        if t < armed_at {
            continue;
        }
        if samples.iter().any(|axis| (axis[i] - axis[i - 1]).abs() > threshold_mg) {
            wakes.push(t);
            armed_at = t + hysteresis_s;
        }
    }
    wakes
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Wake,
    Sample,
    Infer,
    Sleep,
    Advertise,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Wake => "wake",
            EventKind::Sample => "sample",
            EventKind::Infer => "infer",
            EventKind::Sleep => "sleep",
            EventKind::Advertise => "advertise",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEvent {
    pub t_s: f64,
    pub kind: EventKind,
    pub energy_uj: f64,
    /// Idle energy up to `t_s` plus all event energies so far.
    pub cum_uj: f64,
    /// Class name: the inferred class for `infer`, the broadcast result for
    /// `advertise`.
    pub result: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub t_s: f64,
    pub class: Option<usize>,
    /// Majority label of the acquired window.
    pub truth: u16,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub motion_threshold_mg: f32,
    pub gate_rate_hz: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            motion_threshold_mg: DEFAULT_MOTION_THRESHOLD_MG,
            gate_rate_hz: MOTION_GATE_RATE_HZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTrace {
    pub duration_s: f64,
    pub events: Vec<SimEvent>,
    pub classifications: Vec<Classification>,
    pub idle_energy_uj: f64,
    pub event_energy_uj: f64,
    pub total_energy_uj: f64,
    pub average_power_uw: f64,
    /// Usage time estimated from broadcast results, a multiple of the
    /// advertisement period.
    pub runtime_s: f64,
    /// `(tick time, cumulative runtime)` at every advertisement tick.
    pub runtime_ledger: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

impl SimTrace {
    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

fn classify(bundle: &ModelBundle, window: &Window) -> Result<usize> {
    let window = if bundle.kernels.channels() == 1 && window.channels() == 3 {
        let fused = (0..window.len())
            .map(|n| window.samples.iter().map(|c| c[n].abs()).sum())
            .collect();
        Window::univariate(fused, window.sample_rate)
    } else {
        window.clone()
    };
    match &bundle.quantized {
        Some(q) => {
            let counts = transform_q(&window, q)?;
            Ok(predict_q(counts.as_counts().unwrap_or_default(), q)?.class)
        }
        None => {
            let features = bundle.kernels.transform(&window)?;
            Ok(predict_float(features.as_ppv().unwrap_or_default(), &bundle.classifier)?.class)
        }
    }
}

/// Runs the device over `motion` (tri-axial, at the model rate) for
/// `duration_s` seconds. Without a bundle, windows are acquired and the
/// inference energy is spent but no class is produced.
pub fn simulate(
    motion: &Recording,
    bundle: Option<&ModelBundle>,
    profile: &EnergyProfile,
    settings: &SimSettings,
    duration_s: f64,
) -> Result<SimTrace> {
    profile.validate()?;
    motion.validate()?;
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(Error::Scenario("duration must be positive".into()));
    }
    if motion.channels() != 3 {
        return Err(Error::ExpectedTriAxial(motion.channels()));
    }
    let window_len = bundle.map_or(80, |b| b.kernels.window_length());
    let period = profile.advertisement_period_s;
    let gate = gate_stream(motion, settings.gate_rate_hz);
    let wakes = motion_gate(&gate, settings.gate_rate_hz, settings.motion_threshold_mg, period);

    // (time, order within the same instant, kind, energy, result)
    let mut raw: Vec<(f64, u8, EventKind, f64, Option<String>)> = Vec::new();
    let mut classifications = Vec::new();
    let mut warnings = Vec::new();
    for &t in wakes.iter().filter(|&&t| t < duration_s) {
        let start = (t * motion.rate_hz).round() as usize;
        let end = start + window_len;
        let window_end_s = end as f64 / motion.rate_hz;
        if end > motion.len() || window_end_s > duration_s {
            warnings.push(format!("wake at {t:.3} s: not enough signal for a window, dropped"));
            continue;
        }
        let window = Window::new(motion.samples.iter().map(|c| c[start..end].to_vec()).collect(), motion.rate_hz as f32);
        let class = bundle.map(|b| classify(b, &window)).transpose()?;
        let usage = motion.labels[start..end].iter().filter(|&&l| l == USAGE).count();
        let truth = if 2 * usage > window_len { USAGE } else { 1 - USAGE };
        let name = class.map(|c| class_label(bundle, c));
        raw.push((t, 0, EventKind::Wake, 0.0, None));
        raw.push((window_end_s, 1, EventKind::Sample, profile.sample_event_uj, None));
        raw.push((window_end_s, 2, EventKind::Infer, profile.inference_event_uj, name.clone()));
        raw.push((window_end_s, 3, EventKind::Sleep, 0.0, None));
        classifications.push(Classification {
            t_s: window_end_s,
            class,
            truth,
        });
    }
    let ticks = (duration_s / period).floor() as usize;
    for k in 1..=ticks {
        raw.push((k as f64 * period, 4, EventKind::Advertise, profile.advertisement_event_uj, None));
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut events = Vec::with_capacity(raw.len());
    let mut event_energy = 0.0;
    let mut pending: Option<String> = None;
    let mut runtime = 0.0;
    let mut runtime_ledger = Vec::with_capacity(ticks);
    let usage_name = bundle.map(|b| class_label(Some(b), USAGE as usize));
    for (t, _, kind, energy, result) in raw {
        event_energy += energy;
        let result = match kind {
            EventKind::Infer => {
                pending = result.clone();
                result
            }
            EventKind::Advertise => {
                let sent = pending.take();
                if sent.is_some() && sent == usage_name {
                    runtime += period;
                }
                runtime_ledger.push((t, runtime));
                sent
            }
            _ => result,
        };
        events.push(SimEvent {
            t_s: t,
            kind,
            energy_uj: energy,
            cum_uj: profile.idle_power_uw * t + event_energy,
            result,
        });
    }
    let idle = profile.idle_power_uw * duration_s;
    let total = idle + event_energy;
    Ok(SimTrace {
        duration_s,
        events,
        classifications,
        idle_energy_uj: idle,
        event_energy_uj: event_energy,
        total_energy_uj: total,
        average_power_uw: total / duration_s,
        runtime_s: runtime,
        runtime_ledger,
        warnings,
    })
}

fn class_label(bundle: Option<&ModelBundle>, class: usize) -> String {
    bundle
        .and_then(|b| b.classifier.class_labels.get(class).cloned())
        .unwrap_or_else(|| class_name(class as u16).to_string())
}

/// Writes `t_s,event,energy_uJ,cum_uJ,result` rows.
pub fn write_trace_csv<W: std::io::Write>(trace: &SimTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["t_s", "event", "energy_uJ", "cum_uJ", "result"]).map_err(io)?;
    for e in &trace.events {
        w.write_record([
            format!("{:.4}", e.t_s),
            e.kind.name().to_string(),
            format!("{:.3}", e.energy_uj),
            format!("{:.3}", e.cum_uj),
            e.result.clone().unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Battery lifetime with its energy breakdown.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryEstimate {
    pub years: f64,
    pub capacity_j: f64,
    pub idle_j_per_year: f64,
    pub advertising_j_per_year: f64,
    /// Acquisition plus inference events spent during the usage hours.
    pub usage_events: f64,
    pub usage_j: f64,
    /// Lifetime if the same usage hours recurred every year.
    pub years_if_hours_recur_yearly: f64,
}

/// Lifetime of a battery of `capacity_mah` for a tool used `usage_hours`
/// in total over the battery's life. While in use, the device acquires and
/// classifies one window per advertisement period.
///
/// When the battery would die before the usage hours are spent, the result is
/// the time it lasts under continuous use.
pub fn battery_life(profile: &EnergyProfile, capacity_mah: f64, usage_hours: f64) -> Result<BatteryEstimate> {
    profile.validate()?;
    if !(capacity_mah > 0.0) || !capacity_mah.is_finite() || !(usage_hours >= 0.0) || !usage_hours.is_finite() {
        return Err(Error::Config("capacity must be positive and usage hours non-negative".into()));
    }
    let capacity_j = capacity_mah * 1e-3 * 3600.0 * profile.battery_voltage * profile.battery_efficiency;
    let idle_j_per_year = profile.idle_power_uw * 1e-6 * SECONDS_PER_YEAR;
    let advertising_j_per_year =
        profile.advertisement_event_uj * 1e-6 * SECONDS_PER_YEAR / profile.advertisement_period_s;
    let baseline = idle_j_per_year + advertising_j_per_year;
    let usage_events = usage_hours * 3600.0 / profile.advertisement_period_s;
    let usage_j = usage_events * profile.usage_event_uj() * 1e-6;
    let years = (capacity_j - usage_j) / baseline;
    let years = if years * SECONDS_PER_YEAR >= usage_hours * 3600.0 {
        years
    } else {
        // the battery dies before the usage hours are spent
        let active_w = (profile.baseline_power_uw() + profile.usage_event_uj() / profile.advertisement_period_s) * 1e-6;
        capacity_j / active_w / SECONDS_PER_YEAR
    };
    Ok(BatteryEstimate {
        years,
        capacity_j,
        idle_j_per_year,
        advertising_j_per_year,
        usage_events,
        usage_j,
        years_if_hours_recur_yearly: capacity_j / (baseline + usage_j),
    })
}
