//! Seeded synthetic accelerometer corpus.
//!
//! Each recording is a session with one power tool: alternating Usage and
//! Transportation segments with per-sample labels.
//!
//! * Usage: harmonic vibration bursts at a tool fundamental between 40 and
//!   120 Hz, broadband impact transients, and the operator's feed strokes and
//!   repositioning below 2 Hz.
//! * Transportation: gait-like and random-walk motion below 5 Hz with
//!   orientation drift of the gravity vector.
//!
//! Brands shift fundamentals, harmonic mix and amplitudes so that a model
//! trained on one brand has something to generalize over.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Recording, RecordingMeta, TRANSPORT, USAGE};

const GRAVITY_MG: f64 = 1000.0;
const SENSOR_NOISE_MG: f64 = 4.0;

/// Tool family: name, usage activity, nominal fundamental (Hz), nominal
/// vibration amplitude (mG), impacts per second.
const FAMILIES: [(&str, &str, f64, f64, f64); 6] = [
    ("drill", "drilling", 58.0, 420.0, 1.0),
    ("hammer-drill", "hammer-drilling", 46.0, 380.0, 25.0),
    ("saw", "sawing", 82.0, 520.0, 2.0),
    ("grinder", "grinding", 104.0, 600.0, 0.5),
    ("screwdriver", "screwing", 48.0, 300.0, 3.0),
    ("sander", "sanding", 70.0, 450.0, 0.5),
];

/// Transportation activities: name, gait frequency (Hz), gait amplitude (mG),
/// random-walk amplitude (mG).
const TRANSPORT_ACTIVITIES: [(&str, f64, f64, f64); 6] = [
    ("carrying", 1.8, 160.0, 90.0),
    ("walking", 2.0, 220.0, 70.0),
    ("driving", 0.7, 60.0, 120.0),
    ("lifting", 0.5, 140.0, 110.0),
    ("placing", 1.0, 90.0, 80.0),
    ("storing", 0.8, 70.0, 100.0),
];

/// Activity names of the full taxonomy, usage activities first.
pub fn activity_taxonomy() -> Vec<&'static str> {
    FAMILIES
        .iter()
        .map(|f| f.1)
        .chain(TRANSPORT_ACTIVITIES.iter().map(|t| t.0))
        .collect()
}

/// Whether `activity` is a tool-usage activity of the taxonomy.
pub fn is_usage_activity(activity: &str) -> Option<bool> {
    if FAMILIES.iter().any(|f| f.1 == activity) {
        Some(true)
    } else if TRANSPORT_ACTIVITIES.iter().any(|t| t.0 == activity) {
        Some(false)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthBrand {
    pub name: String,
    pub sessions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub source_rate_hz: f64,
    pub brands: Vec<SynthBrand>,
    pub session_duration_s: f64,
    /// Segment lengths are drawn uniformly from this range (seconds).
    pub segment_min_s: f64,
    pub segment_max_s: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            source_rate_hz: 3200.0,
            brands: ["A", "B", "C", "D", "E", "F"]
                .iter()
                .map(|b| SynthBrand {
                    name: b.to_string(),
                    sessions: 2,
                })
                .collect(),
            session_duration_s: 120.0,
            segment_min_s: 10.0,
            segment_max_s: 40.0,
        }
    }
}

impl SynthConfig {
    /// Convenience: the same number of sessions for every named brand.
    pub fn with_brands(names: &[&str], sessions: usize) -> Self {
        Self {
            brands: names
                .iter()
                .map(|b| SynthBrand {
                    name: b.to_string(),
                    sessions,
                })
                .collect(),
            ..Self::default()
        }
    }
}

/// Per-brand deviations from the family nominal values.
#[derive(Debug, Clone, Copy)]
struct BrandTraits {
    frequency: f64,
    amplitude: f64,
    harmonics: [f64; 3],
    rumble_divisor: f64,
}

impl BrandTraits {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        Self {
            frequency: rng.gen_range(0.85..1.12),
            amplitude: rng.gen_range(0.7..1.3),
            harmonics: [1.0, rng.gen_range(0.2..0.7), rng.gen_range(0.05..0.35)],
            rumble_divisor: rng.gen_range(4.0..7.0),
        }
    }
}

/// Streams recordings one session at a time.
#[derive(Debug, Clone)]
pub struct SynthGenerator {
    config: SynthConfig,
    seed: u64,
    traits: Vec<BrandTraits>,
    brand: usize,
    session: usize,
    next_id: u32,
}

impl SynthGenerator {
    pub fn new(config: SynthConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let traits = config.brands.iter().map(|_| BrandTraits::draw(&mut rng)).collect();
        Self {
            config,
            seed,
            traits,
            brand: 0,
            session: 0,
            next_id: 0,
        }
    }
}

impl Iterator for SynthGenerator {
    type Item = Recording;

    fn next(&mut self) -> Option<Recording> {
        while self.brand < self.config.brands.len() && self.session >= self.config.brands[self.brand].sessions {
            self.brand += 1;
            self.session = 0;
        }
        if self.brand >= self.config.brands.len() {
            return None;
        }
        let id = self.next_id;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1 + id as u64);
        let rec = session(
            &self.config,
            &self.config.brands[self.brand].name,
            self.traits[self.brand],
            id,
            &mut rng,
        );
        self.session += 1;
        self.next_id += 1;
        Some(rec)
    }
}

/// Generates the whole corpus in memory.
pub fn synth_generate(config: &SynthConfig, seed: u64) -> Vec<Recording> {
    SynthGenerator::new(config.clone(), seed).collect()
}

/// Slowly varying orientation of the gravity vector plus low-frequency body
/// motion; continuous across segment boundaries.
struct MotionState {
    theta: f64,
    phi: f64,
    theta_rate: f64,
    phi_rate: f64,
    walk: [f64; 3],
    walk_vel: [f64; 3],
}

impl MotionState {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        Self {
            theta: rng.gen_range(0.0..PI),
            phi: rng.gen_range(0.0..2.0 * PI),
            theta_rate: 0.0,
            phi_rate: 0.0,
            walk: [0.0; 3],
            walk_vel: [0.0; 3],
        }
    }

    /// Advances the orientation and random-walk processes by one sample.
    /// `agility` scales orientation changes, `walk_amp` the random walk (mG).
    fn step(&mut self, rng: &mut ChaCha8Rng, dt: f64, agility: f64, walk_amp: f64) -> [f64; 3] {
        // critically damped second-order processes, natural frequency ~1.5 Hz
        let omega = 2.0 * PI * 1.5;
        let noise = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
        let drive = (2.0 * omega.powi(3) * dt).sqrt();
        for axis in 0..3 {
            let acc = -omega * omega * self.walk[axis] - 2.0 * omega * self.walk_vel[axis]
                + drive * walk_amp * noise(rng) / dt;
            self.walk_vel[axis] += acc * dt;
            self.walk[axis] += self.walk_vel[axis] * dt;
        }
        let tau = 0.8;
        self.theta_rate += (-self.theta_rate / tau) * dt + agility * (dt).sqrt() * noise(rng);
        self.phi_rate += (-self.phi_rate / tau) * dt + agility * (dt).sqrt() * noise(rng);
        self.theta += self.theta_rate * dt;
        self.phi += self.phi_rate * dt;
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [
            GRAVITY_MG * st * cp + self.walk[0],
            GRAVITY_MG * st * sp + self.walk[1],
            GRAVITY_MG * ct + self.walk[2],
        ]
    }
}

impl MotionState {
    fn gravity(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [GRAVITY_MG * st * cp, GRAVITY_MG * st * sp, GRAVITY_MG * ct]
    }

    fn settle(&mut self) {
        self.theta_rate = 0.0;
        self.phi_rate = 0.0;
        self.walk = [0.0; 3];
        self.walk_vel = [0.0; 3];
    }
}

fn unit_axes(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let v: [f64; 3] = [
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
    ];
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-9);
    [v[0] / norm, v[1] / norm, v[2] / norm]
}

/// Vibration parameters of one tool as used by one brand.
#[derive(Debug, Clone, Copy)]
struct Tool {
    f0: f64,
    amp: f64,
    impact_rate: f64,
    traits: BrandTraits,
}

impl Tool {
    fn new(family: (&str, &str, f64, f64, f64), traits: BrandTraits) -> Self {
        let (_, _, f_nominal, amp_nominal, impact_rate) = family;
        Self {
            f0: (f_nominal * traits.frequency).clamp(40.0, 120.0),
            amp: amp_nominal * traits.amplitude,
            impact_rate,
            traits,
        }
    }
}

/// Signal state that stays continuous across segments.
struct Track {
    motion: MotionState,
    phase: f64,
    dt: f64,
}

impl Track {
    fn push(axes: &mut [Vec<f32>], v: [f64; 3]) {
        for (axis, x) in axes.iter_mut().zip(v) {
            axis.push(x as f32);
        }
    }

    fn usage(&mut self, tool: &Tool, n: usize, axes: &mut [Vec<f32>], rng: &mut ChaCha8Rng) {
        let dt = self.dt;
        let rate = 1.0 / dt;
        let dir = unit_axes(rng);
        let mut envelope_on = true;
        let mut envelope_left = (rng.gen_range(1.0..4.0) * rate) as usize;
        let mut envelope = 1.0f64;
        let mut load = 1.0f64;
        let mut impact = 0.0f64;
        let mut impact_dir = unit_axes(rng);
        // the operator moves the tool while working: feed strokes and
        // repositioning overlap the transport band
        let stroke_f = rng.gen_range(0.5..2.0);
        let stroke_amp = rng.gen_range(50.0..150.0);
        let stroke_dir = unit_axes(rng);
        let stroke_phase = rng.gen_range(0.0..2.0 * PI);
        let walk_amp = rng.gen_range(60.0..130.0);
        // gear and eccentric mechanisms add a sub-harmonic rumble
        let rumble_f = tool.f0 / tool.traits.rumble_divisor;
        let rumble_dir = unit_axes(rng);
        for i in 0..n {
            if envelope_left == 0 {
                envelope_on = !envelope_on;
                let span = if envelope_on { 1.0..4.0 } else { 0.1..0.4 };
                envelope_left = (rng.gen_range(span) * rate) as usize;
            }
            envelope_left = envelope_left.saturating_sub(1);
            let target = if envelope_on { 1.0 } else { 0.15 };
            envelope += (target - envelope) * (dt / 0.03).min(1.0);
            let n: f64 = StandardNormal.sample(rng);
            load += (-(load - 1.0) / 0.5) * dt + 0.02 * dt.sqrt() * n;
            self.phase = (self.phase + 2.0 * PI * tool.f0 * load * dt) % (2.0 * PI * 6.0);
            let h = tool.traits.harmonics;
            let phase = self.phase;
            let vib = tool.amp
                * envelope
                * (h[0] * phase.sin() + h[1] * (2.0 * phase + 0.3).sin() + h[2] * (3.0 * phase + 1.1).sin());
            if rng.gen_bool((tool.impact_rate * dt).min(1.0)) {
                impact = 300.0 * tool.traits.amplitude;
                impact_dir = unit_axes(rng);
            }
            let click: f64 = if impact > 1.0 {
                let n: f64 = StandardNormal.sample(rng);
                let v = impact * n;
                impact *= (-dt / 0.005).exp();
                v
            } else {
                0.0
            };
            let base = self.motion.step(rng, dt, 0.4, walk_amp);
            let t = i as f64 * dt;
            let stroke = stroke_amp * (2.0 * PI * stroke_f * t + stroke_phase).sin();
            let rumble = 0.2 * tool.amp * envelope * (2.0 * PI * rumble_f * load * t).sin();
            let mut v = [0.0; 3];
            for axis in 0..3 {
                let noise: f64 = StandardNormal.sample(rng);
                v[axis] = base[axis] + stroke * stroke_dir[axis] + rumble * rumble_dir[axis] + vib * dir[axis] + click * impact_dir[axis] + SENSOR_NOISE_MG * noise;
            }
            Self::push(axes, v);
        }
    }

    fn transport(&mut self, activity: (&str, f64, f64, f64), n: usize, axes: &mut [Vec<f32>], rng: &mut ChaCha8Rng) {
        let dt = self.dt;
        let (_, gait_f, gait_amp, walk_amp) = activity;
        let gait_f = gait_f * rng.gen_range(0.85..1.15);
        let dir = unit_axes(rng);
        let gait_phase = rng.gen_range(0.0..2.0 * PI);
        for i in 0..n {
            let t = i as f64 * dt;
            let g = 2.0 * PI * gait_f * t + gait_phase;
            let gait = gait_amp * (g.sin() + 0.3 * (2.0 * g).sin());
            let base = self.motion.step(rng, dt, 0.6, walk_amp);
            let mut v = [0.0; 3];
            for axis in 0..3 {
                let noise: f64 = StandardNormal.sample(rng);
                v[axis] = base[axis] + gait * dir[axis] + SENSOR_NOISE_MG * noise;
            }
            Self::push(axes, v);
        }
    }

    /// Tool at rest: the current gravity vector plus sensor noise.
    fn rest(&mut self, n: usize, axes: &mut [Vec<f32>], rng: &mut ChaCha8Rng) {
        self.motion.settle();
        let g = self.motion.gravity();
        for _ in 0..n {
            let mut v = g;
            for x in &mut v {
                let noise: f64 = StandardNormal.sample(rng);
                *x += SENSOR_NOISE_MG * noise;
            }
            Self::push(axes, v);
        }
    }
}

fn session(config: &SynthConfig, brand: &str, traits: BrandTraits, id: u32, rng: &mut ChaCha8Rng) -> Recording {
    let rate = config.source_rate_hz;
    let dt = 1.0 / rate;
    let total = (config.session_duration_s.max(0.0) * rate).round() as usize;
    let family = FAMILIES[rng.gen_range(0..FAMILIES.len())];
    let tool = Tool::new(family, traits);

    let mut axes = (0..3).map(|_| Vec::with_capacity(total)).collect::<Vec<_>>();
    let mut labels = Vec::with_capacity(total);
    let mut track = Track {
        motion: MotionState::new(rng),
        phase: 0.0,
        dt,
    };
    let mut usage = rng.gen_bool(0.5);
    let (lo, hi) = (config.segment_min_s.max(dt), config.segment_max_s.max(config.segment_min_s.max(dt)));

    while labels.len() < total {
        let seg_len = ((rng.gen_range(lo..=hi) * rate) as usize).clamp(1, total - labels.len());
        if usage {
            track.usage(&tool, seg_len, &mut axes, rng);
            labels.extend(std::iter::repeat_n(USAGE, seg_len));
        } else {
            let activity = TRANSPORT_ACTIVITIES[rng.gen_range(0..TRANSPORT_ACTIVITIES.len())];
            track.transport(activity, seg_len, &mut axes, rng);
            labels.extend(std::iter::repeat_n(TRANSPORT, seg_len));
        }
        usage = !usage;
    }

    Recording {
        id,
        samples: axes,
        labels,
        rate_hz: rate,
        meta: RecordingMeta {
            brand: brand.to_string(),
            family: family.0.to_string(),
            activity: family.1.to_string(),
            source_rate_hz: rate,
        },
    }
}

/// Activity name for a tool lying still.
pub const REST_ACTIVITY: &str = "rest";

/// Renders arbitrary activity sequences with one brand's tools, for device
/// scenarios. State carries over between calls so consecutive segments join
/// without jumps in orientation.
pub struct ActivityRenderer {
    rng: ChaCha8Rng,
    track: Track,
    traits: BrandTraits,
}

impl ActivityRenderer {
    pub fn new(rate_hz: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let traits = BrandTraits::draw(&mut rng);
        let motion = MotionState::new(&mut rng);
        Self {
            rng,
            track: Track {
                motion,
                phase: 0.0,
                dt: 1.0 / rate_hz,
            },
            traits,
        }
    }

    /// Appends `n` samples of `activity` to three axes and returns the class
    /// label. `activity` is a taxonomy name or [`REST_ACTIVITY`].
    pub fn render(&mut self, activity: &str, n: usize, axes: &mut [Vec<f32>]) -> Option<u16> {
        if axes.len() != 3 {
            return None;
        }
        if activity == REST_ACTIVITY {
            self.track.rest(n, axes, &mut self.rng);
            return Some(TRANSPORT);
        }
        if let Some(family) = FAMILIES.iter().find(|f| f.1 == activity) {
            let tool = Tool::new(*family, self.traits);
            self.track.usage(&tool, n, axes, &mut self.rng);
            return Some(USAGE);
        }
        let t = TRANSPORT_ACTIVITIES.iter().find(|t| t.0 == activity)?;
        self.track.transport(*t, n, axes, &mut self.rng);
        Some(TRANSPORT)
    }
}
