//! Time-stepped coupling of PV source, capacitor and IC load.
//!
//! The PV string is tied directly to the capacitor, so its operating voltage
//! is the capacitor voltage. Each step of length `dt` computes
//!
//! ```text
//! i_net = scale * intensity * I_pv(v) - i_load(mode) - i_leak(v)
//! ```
//!
//! and advances the capacitor with [`storage::step`]. The IC is off below its
//! boot threshold, asleep outside the active window, and otherwise ready with
//! periodic measurements at `k * 3600 / rate` seconds.
//!
//! Record `i` holds the state at `t_i` together with the flows applied over
//! `[t_i, t_i + dt)`. Flows are reported at the step's midpoint voltage, and
//! any current rejected by the voltage clamp is removed from the flow that
//! caused it, so that `Σ (p_in - p_load - p_leak)·dt` over records
//! `0..n-1` equals the change in stored energy. The final record's flows
//! describe the step that would follow and are not part of that sum.

use thiserror::Error;

use crate::consts::SECONDS_PER_DAY;
use crate::ic_load::{self, IcProfile, LoadError, MeasurementSchedule, Mode};
use crate::numfmt::sig6;
use crate::pv_model::DiodeModel;
use crate::storage::{self, CapacitorModel, ChargeState, StorageError};

pub const TRACE_CSV_HEADER: &str = "t_s,v_V,mode,p_in_W,p_load_W,p_leak_W,meas_count";

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid light profile: {0}")]
    InvalidLight(String),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

/// Illumination over `[start, end)` in suns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightSegment {
    pub start: f64,
    pub end: f64,
    pub intensity: f64,
}

/// Ordered, non-overlapping light segments; dark elsewhere.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LightProfile {
    segments: Vec<LightSegment>,
}

impl LightProfile {
    pub fn new(segments: Vec<LightSegment>) -> Result<Self, SimError> {
        for s in &segments {
            if !(s.start.is_finite() && s.end.is_finite() && s.start <= s.end) {
                return Err(SimError::InvalidLight(format!(
                    "segment [{}, {}) is not ordered",
                    s.start, s.end
                )));
            }
            if !(s.intensity >= 0.0 && s.intensity.is_finite()) {
                return Err(SimError::InvalidLight(format!(
                    "intensity {} must be >= 0",
                    s.intensity
                )));
            }
        }
        if segments.windows(2).any(|w| w[1].start < w[0].end) {
            return Err(SimError::InvalidLight(
                "segments overlap or are out of order".into(),
            ));
        }
        Ok(Self { segments })
    }

    pub fn dark() -> Self {
        Self::default()
    }

    /// A single segment `[start, end)` at `intensity` suns.
    pub fn constant(start: f64, end: f64, intensity: f64) -> Result<Self, SimError> {
        Self::new(vec![LightSegment {
            start,
            end,
            intensity,
        }])
    }

    pub fn segments(&self) -> &[LightSegment] {
        &self.segments
    }

    /// ∫ intensity dt over `[t0, t1)` in sun·seconds.
    pub fn integrated(&self, t0: f64, t1: f64) -> f64 {
        self.segments
            .iter()
            .map(|s| {
                let overlap = s.end.min(t1) - s.start.max(t0);
                if overlap > 0.0 {
                    overlap * s.intensity
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Mean intensity over `[t0, t1)`.
    pub fn average_intensity(&self, t0: f64, t1: f64) -> f64 {
        self.integrated(t0, t1) / (t1 - t0)
    }
}

/// Everything one simulation run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub pv: DiodeModel,
    /// Multiplier on the PV current, 1 for the nameplate curve.
    pub photocurrent_scale: f64,
    pub cap: CapacitorModel,
    pub ic: IcProfile,
    pub schedule: MeasurementSchedule,
    pub light: LightProfile,
    /// Seconds.
    pub duration: f64,
    pub dt: f64,
    pub initial_v: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScenario(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be > 0", self.dt));
        }
        if !(self.duration >= self.dt && self.duration.is_finite()) {
            return bad(format!("duration = {} must be >= dt", self.duration));
        }
        if !(0.0..=self.cap.v_max).contains(&self.initial_v) {
            return bad(format!(
                "initial voltage {} outside [0, {}]",
                self.initial_v, self.cap.v_max
            ));
        }
        if !(self.photocurrent_scale >= 0.0 && self.photocurrent_scale.is_finite()) {
            return bad("photocurrent scale must be >= 0".into());
        }
        self.cap.validate()?;
        self.ic.validate()?;
        self.schedule.validate(&self.ic)?;
        Ok(())
    }

    /// Number of integration steps.
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round().max(1.0) as usize
    }

    /// Same scenario lit by one sun over `[0, light_on)` and dark afterwards.
    pub fn with_light_pulse(&self, light_on: f64) -> Result<Self, SimError> {
        let light = if light_on > 0.0 {
            LightProfile::constant(0.0, light_on, 1.0)?
        } else {
            LightProfile::dark()
        };
        Ok(Self {
            light,
            ..self.clone()
        })
    }
}

/// Photocurrent scale that makes `pv` deliver `target_isc` A at short circuit.
pub fn photocurrent_scale_for(pv: &DiodeModel, target_isc: f64) -> f64 {
    target_isc / pv.isc()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub v: f64,
    pub mode: Mode,
    pub p_in: f64,
    pub p_load: f64,
    pub p_leak: f64,
    /// Measurements started before `t`.
    pub measurement_count: u64,
}

struct StepFlows {
    mode: Mode,
    p_in: f64,
    p_load: f64,
    p_leak: f64,
    measurements: u64,
    v_next: f64,
}

/// Measurement start times `k * 3600 / rate` falling in `[t0, t1)`.
fn events_in(rate_per_hour: f64, t0: f64, t1: f64) -> u64 {
    if rate_per_hour <= 0.0 {
        return 0;
    }
    let first = (t0 * rate_per_hour / 3600.0).ceil();
    let end = (t1 * rate_per_hour / 3600.0).ceil();
    (end - first).max(0.0) as u64
}

fn step_flows(s: &Scenario, t0: f64, t1: f64, v: f64) -> StepFlows {
    let dt = t1 - t0;
    let intensity = s.light.average_intensity(t0, t1);
    let i_pv = s.photocurrent_scale * intensity * s.pv.current(v);

    let (mode, mut i_load, measurements) = if v < s.ic.v_threshold {
        (Mode::Off, 0.0, 0)
    } else if !s.schedule.is_active(t0) {
        (Mode::Sleep, s.ic.i_sleep, 0)
    } else {
        let n = events_in(s.schedule.rate_per_hour, t0, t1);
        let busy = (n as f64 * s.ic.t_measure).min(dt);
        let i = s.ic.i_ready + busy / dt * (s.ic.i_measure - s.ic.i_ready);
        (if n > 0 { Mode::Measure } else { Mode::Ready }, i, n)
    };
    let mut i_leak = storage::leak_current(&s.cap, v);

    let i_net = i_pv - i_load - i_leak;
    let next = storage::step(ChargeState { v, t: t0 }, &s.cap, i_net, dt);
    // Current the clamp refused: surplus is shed from the PV input, a
    // deficit is first charged against leakage, then against the load.
    let unclamped = v + i_net * dt / s.cap.capacitance;
    let rejected = if (0.0..=s.cap.v_max).contains(&unclamped) {
        0.0
    } else {
        i_net - (next.v - v) * s.cap.capacitance / dt
    };
    let mut i_in = i_pv;
    if rejected > 0.0 {
        i_in -= rejected;
    } else if rejected < 0.0 {
        let deficit = -rejected;
        let from_leak = deficit.min(i_leak);
        i_leak -= from_leak;
        i_load -= deficit - from_leak;
    }
    let v_mid = 0.5 * (v + next.v);
    StepFlows {
        mode,
        p_in: i_in * v_mid,
        p_load: i_load * v_mid,
        p_leak: i_leak * v_mid,
        measurements,
        v_next: next.v,
    }
}

/// Runs the scenario; returns `steps() + 1` records starting at `t = 0`.
pub fn simulate(s: &Scenario) -> Result<Vec<TraceRecord>, SimError> {
    s.validate()?;
    let n = s.steps();
    let mut records = Vec::with_capacity(n + 1);
    let mut v = s.initial_v;
    let mut count = 0u64;
    for i in 0..=n {
        let t0 = i as f64 * s.dt;
        let t1 = (i + 1) as f64 * s.dt;
        let f = step_flows(s, t0, t1, v);
        records.push(TraceRecord {
            t: t0,
            v,
            mode: f.mode,
            p_in: f.p_in,
            p_load: f.p_load,
            p_leak: f.p_leak,
            measurement_count: count,
        });
        if i < n {
            v = f.v_next;
            count += f.measurements;
        }
    }
    Ok(records)
}

/// First time the trace reaches `v_target`, interpolating linearly between
/// records.
pub fn time_to_voltage(trace: &[TraceRecord], v_target: f64) -> Option<f64> {
    let first = trace.first()?;
    if first.v >= v_target {
        return Some(first.t);
    }
    trace.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        (b.v >= v_target).then(|| a.t + (v_target - a.v) / (b.v - a.v) * (b.t - a.t))
    })
}

/// Time spent at or above `v_threshold`, with crossings interpolated.
pub fn time_above(trace: &[TraceRecord], v_threshold: f64) -> f64 {
    trace
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let span = b.t - a.t;
            match (a.v >= v_threshold, b.v >= v_threshold) {
                (true, true) => span,
                (false, false) => 0.0,
                (true, false) => span * (a.v - v_threshold) / (a.v - b.v),
                (false, true) => span * (b.v - v_threshold) / (b.v - a.v),
            }
        })
        .sum()
}

/// Total seconds powered when lit for `[0, light_on)` and dark afterwards.
pub fn on_time_experiment(s: &Scenario, light_on: f64) -> Result<f64, SimError> {
    let lit = s.with_light_pulse(light_on)?;
    let trace = simulate(&lit)?;
    Ok(time_above(&trace, lit.ic.v_threshold))
}

/// Daily energy terms behind the energy-balance availability, all in J.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    pub harvest: f64,
    pub usable: f64,
    pub leak: f64,
    pub required: f64,
}

impl EnergyBalance {
    /// `clamp((harvest + usable - leak) / required, 0, 1)`; 1 when nothing
    /// is required.
    pub fn fraction(&self) -> f64 {
        if self.required <= 0.0 {
            return 1.0;
        }
        ((self.harvest + self.usable - self.leak) / self.required).clamp(0.0, 1.0)
    }
}

/// Energy-balance terms over one day.
///
/// Harvest uses the MPP power scaled by light intensity. Leakage is charged
/// at the midpoint of the operating band `[v_threshold, v_max]` for the whole
/// day, and the demand is the IC's daily energy at its threshold voltage.
pub fn energy_balance(s: &Scenario) -> Result<EnergyBalance, SimError> {
    s.validate()?;
    let (_, _, p_mpp) = s.pv.mpp();
    let harvest = s.photocurrent_scale * p_mpp * s.light.integrated(0.0, SECONDS_PER_DAY);
    let thr = s.ic.v_threshold;
    let usable = if s.initial_v > thr {
        storage::usable_energy(s.cap.capacitance, s.initial_v, thr)
    } else {
        0.0
    };
    let v_mean = 0.5 * (thr + s.cap.v_max);
    let leak = v_mean * storage::leak_current(&s.cap, v_mean) * SECONDS_PER_DAY;
    let required = ic_load::daily_energy(&s.ic, &s.schedule, thr)?;
    Ok(EnergyBalance {
        harvest,
        usable,
        leak,
        required,
    })
}

/// Both availability estimates for a one-day scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Availability {
    pub energy_balance: f64,
    /// Fraction of steps with the IC powered.
    pub trace_fraction: f64,
    pub terms: EnergyBalance,
}

fn check_one_day(s: &Scenario) -> Result<(), SimError> {
    if (s.duration - SECONDS_PER_DAY).abs() > 1e-9 {
        return Err(SimError::InvalidScenario(format!(
            "availability needs a {SECONDS_PER_DAY} s scenario, got {}",
            s.duration
        )));
    }
    Ok(())
}

/// Fraction of records `0..n-1` in which the IC is powered.
pub fn trace_availability(trace: &[TraceRecord]) -> f64 {
    let steps = &trace[..trace.len().saturating_sub(1)];
    if steps.is_empty() {
        return 0.0;
    }
    steps.iter().filter(|r| r.mode != Mode::Off).count() as f64 / steps.len() as f64
}

pub fn availability(s: &Scenario) -> Result<Availability, SimError> {
    check_one_day(s)?;
    let terms = energy_balance(s)?;
    let trace = simulate(s)?;
    Ok(Availability {
        energy_balance: terms.fraction(),
        trace_fraction: trace_availability(&trace),
        terms,
    })
}

/// Energy-balance availability only (no time stepping).
pub fn availability_energy_balance(s: &Scenario) -> Result<f64, SimError> {
    check_one_day(s)?;
    Ok(energy_balance(s)?.fraction())
}

/// Trace-fraction availability only.
pub fn availability_trace(s: &Scenario) -> Result<f64, SimError> {
    check_one_day(s)?;
    Ok(trace_availability(&simulate(s)?))
}

pub fn trace_to_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(48 * (trace.len() + 1));
    out.push_str(TRACE_CSV_HEADER);
    out.push('\n');
    for r in trace {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            sig6(r.t),
            sig6(r.v),
            r.mode,
            sig6(r.p_in),
            sig6(r.p_load),
            sig6(r.p_leak),
            r.measurement_count
        ));
    }
    out
}
