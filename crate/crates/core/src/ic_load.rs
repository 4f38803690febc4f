//! RFID IC load: per-mode currents and measurement-rate dependent demand.
//!
//! During a measurement the measure current replaces the ready current for
//! `t_measure` seconds, so for `rate` measurements per hour the duty fraction
//! is `f = rate * t_measure / 3600` and
//! `I_avg = (1 - f) * i_ready + f * i_measure`.

use thiserror::Error;

use crate::consts::SECONDS_PER_DAY;

#[derive(Debug, Error, PartialEq)]
pub enum LoadError {
    #[error("invalid IC profile: {0}")]
    InvalidProfile(String),
    #[error("rate {rate}/h exceeds the non-overlapping limit {max}/h")]
    RateTooHigh { rate: f64, max: f64 },
    #[error("negative measurement rate {0}/h")]
    NegativeRate(f64),
    #[error("supply {v} V is below the IC threshold {threshold} V")]
    UnderVoltage { v: f64, threshold: f64 },
    #[error("invalid active window ({0}, {1})")]
    InvalidWindow(f64, f64),
}

/// Operating mode of the IC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Supply below the boot threshold; no current drawn.
    Off,
    Sleep,
    Ready,
    Measure,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Off => "off",
            Mode::Sleep => "sleep",
            Mode::Ready => "ready",
            Mode::Measure => "measure",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Currents in A, durations in s, voltages in V, sensitivities in dBm.
#[derive(Debug, Clone, PartialEq)]
pub struct IcProfile {
    pub i_sleep: f64,
    pub i_ready: f64,
    pub i_measure: f64,
    pub t_measure: f64,
    pub v_threshold: f64,
    pub v_max: f64,
    pub sens_passive_dbm: f64,
    pub sens_assisted_dbm: f64,
}

impl Default for IcProfile {
    /// EM4325 figures: 1.6 µA sleep, 6 µA ready, 30 µA for 8 ms per
    /// temperature measurement, 1.5 V boot threshold, 3 V safe limit.
    fn default() -> Self {
        Self {
            i_sleep: 1.6e-6,
            i_ready: 6e-6,
            i_measure: 30e-6,
            t_measure: 8e-3,
            v_threshold: 1.5,
            v_max: 3.0,
            sens_passive_dbm: -8.3,
            sens_assisted_dbm: -22.0,
        }
    }
}

impl IcProfile {
    /// Same thresholds with every current set to zero.
    pub fn unloaded(&self) -> Self {
        Self {
            i_sleep: 0.0,
            i_ready: 0.0,
            i_measure: 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), LoadError> {
        let bad = |m: &str| Err(LoadError::InvalidProfile(m.to_string()));
        if !(self.i_sleep >= 0.0 && self.i_sleep <= self.i_ready && self.i_ready <= self.i_measure)
        {
            return bad("currents must satisfy 0 <= sleep <= ready <= measure");
        }
        if !(self.t_measure > 0.0) {
            return bad("measurement duration must be > 0");
        }
        if !(self.v_threshold > 0.0 && self.v_threshold < self.v_max) {
            return bad("voltages must satisfy 0 < threshold < max");
        }
        if !(self.sens_assisted_dbm <= self.sens_passive_dbm) {
            return bad("assisted sensitivity must not exceed passive sensitivity");
        }
        Ok(())
    }

    /// Highest measurement rate per hour without overlapping measurements.
    pub fn max_rate_per_hour(&self) -> f64 {
        3600.0 / self.t_measure
    }

    pub fn mode_current(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Off => 0.0,
            Mode::Sleep => self.i_sleep,
            Mode::Ready => self.i_ready,
            Mode::Measure => self.i_measure,
        }
    }

    /// Fraction of time spent measuring at `rate` per hour.
    pub fn duty_fraction(&self, rate_per_hour: f64) -> Result<f64, LoadError> {
        if rate_per_hour < 0.0 {
            return Err(LoadError::NegativeRate(rate_per_hour));
        }
        let max = self.max_rate_per_hour();
        if rate_per_hour > max * (1.0 + 1e-12) {
            return Err(LoadError::RateTooHigh {
                rate: rate_per_hour,
                max,
            });
        }
        Ok((rate_per_hour * self.t_measure / 3600.0).min(1.0))
    }
}

/// Measurement rate plus an optional daily active window `(start, end)` in
/// seconds since midnight; outside the window the IC sleeps.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSchedule {
    pub rate_per_hour: f64,
    pub active_window: Option<(f64, f64)>,
}

impl MeasurementSchedule {
    pub fn continuous(rate_per_hour: f64) -> Self {
        Self {
            rate_per_hour,
            active_window: None,
        }
    }

    pub fn validate(&self, profile: &IcProfile) -> Result<(), LoadError> {
        profile.duty_fraction(self.rate_per_hour)?;
        if let Some((start, end)) = self.active_window {
            if !(0.0 <= start && start <= end && end <= SECONDS_PER_DAY) {
                return Err(LoadError::InvalidWindow(start, end));
            }
        }
        Ok(())
    }

    /// Seconds per day during which the IC is awake.
    pub fn active_seconds(&self) -> f64 {
        match self.active_window {
            Some((start, end)) => end - start,
            None => SECONDS_PER_DAY,
        }
    }

    /// Whether time-of-day `t` (any absolute time, wrapped to a day) is active.
    pub fn is_active(&self, t: f64) -> bool {
        match self.active_window {
            None => true,
            Some((start, end)) => {
                let tod = t.rem_euclid(SECONDS_PER_DAY);
                tod >= start && tod < end
            }
        }
    }

    /// Interval between measurements in seconds (infinite at rate 0).
    pub fn period(&self) -> f64 {
        if self.rate_per_hour > 0.0 {
            3600.0 / self.rate_per_hour
        } else {
            f64::INFINITY
        }
    }
}

/// Table lookup of the current drawn in `mode`.
pub fn mode_current(profile: &IcProfile, mode: Mode) -> f64 {
    profile.mode_current(mode)
}

/// Average current in A at `rate_per_hour` measurements.
pub fn average_current(profile: &IcProfile, rate_per_hour: f64) -> Result<f64, LoadError> {
    let f = profile.duty_fraction(rate_per_hour)?;
    // (1 - f)·a + f·b is exact at both f = 0 and f = 1.
    Ok((1.0 - f) * profile.i_ready + f * profile.i_measure)
}

/// Average power in W when supplied at `v`.
pub fn average_power(profile: &IcProfile, rate_per_hour: f64, v: f64) -> Result<f64, LoadError> {
    if v < profile.v_threshold {
        return Err(LoadError::UnderVoltage {
            v,
            threshold: profile.v_threshold,
        });
    }
    Ok(v * average_current(profile, rate_per_hour)?)
}

/// Energy in J drawn while awake for `seconds` at `rate_per_hour`.
pub fn active_energy(
    profile: &IcProfile,
    rate_per_hour: f64,
    seconds: f64,
    v: f64,
) -> Result<f64, LoadError> {
    Ok(v * average_current(profile, rate_per_hour)? * seconds)
}

/// Daily energy demand in J: awake inside the active window, asleep outside.
pub fn daily_energy(
    profile: &IcProfile,
    schedule: &MeasurementSchedule,
    v: f64,
) -> Result<f64, LoadError> {
    schedule.validate(profile)?;
    let awake = schedule.active_seconds();
    let asleep = SECONDS_PER_DAY - awake;
    Ok(active_energy(profile, schedule.rate_per_hour, awake, v)? + v * profile.i_sleep * asleep)
}
