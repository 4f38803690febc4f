//! Capacitor energy buffer.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StorageError {
    #[error("invalid capacitor: {0}")]
    InvalidModel(String),
    #[error("degenerate discharge points: {0}")]
    DegeneratePoints(String),
}

/// Self-discharge model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Leak {
    None,
    /// Constant leakage current in A.
    ConstantCurrent(f64),
    /// Parallel resistance in Ω.
    Resistance(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacitorModel {
    /// Farads.
    pub capacitance: f64,
    /// Clamp voltage in V.
    pub v_max: f64,
    pub leak: Leak,
}

impl CapacitorModel {
    pub fn new(capacitance: f64, v_max: f64, leak: Leak) -> Result<Self, StorageError> {
        let m = Self {
            capacitance,
            v_max,
            leak,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), StorageError> {
        let bad = |m: &str| Err(StorageError::InvalidModel(m.to_string()));
        if !(self.capacitance > 0.0 && self.capacitance.is_finite()) {
            return bad("capacitance must be > 0");
        }
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return bad("v_max must be > 0");
        }
        match self.leak {
            Leak::None => {}
            Leak::ConstantCurrent(i) if !(i > 0.0 && i.is_finite()) => {
                return bad("leak current must be > 0 (use Leak::None for no leak)")
            }
            Leak::Resistance(r) if !(r > 0.0) => return bad("leak resistance must be > 0"),
            _ => {}
        }
        Ok(())
    }

    pub fn stored_energy(&self, v: f64) -> f64 {
        stored_energy(self.capacitance, v)
    }
}

/// Capacitor voltage at time `t` (both SI).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeState {
    pub v: f64,
    pub t: f64,
}

/// ½·C·V² in J.
pub fn stored_energy(c: f64, v: f64) -> f64 {
    0.5 * c * v * v
}

/// Energy released discharging from `v_hi` to `v_lo`.
pub fn usable_energy(c: f64, v_hi: f64, v_lo: f64) -> f64 {
    0.5 * c * (v_hi * v_hi - v_lo * v_lo)
}

pub fn leak_current(model: &CapacitorModel, v: f64) -> f64 {
    match model.leak {
        Leak::None => 0.0,
        Leak::ConstantCurrent(i) => i,
        Leak::Resistance(r) => v / r,
    }
}

/// One explicit-Euler step with net charging current `i_net` (A, charging
/// positive); the voltage is clamped to `[0, v_max]`.
pub fn step(state: ChargeState, model: &CapacitorModel, i_net: f64, dt: f64) -> ChargeState {
    let v = (state.v + i_net * dt / model.capacitance).clamp(0.0, model.v_max);
    ChargeState { v, t: state.t + dt }
}

/// Least-squares leak resistance for `v(t) = v0·exp(-t/(R·C))`.
///
/// Fits `k = 1/(R·C)` to `ln(v/v0) = -k·t` through the origin, so
/// `k = -Σ t·ln(v/v0) / Σ t²`.
pub fn fit_leak_resistance(c: f64, v0: f64, points: &[(f64, f64)]) -> Result<f64, StorageError> {
    if points.is_empty() {
        return Err(StorageError::DegeneratePoints("no points".into()));
    }
    if !(c > 0.0 && v0 > 0.0) {
        return Err(StorageError::DegeneratePoints(
            "capacitance and v0 must be > 0".into(),
        ));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for &(t, v) in points {
        if !(t > 0.0) {
            return Err(StorageError::DegeneratePoints(format!(
                "t = {t} must be > 0"
            )));
        }
        if !(v > 0.0 && v < v0) {
            return Err(StorageError::DegeneratePoints(format!(
                "v = {v} must lie in (0, {v0})"
            )));
        }
        num += t * (v / v0).ln();
        den += t * t;
    }
    let k = -num / den;
    Ok(1.0 / (k * c))
}
