//! Models for photovoltaic-powered RF backscatter (RFID) sensor nodes.
//!
//! The crate couples four component models and two analysis layers:
//!
//! - [`pv_model`]: single-diode PV source fitted to (Jsc, Voc, FF), series
//!   stacking, EQE spectral integration and simple harvest estimates.
//! - [`ic_load`]: per-mode IC currents and measurement-rate dependent demand.
//! - [`storage`]: capacitor buffer arithmetic, leakage models, Euler stepping.
//! - [`link_budget`]: forward/reverse limited UHF read range.
//! - [`simulator`]: time-stepped PV + capacitor + IC coupling.
//! - [`sizing`]: persistence surfaces and PV-area / capacitance search.
//! - [`presets`]: the PV-RFID temperature-sensor prototype as ready-made models.
//!
//! All models are immutable values and every operation is a pure function, so
//! anything here may be evaluated from several threads at once.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod consts;
pub mod ic_load;
pub mod link_budget;
pub mod numfmt;
pub mod presets;
pub mod pv_model;
pub mod simulator;
pub mod sizing;
pub mod storage;

pub use ic_load::{IcProfile, LoadError, MeasurementSchedule, Mode};
pub use link_budget::{LinkConfig, LinkError, ThresholdSweep};
pub use pv_model::{DiodeModel, PvError, SpectralResponse, Spectrum};
pub use simulator::{Availability, LightProfile, Scenario, SimError, TraceRecord};
pub use sizing::{Objective, SizingError, SizingRequest, SizingResult};
pub use storage::{CapacitorModel, ChargeState, Leak, StorageError};
