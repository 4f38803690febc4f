//! The perovskite PV-RFID temperature-sensor prototype as ready-made models.

use crate::ic_load::{IcProfile, MeasurementSchedule};
use crate::pv_model::{self, DiodeModel};
use crate::simulator::{LightProfile, Scenario};
use crate::storage::{self, CapacitorModel, Leak};

/// Module short-circuit current density over the active area, mA/cm².
pub const JSC_MA_CM2: f64 = 3.7;
/// Module open-circuit voltage (four cells in series), V.
pub const VOC: f64 = 4.3;
pub const FILL_FACTOR: f64 = 0.6;
pub const ACTIVE_AREA_CM2: f64 = 1.06;
pub const SERIES_CELLS: u32 = 4;
/// Efficiency quoted for the module; Jsc·Voc·FF gives 9.55 % instead.
pub const QUOTED_EFFICIENCY: f64 = 0.101;

/// Buffer capacitor, F.
pub const CAPACITANCE: f64 = 1.0;
/// Observed discharge: 3 V to 2 V in 5000 s.
pub const DISCHARGE_POINT: (f64, f64) = (5000.0, 2.0);
/// Charging current implied by reaching 1.5 V in about 300 s into 1 F.
pub const CHARGE_CURRENT: f64 = CAPACITANCE * 1.5 / 300.0;
/// Measurement rate used for the demand example, per hour.
pub const MEASUREMENT_RATE: f64 = 20_000.0;

pub fn pv_module() -> DiodeModel {
    pv_model::fit_single_diode(JSC_MA_CM2, VOC, FILL_FACTOR, ACTIVE_AREA_CM2, SERIES_CELLS)
        .expect("prototype parameters are feasible")
}

/// Parallel leak resistance fitted to the single discharge point.
pub fn leak_resistance() -> f64 {
    storage::fit_leak_resistance(CAPACITANCE, 3.0, &[DISCHARGE_POINT])
        .expect("discharge point is valid")
}

pub fn capacitor() -> CapacitorModel {
    CapacitorModel::new(CAPACITANCE, 3.0, Leak::Resistance(leak_resistance()))
        .expect("prototype capacitor is valid")
}

/// Prototype node starting empty, PV current calibrated to
/// [`CHARGE_CURRENT`], no light. Callers set the light profile.
pub fn charge_scenario(duration: f64) -> Scenario {
    let pv = pv_module();
    Scenario {
        photocurrent_scale: CHARGE_CURRENT / pv.isc(),
        pv,
        cap: capacitor(),
        ic: IcProfile::default(),
        schedule: MeasurementSchedule::continuous(MEASUREMENT_RATE),
        light: LightProfile::dark(),
        duration,
        dt: 1.0,
        initial_v: 0.0,
    }
}
