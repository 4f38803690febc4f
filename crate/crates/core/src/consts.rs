//! Physical constants (CODATA 2018 exact values where defined).

/// Elementary charge in C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Planck constant in J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Cell temperature used by the diode law (25 °C).
pub const CELL_TEMPERATURE_K: f64 = 298.15;

/// Seconds in a day.
pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// h·c/q expressed in nm·eV, for bandgap to wavelength conversion.
pub fn photon_nm_ev() -> f64 {
    PLANCK * SPEED_OF_LIGHT / ELEMENTARY_CHARGE * 1e9
}

/// Thermal voltage kT/q in volts.
pub fn thermal_voltage(temperature_k: f64) -> f64 {
    BOLTZMANN * temperature_k / ELEMENTARY_CHARGE
}
