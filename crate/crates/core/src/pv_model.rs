//! Parametric photovoltaic source.
//!
//! The IV curve is the ideal single-diode law without series or shunt
//! resistance:
//!
//! ```text
//! I(V) = Isc - I0 * (exp(V / (Ns * n * kT/q)) - 1),   I0 = Isc / (exp(Voc / (Ns * n * kT/q)) - 1)
//! ```
//!
//! With only (Jsc, Voc, FF) known, the ideality factor `n` is the single free
//! parameter and is chosen so that the curve's maximum power point reproduces
//! the requested fill factor.

use std::sync::OnceLock;

use thiserror::Error;

use crate::consts::{self, CELL_TEMPERATURE_K, ELEMENTARY_CHARGE, PLANCK, SPEED_OF_LIGHT};
use crate::numfmt::{self, CsvError};

/// Ideality search bracket for [`fit_single_diode`].
pub const IDEALITY_BRACKET: (f64, f64) = (0.5, 10.0);

/// Header of spectrum and EQE files.
pub const SPECTRUM_CSV_HEADER: &str = "wavelength_nm,value";

#[derive(Debug, Error, PartialEq)]
pub enum PvError {
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "fill factor {ff} unreachable for ideality in [{lo}, {hi}] (reachable range {ff_min:.4}..{ff_max:.4})"
    )]
    InfeasibleFillFactor {
        ff: f64,
        lo: f64,
        hi: f64,
        ff_min: f64,
        ff_max: f64,
    },
    #[error("invalid spectral samples: {0}")]
    InvalidSpectrum(String),
    #[error("spectral supports do not overlap")]
    EmptyOverlap,
    #[error(transparent)]
    Csv(#[from] CsvError),
}

/// Single-diode PV device (one cell or a series string).
#[derive(Debug, Clone, PartialEq)]
pub struct DiodeModel {
    isc: f64,
    voc: f64,
    n_ideality: f64,
    temperature: f64,
    n_series: u32,
    area_cm2: f64,
}

impl DiodeModel {
    /// `isc` in A, `voc` in V (whole string), `area_cm2` is the active area.
    pub fn new(
        isc: f64,
        voc: f64,
        n_ideality: f64,
        temperature: f64,
        n_series: u32,
        area_cm2: f64,
    ) -> Result<Self, PvError> {
        let bad = |m: &str| Err(PvError::InvalidParameter(m.to_string()));
        if !(isc >= 0.0 && isc.is_finite()) {
            return bad("isc must be finite and >= 0");
        }
        if !(voc > 0.0 && voc.is_finite()) {
            return bad("voc must be finite and > 0");
        }
        if !(n_ideality > 0.0 && n_ideality.is_finite()) {
            return bad("ideality must be > 0");
        }
        if !(temperature > 0.0) {
            return bad("temperature must be > 0 K");
        }
        if n_series == 0 {
            return bad("series cell count must be >= 1");
        }
        if !(area_cm2 > 0.0 && area_cm2.is_finite()) {
            return bad("area must be > 0");
        }
        Ok(Self {
            isc,
            voc,
            n_ideality,
            temperature,
            n_series,
            area_cm2,
        })
    }

    pub fn isc(&self) -> f64 {
        self.isc
    }

    pub fn voc(&self) -> f64 {
        self.voc
    }

    pub fn n_ideality(&self) -> f64 {
        self.n_ideality
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn n_series(&self) -> u32 {
        self.n_series
    }

    pub fn area_cm2(&self) -> f64 {
        self.area_cm2
    }

    /// Short-circuit current density over the active area, mA/cm².
    pub fn jsc_ma_cm2(&self) -> f64 {
        self.isc * 1e3 / self.area_cm2
    }

    /// Voltage scale Ns·n·kT/q of the exponential.
    fn scale(&self) -> f64 {
        self.n_series as f64 * self.n_ideality * consts::thermal_voltage(self.temperature)
    }

    /// Normalised open-circuit voltage Voc / (Ns·n·kT/q).
    fn reduced_voc(&self) -> f64 {
        self.voc / self.scale()
    }

    /// Saturation current I0 (may underflow to zero for very large Voc/scale).
    pub fn saturation_current(&self) -> f64 {
        self.isc / self.reduced_voc().exp_m1()
    }

    /// Same device with the active area (and photocurrent) scaled to `area_cm2`.
    pub fn with_area(&self, area_cm2: f64) -> Result<Self, PvError> {
        Self::new(
            self.isc * area_cm2 / self.area_cm2,
            self.voc,
            self.n_ideality,
            self.temperature,
            self.n_series,
            area_cm2,
        )
    }

    /// Terminal current at voltage `v`; negative above Voc.
    pub fn current(&self, v: f64) -> f64 {
        self.isc * (1.0 - diode_ratio(v / self.scale(), self.reduced_voc()))
    }

    /// dI/dV at `v`.
    pub fn current_slope(&self, v: f64) -> f64 {
        let s = self.scale();
        let b = self.reduced_voc();
        -self.isc * (v / s - b).exp() / (-(-b).exp_m1()) / s
    }

    /// Maximum power point `(v_mpp, i_mpp, p_mpp)`.
    pub fn mpp(&self) -> (f64, f64, f64) {
        let b = self.reduced_voc();
        let a = reduced_mpp_voltage(b);
        let v = a * self.scale();
        let i = self.current(v);
        (v, i, v * i)
    }

    /// Fill factor of the curve; depends only on Voc/(Ns·n·kT/q), so it is
    /// defined even when `isc == 0`.
    pub fn fill_factor(&self) -> f64 {
        reduced_fill_factor(self.reduced_voc())
    }

    /// Power conversion efficiency at the MPP under `irradiance_mw_cm2`.
    pub fn efficiency(&self, irradiance_mw_cm2: f64) -> f64 {
        let (_, _, p) = self.mpp();
        p / (self.area_cm2 * irradiance_mw_cm2 * 1e-3)
    }
}

/// `(exp(a) - 1) / (exp(b) - 1)` evaluated without overflow for large `b`.
fn diode_ratio(a: f64, b: f64) -> f64 {
    (a - b).exp() * (-(-a).exp_m1()) / (-(-b).exp_m1())
}

/// Root of d(V·I)/dV in reduced units: solves
/// `1 - exp(a - b) * (1 - exp(-a) + a) / (1 - exp(-b)) = 0` for `a` in (0, b).
fn reduced_mpp_voltage(b: f64) -> f64 {
    let g = |a: f64| 1.0 - (a - b).exp() * (a - (-a).exp_m1()) / (-(-b).exp_m1());
    let (mut lo, mut hi) = (0.0_f64, b);
    // g(0) = 1 > 0, g(b) = -b / (1 - exp(-b)) < 0, g strictly decreasing.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn reduced_fill_factor(b: f64) -> f64 {
    let a = reduced_mpp_voltage(b);
    a * (1.0 - diode_ratio(a, b)) / b
}

/// Fits the ideality factor so the model's fill factor equals `ff`.
///
/// `jsc_ma_cm2` is normalised to `area_cm2`, so `isc = jsc * area`. `voc` is
/// the string voltage across `n_series` cells. Temperature is fixed at
/// 298.15 K.
pub fn fit_single_diode(
    jsc_ma_cm2: f64,
    voc: f64,
    ff: f64,
    area_cm2: f64,
    n_series: u32,
) -> Result<DiodeModel, PvError> {
    if !(ff > 0.0 && ff < 1.0) {
        return Err(PvError::InvalidParameter(
            "fill factor must be in (0, 1)".into(),
        ));
    }
    if !(jsc_ma_cm2 > 0.0) {
        return Err(PvError::InvalidParameter("jsc must be > 0".into()));
    }
    let isc = jsc_ma_cm2 * area_cm2 * 1e-3;
    let probe = DiodeModel::new(isc, voc, 1.0, CELL_TEMPERATURE_K, n_series, area_cm2)?;
    let cell_scale = n_series as f64 * consts::thermal_voltage(CELL_TEMPERATURE_K);
    let ff_of = |n: f64| reduced_fill_factor(voc / (n * cell_scale));

    let (lo, hi) = IDEALITY_BRACKET;
    let (ff_max, ff_min) = (ff_of(lo), ff_of(hi));
    if ff > ff_max || ff < ff_min {
        return Err(PvError::InfeasibleFillFactor {
            ff,
            lo,
            hi,
            ff_min,
            ff_max,
        });
    }
    // Fill factor falls monotonically as ideality grows.
    let (mut n_lo, mut n_hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (n_lo + n_hi);
        if mid <= n_lo || mid >= n_hi {
            break;
        }
        if ff_of(mid) > ff {
            n_lo = mid;
        } else {
            n_hi = mid;
        }
    }
    DiodeModel::new(
        probe.isc,
        voc,
        0.5 * (n_lo + n_hi),
        CELL_TEMPERATURE_K,
        n_series,
        area_cm2,
    )
}

/// Standalone form of [`DiodeModel::current`].
pub fn iv_current(model: &DiodeModel, v: f64) -> f64 {
    model.current(v)
}

/// Standalone form of [`DiodeModel::mpp`].
pub fn mpp(model: &DiodeModel) -> (f64, f64, f64) {
    model.mpp()
}

/// Stacks `n` identical cells in series: Voc and cell count scale by `n`,
/// Isc is unchanged and the active area is the sum of the cell areas.
pub fn series_module(cell: &DiodeModel, n: u32) -> Result<DiodeModel, PvError> {
    if n == 0 {
        return Err(PvError::InvalidParameter(
            "series count must be >= 1".into(),
        ));
    }
    DiodeModel::new(
        cell.isc,
        cell.voc * n as f64,
        cell.n_ideality,
        cell.temperature,
        cell.n_series * n,
        cell.area_cm2 * n as f64,
    )
}

/// Harvested power in W for a derated efficiency model.
///
/// `area_cm2` in cm², `irradiance_mw_cm2` in mW/cm² (1 sun = 100).
pub fn harvest_power(efficiency: f64, area_cm2: f64, irradiance_mw_cm2: f64) -> f64 {
    efficiency * area_cm2 * irradiance_mw_cm2 * 1e-3
}

fn check_samples(samples: &[(f64, f64)]) -> Result<(), PvError> {
    if samples.is_empty() {
        return Err(PvError::InvalidSpectrum("no samples".into()));
    }
    if samples
        .iter()
        .any(|(w, y)| !w.is_finite() || !y.is_finite())
    {
        return Err(PvError::InvalidSpectrum("non-finite sample".into()));
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(PvError::InvalidSpectrum(
            "wavelengths must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Piecewise-linear interpolation; `x` must lie inside the sample support.
fn interp(samples: &[(f64, f64)], x: f64) -> f64 {
    let idx = samples.partition_point(|&(w, _)| w < x);
    if idx == 0 {
        return samples[0].1;
    }
    if idx >= samples.len() {
        return samples[samples.len() - 1].1;
    }
    let (x1, y1) = samples[idx];
    if x1 == x {
        return y1;
    }
    let (x0, y0) = samples[idx - 1];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Spectral irradiance in W·m⁻²·nm⁻¹ sampled on a wavelength grid in nm.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    samples: Vec<(f64, f64)>,
    label: String,
}

impl Spectrum {
    pub fn new(samples: Vec<(f64, f64)>, label: impl Into<String>) -> Result<Self, PvError> {
        check_samples(&samples)?;
        if samples.iter().any(|&(_, e)| e < 0.0) {
            return Err(PvError::InvalidSpectrum("irradiance must be >= 0".into()));
        }
        Ok(Self {
            samples,
            label: label.into(),
        })
    }

    pub fn from_csv(text: &str, label: impl Into<String>) -> Result<Self, PvError> {
        Self::new(numfmt::parse_xy_csv(text, SPECTRUM_CSV_HEADER)?, label)
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Same spectrum with every irradiance multiplied by `factor` (≥ 0).
    pub fn scaled(&self, factor: f64) -> Result<Self, PvError> {
        Self::new(
            self.samples.iter().map(|&(w, e)| (w, e * factor)).collect(),
            self.label.clone(),
        )
    }

    /// Trapezoidal integral of the irradiance, W/m².
    pub fn total_irradiance(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
            .sum()
    }
}

/// External quantum efficiency curve with a bandgap cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResponse {
    samples: Vec<(f64, f64)>,
    bandgap_cutoff_nm: f64,
}

impl SpectralResponse {
    pub fn new(samples: Vec<(f64, f64)>, bandgap_cutoff_nm: f64) -> Result<Self, PvError> {
        check_samples(&samples)?;
        if !(bandgap_cutoff_nm > 0.0) {
            return Err(PvError::InvalidSpectrum("cutoff must be > 0 nm".into()));
        }
        if samples.iter().any(|&(_, q)| !(0.0..=1.0).contains(&q)) {
            return Err(PvError::InvalidSpectrum("EQE must lie in [0, 1]".into()));
        }
        if samples
            .iter()
            .any(|&(w, q)| w > bandgap_cutoff_nm && q != 0.0)
        {
            return Err(PvError::InvalidSpectrum(
                "EQE must vanish beyond the bandgap cutoff".into(),
            ));
        }
        Ok(Self {
            samples,
            bandgap_cutoff_nm,
        })
    }

    pub fn from_csv(text: &str, bandgap_cutoff_nm: f64) -> Result<Self, PvError> {
        Self::new(
            numfmt::parse_xy_csv(text, SPECTRUM_CSV_HEADER)?,
            bandgap_cutoff_nm,
        )
    }

    /// Constant EQE `value` between `lo_nm` and `hi_nm`.
    pub fn flat(
        value: f64,
        lo_nm: f64,
        hi_nm: f64,
        bandgap_cutoff_nm: f64,
    ) -> Result<Self, PvError> {
        Self::new(vec![(lo_nm, value), (hi_nm, value)], bandgap_cutoff_nm)
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn bandgap_cutoff_nm(&self) -> f64 {
        self.bandgap_cutoff_nm
    }
}

/// Absorption edge wavelength in nm for a bandgap in eV.
pub fn cutoff_from_bandgap(bandgap_ev: f64) -> f64 {
    consts::photon_nm_ev() / bandgap_ev
}

/// Short-circuit current density in mA/cm² from an EQE curve and a spectrum.
///
/// Integrates `q * EQE(λ) * E(λ) * λ / (h c)` with the trapezoid rule on the
/// union of both wavelength grids inside their common support (capped at the
/// bandgap cutoff), interpolating each curve linearly.
pub fn jsc_from_eqe(eqe: &SpectralResponse, spectrum: &Spectrum) -> Result<f64, PvError> {
    let (e, s) = (&eqe.samples, &spectrum.samples);
    let lo = e[0].0.max(s[0].0);
    let hi = e[e.len() - 1]
        .0
        .min(s[s.len() - 1].0)
        .min(eqe.bandgap_cutoff_nm);
    if hi <= lo {
        return Err(PvError::EmptyOverlap);
    }

    let mut grid: Vec<f64> = e
        .iter()
        .chain(s.iter())
        .map(|&(w, _)| w)
        .filter(|&w| w > lo && w < hi)
        .collect();
    grid.push(lo);
    grid.push(hi);
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    // Photon flux density per nm: E·λ/(h c) with λ in metres.
    let integrand = |w: f64| interp(e, w) * interp(s, w) * w * 1e-9 / (PLANCK * SPEED_OF_LIGHT);
    let mut flux = 0.0;
    let mut prev = (grid[0], integrand(grid[0]));
    for &w in &grid[1..] {
        let y = integrand(w);
        flux += 0.5 * (prev.1 + y) * (w - prev.0);
        prev = (w, y);
    }
    // A/m² to mA/cm².
    Ok(ELEMENTARY_CHARGE * flux * 0.1)
}

/// Bundled AM1.5G global-tilt reference spectrum, 300–1200 nm at 5 nm.
pub fn am15g() -> &'static Spectrum {
    static AM15G: OnceLock<Spectrum> = OnceLock::new();
    AM15G.get_or_init(|| {
        Spectrum::from_csv(include_str!("../data/am15g.csv"), "AM1.5G")
            .expect("bundled AM1.5G table is well formed")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_module() -> DiodeModel {
        fit_single_diode(3.7, 4.3, 0.60, 1.06, 4).unwrap()
    }

    #[test]
    fn paper_module_endpoints() {
        let m = paper_module();
        assert!((m.isc() - 3.922e-3).abs() < 1e-12);
        assert!((m.current(0.0) - m.isc()).abs() <= 1e-12);
        assert!(m.current(4.3).abs() <= 1e-9);
        assert!(m.current(4.5) < 0.0);
    }

    #[test]
    fn paper_module_mpp() {
        let m = paper_module();
        let (v, i, p) = m.mpp();
        assert!((p - 0.6 * 4.3 * 3.922e-3).abs() / p < 1e-9, "p = {p}");
        assert!((2.8..=3.6).contains(&v), "v_mpp = {v}");
        assert!((v * i - p).abs() < 1e-15);
    }

    #[test]
    fn fitted_ideality_matches_scipy_reference() {
        // Independent brentq/minimize_scalar fit of the same law.
        let m = paper_module();
        assert!(
            (m.n_ideality() - 6.577_676_112).abs() < 1e-6,
            "{}",
            m.n_ideality()
        );
        let ideal = fit_single_diode(1.0, 1.0, 0.882, 1.0, 1).unwrap();
        assert!((ideal.n_ideality() - 1.0).abs() < 0.01);
        assert!((ideal.n_ideality() - 1.007_930_57).abs() < 1e-6);
    }

    #[test]
    fn infeasible_fill_factor() {
        let err = fit_single_diode(1.0, 0.1, 0.95, 1.0, 1).unwrap_err();
        assert!(matches!(err, PvError::InfeasibleFillFactor { .. }));
        assert!(fit_single_diode(1.0, 1.0, 1.2, 1.0, 1).is_err());
    }

    #[test]
    fn zero_photocurrent_has_no_power() {
        let m = DiodeModel::new(0.0, 1.0, 1.0, CELL_TEMPERATURE_K, 1, 1.0).unwrap();
        let (_, _, p) = m.mpp();
        assert_eq!(p, 0.0);
        assert_eq!(m.current(0.5), 0.0);
    }

    #[test]
    fn large_reduced_voc_does_not_overflow() {
        let m = DiodeModel::new(1e-3, 30.0, 0.5, CELL_TEMPERATURE_K, 1, 1.0).unwrap();
        assert_eq!(m.current(0.0), 1e-3);
        assert!(m.current(30.0).abs() < 1e-15);
        assert!(m.current(29.9).is_finite());
        assert!(m.fill_factor() > 0.95);
    }

    #[test]
    fn series_module_scales_voltage() {
        let cell = fit_single_diode(3.7, 1.075, 0.6, 0.265, 1).unwrap();
        let module = series_module(&cell, 4).unwrap();
        assert!((module.voc() - 4.3).abs() < 1e-12);
        assert_eq!(module.current(0.0), cell.current(0.0));
        assert_eq!(series_module(&cell, 1).unwrap(), cell);
        assert!((module.area_cm2() - 1.06).abs() < 1e-12);
        assert!(series_module(&cell, 0).is_err());
    }

    #[test]
    fn efficiency_from_summary_parameters() {
        let eta = paper_module().efficiency(100.0);
        assert!((eta - 0.0955).abs() < 5e-4, "eta = {eta}");
    }

    #[test]
    fn harvest_power_examples() {
        assert!((harvest_power(0.101, 1.06, 100.0) - 10.706e-3).abs() < 1e-9);
        assert_eq!(harvest_power(0.2, 3.0, 0.0), 0.0);
        // Irradiance implied by 30 uW from a 2 mm² cell at 23.7 %.
        let g = 30e-6 / harvest_power(0.237, 0.02, 1.0);
        assert!((g - 6.329).abs() < 1e-3);
    }

    #[test]
    fn monochromatic_line() {
        // 1 mW/cm² = 10 W/m² concentrated in a symmetric triangle at 500 nm.
        let s = Spectrum::new(vec![(499.0, 0.0), (500.0, 10.0), (501.0, 0.0)], "line").unwrap();
        let eqe = SpectralResponse::flat(1.0, 400.0, 700.0, 775.0).unwrap();
        let j = jsc_from_eqe(&eqe, &s).unwrap();
        let expected = ELEMENTARY_CHARGE * 10.0 * 500e-9 / (PLANCK * SPEED_OF_LIGHT) * 0.1;
        assert!((j - expected).abs() < 1e-12);
        assert!((j - 0.403).abs() < 1e-3);
    }

    #[test]
    fn zero_eqe_gives_zero() {
        let eqe = SpectralResponse::flat(0.0, 300.0, 1200.0, 1300.0).unwrap();
        assert_eq!(jsc_from_eqe(&eqe, am15g()).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_supports() {
        let eqe = SpectralResponse::flat(0.5, 1300.0, 1400.0, 1500.0).unwrap();
        assert_eq!(jsc_from_eqe(&eqe, am15g()), Err(PvError::EmptyOverlap));
    }

    #[test]
    fn flat_eqe_under_am15g() {
        // Frozen from an independent numpy trapezoid over the bundled table.
        let eqe = SpectralResponse::flat(0.7, 400.0, 750.0, cutoff_from_bandgap(1.6)).unwrap();
        let j = jsc_from_eqe(&eqe, am15g()).unwrap();
        assert!((j - 15.835_231_431_2).abs() / 15.835 < 0.005, "j = {j}");
    }

    #[test]
    fn spectral_response_validation() {
        assert!(SpectralResponse::new(vec![(500.0, 0.5), (800.0, 0.1)], 775.0).is_err());
        assert!(SpectralResponse::new(vec![(500.0, 1.5)], 775.0).is_err());
        assert!(SpectralResponse::new(vec![(500.0, 0.5), (400.0, 0.5)], 775.0).is_err());
        assert!(Spectrum::new(vec![(500.0, -1.0)], "bad").is_err());
        assert!((cutoff_from_bandgap(1.6) - 775.0).abs() < 0.2);
    }

    #[test]
    fn bundled_table_shape() {
        let s = am15g();
        assert_eq!(s.samples().len(), 181);
        assert_eq!(s.samples()[0].0, 300.0);
        assert_eq!(s.samples()[180].0, 1200.0);
        let total = s.total_irradiance();
        assert!((800.0..900.0).contains(&total), "total = {total}");
    }
}
