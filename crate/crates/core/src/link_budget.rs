//! UHF RFID link budget in free space.
//!
//! Read range is the smaller of two limits:
//!
//! - forward: the tag must receive at least its wake-up sensitivity,
//!   `eirp + G_tag + 10·log10(τ) - L_pol - FSPL(d) >= S_tag`;
//! - reverse: the backscattered carrier must reach the reader above its
//!   sensitivity, `eirp + 2·G_tag + G_reader - L_mod - 2·FSPL(d) >= S_reader`.
//!
//! Both solve in closed form because `FSPL(d) = 20·log10(4πd/λ)`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::consts::SPEED_OF_LIGHT;
use crate::numfmt::{self, CsvError};

/// US ISM operating band in Hz.
pub const US_UHF_BAND: (f64, f64) = (902e6, 928e6);

/// Span of a wideband threshold sweep in Hz.
pub const SWEEP_BAND: (f64, f64) = (850e6, 950e6);

pub const SWEEP_CSV_HEADER: &str = "frequency_hz,threshold_dbm";
pub const RANGE_CSV_HEADER: &str = "frequency_hz,range_m";

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("distance must be > 0, got {0} m")]
    NonpositiveDistance(f64),
    #[error("power transmission coefficient is zero")]
    ZeroTau,
    #[error("invalid link configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid threshold sweep: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Csv(#[from] CsvError),
}

/// Reader, tag and regulatory RF parameters (dB units, frequency in Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub eirp_dbm: f64,
    pub reader_antenna_gain_dbi: f64,
    pub tag_gain_dbi: f64,
    /// Power transmission coefficient between tag antenna and IC, in [0, 1].
    pub tau: f64,
    pub polarization_loss_db: f64,
    pub modulation_loss_db: f64,
    pub reader_sensitivity_dbm: f64,
    pub frequency_hz: f64,
}

impl Default for LinkConfig {
    /// Prototype setup at 915 MHz: 36 dBm EIRP cap, 8.5 dBi circular reader
    /// antenna (3 dB loss onto a linear tag), -84 dBm reader sensitivity and
    /// an effective tag gain calibrated so the passive tag reads at ≈0.8 m.
    fn default() -> Self {
        Self {
            eirp_dbm: 36.0,
            reader_antenna_gain_dbi: 8.5,
            tag_gain_dbi: -11.56,
            tau: 1.0,
            polarization_loss_db: 3.0,
            modulation_loss_db: 5.0,
            reader_sensitivity_dbm: -84.0,
            frequency_hz: 915e6,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<(), LinkError> {
        let bad = |m: &str| Err(LinkError::InvalidConfig(m.to_string()));
        if !(0.0..=1.0).contains(&self.tau) {
            return bad("tau must lie in [0, 1]");
        }
        if !(self.frequency_hz > 0.0) {
            return bad("frequency must be > 0");
        }
        if self.polarization_loss_db < 0.0 || self.modulation_loss_db < 0.0 {
            return bad("losses must be >= 0 dB");
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        wavelength(self.frequency_hz)
    }

    pub fn in_us_band(&self) -> bool {
        (US_UHF_BAND.0..=US_UHF_BAND.1).contains(&self.frequency_hz)
    }

    /// Copy with `tag_gain_dbi` chosen so the forward-limited range at
    /// `sensitivity_dbm` equals `range_m`.
    pub fn with_forward_range(
        &self,
        sensitivity_dbm: f64,
        range_m: f64,
    ) -> Result<Self, LinkError> {
        if !(range_m > 0.0) {
            return Err(LinkError::NonpositiveDistance(range_m));
        }
        if self.tau == 0.0 {
            return Err(LinkError::ZeroTau);
        }
        let needed = fspl_db(self.frequency_hz, range_m);
        let tag_gain_dbi = needed + sensitivity_dbm - self.eirp_dbm - 10.0 * self.tau.log10()
            + self.polarization_loss_db;
        Ok(Self {
            tag_gain_dbi,
            ..self.clone()
        })
    }
}

pub fn wavelength(frequency_hz: f64) -> f64 {
    SPEED_OF_LIGHT / frequency_hz
}

/// Free-space path loss `20·log10(4πd/λ)` in dB.
pub fn fspl_db(frequency_hz: f64, d: f64) -> f64 {
    20.0 * (4.0 * PI * d / wavelength(frequency_hz)).log10()
}

/// Received power in dBm at distance `d` m.
pub fn friis_received_power(
    eirp_dbm: f64,
    g_rx_dbi: f64,
    frequency_hz: f64,
    d: f64,
) -> Result<f64, LinkError> {
    if !(d > 0.0) {
        return Err(LinkError::NonpositiveDistance(d));
    }
    Ok(eirp_dbm + g_rx_dbi - fspl_db(frequency_hz, d))
}

/// Largest distance at which the tag still receives `sensitivity_dbm`.
pub fn forward_limited_range(cfg: &LinkConfig, sensitivity_dbm: f64) -> Result<f64, LinkError> {
    if cfg.tau == 0.0 {
        return Err(LinkError::ZeroTau);
    }
    let margin = cfg.eirp_dbm + cfg.tag_gain_dbi + 10.0 * cfg.tau.log10()
        - cfg.polarization_loss_db
        - sensitivity_dbm;
    Ok(cfg.wavelength() / (4.0 * PI) * 10f64.powf(margin / 20.0))
}

/// Largest distance at which the reader still decodes the backscatter.
pub fn reverse_limited_range(cfg: &LinkConfig) -> f64 {
    let margin = cfg.eirp_dbm + 2.0 * cfg.tag_gain_dbi + cfg.reader_antenna_gain_dbi
        - cfg.modulation_loss_db
        - cfg.reader_sensitivity_dbm;
    cfg.wavelength() / (4.0 * PI) * 10f64.powf(margin / 40.0)
}

/// Two-way power at the reader in dBm for a tag at `d` m.
pub fn reverse_received_power(cfg: &LinkConfig, d: f64) -> Result<f64, LinkError> {
    if !(d > 0.0) {
        return Err(LinkError::NonpositiveDistance(d));
    }
    Ok(
        cfg.eirp_dbm + 2.0 * cfg.tag_gain_dbi + cfg.reader_antenna_gain_dbi
            - cfg.modulation_loss_db
            - 2.0 * fspl_db(cfg.frequency_hz, d),
    )
}

/// `min(forward, reverse)` range for an IC wake sensitivity.
pub fn read_range(cfg: &LinkConfig, ic_sensitivity_dbm: f64) -> Result<f64, LinkError> {
    Ok(forward_limited_range(cfg, ic_sensitivity_dbm)?.min(reverse_limited_range(cfg)))
}

/// Forward-limited range gain from improving the wake sensitivity.
pub fn range_ratio(sens_passive_dbm: f64, sens_assisted_dbm: f64) -> f64 {
    10f64.powf((sens_passive_dbm - sens_assisted_dbm) / 20.0)
}

/// Threshold transmit power per frequency measured at a reference distance.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSweep {
    points: Vec<(f64, f64)>,
    reference_distance: f64,
}

impl ThresholdSweep {
    pub fn new(points: Vec<(f64, f64)>, reference_distance: f64) -> Result<Self, LinkError> {
        if points.is_empty() {
            return Err(LinkError::InvalidSweep("no points".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(LinkError::InvalidSweep(
                "frequencies must be strictly increasing".into(),
            ));
        }
        if !(reference_distance > 0.0) {
            return Err(LinkError::NonpositiveDistance(reference_distance));
        }
        Ok(Self {
            points,
            reference_distance,
        })
    }

    /// Reads `frequency_hz,threshold_dbm` rows.
    pub fn from_csv(text: &str, reference_distance: f64) -> Result<Self, LinkError> {
        Self::new(
            numfmt::parse_xy_csv(text, SWEEP_CSV_HEADER)?,
            reference_distance,
        )
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn reference_distance(&self) -> f64 {
        self.reference_distance
    }

    /// Same sweep with every threshold shifted by `delta_db`.
    pub fn shifted(&self, delta_db: f64) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|&(f, p)| (f, p + delta_db))
                .collect(),
            reference_distance: self.reference_distance,
        }
    }
}

/// Converts threshold powers into ranges at the regulatory `eirp_max_dbm`.
pub fn sweep_to_range(sweep: &ThresholdSweep, eirp_max_dbm: f64) -> Vec<(f64, f64)> {
    sweep
        .points
        .iter()
        .map(|&(f, thr)| {
            (
                f,
                sweep.reference_distance * 10f64.powf((eirp_max_dbm - thr) / 20.0),
            )
        })
        .collect()
}

pub fn ranges_to_csv(ranges: &[(f64, f64)]) -> String {
    numfmt::write_xy_csv(RANGE_CSV_HEADER, ranges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bare(sensitivity_reader: f64) -> LinkConfig {
        LinkConfig {
            eirp_dbm: 36.0,
            reader_antenna_gain_dbi: 8.5,
            tag_gain_dbi: 2.0,
            tau: 1.0,
            polarization_loss_db: 0.0,
            modulation_loss_db: 5.0,
            reader_sensitivity_dbm: sensitivity_reader,
            frequency_hz: 915e6,
        }
    }

    #[test]
    fn friis_examples() {
        let p1 = friis_received_power(36.0, 2.0, 915e6, 1.0).unwrap();
        assert!((p1 - 6.32).abs() < 0.005, "{p1}");
        assert!((fspl_db(915e6, 1.0) - 31.68).abs() < 0.005);
        let p2 = friis_received_power(36.0, 2.0, 915e6, 2.0).unwrap();
        assert!((p1 - p2 - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!((p1 - p2 - 6.0206).abs() < 1e-4);
        let d0 = wavelength(915e6) / (4.0 * PI);
        assert!((friis_received_power(36.0, 2.0, 915e6, d0).unwrap() - 38.0).abs() < 1e-12);
        assert_eq!(
            friis_received_power(36.0, 2.0, 915e6, 0.0),
            Err(LinkError::NonpositiveDistance(0.0))
        );
    }

    #[test]
    fn forward_examples() {
        let cfg = bare(-84.0);
        let passive = forward_limited_range(&cfg, -8.3).unwrap();
        assert!((passive - 5.38).abs() < 0.01, "{passive}");
        let assisted = forward_limited_range(&cfg, -22.0).unwrap();
        assert!((assisted - 26.05).abs() < 0.05, "{assisted}");
        assert!((assisted / passive - range_ratio(-8.3, -22.0)).abs() < 1e-12);
        let edge = forward_limited_range(&cfg, 38.0).unwrap();
        assert!((edge - cfg.wavelength() / (4.0 * PI)).abs() < 1e-15);
        let dead = LinkConfig { tau: 0.0, ..cfg };
        assert_eq!(forward_limited_range(&dead, -8.3), Err(LinkError::ZeroTau));
    }

    #[test]
    fn reverse_against_bisection() {
        let cfg = bare(-84.0);
        let closed = reverse_limited_range(&cfg);
        let (mut lo, mut hi) = (1e-3, 1e4);
        while hi - lo > 1e-6 {
            let mid = 0.5 * (lo + hi);
            if reverse_received_power(&cfg, mid).unwrap() >= cfg.reader_sensitivity_dbm {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((closed - lo).abs() < 1e-3, "{closed} vs {lo}");
        let better = bare(-96.0);
        let ratio = reverse_limited_range(&better) / closed;
        assert!((ratio - 10f64.powf(0.3)).abs() < 1e-12);
        let lossy = LinkConfig {
            modulation_loss_db: f64::INFINITY,
            ..cfg
        };
        assert_eq!(reverse_limited_range(&lossy), 0.0);
    }

    #[test]
    fn read_range_saturates_on_reverse_link() {
        let mut cfg = bare(-84.0);
        cfg.reader_sensitivity_dbm = -60.0;
        let rev = reverse_limited_range(&cfg);
        let fwd = forward_limited_range(&cfg, -22.0).unwrap();
        assert!(rev < fwd);
        assert_eq!(read_range(&cfg, -22.0).unwrap(), rev);
    }

    #[test]
    fn ratio_examples() {
        assert!((range_ratio(-8.3, -22.0) - 4.84).abs() < 0.005);
        assert_eq!(range_ratio(-10.0, -10.0), 1.0);
        assert!((range_ratio(-8.3, -31.0) - 13.65).abs() < 0.01);
    }

    #[test]
    fn calibrated_default() {
        let cfg = LinkConfig::default();
        cfg.validate().unwrap();
        assert!(cfg.in_us_band());
        let passive = read_range(&cfg, -8.3).unwrap();
        let assisted = read_range(&cfg, -22.0).unwrap();
        assert!((passive - 0.8).abs() < 0.005, "{passive}");
        assert!((assisted - 3.87).abs() < 0.02, "{assisted}");
        let exact = cfg.with_forward_range(-8.3, 0.8).unwrap();
        assert!((forward_limited_range(&exact, -8.3).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn sweep_conversion() {
        let sweep = ThresholdSweep::new(vec![(900e6, 20.0), (910e6, 16.0)], 0.33).unwrap();
        let r = sweep_to_range(&sweep, 20.0);
        assert!((r[0].1 - 0.33).abs() < 1e-15);
        let r = sweep_to_range(&sweep, 36.0);
        assert!((r[1].1 - 3.3).abs() < 1e-12);
        assert!(ThresholdSweep::new(vec![(9e8, 1.0), (9e8, 2.0)], 1.0).is_err());
        assert!(ThresholdSweep::new(vec![(9e8, 1.0)], 0.0).is_err());
    }

    #[test]
    fn sweep_csv() {
        let sweep =
            ThresholdSweep::from_csv("frequency_hz,threshold_dbm\n8.5e8,18\n9.5e8,17.5\n", 1.0)
                .unwrap();
        assert_eq!(sweep.points().len(), 2);
        let csv = ranges_to_csv(&sweep_to_range(&sweep, 18.0));
        assert_eq!(csv, "frequency_hz,range_m\n8.5e8,1\n9.5e8,1.05925\n");
    }
}
