//! Flat `key = value` scenario configuration.
//!
//! Keys are dotted (`cap.capacitance_F`) and carry their unit in the suffix.
//! Every key has a default; the file only lists overrides.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Shipped defaults, with a comment per key naming the measurement it
/// reproduces.
pub const DEFAULTS_FILE: &str = include_str!("../data/defaults.conf");

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(u32),
    List(Vec<f64>),
    Word(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Num,
    Int,
    List,
    Word(&'static [&'static str]),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{}` on f64 is the shortest string that parses back exactly.
            Value::Num(x) => write!(f, "{x}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::List(xs) => {
                let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", parts.join(", "))
            }
            Value::Word(w) => f.write_str(w),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` has the wrong unit suffix, expected `{expected}`")]
    UnitMismatch {
        line: usize,
        key: String,
        expected: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

const OBJECTIVES: &[&str] = &["lexicographic", "weighted"];
const METRICS: &[&str] = &["energy_balance", "trace"];

const KEYS: &[(&str, Kind)] = &[
    ("pv.jsc_mA_cm2", Kind::Num),
    ("pv.voc_V", Kind::Num),
    ("pv.ff", Kind::Num),
    ("pv.area_cm2", Kind::Num),
    ("pv.n_series", Kind::Int),
    ("pv.efficiency", Kind::Num),
    ("pv.irradiance_mW_cm2", Kind::Num),
    ("pv.bandgap_eV", Kind::Num),
    ("pv.charge_current_mA", Kind::Num),
    ("ic.sleep_uA", Kind::Num),
    ("ic.ready_uA", Kind::Num),
    ("ic.measure_uA", Kind::Num),
    ("ic.t_measure_ms", Kind::Num),
    ("ic.v_threshold_V", Kind::Num),
    ("ic.v_max_V", Kind::Num),
    ("ic.sens_passive_dbm", Kind::Num),
    ("ic.sens_assisted_dbm", Kind::Num),
    ("ic.rate_per_h", Kind::Num),
    ("ic.window_s", Kind::List),
    ("cap.capacitance_F", Kind::Num),
    ("cap.v_max_V", Kind::Num),
    ("cap.leak_R_ohm", Kind::Num),
    ("cap.leak_uA", Kind::Num),
    ("link.eirp_dbm", Kind::Num),
    ("link.reader_gain_dbi", Kind::Num),
    ("link.tag_gain_dbi", Kind::Num),
    ("link.tau", Kind::Num),
    ("link.polarization_loss_dB", Kind::Num),
    ("link.modulation_loss_dB", Kind::Num),
    ("link.reader_sensitivity_dbm", Kind::Num),
    ("link.frequency_Hz", Kind::Num),
    ("link.sweep_distance_m", Kind::Num),
    ("sim.duration_s", Kind::Num),
    ("sim.dt_s", Kind::Num),
    ("sim.initial_V", Kind::Num),
    ("sim.light_on_s", Kind::Num),
    ("sim.intensity_suns", Kind::Num),
    ("sim.day_initial_V", Kind::Num),
    ("sim.day_light_on_s", Kind::Num),
    ("sim.day_intensity_suns", Kind::Num),
    ("sim.day_dt_s", Kind::Num),
    ("sizing.target", Kind::Num),
    ("sizing.area_grid_cm2", Kind::List),
    ("sizing.cap_grid_F", Kind::List),
    ("sizing.leak_grid_uA", Kind::List),
    ("sizing.metric", Kind::Word(METRICS)),
    ("sizing.objective", Kind::Word(OBJECTIVES)),
    ("sizing.cost_per_cm2", Kind::Num),
    ("sizing.cost_per_farad", Kind::Num),
];

fn kind_of(key: &str) -> Option<Kind> {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, kind)| *kind)
}

/// Unit suffixes recognised when reporting a key with the wrong unit.
const UNITS: &[&str] = &[
    "mA_cm2", "mW_cm2", "A_m2", "W_m2", "uA", "nA", "mA", "A", "pF", "nF", "uF", "mF", "F", "mV",
    "kV", "V", "ohm", "kohm", "Mohm", "dbm", "dBm", "dbi", "dBi", "dB", "Hz", "kHz", "MHz", "GHz",
    "mm", "cm", "m", "us", "ms", "s", "min", "h", "eV", "suns", "mm2", "cm2", "m2", "uW", "mW",
    "W",
];

/// Key without its trailing `_unit` part, if it has one.
fn stem(key: &str) -> &str {
    UNITS
        .iter()
        .filter_map(|u| key.strip_suffix(u)?.strip_suffix('_'))
        .max_by_key(|s| std::cmp::Reverse(s.len()))
        .unwrap_or(key)
}

fn unit_twin(key: &str) -> Option<&'static str> {
    let s = stem(key);
    KEYS.iter()
        .map(|(k, _)| *k)
        .find(|k| stem(k) == s && *k != key)
}

fn parse_num(raw: &str) -> Result<f64, String> {
    let x: f64 = raw
        .parse()
        .map_err(|_| format!("`{raw}` is not a number"))?;
    if !x.is_finite() {
        return Err(format!("`{raw}` is not finite"));
    }
    Ok(x)
}

fn parse_value(kind: Kind, raw: &str) -> Result<Value, String> {
    match kind {
        Kind::Num => parse_num(raw).map(Value::Num),
        Kind::Int => raw
            .parse::<u32>()
            .map(Value::Int)
            .map_err(|_| format!("`{raw}` is not a non-negative integer")),
        Kind::List => {
            if raw.is_empty() {
                return Ok(Value::List(Vec::new()));
            }
            raw.split(',')
                .map(|p| parse_num(p.trim()))
                .collect::<Result<_, _>>()
                .map(Value::List)
        }
        Kind::Word(allowed) => {
            if allowed.contains(&raw) {
                Ok(Value::Word(raw.to_string()))
            } else {
                Err(format!("`{raw}` is not one of {}", allowed.join(", ")))
            }
        }
    }
}

/// Reads `key = value` lines into `(line, key, value)` triples, rejecting
/// unknown keys and bad values.
fn parse_lines(text: &str) -> Result<Vec<(String, Value)>, ConfigError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Parse {
                line,
                msg: "expected `key = value`".into(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(kind) = kind_of(key) else {
            return Err(match unit_twin(key) {
                Some(expected) => ConfigError::UnitMismatch {
                    line,
                    key: key.to_string(),
                    expected: expected.to_string(),
                },
                None => ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                },
            });
        };
        let value = parse_value(kind, value).map_err(|msg| ConfigError::Parse {
            line,
            msg: format!("{key}: {msg}"),
        })?;
        out.push((key.to_string(), value));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, Value>,
}

impl Default for Config {
    fn default() -> Self {
        let mut values = BTreeMap::new();
        for (k, v) in parse_lines(DEFAULTS_FILE).expect("shipped defaults parse") {
            values.insert(k, v);
        }
        debug_assert_eq!(values.len(), KEYS.len());
        Self { values }
    }
}

impl Config {
    /// Defaults overridden by the lines of `text`. A key may appear once.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            // Map parsed entries back to their lines for duplicate reports.
            let content = raw.split('#').next().unwrap_or("").trim();
            if let Some((k, _)) = content.split_once('=') {
                if let Some(first) = seen.insert(k.trim().to_string(), idx + 1) {
                    return Err(ConfigError::Parse {
                        line: idx + 1,
                        msg: format!("`{}` already set on line {first}", k.trim()),
                    });
                }
            }
        }
        for (k, v) in parse_lines(text)? {
            cfg.values.insert(k, v);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: Value) -> Result<(), ConfigError> {
        if kind_of(key).is_none() {
            return Err(ConfigError::Invalid(format!("unknown key `{key}`")));
        }
        self.values.insert(key.to_string(), value);
        Ok(())
    }

    pub fn num(&self, key: &str) -> f64 {
        match self.values.get(key) {
            Some(Value::Num(x)) => *x,
            other => panic!("`{key}` is not a number: {other:?}"),
        }
    }

    pub fn int(&self, key: &str) -> u32 {
        match self.values.get(key) {
            Some(Value::Int(n)) => *n,
            other => panic!("`{key}` is not an integer: {other:?}"),
        }
    }

    pub fn list(&self, key: &str) -> &[f64] {
        match self.values.get(key) {
            Some(Value::List(xs)) => xs,
            other => panic!("`{key}` is not a list: {other:?}"),
        }
    }

    pub fn word(&self, key: &str) -> &str {
        match self.values.get(key) {
            Some(Value::Word(w)) => w,
            other => panic!("`{key}` is not a word: {other:?}"),
        }
    }

    /// Range and sign checks that do not need the model constructors.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let positive = [
            "pv.jsc_mA_cm2",
            "pv.voc_V",
            "pv.area_cm2",
            "pv.efficiency",
            "pv.bandgap_eV",
            "pv.charge_current_mA",
            "ic.t_measure_ms",
            "ic.v_threshold_V",
            "ic.v_max_V",
            "cap.capacitance_F",
            "cap.v_max_V",
            "link.tau",
            "link.frequency_Hz",
            "link.sweep_distance_m",
            "sim.duration_s",
            "sim.dt_s",
            "sim.day_dt_s",
        ];
        for key in positive {
            if !(self.num(key) > 0.0) {
                return bad(format!("{key} must be > 0, got {}", self.num(key)));
            }
        }
        let non_negative = [
            "pv.irradiance_mW_cm2",
            "ic.sleep_uA",
            "ic.ready_uA",
            "ic.measure_uA",
            "ic.rate_per_h",
            "cap.leak_R_ohm",
            "cap.leak_uA",
            "sim.initial_V",
            "sim.light_on_s",
            "sim.intensity_suns",
            "sim.day_initial_V",
            "sim.day_light_on_s",
            "sim.day_intensity_suns",
            "sizing.cost_per_cm2",
            "sizing.cost_per_farad",
        ];
        for key in non_negative {
            if !(self.num(key) >= 0.0) {
                return bad(format!("{key} must be >= 0, got {}", self.num(key)));
            }
        }
        if !(0.0..1.0).contains(&self.num("pv.ff")) || self.num("pv.ff") == 0.0 {
            return bad("pv.ff must lie in (0, 1)".into());
        }
        if self.int("pv.n_series") == 0 {
            return bad("pv.n_series must be >= 1".into());
        }
        if self.num("cap.leak_R_ohm") > 0.0 && self.num("cap.leak_uA") > 0.0 {
            return bad("set only one of cap.leak_R_ohm and cap.leak_uA".into());
        }
        let window = self.list("ic.window_s");
        if !(window.is_empty() || window.len() == 2) {
            return bad("ic.window_s takes two values (start, end) or none".into());
        }
        let target = self.num("sizing.target");
        if !(target > 0.0 && target <= 1.0) {
            return bad(format!("sizing.target must lie in (0, 1], got {target}"));
        }
        Ok(())
    }

    /// Every key with its current value, one `key = value` line each, in
    /// key order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_cover_every_key() {
        let cfg = Config::default();
        assert_eq!(cfg.values.len(), KEYS.len());
        cfg.validate().unwrap();
        assert_eq!(cfg.num("cap.capacitance_F"), 1.0);
    }

    #[test]
    fn stems_strip_units() {
        assert_eq!(stem("cap.capacitance_F"), "cap.capacitance");
        assert_eq!(stem("pv.ff"), "pv.ff");
        assert_eq!(unit_twin("cap.capacitance_uF"), Some("cap.capacitance_F"));
        assert_eq!(stem("pv.jsc_mA_cm2"), "pv.jsc");
        assert_eq!(stem("sim.day_initial_V"), "sim.day_initial");
        assert_eq!(unit_twin("pv.jsc_A_m2"), Some("pv.jsc_mA_cm2"));
        assert_eq!(unit_twin("ic.rate_per_min"), Some("ic.rate_per_h"));
        assert_eq!(unit_twin("cap.nothing_F"), None);
    }
}
