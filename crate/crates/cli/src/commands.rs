//! Subcommand implementations: build models from a [`Config`], run them and
//! fill a [`RunReport`].

use std::fs;
use std::path::{Path, PathBuf};

use pvrfid_core::consts::SECONDS_PER_DAY;
use pvrfid_core::ic_load::{self, IcProfile, MeasurementSchedule};
use pvrfid_core::link_budget::{self, LinkConfig, ThresholdSweep};
use pvrfid_core::numfmt::write_xy_csv;
use pvrfid_core::pv_model::{self, DiodeModel, SpectralResponse};
use pvrfid_core::simulator::{self, LightProfile, Scenario};
use pvrfid_core::sizing::{self, AvailabilityMetric, Objective, SizingRequest};
use pvrfid_core::storage::{CapacitorModel, Leak};

use crate::config::Config;
use crate::report::RunReport;
use crate::CliError;

/// Where CSV files go; nothing is written without `--out`.
pub struct Output<'a> {
    pub dir: Option<&'a Path>,
}

impl Output<'_> {
    fn write(&self, report: &mut RunReport, name: &str, contents: &str) -> Result<(), CliError> {
        let Some(dir) = self.dir else { return Ok(()) };
        fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(path.clone(), e))?;
        report.outputs.push(path);
        Ok(())
    }
}

pub fn pv(cfg: &Config) -> Result<DiodeModel, CliError> {
    Ok(pv_model::fit_single_diode(
        cfg.num("pv.jsc_mA_cm2"),
        cfg.num("pv.voc_V"),
        cfg.num("pv.ff"),
        cfg.num("pv.area_cm2"),
        cfg.int("pv.n_series"),
    )?)
}

pub fn ic(cfg: &Config) -> Result<IcProfile, CliError> {
    let p = IcProfile {
        i_sleep: cfg.num("ic.sleep_uA") * 1e-6,
        i_ready: cfg.num("ic.ready_uA") * 1e-6,
        i_measure: cfg.num("ic.measure_uA") * 1e-6,
        t_measure: cfg.num("ic.t_measure_ms") * 1e-3,
        v_threshold: cfg.num("ic.v_threshold_V"),
        v_max: cfg.num("ic.v_max_V"),
        sens_passive_dbm: cfg.num("ic.sens_passive_dbm"),
        sens_assisted_dbm: cfg.num("ic.sens_assisted_dbm"),
    };
    p.validate()?;
    Ok(p)
}

pub fn schedule(cfg: &Config) -> MeasurementSchedule {
    let w = cfg.list("ic.window_s");
    MeasurementSchedule {
        rate_per_hour: cfg.num("ic.rate_per_h"),
        active_window: (w.len() == 2).then(|| (w[0], w[1])),
    }
}

pub fn leak(cfg: &Config) -> Leak {
    let (r, i) = (cfg.num("cap.leak_R_ohm"), cfg.num("cap.leak_uA"));
    if r > 0.0 {
        Leak::Resistance(r)
    } else if i > 0.0 {
        Leak::ConstantCurrent(i * 1e-6)
    } else {
        Leak::None
    }
}

pub fn capacitor(cfg: &Config) -> Result<CapacitorModel, CliError> {
    Ok(CapacitorModel::new(
        cfg.num("cap.capacitance_F"),
        cfg.num("cap.v_max_V"),
        leak(cfg),
    )
    .map_err(simulator::SimError::from)?)
}

pub fn link(cfg: &Config) -> Result<LinkConfig, CliError> {
    let l = LinkConfig {
        eirp_dbm: cfg.num("link.eirp_dbm"),
        reader_antenna_gain_dbi: cfg.num("link.reader_gain_dbi"),
        tag_gain_dbi: cfg.num("link.tag_gain_dbi"),
        tau: cfg.num("link.tau"),
        polarization_loss_db: cfg.num("link.polarization_loss_dB"),
        modulation_loss_db: cfg.num("link.modulation_loss_dB"),
        reader_sensitivity_dbm: cfg.num("link.reader_sensitivity_dbm"),
        frequency_hz: cfg.num("link.frequency_Hz"),
    };
    l.validate()?;
    Ok(l)
}

fn pulse(light_on: f64, intensity: f64) -> Result<LightProfile, CliError> {
    if light_on > 0.0 && intensity > 0.0 {
        Ok(LightProfile::constant(0.0, light_on, intensity)?)
    } else {
        Ok(LightProfile::dark())
    }
}

fn scenario(
    cfg: &Config,
    duration: f64,
    dt: f64,
    initial_v: f64,
    light: LightProfile,
) -> Result<Scenario, CliError> {
    let pv = pv(cfg)?;
    let s = Scenario {
        photocurrent_scale: simulator::photocurrent_scale_for(
            &pv,
            cfg.num("pv.charge_current_mA") * 1e-3,
        ),
        pv,
        cap: capacitor(cfg)?,
        ic: ic(cfg)?,
        schedule: schedule(cfg),
        light,
        duration,
        dt,
        initial_v,
    };
    s.validate()?;
    Ok(s)
}

/// Charge / discharge run from the `sim.*` keys.
pub fn charge_scenario(cfg: &Config) -> Result<Scenario, CliError> {
    scenario(
        cfg,
        cfg.num("sim.duration_s"),
        cfg.num("sim.dt_s"),
        cfg.num("sim.initial_V"),
        pulse(cfg.num("sim.light_on_s"), cfg.num("sim.intensity_suns"))?,
    )
}

/// One-day availability run from the `sim.day_*` keys.
pub fn day_scenario(cfg: &Config) -> Result<Scenario, CliError> {
    scenario(
        cfg,
        SECONDS_PER_DAY,
        cfg.num("sim.day_dt_s"),
        cfg.num("sim.day_initial_V"),
        pulse(
            cfg.num("sim.day_light_on_s"),
            cfg.num("sim.day_intensity_suns"),
        )?,
    )
}

pub fn iv(cfg: &Config, r: &mut RunReport, out: &Output) -> Result<(), CliError> {
    let m = pv(cfg)?;
    let (v, i, p) = m.mpp();
    let irr = cfg.num("pv.irradiance_mW_cm2");
    r.num("isc_A", m.isc())
        .num("voc_V", m.voc())
        .num("n_ideality", m.n_ideality())
        .num("ff", m.fill_factor())
        .num("v_mpp_V", v)
        .num("i_mpp_A", i)
        .num("p_mpp_W", p);
    if irr > 0.0 {
        r.num("efficiency", m.efficiency(irr));
    }
    r.num("efficiency_quoted", cfg.num("pv.efficiency"))
        .headline(&["p_mpp_W", "v_mpp_V", "ff"]);
    let rows: Vec<(f64, f64)> = (0..=200)
        .map(|k| {
            let v = m.voc() * k as f64 / 200.0;
            (v, m.current(v))
        })
        .collect();
    out.write(r, "iv.csv", &write_xy_csv("voltage_V,current_A", &rows))
}

pub fn harvest(cfg: &Config, eqe: Option<&str>, r: &mut RunReport) -> Result<(), CliError> {
    let area = cfg.num("pv.area_cm2");
    let irr = cfg.num("pv.irradiance_mW_cm2");
    let p = pv_model::harvest_power(cfg.num("pv.efficiency"), area, irr);
    let m = pv(cfg)?;
    r.num("harvest_W", p)
        .num("p_mpp_scaled_W", m.mpp().2 * irr / 100.0)
        .headline(&["harvest_W"]);
    if let Some(text) = eqe {
        let cutoff = pv_model::cutoff_from_bandgap(cfg.num("pv.bandgap_eV"));
        let resp = SpectralResponse::from_csv(text, cutoff)?;
        let jsc = pv_model::jsc_from_eqe(&resp, pv_model::am15g())?;
        r.num("cutoff_nm", cutoff).num("jsc_eqe_mA_cm2", jsc);
        r.headline(&["harvest_W", "jsc_eqe_mA_cm2"]);
    }
    Ok(())
}

pub fn load(cfg: &Config, r: &mut RunReport, out: &Output) -> Result<(), CliError> {
    let p = ic(cfg)?;
    let s = schedule(cfg);
    let rate = s.rate_per_hour;
    s.validate(&p)?;
    let v = p.v_threshold;
    r.num("rate_per_h", rate)
        .num("max_rate_per_h", p.max_rate_per_hour())
        .num("avg_current_A", ic_load::average_current(&p, rate)?)
        .num("power_threshold_W", ic_load::average_power(&p, rate, v)?)
        .num("power_vmax_W", ic_load::average_power(&p, rate, p.v_max)?)
        .num("daily_energy_J", ic_load::daily_energy(&p, &s, v)?)
        .headline(&["rate_per_h", "power_threshold_W"]);
    let max = p.max_rate_per_hour();
    let rows = (0..=100)
        .map(|k| {
            let rate = max * k as f64 / 100.0;
            Ok((rate, ic_load::average_power(&p, rate, v)?))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    out.write(r, "load.csv", &write_xy_csv("rate_per_h,power_W", &rows))
}

pub fn simulate(cfg: &Config, r: &mut RunReport, out: &Output) -> Result<(), CliError> {
    let s = charge_scenario(cfg)?;
    let trace = simulator::simulate(&s)?;
    let last = trace.last().expect("trace has at least one record");
    let show = |t: Option<f64>| t.map_or("never".to_string(), pvrfid_core::numfmt::sig6);
    r.text(
        "t_threshold_s",
        show(simulator::time_to_voltage(&trace, s.ic.v_threshold)),
    )
    .text(
        "t_full_s",
        show(simulator::time_to_voltage(&trace, s.cap.v_max)),
    )
    .num("on_time_s", simulator::time_above(&trace, s.ic.v_threshold))
    .num("final_V", last.v)
    .num("measurements", last.measurement_count as f64)
    .num("records", trace.len() as f64)
    .headline(&["t_threshold_s", "on_time_s", "final_V"]);
    out.write(r, "trace.csv", &simulator::trace_to_csv(&trace))
}

pub fn availability(cfg: &Config, r: &mut RunReport) -> Result<(), CliError> {
    let a = simulator::availability(&day_scenario(cfg)?)?;
    r.num("energy_balance", a.energy_balance)
        .num("trace_fraction", a.trace_fraction)
        .num("harvest_J", a.terms.harvest)
        .num("usable_J", a.terms.usable)
        .num("leak_J", a.terms.leak)
        .num("required_J", a.terms.required)
        .headline(&["energy_balance", "trace_fraction"]);
    Ok(())
}

pub fn range(
    cfg: &Config,
    sweep: Option<&str>,
    r: &mut RunReport,
    out: &Output,
) -> Result<(), CliError> {
    let l = link(cfg)?;
    let p = ic(cfg)?;
    let (sp, sa) = (p.sens_passive_dbm, p.sens_assisted_dbm);
    r.num("passive_m", link_budget::forward_limited_range(&l, sp)?)
        .num("assisted_m", link_budget::forward_limited_range(&l, sa)?)
        .num("ratio", link_budget::range_ratio(sp, sa))
        .num("reverse_m", link_budget::reverse_limited_range(&l))
        .num("read_passive_m", link_budget::read_range(&l, sp)?)
        .num("read_assisted_m", link_budget::read_range(&l, sa)?)
        .text("in_us_band", l.in_us_band().to_string())
        .headline(&["passive_m", "assisted_m", "ratio"]);
    if let Some(text) = sweep {
        let sw = ThresholdSweep::from_csv(text, cfg.num("link.sweep_distance_m"))?;
        let ranges = link_budget::sweep_to_range(&sw, l.eirp_dbm);
        let lo = ranges.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        let hi = ranges.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        r.num("sweep_points", ranges.len() as f64)
            .num("sweep_min_m", lo)
            .num("sweep_max_m", hi);
        out.write(r, "ranges.csv", &link_budget::ranges_to_csv(&ranges))?;
    }
    Ok(())
}

pub fn sweep(cfg: &Config, r: &mut RunReport, out: &Output) -> Result<(), CliError> {
    let template = day_scenario(cfg)?;
    let leaks: Vec<f64> = cfg
        .list("sizing.leak_grid_uA")
        .iter()
        .map(|x| x * 1e-6)
        .collect();
    let table = sizing::persistence_sweep(cfg.list("sizing.cap_grid_F"), &leaks, &template)?;
    let eb = table.values(AvailabilityMetric::EnergyBalance);
    let full = eb.iter().flatten().filter(|&&x| x >= 1.0).count();
    r.num("cells", (table.capacitances.len() * leaks.len()) as f64)
        .num("cells_full", full as f64)
        .headline(&["cells", "cells_full"]);
    out.write(
        r,
        "persistence.csv",
        &table.to_csv(AvailabilityMetric::EnergyBalance),
    )?;
    out.write(
        r,
        "persistence_trace.csv",
        &table.to_csv(AvailabilityMetric::TraceFraction),
    )
}

pub fn sizing_request(cfg: &Config) -> Result<SizingRequest, CliError> {
    let day = day_scenario(cfg)?;
    let metric = match cfg.word("sizing.metric") {
        "trace" => AvailabilityMetric::TraceFraction,
        _ => AvailabilityMetric::EnergyBalance,
    };
    let objective = match cfg.word("sizing.objective") {
        "weighted" => Objective::Weighted {
            cost_per_cm2: cfg.num("sizing.cost_per_cm2"),
            cost_per_farad: cfg.num("sizing.cost_per_farad"),
        },
        _ => Objective::Lexicographic,
    };
    Ok(SizingRequest {
        target_availability: cfg.num("sizing.target"),
        light: day.light,
        schedule: day.schedule,
        ic: day.ic,
        area_grid: cfg.list("sizing.area_grid_cm2").to_vec(),
        cap_grid: cfg.list("sizing.cap_grid_F").to_vec(),
        leak: day.cap.leak,
        base_cell: day.pv,
        photocurrent_scale: day.photocurrent_scale,
        v_max: day.cap.v_max,
        initial_v: day.initial_v,
        dt: day.dt,
        metric,
        objective,
    })
}

pub fn size(cfg: &Config, r: &mut RunReport) -> Result<(), CliError> {
    let res = sizing::size_system(&sizing_request(cfg)?)?;
    r.num("area_cm2", res.area_cm2)
        .num("capacitance_F", res.capacitance)
        .num("availability", res.availability)
        .num("evaluations", res.evaluations as f64)
        .headline(&["area_cm2", "capacitance_F", "availability"]);
    Ok(())
}

pub fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(PathBuf::from(path), e))
}
