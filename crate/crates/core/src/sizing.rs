//! Design-space exploration over capacitance, leakage and PV area.
//!
//! Grid cells are independent one-day scenarios, so sweeps are evaluated in
//! parallel; results are gathered back in grid order and therefore do not
//! depend on scheduling.

use rayon::prelude::*;
use thiserror::Error;

use crate::consts::SECONDS_PER_DAY;
use crate::ic_load::{IcProfile, MeasurementSchedule};
use crate::numfmt::sig6;
use crate::pv_model::{DiodeModel, PvError};
use crate::simulator::{self, Availability, LightProfile, Scenario, SimError};
use crate::storage::{CapacitorModel, Leak};

#[derive(Debug, Error, PartialEq)]
pub enum SizingError {
    #[error("invalid sizing request: {0}")]
    InvalidRequest(String),
    #[error("no grid point reaches availability {target}")]
    Infeasible { target: f64 },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Pv(#[from] PvError),
}

/// Which availability estimate drives the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AvailabilityMetric {
    #[default]
    EnergyBalance,
    TraceFraction,
}

/// Ranking of feasible grid points.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Objective {
    /// Smallest area, then smallest capacitance.
    #[default]
    Lexicographic,
    /// Smallest `area * cost_per_cm2 + capacitance * cost_per_farad`.
    Weighted {
        cost_per_cm2: f64,
        cost_per_farad: f64,
    },
}

/// Availability table: rows are capacitances, columns are leak currents.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceTable {
    pub capacitances: Vec<f64>,
    /// Leak currents in A; zero means no leakage.
    pub leaks: Vec<f64>,
    pub cells: Vec<Vec<Availability>>,
}

impl PersistenceTable {
    /// CSV matrix: `capacitance_F,leak_<µA>uA,...`.
    pub fn to_csv(&self, metric: AvailabilityMetric) -> String {
        let mut out = String::from("capacitance_F");
        for l in &self.leaks {
            out.push_str(&format!(",leak_{}uA", sig6(l * 1e6)));
        }
        out.push('\n');
        for (c, row) in self.capacitances.iter().zip(&self.cells) {
            out.push_str(&sig6(*c));
            for a in row {
                let value = match metric {
                    AvailabilityMetric::EnergyBalance => a.energy_balance,
                    AvailabilityMetric::TraceFraction => a.trace_fraction,
                };
                out.push(',');
                out.push_str(&sig6(value));
            }
            out.push('\n');
        }
        out
    }

    pub fn values(&self, metric: AvailabilityMetric) -> Vec<Vec<f64>> {
        self.cells
            .iter()
            .map(|row| {
                row.iter()
                    .map(|a| match metric {
                        AvailabilityMetric::EnergyBalance => a.energy_balance,
                        AvailabilityMetric::TraceFraction => a.trace_fraction,
                    })
                    .collect()
            })
            .collect()
    }
}

fn leak_from_current(i: f64) -> Leak {
    if i > 0.0 {
        Leak::ConstantCurrent(i)
    } else {
        Leak::None
    }
}

fn check_grid(name: &str, grid: &[f64], allow_zero: bool) -> Result<(), SizingError> {
    if grid.is_empty() {
        return Err(SizingError::InvalidRequest(format!("{name} grid is empty")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SizingError::InvalidRequest(format!(
            "{name} grid must be strictly increasing"
        )));
    }
    let floor_ok = if allow_zero {
        grid[0] >= 0.0
    } else {
        grid[0] > 0.0
    };
    if !floor_ok {
        return Err(SizingError::InvalidRequest(format!(
            "{name} grid has a non-physical first value"
        )));
    }
    Ok(())
}

/// Availability for every (capacitance, constant leak) pair, with the rest
/// of the scenario taken from `template` (which must span one day).
pub fn persistence_sweep(
    cap_grid: &[f64],
    leak_grid: &[f64],
    template: &Scenario,
) -> Result<PersistenceTable, SizingError> {
    check_grid("capacitance", cap_grid, false)?;
    check_grid("leak", leak_grid, true)?;
    let cells: Vec<(usize, usize)> = (0..cap_grid.len())
        .flat_map(|r| (0..leak_grid.len()).map(move |c| (r, c)))
        .collect();
    let results: Vec<Availability> = cells
        .par_iter()
        .map(|&(r, c)| {
            let cap = CapacitorModel::new(
                cap_grid[r],
                template.cap.v_max,
                leak_from_current(leak_grid[c]),
            )
            .map_err(SimError::from)?;
            let s = Scenario {
                cap,
                ..template.clone()
            };
            simulator::availability(&s).map_err(SizingError::from)
        })
        .collect::<Result<_, _>>()?;
    let cells = results
        .chunks(leak_grid.len())
        .map(|row| row.to_vec())
        .collect();
    Ok(PersistenceTable {
        capacitances: cap_grid.to_vec(),
        leaks: leak_grid.to_vec(),
        cells,
    })
}

/// Search space and constraints for [`size_system`].
#[derive(Debug, Clone, PartialEq)]
pub struct SizingRequest {
    pub target_availability: f64,
    pub light: LightProfile,
    pub schedule: MeasurementSchedule,
    pub ic: IcProfile,
    /// Candidate active areas in cm².
    pub area_grid: Vec<f64>,
    /// Candidate capacitances in F.
    pub cap_grid: Vec<f64>,
    pub leak: Leak,
    /// PV device whose photocurrent is scaled with area.
    pub base_cell: DiodeModel,
    pub photocurrent_scale: f64,
    pub v_max: f64,
    pub initial_v: f64,
    pub dt: f64,
    pub metric: AvailabilityMetric,
    pub objective: Objective,
}

impl SizingRequest {
    pub fn validate(&self) -> Result<(), SizingError> {
        if !(self.target_availability > 0.0 && self.target_availability <= 1.0) {
            return Err(SizingError::InvalidRequest(
                "target availability must lie in (0, 1]".into(),
            ));
        }
        check_grid("area", &self.area_grid, false)?;
        check_grid("capacitance", &self.cap_grid, false)?;
        if let Objective::Weighted {
            cost_per_cm2,
            cost_per_farad,
        } = self.objective
        {
            if !(cost_per_cm2 >= 0.0 && cost_per_farad >= 0.0) {
                return Err(SizingError::InvalidRequest(
                    "unit costs must be >= 0".into(),
                ));
            }
        }
        Ok(())
    }

    /// One-day scenario for a grid point.
    pub fn scenario(&self, area_cm2: f64, capacitance: f64) -> Result<Scenario, SizingError> {
        Ok(Scenario {
            pv: self.base_cell.with_area(area_cm2)?,
            photocurrent_scale: self.photocurrent_scale,
            cap: CapacitorModel::new(capacitance, self.v_max, self.leak).map_err(SimError::from)?,
            ic: self.ic.clone(),
            schedule: self.schedule.clone(),
            light: self.light.clone(),
            duration: SECONDS_PER_DAY,
            dt: self.dt,
            initial_v: self.initial_v,
        })
    }

    /// Availability of a grid point under the request's metric.
    pub fn evaluate(&self, area_cm2: f64, capacitance: f64) -> Result<f64, SizingError> {
        let s = self.scenario(area_cm2, capacitance)?;
        Ok(match self.metric {
            AvailabilityMetric::EnergyBalance => simulator::availability_energy_balance(&s)?,
            AvailabilityMetric::TraceFraction => simulator::availability_trace(&s)?,
        })
    }

    fn cost(&self, area: f64, capacitance: f64) -> (f64, f64) {
        match self.objective {
            Objective::Lexicographic => (area, capacitance),
            Objective::Weighted {
                cost_per_cm2,
                cost_per_farad,
            } => (area * cost_per_cm2 + capacitance * cost_per_farad, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizingResult {
    pub area_cm2: f64,
    pub capacitance: f64,
    pub availability: f64,
    /// Number of grid points evaluated.
    pub evaluations: usize,
}

/// Cheapest grid point reaching the target availability.
///
/// Availability is nondecreasing in area, so for every capacitance the
/// smallest feasible area is found by bisection over the area grid; the
/// capacitance axis is scanned in full.
pub fn size_system(req: &SizingRequest) -> Result<SizingResult, SizingError> {
    req.validate()?;
    let per_cap: Vec<Result<AreaSearch, SizingError>> = req
        .cap_grid
        .par_iter()
        .map(|&c| min_feasible_area(req, c))
        .collect();

    let mut best: Option<(f64, f64, f64, usize)> = None;
    let mut evaluations = 0;
    for (ci, r) in per_cap.into_iter().enumerate() {
        let (found, evals) = r?;
        evaluations += evals;
        let Some((ai, avail)) = found else { continue };
        let (area, cap) = (req.area_grid[ai], req.cap_grid[ci]);
        let better = match best {
            None => true,
            Some((a, c, _, _)) => {
                let (new, old) = (req.cost(area, cap), req.cost(a, c));
                new.0 < old.0 || (new.0 == old.0 && new.1 < old.1)
            }
        };
        if better {
            best = Some((area, cap, avail, ci));
        }
    }
    match best {
        Some((area_cm2, capacitance, availability, _)) => Ok(SizingResult {
            area_cm2,
            capacitance,
            availability,
            evaluations,
        }),
        None => Err(SizingError::Infeasible {
            target: req.target_availability,
        }),
    }
}

/// Area-grid index and availability of the smallest feasible area, if any,
/// and the number of evaluations spent.
type AreaSearch = (Option<(usize, f64)>, usize);

/// Smallest area meeting the target at capacitance `c`.
fn min_feasible_area(req: &SizingRequest, c: f64) -> Result<AreaSearch, SizingError> {
    let grid = &req.area_grid;
    let mut evals = 1;
    let top = req.evaluate(grid[grid.len() - 1], c)?;
    if top < req.target_availability {
        return Ok((None, evals));
    }
    // Invariant: grid[hi] is feasible with availability `hi_avail`,
    // everything below `lo` is infeasible.
    let (mut lo, mut hi, mut hi_avail) = (0usize, grid.len() - 1, top);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let a = req.evaluate(grid[mid], c)?;
        evals += 1;
        if a >= req.target_availability {
            hi = mid;
            hi_avail = a;
        } else {
            lo = mid + 1;
        }
    }
    Ok((Some((hi, hi_avail)), evals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pv_model::fit_single_diode;

    fn request(light: LightProfile, rate: f64) -> SizingRequest {
        SizingRequest {
            target_availability: 1.0,
            light,
            schedule: MeasurementSchedule::continuous(rate),
            ic: IcProfile::default(),
            area_grid: vec![0.01, 0.1, 0.5, 1.06],
            cap_grid: vec![1e-3, 0.1, 1.0, 10.0],
            leak: Leak::None,
            base_cell: fit_single_diode(3.7, 4.3, 0.6, 1.06, 4).unwrap(),
            photocurrent_scale: 1.0,
            v_max: 3.0,
            initial_v: 3.0,
            dt: 1.0,
            metric: AvailabilityMetric::EnergyBalance,
            objective: Objective::Lexicographic,
        }
    }

    #[test]
    fn slack_problem_takes_smallest_point() {
        let req = request(LightProfile::constant(0.0, 43_200.0, 1.0).unwrap(), 0.0);
        let r = size_system(&req).unwrap();
        assert_eq!((r.area_cm2, r.capacitance), (0.01, 1e-3));
    }

    #[test]
    fn dark_request_is_driven_by_capacitance() {
        let req = request(LightProfile::dark(), 20_000.0);
        let r = size_system(&req).unwrap();
        assert_eq!(r.area_cm2, 0.01);
        assert_eq!(r.capacitance, 1.0);
    }

    #[test]
    fn dark_request_with_small_caps_is_infeasible() {
        let mut req = request(LightProfile::dark(), 20_000.0);
        req.cap_grid = vec![1e-6, 1e-5, 1e-4, 1e-3];
        assert_eq!(
            size_system(&req),
            Err(SizingError::Infeasible { target: 1.0 })
        );
    }

    #[test]
    fn weighted_objective_can_trade_area_for_capacitance() {
        // Weak light: harvest grows with area, stored energy with capacitance.
        let mut req = request(
            LightProfile::constant(0.0, 43_200.0, 0.002).unwrap(),
            20_000.0,
        );
        req.cap_grid = vec![1e-3, 0.1, 0.2, 0.3];
        let lex = size_system(&req).unwrap();
        assert_eq!((lex.area_cm2, lex.capacitance), (0.01, 0.3));
        req.objective = Objective::Weighted {
            cost_per_cm2: 0.01,
            cost_per_farad: 1.0,
        };
        let weighted = size_system(&req).unwrap();
        assert_eq!((weighted.area_cm2, weighted.capacitance), (1.06, 0.1));
        assert!(req.evaluate(1.06, 0.1).unwrap() >= 1.0);
        assert!(req.evaluate(0.5, 0.1).unwrap() < 1.0);
    }

    #[test]
    fn request_validation() {
        let mut req = request(LightProfile::dark(), 0.0);
        req.area_grid = vec![1.0, 0.5];
        assert!(matches!(
            size_system(&req),
            Err(SizingError::InvalidRequest(_))
        ));
        let mut req = request(LightProfile::dark(), 0.0);
        req.target_availability = 0.0;
        assert!(size_system(&req).is_err());
    }

    #[test]
    fn sweep_csv_layout() {
        let req = request(LightProfile::dark(), 0.0);
        let template = req.scenario(1.06, 1.0).unwrap();
        let table = persistence_sweep(&[1e-6, 1.0], &[0.0, 40e-6], &template).unwrap();
        let csv = table.to_csv(AvailabilityMetric::EnergyBalance);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("capacitance_F,leak_0uA,leak_40uA"));
        assert_eq!(lines.next().unwrap().split(',').next(), Some("1e-6"));
        assert_eq!(lines.next(), Some("1,1,0"));
    }
}
