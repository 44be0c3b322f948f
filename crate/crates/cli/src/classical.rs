//! The `classical` and `convergence` runs.

use std::f64::consts::PI;
use std::fmt::Write as _;

use kgseries::butcher::{
    bound_check, convergence_threshold, partial_sum, scale_to_data_norm, series_residual,
    BoundReport, CoefficientTable, ConvergenceThreshold, SeriesConfig,
};
use kgseries::lattice::{
    estimate_algebra_constant, free_field, max_sobolev_distance, triple_norm, AlgebraConstant,
    CauchyData, GridSpec, InitialProfile, NormKernel, TimeGrid, TimeSampledField,
};
use kgseries::ptree::enumerate_up_to;
use kgseries::reference::{energy_series, integrate, IntegratorConfig, Scheme};
use serde::Serialize;

use crate::config::{RawConfig, Reader};
use crate::CliError;

/// Validated settings for a classical run.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalSettings {
    pub series: SeriesConfig,
    pub scheme: Scheme,
    pub reference_only: bool,
    pub phi0: InitialProfile,
    pub phi1: InitialProfile,
    /// Estimator output when `c_q` was not given.
    pub c_q_estimate: Option<AlgebraConstant>,
}

impl ClassicalSettings {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let mut r = Reader::new(raw);
        let p: usize = r.value("p", 2);
        let lambda: f64 = r.value("lambda", 0.1);
        let order: usize = r.value("order", 3);
        let dims: usize = r.value("dims", 1);
        let grid_n: usize = r.value("grid_n", 64);
        let box_len: f64 = r.value("box_L", 2.0 * PI);
        let mass: f64 = r.value("mass", 1.0);
        let horizon: f64 = r.value("horizon_T", 0.5);
        let dt: f64 = r.value("dt", 0.01);
        let q: u32 = r.value("sobolev_q", 1);
        let dealias: bool = r.value("dealias", false);
        let phi0: InitialProfile = r.value(
            "phi0",
            InitialProfile::Gaussian {
                amp: 0.5,
                width: 0.5,
            },
        );
        let phi1: InitialProfile = r.value("phi1", InitialProfile::Zero);
        let data_norm: Option<f64> = r.optional("data_norm");
        let c_q: Option<f64> = r.optional("c_q");
        let scheme: Scheme = r.value("scheme", Scheme::StrangSplitting);
        let reference_only: bool = r.value("reference_only", false);

        if order > 12 {
            r.problem(format!("order must be at most 12, got {order}"));
        }
        if let Some(d) = data_norm {
            if !(d.is_finite() && d >= 0.0) {
                r.problem(format!(
                    "data_norm must be finite and non-negative, got {d}"
                ));
            }
        }
        let grid = GridSpec::new(dims, grid_n, box_len, mass)
            .map_err(|e| r.problem(e.to_string()))
            .ok();
        let time = TimeGrid::new(horizon, dt)
            .map_err(|e| r.problem(e.to_string()))
            .ok();
        let (Some(grid), Some(time)) = (grid, time) else {
            return Err(r.finish().expect_err("grid problems were recorded"));
        };
        let mut cauchy = match (phi0.sample(&grid), phi1.sample(&grid)) {
            (Ok(a), Ok(b)) => CauchyData::new(a, b)?,
            (a, b) => {
                r.problems(a.err().into_iter().chain(b.err()).map(|e| e.to_string()));
                CauchyData::zeros(grid)
            }
        };
        if let Some(d) = data_norm {
            cauchy = scale_to_data_norm(&cauchy, q, d);
        }
        let c_q_estimate = match c_q {
            Some(_) => None,
            None if 2 * q as usize > dims => Some(estimate_algebra_constant(&grid, q)),
            None => None,
        };
        let series = SeriesConfig {
            p,
            lambda,
            cauchy,
            time,
            q,
            max_order: order,
            c_q: c_q
                .or(c_q_estimate.as_ref().map(|c| c.value))
                .unwrap_or(f64::NAN),
            dealias,
        };
        if let Err(e) = series.validate() {
            match e {
                kgseries::butcher::SeriesError::Config(list) => r.problems(list),
                other => r.problem(other.to_string()),
            }
        }
        let integ = integrator(&series, scheme);
        if let Err(kgseries::reference::IntegratorError::Config(list)) = integ.validate(&grid) {
            // p and lambda problems are already reported by the series check
            r.problems(list.into_iter().filter(|m| m.starts_with("dt=")));
        }
        r.finish()?;
        Ok(Self {
            series,
            scheme,
            reference_only,
            phi0,
            phi1,
            c_q_estimate,
        })
    }
}

fn integrator(series: &SeriesConfig, scheme: Scheme) -> IntegratorConfig {
    let mut c = IntegratorConfig::new(series.lambda, series.p, series.time, scheme);
    c.dealias = series.dealias;
    c
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub p: usize,
    pub lambda: f64,
    pub order: usize,
    pub grid: GridSpec,
    pub horizon_t: f64,
    pub dt: f64,
    pub sobolev_q: u32,
    pub dealias: bool,
    pub phi0: String,
    pub phi1: String,
    pub c_q: f64,
    pub c_q_source: &'static str,
    pub data_norm: f64,
    pub scheme: String,
}

impl RunConfig {
    fn new(s: &ClassicalSettings) -> Self {
        let c = &s.series;
        Self {
            p: c.p,
            lambda: c.lambda,
            order: c.max_order,
            grid: *c.grid(),
            horizon_t: c.time.horizon(),
            dt: c.time.dt,
            sobolev_q: c.q,
            dealias: c.dealias,
            phi0: s.phi0.to_string(),
            phi1: s.phi1.to_string(),
            c_q: c.c_q,
            c_q_source: if s.c_q_estimate.is_some() {
                "estimated"
            } else {
                "given"
            },
            data_norm: c.data_norm(),
            scheme: s.scheme.to_string(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderReport {
    pub order: usize,
    /// Triple norm of the sum of all coefficients of this order.
    pub graded_norm: f64,
    /// `max_t ||partial_sum(N) - reference||_q`
    pub error_vs_reference: f64,
    pub residual: f64,
    pub residual_above_floor: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Pairwise {
    pub series_vs_reference: f64,
    pub series_vs_free: f64,
    pub reference_vs_free: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReferenceSummary {
    pub scheme: String,
    pub energy_initial: f64,
    pub relative_energy_drift: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassicalReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: RunConfig,
    pub threshold: Option<ConvergenceThreshold>,
    pub orders: Vec<OrderReport>,
    pub pairwise: Option<Pairwise>,
    pub reference: ReferenceSummary,
    #[serde(skip)]
    pub timeseries: String,
}

impl ClassicalReport {
    /// Flat scalar outputs for sweep rows, in a fixed order.
    pub fn scalars(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        if let Some(t) = &self.threshold {
            out.push(("lambda_max".into(), t.lambda_max));
        }
        out.push(("energy_drift".into(), self.reference.relative_energy_drift));
        for o in &self.orders {
            out.push((format!("graded_norm_{}", o.order), o.graded_norm));
            out.push((format!("error_{}", o.order), o.error_vs_reference));
            out.push((format!("residual_{}", o.order), o.residual));
            out.push((
                format!("residual_above_floor_{}", o.order),
                o.residual_above_floor,
            ));
        }
        out
    }
}

fn norms_per_sample(field: &TimeSampledField, q: i32) -> Vec<f64> {
    let kernel = NormKernel::new(field.grid());
    (0..field.samples())
        .map(|j| kernel.norm(field.sample(j), q))
        .collect()
}

fn errors_per_sample(a: &TimeSampledField, b: &TimeSampledField, q: i32) -> Vec<f64> {
    let kernel = NormKernel::new(a.grid());
    (0..a.samples())
        .map(|j| {
            let d: Vec<f64> = a
                .sample(j)
                .iter()
                .zip(b.sample(j))
                .map(|(x, y)| x - y)
                .collect();
            kernel.norm(&d, q)
        })
        .collect()
}

pub fn run_classical(s: &ClassicalSettings) -> Result<ClassicalReport, CliError> {
    let cfg = &s.series;
    let q = cfg.q as i32;
    let reference = integrate(&cfg.cauchy, &integrator(cfg, s.scheme))?;
    let energy = energy_series(&reference, cfg.lambda, cfg.p)?;
    let e0 = energy[0];
    let drift = energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.abs();
    let reference_summary = ReferenceSummary {
        scheme: s.scheme.to_string(),
        energy_initial: e0,
        relative_energy_drift: if e0 == 0.0 { 0.0 } else { drift },
    };
    let ref_norms = norms_per_sample(&reference, q);
    let mut columns: Vec<(String, Vec<f64>)> = vec![
        ("reference_norm".into(), ref_norms),
        ("energy".into(), energy),
    ];

    let (threshold, orders, pairwise) = if s.reference_only {
        (None, Vec::new(), None)
    } else {
        let table = CoefficientTable::build(cfg)?;
        let mut orders = Vec::new();
        let mut top = None;
        for n in 0..=cfg.max_order {
            let sum = partial_sum(cfg, &table, n)?;
            if let Some(j) = sum.first_non_finite() {
                return Err(CliError::Divergence(format!(
                    "partial sum of order {n} is not finite at sample {j}"
                )));
            }
            let res = series_residual(cfg, &table, n)?;
            orders.push(OrderReport {
                order: n,
                graded_norm: triple_norm(&table.graded_sum(n)?, cfg.q)?,
                error_vs_reference: max_sobolev_distance(&sum, &reference, q)?,
                residual: res.centered,
                residual_above_floor: res.above_floor,
            });
            columns.push((format!("error_{n}"), errors_per_sample(&sum, &reference, q)));
            top = Some(sum);
        }
        let top = top.expect("order 0 always present");
        let free = free_field(&cfg.cauchy, cfg.time);
        let pairwise = Pairwise {
            series_vs_reference: max_sobolev_distance(&top, &reference, q)?,
            series_vs_free: max_sobolev_distance(&top, &free, q)?,
            reference_vs_free: max_sobolev_distance(&reference, &free, q)?,
        };
        (Some(convergence_threshold(cfg)), orders, Some(pairwise))
    };

    let mut timeseries = String::from("t");
    for (name, _) in &columns {
        write!(timeseries, ",{name}").unwrap();
    }
    timeseries.push('\n');
    for j in 0..cfg.time.samples() {
        write!(timeseries, "{}", cfg.time.time(j)).unwrap();
        for (_, col) in &columns {
            write!(timeseries, ",{:e}", col[j]).unwrap();
        }
        timeseries.push('\n');
    }

    Ok(ClassicalReport {
        schema_version: crate::SCHEMA_VERSION,
        command: "classical",
        config: RunConfig::new(s),
        threshold,
        orders,
        pairwise,
        reference: reference_summary,
        timeseries,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: RunConfig,
    pub threshold: ConvergenceThreshold,
    pub algebra_constant: Option<AlgebraConstant>,
    /// Per-order triple norms and bound checks, one entry per planar tree.
    pub bounds: Vec<BoundReport>,
    pub all_bounds_hold: bool,
}

/// Radius estimate and per-tree bound checks up to the configured order.
pub fn run_convergence(s: &ClassicalSettings) -> Result<ConvergenceReport, CliError> {
    let cfg = &s.series;
    let table = CoefficientTable::build(cfg)?;
    let mut bounds = Vec::new();
    for level in
        enumerate_up_to(cfg.p, cfg.max_order).map_err(|e| CliError::config(e.to_string()))?
    {
        for tree in level {
            bounds.push(bound_check(&tree, cfg, &table)?);
        }
    }
    let all_bounds_hold = bounds
        .iter()
        .all(|b| b.closed_holds && b.one_step.as_ref().is_none_or(|o| o.holds));
    Ok(ConvergenceReport {
        schema_version: crate::SCHEMA_VERSION,
        command: "convergence",
        config: RunConfig::new(s),
        threshold: convergence_threshold(cfg),
        algebra_constant: s.c_q_estimate.clone(),
        bounds,
        all_bounds_hold,
    })
}
