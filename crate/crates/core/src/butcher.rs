//! The tree-indexed perturbative series for `(box + m^2) phi + lambda phi^p = 0`.
//!
//! `phi(o)` is the free field of the Cauchy data and `phi(B+(b1..bp))` solves
//! the linear equation with source `-phi(b1)...phi(bp)` and zero data. The
//! series is `sum_b lambda^|b| phi(b)`. Coefficients are computed once per
//! commutativity class (children sorted by key, factors multiplied in that
//! order) and weighted by the number of planar trees in the class.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{
    free_field, pointwise_product, sobolev_norm, solve_retarded, triple_norm, CauchyData,
    FieldError, GridSpec, Multiplier, NormKernel, Spectral, TimeGrid, TimeSampledField,
};
use crate::ptree::{classes_up_to, PTree, TreeClass, TreeError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("requested order {requested} exceeds the table's max order {max}")]
    Order { requested: usize, max: usize },
    #[error("no coefficient for tree {0}")]
    Missing(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesConfig {
    pub p: usize,
    pub lambda: f64,
    pub cauchy: CauchyData,
    pub time: TimeGrid,
    pub q: u32,
    pub max_order: usize,
    pub c_q: f64,
    pub dealias: bool,
}

impl SeriesConfig {
    pub fn grid(&self) -> &GridSpec {
        self.cauchy.grid()
    }

    /// Lists every violated precondition at once.
    pub fn validate(&self) -> Result<(), SeriesError> {
        let mut bad = Vec::new();
        if self.p < 2 {
            bad.push(format!("p must be >= 2, got {}", self.p));
        }
        if !self.lambda.is_finite() {
            bad.push(format!("lambda must be finite, got {}", self.lambda));
        }
        if 2 * self.q as usize <= self.grid().dims {
            bad.push(format!(
                "sobolev_q must exceed dims/2, got q={} with dims={}",
                self.q,
                self.grid().dims
            ));
        }
        if !(self.c_q.is_finite() && self.c_q > 0.0) {
            bad.push(format!("c_q must be positive, got {}", self.c_q));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(SeriesError::Config(bad))
        }
    }

    pub fn mass_constant(&self) -> f64 {
        self.grid().mass_constant()
    }

    pub fn data_norm(&self) -> f64 {
        data_norm(&self.cauchy, self.q)
    }
}

/// `||phi0||_{q+1} + ||phi1||_q`.
pub fn data_norm(cauchy: &CauchyData, q: u32) -> f64 {
    sobolev_norm(&cauchy.phi0, q as i32 + 1) + sobolev_norm(&cauchy.phi1, q as i32)
}

/// Cauchy data rescaled so that [`data_norm`] equals `target`.
pub fn scale_to_data_norm(cauchy: &CauchyData, q: u32, target: f64) -> CauchyData {
    let d = data_norm(cauchy, q);
    if d == 0.0 {
        cauchy.clone()
    } else {
        cauchy.scaled(target / d)
    }
}

/// One coefficient with its lazily computed triple norm.
#[derive(Debug)]
pub struct Coefficient {
    field: TimeSampledField,
    norm: OnceLock<Result<f64, FieldError>>,
}

impl Coefficient {
    fn new(field: TimeSampledField) -> Self {
        Self {
            field,
            norm: OnceLock::new(),
        }
    }

    pub fn field(&self) -> &TimeSampledField {
        &self.field
    }

    pub fn triple_norm(&self, q: u32) -> Result<f64, FieldError> {
        self.norm
            .get_or_init(|| triple_norm(&self.field, q))
            .clone()
    }
}

/// Coefficients for every commutativity class up to `max_order`, keyed by
/// the class representative's key.
#[derive(Debug)]
pub struct CoefficientTable {
    p: usize,
    q: u32,
    classes: Vec<Vec<TreeClass>>,
    entries: HashMap<String, Arc<Coefficient>>,
}

impl CoefficientTable {
    /// Fills the table order by order; each order is one parallel batch.
    pub fn build(cfg: &SeriesConfig) -> Result<Self, SeriesError> {
        cfg.validate()?;
        let classes = classes_up_to(cfg.p, cfg.max_order)?;
        let mut table = Self {
            p: cfg.p,
            q: cfg.q,
            classes: Vec::new(),
            entries: HashMap::new(),
        };
        for level in &classes {
            let batch: Vec<Result<(String, TimeSampledField), SeriesError>> = level
                .par_iter()
                .map(|c| {
                    let f = compute_coefficient(&c.representative, cfg, &table)?;
                    Ok((c.representative.key().to_owned(), f))
                })
                .collect();
            for entry in batch {
                let (k, f) = entry?;
                table.entries.insert(k, Arc::new(Coefficient::new(f)));
            }
        }
        table.classes = classes;
        Ok(table)
    }

    pub fn arity(&self) -> usize {
        self.p
    }

    pub fn max_order(&self) -> usize {
        self.classes.len().saturating_sub(1)
    }

    pub fn classes(&self) -> &[Vec<TreeClass>] {
        &self.classes
    }

    /// The coefficient of any planar tree in a stored class.
    pub fn get(&self, tree: &PTree) -> Option<&Arc<Coefficient>> {
        self.entries.get(tree.normalized().key())
    }

    pub fn triple_norm(&self, tree: &PTree) -> Result<f64, SeriesError> {
        let c = self
            .get(tree)
            .ok_or_else(|| SeriesError::Missing(tree.key().to_owned()))?;
        Ok(c.triple_norm(self.q)?)
    }

    /// `S_n = sum_{|b| = n} phi(b)`, classes in key order.
    pub fn graded_sum(&self, order: usize) -> Result<TimeSampledField, SeriesError> {
        let level = self.classes.get(order).ok_or(SeriesError::Order {
            requested: order,
            max: self.max_order(),
        })?;
        let first = &self.entries[level[0].representative.key()].field;
        let mut acc = TimeSampledField::zeros(*first.grid(), *first.time_grid());
        for class in level {
            let c = &self.entries[class.representative.key()];
            acc.add_scaled(class.multiplicity as f64, &c.field)?;
        }
        Ok(acc)
    }
}

/// `phi(b)`, taking stored subtree coefficients from `table` and computing
/// missing ones recursively.
pub fn compute_coefficient(
    tree: &PTree,
    cfg: &SeriesConfig,
    table: &CoefficientTable,
) -> Result<TimeSampledField, SeriesError> {
    coefficient_with(tree, cfg, Some(table), true)
}

/// `phi(b)` computed from scratch, without any table.
pub fn compute_coefficient_uncached(
    tree: &PTree,
    cfg: &SeriesConfig,
) -> Result<TimeSampledField, SeriesError> {
    coefficient_with(tree, cfg, None, true)
}

/// `phi(b)` from scratch with the factors multiplied in planar child order
/// instead of sorted order.
pub fn compute_coefficient_planar_order(
    tree: &PTree,
    cfg: &SeriesConfig,
) -> Result<TimeSampledField, SeriesError> {
    coefficient_with(tree, cfg, None, false)
}

fn coefficient_with(
    tree: &PTree,
    cfg: &SeriesConfig,
    table: Option<&CoefficientTable>,
    sorted: bool,
) -> Result<TimeSampledField, SeriesError> {
    if let Some(c) = table.and_then(|t| t.get(tree)) {
        return Ok(c.field.clone());
    }
    let children = match tree {
        PTree::Leaf => return Ok(free_field(&cfg.cauchy, cfg.time)),
        PTree::Node(_) => tree.decompose()?,
    };
    let mut children: Vec<PTree> = children.to_vec();
    if sorted {
        children = children.iter().map(PTree::normalized).collect();
        children.sort();
    }
    let mut owned = Vec::with_capacity(children.len());
    for c in &children {
        match table.and_then(|t| t.get(c)) {
            Some(stored) => owned.push(Cow::Shared(Arc::clone(stored))),
            None => owned.push(Cow::Owned(coefficient_with(c, cfg, table, sorted)?)),
        }
    }
    let factors: Vec<&TimeSampledField> = owned.iter().map(Cow::field).collect();
    let source = pointwise_product(&factors, cfg.dealias)?;
    Ok(solve_retarded(&source)?)
}

enum Cow {
    Shared(Arc<Coefficient>),
    Owned(TimeSampledField),
}

impl Cow {
    fn field(&self) -> &TimeSampledField {
        match self {
            Cow::Shared(c) => &c.field,
            Cow::Owned(f) => f,
        }
    }
}

/// `sum_{|b| <= order} lambda^|b| phi(b)`, accumulated by increasing order.
pub fn partial_sum(
    cfg: &SeriesConfig,
    table: &CoefficientTable,
    order: usize,
) -> Result<TimeSampledField, SeriesError> {
    if order > table.max_order() {
        return Err(SeriesError::Order {
            requested: order,
            max: table.max_order(),
        });
    }
    let mut acc = table.graded_sum(0)?;
    for n in 1..=order {
        acc.add_scaled(cfg.lambda.powi(n as i32), &table.graded_sum(n)?)?;
    }
    Ok(acc)
}

/// Coupling bound below which the series provably converges, given the
/// (estimated) algebra constant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceThreshold {
    /// `+inf` for zero data.
    pub lambda_max: f64,
    pub data_norm: f64,
    pub mass_constant: f64,
    pub c_q: f64,
    pub inside: bool,
}

/// `(p-1)^(p-1) / [(1 + M T) p^p c_q^(p-1) M^(2(p-1)) D^(p-1)]` with
/// `M = max(m, 1/m)` and `D` the data norm.
pub fn convergence_threshold(cfg: &SeriesConfig) -> ConvergenceThreshold {
    let d = cfg.data_norm();
    let lambda_max = threshold_formula(cfg.p, cfg.mass_constant(), cfg.time.horizon(), cfg.c_q, d);
    ConvergenceThreshold {
        lambda_max,
        data_norm: d,
        mass_constant: cfg.mass_constant(),
        c_q: cfg.c_q,
        inside: cfg.lambda.abs() < lambda_max,
    }
}

pub fn threshold_formula(p: usize, m_const: f64, horizon: f64, c_q: f64, data_norm: f64) -> f64 {
    if data_norm == 0.0 {
        return f64::INFINITY;
    }
    let e = (p - 1) as i32;
    let pf = p as f64;
    (pf - 1.0).powi(e)
        / ((1.0 + m_const * horizon)
            * pf.powi(p as i32)
            * c_q.powi(e)
            * m_const.powi(2 * e)
            * data_norm.powi(e))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OneStepCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub key: String,
    pub order: usize,
    pub norm: f64,
    /// `(c_q^(p-1) (1+MT))^|b| [M^2 D]^(|b|(p-1)+1)`
    pub closed_bound: f64,
    pub closed_holds: bool,
    /// `||phi(b)|| <= (1+MT) c_q^(p-1) prod ||phi(b_i)||`; absent for the leaf.
    pub one_step: Option<OneStepCheck>,
}

pub fn bound_check(
    tree: &PTree,
    cfg: &SeriesConfig,
    table: &CoefficientTable,
) -> Result<BoundReport, SeriesError> {
    let norm = table.triple_norm(tree)?;
    let n = tree.internal_count();
    let m = cfg.mass_constant();
    let t = cfg.time.horizon();
    let e = (cfg.p - 1) as i32;
    let growth = cfg.c_q.powi(e) * (1.0 + m * t);
    let closed_bound = growth.powi(n as i32) * (m * m * cfg.data_norm()).powi(n as i32 * e + 1);
    let one_step = match tree {
        PTree::Leaf => None,
        PTree::Node(_) => {
            let mut rhs = growth;
            for c in tree.decompose()? {
                rhs *= table.triple_norm(c)?;
            }
            Some(OneStepCheck {
                lhs: norm,
                rhs,
                holds: norm <= rhs,
            })
        }
    };
    Ok(BoundReport {
        key: tree.key().to_owned(),
        order: n,
        norm,
        closed_bound,
        closed_holds: norm <= closed_bound,
        one_step,
    })
}

/// Discrete second time derivative used by the residual.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TimeDifference {
    /// `(u_{j+1} - 2 u_j + u_{j-1}) / dt^2 + w^2 u_j` per mode.
    Centered,
    /// `(u_{j+1} - 2 cos(w dt) u_j + u_{j-1}) w / (dt sin(w dt))` per mode:
    /// also second order, and exact on free fields and on the trapezoidal
    /// retarded solution. Needs `dt w_max < pi`.
    Trigonometric,
}

/// `max_j ||(box + m^2) u + lambda u^p||_{q-1}` over interior samples with
/// centered differences in time and exact spatial derivatives.
pub fn residual(field: &TimeSampledField, cfg: &SeriesConfig) -> Result<f64, SeriesError> {
    residual_with(field, cfg, TimeDifference::Centered)
}

pub fn residual_with(
    field: &TimeSampledField,
    cfg: &SeriesConfig,
    diff: TimeDifference,
) -> Result<f64, SeriesError> {
    let lin = linear_part(field, diff)?;
    let nonlinear = power_samples(field, cfg.p, cfg.dealias);
    let kernel = NormKernel::new(field.grid());
    let s = field.grid().sites();
    let q = cfg.q as i32 - 1;
    Ok((1..field.samples() - 1)
        .into_par_iter()
        .map(|j| {
            let r: Vec<f64> = lin[j * s..(j + 1) * s]
                .iter()
                .zip(&nonlinear[j * s..(j + 1) * s])
                .map(|(a, b)| a + cfg.lambda * b)
                .collect();
            kernel.norm(&r, q)
        })
        .reduce(|| 0.0, f64::max))
}

/// Residual of the order-`N` partial sum with the linear discretization
/// floor removed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesResidual {
    /// Plain centered residual of the partial sum.
    pub centered: f64,
    /// Centered residual of the free term alone, the `lambda = 0` floor.
    pub floor: f64,
    /// Residual with the linear operator's time discretization error
    /// removed: `max_j ||D Y_j + lambda (phi(o) + Y)_j^p||_{q-1}` where
    /// `Y = sum_{1<=n<=N} lambda^n S_n` and `D` is the trigonometric
    /// difference, which annihilates `phi(o)` exactly.
    pub above_floor: f64,
}

pub fn series_residual(
    cfg: &SeriesConfig,
    table: &CoefficientTable,
    order: usize,
) -> Result<SeriesResidual, SeriesError> {
    let free = table.graded_sum(0)?;
    let full = partial_sum(cfg, table, order)?;
    let mut y = TimeSampledField::zeros(*free.grid(), *free.time_grid());
    for n in 1..=order {
        y.add_scaled(cfg.lambda.powi(n as i32), &table.graded_sum(n)?)?;
    }
    let lin = linear_part(&y, TimeDifference::Trigonometric)?;
    let nonlinear = power_samples(&full, cfg.p, cfg.dealias);
    let kernel = NormKernel::new(free.grid());
    let s = free.grid().sites();
    let q = cfg.q as i32 - 1;
    let above_floor = (1..free.samples() - 1)
        .into_par_iter()
        .map(|j| {
            let r: Vec<f64> = lin[j * s..(j + 1) * s]
                .iter()
                .zip(&nonlinear[j * s..(j + 1) * s])
                .map(|(a, b)| a + cfg.lambda * b)
                .collect();
            kernel.norm(&r, q)
        })
        .reduce(|| 0.0, f64::max);
    let zero = SeriesConfig {
        lambda: 0.0,
        ..cfg.clone()
    };
    Ok(SeriesResidual {
        centered: residual(&full, cfg)?,
        floor: residual(&free, &zero)?,
        above_floor,
    })
}

/// The linear operator applied at interior samples (zeros at the ends).
fn linear_part(field: &TimeSampledField, diff: TimeDifference) -> Result<Vec<f64>, SeriesError> {
    let nt = field.samples();
    if nt < 3 {
        return Err(FieldError::Resolution(format!(
            "residual needs at least 3 time samples, have {nt}"
        ))
        .into());
    }
    let grid = *field.grid();
    let h = field.time_grid().dt;
    let omega = grid.frequencies();
    if diff == TimeDifference::Trigonometric && h * grid.max_frequency() >= std::f64::consts::PI {
        return Err(FieldError::Resolution(format!(
            "trigonometric difference needs dt * w_max < pi, have {}",
            h * grid.max_frequency()
        ))
        .into());
    }
    let spectral = Spectral::new(&grid);
    let coeffs: Vec<Vec<Complex64>> = (0..nt)
        .into_par_iter()
        .map(|j| spectral.forward(field.sample(j)))
        .collect();
    let s = grid.sites();
    let rows: Vec<Vec<f64>> = (0..nt)
        .into_par_iter()
        .map(|j| {
            if j == 0 || j == nt - 1 {
                return vec![0.0; s];
            }
            let c: Vec<Complex64> = (0..s)
                .map(|k| {
                    let (a, b, c) = (coeffs[j - 1][k], coeffs[j][k], coeffs[j + 1][k]);
                    let w = omega[k];
                    match diff {
                        TimeDifference::Centered => (a - b * 2.0 + c) / (h * h) + b * (w * w),
                        TimeDifference::Trigonometric => {
                            let (sn, cs) = (w * h).sin_cos();
                            (a - b * (2.0 * cs) + c) * (w / (h * sn))
                        }
                    }
                })
                .collect();
            spectral.inverse(&c)
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

fn power_samples(field: &TimeSampledField, p: usize, dealias: bool) -> Vec<f64> {
    let mult = Multiplier::new(*field.grid(), p, dealias);
    let rows: Vec<Vec<f64>> = (0..field.samples())
        .into_par_iter()
        .map(|j| {
            let u = field.sample(j);
            mult.multiply(&vec![u; p])
        })
        .collect();
    rows.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{FieldSnapshot, GridSpec};
    use std::f64::consts::PI;

    fn cfg(lambda: f64, max_order: usize) -> SeriesConfig {
        let g = GridSpec::new(1, 16, 2.0 * PI, 1.0).unwrap();
        let cauchy = CauchyData::new(
            FieldSnapshot::from_fn(g, |x| 0.3 * x[0].cos()).unwrap(),
            FieldSnapshot::from_fn(g, |x| 0.2 * (2.0 * x[0]).sin()).unwrap(),
        )
        .unwrap();
        SeriesConfig {
            p: 2,
            lambda,
            cauchy,
            time: TimeGrid::new(0.5, 0.01).unwrap(),
            q: 1,
            max_order,
            c_q: 0.65,
            dealias: false,
        }
    }

    #[test]
    fn validation_lists_all_problems() {
        let mut c = cfg(f64::NAN, 2);
        c.p = 1;
        c.q = 0;
        c.c_q = 0.0;
        match c.validate() {
            Err(SeriesError::Config(v)) => assert_eq!(v.len(), 4, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn threshold_examples() {
        assert!((threshold_formula(2, 1.0, 1.0, 1.0, 1.0) - 0.125).abs() < 1e-15);
        let a = threshold_formula(2, 1.0, 1.0, 1.0, 1.0);
        assert!((threshold_formula(2, 1.0, 1.0, 1.0, 2.0) - a / 2.0).abs() < 1e-15);
        assert!(threshold_formula(2, 1.0, 1e12, 1.0, 1.0) < 1e-12);
        assert_eq!(threshold_formula(3, 2.0, 1.0, 0.5, 0.0), f64::INFINITY);
    }

    #[test]
    fn initial_data_exact_and_lambda_zero_is_free() {
        let c = cfg(0.2, 3);
        let table = CoefficientTable::build(&c).unwrap();
        let free = table.graded_sum(0).unwrap();
        for n in 0..=3 {
            let s = partial_sum(&c, &table, n).unwrap();
            assert_eq!(s.sample(0), c.cauchy.phi0.values());
            assert_eq!(s.velocity_sample(0).unwrap(), c.cauchy.phi1.values());
        }
        let zero = SeriesConfig {
            lambda: 0.0,
            ..c.clone()
        };
        assert_eq!(
            partial_sum(&zero, &table, 3).unwrap().values(),
            free.values()
        );
        assert!(partial_sum(&c, &table, 4).is_err());
    }

    #[test]
    fn zero_data_gives_zero_coefficients() {
        let mut c = cfg(0.5, 3);
        c.cauchy = CauchyData::zeros(*c.grid());
        let table = CoefficientTable::build(&c).unwrap();
        for level in table.classes() {
            for class in level {
                let f = table.get(&class.representative).unwrap();
                assert!(f.field().values().iter().all(|&v| v == 0.0));
                let r = bound_check(&class.representative, &c, &table).unwrap();
                assert!(r.closed_holds && r.norm == 0.0);
            }
        }
        assert_eq!(convergence_threshold(&c).lambda_max, f64::INFINITY);
    }

    #[test]
    fn cached_and_uncached_agree_bitwise() {
        let c = cfg(0.1, 3);
        let table = CoefficientTable::build(&c).unwrap();
        for level in table.classes() {
            for class in level {
                for variant in class.representative.planar_variants() {
                    let direct = compute_coefficient_uncached(&variant, &c).unwrap();
                    assert_eq!(
                        direct.values(),
                        table.get(&variant).unwrap().field().values()
                    );
                }
            }
        }
    }

    #[test]
    fn residual_needs_three_samples() {
        let c = cfg(0.1, 0);
        let f = TimeSampledField::zeros(*c.grid(), TimeGrid::new(1.0, 1.0).unwrap());
        assert!(matches!(
            residual(&f, &c),
            Err(SeriesError::Field(FieldError::Resolution(_)))
        ));
        let z = TimeSampledField::zeros(*c.grid(), c.time);
        assert_eq!(residual(&z, &c).unwrap(), 0.0);
    }

    #[test]
    fn trigonometric_difference_annihilates_free_field() {
        let c = cfg(0.0, 0);
        let free = free_field(&c.cauchy, c.time);
        assert!(residual_with(&free, &c, TimeDifference::Trigonometric).unwrap() < 1e-10);
        assert!(residual(&free, &c).unwrap() > 1e-6);
    }
}
