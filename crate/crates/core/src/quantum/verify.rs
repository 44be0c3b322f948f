//! Order-by-order comparisons on the safe subspace.

use num_complex::Complex64;
use serde::Serialize;

use super::fields::field_unchecked;
use super::{
    dyson_components, heisenberg_components, pauli_jordan, DysonSign, ModeOperator, NodeGrid,
    QuantumError, QuantumLatticeSpec, SafeSubspace, TreeOperators,
};
use crate::fit::{log_log_slope, SlopeFit};
use crate::ptree::{enumerate, PTree};

/// Deviations at or below this are treated as exact.
pub const MACHINE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementLevel {
    pub dtau: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnitarityReport {
    pub order: usize,
    pub n_safe: usize,
    pub sign: DysonSign,
    pub levels: Vec<RefinementLevel>,
    pub fit: Option<SlopeFit>,
    pub at_machine_floor: bool,
}

impl UnitarityReport {
    /// Exact at every level, or decreasing with fitted order at least
    /// `min_slope`.
    pub fn passes(&self, min_slope: f64) -> bool {
        self.at_machine_floor || converges(&self.levels, self.fit, min_slope)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldIdentityReport {
    pub order: usize,
    pub n_safe: usize,
    pub sign: DysonSign,
    pub levels: Vec<RefinementLevel>,
    pub fit: Option<SlopeFit>,
    pub at_machine_floor: bool,
}

impl FieldIdentityReport {
    pub fn passes(&self, min_slope: f64) -> bool {
        self.at_machine_floor || converges(&self.levels, self.fit, min_slope)
    }
}

fn converges(levels: &[RefinementLevel], fit: Option<SlopeFit>, min_slope: f64) -> bool {
    let decreasing = levels.windows(2).all(|w| w[1].deviation < w[0].deviation);
    decreasing && fit.is_some_and(|f| f.slope >= min_slope)
}

fn fit_levels(levels: &[RefinementLevel]) -> Option<SlopeFit> {
    let x: Vec<f64> = levels.iter().map(|l| l.dtau).collect();
    let y: Vec<f64> = levels.iter().map(|l| l.deviation).collect();
    log_log_slope(&x, &y)
}

/// Graded pieces of `U U^dag` and `U^dag U` up to `order`.
pub fn unitarity_components(
    grid: &NodeGrid,
    order: usize,
    sign: DysonSign,
) -> (Vec<ModeOperator>, Vec<ModeOperator>) {
    let u = dyson_components(grid, order, sign);
    let ud: Vec<ModeOperator> = u.iter().map(ModeOperator::adjoint).collect();
    let graded = |left: &[ModeOperator], right: &[ModeOperator]| -> Vec<ModeOperator> {
        (0..=order)
            .map(|m| {
                let mut acc = grid.space.zero();
                for a in 0..=m {
                    acc.add_scaled(Complex64::new(1.0, 0.0), &left[a].dot(&right[m - a]));
                }
                acc
            })
            .collect()
    };
    (graded(&u, &ud), graded(&ud, &u))
}

/// Largest safe-subspace deviation of the order-`m` pieces of `U U^dag` and
/// `U^dag U` from `delta_{0m} Id`, at each step in `dtaus`.
pub fn unitarity_check(
    spec: &QuantumLatticeSpec,
    p: usize,
    t: f64,
    order: usize,
    dtaus: &[f64],
    sign: DysonSign,
) -> Result<UnitarityReport, QuantumError> {
    let space = spec.space()?;
    let safe = SafeSubspace::for_factors(&space, (p + 1) * order)?;
    let target = if order == 0 {
        space.identity()
    } else {
        space.zero()
    };
    let mut levels = Vec::with_capacity(dtaus.len());
    for &dtau in dtaus {
        let grid = NodeGrid::new(spec, p, t, dtau)?;
        let (uud, udu) = unitarity_components(&grid, order, sign);
        let deviation = safe
            .max_deviation(&uud[order], &target)
            .max(safe.max_deviation(&udu[order], &target));
        levels.push(RefinementLevel { dtau, deviation });
    }
    Ok(UnitarityReport {
        order,
        n_safe: safe.n_safe(),
        sign,
        fit: fit_levels(&levels),
        at_machine_floor: levels.iter().all(|l| l.deviation <= MACHINE_FLOOR),
        levels,
    })
}

/// Sum of the tree operators over all planar trees of order `m` at `(t, x)`.
fn tree_side(
    ops: &mut TreeOperators<'_>,
    p: usize,
    order: usize,
    x: f64,
) -> Result<ModeOperator, QuantumError> {
    let trees = enumerate(p, order).map_err(|e| QuantumError::Config(vec![e.to_string()]))?;
    let mut acc: Option<ModeOperator> = None;
    for b in &trees {
        let v = ops.at(b, x)?;
        acc = Some(match acc {
            None => v,
            Some(a) => &a + &v,
        });
    }
    Ok(acc.expect("at least one tree per order"))
}

/// Deviation between the order-`m` tree sum and the order-`m` piece of the
/// conjugated free field, at each step in `dtaus`.
pub fn field_identity_check(
    spec: &QuantumLatticeSpec,
    p: usize,
    t: f64,
    x: f64,
    order: usize,
    dtaus: &[f64],
    sign: DysonSign,
) -> Result<FieldIdentityReport, QuantumError> {
    let space = spec.space()?;
    let safe = SafeSubspace::for_factors(&space, (p + 1) * order + 1)?;
    let mut levels = Vec::with_capacity(dtaus.len());
    for &dtau in dtaus {
        let grid = NodeGrid::new(spec, p, t, dtau)?;
        let mut ops = TreeOperators::new(&grid);
        let lhs = tree_side(&mut ops, p, order, x)?;
        let rhs = &heisenberg_components(&grid, x, order, sign)[order];
        levels.push(RefinementLevel {
            dtau,
            deviation: safe.max_deviation(&lhs, rhs),
        });
    }
    Ok(FieldIdentityReport {
        order,
        n_safe: safe.n_safe(),
        sign,
        fit: fit_levels(&levels),
        at_machine_floor: levels.iter().all(|l| l.deviation <= MACHINE_FLOOR),
        levels,
    })
}

/// First order with the commutator evaluated in closed form: the tree
/// operator of `B+(o..o)` against `s i int dy Delta(x - y) phi_I(y)^p`, both
/// with the same trapezoidal nodes. Uses
/// `[phi(x), phi(y)^(p+1)] = (p+1) Delta(x-y) phi(y)^p`.
pub fn field_identity_shortcut(
    spec: &QuantumLatticeSpec,
    p: usize,
    t: f64,
    x: f64,
    dtau: f64,
    sign: DysonSign,
) -> Result<f64, QuantumError> {
    let grid = NodeGrid::new(spec, p, t, dtau)?;
    let safe = SafeSubspace::for_factors(&grid.space, p + 2)?;
    let tree = PTree::graft(p, vec![PTree::leaf(); p])
        .map_err(|e| QuantumError::Config(vec![e.to_string()]))?;
    let lhs = TreeOperators::new(&grid).at(&tree, x)?;
    let mut rhs = grid.space.zero();
    let last = grid.steps();
    let dv = grid.cell_volume();
    for (j, row) in grid.free.iter().enumerate() {
        let w = if j == 0 || j == last {
            0.5 * dtau
        } else {
            dtau
        };
        for (s, phi) in row.iter().enumerate() {
            let delta = pauli_jordan(spec, t - grid.times[j], x - grid.points[s]);
            let power = ModeOperator::product(std::iter::repeat_n(phi, p));
            rhs.add_scaled(sign.unit() * delta * (w * dv), &power);
        }
    }
    Ok(safe.max_deviation(&lhs, &rhs))
}

/// Deviation of `[phi_I(x), phi_I(y)]` from `Delta(x - y) Id` on the safe
/// subspace of two factors.
pub fn commutator_check(
    spec: &QuantumLatticeSpec,
    x: (f64, f64),
    y: (f64, f64),
) -> Result<f64, QuantumError> {
    let space = spec.space()?;
    let safe = SafeSubspace::for_factors(&space, 2)?;
    let a = field_unchecked(spec, &space, x.0, x.1);
    let b = field_unchecked(spec, &space, y.0, y.1);
    let delta = pauli_jordan(spec, x.0 - y.0, x.1 - y.1);
    Ok(safe.max_deviation(&a.commutator(&b), &space.identity().scale(delta)))
}
