//! Tree operators and the Dyson expansion on a [`NodeGrid`].

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::fields::field_unchecked;
use super::{ModeOperator, NodeGrid, QuantumError, QuantumLatticeSpec, SafeSubspace};
use crate::lattice::retarded_kernel;
use crate::ptree::PTree;

/// Phase convention of the evolution operator,
/// `U = sum_a (s i lambda)^a int_{tau_1 > ... > tau_a} H(tau_1)...H(tau_a)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DysonSign {
    /// `s = +1`: `T exp(+i lambda int H)`.
    Plus,
    /// `s = -1`: `T exp(-i lambda int H)`.
    Minus,
}

impl DysonSign {
    pub fn unit(self) -> Complex64 {
        match self {
            DysonSign::Plus => Complex64::i(),
            DysonSign::Minus => -Complex64::i(),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            DysonSign::Plus => DysonSign::Minus,
            DysonSign::Minus => DysonSign::Plus,
        }
    }
}

type NodeValues = Vec<Vec<ModeOperator>>;

/// Memoized tree operators at every node of a grid.
///
/// `phi(B+(b1..bp))(tau_i, y) = -int_{t0}^{tau_i} ds int dz G_ret(tau_i - s, y - z)
/// phi(b1)(s, z)...phi(bp)(s, z)`, with the trapezoidal rule in time, the
/// exact grid sum in space, and the factors multiplied left to right.
pub struct TreeOperators<'g> {
    grid: &'g NodeGrid,
    /// `kernel[lag][shift] = G_ret(lag dtau, shift L / n_y)`
    kernel: Vec<Vec<Complex64>>,
    cache: HashMap<String, Arc<NodeValues>>,
}

impl<'g> TreeOperators<'g> {
    pub fn new(grid: &'g NodeGrid) -> Self {
        let spec = &grid.spec;
        let modes = spec.wavevectors();
        let n_y = grid.points.len();
        let kernel = (0..grid.times.len())
            .map(|lag| {
                (0..n_y)
                    .map(|shift| {
                        retarded_kernel(
                            spec.mass,
                            spec.volume(),
                            &modes,
                            lag as f64 * grid.dtau,
                            &[grid.points[shift]],
                        )
                    })
                    .collect()
            })
            .collect();
        Self {
            grid,
            kernel,
            cache: HashMap::new(),
        }
    }

    /// Checks that products of this tree's field factors stay below the
    /// cutoff on the safe subspace.
    pub fn check_cutoff(&self, tree: &PTree) -> Result<SafeSubspace, QuantumError> {
        SafeSubspace::for_factors(&self.grid.space, tree.leaf_count())
    }

    /// The tree operator at every `(tau_i, y_s)`.
    pub fn nodes(&mut self, tree: &PTree) -> Result<Arc<NodeValues>, QuantumError> {
        if let Some(v) = self.cache.get(tree.key()) {
            return Ok(Arc::clone(v));
        }
        self.check_cutoff(tree)?;
        let values = match tree {
            PTree::Leaf => self.grid.free.clone(),
            PTree::Node(_) => {
                let sources = self.sources(tree)?;
                let g = self.grid;
                let n_y = g.points.len();
                (0..g.times.len())
                    .into_par_iter()
                    .map(|i| {
                        (0..n_y)
                            .map(|target| {
                                self.integrate(&sources, i, |j, s| {
                                    self.kernel[i - j][(target + n_y - s) % n_y]
                                })
                            })
                            .collect()
                    })
                    .collect()
            }
        };
        let values = Arc::new(values);
        self.cache
            .insert(tree.key().to_owned(), Arc::clone(&values));
        Ok(values)
    }

    /// The tree operator at `(t, x)`, `t` the grid's final time.
    pub fn at(&mut self, tree: &PTree, x: f64) -> Result<ModeOperator, QuantumError> {
        self.check_cutoff(tree)?;
        match tree {
            PTree::Leaf => Ok(field_unchecked(
                &self.grid.spec,
                &self.grid.space,
                self.grid.t,
                x,
            )),
            PTree::Node(_) => {
                let sources = self.sources(tree)?;
                let g = self.grid;
                let spec = &g.spec;
                let modes = spec.wavevectors();
                let last = g.steps();
                Ok(self.integrate(&sources, last, |j, s| {
                    retarded_kernel(
                        spec.mass,
                        spec.volume(),
                        &modes,
                        g.t - g.times[j],
                        &[x - g.points[s]],
                    )
                }))
            }
        }
    }

    /// Ordered products of the children at every node.
    fn sources(&mut self, tree: &PTree) -> Result<NodeValues, QuantumError> {
        let children: Vec<Arc<NodeValues>> = tree
            .decompose()
            .expect("internal vertex")
            .iter()
            .map(|c| self.nodes(c))
            .collect::<Result<_, _>>()?;
        let g = self.grid;
        Ok((0..g.times.len())
            .into_par_iter()
            .map(|j| {
                (0..g.points.len())
                    .map(|s| ModeOperator::product(children.iter().map(|c| &c[j][s])))
                    .collect()
            })
            .collect())
    }

    /// `-sum_{j<=i} w_j sum_s dV G(j, s) sources[j][s]` with trapezoidal
    /// weights on `[t0, tau_i]`.
    fn integrate(
        &self,
        sources: &NodeValues,
        i: usize,
        g: impl Fn(usize, usize) -> Complex64,
    ) -> ModeOperator {
        let grid = self.grid;
        let mut acc = grid.space.zero();
        if i == 0 {
            return acc;
        }
        let dv = grid.cell_volume();
        for (j, row) in sources.iter().enumerate().take(i + 1) {
            let w = if j == 0 || j == i {
                0.5 * grid.dtau
            } else {
                grid.dtau
            };
            for (s, op) in row.iter().enumerate() {
                acc.add_scaled(-g(j, s) * (w * dv), op);
            }
        }
        acc
    }
}

/// The tree operator of `tree` at `(t, x)` with time step `dtau`.
pub fn tree_operator(
    spec: &QuantumLatticeSpec,
    p: usize,
    tree: &PTree,
    t: f64,
    x: f64,
    dtau: f64,
) -> Result<ModeOperator, QuantumError> {
    let grid = NodeGrid::new(spec, p, t, dtau)?;
    TreeOperators::new(&grid).at(tree, x)
}

/// `H_I(tau_i) = 1/(p+1) sum_s dV phi_I(tau_i, y_s)^(p+1)` at every node.
pub fn interaction_hamiltonian(grid: &NodeGrid) -> Vec<ModeOperator> {
    let dv = grid.cell_volume();
    let scale = Complex64::new(dv / (grid.p + 1) as f64, 0.0);
    grid.free
        .par_iter()
        .map(|row| {
            let mut h = grid.space.zero();
            for phi in row {
                let power = ModeOperator::product(std::iter::repeat_n(phi, grid.p + 1));
                h.add_scaled(scale, &power);
            }
            h
        })
        .collect()
}

/// Graded Dyson terms `U_a(t)`, `a = 0..=order`, without the `lambda^a`.
///
/// The simplex integrals use the left-endpoint rule through the recursion
/// `W_a(tau_j) = sum_{i<j} dtau H(tau_i) W_{a-1}(tau_i)`, `U_a = (s i)^a W_a(t)`.
pub fn dyson_components(grid: &NodeGrid, order: usize, sign: DysonSign) -> Vec<ModeOperator> {
    let h = interaction_hamiltonian(grid);
    let dt = Complex64::new(grid.dtau, 0.0);
    let mut prev: Vec<ModeOperator> = vec![grid.space.identity(); grid.times.len()];
    let mut out = vec![grid.space.identity()];
    let mut phase = Complex64::new(1.0, 0.0);
    for _ in 1..=order {
        let mut w = Vec::with_capacity(grid.times.len());
        let mut running = grid.space.zero();
        for (hi, wi) in h.iter().zip(&prev) {
            w.push(running.clone());
            running.add_scaled(dt, &hi.dot(wi));
        }
        phase *= sign.unit();
        out.push(w.last().expect("at least one node").scale(phase));
        prev = w;
    }
    out
}

/// `sum_{a<=order} lambda^a U_a(t)`.
pub fn dyson_u(
    spec: &QuantumLatticeSpec,
    p: usize,
    t: f64,
    order: usize,
    dtau: f64,
    lambda: f64,
    sign: DysonSign,
) -> Result<ModeOperator, QuantumError> {
    let grid = NodeGrid::new(spec, p, t, dtau)?;
    let comps = dyson_components(&grid, order, sign);
    let mut acc = grid.space.zero();
    for (a, u) in comps.iter().enumerate() {
        acc.add_scaled(Complex64::new(lambda.powi(a as i32), 0.0), u);
    }
    Ok(acc)
}

/// Graded pieces of `U(t)^dag phi_I(t, x) U(t)`:
/// `R_m = sum_{r+s=m} U_r^dag phi_I(t, x) U_s`.
pub fn heisenberg_components(
    grid: &NodeGrid,
    x: f64,
    order: usize,
    sign: DysonSign,
) -> Vec<ModeOperator> {
    let u = dyson_components(grid, order, sign);
    let phi = field_unchecked(&grid.spec, &grid.space, grid.t, x);
    let left: Vec<ModeOperator> = u.iter().map(|ur| ur.adjoint().dot(&phi)).collect();
    (0..=order)
        .map(|m| {
            let mut acc = grid.space.zero();
            for r in 0..=m {
                acc.add_scaled(Complex64::new(1.0, 0.0), &left[r].dot(&u[m - r]));
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::free_field_op;

    fn spec() -> QuantumLatticeSpec {
        QuantumLatticeSpec {
            dims: 1,
            modes: 1,
            n_max: 6,
            box_len: 1.0,
            mass: 1.0,
            t0: 0.0,
        }
    }

    #[test]
    fn leaf_is_the_free_field() {
        let s = spec();
        let op = tree_operator(&s, 2, &PTree::leaf(), 0.5, 0.2, 0.05).unwrap();
        assert_eq!(op, free_field_op(&s, 0.5, 0.2).unwrap());
    }

    #[test]
    fn dyson_base_cases() {
        let s = spec();
        let g = NodeGrid::new(&s, 2, 0.5, 0.05).unwrap();
        let u = dyson_components(&g, 3, DysonSign::Minus);
        assert_eq!(u[0], g.space.identity());
        let at_t0 = dyson_u(&s, 2, 0.0, 3, 0.05, 0.7, DysonSign::Plus);
        // t = t0 admits any step that divides zero
        assert_eq!(at_t0.unwrap(), g.space.identity());
    }

    #[test]
    fn hamiltonian_is_self_adjoint() {
        let s = QuantumLatticeSpec {
            modes: 3,
            n_max: 2,
            ..spec()
        };
        let g = NodeGrid::new(&s, 2, 0.2, 0.1).unwrap();
        for h in interaction_hamiltonian(&g) {
            assert!((&h - &h.adjoint()).max_abs() < 1e-13);
        }
    }

    #[test]
    fn cutoff_violation_is_an_error() {
        let s = QuantumLatticeSpec { n_max: 1, ..spec() };
        let tree = PTree::parse("(((oo)o)o)", 2).unwrap();
        assert!(matches!(
            tree_operator(&s, 2, &tree, 0.5, 0.0, 0.1),
            Err(QuantumError::Truncation { .. })
        ));
    }
}
