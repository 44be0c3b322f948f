//! Occupation-number basis, dense operators and the low-occupation subspace
//! on which truncated products are exact.

use std::ops::{Add, Mul, Sub};

use ndarray::Array2;
use num_complex::Complex64;

use super::QuantumError;

/// Tensor product of `modes` oscillators, each truncated to occupations
/// `0..=n_max`. Basis states are indexed in mixed radix, mode 0 slowest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockSpace {
    modes: usize,
    n_max: usize,
    dim: usize,
}

impl FockSpace {
    pub fn new(modes: usize, n_max: usize) -> Result<Self, QuantumError> {
        let dim = (n_max + 1)
            .checked_pow(modes as u32)
            .filter(|&d| d <= 1 << 14)
            .ok_or_else(|| {
                QuantumError::Config(vec![format!(
                    "Fock dimension ({n_max}+1)^{modes} is too large"
                )])
            })?;
        Ok(Self { modes, n_max, dim })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn occupations(&self, index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.modes];
        let mut rest = index;
        for slot in occ.iter_mut().rev() {
            *slot = rest % (self.n_max + 1);
            rest /= self.n_max + 1;
        }
        occ
    }

    pub fn index(&self, occupations: &[usize]) -> usize {
        occupations
            .iter()
            .fold(0, |acc, &n| acc * (self.n_max + 1) + n)
    }

    pub fn total_number(&self, index: usize) -> usize {
        self.occupations(index).iter().sum()
    }

    fn stride(&self, mode: usize) -> usize {
        (self.n_max + 1).pow((self.modes - 1 - mode) as u32)
    }

    /// Truncated annihilation operator of `mode`.
    pub fn annihilate(&self, mode: usize) -> Result<ModeOperator, QuantumError> {
        if mode >= self.modes {
            return Err(QuantumError::Range(format!(
                "mode {mode} outside 0..{}",
                self.modes
            )));
        }
        let stride = self.stride(mode);
        let mut m = Array2::zeros((self.dim, self.dim));
        for i in 0..self.dim {
            let n = (i / stride) % (self.n_max + 1);
            if n > 0 {
                m[[i - stride, i]] = Complex64::new((n as f64).sqrt(), 0.0);
            }
        }
        Ok(ModeOperator(m))
    }

    pub fn create(&self, mode: usize) -> Result<ModeOperator, QuantumError> {
        Ok(self.annihilate(mode)?.adjoint())
    }

    pub fn identity(&self) -> ModeOperator {
        ModeOperator(Array2::eye(self.dim))
    }

    pub fn zero(&self) -> ModeOperator {
        ModeOperator(Array2::zeros((self.dim, self.dim)))
    }
}

/// Dense complex matrix acting on a [`FockSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModeOperator(pub Array2<Complex64>);

impl ModeOperator {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        ModeOperator(self.0.t().mapv(|z| z.conj()))
    }

    pub fn dot(&self, other: &Self) -> Self {
        ModeOperator(self.0.dot(&other.0))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &self.dot(other) - &other.dot(self)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        ModeOperator(self.0.mapv(|z| z * factor))
    }

    /// `self += factor * other`
    pub fn add_scaled(&mut self, factor: Complex64, other: &Self) {
        self.0.scaled_add(factor, &other.0);
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Product of a non-empty list, left to right.
    pub fn product<'a>(factors: impl IntoIterator<Item = &'a ModeOperator>) -> Self {
        let mut it = factors.into_iter();
        let first = it.next().expect("non-empty product").clone();
        it.fold(first, |acc, f| acc.dot(f))
    }
}

impl Add for &ModeOperator {
    type Output = ModeOperator;
    fn add(self, rhs: Self) -> ModeOperator {
        ModeOperator(&self.0 + &rhs.0)
    }
}

impl Sub for &ModeOperator {
    type Output = ModeOperator;
    fn sub(self, rhs: Self) -> ModeOperator {
        ModeOperator(&self.0 - &rhs.0)
    }
}

impl Mul for &ModeOperator {
    type Output = ModeOperator;
    fn mul(self, rhs: Self) -> ModeOperator {
        self.dot(rhs)
    }
}

/// States with total occupation at most `n_safe`.
///
/// A product of `K` ladder factors between two such states only passes
/// through intermediate states with total occupation at most
/// `n_safe + floor(K/2)`. With `n_safe = n_max - floor(K/2)` no path reaches
/// past the cutoff, so matrix elements of truncated products agree exactly
/// with the untruncated ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SafeSubspace {
    n_safe: usize,
    factors: usize,
    indices: Vec<usize>,
}

impl SafeSubspace {
    pub fn for_factors(space: &FockSpace, factors: usize) -> Result<Self, QuantumError> {
        let reach = factors / 2;
        if reach > space.n_max() {
            return Err(QuantumError::Truncation {
                factors,
                n_max: space.n_max(),
                needed: reach,
            });
        }
        let n_safe = space.n_max() - reach;
        let indices = (0..space.dim())
            .filter(|&i| space.total_number(i) <= n_safe)
            .collect();
        Ok(Self {
            n_safe,
            factors,
            indices,
        })
    }

    pub fn n_safe(&self) -> usize {
        self.n_safe
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// The block of `op` with both indices in the subspace.
    pub fn compress(&self, op: &ModeOperator) -> Array2<Complex64> {
        let k = self.indices.len();
        Array2::from_shape_fn((k, k), |(a, b)| op.0[[self.indices[a], self.indices[b]]])
    }

    /// Largest entry of the compressed difference `a - b`.
    pub fn max_deviation(&self, a: &ModeOperator, b: &ModeOperator) -> f64 {
        let d = self.compress(&(a - b));
        d.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_round_trip() {
        let f = FockSpace::new(3, 2).unwrap();
        assert_eq!(f.dim(), 27);
        for i in 0..f.dim() {
            assert_eq!(f.index(&f.occupations(i)), i);
        }
        assert_eq!(f.occupations(f.index(&[1, 0, 2])), vec![1, 0, 2]);
        assert!(FockSpace::new(20, 9).is_err());
    }

    #[test]
    fn ladder_action() {
        let f = FockSpace::new(2, 3).unwrap();
        let a1 = f.annihilate(1).unwrap();
        let vac = f.index(&[0, 0]);
        assert!(a1.0.column(vac).iter().all(|z| z.norm() == 0.0));
        let s = f.index(&[2, 3]);
        let col = a1.0.column(s);
        assert!((col[f.index(&[2, 2])].re - 3f64.sqrt()).abs() < 1e-15);
        assert!(f.annihilate(2).is_err());
    }

    #[test]
    fn canonical_commutation_on_safe_subspace() {
        let f = FockSpace::new(2, 4).unwrap();
        let safe = SafeSubspace::for_factors(&f, 2).unwrap();
        assert_eq!(safe.n_safe(), 3);
        for k in 0..2 {
            let a = f.annihilate(k).unwrap();
            let c = a.commutator(&f.create(k).unwrap());
            assert!(safe.max_deviation(&c, &f.identity()) < 1e-14);
            // the cutoff shows up outside the subspace
            assert!((&c - &f.identity()).max_abs() > 1.0);
            for l in 0..2 {
                if l != k {
                    let cross = a.commutator(&f.create(l).unwrap());
                    assert_eq!(cross.max_abs(), 0.0);
                }
            }
        }
    }

    #[test]
    fn truncation_is_detected() {
        let f = FockSpace::new(1, 3).unwrap();
        assert!(matches!(
            SafeSubspace::for_factors(&f, 8),
            Err(QuantumError::Truncation { .. })
        ));
        assert_eq!(SafeSubspace::for_factors(&f, 7).unwrap().n_safe(), 0);
    }
}
