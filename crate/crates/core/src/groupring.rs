//! Exact integer group ring `Z[G]` with dense, overflow-checked coefficients.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::FiniteGroup;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupRingError {
    #[error("element belongs to a group of order {got}, expected {expected}")]
    GroupMismatch { got: usize, expected: usize },
    #[error("element index {0} out of range")]
    OutOfRange(usize),
    #[error("coefficient overflow")]
    Overflow,
}

/// `sum_g c_g g` as a dense coefficient vector indexed by element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupRingElement {
    coeffs: Vec<i64>,
}

impl GroupRingElement {
    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn coeff(&self, g: usize) -> i64 {
        self.coeffs[g]
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn sum(&self) -> i64 {
        self.coeffs.iter().sum()
    }

    /// Support, in index order.
    pub fn support(&self) -> Vec<usize> {
        self.coeffs.iter().enumerate().filter(|(_, &c)| c != 0).map(|(g, _)| g).collect()
    }

    /// Elements carrying coefficient exactly `value`.
    pub fn level_set(&self, value: i64) -> Vec<usize> {
        self.coeffs.iter().enumerate().filter(|(_, &c)| c == value).map(|(g, _)| g).collect()
    }

    /// Distinct coefficient values, ascending.
    pub fn values(&self) -> Vec<i64> {
        let mut v = self.coeffs.clone();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Arithmetic context for `Z[G]`.
#[derive(Clone, Copy, Debug)]
pub struct GroupRing<'g> {
    group: &'g FiniteGroup,
}

impl<'g> GroupRing<'g> {
    pub fn new(group: &'g FiniteGroup) -> Self {
        GroupRing { group }
    }

    pub fn group(&self) -> &'g FiniteGroup {
        self.group
    }

    fn check(&self, a: &GroupRingElement) -> Result<(), GroupRingError> {
        if a.coeffs.len() == self.group.order() {
            Ok(())
        } else {
            Err(GroupRingError::GroupMismatch { got: a.coeffs.len(), expected: self.group.order() })
        }
    }

    pub fn zero(&self) -> GroupRingElement {
        GroupRingElement { coeffs: vec![0; self.group.order()] }
    }

    pub fn from_coeffs(&self, coeffs: Vec<i64>) -> Result<GroupRingElement, GroupRingError> {
        let a = GroupRingElement { coeffs };
        self.check(&a)?;
        Ok(a)
    }

    /// `n e`
    pub fn scalar(&self, n: i64) -> GroupRingElement {
        let mut a = self.zero();
        a.coeffs[0] = n;
        a
    }

    /// The 0/1 vector of a subset (repeated indices count once).
    pub fn indicator(&self, set: &[usize]) -> Result<GroupRingElement, GroupRingError> {
        let mut a = self.zero();
        for &g in set {
            if g >= self.group.order() {
                return Err(GroupRingError::OutOfRange(g));
            }
            a.coeffs[g] = 1;
        }
        Ok(a)
    }

    /// The whole group `G` as a group-ring element.
    pub fn all(&self) -> GroupRingElement {
        GroupRingElement { coeffs: vec![1; self.group.order()] }
    }

    pub fn add(&self, a: &GroupRingElement, b: &GroupRingElement) -> Result<GroupRingElement, GroupRingError> {
        self.check(a)?;
        self.check(b)?;
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| x.checked_add(*y).ok_or(GroupRingError::Overflow))
            .collect::<Result<_, _>>()?;
        Ok(GroupRingElement { coeffs })
    }

    pub fn sub(&self, a: &GroupRingElement, b: &GroupRingElement) -> Result<GroupRingElement, GroupRingError> {
        self.check(a)?;
        self.check(b)?;
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| x.checked_sub(*y).ok_or(GroupRingError::Overflow))
            .collect::<Result<_, _>>()?;
        Ok(GroupRingElement { coeffs })
    }

    pub fn scale(&self, n: i64, a: &GroupRingElement) -> Result<GroupRingElement, GroupRingError> {
        self.check(a)?;
        let coeffs =
            a.coeffs.iter().map(|x| x.checked_mul(n).ok_or(GroupRingError::Overflow)).collect::<Result<_, _>>()?;
        Ok(GroupRingElement { coeffs })
    }

    /// `sum_i n_i a_i`
    pub fn combination(&self, terms: &[(i64, &GroupRingElement)]) -> Result<GroupRingElement, GroupRingError> {
        terms.iter().try_fold(self.zero(), |acc, (n, a)| self.add(&acc, &self.scale(*n, a)?))
    }

    /// Convolution `c_g = sum_{h k = g} a_h b_k`.
    pub fn mul(&self, a: &GroupRingElement, b: &GroupRingElement) -> Result<GroupRingElement, GroupRingError> {
        self.check(a)?;
        self.check(b)?;
        let g = self.group;
        let nz_a: Vec<(usize, i64)> = a.coeffs.iter().copied().enumerate().filter(|(_, c)| *c != 0).collect();
        let nz_b: Vec<(usize, i64)> = b.coeffs.iter().copied().enumerate().filter(|(_, c)| *c != 0).collect();
        let accumulate = |chunk: &[(usize, i64)]| -> Result<Vec<i64>, GroupRingError> {
            let mut out = vec![0i64; g.order()];
            for &(h, x) in chunk {
                for &(k, y) in &nz_b {
                    let slot = &mut out[g.mul(h, k)];
                    let t = x.checked_mul(y).ok_or(GroupRingError::Overflow)?;
                    *slot = slot.checked_add(t).ok_or(GroupRingError::Overflow)?;
                }
            }
            Ok(out)
        };
        let work = nz_a.len() * nz_b.len();
        let coeffs = if work < (1 << 18) {
            accumulate(&nz_a)?
        } else {
            let chunk = nz_a.len().div_ceil(rayon::current_num_threads().max(1));
            let partials: Vec<Vec<i64>> = nz_a.par_chunks(chunk.max(1)).map(accumulate).collect::<Result<_, _>>()?;
            let mut out = vec![0i64; g.order()];
            for p in partials {
                for (o, v) in out.iter_mut().zip(p) {
                    *o = o.checked_add(v).ok_or(GroupRingError::Overflow)?;
                }
            }
            out
        };
        Ok(GroupRingElement { coeffs })
    }

    /// `a^(-1) = sum_g a_g g^-1`
    pub fn involution(&self, a: &GroupRingElement) -> Result<GroupRingElement, GroupRingError> {
        self.check(a)?;
        let mut out = self.zero();
        for (g, &c) in a.coeffs.iter().enumerate() {
            out.coeffs[self.group.inv(g)] = c;
        }
        Ok(out)
    }

    /// `(a, b) = sum_g a_g b_g`
    pub fn scalar_product(&self, a: &GroupRingElement, b: &GroupRingElement) -> Result<i64, GroupRingError> {
        self.check(a)?;
        self.check(b)?;
        a.coeffs.iter().zip(&b.coeffs).try_fold(0i64, |acc, (x, y)| {
            x.checked_mul(*y).and_then(|t| acc.checked_add(t)).ok_or(GroupRingError::Overflow)
        })
    }

    /// Product of two subsets as group-ring elements.
    pub fn set_product(&self, x: &[usize], y: &[usize]) -> Result<GroupRingElement, GroupRingError> {
        self.mul(&self.indicator(x)?, &self.indicator(y)?)
    }

    /// `X X^(-1)`
    pub fn difference_product(&self, x: &[usize]) -> Result<GroupRingElement, GroupRingError> {
        let a = self.indicator(x)?;
        self.mul(&a, &self.involution(&a)?)
    }
}

/// `{x^-1 : x in X}`, sorted.
pub fn inverse_set(group: &FiniteGroup, set: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = set.iter().map(|&g| group.inv(g)).collect();
    v.sort_unstable();
    v
}

/// Sorted, deduplicated copy of a subset.
pub fn normalize_set(set: &[usize]) -> Vec<usize> {
    let mut v = set.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}
