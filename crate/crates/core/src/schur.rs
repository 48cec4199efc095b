//! Schur rings: partitions into basic sets, the S-ring axiom check with
//! structure constants, cyclotomic S-rings, and amorphic S-rings of Latin
//! square type over `F_n^2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ff::Field;
use crate::groupring::{GroupRing, GroupRingError};
use crate::groups::{elementary_abelian, orbits, Automorphism, FiniteGroup, GroupError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchurError {
    #[error("classes do not partition the group: {0}")]
    NotPartition(String),
    #[error("{{e}} is not a basic set")]
    IdentityNotClass,
    #[error("inverse of basic set {0} is not a basic set")]
    InverseNotClass(usize),
    #[error(
        "product of basic sets {x} and {y} is not constant on basic set {z}: \
         element {g1} has coefficient {c1}, element {g2} has {c2}"
    )]
    NotClosed { x: usize, y: usize, z: usize, g1: usize, c1: i64, g2: usize, c2: i64 },
    #[error("{t} does not divide {n}")]
    NotDivisor { t: usize, n: usize },
    #[error("labeling is invalid: {0}")]
    BadLabeling(String),
    #[error(transparent)]
    GroupRing(#[from] GroupRingError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// A partition of a group into basic sets, classes sorted by least element
/// (so the class `{e}` comes first).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchurPartition {
    classes: Vec<Vec<usize>>,
    #[serde(skip)]
    class_of: Vec<usize>,
}

impl SchurPartition {
    pub fn new(group: &FiniteGroup, classes: Vec<Vec<usize>>) -> Result<Self, SchurError> {
        let n = group.order();
        let mut classes: Vec<Vec<usize>> = classes
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c
            })
            .collect();
        if classes.iter().any(|c| c.is_empty()) {
            return Err(SchurError::NotPartition("empty class".into()));
        }
        classes.sort_by_key(|c| c[0]);
        let mut class_of = vec![usize::MAX; n];
        for (i, c) in classes.iter().enumerate() {
            for &g in c {
                if g >= n {
                    return Err(SchurError::NotPartition(format!("index {g} out of range")));
                }
                if class_of[g] != usize::MAX {
                    return Err(SchurError::NotPartition(format!("element {g} appears twice")));
                }
                class_of[g] = i;
            }
        }
        if let Some(g) = class_of.iter().position(|&c| c == usize::MAX) {
            return Err(SchurError::NotPartition(format!("element {g} is not covered")));
        }
        if classes[0] != [0] {
            return Err(SchurError::IdentityNotClass);
        }
        Ok(SchurPartition { classes, class_of })
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn rank(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of(&self, g: usize) -> usize {
        self.class_of[g]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }

    /// Index of the class equal to `set`, if any.
    pub fn find_class(&self, set: &[usize]) -> Option<usize> {
        let first = *set.first()?;
        let i = *self.class_of.get(first)?;
        (self.classes[i] == set).then_some(i)
    }
}

/// `c[x][y][z]` with `X_x * X_y = sum_z c[x][y][z] X_z`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureConstants {
    pub rank: usize,
    pub class_sizes: Vec<usize>,
    /// Index of the inverse class of each class.
    pub inverse_class: Vec<usize>,
    /// Dense cube, `x`-major.
    pub tensor: Vec<u64>,
}

impl StructureConstants {
    pub fn get(&self, x: usize, y: usize, z: usize) -> u64 {
        self.tensor[(x * self.rank + y) * self.rank + z]
    }

    /// Nested-array form for JSON export.
    pub fn cube(&self) -> Vec<Vec<Vec<u64>>> {
        (0..self.rank)
            .map(|x| (0..self.rank).map(|y| (0..self.rank).map(|z| self.get(x, y, z)).collect()).collect())
            .collect()
    }
}

/// Checks the S-ring axioms and returns the structure constants.
pub fn verify_sring(group: &FiniteGroup, partition: &SchurPartition) -> Result<StructureConstants, SchurError> {
    let zg = GroupRing::new(group);
    let rank = partition.rank();
    let mut inverse_class = Vec::with_capacity(rank);
    for (i, c) in partition.classes().iter().enumerate() {
        let inv = crate::groupring::inverse_set(group, c);
        inverse_class.push(partition.find_class(&inv).ok_or(SchurError::InverseNotClass(i))?);
    }
    let indicators: Vec<_> =
        partition.classes().iter().map(|c| zg.indicator(c)).collect::<Result<_, GroupRingError>>()?;
    let rows: Vec<Result<Vec<u64>, SchurError>> = (0..rank * rank)
        .into_par_iter()
        .map(|xy| {
            let (x, y) = (xy / rank, xy % rank);
            let prod = zg.mul(&indicators[x], &indicators[y])?;
            partition
                .classes()
                .iter()
                .enumerate()
                .map(|(z, class)| {
                    let g1 = class[0];
                    let c1 = prod.coeff(g1);
                    match class.iter().find(|&&g| prod.coeff(g) != c1) {
                        Some(&g2) => Err(SchurError::NotClosed { x, y, z, g1, c1, g2, c2: prod.coeff(g2) }),
                        None => Ok(c1 as u64),
                    }
                })
                .collect()
        })
        .collect();
    let mut tensor = Vec::with_capacity(rank * rank * rank);
    for row in rows {
        tensor.extend(row?);
    }
    Ok(StructureConstants { rank, class_sizes: partition.sizes(), inverse_class, tensor })
}

/// Orbit partition of `<gens>`; verified to be an S-ring before returning.
pub fn cyclotomic(group: &FiniteGroup, gens: &[Automorphism]) -> Result<SchurPartition, SchurError> {
    let partition = SchurPartition::new(group, orbits(group, gens))?;
    verify_sring(group, &partition)?;
    Ok(partition)
}

/// The amorphic Latin-square-type S-ring of rank `t + 1` over the additive
/// group of `F_n^2`.
#[derive(Clone, Debug)]
pub struct AmorphicLatin {
    /// `F_n^2` as an elementary abelian group; `(a, b) <-> a + n b`.
    pub group: FiniteGroup,
    pub n: usize,
    pub t: usize,
    /// Nonzero points of the `n + 1` lines through the origin, ordered by
    /// slope `inf, 0, 1, ...` (field enumeration).
    pub lines: Vec<Vec<usize>>,
    /// `labeling[i]` is the class in `0..t` that line `i` is fused into.
    pub labeling: Vec<usize>,
    /// `X_h` for `h in 0..t`, `h = 0` the identity of `H`.
    pub sets: Vec<Vec<usize>>,
}

impl AmorphicLatin {
    /// `k_h = |X_h| / (n - 1)`
    pub fn k(&self, h: usize) -> usize {
        self.sets[h].len() / (self.n - 1)
    }
}

/// Default labeling: the first `n/t + 1` lines go to class 0, then blocks
/// of `n/t` consecutive lines to classes `1, 2, ...`.
pub fn default_labeling(n: usize, t: usize) -> Vec<usize> {
    let block = n / t;
    (0..=n).map(|i| if i <= block { 0 } else { (i - 1) / block }).collect()
}

pub fn amorphic_latin(field: &Field, t: usize, labeling: Option<&[usize]>) -> Result<AmorphicLatin, SchurError> {
    let n = field.order() as usize;
    if t == 0 || !n.is_multiple_of(t) {
        return Err(SchurError::NotDivisor { t, n });
    }
    let group = elementary_abelian(field.characteristic(), 2 * field.degree())?;
    let point = |a: usize, b: usize| a + n * b;
    let mut lines = Vec::with_capacity(n + 1);
    lines.push((1..n).map(|y| point(0, y)).collect::<Vec<_>>());
    for m in field.elements() {
        let mut l: Vec<usize> = field.elements().skip(1).map(|x| point(x.index(), field.mul(m, x).index())).collect();
        l.sort_unstable();
        lines.push(l);
    }
    let labeling = match labeling {
        Some(l) => l.to_vec(),
        None => default_labeling(n, t),
    };
    if labeling.len() != n + 1 {
        return Err(SchurError::BadLabeling(format!("expected {} line labels, got {}", n + 1, labeling.len())));
    }
    let mut counts = vec![0usize; t];
    for &h in &labeling {
        if h >= t {
            return Err(SchurError::BadLabeling(format!("label {h} outside 0..{t}")));
        }
        counts[h] += 1;
    }
    for (h, &c) in counts.iter().enumerate() {
        let want = if h == 0 { n / t + 1 } else { n / t };
        if c != want {
            return Err(SchurError::BadLabeling(format!("class {h} has {c} lines, expected {want}")));
        }
    }
    let mut sets = vec![Vec::new(); t];
    for (line, &h) in lines.iter().zip(&labeling) {
        sets[h].extend_from_slice(line);
    }
    for s in sets.iter_mut() {
        s.sort_unstable();
    }
    Ok(AmorphicLatin { group, n, t, lines, labeling, sets })
}

/// Outcome of [`check_amorph_relations`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmorphVerdict {
    pub holds: bool,
    /// First pair `(h, h')` for which the relation fails.
    pub counterexample: Option<(usize, usize)>,
}

/// Checks, as exact group-ring identities over a group of order `n^2`,
///
/// `X_h^2 = k_h(n-1) e + (n - 2k_h) X_h + k_h(k_h - 1) G^#` and
/// `X_h X_h' = k_h k_h' G^# - k_h' X_h - k_h X_h'` for `h != h'`,
///
/// where `k_h = |X_h| / (n - 1)`.
pub fn check_amorph_relations(group: &FiniteGroup, sets: &[Vec<usize>]) -> Result<AmorphVerdict, SchurError> {
    let v = group.order();
    let n = (v as f64).sqrt().round() as usize;
    if n * n != v || n < 2 {
        return Err(SchurError::NotPartition(format!("group order {v} is not a square")));
    }
    let zg = GroupRing::new(group);
    let e = zg.scalar(1);
    let gsharp = zg.sub(&zg.all(), &e)?;
    let xs: Vec<_> = sets.iter().map(|s| zg.indicator(s)).collect::<Result<_, _>>()?;
    let mut ks = Vec::with_capacity(sets.len());
    for s in sets {
        if s.len() % (n - 1) != 0 {
            return Ok(AmorphVerdict { holds: false, counterexample: Some((ks.len(), ks.len())) });
        }
        ks.push((s.len() / (n - 1)) as i64);
    }
    let n = n as i64;
    for h in 0..sets.len() {
        for h2 in 0..sets.len() {
            let lhs = zg.mul(&xs[h], &xs[h2])?;
            let (k, k2) = (ks[h], ks[h2]);
            let rhs = if h == h2 {
                zg.combination(&[(k * (n - 1), &e), (n - 2 * k, &xs[h]), (k * (k - 1), &gsharp)])?
            } else {
                zg.combination(&[(k * k2, &gsharp), (-k2, &xs[h]), (-k, &xs[h2])])?
            };
            if lhs != rhs {
                return Ok(AmorphVerdict { holds: false, counterexample: Some((h, h2)) });
            }
        }
    }
    Ok(AmorphVerdict { holds: true, counterexample: None })
}
