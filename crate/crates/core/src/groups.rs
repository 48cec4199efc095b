//! Fully materialized finite groups.
//!
//! Every group is stored as a multiplication table over element indices
//! `0..order`, with index `0` the identity. Constructors cover the families
//! needed here (Heisenberg groups over `F_q`, the extraspecial group
//! `M_{p^3}` of exponent `p^2`, `Q_8`, cyclic and elementary abelian groups)
//! together with direct and central products.

use std::collections::{BTreeMap, HashSet, VecDeque};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ff::{Field, FieldElement, FieldError};

/// Largest group order that is materialized as a table.
pub const MAX_TABLE_ORDER: usize = 4096;

/// Groups up to this order are audited exhaustively; larger ones by sampling.
pub const EXHAUSTIVE_AUDIT_LIMIT: usize = 512;

const AUDIT_SAMPLES: usize = 100_000;
const AUDIT_SEED: u64 = 0x5eed_0fa1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("group order {0} exceeds the table limit {MAX_TABLE_ORDER}")]
    TooLarge(usize),
    #[error("group must be nonempty")]
    Empty,
    #[error("multiplication table has wrong length {got}, expected {expected}")]
    TableShape { got: usize, expected: usize },
    #[error("table entry out of range at ({0}, {1})")]
    TableEntry(usize, usize),
    #[error("index 0 is not a two-sided identity (fails at {0})")]
    Identity(usize),
    #[error("element {0} has no two-sided inverse")]
    Inverse(usize),
    #[error("associativity fails at ({0}, {1}, {2})")]
    Associativity(usize, usize, usize),
    #[error("element index {0} out of range")]
    OutOfRange(usize),
    #[error("subgroup is not central")]
    NotCentral,
    #[error("amalgamating map is not an isomorphism: {0}")]
    BadIsomorphism(String),
    #[error("generator images do not extend to an automorphism: {0}")]
    NotAutomorphism(String),
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// How a group was built. Serialized alongside (or instead of) its table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GroupDescriptor {
    Cyclic { n: usize },
    ElementaryAbelian { p: u32, k: u32 },
    Heisenberg { q: u32, r: u32 },
    ExtraspecialMp3 { p: u32 },
    Quaternion8,
    DirectProduct { left: Box<GroupDescriptor>, right: Box<GroupDescriptor> },
    CentralProduct { left: Box<GroupDescriptor>, right: Box<GroupDescriptor>, amalgamated_order: usize },
    Table,
}

impl GroupDescriptor {
    /// Whether the group can be rebuilt from the descriptor alone.
    pub fn is_constructor(&self) -> bool {
        match self {
            GroupDescriptor::Cyclic { .. }
            | GroupDescriptor::ElementaryAbelian { .. }
            | GroupDescriptor::Heisenberg { .. }
            | GroupDescriptor::ExtraspecialMp3 { .. }
            | GroupDescriptor::Quaternion8 => true,
            GroupDescriptor::DirectProduct { left, right } => left.is_constructor() && right.is_constructor(),
            GroupDescriptor::CentralProduct { .. } | GroupDescriptor::Table => false,
        }
    }

    pub fn build(&self) -> Result<FiniteGroup, GroupError> {
        match self {
            GroupDescriptor::Cyclic { n } => cyclic(*n),
            GroupDescriptor::ElementaryAbelian { p, k } => elementary_abelian(*p, *k),
            GroupDescriptor::Heisenberg { q, r } => heisenberg(&Field::of_order(*q)?, *r),
            GroupDescriptor::ExtraspecialMp3 { p } => extraspecial_mp3(*p),
            GroupDescriptor::Quaternion8 => Ok(quaternion8()),
            GroupDescriptor::DirectProduct { left, right } => Ok(direct_product(&left.build()?, &right.build()?)?),
            other => Err(GroupError::Precondition(format!("{other:?} needs an explicit table"))),
        }
    }
}

/// JSON form of a group: constructor parameters, plus the flattened table
/// when the group cannot be rebuilt from them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupJson {
    #[serde(flatten)]
    pub descriptor: GroupDescriptor,
    pub order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Clone, Debug)]
pub struct FiniteGroup {
    descriptor: GroupDescriptor,
    order: usize,
    table: Vec<u32>,
    inverse: Vec<u32>,
    labels: Vec<String>,
}

impl PartialEq for FiniteGroup {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && self.table == other.table
    }
}

impl Eq for FiniteGroup {}

impl FiniteGroup {
    /// Materializes a group from a composition law on indices. Identity and
    /// inverses are checked; associativity is left to [`FiniteGroup::audit`].
    pub fn from_law(
        order: usize,
        descriptor: GroupDescriptor,
        law: impl Fn(usize, usize) -> usize + Sync,
        labels: Vec<String>,
    ) -> Result<Self, GroupError> {
        if order == 0 {
            return Err(GroupError::Empty);
        }
        if order > MAX_TABLE_ORDER {
            return Err(GroupError::TooLarge(order));
        }
        let table: Vec<u32> = (0..order * order)
            .into_par_iter()
            .map(|ab| law(ab / order, ab % order) as u32)
            .collect();
        Self::from_table(order, descriptor, table, labels)
    }

    pub fn from_table(
        order: usize,
        descriptor: GroupDescriptor,
        table: Vec<u32>,
        mut labels: Vec<String>,
    ) -> Result<Self, GroupError> {
        if order == 0 {
            return Err(GroupError::Empty);
        }
        if order > MAX_TABLE_ORDER {
            return Err(GroupError::TooLarge(order));
        }
        if table.len() != order * order {
            return Err(GroupError::TableShape { got: table.len(), expected: order * order });
        }
        if let Some(pos) = table.iter().position(|&x| x as usize >= order) {
            return Err(GroupError::TableEntry(pos / order, pos % order));
        }
        for g in 0..order {
            if table[g] as usize != g || table[g * order] as usize != g {
                return Err(GroupError::Identity(g));
            }
        }
        let mut inverse = vec![u32::MAX; order];
        for g in 0..order {
            let row = &table[g * order..(g + 1) * order];
            let h = row.iter().position(|&x| x == 0).ok_or(GroupError::Inverse(g))?;
            if table[h * order + g] != 0 {
                return Err(GroupError::Inverse(g));
            }
            inverse[g] = h as u32;
        }
        if labels.len() != order {
            labels = (0..order).map(|g| format!("g{g}")).collect();
        }
        Ok(FiniteGroup { descriptor, order, table, inverse, labels })
    }

    pub fn from_json(json: &GroupJson) -> Result<Self, GroupError> {
        let group = match &json.table {
            Some(table) => Self::from_table(
                json.order,
                json.descriptor.clone(),
                table.clone(),
                json.labels.clone().unwrap_or_default(),
            )?,
            None => json.descriptor.build()?,
        };
        if group.order != json.order {
            return Err(GroupError::Precondition(format!(
                "declared order {} but the group has order {}",
                json.order, group.order
            )));
        }
        group.audit()?;
        Ok(group)
    }

    pub fn to_json(&self) -> GroupJson {
        let explicit = !self.descriptor.is_constructor();
        GroupJson {
            descriptor: self.descriptor.clone(),
            order: self.order,
            table: explicit.then(|| self.table.clone()),
            labels: explicit.then(|| self.labels.clone()),
        }
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.descriptor
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    pub fn identity(&self) -> usize {
        0
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b] as usize
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a] as usize
    }

    pub fn pow(&self, a: usize, mut k: u64) -> usize {
        let mut base = a;
        let mut acc = 0;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        acc
    }

    /// `g h g^-1`
    pub fn conjugate(&self, g: usize, h: usize) -> usize {
        self.mul(self.mul(g, h), self.inv(g))
    }

    /// `a^-1 b^-1 a b`
    pub fn commutator(&self, a: usize, b: usize) -> usize {
        self.mul(self.mul(self.inv(a), self.inv(b)), self.mul(a, b))
    }

    pub fn label(&self, g: usize) -> &str {
        &self.labels[g]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn element_order(&self, g: usize) -> usize {
        let mut x = g;
        let mut k = 1;
        while x != 0 {
            x = self.mul(x, g);
            k += 1;
        }
        k
    }

    pub fn element_orders(&self) -> Vec<usize> {
        (0..self.order).into_par_iter().map(|g| self.element_order(g)).collect()
    }

    pub fn exponent(&self) -> usize {
        self.element_orders().into_iter().fold(1, lcm)
    }

    /// Map from element order to the number of elements of that order.
    pub fn order_multiset(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for o in self.element_orders() {
            *m.entry(o).or_insert(0) += 1;
        }
        m
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|a| (a + 1..self.order).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    pub fn check_index(&self, g: usize) -> Result<(), GroupError> {
        if g < self.order {
            Ok(())
        } else {
            Err(GroupError::OutOfRange(g))
        }
    }

    /// Associativity audit: exhaustive up to [`EXHAUSTIVE_AUDIT_LIMIT`],
    /// otherwise over a fixed-seed sample of triples.
    pub fn audit(&self) -> Result<(), GroupError> {
        let n = self.order;
        if n <= EXHAUSTIVE_AUDIT_LIMIT {
            let bad = (0..n).into_par_iter().find_map_any(|a| {
                for b in 0..n {
                    let ab = self.mul(a, b);
                    for c in 0..n {
                        if self.mul(ab, c) != self.mul(a, self.mul(b, c)) {
                            return Some((a, b, c));
                        }
                    }
                }
                None
            });
            return match bad {
                Some((a, b, c)) => Err(GroupError::Associativity(a, b, c)),
                None => Ok(()),
            };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(AUDIT_SEED);
        for _ in 0..AUDIT_SAMPLES {
            let (a, b, c) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
            if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)) {
                return Err(GroupError::Associativity(a, b, c));
            }
        }
        Ok(())
    }

    /// A small generating set, chosen greedily in index order among the
    /// elements of maximal order outside the current span.
    pub fn generators(&self) -> Vec<usize> {
        let orders = self.element_orders();
        let mut gens = Vec::new();
        let mut span = subgroup_closure(self, &[]);
        while span.order() < self.order {
            let g = (0..self.order)
                .filter(|&g| !span.contains(g))
                .max_by_key(|&g| (orders[g], std::cmp::Reverse(g)))
                .unwrap();
            gens.push(g);
            span = subgroup_closure(self, &gens);
        }
        gens
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

pub fn cyclic(n: usize) -> Result<FiniteGroup, GroupError> {
    let labels = (0..n).map(|i| i.to_string()).collect();
    FiniteGroup::from_law(n, GroupDescriptor::Cyclic { n }, |a, b| (a + b) % n, labels)
}

/// `C_p^k` on vectors in mixed radix, lowest coordinate first.
pub fn elementary_abelian(p: u32, k: u32) -> Result<FiniteGroup, GroupError> {
    if !crate::ff::is_prime(p) {
        return Err(FieldError::NotPrime(p).into());
    }
    let n = (p as usize).checked_pow(k).filter(|&n| n <= MAX_TABLE_ORDER).ok_or(GroupError::TooLarge(usize::MAX))?;
    let p = p as usize;
    let digits = |mut x: usize| -> Vec<usize> {
        (0..k)
            .map(|_| {
                let d = x % p;
                x /= p;
                d
            })
            .collect()
    };
    let labels = (0..n)
        .map(|g| format!("({})", digits(g).iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    FiniteGroup::from_law(
        n,
        GroupDescriptor::ElementaryAbelian { p: p as u32, k },
        |a, b| {
            let (da, db) = (digits(a), digits(b));
            da.iter().zip(&db).rev().fold(0, |acc, (x, y)| acc * p + (x + y) % p)
        },
        labels,
    )
}

/// `G1 x G2` with `(g1, g2) <-> g1 + |G1| * g2`.
pub fn direct_product(g1: &FiniteGroup, g2: &FiniteGroup) -> Result<FiniteGroup, GroupError> {
    let (n1, n2) = (g1.order(), g2.order());
    let n = n1.checked_mul(n2).filter(|&n| n <= MAX_TABLE_ORDER).ok_or(GroupError::TooLarge(n1 * n2))?;
    let labels = (0..n).map(|g| format!("({},{})", g1.label(g % n1), g2.label(g / n1))).collect();
    FiniteGroup::from_law(
        n,
        GroupDescriptor::DirectProduct {
            left: Box::new(g1.descriptor().clone()),
            right: Box::new(g2.descriptor().clone()),
        },
        |a, b| g1.mul(a % n1, b % n1) + n1 * g2.mul(a / n1, b / n1),
        labels,
    )
}

/// Coordinates of the Heisenberg group of dimension `2r + 1` over `F_q`:
/// triples `(x, y, z)` with `x, y in F_q^r`, `z in F_q`, indexed as
/// `(x_index * q^r + y_index) * q + z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeisenbergLayout {
    pub q: usize,
    pub r: usize,
}

impl HeisenbergLayout {
    pub fn order(&self) -> usize {
        self.q.pow(2 * self.r as u32 + 1)
    }

    fn vec_index(&self, v: &[FieldElement]) -> usize {
        v.iter().rev().fold(0, |acc, e| acc * self.q + e.index())
    }

    fn index_vec(&self, mut i: usize) -> Vec<FieldElement> {
        (0..self.r)
            .map(|_| {
                let d = i % self.q;
                i /= self.q;
                FieldElement(d as u32)
            })
            .collect()
    }

    pub fn encode(&self, x: &[FieldElement], y: &[FieldElement], z: FieldElement) -> usize {
        let qr = self.q.pow(self.r as u32);
        (self.vec_index(x) * qr + self.vec_index(y)) * self.q + z.index()
    }

    pub fn decode(&self, g: usize) -> (Vec<FieldElement>, Vec<FieldElement>, FieldElement) {
        let qr = self.q.pow(self.r as u32);
        let z = FieldElement((g % self.q) as u32);
        let rest = g / self.q;
        (self.index_vec(rest / qr), self.index_vec(rest % qr), z)
    }
}

/// Heisenberg group of dimension `2r + 1` over `F_q`, `q` odd, with law
/// `(x, y, z)(a, b, c) = (x + a, y + b, z + c + <x, b>)`.
pub fn heisenberg(field: &Field, r: u32) -> Result<FiniteGroup, GroupError> {
    if field.characteristic() == 2 {
        return Err(FieldError::EvenCharacteristic(field.order()).into());
    }
    if r == 0 {
        return Err(GroupError::Precondition("Heisenberg dimension parameter r must be >= 1".into()));
    }
    let layout = HeisenbergLayout { q: field.order() as usize, r: r as usize };
    let n = (layout.q as u64).checked_pow(2 * r + 1).unwrap_or(u64::MAX);
    if n > MAX_TABLE_ORDER as u64 {
        return Err(GroupError::TooLarge(n.min(usize::MAX as u64) as usize));
    }
    let n = n as usize;
    let coords: Vec<_> = (0..n).map(|g| layout.decode(g)).collect();
    let labels = coords
        .iter()
        .map(|(x, y, z)| {
            let show = |v: &[FieldElement]| v.iter().map(|e| e.0.to_string()).collect::<Vec<_>>().join(",");
            format!("({};{};{})", show(x), show(y), z.0)
        })
        .collect();
    FiniteGroup::from_law(
        n,
        GroupDescriptor::Heisenberg { q: field.order(), r },
        |a, b| {
            let (x, y, z) = &coords[a];
            let (u, v, w) = &coords[b];
            let sx: Vec<_> = x.iter().zip(u).map(|(&s, &t)| field.add(s, t)).collect();
            let sy: Vec<_> = y.iter().zip(v).map(|(&s, &t)| field.add(s, t)).collect();
            let sz = field.add(field.add(*z, *w), field.dot(x, v));
            layout.encode(&sx, &sy, sz)
        },
        labels,
    )
}

/// Index of `x^a y^b` in [`extraspecial_mp3`].
pub fn mp3_index(p: usize, a: usize, b: usize) -> usize {
    (a % (p * p)) * p + b % p
}

/// `M_{p^3} = <x> : <y>` with `|x| = p^2`, `|y| = p`, `y x y^-1 = x^(1+p)`,
/// on pairs `(a, b) <-> x^a y^b` indexed as `a * p + b`.
pub fn extraspecial_mp3(p: u32) -> Result<FiniteGroup, GroupError> {
    if p == 2 {
        return Err(FieldError::EvenCharacteristic(2).into());
    }
    if !crate::ff::is_prime(p) {
        return Err(FieldError::NotPrime(p).into());
    }
    let p = p as usize;
    let n = p * p * p;
    let labels = (0..n).map(|g| format!("x^{} y^{}", g / p, g % p)).collect();
    FiniteGroup::from_law(
        n,
        GroupDescriptor::ExtraspecialMp3 { p: p as u32 },
        |g, h| {
            let (a, b) = (g / p, g % p);
            let (c, d) = (h / p, h % p);
            mp3_index(p, a + c + p * b * c, b + d)
        },
        labels,
    )
}

/// Index of `a^i b^j` in [`quaternion8`].
pub fn q8_index(i: usize, j: usize) -> usize {
    let (i, j) = if j.is_multiple_of(2) { (i, 0) } else { (i, 1) };
    // b^2 = a^2 is folded by the caller through multiplication
    (i % 4) + 4 * j
}

/// `Q_8 = <a, b : a^4 = e, a^2 = b^2, b a b^-1 = a^-1>` on `a^i b^j`,
/// `i in 0..4`, `j in 0..2`, indexed as `i + 4 j`.
pub fn quaternion8() -> FiniteGroup {
    let labels = (0..8)
        .map(|g| {
            let (i, j) = (g % 4, g / 4);
            match (i, j) {
                (0, 0) => "e".to_string(),
                (1, 0) => "a".to_string(),
                (i, 0) => format!("a^{i}"),
                (0, 1) => "b".to_string(),
                (1, 1) => "ab".to_string(),
                (i, _) => format!("a^{i}b"),
            }
        })
        .collect();
    FiniteGroup::from_law(
        8,
        GroupDescriptor::Quaternion8,
        |g, h| {
            let (i, j) = (g % 4, g / 4);
            let (k, l) = (h % 4, h / 4);
            // b^j a^k = a^{(-1)^j k} b^j
            let k = if j == 1 { (4 - k) % 4 } else { k };
            let mut a = i + k;
            let mut b = j + l;
            if b == 2 {
                b = 0;
                a += 2;
            }
            q8_index(a, b)
        },
        labels,
    )
    .expect("Q8 table is valid")
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subgroup {
    elements: Vec<usize>,
    members: Vec<bool>,
}

impl Subgroup {
    fn from_members(members: Vec<bool>) -> Self {
        let elements = members.iter().enumerate().filter(|(_, &m)| m).map(|(g, _)| g).collect();
        Subgroup { elements, members }
    }

    /// Validates closure under multiplication and inverses.
    pub fn new(group: &FiniteGroup, elements: &[usize]) -> Result<Self, GroupError> {
        let mut members = vec![false; group.order()];
        for &g in elements {
            group.check_index(g)?;
            members[g] = true;
        }
        if !members[0] {
            return Err(GroupError::Precondition("subgroup must contain the identity".into()));
        }
        let sub = Subgroup::from_members(members);
        for &a in &sub.elements {
            if !sub.members[group.inv(a)] {
                return Err(GroupError::Precondition(format!("not closed under inverse at {a}")));
            }
            for &b in &sub.elements {
                if !sub.members[group.mul(a, b)] {
                    return Err(GroupError::Precondition(format!("not closed at ({a}, {b})")));
                }
            }
        }
        Ok(sub)
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, g: usize) -> bool {
        self.members.get(g).copied().unwrap_or(false)
    }

    pub fn is_subset_of(&self, other: &Subgroup) -> bool {
        self.elements.iter().all(|&g| other.contains(g))
    }

    /// Right coset `H g`.
    pub fn right_coset(&self, group: &FiniteGroup, g: usize) -> Vec<usize> {
        let mut c: Vec<usize> = self.elements.iter().map(|&h| group.mul(h, g)).collect();
        c.sort_unstable();
        c
    }

    /// Left coset `g H`.
    pub fn left_coset(&self, group: &FiniteGroup, g: usize) -> Vec<usize> {
        let mut c: Vec<usize> = self.elements.iter().map(|&h| group.mul(g, h)).collect();
        c.sort_unstable();
        c
    }

    /// All right cosets, each sorted, ordered by least element.
    pub fn right_cosets(&self, group: &FiniteGroup) -> Vec<Vec<usize>> {
        let mut seen = vec![false; group.order()];
        let mut out = Vec::new();
        for g in 0..group.order() {
            if !seen[g] {
                let c = self.right_coset(group, g);
                for &x in &c {
                    seen[x] = true;
                }
                out.push(c);
            }
        }
        out
    }
}

/// The subgroup generated by `seeds`.
pub fn subgroup_closure(group: &FiniteGroup, seeds: &[usize]) -> Subgroup {
    let mut members = vec![false; group.order()];
    members[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(g) = queue.pop_front() {
        for &s in seeds {
            let h = group.mul(g, s);
            if !members[h] {
                members[h] = true;
                queue.push_back(h);
            }
        }
    }
    Subgroup::from_members(members)
}

pub fn center(group: &FiniteGroup) -> Subgroup {
    let gens = group.generators();
    let members = (0..group.order())
        .map(|z| gens.iter().all(|&g| group.mul(z, g) == group.mul(g, z)))
        .collect();
    Subgroup::from_members(members)
}

pub fn is_normal(group: &FiniteGroup, h: &Subgroup) -> bool {
    (0..group.order()).all(|g| h.elements().iter().all(|&x| h.contains(group.conjugate(g, x))))
}

/// Whether `x` is a (left, right) transversal for `h` in `group`.
pub fn is_transversal(group: &FiniteGroup, h: &Subgroup, x: &[usize]) -> (bool, bool) {
    if x.len() * h.order() != group.order() {
        return (false, false);
    }
    let covers = |f: &dyn Fn(usize, usize) -> usize| {
        let mut hit = vec![false; group.order()];
        for &t in x {
            for &s in h.elements() {
                let g = f(t, s);
                if hit[g] {
                    return false;
                }
                hit[g] = true;
            }
        }
        true
    };
    (covers(&|t, s| group.mul(t, s)), covers(&|t, s| group.mul(s, t)))
}

/// Every subgroup, by iterated joins of cyclic subgroups. Meant for small
/// groups (order up to 2048).
pub fn all_subgroups(group: &FiniteGroup) -> Result<Vec<Subgroup>, GroupError> {
    if group.order() > 2048 {
        return Err(GroupError::Precondition("subgroup enumeration is limited to order 2048".into()));
    }
    let mut cyclic: Vec<(usize, Subgroup)> = Vec::new();
    let mut seen_cyclic = HashSet::new();
    for g in 0..group.order() {
        let c = subgroup_closure(group, &[g]);
        if seen_cyclic.insert(c.elements.clone()) {
            cyclic.push((g, c));
        }
    }
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut all: Vec<(Vec<usize>, Subgroup)> = Vec::new();
    let mut queue = VecDeque::new();
    for (g, c) in &cyclic {
        if seen.insert(c.elements.clone()) {
            queue.push_back(all.len());
            all.push((vec![*g], c.clone()));
        }
    }
    while let Some(i) = queue.pop_front() {
        let (gens, sub) = all[i].clone();
        for (g, c) in &cyclic {
            if c.is_subset_of(&sub) {
                continue;
            }
            let mut joined = gens.clone();
            joined.push(*g);
            let j = subgroup_closure(group, &joined);
            if seen.insert(j.elements.clone()) {
                queue.push_back(all.len());
                all.push((joined, j));
            }
        }
    }
    let mut subs: Vec<Subgroup> = all.into_iter().map(|(_, s)| s).collect();
    subs.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| a.elements.cmp(&b.elements)));
    Ok(subs)
}

/// A group automorphism as a permutation of element indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Automorphism {
    perm: Vec<u32>,
}

impl Automorphism {
    pub fn identity(group: &FiniteGroup) -> Self {
        Automorphism { perm: (0..group.order() as u32).collect() }
    }

    /// Validates bijectivity and the homomorphism law on all pairs.
    pub fn from_permutation(group: &FiniteGroup, perm: Vec<usize>) -> Result<Self, GroupError> {
        let n = group.order();
        if perm.len() != n {
            return Err(GroupError::NotAutomorphism(format!("permutation has length {}", perm.len())));
        }
        let mut hit = vec![false; n];
        for &x in &perm {
            if x >= n || hit[x] {
                return Err(GroupError::NotAutomorphism("map is not a bijection".into()));
            }
            hit[x] = true;
        }
        if perm[0] != 0 {
            return Err(GroupError::NotAutomorphism("identity is not fixed".into()));
        }
        let bad = (0..n).into_par_iter().find_map_any(|a| {
            (0..n).find(|&b| perm[group.mul(a, b)] != group.mul(perm[a], perm[b])).map(|b| (a, b))
        });
        if let Some((a, b)) = bad {
            return Err(GroupError::NotAutomorphism(format!("phi({a}*{b}) != phi({a})*phi({b})")));
        }
        Ok(Automorphism { perm: perm.into_iter().map(|x| x as u32).collect() })
    }

    /// Extends `gens[i] -> images[i]` along words in the generators, then
    /// checks the result is an automorphism.
    pub fn from_images(group: &FiniteGroup, gens: &[usize], images: &[usize]) -> Result<Self, GroupError> {
        if gens.len() != images.len() {
            return Err(GroupError::NotAutomorphism("generator and image lists differ in length".into()));
        }
        for &g in gens.iter().chain(images) {
            group.check_index(g)?;
        }
        let n = group.order();
        let mut map = vec![usize::MAX; n];
        map[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(g) = queue.pop_front() {
            for (&s, &t) in gens.iter().zip(images) {
                let h = group.mul(g, s);
                let img = group.mul(map[g], t);
                if map[h] == usize::MAX {
                    map[h] = img;
                    queue.push_back(h);
                } else if map[h] != img {
                    return Err(GroupError::NotAutomorphism(format!(
                        "relation violated: element {h} would map to both {} and {img}",
                        map[h]
                    )));
                }
            }
        }
        if map.contains(&usize::MAX) {
            return Err(GroupError::NotAutomorphism("given elements do not generate the group".into()));
        }
        Self::from_permutation(group, map)
    }

    #[inline]
    pub fn apply(&self, g: usize) -> usize {
        self.perm[g] as usize
    }

    pub fn apply_set(&self, set: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = set.iter().map(|&g| self.apply(g)).collect();
        out.sort_unstable();
        out
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &Automorphism) -> Automorphism {
        Automorphism { perm: other.perm.iter().map(|&g| self.perm[g as usize]).collect() }
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &g)| i == g as usize)
    }

    pub fn order(&self) -> usize {
        let mut k = 1;
        let mut cur = self.clone();
        while !cur.is_identity() {
            cur = self.compose(&cur);
            k += 1;
        }
        k
    }

    pub fn permutation(&self) -> Vec<usize> {
        self.perm.iter().map(|&g| g as usize).collect()
    }
}

/// The subgroup of `Aut(G)` generated by `gens`, enumerated by closure.
pub fn automorphism_group(group: &FiniteGroup, gens: &[Automorphism]) -> Vec<Automorphism> {
    let id = Automorphism::identity(group);
    let mut seen = HashSet::from([id.clone()]);
    let mut all = vec![id];
    let mut i = 0;
    while i < all.len() {
        for g in gens {
            let h = g.compose(&all[i]);
            if seen.insert(h.clone()) {
                all.push(h);
            }
        }
        i += 1;
    }
    all
}

/// Orbits of `<gens>` on the group, each sorted, ordered by least element.
pub fn orbits(group: &FiniteGroup, gens: &[Automorphism]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; group.order()];
    let mut out = Vec::new();
    for g in 0..group.order() {
        if seen[g] {
            continue;
        }
        seen[g] = true;
        let mut orbit = vec![g];
        let mut i = 0;
        while i < orbit.len() {
            for a in gens {
                let h = a.apply(orbit[i]);
                if !seen[h] {
                    seen[h] = true;
                    orbit.push(h);
                }
            }
            i += 1;
        }
        orbit.sort_unstable();
        out.push(orbit);
    }
    out
}

/// A central product `(G1 x G2) / {(z, theta(z)^-1)}` together with the
/// canonical embeddings of both factors.
#[derive(Clone, Debug)]
pub struct CentralProduct {
    pub group: FiniteGroup,
    pub embed_left: Vec<usize>,
    pub embed_right: Vec<usize>,
    /// Image of the amalgamated central subgroup.
    pub amalgamated: Subgroup,
}

impl CentralProduct {
    pub fn left_image(&self) -> Subgroup {
        Subgroup::from_members({
            let mut m = vec![false; self.group.order()];
            for &g in &self.embed_left {
                m[g] = true;
            }
            m
        })
    }

    pub fn right_image(&self) -> Subgroup {
        Subgroup::from_members({
            let mut m = vec![false; self.group.order()];
            for &g in &self.embed_right {
                m[g] = true;
            }
            m
        })
    }

    pub fn map_left(&self, set: &[usize]) -> Vec<usize> {
        let mut v: Vec<usize> = set.iter().map(|&g| self.embed_left[g]).collect();
        v.sort_unstable();
        v
    }

    pub fn map_right(&self, set: &[usize]) -> Vec<usize> {
        let mut v: Vec<usize> = set.iter().map(|&g| self.embed_right[g]).collect();
        v.sort_unstable();
        v
    }
}

/// Default amalgamation for cyclic central subgroups: the least-index
/// generator of `z1` goes to the least-index generator of `z2`, extended to
/// powers.
pub fn default_theta(
    g1: &FiniteGroup,
    z1: &Subgroup,
    g2: &FiniteGroup,
    z2: &Subgroup,
) -> Result<Vec<(usize, usize)>, GroupError> {
    if z1.order() != z2.order() {
        return Err(GroupError::BadIsomorphism("central subgroups differ in order".into()));
    }
    let n = z1.order();
    let gen1 = z1.elements().iter().copied().find(|&g| g1.element_order(g) == n);
    let gen2 = z2.elements().iter().copied().find(|&g| g2.element_order(g) == n);
    match (gen1, gen2) {
        (Some(a), Some(b)) => Ok((0..n as u64).map(|k| (g1.pow(a, k), g2.pow(b, k))).collect()),
        _ => Err(GroupError::BadIsomorphism("central subgroups are not cyclic; pass theta explicitly".into())),
    }
}

pub fn central_product(
    g1: &FiniteGroup,
    g2: &FiniteGroup,
    z1: &Subgroup,
    z2: &Subgroup,
    theta: &[(usize, usize)],
) -> Result<CentralProduct, GroupError> {
    let is_central = |g: &FiniteGroup, z: &Subgroup| {
        z.elements().iter().all(|&c| (0..g.order()).all(|x| g.mul(c, x) == g.mul(x, c)))
    };
    if !is_central(g1, z1) || !is_central(g2, z2) {
        return Err(GroupError::NotCentral);
    }
    let mut th = vec![usize::MAX; g1.order()];
    for &(a, b) in theta {
        if !z1.contains(a) || !z2.contains(b) {
            return Err(GroupError::BadIsomorphism(format!("pair ({a}, {b}) leaves the central subgroups")));
        }
        th[a] = b;
    }
    if z1.elements().iter().any(|&a| th[a] == usize::MAX) {
        return Err(GroupError::BadIsomorphism("theta is not defined on all of Z1".into()));
    }
    let mut image: Vec<usize> = z1.elements().iter().map(|&a| th[a]).collect();
    image.sort_unstable();
    image.dedup();
    if image.len() != z2.order() || z1.order() != z2.order() {
        return Err(GroupError::BadIsomorphism("theta is not a bijection onto Z2".into()));
    }
    for &a in z1.elements() {
        for &b in z1.elements() {
            if th[g1.mul(a, b)] != g2.mul(th[a], th[b]) {
                return Err(GroupError::BadIsomorphism(format!("theta({a}*{b}) != theta({a})*theta({b})")));
            }
        }
    }

    let (n1, n2) = (g1.order(), g2.order());
    let order = n1 * n2 / z1.order();
    if order > MAX_TABLE_ORDER {
        return Err(GroupError::TooLarge(order));
    }
    // Coset representatives of Z1 in G1: least index in each coset.
    let mut rep = vec![usize::MAX; n1];
    let mut rep_pos = vec![usize::MAX; n1];
    let mut reps = Vec::new();
    for g in 0..n1 {
        if rep[g] == usize::MAX {
            rep_pos[g] = reps.len();
            reps.push(g);
            for &z in z1.elements() {
                rep[g1.mul(g, z)] = g;
            }
        }
    }
    // (g1, g2) -> canonical index
    let canon = |a: usize, b: usize| -> usize {
        let r = rep[a];
        let z = g1.mul(g1.inv(r), a);
        rep_pos[r] * n2 + g2.mul(b, th[z])
    };
    let pairs: Vec<(usize, usize)> = (0..order).map(|g| (reps[g / n2], g % n2)).collect();
    let labels = pairs.iter().map(|&(a, b)| format!("[{}|{}]", g1.label(a), g2.label(b))).collect();
    let group = FiniteGroup::from_law(
        order,
        GroupDescriptor::CentralProduct {
            left: Box::new(g1.descriptor().clone()),
            right: Box::new(g2.descriptor().clone()),
            amalgamated_order: z1.order(),
        },
        |x, y| {
            let (a1, a2) = pairs[x];
            let (b1, b2) = pairs[y];
            canon(g1.mul(a1, b1), g2.mul(a2, b2))
        },
        labels,
    )?;
    let embed_left: Vec<usize> = (0..n1).map(|g| canon(g, 0)).collect();
    let embed_right: Vec<usize> = (0..n2).map(|g| canon(0, g)).collect();
    let amalgamated = Subgroup::from_members({
        let mut m = vec![false; order];
        for &z in z1.elements() {
            m[embed_left[z]] = true;
        }
        m
    });
    Ok(CentralProduct { group, embed_left, embed_right, amalgamated })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(q: u32) -> Field {
        Field::of_order(q).unwrap()
    }

    #[test]
    fn heisenberg_basics() {
        let g = heisenberg(&f(3), 1).unwrap();
        assert_eq!(g.order(), 27);
        g.audit().unwrap();
        assert_eq!(center(&g).order(), 3);
        assert_eq!(center(&g).elements(), &[0, 1, 2]);
        assert_eq!(g.exponent(), 3);

        let g5 = heisenberg(&f(5), 1).unwrap();
        assert_eq!(g5.order(), 125);
        let l = HeisenbergLayout { q: 5, r: 1 };
        let x = l.encode(&[FieldElement(1)], &[FieldElement(0)], FieldElement(0));
        let y = l.encode(&[FieldElement(0)], &[FieldElement(1)], FieldElement(0));
        assert_ne!(g5.mul(x, y), g5.mul(y, x));
        assert!(heisenberg(&f(4), 1).is_err());
    }

    #[test]
    fn heisenberg_dim5() {
        let g = heisenberg(&f(3), 2).unwrap();
        assert_eq!(g.order(), 243);
        assert_eq!(g.exponent(), 3);
        assert_eq!(center(&g).order(), 3);
    }

    #[test]
    fn mp3_basics() {
        let g = extraspecial_mp3(3).unwrap();
        g.audit().unwrap();
        assert_eq!(g.order(), 27);
        assert_eq!(g.exponent(), 9);
        let z = center(&g);
        assert_eq!(z.elements(), &[0, mp3_index(3, 3, 0), mp3_index(3, 6, 0)]);
        let y = subgroup_closure(&g, &[mp3_index(3, 0, 1)]);
        assert!(!is_normal(&g, &y));
        assert!(is_normal(&g, &z));

        let g5 = extraspecial_mp3(5).unwrap();
        assert_eq!(g5.order(), 125);
        assert_eq!(g5.element_order(mp3_index(5, 1, 0)), 25);
        assert!(extraspecial_mp3(2).is_err());
    }

    #[test]
    fn q8_basics() {
        let g = quaternion8();
        g.audit().unwrap();
        assert_eq!(g.exponent(), 4);
        let z = center(&g);
        assert_eq!(z.elements(), &[0, 2]);
        let subs = all_subgroups(&g).unwrap();
        assert_eq!(subs.len(), 6);
        assert!(subs.iter().all(|h| is_normal(&g, h)));
        assert_eq!(subs.iter().filter(|h| h.order() == 2).count(), 1);
        // b a b^-1 = a^-1
        assert_eq!(g.conjugate(4, 1), 3);
        assert_eq!(g.mul(4, 4), 2);
    }

    #[test]
    fn abelian_families() {
        let e = elementary_abelian(3, 2).unwrap();
        assert_eq!((e.order(), e.exponent()), (9, 3));
        let c = direct_product(&cyclic(4).unwrap(), &cyclic(2).unwrap()).unwrap();
        assert_eq!(c.order(), 8);
        assert!(c.is_abelian());
        c.audit().unwrap();
    }

    #[test]
    fn direct_product_of_cyclic_matches_elementary_abelian() {
        // (a, b) -> a + 3 b is the identity map between the two index schemes
        let c3 = cyclic(3).unwrap();
        let d = direct_product(&c3, &c3).unwrap();
        let e = elementary_abelian(3, 2).unwrap();
        for a in 0..9 {
            for b in 0..9 {
                assert_eq!(d.mul(a, b), e.mul(a, b));
            }
        }
    }

    #[test]
    fn central_products() {
        let q8 = quaternion8();
        let z = center(&q8);
        let theta = default_theta(&q8, &z, &q8, &z).unwrap();
        let cp = central_product(&q8, &q8, &z, &z, &theta).unwrap();
        assert_eq!(cp.group.order(), 32);
        cp.group.audit().unwrap();
        for &a in &cp.embed_left {
            for &b in &cp.embed_right {
                assert_eq!(cp.group.commutator(a, b), 0);
            }
        }
        let h = heisenberg(&f(3), 1).unwrap();
        let zh = center(&h);
        let th = default_theta(&h, &zh, &h, &zh).unwrap();
        let hh = central_product(&h, &h, &zh, &zh, &th).unwrap();
        let h5 = heisenberg(&f(3), 2).unwrap();
        assert_eq!(hh.group.order(), 243);
        assert_eq!(hh.group.order_multiset(), h5.order_multiset());
        assert_eq!(hh.group.exponent(), 3);

        let m = extraspecial_mp3(3).unwrap();
        let zm = center(&m);
        let tm = default_theta(&m, &zm, &h, &zh).unwrap();
        let mh = central_product(&m, &h, &zm, &zh, &tm).unwrap();
        assert_eq!(mh.group.order(), 243);
        assert_eq!(mh.group.exponent(), 9);
        assert_eq!(center(&mh.group).elements(), mh.amalgamated.elements());
    }

    #[test]
    fn central_product_rejects_noncentral() {
        let m = extraspecial_mp3(3).unwrap();
        let y = subgroup_closure(&m, &[1]);
        let z = center(&m);
        assert!(matches!(central_product(&m, &m, &y, &z, &[]), Err(GroupError::NotCentral)));
    }

    #[test]
    fn automorphisms_and_orbits() {
        let c5 = cyclic(5).unwrap();
        let inv = Automorphism::from_images(&c5, &[1], &[4]).unwrap();
        assert_eq!(orbits(&c5, std::slice::from_ref(&inv)), vec![vec![0], vec![1, 4], vec![2, 3]]);
        assert_eq!(inv.order(), 2);
        // 1 -> 0 is not an automorphism
        assert!(Automorphism::from_images(&c5, &[1], &[0]).is_err());
        let q8 = quaternion8();
        // a -> b, b -> a is an automorphism of Q8
        let sw = Automorphism::from_images(&q8, &[1, 4], &[4, 1]).unwrap();
        assert_eq!(sw.apply(2), 2);
        // a -> a^2 is not
        assert!(Automorphism::from_images(&q8, &[1, 4], &[2, 4]).is_err());
    }

    #[test]
    fn transversal_counting() {
        let g = cyclic(6).unwrap();
        let h = subgroup_closure(&g, &[3]);
        assert_eq!(is_transversal(&g, &h, &[0, 1]), (false, false));
        assert_eq!(is_transversal(&g, &h, &[0, 1, 2]), (true, true));
        assert_eq!(is_transversal(&g, &h, &[0, 3, 1]), (false, false));
    }

    #[test]
    fn json_round_trip() {
        let m = extraspecial_mp3(3).unwrap();
        let j = m.to_json();
        assert!(j.table.is_none());
        assert_eq!(FiniteGroup::from_json(&j).unwrap(), m);
        let q8 = quaternion8();
        let z = center(&q8);
        let t = default_theta(&q8, &z, &q8, &z).unwrap();
        let cp = central_product(&q8, &q8, &z, &z, &t).unwrap();
        let j = cp.group.to_json();
        let s = serde_json::to_string(&j).unwrap();
        let back: GroupJson = serde_json::from_str(&s).unwrap();
        assert_eq!(FiniteGroup::from_json(&back).unwrap(), cp.group);
    }

    #[test]
    fn bad_tables_rejected() {
        // not associative: a loop of order 5 with identity 0
        let t: Vec<u32> = vec![
            0, 1, 2, 3, 4, //
            1, 0, 3, 4, 2, //
            2, 4, 0, 1, 3, //
            3, 2, 4, 0, 1, //
            4, 3, 1, 2, 0,
        ];
        let g = FiniteGroup::from_table(5, GroupDescriptor::Table, t, vec![]).unwrap();
        assert!(matches!(g.audit(), Err(GroupError::Associativity(..))));
        assert!(FiniteGroup::from_table(2, GroupDescriptor::Table, vec![0, 1, 1, 1], vec![]).is_err());
    }
}
