//! Closed linked systems of RDSs: verification, the `(mu, nu)` branches,
//! the associated group on `S ∪ {∞}`, and products over central products.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groupring::{inverse_set, normalize_set, GroupRing, GroupRingError};
use crate::groups::{CentralProduct, FiniteGroup, GroupError, Subgroup};
use crate::rds::{verify_rds, RdsCertificate, RdsError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinkedError {
    #[error("a linked system needs at least two sets, got {0}")]
    TooFewSets(usize),
    #[error("sets {0} and {1} are equal")]
    Duplicate(usize, usize),
    #[error("set {index} is not an RDS: {source}")]
    NotRds { index: usize, source: RdsError },
    #[error("set {0} has parameters {1:?}, unlike set 0")]
    ParameterMismatch(usize, (usize, usize, usize, usize)),
    #[error("inverse of set {0} is not in the family")]
    InverseNotInFamily(usize),
    #[error("product of sets {0} and {1} is not two-valued")]
    ProductNotTwoValued(usize, usize),
    #[error("no level set of the product of sets {0} and {1} is a family member")]
    LevelSetNotMember(usize, usize),
    #[error("product of sets {alpha} and {beta} has values ({mu}, {nu}), but earlier pairs gave ({mu0}, {nu0})")]
    InconsistentValues { alpha: usize, beta: usize, mu: i64, nu: i64, mu0: i64, nu0: i64 },
    #[error("recovered (mu, nu) = ({mu}, {nu}) is not among the admissible branches {branches:?}")]
    ParameterBranchMismatch { mu: i64, nu: i64, branches: Vec<(i64, i64)> },
    #[error("no integral (mu, nu) branch for (m, n, k) = ({m}, {n}, {k})")]
    NonIntegralBranch { m: usize, n: usize, k: usize },
    #[error("no pair of sets outside the inverse pairs")]
    NoOffDiagonalPair,
    #[error("associativity fails at ({0}, {1}, {2})")]
    AssociativityFails(usize, usize, usize),
    #[error("invalid characteristic functions: {0}")]
    BadCharacteristic(String),
    #[error("characteristic functions of the two systems differ")]
    CharacteristicMismatch,
    #[error("map is not an automorphism of the associated group: {0}")]
    NotAutomorphism(String),
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Rds(#[from] RdsError),
    #[error(transparent)]
    GroupRing(#[from] GroupRingError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Isomorphism type of a small group, as far as it is recognized.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupClass {
    Cyclic { n: usize },
    ElementaryAbelian { p: usize, k: u32 },
    Abelian { invariant_factors: Vec<usize> },
    Nonabelian { order: usize, exponent: usize },
}

/// The group `S^∞` on indices `0..s` plus `∞ = s`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociatedGroup {
    pub order: usize,
    pub class: GroupClass,
    /// Invariant factors `d1 | d2 | ...` when abelian.
    pub invariant_factors: Option<Vec<usize>>,
    #[serde(skip)]
    pub table: Vec<Vec<usize>>,
}

impl AssociatedGroup {
    pub fn infinity(&self) -> usize {
        self.order - 1
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    /// `Some((p, k))` if the group is `C_p^k`.
    pub fn elementary_abelian(&self) -> Option<(usize, u32)> {
        let f = self.invariant_factors.as_ref()?;
        let p = *f.first()?;
        (crate::ff::is_prime(p as u32) && f.iter().all(|&d| d == p)).then_some((p, f.len() as u32))
    }
}

fn factorize(mut n: usize) -> Vec<(usize, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn element_order(table: &[Vec<usize>], id: usize, a: usize) -> usize {
    let (mut x, mut k) = (a, 1);
    while x != id {
        x = table[x][a];
        k += 1;
    }
    k
}

/// Invariant factors of an abelian group from its element orders.
fn invariant_factors(orders: &[usize]) -> Vec<usize> {
    let n = orders.len();
    // elementary divisors, per prime: exponents sorted descending
    let mut per_prime: Vec<Vec<usize>> = Vec::new();
    for (p, _) in factorize(n) {
        let mut counts = vec![0u32]; // counts[i] = log_p #{x : x^(p^i) = e}
        let mut i = 1u32;
        loop {
            let pi = p.pow(i);
            let c = orders.iter().filter(|&&o| pi % o == 0).count();
            let log = (c as f64).log(p as f64).round() as u32;
            counts.push(log);
            if log == counts[counts.len() - 2] {
                counts.pop();
                break;
            }
            i += 1;
        }
        // number of cyclic factors of order >= p^i is counts[i] - counts[i-1]
        let depth = counts.len() - 1;
        let mut powers = Vec::new();
        for i in 1..=depth {
            let ge_i = counts[i] - counts[i - 1];
            let ge_next = if i < depth { counts[i + 1] - counts[i] } else { 0 };
            for _ in 0..ge_i - ge_next {
                powers.push(p.pow(i as u32));
            }
        }
        powers.sort_unstable_by(|a, b| b.cmp(a));
        per_prime.push(powers);
    }
    let len = per_prime.iter().map(Vec::len).max().unwrap_or(0);
    let mut factors: Vec<usize> =
        (0..len).map(|j| per_prime.iter().map(|v| v.get(j).copied().unwrap_or(1)).product()).collect();
    factors.reverse();
    factors
}

/// Builds `S^∞` from `chi` (an involution of `0..s`) and `psi` (defined off
/// the pairs `(a, chi(a))`) and verifies the group axioms exhaustively.
pub fn associated_group(s: usize, chi: &[usize], psi: &[Vec<Option<usize>>]) -> Result<AssociatedGroup, LinkedError> {
    if chi.len() != s || psi.len() != s || psi.iter().any(|r| r.len() != s) {
        return Err(LinkedError::BadCharacteristic("wrong table dimensions".into()));
    }
    for a in 0..s {
        if chi[a] >= s || chi[chi[a]] != a {
            return Err(LinkedError::BadCharacteristic(format!("chi is not an involution at {a}")));
        }
    }
    let inf = s;
    let mut table = vec![vec![0; s + 1]; s + 1];
    for a in 0..=s {
        for b in 0..=s {
            table[a][b] = if a == inf {
                b
            } else if b == inf {
                a
            } else if b == chi[a] {
                inf
            } else {
                match psi[a][b] {
                    Some(c) if c < s => c,
                    _ => return Err(LinkedError::BadCharacteristic(format!("psi undefined at ({a}, {b})"))),
                }
            };
        }
    }
    for a in 0..=s {
        for b in 0..=s {
            for c in 0..=s {
                if table[table[a][b]][c] != table[a][table[b][c]] {
                    return Err(LinkedError::AssociativityFails(a, b, c));
                }
            }
        }
    }
    let order = s + 1;
    let orders: Vec<usize> = (0..order).map(|a| element_order(&table, inf, a)).collect();
    let abelian = (0..order).all(|a| (0..order).all(|b| table[a][b] == table[b][a]));
    let exponent = orders.iter().fold(1, |l, &o| l / gcd(l, o) * o);
    let invariants = abelian.then(|| invariant_factors(&orders));
    let class = match &invariants {
        _ if exponent == order => GroupClass::Cyclic { n: order },
        Some(f) if f.iter().all(|&d| d == f[0]) && factorize(f[0]).len() == 1 && factorize(f[0])[0].1 == 1 => {
            GroupClass::ElementaryAbelian { p: f[0], k: f.len() as u32 }
        }
        Some(f) => GroupClass::Abelian { invariant_factors: f.clone() },
        None => GroupClass::Nonabelian { order, exponent },
    };
    Ok(AssociatedGroup { order, class, invariant_factors: invariants, table })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn isqrt(n: u128) -> Option<u128> {
    let r = (n as f64).sqrt() as u128;
    (r.saturating_sub(1)..=r + 1).find(|&x| x * x == n)
}

/// The integral `(mu, nu)` solutions of the linked-system parameter
/// formulas for `(m, n, k)`, sorted by `mu`.
pub fn munu_branches(m: usize, n: usize, k: usize) -> Result<Vec<(i64, i64)>, LinkedError> {
    let err = LinkedError::NonIntegralBranch { m, n, k };
    let (mm, nn, kk) = (m as u128, n as u128, k as u128);
    if n < 2 || m == 0 || k == 0 || kk > mm * nn {
        return Err(err);
    }
    let v = mm * nn;
    let num = kk * (v - kk);
    let den = mm * (nn - 1);
    if num % den != 0 {
        return Err(err);
    }
    let root = isqrt(num / den).ok_or(err.clone())? as i128;
    let (v, k) = (v as i128, kk as i128);
    let mut out = Vec::new();
    for sign in [1i128, -1] {
        let mu_num = k * k + sign * (v - k) * root;
        let nu_num = k * (k - sign * root);
        if mu_num >= 0 && nu_num >= 0 && mu_num % v == 0 && nu_num % v == 0 {
            out.push(((mu_num / v) as i64, (nu_num / v) as i64));
        }
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err(err);
    }
    Ok(out)
}

/// A verified closed linked system `{X_a : a in 0..s}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkedCertificate {
    pub forbidden: Vec<usize>,
    pub sets: Vec<Vec<usize>>,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub lambda: usize,
    pub s: usize,
    pub mu: i64,
    pub nu: i64,
    pub chi: Vec<usize>,
    /// `psi[a][b]`, `None` exactly when `b = chi(a)`.
    pub psi: Vec<Vec<Option<usize>>>,
    pub semiregular: bool,
    /// `S^∞`; built for semiregular systems.
    pub associated_group: Option<AssociatedGroup>,
}

impl LinkedCertificate {
    pub fn parameters(&self) -> (usize, usize, usize, usize, usize, i64, i64) {
        (self.m, self.n, self.k, self.lambda, self.s, self.mu, self.nu)
    }
}

/// Verifies the two-valued product identity for every ordered pair and recovers `chi`, `psi`,
/// `mu`, `nu` from the products themselves.
pub fn verify_linked(
    group: &FiniteGroup,
    forbidden: &Subgroup,
    family: &[Vec<usize>],
) -> Result<LinkedCertificate, LinkedError> {
    let s = family.len();
    if s < 2 {
        return Err(LinkedError::TooFewSets(s));
    }
    let sets: Vec<Vec<usize>> = family.iter().map(|x| normalize_set(x)).collect();
    for a in 0..s {
        for b in 0..a {
            if sets[a] == sets[b] {
                return Err(LinkedError::Duplicate(b, a));
            }
        }
    }
    let certs: Vec<RdsCertificate> = sets
        .par_iter()
        .enumerate()
        .map(|(index, x)| verify_rds(group, x, forbidden).map_err(|source| LinkedError::NotRds { index, source }))
        .collect::<Result<_, _>>()?;
    let params = certs[0].parameters();
    if let Some(i) = certs.iter().position(|c| c.parameters() != params) {
        return Err(LinkedError::ParameterMismatch(i, certs[i].parameters()));
    }
    let (m, n, k, lambda) = params;
    let mut chi = Vec::with_capacity(s);
    for (a, x) in sets.iter().enumerate() {
        let inv = inverse_set(group, x);
        chi.push(sets.iter().position(|y| *y == inv).ok_or(LinkedError::InverseNotInFamily(a))?);
    }

    let zg = GroupRing::new(group);
    let indicators: Vec<_> = sets.iter().map(|x| zg.indicator(x)).collect::<Result<_, _>>()?;
    let pairs: Vec<(usize, usize)> = (0..s).flat_map(|a| (0..s).map(move |b| (a, b))).filter(|&(a, b)| b != chi[a]).collect();
    if pairs.is_empty() {
        return Err(LinkedError::NoOffDiagonalPair);
    }
    let results: Vec<Result<(usize, usize, i64, i64, usize), LinkedError>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let prod = zg.mul(&indicators[a], &indicators[b])?;
            let values = prod.values();
            if values.len() != 2 {
                return Err(LinkedError::ProductNotTwoValued(a, b));
            }
            for (i, &mu) in values.iter().enumerate() {
                let level = prod.level_set(mu);
                if let Some(c) = sets.iter().position(|y| *y == level) {
                    return Ok((a, b, mu, values[1 - i], c));
                }
            }
            Err(LinkedError::LevelSetNotMember(a, b))
        })
        .collect();
    let mut psi = vec![vec![None; s]; s];
    let mut munu: Option<(i64, i64)> = None;
    for r in results {
        let (a, b, mu, nu, c) = r?;
        let (mu0, nu0) = *munu.get_or_insert((mu, nu));
        if (mu, nu) != (mu0, nu0) {
            return Err(LinkedError::InconsistentValues { alpha: a, beta: b, mu, nu, mu0, nu0 });
        }
        psi[a][b] = Some(c);
    }
    let (mu, nu) = munu.expect("pairs is nonempty");
    assert_eq!(mu * k as i64 + nu * (m * n - k) as i64, (k * k) as i64, "coefficient sum identity");
    let branches = munu_branches(m, n, k).unwrap_or_default();
    if !branches.contains(&(mu, nu)) {
        return Err(LinkedError::ParameterBranchMismatch { mu, nu, branches });
    }
    let semiregular = certs[0].semiregular;
    let associated_group = if semiregular { Some(associated_group(s, &chi, &psi)?) } else { None };
    Ok(LinkedCertificate {
        forbidden: forbidden.elements().to_vec(),
        sets,
        m,
        n,
        k,
        lambda,
        s,
        mu,
        nu,
        chi,
        psi,
        semiregular,
        associated_group,
    })
}

/// Result of [`linked_product`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkedProduct {
    pub certificate: LinkedCertificate,
    /// `(mu1 mu2 + (n-1) nu1 nu2, mu1 nu2 + mu2 nu1 + (n-2) nu1 nu2)`.
    pub predicted: (i64, i64),
    pub matches_prediction: bool,
}

/// `{X_a Y_f(a)}` in a central product, where `f` is a permutation of
/// `0..=s` (`s` standing for `∞`) that must be an automorphism of `S^∞`.
pub fn linked_product(
    cp: &CentralProduct,
    l1: &LinkedCertificate,
    l2: &LinkedCertificate,
    f: &[usize],
) -> Result<LinkedProduct, LinkedError> {
    let s = l1.s;
    if l2.s != s || l1.chi != l2.chi || l1.psi != l2.psi {
        return Err(LinkedError::CharacteristicMismatch);
    }
    if !l1.semiregular || !l2.semiregular || l1.n != l2.n {
        return Err(LinkedError::Precondition("both systems must be semiregular with the same n".into()));
    }
    let assoc = l1.associated_group.as_ref().expect("semiregular systems carry S^∞");
    if f.len() != s + 1 || f[s] != s {
        return Err(LinkedError::NotAutomorphism("f must fix ∞".into()));
    }
    let mut seen = vec![false; s + 1];
    for &x in f {
        if x > s || std::mem::replace(&mut seen[x], true) {
            return Err(LinkedError::NotAutomorphism("f is not a permutation".into()));
        }
    }
    for a in 0..=s {
        for b in 0..=s {
            if f[assoc.mul(a, b)] != assoc.mul(f[a], f[b]) {
                return Err(LinkedError::NotAutomorphism(format!("fails at ({a}, {b})")));
            }
        }
    }
    let z = cp.amalgamated.elements().to_vec();
    if cp.map_left(&l1.forbidden) != z || cp.map_right(&l2.forbidden) != z {
        return Err(LinkedError::Precondition("forbidden subgroups are not the amalgamated center".into()));
    }
    let g = &cp.group;
    let mut family = Vec::with_capacity(s);
    for a in 0..s {
        let (x, y) = (&l1.sets[a], &l2.sets[f[a]]);
        let mut set: Vec<usize> =
            x.iter().flat_map(|&u| y.iter().map(move |&v| g.mul(cp.embed_left[u], cp.embed_right[v]))).collect();
        set.sort_unstable();
        set.dedup();
        if set.len() != x.len() * y.len() {
            return Err(LinkedError::Rds(RdsError::ProductCollision(a)));
        }
        family.push(set);
    }
    let n = Subgroup::new(g, &z)?;
    let certificate = verify_linked(g, &n, &family)?;
    let nn = l1.n as i64;
    let (mu1, nu1, mu2, nu2) = (l1.mu, l1.nu, l2.mu, l2.nu);
    let predicted = (mu1 * mu2 + (nn - 1) * nu1 * nu2, mu1 * nu2 + mu2 * nu1 + (nn - 2) * nu1 * nu2);
    let matches_prediction = (certificate.mu, certificate.nu) == predicted;
    Ok(LinkedProduct { certificate, predicted, matches_prediction })
}
