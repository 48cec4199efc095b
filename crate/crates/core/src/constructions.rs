//! Explicit constructions: linked systems in Heisenberg groups and `Q_8`,
//! RDSs and PDSs in `M_{p^3}`, the endomorphism-twisted systems over
//! amorphic Latin-square S-rings, and assemblies over central products.
//!
//! Every certificate returned here comes from the generic verifiers in
//! [`crate::rds`] and [`crate::linked`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::ff::{Field, FieldElement, FieldError};
use crate::groupring::{inverse_set, normalize_set, GroupRing, GroupRingError};
use crate::groups::{
    automorphism_group, center, central_product, direct_product, elementary_abelian, extraspecial_mp3, heisenberg,
    is_normal, is_transversal, mp3_index, quaternion8, Automorphism, FiniteGroup, GroupError, GroupJson,
    HeisenbergLayout, Subgroup, MAX_TABLE_ORDER,
};
use crate::linked::{linked_product, verify_linked, LinkedCertificate, LinkedError};
use crate::rds::{rds_product, rds_to_pds, verify_pds, verify_rds, PdsCertificate, RdsCertificate, RdsError};
use crate::schur::{amorphic_latin, check_amorph_relations, AmorphicLatin, SchurError, SchurPartition};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructionError {
    #[error("group of order {0} exceeds the table limit {MAX_TABLE_ORDER}")]
    TooLarge(u64),
    #[error("{0}")]
    Precondition(String),
    #[error("construction check failed: {0}")]
    Check(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    GroupRing(#[from] GroupRingError),
    #[error(transparent)]
    Schur(#[from] SchurError),
    #[error(transparent)]
    Rds(#[from] RdsError),
    #[error(transparent)]
    Linked(#[from] LinkedError),
}

type Result<T> = std::result::Result<T, ConstructionError>;

fn ensure(cond: bool, what: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(ConstructionError::Check(what.into()))
    }
}

fn check_size(base: u64, exp: u32) -> Result<()> {
    match base.checked_pow(exp) {
        Some(n) if n <= MAX_TABLE_ORDER as u64 => Ok(()),
        n => Err(ConstructionError::TooLarge(n.unwrap_or(u64::MAX))),
    }
}

/// A set with its element indices and labels, as stored in a bundle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedSet {
    pub name: String,
    pub indices: Vec<usize>,
    pub labels: Vec<String>,
}

impl NamedSet {
    pub fn new(group: &FiniteGroup, name: impl Into<String>, indices: &[usize]) -> Self {
        let indices = normalize_set(indices);
        let labels = indices.iter().map(|&g| group.label(g).to_string()).collect();
        NamedSet { name: name.into(), indices, labels }
    }
}

/// Self-contained JSON record of a construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub construction: String,
    pub group: GroupJson,
    pub provenance: BTreeMap<String, Value>,
    pub forbidden: Vec<usize>,
    pub sets: Vec<NamedSet>,
    pub certificate: Value,
    #[serde(default)]
    pub flags: BTreeMap<String, Value>,
}

impl Bundle {
    pub fn group(&self) -> Result<FiniteGroup> {
        Ok(FiniteGroup::from_json(&self.group)?)
    }

    pub fn set_indices(&self) -> Vec<Vec<usize>> {
        self.sets.iter().map(|s| s.indices.clone()).collect()
    }
}

fn bundle(
    construction: &str,
    group: &FiniteGroup,
    forbidden: &[usize],
    sets: Vec<NamedSet>,
    certificate: Value,
    provenance: &[(&str, Value)],
    flags: &[(&str, Value)],
) -> Bundle {
    Bundle {
        construction: construction.to_string(),
        group: group.to_json(),
        provenance: provenance.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        forbidden: forbidden.to_vec(),
        sets,
        certificate,
        flags: flags.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("certificates serialize")
}

// ---------------------------------------------------------------------------
// Heisenberg groups of dimension 3

/// `(alpha, beta)` standing for `[[alpha, beta], [eps beta, alpha]]`.
type MElem = (FieldElement, FieldElement);

fn m_mul(f: &Field, eps: FieldElement, (a, b): MElem, (c, d): MElem) -> MElem {
    (f.add(f.mul(a, c), f.mul(eps, f.mul(b, d))), f.add(f.mul(a, d), f.mul(b, c)))
}

/// The automorphism `phi(M)` of the Heisenberg group of dimension 3:
/// `(x, y, z) -> (a x + eps b y, b x + a y, F(x, y, z))` with
/// `F = a b (x^2/2 + eps y^2/2) + eps b^2 x y + (a^2 - eps b^2) z`.
fn phi_permutation(f: &Field, eps: FieldElement, (a, b): MElem) -> Vec<usize> {
    let q = f.order() as usize;
    let layout = HeisenbergLayout { q, r: 1 };
    let half = f.inv(f.from_int(2)).expect("q is odd");
    (0..q * q * q)
        .map(|g| {
            let (x, y, z) = layout.decode(g);
            let (x, y) = (x[0], y[0]);
            let nx = f.add(f.mul(a, x), f.mul(eps, f.mul(b, y)));
            let ny = f.add(f.mul(b, x), f.mul(a, y));
            let quad = f.mul(half, f.add(f.square(x), f.mul(eps, f.square(y))));
            let det = f.sub(f.square(a), f.mul(eps, f.square(b)));
            let nz = f.add(
                f.add(f.mul(f.mul(a, b), quad), f.mul(f.mul(eps, f.square(b)), f.mul(x, y))),
                f.mul(det, z),
            );
            layout.encode(&[nx], &[ny], nz)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct HeisenbergSystem {
    pub field: Field,
    pub epsilon: FieldElement,
    /// `1 / (16 epsilon)`, the constant for which the Pell equation behind
    /// `X_i X_j` has zero right-hand side.
    pub delta: FieldElement,
    /// Generator of the cyclic group `M(eps)`.
    pub generator: MElem,
    pub group: FiniteGroup,
    pub center: Subgroup,
    /// `phi(generator)`, generating `K`.
    pub k_generator: Automorphism,
    pub partition: SchurPartition,
    /// `Y_i` for `i` in field order.
    pub y_sets: Vec<Vec<usize>>,
    /// `X_i = Y_i ∪ {e}`.
    pub x_sets: Vec<Vec<usize>>,
    pub certificate: LinkedCertificate,
    /// The recovered `psi` is `(ij + delta) / (i + j)` on every admissible pair.
    pub psi_formula_holds: bool,
    /// Same check with `epsilon / 16` in place of `delta`. Agrees with
    /// `psi_formula_holds` only when `epsilon^2 = 1`.
    pub eps_over_16_holds: bool,
}

pub fn heisenberg_system(field: &Field, epsilon: Option<FieldElement>) -> Result<HeisenbergSystem> {
    let f = field;
    if f.characteristic() == 2 {
        return Err(FieldError::EvenCharacteristic(f.order()).into());
    }
    let eps = match epsilon {
        Some(e) if e == FieldElement::ZERO || f.is_square(e) => return Err(FieldError::NotNonsquare(e.0).into()),
        Some(e) => e,
        None => f.least_nonsquare()?,
    };
    let q = f.order() as usize;
    let group = heisenberg(f, 1)?;
    let layout = HeisenbergLayout { q, r: 1 };
    let z_elems: Vec<usize> = f.elements().map(|c| layout.encode(&[FieldElement::ZERO], &[FieldElement::ZERO], c)).collect();
    let zsub = Subgroup::new(&group, &z_elems)?;
    ensure(zsub == center(&group), "Z is the center")?;

    let one: MElem = (FieldElement::ONE, FieldElement::ZERO);
    let order_of = |m: MElem| {
        let (mut x, mut k) = (m, 1usize);
        while x != one {
            x = m_mul(f, eps, x, m);
            k += 1;
        }
        k
    };
    let generator = f
        .elements()
        .flat_map(|a| f.elements().map(move |b| (a, b)))
        .filter(|&m| m != (FieldElement::ZERO, FieldElement::ZERO))
        .find(|&m| order_of(m) == q * q - 1)
        .ok_or_else(|| ConstructionError::Check("M(eps) has no generator".into()))?;

    // phi is a monomorphism M(eps) -> Aut(G): validate every phi(M) and the
    // homomorphism law along the powers of the generator
    let k_generator = Automorphism::from_permutation(&group, phi_permutation(f, eps, generator))?;
    let mut m = generator;
    let mut phi_m = k_generator.clone();
    let mut seen = std::collections::HashSet::new();
    for _ in 0..q * q - 1 {
        let direct = Automorphism::from_permutation(&group, phi_permutation(f, eps, m))?;
        ensure(direct == phi_m, "phi(M1 M2) = phi(M1) phi(M2)")?;
        ensure(seen.insert(direct.permutation()), "phi is injective")?;
        m = m_mul(f, eps, generator, m);
        phi_m = k_generator.compose(&phi_m);
    }

    let partition = crate::schur::cyclotomic(&group, std::slice::from_ref(&k_generator))?;
    let zsharp: Vec<usize> = z_elems[1..].to_vec();
    ensure(partition.find_class(&normalize_set(&zsharp)).is_some(), "Z^# is one orbit")?;
    let mut y_sets = Vec::with_capacity(q);
    for i in f.elements() {
        let rep = layout.encode(&[FieldElement::ONE], &[FieldElement::ZERO], i);
        let y = partition.classes()[partition.class_of(rep)].clone();
        ensure(y.len() == q * q - 1, "off-center orbits have size q^2 - 1")?;
        y_sets.push(y);
    }
    ensure(partition.rank() == q + 2, "q orbits outside Z")?;
    let x_sets: Vec<Vec<usize>> = y_sets.iter().map(|y| normalize_set(&[&[0], &y[..]].concat())).collect();
    for x in &x_sets {
        let (l, r) = is_transversal(&group, &zsub, x);
        ensure(l && r, "X_i is a transversal for Z")?;
    }

    let certificate = verify_linked(&group, &zsub, &x_sets)?;
    let delta = f.inv(f.mul(f.from_int(16), eps)).expect("16 eps is nonzero");
    let eps16 = f.div(eps, f.from_int(16));
    let mut psi_formula_holds = true;
    let mut eps_over_16_holds = true;
    for i in f.elements() {
        ensure(certificate.chi[i.index()] == f.neg(i).index(), "chi(i) = -i")?;
        for j in f.elements() {
            let s = f.add(i, j);
            if s == FieldElement::ZERO {
                continue;
            }
            let expected = f.div(f.add(f.mul(i, j), delta), s);
            if certificate.psi[i.index()][j.index()] != Some(expected.index()) {
                psi_formula_holds = false;
            }
            if certificate.psi[i.index()][j.index()] != Some(f.div(f.add(f.mul(i, j), eps16), s).index()) {
                eps_over_16_holds = false;
            }
        }
    }
    Ok(HeisenbergSystem {
        field: f.clone(),
        epsilon: eps,
        delta,
        generator,
        group,
        center: zsub,
        k_generator,
        partition,
        y_sets,
        x_sets,
        certificate,
        psi_formula_holds,
        eps_over_16_holds,
    })
}

impl HeisenbergSystem {
    pub fn piece(&self) -> LinkedPiece {
        let layout = HeisenbergLayout { q: self.field.order() as usize, r: 1 };
        LinkedPiece {
            group: self.group.clone(),
            center: self.center.clone(),
            zmap: self.field.elements().map(|c| layout.encode(&[FieldElement::ZERO], &[FieldElement::ZERO], c)).collect(),
            certificate: self.certificate.clone(),
        }
    }

    pub fn bundle(&self) -> Bundle {
        let sets = self.x_sets.iter().enumerate().map(|(i, x)| NamedSet::new(&self.group, format!("X_{i}"), x)).collect();
        bundle(
            "heisenberg",
            &self.group,
            self.center.elements(),
            sets,
            to_value(&self.certificate),
            &[
                ("q", json!(self.field.order())),
                ("field", to_value(&self.field.spec())),
                ("epsilon", json!(self.epsilon.0)),
                ("delta", json!(self.delta.0)),
                ("generator", json!([self.generator.0 .0, self.generator.1 .0])),
            ],
            &[
                ("psi_formula_holds", json!(self.psi_formula_holds)),
                ("eps_over_16_holds", json!(self.eps_over_16_holds)),
            ],
        )
    }
}

// ---------------------------------------------------------------------------
// Assemblies over central products

/// A linked system together with its group, forbidden (central) subgroup,
/// and the labelling `c -> z^c` of that subgroup used to amalgamate.
#[derive(Clone, Debug)]
pub struct LinkedPiece {
    pub group: FiniteGroup,
    pub center: Subgroup,
    pub zmap: Vec<usize>,
    pub certificate: LinkedCertificate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductStage {
    pub factors: usize,
    pub predicted: (i64, i64),
    pub realized: (i64, i64),
    pub matches_prediction: bool,
}

/// `base ∘ base ∘ ... ∘ base` (`r` factors), combining linked systems with
/// `f` (identity by default) at each step.
pub fn linked_power(base: &LinkedPiece, r: usize, f: Option<&[usize]>) -> Result<(LinkedPiece, Vec<ProductStage>)> {
    if r == 0 {
        return Err(ConstructionError::Precondition("r must be at least 1".into()));
    }
    let total = (base.group.order() / base.center.order()).pow(r as u32) * base.center.order();
    if total > MAX_TABLE_ORDER {
        return Err(ConstructionError::TooLarge(total as u64));
    }
    let identity: Vec<usize> = (0..=base.certificate.s).collect();
    let f = f.unwrap_or(&identity);
    let mut cur = base.clone();
    let mut stages = Vec::new();
    for step in 2..=r {
        let theta: Vec<(usize, usize)> = cur.zmap.iter().copied().zip(base.zmap.iter().copied()).collect();
        let cp = central_product(&cur.group, &base.group, &cur.center, &base.center, &theta)?;
        let lp = linked_product(&cp, &cur.certificate, &base.certificate, f)?;
        stages.push(ProductStage {
            factors: step,
            predicted: lp.predicted,
            realized: (lp.certificate.mu, lp.certificate.nu),
            matches_prediction: lp.matches_prediction,
        });
        cur = LinkedPiece {
            zmap: cur.zmap.iter().map(|&z| cp.embed_left[z]).collect(),
            center: cp.amalgamated.clone(),
            group: cp.group,
            certificate: lp.certificate,
        };
    }
    Ok((cur, stages))
}

#[derive(Clone, Debug)]
pub struct LinkedAssembly {
    pub name: String,
    pub r: usize,
    pub piece: LinkedPiece,
    pub stages: Vec<ProductStage>,
    /// The closed `(mu, nu)` formula stated for this family.
    pub closed_formula: (i64, i64),
    pub matches_closed_formula: bool,
    pub provenance: Vec<(String, Value)>,
}

impl LinkedAssembly {
    fn new(name: &str, r: usize, piece: LinkedPiece, stages: Vec<ProductStage>, closed: (i64, i64)) -> Self {
        let realized = (piece.certificate.mu, piece.certificate.nu);
        LinkedAssembly {
            name: name.to_string(),
            r,
            piece,
            stages,
            closed_formula: closed,
            matches_closed_formula: realized == closed,
            provenance: Vec::new(),
        }
    }

    pub fn realized(&self) -> (i64, i64) {
        (self.piece.certificate.mu, self.piece.certificate.nu)
    }

    pub fn bundle(&self) -> Bundle {
        let g = &self.piece.group;
        let sets = self
            .piece
            .certificate
            .sets
            .iter()
            .enumerate()
            .map(|(i, x)| NamedSet::new(g, format!("L_{i}"), x))
            .collect();
        let mut provenance: Vec<(&str, Value)> = vec![("r", json!(self.r))];
        provenance.extend(self.provenance.iter().map(|(k, v)| (k.as_str(), v.clone())));
        bundle(
            &self.name,
            g,
            self.piece.center.elements(),
            sets,
            to_value(&self.piece.certificate),
            &provenance,
            &[
                ("stages", to_value(&self.stages)),
                ("closed_formula", json!([self.closed_formula.0, self.closed_formula.1])),
                ("matches_closed_formula", json!(self.matches_closed_formula)),
            ],
        )
    }
}

/// `(q^(2r-1) - q^r + q^(r-1), q^(2r-1) + q^(r-1))`
pub fn heis2r_formula(q: i64, r: u32) -> (i64, i64) {
    (q.pow(2 * r - 1) - q.pow(r) + q.pow(r - 1), q.pow(2 * r - 1) + q.pow(r - 1))
}

pub fn heisenberg_system_2r(field: &Field, r: usize, epsilon: Option<FieldElement>) -> Result<LinkedAssembly> {
    if r == 0 {
        return Err(ConstructionError::Precondition("r must be at least 1".into()));
    }
    check_size(field.order() as u64, 2 * r as u32 + 1)?;
    let base = heisenberg_system(field, epsilon)?;
    let (piece, stages) = linked_power(&base.piece(), r, None)?;
    let mut a = LinkedAssembly::new("heisenberg2r", r, piece, stages, heis2r_formula(field.order() as i64, r as u32));
    a.provenance = vec![
        ("q".into(), json!(field.order())),
        ("field".into(), to_value(&field.spec())),
        ("epsilon".into(), json!(base.epsilon.0)),
        ("delta".into(), json!(base.delta.0)),
    ];
    Ok(a)
}

// ---------------------------------------------------------------------------
// Q_8

/// `X_1 = {e, a, b, ba}`, `X_2 = X_1^(-1)` in `Q_8`, relative to `<a^2>`.
pub fn q8_system() -> Result<LinkedPiece> {
    let g = quaternion8();
    let ba = g.mul(4, 1);
    let x1 = normalize_set(&[0, 1, 4, ba]);
    let x2 = inverse_set(&g, &x1);
    let z = center(&g);
    let certificate = verify_linked(&g, &z, &[x1, x2])?;
    Ok(LinkedPiece { zmap: vec![0, 2], center: z, group: g, certificate })
}

pub fn q8_system_2r(r: usize) -> Result<LinkedAssembly> {
    if r == 0 {
        return Err(ConstructionError::Precondition("r must be at least 1".into()));
    }
    check_size(2, 2 * r as u32 + 1)?;
    let (piece, stages) = linked_power(&q8_system()?, r, None)?;
    Ok(LinkedAssembly::new("q8-2r", r, piece, stages, heis2r_formula(2, r as u32)))
}

// ---------------------------------------------------------------------------
// M_{p^3}

#[derive(Clone, Debug)]
pub struct ExtraspecialSystem {
    pub p: usize,
    pub group: FiniteGroup,
    pub primitive_root: usize,
    /// `(least primitive root mod p^2)^p mod p^2`
    pub xi: usize,
    pub sigma: Automorphism,
    pub tau: Automorphism,
    /// `sigma_i : x -> x y^i, y -> y`
    pub sigma_i: Vec<Automorphism>,
    pub k_order: usize,
    pub partition: SchurPartition,
    /// `Y = <y>`
    pub y_sub: Subgroup,
    /// `Z = <x^p>`, the center
    pub z_sub: Subgroup,
    pub x_sets: Vec<Vec<usize>>,
    /// `X_i ∪ Y`, relative to `Z`
    pub y_sets: Vec<Vec<usize>>,
    /// `X_i ∪ Z`, relative to `Y`
    pub z_sets: Vec<Vec<usize>>,
    pub y_certificates: Vec<RdsCertificate>,
    pub z_certificates: Vec<RdsCertificate>,
    /// `X_i ∪ Y^# ∪ Z^#`
    pub pds: Vec<PdsCertificate>,
}

fn mult_order(a: usize, m: usize) -> Option<usize> {
    let (mut x, mut k) = (a % m, 1);
    for _ in 0..m {
        if x == 1 {
            return Some(k);
        }
        x = x * a % m;
        k += 1;
    }
    None
}

pub fn extraspecial_rds(p: u32) -> Result<ExtraspecialSystem> {
    if p == 2 {
        return Err(FieldError::EvenCharacteristic(2).into());
    }
    let group = extraspecial_mp3(p)?;
    let p = p as usize;
    let p2 = p * p;
    let idx = |a: usize, b: usize| mp3_index(p, a, b);
    let (x, y) = (idx(1, 0), idx(0, 1));

    let primitive_root = (2..p2).find(|&g| mult_order(g, p2) == Some(p * (p - 1))).expect("Z/p^2 is cyclic");
    let xi = (0..p).fold(1, |acc, _| acc * primitive_root % p2);
    let sigma = Automorphism::from_images(&group, &[x, y], &[idx(1 + p * (p + 1) / 2, 1), y])?;
    let tau = Automorphism::from_images(&group, &[x, y], &[idx(xi, 0), y])?;
    let k = automorphism_group(&group, &[sigma.clone(), tau.clone()]);
    ensure(k.len() == p * (p - 1), "K = <sigma, tau> has order p(p-1)")?;

    let inv2 = p.div_ceil(2);
    let alphas: Vec<usize> = (0..p - 1).scan(1, |acc, _| {
        let a = *acc;
        *acc = *acc * xi % p2;
        Some(a)
    }).collect();
    let x0: Vec<usize> = alphas
        .iter()
        .flat_map(|&a| (0..p).map(move |b| idx(a + p * ((a % p) * b % p * inv2 % p), b)))
        .collect();
    let x0 = normalize_set(&x0);
    ensure(x0.len() == p * (p - 1), "|X_0| = p(p-1)")?;
    let x_sets: Vec<Vec<usize>> =
        (0..p).map(|i| normalize_set(&x0.iter().map(|&g| group.mul(g, idx(0, i))).collect::<Vec<_>>())).collect();

    let partition = crate::schur::cyclotomic(&group, &[sigma.clone(), tau.clone()])?;
    let mut expected: Vec<Vec<usize>> = Vec::new();
    for i in 0..p {
        expected.push(vec![idx(0, i)]);
        expected.push(normalize_set(&(1..p).map(|c| idx(p * c, i)).collect::<Vec<_>>()));
        expected.push(x_sets[i].clone());
    }
    expected.sort();
    let mut got = partition.classes().to_vec();
    got.sort();
    ensure(got == expected, "orbits of K are {y^i}, Z^# y^i, X_i")?;

    let y_sub = Subgroup::new(&group, &(0..p).map(|i| idx(0, i)).collect::<Vec<_>>())?;
    let z_sub = Subgroup::new(&group, &(0..p).map(|c| idx(p * c, 0)).collect::<Vec<_>>())?;
    ensure(z_sub == center(&group), "Z is the center")?;
    ensure(!is_normal(&group, &y_sub), "Y is not normal")?;

    let tau_half = (1..(p - 1) / 2).fold(tau.clone(), |acc, _| tau.compose(&acc));
    ensure(tau_half.apply(x) == group.inv(x), "tau^((p-1)/2) inverts x")?;
    let mut sigma_i = Vec::with_capacity(p);
    for (i, xs) in x_sets.iter().enumerate() {
        ensure(inverse_set(&group, xs) == *xs, format!("X_{i} is reversible"))?;
        let s = Automorphism::from_images(&group, &[x, y], &[idx(1, i), y])?;
        ensure(s.apply_set(&x0) == *xs, format!("sigma_{i}(X_0) = X_{i}"))?;
        ensure(s.apply_set(y_sub.elements()) == y_sub.elements(), "sigma_i(Y) = Y")?;
        ensure(s.apply_set(z_sub.elements()) == z_sub.elements(), "sigma_i(Z) = Z")?;
        sigma_i.push(s);
    }

    let union = |a: &[usize], b: &[usize]| normalize_set(&[a, b].concat());
    let y_sets: Vec<Vec<usize>> = x_sets.iter().map(|xs| union(xs, y_sub.elements())).collect();
    let z_sets: Vec<Vec<usize>> = x_sets.iter().map(|xs| union(xs, z_sub.elements())).collect();
    let target = (p2, p, p2, p);
    let mut y_certificates = Vec::new();
    let mut z_certificates = Vec::new();
    for (ys, zs) in y_sets.iter().zip(&z_sets) {
        let c = verify_rds(&group, ys, &z_sub)?;
        ensure(c.parameters() == target && c.reversible, "Y_i is a reversible (p^2,p,p^2,p)-RDS")?;
        y_certificates.push(c);
        let c = verify_rds(&group, zs, &y_sub)?;
        ensure(c.parameters() == target && c.reversible, "Z_i is a reversible (p^2,p,p^2,p)-RDS")?;
        z_certificates.push(c);
    }
    let mut pds = Vec::new();
    for xs in &x_sets {
        let s: Vec<usize> = xs.iter().chain(y_sub.elements()).chain(z_sub.elements()).copied().filter(|&g| g != 0).collect();
        let c = verify_pds(&group, &normalize_set(&s))?;
        ensure(
            (c.v, c.k, c.lambda, c.mu) == (p * p2, p2 + p - 2, p - 2, p + 2),
            "S_i is a (p^3, p^2+p-2, p-2, p+2)-PDS",
        )?;
        pds.push(c);
    }
    Ok(ExtraspecialSystem {
        p,
        group,
        primitive_root,
        xi,
        sigma,
        tau,
        sigma_i,
        k_order: k.len(),
        partition,
        y_sub,
        z_sub,
        x_sets,
        y_sets,
        z_sets,
        y_certificates,
        z_certificates,
        pds,
    })
}

impl ExtraspecialSystem {
    pub fn bundle(&self) -> Bundle {
        let g = &self.group;
        let mut sets = Vec::new();
        for (i, s) in self.y_sets.iter().enumerate() {
            sets.push(NamedSet::new(g, format!("Y_{i}"), s));
        }
        for (i, s) in self.z_sets.iter().enumerate() {
            sets.push(NamedSet::new(g, format!("Z_{i}"), s));
        }
        bundle(
            "extraspecial",
            g,
            self.z_sub.elements(),
            sets,
            json!({
                "y_sets": to_value(&self.y_certificates),
                "z_sets": to_value(&self.z_certificates),
                "pds": to_value(&self.pds),
            }),
            &[
                ("p", json!(self.p)),
                ("primitive_root", json!(self.primitive_root)),
                ("xi", json!(self.xi)),
                ("y_subgroup", json!(self.y_sub.elements())),
            ],
            &[("k_order", json!(self.k_order)), ("y_normal", json!(false))],
        )
    }
}

// ---------------------------------------------------------------------------
// RDS in an extraspecial group of exponent p^2

#[derive(Clone, Debug)]
pub struct ExtraspecialRdsAssembly {
    pub p: usize,
    pub r: usize,
    pub group: FiniteGroup,
    pub forbidden: Subgroup,
    pub exponent: usize,
    pub certificate: RdsCertificate,
}

/// `Y_0` in `M_{p^3}` times `r - 1` copies of `X_0` in Heisenberg groups,
/// combined over central products.
pub fn theorem_1_2_rds(p: u32, r: usize) -> Result<ExtraspecialRdsAssembly> {
    if r == 0 {
        return Err(ConstructionError::Precondition("r must be at least 1".into()));
    }
    if p == 2 {
        return Err(ConstructionError::Precondition("p must be odd; 2-groups are covered by the Q8 products".into()));
    }
    check_size(p as u64, 2 * r as u32 + 1)?;
    let m = extraspecial_rds(p)?;
    let pu = p as usize;
    let mut group = m.group.clone();
    let mut set = m.y_sets[0].clone();
    let mut forbidden = m.z_sub.clone();
    let mut zmap: Vec<usize> = (0..pu).map(|c| mp3_index(pu, pu * c, 0)).collect();
    let mut certificate = verify_rds(&group, &set, &forbidden)?;
    if r > 1 {
        let h = heisenberg_system(&Field::new(p, 1)?, None)?;
        let hp = h.piece();
        let x0 = &h.x_sets[0];
        for _ in 1..r {
            let theta: Vec<(usize, usize)> = zmap.iter().copied().zip(hp.zmap.iter().copied()).collect();
            let cp = central_product(&group, &hp.group, &forbidden, &hp.center, &theta)?;
            let prod = rds_product(&cp.group, &group, &cp.embed_left, &set, &hp.group, &cp.embed_right, x0)?;
            zmap = zmap.iter().map(|&z| cp.embed_left[z]).collect();
            forbidden = cp.amalgamated.clone();
            set = prod.set;
            certificate = prod.certificate;
            group = cp.group;
        }
    }
    let exponent = group.exponent();
    ensure(exponent == pu * pu, "ambient group has exponent p^2")?;
    let pr = pu.pow(2 * r as u32);
    ensure(certificate.parameters() == (pr, pu, pr, pr / pu), "parameters (p^2r, p, p^2r, p^(2r-1))")?;
    Ok(ExtraspecialRdsAssembly { p: pu, r, group, forbidden, exponent, certificate })
}

impl ExtraspecialRdsAssembly {
    pub fn bundle(&self) -> Bundle {
        bundle(
            "thm12",
            &self.group,
            self.forbidden.elements(),
            vec![NamedSet::new(&self.group, "X", &self.certificate.set)],
            to_value(&self.certificate),
            &[("p", json!(self.p)), ("r", json!(self.r))],
            &[("exponent", json!(self.exponent))],
        )
    }
}

// ---------------------------------------------------------------------------
// Endomorphism-twisted systems over amorphic S-rings

/// An additive subgroup of `End(C_p^j)` given by `j x j` matrices over
/// `F_p`, each acting on coordinate vectors (lowest digit first).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndoSpace {
    pub p: u32,
    pub j: u32,
    /// `matrices[0]` is zero.
    pub matrices: Vec<Vec<Vec<u32>>>,
}

fn digits(mut h: usize, p: usize, j: usize) -> Vec<usize> {
    (0..j)
        .map(|_| {
            let d = h % p;
            h /= p;
            d
        })
        .collect()
}

fn det_mod_p(m: &[Vec<u32>], p: u32) -> u32 {
    let f = Field::new(p, 1).expect("p is prime");
    let mut a: Vec<Vec<FieldElement>> = m.iter().map(|r| r.iter().map(|&x| FieldElement(x)).collect()).collect();
    let n = a.len();
    let mut det = FieldElement::ONE;
    for c in 0..n {
        let Some(piv) = (c..n).find(|&i| a[i][c] != FieldElement::ZERO) else {
            return 0;
        };
        if piv != c {
            a.swap(piv, c);
            det = f.neg(det);
        }
        det = f.mul(det, a[c][c]);
        let inv = f.inv(a[c][c]).expect("pivot is nonzero");
        for i in c + 1..n {
            let factor = f.mul(a[i][c], inv);
            for k in c..n {
                let t = f.mul(factor, a[c][k]);
                a[i][k] = f.sub(a[i][k], t);
            }
        }
    }
    det.0
}

impl EndoSpace {
    /// Validates: contains 0, closed under addition, nonzero members invertible.
    pub fn from_matrices(p: u32, j: u32, matrices: Vec<Vec<Vec<u32>>>) -> Result<Self> {
        let n = j as usize;
        for m in &matrices {
            if m.len() != n || m.iter().any(|r| r.len() != n || r.iter().any(|&x| x >= p)) {
                return Err(ConstructionError::Precondition(format!("matrices must be {n}x{n} over F_{p}")));
            }
        }
        let zero = vec![vec![0; n]; n];
        let mut matrices = matrices;
        matrices.sort();
        matrices.dedup();
        let zpos = matrices
            .iter()
            .position(|m| *m == zero)
            .ok_or_else(|| ConstructionError::Precondition("S must contain 0".into()))?;
        let zm = matrices.remove(zpos);
        matrices.insert(0, zm);
        let space = EndoSpace { p, j, matrices };
        for a in 0..space.len() {
            for b in 0..space.len() {
                if space.find(&space.sum_matrix(a, b)).is_none() {
                    return Err(ConstructionError::Precondition("S is not closed under addition".into()));
                }
            }
            if a > 0 && det_mod_p(&space.matrices[a], p) == 0 {
                return Err(ConstructionError::Precondition(format!("member {a} of S is not an automorphism")));
            }
        }
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    fn sum_matrix(&self, a: usize, b: usize) -> Vec<Vec<u32>> {
        let (ma, mb) = (&self.matrices[a], &self.matrices[b]);
        ma.iter().zip(mb).map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x + y) % self.p).collect()).collect()
    }

    fn find(&self, m: &[Vec<u32>]) -> Option<usize> {
        self.matrices.iter().position(|x| x == m)
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        self.find(&self.sum_matrix(a, b)).expect("S is closed")
    }

    pub fn neg(&self, a: usize) -> usize {
        (0..self.len()).find(|&b| self.add(a, b) == 0).expect("S is a group")
    }

    /// `h^f` for `h` an element index of `C_p^j`.
    pub fn apply(&self, f: usize, h: usize) -> usize {
        let (p, j) = (self.p as usize, self.j as usize);
        let v = digits(h, p, j);
        let m = &self.matrices[f];
        (0..j).rev().fold(0, |acc, row| acc * p + (0..j).map(|c| m[row][c] as usize * v[c]).sum::<usize>() % p)
    }

    pub fn determinants(&self) -> Vec<u32> {
        self.matrices.iter().map(|m| det_mod_p(m, self.p)).collect()
    }
}

/// The span of the first `i` basis elements `1, w, ..., w^(i-1)` of
/// `F_{p^j}` acting on itself by multiplication, as `j x j` matrices.
pub fn endo_space(p: u32, j: u32, i: u32) -> Result<EndoSpace> {
    if i > j {
        return Err(ConstructionError::Precondition(format!("i = {i} exceeds j = {j}")));
    }
    let f = Field::new(p, j)?;
    let n = j as usize;
    let matrix = |a: FieldElement| -> Vec<Vec<u32>> {
        let cols: Vec<Vec<u32>> =
            (0..n).map(|c| f.coefficients(f.mul(a, f.element(p.pow(c as u32)).expect("basis element")))).collect();
        (0..n).map(|r| (0..n).map(|c| cols[c].get(r).copied().unwrap_or(0)).collect()).collect()
    };
    let count = p.pow(i);
    let matrices = (0..count).map(|a| matrix(f.element(a).expect("index below p^j"))).collect();
    EndoSpace::from_matrices(p, j, matrices)
}

#[derive(Clone, Debug)]
pub struct DpsSystem {
    pub n: usize,
    pub t: usize,
    pub amorphic: AmorphicLatin,
    pub endo: EndoSpace,
    /// `H = C_p^j`
    pub h_group: FiniteGroup,
    /// `H x G`, index `h + t g`
    pub group: FiniteGroup,
    pub forbidden: Subgroup,
    /// Family member `a` is `Y_f` with `f = members[a]`.
    pub members: Vec<usize>,
    pub sets: Vec<Vec<usize>>,
    pub certificate: LinkedCertificate,
}

pub fn dps_system(field: &Field, t: usize, endo: &EndoSpace, labeling: Option<&[usize]>) -> Result<DpsSystem> {
    let p = field.characteristic();
    let n = field.order() as usize;
    if endo.p != p || (p as usize).pow(endo.j) != t {
        return Err(ConstructionError::Precondition(format!("|H| = {t} must equal {p}^j for S over C_{p}^j")));
    }
    if endo.len() < 3 {
        return Err(ConstructionError::Precondition(format!(
            "|S| = {} gives {} set(s); a linked system needs at least 2",
            endo.len(),
            endo.len().saturating_sub(1)
        )));
    }
    let amorphic = amorphic_latin(field, t, labeling)?;
    let verdict = check_amorph_relations(&amorphic.group, &amorphic.sets)?;
    ensure(verdict.holds, format!("amorphic relations fail at {:?}", verdict.counterexample))?;
    let h_group = elementary_abelian(p, endo.j)?;
    let group = direct_product(&h_group, &amorphic.group)?;
    let forbidden = Subgroup::new(&group, &(0..t).collect::<Vec<_>>())?;
    let members: Vec<usize> = (1..endo.len()).collect();
    let y = |f: usize| -> Vec<usize> {
        let mut s = vec![0];
        for (h, xh) in amorphic.sets.iter().enumerate() {
            let hf = endo.apply(f, h);
            s.extend(xh.iter().map(|&g| hf + t * g));
        }
        normalize_set(&s)
    };
    let sets: Vec<Vec<usize>> = members.iter().map(|&f| y(f)).collect();
    for (a, &f) in members.iter().enumerate() {
        ensure(sets[a].len() == n * n, "|Y_f| = n^2")?;
        ensure(inverse_set(&group, &sets[a]) == y(endo.neg(f)), "Y_f^(-1) = Y_(-f)")?;
        let (l, r) = is_transversal(&group, &forbidden, &sets[a]);
        ensure(l && r, "Y_f is a transversal for H")?;
    }

    // products of the Y_f as exact group-ring identities
    let zg = GroupRing::new(&group);
    let all = zg.all();
    let off_h = zg.sub(&all, &zg.indicator(forbidden.elements())?)?;
    let ind: Vec<_> = sets.iter().map(|s| zg.indicator(s)).collect::<std::result::Result<_, _>>()?;
    let (ni, nt) = (n as i64, (n / t) as i64);
    for (a, &f1) in members.iter().enumerate() {
        for (b, &f2) in members.iter().enumerate() {
            let lhs = zg.mul(&ind[a], &ind[b])?;
            let sum = endo.add(f1, f2);
            let rhs = if sum == 0 {
                zg.combination(&[(ni * ni, &zg.scalar(1)), (ni * nt, &off_h)])?
            } else {
                zg.combination(&[(ni, &ind[sum - 1]), ((ni - 1) * nt, &all)])?
            };
            ensure(lhs == rhs, format!("product identity for (Y_{f1}, Y_{f2})"))?;
        }
    }

    let certificate = verify_linked(&group, &forbidden, &sets)?;
    for (a, &f) in members.iter().enumerate() {
        ensure(certificate.chi[a] == endo.neg(f) - 1, "chi(f) = -f")?;
        for (b, &g) in members.iter().enumerate() {
            let sum = endo.add(f, g);
            if sum != 0 {
                ensure(certificate.psi[a][b] == Some(sum - 1), "psi(f1, f2) = f1 + f2")?;
            }
        }
    }
    let s = endo.len();
    let expected = (n * n, t, n * n, n * n / t, s - 1, (n + (n - 1) * n / t) as i64, ((n - 1) * n / t) as i64);
    ensure(certificate.parameters() == expected, format!("parameters {expected:?}"))?;
    Ok(DpsSystem { n, t, amorphic, endo: endo.clone(), h_group, group, forbidden, members, sets, certificate })
}

impl DpsSystem {
    pub fn bundle(&self) -> Bundle {
        let sets = self
            .members
            .iter()
            .zip(&self.sets)
            .map(|(f, s)| NamedSet::new(&self.group, format!("Y_{f}"), s))
            .collect();
        bundle(
            "dps",
            &self.group,
            self.forbidden.elements(),
            sets,
            to_value(&self.certificate),
            &[
                ("n", json!(self.n)),
                ("t", json!(self.t)),
                ("labeling", json!(self.amorphic.labeling)),
                ("endomorphisms", to_value(&self.endo)),
            ],
            &[],
        )
    }
}

/// `rds_to_pds` on `X_0` of the Heisenberg system.
pub fn heisenberg_pds(field: &Field) -> Result<PdsCertificate> {
    let h = heisenberg_system(field, None)?;
    Ok(rds_to_pds(&h.group, &h.x_sets[0], &h.center)?)
}
