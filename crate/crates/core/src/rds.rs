//! Relative and partial difference sets, the product of semiregular RDSs,
//! Cayley graphs of RDSs as antipodal distance-regular covers, the
//! Thas-Somma graphs, and development of a set into blocks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ff::{Field, FieldElement};
use crate::groupring::{inverse_set, normalize_set, GroupRing, GroupRingError};
use crate::groups::{FiniteGroup, GroupError, Subgroup};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RdsError {
    #[error("RDS equation fails at element {element}: expected coefficient {expected}, got {actual}")]
    EquationFails { element: usize, expected: i64, actual: i64 },
    #[error("lambda must be a positive integer")]
    LambdaNotPositive,
    #[error("i-commuting criteria disagree: XX^(-1) = X^(-1)X is {inverse_commute}, XN = NX is {coset_commute}")]
    CriteriaDisagree { inverse_commute: bool, coset_commute: bool },
    #[error("product x1*x2 collides at element {0}")]
    ProductCollision(usize),
    #[error("product parameters {got:?} differ from the predicted {expected:?}")]
    FormulaMismatch { got: (usize, usize, usize, usize), expected: (usize, usize, usize, usize) },
    #[error("PDS equation fails at element {element}: expected coefficient {expected}, got {actual}")]
    PdsEquationFails { element: usize, expected: i64, actual: i64 },
    #[error("graph is not distance-regular: vertex {w} at distance {distance} from {u} breaks the pattern")]
    NotDistanceRegular { u: usize, w: usize, distance: usize },
    #[error("graph diameter is {found:?}, expected 3")]
    WrongDiameter { found: Option<usize> },
    #[error("distance-3 classes are not the cosets of the forbidden subgroup")]
    AntipodalMismatch,
    #[error("connection set must be inverse-closed and avoid the identity")]
    BadConnectionSet,
    #[error("invalid form: {0}")]
    InvalidForm(String),
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    GroupRing(#[from] GroupRingError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// A verified `(m, n, k, lambda)`-RDS.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RdsCertificate {
    pub set: Vec<usize>,
    pub forbidden: Vec<usize>,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub lambda: usize,
    pub semiregular: bool,
    pub reversible: bool,
    pub i_commuting: bool,
    /// `X^(-1)` is an RDS with the same parameters (for some forbidden subgroup).
    pub symmetric: bool,
    /// Set if the RDS is symmetric but not i-commuting. No such example is
    /// known; this is surfaced rather than treated as an error.
    pub symmetric_non_icommuting: bool,
}

impl RdsCertificate {
    pub fn parameters(&self) -> (usize, usize, usize, usize) {
        (self.m, self.n, self.k, self.lambda)
    }
}

fn check_rds_equation(
    zg: &GroupRing<'_>,
    set: &[usize],
    forbidden: &Subgroup,
    product: &crate::groupring::GroupRingElement,
) -> Result<usize, RdsError> {
    let k = set.len() as i64;
    let g = zg.group();
    let lambda = (0..g.order()).find(|&x| !forbidden.contains(x)).map(|x| product.coeff(x));
    for x in 0..g.order() {
        let expected = if x == 0 {
            k
        } else if forbidden.contains(x) {
            0
        } else {
            lambda.unwrap_or(0)
        };
        let actual = product.coeff(x);
        if actual != expected {
            return Err(RdsError::EquationFails { element: x, expected, actual });
        }
    }
    match lambda {
        Some(l) if l > 0 => Ok(l as usize),
        _ => Err(RdsError::LambdaNotPositive),
    }
}

pub fn verify_rds(group: &FiniteGroup, set: &[usize], forbidden: &Subgroup) -> Result<RdsCertificate, RdsError> {
    for &x in set {
        group.check_index(x)?;
    }
    let set = normalize_set(set);
    let zg = GroupRing::new(group);
    let xs = zg.indicator(&set)?;
    let xinv = zg.involution(&xs)?;
    let lambda = check_rds_equation(&zg, &set, forbidden, &zg.mul(&xs, &xinv)?)?;
    let (n, k) = (forbidden.order(), set.len());
    let m = group.order() / n;
    debug_assert_eq!(k * (k - 1), lambda * n * (m - 1));

    let inv = inverse_set(group, &set);
    let reversible = inv == set;
    let i_commuting = is_icommuting_unchecked(&zg, &xs, &xinv, forbidden)?;
    let symmetric = i_commuting || {
        // X^(-1) X determines the only candidate forbidden subgroup
        let dual = zg.mul(&xinv, &xs)?;
        let candidate: Vec<usize> =
            std::iter::once(0).chain((1..group.order()).filter(|&g| dual.coeff(g) == 0)).collect();
        match Subgroup::new(group, &candidate) {
            Ok(n2) if n2.order() == n => check_rds_equation(&zg, &inv, &n2, &dual).is_ok_and(|l| l == lambda),
            _ => false,
        }
    };
    Ok(RdsCertificate {
        set,
        forbidden: forbidden.elements().to_vec(),
        m,
        n,
        k,
        lambda,
        semiregular: k == m,
        reversible,
        i_commuting,
        symmetric,
        symmetric_non_icommuting: symmetric && !i_commuting,
    })
}

/// All subgroups `N` for which `X` is an RDS relative to `N`.
///
/// Since `lambda > 0`, `N` is forced to be `{e}` together with the support
/// complement of `X X^(-1)`, so at most one subgroup is returned.
pub fn find_forbidden(group: &FiniteGroup, set: &[usize]) -> Vec<Subgroup> {
    let zg = GroupRing::new(group);
    let Ok(prod) = zg.difference_product(&normalize_set(set)) else {
        return Vec::new();
    };
    let candidate: Vec<usize> = std::iter::once(0).chain((1..group.order()).filter(|&g| prod.coeff(g) == 0)).collect();
    match Subgroup::new(group, &candidate) {
        Ok(n) if verify_rds(group, set, &n).is_ok() => vec![n],
        _ => Vec::new(),
    }
}

/// Subgroup scan version of [`find_forbidden`], for cross-checking.
pub fn find_forbidden_exhaustive(group: &FiniteGroup, set: &[usize]) -> Result<Vec<Subgroup>, RdsError> {
    Ok(crate::groups::all_subgroups(group)?
        .into_iter()
        .filter(|n| verify_rds(group, set, n).is_ok())
        .collect())
}

fn is_icommuting_unchecked(
    zg: &GroupRing<'_>,
    xs: &crate::groupring::GroupRingElement,
    xinv: &crate::groupring::GroupRingElement,
    forbidden: &Subgroup,
) -> Result<bool, RdsError> {
    let inverse_commute = zg.mul(xs, xinv)? == zg.mul(xinv, xs)?;
    let ns = zg.indicator(forbidden.elements())?;
    let coset_commute = zg.mul(xs, &ns)? == zg.mul(&ns, xs)?;
    if inverse_commute != coset_commute {
        return Err(RdsError::CriteriaDisagree { inverse_commute, coset_commute });
    }
    Ok(inverse_commute)
}

/// Decides i-commuting by both `XX^(-1) = X^(-1)X` and `XN = NX`, failing
/// if they disagree.
pub fn is_icommuting(group: &FiniteGroup, set: &[usize], forbidden: &Subgroup) -> Result<bool, RdsError> {
    verify_rds(group, set, forbidden)?;
    let zg = GroupRing::new(group);
    let xs = zg.indicator(set)?;
    let xinv = zg.involution(&xs)?;
    is_icommuting_unchecked(&zg, &xs, &xinv, forbidden)
}

fn check_embedding(group: &FiniteGroup, sub: &FiniteGroup, emb: &[usize]) -> Result<Subgroup, RdsError> {
    if emb.len() != sub.order() {
        return Err(RdsError::Precondition("embedding length differs from the factor order".into()));
    }
    for &g in emb {
        group.check_index(g)?;
    }
    for a in 0..sub.order() {
        for b in 0..sub.order() {
            if emb[sub.mul(a, b)] != group.mul(emb[a], emb[b]) {
                return Err(RdsError::Precondition(format!("embedding is not a homomorphism at ({a}, {b})")));
            }
        }
    }
    let image = Subgroup::new(group, emb)?;
    if image.order() != sub.order() {
        return Err(RdsError::Precondition("embedding is not injective".into()));
    }
    Ok(image)
}

/// Result of [`rds_product`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RdsProduct {
    pub set: Vec<usize>,
    pub certificate: RdsCertificate,
}

/// The product `X1 X2` of semiregular RDSs in subgroups `G1`, `G2` with
/// `G = G1 G2` and common forbidden subgroup `N = G1 ∩ G2`; `X1` must be
/// i-commuting.
pub fn rds_product(
    group: &FiniteGroup,
    g1: &FiniteGroup,
    emb1: &[usize],
    x1: &[usize],
    g2: &FiniteGroup,
    emb2: &[usize],
    x2: &[usize],
) -> Result<RdsProduct, RdsError> {
    let h1 = check_embedding(group, g1, emb1)?;
    let h2 = check_embedding(group, g2, emb2)?;
    if h1.order() == group.order() || h2.order() == group.order() {
        return Err(RdsError::Precondition("factors must be proper subgroups".into()));
    }
    let common: Vec<usize> = h1.elements().iter().copied().filter(|&g| h2.contains(g)).collect();
    if h1.order() * h2.order() / common.len() != group.order() {
        return Err(RdsError::Precondition("G is not the product G1 G2".into()));
    }
    if common.len() == h1.order() || common.len() == h2.order() {
        return Err(RdsError::Precondition("a factor equals the forbidden subgroup".into()));
    }
    let preimage = |emb: &[usize]| -> Vec<usize> { (0..emb.len()).filter(|&a| common.contains(&emb[a])).collect() };
    let n1 = Subgroup::new(g1, &preimage(emb1))?;
    let n2 = Subgroup::new(g2, &preimage(emb2))?;
    let c1 = verify_rds(g1, x1, &n1)?;
    let c2 = verify_rds(g2, x2, &n2)?;
    if !c1.semiregular || !c2.semiregular {
        return Err(RdsError::Precondition("both factors must be semiregular".into()));
    }
    if !c1.i_commuting {
        return Err(RdsError::Precondition("X1 must be i-commuting".into()));
    }

    let mut seen = vec![false; group.order()];
    let mut set = Vec::with_capacity(x1.len() * x2.len());
    for &a in &c1.set {
        for &b in &c2.set {
            let g = group.mul(emb1[a], emb2[b]);
            if std::mem::replace(&mut seen[g], true) {
                return Err(RdsError::ProductCollision(g));
            }
            set.push(g);
        }
    }
    set.sort_unstable();
    let n = Subgroup::new(group, &common)?;
    let certificate = verify_rds(group, &set, &n)?;
    let nn = common.len();
    let l = c1.lambda * c2.lambda;
    let expected = (nn * nn * l, nn, nn * nn * l, nn * l);
    if certificate.parameters() != expected {
        return Err(RdsError::FormulaMismatch { got: certificate.parameters(), expected });
    }
    Ok(RdsProduct { set, certificate })
}

/// A verified `(v, k, lambda, mu)`-PDS.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PdsCertificate {
    pub set: Vec<usize>,
    pub v: usize,
    pub k: usize,
    pub lambda: usize,
    pub mu: usize,
}

pub fn verify_pds(group: &FiniteGroup, set: &[usize]) -> Result<PdsCertificate, RdsError> {
    for &x in set {
        group.check_index(x)?;
    }
    let set = normalize_set(set);
    let zg = GroupRing::new(group);
    let prod = zg.difference_product(&set)?;
    let mut member = vec![false; group.order()];
    for &s in &set {
        member[s] = true;
    }
    let lambda = set.iter().copied().find(|&s| s != 0).map_or(0, |s| prod.coeff(s));
    let mu = (1..group.order()).find(|&g| !member[g]).map_or(0, |g| prod.coeff(g));
    for g in 0..group.order() {
        let expected = if g == 0 {
            set.len() as i64
        } else if member[g] {
            lambda
        } else {
            mu
        };
        if prod.coeff(g) != expected {
            return Err(RdsError::PdsEquationFails { element: g, expected, actual: prod.coeff(g) });
        }
    }
    Ok(PdsCertificate { v: group.order(), k: set.len(), lambda: lambda as usize, mu: mu as usize, set })
}

/// `S = X^# ∪ N^#` for a reversible semiregular RDS with `lambda = n`.
pub fn rds_to_pds(group: &FiniteGroup, set: &[usize], forbidden: &Subgroup) -> Result<PdsCertificate, RdsError> {
    let cert = verify_rds(group, set, forbidden)?;
    if !cert.reversible {
        return Err(RdsError::Precondition("X must be reversible".into()));
    }
    if !cert.semiregular || cert.lambda != cert.n {
        return Err(RdsError::Precondition(format!("need a semiregular RDS with lambda = n, got {:?}", cert.parameters())));
    }
    let s: Vec<usize> = cert.set.iter().chain(forbidden.elements()).copied().filter(|&g| g != 0).collect();
    verify_pds(group, &s)
}

/// Undirected simple graph with adjacency bitsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    bits: Vec<Vec<u64>>,
}

fn words(n: usize) -> usize {
    n.div_ceil(64)
}

impl Graph {
    pub fn from_adjacency(adj: Vec<Vec<usize>>) -> Self {
        let n = adj.len();
        let mut bits = vec![vec![0u64; words(n)]; n];
        let adj: Vec<Vec<usize>> = adj.into_iter().map(|l| normalize_set(&l)).collect();
        for (u, l) in adj.iter().enumerate() {
            for &w in l {
                bits[u][w / 64] |= 1 << (w % 64);
            }
        }
        Graph { adj, bits }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn is_adjacent(&self, u: usize, w: usize) -> bool {
        self.bits[u][w / 64] >> (w % 64) & 1 == 1
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, l)| l.iter().filter(move |&&w| u < w).map(move |&w| (u, w)))
    }

    /// One line per vertex: `u: w1 w2 ...`.
    pub fn to_adjlist(&self) -> String {
        let mut out = String::new();
        for (u, l) in self.adj.iter().enumerate() {
            out.push_str(&u.to_string());
            out.push(':');
            for w in l {
                out.push(' ');
                out.push_str(&w.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// DIMACS edge format, 1-based.
    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p edge {} {}\n", self.vertex_count(), self.edge_count());
        for (u, w) in self.edges() {
            out.push_str(&format!("e {} {}\n", u + 1, w + 1));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "vertices": self.vertex_count(),
            "edges": self.edges().map(|(u, w)| [u, w]).collect::<Vec<_>>(),
        })
    }

    fn is_symmetric(&self) -> bool {
        self.adj.iter().enumerate().all(|(u, l)| l.iter().all(|&w| w != u && self.is_adjacent(w, u)))
    }
}

/// Cayley graph `Cay(G, S)` with `g ~ s g`.
pub fn cayley_graph(group: &FiniteGroup, connection: &[usize]) -> Result<Graph, RdsError> {
    let s = normalize_set(connection);
    for &x in &s {
        group.check_index(x)?;
    }
    if s.contains(&0) || inverse_set(group, &s) != s {
        return Err(RdsError::BadConnectionSet);
    }
    Ok(Graph::from_adjacency((0..group.order()).map(|g| s.iter().map(|&x| group.mul(x, g)).collect()).collect()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntersectionArray {
    pub b: [usize; 3],
    pub c: [usize; 3],
}

impl IntersectionArray {
    pub fn new(b: [usize; 3], c: [usize; 3]) -> Self {
        IntersectionArray { b, c }
    }

    /// `b0 > b1 >= b2`, `1 = c1 <= c2 <= c3 <= b0`.
    pub fn is_feasible(&self) -> bool {
        let [b0, b1, b2] = self.b;
        let [c1, c2, c3] = self.c;
        b0 > b1 && b1 >= b2 && b2 > 0 && c1 == 1 && c1 <= c2 && c2 <= c3 && c3 <= b0
    }

    /// For an antipodal `r`-cover of `K_m` with `c2` common neighbours,
    /// the array is `{m-1, (r-1)c2, 1; 1, c2, m-1}`; returns `(m, r, c2)`.
    pub fn cover_parameters(&self) -> Option<(usize, usize, usize)> {
        let [b0, b1, b2] = self.b;
        let [c1, c2, c3] = self.c;
        (b2 == 1 && c1 == 1 && c3 == b0 && c2 > 0 && b1 % c2 == 0).then(|| (b0 + 1, b1 / c2 + 1, c2))
    }

    pub fn cover(m: usize, r: usize, c2: usize) -> Self {
        IntersectionArray { b: [m - 1, (r - 1) * c2, 1], c: [1, c2, m - 1] }
    }
}

impl std::fmt::Display for IntersectionArray {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let [b0, b1, b2] = self.b;
        let [c1, c2, c3] = self.c;
        write!(f, "{{{b0},{b1},{b2};{c1},{c2},{c3}}}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrgReport {
    pub array: IntersectionArray,
    /// Classes `{u} ∪ Γ3(u)` when "at distance 0 or 3" is an equivalence.
    pub antipodal_classes: Option<Vec<Vec<usize>>>,
}

fn layer_profile(g: &Graph, u: usize) -> Result<(Vec<usize>, [usize; 3], [usize; 3]), RdsError> {
    let n = g.vertex_count();
    let mut dist = vec![usize::MAX; n];
    dist[u] = 0;
    let mut frontier = vec![u];
    let mut layers: Vec<Vec<u64>> = Vec::new();
    while !frontier.is_empty() {
        let mut layer = vec![0u64; words(n)];
        for &v in &frontier {
            layer[v / 64] |= 1 << (v % 64);
        }
        layers.push(layer);
        let d = layers.len();
        let mut next = Vec::new();
        for &v in &frontier {
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = d;
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    if dist.contains(&usize::MAX) {
        return Err(RdsError::WrongDiameter { found: None });
    }
    if layers.len() != 4 {
        return Err(RdsError::WrongDiameter { found: Some(layers.len() - 1) });
    }
    let count = |w: usize, layer: &[u64]| -> usize {
        g.bits[w].iter().zip(layer).map(|(a, b)| (a & b).count_ones() as usize).sum()
    };
    let mut b: [Option<usize>; 3] = [Some(g.neighbors(u).len()), None, None];
    let mut c: [Option<usize>; 3] = [None; 3];
    for w in 0..n {
        let d = dist[w];
        if d == 0 {
            continue;
        }
        let cw = count(w, &layers[d - 1]);
        if *c[d - 1].get_or_insert(cw) != cw {
            return Err(RdsError::NotDistanceRegular { u, w, distance: d });
        }
        if d < 3 {
            let bw = count(w, &layers[d + 1]);
            if *b[d].get_or_insert(bw) != bw {
                return Err(RdsError::NotDistanceRegular { u, w, distance: d });
            }
        }
    }
    Ok((dist, b.map(|x| x.unwrap_or(0)), c.map(|x| x.unwrap_or(0))))
}

/// Distance-regularity check of a diameter-3 graph, by BFS from every vertex.
pub fn drg_check(graph: &Graph) -> Result<DrgReport, RdsError> {
    if !graph.is_symmetric() {
        return Err(RdsError::Precondition("graph must be undirected and loopless".into()));
    }
    let n = graph.vertex_count();
    let profiles: Vec<_> = (0..n).into_par_iter().map(|u| layer_profile(graph, u)).collect();
    let mut array = None;
    let mut classes: Vec<Vec<usize>> = Vec::with_capacity(n);
    for (u, p) in profiles.into_iter().enumerate() {
        let (dist, b, c) = p?;
        let a = IntersectionArray { b, c };
        if *array.get_or_insert(a) != a {
            // every vertex is locally consistent but the arrays differ
            return Err(RdsError::NotDistanceRegular { u, w: u, distance: 0 });
        }
        classes.push((0..n).filter(|&w| dist[w] == 0 || dist[w] == 3).collect());
    }
    let antipodal = classes.iter().enumerate().all(|(u, cl)| cl.iter().all(|&w| classes[w] == classes[u]));
    let antipodal_classes = antipodal.then(|| {
        let mut cls = classes;
        cls.sort();
        cls.dedup();
        cls
    });
    Ok(DrgReport { array: array.expect("graph is nonempty"), antipodal_classes })
}

/// Builds `Cay(G, S)`, certifies it distance-regular of diameter 3, and if
/// a forbidden subgroup is given, checks the antipodal classes are its
/// right cosets `Ng`.
pub fn cayley_drg_check(
    group: &FiniteGroup,
    connection: &[usize],
    forbidden: Option<&Subgroup>,
) -> Result<DrgReport, RdsError> {
    let report = drg_check(&cayley_graph(group, connection)?)?;
    if let Some(n) = forbidden {
        let mut cosets = n.right_cosets(group);
        for c in cosets.iter_mut() {
            c.sort_unstable();
        }
        cosets.sort();
        if report.antipodal_classes.as_ref() != Some(&cosets) {
            return Err(RdsError::AntipodalMismatch);
        }
    }
    Ok(report)
}

/// The standard symplectic form `[[0, I], [-I, 0]]` on `F_q^(2r)`.
pub fn standard_symplectic(field: &Field, r: usize) -> Vec<Vec<FieldElement>> {
    let minus_one = field.neg(FieldElement::ONE);
    let mut b = vec![vec![FieldElement::ZERO; 2 * r]; 2 * r];
    for i in 0..r {
        b[i][r + i] = FieldElement::ONE;
        b[r + i][i] = minus_one;
    }
    b
}

fn rank(field: &Field, m: &[Vec<FieldElement>]) -> usize {
    let mut m = m.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| m[i][c] != FieldElement::ZERO) else {
            continue;
        };
        m.swap(r, p);
        let inv = field.inv(m[r][c]).expect("pivot is nonzero");
        for i in 0..m.len() {
            if i != r && m[i][c] != FieldElement::ZERO {
                let f = field.mul(m[i][c], inv);
                for j in 0..cols {
                    let t = field.mul(f, m[r][j]);
                    m[i][j] = field.sub(m[i][j], t);
                }
            }
        }
        r += 1;
    }
    r
}

/// Graph on `F_q^(2r) x F_q` with `(a, alpha) ~ (b, beta)` iff `a != b`
/// and `B(a, b) = alpha - beta`, for a nondegenerate alternating form `B`.
/// Vertex `(a, alpha)` has index `idx(a) * q + alpha`, where `idx` reads the
/// coordinates of `a` as base-`q` digits, lowest first.
pub fn thas_somma(field: &Field, r: usize, form: &[Vec<FieldElement>]) -> Result<Graph, RdsError> {
    let d = 2 * r;
    if r == 0 || form.len() != d || form.iter().any(|row| row.len() != d) {
        return Err(RdsError::InvalidForm(format!("expected a {d}x{d} matrix")));
    }
    for i in 0..d {
        if form[i][i] != FieldElement::ZERO {
            return Err(RdsError::InvalidForm("form is not alternating".into()));
        }
        for j in 0..d {
            if form[i][j] != field.neg(form[j][i]) {
                return Err(RdsError::InvalidForm("form is not alternating".into()));
            }
        }
    }
    if rank(field, form) != d {
        return Err(RdsError::InvalidForm("form is degenerate".into()));
    }
    let q = field.order() as usize;
    let points = q.pow(d as u32);
    let vertices = points * q;
    if vertices > crate::groups::MAX_TABLE_ORDER {
        return Err(RdsError::Precondition(format!("{vertices} vertices is too many")));
    }
    let coords: Vec<Vec<FieldElement>> = (0..points)
        .map(|mut a| {
            (0..d)
                .map(|_| {
                    let c = a % q;
                    a /= q;
                    FieldElement(c as u32)
                })
                .collect()
        })
        .collect();
    let bilinear = |a: &[FieldElement], b: &[FieldElement]| {
        let mut s = FieldElement::ZERO;
        for i in 0..d {
            for j in 0..d {
                s = field.add(s, field.mul(a[i], field.mul(form[i][j], b[j])));
            }
        }
        s
    };
    let adj: Vec<Vec<usize>> = (0..vertices)
        .into_par_iter()
        .map(|u| {
            let (a, alpha) = (u / q, FieldElement((u % q) as u32));
            (0..points)
                .filter(|&b| b != a)
                .map(|b| {
                    // beta = alpha - B(a, b)
                    let beta = field.sub(alpha, bilinear(&coords[a], &coords[b]));
                    b * q + beta.index()
                })
                .collect()
        })
        .collect();
    Ok(Graph::from_adjacency(adj))
}

/// `dev(X) = {Xg : g in G}` with repeated blocks collapsed, blocks sorted.
pub fn dev(group: &FiniteGroup, set: &[usize]) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> =
        (0..group.order()).map(|g| normalize_set(&set.iter().map(|&x| group.mul(x, g)).collect::<Vec<_>>())).collect();
    blocks.sort();
    blocks.dedup();
    blocks
}
