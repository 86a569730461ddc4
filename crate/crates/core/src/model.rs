//! The quantum-linear-space lifting datum, its validation, and the
//! connected-component combinatorics of the generator graph.
//!
//! A presentation is (Gamma, theta, g_i, chi_i, a_i, a_ij): a finite abelian
//! group, theta generators with group-degrees g_i and characters chi_i, a
//! diagonal scalar a_i per generator and an off-diagonal scalar a_ij per
//! pair i < j. The orders r_i are computed from chi_i(g_i), never trusted
//! from input. Validation checks every constraint a lifting must satisfy
//! and reports each one with a witness.
//!
//! Indices are 1-based in input files and reports, 0-based in the Rust API.

use crate::cyclotomic::CyclotomicScalar;
use crate::group::{Character, GroupElement, GroupSpec};
use num_bigint::BigInt;
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const DEFAULT_DIM_CAP: u64 = 4096;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("structural error: {0}")]
    Structural(String),
    #[error("presentation is not a valid lifting datum ({} violated constraint(s))", .0.violations().len())]
    Invalid(ValidationReport),
}

// ---------------------------------------------------------------------------
// Input schema
// ---------------------------------------------------------------------------

/// A scalar literal: either a plain integer or a list of
/// (numerator, denominator, power-of-zeta) triples.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ScalarExpr {
    Int(i64),
    Triples(Vec<(i64, i64, i64)>),
}

impl ScalarExpr {
    pub fn resolve(&self, modulus: u64) -> Result<CyclotomicScalar, ModelError> {
        match self {
            ScalarExpr::Int(n) => Ok(CyclotomicScalar::from_integer(modulus, *n)),
            ScalarExpr::Triples(ts) => {
                let ts: Vec<(BigInt, BigInt, i64)> = ts
                    .iter()
                    .map(|(n, d, p)| (BigInt::from(*n), BigInt::from(*d), *p))
                    .collect();
                CyclotomicScalar::from_triples(modulus, &ts)
                    .map_err(|e| ModelError::Structural(e.to_string()))
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GroupInput {
    pub orders: Vec<u64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OffDiagInput {
    /// 1-based generator indices with i < j.
    pub i: usize,
    pub j: usize,
    pub value: ScalarExpr,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PresentationInput {
    pub group: GroupInput,
    pub theta: usize,
    pub g: Vec<Vec<i64>>,
    pub chi: Vec<Vec<i64>>,
    /// Optional cross-check of the computed orders of chi_i(g_i).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a: Vec<ScalarExpr>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a_off: Vec<OffDiagInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl PresentationInput {
    pub fn parse(json: &str) -> Result<Self, ModelError> {
        serde_json::from_str(json).map_err(|e| ModelError::Parse(e.to_string()))
    }

    pub fn build(&self) -> Result<BuildOutcome, ModelError> {
        self.build_with_cap(DEFAULT_DIM_CAP)
    }

    /// Structural checks, then mathematical validation at the given
    /// dimension cap.
    pub fn build_with_cap(&self, cap: u64) -> Result<BuildOutcome, ModelError> {
        let st = |m: String| ModelError::Structural(m);

        if self.group.orders.is_empty() {
            return Err(st("group needs at least one cyclic factor".into()));
        }
        if self.group.orders.iter().any(|&m| m == 0) {
            return Err(st("cyclic orders must be >= 1".into()));
        }
        if self.theta == 0 {
            return Err(st("theta must be >= 1".into()));
        }
        if self.g.len() != self.theta {
            return Err(st(format!(
                "expected {} group-degree vectors, found {}",
                self.theta,
                self.g.len()
            )));
        }
        if self.chi.len() != self.theta {
            return Err(st(format!(
                "expected {} character vectors, found {}",
                self.theta,
                self.chi.len()
            )));
        }
        let rank = self.group.orders.len();
        for (i, v) in self.g.iter().enumerate() {
            if v.len() != rank {
                return Err(st(format!(
                    "g[{}] has {} exponents, group rank is {}",
                    i + 1,
                    v.len(),
                    rank
                )));
            }
        }
        for (i, v) in self.chi.iter().enumerate() {
            if v.len() != rank {
                return Err(st(format!(
                    "chi[{}] has {} exponents, group rank is {}",
                    i + 1,
                    v.len(),
                    rank
                )));
            }
        }
        if !self.a.is_empty() && self.a.len() != self.theta {
            return Err(st(format!(
                "expected {} diagonal scalars, found {}",
                self.theta,
                self.a.len()
            )));
        }
        if let Some(r) = &self.r {
            if r.len() != self.theta {
                return Err(st(format!(
                    "expected {} entries in r, found {}",
                    self.theta,
                    r.len()
                )));
            }
        }
        let mut seen = BTreeMap::new();
        for od in &self.a_off {
            if od.i == 0 || od.j == 0 || od.i > self.theta || od.j > self.theta {
                return Err(st(format!(
                    "a_off index ({},{}) out of range 1..={}",
                    od.i, od.j, self.theta
                )));
            }
            if od.i >= od.j {
                return Err(st(format!(
                    "a_off requires i < j, found ({},{})",
                    od.i, od.j
                )));
            }
            if seen.insert((od.i, od.j), ()).is_some() {
                return Err(st(format!("duplicate a_off entry ({},{})", od.i, od.j)));
            }
        }

        let group = GroupSpec::new(self.group.orders.clone());
        let g: Vec<GroupElement> = self.g.iter().map(|v| group.element(v)).collect();
        let chi: Vec<Character> = self.chi.iter().map(|v| group.character(v)).collect();

        // One global field modulus: lcm of the group exponent and the orders
        // of every character value chi_i(g_j).
        let mut modulus = group.exponent();
        for c in &chi {
            for h in &g {
                let v = group.char_eval(c, h, group.exponent());
                if let Some(ord) = v.multiplicative_order() {
                    modulus = modulus.lcm(&ord);
                }
            }
        }

        let a_diag: Vec<CyclotomicScalar> = if self.a.is_empty() {
            vec![CyclotomicScalar::zero(modulus); self.theta]
        } else {
            self.a
                .iter()
                .map(|e| e.resolve(modulus))
                .collect::<Result<_, _>>()?
        };
        let mut a_off = BTreeMap::new();
        for od in &self.a_off {
            let v = od.value.resolve(modulus)?;
            if !v.is_zero() {
                a_off.insert((od.i - 1, od.j - 1), v);
            }
        }

        let pres = LiftingPresentation {
            group,
            theta: self.theta,
            g,
            chi,
            r: Vec::new(),
            q: Vec::new(),
            a_diag,
            a_off,
            modulus,
            name: self.name.clone(),
        };
        let (pres, report) = validate(pres, self.r.as_deref(), cap);
        if report.is_valid() {
            Ok(BuildOutcome {
                presentation: pres,
                report,
            })
        } else {
            Err(ModelError::Invalid(report))
        }
    }
}

// ---------------------------------------------------------------------------
// Presentation
// ---------------------------------------------------------------------------

/// A validated lifting datum. Immutable after construction.
///
/// The off-diagonal input scalar a_ij (i < j) is the coefficient of the
/// descending commutation relation
///     x_j x_i = chi_i(g_j) x_i x_j + a_ij (1 - g_i g_j),
/// matching the twisting cocycle gamma_ij; the ascending-direction
/// coefficient is the derived -chi_j(g_i) a_ij.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftingPresentation {
    group: GroupSpec,
    theta: usize,
    g: Vec<GroupElement>,
    chi: Vec<Character>,
    r: Vec<u64>,
    q: Vec<CyclotomicScalar>,
    a_diag: Vec<CyclotomicScalar>,
    a_off: BTreeMap<(usize, usize), CyclotomicScalar>,
    modulus: u64,
    name: Option<String>,
}

impl LiftingPresentation {
    pub fn group(&self) -> &GroupSpec {
        &self.group
    }
    pub fn theta(&self) -> usize {
        self.theta
    }
    pub fn modulus(&self) -> u64 {
        self.modulus
    }
    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }
    pub fn grouplike(&self, i: usize) -> &GroupElement {
        &self.g[i]
    }
    pub fn character(&self, i: usize) -> &Character {
        &self.chi[i]
    }
    /// q_i = chi_i(g_i).
    pub fn q(&self, i: usize) -> &CyclotomicScalar {
        &self.q[i]
    }
    pub fn r(&self) -> &[u64] {
        &self.r
    }
    pub fn diag_scalar(&self, i: usize) -> &CyclotomicScalar {
        &self.a_diag[i]
    }
    /// Stored off-diagonal scalars, keyed by 0-based (i,j) with i < j.
    pub fn off_scalars(&self) -> &BTreeMap<(usize, usize), CyclotomicScalar> {
        &self.a_off
    }
    pub fn off_input(&self, i: usize, j: usize) -> CyclotomicScalar {
        assert!(i < j);
        self.a_off
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(|| CyclotomicScalar::zero(self.modulus))
    }

    /// Full off-diagonal relation matrix: `off_matrix(u, v)` is the scalar c
    /// in x_u x_v = chi_v(g_u) x_v x_u + c (1 - g_u g_v). For u > v this is
    /// the stored input; for u < v the derived -chi_v(g_u) a_uv.
    pub fn off_matrix(&self, u: usize, v: usize) -> CyclotomicScalar {
        assert_ne!(u, v);
        if u > v {
            self.off_input(v, u)
        } else {
            let s = self.off_input(u, v);
            if s.is_zero() {
                s
            } else {
                -(self.group.char_eval(&self.chi[v], &self.g[u], self.modulus) * s)
            }
        }
    }

    pub fn dim(&self) -> u64 {
        self.group.size() * self.r.iter().product::<u64>()
    }

    pub fn r_monomial_count(&self) -> u64 {
        self.r.iter().product()
    }

    pub fn is_trivial_lifting(&self) -> bool {
        self.a_diag.iter().all(CyclotomicScalar::is_zero) && self.a_off.is_empty()
    }

    /// The same datum with every lifting scalar set to zero: the Radford
    /// biproduct A itself.
    pub fn trivialization(&self) -> Self {
        let mut t = self.clone();
        t.a_diag = vec![CyclotomicScalar::zero(self.modulus); self.theta];
        t.a_off = BTreeMap::new();
        t.name = self.name.as_ref().map(|n| format!("{n} (trivialized)"));
        t
    }

    /// chi_X = prod_i chi_i^{n_i} for a monomial power vector.
    pub fn character_of_powers(&self, powers: &[u32]) -> Character {
        let mut acc = self.group.trivial_character();
        for (i, &n) in powers.iter().enumerate() {
            if n > 0 {
                acc = self
                    .group
                    .char_mul(&acc, &self.group.char_pow(&self.chi[i], n as i64));
            }
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ConstraintCheck>,
    pub modulus: u64,
    pub r: Vec<u64>,
    pub dim: u64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }
    pub fn violations(&self) -> Vec<&ConstraintCheck> {
        self.checks.iter().filter(|c| !c.ok).collect()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "[{}] {}: {}",
                if c.ok { "ok" } else { "VIOLATED" },
                c.name,
                c.detail
            )?;
        }
        write!(
            f,
            "modulus N={}, r={:?}, dim={}",
            self.modulus, self.r, self.dim
        )
    }
}

fn validate(
    mut pres: LiftingPresentation,
    user_r: Option<&[u64]>,
    cap: u64,
) -> (LiftingPresentation, ValidationReport) {
    let mut checks = Vec::new();
    let group = pres.group.clone();
    let n = pres.modulus;
    let theta = pres.theta;

    let mut push = |name: String, ok: bool, detail: String| {
        checks.push(ConstraintCheck { name, ok, detail });
    };

    // Orders r_i from chi_i(g_i); a primitive r_i-th root with r_i >= 2.
    let mut r = Vec::with_capacity(theta);
    let mut q = Vec::with_capacity(theta);
    for i in 0..theta {
        let qi = group.char_eval(&pres.chi[i], &pres.g[i], n);
        let ord = qi
            .multiplicative_order()
            .expect("character value is a root of unity");
        push(
            format!("qls2.primitive_root({})", i + 1),
            ord >= 2,
            format!("chi_{0}(g_{0}) = {1} has order {2}", i + 1, qi, ord),
        );
        if let Some(ur) = user_r {
            push(
                format!("r.cross_check({})", i + 1),
                ur[i] == ord,
                format!(
                    "declared r_{} = {}, computed order of chi(g) = {}",
                    i + 1,
                    ur[i],
                    ord
                ),
            );
        }
        r.push(ord);
        q.push(qi);
    }

    for i in 0..theta {
        for j in (i + 1)..theta {
            let prod = group.char_eval(&pres.chi[i], &pres.g[j], n)
                * group.char_eval(&pres.chi[j], &pres.g[i], n);
            push(
                format!("qls1.chi_pair({},{})", i + 1, j + 1),
                prod.is_one(),
                format!(
                    "chi_{}(g_{}) * chi_{}(g_{}) = {}",
                    i + 1,
                    j + 1,
                    j + 1,
                    i + 1,
                    prod
                ),
            );
        }
    }

    for i in 0..theta {
        if pres.a_diag[i].is_zero() {
            continue;
        }
        let gr = group.pow(&pres.g[i], r[i] as i64);
        push(
            format!("diag.group({})", i + 1),
            !group.is_identity(&gr),
            format!("a_{0} != 0 requires g_{0}^{1} != 1; g_{0}^{1} = {2}", i + 1, r[i], gr),
        );
        let chir = group.char_pow(&pres.chi[i], r[i] as i64);
        push(
            format!("diag.character({})", i + 1),
            group.char_is_trivial(&chir),
            format!(
                "a_{0} != 0 requires chi_{0}^{1} = trivial; exponents {2:?}",
                i + 1,
                r[i],
                chir.exponents()
            ),
        );
    }

    for (&(i, j), _) in &pres.a_off {
        let gij = group.mul(&pres.g[i], &pres.g[j]);
        push(
            format!("offdiag.group({},{})", i + 1, j + 1),
            !group.is_identity(&gij),
            format!("a_{}{} != 0 requires g_i g_j != 1; g_i g_j = {}", i + 1, j + 1, gij),
        );
        let chiij = group.char_mul(&pres.chi[i], &pres.chi[j]);
        push(
            format!("offdiag.character({},{})", i + 1, j + 1),
            group.char_is_trivial(&chiij),
            format!(
                "a_{}{} != 0 requires chi_i chi_j = trivial; exponents {:?}",
                i + 1,
                j + 1,
                chiij.exponents()
            ),
        );
        push(
            format!("offdiag.order({},{})", i + 1, j + 1),
            r[i] == r[j],
            format!(
                "r_{} = {} and r_{} = {} must agree (follows from chi_i chi_j = trivial: q_j = q_i^-1)",
                i + 1,
                r[i],
                j + 1,
                r[j]
            ),
        );
    }

    // Two off-diagonal scalars sharing a generator force every involved
    // order down to 2.
    let edges: Vec<(usize, usize)> = pres.a_off.keys().cloned().collect();
    for (e1, e2) in edges
        .iter()
        .enumerate()
        .flat_map(|(k, e1)| edges[k + 1..].iter().map(move |e2| (e1, e2)))
    {
        let shared = [e1.0, e1.1]
            .iter()
            .any(|v| *v == e2.0 || *v == e2.1);
        if !shared {
            continue;
        }
        let mut verts = vec![e1.0, e1.1, e2.0, e2.1];
        verts.sort_unstable();
        verts.dedup();
        let all_two = verts.iter().all(|&v| r[v] == 2);
        push(
            format!(
                "offdiag.shared_index({},{})+({},{})",
                e1.0 + 1,
                e1.1 + 1,
                e2.0 + 1,
                e2.1 + 1
            ),
            all_two,
            format!(
                "edges share a generator, so all involved orders must be 2; got {:?}",
                verts.iter().map(|&v| r[v]).collect::<Vec<_>>()
            ),
        );
    }

    let dim = group.size() * r.iter().product::<u64>();
    push(
        "dim.cap".into(),
        dim <= cap,
        format!("dim = |Gamma| * prod r_i = {dim}, cap = {cap}"),
    );

    pres.r = r.clone();
    pres.q = q;
    let report = ValidationReport {
        checks,
        modulus: n,
        r,
        dim,
    };
    (pres, report)
}

// ---------------------------------------------------------------------------
// Connected components of the off-diagonal edge graph
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConnectedComponents {
    /// Sorted vertex lists (0-based), ordered by smallest vertex.
    pub components: Vec<Vec<usize>>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }
    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Partition {1..theta} by paths of edges {i,j} with a_ij != 0.
pub fn connected_components(pres: &LiftingPresentation) -> ConnectedComponents {
    let mut uf = UnionFind::new(pres.theta());
    for &(i, j) in pres.off_scalars().keys() {
        uf.union(i, j);
    }
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..pres.theta() {
        by_root.entry(uf.find(v)).or_default().push(v);
    }
    ConnectedComponents {
        components: by_root.into_values().collect(),
    }
}

pub struct BuildOutcome {
    pub presentation: LiftingPresentation,
    pub report: ValidationReport,
}
