//! H-bilinear, H-balanced functionals A (x) A -> K stored on the reduced
//! R-monomial-pair table, their convolution algebra, convolution inverses,
//! and the 2-cocycle condition checker.
//!
//! A functional is a dense table t(X, Y) over pairs of R-monomials (group
//! part trivial, powers < r_i). Its value on decorated basis monomials is
//! fixed by the extension rule
//!     value(X g (x) Y h) = chi_Y(g) t(X, Y),
//! which encodes H-bilinearity and H-balancedness simultaneously. The rule
//! is well defined exactly when the table vanishes off the locus
//! chi_X chi_Y = trivial; `certify_extension_rule` checks that, and every
//! functional obtained by composition is re-tabulated and certified rather
//! than trusted.

use crate::cyclotomic::CyclotomicScalar;
use crate::hopf::{delta_decorated, AlgebraElement, BasisProducts, Coalgebra};
use crate::model::ScalarExpr;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error("functionals belong to different presentations")]
    PresentationMismatch,
    #[error("functional is not unital: value at (1,1) is {0}")]
    NotUnital(String),
    #[error("extension rule violated at R-pair ({left}, {right}): nonzero value with chi_X chi_Y nontrivial")]
    ExtensionRuleViolation { left: String, right: String },
    #[error("convolution inverse did not terminate within {0} iterations")]
    InverseCapExceeded(usize),
    #[error("bad functional table: {0}")]
    BadTable(String),
}

/// Functional table over R-monomial pairs, extended to A (x) A by the
/// H-bilinear rule.
#[derive(Clone)]
pub struct BilinearFunctional {
    coa: Arc<Coalgebra>,
    table: Vec<CyclotomicScalar>,
}

impl PartialEq for BilinearFunctional {
    fn eq(&self, other: &Self) -> bool {
        self.table == other.table
    }
}

impl BilinearFunctional {
    /// The convolution unit eps (x) eps.
    pub fn epsilon(coa: &Arc<Coalgebra>) -> Self {
        let rc = coa.r_monomial_count();
        let n = coa.presentation().modulus();
        let mut table = vec![CyclotomicScalar::zero(n); rc * rc];
        table[0] = CyclotomicScalar::one(n);
        BilinearFunctional {
            coa: coa.clone(),
            table,
        }
    }

    pub fn from_table(coa: &Arc<Coalgebra>, table: Vec<CyclotomicScalar>) -> Self {
        let rc = coa.r_monomial_count();
        assert_eq!(table.len(), rc * rc, "table must cover all R-monomial pairs");
        BilinearFunctional {
            coa: coa.clone(),
            table,
        }
    }

    pub fn coalgebra(&self) -> &Arc<Coalgebra> {
        &self.coa
    }

    pub fn value_r(&self, ix: usize, iy: usize) -> &CyclotomicScalar {
        &self.table[ix * self.coa.r_monomial_count() + iy]
    }

    pub(crate) fn set(&mut self, ix: usize, iy: usize, v: CyclotomicScalar) {
        let rc = self.coa.r_monomial_count();
        self.table[ix * rc + iy] = v;
    }

    /// Value on decorated basis monomials given by basis index:
    /// chi_Y(g) t(X, Y); the right decoration is immaterial.
    pub fn eval_basis(&self, p: usize, q: usize) -> CyclotomicScalar {
        let gc = self.coa.group_count();
        let (px, pg) = (p / gc, p % gc);
        let qx = q / gc;
        let t = self.value_r(px, qx);
        if t.is_zero() {
            t.clone()
        } else {
            self.coa.chi_value(qx, pg).checked_mul(t).unwrap()
        }
    }

    /// Bilinear extension to sparse elements.
    ///
    /// # Panics
    /// Panics if a monomial does not fit the presentation's basis bounds.
    pub fn evaluate(&self, u: &AlgebraElement, v: &AlgebraElement) -> CyclotomicScalar {
        let coa = &self.coa;
        let n = coa.presentation().modulus();
        let mut acc = CyclotomicScalar::zero(n);
        for (mu, cu) in u.iter() {
            let pu = coa.basis_index(mu);
            for (mv, cv) in v.iter() {
                let f = self.eval_basis(pu, coa.basis_index(mv));
                if f.is_zero() {
                    continue;
                }
                acc = acc
                    .checked_add(&f.checked_mul(cu).unwrap().checked_mul(cv).unwrap())
                    .unwrap();
            }
        }
        acc
    }

    /// f(p (x) elem) for a decorated basis index p and a sparse element.
    fn eval_basis_elem(&self, p: usize, elem: &AlgebraElement) -> CyclotomicScalar {
        let coa = &self.coa;
        let n = coa.presentation().modulus();
        let mut acc = CyclotomicScalar::zero(n);
        for (m, c) in elem.iter() {
            let f = self.eval_basis(p, coa.basis_index(m));
            if !f.is_zero() {
                acc = acc.checked_add(&f.checked_mul(c).unwrap()).unwrap();
            }
        }
        acc
    }

    /// f(elem (x) q) for a sparse element and a decorated basis index q.
    fn eval_elem_basis(&self, elem: &AlgebraElement, q: usize) -> CyclotomicScalar {
        let coa = &self.coa;
        let n = coa.presentation().modulus();
        let mut acc = CyclotomicScalar::zero(n);
        for (m, c) in elem.iter() {
            let f = self.eval_basis(coa.basis_index(m), q);
            if !f.is_zero() {
                acc = acc.checked_add(&f.checked_mul(c).unwrap()).unwrap();
            }
        }
        acc
    }

    pub fn is_unital(&self) -> bool {
        let rc = self.coa.r_monomial_count();
        for k in 0..rc {
            let want_one = k == 0;
            if self.value_r(0, k).is_one() != want_one
                || !self.value_r(0, k).is_one() && !self.value_r(0, k).is_zero()
            {
                return false;
            }
            if self.value_r(k, 0).is_one() != want_one
                || !self.value_r(k, 0).is_one() && !self.value_r(k, 0).is_zero()
            {
                return false;
            }
        }
        true
    }

    /// The extension rule is well defined iff the table vanishes off the
    /// locus chi_X chi_Y = trivial. Returns the first offending pair.
    pub fn certify_extension_rule(&self) -> Result<(), FunctionalError> {
        let coa = &self.coa;
        let pres = coa.presentation();
        let rc = coa.r_monomial_count();
        for ix in 0..rc {
            let chi_x = pres.character_of_powers(&coa.r_powers(ix));
            for iy in 0..rc {
                if self.value_r(ix, iy).is_zero() {
                    continue;
                }
                let chi_y = pres.character_of_powers(&coa.r_powers(iy));
                if !pres.group().char_is_trivial(&pres.group().char_mul(&chi_x, &chi_y)) {
                    return Err(FunctionalError::ExtensionRuleViolation {
                        left: format!("{:?}", coa.r_powers(ix)),
                        right: format!("{:?}", coa.r_powers(iy)),
                    });
                }
            }
        }
        Ok(())
    }

    fn compatible(&self, other: &Self) -> Result<(), FunctionalError> {
        if Arc::ptr_eq(&self.coa, &other.coa)
            || self.coa.presentation() == other.coa.presentation()
        {
            Ok(())
        } else {
            Err(FunctionalError::PresentationMismatch)
        }
    }

    /// Convolution product (f * g)(u (x) v) = f(u1 (x) v1) g(u2 (x) v2),
    /// re-tabulated on R-monomial pairs. Inputs are certified against the
    /// extension rule first.
    pub fn convolve(&self, other: &Self) -> Result<Self, FunctionalError> {
        self.compatible(other)?;
        self.certify_extension_rule()?;
        other.certify_extension_rule()?;
        Ok(BilinearFunctional {
            coa: self.coa.clone(),
            table: convolve_tables(&self.coa, &self.table, &other.table),
        })
    }

    /// Convolution inverse by the terminating Neumann series
    /// sum_k (eps eps - f)^{*k}; requires f(1,1) = 1.
    pub fn convolution_inverse(&self) -> Result<Self, FunctionalError> {
        if !self.table[0].is_one() {
            return Err(FunctionalError::NotUnital(self.table[0].to_string()));
        }
        let coa = &self.coa;
        let pres = coa.presentation();
        let e = BilinearFunctional::epsilon(coa);
        // n = eps eps - f vanishes in total x-degree zero, and each
        // convolution power raises the minimal nonvanishing degree, so the
        // series is finite.
        let nil: Vec<CyclotomicScalar> = e
            .table
            .iter()
            .zip(self.table.iter())
            .map(|(a, b)| a.checked_sub(b).unwrap())
            .collect();
        let cap = 2 * pres
            .r()
            .iter()
            .map(|&r| (r - 1) as usize)
            .sum::<usize>()
            + 2;
        let mut acc = e.table.clone();
        let mut pow = nil.clone();
        let mut iterations = 0usize;
        while pow.iter().any(|c| !c.is_zero()) {
            iterations += 1;
            if iterations > cap {
                return Err(FunctionalError::InverseCapExceeded(cap));
            }
            for (a, p) in acc.iter_mut().zip(pow.iter()) {
                *a = a.checked_add(p).unwrap();
            }
            pow = convolve_tables(coa, &pow, &nil);
        }
        Ok(BilinearFunctional {
            coa: coa.clone(),
            table: acc,
        })
    }

    /// Table-wise comparison; returns the first differing R-monomial pair.
    pub fn first_difference(&self, other: &Self) -> Result<Option<(usize, usize)>, FunctionalError> {
        self.compatible(other)?;
        let rc = self.coa.r_monomial_count();
        for ix in 0..rc {
            for iy in 0..rc {
                if self.value_r(ix, iy) != other.value_r(ix, iy) {
                    return Ok(Some((ix, iy)));
                }
            }
        }
        Ok(None)
    }

    pub fn equal(&self, other: &Self) -> Result<bool, FunctionalError> {
        Ok(self.first_difference(other)?.is_none())
    }

    /// Nonzero table entries in deterministic order.
    pub fn nonzero_entries(&self) -> Vec<(Vec<u32>, Vec<u32>, CyclotomicScalar)> {
        let rc = self.coa.r_monomial_count();
        let mut out = Vec::new();
        for ix in 0..rc {
            for iy in 0..rc {
                let v = self.value_r(ix, iy);
                if !v.is_zero() {
                    out.push((self.coa.r_powers(ix), self.coa.r_powers(iy), v.clone()));
                }
            }
        }
        out
    }
}

fn convolve_tables(
    coa: &Coalgebra,
    f: &[CyclotomicScalar],
    g: &[CyclotomicScalar],
) -> Vec<CyclotomicScalar> {
    let rc = coa.r_monomial_count();
    let n = coa.presentation().modulus();
    let mut out = vec![CyclotomicScalar::zero(n); rc * rc];
    for ix in 0..rc {
        for iy in 0..rc {
            let mut acc = CyclotomicScalar::zero(n);
            for s in coa.delta_of(ix) {
                for t in coa.delta_of(iy) {
                    // f on the decorated left legs: chi_{Y1}(gamma1) t_f(X1, Y1)
                    let tf = &f[s.left_r * rc + t.left_r];
                    if tf.is_zero() {
                        continue;
                    }
                    let tg = &g[s.right_r * rc + t.right_r];
                    if tg.is_zero() {
                        continue;
                    }
                    let chi = coa.chi_value(t.left_r, s.left_g);
                    let term = s
                        .coeff
                        .checked_mul(&t.coeff)
                        .unwrap()
                        .checked_mul(chi)
                        .unwrap()
                        .checked_mul(tf)
                        .unwrap()
                        .checked_mul(tg)
                        .unwrap();
                    acc = acc.checked_add(&term).unwrap();
                }
            }
            out[ix * rc + iy] = acc;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Cocycle condition
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CocycleFailure {
    pub x: String,
    pub y: String,
    pub z: String,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CocycleReport {
    pub pass: bool,
    pub triples_checked: usize,
    pub mode: &'static str,
    pub failure: Option<CocycleFailure>,
}

/// Both sides of the cocycle identity on a triple of decorated basis
/// monomials, with products taken in `alg`:
/// lhs = f(y1 (x) z1) f(x (x) y2 z2), rhs = f(x1 (x) y1) f(x2 y2 (x) z).
pub fn cocycle_sides(
    f: &BilinearFunctional,
    alg: &dyn BasisProducts,
    bx: usize,
    by: usize,
    bz: usize,
) -> (CyclotomicScalar, CyclotomicScalar) {
    let coa = f.coalgebra();
    let n = coa.presentation().modulus();
    let dy = delta_decorated(coa, by);
    let dz = delta_decorated(coa, bz);
    let mut lhs = CyclotomicScalar::zero(n);
    for (cy, y1, y2) in &dy {
        for (cz, z1, z2) in &dz {
            let f1 = f.eval_basis(*y1, *z1);
            if f1.is_zero() {
                continue;
            }
            let f2 = f.eval_basis_elem(bx, alg.product(*y2, *z2));
            if f2.is_zero() {
                continue;
            }
            lhs = lhs
                .checked_add(
                    &cy.checked_mul(cz)
                        .unwrap()
                        .checked_mul(&f1)
                        .unwrap()
                        .checked_mul(&f2)
                        .unwrap(),
                )
                .unwrap();
        }
    }
    let dx = delta_decorated(coa, bx);
    let mut rhs = CyclotomicScalar::zero(n);
    for (cx, x1, x2) in &dx {
        for (cy, y1, y2) in &dy {
            let f1 = f.eval_basis(*x1, *y1);
            if f1.is_zero() {
                continue;
            }
            let f2 = f.eval_elem_basis(alg.product(*x2, *y2), bz);
            if f2.is_zero() {
                continue;
            }
            rhs = rhs
                .checked_add(
                    &cx.checked_mul(cy)
                        .unwrap()
                        .checked_mul(&f1)
                        .unwrap()
                        .checked_mul(&f2)
                        .unwrap(),
                )
                .unwrap();
        }
    }
    (lhs, rhs)
}

/// Check the unital 2-cocycle identity for `f` against the multiplication
/// tabulated in `alg`.
///
/// The fast mode checks all group-free triples of R-monomials, which
/// suffices for an H-bilinear H-balanced functional; slow mode enumerates
/// every decorated basis triple and exists to validate that reduction.
/// Reports the first failing triple in lexicographic order.
pub fn cocycle_check(
    f: &BilinearFunctional,
    alg: &dyn BasisProducts,
    slow: bool,
) -> Result<CocycleReport, FunctionalError> {
    if !Arc::ptr_eq(f.coalgebra(), alg.coalgebra())
        && f.coalgebra().presentation() != alg.coalgebra().presentation()
    {
        return Err(FunctionalError::PresentationMismatch);
    }
    if !f.is_unital() {
        return Err(FunctionalError::NotUnital(f.value_r(0, 0).to_string()));
    }
    f.certify_extension_rule()?;
    let coa = f.coalgebra();
    let count = if slow {
        coa.dim()
    } else {
        coa.r_monomial_count()
    };
    let to_basis = |i: usize| if slow { i } else { coa.basis_of_r(i) };
    let total = count * count * count;
    let failure = (0..total).into_par_iter().find_map_first(|t| {
        let (xy, z) = (t / count, t % count);
        let (x, y) = (xy / count, xy % count);
        let (bx, by, bz) = (to_basis(x), to_basis(y), to_basis(z));
        let (lhs, rhs) = cocycle_sides(f, alg, bx, by, bz);
        if lhs == rhs {
            None
        } else {
            Some(CocycleFailure {
                x: coa.basis_monomial(bx).to_string(),
                y: coa.basis_monomial(by).to_string(),
                z: coa.basis_monomial(bz).to_string(),
                lhs: lhs.to_string(),
                rhs: rhs.to_string(),
            })
        }
    });
    Ok(CocycleReport {
        pass: failure.is_none(),
        triples_checked: total,
        mode: if slow { "full-basis" } else { "reduced" },
        failure,
    })
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TableEntry {
    left: Vec<u32>,
    right: Vec<u32>,
    value: ScalarExpr,
}

impl BilinearFunctional {
    /// JSON array of {"left": powers, "right": powers, "value": scalar}
    /// with zero entries omitted, in deterministic order.
    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<serde_json::Value> = self
            .nonzero_entries()
            .into_iter()
            .map(|(l, r, v)| {
                let triples: Vec<(String, String, u64)> = v
                    .to_triples()
                    .into_iter()
                    .map(|(n, d, p)| (n.to_string(), d.to_string(), p))
                    .collect();
                serde_json::json!({"left": l, "right": r, "value": triples})
            })
            .collect();
        serde_json::Value::Array(entries)
    }

    pub fn from_json(coa: &Arc<Coalgebra>, json: &str) -> Result<Self, FunctionalError> {
        let entries: Vec<TableEntry> =
            serde_json::from_str(json).map_err(|e| FunctionalError::BadTable(e.to_string()))?;
        let pres = coa.presentation();
        let rc = coa.r_monomial_count();
        let mut table = vec![CyclotomicScalar::zero(pres.modulus()); rc * rc];
        let r = pres.r();
        for e in &entries {
            for side in [&e.left, &e.right] {
                if side.len() != pres.theta() {
                    return Err(FunctionalError::BadTable(format!(
                        "monomial {side:?} has wrong arity"
                    )));
                }
                if side.iter().zip(r.iter()).any(|(&p, &ri)| p as u64 >= ri) {
                    return Err(FunctionalError::BadTable(format!(
                        "monomial {side:?} exceeds the power bounds {r:?}"
                    )));
                }
            }
            let v = e
                .value
                .resolve(pres.modulus())
                .map_err(|err| FunctionalError::BadTable(err.to_string()))?;
            table[coa.r_index(&e.left) * rc + coa.r_index(&e.right)] = v;
        }
        Ok(BilinearFunctional {
            coa: coa.clone(),
            table,
        })
    }
}
