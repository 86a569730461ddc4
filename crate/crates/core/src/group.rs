//! Finite abelian groups as products of cyclic groups, their elements, and
//! their characters.
//!
//! Gamma = C_{m_1} x ... x C_{m_c} is fixed by the list of cyclic orders.
//! Elements and characters are exponent vectors on the cyclic generators;
//! a character with exponents (f_1,...,f_c) sends the j-th generator to
//! zeta_{m_j}^{f_j}, realized inside the engine's global field Q(zeta_N).

use crate::cyclotomic::CyclotomicScalar;
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    orders: Arc<Vec<u64>>,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    exponents: Vec<u64>,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Character {
    exponents: Vec<u64>,
}

impl GroupSpec {
    /// # Panics
    /// Panics if the order list is empty or contains a zero.
    pub fn new(orders: Vec<u64>) -> Self {
        assert!(!orders.is_empty(), "group needs at least one cyclic factor");
        assert!(orders.iter().all(|&m| m >= 1), "cyclic orders must be >= 1");
        GroupSpec {
            orders: Arc::new(orders),
        }
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    pub fn size(&self) -> u64 {
        self.orders.iter().product()
    }

    /// lcm of the cyclic orders.
    pub fn exponent(&self) -> u64 {
        self.orders.iter().fold(1u64, |acc, &m| acc.lcm(&m))
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            exponents: vec![0; self.rank()],
        }
    }

    /// Build an element from a raw exponent vector, reducing componentwise.
    pub fn element(&self, exponents: &[i64]) -> GroupElement {
        assert_eq!(
            exponents.len(),
            self.rank(),
            "exponent vector length {} does not match group rank {}",
            exponents.len(),
            self.rank()
        );
        GroupElement {
            exponents: exponents
                .iter()
                .zip(self.orders.iter())
                .map(|(&e, &m)| e.rem_euclid(m as i64) as u64)
                .collect(),
        }
    }

    pub fn character(&self, exponents: &[i64]) -> Character {
        assert_eq!(
            exponents.len(),
            self.rank(),
            "character exponent vector length {} does not match group rank {}",
            exponents.len(),
            self.rank()
        );
        Character {
            exponents: exponents
                .iter()
                .zip(self.orders.iter())
                .map(|(&e, &m)| e.rem_euclid(m as i64) as u64)
                .collect(),
        }
    }

    pub fn trivial_character(&self) -> Character {
        Character {
            exponents: vec![0; self.rank()],
        }
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement {
            exponents: a
                .exponents
                .iter()
                .zip(&b.exponents)
                .zip(self.orders.iter())
                .map(|((&x, &y), &m)| (x + y) % m)
                .collect(),
        }
    }

    pub fn inverse(&self, a: &GroupElement) -> GroupElement {
        GroupElement {
            exponents: a
                .exponents
                .iter()
                .zip(self.orders.iter())
                .map(|(&x, &m)| (m - x) % m)
                .collect(),
        }
    }

    pub fn pow(&self, a: &GroupElement, k: i64) -> GroupElement {
        GroupElement {
            exponents: a
                .exponents
                .iter()
                .zip(self.orders.iter())
                .map(|(&x, &m)| {
                    let e = (x as i128 * k as i128).rem_euclid(m as i128);
                    e as u64
                })
                .collect(),
        }
    }

    /// Least n >= 1 with a^n = e: the lcm of the componentwise orders.
    pub fn element_order(&self, a: &GroupElement) -> u64 {
        a.exponents
            .iter()
            .zip(self.orders.iter())
            .fold(1u64, |acc, (&x, &m)| acc.lcm(&(m / m.gcd(&x))))
    }

    pub fn is_identity(&self, a: &GroupElement) -> bool {
        a.exponents.iter().all(|&x| x == 0)
    }

    /// Enumerate all elements in mixed-radix order (last factor fastest).
    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        (0..self.size()).map(|i| self.element_from_index(i))
    }

    pub fn element_index(&self, a: &GroupElement) -> u64 {
        let mut idx = 0u64;
        for (&e, &m) in a.exponents.iter().zip(self.orders.iter()) {
            idx = idx * m + e;
        }
        idx
    }

    pub fn element_from_index(&self, mut idx: u64) -> GroupElement {
        let mut exps = vec![0u64; self.rank()];
        for j in (0..self.rank()).rev() {
            let m = self.orders[j];
            exps[j] = idx % m;
            idx /= m;
        }
        GroupElement { exponents: exps }
    }

    // ----- characters -------------------------------------------------

    /// chi(a) = prod_j zeta_{m_j}^{f_j e_j}, embedded in Q(zeta_N).
    ///
    /// # Panics
    /// Panics unless every cyclic order divides the field modulus N.
    pub fn char_eval(&self, chi: &Character, a: &GroupElement, modulus: u64) -> CyclotomicScalar {
        let mut power: i128 = 0;
        for ((&f, &e), &m) in chi
            .exponents
            .iter()
            .zip(a.exponents.iter())
            .zip(self.orders.iter())
        {
            assert!(
                modulus % m == 0,
                "field modulus {modulus} not divisible by cyclic order {m}"
            );
            let step = (modulus / m) as i128;
            power = (power + step * (f as i128 * e as i128) % modulus as i128)
                .rem_euclid(modulus as i128);
        }
        CyclotomicScalar::root_of_unity(modulus, power as i64)
    }

    pub fn char_mul(&self, a: &Character, b: &Character) -> Character {
        Character {
            exponents: a
                .exponents
                .iter()
                .zip(&b.exponents)
                .zip(self.orders.iter())
                .map(|((&x, &y), &m)| (x + y) % m)
                .collect(),
        }
    }

    pub fn char_pow(&self, a: &Character, k: i64) -> Character {
        Character {
            exponents: a
                .exponents
                .iter()
                .zip(self.orders.iter())
                .map(|(&x, &m)| {
                    let e = (x as i128 * k as i128).rem_euclid(m as i128);
                    e as u64
                })
                .collect(),
        }
    }

    pub fn char_inverse(&self, a: &Character) -> Character {
        self.char_pow(a, -1)
    }

    pub fn char_is_trivial(&self, a: &Character) -> bool {
        a.exponents.iter().all(|&x| x == 0)
    }

    /// Order of the character in the dual group.
    pub fn char_order(&self, a: &Character) -> u64 {
        a.exponents
            .iter()
            .zip(self.orders.iter())
            .fold(1u64, |acc, (&x, &m)| acc.lcm(&(m / m.gcd(&x))))
    }
}

impl GroupElement {
    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }
}

impl Character {
    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.exponents.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Debug for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "chi{:?}", self.exponents)
    }
}
