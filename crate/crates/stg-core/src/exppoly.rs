//! Exact elements of Q[y, 1/y] with y = e^(-1/q): the probability value
//! domain of the 1-clock abstraction. Interval evaluation at the
//! transcendental point certifies signs and decimal enclosures.

use crate::rat::{exp_neg_inv_enclosure, rat_to_decimal, Rat, RatInterval};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Sum of c_k * y^k with rational c_k and integer (possibly negative) k,
/// where y = e^(-1/q). Negative powers arise transiently with heterogeneous
/// rates; values produced by the abstraction over a single rate stay in `Q[y]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpPoly {
    pub q: u64,
    /// exponent -> nonzero coefficient
    pub terms: BTreeMap<i64, Rat>,
}

impl ExpPoly {
    pub fn zero(q: u64) -> Self {
        ExpPoly { q, terms: BTreeMap::new() }
    }

    pub fn one(q: u64) -> Self {
        Self::constant(q, Rat::one())
    }

    pub fn constant(q: u64, c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(0, c);
        }
        ExpPoly { q, terms }
    }

    /// c * y^k
    pub fn monomial(q: u64, c: Rat, k: i64) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(k, c);
        }
        ExpPoly { q, terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&0).is_some_and(|c| c.is_one())
    }

    pub fn as_constant(&self) -> Option<Rat> {
        if self.terms.is_empty() {
            Some(Rat::zero())
        } else if self.terms.len() == 1 {
            self.terms.get(&0).cloned()
        } else {
            None
        }
    }

    fn assert_same_q(&self, other: &Self) {
        assert_eq!(self.q, other.q, "ExpPoly values must share the rate denominator q");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_same_q(other);
        let mut terms = self.terms.clone();
        for (k, c) in &other.terms {
            let entry = terms.entry(*k).or_insert_with(Rat::zero);
            *entry += c;
            if entry.is_zero() {
                terms.remove(k);
            }
        }
        ExpPoly { q: self.q, terms }
    }

    pub fn neg(&self) -> Self {
        ExpPoly {
            q: self.q,
            terms: self.terms.iter().map(|(k, c)| (*k, -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.assert_same_q(other);
        let mut terms: BTreeMap<i64, Rat> = BTreeMap::new();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                let k = k1 + k2;
                let entry = terms.entry(k).or_insert_with(Rat::zero);
                *entry += c1 * c2;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        ExpPoly { q: self.q, terms }
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero(self.q);
        }
        ExpPoly {
            q: self.q,
            terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    /// Multiplies by y^k.
    pub fn shift(&self, k: i64) -> Self {
        ExpPoly {
            q: self.q,
            terms: self.terms.iter().map(|(e, c)| (*e + k, c.clone())).collect(),
        }
    }

    /// Interval evaluation at y = e^(-1/q) using `taylor_terms` series terms.
    pub fn eval_enclosure(&self, taylor_terms: usize) -> RatInterval {
        let y = exp_neg_inv_enclosure(self.q, taylor_terms);
        let mut acc = RatInterval::point(Rat::zero());
        for (k, c) in &self.terms {
            acc = acc.add(&y.powi(*k).scale(c));
        }
        acc
    }

    /// Enclosure refined until its width is below 10^-digits (or the term cap
    /// is reached).
    pub fn eval_to_digits(&self, digits: u32) -> RatInterval {
        let target = Rat::new(1.into(), num_bigint::BigInt::from(10u32).pow(digits));
        let mut terms = 32;
        loop {
            let enc = self.eval_enclosure(terms);
            if enc.width() < target || terms >= 4096 {
                return enc;
            }
            terms *= 2;
        }
    }

    pub fn eval_f64(&self) -> f64 {
        let y = (-1.0 / self.q as f64).exp();
        self.terms
            .iter()
            .map(|(k, c)| crate::rat::rat_to_f64(c) * y.powi(*k as i32))
            .sum()
    }

    /// Certified decimal enclosure string with the requested precision.
    pub fn decimal_enclosure(&self, digits: usize) -> String {
        let enc = self.eval_to_digits(digits as u32 + 2);
        format!("[{}, {}]", rat_to_decimal(&enc.lo, digits), rat_to_decimal(&enc.hi, digits))
    }

    /// Lowest exponent, if nonzero.
    pub fn min_exp(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }
}

impl fmt::Display for ExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in &self.terms {
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let coeff_is_one = mag.is_one();
            match (*k, coeff_is_one) {
                (0, _) => write!(f, "{mag}")?,
                (1, true) => write!(f, "y")?,
                (1, false) => write!(f, "{mag}*y")?,
                (k, true) => write!(f, "y^{k}")?,
                (k, false) => write!(f, "{mag}*y^{k}")?,
            }
        }
        write!(f, "; y=exp(-1/{})", self.q)
    }
}

/// Serde mirror: list of (exponent, coefficient-string) pairs plus q.
#[derive(Serialize, Deserialize)]
pub struct ExpPolyDoc {
    pub q: u64,
    pub terms: Vec<(i64, String)>,
}

impl From<&ExpPoly> for ExpPolyDoc {
    fn from(p: &ExpPoly) -> Self {
        ExpPolyDoc {
            q: p.q,
            terms: p
                .terms
                .iter()
                .map(|(k, c)| (*k, format!("{}/{}", c.numer(), c.denom())))
                .collect(),
        }
    }
}

impl TryFrom<&ExpPolyDoc> for ExpPoly {
    type Error = String;
    fn try_from(d: &ExpPolyDoc) -> Result<Self, String> {
        let mut terms = BTreeMap::new();
        for (k, c) in &d.terms {
            let r = crate::rat::parse_rat(c)?;
            if !r.is_zero() {
                terms.insert(*k, r);
            }
        }
        Ok(ExpPoly { q: d.q, terms })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};

    fn p(pairs: &[(i64, (i64, i64))]) -> ExpPoly {
        let mut terms = BTreeMap::new();
        for (k, (n, d)) in pairs {
            terms.insert(*k, rat(*n, *d));
        }
        ExpPoly { q: 1, terms }
    }

    #[test]
    fn ring_identities() {
        let a = p(&[(0, (1, 2)), (1, (-2, 1))]);
        let b = p(&[(1, (3, 1)), (2, (1, 3))]);
        let c = p(&[(0, (-1, 1)), (3, (5, 7))]);
        assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        assert_eq!(a.mul(&ExpPoly::one(1)), a);
        assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        assert_eq!(a.sub(&a), ExpPoly::zero(1));
    }

    #[test]
    fn display_matches_convention() {
        let v = p(&[(0, (1, 1)), (1, (-2, 1))]);
        assert_eq!(v.to_string(), "1 - 2*y; y=exp(-1/1)");
    }

    #[test]
    fn enclosure_contains_f64_value() {
        let v = p(&[(0, (1, 1)), (1, (-2, 1))]); // 1 - 2/e ≈ 0.26424
        let enc = v.eval_to_digits(12);
        let f = v.eval_f64();
        assert!(crate::rat::rat_to_f64(&enc.lo) <= f && f <= crate::rat::rat_to_f64(&enc.hi));
        assert!(enc.width() < rat(1, 1_000_000_000));
    }

    #[test]
    fn negative_powers_evaluate() {
        // y^-1 = e = 2.718281828459045... (truncated reference bracket)
        let v = ExpPoly::monomial(1, rat_int(1), -1);
        let enc = v.eval_to_digits(9);
        let lo = crate::rat::parse_rat("2.718281828").unwrap();
        let hi = crate::rat::parse_rat("2.718281829").unwrap();
        assert!(enc.lo <= hi && lo <= enc.hi);
    }

    #[test]
    fn doc_roundtrip() {
        let v = p(&[(0, (1, 3)), (2, (-5, 7))]);
        let doc = ExpPolyDoc::from(&v);
        let back = ExpPoly::try_from(&doc).unwrap();
        assert_eq!(v, back);
    }
}
