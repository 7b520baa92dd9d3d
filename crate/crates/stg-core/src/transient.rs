//! Symbolic functions of an entry clock value, closed under the integration
//! steps needed to evaluate nested path integrals over exponential delays.
//!
//! A `TransientExpr` denotes sum of coeff * v^k * e^(-(m/q) v) where coeff is
//! an `ExpPoly`, k a non-negative integer power and m a (possibly negative)
//! integer decay numerator. Integrating rate * e^(-rate t) * F(v + t) over a
//! window with integer endpoints stays in this family; exponentials at
//! integer bounds fold into powers of y = e^(-1/q).

use crate::exppoly::ExpPoly;
use crate::rat::{rat_int, rat_u32, Rat};
use num_traits::{One, Pow, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct TransientExpr {
    pub q: u64,
    /// (power of v, decay numerator m) -> ExpPoly coefficient
    pub terms: BTreeMap<(u32, i64), ExpPoly>,
}

#[derive(Debug, Error)]
pub enum TransientError {
    #[error("divergent integral: non-decaying integrand over an unbounded window")]
    Divergent,
    #[error("polynomial integrand over an unbounded window")]
    PolynomialUnbounded,
}

/// Bound of the integration window in absolute clock coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XBound {
    /// Integer constant.
    Int(u32),
    /// The (symbolic) entry value v.
    EntryValue,
    PlusInf,
}

impl TransientExpr {
    pub fn zero(q: u64) -> Self {
        TransientExpr { q, terms: BTreeMap::new() }
    }

    pub fn one(q: u64) -> Self {
        Self::from_const(ExpPoly::one(q))
    }

    pub fn from_const(c: ExpPoly) -> Self {
        let mut t = TransientExpr { q: c.q, terms: BTreeMap::new() };
        t.add_term(0, 0, c);
        t
    }

    pub fn add_term(&mut self, k: u32, m: i64, coeff: ExpPoly) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry((k, m)).or_insert_with(|| ExpPoly::zero(self.q));
        *entry = entry.add(&coeff);
        if entry.is_zero() {
            self.terms.remove(&(k, m));
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.q, other.q);
        let mut out = self.clone();
        for ((k, m), c) in &other.terms {
            out.add_term(*k, *m, c.clone());
        }
        out
    }

    pub fn scale_rat(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero(self.q);
        }
        TransientExpr {
            q: self.q,
            terms: self.terms.iter().map(|(key, v)| (*key, v.scale(c))).collect(),
        }
    }

    pub fn scale_poly(&self, p: &ExpPoly) -> Self {
        let mut out = Self::zero(self.q);
        for ((k, m), c) in &self.terms {
            out.add_term(*k, *m, c.mul(p));
        }
        out
    }

    /// Value at v = 0.
    pub fn eval_at_zero(&self) -> ExpPoly {
        let mut acc = ExpPoly::zero(self.q);
        for ((k, _), c) in &self.terms {
            if *k == 0 {
                acc = acc.add(c);
            }
        }
        acc
    }

    /// Value at an integer v = n: v^k = n^k, e^(-(m/q) n) = y^(m n).
    pub fn eval_at_int(&self, n: u32) -> ExpPoly {
        let mut acc = ExpPoly::zero(self.q);
        for ((k, m), c) in &self.terms {
            let pow = rat_u32(n).pow(*k as i32);
            acc = acc.add(&c.scale(&pow).shift(*m * n as i64));
        }
        acc
    }
}

fn factorial_ratio(k: u32, j: u32) -> Rat {
    // k! / (k - j)!
    let mut acc = Rat::one();
    for i in (k - j + 1)..=k {
        acc *= rat_u32(i);
    }
    acc
}

/// One backward integration step of the nested path integral:
///
///   G(v) = rho * INT_{t >= 0, v + t in (xlo, xhi)} alpha e^(-alpha t)
///            * F(reset ? 0 : v + t) dt
///
/// with alpha = alpha_num / q and the window given in absolute clock
/// coordinates (`EntryValue` marks a bound equal to v itself; windows never
/// place v above an `Int` lower bound by construction of region paths).
pub fn integrate_step(
    f_next: &TransientExpr,
    alpha_num: u64,
    rho: &Rat,
    xlo: XBound,
    xhi: XBound,
    reset: bool,
) -> Result<TransientExpr, TransientError> {
    let q = f_next.q;
    let alpha = Rat::new((alpha_num as i64).into(), (q as i64).into());
    let mut out = TransientExpr::zero(q);

    if reset {
        // rho * kappa * (e^(-alpha tlo(v)) - e^(-alpha thi(v)))
        let kappa = f_next.eval_at_zero();
        let factor = kappa.scale(rho);
        // e^(-alpha (n - v)) = y^(alpha_num * n) * e^(+alpha v)
        let exp_at = |bound: XBound, out: &mut TransientExpr, sign: Rat| match bound {
            XBound::Int(n) => {
                out.add_term(
                    0,
                    -(alpha_num as i64),
                    factor.scale(&sign).shift(alpha_num as i64 * n as i64),
                );
            }
            XBound::EntryValue => {
                out.add_term(0, 0, factor.scale(&sign));
            }
            XBound::PlusInf => {}
        };
        exp_at(xlo, &mut out, Rat::one());
        exp_at(xhi, &mut out, -Rat::one());
        return Ok(out);
    }

    // No reset: rho * alpha * e^(alpha v) * [H(xhi) - H(xlo)] with H the
    // antiderivative of e^(-alpha x) F(x).
    for ((k, m), c) in &f_next.terms {
        let g = alpha_num as i64 + m; // decay numerator of the integrand
        let coeff = c.scale(&(rho * &alpha));

        // Adds coeff * (H-term at `bound`) * sign * e^(alpha v) to out.
        let eval_bound = |bound: XBound, sign: Rat, out: &mut TransientExpr| -> Result<(), TransientError> {
            match bound {
                XBound::PlusInf => {
                    if g <= 0 {
                        return Err(if g == 0 {
                            TransientError::PolynomialUnbounded
                        } else {
                            TransientError::Divergent
                        });
                    }
                    // decaying integrand vanishes at infinity
                    Ok(())
                }
                XBound::Int(n) => {
                    if g == 0 {
                        // H = x^(k+1)/(k+1)
                        let val = rat_u32(n).pow(*k as i32 + 1) / rat_u32(k + 1);
                        out.add_term(0, -(alpha_num as i64), coeff.scale(&(val * &sign)));
                    } else {
                        let gamma = Rat::new((g).into(), (q as i64).into());
                        for j in 0..=*k {
                            let c_j = -factorial_ratio(*k, j)
                                / gamma.clone().pow(j as i32 + 1)
                                * rat_u32(n).pow((*k - j) as i32)
                                * &sign;
                            // e^(-gamma n) = y^(g n)
                            out.add_term(
                                0,
                                -(alpha_num as i64),
                                coeff.scale(&c_j).shift(g * n as i64),
                            );
                        }
                    }
                    Ok(())
                }
                XBound::EntryValue => {
                    if g == 0 {
                        out.add_term(*k + 1, -(alpha_num as i64), coeff.scale(&(rat_int(1) / rat_u32(k + 1) * &sign)));
                    } else {
                        let gamma = Rat::new((g).into(), (q as i64).into());
                        for j in 0..=*k {
                            let c_j =
                                -factorial_ratio(*k, j) / gamma.clone().pow(j as i32 + 1) * &sign;
                            // v^(k-j) e^(-gamma v) * e^(alpha v): decay m
                            out.add_term(*k - j, g - alpha_num as i64, coeff.scale(&c_j));
                        }
                    }
                    Ok(())
                }
            }
        };

        eval_bound(xhi, Rat::one(), &mut out)?;
        eval_bound(xlo, -Rat::one(), &mut out)?;
    }
    Ok(out)
}
