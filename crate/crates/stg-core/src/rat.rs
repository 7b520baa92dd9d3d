//! Exact rational arithmetic helpers shared by the exact-computation paths.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_u32(n: u32) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses "p/q", "p", or a plain decimal like "0.25" into an exact rational.
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|e| format!("bad numerator {n:?}: {e}"))?;
        let d: BigInt = d.trim().parse().map_err(|e| format!("bad denominator {d:?}: {e}"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let int_part: BigInt = if int.is_empty() {
            BigInt::zero()
        } else {
            int.parse().map_err(|e| format!("bad number {s:?}: {e}"))?
        };
        let neg = s.starts_with('-');
        let digits: BigInt = frac.parse().map_err(|e| format!("bad number {s:?}: {e}"))?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part = Rat::new(digits, scale);
        let whole = Rat::from_integer(int_part);
        return Ok(if neg { whole - frac_part } else { whole + frac_part });
    }
    let n: BigInt = s.parse().map_err(|e| format!("bad number {s:?}: {e}"))?;
    Ok(Rat::from_integer(n))
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back to a quotient of lossy conversions for extreme values.
        let n = r.numer().to_f64().unwrap_or(f64::MAX);
        let d = r.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}

/// Renders `r` as a decimal string with `digits` fractional digits (truncated).
pub fn rat_to_decimal(r: &Rat, digits: usize) -> String {
    let neg = r.is_negative();
    let a = r.abs();
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = (a * Rat::from_integer(scale.clone())).floor().to_integer();
    let int = &scaled / &scale;
    let frac = &scaled % &scale;
    let frac_s = format!("{:0>width$}", frac.to_string(), width = digits);
    format!("{}{}.{}", if neg { "-" } else { "" }, int, frac_s)
}

/// Closed rational interval used for certified enclosures.
#[derive(Debug, Clone, PartialEq)]
pub struct RatInterval {
    pub lo: Rat,
    pub hi: Rat,
}

impl RatInterval {
    pub fn point(r: Rat) -> Self {
        RatInterval { lo: r.clone(), hi: r }
    }

    pub fn new(lo: Rat, hi: Rat) -> Self {
        debug_assert!(lo <= hi);
        RatInterval { lo, hi }
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn contains(&self, r: &Rat) -> bool {
        &self.lo <= r && r <= &self.hi
    }

    pub fn add(&self, other: &Self) -> Self {
        RatInterval::new(&self.lo + &other.lo, &self.hi + &other.hi)
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_negative() {
            RatInterval::new(&self.hi * c, &self.lo * c)
        } else {
            RatInterval::new(&self.lo * c, &self.hi * c)
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let cands = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = cands.iter().min().unwrap().clone();
        let hi = cands.iter().max().unwrap().clone();
        RatInterval::new(lo, hi)
    }

    /// Integer power; requires lo > 0 for negative exponents.
    pub fn powi(&self, k: i64) -> Self {
        if k == 0 {
            return RatInterval::point(Rat::one());
        }
        let (mut lo, mut hi) = (Rat::one(), Rat::one());
        let n = k.unsigned_abs();
        // The enclosure target 0 < lo <= hi keeps powers monotone.
        debug_assert!(self.lo.is_positive());
        for _ in 0..n {
            lo *= &self.lo;
            hi *= &self.hi;
        }
        if k < 0 {
            RatInterval::new(Rat::one() / hi, Rat::one() / lo)
        } else {
            RatInterval::new(lo, hi)
        }
    }

    /// True when the whole interval is strictly positive / negative.
    pub fn sign(&self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering::*;
        if self.lo.is_positive() {
            Some(Greater)
        } else if self.hi.is_negative() {
            Some(Less)
        } else if self.lo.is_zero() && self.hi.is_zero() {
            Some(Equal)
        } else {
            None
        }
    }
}

impl fmt::Display for RatInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Rational enclosure of e^(-1/q) via the exponential Taylor series with an
/// explicit remainder bound, using `terms` series terms.
pub fn exp_neg_inv_enclosure(q: u64, terms: usize) -> RatInterval {
    let x = Rat::new(BigInt::from(-1), BigInt::from(q as i64));
    let mut sum = Rat::zero();
    let mut term = Rat::one();
    for n in 0..=terms {
        if n > 0 {
            term = &term * &x / Rat::from_integer(BigInt::from(n as i64));
        }
        sum += &term;
    }
    // |R_N| <= |x|^(N+1)/(N+1)! * 1/(1 - |x|/(N+2)) for |x| < N+2.
    let absx = x.abs();
    let mut rem = Rat::one();
    for n in 1..=(terms + 1) {
        rem = rem * &absx / Rat::from_integer(BigInt::from(n as i64));
    }
    let denom = Rat::one() - &absx / Rat::from_integer(BigInt::from((terms + 2) as i64));
    rem /= denom;
    RatInterval::new(&sum - &rem, &sum + &rem)
}
