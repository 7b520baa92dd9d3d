//! Delay intervals with explicit open/closed endpoints, generic over the
//! time representation (exact rationals or f64).

use crate::rat::{rat_to_f64, Rat};
use num_traits::Zero;
use std::fmt;
use std::ops::{Add, Sub};

/// Arithmetic and ordering required of a time value. Implemented by `Rat`
/// (exact paths) and `f64` (Monte Carlo path).
pub trait TimeOps:
    Clone + PartialOrd + Add<Output = Self> + Sub<Output = Self> + fmt::Debug
{
    fn zero() -> Self;
    fn from_u32(k: u32) -> Self;
    fn is_nonneg(&self) -> bool;
}

impl TimeOps for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_u32(k: u32) -> Self {
        k as f64
    }
    fn is_nonneg(&self) -> bool {
        *self >= 0.0
    }
}

impl TimeOps for Rat {
    fn zero() -> Self {
        <Rat as Zero>::zero()
    }
    fn from_u32(k: u32) -> Self {
        crate::rat::rat_u32(k)
    }
    fn is_nonneg(&self) -> bool {
        !num_traits::Signed::is_negative(self)
    }
}

pub fn time_to_f64<T: TimeOps + 'static>(t: &T) -> f64 {
    use std::any::Any;
    if let Some(f) = (t as &dyn Any).downcast_ref::<f64>() {
        *f
    } else if let Some(r) = (t as &dyn Any).downcast_ref::<Rat>() {
        rat_to_f64(r)
    } else {
        unreachable!("unknown time type")
    }
}

/// Upper endpoint: finite value or +infinity.
#[derive(Debug, Clone, PartialEq)]
pub enum Upper<T> {
    Finite(T),
    Infinite,
}

/// A (possibly empty) delay interval with open/closed flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub lo_closed: bool,
    pub hi: Upper<T>,
    pub hi_closed: bool,
}

impl<T: TimeOps> Interval<T> {
    pub fn closed(lo: T, hi: T) -> Self {
        Interval { lo, lo_closed: true, hi: Upper::Finite(hi), hi_closed: true }
    }

    pub fn unbounded_from(lo: T, lo_closed: bool) -> Self {
        Interval { lo, lo_closed, hi: Upper::Infinite, hi_closed: false }
    }

    pub fn full() -> Self {
        Self::unbounded_from(T::zero(), true)
    }

    pub fn point(v: T) -> Self {
        Self::closed(v.clone(), v)
    }

    pub fn is_empty(&self) -> bool {
        match &self.hi {
            Upper::Infinite => false,
            Upper::Finite(h) => {
                if self.lo > *h {
                    true
                } else if self.lo == *h {
                    !(self.lo_closed && self.hi_closed)
                } else {
                    false
                }
            }
        }
    }

    pub fn is_singleton(&self) -> bool {
        matches!(&self.hi, Upper::Finite(h) if *h == self.lo) && self.lo_closed && self.hi_closed
    }

    pub fn contains(&self, t: &T) -> bool {
        let lo_ok = if self.lo_closed { *t >= self.lo } else { *t > self.lo };
        let hi_ok = match &self.hi {
            Upper::Infinite => true,
            Upper::Finite(h) => {
                if self.hi_closed {
                    *t <= *h
                } else {
                    *t < *h
                }
            }
        };
        lo_ok && hi_ok
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo.clone(), self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo.clone(), other.lo_closed)
        } else {
            (self.lo.clone(), self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = match (&self.hi, &other.hi) {
            (Upper::Infinite, Upper::Infinite) => (Upper::Infinite, false),
            (Upper::Infinite, Upper::Finite(h)) => (Upper::Finite(h.clone()), other.hi_closed),
            (Upper::Finite(h), Upper::Infinite) => (Upper::Finite(h.clone()), self.hi_closed),
            (Upper::Finite(a), Upper::Finite(b)) => {
                if a < b {
                    (Upper::Finite(a.clone()), self.hi_closed)
                } else if b < a {
                    (Upper::Finite(b.clone()), other.hi_closed)
                } else {
                    (Upper::Finite(a.clone()), self.hi_closed && other.hi_closed)
                }
            }
        };
        Interval { lo, lo_closed, hi, hi_closed }
    }

    /// Lebesgue measure; `None` when infinite.
    pub fn length(&self) -> Option<T> {
        if self.is_empty() {
            return Some(T::zero());
        }
        match &self.hi {
            Upper::Infinite => None,
            Upper::Finite(h) => Some(h.clone() - self.lo.clone()),
        }
    }
}

impl<T: TimeOps + fmt::Display> fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "∅");
        }
        write!(f, "{}{}", if self.lo_closed { "[" } else { "(" }, self.lo)?;
        match &self.hi {
            Upper::Infinite => write!(f, ", +inf)"),
            Upper::Finite(h) => write!(f, ", {}{}", h, if self.hi_closed { "]" } else { ")" }),
        }
    }
}

/// Normalized finite union of disjoint intervals, sorted by lower endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet<T> {
    pub parts: Vec<Interval<T>>,
}

impl<T: TimeOps> IntervalSet<T> {
    pub fn empty() -> Self {
        IntervalSet { parts: vec![] }
    }

    /// Builds the normalized union: sorts, merges overlapping/touching parts.
    pub fn from_intervals(mut ivs: Vec<Interval<T>>) -> Self {
        ivs.retain(|iv| !iv.is_empty());
        ivs.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap_or(std::cmp::Ordering::Equal));
        let mut parts: Vec<Interval<T>> = vec![];
        for iv in ivs {
            if let Some(last) = parts.last_mut() {
                let touches = match &last.hi {
                    Upper::Infinite => true,
                    Upper::Finite(h) => {
                        let apart = iv.lo > *h;
                        let meet_at_point = iv.lo == *h && (last.hi_closed || iv.lo_closed);
                        !apart || meet_at_point
                    }
                };
                if touches {
                    // Extend the upper endpoint if needed.
                    let extend = match (&last.hi, &iv.hi) {
                        (Upper::Infinite, _) => false,
                        (_, Upper::Infinite) => true,
                        (Upper::Finite(a), Upper::Finite(b)) => {
                            b > a || (b == a && iv.hi_closed && !last.hi_closed)
                        }
                    };
                    if extend {
                        last.hi = iv.hi.clone();
                        last.hi_closed = iv.hi_closed;
                    }
                    continue;
                }
            }
            parts.push(iv);
        }
        IntervalSet { parts }
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn contains(&self, t: &T) -> bool {
        self.parts.iter().any(|iv| iv.contains(t))
    }

    /// Total Lebesgue measure; `None` if unbounded.
    pub fn total_length(&self) -> Option<T> {
        let mut acc = T::zero();
        for iv in &self.parts {
            acc = acc + iv.length()?;
        }
        Some(acc)
    }

    pub fn is_bounded(&self) -> bool {
        self.parts.iter().all(|iv| !matches!(iv.hi, Upper::Infinite))
    }

    /// True when the set is exactly [0, +inf).
    pub fn is_all_nonneg_reals(&self) -> bool {
        self.parts.len() == 1
            && self.parts[0].lo == T::zero()
            && self.parts[0].lo_closed
            && matches!(self.parts[0].hi, Upper::Infinite)
    }

    /// True when the set covers [0, +inf) up to measure zero (finitely many
    /// boundary points may be missing, as in region-guarded games).
    pub fn covers_nonneg_reals_ae(&self) -> bool {
        let closed: Vec<Interval<T>> = self
            .parts
            .iter()
            .map(|iv| Interval {
                lo: iv.lo.clone(),
                lo_closed: true,
                hi: iv.hi.clone(),
                hi_closed: true,
            })
            .collect();
        let merged = IntervalSet::from_intervals(closed);
        merged.is_all_nonneg_reals()
    }

    /// The single point if the set is one singleton, else `None`.
    pub fn as_singleton(&self) -> Option<T> {
        if self.parts.len() == 1 && self.parts[0].is_singleton() {
            Some(self.parts[0].lo.clone())
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    #[test]
    fn empty_detection() {
        let iv = Interval::<Rat> {
            lo: rat(2, 1),
            lo_closed: true,
            hi: Upper::Finite(rat(1, 1)),
            hi_closed: true,
        };
        assert!(iv.is_empty());
        let pt = Interval::point(rat(1, 2));
        assert!(!pt.is_empty());
        assert!(pt.is_singleton());
    }

    #[test]
    fn union_merges_touching_parts() {
        // [0,1) and [1, inf) merge into [0, inf).
        let a = Interval::<Rat> {
            lo: rat(0, 1),
            lo_closed: true,
            hi: Upper::Finite(rat(1, 1)),
            hi_closed: false,
        };
        let b = Interval::unbounded_from(rat(1, 1), true);
        let set = IntervalSet::from_intervals(vec![b, a]);
        assert!(set.is_all_nonneg_reals());
    }

    #[test]
    fn union_keeps_gaps() {
        let a = Interval::closed(rat(0, 1), rat(1, 1));
        let b = Interval::closed(rat(2, 1), rat(3, 1));
        let set = IntervalSet::from_intervals(vec![a, b]);
        assert_eq!(set.parts.len(), 2);
        assert_eq!(set.total_length(), Some(rat(2, 1)));
    }
}
