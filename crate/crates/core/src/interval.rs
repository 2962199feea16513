//! Closed real intervals with optional outward rounding.
//!
//! Degenerate intervals (`lo == hi`) carry exact affine quantities and are
//! combined with round-to-nearest arithmetic. As soon as one operand has
//! positive width the result is widened by one ulp on each side, so brackets
//! produced by non-affine branches stay valid enclosures.

use std::fmt;

#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl Interval {
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(
            lo <= hi || lo.is_nan() || hi.is_nan(),
            "inverted interval [{lo}, {hi}]"
        );
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Builds `[a, b]` or `[b, a]`, whichever is ordered.
    pub fn hull(a: f64, b: f64) -> Self {
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Widens by `ulps` units in the last place on each side.
    pub fn outward(self, ulps: u32) -> Self {
        let (mut lo, mut hi) = (self.lo, self.hi);
        for _ in 0..ulps {
            lo = lo.next_down();
            hi = hi.next_up();
        }
        Interval { lo, hi }
    }

    /// Widens by a relative margin `rel` of the endpoint magnitudes.
    pub fn widen_rel(self, rel: f64) -> Self {
        Interval {
            lo: self.lo - rel * self.lo.abs(),
            hi: self.hi + rel * self.hi.abs(),
        }
        .outward(1)
    }

    pub fn clamp_unit(self) -> Self {
        Interval {
            lo: self.lo.clamp(0.0, 1.0),
            hi: self.hi.clamp(0.0, 1.0),
        }
    }

    /// Multiplies by a nonnegative scalar.
    pub fn scale(self, c: f64) -> Self {
        debug_assert!(c >= 0.0);
        let out = Interval {
            lo: self.lo * c,
            hi: self.hi * c,
        };
        if self.is_point() {
            out
        } else {
            out.outward(1)
        }
    }

    /// `exp` is monotone; libm is accurate to within an ulp, so two ulps of
    /// widening keep the enclosure.
    pub fn exp(self) -> Self {
        let out = Interval {
            lo: self.lo.exp(),
            hi: self.hi.exp(),
        };
        if self.is_point() {
            out
        } else {
            let w = out.outward(2);
            Interval {
                lo: w.lo.max(0.0),
                hi: w.hi,
            }
        }
    }

    pub fn ln(self) -> Self {
        let out = Interval {
            lo: self.lo.ln(),
            hi: self.hi.ln(),
        };
        if self.is_point() {
            out
        } else {
            out.outward(2)
        }
    }

    /// Range of `|x - y|` for `x` in the interval.
    pub fn distance_to(self, y: f64) -> Self {
        let a = (self.lo - y).abs();
        let b = (self.hi - y).abs();
        let lo = if self.contains(y) { 0.0 } else { a.min(b) };
        Interval {
            lo: lo.next_down().max(0.0),
            hi: a.max(b).next_up(),
        }
    }
}

impl std::ops::Add for Interval {
    type Output = Interval;

    fn add(self, other: Interval) -> Interval {
        let sum = Interval {
            lo: self.lo + other.lo,
            hi: self.hi + other.hi,
        };
        if self.is_point() && other.is_point() {
            sum
        } else {
            sum.outward(1)
        }
    }
}

impl std::ops::Neg for Interval {
    type Output = Interval;

    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_arithmetic_stays_exact() {
        let a = Interval::point(0.25) + Interval::point(0.5);
        assert_eq!(a, Interval::point(0.75));
        assert_eq!(Interval::point(3.0).scale(2.0), Interval::point(6.0));
    }

    #[test]
    fn wide_arithmetic_rounds_outward() {
        let a = Interval::new(0.1, 0.2) + Interval::new(0.2, 0.3);
        assert!(a.lo < 0.1 + 0.2 && a.hi > 0.2 + 0.3);
        let e = Interval::new(0.0, 1.0).exp();
        assert!(e.lo < 1.0 && e.hi > std::f64::consts::E);
    }

    #[test]
    fn distance_covers_both_sides() {
        let d = Interval::new(0.2, 0.4).distance_to(0.3);
        assert_eq!(d.lo, 0.0);
        assert!(d.hi >= 0.1);
        let d = Interval::new(0.5, 0.6).distance_to(0.0);
        assert!(d.lo <= 0.5 && d.lo > 0.49 && d.hi >= 0.6);
    }
}
