//! Minimal double-double arithmetic for boundary-circle predicates.
//!
//! Axis endpoints are compared through angle-like coordinates; when two
//! endpoints fall within [`crate::tol::ENDPOINT_ANGLE_TOL`] of each other the
//! crossing predicates recompute the offending quantities in roughly 106-bit
//! precision using the classical error-free transformations below, instead
//! of guessing from noisy doubles.

/// An unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

/// Error-free sum of two doubles (Knuth two-sum).
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Error-free product via fused multiply-add.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    /// Lift a double.
    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Collapse to the nearest double.
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = two_sum(s, e);
        Dd { hi, lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(Dd {
            hi: -o.hi,
            lo: -o.lo,
        })
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from(q1)));
        let q2 = r.hi / o.hi;
        let r2 = r.sub(o.mul(Dd::from(q2)));
        let q3 = r2.hi / o.hi;
        let (hi, lo) = two_sum(q1, q2);
        let (hi, lo2) = two_sum(hi, q3 + lo);
        Dd { hi, lo: lo2 }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::from(self.hi.sqrt());
        }
        let x = self.hi.sqrt();
        // One Newton step in double-double.
        let xd = Dd::from(x);
        let half = Dd::from(0.5);
        xd.add(self.div(xd)).mul(half)
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    /// Sign of the represented number: -1, 0, or 1.
    pub fn signum(self) -> i32 {
        if self.hi > 0.0 || (self.hi == 0.0 && self.lo > 0.0) {
            1
        } else if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -1
        } else {
            0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_digits() {
        // (1 + 2^-60) - 1 vanishes in f64 but survives in double-double.
        let tiny = 2f64.powi(-60);
        let a = Dd::from(1.0).add(Dd::from(tiny));
        let d = a.sub(Dd::from(1.0));
        assert_eq!(d.to_f64(), tiny);
    }

    #[test]
    fn product_accuracy() {
        let x = Dd::from(1.0 + 2f64.powi(-30));
        let y = x.mul(x);
        let expected = 1.0 + 2f64.powi(-29) + 2f64.powi(-60);
        assert!((y.hi + y.lo - expected).abs() < 1e-30);
    }

    #[test]
    fn division_and_sqrt_round_trip() {
        let x = Dd::from(7.0);
        let y = x.div(Dd::from(3.0)).mul(Dd::from(3.0));
        assert!((y.to_f64() - 7.0).abs() < 1e-15);
        let s = Dd::from(2.0).sqrt();
        let two = s.mul(s);
        assert!((two.to_f64() - 2.0).abs() < 1e-30);
    }

    #[test]
    fn signum_sees_the_low_word() {
        let d = Dd {
            hi: 0.0,
            lo: -1e-40,
        };
        assert_eq!(d.signum(), -1);
        assert_eq!(Dd::from(0.0).signum(), 0);
    }
}
