//! Double-double arithmetic: an unevaluated sum `hi + lo` of two `f64` with
//! `|lo| <= ulp(hi) / 2`, about 32 significant digits.
//!
//! Only the operations the moment machinery needs are provided. Moment
//! equations against exponents with `Re η T` around 30 cancel terms of size
//! `exp(Re η T)` down to `O(1)`, which plain `f64` cannot resolve.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd {
        hi: s,
        lo: b - (s - a),
    }
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};
const HALF_PI: Dd = Dd {
    hi: std::f64::consts::FRAC_PI_2,
    lo: 6.123_233_995_736_766e-17,
};

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub const fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact sum of two doubles.
    pub fn sum(a: f64, b: f64) -> Self {
        let (s, e) = two_sum(a, b);
        Dd { hi: s, lo: e }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    /// Multiplication by a power of two, exact barring under/overflow.
    pub fn scale2(self, p: f64) -> Self {
        Dd {
            hi: self.hi * p,
            lo: self.lo * p,
        }
    }

    pub fn sqr(self) -> Self {
        self * self
    }

    pub fn exp(self) -> Self {
        if self.hi.is_nan() {
            return Dd::new(f64::NAN);
        }
        if self.hi > 709.78 {
            return Dd::new(f64::INFINITY);
        }
        if self.hi < -745.2 {
            return Dd::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * k).scale2(1.0 / 1024.0);
        // exp(r) - 1 by Taylor, then (1 + s)² - 1 = s (s + 2) ten times
        let mut term = r;
        let mut s = r;
        for i in 2..=12 {
            term = term * r / i as f64;
            s = s + term;
        }
        for _ in 0..10 {
            s = s * (s + 2.0);
        }
        let e = s + 1.0;
        let half = 2f64.powi(k as i32 / 2);
        let rest = 2f64.powi(k as i32 - k as i32 / 2);
        e.scale2(half).scale2(rest)
    }

    /// `(cos x, sin x)`, accurate for `|x|` up to about `1e6`.
    pub fn cos_sin(self) -> (Dd, Dd) {
        let k = (self.hi / HALF_PI.hi).round();
        let r = (self - HALF_PI * k).scale2(1.0 / 256.0);
        let r2 = r.sqr();
        let mut sin = r;
        let mut cm1 = Dd::ZERO;
        let mut term_s = r;
        let mut term_c = Dd::ONE;
        for i in 1..=8 {
            let i = i as f64;
            term_s = -(term_s * r2) / ((2.0 * i) * (2.0 * i + 1.0));
            term_c = -(term_c * r2) / ((2.0 * i - 1.0) * (2.0 * i));
            sin = sin + term_s;
            cm1 = cm1 + term_c;
        }
        // double the angle eight times, tracking cos - 1 to keep precision
        for _ in 0..8 {
            let s2 = (sin * (cm1 + 1.0)).scale2(2.0);
            cm1 = -sin.sqr().scale2(2.0);
            sin = s2;
        }
        let cos = cm1 + 1.0;
        match (k as i64).rem_euclid(4) {
            0 => (cos, sin),
            1 => (-sin, cos),
            2 => (-cos, -sin),
            _ => (sin, -cos),
        }
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::new(x)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let d = quick_two_sum(s, e + t);
        quick_two_sum(d.hi, d.lo + f)
    }
}

impl Add<f64> for Dd {
    type Output = Dd;
    fn add(self, b: f64) -> Dd {
        let (s, e) = two_sum(self.hi, b);
        quick_two_sum(s, e + self.lo)
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        quick_two_sum(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;
    fn mul(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        quick_two_sum(p, e + self.lo * b)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * q1;
        let q2 = r.hi / b.hi;
        let r = r - b * q2;
        let q3 = r.hi / b.hi;
        quick_two_sum(q1, q2) + q3
    }
}

impl Div<f64> for Dd {
    type Output = Dd;
    fn div(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let (p, e) = two_prod(q1, b);
        let (s, f) = two_sum(self.hi, -p);
        let q2 = (s + (f - e + self.lo)) / b;
        quick_two_sum(q1, q2)
    }
}

/// Complex double-double.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub const ZERO: Cdd = Cdd {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };

    pub fn new(re: Dd, im: Dd) -> Self {
        Cdd { re, im }
    }

    /// Rounds to the nearest complex double.
    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn norm_sqr(self) -> Dd {
        self.re.sqr() + self.im.sqr()
    }

    /// Modulus to `f64` accuracy.
    pub fn norm(self) -> f64 {
        self.to_c64().norm()
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn scale(self, k: Dd) -> Cdd {
        Cdd::new(self.re * k, self.im * k)
    }

    pub fn exp(self) -> Cdd {
        let m = self.re.exp();
        if m.hi == 0.0 {
            return Cdd::ZERO;
        }
        let (c, s) = self.im.cos_sin();
        Cdd::new(m * c, m * s)
    }
}

impl From<Complex64> for Cdd {
    fn from(z: Complex64) -> Self {
        Cdd::new(Dd::new(z.re), Dd::new(z.im))
    }
}

impl From<Dd> for Cdd {
    fn from(x: Dd) -> Self {
        Cdd::new(x, Dd::ZERO)
    }
}

impl Neg for Cdd {
    type Output = Cdd;
    fn neg(self) -> Cdd {
        Cdd::new(-self.re, -self.im)
    }
}

impl Add for Cdd {
    type Output = Cdd;
    fn add(self, b: Cdd) -> Cdd {
        Cdd::new(self.re + b.re, self.im + b.im)
    }
}

impl Sub for Cdd {
    type Output = Cdd;
    fn sub(self, b: Cdd) -> Cdd {
        Cdd::new(self.re - b.re, self.im - b.im)
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    fn mul(self, b: Cdd) -> Cdd {
        Cdd::new(
            self.re * b.re - self.im * b.im,
            self.re * b.im + self.im * b.re,
        )
    }
}

impl Div for Cdd {
    type Output = Cdd;
    fn div(self, b: Cdd) -> Cdd {
        let d = b.norm_sqr();
        let n = self * Cdd::new(b.re, -b.im);
        Cdd::new(n.re / d, n.im / d)
    }
}
