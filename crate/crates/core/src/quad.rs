//! Adaptive quadrature for complex integrands: Gauss–Kronrod (7/15) in
//! `f64`, and a Gauss–Legendre (12/20) pair in double-double for integrals
//! with heavy cancellation.
//!
//! Used only as an independent check on closed-form integrals and solved
//! moments; nothing on the synthesis path depends on it.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::dd::{Cdd, Dd};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kron += s * WGK[i];
        if i % 2 == 1 {
            gauss += s * WG[i / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

/// `∫_a^b f` to absolute accuracy `tol` by recursive bisection.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Complex64 {
    fn rec<F: Fn(f64) -> Complex64>(
        f: &F,
        a: f64,
        b: f64,
        tol: f64,
        whole: (Complex64, f64),
        depth: u32,
    ) -> Complex64 {
        let (value, err) = whole;
        if err <= tol || !err.is_finite() || depth >= 40 {
            return value;
        }
        let m = 0.5 * (a + b);
        let left = gk15(f, a, m);
        let right = gk15(f, m, b);
        rec(f, a, m, 0.5 * tol, left, depth + 1) + rec(f, m, b, 0.5 * tol, right, depth + 1)
    }
    let whole = gk15(&f, a, b);
    rec(&f, a, b, tol, whole, 0)
}

const ROUNDING_FLOOR: f64 = 1e-28;

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: Dd) -> (Dd, Dd) {
    let mut p0 = Dd::ONE;
    let mut p1 = x;
    for k in 1..n {
        let k = k as f64;
        let p2 = (x * p1 * (2.0 * k + 1.0) - p0 * k) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = (x * p1 - p0) * n as f64 / (x.sqr() - Dd::ONE);
    (p1, dp)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
fn legendre_rule(n: usize) -> Rule {
    (0..n)
        .map(|k| {
            let guess = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut x = Dd::new(guess);
            for _ in 0..8 {
                let (p, dp) = legendre(n, x);
                x = x - p / dp;
            }
            let (_, dp) = legendre(n, x);
            (x, Dd::new(2.0) / ((Dd::ONE - x.sqr()) * dp.sqr()))
        })
        .collect()
}

type Rule = Vec<(Dd, Dd)>;

fn rules() -> &'static (Rule, Rule) {
    static RULES: OnceLock<(Rule, Rule)> = OnceLock::new();
    RULES.get_or_init(|| (legendre_rule(12), legendre_rule(20)))
}

/// Applies `rule` on `[a, b]`; also returns `∫|f|` per component in `f64`,
/// the scale of the rounding error.
fn panel<F: Fn(Dd, &mut [Cdd])>(f: &F, a: f64, b: f64, rule: &[(Dd, Dd)], out: &mut [Cdd]) -> Vec<f64> {
    let c = Dd::sum(a, b).scale2(0.5);
    let h = Dd::sum(b, -a).scale2(0.5);
    let mut buf = vec![Cdd::ZERO; out.len()];
    let mut mass = vec![0.0; out.len()];
    out.fill(Cdd::ZERO);
    for &(x, w) in rule {
        f(c + h * x, &mut buf);
        for ((o, v), m) in out.iter_mut().zip(&buf).zip(mass.iter_mut()) {
            *o = *o + v.scale(w);
            *m += w.hi * v.norm();
        }
    }
    for o in out.iter_mut() {
        *o = o.scale(h);
    }
    mass.iter().map(|m| m * h.hi).collect()
}

/// Componentwise `∫_a^b f` in double-double. `f` writes its components into
/// the slice it is given; `tol[i]` is the absolute tolerance for component
/// `i` over the whole interval. A panel is also accepted once its error
/// estimate reaches the rounding floor `1e-28 ∫|f|`, so integrands too
/// large to resolve come back inaccurate instead of subdividing forever.
pub fn integrate_dd<F: Fn(Dd, &mut [Cdd])>(f: F, a: f64, b: f64, tol: &[f64]) -> Vec<Cdd> {
    fn rec<F: Fn(Dd, &mut [Cdd])>(f: &F, a: f64, b: f64, tol: &[f64], depth: u32, acc: &mut [Cdd]) {
        let (low_rule, high_rule) = rules();
        let mut low = vec![Cdd::ZERO; acc.len()];
        let mut high = vec![Cdd::ZERO; acc.len()];
        panel(f, a, b, low_rule, &mut low);
        let mass = panel(f, a, b, high_rule, &mut high);
        let errs: Vec<f64> = low.iter().zip(&high).map(|(l, h)| (*h - *l).norm()).collect();
        let done = errs
            .iter()
            .zip(tol)
            .zip(&mass)
            .all(|((e, t), m)| *e <= t.max(ROUNDING_FLOOR * m))
            || errs.iter().any(|e| !e.is_finite());
        if done || depth >= 50 {
            for (o, v) in acc.iter_mut().zip(&high) {
                *o = *o + *v;
            }
            return;
        }
        let m = 0.5 * (a + b);
        let half: Vec<f64> = tol.iter().map(|t| 0.5 * t).collect();
        rec(f, a, m, &half, depth + 1, acc);
        rec(f, m, b, &half, depth + 1, acc);
    }
    let mut acc = vec![Cdd::ZERO; tol.len()];
    rec(&f, a, b, tol, 0, &mut acc);
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rules_are_exact_on_polynomials() {
        let (low, high) = rules();
        let wsum = high.iter().fold(Dd::ZERO, |s, &(_, w)| s + w);
        assert!((wsum - Dd::new(2.0)).to_f64().abs() < 1e-30);
        // ∫ x^22 over [-1, 1] = 2/23, exact for both rules
        for rule in [low, high] {
            let v = rule.iter().fold(Dd::ZERO, |s, &(x, w)| {
                let mut p = Dd::ONE;
                for _ in 0..22 {
                    p = p * x;
                }
                s + p * w
            });
            assert!((v - Dd::new(2.0) / 23.0).to_f64().abs() < 1e-30);
        }
    }

    #[test]
    fn double_double_resolves_cancellation() {
        // ∫_0^10 exp(3s) (s - c) ds with c picked to nearly cancel: the
        // integrand reaches 1e13, the integral is about 1e-3
        let (rate, len) = (3.0, 10.0);
        let big = Dd::new(rate * len).exp();
        let inv = Dd::ONE / rate;
        let c = ((big * (Dd::new(len) - inv) + inv) / (big - Dd::ONE)).to_f64();
        let exact = (big * (Dd::new(len) - Dd::new(c) - inv) + Dd::new(c) + inv) / rate;
        let v = integrate_dd(
            |s, out| out[0] = Cdd::from((s * rate).exp() * (s - Dd::new(c))),
            0.0,
            len,
            &[1e-20],
        );
        assert!(exact.to_f64().abs() > 1e-6);
        assert!((v[0].re - exact).to_f64().abs() < 1e-12);
        assert!(v[0].im.to_f64() == 0.0);
        let w = integrate_dd(
            |s, out| out[0] = Cdd::new(Dd::ZERO, s * 40.0).exp(),
            0.0,
            6.0,
            &[1e-28],
        );
        let exact = (Complex64::new(0.0, 240.0).exp() - 1.0) / Complex64::new(0.0, 40.0);
        assert!((w[0].to_c64() - exact).norm() < 1e-15);
    }

    #[test]
    fn polynomial_and_oscillatory() {
        let v = integrate(|x| Complex64::new(x.powi(6), 0.0), 0.0, 2.0, 1e-14);
        assert!((v.re - 128.0 / 7.0).abs() < 1e-12);
        let w = 40.0;
        let v = integrate(|x| Complex64::new(0.0, w * x).exp(), 0.0, 6.0, 1e-13);
        let exact = (Complex64::new(0.0, w * 6.0).exp() - 1.0) / Complex64::new(0.0, w);
        assert!((v - exact).norm() < 1e-12);
    }
}
