//! Truncated third-order Taylor polynomials in three variables.
//!
//! A [`Jet`] stores the coefficients `c_a` of `sum_a c_a dx^a` for multi-indices
//! `|a| <= 3`. Arithmetic is exact up to that order, so derivatives of
//! manufactured fields and of the Oseen fundamental solution come out free of
//! differencing error.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

/// Number of monomials of total degree at most 3 in 3 variables.
pub const TERMS: usize = 20;

struct Tables {
    exps: [[u8; 3]; TERMS],
    /// `product[i][j]` is the index of monomial `i * j`, or `None` above degree 3.
    product: [[Option<u8>; TERMS]; TERMS],
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut exps = [[0u8; 3]; TERMS];
        let mut i = 0;
        for deg in 0..=3u8 {
            for a in (0..=deg).rev() {
                for b in (0..=deg - a).rev() {
                    exps[i] = [a, b, deg - a - b];
                    i += 1;
                }
            }
        }
        let find = |e: [u8; 3]| exps.iter().position(|x| *x == e).map(|p| p as u8);
        let mut product = [[None; TERMS]; TERMS];
        for (i, ei) in exps.iter().enumerate() {
            for (j, ej) in exps.iter().enumerate() {
                product[i][j] = find([ei[0] + ej[0], ei[1] + ej[1], ei[2] + ej[2]]);
            }
        }
        Tables { exps, product }
    })
}

/// Index of the monomial with exponents `e` (`|e| <= 3`).
pub fn index(e: [u8; 3]) -> usize {
    tables()
        .exps
        .iter()
        .position(|x| *x == e)
        .expect("monomial of degree at most 3")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub c: [f64; TERMS],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; TERMS];
        c[0] = v;
        Self { c }
    }

    /// The coordinate `x_axis` expanded around `base`.
    pub fn variable(axis: usize, base: f64) -> Self {
        let mut j = Self::constant(base);
        let mut e = [0u8; 3];
        e[axis] = 1;
        j.c[index(e)] = 1.0;
        j
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Partial derivative with multi-index `e` at the expansion point.
    pub fn partial(&self, e: [u8; 3]) -> f64 {
        let fact = |n: u8| (1..=n as u32).product::<u32>() as f64;
        self.c[index(e)] * fact(e[0]) * fact(e[1]) * fact(e[2])
    }

    /// `d/dx_axis`; the result is exact up to degree 2.
    pub fn derivative(&self, axis: usize) -> Self {
        let t = tables();
        let mut out = [0.0; TERMS];
        for (i, e) in t.exps.iter().enumerate() {
            if e.iter().map(|v| *v as u32).sum::<u32>() >= 3 {
                continue;
            }
            let mut up = *e;
            up[axis] += 1;
            out[i] = up[axis] as f64 * self.c[index(up)];
        }
        Self { c: out }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { c: self.c.map(|v| v * s) }
    }

    /// `f(self)` given `[f, f', f'', f''']` at the constant term.
    pub fn compose(&self, d: [f64; 4]) -> Self {
        let mut h = *self;
        h.c[0] = 0.0;
        let h2 = h * h;
        let h3 = h2 * h;
        let mut out = Self::constant(d[0]);
        for i in 0..TERMS {
            out.c[i] += d[1] * h.c[i] + d[2] / 2.0 * h2.c[i] + d[3] / 6.0 * h3.c[i];
        }
        out
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose([e; 4])
    }

    pub fn recip(&self) -> Self {
        let v = self.value();
        let r = 1.0 / v;
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    pub fn sqrt(&self) -> Self {
        let v = self.value();
        let s = v.sqrt();
        self.compose([s, 0.5 / s, -0.25 / (s * v), 0.375 / (s * v * v)])
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        for (a, b) in self.c.iter_mut().zip(rhs.c) {
            *a += b;
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        for (a, b) in self.c.iter_mut().zip(rhs.c) {
            *a -= b;
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let t = tables();
        let mut out = [0.0; TERMS];
        for (i, a) in self.c.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in rhs.c.iter().enumerate() {
                if let Some(k) = t.product[i][j] {
                    out[k as usize] += a * b;
                }
            }
        }
        Jet { c: out }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point() -> [Jet; 3] {
        [Jet::variable(0, 0.3), Jet::variable(1, -0.7), Jet::variable(2, 1.1)]
    }

    #[test]
    fn polynomial_derivatives() {
        let [x, y, z] = point();
        // f = x^2 y + 3 z^3
        let f = x * x * y + (z * z * z).scale(3.0);
        assert!((f.partial([2, 1, 0]) - 2.0).abs() < 1e-14);
        assert!((f.partial([0, 0, 3]) - 18.0).abs() < 1e-14);
        assert!((f.partial([1, 0, 0]) - 2.0 * 0.3 * -0.7).abs() < 1e-14);
        assert!((f.partial([0, 0, 2]) - 18.0 * 1.1).abs() < 1e-14);
    }

    #[test]
    fn composition_matches_closed_forms() {
        let [x, y, _] = point();
        let g = (x * y).sin();
        // d^2/dx dy sin(xy) = cos(xy) - xy sin(xy)
        let (xv, yv) = (0.3_f64, -0.7_f64);
        let want = (xv * yv).cos() - xv * yv * (xv * yv).sin();
        assert!((g.partial([1, 1, 0]) - want).abs() < 1e-14);
        // d^3/dx^3 exp(2x) = 8 exp(2x)
        let e = x.scale(2.0).exp();
        assert!((e.partial([3, 0, 0]) - 8.0 * (0.6_f64).exp()).abs() < 1e-13);
        let r = (x + Jet::constant(1.0)).recip();
        assert!((r.partial([2, 0, 0]) - 2.0 / 1.3_f64.powi(3)).abs() < 1e-13);
        let s = (x * x + y * y).sqrt();
        let rho = (xv * xv + yv * yv).sqrt();
        assert!((s.partial([1, 0, 0]) - xv / rho).abs() < 1e-14);
        assert!((s.partial([0, 2, 0]) - xv * xv / rho.powi(3)).abs() < 1e-13);
    }

    #[test]
    fn derivative_lowers_the_order() {
        let [x, y, z] = point();
        let f = (x * y * z).cos();
        let fx = f.derivative(0);
        assert!((fx.partial([0, 1, 0]) - f.partial([1, 1, 0])).abs() < 1e-14);
        assert!((fx.partial([0, 1, 1]) - f.partial([1, 1, 1])).abs() < 1e-14);
        assert!((fx.value() - f.partial([1, 0, 0])).abs() < 1e-14);
    }
}
