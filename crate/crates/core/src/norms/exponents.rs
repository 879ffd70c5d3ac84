//! Exponent algebra for the embedding estimate and the nonlinear interpolation bound.

use num_rational::Ratio;

use crate::error::{invalid, Error, Result};

/// Upper limit on an admissible exponent. `open` marks a strict inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentBound {
    pub value: f64,
    pub open: bool,
    /// Which case of the condition table produced the bound.
    pub row: &'static str,
}

impl ExponentBound {
    pub fn admits(&self, e: f64) -> bool {
        if self.open {
            e < self.value
        } else {
            e <= self.value * (1.0 + 1e-12)
        }
    }

    /// Largest finite exponent to probe: the bound itself when closed and
    /// finite, `0.9 x` the bound when open and finite, `surrogate` when infinite.
    pub fn probe(&self, surrogate: f64) -> f64 {
        match (self.value.is_finite(), self.open) {
            (true, false) => self.value,
            (true, true) => 0.9 * self.value,
            (false, _) => surrogate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleExponents {
    pub q: f64,
    pub r0: ExponentBound,
    pub p0: ExponentBound,
    pub r1: ExponentBound,
    pub p1: ExponentBound,
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// One three-case row: `e <= a q/(a - s q)` if `s q < a`, `e < inf` if `s q = a`,
/// `e <= inf` otherwise.
fn table_row(a: f64, s: f64, q: f64, rows: [&'static str; 3]) -> ExponentBound {
    let sq = s * q;
    if near(sq, a) {
        ExponentBound {
            value: f64::INFINITY,
            open: true,
            row: rows[1],
        }
    } else if sq < a {
        ExponentBound {
            value: a * q / (a - sq),
            open: false,
            row: rows[0],
        }
    } else {
        ExponentBound {
            value: f64::INFINITY,
            open: false,
            row: rows[2],
        }
    }
}

/// Admissible ranges for `(r0, p0)` and `(r1, p1)` given `alpha`, `beta`, `q`, dimension `n`.
pub fn admissible_exponents(alpha: f64, beta: f64, q: f64, n: usize) -> Result<AdmissibleExponents> {
    if !(0.0..=2.0).contains(&alpha) {
        return Err(invalid("alpha", format!("must lie in [0,2], got {alpha}")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(invalid("beta", format!("must lie in [0,1], got {beta}")));
    }
    if !(q > 1.0 && q.is_finite()) {
        return Err(invalid("q", format!("must lie in (1,inf), got {q}")));
    }
    if n < 2 {
        return Err(invalid("n", format!("dimension must be >= 2, got {n}")));
    }
    let nf = n as f64;
    Ok(AdmissibleExponents {
        q,
        r0: table_row(2.0, alpha, q, ["r0: alpha*q<2", "r0: alpha*q=2", "r0: alpha*q>2"]),
        p0: table_row(nf, 2.0 - alpha, q, ["p0: (2-alpha)*q<n", "p0: (2-alpha)*q=n", "p0: (2-alpha)*q>n"]),
        r1: table_row(2.0, beta, q, ["r1: beta*q<2", "r1: beta*q=2", "r1: beta*q>2"]),
        p1: table_row(nf, 1.0 - beta, q, ["p1: (1-beta)*q<n", "p1: (1-beta)*q=n", "p1: (1-beta)*q>n"]),
    })
}

impl AdmissibleExponents {
    /// Checks target exponents, naming the violated row on failure.
    pub fn check(&self, r0: f64, p0: f64, r1: f64, p1: f64) -> Result<()> {
        for (name, bound, e) in [("r0", self.r0, r0), ("p0", self.p0, p0), ("r1", self.r1, r1), ("p1", self.p1, p1)] {
            if e < self.q * (1.0 - 1e-12) {
                return Err(Error::Inadmissible(format!("{name} = {e} is below q = {}", self.q)));
            }
            if !bound.admits(e) {
                let rel = if bound.open { "<" } else { "<=" };
                return Err(Error::Inadmissible(format!(
                    "{name} = {e} violates {name} {rel} {} (table row {})",
                    bound.value, bound.row
                )));
            }
        }
        Ok(())
    }
}

/// Derived exponents of the nonlinear estimate for `q` in `[6/5, 4/3]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExponentMap<T> {
    /// `2q/(2-q)`
    pub oseen_velocity: T,
    /// `4q/(4-q)`
    pub oseen_gradient: T,
    /// `3q/(3-q)`
    pub sobolev: T,
    /// `(10q-12)/q`
    pub theta: T,
    /// `(3q-3)/q`
    pub lambda_power: T,
}

fn check_q_range(q: f64) -> Result<()> {
    if !(1.2 - 1e-15..=4.0 / 3.0 + 1e-15).contains(&q) {
        return Err(invalid("q", format!("must lie in [6/5, 4/3], got {q}")));
    }
    Ok(())
}

/// Exact rational evaluation.
pub fn exponent_map(q: Ratio<i64>) -> Result<ExponentMap<Ratio<i64>>> {
    let lo = Ratio::new(6, 5);
    let hi = Ratio::new(4, 3);
    if q < lo || q > hi {
        return Err(invalid("q", format!("must lie in [6/5, 4/3], got {q}")));
    }
    let r = |n: i64| Ratio::from_integer(n);
    Ok(ExponentMap {
        oseen_velocity: r(2) * q / (r(2) - q),
        oseen_gradient: r(4) * q / (r(4) - q),
        sobolev: r(3) * q / (r(3) - q),
        theta: (r(10) * q - r(12)) / q,
        lambda_power: (r(3) * q - r(3)) / q,
    })
}

pub fn exponent_map_f64(q: f64) -> Result<ExponentMap<f64>> {
    check_q_range(q)?;
    Ok(ExponentMap {
        oseen_velocity: 2.0 * q / (2.0 - q),
        oseen_gradient: 4.0 * q / (4.0 - q),
        sobolev: 3.0 * q / (3.0 - q),
        theta: (10.0 * q - 12.0) / q,
        lambda_power: (3.0 * q - 3.0) / q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_half_at_q2() {
        let a = admissible_exponents(0.5, 0.5, 2.0, 3).unwrap();
        assert_eq!(a.r0.value, 4.0);
        assert!(!a.r0.open);
        assert!(a.p0.value.is_infinite() && a.p0.open);
        assert_eq!(a.r1.value, 4.0);
        assert_eq!(a.p1.value, 3.0);
        assert!(a.check(4.0, 12.0, 4.0, 3.0).is_ok());
        assert!(a.check(4.0, 12.0, 4.0, 3.5).is_err());
    }

    #[test]
    fn beta_one_gives_pressure_exponent() {
        for s in [1.2, 1.5, 1.9] {
            let a = admissible_exponents(0.0, 1.0, s, 3).unwrap();
            assert!((a.r1.value - 2.0 * s / (2.0 - s)).abs() < 1e-12);
        }
        let a = admissible_exponents(0.5, 1.0, 2.0, 3).unwrap();
        assert!(a.r1.open && a.r1.value.is_infinite());
        assert_eq!(a.p1.value, 2.0);
    }

    #[test]
    fn alpha_zero_has_no_temporal_gain() {
        let a = admissible_exponents(0.0, 0.0, 2.0, 3).unwrap();
        assert_eq!(a.r0.value, 2.0);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(admissible_exponents(2.5, 0.5, 2.0, 3).is_err());
        assert!(admissible_exponents(0.5, 1.5, 2.0, 3).is_err());
        assert!(admissible_exponents(0.5, 0.5, 1.0, 3).is_err());
        let a = admissible_exponents(0.5, 0.5, 2.0, 3).unwrap();
        let msg = a.check(5.0, 3.0, 3.0, 3.0).unwrap_err().to_string();
        assert!(msg.contains("alpha*q<2"), "{msg}");
    }

    #[test]
    fn exponent_map_endpoints() {
        let m = exponent_map(Ratio::new(6, 5)).unwrap();
        assert_eq!(m.sobolev, Ratio::from_integer(2));
        assert_eq!(m.theta, Ratio::from_integer(0));
        assert_eq!(m.lambda_power, Ratio::new(1, 2));
        let m = exponent_map(Ratio::new(4, 3)).unwrap();
        assert_eq!(m.oseen_gradient, Ratio::from_integer(2));
        assert_eq!(m.theta, Ratio::from_integer(1));
        assert_eq!(m.lambda_power, Ratio::new(3, 4));
        assert_eq!(m.oseen_velocity, Ratio::from_integer(4));
        assert!(exponent_map(Ratio::new(7, 5)).is_err());
        assert!(exponent_map_f64(1.1).is_err());
    }
}
