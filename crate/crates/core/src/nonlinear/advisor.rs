use crate::error::{invalid, Result};

/// Advised data bound and ball radius, with the self-map bound evaluated at unit constant.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallnessAdvice {
    pub lambda: f64,
    pub q: f64,
    /// Data-norm bound `epsilon = lambda^2`.
    pub epsilon: f64,
    /// Ball radius `rho = lambda`.
    pub rho: f64,
    /// The exponent `(3q - 3)/q` of the quadratic term.
    pub quadratic_exponent: f64,
    /// `(label, value, lambda power)` for each of the seven terms under `epsilon = lambda^2`, `rho = lambda`.
    pub terms: Vec<(&'static str, f64, f64)>,
}

impl SmallnessAdvice {
    /// Sum of the seven terms.
    pub fn bound(&self) -> f64 {
        self.terms.iter().map(|t| t.1).sum()
    }

    /// Label of the largest term.
    pub fn dominant(&self) -> &'static str {
        self.terms
            .iter()
            .fold(("", f64::NEG_INFINITY), |best, t| if t.1 > best.1 { (t.0, t.1) } else { best })
            .0
    }

    /// Whether the unit-constant bound keeps the ball invariant (`bound <= rho`).
    pub fn self_map(&self) -> bool {
        self.bound() <= self.rho
    }
}

pub fn smallness_advisor(lambda: f64, q: f64) -> Result<SmallnessAdvice> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    if !(6.0 / 5.0 - 1e-12..=4.0 / 3.0 + 1e-12).contains(&q) {
        return Err(invalid("q", format!("must lie in [6/5, 4/3], got {q}")));
    }
    let epsilon = lambda * lambda;
    let rho = lambda;
    let a = (3.0 * q - 3.0) / q;
    let terms = vec![
        ("lambda^-a rho^2", lambda.powf(-a) * rho * rho, 2.0 - a),
        ("lambda^-1 eps rho", epsilon * rho / lambda, 2.0),
        ("lambda^-1/2 rho eps", lambda.powf(-0.5) * rho * epsilon, 2.5),
        ("rho eps", rho * epsilon, 3.0),
        ("eps^2", epsilon * epsilon, 4.0),
        ("lambda eps", lambda * epsilon, 3.0),
        ("eps", epsilon, 2.0),
    ];
    Ok(SmallnessAdvice {
        lambda,
        q,
        epsilon,
        rho,
        quadratic_exponent: a,
        terms,
    })
}
