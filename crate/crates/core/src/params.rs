//! Model parameters, with the dispersion coefficient kept exact when possible.

use std::fmt;

use serde::ser::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance for shell membership and resonance decisions when the
/// dispersion coefficient is only known as a float.
pub const SHELL_TOL: f64 = 1e-9;

/// The second-order dispersion coefficient `beta`.
///
/// The resonance structure hinges on whether `n1 + n3 = 2*beta/3` can be hit
/// by integers, so a rationally specified coefficient is kept as a reduced
/// fraction and shell membership becomes exact integer arithmetic. A float
/// coefficient falls back to a fixed tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Rational { num: i64, den: i64 },
    Float(f64),
}

impl Beta {
    pub fn rational(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidParameter(
                "dispersion coefficient has zero denominator".into(),
            ));
        }
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        Ok(Beta::Rational {
            num: sign * num / g,
            den: sign * den / g,
        })
    }

    pub fn float(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dispersion coefficient must be finite, got {value}"
            )));
        }
        Ok(Beta::Float(value))
    }

    /// Accepts `p/q` (exact) or a decimal literal (tolerance-based).
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some((p, q)) = text.split_once('/') {
            let num: i64 = p.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("bad rational numerator `{p}`"))
            })?;
            let den: i64 = q.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("bad rational denominator `{q}`"))
            })?;
            Beta::rational(num, den)
        } else {
            let value: f64 = text.parse().map_err(|_| {
                Error::InvalidParameter(format!("bad dispersion coefficient `{text}`"))
            })?;
            Beta::float(value)
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Beta::Rational { num, den } => num as f64 / den as f64,
            Beta::Float(x) => x,
        }
    }

    /// Is `sum = 2*beta/3`? Exact for rational coefficients.
    pub fn on_shell(&self, sum: i64) -> bool {
        match *self {
            Beta::Rational { num, den } => 3 * den as i128 * sum as i128 == 2 * num as i128,
            Beta::Float(x) => (sum as f64 - 2.0 * x / 3.0).abs() <= SHELL_TOL,
        }
    }

    /// Distance from `2*beta/3` to the nearest integer.
    pub fn nonres_margin(&self) -> f64 {
        let x = 2.0 * self.value() / 3.0;
        (x - x.round()).abs()
    }

    /// A coefficient is resonant when `2*beta/3` is an integer, i.e. some
    /// frequency shell `n1 + n3 = 2*beta/3` is actually populated.
    pub fn is_resonant(&self) -> bool {
        match *self {
            Beta::Rational { num, den } => (2 * num as i128).rem_euclid(3 * den as i128) == 0,
            Beta::Float(_) => self.nonres_margin() <= SHELL_TOL,
        }
    }

    /// The populated shell `n1 + n3 = 2*beta/3`, if there is one.
    pub fn resonant_shell(&self) -> Option<i64> {
        if self.is_resonant() {
            Some((2.0 * self.value() / 3.0).round() as i64)
        } else {
            None
        }
    }

    pub fn require_nonresonant(&self, context: &'static str) -> Result<()> {
        if self.is_resonant() {
            Err(Error::ResonantBeta {
                context,
                value: 2.0 * self.value() / 3.0,
                margin: self.nonres_margin(),
            })
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Beta::Rational { num, den } if den == 1 => write!(f, "{num}"),
            Beta::Rational { num, den } => write!(f, "{num}/{den}"),
            Beta::Float(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a.max(1)
}

/// Everything a flow needs besides the state itself.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ModelParams {
    /// Second-order dispersion coefficient.
    pub beta: Beta,
    /// Regularity of the Gaussian ensemble the run draws from.
    pub s: f64,
    /// Sobolev exponent the pathwise estimates are stated at.
    pub sigma: f64,
    /// Extra smoothing margin on the twice-gauged side.
    pub epsilon: f64,
    /// Integrator step.
    pub dt: f64,
}

impl ModelParams {
    pub fn new(beta: Beta, s: f64, sigma: f64, epsilon: f64, dt: f64) -> Result<Self> {
        for (name, v) in [("s", s), ("sigma", sigma), ("epsilon", epsilon), ("dt", dt)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
            }
        }
        if dt <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        if epsilon < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "smoothing margin must be nonnegative, got {epsilon}"
            )));
        }
        if sigma >= s - 0.5 {
            return Err(Error::InvalidParameter(format!(
                "support regularity sigma = {sigma} must lie below s - 1/2 = {}",
                s - 0.5
            )));
        }
        Ok(Self {
            beta,
            s,
            sigma,
            epsilon,
            dt,
        })
    }

    /// Sensible defaults for interactive use; every command overrides what it
    /// actually varies.
    pub fn with_beta(beta: Beta) -> Self {
        Self {
            beta,
            s: 0.8,
            sigma: 0.29,
            epsilon: 0.05,
            dt: 1e-3,
        }
    }

    pub fn nonres_margin(&self) -> f64 {
        self.beta.nonres_margin()
    }

    /// The sample-regularity constraint `sigma < s - 1/2`; ensembles drawn at
    /// regularity `s` live in `H^sigma` only below that line.
    pub fn require_sigma_below_sample_regularity(&self) -> Result<()> {
        if self.sigma < self.s - 0.5 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "sigma = {} must lie strictly below s - 1/2 = {}",
                self.sigma,
                self.s - 0.5
            )))
        }
    }
}
