//! Scalar coefficient functions on [0, 1].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Repr {
    /// Coefficients ascending in degree.
    Polynomial { coefficients: Vec<f64> },
    /// Samples on the uniform grid x_i = i / (len - 1).
    Tabulated { values: Vec<f64> },
}

/// A coefficient p, q or an initial profile, either polynomial or tabulated on a
/// uniform grid. Tabulated data are interpolated with a natural cubic spline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Repr", into = "Repr")]
pub struct CoefficientFunction {
    repr: Repr,
    // Spline second derivatives at the knots (tabulated only).
    m: Vec<f64>,
}

impl TryFrom<Repr> for CoefficientFunction {
    type Error = Error;

    fn try_from(repr: Repr) -> Result<Self> {
        match repr {
            Repr::Polynomial { coefficients } => Self::polynomial(coefficients),
            Repr::Tabulated { values } => Self::tabulated(values),
        }
    }
}

impl From<CoefficientFunction> for Repr {
    fn from(c: CoefficientFunction) -> Repr {
        c.repr
    }
}

impl CoefficientFunction {
    pub fn constant(c: f64) -> Self {
        Self {
            repr: Repr::Polynomial { coefficients: vec![c] },
            m: Vec::new(),
        }
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("polynomial coefficients must be finite".into()));
        }
        let coefficients = if coefficients.is_empty() {
            vec![0.0]
        } else {
            coefficients
        };
        Ok(Self {
            repr: Repr::Polynomial { coefficients },
            m: Vec::new(),
        })
    }

    /// Samples on a uniform grid over [0, 1]. At least four points are needed so
    /// that the spline derivative is meaningful.
    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        if values.len() < 4 {
            return Err(Error::DerivativeUnavailable(format!(
                "tabulated coefficient needs at least 4 samples, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("tabulated samples must be finite".into()));
        }
        let m = natural_spline_moments(&values);
        Ok(Self {
            repr: Repr::Tabulated { values },
            m,
        })
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.repr, Repr::Tabulated { .. })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c),
            Repr::Tabulated { values } => {
                let (i, t, h) = locate(values.len(), x);
                let (y0, y1) = (values[i], values[i + 1]);
                let (m0, m1) = (self.m[i], self.m[i + 1]);
                let s = 1.0 - t;
                s * y0 + t * y1 + h * h / 6.0 * ((s * s * s - s) * m0 + (t * t * t - t) * m1)
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &c)| acc * x + k as f64 * c),
            Repr::Tabulated { values } => {
                let (i, t, h) = locate(values.len(), x);
                let (y0, y1) = (values[i], values[i + 1]);
                let (m0, m1) = (self.m[i], self.m[i + 1]);
                let s = 1.0 - t;
                (y1 - y0) / h + h / 6.0 * (-(3.0 * s * s - 1.0) * m0 + (3.0 * t * t - 1.0) * m1)
            }
        }
    }

    /// Samples on `points` uniformly spaced nodes of [0, 1].
    pub fn sample(&self, points: usize) -> Vec<f64> {
        let h = 1.0 / (points - 1) as f64;
        (0..points).map(|i| self.eval(i as f64 * h)).collect()
    }
}

fn locate(len: usize, x: f64) -> (usize, f64, f64) {
    let intervals = len - 1;
    let h = 1.0 / intervals as f64;
    let pos = (x.clamp(0.0, 1.0) / h).min(intervals as f64);
    let i = (pos.floor() as usize).min(intervals - 1);
    (i, pos - i as f64, h)
}

fn natural_spline_moments(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let h = 1.0 / (n - 1) as f64;
    let mut m = vec![0.0; n];
    // Interior system: m[i-1] + 4 m[i] + m[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1]) / h^2
    let k = n - 2;
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    for j in 0..k {
        let i = j + 1;
        let rhs = 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h);
        let denom = if j == 0 { 4.0 } else { 4.0 - c[j - 1] };
        c[j] = 1.0 / denom;
        d[j] = if j == 0 { rhs / denom } else { (rhs - d[j - 1]) / denom };
    }
    for j in (0..k).rev() {
        m[j + 1] = if j + 1 < k { d[j] - c[j] * m[j + 2] } else { d[j] };
    }
    m
}
