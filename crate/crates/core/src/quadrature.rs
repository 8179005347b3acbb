//! Uniform-grid quadrature and finite-difference stencils.

use serde::Serialize;

/// Uniform grid on [0, 1] with an odd number of nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub points: usize,
    pub h: f64,
}

impl Grid {
    pub fn new(points: usize) -> Self {
        Self {
            points,
            h: 1.0 / (points - 1) as f64,
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            1.0
        } else {
            i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.x(i)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.points).map(|i| f(self.x(i))).collect()
    }
}

/// Composite Simpson rule for samples on a uniform grid with an even number of
/// intervals.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    debug_assert!(n >= 3 && n % 2 == 1);
    let mut odd = 0.0;
    let mut even = 0.0;
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (values[0] + values[n - 1] + 4.0 * odd + 2.0 * even)
}

/// Simpson rule applied to a pointwise product.
pub fn simpson_product(f: &[f64], g: &[f64], h: f64) -> f64 {
    let n = f.len();
    let mut sum = f[0] * g[0] + f[n - 1] * g[n - 1];
    for i in 1..n - 1 {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f[i] * g[i];
    }
    sum * h / 3.0
}

const ONE_SIDED_D1: [f64; 7] = [
    -49.0 / 20.0,
    6.0,
    -15.0 / 2.0,
    20.0 / 3.0,
    -15.0 / 4.0,
    6.0 / 5.0,
    -1.0 / 6.0,
];

/// Sixth-order one-sided first derivative at the left end.
pub fn derivative_left(values: &[f64], h: f64) -> f64 {
    ONE_SIDED_D1.iter().zip(values).map(|(c, v)| c * v).sum::<f64>() / h
}

/// Sixth-order one-sided first derivative at the right end.
pub fn derivative_right(values: &[f64], h: f64) -> f64 {
    -ONE_SIDED_D1
        .iter()
        .zip(values.iter().rev())
        .map(|(c, v)| c * v)
        .sum::<f64>()
        / h
}

/// First derivative at every node: fourth-order central differences inside,
/// the one-sided stencil family near the ends.
pub fn derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        out[i] = if i >= 2 && i + 2 < n {
            (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2]) / (12.0 * h)
        } else if i < 2 {
            derivative_left(&values[i..], h)
        } else {
            derivative_right(&values[..=i], h)
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let g = Grid::new(11);
        let v = g.sample(|x| 4.0 * x * x * x - x + 2.0);
        assert!((simpson(&v, g.h) - (1.0 - 0.5 + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn one_sided_stencils_are_exact_for_sextics() {
        let g = Grid::new(21);
        let f = |x: f64| x.powi(6) - 2.0 * x.powi(3) + x;
        let df = |x: f64| 6.0 * x.powi(5) - 6.0 * x * x + 1.0;
        let v = g.sample(f);
        assert!((derivative_left(&v, g.h) - df(0.0)).abs() < 1e-9);
        assert!((derivative_right(&v, g.h) - df(1.0)).abs() < 1e-9);
        let d = derivative(&v, g.h);
        assert!((d[10] - df(0.5)).abs() < 1e-3);
    }
}
