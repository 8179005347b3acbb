//! Eigenpairs of A f = -(p f')' + q f on [0, 1] with Dirichlet-Dirichlet or
//! Neumann-Dirichlet boundary conditions.
//!
//! The operator is discretized with the self-adjoint three-point scheme on two
//! uniform grids (h and h/2). Eigenvalues, boundary traces, eigenfunction
//! samples and projections are Richardson-extrapolated from the pair.

use serde::{Deserialize, Serialize};

use crate::coefficient::CoefficientFunction;
use crate::error::{Error, Result};
use crate::quadrature::{derivative, derivative_left, derivative_right, simpson, simpson_product, Grid};
use crate::tridiagonal::{lowest_eigenpairs, SymTridiag};

pub const DEFAULT_GRID_POINTS: usize = 4001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryDomain {
    /// f(0) = f(1) = 0
    DirichletDirichlet,
    /// f'(0) = f(1) = 0
    NeumannDirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenPair {
    pub index: usize,
    pub lambda: f64,
    /// |extrapolated - fine-grid| eigenvalue difference.
    pub lambda_error: f64,
    /// Samples on the basis grid; empty for modes beyond the retained range.
    #[serde(skip)]
    pub phi: Vec<f64>,
    pub trace0: f64,
    pub dtrace0: f64,
    pub trace1: f64,
    pub dtrace1: f64,
}

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub domain: BoundaryDomain,
    pub grid: Grid,
    pub pairs: Vec<EigenPair>,
    pub p_min: f64,
    pub p_max: f64,
    pub q_max: f64,
    pub warnings: Vec<String>,
    p: CoefficientFunction,
    q: CoefficientFunction,
}

/// Options for [`solve_eigenproblem_with`].
#[derive(Default)]
pub struct SolveOptions<'a> {
    /// Number of leading modes whose samples are kept (default: all).
    pub retain: Option<usize>,
    /// Functions projected on every mode, including modes that are not retained.
    pub projections: Vec<&'a dyn Fn(f64) -> f64>,
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn p(&self) -> &CoefficientFunction {
        &self.p
    }

    pub fn q(&self) -> &CoefficientFunction {
        &self.q
    }

    pub fn lambda(&self, n: usize) -> f64 {
        self.pairs[n - 1].lambda
    }

    /// Bounds pi^2 (n-1)^2 p_* <= lambda_n <= pi^2 n^2 p^* + q^*.
    pub fn band(&self, n: usize) -> (f64, f64) {
        let pi2 = std::f64::consts::PI.powi(2);
        let m = n as f64;
        (
            pi2 * (m - 1.0).powi(2) * self.p_min,
            pi2 * m * m * self.p_max + self.q_max,
        )
    }

    pub fn band_holds(&self, n: usize) -> bool {
        let (lo, hi) = self.band(n);
        let lambda = self.lambda(n);
        let slack = 1e-10 * lambda.abs().max(1.0);
        lambda >= lo - slack && lambda <= hi + slack
    }

    /// Modes whose samples are stored.
    pub fn retained(&self) -> usize {
        self.pairs.iter().take_while(|p| !p.phi.is_empty()).count()
    }

    pub fn max_lambda_error(&self) -> f64 {
        self.pairs.iter().map(|p| p.lambda_error).fold(0.0, f64::max)
    }
}

pub fn solve_eigenproblem(
    p: &CoefficientFunction,
    q: &CoefficientFunction,
    domain: BoundaryDomain,
    n_max: usize,
    grid_points: usize,
) -> Result<SpectralBasis> {
    solve_eigenproblem_with(p, q, domain, n_max, grid_points, &SolveOptions::default()).map(|(basis, _)| basis)
}

/// Solves the eigenproblem and projects the given functions on every mode.
/// Returns the basis and one coefficient list per projected function.
pub fn solve_eigenproblem_with(
    p: &CoefficientFunction,
    q: &CoefficientFunction,
    domain: BoundaryDomain,
    n_max: usize,
    grid_points: usize,
    options: &SolveOptions,
) -> Result<(SpectralBasis, Vec<Vec<f64>>)> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    if grid_points < 9 || grid_points.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "grid_points must be odd and at least 9, got {grid_points}"
        )));
    }
    if n_max * 8 > grid_points {
        return Err(Error::ResolutionTooCoarse {
            n_max,
            grid_points,
            required: 8 * n_max + 1,
        });
    }
    let coarse = Discretization::new(p, q, domain, grid_points - 1)?;
    let fine = Discretization::new(p, q, domain, 2 * (grid_points - 1))?;
    let (p_min, p_max) = fine.p_range();
    let q_max = fine.qn.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut warnings = Vec::new();
    if p.is_tabulated() {
        warnings.push("tabulated p: C^2 smoothness assumed by the trace asymptotics cannot be checked".into());
    }

    let coarse_pairs = coarse.eigenpairs(n_max, |mode| coarse.sinusoid(mode))?;
    let fine_pairs = fine.eigenpairs(n_max, |mode| fine.refine(&coarse_pairs[mode - 1].1))?;

    let retain = options.retain.unwrap_or(n_max).min(n_max);
    let grid = Grid::new(grid_points);
    let fine_grid = Grid::new(2 * grid_points - 1);
    let coarse_samples: Vec<Vec<f64>> = options.projections.iter().map(|f| grid.sample(f)).collect();
    let fine_samples: Vec<Vec<f64>> = options.projections.iter().map(|f| fine_grid.sample(f)).collect();
    let mut projections = vec![Vec::with_capacity(n_max); options.projections.len()];

    let rich = |fine: f64, coarse: f64| (4.0 * fine - coarse) / 3.0;
    let mut pairs = Vec::with_capacity(n_max);
    for (k, ((lc, fc), (lf, ff))) in coarse_pairs.into_iter().zip(fine_pairs).enumerate() {
        let lambda = rich(lf, lc);
        let tc = coarse.traces(&fc);
        let tf = fine.traces(&ff);
        let phi = if k < retain {
            (0..grid_points).map(|i| rich(ff[2 * i], fc[i])).collect()
        } else {
            Vec::new()
        };
        for (j, out) in projections.iter_mut().enumerate() {
            let vc = simpson_product(&coarse_samples[j], &fc, coarse.h);
            let vf = simpson_product(&fine_samples[j], &ff, fine.h);
            out.push(rich(vf, vc));
        }
        pairs.push(EigenPair {
            index: k + 1,
            lambda,
            lambda_error: (lambda - lf).abs(),
            phi,
            trace0: rich(tf[0], tc[0]),
            dtrace0: rich(tf[1], tc[1]),
            trace1: rich(tf[2], tc[2]),
            dtrace1: rich(tf[3], tc[3]),
        });
    }
    for w in pairs.windows(2) {
        if w[1].lambda <= w[0].lambda {
            return Err(Error::EigensolveFailure {
                mode: w[1].index,
                reason: "extrapolated eigenvalues are not increasing".into(),
            });
        }
    }

    Ok((
        SpectralBasis {
            domain,
            grid,
            pairs,
            p_min,
            p_max,
            q_max,
            warnings,
            p: p.clone(),
            q: q.clone(),
        },
        projections,
    ))
}

/// <f, phi_n> by Simpson's rule on the basis grid.
pub fn project(f: &[f64], basis: &SpectralBasis, n: usize) -> Result<f64> {
    if f.len() != basis.grid.points {
        return Err(Error::GridMismatch {
            expected: basis.grid.points,
            got: f.len(),
        });
    }
    let pair = basis.pairs.get(n.wrapping_sub(1)).ok_or(Error::InsufficientModes {
        available: basis.len(),
        required: n,
    })?;
    if pair.phi.is_empty() {
        return Err(Error::InsufficientModes {
            available: basis.retained(),
            required: n,
        });
    }
    Ok(simpson_product(f, &pair.phi, basis.grid.h))
}

/// |sum_{n <= n_terms} lambda_n <f, phi_n>^2 - int p f'^2 + q f^2|.
pub fn energy_identity_residual(f: &[f64], basis: &SpectralBasis, n_terms: usize) -> Result<f64> {
    if f.len() != basis.grid.points {
        return Err(Error::GridMismatch {
            expected: basis.grid.points,
            got: f.len(),
        });
    }
    let h = basis.grid.h;
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let tol = 1e-6 * scale;
    let right = f[f.len() - 1];
    if right.abs() > tol {
        return Err(Error::BoundaryViolation(format!("f(1) = {right:e}")));
    }
    match basis.domain {
        BoundaryDomain::DirichletDirichlet => {
            if f[0].abs() > tol {
                return Err(Error::BoundaryViolation(format!("f(0) = {:e}", f[0])));
            }
        }
        BoundaryDomain::NeumannDirichlet => {
            let d0 = derivative_left(f, h);
            if d0.abs() > 1e-4 * scale.max(1.0) {
                return Err(Error::BoundaryViolation(format!("f'(0) = {d0:e}")));
            }
        }
    }
    let mut modal = 0.0;
    for n in 1..=n_terms {
        let c = project(f, basis, n)?;
        modal += basis.lambda(n) * c * c;
    }
    let df = derivative(f, h);
    let integrand: Vec<f64> = (0..f.len())
        .map(|i| {
            let x = basis.grid.x(i);
            basis.p.eval(x) * df[i] * df[i] + basis.q.eval(x) * f[i] * f[i]
        })
        .collect();
    Ok((modal - simpson(&integrand, h)).abs())
}

/// Three-point self-adjoint discretization on `intervals` uniform cells.
struct Discretization {
    domain: BoundaryDomain,
    intervals: usize,
    h: f64,
    /// p at cell midpoints.
    pm: Vec<f64>,
    /// q at nodes.
    qn: Vec<f64>,
}

impl Discretization {
    fn new(p: &CoefficientFunction, q: &CoefficientFunction, domain: BoundaryDomain, intervals: usize) -> Result<Self> {
        let h = 1.0 / intervals as f64;
        let pm: Vec<f64> = (0..intervals).map(|i| p.eval((i as f64 + 0.5) * h)).collect();
        let qn: Vec<f64> = (0..=intervals).map(|i| q.eval(i as f64 * h)).collect();
        for i in 0..=intervals {
            let x = i as f64 * h;
            let v = p.eval(x);
            if !(v > 0.0) {
                return Err(Error::NonPositiveDiffusion { x, value: v });
            }
        }
        if let Some((i, &v)) = pm.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositiveDiffusion {
                x: (i as f64 + 0.5) * h,
                value: v,
            });
        }
        if let Some((i, &v)) = qn.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NegativeReaction {
                x: i as f64 * h,
                value: v,
            });
        }
        Ok(Self {
            domain,
            intervals,
            h,
            pm,
            qn,
        })
    }

    fn p_range(&self) -> (f64, f64) {
        self.pm.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
    }

    /// First unknown node index.
    fn first(&self) -> usize {
        match self.domain {
            BoundaryDomain::DirichletDirichlet => 1,
            BoundaryDomain::NeumannDirichlet => 0,
        }
    }

    /// Symmetrized matrix W^{-1/2} A W^{-1/2}, W the trapezoid weights.
    fn matrix(&self) -> SymTridiag {
        let n = self.intervals;
        let h2 = self.h * self.h;
        let first = self.first();
        let mut d = Vec::with_capacity(n - first);
        let mut e = Vec::with_capacity(n - first - 1);
        for i in first..n {
            if i == 0 {
                d.push(2.0 * self.pm[0] / h2 + self.qn[0]);
            } else {
                d.push((self.pm[i - 1] + self.pm[i]) / h2 + self.qn[i]);
            }
            if i + 1 < n {
                let off = -self.pm[i] / h2;
                e.push(if i == 0 { std::f64::consts::SQRT_2 * off } else { off });
            }
        }
        SymTridiag::new(d, e)
    }

    /// Nodal values 0..=intervals from a symmetric-form vector.
    fn nodal(&self, g: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.intervals + 1];
        let first = self.first();
        f[first..first + g.len()].copy_from_slice(g);
        if first == 0 {
            f[0] *= std::f64::consts::SQRT_2;
        }
        f
    }

    fn rayleigh(&self, g: &[f64]) -> f64 {
        let f = self.nodal(g);
        let h2 = self.h * self.h;
        let mut energy = 0.0;
        for i in 0..self.intervals {
            let df = f[i + 1] - f[i];
            energy += self.pm[i] * df * df / h2;
        }
        let mut mass = 0.0;
        for (i, (fi, qi)) in f.iter().zip(&self.qn).take(self.intervals).enumerate() {
            let w = if i == 0 { 0.5 } else { 1.0 };
            energy += w * qi * fi * fi;
            mass += w * fi * fi;
        }
        energy / mass
    }

    /// Eigenvalues and L2-normalized nodal eigenvectors with the sign convention
    /// phi(0) > 0 (Neumann-Dirichlet) or phi'(0) > 0 (Dirichlet-Dirichlet).
    fn eigenpairs(&self, count: usize, guess: impl Fn(usize) -> Vec<f64>) -> Result<Vec<(f64, Vec<f64>)>> {
        let t = self.matrix();
        let raw = lowest_eigenpairs(&t, count, |g| self.rayleigh(g), guess)?;
        Ok(raw
            .into_iter()
            .map(|(lambda, g)| {
                let mut f = self.nodal(&g);
                // g is unit in the Euclidean norm, so h * |g|^2 = h.
                let scale = 1.0 / self.h.sqrt();
                let pivot = f[self.first()];
                let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
                f.iter_mut().for_each(|v| *v *= sign * scale);
                (lambda, f)
            })
            .collect())
    }

    /// Symmetric-form vector from nodal values.
    fn unknowns(&self, f: &[f64]) -> Vec<f64> {
        let first = self.first();
        let mut g = f[first..self.intervals].to_vec();
        if first == 0 {
            g[0] /= std::f64::consts::SQRT_2;
        }
        g
    }

    /// Constant-coefficient eigenfunction shape, a starting guess.
    fn sinusoid(&self, mode: usize) -> Vec<f64> {
        let k = match self.domain {
            BoundaryDomain::DirichletDirichlet => mode as f64 * std::f64::consts::PI,
            BoundaryDomain::NeumannDirichlet => (mode as f64 - 0.5) * std::f64::consts::PI,
        };
        let f: Vec<f64> = (0..=self.intervals)
            .map(|i| {
                let x = i as f64 * self.h;
                match self.domain {
                    BoundaryDomain::DirichletDirichlet => (k * x).sin(),
                    BoundaryDomain::NeumannDirichlet => (k * x).cos(),
                }
            })
            .collect();
        self.unknowns(&f)
    }

    /// Linear interpolation of nodal values from the grid with half as many
    /// intervals, as symmetric-form unknowns.
    fn refine(&self, coarse: &[f64]) -> Vec<f64> {
        let f: Vec<f64> = (0..=self.intervals)
            .map(|i| {
                if i % 2 == 0 {
                    coarse[i / 2]
                } else {
                    0.5 * (coarse[i / 2] + coarse[i / 2 + 1])
                }
            })
            .collect();
        self.unknowns(&f)
    }

    /// (phi(0), phi'(0), phi(1), phi'(1)) with the boundary values that are
    /// fixed by the domain set exactly.
    fn traces(&self, f: &[f64]) -> [f64; 4] {
        match self.domain {
            BoundaryDomain::NeumannDirichlet => [f[0], 0.0, 0.0, derivative_right(f, self.h)],
            BoundaryDomain::DirichletDirichlet => [0.0, derivative_left(f, self.h), 0.0, derivative_right(f, self.h)],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};

    fn unit() -> (CoefficientFunction, CoefficientFunction) {
        (CoefficientFunction::constant(1.0), CoefficientFunction::constant(0.0))
    }

    #[test]
    fn neumann_dirichlet_first_mode() {
        let (p, q) = unit();
        let b = solve_eigenproblem(&p, &q, BoundaryDomain::NeumannDirichlet, 5, 401).unwrap();
        assert!((b.lambda(1) - (PI / 2.0).powi(2)).abs() < 1e-9);
        assert!((b.pairs[0].trace0 - SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn dirichlet_dirichlet_second_mode() {
        let (p, q) = unit();
        let b = solve_eigenproblem(&p, &q, BoundaryDomain::DirichletDirichlet, 5, 401).unwrap();
        assert!((b.lambda(2) - 4.0 * PI * PI).abs() < 1e-8 * 4.0 * PI * PI);
        assert!((b.pairs[1].dtrace0 - 2.0 * SQRT_2 * PI).abs() < 1e-6);
        assert!((b.pairs[1].dtrace1 - 2.0 * SQRT_2 * PI).abs() < 1e-6);
    }

    #[test]
    fn resolution_guard_and_positivity() {
        let (p, q) = unit();
        assert!(matches!(
            solve_eigenproblem(&p, &q, BoundaryDomain::NeumannDirichlet, 100, 401),
            Err(Error::ResolutionTooCoarse { .. })
        ));
        let bad = CoefficientFunction::polynomial(vec![1.0, -2.0]).unwrap();
        assert!(matches!(
            solve_eigenproblem(&bad, &q, BoundaryDomain::NeumannDirichlet, 5, 401),
            Err(Error::NonPositiveDiffusion { .. })
        ));
    }

    #[test]
    fn projection_of_minus_x_squared() {
        let (p, q) = unit();
        let b = solve_eigenproblem(&p, &q, BoundaryDomain::NeumannDirichlet, 3, 801).unwrap();
        let f = b.grid.sample(|x| -x * x);
        let exact = -2.0 * SQRT_2 * (PI * PI - 8.0) / PI.powi(3);
        assert!((project(&f, &b, 1).unwrap() - exact).abs() < 1e-9);
        assert!(matches!(project(&f[1..], &b, 1), Err(Error::GridMismatch { .. })));
    }
}
