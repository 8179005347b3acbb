//! Symmetric tridiagonal eigenpairs by Sturm-sequence bisection followed by
//! Rayleigh quotient iteration.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct SymTridiag {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    e2: Vec<f64>,
    norm: f64,
}

impl SymTridiag {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Self {
        assert_eq!(e.len() + 1, d.len());
        let e2 = e.iter().map(|v| v * v).collect();
        let norm = (0..d.len())
            .map(|i| {
                let left = if i > 0 { e[i - 1].abs() } else { 0.0 };
                let right = if i < e.len() { e[i].abs() } else { 0.0 };
                d[i].abs() + left + right
            })
            .fold(0.0, f64::max);
        Self { d, e, e2, norm }
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let tiny = f64::EPSILON * self.norm.max(f64::MIN_POSITIVE);
        let mut count = 0;
        let mut q = self.d[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.d.len() {
            if q.abs() < tiny {
                q = -tiny;
            }
            q = self.d[i] - x - self.e2[i - 1] / q;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.d.len() {
            let left = if i > 0 { self.e[i - 1].abs() } else { 0.0 };
            let right = if i < self.e.len() { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - left - right);
            hi = hi.max(self.d[i] + left + right);
        }
        (lo, hi)
    }

    /// Solves (T - sigma I) y = b in place by Gaussian elimination with partial
    /// pivoting. Exactly zero pivots are perturbed, which is what inverse
    /// iteration wants.
    pub fn solve_shifted_with(&self, sigma: f64, b: &mut [f64], work: &mut Workspace) {
        let n = self.d.len();
        let tiny = f64::EPSILON * self.norm.max(f64::MIN_POSITIVE);
        if n == 1 {
            let piv = self.d[0] - sigma;
            b[0] /= if piv.abs() < tiny { tiny } else { piv };
            return;
        }
        let Workspace { d, dl, du } = work;
        d.clear();
        d.extend(self.d.iter().map(|v| v - sigma));
        dl.clear();
        dl.extend_from_slice(&self.e);
        du.clear();
        du.extend_from_slice(&self.e);
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                d[i + 1] -= fact * du[i];
                b[i + 1] -= fact * b[i];
                dl[i] = 0.0;
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                let temp = d[i + 1];
                d[i + 1] = du[i] - fact * temp;
                if i + 2 < n {
                    dl[i] = du[i + 1];
                    du[i + 1] = -fact * dl[i];
                } else {
                    dl[i] = 0.0;
                }
                du[i] = temp;
                let tb = b[i];
                b[i] = b[i + 1];
                b[i + 1] = tb - fact * b[i + 1];
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        b[n - 1] /= d[n - 1];
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - du[i] * b[i + 1] - dl[i] * b[i + 2]) / d[i];
        }
    }
}

#[derive(Debug, Default)]
pub(crate) struct Workspace {
    d: Vec<f64>,
    dl: Vec<f64>,
    du: Vec<f64>,
}

fn normalize(v: &mut [f64]) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return 0.0;
    }
    let norm = v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt() * scale;
    v.iter_mut().for_each(|x| *x /= norm);
    norm
}

/// Deterministic pseudo-random vector, used to perturb starting guesses so that
/// every eigenvector component is present.
fn start_vector(n: usize, mode: usize) -> Vec<f64> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ (mode as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

/// The lowest `count` eigenpairs. `rayleigh` evaluates the Rayleigh quotient of
/// a unit vector; callers pass a cancellation-free energy form so the returned
/// eigenvalues carry relative rather than `eps * ||T||` accuracy. `guess`
/// supplies an approximate eigenvector for a 1-based mode index.
pub(crate) fn lowest_eigenpairs(
    t: &SymTridiag,
    count: usize,
    rayleigh: impl Fn(&[f64]) -> f64,
    guess: impl Fn(usize) -> Vec<f64>,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = t.len();
    if count > n {
        return Err(Error::InvalidArgument(format!(
            "requested {count} eigenpairs of a {n}x{n} matrix"
        )));
    }
    let (glo, ghi) = t.gershgorin();
    let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(count);
    let mut lo = glo - 1.0 - glo.abs() * 1e-12;
    for k in 0..count {
        let mode = k + 1;
        let start = guess(mode);
        if let Some((lambda, vector)) = verified_guess(t, k, lo, &start, &rayleigh) {
            let previous = if k == 0 { lo } else { out[k - 1].0 };
            out.push((lambda, vector));
            // Lower bracket for the next mode: just above this eigenvalue.
            lo = lambda + separation(t, lambda, previous);
            continue;
        }
        // Upper bracket with at least k + 1 eigenvalues below it.
        let mut hi = match k {
            0 => (lo + 1.0).max(lo + 1e-3 * (ghi - glo)),
            1 => out[0].0 + 3.0 * (out[0].0 - lo).abs().max(1.0),
            _ => {
                let step = out[k - 1].0 - out[k - 2].0;
                out[k - 1].0 + 2.0 * step.max(f64::EPSILON * t.norm)
            }
        };
        let mut widen = (hi - lo).max(1.0);
        while t.sturm_count(hi) < mode {
            hi += widen;
            widen *= 2.0;
            if hi > ghi + widen {
                hi = ghi + 1.0;
                break;
            }
        }
        // Isolate: count(lo) = k, count(hi) = k + 1.
        let mut count_hi = t.sturm_count(hi);
        let mut guard = 0;
        while count_hi != mode {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || guard > 200 {
                return Err(Error::EigensolveFailure {
                    mode,
                    reason: "cannot isolate eigenvalue (cluster below resolution)".into(),
                });
            }
            let c = t.sturm_count(mid);
            if c <= k {
                lo = mid;
            } else {
                hi = mid;
                count_hi = c;
            }
            guard += 1;
        }
        // Shrink the isolating bracket so the starting shift is well separated.
        for _ in 0..3 {
            let mid = 0.5 * (lo + hi);
            if t.sturm_count(mid) <= k {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (lambda, vector) = rayleigh_iteration(t, lo, hi, mode, &rayleigh, start)?;
        out.push((lambda, vector));
        // The next mode's lower bracket: count(hi) = mode.
        lo = hi;
    }
    Ok(out)
}

fn separation(t: &SymTridiag, lambda: f64, previous: f64) -> f64 {
    (1e-3 * (lambda - previous).abs()).max(1e3 * f64::EPSILON * t.norm)
}

/// Rayleigh quotient iteration from the guess alone, accepted only if Sturm
/// counts just below and above the result confirm it is eigenvalue k + 1.
fn verified_guess(
    t: &SymTridiag,
    k: usize,
    lo: f64,
    start: &[f64],
    rayleigh: &impl Fn(&[f64]) -> f64,
) -> Option<(f64, Vec<f64>)> {
    if start.len() != t.len() {
        return None;
    }
    let mut v = start.to_vec();
    if normalize(&mut v) == 0.0 {
        return None;
    }
    let (lambda, v) = rayleigh_iteration(t, lo, f64::INFINITY, k + 1, rayleigh, v).ok()?;
    let delta = separation(t, lambda, lo);
    if lambda - delta <= lo {
        return None;
    }
    (t.sturm_count(lambda - delta) == k && t.sturm_count(lambda + delta) == k + 1).then_some((lambda, v))
}

fn rayleigh_iteration(
    t: &SymTridiag,
    mut lo: f64,
    mut hi: f64,
    mode: usize,
    rayleigh: &impl Fn(&[f64]) -> f64,
    guess: Vec<f64>,
) -> Result<(f64, Vec<f64>)> {
    let mut v = start_vector(t.len(), mode);
    normalize(&mut v);
    if guess.len() == v.len() {
        let mut g = guess;
        if normalize(&mut g) > 0.0 {
            v.iter_mut().zip(&g).for_each(|(a, b)| *a = b + 1e-3 * *a);
            normalize(&mut v);
        }
    }
    let mut sigma = if hi.is_finite() { 0.5 * (lo + hi) } else { rayleigh(&v) };
    let mut previous = f64::NAN;
    let mut finishing = false;
    let mut work = Workspace::default();
    let mut y = vec![0.0; v.len()];
    for _ in 0..40 {
        y.copy_from_slice(&v);
        t.solve_shifted_with(sigma, &mut y, &mut work);
        if normalize(&mut y) == 0.0 {
            return Err(Error::EigensolveFailure {
                mode,
                reason: "inverse iteration produced a degenerate vector".into(),
            });
        }
        std::mem::swap(&mut v, &mut y);
        let lambda = rayleigh(&v);
        let inside = lambda >= lo && lambda <= hi;
        if inside {
            sigma = lambda;
        } else if hi.is_finite() {
            // A neighbour dominates: tighten the isolating bracket instead.
            let mid = 0.5 * (lo + hi);
            if t.sturm_count(mid) < mode {
                lo = mid;
            } else {
                hi = mid;
            }
            sigma = 0.5 * (lo + hi);
        }
        if finishing && inside {
            return Ok((lambda, v));
        }
        // Cubic convergence: one more sweep after a small step reaches roundoff.
        finishing = inside && (lambda - previous).abs() <= 1e-9 * lambda.abs().max(1e-300);
        previous = lambda;
    }
    if previous >= lo && previous <= hi {
        // Converged to within a few ulps oscillation.
        return Ok((previous, v));
    }
    Err(Error::EigensolveFailure {
        mode,
        reason: format!("Rayleigh quotient {previous} left the bracket [{lo}, {hi}]"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn dense(t: &SymTridiag) -> DMatrix<f64> {
        let n = t.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = t.d[i];
            if i + 1 < n {
                m[(i, i + 1)] = t.e[i];
                m[(i + 1, i)] = t.e[i];
            }
        }
        m
    }

    fn plain_rayleigh(t: &SymTridiag) -> impl Fn(&[f64]) -> f64 + '_ {
        move |v: &[f64]| {
            let n = v.len();
            (0..n)
                .map(|i| {
                    let mut tv = t.d[i] * v[i];
                    if i > 0 {
                        tv += t.e[i - 1] * v[i - 1];
                    }
                    if i + 1 < n {
                        tv += t.e[i] * v[i + 1];
                    }
                    v[i] * tv
                })
                .sum()
        }
    }

    #[test]
    fn shifted_solve_matches_dense() {
        let t = SymTridiag::new(vec![0.1, 3.0, -1.0, 2.0, 5.0], vec![2.0, 1.0, 4.0, -0.5]);
        let b = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let mut y = b.clone();
        t.solve_shifted_with(0.3, &mut y, &mut Workspace::default());
        let m = dense(&t) - DMatrix::identity(5, 5) * 0.3;
        let r = &m * nalgebra::DVector::from_vec(y) - nalgebra::DVector::from_vec(b);
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn laplacian_eigenvalues() {
        let n = 50;
        let t = SymTridiag::new(vec![2.0; n], vec![-1.0; n - 1]);
        let pairs = lowest_eigenpairs(&t, 10, plain_rayleigh(&t), |_| Vec::new()).unwrap();
        for (k, (lambda, _)) in pairs.iter().enumerate() {
            let theta = (k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64;
            let exact = 2.0 - 2.0 * theta.cos();
            assert!((lambda - exact).abs() < 1e-13, "{k}: {lambda} vs {exact}");
        }
    }

    proptest! {
        #[test]
        fn agrees_with_dense_eigensolver(
            d in prop::collection::vec(-5.0f64..5.0, 2..12),
            seed in prop::collection::vec(0.1f64..3.0, 11),
        ) {
            let n = d.len();
            let e: Vec<f64> = seed[..n - 1].to_vec();
            let t = SymTridiag::new(d, e);
            let mut reference: Vec<f64> = dense(&t).symmetric_eigen().eigenvalues.iter().copied().collect();
            reference.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let pairs = lowest_eigenpairs(&t, n, plain_rayleigh(&t), |_| Vec::new()).unwrap();
            for (k, (lambda, v)) in pairs.iter().enumerate() {
                prop_assert!((lambda - reference[k]).abs() < 1e-9 * (1.0 + reference[k].abs()));
                let norm: f64 = v.iter().map(|x| x * x).sum();
                prop_assert!((norm - 1.0).abs() < 1e-12);
            }
        }
    }
}
