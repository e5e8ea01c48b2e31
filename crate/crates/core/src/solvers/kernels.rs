//! Numerical kernels shared by the reconstruction algorithms.
//!
//! Operators are passed as closures on flat `f64` slices so the same kernels
//! serve dense test matrices and matrix-free transforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_shape, Error, Result};

/// Lower bound on the reweighting damping.
pub const EPS_FLOOR: f64 = 1e-4;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `||a - b|| / ||b||`, or `||a||` when `b` vanishes.
pub(crate) fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let n = norm(b);
    if n > 0.0 {
        d / n
    } else {
        d
    }
}

/// Outcome of an iterative inner solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterInfo {
    pub iterations: usize,
    /// Relative residual at exit.
    pub residual: f64,
    pub converged: bool,
}

/// `sign(y) max(|y| - t, 0)` elementwise.
pub fn soft_threshold(y: &[f64], thresh: &[f64]) -> Result<Vec<f64>> {
    check_shape(&[y.len()], &[thresh.len()])?;
    Ok(y.iter().zip(thresh).map(|(&v, &t)| soft(v, t)).collect())
}

#[inline]
pub(crate) fn soft(v: f64, t: f64) -> f64 {
    let m = v.abs() - t;
    if m > 0.0 {
        m.copysign(v)
    } else {
        0.0
    }
}

/// Reweighting state produced by [`update_weights`].
#[derive(Clone, Debug, PartialEq)]
pub struct WeightState {
    pub lambda: Vec<f64>,
    /// Target sparsity.
    pub s: usize,
    pub epsilon: f64,
}

impl WeightState {
    /// Unit weights.
    pub fn identity(n: usize, s: usize) -> Self {
        Self {
            lambda: vec![1.0; n],
            s,
            epsilon: EPS_FLOOR,
        }
    }
}

/// `Lambda = 1 / (|f| + eps)` with `eps` the `s`-th largest normalized
/// magnitude, floored at `1e-4`. An all-zero `f` gives `eps = 1e-4`.
pub fn update_weights(f: &[f64], s: usize) -> Result<WeightState> {
    if s == 0 || s > f.len() {
        return Err(Error::Domain(format!("sparsity {s} outside 1..={}", f.len())));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite coefficient in reweighting".into()));
    }
    let peak = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let epsilon = if peak > 0.0 {
        let mut mags: Vec<f64> = f.iter().map(|v| v.abs() / peak).collect();
        let (_, rho_s, _) = mags.select_nth_unstable_by(s - 1, |a, b| b.total_cmp(a));
        rho_s.max(EPS_FLOOR)
    } else {
        EPS_FLOOR
    };
    Ok(WeightState {
        lambda: f.iter().map(|v| 1.0 / (v.abs() + epsilon)).collect(),
        s,
        epsilon,
    })
}

/// `(1/mu)(rhs - P rhs / (mu + 1))`, the inverse of `P + mu I` for a projector `P`.
pub fn smw_inverse<F>(mut apply_p: F, mu: f64, rhs: &[f64]) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("mu = {mu} must be positive")));
    }
    let pr = apply_p(rhs)?;
    check_shape(&[rhs.len()], &[pr.len()])?;
    let k = 1.0 / (mu + 1.0);
    Ok(rhs.iter().zip(&pr).map(|(r, p)| (r - k * p) / mu).collect())
}

/// Conjugate gradients for a symmetric positive definite operator.
/// Stops when `||rhs - A x|| <= tol ||rhs||`.
pub fn cg<F>(mut apply: F, rhs: &[f64], x0: Option<&[f64]>, tol: f64, iter_max: usize) -> Result<(Vec<f64>, IterInfo)>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = rhs.len();
    let mut x = match x0 {
        Some(x0) => {
            check_shape(&[n], &[x0.len()])?;
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok((x, IterInfo { iterations: 0, residual: 0.0, converged: true }));
    }
    let ax = apply(&x)?;
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut it = 0;
    while it < iter_max && rr.sqrt() > tol * b_norm {
        let ap = apply(&p)?;
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        it += 1;
    }
    let residual = rr.sqrt() / b_norm;
    Ok((x, IterInfo { iterations: it, residual, converged: residual <= tol }))
}

/// Largest eigenvalue estimate of a symmetric positive semidefinite operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration from a fixed pseudo-random start; stops when the Rayleigh
/// quotient changes by less than `tol` relative.
pub fn power_iteration<F>(mut apply: F, n: usize, tol: f64, iter_max: usize) -> Result<PowerEstimate>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if n == 0 {
        return Err(Error::Domain("power iteration on an empty space".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut value = 0.0;
    for it in 1..=iter_max {
        let y = apply(&x)?;
        check_shape(&[n], &[y.len()])?;
        let next = dot(&x, &y);
        let ny = norm(&y);
        if ny == 0.0 {
            return Ok(PowerEstimate { value: 0.0, iterations: it, converged: true });
        }
        let done = (next - value).abs() <= tol * next.abs();
        value = next;
        if done {
            return Ok(PowerEstimate { value, iterations: it, converged: true });
        }
        x = y.into_iter().map(|v| v / ny).collect();
    }
    Ok(PowerEstimate { value, iterations: iter_max, converged: false })
}

/// CGLS for `min ||A x - rhs||`, started at `x0`. Stops when the
/// normal-equation residual `||A^T (rhs - A x)||` falls below `tol` times its
/// value at `x = 0`.
pub fn cgls<F, G>(
    mut apply_a: F,
    mut apply_at: G,
    rhs: &[f64],
    x0: &[f64],
    tol: f64,
    iter_max: usize,
) -> Result<(Vec<f64>, IterInfo)>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = x0.to_vec();
    let ax = apply_a(&x)?;
    check_shape(&[rhs.len()], &[ax.len()])?;
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut s = apply_at(&r)?;
    check_shape(&[x.len()], &[s.len()])?;
    let reference = norm(&apply_at(rhs)?);
    if reference == 0.0 {
        let x = vec![0.0; x0.len()];
        return Ok((x, IterInfo { iterations: 0, residual: 0.0, converged: true }));
    }
    let mut p = s.clone();
    let mut gamma = dot(&s, &s);
    let mut it = 0;
    while it < iter_max && gamma.sqrt() > tol * reference {
        let q = apply_a(&p)?;
        let alpha = gamma / dot(&q, &q);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= alpha * qi);
        s = apply_at(&r)?;
        let gamma_new = dot(&s, &s);
        let beta = gamma_new / gamma;
        p.iter_mut().zip(&s).for_each(|(pi, si)| *pi = si + beta * *pi);
        gamma = gamma_new;
        it += 1;
    }
    let residual = gamma.sqrt() / reference;
    Ok((x, IterInfo { iterations: it, residual, converged: residual <= tol }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&[1.5, -0.2, -3.0], &[1.0, 0.5, 1.0]).unwrap(), vec![0.5, 0.0, -2.0]);
        assert!(soft_threshold(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn weights_worked_example() {
        let w = update_weights(&[0.5, 0.05, 0.005], 2).unwrap();
        assert!((w.epsilon - 0.1).abs() < 1e-12);
        let expect = [1.0 / 0.6, 1.0 / 0.15, 1.0 / 0.105];
        for (a, b) in w.lambda.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_edge_cases() {
        let w = update_weights(&[0.0; 4], 2).unwrap();
        assert_eq!(w.epsilon, EPS_FLOOR);
        assert!(w.lambda.iter().all(|l| (l - 1e4).abs() < 1e-9));
        let w = update_weights(&[1.0, 1e-6, 1e-7], 2).unwrap();
        assert_eq!(w.epsilon, EPS_FLOOR);
        let w = update_weights(&[-2.0, 0.3], 1).unwrap();
        assert_eq!(w.epsilon, 1.0);
        assert!((w.lambda[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(update_weights(&[1.0], 0).is_err());
        assert!(update_weights(&[1.0], 2).is_err());
        assert!(update_weights(&[f64::NAN], 1).is_err());
    }

    #[test]
    fn smw_eigen_cases() {
        // P projects onto the first coordinate
        let p = |x: &[f64]| Ok(vec![x[0], 0.0]);
        let x = smw_inverse(p, 2.0, &[3.0, 0.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && x[1] == 0.0);
        let x = smw_inverse(p, 2.0, &[0.0, 4.0]).unwrap();
        assert_eq!(x, vec![0.0, 2.0]);
        assert!(smw_inverse(p, 0.0, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn power_iteration_diagonal() {
        let e = power_iteration(|x: &[f64]| Ok(vec![4.0 * x[0], x[1]]), 2, 1e-12, 1000).unwrap();
        assert!(e.converged && (e.value - 4.0).abs() < 1e-9);
        let e = power_iteration(|x: &[f64]| Ok(x.to_vec()), 5, 1e-12, 10).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cgls_zero_rhs() {
        let a = |x: &[f64]| Ok(vec![x[0] + x[1], x[1], 2.0 * x[0]]);
        let at = |y: &[f64]| Ok(vec![y[0] + 2.0 * y[2], y[0] + y[1]]);
        let (x, info) = cgls(a, at, &[0.0; 3], &[1.0, 1.0], 1e-12, 10).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
        assert!(info.converged);
    }
}
