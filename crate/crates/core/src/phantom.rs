//! Procedural vessel phantom: curved tubes with a Gaussian cross-section.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhantomSpec {
    pub dims: (usize, usize),
    pub seed: u64,
    pub vessels: usize,
    /// Gaussian cross-section sigma range in voxels.
    pub radius: (f64, f64),
    pub amplitude: (f64, f64),
    /// Voxels kept at zero along every boundary (at least 1).
    pub margin: usize,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            dims: (42, 172),
            seed: 1,
            vessels: 6,
            radius: (0.7, 1.6),
            amplitude: (0.5, 1.0),
            margin: 2,
        }
    }
}

/// Profile cut-off in units of sigma.
const CUTOFF: f64 = 2.5;

pub fn make_phantom(spec: &PhantomSpec) -> Result<Array2<f64>> {
    let (n1, n2) = spec.dims;
    let m = spec.margin.max(1);
    let (r_lo, r_hi) = spec.radius;
    let (a_lo, a_hi) = spec.amplitude;
    if !(r_lo > 0.0 && r_lo <= r_hi && a_lo > 0.0 && a_lo <= a_hi && a_hi <= 1.0) {
        return Err(Error::InvalidConfig(format!("invalid phantom ranges {spec:?}")));
    }
    let inner = 2 * m + 4;
    if n1 < inner || n2 < inner {
        return Err(Error::InvalidConfig(format!(
            "phantom grid {n1}x{n2} too small for margin {m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let lo = m as f64 + 1.0;
    let (hi1, hi2) = ((n1 - m - 1) as f64 - 1.0, (n2 - m - 1) as f64 - 1.0);
    let clamp = |p: (f64, f64)| (p.0.clamp(lo, hi1), p.1.clamp(lo, hi2));
    let mut img = Array2::<f64>::zeros((n1, n2));
    let floor = (-CUTOFF * CUTOFF / 2.0).exp();

    for _ in 0..spec.vessels {
        let p0 = (rng.random_range(lo..hi1), rng.random_range(lo..hi2));
        let angle = rng.random_range(-0.6..0.6) + if rng.random_bool(0.5) { std::f64::consts::PI } else { 0.0 };
        let len = rng.random_range(0.3..0.8) * n2 as f64;
        let p2 = clamp((p0.0 + len * angle.sin(), p0.1 + len * angle.cos()));
        let bend = rng.random_range(-0.3..0.3) * len;
        let mid = ((p0.0 + p2.0) / 2.0, (p0.1 + p2.1) / 2.0);
        let (dx, dy) = (p2.0 - p0.0, p2.1 - p0.1);
        let norm = dx.hypot(dy).max(1e-9);
        let p1 = clamp((mid.0 - bend * dy / norm, mid.1 + bend * dx / norm));
        let sigma = rng.random_range(r_lo..=r_hi);
        let amp = rng.random_range(a_lo..=a_hi);

        let n_pts = (4.0 * (norm + bend.abs())).ceil() as usize + 2;
        let curve: Vec<(f64, f64)> = (0..=n_pts)
            .map(|i| {
                let t = i as f64 / n_pts as f64;
                let (a, b, c) = ((1.0 - t).powi(2), 2.0 * t * (1.0 - t), t * t);
                (a * p0.0 + b * p1.0 + c * p2.0, a * p0.1 + b * p1.1 + c * p2.1)
            })
            .collect();
        let reach = CUTOFF * sigma;
        for ((r, c), v) in img.indexed_iter_mut() {
            let (y, x) = (r as f64, c as f64);
            let d2 = curve
                .iter()
                .filter(|p| (p.0 - y).abs() <= reach && (p.1 - x).abs() <= reach)
                .map(|p| (p.0 - y).powi(2) + (p.1 - x).powi(2))
                .fold(f64::INFINITY, f64::min);
            if d2 < reach * reach {
                let g = ((-d2 / (2.0 * sigma * sigma)).exp() - floor) / (1.0 - floor);
                *v = v.max(amp * g);
            }
        }
    }
    for ((r, c), v) in img.indexed_iter_mut() {
        if r < m || c < m || r >= n1 - m || c >= n2 - m {
            *v = 0.0;
        }
    }
    Ok(img)
}

/// Fraction of nonzero pixels.
pub fn support_fraction(img: &Array2<f64>) -> f64 {
    img.iter().filter(|v| **v != 0.0).count() as f64 / img.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_phantom_properties() {
        let p = make_phantom(&PhantomSpec::default()).unwrap();
        assert_eq!(p.dim(), (42, 172));
        assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        let f = support_fraction(&p);
        assert!((0.03..=0.25).contains(&f), "support {f}");
        for r in 0..42 {
            assert_eq!(p[[r, 0]], 0.0);
            assert_eq!(p[[r, 171]], 0.0);
        }
        assert!(p.row(0).iter().chain(p.row(41).iter()).all(|v| *v == 0.0));
        assert_eq!(p, make_phantom(&PhantomSpec::default()).unwrap());
    }

    #[test]
    fn no_vessels_is_empty() {
        let spec = PhantomSpec {
            vessels: 0,
            ..Default::default()
        };
        assert!(make_phantom(&spec).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_tiny_grid() {
        let spec = PhantomSpec {
            dims: (5, 50),
            ..Default::default()
        };
        assert!(make_phantom(&spec).is_err());
    }
}
