use std::f64::consts::PI;

use ndarray::Array2;
use patcs::curvelet::{Part, Tiling, TilingParams};
use patcs::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

fn random(rng: &mut ChaCha8Rng, dims: (usize, usize)) -> Array2<f64> {
    Array2::from_shape_fn(dims, |_| rng.random_range(-1.0..1.0))
}

fn norm(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[test]
fn partition_of_unity() {
    for (dims, j, l) in [
        ((32, 32), 3, 8),
        ((33, 47), 3, 12),
        ((64, 48), 4, 16),
        ((42, 172), 4, 32),
        ((591, 172), 4, 152),
    ] {
        for wav in [false, true] {
            let p = TilingParams {
                n_scales: j,
                n_angles: l,
                finest_wavelets: wav,
            };
            let t = Tiling::new(dims, p).unwrap();
            let dev = t
                .partition_sum()
                .iter()
                .map(|v| (v - 1.0).abs())
                .fold(0.0, f64::max);
            assert!(dev <= 1e-10, "{dims:?} {p:?}: {dev:e}");
        }
    }
}

#[test]
fn isometry_and_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (dims, j, l, wav) in [
        ((64, 64), 4, 16, false),
        ((50, 70), 3, 8, false),
        ((45, 96), 4, 12, true),
    ] {
        let t = Tiling::new(
            dims,
            TilingParams {
                n_scales: j,
                n_angles: l,
                finest_wavelets: wav,
            },
        )
        .unwrap();
        for _ in 0..3 {
            let u = random(&mut rng, dims);
            let c = t.analyze(u.view()).unwrap();
            assert!((c.norm() / norm(&u) - 1.0).abs() <= 1e-10);
            let back = t.synthesize(&c).unwrap();
            assert!(norm(&(&back - &u)) <= 1e-10 * norm(&u));
        }
    }
}

#[test]
fn matches_naive_dft_oracle() {
    let (n1, n2) = (32usize, 32usize);
    let t = Tiling::new((n1, n2), TilingParams::new(3, 8)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = random(&mut rng, (n1, n2));
    let c = t.analyze(u.view()).unwrap();

    let mut uh = vec![Complex64::default(); n1 * n2];
    for k1 in 0..n1 {
        for k2 in 0..n2 {
            let mut s = Complex64::default();
            for ((a, b), v) in u.indexed_iter() {
                let ph = -2.0 * PI * ((k1 * a) as f64 / n1 as f64 + (k2 * b) as f64 / n2 as f64);
                s += Complex64::from_polar(*v, ph);
            }
            uh[k1 * n2 + k2] = s / ((n1 * n2) as f64).sqrt();
        }
    }

    let mut worst: f64 = 0.0;
    for (bi, blk) in t.blocks().iter().enumerate() {
        let (part, support) = t.block_support(bi);
        let got = c.block(bi);
        for a1 in 0..blk.rows {
            for a2 in 0..blk.cols {
                let mut x = Complex64::default();
                for &(k1, k2, w) in &support {
                    let f = k1.rem_euclid(n1 as i64) as usize * n2 + k2.rem_euclid(n2 as i64) as usize;
                    let ph = 2.0
                        * PI
                        * (k1 as f64 * a1 as f64 / blk.rows as f64
                            + k2 as f64 * a2 as f64 / blk.cols as f64);
                    x += uh[f] * w * Complex64::from_polar(1.0, ph);
                }
                x /= ((blk.rows * blk.cols) as f64).sqrt();
                let want = match part {
                    Part::Real => x.re,
                    Part::PairReal => x.re * 2f64.sqrt(),
                    Part::PairImag => x.im * 2f64.sqrt(),
                };
                worst = worst.max((want - got[[a1, a2]]).abs());
            }
        }
    }
    assert!(worst <= 1e-8 * c.norm(), "oracle gap {worst:e}");
}

#[test]
fn adjoint_dot_test() {
    let dims = (40, 56);
    let t = Tiling::new(dims, TilingParams::new(3, 12)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let u = random(&mut rng, dims);
        let v: Vec<f64> = (0..t.n_coeffs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v = t.coeffs_from_vec(v).unwrap();
        let lhs = t.analyze(u.view()).unwrap().dot(&v).unwrap();
        let sv = t.synthesize(&v).unwrap();
        let rhs: f64 = u.iter().zip(&sv).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() <= 1e-10 * norm(&u) * v.norm());
    }
}

#[test]
fn coarse_energy_is_shift_invariant() {
    let dims = (48, 48);
    let t = Tiling::new(dims, TilingParams::new(3, 8)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let u = random(&mut rng, dims);
    let shifted = Array2::from_shape_fn(dims, |(i, j)| u[[(i + 5) % 48, (j + 17) % 48]]);
    let e = |x: &Array2<f64>| {
        let c = t.analyze(x.view()).unwrap();
        c.block(0).iter().map(|v| v * v).sum::<f64>()
    };
    assert!((e(&u) - e(&shifted)).abs() <= 1e-12 * e(&u));
    // linearity
    let a = t.analyze(u.view()).unwrap();
    let b = t.analyze((&u * 3.0).view()).unwrap();
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        assert!((3.0 * x - y).abs() <= 1e-12);
    }
}

#[test]
fn best_s_term_limits() {
    let dims = (32, 48);
    let t = Tiling::new(dims, TilingParams::new(3, 8)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u = random(&mut rng, dims);
    assert!(t.best_s_term_error(u.view(), t.n_coeffs()).unwrap() <= 1e-6);
    assert_eq!(t.best_s_term_error(u.view(), 0).unwrap(), 1.0);
    let mid = t.best_s_term_error(u.view(), t.n_coeffs() / 2).unwrap();
    assert!(mid > 0.0 && mid < 1.0);
    assert!(matches!(
        t.best_s_term_error(u.view(), t.n_coeffs() + 1),
        Err(Error::Domain(_))
    ));
}

#[test]
fn mismatched_coefficients_rejected() {
    let a = Tiling::new((32, 32), TilingParams::new(3, 8)).unwrap();
    let b = Tiling::new((32, 32), TilingParams::new(3, 12)).unwrap();
    assert!(matches!(a.synthesize(&b.zeros()), Err(Error::TilingMismatch)));
}

#[test]
fn redundancy_is_bounded() {
    for (dims, l) in [((128, 128), 32), ((42, 172), 32), ((591, 172), 152)] {
        let t = Tiling::new(dims, TilingParams::new(4, l)).unwrap();
        let r = t.n_coeffs() as f64 / (dims.0 * dims.1) as f64;
        assert!((1.0..5.0).contains(&r), "{dims:?}: {r}");
    }
}
