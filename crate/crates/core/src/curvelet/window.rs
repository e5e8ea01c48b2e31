//! Meyer-type windows and the angular coordinate used by the tiling.

use std::f64::consts::FRAC_PI_2;

/// Meyer transition polynomial: 0 at 0, 1 at 1, `nu(x) + nu(1 - x) = 1`.
pub fn meyer_nu(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x.powi(4) * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x.powi(3))
    }
}

/// Lowpass profile: 1 on `[0, 1]`, smooth decay to 0 on `[1, 2]`.
pub fn lowpass(x: f64) -> f64 {
    transition(x.abs() - 1.0)
}

/// `cos(pi/2 nu(x))`, exactly zero once the transition is complete.
fn transition(x: f64) -> f64 {
    if x >= 1.0 {
        0.0
    } else {
        (FRAC_PI_2 * meyer_nu(x)).cos()
    }
}

/// Angular coordinate in `[0, 8)` of the normalized frequency `(u, v)`.
///
/// The plane is split into four cones: `|v| <= u` maps to `[0, 2)`, then
/// counter-clockwise in steps of 2. Antipodal points differ by exactly 4.
pub fn tau(u: f64, v: f64) -> f64 {
    if u.abs() >= v.abs() {
        if u > 0.0 {
            1.0 + v / u
        } else {
            5.0 + v / u
        }
    } else if v > 0.0 {
        3.0 - u / v
    } else {
        7.0 - u / v
    }
}

/// Angular window of wedge `l` out of `n` (squares sum to one over `l`).
pub fn angular(tau: f64, l: usize, n: usize) -> f64 {
    let h = 8.0 / n as f64;
    let center = (l as f64 + 0.5) * h;
    let mut d = (tau - center).rem_euclid(8.0);
    if d > 4.0 {
        d = 8.0 - d;
    }
    transition(d / h)
}

/// Unit direction of the center of wedge `l` out of `n`, as `(u, v)` with the
/// dominant coordinate equal to `±1`.
pub fn wedge_direction(l: usize, n: usize) -> (f64, f64) {
    let tc = (l as f64 + 0.5) * 8.0 / n as f64;
    match (tc / 2.0).floor() as usize {
        0 => (1.0, tc - 1.0),
        1 => (3.0 - tc, 1.0),
        2 => (-1.0, -(tc - 5.0)),
        _ => (-(7.0 - tc), -1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nu_is_symmetric_transition() {
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((meyer_nu(x) + meyer_nu(1.0 - x) - 1.0).abs() < 1e-13);
        }
        assert_eq!(lowpass(0.7), 1.0);
        assert_eq!(lowpass(2.0), 0.0);
    }

    #[test]
    fn tau_antipodal_shift() {
        for &(u, v) in &[(0.3, 0.1), (0.1, 0.4), (-0.2, 0.05), (0.05, -0.3), (0.2, 0.2)] {
            let d = (tau(-u, -v) - tau(u, v)).rem_euclid(8.0);
            assert!((d - 4.0).abs() < 1e-12, "({u}, {v})");
        }
    }

    #[test]
    fn angular_partition_of_unity() {
        for n in [4, 8, 12, 152] {
            for i in 0..400 {
                let t = i as f64 * 0.02;
                let s: f64 = (0..n).map(|l| angular(t, l, n).powi(2)).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn direction_matches_center() {
        for n in [8, 16, 152] {
            for l in 0..n {
                let (u, v) = wedge_direction(l, n);
                let tc = (l as f64 + 0.5) * 8.0 / n as f64;
                assert!((tau(u, v) - tc).abs() < 1e-12);
            }
        }
    }
}
