//! Restriction of data-domain curvelets to the bow-tie range of the
//! planar-sensor forward operator.
//!
//! Data arrays are `n_t x n_sensor`, so the first frequency axis is temporal.
//! A wedge is classified by its center direction `(u, v)` in normalized
//! frequency: the data-domain wavefront angle is
//! `beta = atan2(v, u / c_v)` and the wedge is in range when `beta` lies
//! within `theta_w` of `0` or `pi` (boundary included).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use ndarray::{Array2, ArrayView2};

use crate::curvelet::window::wedge_direction;
use crate::curvelet::{CurveletCoeffs, Layout, Tiling};
use crate::error::{Error, Result};

/// Frequency cone of a wedge. `E`/`W` are dominated by temporal frequency,
/// `N`/`S` by detector frequency.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quadrant {
    E,
    N,
    W,
    S,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WedgeAngle {
    pub block: usize,
    pub scale: usize,
    pub angle: usize,
    pub quadrant: Quadrant,
    /// Signed index `l` in `-L/8 + 1 ..= L/8` within the quadrant.
    pub l: i64,
    /// Angle relative to the quadrant axis.
    pub beta_hat: f64,
    /// Global data-domain angle in `(-pi, pi]`.
    pub beta: f64,
    pub in_range: bool,
}

#[derive(Clone, Debug)]
pub struct WedgeSpec {
    layout: Layout,
    cv: f64,
    theta_w: f64,
    angles: Vec<WedgeAngle>,
    keep: Vec<bool>,
}

/// Wedge classification with the full bow-tie half-angle `pi/4`.
pub fn discrete_angles(tiling: &Tiling, cv: f64) -> Result<WedgeSpec> {
    WedgeSpec::new(tiling, cv, FRAC_PI_4)
}

impl WedgeSpec {
    pub fn new(tiling: &Tiling, cv: f64, theta_w: f64) -> Result<Self> {
        if !(cv > 0.0 && cv <= 1.0) {
            return Err(Error::Domain(format!("c_v = {cv} outside (0, 1]")));
        }
        if !(theta_w > 0.0 && theta_w <= FRAC_PI_2) {
            return Err(Error::Domain(format!("theta_w = {theta_w} outside (0, pi/2]")));
        }
        let params = tiling.params();
        let mut angles = Vec::new();
        let mut keep = vec![true; tiling.blocks().len()];
        for (bi, blk) in tiling.blocks().iter().enumerate() {
            let n = params.angles_at(blk.scale);
            if n == 1 {
                continue;
            }
            let a = angle_of(blk.angle, n, cv, theta_w);
            let w = WedgeAngle {
                block: bi,
                scale: blk.scale,
                angle: blk.angle,
                ..a
            };
            keep[bi] = w.in_range;
            angles.push(w);
        }
        Ok(Self {
            layout: tiling.layout(),
            cv,
            theta_w,
            angles,
            keep,
        })
    }

    pub fn cv(&self) -> f64 {
        self.cv
    }

    pub fn theta_w(&self) -> f64 {
        self.theta_w
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Directional wedges in block order.
    pub fn angles(&self) -> &[WedgeAngle] {
        &self.angles
    }

    /// Per-block membership (coarse and isotropic blocks always kept).
    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    /// `(in range, total)` directional wedges at `scale`.
    pub fn count(&self, scale: usize) -> (usize, usize) {
        let at: Vec<_> = self.angles.iter().filter(|a| a.scale == scale).collect();
        (at.iter().filter(|a| a.in_range).count(), at.len())
    }

    fn check(&self, c: &CurveletCoeffs) -> Result<()> {
        if c.layout() != self.layout {
            return Err(Error::TilingMismatch);
        }
        Ok(())
    }

    /// Energy of the out-of-range coefficients.
    pub fn out_of_range_energy(&self, c: &CurveletCoeffs) -> Result<f64> {
        self.check(c)?;
        Ok(c.blocks()
            .iter()
            .zip(&self.keep)
            .filter(|(_, k)| !**k)
            .map(|(b, _)| c.as_slice()[b.range()].iter().map(|v| v * v).sum::<f64>())
            .sum())
    }
}

fn angle_of(angle: usize, n: usize, cv: f64, theta_w: f64) -> WedgeAngle {
    let (u, v) = wedge_direction(angle, n);
    let per = n / 4;
    let q = angle / per;
    let l = (angle % per) as i64 - (n / 8) as i64 + 1;
    let (quadrant, beta_hat) = match q {
        0 => (Quadrant::E, (cv * v / u).atan()),
        1 => (Quadrant::N, (u / v / cv).atan()),
        2 => (Quadrant::W, (cv * v / u).atan()),
        _ => (Quadrant::S, (u / v / cv).atan()),
    };
    let beta = v.atan2(u / cv);
    let off_axis = beta.abs().min(PI - beta.abs());
    WedgeAngle {
        block: 0,
        scale: 0,
        angle,
        quadrant,
        l,
        beta_hat,
        beta,
        in_range: off_axis <= theta_w + 1e-12,
    }
}

/// Zeroes out-of-range wedges in place.
pub fn project_range_in_place(c: &mut CurveletCoeffs, spec: &WedgeSpec) -> Result<()> {
    spec.check(c)?;
    let blocks: Vec<_> = c.blocks().to_vec();
    let data = c.as_mut_slice();
    for (b, k) in blocks.iter().zip(&spec.keep) {
        if !k {
            data[b.range()].iter_mut().for_each(|v| *v = 0.0);
        }
    }
    Ok(())
}

/// Orthogonal projection onto the in-range wedges.
pub fn project_range(c: &CurveletCoeffs, spec: &WedgeSpec) -> Result<CurveletCoeffs> {
    let mut out = c.clone();
    project_range_in_place(&mut out, spec)?;
    Ok(out)
}

pub fn analyze_wedge(tiling: &Tiling, spec: &WedgeSpec, u: ArrayView2<f64>) -> Result<CurveletCoeffs> {
    let mut c = tiling.analyze(u)?;
    project_range_in_place(&mut c, spec)?;
    Ok(c)
}

pub fn synthesize_wedge(tiling: &Tiling, spec: &WedgeSpec, c: &CurveletCoeffs) -> Result<Array2<f64>> {
    tiling.synthesize(&project_range(c, spec)?)
}
