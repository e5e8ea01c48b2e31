//! Real 2D discrete curvelet frame computed by frequency wrapping.
//!
//! Frequency plane partition:
//! * radial: tensor Meyer lowpass profiles `Phi_m`, halving per scale; the
//!   coarse block uses `Phi_0`, directional scale `s` uses
//!   `sqrt(Phi_s^2 - Phi_{s-1}^2)` and the finest scale `sqrt(1 - Phi^2)`;
//! * angular: `L_s` Meyer windows equispaced in the cone coordinate
//!   [`window::tau`], i.e. equispaced tangents inside each quadrant of the
//!   normalized frequency plane (rectangular grids keep the same layout).
//!
//! Each windowed wedge is wrapped onto a rectangle that holds its support
//! injectively and inverse-transformed there. Antipodal wedges `l` and
//! `l + L_s/2` share one complex transform; the real and imaginary parts
//! (times `sqrt 2`) are their coefficients. With unitary FFTs the frame is
//! tight with bound 1.

pub mod window;

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2, ArrayViewMut2};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{check_shape, Error, Result};
use crate::fft::{Fft2, PlanCache};
use window::{angular, lowpass, tau};

/// Tiling parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TilingParams {
    /// Number of scales including the coarse one (`>= 2`).
    pub n_scales: usize,
    /// Angles at the second coarsest scale (multiple of 4).
    pub n_angles: usize,
    /// Isotropic finest scale instead of directional wedges.
    pub finest_wavelets: bool,
}

impl Default for TilingParams {
    fn default() -> Self {
        Self {
            n_scales: 4,
            n_angles: 32,
            finest_wavelets: false,
        }
    }
}

impl TilingParams {
    pub fn new(n_scales: usize, n_angles: usize) -> Self {
        Self {
            n_scales,
            n_angles,
            finest_wavelets: false,
        }
    }

    /// Angle count at scale `s` (the coarse scale `0` counts as one).
    pub fn angles_at(&self, s: usize) -> usize {
        if s == 0 || (self.finest_wavelets && s + 1 == self.n_scales) {
            1
        } else {
            self.n_angles << (s / 2)
        }
    }
}

/// Identifies the coefficient layout produced by a tiling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Layout {
    pub dims: (usize, usize),
    pub params: TilingParams,
}

/// One coefficient array inside the flat buffer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub scale: usize,
    pub angle: usize,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// How a block's real values derive from its complex wrapped transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    /// Real part, unit scale (coarse and isotropic blocks).
    Real,
    /// `sqrt 2` times the real part.
    PairReal,
    /// `sqrt 2` times the imaginary part.
    PairImag,
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    /// Flat index in the full frequency grid.
    freq: u32,
    /// Flat index in the wrap rectangle.
    wrap: u32,
    weight: f64,
}

#[derive(Debug)]
struct Unit {
    rows: usize,
    cols: usize,
    entries: Vec<Entry>,
    /// Signed frequency representative of each entry.
    reps: Vec<(i64, i64)>,
    /// Block holding the real part, and for pairs the imaginary part.
    re: usize,
    im: Option<usize>,
}

pub struct Tiling {
    layout: Layout,
    blocks: Arc<[Block]>,
    units: Vec<Unit>,
    plans: PlanCache,
    full: Fft2,
    n_coeffs: usize,
}

impl std::fmt::Debug for Tiling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tiling")
            .field("layout", &self.layout)
            .field("n_blocks", &self.blocks.len())
            .field("n_coeffs", &self.n_coeffs)
            .finish()
    }
}

/// Signed representatives of DFT bin `k` on `n` points (two at Nyquist).
fn reps(k: usize, n: usize) -> ([i64; 2], usize) {
    let k = k as i64;
    let n = n as i64;
    if 2 * k == n {
        ([k, -k], 2)
    } else if 2 * k > n {
        ([k - n, 0], 1)
    } else {
        ([k, 0], 1)
    }
}

impl Tiling {
    pub fn new(dims: (usize, usize), params: TilingParams) -> Result<Self> {
        let (n1, n2) = dims;
        if params.n_scales < 2 {
            return Err(Error::InvalidConfig("tiling needs at least 2 scales".into()));
        }
        if params.n_angles == 0 || params.n_angles % 4 != 0 {
            return Err(Error::InvalidConfig(format!(
                "angle count {} is not a positive multiple of 4",
                params.n_angles
            )));
        }
        // the coarse lowpass must be at least one bin wide on both axes
        let min_dim = 3usize << (params.n_scales - 1);
        if n1.min(n2) < min_dim {
            return Err(Error::InvalidConfig(format!(
                "grid {n1}x{n2} too small for {} scales",
                params.n_scales
            )));
        }
        let j = params.n_scales;
        // lowpass half-widths per level, in bins
        let half = |m: usize, n: usize| n as f64 / (3.0 * (1u64 << (j - 1 - m)) as f64);
        let phi = |m: usize, k1: i64, k2: i64| {
            lowpass(k1 as f64 / half(m, n1)) * lowpass(k2 as f64 / half(m, n2))
        };
        // squared radial window of scale s (symmetric in sign, so any representative)
        let radial2 = |s: usize, k1: i64, k2: i64| -> f64 {
            let v = if s == 0 {
                phi(0, k1, k2).powi(2)
            } else if s + 1 == j {
                1.0 - phi(s - 1, k1, k2).powi(2)
            } else {
                phi(s, k1, k2).powi(2) - phi(s - 1, k1, k2).powi(2)
            };
            v.max(0.0)
        };

        let mut units = Vec::new();
        let mut blocks = Vec::new();
        for s in 0..j {
            // bins touched by this scale's radial window
            let mut ring = Vec::new();
            for k1 in 0..n1 {
                let (r1, c1) = reps(k1, n1);
                for k2 in 0..n2 {
                    let (r2, c2) = reps(k2, n2);
                    let rad = radial2(s, r1[0], r2[0]);
                    if rad > 0.0 {
                        let mut rs = Vec::with_capacity(c1 * c2);
                        for &a in &r1[..c1] {
                            for &b in &r2[..c2] {
                                rs.push((a, b));
                            }
                        }
                        ring.push(((k1 * n2 + k2) as u32, rad, rs));
                    }
                }
            }
            let n_ang = params.angles_at(s);
            if n_ang == 1 {
                let sel: Vec<_> = ring.iter().map(|(f, r, rs)| (*f, r.sqrt(), rs[0])).collect();
                units.push(build_unit(sel, blocks.len(), None));
                blocks.push((s, 0));
                continue;
            }
            let first = blocks.len();
            for a in 0..n_ang {
                blocks.push((s, a));
            }
            for l in 0..n_ang / 2 {
                let mut sel = Vec::new();
                for (f, rad, rs) in &ring {
                    let mut best = (0.0, rs[0]);
                    let mut acc = 0.0;
                    for &(a, b) in rs {
                        let w = angular(tau(a as f64 / n1 as f64, b as f64 / n2 as f64), l, n_ang);
                        acc += w * w;
                        if w > best.0 {
                            best = (w, (a, b));
                        }
                    }
                    let w2 = rad * acc / rs.len() as f64;
                    if w2 > 0.0 {
                        sel.push((*f, w2.sqrt(), best.1));
                    }
                }
                units.push(build_unit(sel, first + l, Some(first + l + n_ang / 2)));
            }
        }

        // block shapes follow their unit
        let mut shapes = vec![(0, 0); blocks.len()];
        for u in &units {
            shapes[u.re] = (u.rows, u.cols);
            if let Some(im) = u.im {
                shapes[im] = (u.rows, u.cols);
            }
        }
        let mut offset = 0;
        let blocks: Vec<Block> = blocks
            .iter()
            .zip(&shapes)
            .map(|(&(scale, angle), &(rows, cols))| {
                let b = Block {
                    scale,
                    angle,
                    rows,
                    cols,
                    offset,
                };
                offset += rows * cols;
                b
            })
            .collect();

        let mut planner = FftPlanner::new();
        let mut plans = PlanCache::default();
        for u in &units {
            if u.rows > 0 {
                plans.insert(&mut planner, u.rows, u.cols);
            }
        }
        Ok(Self {
            layout: Layout { dims, params },
            blocks: blocks.into(),
            units,
            plans,
            full: Fft2::new(&mut planner, n1, n2),
            n_coeffs: offset,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.layout.dims
    }

    pub fn params(&self) -> TilingParams {
        self.layout.params
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Total coefficient count.
    pub fn n_coeffs(&self) -> usize {
        self.n_coeffs
    }

    pub fn zeros(&self) -> CurveletCoeffs {
        CurveletCoeffs {
            data: vec![0.0; self.n_coeffs],
            blocks: Arc::clone(&self.blocks),
            layout: self.layout,
        }
    }

    /// Wraps a flat vector in this tiling's layout.
    pub fn coeffs_from_vec(&self, data: Vec<f64>) -> Result<CurveletCoeffs> {
        check_shape(&[self.n_coeffs], &[data.len()])?;
        Ok(CurveletCoeffs {
            data,
            blocks: Arc::clone(&self.blocks),
            layout: self.layout,
        })
    }

    /// Signed frequencies and window weights defining block `b`, and how its
    /// values are read from the wrapped transform.
    pub fn block_support(&self, b: usize) -> (Part, Vec<(i64, i64, f64)>) {
        let u = self
            .units
            .iter()
            .find(|u| u.re == b || u.im == Some(b))
            .expect("block index out of range");
        let part = match u.im {
            None => Part::Real,
            Some(im) if im == b => Part::PairImag,
            Some(_) => Part::PairReal,
        };
        let support = u
            .entries
            .iter()
            .zip(&u.reps)
            .map(|(e, &(a, c))| (a, c, e.weight))
            .collect();
        (part, support)
    }

    /// Sum of squared windows over all blocks at each frequency bin
    /// (identically one for a tight frame).
    pub fn partition_sum(&self) -> Array2<f64> {
        let (n1, n2) = self.dims();
        let mut acc = Array2::zeros((n1, n2));
        for u in &self.units {
            for e in &u.entries {
                let f = e.freq as usize;
                let (k1, k2) = (f / n2, f % n2);
                let w2 = e.weight * e.weight;
                acc[[k1, k2]] += w2;
                if u.im.is_some() {
                    acc[[(n1 - k1) % n1, (n2 - k2) % n2]] += w2;
                }
            }
        }
        acc
    }

    fn unitary_spectrum(&self, u: ArrayView2<f64>) -> Vec<Complex64> {
        let (n1, n2) = self.dims();
        let mut spec: Vec<Complex64> = u.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.full.forward(&mut spec);
        let s = 1.0 / ((n1 * n2) as f64).sqrt();
        spec.iter_mut().for_each(|v| *v *= s);
        spec
    }

    /// Analysis operator.
    pub fn analyze(&self, u: ArrayView2<f64>) -> Result<CurveletCoeffs> {
        let (n1, n2) = self.dims();
        check_shape(&[n1, n2], &[u.nrows(), u.ncols()])?;
        let spec = self.unitary_spectrum(u);
        let mut out = self.zeros();
        let mut buf = Vec::new();
        for unit in &self.units {
            if unit.rows == 0 {
                continue;
            }
            buf.clear();
            buf.resize(unit.rows * unit.cols, Complex64::default());
            for e in &unit.entries {
                buf[e.wrap as usize] = spec[e.freq as usize] * e.weight;
            }
            self.plans.get(unit.rows, unit.cols).inverse(&mut buf);
            let s = 1.0 / ((unit.rows * unit.cols) as f64).sqrt();
            let re = self.blocks[unit.re].range();
            match unit.im {
                None => {
                    for (o, b) in out.data[re].iter_mut().zip(&buf) {
                        *o = b.re * s;
                    }
                }
                Some(im) => {
                    let im = self.blocks[im].range();
                    for (o, b) in out.data[re].iter_mut().zip(&buf) {
                        *o = b.re * s * SQRT_2;
                    }
                    for (o, b) in out.data[im].iter_mut().zip(&buf) {
                        *o = b.im * s * SQRT_2;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Synthesis operator, the exact adjoint of [`Tiling::analyze`].
    pub fn synthesize(&self, c: &CurveletCoeffs) -> Result<Array2<f64>> {
        if c.layout != self.layout || c.data.len() != self.n_coeffs {
            return Err(Error::TilingMismatch);
        }
        let (n1, n2) = self.dims();
        let mut acc = vec![Complex64::default(); n1 * n2];
        let mut buf = Vec::new();
        for unit in &self.units {
            if unit.rows == 0 {
                continue;
            }
            let re = &c.data[self.blocks[unit.re].range()];
            buf.clear();
            match unit.im {
                None => buf.extend(re.iter().map(|v| Complex64::new(*v, 0.0))),
                Some(im) => {
                    let im = &c.data[self.blocks[im].range()];
                    buf.extend(
                        re.iter()
                            .zip(im)
                            .map(|(a, b)| Complex64::new(a * SQRT_2, b * SQRT_2)),
                    );
                }
            }
            self.plans.get(unit.rows, unit.cols).forward(&mut buf);
            let s = 1.0 / ((unit.rows * unit.cols) as f64).sqrt();
            for e in &unit.entries {
                acc[e.freq as usize] += buf[e.wrap as usize] * (e.weight * s);
            }
        }
        self.full.inverse(&mut acc);
        let s = 1.0 / ((n1 * n2) as f64).sqrt();
        Ok(Array2::from_shape_fn((n1, n2), |(i, j)| acc[i * n2 + j].re * s))
    }

    /// `||u - Psi^T(top-s coefficients of Psi u)|| / ||u||`.
    pub fn best_s_term_error(&self, u: ArrayView2<f64>, s: usize) -> Result<f64> {
        let c = self.analyze(u)?;
        if s > c.len() {
            return Err(Error::Domain(format!("s = {s} exceeds {} coefficients", c.len())));
        }
        let approx = self.synthesize(&c.keep_largest(s))?;
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let err = u
            .iter()
            .zip(&approx)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        Ok(err / norm)
    }
}

/// Builds the wrap geometry for one transform unit from `(freq, weight, rep)`.
fn build_unit(sel: Vec<(u32, f64, (i64, i64))>, re: usize, im: Option<usize>) -> Unit {
    if sel.is_empty() {
        return Unit {
            rows: 0,
            cols: 0,
            entries: Vec::new(),
            reps: Vec::new(),
            re,
            im,
        };
    }
    let extent = |key: &dyn Fn(&(i64, i64)) -> (i64, i64)| {
        // (full extent of the first key, max width of the second within rows)
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        let mut rows: std::collections::BTreeMap<i64, (i64, i64)> = Default::default();
        for (_, _, r) in &sel {
            let (a, b) = key(r);
            lo = lo.min(a);
            hi = hi.max(a);
            let e = rows.entry(a).or_insert((b, b));
            e.0 = e.0.min(b);
            e.1 = e.1.max(b);
        }
        let width = rows.values().map(|(l, h)| h - l + 1).max().unwrap();
        ((hi - lo + 1) as usize, width as usize)
    };
    let (a1, a2) = extent(&|&(x, y)| (x, y));
    let (b2, b1) = extent(&|&(x, y)| (y, x));
    let (rows, cols) = if a1 * a2 <= b1 * b2 { (a1, a2) } else { (b1, b2) };
    let entries = sel
        .iter()
        .map(|&(freq, weight, (k1, k2))| Entry {
            freq,
            wrap: (k1.rem_euclid(rows as i64) as usize * cols + k2.rem_euclid(cols as i64) as usize)
                as u32,
            weight,
        })
        .collect();
    Unit {
        rows,
        cols,
        entries,
        reps: sel.iter().map(|s| s.2).collect(),
        re,
        im,
    }
}

/// Flat coefficient vector tagged with the layout that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveletCoeffs {
    data: Vec<f64>,
    blocks: Arc<[Block]>,
    layout: Layout,
}

impl CurveletCoeffs {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn block(&self, i: usize) -> ArrayView2<'_, f64> {
        let b = self.blocks[i];
        ArrayView2::from_shape((b.rows, b.cols), &self.data[b.range()]).expect("block shape")
    }

    pub fn block_mut(&mut self, i: usize) -> ArrayViewMut2<'_, f64> {
        let b = self.blocks[i];
        ArrayViewMut2::from_shape((b.rows, b.cols), &mut self.data[b.range()]).expect("block shape")
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        if self.layout != other.layout {
            return Err(Error::TilingMismatch);
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    /// Copy keeping the `s` largest magnitudes (ties broken by index).
    pub fn keep_largest(&self, s: usize) -> Self {
        let mut out = self.clone();
        if s >= self.len() {
            return out;
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let key = |i: &usize| self.data[*i].abs();
        idx.select_nth_unstable_by(s, |a, b| key(b).total_cmp(&key(a)).then(a.cmp(b)));
        out.data.iter_mut().for_each(|v| *v = 0.0);
        for &i in &idx[..s] {
            out.data[i] = self.data[i];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_counts_double_every_second_scale() {
        let p = TilingParams::new(6, 16);
        let counts: Vec<_> = (0..6).map(|s| p.angles_at(s)).collect();
        assert_eq!(counts, vec![1, 16, 32, 32, 64, 64]);
        let w = TilingParams {
            finest_wavelets: true,
            ..p
        };
        assert_eq!(w.angles_at(5), 1);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(Tiling::new((64, 64), TilingParams::new(1, 8)).is_err());
        assert!(Tiling::new((64, 64), TilingParams::new(3, 6)).is_err());
        assert!(Tiling::new((8, 8), TilingParams::new(6, 8)).is_err());
    }

    #[test]
    fn zero_in_zero_out() {
        let t = Tiling::new((32, 40), TilingParams::new(3, 8)).unwrap();
        let c = t.analyze(Array2::zeros((32, 40)).view()).unwrap();
        assert!(c.as_slice().iter().all(|v| *v == 0.0));
        assert!(t.synthesize(&t.zeros()).unwrap().iter().all(|v| *v == 0.0));
        assert!(t.analyze(Array2::zeros((32, 41)).view()).is_err());
    }

    #[test]
    fn count_matches_blocks() {
        let t = Tiling::new((48, 80), TilingParams::new(4, 12)).unwrap();
        let sum: usize = t.blocks().iter().map(Block::len).sum();
        assert_eq!(sum, t.n_coeffs());
        assert_eq!(t.zeros().len(), t.n_coeffs());
        assert_eq!(t.blocks().len(), 1 + 12 + 24 + 24);
    }

    #[test]
    fn keep_largest_selects_magnitudes() {
        let t = Tiling::new((32, 32), TilingParams::new(3, 8)).unwrap();
        let mut c = t.zeros();
        c.as_mut_slice()[..4].copy_from_slice(&[0.5, -3.0, 1.0, 2.0]);
        let k = c.keep_largest(2);
        assert_eq!(&k.as_slice()[..4], &[0.0, -3.0, 0.0, 2.0]);
    }
}
