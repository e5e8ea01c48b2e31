//! Spectral wave propagation in a homogeneous medium with a line detector.
//!
//! The image is embedded in a zero-padded periodic grid whose first row is the
//! detector. The initial pressure is mirrored evenly about the detector row
//! (planar-sensor half-space symmetry), so the field stays even in depth for
//! every operator below.
//!
//! In Fourier space the zero-velocity solution obeys the exact two-step
//! recursion `p^{n+1} = 2 cos(c h_t |k|) p^n - p^{n-1}`, `p^1 = cos(c h_t |k|) p^0`.
//! Because the detector is a single row, the map from one laterally
//! Fourier-transformed image column to the detector trace is a small real
//! matrix per lateral wavenumber; those matrices are tabulated once from the
//! recursion and reused by both [`Propagator::forward`] and its exact
//! transpose [`Propagator::adjoint`].

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::fft::{next_fast_len, Fft2};
use crate::grid::{AcousticConfig, DataField, ImageField};

pub struct Propagator {
    cfg: AcousticConfig,
    /// Padded grid (rows = depth, cols = lateral).
    rows: usize,
    cols: usize,
    /// Index of the detector row in the padded grid.
    sensor_row: usize,
    /// `cos(c h_t |k|)` on the padded grid, row-major.
    cos_table: Vec<f64>,
    /// Per |lateral wavenumber|: `n_t x n_perp` detector response, row-major.
    transfer: Vec<Vec<f64>>,
    lat_fwd: Arc<dyn Fft<f64>>,
    lat_inv: Arc<dyn Fft<f64>>,
    fft2: Fft2,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator")
            .field("cfg", &self.cfg)
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish_non_exhaustive()
    }
}

impl Propagator {
    /// Padding sized so that no periodic image of the source reaches the
    /// detector within the record.
    pub fn new(cfg: &AcousticConfig) -> Result<Self> {
        cfg.validate()?;
        let reach = travel_voxels(cfg).ceil() as usize;
        let rows = next_fast_len(cfg.n_perp + reach + 1);
        let cols = next_fast_len(cfg.n_sensor + reach + 1);
        Self::with_grid(cfg, rows, cols)
    }

    /// Explicit padding below and beside the image. Sources whose wrapped
    /// copies would reach the detector are rejected at application time.
    pub fn with_padding(cfg: &AcousticConfig, pad_rows: usize, pad_cols: usize) -> Result<Self> {
        cfg.validate()?;
        Self::with_grid(cfg, cfg.n_perp + pad_rows, cfg.n_sensor + pad_cols)
    }

    fn with_grid(cfg: &AcousticConfig, rows: usize, cols: usize) -> Result<Self> {
        if rows < 2 * cfg.n_perp {
            return Err(Error::InvalidConfig(format!(
                "padded depth {rows} cannot hold the image and its mirror ({} rows)",
                cfg.n_perp
            )));
        }
        let cv = cfg.cv();
        let mut cos_table = vec![0.0; rows * cols];
        for kr in 0..rows {
            let fr = signed_freq(kr, rows);
            for kc in 0..cols {
                let fc = signed_freq(kc, cols);
                cos_table[kr * cols + kc] = (2.0 * PI * cv * fr.hypot(fc)).cos();
            }
        }
        let transfer = build_transfer(cfg, rows, cols);
        let mut planner = FftPlanner::new();
        Ok(Self {
            cfg: *cfg,
            rows,
            cols,
            sensor_row: 0,
            cos_table,
            transfer,
            lat_fwd: planner.plan_fft_forward(cols),
            lat_inv: planner.plan_fft_inverse(cols),
            fft2: Fft2::new(&mut planner, rows, cols),
        })
    }

    pub fn config(&self) -> &AcousticConfig {
        &self.cfg
    }

    /// Padded grid shape.
    pub fn padded_dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn pad(&self) -> (usize, usize) {
        (self.rows - self.cfg.n_perp, self.cols - self.cfg.n_sensor)
    }

    pub fn sensor_row(&self) -> usize {
        self.sensor_row
    }

    pub fn n_t(&self) -> usize {
        self.cfg.n_t
    }

    pub fn cos_table(&self) -> &[f64] {
        &self.cos_table
    }

    fn check_support(&self, p0: &Array2<f64>) -> Result<()> {
        let reach = travel_voxels(&self.cfg);
        let (n_perp, n_s) = p0.dim();
        let (mut r_max, mut c_min, mut c_max) = (None::<usize>, usize::MAX, 0usize);
        for ((r, c), v) in p0.indexed_iter() {
            if *v != 0.0 {
                r_max = Some(r_max.map_or(r, |m| m.max(r)));
                c_min = c_min.min(c);
                c_max = c_max.max(c);
            }
        }
        let Some(r_max) = r_max else { return Ok(()) };
        let depth_gap = (self.rows - r_max) as f64;
        let lat_gap = (self.cols - c_max.max(n_s - 1 - c_min)) as f64;
        if depth_gap <= reach || lat_gap <= reach {
            return Err(Error::WrapAround(format!(
                "support rows 0..={r_max} of {n_perp}, cols {c_min}..={c_max}; \
                 padded grid {}x{} leaves gaps ({depth_gap}, {lat_gap}) <= travel {reach:.1}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    /// Detector traces `g(t_n, x_s)` for `n = 0..n_t`.
    pub fn forward(&self, p0: &ImageField) -> Result<DataField> {
        let cfg = &self.cfg;
        p0.check_dims(cfg.image_dims())?;
        self.check_support(&p0.values)?;
        let (n_perp, n_s, n_t, pc) = (cfg.n_perp, cfg.n_sensor, cfg.n_t, self.cols);

        // lateral spectra of every image row
        let mut spec = vec![Complex64::default(); n_perp * pc];
        for r in 0..n_perp {
            let row = &mut spec[r * pc..(r + 1) * pc];
            for (dst, v) in row.iter_mut().zip(p0.values.row(r)) {
                *dst = Complex64::new(*v, 0.0);
            }
            self.lat_fwd.process(row);
        }

        let mut out = vec![Complex64::default(); n_t * pc];
        let mut col = vec![Complex64::default(); n_perp];
        for kc in 0..=pc / 2 {
            let m = &self.transfer[kc];
            for (r, c) in col.iter_mut().enumerate() {
                *c = spec[r * pc + kc];
            }
            for n in 0..n_t {
                let w = &m[n * n_perp..(n + 1) * n_perp];
                let mut acc = Complex64::default();
                for (a, b) in w.iter().zip(&col) {
                    acc += b * a;
                }
                out[n * pc + kc] = acc;
                if kc != 0 && 2 * kc != pc {
                    out[n * pc + pc - kc] = acc.conj();
                }
            }
        }

        let scale = 1.0 / pc as f64;
        let mut g = Array2::zeros((n_t, n_s));
        for n in 0..n_t {
            let row = &mut out[n * pc..(n + 1) * pc];
            self.lat_inv.process(row);
            for s in 0..n_s {
                g[[n, s]] = row[s].re * scale;
            }
        }
        Ok(DataField {
            values: g,
            dt: cfg.h_t,
            cv: cfg.cv(),
        })
    }

    /// Exact transpose of [`Propagator::forward`].
    pub fn adjoint(&self, g: &DataField) -> Result<ImageField> {
        let cfg = &self.cfg;
        g.check_dims(cfg.data_dims())?;
        let (n_perp, n_s, n_t, pc) = (cfg.n_perp, cfg.n_sensor, cfg.n_t, self.cols);

        let scale = 1.0 / pc as f64;
        let mut spec = vec![Complex64::default(); n_t * pc];
        for n in 0..n_t {
            let row = &mut spec[n * pc..(n + 1) * pc];
            for (dst, v) in row.iter_mut().zip(g.values.row(n)) {
                *dst = Complex64::new(*v * scale, 0.0);
            }
            self.lat_fwd.process(row);
        }

        let mut img = vec![Complex64::default(); n_perp * pc];
        let mut acc = vec![Complex64::default(); n_perp];
        for kc in 0..=pc / 2 {
            let m = &self.transfer[kc];
            acc.iter_mut().for_each(|a| *a = Complex64::default());
            for n in 0..n_t {
                let gv = spec[n * pc + kc];
                let w = &m[n * n_perp..(n + 1) * n_perp];
                for (a, &wr) in acc.iter_mut().zip(w) {
                    *a += gv * wr;
                }
            }
            for (r, a) in acc.iter().enumerate() {
                img[r * pc + kc] = *a;
                if kc != 0 && 2 * kc != pc {
                    img[r * pc + pc - kc] = a.conj();
                }
            }
        }

        let mut p = Array2::zeros((n_perp, n_s));
        for r in 0..n_perp {
            let row = &mut img[r * pc..(r + 1) * pc];
            self.lat_inv.process(row);
            for s in 0..n_s {
                p[[r, s]] = row[s].re;
            }
        }
        Ok(ImageField {
            values: p,
            spacing: cfg.h_x,
        })
    }

    /// Time reversal with the detector row clamped to the reversed traces.
    ///
    /// `sensors` restricts the clamp to the listed detector points; the rest
    /// of the detector row evolves freely. `None` clamps every point.
    pub fn time_reverse(&self, g: &DataField, sensors: Option<&[usize]>) -> Result<ImageField> {
        let cfg = &self.cfg;
        g.check_dims(cfg.data_dims())?;
        let (n_perp, n_s, n_t) = (cfg.n_perp, cfg.n_sensor, cfg.n_t);
        let all: Vec<usize>;
        let sensors = match sensors {
            Some(s) => {
                if let Some(&bad) = s.iter().find(|&&i| i >= n_s) {
                    return Err(Error::Domain(format!("sensor index {bad} out of range 0..{n_s}")));
                }
                s
            }
            None => {
                all = (0..n_s).collect();
                &all
            }
        };
        let (pr, pc) = (self.rows, self.cols);
        let norm = 1.0 / (pr * pc) as f64;
        let sr = self.sensor_row * pc;

        let mut prev = vec![0.0; pr * pc];
        let mut cur = vec![0.0; pr * pc];
        for &s in sensors {
            cur[sr + s] = g.values[[n_t - 1, s]];
        }
        let mut buf = vec![Complex64::default(); pr * pc];
        for step in 1..n_t {
            for (b, v) in buf.iter_mut().zip(&cur) {
                *b = Complex64::new(*v, 0.0);
            }
            self.fft2.forward(&mut buf);
            for (b, c) in buf.iter_mut().zip(&self.cos_table) {
                *b *= 2.0 * norm * c;
            }
            self.fft2.inverse(&mut buf);
            // the field before the first imposed sample is zero
            for (p, b) in prev.iter_mut().zip(&buf) {
                *p = b.re - *p;
            }
            std::mem::swap(&mut prev, &mut cur);
            let n = n_t - 1 - step;
            for &s in sensors {
                cur[sr + s] = g.values[[n, s]];
            }
        }

        let mut p = Array2::zeros((n_perp, n_s));
        for r in 0..n_perp {
            for s in 0..n_s {
                p[[r, s]] = cur[r * pc + s];
            }
        }
        Ok(ImageField {
            values: p,
            spacing: cfg.h_x,
        })
    }
}

/// Distance in voxels travelled during the record.
fn travel_voxels(cfg: &AcousticConfig) -> f64 {
    cfg.n_t as f64 * cfg.cv()
}

/// Frequency in cycles per sample of DFT bin `k` on an `n`-point grid.
fn signed_freq(k: usize, n: usize) -> f64 {
    let k = if 2 * k > n { k as f64 - n as f64 } else { k as f64 };
    k / n as f64
}

/// Detector response per lateral wavenumber, derived from the Chebyshev form
/// of the two-step recursion. Entry `[n * n_perp + r]` is the trace at time
/// `n` produced by a unit source in image row `r` (and its mirror).
fn build_transfer(cfg: &AcousticConfig, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    let (n_perp, n_t) = (cfg.n_perp, cfg.n_t);
    let cv = cfg.cv();
    let half = rows / 2 + 1;
    // depth synthesis weights folding the even spectrum and the mirror image
    let mut basis = vec![0.0; n_perp * half];
    for r in 0..n_perp {
        let mirror = if r == 0 { 1.0 } else { 2.0 };
        for kr in 0..half {
            let fold = if kr == 0 || 2 * kr == rows { 1.0 } else { 2.0 };
            basis[r * half + kr] =
                mirror * fold * (2.0 * PI * (kr * r) as f64 / rows as f64).cos() / rows as f64;
        }
    }
    let mut out = Vec::with_capacity(cols / 2 + 1);
    let mut step = vec![0.0; half];
    let mut t_prev = vec![0.0; half];
    let mut t_cur = vec![0.0; half];
    for kc in 0..=cols / 2 {
        let fc = kc as f64 / cols as f64;
        for kr in 0..half {
            let fr = kr as f64 / rows as f64;
            step[kr] = (2.0 * PI * cv * fr.hypot(fc)).cos();
        }
        let mut m = vec![0.0; n_t * n_perp];
        t_prev.iter_mut().for_each(|v| *v = 1.0);
        t_cur.copy_from_slice(&step);
        for n in 0..n_t {
            let tn: &[f64] = if n == 0 { &t_prev } else { &t_cur };
            for r in 0..n_perp {
                let b = &basis[r * half..(r + 1) * half];
                m[n * n_perp + r] = b.iter().zip(tn).map(|(x, y)| x * y).sum();
            }
            if n >= 1 {
                for kr in 0..half {
                    let next = 2.0 * step[kr] * t_cur[kr] - t_prev[kr];
                    t_prev[kr] = t_cur[kr];
                    t_cur[kr] = next;
                }
            }
        }
        out.push(m);
    }
    out
}

/// Data-domain wavefront angle `beta = atan(sin theta)` for an ambient-space
/// wavefront at `theta` in `(-pi/2, pi/2)`.
pub fn wavefront_map(theta: f64) -> Result<f64> {
    if !(theta > -PI / 2.0 && theta < PI / 2.0) {
        return Err(Error::Domain(format!("theta = {theta} outside (-pi/2, pi/2)")));
    }
    Ok(theta.sin().atan())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> AcousticConfig {
        AcousticConfig::from_cv(1500.0, 1e-4, 0.5, 12, 20).unwrap()
    }

    #[test]
    fn zero_in_zero_out() {
        let cfg = small_cfg();
        let prop = Propagator::new(&cfg).unwrap();
        let g = prop.forward(&ImageField::zeros(cfg.image_dims(), cfg.h_x)).unwrap();
        assert!(g.values.iter().all(|v| *v == 0.0));
        let p = prop.adjoint(&DataField::zeros(&cfg)).unwrap();
        assert!(p.values.iter().all(|v| *v == 0.0));
        let tr = prop.time_reverse(&DataField::zeros(&cfg), None).unwrap();
        assert!(tr.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn padding_covers_travel() {
        let cfg = small_cfg();
        let prop = Propagator::new(&cfg).unwrap();
        let (pr, pc) = prop.pad();
        let reach = cfg.n_t as f64 * cfg.cv();
        assert!(pr as f64 >= reach && pc as f64 >= reach);
        assert!(prop.cos_table().iter().all(|c| (-1.0..=1.0).contains(c)));
    }

    #[test]
    fn rejects_support_reaching_wrap() {
        let cfg = small_cfg();
        let prop = Propagator::with_padding(&cfg, 14, 14).unwrap();
        let mut p0 = ImageField::zeros(cfg.image_dims(), cfg.h_x);
        p0.values[[11, 10]] = 1.0;
        assert!(matches!(prop.forward(&p0), Err(Error::WrapAround(_))));
    }

    #[test]
    fn shape_mismatch() {
        let cfg = small_cfg();
        let prop = Propagator::new(&cfg).unwrap();
        assert!(prop.forward(&ImageField::zeros((3, 3), 1.0)).is_err());
        let bad = DataField {
            values: Array2::zeros((cfg.n_t + 1, cfg.n_sensor)),
            dt: cfg.h_t,
            cv: cfg.cv(),
        };
        assert!(prop.adjoint(&bad).is_err());
        assert!(prop.time_reverse(&bad, None).is_err());
    }

    #[test]
    fn wavefront_map_values() {
        assert_eq!(wavefront_map(0.0).unwrap(), 0.0);
        assert!((wavefront_map(PI / 6.0).unwrap() - 0.46365).abs() < 1e-5);
        let near = wavefront_map(PI / 2.0 - 1e-9).unwrap();
        assert!((near - PI / 4.0).abs() < 1e-8);
        assert!(wavefront_map(PI / 2.0).is_err());
        assert!(wavefront_map(-2.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn wavefront_map_odd_increasing(a in -1.5f64..1.5, b in -1.5f64..1.5) {
            let fa = wavefront_map(a).unwrap();
            let fb = wavefront_map(b).unwrap();
            proptest::prop_assert!((fa + wavefront_map(-a).unwrap()).abs() < 1e-15);
            proptest::prop_assert!(fa.abs() < PI / 4.0);
            if a < b { proptest::prop_assert!(fa < fb); }
        }
    }
}
