//! Physical and sampling grids shared by the image and data domains.
//!
//! The image `p0` lives on an `n_perp x n_sensor` grid with isotropic spacing
//! `h_x`; the first image row coincides with the line detector. Data live on
//! an `n_t x n_sensor` grid sampled every `h_t` seconds.

use ndarray::Array2;

use crate::error::{check_shape, Error, Result};

/// Acquisition geometry for a homogeneous medium and a line detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcousticConfig {
    /// Sound speed (m/s).
    pub c: f64,
    /// Spatial grid spacing (m), identical along every axis.
    pub h_x: f64,
    /// Temporal step (s).
    pub h_t: f64,
    /// Image depth in voxels.
    pub n_perp: usize,
    /// Detector points along the line.
    pub n_sensor: usize,
    /// Number of recorded time samples (t = 0, h_t, ...).
    pub n_t: usize,
}

impl AcousticConfig {
    /// Builds a configuration whose record length covers the longest travel
    /// path across the image (see [`compute_n_t`]).
    pub fn new(c: f64, h_x: f64, h_t: f64, n_perp: usize, n_sensor: usize) -> Result<Self> {
        let mut cfg = Self {
            c,
            h_x,
            h_t,
            n_perp,
            n_sensor,
            n_t: 1,
        };
        cfg.validate()?;
        cfg.n_t = compute_n_t(&cfg)?;
        Ok(cfg)
    }

    /// Builds a configuration from the voxel sound speed, deriving `h_t`.
    pub fn from_cv(c: f64, h_x: f64, cv: f64, n_perp: usize, n_sensor: usize) -> Result<Self> {
        if !(cv > 0.0) {
            return Err(Error::InvalidConfig(format!("c_v must be positive, got {cv}")));
        }
        Self::new(c, h_x, cv * h_x / c, n_perp, n_sensor)
    }

    /// Same geometry with an explicit record length.
    pub fn with_n_t(mut self, n_t: usize) -> Result<Self> {
        if n_t == 0 {
            return Err(Error::InvalidConfig("n_t must be at least 1".into()));
        }
        self.n_t = n_t;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c", self.c), ("h_x", self.h_x), ("h_t", self.h_t)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.n_perp < 1 {
            return Err(Error::InvalidConfig("n_perp must be at least 1".into()));
        }
        if self.n_sensor < 2 {
            return Err(Error::InvalidConfig("n_sensor must be at least 2".into()));
        }
        let cv = self.c * self.h_t / self.h_x;
        if cv > 1.0 + 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "voxel sound speed c_v = {cv} exceeds 1 (temporal undersampling)"
            )));
        }
        Ok(())
    }

    pub fn cv(&self) -> f64 {
        self.c * self.h_t / self.h_x
    }

    /// Recording duration `n_t * h_t` (s).
    pub fn duration(&self) -> f64 {
        self.n_t as f64 * self.h_t
    }

    /// Diagonal of the image cuboid (m).
    pub fn x_max(&self) -> f64 {
        (self.n_perp as f64).hypot(self.n_sensor as f64) * self.h_x
    }

    pub fn image_dims(&self) -> (usize, usize) {
        (self.n_perp, self.n_sensor)
    }

    pub fn data_dims(&self) -> (usize, usize) {
        (self.n_t, self.n_sensor)
    }
}

/// `c * h_t / h_x`, the distance in voxels a wavefront covers per time step.
pub fn voxel_sound_speed(c: f64, h_t: f64, h_x: f64) -> Result<f64> {
    if !(c > 0.0 && h_t > 0.0 && h_x > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sound speed and spacings must be positive (c={c}, h_t={h_t}, h_x={h_x})"
        )));
    }
    Ok(c * h_t / h_x)
}

pub fn compute_cv(cfg: &AcousticConfig) -> Result<f64> {
    voxel_sound_speed(cfg.c, cfg.h_t, cfg.h_x)
}

/// `ceil(x_max / (c_v h_x))`: time samples needed for the signal from the
/// farthest image corner to reach the detector.
pub fn compute_n_t(cfg: &AcousticConfig) -> Result<usize> {
    if cfg.n_perp == 0 || cfg.n_sensor == 0 {
        return Err(Error::InvalidConfig("empty image grid".into()));
    }
    let cv = compute_cv(cfg)?;
    let diag_vox = (cfg.n_perp as f64).hypot(cfg.n_sensor as f64);
    Ok((diag_vox / cv).ceil() as usize)
}

/// Uniform upscaling of the reconstruction grid matching its point count to the
/// data volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Upscale {
    pub alpha: f64,
    /// `[round(alpha n_perp), round(alpha n_sensor), ...]`, one entry per axis.
    pub dims: Vec<usize>,
}

pub fn compute_upscale(n_t: usize, n_perp: usize, n_sensor: usize, d: usize) -> Result<Upscale> {
    if !(2..=3).contains(&d) {
        return Err(Error::Domain(format!("dimension must be 2 or 3, got {d}")));
    }
    if n_perp == 0 || n_t < n_perp {
        return Err(Error::Domain(format!(
            "need n_t >= n_perp >= 1, got n_t={n_t}, n_perp={n_perp}"
        )));
    }
    let alpha = upscale_factor(n_t as f64 / n_perp as f64, d);
    // f64::round is half-away-from-zero
    let mut dims = vec![(alpha * n_perp as f64).round() as usize];
    dims.extend(std::iter::repeat_n((alpha * n_sensor as f64).round() as usize, d - 1));
    Ok(Upscale { alpha, dims })
}

/// `ratio^(1/d)`; `ratio` is the time oversampling `n_t / n_perp`.
pub fn upscale_factor(ratio: f64, d: usize) -> f64 {
    ratio.powf(1.0 / d as f64)
}

/// Discretized initial pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageField {
    pub values: Array2<f64>,
    pub spacing: f64,
}

impl ImageField {
    pub fn new(values: Array2<f64>, spacing: f64) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("image contains non-finite values".into()));
        }
        Ok(Self { values, spacing })
    }

    pub fn zeros(dims: (usize, usize), spacing: f64) -> Self {
        Self {
            values: Array2::zeros(dims),
            spacing,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn check_dims(&self, dims: (usize, usize)) -> Result<()> {
        check_shape(&[dims.0, dims.1], self.values.shape())
    }

    /// Negative values set to zero.
    pub fn clip_negative(mut self) -> Self {
        self.values.mapv_inplace(|v| v.max(0.0));
        self
    }
}

/// Time x sensor pressure volume.
#[derive(Debug, Clone, PartialEq)]
pub struct DataField {
    pub values: Array2<f64>,
    pub dt: f64,
    pub cv: f64,
}

impl DataField {
    pub fn new(values: Array2<f64>, dt: f64, cv: f64) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("data contain non-finite values".into()));
        }
        Ok(Self { values, dt, cv })
    }

    pub fn zeros(cfg: &AcousticConfig) -> Self {
        Self {
            values: Array2::zeros(cfg.data_dims()),
            dt: cfg.h_t,
            cv: cfg.cv(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn check_dims(&self, dims: (usize, usize)) -> Result<()> {
        check_shape(&[dims.0, dims.1], self.values.shape())
    }
}

/// Bilinear interpolation with aligned corners onto a grid at least as large
/// as the input.
pub fn bilinear_upscale(img: &ImageField, target: (usize, usize)) -> Result<ImageField> {
    let (h, w) = img.dims();
    let (th, tw) = target;
    if th < h || tw < w {
        return Err(Error::Domain(format!(
            "bilinear_upscale cannot shrink {h}x{w} to {th}x{tw}"
        )));
    }
    let src = &img.values;
    let map = |i: usize, n_src: usize, n_dst: usize| -> (usize, usize, f64) {
        if n_src == 1 || n_dst == 1 {
            return (0, 0, 0.0);
        }
        let x = i as f64 * (n_src - 1) as f64 / (n_dst - 1) as f64;
        let i0 = (x.floor() as usize).min(n_src - 1);
        let i1 = (i0 + 1).min(n_src - 1);
        (i0, i1, x - i0 as f64)
    };
    let cols: Vec<_> = (0..tw).map(|j| map(j, w, tw)).collect();
    let mut out = Array2::zeros(target);
    for i in 0..th {
        let (r0, r1, fr) = map(i, h, th);
        for (j, &(c0, c1, fc)) in cols.iter().enumerate() {
            let top = src[[r0, c0]] * (1.0 - fc) + src[[r0, c1]] * fc;
            let bot = src[[r1, c0]] * (1.0 - fc) + src[[r1, c1]] * fc;
            out[[i, j]] = top * (1.0 - fr) + bot * fr;
        }
    }
    let scale = img.spacing * (h.max(2) - 1) as f64 / (th.max(2) - 1) as f64;
    Ok(ImageField {
        values: out,
        spacing: scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cv_reported_scanner_value() {
        let cv = voxel_sound_speed(1570.0, 16.67e-9, 106e-6).unwrap();
        assert!((cv - 0.2469).abs() < 5e-5, "{cv}");
    }

    #[test]
    fn cv_unit_when_step_matches_travel() {
        let h_x = 1e-4;
        let c = 1500.0;
        assert!((voxel_sound_speed(c, h_x / c, h_x).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cv_vessel_phantom_time_step() {
        let cv = voxel_sound_speed(1500.0, 2.3256e-9, 11.628e-6).unwrap();
        assert!((cv - 0.3).abs() < 1e-4, "{cv}");
    }

    #[test]
    fn cv_rejects_nonpositive() {
        assert!(voxel_sound_speed(0.0, 1.0, 1.0).is_err());
        assert!(voxel_sound_speed(1.0, -1.0, 1.0).is_err());
        assert!(voxel_sound_speed(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn config_rejects_undersampled_time() {
        assert!(AcousticConfig::new(1500.0, 1e-5, 1e-8, 10, 10).is_err());
    }

    #[test]
    fn n_t_vessel_phantom() {
        let cfg = AcousticConfig::from_cv(1500.0, 11.628e-6, 0.3, 42, 172).unwrap();
        assert_eq!(cfg.n_t, 591);
        assert_eq!(cfg.data_dims(), (591, 172));
    }

    #[test]
    fn n_t_square_grid() {
        let cfg = AcousticConfig::from_cv(1500.0, 1e-4, 0.5, 64, 64).unwrap();
        assert_eq!(cfg.n_t, 182);
    }

    #[test]
    fn n_t_rejects_empty_grid() {
        assert!(AcousticConfig::from_cv(1500.0, 1e-4, 0.5, 0, 64).is_err());
        let cfg = AcousticConfig {
            c: 1500.0,
            h_x: 1e-4,
            h_t: 1e-8,
            n_perp: 0,
            n_sensor: 8,
            n_t: 1,
        };
        assert!(compute_n_t(&cfg).is_err());
    }

    #[test]
    fn upscale_vessel_phantom() {
        let up = compute_upscale(591, 42, 172, 2).unwrap();
        assert!((up.alpha - 3.75).abs() < 5e-3, "{}", up.alpha);
        assert_eq!(up.dims, vec![158, 645]);
    }

    #[test]
    fn upscale_identity() {
        let up = compute_upscale(50, 50, 80, 2).unwrap();
        assert_eq!(up.alpha, 1.0);
        assert_eq!(up.dims, vec![50, 80]);
    }

    #[test]
    fn upscale_palm_3d() {
        let cv = voxel_sound_speed(1570.0, 16.67e-9, 106e-6).unwrap();
        let alpha = upscale_factor(1.0 / cv, 3);
        assert!((alpha - 1.5941).abs() < 1e-4, "{alpha}");
    }

    #[test]
    fn upscale_rejects_short_record() {
        assert!(compute_upscale(10, 42, 172, 2).is_err());
        assert!(compute_upscale(100, 42, 172, 4).is_err());
    }

    #[test]
    fn upscale_point_count_matches_data() {
        for (n_t, n_perp, n_s) in [(591, 42, 172), (182, 64, 64), (300, 20, 50)] {
            let up = compute_upscale(n_t, n_perp, n_s, 2).unwrap();
            let exact = (n_t * n_s) as f64;
            let got = (up.dims[0] * up.dims[1]) as f64;
            // one voxel of slack per axis
            let slack = up.dims[0] as f64 + up.dims[1] as f64 + 1.0;
            assert!((exact - got).abs() <= slack, "{n_t} {n_perp} {n_s}: {got} vs {exact}");
        }
    }

    #[test]
    fn bilinear_identity_and_constant() {
        let img = ImageField::new(array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]], 1.0).unwrap();
        assert_eq!(bilinear_upscale(&img, (2, 3)).unwrap().values, img.values);
        let c = ImageField::new(Array2::from_elem((3, 4), 0.7), 1.0).unwrap();
        let up = bilinear_upscale(&c, (7, 11)).unwrap();
        assert!(up.values.iter().all(|v| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn bilinear_center_of_checker() {
        let img = ImageField::new(array![[0.0, 1.0], [1.0, 0.0]], 1.0).unwrap();
        let up = bilinear_upscale(&img, (3, 3)).unwrap();
        assert!((up.values[[1, 1]] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bilinear_rejects_shrink() {
        let img = ImageField::zeros((4, 4), 1.0);
        assert!(bilinear_upscale(&img, (3, 5)).is_err());
    }

    proptest::proptest! {
        #[test]
        fn cv_scales_linearly_with_time_step(ht in 1e-9f64..1e-7, s in 0.1f64..10.0) {
            let a = voxel_sound_speed(1500.0, ht, 1e-4).unwrap();
            let b = voxel_sound_speed(1500.0, ht * s, 1e-4).unwrap();
            proptest::prop_assert!((b - s * a).abs() <= 1e-12 * b.abs());
        }

        #[test]
        fn bilinear_has_no_overshoot(
            vals in proptest::collection::vec(-5.0f64..5.0, 12),
            th in 3usize..9, tw in 4usize..12,
        ) {
            let img = ImageField::new(Array2::from_shape_vec((3, 4), vals).unwrap(), 1.0).unwrap();
            let lo = img.values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = img.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let up = bilinear_upscale(&img, (th, tw)).unwrap();
            for v in up.values.iter() {
                proptest::prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
            }
        }
    }
}
