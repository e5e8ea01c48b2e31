use ndarray::Array2;

use super::kernels::{power_iteration, soft};
use super::{sparsity, Outer, SolverConfig, SolverRun};
use crate::curvelet::Tiling;
use crate::error::{check_shape, Error, Result};
use crate::grid::{DataField, ImageField};
use crate::sensing::{zero_fill, Measurements, SamplingPattern};
use crate::wave::Propagator;

/// Image-domain operators shared by the one-step solvers.
pub(super) struct ImageOps<'a> {
    pub tiling: &'a Tiling,
    pub prop: &'a Propagator,
    pub mask: Vec<bool>,
    pub b0: DataField,
}

impl<'a> ImageOps<'a> {
    pub fn new(b: &Measurements, pat: &SamplingPattern, tiling: &'a Tiling, prop: &'a Propagator) -> Result<Self> {
        let b0 = zero_fill(b, pat)?;
        b0.check_dims(prop.config().data_dims())?;
        let (r, c) = prop.config().image_dims();
        check_shape(&[r, c], &[tiling.dims().0, tiling.dims().1])?;
        Ok(Self {
            tiling,
            prop,
            mask: pat.mask(),
            b0,
        })
    }

    pub fn image(&self, values: Array2<f64>) -> ImageField {
        ImageField {
            values,
            spacing: self.prop.config().h_x,
        }
    }

    /// `Phi^T Phi A p`.
    pub fn forward(&self, p: Array2<f64>) -> Result<DataField> {
        let mut g = self.prop.forward(&self.image(p))?;
        for mut row in g.values.rows_mut() {
            row.iter_mut().zip(&self.mask).filter(|(_, k)| !**k).for_each(|(v, _)| *v = 0.0);
        }
        Ok(g)
    }

    /// `A^T` of a masked data field.
    pub fn adjoint(&self, g: &DataField) -> Result<Array2<f64>> {
        Ok(self.prop.adjoint(g)?.values)
    }

    /// Masked residual `Phi^T (Phi A p - b)`.
    pub fn residual(&self, p: Array2<f64>) -> Result<DataField> {
        let mut r = self.forward(p)?;
        r.values -= &self.b0.values;
        Ok(r)
    }

    pub fn synth(&self, f: &[f64]) -> Result<Array2<f64>> {
        self.tiling.synthesize(&self.tiling.coeffs_from_vec(f.to_vec())?)
    }

    pub fn analyze(&self, p: &Array2<f64>) -> Result<Vec<f64>> {
        Ok(self.tiling.analyze(p.view())?.into_vec())
    }

    pub fn sparsity(&self, cfg: &SolverConfig) -> usize {
        let n_t = self.b0.values.nrows();
        let m = n_t * self.mask.iter().filter(|k| **k).count();
        let (r, c) = self.tiling.dims();
        sparsity(m, r * c, cfg.c, self.tiling.n_coeffs())
    }
}

pub(super) fn half_sq(g: &DataField) -> f64 {
    0.5 * g.values.iter().map(|v| v * v).sum::<f64>()
}

/// Direct initial-pressure recovery (R-FISTA on image-domain curvelet
/// coefficients). The result is clipped to nonnegative values.
pub fn reconstruct_p0r(
    b: &Measurements,
    pat: &SamplingPattern,
    tiling: &Tiling,
    cfg: &SolverConfig,
    prop: &Propagator,
) -> Result<(ImageField, SolverRun)> {
    cfg.validate()?;
    let ops = ImageOps::new(b, pat, tiling, prop)?;
    let n = tiling.n_coeffs();
    let s = ops.sparsity(cfg);
    let mut run = SolverRun::new("R-FISTA", *cfg, s);

    // M = Psi A^T Phi^T Phi A Psi^dagger
    let apply_m = |f: &[f64]| -> Result<Vec<f64>> {
        let g = ops.forward(ops.synth(f)?)?;
        ops.analyze(&ops.adjoint(&g)?)
    };
    let est = power_iteration(apply_m, n, cfg.inner_tol, cfg.inner_max.max(100))?;
    if !(est.value > 0.0) {
        return Err(Error::Domain("sampled forward operator is zero".into()));
    }
    run.lipschitz = Some(est.value);
    let step = 1.0 / est.value;

    let mut outer = Outer::new(n, s);
    let mut y = vec![0.0; n];
    let mut f = vec![1.0; n];
    let mut alpha = 1.0f64;
    for k in 1..=cfg.k_max {
        let grad = ops.analyze(&ops.adjoint(&ops.residual(ops.synth(&y)?)?)?)?;
        let t = step * cfg.tau;
        let f_next: Vec<f64> = (0..n)
            .map(|i| soft(y[i] - step * grad[i], t * outer.lambda()[i]))
            .collect();
        let alpha_next = (1.0 + (1.0 + 4.0 * alpha * alpha).sqrt()) / 2.0;
        let mom = (alpha - 1.0) / alpha_next;
        for i in 0..n {
            y[i] = f_next[i] + mom * (f_next[i] - f[i]);
        }
        f = f_next;
        alpha = alpha_next;
        let fidelity = half_sq(&ops.residual(ops.synth(&f)?)?);
        if outer.step(&mut run, k, &f, fidelity)? {
            break;
        }
    }
    outer.finish(&mut run);
    let p = ops.image(ops.synth(&f)?).clip_negative();
    Ok((p, run))
}
