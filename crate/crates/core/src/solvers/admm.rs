use ndarray::Array2;

use super::fista::{half_sq, ImageOps};
use super::kernels::{cgls, soft};
use super::{Outer, SolverConfig, SolverRun};
use crate::curvelet::Tiling;
use crate::error::Result;
use crate::grid::{DataField, ImageField};
use crate::sensing::{Measurements, SamplingPattern};
use crate::wave::Propagator;

/// Direct initial-pressure recovery under `p >= 0` (R-ADMM with the split
/// `y = (Psi p, p)`). Returns the nonnegative split variable.
pub fn reconstruct_p0r_plus(
    b: &Measurements,
    pat: &SamplingPattern,
    tiling: &Tiling,
    cfg: &SolverConfig,
    prop: &Propagator,
) -> Result<(ImageField, SolverRun)> {
    cfg.validate()?;
    let ops = ImageOps::new(b, pat, tiling, prop)?;
    let n = tiling.n_coeffs();
    let dims = tiling.dims();
    let n_img = dims.0 * dims.1;
    let n_data = ops.b0.values.len();
    let s = ops.sparsity(cfg);
    let mut run = SolverRun::new("R-ADMM", *cfg, s);
    let mu = cfg.mu;
    let root = (2.0 * mu).sqrt();

    // Psi is an isometry, so the line-4 problem reduces to
    // min ||Phi A p - b||^2 + 2 mu ||p - v||^2 with v the mean of both targets.
    let to_img = |x: &[f64]| Array2::from_shape_vec(dims, x.to_vec()).expect("image length");
    let apply_a = |x: &[f64]| -> Result<Vec<f64>> {
        let g = ops.forward(to_img(x))?;
        let mut out: Vec<f64> = g.values.iter().copied().collect();
        out.extend(x.iter().map(|v| root * v));
        Ok(out)
    };
    let apply_at = |z: &[f64]| -> Result<Vec<f64>> {
        let (d, i) = z.split_at(n_data);
        let g = DataField {
            values: Array2::from_shape_vec(ops.b0.dims(), d.to_vec()).expect("data length"),
            ..ops.b0.clone()
        };
        let mut out = ops.adjoint(&g)?;
        out.iter_mut().zip(i).for_each(|(o, v)| *o += root * v);
        Ok(out.into_iter().collect())
    };

    let mut outer = Outer::new(n, s);
    let mut p = vec![0.0; n_img];
    let (mut y1, mut w1) = (vec![0.0; n], vec![0.0; n]);
    let (mut y2, mut w2) = (vec![0.0; n_img], vec![0.0; n_img]);
    let mut rhs: Vec<f64> = ops.b0.values.iter().copied().collect();
    rhs.resize(n_data + n_img, 0.0);

    for k in 1..=cfg.k_max {
        let d1: Vec<f64> = y1.iter().zip(&w1).map(|(a, b)| a - b).collect();
        let back = ops.synth(&d1)?;
        for (i, v) in back.iter().enumerate() {
            rhs[n_data + i] = root * 0.5 * (v + y2[i] - w2[i]);
        }
        p = cgls(apply_a, apply_at, &rhs, &p, cfg.inner_tol, cfg.inner_max)?.0;
        let f = ops.analyze(&to_img(&p))?;
        let thresh = cfg.tau / mu;
        let mut primal = 0.0;
        for i in 0..n {
            y1[i] = soft(f[i] + w1[i], thresh * outer.lambda()[i]);
            let r = f[i] - y1[i];
            w1[i] += r;
            primal += r * r;
        }
        for i in 0..n_img {
            y2[i] = (p[i] + w2[i]).max(0.0);
            let r = p[i] - y2[i];
            w2[i] += r;
            primal += r * r;
        }
        run.primal_residual.push(primal.sqrt());
        let fidelity = half_sq(&ops.residual(to_img(&p))?);
        if outer.step(&mut run, k, &f, fidelity)? {
            break;
        }
    }
    outer.finish(&mut run);
    Ok((ops.image(to_img(&y2)), run))
}
