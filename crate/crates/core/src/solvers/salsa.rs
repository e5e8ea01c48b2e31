use ndarray::Array2;

use super::kernels::{cg, norm, smw_inverse, soft};
use super::{sparsity, Outer, SolverConfig, SolverRun};
use crate::curvelet::Tiling;
use crate::error::{check_shape, Result};
use crate::grid::DataField;
use crate::sensing::{zero_fill, Measurements, SamplingPattern};
use crate::wedge::{analyze_wedge, synthesize_wedge, WedgeSpec};

/// Full-data recovery from subsampled traces (R-SALSA on wedge-restricted
/// data-domain coefficients). Returns `Psi~^dagger f`.
pub fn reconstruct_dr(
    b: &Measurements,
    pat: &SamplingPattern,
    tiling: &Tiling,
    spec: &WedgeSpec,
    cfg: &SolverConfig,
) -> Result<(DataField, SolverRun)> {
    cfg.validate()?;
    let b0 = zero_fill(b, pat)?;
    check_shape(&[tiling.dims().0, tiling.dims().1], b0.values.shape())?;
    let mask = pat.mask();
    let n = tiling.n_coeffs();
    let (n_t, n_s) = b0.dims();
    let s = sparsity(n_t * pat.m(), n_t * n_s, cfg.c, n);
    let mut run = SolverRun::new("R-SALSA", *cfg, s);

    let synth = |f: &[f64]| -> Result<Array2<f64>> {
        synthesize_wedge(tiling, spec, &tiling.coeffs_from_vec(f.to_vec())?)
    };
    let masked = |mut g: Array2<f64>| {
        for mut row in g.rows_mut() {
            row.iter_mut().zip(&mask).filter(|(_, k)| !**k).for_each(|(v, _)| *v = 0.0);
        }
        g
    };
    // P = Psi~ Phi^T Phi Psi~^dagger
    let apply_p = |f: &[f64]| -> Result<Vec<f64>> {
        Ok(analyze_wedge(tiling, spec, masked(synth(f)?).view())?.into_vec())
    };

    let psi_b0 = analyze_wedge(tiling, spec, b0.values.view())?.into_vec();
    let mu = cfg.mu;
    let mut y = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut outer = Outer::new(n, s);
    let mut rhs = vec![0.0; n];

    for k in 1..=cfg.k_max {
        for i in 0..n {
            rhs[i] = psi_b0[i] + mu * (y[i] + w[i]);
        }
        f = if cfg.exact_inverse {
            let op = |x: &[f64]| -> Result<Vec<f64>> {
                let px = apply_p(x)?;
                Ok(px.iter().zip(x).map(|(p, v)| p + mu * v).collect())
            };
            cg(op, &rhs, Some(&f), cfg.inner_tol, cfg.inner_max)?.0
        } else {
            smw_inverse(apply_p, mu, &rhs)?
        };
        if run.smw_gap.is_none() {
            let pf = apply_p(&f)?;
            let res: Vec<f64> = (0..n).map(|i| pf[i] + mu * f[i] - rhs[i]).collect();
            run.smw_gap = Some(norm(&res) / norm(&rhs).max(f64::MIN_POSITIVE));
        }
        let thresh = cfg.tau / mu;
        for (i, ((yi, wi), l)) in y.iter_mut().zip(&mut w).zip(outer.lambda()).enumerate() {
            *yi = soft(f[i] - *wi, thresh * l);
            *wi -= f[i] - *yi;
        }
        let g = synth(&f)?;
        let fidelity = 0.5
            * g.rows()
                .into_iter()
                .zip(b0.values.rows())
                .map(|(gr, br)| {
                    gr.iter()
                        .zip(br)
                        .zip(&mask)
                        .filter(|(_, k)| **k)
                        .map(|((a, c), _)| (a - c).powi(2))
                        .sum::<f64>()
                })
                .sum::<f64>();
        if outer.step(&mut run, k, &f, fidelity)? {
            break;
        }
    }
    outer.finish(&mut run);
    let g = synth(&f)?;
    Ok((DataField::new(g, b.dt, b.cv)?, run))
}
