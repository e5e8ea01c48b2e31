//! Image quality metrics against a reference.

use ndarray::Array2;

use crate::error::{check_shape, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsReport {
    pub mse: f64,
    pub ssim: f64,
    /// dB; `+inf` for identical images.
    pub psnr: f64,
    /// dB; `+inf` for identical images.
    pub snr: f64,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "method,mse,ssim,psnr,snr";

    pub fn csv_row(&self, method: &str) -> String {
        format!("{method},{:.10e},{:.10},{:.10},{:.10}", self.mse, self.ssim, self.psnr, self.snr)
    }
}

pub fn mse(rec: &Array2<f64>, reference: &Array2<f64>) -> Result<f64> {
    check_shape(reference.shape(), rec.shape())?;
    Ok(rec.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / rec.len() as f64)
}

fn peak(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn psnr(rec: &Array2<f64>, reference: &Array2<f64>) -> Result<f64> {
    let e = mse(rec, reference)?;
    Ok(10.0 * (peak(reference).powi(2) / e).log10())
}

pub fn snr(rec: &Array2<f64>, reference: &Array2<f64>) -> Result<f64> {
    check_shape(reference.shape(), rec.shape())?;
    let r: f64 = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    let d: f64 = rec.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok(20.0 * (r / d).log10())
}

/// Mean SSIM over all fully contained 11x11 Gaussian windows (sigma 1.5).
pub fn ssim(rec: &Array2<f64>, reference: &Array2<f64>) -> Result<f64> {
    check_shape(reference.shape(), rec.shape())?;
    const W: usize = 11;
    let g: Vec<f64> = {
        let raw: Vec<f64> = (0..W)
            .map(|i| {
                let x = i as f64 - 5.0;
                (-x * x / (2.0 * 1.5 * 1.5)).exp()
            })
            .collect();
        let s: f64 = raw.iter().sum();
        raw.iter().map(|v| v / s).collect()
    };
    let (n1, n2) = rec.dim();
    let (w1, w2) = (W.min(n1), W.min(n2));
    // separable weights restricted (and renormalized) for images smaller than the window
    let sub = |w: usize| {
        let off = (W - w) / 2;
        let s: f64 = g[off..off + w].iter().sum();
        g[off..off + w].iter().map(|v| v / s).collect::<Vec<_>>()
    };
    let (g1, g2) = (sub(w1), sub(w2));
    let range = peak(reference);
    let c1 = (0.01 * range).powi(2);
    let c2 = (0.03 * range).powi(2);
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..=n1 - w1 {
        for j in 0..=n2 - w2 {
            let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for a in 0..w1 {
                for b in 0..w2 {
                    let w = g1[a] * g2[b];
                    let x = rec[[i + a, j + b]];
                    let y = reference[[i + a, j + b]];
                    mx += w * x;
                    my += w * y;
                    sxx += w * x * x;
                    syy += w * y * y;
                    sxy += w * x * y;
                }
            }
            let vx = sxx - mx * mx;
            let vy = syy - my * my;
            let cxy = sxy - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

pub fn metrics(rec: &Array2<f64>, reference: &Array2<f64>) -> Result<MetricsReport> {
    Ok(MetricsReport {
        mse: mse(rec, reference)?,
        ssim: ssim(rec, reference)?,
        psnr: psnr(rec, reference)?,
        snr: snr(rec, reference)?,
    })
}
