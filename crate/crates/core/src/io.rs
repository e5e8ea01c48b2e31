//! Array files: raw little-endian `f64`, row-major, with a `.meta` sidecar of
//! `key=value` lines (`shape=rows,cols` is mandatory). PNG export.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};

/// Sidecar contents besides the shape.
pub type Meta = BTreeMap<String, String>;

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn write_array(path: &Path, a: &Array2<f64>, meta: &Meta) -> Result<()> {
    let mut bytes = Vec::with_capacity(a.len() * 8);
    for v in a.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    let mut text = format!("shape={},{}\n", a.nrows(), a.ncols());
    for (k, v) in meta {
        if k == "shape" {
            continue;
        }
        text.push_str(&format!("{k}={v}\n"));
    }
    fs::write(meta_path(path), text)?;
    Ok(())
}

pub fn read_meta(path: &Path) -> Result<(usize, usize, Meta)> {
    let mp = meta_path(path);
    let bad = |msg: String| Error::Format {
        path: mp.display().to_string(),
        msg,
    };
    let text = fs::read_to_string(&mp)?;
    let mut meta = Meta::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line '{line}' is not key=value")))?;
        meta.insert(k.trim().to_string(), v.trim().to_string());
    }
    let shape = meta.remove("shape").ok_or_else(|| bad("missing shape".into()))?;
    let dims: Vec<usize> = shape
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| bad(format!("shape '{shape}': {e}")))?;
    match dims[..] {
        [r, c] => Ok((r, c, meta)),
        _ => Err(bad(format!("shape '{shape}' is not 2D"))),
    }
}

pub fn read_array(path: &Path) -> Result<(Array2<f64>, Meta)> {
    let (r, c, meta) = read_meta(path)?;
    let bytes = fs::read(path)?;
    if bytes.len() != r * c * 8 {
        return Err(Error::Format {
            path: path.display().to_string(),
            msg: format!("{} bytes, expected {} for shape {r}x{c}", bytes.len(), r * c * 8),
        });
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
        .collect();
    let a = Array2::from_shape_vec((r, c), values).expect("length checked");
    Ok((a, meta))
}

/// Typed lookup of a sidecar value.
pub fn meta_f64(meta: &Meta, key: &str, path: &Path) -> Result<f64> {
    meta.get(key)
        .ok_or_else(|| Error::Format {
            path: meta_path(path).display().to_string(),
            msg: format!("missing {key}"),
        })?
        .parse()
        .map_err(|e| Error::Format {
            path: meta_path(path).display().to_string(),
            msg: format!("{key}: {e}"),
        })
}

/// 16-bit grayscale PNG with linear min-max normalization.
pub fn export_png(path: &Path, a: &Array2<f64>) -> Result<()> {
    let (lo, hi) = a
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (r, c) = a.dim();
    let img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_fn(c as u32, r as u32, |x, y| {
        let v = (a[[y as usize, x as usize]] - lo) / span;
        image::Luma([(v * 65535.0).round() as u16])
    });
    img.save(path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_meta() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.f64");
        let a = Array2::from_shape_fn((3, 5), |(i, j)| i as f64 * 0.5 - j as f64 / 3.0);
        let mut m = Meta::new();
        m.insert("dt".into(), "1e-9".into());
        write_array(&p, &a, &m).unwrap();
        let (b, mb) = read_array(&p).unwrap();
        assert_eq!(a, b);
        assert_eq!(meta_f64(&mb, "dt", &p).unwrap(), 1e-9);
        assert!(meta_f64(&mb, "c", &p).is_err());
    }

    #[test]
    fn rejects_truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.f64");
        write_array(&p, &Array2::zeros((4, 4)), &Meta::new()).unwrap();
        fs::write(&p, [0u8; 12]).unwrap();
        assert!(matches!(read_array(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn png_export() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        export_png(&p, &Array2::from_shape_fn((6, 9), |(i, j)| (i * j) as f64)).unwrap();
        let img = image::open(&p).unwrap().into_luma16();
        assert_eq!(img.dimensions(), (9, 6));
        assert_eq!(img.get_pixel(8, 5)[0], 65535);
        assert_eq!(img.get_pixel(0, 0)[0], 0);
    }
}
