//! Sensor subsampling, zero filling and measurement noise.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_shape, Error, Result};
use crate::grid::DataField;

/// How sensors are drawn.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scheme {
    Uniform,
    /// Sensors in `start..end` are drawn with `weight` times the probability.
    Window { start: usize, end: usize, weight: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplingPattern {
    selected: Vec<usize>,
    n_sensor: usize,
    seed: u64,
    scheme: Scheme,
}

/// Number of sensors kept at `rate`.
pub fn sample_count(n_sensor: usize, rate: f64) -> Result<usize> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::Domain(format!("sampling rate {rate} outside (0, 1]")));
    }
    let m = (rate * n_sensor as f64 - 1e-9).ceil() as usize;
    if m == 0 {
        return Err(Error::Domain(format!("rate {rate} selects no sensor out of {n_sensor}")));
    }
    Ok(m.min(n_sensor))
}

pub fn make_pattern(n_sensor: usize, rate: f64, scheme: Scheme, seed: u64) -> Result<SamplingPattern> {
    let m = sample_count(n_sensor, rate)?;
    if let Scheme::Window { start, end, weight } = scheme {
        if start >= end || end > n_sensor || !(weight > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "window {start}..{end} with weight {weight} invalid for {n_sensor} sensors"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut selected: Vec<usize> = match scheme {
        Scheme::Uniform => rand::seq::index::sample(&mut rng, n_sensor, m).into_vec(),
        Scheme::Window { start, end, weight } => {
            let w = |i: usize| if (start..end).contains(&i) { weight } else { 1.0 };
            rand::seq::index::sample_weighted(&mut rng, n_sensor, w, m)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?
                .into_vec()
        }
    };
    selected.sort_unstable();
    SamplingPattern::new(selected, n_sensor, seed, scheme)
}

impl SamplingPattern {
    pub fn new(selected: Vec<usize>, n_sensor: usize, seed: u64, scheme: Scheme) -> Result<Self> {
        if selected.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("sensor indices must be sorted and unique".into()));
        }
        if selected.last().is_some_and(|&i| i >= n_sensor) || selected.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "pattern must select between 1 and {n_sensor} valid sensors"
            )));
        }
        Ok(Self {
            selected,
            n_sensor,
            seed,
            scheme,
        })
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn n_sensor(&self) -> usize {
        self.n_sensor
    }

    pub fn m(&self) -> usize {
        self.selected.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// 0/1 mask over sensors.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.n_sensor];
        for &i in &self.selected {
            m[i] = true;
        }
        m
    }

    /// Text form: `key=value` header lines followed by one index per line.
    pub fn to_text(&self) -> String {
        let scheme = match self.scheme {
            Scheme::Uniform => "uniform".to_string(),
            Scheme::Window { start, end, weight } => format!("window:{start}:{end}:{weight}"),
        };
        let mut s = format!(
            "n_sensor={}\nseed={}\nscheme={}\nm={}\n",
            self.n_sensor,
            self.seed,
            scheme,
            self.m()
        );
        for i in &self.selected {
            s.push_str(&format!("{i}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Format {
            path: "<pattern>".into(),
            msg,
        };
        let (mut n_sensor, mut seed, mut scheme, mut m) = (None, 0u64, Scheme::Uniform, None);
        let mut selected = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some((k, v)) = line.split_once('=') {
                match k {
                    "n_sensor" => n_sensor = Some(v.parse().map_err(|e| bad(format!("n_sensor: {e}")))?),
                    "seed" => seed = v.parse().map_err(|e| bad(format!("seed: {e}")))?,
                    "m" => m = Some(v.parse::<usize>().map_err(|e| bad(format!("m: {e}")))?),
                    "scheme" => scheme = parse_scheme(v).ok_or_else(|| bad(format!("scheme '{v}'")))?,
                    _ => return Err(bad(format!("unknown key '{k}'"))),
                }
            } else {
                selected.push(line.parse().map_err(|e| bad(format!("index '{line}': {e}")))?);
            }
        }
        let n_sensor = n_sensor.ok_or_else(|| bad("missing n_sensor".into()))?;
        if m.is_some_and(|m| m != selected.len()) {
            return Err(bad("index count differs from m".into()));
        }
        Self::new(selected, n_sensor, seed, scheme)
    }
}

fn parse_scheme(v: &str) -> Option<Scheme> {
    if v == "uniform" {
        return Some(Scheme::Uniform);
    }
    let mut it = v.strip_prefix("window:")?.split(':');
    let start = it.next()?.parse().ok()?;
    let end = it.next()?.parse().ok()?;
    let weight = it.next()?.parse().ok()?;
    Some(Scheme::Window { start, end, weight })
}

/// Selected traces `b = Phi g`, stored as `n_t x m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurements {
    pub values: Array2<f64>,
    pub dt: f64,
    pub cv: f64,
}

pub fn subsample(g: &DataField, pat: &SamplingPattern) -> Result<Measurements> {
    check_shape(&[pat.n_sensor], &[g.values.ncols()])?;
    let values = g.values.select(ndarray::Axis(1), pat.selected());
    Ok(Measurements {
        values,
        dt: g.dt,
        cv: g.cv,
    })
}

/// `b0 = Phi^T b`.
pub fn zero_fill(b: &Measurements, pat: &SamplingPattern) -> Result<DataField> {
    check_shape(&[pat.m()], &[b.values.ncols()])?;
    let mut out = Array2::zeros((b.values.nrows(), pat.n_sensor));
    for (j, &s) in pat.selected().iter().enumerate() {
        out.column_mut(s).assign(&b.values.column(j));
    }
    Ok(DataField {
        values: out,
        dt: b.dt,
        cv: b.cv,
    })
}

/// Zeroes unselected traces (`Phi^T Phi g`).
pub fn mask_data(g: &DataField, pat: &SamplingPattern) -> Result<DataField> {
    zero_fill(&subsample(g, pat)?, pat)
}

/// Adds i.i.d. Gaussian noise of standard deviation `sigma`.
pub fn add_noise(g: &DataField, sigma: f64, seed: u64) -> Result<DataField> {
    if !(sigma >= 0.0) {
        return Err(Error::Domain(format!("noise level {sigma} is negative")));
    }
    let mut out = g.clone();
    if sigma == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    out.values.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
    Ok(out)
}
