//! Experiment configuration (TOML) and its content hash.

use std::path::{Path, PathBuf};

use patcs::curvelet::TilingParams;
use patcs::grid::AcousticConfig;
use patcs::phantom::PhantomSpec;
use patcs::sensing::Scheme;
use patcs::solvers::SolverConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub out_dir: PathBuf,
    pub acoustic: Acoustic,
    pub phantom: Phantom,
    pub noise: Noise,
    pub sampling: Sampling,
    pub tiling: Tilings,
    pub solver: Solvers,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Acoustic {
    /// Sound speed in m/s.
    pub c: f64,
    /// Voxel and detector pitch in m.
    pub h_x: f64,
    /// Voxel sound speed `c h_t / h_x`; fixes the time step.
    pub cv: f64,
    pub n_perp: usize,
    pub n_sensor: usize,
    /// Record length; derived from the grid diagonal when absent.
    pub n_t: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Phantom {
    pub seed: u64,
    pub vessels: usize,
    pub radius: [f64; 2],
    pub amplitude: [f64; 2],
    pub margin: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Noise {
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Uniform,
    Window,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    pub rate: f64,
    pub seed: u64,
    pub scheme: SchemeKind,
    /// Sensor range `[start, end)` favoured by the window scheme.
    pub window: [usize; 2],
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TilingConf {
    pub n_scales: usize,
    pub n_angles: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tilings {
    pub data: TilingConf,
    pub image: TilingConf,
    /// Wedge half-angle in radians.
    pub theta_w: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConf {
    pub tau: f64,
    pub mu: f64,
    pub c: f64,
    pub eta: f64,
    pub k_max: usize,
    pub reweight: bool,
    pub exact_inverse: bool,
    pub inner_tol: f64,
    pub inner_max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Solvers {
    pub dr: SolverConf,
    pub p0r: SolverConf,
    pub p0r_plus: SolverConf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            acoustic: Acoustic::default(),
            phantom: Phantom::default(),
            noise: Noise::default(),
            sampling: Sampling::default(),
            tiling: Tilings::default(),
            solver: Solvers::default(),
        }
    }
}

impl Default for Acoustic {
    fn default() -> Self {
        Self {
            c: 1500.0,
            h_x: 11.628e-6,
            cv: 0.3,
            n_perp: 42,
            n_sensor: 172,
            n_t: None,
        }
    }
}

impl Default for Phantom {
    fn default() -> Self {
        let d = PhantomSpec::default();
        Self {
            seed: d.seed,
            vessels: d.vessels,
            radius: [d.radius.0, d.radius.1],
            amplitude: [d.amplitude.0, d.amplitude.1],
            margin: d.margin,
        }
    }
}

impl Default for Noise {
    fn default() -> Self {
        Self { sigma: 0.01, seed: 7 }
    }
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            rate: 0.25,
            seed: 11,
            scheme: SchemeKind::Window,
            window: [60, 110],
            weight: 5.0,
        }
    }
}

impl Default for Tilings {
    fn default() -> Self {
        Self {
            data: TilingConf {
                n_scales: 4,
                n_angles: 32,
            },
            image: TilingConf {
                n_scales: 3,
                n_angles: 32,
            },
            theta_w: std::f64::consts::FRAC_PI_4,
        }
    }
}

impl Default for SolverConf {
    fn default() -> Self {
        SolverConfig::default().into()
    }
}

impl Default for Solvers {
    fn default() -> Self {
        Self {
            dr: SolverConfig::dr_paper().into(),
            p0r: SolverConfig::p0r_paper().into(),
            p0r_plus: SolverConfig::p0r_plus_paper().into(),
        }
    }
}

impl From<SolverConfig> for SolverConf {
    fn from(s: SolverConfig) -> Self {
        Self {
            tau: s.tau,
            mu: s.mu,
            c: s.c,
            eta: s.eta,
            k_max: s.k_max,
            reweight: s.reweight,
            exact_inverse: s.exact_inverse,
            inner_tol: s.inner_tol,
            inner_max: s.inner_max,
        }
    }
}

impl From<SolverConf> for SolverConfig {
    fn from(s: SolverConf) -> Self {
        Self {
            tau: s.tau,
            mu: s.mu,
            c: s.c,
            eta: s.eta,
            k_max: s.k_max,
            reweight: s.reweight,
            exact_inverse: s.exact_inverse,
            inner_tol: s.inner_tol,
            inner_max: s.inner_max,
        }
    }
}

impl From<TilingConf> for TilingParams {
    fn from(t: TilingConf) -> Self {
        TilingParams::new(t.n_scales, t.n_angles)
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies `--seed`: phantom, noise and sampling seeds become `s`, `s + 1`, `s + 2`.
    pub fn reseed(&mut self, s: u64) {
        self.phantom.seed = s;
        self.noise.seed = s.wrapping_add(1);
        self.sampling.seed = s.wrapping_add(2);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form, excluding the output directory.
    pub fn hash(&self) -> String {
        let canon = Self {
            out_dir: PathBuf::new(),
            ..self.clone()
        };
        let digest = Sha256::digest(canon.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn acoustic(&self) -> Result<AcousticConfig, CliError> {
        let a = &self.acoustic;
        let cfg = AcousticConfig::from_cv(a.c, a.h_x, a.cv, a.n_perp, a.n_sensor)?;
        Ok(match a.n_t {
            Some(n) => cfg.with_n_t(n)?,
            None => cfg,
        })
    }

    pub fn phantom_spec(&self) -> PhantomSpec {
        let p = &self.phantom;
        PhantomSpec {
            dims: (self.acoustic.n_perp, self.acoustic.n_sensor),
            seed: p.seed,
            vessels: p.vessels,
            radius: (p.radius[0], p.radius[1]),
            amplitude: (p.amplitude[0], p.amplitude[1]),
            margin: p.margin,
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self.sampling.scheme {
            SchemeKind::Uniform => Scheme::Uniform,
            SchemeKind::Window => Scheme::Window {
                start: self.sampling.window[0],
                end: self.sampling.window[1],
                weight: self.sampling.weight,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = ExperimentConfig::default();
        let back: ExperimentConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c: ExperimentConfig = toml::from_str("[noise]\nsigma = 0.04\n").unwrap();
        assert_eq!(c.noise.sigma, 0.04);
        assert_eq!(c.noise.seed, 7);
        assert_ne!(c.hash(), ExperimentConfig::default().hash());
        assert!(toml::from_str::<ExperimentConfig>("[noise]\nsgima = 1\n").is_err());
    }

    #[test]
    fn hash_ignores_output_directory() {
        let mut c = ExperimentConfig::default();
        let h = c.hash();
        c.out_dir = PathBuf::from("/elsewhere");
        assert_eq!(c.hash(), h);
        c.reseed(3);
        assert_ne!(c.hash(), h);
        assert_eq!(c.hash().len(), 64);
    }
}
