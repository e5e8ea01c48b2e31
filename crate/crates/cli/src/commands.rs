//! Pipeline stages. Every stage reads and writes files in the output
//! directory; array sidecars carry the config hash of the run that made them.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use patcs::curvelet::{Part, Tiling};
use patcs::grid::{DataField, ImageField};
use patcs::io::{self, meta_f64, Meta};
use patcs::metrics::{metrics, MetricsReport};
use patcs::phantom::make_phantom;
use patcs::sensing::{add_noise, make_pattern, subsample, zero_fill, Measurements, SamplingPattern};
use patcs::solvers::{reconstruct_dr, reconstruct_p0r, reconstruct_p0r_plus, SolverRun};
use patcs::wave::Propagator;
use patcs::wedge::{analyze_wedge, synthesize_wedge, WedgeSpec};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Tr,
    Dr,
    P0r,
    #[value(name = "p0r+")]
    P0rPlus,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Tr, Method::Dr, Method::P0r, Method::P0rPlus];

    pub fn name(self) -> &'static str {
        match self {
            Method::Tr => "tr",
            Method::Dr => "dr",
            Method::P0r => "p0r",
            Method::P0rPlus => "p0r+",
        }
    }

    fn stem(self) -> &'static str {
        match self {
            Method::P0rPlus => "p0r_plus",
            m => m.name(),
        }
    }

    pub fn output(self) -> String {
        format!("p0_{}.f64", self.stem())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Domain {
    Data,
    Image,
}

/// Shared state of one invocation.
pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub hash: String,
    pub export_png: bool,
}

impl Ctx {
    pub fn new(cfg: ExperimentConfig, export_png: bool) -> Self {
        let hash = cfg.hash();
        Self { cfg, hash, export_png }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.cfg.out_dir.join(name)
    }

    fn meta(&self, kind: &str) -> Meta {
        let mut m = Meta::new();
        m.insert("config_hash".into(), self.hash.clone());
        m.insert("kind".into(), kind.into());
        m
    }

    fn write(&self, name: &str, a: &Array2<f64>, mut meta: Meta) -> Result<(), CliError> {
        fs::create_dir_all(&self.cfg.out_dir).map_err(|e| CliError::io(&self.cfg.out_dir, e))?;
        let p = self.path(name);
        meta.insert("config_hash".into(), self.hash.clone());
        io::write_array(&p, a, &meta)?;
        if self.export_png {
            io::export_png(&p.with_extension("png"), a)?;
        }
        Ok(())
    }

    fn write_text(&self, name: &str, text: &str) -> Result<(), CliError> {
        fs::create_dir_all(&self.cfg.out_dir).map_err(|e| CliError::io(&self.cfg.out_dir, e))?;
        let p = self.path(name);
        fs::write(&p, text).map_err(|e| CliError::io(&p, e))
    }

    fn check_hash(&self, path: &Path, found: Option<&String>) -> Result<(), CliError> {
        match found {
            Some(h) if *h == self.hash => Ok(()),
            other => Err(CliError::HashMismatch {
                path: path.display().to_string(),
                expected: self.hash.clone(),
                found: other.cloned().unwrap_or_default(),
            }),
        }
    }

    fn read(&self, path: &Path) -> Result<(Array2<f64>, Meta), CliError> {
        if !path.exists() || !io::meta_path(path).exists() {
            let missing = if path.exists() { io::meta_path(path) } else { path.to_path_buf() };
            return Err(CliError::MissingFile(missing.display().to_string()));
        }
        let (a, meta) = io::read_array(path)?;
        self.check_hash(path, meta.get("config_hash"))?;
        Ok((a, meta))
    }

    fn read_data(&self, path: &Path) -> Result<DataField, CliError> {
        let (a, meta) = self.read(path)?;
        Ok(DataField::new(a, meta_f64(&meta, "dt", path)?, meta_f64(&meta, "cv", path)?)?)
    }

    fn read_image(&self, path: &Path) -> Result<ImageField, CliError> {
        let (a, meta) = self.read(path)?;
        Ok(ImageField::new(a, meta_f64(&meta, "h_x", path)?)?)
    }

    fn write_data(&self, name: &str, g: &DataField, kind: &str) -> Result<(), CliError> {
        let mut m = self.meta(kind);
        m.insert("dt".into(), format!("{:e}", g.dt));
        m.insert("cv".into(), format!("{}", g.cv));
        self.write(name, &g.values, m)
    }

    fn write_image(&self, name: &str, p: &ImageField, kind: &str) -> Result<(), CliError> {
        let mut m = self.meta(kind);
        m.insert("h_x".into(), format!("{:e}", p.spacing));
        self.write(name, &p.values, m)
    }

    fn read_pattern(&self) -> Result<SamplingPattern, CliError> {
        let p = self.path("pattern.txt");
        let text = fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
        let found = text
            .lines()
            .find_map(|l| l.strip_prefix("# config_hash="))
            .map(str::to_string);
        self.check_hash(&p, found.as_ref())?;
        let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
        Ok(SamplingPattern::from_text(&body)?)
    }
}

fn log(msg: impl AsRef<str>) {
    eprintln!("{}", msg.as_ref());
}

pub fn simulate(ctx: &Ctx) -> Result<(), CliError> {
    let acoustic = ctx.cfg.acoustic()?;
    let p0 = ImageField::new(make_phantom(&ctx.cfg.phantom_spec())?, acoustic.h_x)?;
    let prop = Propagator::new(&acoustic)?;
    let g = prop.forward(&p0)?;
    let noisy = add_noise(&g, ctx.cfg.noise.sigma, ctx.cfg.noise.seed)?;
    ctx.write_image("p0.f64", &p0, "phantom")?;
    ctx.write_data("g_clean.f64", &g, "data")?;
    ctx.write_data("g.f64", &noisy, "noisy_data")?;
    log(format!("simulate: {}x{} image, {}x{} data", p0.dims().0, p0.dims().1, g.dims().0, g.dims().1));
    Ok(())
}

pub fn subsample_cmd(ctx: &Ctx) -> Result<(), CliError> {
    let g = ctx.read_data(&ctx.path("g.f64"))?;
    let s = &ctx.cfg.sampling;
    let pat = make_pattern(g.dims().1, s.rate, ctx.cfg.scheme(), s.seed)?;
    let b = subsample(&g, &pat)?;
    let b0 = zero_fill(&b, &pat)?;
    ctx.write_text("pattern.txt", &format!("# config_hash={}\n{}", ctx.hash, pat.to_text()))?;
    ctx.write_data("b.f64", &DataField::new(b.values, b.dt, b.cv)?, "measurements")?;
    ctx.write_data("b0.f64", &b0, "zero_filled")?;
    log(format!("subsample: {} of {} sensors", pat.m(), pat.n_sensor()));
    Ok(())
}

/// Runs one method. Returns `false` when an iterative solver stopped at its cap.
/// With `input`, `tr` time-reverses that full data file into `p0_tr_<stem>.f64`.
pub fn reconstruct(ctx: &Ctx, method: Method, input: Option<&Path>) -> Result<bool, CliError> {
    let acoustic = ctx.cfg.acoustic()?;
    let prop = Propagator::new(&acoustic)?;
    let out = method.output();
    if let (Method::Tr, Some(path)) = (method, input) {
        let g = ctx.read_data(path)?;
        let p = prop.time_reverse(&g, None)?.clip_negative();
        let stem = path.file_stem().unwrap_or_default().to_string_lossy();
        ctx.write_image(&format!("p0_tr_{stem}.f64"), &p, "reconstruction")?;
        log(format!("reconstruct tr: full-data time reversal of {}", path.display()));
        return Ok(true);
    }
    let pat = ctx.read_pattern()?;
    let bf = ctx.read_data(&ctx.path("b.f64"))?;
    let b = Measurements {
        values: bf.values,
        dt: bf.dt,
        cv: bf.cv,
    };
    let image_tiling = || Tiling::new(acoustic.image_dims(), ctx.cfg.tiling.image.into());
    let solver = &ctx.cfg.solver;
    let run = match method {
        Method::Tr => {
            let p = prop.time_reverse(&zero_fill(&b, &pat)?, Some(pat.selected()))?.clip_negative();
            ctx.write_image(&out, &p, "reconstruction")?;
            log("reconstruct tr: time reversal of the sampled traces");
            return Ok(true);
        }
        Method::Dr => {
            let t = Tiling::new(acoustic.data_dims(), ctx.cfg.tiling.data.into())?;
            let spec = WedgeSpec::new(&t, acoustic.cv(), ctx.cfg.tiling.theta_w)?;
            let (g, run) = reconstruct_dr(&b, &pat, &t, &spec, &solver.dr.into())?;
            ctx.write_data("g_dr.f64", &g, "recovered_data")?;
            let p = prop.time_reverse(&g, None)?.clip_negative();
            ctx.write_image(&out, &p, "reconstruction")?;
            run
        }
        Method::P0r => {
            let (p, run) = reconstruct_p0r(&b, &pat, &image_tiling()?, &solver.p0r.into(), &prop)?;
            ctx.write_image(&out, &p, "reconstruction")?;
            run
        }
        Method::P0rPlus => {
            let (p, run) = reconstruct_p0r_plus(&b, &pat, &image_tiling()?, &solver.p0r_plus.into(), &prop)?;
            ctx.write_image(&out, &p, "reconstruction")?;
            run
        }
    };
    write_run(ctx, method, &run)?;
    log(format!(
        "reconstruct {}: {} iterations, last change {:.3e}{}",
        method.name(),
        run.iterations(),
        run.last_change(),
        if run.converged { "" } else { " (tolerance not reached)" }
    ));
    Ok(run.converged)
}

fn write_run(ctx: &Ctx, method: Method, run: &SolverRun) -> Result<(), CliError> {
    ctx.write_text(
        &format!("trace_{}.csv", method.stem()),
        &format!("# config_hash={}\n{}", ctx.hash, run.to_csv()),
    )?;
    let summary = json!({
        "config_hash": ctx.hash,
        "method": run.method,
        "iterations": run.iterations(),
        "converged": run.converged,
        "last_change": run.last_change(),
        "sparsity": run.sparsity,
        "epsilon": run.epsilon,
        "lipschitz": run.lipschitz,
        "smw_gap": run.smw_gap,
        "primal_residual": run.primal_residual,
        "wall_ms": run.wall_ms,
    });
    ctx.write_text(&format!("run_{}.json", method.stem()), &format!("{summary:#}\n"))
}

/// Scores every reconstruction present (or the explicit `rec` files) against
/// the phantom and writes `metrics.csv`.
pub fn metrics_cmd(ctx: &Ctx, rec: &[PathBuf]) -> Result<String, CliError> {
    let reference = ctx.read_image(&ctx.path("p0.f64"))?;
    let entries: Vec<(String, PathBuf)> = if rec.is_empty() {
        Method::ALL
            .iter()
            .map(|m| (m.name().to_string(), ctx.path(&m.output())))
            .filter(|(_, p)| p.exists())
            .collect()
    } else {
        rec.iter()
            .map(|p| (p.file_stem().unwrap_or_default().to_string_lossy().into_owned(), p.clone()))
            .collect()
    };
    if entries.is_empty() {
        return Err(CliError::MissingFile(ctx.path("p0_<method>.f64").display().to_string()));
    }
    let mut csv = format!("# config_hash={}\n{}\n", ctx.hash, MetricsReport::CSV_HEADER);
    for (name, path) in entries {
        let p = ctx.read_image(&path)?;
        csv.push_str(&metrics(&p.values, &reference.values)?.csv_row(&name));
        csv.push('\n');
    }
    ctx.write_text("metrics.csv", &csv)?;
    Ok(csv)
}

/// Curvelet diagnostics of one array: round trip, range loss, wedge counts,
/// best 5% term error, plus a tiling label map and per-wedge magnitude image.
pub fn transform(ctx: &Ctx, domain: Domain, input: Option<&Path>) -> Result<serde_json::Value, CliError> {
    let acoustic = ctx.cfg.acoustic()?;
    let (name, default, params) = match domain {
        Domain::Data => ("data", "g.f64", ctx.cfg.tiling.data),
        Domain::Image => ("image", "p0.f64", ctx.cfg.tiling.image),
    };
    let path = input.map_or_else(|| ctx.path(default), Path::to_path_buf);
    let (u, _) = ctx.read(&path)?;
    let t = Tiling::new(u.dim(), params.into())?;
    let c = t.analyze(u.view())?;
    let rel = |a: &Array2<f64>| {
        let d = a.iter().zip(&u).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        d / u.iter().map(|v| v * v).sum::<f64>().sqrt()
    };
    let round_trip = rel(&t.synthesize(&c)?);
    let s = (0.05 * u.len() as f64).round() as usize;
    let mut report = json!({
        "config_hash": ctx.hash,
        "domain": name,
        "input": path.display().to_string(),
        "dims": [u.nrows(), u.ncols()],
        "n_scales": params.n_scales,
        "n_angles": params.n_angles,
        "n_coeffs": t.n_coeffs(),
        "redundancy": t.n_coeffs() as f64 / u.len() as f64,
        "round_trip_error": round_trip,
        "best_5pct_error": t.best_s_term_error(u.view(), s)?,
    });
    if domain == Domain::Data {
        let spec = WedgeSpec::new(&t, acoustic.cv(), ctx.cfg.tiling.theta_w)?;
        let back = synthesize_wedge(&t, &spec, &analyze_wedge(&t, &spec, u.view())?)?;
        let kept: Vec<_> = (1..params.n_scales).map(|s| spec.count(s)).collect();
        report["range_loss"] = json!(rel(&back));
        report["out_of_range_energy_fraction"] = json!(spec.out_of_range_energy(&c)? / c.norm().powi(2));
        report["wedges_in_range_per_scale"] = json!(kept);
    }
    ctx.write_text(&format!("transform_{name}.json"), &format!("{report:#}\n"))?;
    fs::create_dir_all(&ctx.cfg.out_dir).map_err(|e| CliError::io(&ctx.cfg.out_dir, e))?;
    io::export_png(&ctx.path(&format!("tiling_{name}.png")), &tiling_map(&t))?;
    io::export_png(&ctx.path(&format!("coeffs_{name}.png")), &wedge_magnitudes(&t, &c))?;
    Ok(report)
}

/// Frequency plane (zero frequency centred) labelled by the dominant window.
fn tiling_map(t: &Tiling) -> Array2<f64> {
    let (n1, n2) = t.dims();
    let mut best = Array2::<f64>::zeros((n1, n2));
    let mut label = Array2::<f64>::zeros((n1, n2));
    for b in 0..t.blocks().len() {
        let (part, support) = t.block_support(b);
        if part == Part::PairImag {
            continue;
        }
        let blk = &t.blocks()[b];
        let value = (blk.scale * 64 + blk.angle + 1) as f64;
        for (a, c, w) in support {
            for (x, y) in [(a, c), (-a, -c)] {
                let i = (x + (n1 / 2) as i64).rem_euclid(n1 as i64) as usize;
                let j = (y + (n2 / 2) as i64).rem_euclid(n2 as i64) as usize;
                if w > best[[i, j]] {
                    best[[i, j]] = w;
                    label[[i, j]] = value;
                }
            }
        }
    }
    label
}

/// Scales by angles grid of per-wedge peak magnitudes.
fn wedge_magnitudes(t: &Tiling, c: &patcs::CurveletCoeffs) -> Array2<f64> {
    let p = t.params();
    let width = (0..p.n_scales).map(|s| p.angles_at(s)).max().unwrap_or(1);
    let mut out = Array2::zeros((p.n_scales, width));
    for (i, blk) in c.blocks().iter().enumerate() {
        let m = c.block(i).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cell = &mut out[[blk.scale, blk.angle.min(width - 1)]];
        *cell = f64::max(*cell, m);
    }
    out
}

/// simulate, subsample, every method, metrics. Returns the metrics CSV and
/// the methods that stopped at their iteration cap.
pub fn pipeline(ctx: &Ctx) -> Result<(String, Vec<String>), CliError> {
    simulate(ctx)?;
    subsample_cmd(ctx)?;
    let mut stalled = Vec::new();
    for m in Method::ALL {
        if !reconstruct(ctx, m, None)? {
            stalled.push(m.name().to_string());
        }
    }
    Ok((metrics_cmd(ctx, &[])?, stalled))
}
