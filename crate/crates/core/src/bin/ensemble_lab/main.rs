mod demos;
mod plot;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ensemble_lab::checks;
use ensemble_lab::curve::logspace;
use ensemble_lab::duality;
use ensemble_lab::macroscopic::{self, SolverOptions};
use ensemble_lab::micro::{self, FlatHistogramOptions, Tail};
use ensemble_lab::{LabError, ModelJson, Result, SampledCurve};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(name = "ensemble-lab", version, about = "Mean-field ensemble laboratory: model checks, microcanonical tails, macroscopic curves, duality analysis")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the structural checks a model's kernel and prior must satisfy
    Validate(ValidateArgs),
    /// Finite-N tail probabilities (1/N) log P(H/N >< e)
    Micro(MicroArgs),
    /// Mean-field free energy and entropy curves
    #[command(name = "macro")]
    MacroCmd(MacroArgs),
    /// Legendre analysis of sampled curves and the equivalence gap
    Duality(DualityArgs),
    /// Three-way critical inverse temperature comparison
    Critical(CriticalArgs),
    /// Built-in presets with headline anchors
    Demo(DemoArgs),
    /// Deterministic SVG line plot of curve CSVs
    Plot(PlotArgs),
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Report JSON path (defaults next to the model file)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Upper,
    Lower,
}

#[derive(Clone, Copy, ValueEnum)]
enum Estimator {
    Direct,
    Dos,
}

#[derive(Args)]
struct MicroArgs {
    #[arg(long)]
    model: PathBuf,
    /// Override the particle count from the model file
    #[arg(long = "N")]
    n: Option<usize>,
    /// Energy grid as min:max:steps
    #[arg(long = "e-grid")]
    e_grid: String,
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Direction::Lower)]
    direction: Direction,
    #[arg(long, value_enum, default_value_t = Estimator::Direct)]
    estimator: Estimator,
    /// Histogram window min:max (dos estimator; defaults to the grid span)
    #[arg(long)]
    window: Option<String>,
    #[arg(long, default_value_t = 64)]
    bins: usize,
    #[arg(long, default_value_t = 3)]
    replicas: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MacroMode {
    Radial,
    Planar,
}

#[derive(Args)]
struct MacroArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value_t = MacroMode::Radial)]
    mode: MacroMode,
    /// Shells (radial) or cells per axis (planar)
    #[arg(long, default_value_t = 256)]
    resolution: usize,
    /// Truncation radius for unbounded domains
    #[arg(long = "r-max", default_value_t = 6.0)]
    r_max: f64,
    /// Inverse-temperature grid min:max:steps
    #[arg(long = "beta-grid")]
    beta_grid: String,
    /// Optional energy grid min:max:steps for the dual entropy curve
    #[arg(long = "e-grid")]
    e_grid: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long = "out-prefix")]
    out_prefix: String,
}

#[derive(Args)]
struct DualityArgs {
    #[arg(long = "s-curve")]
    s_curve: PathBuf,
    #[arg(long = "f-curve")]
    f_curve: PathBuf,
    #[arg(long = "tol-equiv", default_value_t = 1e-3)]
    tol_equiv: f64,
    #[arg(long = "out-prefix")]
    out_prefix: String,
}

#[derive(Args)]
struct CriticalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Secants in the slope-fit window
    #[arg(long, default_value_t = 6)]
    window: usize,
    #[arg(long = "N", default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 256)]
    shells: usize,
    #[arg(long = "r-max", default_value_t = 6.0)]
    r_max: f64,
    #[arg(long = "rel-tol", default_value_t = 0.15)]
    rel_tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoName {
    Vortex,
    Catastrophe,
    BornMayer,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(value_enum)]
    name: DemoName,
    #[arg(long = "out-dir", default_value = "demo-out")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct PlotArgs {
    /// Curve CSV files (columns: e,value,stderr,flag)
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize, Default)]
struct RunManifest {
    tool_version: String,
    command: String,
    model_sha256: Option<String>,
    seeds: Vec<u64>,
    budgets: serde_json::Value,
    wall_time_s: f64,
    outputs: Vec<String>,
    warnings: Vec<String>,
}

impl RunManifest {
    fn new(command: &str) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            ..Default::default()
        }
    }
}

fn main() {
    if let Ok(threads) = std::env::var("ENSEMBLE_LAB_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    std::process::exit(run(cli));
}

/// 0 = all checks pass, 1 = a scientific check failed, 2 = usage/config.
fn run(cli: Cli) -> i32 {
    let result = match cli.cmd {
        Cmd::Validate(a) => cmd_validate(a),
        Cmd::Micro(a) => cmd_micro(a),
        Cmd::MacroCmd(a) => cmd_macro(a),
        Cmd::Duality(a) => cmd_duality(a),
        Cmd::Critical(a) => cmd_critical(a),
        Cmd::Demo(a) => demos::cmd_demo(a.name, &a.out_dir, a.seed),
        Cmd::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                LabError::Usage(_) | LabError::Config(_) | LabError::Json(_)
                | LabError::Io(_) | LabError::Csv(_) => 2,
                _ => 1,
            }
        }
    }
}

// --- shared plumbing -------------------------------------------------------

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn write_curve_atomic(curve: &SampledCurve, path: &Path, x_name: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    curve.write_csv_named(&tmp, x_name)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn load_model(path: &Path, manifest: &mut RunManifest) -> Result<ModelJson> {
    let text = std::fs::read_to_string(path)?;
    manifest.model_sha256 = Some(format!("{:x}", Sha256::digest(text.as_bytes())));
    ModelJson::from_str(&text)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(LabError::Usage(format!("grid must be min:max:steps, got {spec:?}")));
    }
    let min: f64 = parts[0]
        .parse()
        .map_err(|_| LabError::Usage(format!("bad grid min {:?}", parts[0])))?;
    let max: f64 = parts[1]
        .parse()
        .map_err(|_| LabError::Usage(format!("bad grid max {:?}", parts[1])))?;
    let steps: usize = parts[2]
        .parse()
        .map_err(|_| LabError::Usage(format!("bad grid steps {:?}", parts[2])))?;
    if steps < 2 || !(max > min) {
        return Err(LabError::Usage("grid needs max > min and steps >= 2".into()));
    }
    Ok(ensemble_lab::curve::linspace(min, max, steps))
}

fn finish_manifest(mut manifest: RunManifest, started: Instant, path: &Path) -> Result<()> {
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    write_atomic(path, serde_json::to_string_pretty(&manifest)?.as_bytes())
}

fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.push_str(".manifest.json");
    out.with_file_name(name)
}

// --- subcommands -----------------------------------------------------------

fn cmd_validate(a: ValidateArgs) -> Result<i32> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("validate");
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| a.model.with_extension("report.json"));
    let mpath = manifest_path_for(&out);
    let model_json = load_model(&a.model, &mut manifest)?;
    let model = model_json.build()?;

    let mut sections: Vec<(String, ensemble_lab::ValidationReport)> = Vec::new();
    if let Some(profile) = model.kernel.as_radial() {
        let grid = logspace(1e-6, 1e2, 120);
        sections.push((
            "homogeneous-assumptions".into(),
            checks::check_homogeneous_assumptions(profile, &grid)?,
        ));
        // weak positive definiteness on deterministic scattered points;
        // singular diagonals are a precondition failure, reported as a
        // warning rather than a check verdict
        let pts = scattered_points(&model, 64);
        match checks::check_weak_positive_definiteness(&model.kernel, &pts, 64) {
            Ok(r) => sections.push(("weak-positive-definiteness".into(), r)),
            Err(LabError::Precondition(msg)) => {
                manifest.warnings.push(format!("weak-PD check skipped: {msg}"))
            }
            Err(e) => return Err(e),
        }
    } else {
        manifest
            .warnings
            .push("kernel is not radial; profile checks skipped".into());
    }

    let all_pass = sections.iter().all(|(_, r)| r.passed());
    let body = serde_json::to_string_pretty(&serde_json::json!({
        "pass": all_pass,
        "sections": sections
            .iter()
            .map(|(name, r)| serde_json::json!({"name": name, "report": r}))
            .collect::<Vec<_>>(),
    }))?;
    write_atomic(&out, body.as_bytes())?;
    manifest.outputs.push(out.display().to_string());
    finish_manifest(manifest, started, &mpath)?;
    println!("validate: {}", if all_pass { "pass" } else { "FAIL" });
    Ok(if all_pass { 0 } else { 1 })
}

fn scattered_points(model: &ensemble_lab::ModelSpec, count: usize) -> Vec<Vec<f64>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xbead);
    let d = model.dim();
    let mut pts = Vec::with_capacity(count);
    let mut buf = vec![0.0; d];
    for _ in 0..count {
        model
            .prior
            .sample(&mut rng, &mut buf)
            .expect("built-in priors always sample");
        pts.push(buf.clone());
    }
    pts
}

fn cmd_micro(a: MicroArgs) -> Result<i32> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("micro");
    manifest.seeds.push(a.seed);
    let mpath = manifest_path_for(&a.out);
    let mut model_json = load_model(&a.model, &mut manifest)?;
    if a.n.is_some() {
        model_json.n = a.n;
    }
    let model = model_json.build()?;
    let grid = parse_grid(&a.e_grid)?;
    manifest.budgets = serde_json::json!({
        "samples": a.samples,
        "grid_points": grid.len(),
        "estimator": match a.estimator { Estimator::Direct => "direct", Estimator::Dos => "dos" },
    });
    let tail = match a.direction {
        Direction::Upper => Tail::Upper,
        Direction::Lower => Tail::Lower,
    };
    let curve = match a.estimator {
        Estimator::Direct => micro::tail_logprob_direct(&model, &grid, tail, a.samples, a.seed)?,
        Estimator::Dos => {
            let window = match &a.window {
                Some(w) => {
                    let parts: Vec<&str> = w.split(':').collect();
                    if parts.len() != 2 {
                        return Err(LabError::Usage("window must be min:max".into()));
                    }
                    let lo: f64 = parts[0]
                        .parse()
                        .map_err(|_| LabError::Usage("bad window min".into()))?;
                    let hi: f64 = parts[1]
                        .parse()
                        .map_err(|_| LabError::Usage("bad window max".into()))?;
                    (lo, hi)
                }
                None => {
                    let span = grid[grid.len() - 1] - grid[0];
                    (grid[0] - 0.05 * span, grid[grid.len() - 1] + 0.05 * span)
                }
            };
            let opts = FlatHistogramOptions {
                window,
                bins: a.bins,
                replicas: a.replicas,
                ..FlatHistogramOptions::default()
            };
            micro::tail_logprob_flat_histogram(&model, &grid, tail, &opts, a.samples, a.seed)?
        }
    };
    write_curve_atomic(&curve, &a.out, "e")?;
    manifest.outputs.push(a.out.display().to_string());
    let flagged = curve.y.iter().filter(|v| !v.is_finite()).count();
    if flagged > 0 {
        manifest
            .warnings
            .push(format!("{flagged} grid points had zero hits (flagged)"));
    }
    finish_manifest(manifest, started, &mpath)?;
    println!("micro: wrote {} ({} points, {} flagged)", a.out.display(), curve.x.len(), flagged);
    Ok(0)
}

fn cmd_macro(a: MacroArgs) -> Result<i32> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("macro");
    let prefix = &a.out_prefix;
    let mpath = PathBuf::from(format!("{prefix}manifest.json"));
    let model_json = load_model(&a.model, &mut manifest)?;
    let model = model_json.build()?;
    let betas = parse_grid(&a.beta_grid)?;
    manifest.budgets = serde_json::json!({
        "resolution": a.resolution,
        "r_max": a.r_max,
        "betas": betas.len(),
    });
    let dm = match a.mode {
        MacroMode::Radial => macroscopic::discretize_radial(&model, a.resolution, a.r_max)?,
        MacroMode::Planar => macroscopic::discretize_planar(&model, a.resolution, a.r_max)?,
    };
    if dm.truncated_mass > 1e-6 {
        manifest.warnings.push(format!(
            "prior mass {:.2e} beyond the truncation radius",
            dm.truncated_mass
        ));
    }
    let opts = SolverOptions { theta: a.damping, tol: a.tol, ..SolverOptions::default() };
    let (f_curve, sols) = macroscopic::free_energy_curve(&dm, &betas, &opts)?;
    let f_path = PathBuf::from(format!("{prefix}F.csv"));
    write_curve_atomic(&f_curve, &f_path, "beta")?;
    manifest.outputs.push(f_path.display().to_string());
    for s in &sols {
        if !s.converged {
            manifest
                .warnings
                .push(format!("solver did not converge (residual {:.2e})", s.residual));
        }
    }
    // snapshot the minimizers at the grid ends and middle
    for (tag, idx) in [("lo", 0usize), ("mid", sols.len() / 2), ("hi", sols.len() - 1)] {
        let path = PathBuf::from(format!("{prefix}measure_{tag}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["r", "mass", "prior_mass"])?;
        for i in 0..dm.k {
            w.write_record([
                format!("{:.17e}", dm.r[i]),
                format!("{:.17e}", sols[idx].mu[i]),
                format!("{:.17e}", dm.mass0[i]),
            ])?;
        }
        w.flush()?;
        manifest.outputs.push(path.display().to_string());
    }
    if let Some(eg) = &a.e_grid {
        let e_grid = parse_grid(eg)?;
        let (blo, bhi) = (betas[0], betas[betas.len() - 1]);
        let s_curve = macroscopic::entropy_curve_dual(&dm, &e_grid, blo, bhi, &opts)?;
        let s_path = PathBuf::from(format!("{prefix}S.csv"));
        write_curve_atomic(&s_curve, &s_path, "e")?;
        manifest.outputs.push(s_path.display().to_string());
    }
    let residuals: Vec<f64> = sols.iter().map(|s| s.residual).collect();
    manifest.budgets["max_residual"] =
        serde_json::json!(residuals.iter().copied().fold(0.0f64, f64::max));
    finish_manifest(manifest, started, &mpath)?;
    println!("macro: wrote {} curves under {prefix}", manifest_outputs_count(prefix)?);
    Ok(0)
}

fn manifest_outputs_count(prefix: &str) -> Result<usize> {
    // count files actually present with this prefix (cheap sanity echo)
    let dir = Path::new(prefix).parent().unwrap_or(Path::new("."));
    let stem = Path::new(prefix)
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut n = 0;
    let read_dir = if dir.as_os_str().is_empty() { Path::new(".") } else { dir };
    for entry in std::fs::read_dir(read_dir)? {
        let entry = entry?;
        if entry.file_name().to_string_lossy().starts_with(&stem) {
            n += 1;
        }
    }
    Ok(n)
}

fn cmd_duality(a: DualityArgs) -> Result<i32> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("duality");
    let prefix = &a.out_prefix;
    let mpath = PathBuf::from(format!("{prefix}manifest.json"));
    let s_curve = SampledCurve::read_csv(&a.s_curve)?;
    let f_curve = SampledCurve::read_csv(&a.f_curve)?;

    let s_star = duality::legendre_concave(&s_curve, 2)?;
    let f_star = duality::legendre_concave(&f_curve, 2)?;
    let s_env = duality::concave_envelope(&s_curve)?;
    let gap = duality::equivalence_gap(&s_curve, &f_curve, a.tol_equiv)?;

    for (name, curve, xname) in [
        ("s_star.csv", &s_star, "beta"),
        ("f_star.csv", &f_star, "e"),
        ("s_envelope.csv", &s_env, "e"),
    ] {
        let path = PathBuf::from(format!("{prefix}{name}"));
        write_curve_atomic(curve, &path, xname)?;
        manifest.outputs.push(path.display().to_string());
    }
    let report_path = PathBuf::from(format!("{prefix}duality.json"));
    write_atomic(
        &report_path,
        serde_json::to_string_pretty(&serde_json::json!({
            "equivalence": gap,
            "tol_equiv": a.tol_equiv,
        }))?
        .as_bytes(),
    )?;
    manifest.outputs.push(report_path.display().to_string());
    finish_manifest(manifest, started, &mpath)?;
    println!(
        "duality: gap = {:.3e} at e = {:.6} -> {}",
        gap.gap,
        gap.argmax_e,
        if gap.pass { "pass" } else { "FAIL" }
    );
    Ok(if gap.pass { 0 } else { 1 })
}

fn cmd_critical(a: CriticalArgs) -> Result<i32> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("critical");
    manifest.seeds.push(a.seed);
    let mpath = manifest_path_for(&a.out);
    let model_json = load_model(&a.model, &mut manifest)?;
    let model = model_json.build()?;
    let budgets = duality::CrosscheckBudgets {
        n_particles: a.n,
        micro_samples: a.samples,
        seed: a.seed,
        shells: a.shells,
        r_max: a.r_max,
        window: a.window,
        rel_tol: a.rel_tol,
        ..duality::CrosscheckBudgets::default()
    };
    manifest.budgets = serde_json::to_value(&budgets)?;
    let report = duality::critical_beta_crosscheck(&model, &budgets)?;
    write_atomic(&a.out, serde_json::to_string_pretty(&report)?.as_bytes())?;
    manifest.outputs.push(a.out.display().to_string());
    finish_manifest(manifest, started, &mpath)?;
    let ok = report.agreement_macro.unwrap_or(false) && report.agreement_micro.unwrap_or(false);
    println!(
        "critical: analytic = {}, macro = {:?}, micro = {:?} -> {}",
        report.beta_analytic,
        report.beta_macro.as_ref().map(|s| s.slope),
        report.beta_micro.as_ref().map(|s| s.slope),
        if ok { "agree" } else { "DISAGREE" }
    );
    Ok(if ok { 0 } else { 1 })
}

fn cmd_plot(a: PlotArgs) -> Result<i32> {
    if a.inputs.is_empty() {
        return Err(LabError::Usage("plot needs at least one CSV".into()));
    }
    let mut curves = Vec::new();
    for path in &a.inputs {
        let curve = SampledCurve::read_csv(path)?;
        if curve.x.is_empty() {
            return Err(LabError::Usage(format!("empty csv: {}", path.display())));
        }
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        curves.push((stem, curve));
    }
    let svg = plot::render_svg(&curves)?;
    write_atomic(&a.out, svg.as_bytes())?;
    println!("plot: wrote {}", a.out.display());
    Ok(0)
}
