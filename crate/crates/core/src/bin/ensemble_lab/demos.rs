//! Built-in presets run at desk-scale budgets, each ending in a short
//! summary comparing computed numbers to their known anchors.

use crate::{write_atomic, write_curve_atomic, DemoName};
use ensemble_lab::checks;
use ensemble_lab::duality::{asymptotic_slope, beta_c_analytic};
use ensemble_lab::macroscopic::{
    best_core_halo_at_energy, concentration_family, discretize_radial, entropy_curve_dual,
    solve_mean_field, uniform_disc_cross_energy, SolverOptions,
};
use ensemble_lab::micro::{self, Tail};
use ensemble_lab::model::{Domain, ExteriorPotential, ModelSpec, PriorMeasure};
use ensemble_lab::{kernel::PairKernel, RadialProfile, Result};
use std::path::Path;

pub fn cmd_demo(name: DemoName, out_dir: &Path, seed: u64) -> Result<i32> {
    std::fs::create_dir_all(out_dir)?;
    match name {
        DemoName::Vortex => demo_vortex(out_dir, seed),
        DemoName::Catastrophe => demo_catastrophe(out_dir),
        DemoName::BornMayer => demo_born_mayer(out_dir),
    }
}

/// Planar point-vortex gas with a standard Gaussian prior: the entropy
/// slope should approach -4, matching the analytic critical value.
fn demo_vortex(out_dir: &Path, seed: u64) -> Result<i32> {
    let model = ModelSpec::new(
        Domain::FullSpace { d: 2 },
        PairKernel::radial(RadialProfile::log()),
        ExteriorPotential::Zero,
        PriorMeasure::Gaussian { d: 2, lambda: 1.0 },
        Some(8),
    )?;
    let beta_c = beta_c_analytic(model.kernel.as_radial().unwrap(), 2)?;

    let dm = discretize_radial(&model, 512, 6.0)?;
    let opts = SolverOptions::default();
    let e0 = dm.energy(&dm.mass0);
    let beta_edge = beta_c * 0.98;
    let e_hi = solve_mean_field(&dm, beta_edge, None, &opts)?.energy;
    let grid = ensemble_lab::curve::linspace(e0 + 0.01, e_hi, 40);
    let s_macro = entropy_curve_dual(&dm, &grid, beta_edge * 1.001, 1.0, &opts)?;
    let slope_macro = asymptotic_slope(&s_macro, 6)?;
    write_curve_atomic(&s_macro, &out_dir.join("vortex_S_macro.csv"), "e")?;

    // finite-N upper tail for the same model
    let pilot = micro::sample_energies(&model, 20_000, seed ^ 0x7a)?;
    let mut sorted = pilot;
    sorted.sort_by(f64::total_cmp);
    let hi = sorted[sorted.len() - 3];
    let lo = sorted[sorted.len() / 2];
    let e_grid = ensemble_lab::curve::linspace(lo, hi, 20);
    let s_micro = micro::tail_logprob_direct(&model, &e_grid, Tail::Upper, 200_000, seed)?;
    let slope_micro = asymptotic_slope(&s_micro, 6)?;
    write_curve_atomic(&s_micro, &out_dir.join("vortex_S_micro_N8.csv"), "e")?;

    let concave = micro::concavity_check(&s_micro, 2.0).passed();
    let macro_ok = slope_macro.slope > -4.4 && slope_macro.slope < -3.6;
    let summary = serde_json::json!({
        "beta_c_analytic": beta_c,
        "macro_slope": slope_macro,
        "micro_slope_N8": slope_micro,
        "micro_curve_concave": concave,
        "anchor": "slope near -4",
        "pass": macro_ok && concave,
    });
    write_atomic(
        &out_dir.join("vortex_summary.json"),
        serde_json::to_string_pretty(&summary)?.as_bytes(),
    )?;
    println!(
        "vortex: beta_c = {beta_c}, macro slope = {:.3}, micro slope (N=8) = {:.3}, concave = {concave}",
        slope_macro.slope, slope_micro.slope
    );
    Ok(if macro_ok && concave { 0 } else { 1 })
}

/// Inverse-distance kernel on the unit disc: shrinking cores make the
/// energy blow up like eps^-alpha while a matched core-halo family keeps
/// the entropy flat, so no maximum-entropy measure exists at high energy.
fn demo_catastrophe(out_dir: &Path) -> Result<i32> {
    let alpha = 1.0;
    let w = RadialProfile::inverse_power(alpha);
    let e0 = 0.5 * uniform_disc_cross_energy(&w, 1.0, 1.0);

    let mut table = Vec::new();
    let mut scaling_ok = true;
    for eps in [0.5, 0.1, 0.02] {
        let e_eps = 0.5 * uniform_disc_cross_energy(&w, eps, eps);
        let ratio = e_eps / e0;
        let expected = eps.powf(-alpha);
        let rel = (ratio / expected - 1.0).abs();
        scaling_ok &= rel < 0.01;
        table.push(serde_json::json!({
            "eps": eps,
            "energy_ratio": ratio,
            "expected": expected,
            "rel_err": rel,
        }));
    }

    // entropy bound curve along the one-parameter family
    let eps_grid: Vec<f64> = (1..=20).map(|k| (10.0f64).powf(-(k as f64) / 5.0)).collect();
    let mut rows = Vec::new();
    for &eps in &eps_grid {
        let member = concentration_family(alpha, eps);
        rows.push((eps, member.entropy, member.energy));
    }
    {
        let path = out_dir.join("catastrophe_family.csv");
        let mut wtr = csv::Writer::from_path(&path)?;
        wtr.write_record(["eps", "entropy", "energy"])?;
        for (eps, s, e) in &rows {
            wtr.write_record([
                format!("{eps:.17e}"),
                format!("{s:.17e}"),
                format!("{e:.17e}"),
            ])?;
        }
        wtr.flush()?;
    }

    let best = best_core_halo_at_energy(alpha, 5.0 * e0)?;
    let flat = best.entropy >= -0.05;
    let summary = serde_json::json!({
        "alpha": alpha,
        "uniform_energy": e0,
        "scaling_table": table,
        "core_halo_at_5e0": best,
        "entropy_stays_flat": flat,
        "pass": scaling_ok && flat,
    });
    write_atomic(
        &out_dir.join("catastrophe_summary.json"),
        serde_json::to_string_pretty(&summary)?.as_bytes(),
    )?;
    println!(
        "catastrophe: scaling ok = {scaling_ok}, entropy at 5 e0 = {:.4} (flat = {flat})",
        best.entropy
    );
    Ok(if scaling_ok && flat { 0 } else { 1 })
}

/// Screened-exponential kernel restricted to a ball of radius 1/(2a):
/// the weak positive definiteness check must pass there.
fn demo_born_mayer(out_dir: &Path) -> Result<i32> {
    use rand::prelude::*;
    let a = 2.0;
    let radius = 1.0 / (2.0 * a);
    let kernel = PairKernel::radial(RadialProfile::born_mayer(a));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut pts = Vec::with_capacity(64);
    while pts.len() < 64 {
        let x = rng.random::<f64>() * 2.0 - 1.0;
        let y = rng.random::<f64>() * 2.0 - 1.0;
        if x * x + y * y <= 1.0 {
            pts.push(vec![radius * x, radius * y]);
        }
    }
    let report = checks::check_weak_positive_definiteness(&kernel, &pts, 64)?;
    let pass = report.passed();
    write_atomic(&out_dir.join("born_mayer_report.json"), report.to_json().as_bytes())?;
    println!("born-mayer: weak positive definiteness on radius {radius} -> {}", if pass { "pass" } else { "FAIL" });
    Ok(if pass { 0 } else { 1 })
}
