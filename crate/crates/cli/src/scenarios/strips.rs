//! reeb-strip: the exact chord strip must sit at round-off in every
//! residual and invariant channel.
//! relax: descent from a noise-perturbed strip back into the solution
//! basin, reporting the objective trajectory.

use std::path::Path;

use nalgebra::DVector;

use crate::config::ScenarioConfig;
use crate::csv::emit_plot_data;
use crate::report::{Check, RunReport};
use contacton::instanton::{
    asymptotic_invariants, pi_energy, relax, residual, write_strip_map, AsymptoticInvariants,
    StripMap,
};
use contacton::Result;

pub(crate) fn emit_slices(dir: &Path, inv: &AsymptoticInvariants) -> Result<String> {
    let rows: Vec<Vec<f64>> = inv
        .slices
        .iter()
        .map(|s| {
            vec![
                s.tau,
                s.action,
                s.charge,
                s.pi_norm,
                s.reeb_tau_norm,
                s.action_dev_norm,
            ]
        })
        .collect();
    emit_plot_data(
        &dir.join("slices.csv"),
        &[
            "tau",
            "action",
            "charge",
            "pi_norm",
            "reeb_tau_norm",
            "action_dev_norm",
        ],
        &rows,
    )?;
    Ok("slices.csv".to_owned())
}

fn chord_strip(cfg: &ScenarioConfig) -> Result<(StripMap, f64)> {
    let lower = cfg.lower()?;
    let upper = cfg.upper()?;
    let q0 = DVector::zeros(cfg.n);
    let expected_duration = upper.point(&q0)?.z - lower.point(&q0)?.z;
    let strip = StripMap::reeb_chord_strip(cfg.grid()?, lower, upper, &q0)?;
    Ok((strip, expected_duration))
}

pub fn run_reeb_strip(cfg: &ScenarioConfig, dir: &Path, verbose: bool) -> Result<RunReport> {
    let (strip, expected_duration) = chord_strip(cfg)?;
    let tol = cfg.strip_tol;

    let norms = residual(&strip).norms();
    let energy = pi_energy(&strip);
    let inv = asymptotic_invariants(&strip);
    if verbose {
        println!(
            "  zeta = {:.3e}, curl = {:.3e}, energy = {:.3e}, T = {:.12}, Q = {:.3e}",
            norms.zeta_l2, norms.curl_l2, energy, inv.action_mean, inv.charge_mean
        );
    }

    let checks = vec![
        Check::below("zeta residual L2", norms.zeta_l2, tol),
        Check::below("zeta residual sup", norms.zeta_linf, tol),
        Check::below("curl residual L2", norms.curl_l2, tol),
        Check::below("curl residual sup", norms.curl_linf, tol),
        Check::below("xi-energy", energy, tol),
        Check::below(
            format!("slice action error vs duration {expected_duration}"),
            (inv.action_mean - expected_duration).abs(),
            tol,
        ),
        Check::below("slice action spread", inv.action_spread, tol),
        Check::below("slice charge mean", inv.charge_mean.abs(), tol),
        Check::below("slice charge spread", inv.charge_spread, tol),
    ];

    let mut artifacts = vec![emit_slices(dir, &inv)?];
    write_strip_map(&dir.join("solution.txt"), &strip)?;
    artifacts.push("solution.txt".to_owned());
    Ok(RunReport::new(cfg, checks, artifacts))
}

pub fn run_relax(cfg: &ScenarioConfig, dir: &Path, verbose: bool) -> Result<RunReport> {
    let (strip, _) = chord_strip(cfg)?;
    let noisy = strip.with_interior_noise(cfg.noise_amplitude, cfg.seed);
    let start_norms = residual(&noisy).norms();

    let outcome = relax(&noisy, &cfg.relax_opts())?;
    let norms = residual(&outcome.map).norms();
    if verbose {
        println!(
            "  start residual = {:.3e}, final zeta = {:.3e}, curl = {:.3e}, {} iterations, converged {}, stagnated {}",
            start_norms.max(),
            norms.zeta_l2,
            norms.curl_l2,
            outcome.iterations,
            outcome.converged,
            outcome.stagnated
        );
    }

    let tol = cfg.relax_residual_tol;
    let checks = vec![
        Check::at_least(
            "starting residual is genuinely noisy",
            start_norms.max(),
            cfg.noise_amplitude * 1e-2,
        ),
        Check::below("final zeta residual L2", norms.zeta_l2, tol),
        Check::below("final curl residual L2", norms.curl_l2, tol),
        Check::holds(
            "objective decreased",
            outcome.objective.last() < outcome.objective.first(),
        ),
    ];

    let obj_rows: Vec<Vec<f64>> = outcome
        .objective
        .iter()
        .enumerate()
        .map(|(k, f)| vec![k as f64, *f])
        .collect();
    emit_plot_data(&dir.join("objective.csv"), &["iteration", "objective"], &obj_rows)?;
    let inv = asymptotic_invariants(&outcome.map);
    let mut artifacts = vec!["objective.csv".to_owned(), emit_slices(dir, &inv)?];
    write_strip_map(&dir.join("solution.txt"), &outcome.map)?;
    artifacts.push("solution.txt".to_owned());
    Ok(RunReport::new(cfg, checks, artifacts))
}
