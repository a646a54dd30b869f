//! The registered scenarios. Each takes a parsed config and a run
//! directory, writes its artifacts there, and returns the report; the
//! binary decides where reports go and what the exit code is.

mod calculus;
mod chords;
mod sector;
mod strips;

use std::path::Path;

use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::config::ScenarioConfig;
use crate::report::RunReport;
use contacton::geometry::PhasePoint;
use contacton::{Error, Result};

/// Runs one scenario end to end. The run directory must already exist.
pub fn run(cfg: &ScenarioConfig, dir: &Path, verbose: bool) -> Result<RunReport> {
    cfg.validate()?;
    match cfg.scenario.as_str() {
        "calculus-suite" => calculus::run(cfg, dir, verbose),
        "chord-search" => chords::run(cfg, dir, verbose),
        "reeb-strip" => strips::run_reeb_strip(cfg, dir, verbose),
        "relax" => strips::run_relax(cfg, dir, verbose),
        "jet1-solve" => sector::run_jet1(cfg, dir, verbose),
        "refinement-study" => sector::run_refinement(cfg, dir, verbose),
        other => Err(Error::BadFieldSpec(format!("unknown scenario {other:?}"))),
    }
}

/// Uniform sample points in the centered box of the given half-width,
/// drawn from the config seed; every scenario that samples goes through
/// here so runs are reproducible.
pub(crate) fn sample_points(n: usize, count: usize, half_width: f64, seed: u64) -> Vec<PhasePoint> {
    let mut rng = StdRng::seed_from_u64(seed);
    let draw = |rng: &mut StdRng| -> f64 { rng.gen_range(-half_width..=half_width) };
    (0..count)
        .map(|_| {
            let q = DVector::from_fn(n, |_, _| draw(&mut rng));
            let p = DVector::from_fn(n, |_, _| draw(&mut rng));
            let z = draw(&mut rng);
            PhasePoint::new(q, p, z)
        })
        .collect()
}

/// Least-squares slope of ln(err) against ln(h): the observed order of
/// accuracy over a refinement sequence.
pub(crate) fn fitted_order(hs: &[f64], errs: &[f64]) -> f64 {
    assert_eq!(hs.len(), errs.len());
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .zip(errs)
        .filter(|(_, e)| **e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|(x, _)| x).sum::<f64>() / m;
    let my = pts.iter().map(|(_, y)| y).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / sxx
}
