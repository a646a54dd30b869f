//! calculus-suite: the contact calculus identity defects for each
//! configured Hamiltonian, evaluated over one shared set of sample
//! points.

use std::path::Path;

use crate::config::ScenarioConfig;
use crate::csv::emit_plot_data;
use crate::report::{Check, RunReport};
use crate::scenarios::sample_points;
use contacton::calculus::identity_suite;
use contacton::Result;

pub fn run(cfg: &ScenarioConfig, dir: &Path, verbose: bool) -> Result<RunReport> {
    let samples = sample_points(cfg.n, cfg.sample_count, cfg.sample_half_width, cfg.seed);
    let opts = cfg.identity_opts();

    let mut checks = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut header: Vec<String> = vec!["field_index".into()];
    for (idx, spec) in cfg.hamiltonians.iter().enumerate() {
        let outcome = cfg
            .field(spec)
            .and_then(|h| identity_suite(&h, &samples, &opts));
        match outcome {
            Ok(report) => {
                if header.len() == 1 {
                    header.extend(report.entries.iter().map(|e| e.name.clone()));
                }
                let mut row = vec![idx as f64];
                for entry in &report.entries {
                    if verbose {
                        println!(
                            "  {spec}: {} = {:.3e} (tol {:.1e})",
                            entry.name, entry.defect, entry.tolerance
                        );
                    }
                    checks.push(Check::below(
                        format!("{spec}: {}", entry.name),
                        entry.defect,
                        entry.tolerance,
                    ));
                    row.push(entry.defect);
                }
                rows.push(row);
            }
            Err(e) => checks.push(Check::error(format!("{spec}: identity suite"), &e)),
        }
    }

    let mut artifacts = Vec::new();
    if !rows.is_empty() {
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        emit_plot_data(&dir.join("defects.csv"), &header_refs, &rows)?;
        artifacts.push("defects.csv".to_owned());
    }
    Ok(RunReport::new(cfg, checks, artifacts))
}
