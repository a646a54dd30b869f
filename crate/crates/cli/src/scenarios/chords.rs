//! chord-search: damped Newton shooting for a Reeb-style chord between
//! the two configured jet graphs, swept over random chart seeds.

use std::path::Path;

use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::config::ScenarioConfig;
use crate::csv::emit_plot_data;
use crate::report::{Check, RunReport};
use contacton::action::{chord_report, find_chord, ChordOpts, ChordThresholds};
use contacton::Result;

pub fn run(cfg: &ScenarioConfig, dir: &Path, verbose: bool) -> Result<RunReport> {
    let h = cfg.field(&cfg.hamiltonian)?;
    let lower = cfg.lower()?;
    let upper = cfg.upper()?;
    let opts = ChordOpts {
        step: cfg.chord_step,
        tol: cfg.chord_tol,
        max_iters: cfg.chord_max_iters,
        samples: cfg.chord_samples,
        ..ChordOpts::default()
    };
    let thresholds = ChordThresholds {
        max_action: cfg.max_action,
        max_defect: cfg.max_defect,
        min_margin: cfg.min_margin,
        max_condition: cfg.max_condition,
    };

    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for k in 0..cfg.chord_seed_count {
        let seed_q = DVector::from_fn(cfg.n, |_, _| {
            rng.gen_range(-cfg.chord_seed_half_width..=cfg.chord_seed_half_width)
        });
        match find_chord(&h, &lower, &upper, &seed_q, cfg.chord_seed_duration, &opts) {
            Ok(chord) => {
                let a = chord_report(&chord, &*h, &thresholds);
                if verbose {
                    println!(
                        "  seed {k}: t1 = {:.12}, defect = {:.3e}, action = {:.3e}, margin = {:.3e}, cond = {:.3e}",
                        a.duration, a.defect_norm, a.action, a.margin, a.condition
                    );
                }
                checks.push(Check::below(
                    format!("seed {k}: endpoint defect"),
                    a.defect_norm,
                    cfg.max_defect,
                ));
                checks.push(Check::below(
                    format!("seed {k}: |action|"),
                    a.action.abs(),
                    cfg.max_action,
                ));
                checks.push(Check::at_least(
                    format!("seed {k}: transversality margin"),
                    a.margin,
                    cfg.min_margin,
                ));
                checks.push(Check::below(
                    format!("seed {k}: condition number"),
                    a.condition,
                    cfg.max_condition,
                ));
                let mut row = vec![k as f64];
                row.extend(chord.start.q.iter());
                row.extend([a.duration, a.action, a.defect_norm, a.margin, a.condition]);
                rows.push(row);
            }
            Err(e) => checks.push(Check::error(format!("seed {k}: chord search"), &e)),
        }
    }

    let mut artifacts = Vec::new();
    if !rows.is_empty() {
        let mut header: Vec<String> = vec!["seed".into()];
        header.extend((1..=cfg.n).map(|i| format!("q{i}")));
        header.extend(
            ["duration", "action", "defect", "margin", "condition"].map(str::to_owned),
        );
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        emit_plot_data(&dir.join("chords.csv"), &header_refs, &rows)?;
        artifacts.push("chords.csv".to_owned());
    }
    Ok(RunReport::new(cfg, checks, artifacts))
}
