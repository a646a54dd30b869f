//! jet1-solve: the two-stage linear solve on the rotating sector, whose
//! closed form supplies boundary data and every oracle value.
//! refinement-study: the same solve over a sequence of halved grids,
//! fitting the observed order of each error channel.

use std::path::Path;

use crate::config::ScenarioConfig;
use crate::csv::emit_plot_data;
use crate::report::{Check, RunReport};
use crate::scenarios::fitted_order;
use crate::scenarios::strips::emit_slices;
use contacton::instanton::sector::{sector_exact, sector_graphs, sector_point, SectorOracle};
use contacton::instanton::{
    asymptotic_invariants, decay_fit, identity_checks, residual, solve_jet1, write_strip_map,
    FarFieldMode, Jet1FarField, Jet1Solution, StripGrid,
};
use contacton::{Error, Result};

/// Everything measured on one solved sector grid.
struct SectorSolve {
    sol: Jet1Solution,
    node_error: f64,
    zeta_l2: f64,
    charge_mean: f64,
    charge_spread: f64,
    action_spread: f64,
    action_error: f64,
    energy_l2: f64,
    alpha_l2: f64,
    neumann: f64,
    edge_im: f64,
    decay_rate: Option<f64>,
    decay_exponential: bool,
}

fn require_line(cfg: &ScenarioConfig) -> Result<()> {
    if cfg.n != 1 {
        return Err(Error::BadFieldSpec(
            "the sector profile is one-dimensional; set n = 1".into(),
        ));
    }
    Ok(())
}

fn solve_sector(cfg: &ScenarioConfig, grid: StripGrid) -> Result<SectorSolve> {
    let a = cfg.sector_slope;
    let r = cfg.sector_radius;
    let (lower, upper) = sector_graphs(a);
    let far_field = match cfg.far_field_mode()? {
        FarFieldMode::DirichletToChord => Jet1FarField::Dirichlet {
            left: (0..grid.nodes_t())
                .map(|j| sector_point(a, r, grid.tau_min(), grid.t(j)))
                .collect(),
            right: (0..grid.nodes_t())
                .map(|j| sector_point(a, r, grid.tau_max(), grid.t(j)))
                .collect(),
        },
        FarFieldMode::ZeroTauDerivative => Jet1FarField::ZeroTauDerivative,
    };
    let sol = solve_jet1(&lower, &upper, grid, &far_field, &cfg.jet1_opts())?;

    // Node error against the closed form, meaningful when the far
    // columns carried exact data.
    let node_error = match cfg.far_field_mode()? {
        FarFieldMode::DirichletToChord => {
            let exact = sector_exact(grid, a, r);
            let mut err = 0.0_f64;
            for i in 0..grid.nodes_tau() {
                for j in 0..grid.nodes_t() {
                    let x = sol.map.value(i, j);
                    let y = exact.value(i, j);
                    err = err
                        .max((&x.q - &y.q).amax())
                        .max((&x.p - &y.p).amax())
                        .max((x.z - y.z).abs());
                }
            }
            err
        }
        FarFieldMode::ZeroTauDerivative => f64::NAN,
    };

    let oracle = SectorOracle::new(a, r, grid.tau_min(), grid.tau_max());
    let norms = residual(&sol.map).norms();
    let inv = asymptotic_invariants(&sol.map);
    let ident = identity_checks(&sol.map);
    let decay = decay_fit(&sol.map, &cfg.decay_opts());
    let (decay_rate, decay_exponential) = match &decay {
        Ok(fit) => (Some(fit.rate), fit.exponential),
        Err(_) => (None, false),
    };
    Ok(SectorSolve {
        node_error,
        zeta_l2: norms.zeta_l2,
        charge_mean: inv.charge_mean,
        charge_spread: inv.charge_spread,
        action_spread: inv.action_spread,
        action_error: (inv.action_mean - oracle.truncated_action).abs(),
        energy_l2: ident.energy_cell_l2,
        alpha_l2: ident.alpha_dbar_l2,
        neumann: ident.neumann_max,
        edge_im: ident.alpha_edge_im_max,
        decay_rate,
        decay_exponential,
        sol,
    })
}

pub fn run_jet1(cfg: &ScenarioConfig, dir: &Path, verbose: bool) -> Result<RunReport> {
    require_line(cfg)?;
    let grid = cfg.grid()?;
    let s = solve_sector(cfg, grid)?;
    let beta = cfg.sector_slope.atan();
    if verbose {
        println!(
            "  cr {} iterations, poisson {} iterations, node error = {:.3e}, zeta = {:.3e}",
            s.sol.cr_iterations, s.sol.poisson_iterations, s.node_error, s.zeta_l2
        );
        if let Some(rate) = s.decay_rate {
            println!("  decay rate = {rate:.6} (angle {beta:.6})");
        }
    }

    let dirichlet = matches!(cfg.far_field_mode()?, FarFieldMode::DirichletToChord);
    let mut checks = Vec::new();
    if dirichlet {
        checks.push(Check::below(
            "node error vs closed form",
            s.node_error,
            cfg.node_error_tol,
        ));
    }
    checks.push(Check::below("zeta residual L2", s.zeta_l2, cfg.node_error_tol));
    checks.push(Check::below(
        "slice charge mean",
        s.charge_mean.abs(),
        cfg.charge_tol,
    ));
    checks.push(Check::below("slice charge spread", s.charge_spread, cfg.charge_tol));
    checks.push(Check::below(
        "slice action spread",
        s.action_spread,
        cfg.action_spread_tol,
    ));
    checks.push(Check::below(
        "slice action error vs closed form",
        s.action_error,
        cfg.action_spread_tol,
    ));
    checks.push(Check::holds("decay window is exponential", s.decay_exponential));
    if let Some(rate) = s.decay_rate {
        checks.push(Check::near(
            format!("decay rate vs angle {beta}"),
            rate,
            beta,
            cfg.decay_rate_rel_tol * beta,
        ));
    } else {
        checks.push(Check::holds("decay rate available", false));
    }

    let inv = asymptotic_invariants(&s.sol.map);
    let mut artifacts = vec![emit_slices(dir, &inv)?];
    if let Ok(fit) = decay_fit(&s.sol.map, &cfg.decay_opts()) {
        let rows: Vec<Vec<f64>> = fit.window.iter().map(|(t, ln)| vec![*t, *ln]).collect();
        emit_plot_data(&dir.join("decay.csv"), &["tau", "ln_decay_norm"], &rows)?;
        artifacts.push("decay.csv".to_owned());
    }
    write_strip_map(&dir.join("solution.txt"), &s.sol.map)?;
    artifacts.push("solution.txt".to_owned());
    Ok(RunReport::new(cfg, checks, artifacts))
}

pub fn run_refinement(cfg: &ScenarioConfig, dir: &Path, verbose: bool) -> Result<RunReport> {
    require_line(cfg)?;
    let beta = cfg.sector_slope.atan();

    let mut hs = Vec::new();
    let mut solves = Vec::new();
    let mut rows = Vec::new();
    for level in 0..cfg.refine_levels {
        let scale = 1usize << level;
        let grid = StripGrid::new(
            cfg.tau_min,
            cfg.tau_max,
            cfg.grid_tau * scale,
            cfg.grid_t * scale,
        )?;
        let s = solve_sector(cfg, grid)?;
        let h = grid.h_tau().max(grid.h_t());
        if verbose {
            println!(
                "  {}x{}: node error = {:.3e}, zeta = {:.3e}, Q spread = {:.3e}, T spread = {:.3e}",
                grid.n_tau(),
                grid.n_t(),
                s.node_error,
                s.zeta_l2,
                s.charge_spread,
                s.action_spread
            );
        }
        rows.push(vec![
            h,
            grid.n_tau() as f64,
            grid.n_t() as f64,
            s.node_error,
            s.zeta_l2,
            s.charge_spread,
            s.action_spread,
            s.energy_l2,
            s.alpha_l2,
            s.neumann,
            s.edge_im,
            s.decay_rate.unwrap_or(f64::NAN),
        ]);
        hs.push(h);
        solves.push(s);
    }

    let series = |f: fn(&SectorSolve) -> f64| -> Vec<f64> { solves.iter().map(f).collect() };
    let mut checks = Vec::new();
    let mut order_check = |name: &str, errs: Vec<f64>| {
        checks.push(Check::near(
            format!("{name} order (target {})", cfg.order_target),
            fitted_order(&hs, &errs),
            cfg.order_target,
            cfg.order_tol,
        ));
    };
    order_check("node error", series(|s| s.node_error));
    order_check("charge spread", series(|s| s.charge_spread));
    order_check("action spread", series(|s| s.action_spread));
    order_check("energy identity", series(|s| s.energy_l2));
    order_check("alpha dbar identity", series(|s| s.alpha_l2));
    order_check("neumann orthogonality", series(|s| s.neumann));
    order_check("edge im alpha", series(|s| s.edge_im));

    let finest = solves.last().expect("refine_levels >= 2");
    checks.push(Check::below(
        "charge spread at finest grid",
        finest.charge_spread,
        cfg.charge_tol,
    ));
    checks.push(Check::below(
        "action spread at finest grid",
        finest.action_spread,
        cfg.action_spread_tol,
    ));
    if let Some(rate) = finest.decay_rate {
        checks.push(Check::near(
            format!("decay rate at finest grid vs angle {beta}"),
            rate,
            beta,
            cfg.decay_rate_rel_tol * beta,
        ));
    } else {
        checks.push(Check::holds("decay rate available", false));
    }

    emit_plot_data(
        &dir.join("refinement.csv"),
        &[
            "h",
            "n_tau",
            "n_t",
            "node_error",
            "zeta_l2",
            "charge_spread",
            "action_spread",
            "energy_l2",
            "alpha_l2",
            "neumann",
            "edge_im",
            "decay_rate",
        ],
        &rows,
    )?;
    Ok(RunReport::new(cfg, checks, vec!["refinement.csv".to_owned()]))
}
