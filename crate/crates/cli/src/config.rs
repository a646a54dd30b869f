//! Scenario configuration: one flat JSON document per run.
//!
//! Keys mirror the library option names so a config can be written from
//! the library documentation alone. Every field except `scenario` has a
//! default, and unknown keys are rejected so typos fail loudly instead
//! of silently running with a default.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use contacton::calculus::IdentityOpts;
use contacton::geometry::{GeneratingFn, LegendrianJetGraph};
use contacton::instanton::{DecayOpts, FarFieldMode, Jet1Opts, RelaxOpts, StripGrid};
use contacton::{Error, HamiltonianField, Result};

pub const SCENARIOS: &[(&str, &str)] = &[
    (
        "calculus-suite",
        "contact calculus identity defects for a list of Hamiltonians over sampled points",
    ),
    (
        "chord-search",
        "Reeb chord shooting from a sweep of random seeds, with action and transversality checks",
    ),
    (
        "reeb-strip",
        "exact Reeb-chord strip regression: residuals, energy, action and charge at round-off",
    ),
    (
        "jet1-solve",
        "two-stage linear solve on the rotating sector, checked against its closed form",
    ),
    (
        "relax",
        "gradient relaxation from a noisy strip back into the solution basin",
    ),
    (
        "refinement-study",
        "order-of-accuracy sweep of the sector solve over a sequence of halved grids",
    ),
];

fn default_hamiltonians() -> Vec<String> {
    [
        "const:-1",
        "coord:z",
        "coord:p1",
        "coord:q1",
        "quadratic:1",
        "quadratic:1+coord:z",
    ]
    .map(str::to_owned)
    .to_vec()
}

/// One scenario run, fully specified. Field groups are prefixed by the
/// scenario family they feed; unrelated groups are ignored by a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// One of the names in `SCENARIOS`.
    pub scenario: String,
    /// Jet dimension n of the ambient R^(2n+1).
    pub n: usize,
    /// Seed for every sampled quantity in the run.
    pub seed: u64,
    /// Output directory; when absent the runner derives one from the
    /// config file name under its --out base.
    pub out_dir: Option<String>,

    // calculus-suite
    pub hamiltonians: Vec<String>,
    pub sample_count: usize,
    pub sample_half_width: f64,
    pub flow_t1: f64,
    pub flow_t2: f64,
    pub flow_step: f64,
    pub fd_delta: f64,
    pub tol_algebraic: f64,
    pub tol_flow: f64,

    // Boundary Legendrians j^1 S as generating-function labels.
    pub lower_graph: String,
    pub upper_graph: String,
    pub chart_half_width: f64,

    // chord-search
    pub hamiltonian: String,
    pub chord_seed_count: usize,
    pub chord_seed_half_width: f64,
    pub chord_seed_duration: f64,
    pub chord_step: f64,
    pub chord_tol: f64,
    pub chord_max_iters: usize,
    pub chord_samples: usize,
    pub max_action: f64,
    pub max_defect: f64,
    pub min_margin: f64,
    pub max_condition: f64,

    // Strip grid shared by the instanton scenarios.
    pub tau_min: f64,
    pub tau_max: f64,
    pub grid_tau: usize,
    pub grid_t: usize,

    // reeb-strip
    pub strip_tol: f64,

    // Sector profile (jet1-solve, refinement-study).
    pub sector_slope: f64,
    pub sector_radius: f64,
    pub far_field: String,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    pub node_error_tol: f64,
    pub charge_tol: f64,
    pub action_spread_tol: f64,

    // Decay fit (jet1-solve, refinement-study).
    pub decay_window_fraction: f64,
    pub decay_min_slices: usize,
    pub decay_floor: f64,
    pub decay_max_fit_residual: f64,
    pub decay_rate_rel_tol: f64,

    // relax
    pub noise_amplitude: f64,
    pub relax_grad_tol: f64,
    pub relax_max_iters: usize,
    pub relax_residual_tol: f64,

    // refinement-study
    pub refine_levels: usize,
    pub order_target: f64,
    pub order_tol: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let decay = DecayOpts::default();
        let jet1 = Jet1Opts::default();
        let identity = IdentityOpts::default();
        Self {
            scenario: String::new(),
            n: 1,
            seed: 7,
            out_dir: None,

            hamiltonians: default_hamiltonians(),
            sample_count: 100,
            sample_half_width: 1.0,
            flow_t1: identity.t1,
            flow_t2: identity.t2,
            flow_step: identity.step,
            fd_delta: identity.fd_delta,
            tol_algebraic: identity.tol_algebraic,
            tol_flow: identity.tol_flow,

            lower_graph: "const:0".to_owned(),
            upper_graph: "const:0.7".to_owned(),
            chart_half_width: 10.0,

            hamiltonian: "reeb".to_owned(),
            chord_seed_count: 5,
            chord_seed_half_width: 0.5,
            chord_seed_duration: 1.0,
            chord_step: 1e-3,
            chord_tol: 1e-9,
            chord_max_iters: 50,
            chord_samples: 201,
            max_action: 1e-6,
            max_defect: 1e-9,
            min_margin: 1e-6,
            max_condition: 1e8,

            tau_min: 0.0,
            tau_max: 2.0,
            grid_tau: 64,
            grid_t: 32,

            strip_tol: 1e-10,

            sector_slope: 1.0,
            sector_radius: 1.0,
            far_field: "dirichlet-to-chord".to_owned(),
            cg_tol: jet1.cg_tol,
            cg_max_iters: jet1.cg_max_iters,
            node_error_tol: 5e-4,
            charge_tol: 1e-3,
            action_spread_tol: 1e-3,

            decay_window_fraction: decay.window_fraction,
            decay_min_slices: decay.min_slices,
            decay_floor: decay.floor,
            decay_max_fit_residual: decay.max_fit_residual,
            decay_rate_rel_tol: 0.05,

            noise_amplitude: 1e-2,
            relax_grad_tol: 1e-9,
            relax_max_iters: 30_000,
            relax_residual_tol: 1e-6,

            refine_levels: 3,
            order_target: 2.0,
            order_tol: 0.3,
        }
    }
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::BadFieldSpec(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !SCENARIOS.iter().any(|(name, _)| *name == self.scenario) {
            return Err(Error::BadFieldSpec(format!(
                "unknown scenario {:?}; see list-scenarios",
                self.scenario
            )));
        }
        if self.n == 0 {
            return Err(Error::BadFieldSpec("n must be positive".into()));
        }
        for (name, value) in [
            ("tol_algebraic", self.tol_algebraic),
            ("tol_flow", self.tol_flow),
            ("chord_tol", self.chord_tol),
            ("strip_tol", self.strip_tol),
            ("cg_tol", self.cg_tol),
            ("node_error_tol", self.node_error_tol),
            ("charge_tol", self.charge_tol),
            ("action_spread_tol", self.action_spread_tol),
            ("decay_rate_rel_tol", self.decay_rate_rel_tol),
            ("relax_residual_tol", self.relax_residual_tol),
            ("order_tol", self.order_tol),
        ] {
            if !(value > 0.0) {
                return Err(Error::BadFieldSpec(format!("{name} must be positive")));
            }
        }
        self.far_field_mode()?;
        if self.refine_levels < 2 {
            return Err(Error::BadFieldSpec(
                "refine_levels must be at least 2 to fit an order".into(),
            ));
        }
        Ok(())
    }

    pub fn lower(&self) -> Result<LegendrianJetGraph> {
        self.graph(&self.lower_graph)
    }

    pub fn upper(&self) -> Result<LegendrianJetGraph> {
        self.graph(&self.upper_graph)
    }

    fn graph(&self, label: &str) -> Result<LegendrianJetGraph> {
        let s = GeneratingFn::parse_label(label).ok_or_else(|| {
            Error::BadFieldSpec(format!("unknown generating function label {label:?}"))
        })?;
        Ok(LegendrianJetGraph::new(self.n, s, self.chart_half_width))
    }

    pub fn field(&self, spec: &str) -> Result<Arc<dyn HamiltonianField>> {
        Ok(contacton::field::parse_field(self.n, spec)?)
    }

    pub fn grid(&self) -> Result<StripGrid> {
        StripGrid::new(self.tau_min, self.tau_max, self.grid_tau, self.grid_t)
    }

    pub fn far_field_mode(&self) -> Result<FarFieldMode> {
        match self.far_field.as_str() {
            "dirichlet-to-chord" => Ok(FarFieldMode::DirichletToChord),
            "zero-tau-derivative" => Ok(FarFieldMode::ZeroTauDerivative),
            other => Err(Error::BadFieldSpec(format!(
                "unknown far-field mode {other:?}"
            ))),
        }
    }

    pub fn identity_opts(&self) -> IdentityOpts {
        IdentityOpts {
            t1: self.flow_t1,
            t2: self.flow_t2,
            step: self.flow_step,
            fd_delta: self.fd_delta,
            tol_algebraic: self.tol_algebraic,
            tol_flow: self.tol_flow,
        }
    }

    pub fn jet1_opts(&self) -> Jet1Opts {
        Jet1Opts {
            cg_tol: self.cg_tol,
            cg_max_iters: self.cg_max_iters,
        }
    }

    pub fn relax_opts(&self) -> RelaxOpts {
        RelaxOpts {
            grad_tol: self.relax_grad_tol,
            max_iters: self.relax_max_iters,
            ..RelaxOpts::default()
        }
    }

    pub fn decay_opts(&self) -> DecayOpts {
        DecayOpts {
            window_fraction: self.decay_window_fraction,
            min_slices: self.decay_min_slices,
            floor: self.decay_floor,
            max_fit_residual: self.decay_max_fit_residual,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg: ScenarioConfig =
            serde_json::from_str(r#"{"scenario": "reeb-strip"}"#).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.n, 1);
        assert_eq!(cfg.grid_tau, 64);
        assert_eq!(cfg.hamiltonians.len(), 6);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let res: std::result::Result<ScenarioConfig, _> =
            serde_json::from_str(r#"{"scenario": "relax", "grid_taus": 8}"#);
        assert!(res.is_err());
    }

    #[test]
    fn unknown_scenario_is_rejected() {
        let cfg: ScenarioConfig =
            serde_json::from_str(r#"{"scenario": "warp-drive"}"#).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn round_trip_preserves_every_field() {
        let cfg = ScenarioConfig {
            scenario: "jet1-solve".into(),
            grid_tau: 48,
            ..ScenarioConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
        assert_eq!(back.grid_tau, 48);
    }
}
