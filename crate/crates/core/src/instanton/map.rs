//! Grid maps from a finite strip into R^(2n+1) with Legendrian edges.
//!
//! The two t-edges of the strip are constrained to lie on jet-graph
//! Legendrians. Edge nodes are stored as chart coordinates (the base q
//! only) and the ambient value is always reconstructed through the graph,
//! so the boundary condition holds exactly by construction rather than
//! through a penalty. The tau-edges are the truncation of an infinite
//! strip and carry one of two closures: frozen columns supplied by the
//! caller (usually a translated-chord strip or manufactured data), or a
//! free column whose minimizer satisfies the natural no-flux condition.

use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::geometry::{LegendrianJetGraph, PhasePoint};

use super::grid::StripGrid;

/// Closure used on the two tau-edge columns of the truncated strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FarFieldMode {
    /// Columns are data: held fixed by every solver.
    DirichletToChord,
    /// Columns are unknowns; discretely this is a free (natural) edge,
    /// whose optimality condition is a vanishing tau-derivative.
    ZeroTauDerivative,
}

impl FarFieldMode {
    pub fn keyword(&self) -> &'static str {
        match self {
            FarFieldMode::DirichletToChord => "dirichlet-to-chord",
            FarFieldMode::ZeroTauDerivative => "zero-tau-derivative",
        }
    }

    pub fn from_keyword(word: &str) -> Result<Self> {
        match word {
            "dirichlet-to-chord" => Ok(FarFieldMode::DirichletToChord),
            "zero-tau-derivative" => Ok(FarFieldMode::ZeroTauDerivative),
            other => Err(Error::MalformedDump(format!(
                "unknown far-field mode {other:?}"
            ))),
        }
    }
}

/// Which of the two Legendrian edges a chart coordinate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSide {
    /// t = 0 edge.
    Lower,
    /// t = 1 edge.
    Upper,
}

#[derive(Debug, Clone)]
pub struct StripMap {
    pub(super) grid: StripGrid,
    pub(super) n: usize,
    pub(super) lower: LegendrianJetGraph,
    pub(super) upper: LegendrianJetGraph,
    pub(super) far_field: FarFieldMode,
    /// Node values, index grid.node_index(i, j).
    pub(super) values: Vec<PhasePoint>,
    /// Chart coordinates of the t = 0 edge, one per column.
    pub(super) chart_lower: Vec<DVector<f64>>,
    /// Chart coordinates of the t = 1 edge, one per column.
    pub(super) chart_upper: Vec<DVector<f64>>,
}

impl StripMap {
    /// Assembles a map from full node values plus edge charts.
    ///
    /// The two t-edge rows of `values` are ignored and rebuilt from the
    /// charts, which is what keeps the Legendrian constraint exact.
    pub fn new(
        grid: StripGrid,
        lower: LegendrianJetGraph,
        upper: LegendrianJetGraph,
        far_field: FarFieldMode,
        mut values: Vec<PhasePoint>,
        chart_lower: Vec<DVector<f64>>,
        chart_upper: Vec<DVector<f64>>,
    ) -> Result<Self> {
        let n = lower.n;
        if upper.n != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: upper.n,
            });
        }
        if values.len() != grid.node_count() {
            return Err(Error::DimensionMismatch {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        if chart_lower.len() != grid.nodes_tau() || chart_upper.len() != grid.nodes_tau() {
            return Err(Error::DimensionMismatch {
                expected: grid.nodes_tau(),
                got: chart_lower.len().min(chart_upper.len()),
            });
        }
        for x in &values {
            if x.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: x.dim(),
                });
            }
        }
        for i in 0..grid.nodes_tau() {
            values[grid.node_index(i, 0)] = lower.point(&chart_lower[i])?;
            values[grid.node_index(i, grid.n_t())] = upper.point(&chart_upper[i])?;
        }
        Ok(Self {
            grid,
            n,
            lower,
            upper,
            far_field,
            values,
            chart_lower,
            chart_upper,
        })
    }

    /// Samples a closed-form map at every node.
    ///
    /// Edge charts are taken from the q-component of the sample; the p and
    /// z components on the edges are then those of the Legendrian, so a
    /// sampled map with off-graph edge values is silently projected.
    pub fn from_fn(
        grid: StripGrid,
        lower: LegendrianJetGraph,
        upper: LegendrianJetGraph,
        far_field: FarFieldMode,
        f: impl Fn(f64, f64) -> PhasePoint,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.node_count());
        for i in 0..grid.nodes_tau() {
            for j in 0..grid.nodes_t() {
                values.push(f(grid.tau(i), grid.t(j)));
            }
        }
        let chart_of = |j: usize| -> Vec<DVector<f64>> {
            (0..grid.nodes_tau())
                .map(|i| values[grid.node_index(i, j)].q.clone())
                .collect()
        };
        let chart_lower = chart_of(0);
        let chart_upper = chart_of(grid.n_t());
        Self::new(
            grid,
            lower,
            upper,
            far_field,
            values,
            chart_lower,
            chart_upper,
        )
    }

    /// The translated-chord strip over a common chart point q0.
    ///
    /// w(tau, t) = (q0, dS_lower(q0), S_lower(q0) + t * c) with
    /// c = S_upper(q0) - S_lower(q0). This solves the boundary value
    /// problem exactly (also discretely) provided the two graphs share
    /// their fiber over q0, i.e. q0 is the foot of a vertical chord.
    pub fn reeb_chord_strip(
        grid: StripGrid,
        lower: LegendrianJetGraph,
        upper: LegendrianJetGraph,
        q0: &DVector<f64>,
    ) -> Result<Self> {
        let bottom = lower.point(q0)?;
        let top = upper.point(q0)?;
        let slope_gap = (&top.p - &bottom.p).norm();
        if slope_gap > 1e-10 * (1.0 + bottom.p.norm() + top.p.norm()) {
            return Err(Error::InconsistentBoundary(format!(
                "no vertical chord over the given chart point: |dS_upper - dS_lower| = {slope_gap:.3e}"
            )));
        }
        let duration = top.z - bottom.z;
        Self::from_fn(
            grid,
            lower,
            upper,
            FarFieldMode::DirichletToChord,
            |_, t| {
                PhasePoint::new(
                    bottom.q.clone(),
                    bottom.p.clone(),
                    bottom.z + t * duration,
                )
            },
        )
    }

    pub fn grid(&self) -> &StripGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn far_field(&self) -> FarFieldMode {
        self.far_field
    }

    pub fn lower_boundary(&self) -> &LegendrianJetGraph {
        &self.lower
    }

    pub fn upper_boundary(&self) -> &LegendrianJetGraph {
        &self.upper
    }

    pub fn value(&self, i: usize, j: usize) -> &PhasePoint {
        &self.values[self.grid.node_index(i, j)]
    }

    pub fn chart(&self, side: EdgeSide, i: usize) -> &DVector<f64> {
        match side {
            EdgeSide::Lower => &self.chart_lower[i],
            EdgeSide::Upper => &self.chart_upper[i],
        }
    }

    pub fn boundary(&self, side: EdgeSide) -> &LegendrianJetGraph {
        match side {
            EdgeSide::Lower => &self.lower,
            EdgeSide::Upper => &self.upper,
        }
    }

    /// Overwrites one interior or tau-edge node.
    ///
    /// t-edge nodes (j = 0 or j = n_t) cannot be set directly; move their
    /// chart coordinate with `set_chart` instead.
    pub fn set_value(&mut self, i: usize, j: usize, x: PhasePoint) -> Result<()> {
        if j == 0 || j == self.grid.n_t() {
            return Err(Error::InconsistentBoundary(
                "t-edge nodes are chart-driven; use set_chart".into(),
            ));
        }
        if x.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.dim(),
            });
        }
        let idx = self.grid.node_index(i, j);
        self.values[idx] = x;
        Ok(())
    }

    /// Moves an edge node along its Legendrian and re-syncs the value.
    pub fn set_chart(&mut self, side: EdgeSide, i: usize, q: DVector<f64>) -> Result<()> {
        let (graph, row) = match side {
            EdgeSide::Lower => (&self.lower, 0),
            EdgeSide::Upper => (&self.upper, self.grid.n_t()),
        };
        let x = graph.point(&q)?;
        let idx = self.grid.node_index(i, row);
        self.values[idx] = x;
        match side {
            EdgeSide::Lower => self.chart_lower[i] = q,
            EdgeSide::Upper => self.chart_upper[i] = q,
        }
        Ok(())
    }

    /// Copy with uniform noise of the given amplitude on interior nodes.
    ///
    /// Edge rows and, under the frozen far-field closure, the tau-edge
    /// columns are left untouched, so the perturbed map still satisfies
    /// every constraint a solver relies on. Deterministic in the seed.
    pub fn with_interior_noise(&self, amplitude: f64, seed: u64) -> StripMap {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut out = self.clone();
        let (i_lo, i_hi) = match self.far_field {
            FarFieldMode::DirichletToChord => (1, self.grid.n_tau()),
            FarFieldMode::ZeroTauDerivative => (0, self.grid.n_tau() + 1),
        };
        for i in i_lo..i_hi {
            for j in 1..self.grid.n_t() {
                let idx = self.grid.node_index(i, j);
                let x = &mut out.values[idx];
                for k in 0..self.n {
                    x.q[k] += rng.gen_range(-amplitude..=amplitude);
                    x.p[k] += rng.gen_range(-amplitude..=amplitude);
                }
                x.z += rng.gen_range(-amplitude..=amplitude);
            }
        }
        out
    }

    /// Largest coordinate distance between node values of two maps.
    pub fn max_node_distance(&self, other: &StripMap) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| {
                let dq = (&a.q - &b.q).amax();
                let dp = (&a.p - &b.p).amax();
                dq.max(dp).max((a.z - b.z).abs())
            })
            .fold(0.0, f64::max)
    }
}
