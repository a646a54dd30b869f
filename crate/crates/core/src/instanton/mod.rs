//! Boundary value solver for pseudoholomorphic strips with Legendrian
//! edges, plus the diagnostics that certify a computed map.
//!
//! The unknown is a map w from a finite strip [tau_min, tau_max] x [0, 1]
//! into R^(2n+1) whose xi-projected differential is complex linear for the
//! lifted structure J and whose rotated pullback of lambda is closed. The
//! two t-edges are pinned to jet-graph Legendrians through chart
//! coordinates, the tau-edges close the truncation either with frozen data
//! or as free columns. On top of the solvers sit slice invariants (the
//! asymptotic action and charge), pointwise identity checks, an
//! exponential decay fit, and a line-oriented dump format.

mod grid;
mod invariants;
mod io;
mod jet1;
mod map;
mod relax;
mod residual;
pub mod sector;
mod state;

pub use grid::{StripGrid, MIN_INTERVALS};
pub use io::{dump_strip_map, parse_strip_map, read_strip_map, write_strip_map};
pub use jet1::{solve_jet1, Jet1FarField, Jet1Opts, Jet1Solution};
pub use invariants::{
    asymptotic_invariants, decay_fit, identity_checks, AsymptoticInvariants, DecayFit, DecayOpts,
    InstantonIdentityReport, SliceInvariants,
};
pub use map::{EdgeSide, FarFieldMode, StripMap};
pub use relax::{relax, RelaxOpts, RelaxOutcome};
pub use residual::{pi_energy, residual, ResidualField, ResidualNorms};
