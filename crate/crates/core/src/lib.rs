//! Quandle coloring invariants of oriented link diagrams.
//!
//! The pipeline: parse a diagram file into a [`diagram::LinkDiagram`],
//! read off its Wirtinger-style presentation (one generator per arc, one
//! relation per crossing), enumerate the homomorphism set into a finite
//! target quandle — by brute force on small diagrams or with the
//! block-decomposition / equi-join solver — and tally image sizes into
//! the enhanced counting polynomial `Φ_E = Σ a_m q^m`.
//!
//! The [`family`] module builds the `L_n` link family by replicating a
//! core tangle extracted from the shipped `L1`/`L2` diagrams, and carries
//! colorings along the family by mirroring.

pub mod diagram;
pub mod family;
pub mod invariants;
pub mod quandle;
pub mod solver;

pub use diagram::{ArcId, Crossing, DiagramError, LinkDiagram, QuandlePresentation, Relation};
pub use invariants::{image_size, EnhancedPolynomial, InvariantRecord, Separation};
pub use quandle::{FieldPrime, FiniteQuandle, QuandleError, Sign, SymplecticForm};
pub use solver::{
    brute_force, equi_join, make_block_plan, solve, solve_block, BlockPlan, Coloring,
    PartialSolutionTable, SolveError, SolveOptions, SolveOutcome, SolveReport, SolverMode,
};
