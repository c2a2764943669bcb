//! Strip grid, finite-difference operators and the banded solver behind them.

mod banded;
mod grid;
mod operator;

pub use banded::BandedLu;
pub use grid::{build_grid, StripGrid, XBoundary, MIN_NODES};
pub use operator::{
    assemble_eigen_operator, assemble_evolution_operator, AdvectionRegime, DiscreteOperator,
    PECLET_LIMIT,
};
