//! Finality checks, non-convexity witnesses and equilibrium tools on
//! discretized games.

mod finality;
mod game;
mod hessian;
pub mod report;

pub use finality::{
    geometric_closed_form, geometric_error, geometric_partial_sum, verify_finality, Counterexample, FinalityReport,
    GEOMETRIC_TOLERANCE,
};
pub use game::{
    action_values, best_response, expected_value, exploitability, fictitious_play, ActionGrid, DiscretizedGame,
    FictitiousPlayTrace, GridAction, MarketGame, MixedStrategy, TableGame, MAX_EVALUATIONS,
};
pub use hessian::{
    hessian_2d, nonconvexity_witness, PayoffSurface, Witness, WitnessGrid, WitnessReport, FD_STEP, WITNESS_THRESHOLD,
};
