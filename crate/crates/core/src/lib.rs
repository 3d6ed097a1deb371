//! Simulator and analysis toolkit for the reference-incentive pricing game
//! played by publishers of referable NFTs.
//!
//! * [`market`]: closed-form cost, income, quality and payoff.
//! * [`ledger`]: the append-only reference DAG with per-round accounting.
//! * [`env`]: the repeated multi-publisher game built on the ledger.
//! * [`learner`]: per-publisher clipped policy-gradient agents.
//! * [`analysis`]: finality checks, non-convexity witnesses, best responses
//!   and exploitability on discretized games.
//! * [`harness`]: seeded experiment campaigns, reward normalization and CSV.

pub mod analysis;
pub mod env;
pub mod error;
pub mod harness;
pub mod learner;
pub mod ledger;
pub mod market;

pub use error::{Error, Result};
