//! Brownian semimartingale simulator.
//!
//! Paths are generated on a fine grid `{k / n_fine}` by an Euler scheme and
//! carry the true spot variance, so that integrated targets and oracle
//! variances can be formed by Riemann sums on the same grid.

mod model;
pub mod rng;
mod simulate;

pub use model::{JumpArrivals, ModelSpec, PriceJumps, VolModel};
pub use simulate::{simulate, PriceJump, SimPath};
