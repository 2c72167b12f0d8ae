//! Distribution specs, seeded sampling, reciprocal moments and the two
//! scheduling risks.

mod dist;
mod montecarlo;
pub mod quadrature;
mod risk;
mod rng;

pub use dist::{DistError, DistributionSpec};
pub use montecarlo::{mc_estimate, McError, McEstimate, RunningStats};
pub use risk::{risk_struct, risk_time};
pub use rng::SeededRng;
