//! Realised variation statistics computed from discretely observed
//! log-prices.

mod measures;
mod path;

pub use measures::{
    det_rank_statistic, generalized_bipower, quarticity_quadpower, quarticity_rv, quarticity_tripower,
    realized_bipower, realized_covariation, realized_multipower, realized_power_variation, realized_variance,
    window_count,
};
pub use path::{returns_from_path, LogPricePath, ReturnSeries};
