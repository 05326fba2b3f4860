//! Growth experiments: exact and sampled sums, exponent fits.

pub mod config;
pub mod exact;
pub mod fit;
pub mod mc;
pub mod sampler;

pub use config::{parse_ns, ExperimentConfig};
pub use exact::{disjoint_sum_norm, gaussian_selfsimilarity_check, rademacher_sum_norm, rademacher_sum_profile};
pub use fit::{fit_growth, gamma_iid_endpoint, GrowthFit};
pub use mc::{growth_table, mc_iid_sum_norm, GrowthRow, GrowthTable, McEstimate, NormSource};
pub use sampler::{kruglov_sampler, SamplerKind, SamplerSpec};
