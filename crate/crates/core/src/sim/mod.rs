//! Monte Carlo harness: the Weibull-Cox interval-censoring generator,
//! replication driver, coverage and null p-value summaries, and an exact
//! Gaussian linear-model oracle for the pivot machinery.

mod generate;
pub mod oracle;
mod replication;

pub use generate::{
    gen_dataset, gen_with_latent, InspectionScheme, Reading, SimScenario, CALIBRATION_N,
    DEFAULT_ETA, LITERAL_ETA,
};
pub use replication::{
    coverage_experiment, null_pvalue_qq, run_replication, run_replications, CoverageRow,
    CoverageTable, QqOutput, ReplicationResult,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream for replication `rep` under `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}
