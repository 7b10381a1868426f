//! Training draws, accuracy metrics and Monte Carlo averaging.

pub mod metrics;
pub mod monte_carlo;
pub mod report;
pub mod sampling;

pub use metrics::{average_accuracy, confusion, kappa, overall_accuracy, ConfusionMatrix, MetricsReport};
pub use monte_carlo::{monte_carlo, summarize, MonteCarloOutcome};
pub use report::{format_csv, format_table};
pub use sampling::{draw_training_set, DrawRng, SamplingScheme, TrainTestSplit};
