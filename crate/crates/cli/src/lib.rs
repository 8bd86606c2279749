//! Sampling, Monte Carlo bias studies, published-table reproduction, and file
//! formats around the composite-risk estimation core.

pub mod experiments;
pub mod fixtures;
pub mod report;

pub use experiments::{
    expected_excess_power, normal_scale_convention, run_bias_study, true_value_oracle, BiasRow,
    BiasStudy, ConventionReport, Distribution, DistributionConfig, EstimatorSpec, ExperimentConfig,
    OracleResult, OrderingStats, RiskConfig, ScaleConvention,
};
