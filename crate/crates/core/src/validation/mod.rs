//! Calibration harness, synthetic data generators and experiment runners.

pub mod calibration;
pub mod datagen;
pub mod experiments;

pub use calibration::{calibration_suite, exact_pit_cdf, ks_statistic, CalibrationConfig, CalibrationReport, DiscreteDistribution};
pub use datagen::{gen_triangle, gen_trig, Generator, SyntheticDataset};
pub use experiments::{
    curve_grid, run_figure1, run_figure23, sup_distance_between, sup_distance_to_cdf, Curve, Figure1, Figure23, Panel,
    CURVE_POINTS, SPAN_IQR,
};
