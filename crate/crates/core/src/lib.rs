//! Sliced inverse regression with overlapping slices, cumulative slicing,
//! structural dimension selection, and the experiment harnesses around them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod data;
pub mod dimension;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod metrics;
pub mod regression;
pub mod report;
pub mod simulation;
pub mod slicing;
pub mod stats;

#[cfg(test)]
mod testutil;

pub use bench::{run_bench, BenchReport, Suite};
pub use data::{ingest_csv, read_csv, write_csv, Dataset};
pub use dimension::{modified_bic, penalty_constant, BicCurve};
pub use error::{OsirError, Result};
pub use estimators::{
    cume_kernel, fit_edr, osir_difference_form, osir_kernel, sir_kernel, DimChoice, EdrEstimate,
    FitOptions, KernelMatrix, Method,
};
pub use linalg::{generalized_eigen, GeneralizedEigenResult, SymmetricMatrix};
pub use metrics::{projection_matrix, trace_correlation, SubspaceBasis};
pub use regression::{housing_pipeline, knn_predict, linear_regression_baseline, HousingOptions, HousingReport, SplitSpec};
pub use report::{Payload, ReportEnvelope};
pub use simulation::{generate_model, run_monte_carlo, ModelSpec, SimulationPlan, SimulationReport};
pub use slicing::{assign_slices, slice_stats, SliceAssignment, SliceStats};
