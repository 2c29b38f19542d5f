//! Explanatory regression of recommendation accuracy on dataset
//! characteristics.

mod design;
mod ols;
mod report;
pub mod stats;

pub use design::{build_design, DesignMatrix, DroppedRow, Observation};
pub use ols::{adjusted_r2, fit_ols, fit_ols_with, RankPolicy};
pub use report::{markdown_table, CoefficientRow, RegressionReport, COEFFICIENT_HEADER, FIT_HEADER};
pub use stats::significance_stars;
