//! Statistics relating a measure to the generalization gap across a sweep.

mod cmi;
mod granulated;
mod hyper;
mod kendall;
pub mod regression;
mod report;

pub use cmi::{cmi, conditional_information, CmiConfig, CmiResult, ConditioningEncoding, SubsetCmi};
pub use granulated::{granulated_kendall, AxisPsi, Granulated};
pub use hyper::{AxisValue, HyperparamConfig};
pub use kendall::kendall_tau;
pub use regression::{regression_r2, R2Result};
pub use report::{
    EvalReport, MeasureReport, ModelGaps, ReportConfig, SEED_AXIS, TABLE1_HEADER, TABLE2_AXES, TABLE2_HEADER,
};
