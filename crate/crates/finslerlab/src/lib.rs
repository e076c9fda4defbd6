//! finslerlab: a symbolic-numeric workbench for Finsler metrics.
//!
//! Given a squared-norm expression F²(x, y) in a small definition language,
//! the crate computes the pointwise tensor tower (metric, angular metric,
//! Cartan tensor and contractions), the geodesic spray with its nonlinear,
//! Berwald and Cartan connections, Landsberg and T tensors, classifies the
//! metric among the standard special classes, and detects or verifies
//! semi-concurrent / concurrent / gradient-type vector fields by null-space
//! extraction and residual checks. A catalog of worked metrics with their
//! closed-form components backs the regression suite and the CLI.

pub mod catalog;
pub mod classify;
pub mod cli;
pub mod connections;
pub mod error;
pub mod expr;
pub mod fundamental;
pub mod json;
pub mod metric;
pub mod numdiff;
pub mod rng;
pub mod scfield;
pub mod tensor;
pub mod util;

pub use error::{Error, Result};
pub use fundamental::{DomainStatus, FundamentalBundle, MetricEngine};
pub use metric::{
    parse_metric, Bindings, FieldKind, MetricSpec, VectorFieldSpec,
};
pub use tensor::{Slot, Tensor};

#[cfg(test)]
mod thread_safety {
    fn assert_send_sync<T: Send + Sync>() {}

    #[test]
    fn shared_types_are_send_sync() {
        // expressions, specs and engines are shared read-only across
        // evaluation threads
        assert_send_sync::<crate::expr::ScalarExpr>();
        assert_send_sync::<crate::metric::MetricSpec>();
        assert_send_sync::<crate::metric::Bindings>();
        assert_send_sync::<crate::fundamental::MetricEngine>();
        assert_send_sync::<crate::tensor::Tensor>();
    }
}
