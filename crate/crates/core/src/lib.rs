//! Mean distance, spectral gap and surgery on compact metric graphs.

pub mod bounds;
pub mod distance;
pub mod error;
pub mod experiments;
pub mod generators;
pub mod graph;
pub mod io;
pub mod mean;
pub mod report;
pub mod spectral;
pub mod strip;
pub mod surgery;

pub use distance::{GraphMetric, VertexDistanceMatrix};
pub use error::{Error, Result};
pub use graph::{GraphRecord, MetricGraph, PointOnEdge};
