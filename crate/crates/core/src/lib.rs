//! Partially shared semi-supervised deep matrix factorization for
//! multi-view clustering.

pub mod data;
pub mod error;
pub mod graph;
pub mod kmeans;
pub mod metrics;
pub mod numerics;
pub mod pretrain;
pub mod psdmf;
pub mod seminmf;

pub use data::MultiViewDataset;
pub use error::{PsdmfError, Result};
pub use numerics::Matrix;
pub use psdmf::{fit, FitOutcome, ModelState, PsdmfConfig};
