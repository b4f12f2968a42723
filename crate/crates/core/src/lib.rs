//! Box-supervised 3D instance pseudo labels from per-overlap Gaussian processes.
//!
//! Boxes carve a point cloud into regions. Regions inside exactly one box take
//! that box's label; regions shared by two boxes are labelled by a GP trained
//! on the determined regions of the pair, which also yields a per-point
//! variance.

pub mod error;
pub mod eval;
pub mod gp;
pub mod ingest;
pub mod labeler;
pub mod losses;
pub mod partition;

pub use error::{Error, Result};
