//! Function-aware distributed quantization with hyperplane arrangements.
//!
//! Sources quantize their observations by the side of each hyperplane of a
//! shared arrangement ("hyper bins"); the arrangement is chosen to maximize
//! the information the bins keep about a class label, and a decoder maps
//! pairs of bins to function values.

pub mod ccc;
pub mod classmodel;
pub mod coding;
pub mod error;
pub mod geometry;
pub mod infometric;
pub mod optimizer;
pub mod rng;

pub use ccc::{Coloring, JointColoringFamily};
pub use classmodel::{ClassModel, ProjectedClass, SideProfile};
pub use coding::{CodingReport, FunctionTable, HelperPayload, Source};
pub use error::{Error, Result};
pub use geometry::{Arrangement, Hyperplane, SignWord};
pub use infometric::{PartitionProfile, SymmetricSequenceStats};
pub use optimizer::{CountMode, OptimizationResult, SearchConfig};
