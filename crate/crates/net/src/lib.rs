//! Network architectures over the 96-bin constant-Q input: the flat
//! time-frequency strategy, the purely temporal strategy on the top
//! octaves, the pitch-spiral strategy on the low octaves, and hybrids that
//! concatenate branch features under one shared dense head.
//!
//! [`NetworkSpec`] is the declarative source of truth; parameter budgets
//! are counted symbolically from it, and [`Network`] instantiates and runs
//! the graph.

mod error;
pub mod network;
pub mod spec;

pub use error::NetError;
pub use network::{Gradients, Network, TrainTape};
pub use spec::{
    build_1d, build_2d, build_hybrid, build_spiral, by_name, canonical_names, count_params,
    standard_head, BandCrop, BranchSpec, LayerCount, LayerSpec, NetworkSpec, ParamCount,
    ShapeState, Strategy, FULL_CROP, ONE_D_CROP, SPIRAL_CROP,
};

pub type Result<T> = std::result::Result<T, NetError>;
