//! The shallow baseline: a 70-dimensional bag-of-features summary per
//! three-second excerpt and a 100-tree random forest with balanced class
//! weighting.

mod error;
pub mod features;
pub mod forest;
pub mod tree;

pub use error::ForestError;
pub use features::{bag_of_features, feature_names, features_csv, FeatureVector70, FEATURE_DIM};
pub use forest::{forest_predict, forest_train, ForestConfig, ForestModel};
pub use tree::Node;

pub type Result<T> = std::result::Result<T, ForestError>;
