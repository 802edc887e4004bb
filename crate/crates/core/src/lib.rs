pub mod coupling;
pub mod error;
pub mod fluctstats;
pub mod growth;
pub mod lattice;
pub mod potential;
pub mod randomwalk;
pub mod scalar;
pub mod shellgeom;
pub mod snapshot;

pub use error::{Error, Result};
pub use lattice::Point;
pub use scalar::Scalar;
pub use shellgeom::{ShellTable, DEFAULT_H0};

pub type Point3 = Point<3>;
pub type Point4 = Point<4>;
pub type Cluster3 = growth::ClusterState<3>;
pub type Cluster4 = growth::ClusterState<4>;
pub type HarmonicSolve64 = potential::HarmonicSolve<f64>;
pub type HarmonicSolve32 = potential::HarmonicSolve<f32>;
