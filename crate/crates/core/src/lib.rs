pub mod error;
pub mod model;
pub mod numeric;
pub mod variational;
pub mod critical;
pub mod gaussian;
pub mod quadrature;

pub use error::{Error, Result};
pub use model::{DimerCounts, ModelParams, PopulationSizes};
pub use variational::{DimerDensities, EffectiveWeights, Maximizer};
pub use critical::{BranchSolution, CriticalPoint, ReducedParams, Stability};
pub use gaussian::{DimerWeightMatrix, GaussianEstimate, GaussianMethod};
