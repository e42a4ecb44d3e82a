//! Mediation analysis with an eye on the total-effect test.
//!
//! The crate fits the three mediation regressions (`M ~ X`, `Y ~ M + X`,
//! `Y ~ X`) by least squares and least absolute deviations, tests the paths
//! with F, Sobel and LAD-Z statistics, and reduces a no-covariate data matrix
//! to canonical `(r, p, q)` coordinates in which every rejection region has a
//! closed form. On top of that sit the mediation typology (PAPA versus
//! causal steps), percent-contribution effect sizes and a seeded Monte Carlo
//! study showing how often the total-effect test rejects mediation that the
//! path tests establish.

pub mod dataset;
pub mod distributions;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod linalg;
pub mod reduction;
pub mod simulation;
pub mod typology;

pub use dataset::{complete_cases, describe, load_csv, percentize, Dataset, DescriptiveSummary, Role, VariableSpec};
pub use error::{MediationError, Result};
pub use estimation::{fit_lad, fit_lse, ols_fit, sobel_test, DataMatrix, Framework, MediationFit, ModelSpec, OlsFit};
pub use geometry::{CriticalValues, RegionId};
pub use reduction::{canonical_reduce, coords_to_estimates, geometry_point, CanonicalCoords, GeometryPoint};
pub use simulation::{run_study, SimulationConfig, SimulationReport};
pub use typology::{classify, percent_contributions, ContributionReport, EffectTests, TypologyVerdict};
