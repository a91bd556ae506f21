//! Numerical kernel for resurgent functions in the Borel plane: discrete
//! filtered sets, allowed paths, the contour deformation that keeps both
//! factors of a convolution allowed, and the convolution engine built on it.

pub mod deformation;
pub mod filtered_set;
pub mod germs;
pub mod paths;
pub mod scalar;

pub use deformation::{deform, validate, DeformConfig, DeformError, DeformationGrid, ValidationReport};
pub use filtered_set::{glimpsed_inductive, DirectionalGlimpse, Entry, FilteredSet, SetError};
pub use germs::{
    continue_along, convolve_along, convolve_at, singularity_probe, Classification, ContinuationTrace,
    ConvolveConfig, Germ, GermError, ProbeReport,
};
pub use paths::{local_radius, AdmissibleLevelInterval, Path, PathError};
pub use scalar::{cx, Cx, Scalar};

pub type FilteredSet64 = FilteredSet<f64>;
pub type FilteredSet32 = FilteredSet<f32>;
pub type Path64 = Path<f64>;
pub type Path32 = Path<f32>;
pub type Germ64 = Germ<f64>;
pub type Germ32 = Germ<f32>;
pub type DeformationGrid64 = DeformationGrid<f64>;
pub type DeformationGrid32 = DeformationGrid<f32>;
pub type Trace64 = ContinuationTrace<f64>;
