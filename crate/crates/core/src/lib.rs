//! Spectral–spatial features for hyperspectral classification.
//!
//! Spatial filters are learned as the eigenvectors of the covariance of all
//! `c×c` patches of a characteristic image (the first spectral principal
//! component). Filtering every retained component with them yields a
//! per-pixel energy profile, which is classified by a one-vs-one
//! polynomial-kernel SVM and scored over repeated random training draws.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`). The aliases
//! below fix the scalar for the common cases.

pub mod datacube;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod filters;
pub mod linalg;
pub mod profile;
pub mod scalar;
pub mod spectral;
pub mod svm;
pub mod synthetic;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Real;

pub type HyperCube = datacube::HyperCube<f64>;
pub type Image = datacube::Image<f64>;
pub type PcaModel = spectral::PcaModel<f64>;
pub type PcStack = spectral::PcStack<f64>;
pub type FilterSet = filters::FilterSet<f64>;
pub type EnergyProfile = profile::EnergyProfile<f64>;
pub type SvmModel = svm::SvmModel<f64>;

pub type HyperCube32 = datacube::HyperCube<f32>;
pub type Image32 = datacube::Image<f32>;
pub type PcaModel32 = spectral::PcaModel<f32>;
pub type FilterSet32 = filters::FilterSet<f32>;
pub type EnergyProfile32 = profile::EnergyProfile<f32>;
pub type SvmModel32 = svm::SvmModel<f32>;
