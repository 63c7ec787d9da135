//! Perceptual-manifold analysis toolkit.
//!
//! A classifier's perceptual manifold for a class is the set of inputs it
//! assigns to that class above a confidence threshold. This crate bundles
//! the machinery to study such sets at desk scale:
//!
//! * [`numerics`] — covariance, symmetric eigendecomposition, 2-D FFT,
//!   log-log fits, seeded ChaCha8 randomness;
//! * [`dimension`] — participation-ratio and two-nearest-neighbor
//!   dimension estimators with sample-size scaling curves;
//! * [`geometry`] — the ellipsoid distance model: exact nearest-boundary
//!   distances, the closed-form expectation, Monte Carlo estimates;
//! * [`model`] — small differentiable classifiers, synthetic
//!   low-dimensional datasets, standard and adversarial training;
//! * [`sampler`] — projected gradient ascent onto perceptual manifolds and
//!   distance-to-manifold measurement;
//! * [`attack`] — L-infinity PGD attacks and robust accuracy;
//! * [`spectral`] — covariance spectrum densities, subspace alignment
//!   scores, radially averaged power spectra;
//! * [`io`] — checksummed binary formats for sample sets and checkpoints.
//!
//! Every operation is deterministic given its inputs and seeds; parallel
//! code paths reduce in fixed order so worker count never changes results.

pub mod attack;
pub mod dimension;
pub mod error;
pub mod geometry;
pub mod io;
pub mod model;
pub mod numerics;
pub mod sample_set;
pub mod sampler;
pub mod spectral;

pub use error::{Error, Result};
pub use sample_set::{SampleMeta, SampleSet};
