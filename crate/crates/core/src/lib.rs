//! Detection and repair of missing and supernumerary body parts in
//! generated imagery.
//!
//! The pipeline runs in three steps over one image:
//!
//! 1. [`redundant`]: ground every part, regenerate each one in place with a
//!    prompt for its own class, and flag parts that fail to re-ground;
//! 2. [`absent`]: repeatedly ask the absent-part detector for one missing
//!    part, fill it in, and ask again until nothing is reported;
//! 3. [`repair`]: replay every finding as an inpainting step on the
//!    original image.
//!
//! All models sit behind the traits in [`backends`]; the mock world in
//! [`backends::mock`] makes the whole pipeline runnable and checkable
//! offline. [`dataset`] builds evaluation and training data and
//! [`eval`] implements the metrics.

pub mod absent;
pub mod annotation;
pub mod backends;
pub mod dataset;
pub mod domain;
mod error;
pub mod eval;
pub mod pipeline;
pub mod redundant;
pub mod repair;
pub mod scenegen;

#[cfg(any(test, feature = "oracle"))]
pub mod oracle;

pub use backends::{Backends, Embedding, SceneGraph};
pub use domain::*;
pub use error::{Error, Result};
pub use pipeline::Pipeline;
