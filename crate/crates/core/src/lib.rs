//! Cayley balls, r-local covers, canonical decompositions and
//! graph-of-groups splittings of finitely generated groups at desk scale.

pub mod bass_serre;
pub mod cayley;
pub mod cover;
pub mod decomposition;
pub mod error;
pub mod finite;
pub mod fixtures;
pub mod gog;
pub mod group;
pub mod matrix;
pub mod pipeline;
pub mod spec;
pub mod subgroups;

pub use error::{Error, Result};
pub use group::{Element, Group, Letter};
