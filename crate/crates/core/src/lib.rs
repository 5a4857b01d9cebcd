//! Exact algebra for reduced Steenrod operations on Chow groups of cellular
//! varieties, built from the Riemann-Roch transformation and the homological
//! Adams operation.

pub mod algebra;
pub mod char_classes;
pub mod error;
pub mod ktheory;
pub mod series;
pub mod steenrod;
pub mod varieties;
pub mod verify;

pub use algebra::{CellularVariety, ChowClass, Class, ModPClass, RationalClass};
pub use char_classes::VirtualBundle;
pub use error::{Error, Result};
pub use ktheory::KClass;
pub use varieties::{Morphism, MorphismKind, VarietySpec};
