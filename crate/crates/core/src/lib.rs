//! Numerical laboratory for parabolic implosion of a perturbed family of
//! maps of C² tangent to the identity.

pub mod error;
pub mod fatou;
pub mod julia;
pub mod lavaurs;
pub mod mapfamily;
pub mod point;
pub mod poly;
pub mod regions;
pub mod sum;

pub use error::{Error, Result};
pub use mapfamily::{MapParts, Monomial, OrbitResult, PolyMap2};
pub use point::{c, ComplexPoint, C64};
pub use regions::{RegionConfig, RegionParams};
