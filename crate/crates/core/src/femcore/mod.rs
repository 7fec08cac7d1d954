//! Reference-element machinery: quadrature, polynomial bases, element maps
//! and the local finite element spaces.

pub mod dense;
pub mod geometry;
pub mod poly;
pub mod quadrature;
pub mod spaces;

pub use geometry::{piola_map, ElementGeometry};
pub use quadrature::{quadrature, QuadRule};
pub use spaces::{
    make_bdm_space, make_reduced_space, make_scalar_space, project, BubbleSpace, HdivFamily, LocalSpace, SpaceKind,
};
