//! Open hyperbolic maps, trapped sets and the word calculus of local Jacobians.

pub mod billiard;
pub mod orbits;
pub mod system;
pub mod words;

pub use billiard::{equilateral_centers, Chord, DiskGeometry};
pub use orbits::{
    stable_jacobian, trapped_set_sample, unstable_direction, unstable_jacobian, TrappedPool,
};
pub use system::{Cell, MapPiece, OpenMapSystem, PieceKind, SymbolicWord, SystemMetadata};
pub use words::{local_word_jacobian, word_neighborhood_contains, JacobianPair, Sign};
