//! Extension of the unstable and stable directions off the trapped set.
//!
//! The unstable direction is written as R(v_u + λ v_s) for a frame (v_u, v_s)
//! and λ is found as the fixed point of the graph transform
//! (Tλ)(ρ') = χ(ρ') t(F^{-1}ρ', λ(F^{-1}ρ')). Its derivative dλ is the fixed
//! point of the fiber map G_λ.

pub mod frames;
pub mod grid;
pub mod transform;

pub use frames::{FrameField, SplitCutoff};
pub use grid::{BlockGrid, CovectorField, SlopeField, SplitGrid};
pub use transform::{kappa_eta, Direction, EtaReport, LocalData, SolveReport, SplittingProblem};

use crate::classical::{orbits, OpenMapSystem};
use crate::error::Result;

/// Grid points per block side used by the convenience solvers.
pub const DEFAULT_GRID: usize = 256;

fn default_problem(sys: &OpenMapSystem, frames: FrameField, direction: Direction) -> Result<SplittingProblem<'_>> {
    let samples = if sys.meta.has_hole {
        orbits::TrappedPool::build(sys, 6)?.points
    } else {
        Vec::new()
    };
    let cutoff = SplitCutoff::default_for(sys, &samples);
    SplittingProblem::new(sys, SplitGrid::for_system(sys, DEFAULT_GRID), frames, cutoff, direction)
}

/// Fixed point λ_u of T on the default grid and cutoff.
pub fn solve_unstable_slope(
    sys: &OpenMapSystem,
    frames: FrameField,
    tol: f64,
    max_iter: usize,
) -> Result<(SlopeField, SolveReport)> {
    default_problem(sys, frames, Direction::Unstable)?.solve_slope(tol, max_iter)
}

/// Stable counterpart, obtained by running T on F^{-1}.
pub fn solve_stable_slope(
    sys: &OpenMapSystem,
    frames: FrameField,
    tol: f64,
    max_iter: usize,
) -> Result<(SlopeField, SolveReport)> {
    default_problem(sys, frames, Direction::Stable)?.solve_slope(tol, max_iter)
}

/// Fixed point α_u = dλ_u of G_{λ_u} on the default grid and cutoff.
pub fn solve_derivative_field(
    sys: &OpenMapSystem,
    frames: FrameField,
    tol: f64,
    max_iter: usize,
) -> Result<(CovectorField, SolveReport)> {
    let prob = default_problem(sys, frames, Direction::Unstable)?;
    let (lam, _) = prob.solve_slope(tol, max_iter)?;
    prob.solve_derivative(&lam, tol, max_iter)
}
