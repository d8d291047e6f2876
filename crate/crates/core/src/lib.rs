//! Planar Filippov systems.
//!
//! Crossing and sliding trajectories, one-sided first-return maps near a boundary
//! saddle, the α/β bifurcation parameters of the degenerate cycle, and the built-in
//! polynomial and pendulum model families.

pub mod bifurc;
pub mod error;
pub mod flow;
pub mod geom;
pub mod models;
pub mod ode;
pub mod psys;
pub mod retmap;
pub mod roots;
pub mod sliding;

pub use error::{Error, Result};
pub use flow::{Orbit, OrbitSegment, SaddleData, SegmentKind};
pub use geom::{Mat2, Rect, Vec2};
pub use psys::{PiecewiseSystem, SigmaChart, SigmaPointClass, SmoothField, SwitchingFunction};
pub use retmap::{Landing, LandingOutcome, ReturnMap};

/// Tie tolerance on Lie derivatives when classifying points of Σ.
pub const TOL_TANG: f64 = 1e-10;
