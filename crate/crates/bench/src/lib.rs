//! Shared inputs for the benchmarks.

use filippov_core::models::{pendulum_model, polynomial_model, PendulumParams, PolyParams};
use filippov_core::PiecewiseSystem;

/// Pendulum in region R2 (virtual saddle, attracting crossing cycle).
pub fn pendulum_r2() -> PiecewiseSystem {
    pendulum_model(PendulumParams::new(-0.2, -0.77, 0.1, 0.1))
}

/// Polynomial model with a boundary saddle.
pub fn poly_boundary() -> PiecewiseSystem {
    polynomial_model(PolyParams::new(3.0, -1.0, 1.2, 0.0))
}
