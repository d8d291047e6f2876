use crate::geom::Vec2;
use crate::ode::OdeError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point {0:?} is not on the switching manifold (|h| = {1:e})")]
    NotOnSigma(Vec2, f64),
    #[error("field is not tangent to Σ at {0:?} (Fh = {1:e})")]
    NotTangent(Vec2, f64),
    #[error("point {0:?} is not in the sliding or escaping region")]
    NotSlidingRegion(Vec2),
    #[error("sliding field denominator vanishes at {0:?}")]
    DegenerateDenominator(Vec2),
    #[error("step size underflow at t={t}, last state {state:?}")]
    StepSizeUnderflow { t: f64, state: Vec2 },
    #[error("two events closer than 1e-12 in time near t={0}")]
    EventAmbiguity(f64),
    #[error("non-finite state at t={0}")]
    NonFinite(f64),
    #[error("Newton iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("equilibrium at {0:?} is not a saddle (det J = {1})")]
    NotASaddle(Vec2, f64),
    #[error("no fold of the plus field on Σ near chart value {0}")]
    NoFold(f64),
    #[error("orbit from chart value {0} does not return to Σ: {1}")]
    NoReturn(f64, String),
    #[error("argument outside domain: {0}")]
    DomainError(String),
    #[error("need at least {need} samples, got {got}")]
    InsufficientSamples { need: usize, got: usize },
    #[error("derivative probe inconclusive (slope {0})")]
    Inconclusive(f64),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("residual does not change sign on [{0}, {1}]")]
    BracketFailure(f64, f64),
    #[error("orbit is not closed (gap {0:e})")]
    NotClosed(f64),
    #[error("unknown region fixture `{0}`")]
    UnknownRegion(String),
    #[error("unstable manifold has fewer than three intersections with Σ")]
    FewerIntersections,
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<OdeError> for Error {
    fn from(e: OdeError) -> Self {
        match e {
            OdeError::StepSizeUnderflow { t, state } => Error::StepSizeUnderflow { t, state },
            OdeError::NonFinite { t, .. } => Error::NonFinite(t),
        }
    }
}
