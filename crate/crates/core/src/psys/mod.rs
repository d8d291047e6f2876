//! Planar piecewise-smooth systems `Z = (X, Y)` switched by the sign of `h`.

pub mod expr;
pub mod modelfile;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Mat2, Rect, Vec2};
use crate::TOL_TANG;

type VecFn = dyn Fn(Vec2) -> Vec2 + Send + Sync;
type MatFn = dyn Fn(Vec2) -> Mat2 + Send + Sync;
type ScalarFn = dyn Fn(Vec2) -> f64 + Send + Sync;

const JAC_FD_STEP: f64 = 1e-6;
const HESS_FD_STEP: f64 = 1e-5;

/// A smooth planar vector field with an optional closed-form Jacobian.
#[derive(Clone)]
pub struct SmoothField {
    f: Arc<VecFn>,
    jac: Option<Arc<MatFn>>,
}

impl fmt::Debug for SmoothField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothField")
            .field("closed_form_jacobian", &self.jac.is_some())
            .finish()
    }
}

impl SmoothField {
    pub fn new(f: impl Fn(Vec2) -> Vec2 + Send + Sync + 'static) -> Self {
        SmoothField {
            f: Arc::new(f),
            jac: None,
        }
    }

    pub fn with_jacobian(
        f: impl Fn(Vec2) -> Vec2 + Send + Sync + 'static,
        jac: impl Fn(Vec2) -> Mat2 + Send + Sync + 'static,
    ) -> Self {
        SmoothField {
            f: Arc::new(f),
            jac: Some(Arc::new(jac)),
        }
    }

    #[inline]
    pub fn eval(&self, p: Vec2) -> Vec2 {
        (self.f)(p)
    }

    pub fn has_closed_jacobian(&self) -> bool {
        self.jac.is_some()
    }

    pub fn jacobian(&self, p: Vec2) -> Mat2 {
        match &self.jac {
            Some(j) => j(p),
            None => self.fd_jacobian(p),
        }
    }

    /// Central-difference Jacobian, step 1e-6.
    pub fn fd_jacobian(&self, p: Vec2) -> Mat2 {
        let h = JAC_FD_STEP;
        let dx = (self.eval(p + Vec2::new(h, 0.0)) - self.eval(p - Vec2::new(h, 0.0))) * (0.5 / h);
        let dy = (self.eval(p + Vec2::new(0.0, h)) - self.eval(p - Vec2::new(0.0, h))) * (0.5 / h);
        Mat2::from_cols(dx, dy)
    }

    /// The field `-F`, used for backward-time integration.
    pub fn negated(&self) -> SmoothField {
        let f = self.f.clone();
        let jac = self.jac.clone().map(|j| {
            Arc::new(move |p: Vec2| {
                let m = j(p);
                Mat2::new(-m.a, -m.b, -m.c, -m.d)
            }) as Arc<MatFn>
        });
        SmoothField {
            f: Arc::new(move |p| -f(p)),
            jac,
        }
    }
}

/// The scalar `h` whose zero set is Σ.
#[derive(Clone)]
pub struct SwitchingFunction {
    h: Arc<ScalarFn>,
    grad: Option<Arc<VecFn>>,
    hess: Option<Arc<MatFn>>,
}

impl fmt::Debug for SwitchingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SwitchingFunction")
            .field("closed_form_gradient", &self.grad.is_some())
            .field("closed_form_hessian", &self.hess.is_some())
            .finish()
    }
}

impl SwitchingFunction {
    pub fn new(h: impl Fn(Vec2) -> f64 + Send + Sync + 'static) -> Self {
        SwitchingFunction {
            h: Arc::new(h),
            grad: None,
            hess: None,
        }
    }

    pub fn with_derivatives(
        h: impl Fn(Vec2) -> f64 + Send + Sync + 'static,
        grad: impl Fn(Vec2) -> Vec2 + Send + Sync + 'static,
        hess: impl Fn(Vec2) -> Mat2 + Send + Sync + 'static,
    ) -> Self {
        SwitchingFunction {
            h: Arc::new(h),
            grad: Some(Arc::new(grad)),
            hess: Some(Arc::new(hess)),
        }
    }

    /// `h(x, y) = a x + b y + c`.
    pub fn affine(a: f64, b: f64, c: f64) -> Self {
        SwitchingFunction::with_derivatives(
            move |p| a * p.x + b * p.y + c,
            move |_| Vec2::new(a, b),
            |_| Mat2::new(0.0, 0.0, 0.0, 0.0),
        )
    }

    #[inline]
    pub fn eval(&self, p: Vec2) -> f64 {
        (self.h)(p)
    }

    pub fn gradient(&self, p: Vec2) -> Vec2 {
        match &self.grad {
            Some(g) => g(p),
            None => {
                let s = JAC_FD_STEP;
                Vec2::new(
                    (self.eval(p + Vec2::new(s, 0.0)) - self.eval(p - Vec2::new(s, 0.0))) / (2.0 * s),
                    (self.eval(p + Vec2::new(0.0, s)) - self.eval(p - Vec2::new(0.0, s))) / (2.0 * s),
                )
            }
        }
    }

    /// Hessian of `h`, closed form when available, else central differences of the
    /// gradient with step 1e-5.
    pub fn hessian(&self, p: Vec2) -> Mat2 {
        if let Some(hs) = &self.hess {
            return hs(p);
        }
        let s = HESS_FD_STEP;
        let gx = (self.gradient(p + Vec2::new(s, 0.0)) - self.gradient(p - Vec2::new(s, 0.0))) * (0.5 / s);
        let gy = (self.gradient(p + Vec2::new(0.0, s)) - self.gradient(p - Vec2::new(0.0, s))) * (0.5 / s);
        // Symmetrize.
        let off = 0.5 * (gx.y + gy.x);
        Mat2::new(gx.x, off, off, gy.y)
    }

    /// Move `p` onto Σ with one Newton step along ∇h.
    pub fn project(&self, p: Vec2) -> Vec2 {
        let g = self.gradient(p);
        let n2 = g.dot(g);
        if n2 == 0.0 {
            return p;
        }
        p - g * (self.eval(p) / n2)
    }
}

/// `⟨F(p), ∇h(p)⟩`.
pub fn lie_derivative(f: &SmoothField, h: &SwitchingFunction, p: Vec2) -> f64 {
    f.eval(p).dot(h.gradient(p))
}

/// `F(Fh)(p) = ∇(Fh)·F` with `∇(Fh) = J_Fᵀ ∇h + H_h F`.
pub fn second_lie(f: &SmoothField, h: &SwitchingFunction, p: Vec2) -> f64 {
    let fv = f.eval(p);
    let grad_fh = f.jacobian(p).transpose().apply(h.gradient(p)) + h.hessian(p).apply(fv);
    grad_fh.dot(fv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaTag {
    Crossing,
    Sliding,
    Escaping,
    Tangency,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaPointClass {
    pub tag: SigmaTag,
    pub lie_x: f64,
    pub lie_y: f64,
}

impl SigmaPointClass {
    pub fn from_lie(lie_x: f64, lie_y: f64) -> Self {
        let tag = if lie_x.abs() <= TOL_TANG || lie_y.abs() <= TOL_TANG {
            SigmaTag::Tangency
        } else if lie_x * lie_y > 0.0 {
            SigmaTag::Crossing
        } else if lie_x < 0.0 {
            SigmaTag::Sliding
        } else {
            SigmaTag::Escaping
        };
        SigmaPointClass { tag, lie_x, lie_y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TangencyKind {
    VisibleFold,
    InvisibleFold,
    HigherOrder,
}

const TOL_FOLD: f64 = 1e-9;

/// Visibility of a tangency of `f` with Σ, seen from `side`.
pub fn classify_tangency(f: &SmoothField, h: &SwitchingFunction, p: Vec2, side: Side) -> Result<TangencyKind> {
    let fh = lie_derivative(f, h, p);
    if fh.abs() > TOL_FOLD {
        return Err(Error::NotTangent(p, fh));
    }
    let f2h = second_lie(f, h, p);
    if f2h.abs() <= TOL_FOLD {
        return Ok(TangencyKind::HigherOrder);
    }
    let visible = match side {
        Side::Plus => f2h > 0.0,
        Side::Minus => f2h < 0.0,
    };
    Ok(if visible {
        TangencyKind::VisibleFold
    } else {
        TangencyKind::InvisibleFold
    })
}

/// The x-coordinate chart on Σ, optionally reversed.
///
/// Chart value `u` corresponds to the point of Σ with abscissa `orientation * u`, so Σ
/// must be a graph over x on the working window (`∂h/∂y ≠ 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaChart {
    pub orientation: f64,
    /// Starting ordinate for the Newton solve of `h(x, y) = 0`.
    pub y_guess: f64,
}

impl Default for SigmaChart {
    fn default() -> Self {
        SigmaChart {
            orientation: 1.0,
            y_guess: 0.0,
        }
    }
}

impl SigmaChart {
    /// Point of Σ at chart value `u`; NaN components if the Newton solve fails.
    pub fn param(&self, h: &SwitchingFunction, u: f64) -> Vec2 {
        let x = self.orientation * u;
        let mut y = self.y_guess;
        for _ in 0..60 {
            let p = Vec2::new(x, y);
            let v = h.eval(p);
            let hy = h.gradient(p).y;
            if hy == 0.0 || !hy.is_finite() {
                break;
            }
            let dy = v / hy;
            y -= dy;
            if dy.abs() <= 1e-15 * (1.0 + y.abs()) {
                return Vec2::new(x, y);
            }
        }
        let p = Vec2::new(x, y);
        if h.eval(p).abs() <= 1e-12 {
            p
        } else {
            Vec2::new(f64::NAN, f64::NAN)
        }
    }

    pub fn inverse(&self, p: Vec2) -> f64 {
        self.orientation * p.x
    }

    /// Chart component of a tangent vector.
    pub fn component(&self, v: Vec2) -> f64 {
        self.orientation * v.x
    }
}

/// `Z = (X, Y)`: `X` governs `h ≥ 0`, `Y` governs `h ≤ 0`.
#[derive(Debug, Clone)]
pub struct PiecewiseSystem {
    pub plus: SmoothField,
    pub minus: SmoothField,
    pub switch: SwitchingFunction,
    pub chart: SigmaChart,
    /// Starting guess for the saddle of the plus field.
    pub saddle_hint: Vec2,
    pub window: Rect,
    pub name: String,
}

impl PiecewiseSystem {
    pub fn new(plus: SmoothField, minus: SmoothField, switch: SwitchingFunction) -> Self {
        PiecewiseSystem {
            plus,
            minus,
            switch,
            chart: SigmaChart::default(),
            saddle_hint: Vec2::ZERO,
            window: Rect::default(),
            name: String::from("custom"),
        }
    }

    pub fn with_saddle_hint(mut self, p: Vec2) -> Self {
        self.saddle_hint = p;
        self
    }

    pub fn with_window(mut self, w: Rect) -> Self {
        self.window = w;
        self
    }

    pub fn with_chart(mut self, c: SigmaChart) -> Self {
        self.chart = c;
        self
    }

    pub fn with_name(mut self, n: impl Into<String>) -> Self {
        self.name = n.into();
        self
    }

    #[inline]
    pub fn h(&self, p: Vec2) -> f64 {
        self.switch.eval(p)
    }

    pub fn grad_h(&self, p: Vec2) -> Vec2 {
        self.switch.gradient(p)
    }

    pub fn xh(&self, p: Vec2) -> f64 {
        lie_derivative(&self.plus, &self.switch, p)
    }

    pub fn yh(&self, p: Vec2) -> f64 {
        lie_derivative(&self.minus, &self.switch, p)
    }

    /// `det[X | Y]`, zero where the two fields are parallel.
    pub fn det_xy(&self, p: Vec2) -> f64 {
        self.plus.eval(p).cross(self.minus.eval(p))
    }

    pub fn param(&self, u: f64) -> Vec2 {
        self.chart.param(&self.switch, u)
    }

    pub fn chart_of(&self, p: Vec2) -> f64 {
        self.chart.inverse(p)
    }

    pub fn classify_sigma_point(&self, p: Vec2) -> Result<SigmaPointClass> {
        let hv = self.h(p);
        if !(hv.abs() <= 1e-9) {
            return Err(Error::NotOnSigma(p, hv));
        }
        Ok(SigmaPointClass::from_lie(self.xh(p), self.yh(p)))
    }

    /// Tangency type of the plus (`Side::Plus`) or minus field at `p`.
    pub fn classify_tangency(&self, p: Vec2, side: Side) -> Result<TangencyKind> {
        let f = match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        };
        classify_tangency(f, &self.switch, p, side)
    }

    /// Same system with both fields negated (backward time).
    pub fn reversed(&self) -> PiecewiseSystem {
        PiecewiseSystem {
            plus: self.plus.negated(),
            minus: self.minus.negated(),
            ..self.clone()
        }
    }
}
