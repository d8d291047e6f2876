//! Dormand–Prince 5(4) stepper for autonomous planar fields, with the standard
//! fourth-order continuous extension and event localization on top of it.

use crate::geom::Vec2;
use crate::roots::brent;

// Stage nodes are not needed: every field here is autonomous.

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    /// Steps smaller than this (relative to `max(1, |t|)`) abort with underflow.
    pub h_min_rel: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: 0.5,
            h_min_rel: 1e-14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OdeError {
    #[error("step size underflow at t={t} (state {state:?})")]
    StepSizeUnderflow { t: f64, state: Vec2 },
    #[error("non-finite field value at t={t} (state {state:?})")]
    NonFinite { t: f64, state: Vec2 },
}

/// One accepted step together with its interpolant.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    pub y0: Vec2,
    pub y1: Vec2,
    rc: [Vec2; 5],
}

impl DenseStep {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Interpolated state at `t0 + tau`, `tau` in `[0, h]`.
    pub fn at(&self, tau: f64) -> Vec2 {
        let th = tau / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = self.rc;
        r1 + (r2 + (r3 + (r4 + r5 * th1) * th) * th1) * th
    }
}

struct Stages {
    y1: Vec2,
    k: [Vec2; 7],
}

fn rk_stages<F: Fn(Vec2) -> Vec2 + ?Sized>(f: &F, y: Vec2, k1: Vec2, h: f64) -> Stages {
    let k2 = f(y + k1 * (h * A21));
    let k3 = f(y + (k1 * A31 + k2 * A32) * h);
    let k4 = f(y + (k1 * A41 + k2 * A42 + k3 * A43) * h);
    let k5 = f(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h);
    let k6 = f(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h);
    let y1 = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * h;
    let k7 = f(y1);
    Stages {
        y1,
        k: [k1, k2, k3, k4, k5, k6, k7],
    }
}

/// A single fifth-order step of size `h` from `y`, without error control.
///
/// Used to polish event locations: a step shorter than an accepted one is at least
/// as accurate as the accepted one.
pub fn single_step<F: Fn(Vec2) -> Vec2 + ?Sized>(f: &F, y: Vec2, h: f64) -> Vec2 {
    if h == 0.0 {
        return y;
    }
    rk_stages(f, y, f(y), h).y1
}

pub struct Stepper<'f, F: Fn(Vec2) -> Vec2 + ?Sized> {
    f: &'f F,
    t: f64,
    y: Vec2,
    k1: Vec2,
    h: f64,
    opts: OdeOptions,
    pub n_accepted: usize,
    pub n_rejected: usize,
}

impl<'f, F: Fn(Vec2) -> Vec2 + ?Sized> Stepper<'f, F> {
    pub fn new(f: &'f F, t0: f64, y0: Vec2, opts: OdeOptions) -> Self {
        let k1 = f(y0);
        let mut s = Stepper {
            f,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            opts,
            n_accepted: 0,
            n_rejected: 0,
        };
        s.h = s.initial_step();
        s
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> Vec2 {
        self.y
    }

    /// Replace the current state (e.g. after projecting onto a constraint).
    pub fn reset_state(&mut self, y: Vec2) {
        self.y = y;
        self.k1 = (self.f)(y);
    }

    pub fn limit_next_step(&mut self, h: f64) {
        if h > 0.0 && h < self.h {
            self.h = h;
        }
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.opts.atol + self.opts.rtol * a.abs().max(b.abs())
    }

    fn initial_step(&self) -> f64 {
        let sx = self.scale(self.y.x, self.y.x);
        let sy = self.scale(self.y.y, self.y.y);
        let rms = |v: Vec2| (((v.x / sx).powi(2) + (v.y / sy).powi(2)) / 2.0).sqrt();
        let d0 = rms(self.y);
        let d1 = rms(self.k1);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.clamp(1e-12, self.opts.h_max);
        let f1 = (self.f)(self.y + self.k1 * h0);
        let d2 = rms(f1 - self.k1) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        // The heuristic collapses when |y| is comparable to atol; rejections shrink an
        // oversized first step cheaply, so keep a floor.
        (100.0 * h0).min(h1).max(1e-8).min(self.opts.h_max)
    }

    /// Advance by one accepted step.
    pub fn step(&mut self) -> Result<DenseStep, OdeError> {
        loop {
            let h = self.h.min(self.opts.h_max);
            if h < self.opts.h_min_rel * self.t.abs().max(1.0) {
                return Err(OdeError::StepSizeUnderflow {
                    t: self.t,
                    state: self.y,
                });
            }
            let st = rk_stages(self.f, self.y, self.k1, h);
            let [k1, _k2, k3, k4, k5, k6, k7] = st.k;
            if !st.y1.is_finite() || !k7.is_finite() {
                self.n_rejected += 1;
                self.h = h * 0.25;
                if !self.y.is_finite() {
                    return Err(OdeError::NonFinite {
                        t: self.t,
                        state: self.y,
                    });
                }
                continue;
            }
            let err = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
            let sx = self.scale(self.y.x, st.y1.x);
            let sy = self.scale(self.y.y, st.y1.y);
            let en = (((err.x / sx).powi(2) + (err.y / sy).powi(2)) / 2.0).sqrt();
            let fac = if en == 0.0 {
                5.0
            } else {
                (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
            };
            if en <= 1.0 {
                let ydiff = st.y1 - self.y;
                let bspl = k1 * h - ydiff;
                let rc = [
                    self.y,
                    ydiff,
                    bspl,
                    ydiff - k7 * h - bspl,
                    (k1 * D1 + k3 * D3 + k4 * D4 + k5 * D5 + k6 * D6 + k7 * D7) * h,
                ];
                let out = DenseStep {
                    t0: self.t,
                    h,
                    y0: self.y,
                    y1: st.y1,
                    rc,
                };
                self.t += h;
                self.y = st.y1;
                self.k1 = k7;
                self.h = h * fac.min(if self.n_rejected > 0 { 1.0 } else { 5.0 });
                self.n_accepted += 1;
                self.n_rejected = 0;
                return Ok(out);
            }
            self.n_rejected += 1;
            self.h = h * fac.min(1.0);
        }
    }
}

/// Locate `g(y(t)) = 0` inside an accepted step.
///
/// `[lo, hi]` is a sub-bracket of `[0, h]` (offsets from the step start) with `glo`,
/// `ghi` of opposite sign. The root is first found on the interpolant, then polished on
/// exact shorter steps so the returned state carries full integrator accuracy. Returns
/// `(tau, state)` with `tau` measured from the step start.
#[allow(clippy::too_many_arguments)]
pub fn locate_event<F, G>(
    f: &F,
    step: &DenseStep,
    g: G,
    lo: f64,
    hi: f64,
    glo: f64,
    ghi: f64,
    gtol: f64,
) -> Option<(f64, Vec2)>
where
    F: Fn(Vec2) -> Vec2 + ?Sized,
    G: Fn(Vec2) -> f64,
{
    let tau_d = brent(|tau| g(step.at(tau)), lo, hi, glo, ghi, step.h * 1e-14, 0.0, 200)?;
    let exact = |tau: f64| g(single_step(f, step.y0, tau));
    // Tight bracket around the interpolated root; fall back to the sampled bracket.
    let w = (step.h * 1e-6).max(1e-15);
    let (mut a, mut b) = ((tau_d - w).max(lo), (tau_d + w).min(hi));
    let (mut ga, mut gb) = (exact(a), exact(b));
    if ga.signum() == gb.signum() && ga != 0.0 && gb != 0.0 {
        a = lo;
        b = hi;
        ga = exact(lo);
        gb = exact(hi);
        if ga.signum() == gb.signum() && ga != 0.0 && gb != 0.0 {
            // Interpolant and exact steps disagree on the bracket; trust the interpolant.
            return Some((tau_d, step.at(tau_d)));
        }
    }
    let tau = brent(exact, a, b, ga, gb, step.h * 1e-15, gtol * 1e-3, 200)?;
    Some((tau, single_step(f, step.y0, tau)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let f = |p: Vec2| Vec2::new(p.y, -p.x);
        let mut s = Stepper::new(&f, 0.0, Vec2::new(1.0, 0.0), OdeOptions::default());
        let t_end = 2.0 * std::f64::consts::PI;
        while s.t() < t_end {
            s.limit_next_step(t_end - s.t());
            s.step().unwrap();
        }
        assert!((s.y() - Vec2::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn dense_output_matches_exact_solution() {
        let f = |p: Vec2| Vec2::new(p.y, -p.x);
        let mut s = Stepper::new(&f, 0.0, Vec2::new(1.0, 0.0), OdeOptions::default());
        for _ in 0..20 {
            let st = s.step().unwrap();
            for i in 0..=8 {
                let tau = st.h * i as f64 / 8.0;
                let t = st.t0 + tau;
                let exact = Vec2::new(t.cos(), -t.sin());
                assert!((st.at(tau) - exact).norm() < 1e-8, "t={t}");
            }
        }
    }

    #[test]
    fn event_location_is_exact() {
        // x' = 1, y' = 0 from x=0: event x - 0.3.
        let f = |_p: Vec2| Vec2::new(1.0, 0.0);
        let mut s = Stepper::new(&f, 0.0, Vec2::ZERO, OdeOptions::default());
        loop {
            let st = s.step().unwrap();
            let g = |p: Vec2| p.x - 0.3;
            let (g0, g1) = (g(st.y0), g(st.y1));
            if g0 < 0.0 && g1 >= 0.0 {
                let (tau, p) = locate_event(&f, &st, g, 0.0, st.h, g0, g1, 1e-12).unwrap();
                assert!((st.t0 + tau - 0.3).abs() < 1e-13);
                assert!(p.x - 0.3 < 1e-13);
                break;
            }
        }
    }
}
