//! Small fixed-size linear algebra for planar fields.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the planar cross product, i.e. `det[self | o]`.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl From<(f64, f64)> for Vec2 {
    fn from((x, y): (f64, f64)) -> Self {
        Vec2::new(x, y)
    }
}

/// Row-major 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn from_cols(c0: Vec2, c1: Vec2) -> Self {
        Mat2::new(c0.x, c1.x, c0.y, c1.y)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    pub fn solve(&self, rhs: Vec2) -> Option<Vec2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Vec2::new(
            (self.d * rhs.x - self.b * rhs.y) / det,
            (self.a * rhs.y - self.c * rhs.x) / det,
        ))
    }

    /// Real eigenpairs, eigenvalues in ascending order. `None` for complex spectra.
    pub fn real_eigen(&self) -> Option<[(f64, Vec2); 2]> {
        let tr = self.trace();
        let det = self.det();
        let disc = tr * tr / 4.0 - det;
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        // Avoid cancellation in the smaller-magnitude root.
        let big = if tr >= 0.0 { tr / 2.0 + s } else { tr / 2.0 - s };
        let small = if big != 0.0 { det / big } else { 0.0 };
        let (lo, hi) = if big < small { (big, small) } else { (small, big) };
        Some([(lo, self.eigvec(lo)), (hi, self.eigvec(hi))])
    }

    fn eigvec(&self, lambda: f64) -> Vec2 {
        // Rows of (A - λI) are orthogonal to the eigenvector; pick the better conditioned row.
        let r0 = Vec2::new(self.a - lambda, self.b);
        let r1 = Vec2::new(self.c, self.d - lambda);
        let r = if r0.norm() >= r1.norm() { r0 } else { r1 };
        if r.norm() == 0.0 {
            return Vec2::new(1.0, 0.0);
        }
        let v = Vec2::new(-r.y, r.x).normalized();
        // Fix a sign so results are deterministic.
        if v.x < 0.0 || (v.x == 0.0 && v.y < 0.0) {
            -v
        } else {
            v
        }
    }
}

/// Axis-aligned rectangle used as an integration window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Rect {
    pub const fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        Rect {
            xmin,
            xmax,
            ymin,
            ymax,
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    /// Signed margin: positive inside, zero on the boundary.
    pub fn margin(&self, p: Vec2) -> f64 {
        (p.x - self.xmin)
            .min(self.xmax - p.x)
            .min(p.y - self.ymin)
            .min(self.ymax - p.y)
    }
}

impl Default for Rect {
    fn default() -> Self {
        Rect::new(-1e3, 1e3, -1e3, 1e3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_symmetric_saddle() {
        let m = Mat2::new(0.0, 1.0, 1.0, 0.0);
        let [(l0, v0), (l1, v1)] = m.real_eigen().unwrap();
        assert!((l0 + 1.0).abs() < 1e-15 && (l1 - 1.0).abs() < 1e-15);
        let r0 = m.apply(v0) - v0 * l0;
        let r1 = m.apply(v1) - v1 * l1;
        assert!(r0.norm() < 1e-14 && r1.norm() < 1e-14);
    }

    #[test]
    fn complex_spectrum_is_none() {
        assert!(Mat2::new(0.0, -1.0, 1.0, 0.0).real_eigen().is_none());
    }

    #[test]
    fn solve_roundtrip() {
        let m = Mat2::new(2.0, 1.0, -1.0, 3.0);
        let x = m.solve(Vec2::new(1.0, 2.0)).unwrap();
        assert!((m.apply(x) - Vec2::new(1.0, 2.0)).norm() < 1e-15);
    }
}
