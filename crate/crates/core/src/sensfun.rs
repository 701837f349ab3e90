//! Sensitivity functions in hyperbola normal form.
//!
//! A posterior under proportional co-variation of one parameter is a quotient
//! of affine functions, f(x) = (c1 x + c2) / (c3 x + c4). Whenever the
//! denominator really moves, that is a rectangular hyperbola
//!
//! ```text
//! f(x) = r / (x - s) + t,   s = -c4/c3,  t = c1/c3,  r = (c2 c3 - c1 c4) / c3^2
//! ```
//!
//! and everything downstream works with the branch over the unit window.

use std::fmt;

use crate::error::{Error, Result};
use crate::inference::{s_in_unit_band, SensConstants, LINEAR_EPS};

/// Below this the residue r (or a slope) counts as zero and the function as
/// constant.
pub const DEGENERATE_EPS: f64 = 1e-12;

/// Hyperbola branch orientation relative to the unit window, named by the
/// quadrant of the center-origin coordinates (x - s, f - t) the branch over
/// [0, 1] lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrant {
    I,
    II,
    III,
    IV,
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Quadrant::I => "I",
            Quadrant::II => "II",
            Quadrant::III => "III",
            Quadrant::IV => "IV",
        };
        write!(f, "{s}")
    }
}

/// f(x) = r / (x - s) + t with the asymptote s outside the unit window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolaForm {
    pub s: f64,
    pub t: f64,
    pub r: f64,
}

/// The point of the branch where the tangent has slope +-1; the sensitivity
/// value |f'| exceeds one exactly on the window side of x_v nearer to s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub x_v: f64,
    pub y_v: f64,
}

impl HyperbolaForm {
    pub fn quadrant(&self) -> Quadrant {
        debug_assert!(self.s < 0.0 || self.s > 1.0);
        match (self.s < 0.0, self.r > 0.0) {
            (true, true) => Quadrant::I,
            (true, false) => Quadrant::IV,
            (false, true) => Quadrant::III,
            (false, false) => Quadrant::II,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.t + self.r / (x - self.s)
    }

    pub fn derivative_at(&self, x: f64) -> f64 {
        let d = x - self.s;
        -self.r / (d * d)
    }

    /// The vertex of the branch over the unit window. Quadrants I and III
    /// put it at distance sqrt(r) from the center toward the window; II and
    /// IV mirror the y offset.
    pub fn vertex(&self) -> Vertex {
        let root = self.r.abs().sqrt();
        let (dx, dy) = match self.quadrant() {
            Quadrant::I => (root, root),
            Quadrant::II => (-root, root),
            Quadrant::III => (-root, -root),
            Quadrant::IV => (root, -root),
        };
        Vertex {
            x_v: self.s + dx,
            y_v: self.t + dy,
        }
    }
}

/// Shape of a sensitivity function over the unit window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionKind {
    Hyperbolic {
        form: HyperbolaForm,
        quadrant: Quadrant,
    },
    Linear {
        slope: f64,
        intercept: f64,
    },
    Constant(f64),
}

/// Reduces quotient constants to the function's shape.
///
/// Errors when the denominator vanishes identically, or when a genuine
/// hyperbola has its asymptote inside (or within tolerance of) the unit
/// window, where the branch bounds do not apply.
pub fn classify(c: &SensConstants) -> Result<FunctionKind> {
    if c.c3.abs().max(c.c4.abs()) < DEGENERATE_EPS {
        return Err(Error::DegenerateDenominator);
    }
    if c.c3.abs() < LINEAR_EPS * c.c4.abs() {
        let slope = c.c1 / c.c4;
        let intercept = c.c2 / c.c4;
        if slope.abs() < DEGENERATE_EPS {
            return Ok(FunctionKind::Constant(intercept));
        }
        return Ok(FunctionKind::Linear { slope, intercept });
    }
    let s = -c.c4 / c.c3;
    let t = c.c1 / c.c3;
    let r = (c.c2 * c.c3 - c.c1 * c.c4) / (c.c3 * c.c3);
    if r.abs() < DEGENERATE_EPS {
        return Ok(FunctionKind::Constant(t));
    }
    if s_in_unit_band(s) {
        return Err(Error::AsymptoteInWindow(s));
    }
    let form = HyperbolaForm { s, t, r };
    Ok(FunctionKind::Hyperbolic {
        form,
        quadrant: form.quadrant(),
    })
}

pub fn evaluate(kind: &FunctionKind, x: f64) -> f64 {
    match kind {
        FunctionKind::Hyperbolic { form, .. } => form.eval(x),
        FunctionKind::Linear { slope, intercept } => slope * x + intercept,
        FunctionKind::Constant(v) => *v,
    }
}

pub fn derivative(kind: &FunctionKind, x: f64) -> f64 {
    match kind {
        FunctionKind::Hyperbolic { form, .. } => form.derivative_at(x),
        FunctionKind::Linear { slope, .. } => *slope,
        FunctionKind::Constant(_) => 0.0,
    }
}

/// |f'(x)|, the sensitivity value at `x`.
pub fn sensitivity_value(kind: &FunctionKind, x: f64) -> f64 {
    derivative(kind, x).abs()
}
