//! Where a vertex can sit. A vertex inside the window of interest means the
//! tangent slope reaches one there, so the parameter can be maximally
//! influential even when its current sensitivity value looks small.
//!
//! Everything is parametrized by g = sqrt(|r|), the distance from the
//! asymptote to the vertex: x_v = s + g on the branch right of s and
//! x_v = s - g left of it, so a window of x_v positions is a g interval, and
//! through r = (x0 - s)(p0 - t) a g interval is a t interval on each side of
//! the anchor offset p0.

use crate::bounds::{t_range, Interval, ThroughPoint};
use crate::error::{Error, Result};
use crate::inference::s_in_unit_band;
use crate::sensfun::Quadrant;

/// Residues smaller than this cannot carry a vertex: the hyperbola is flat
/// there and the t intervals are trimmed away around the anchor offset.
pub const VERTEX_R_EPS: f64 = 1e-12;

/// A closed window of candidate vertex x positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexWindow {
    pub alpha: f64,
    pub beta: f64,
}

impl VertexWindow {
    pub const UNIT: VertexWindow = VertexWindow {
        alpha: 0.0,
        beta: 1.0,
    };

    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() || alpha > beta {
            return Err(Error::InvalidArgument(format!(
                "vertex window [{alpha}, {beta}] is not a valid interval"
            )));
        }
        Ok(VertexWindow { alpha, beta })
    }

    /// The window of the given radius around x0, clamped to the unit window.
    pub fn vicinity(x0: f64, radius: f64) -> Result<Self> {
        if !radius.is_finite() || radius < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "vicinity radius must be non-negative, got {radius}"
            )));
        }
        VertexWindow::new((x0 - radius).max(0.0), (x0 + radius).min(1.0))
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.alpha - tol && x <= self.beta + tol
    }
}

/// Candidate offset intervals by residue sign: hyperbolas with r > 0 sit on
/// one side of the anchor offset, those with r < 0 on the other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexTIntervals {
    pub pos_r: Option<Interval>,
    pub neg_r: Option<Interval>,
}

fn check_s(s: f64) -> Result<()> {
    if !s.is_finite() || s_in_unit_band(s) {
        return Err(Error::AsymptoteInWindow(s));
    }
    Ok(())
}

/// g range of vertices landing in the window, on the branch side of s.
/// None when the window lies entirely on the far side of the asymptote.
fn g_range(s: f64, w: VertexWindow) -> Option<Interval> {
    let (lo, hi) = if s < 0.0 {
        (w.alpha - s, w.beta - s)
    } else {
        (s - w.beta, s - w.alpha)
    };
    if hi < 0.0 {
        return None;
    }
    Some(Interval {
        lo: lo.max(0.0),
        hi,
    })
}

/// Offsets t whose hyperbola (through the anchor, asymptote s) has its
/// vertex inside the window, split by residue sign. Ignores admissibility;
/// intersect with `t_range` for the feasible set.
pub fn t_intervals_for_vertex(
    tp: ThroughPoint,
    s: f64,
    w: VertexWindow,
) -> Result<VertexTIntervals> {
    check_s(s)?;
    let g = match g_range(s, w) {
        Some(g) => g,
        None => {
            return Ok(VertexTIntervals {
                pos_r: None,
                neg_r: None,
            })
        }
    };
    let span = tp.x0 - s;
    // r = (x0 - s)(p0 - t) and |r| = g^2 give t = p0 -+ g^2 / (x0 - s).
    let pos = Interval::sorted(tp.p0 - g.lo * g.lo / span, tp.p0 - g.hi * g.hi / span);
    let neg = Interval::sorted(tp.p0 + g.lo * g.lo / span, tp.p0 + g.hi * g.hi / span);
    Ok(VertexTIntervals {
        pos_r: Some(pos),
        neg_r: Some(neg),
    })
}

/// A sorted union of disjoint closed intervals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn from_unmerged(mut intervals: Vec<Interval>) -> Self {
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => merged.push(iv),
            }
        }
        IntervalSet { intervals: merged }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x, tol))
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(Interval::width).sum()
    }
}

/// Removes the flat band |t - p0| < VERTEX_R_EPS / |x0 - s| from an interval
/// known to sit on one side of p0 (straddling is split defensively).
fn trim_flat_band(iv: Interval, p0: f64, half_width: f64) -> Vec<Interval> {
    let lo_cap = p0 - half_width;
    let hi_cap = p0 + half_width;
    let mut out = Vec::new();
    if iv.lo < lo_cap {
        out.push(Interval {
            lo: iv.lo,
            hi: iv.hi.min(lo_cap),
        });
    }
    if iv.hi > hi_cap {
        out.push(Interval {
            lo: iv.lo.max(hi_cap),
            hi: iv.hi,
        });
    }
    out
}

/// Offsets of admissible hyperbolas through the anchor whose vertex falls in
/// the window: the candidate intervals cut down to `t_range`, minus the flat
/// band around p0 where the residue is too small to matter.
pub fn vertex_t_set(tp: ThroughPoint, s: f64, w: VertexWindow) -> Result<IntervalSet> {
    let candidates = t_intervals_for_vertex(tp, s, w)?;
    let feasible = t_range(tp, s)?.range;
    let half_width = VERTEX_R_EPS / (tp.x0 - s).abs();
    let mut kept = Vec::new();
    for candidate in [candidates.pos_r, candidates.neg_r].into_iter().flatten() {
        if let Some(iv) = candidate.intersect(&feasible) {
            kept.extend(trim_flat_band(iv, tp.p0, half_width));
        }
    }
    Ok(IntervalSet::from_unmerged(kept))
}

/// Joint ranges of one connected family of vertex-in-window hyperbolas.
///
/// Within a region every function shares the residue sign, hence the
/// quadrant; t, r and x_v move monotonically together while y_v may turn
/// around once inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexRegion {
    pub t: Interval,
    pub r: Interval,
    pub x_v: Interval,
    pub y_v: Interval,
    pub quadrant: Quadrant,
}

impl VertexRegion {
    /// Rough position of the region's vertices relative to the anchor.
    pub fn compass(&self, tp: ThroughPoint) -> String {
        let ns = if self.y_v.lo >= tp.p0 {
            "north"
        } else if self.y_v.hi <= tp.p0 {
            "south"
        } else {
            ""
        };
        let ew = if self.x_v.hi <= tp.x0 {
            "west"
        } else if self.x_v.lo >= tp.x0 {
            "east"
        } else {
            ""
        };
        match (ns.is_empty(), ew.is_empty()) {
            (true, true) => "astride".to_string(),
            _ => format!("{ns}{ew}"),
        }
    }

    /// True when the given vertex data is consistent with this region.
    pub fn holds(&self, t: f64, r: f64, x_v: f64, y_v: f64, tol: f64) -> bool {
        self.t.contains(t, tol)
            && self.r.contains(r, tol)
            && self.x_v.contains(x_v, tol)
            && self.y_v.contains(y_v, tol)
    }
}

pub fn vertex_regions(tp: ThroughPoint, s: f64, w: VertexWindow) -> Result<Vec<VertexRegion>> {
    let set = vertex_t_set(tp, s, w)?;
    let span = tp.x0 - s;
    let mut regions = Vec::with_capacity(set.intervals().len());
    for &iv in set.intervals() {
        let r_at = |t: f64| span * (tp.p0 - t);
        let r = Interval::sorted(r_at(iv.lo), r_at(iv.hi));
        let mid_r = r_at(0.5 * (iv.lo + iv.hi));
        let quadrant = match (s < 0.0, mid_r > 0.0) {
            (true, true) => Quadrant::I,
            (true, false) => Quadrant::IV,
            (false, true) => Quadrant::III,
            (false, false) => Quadrant::II,
        };
        let g_at = |t: f64| (span.abs() * (t - tp.p0).abs()).sqrt();
        let g = Interval::sorted(g_at(iv.lo), g_at(iv.hi));
        let x_v = if s < 0.0 {
            Interval { lo: s + g.lo, hi: s + g.hi }
        } else {
            Interval { lo: s - g.hi, hi: s - g.lo }
        };
        // y_v(g) = p0 + tau g^2 / (x0 - s) + q g is a parabola in g; its
        // turning point g* = |x0 - s| / 2 must be included when interior.
        let tau = if mid_r > 0.0 { -1.0 } else { 1.0 };
        let q = match quadrant {
            Quadrant::I | Quadrant::II => 1.0,
            Quadrant::III | Quadrant::IV => -1.0,
        };
        let y_at = |gv: f64| tp.p0 + tau * gv * gv / span + q * gv;
        let mut y_lo = y_at(g.lo).min(y_at(g.hi));
        let mut y_hi = y_at(g.lo).max(y_at(g.hi));
        let g_star = span.abs() / 2.0;
        if g.lo < g_star && g_star < g.hi {
            let y_star = y_at(g_star);
            y_lo = y_lo.min(y_star);
            y_hi = y_hi.max(y_star);
        }
        regions.push(VertexRegion {
            t: iv,
            r,
            x_v,
            y_v: Interval { lo: y_lo, hi: y_hi },
            quadrant,
        });
    }
    Ok(regions)
}

/// Screening verdict: either no admissible function through the anchor has
/// its vertex in the window, or the regions where one can.
#[derive(Debug, Clone, PartialEq)]
pub enum VertexVerdict {
    Impossible,
    Possible(Vec<VertexRegion>),
}

pub fn vertex_possible(tp: ThroughPoint, s: f64, w: VertexWindow) -> Result<VertexVerdict> {
    let regions = vertex_regions(tp, s, w)?;
    if regions.is_empty() {
        Ok(VertexVerdict::Impossible)
    } else {
        Ok(VertexVerdict::Possible(regions))
    }
}
