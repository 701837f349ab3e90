//! Bounds on a sensitivity function that need only three observable numbers:
//! the parameter's current value x0, the posterior p0 at that value, and the
//! asymptote position s. The function itself is never computed.
//!
//! Among hyperbolas f(x) = r / (x - s) + t with fixed s, the admissible ones
//! map [0, 1] into [0, 1]; in the (t, r) plane they form a lozenge cut out by
//! four lines, here named by the window corner constraint that produces them:
//!
//! ```text
//! A: r = s (t - 1)        f(0) = 1
//! B: r = t (s - 1)        f(1) = 0
//! C: r = s t              f(0) = 0
//! D: r = (t - 1)(s - 1)   f(1) = 1
//! ```
//!
//! Passing through the anchor (x0, p0) pins r to the line
//! E: r = (x0 - s)(p0 - t), and intersecting E with the lozenge yields a
//! closed t interval and everything that follows from it.

use crate::error::{Error, Result};
use crate::inference::s_in_unit_band;
use crate::sensfun::HyperbolaForm;

/// The anchor a screening bound is built around: the parameter's current
/// value and the posterior there. Both must be interior to (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughPoint {
    pub x0: f64,
    pub p0: f64,
}

impl ThroughPoint {
    pub fn new(x0: f64, p0: f64) -> Result<Self> {
        let interior = |v: f64| v.is_finite() && v > 0.0 && v < 1.0;
        if !interior(x0) || !interior(p0) {
            return Err(Error::BoundaryAnchor { x0, p0 });
        }
        Ok(ThroughPoint { x0, p0 })
    }
}

/// A closed interval with lo <= hi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn sorted(a: f64, b: f64) -> Self {
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

/// One of the four admissibility lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceId {
    A,
    B,
    C,
    D,
}

impl std::fmt::Display for SurfaceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SurfaceId::A => "A",
            SurfaceId::B => "B",
            SurfaceId::C => "C",
            SurfaceId::D => "D",
        };
        write!(f, "{s}")
    }
}

/// Residue of the admissibility line `id` at (s, t).
pub fn surface_r(id: SurfaceId, s: f64, t: f64) -> f64 {
    match id {
        SurfaceId::A => s * (t - 1.0),
        SurfaceId::B => t * (s - 1.0),
        SurfaceId::C => s * t,
        SurfaceId::D => (t - 1.0) * (s - 1.0),
    }
}

/// Residue that makes the hyperbola with offset t pass through the anchor.
pub fn surface_e(tp: ThroughPoint, s: f64, t: f64) -> f64 {
    (tp.x0 - s) * (tp.p0 - t)
}

/// Whether (s, t, r) is an admissible hyperbola, i.e. maps the unit window
/// into itself. Asymptotes inside the window are never admissible.
pub fn in_subspace(s: f64, t: f64, r: f64, tol: f64) -> bool {
    if s_in_unit_band(s) {
        return false;
    }
    let a = surface_r(SurfaceId::A, s, t);
    let b = surface_r(SurfaceId::B, s, t);
    let c = surface_r(SurfaceId::C, s, t);
    let d = surface_r(SurfaceId::D, s, t);
    let (lower, upper) = if s < 0.0 {
        (b.max(c), a.min(d))
    } else {
        (a.max(d), b.min(c))
    };
    r >= lower - tol && r <= upper + tol
}

fn check_s(s: f64) -> Result<()> {
    if !s.is_finite() || s_in_unit_band(s) {
        return Err(Error::AsymptoteInWindow(s));
    }
    Ok(())
}

/// Offsets where the anchor line E crosses each admissibility line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionLines {
    pub t_a: f64,
    pub t_b: f64,
    pub t_c: f64,
    pub t_d: f64,
}

pub fn intersection_lines(tp: ThroughPoint, s: f64) -> Result<IntersectionLines> {
    check_s(s)?;
    let ThroughPoint { x0, p0 } = tp;
    Ok(IntersectionLines {
        t_a: p0 + s * (1.0 - p0) / x0,
        t_b: p0 * (x0 - s) / (x0 - 1.0),
        t_c: p0 * (1.0 - s / x0),
        t_d: (p0 * (x0 - s) + s - 1.0) / (x0 - 1.0),
    })
}

/// The two anchor posteriors where adjacent crossings coincide: at
/// p0 = p_ab the crossings with A and B merge (both at t = s), and at
/// p0 = p_cd those with C and D merge (at t = 1 - s). They switch which
/// line is active in `t_range`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub p_ab: f64,
    pub p_cd: f64,
}

pub fn thresholds(x0: f64, s: f64) -> Result<Thresholds> {
    check_s(s)?;
    Ok(Thresholds {
        p_ab: s * (x0 - 1.0) / (x0 - s),
        p_cd: (1.0 - s) * x0 / (x0 - s),
    })
}

/// Feasible offset interval, tagged with the lines attaining each end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TBounds {
    pub range: Interval,
    pub lo_surface: SurfaceId,
    pub hi_surface: SurfaceId,
}

/// Offsets t of admissible hyperbolas with asymptote s through the anchor.
pub fn t_range(tp: ThroughPoint, s: f64) -> Result<TBounds> {
    let lines = intersection_lines(tp, s)?;
    let th = thresholds(tp.x0, s)?;
    let ab = if tp.p0 >= th.p_ab {
        (lines.t_a, SurfaceId::A)
    } else {
        (lines.t_b, SurfaceId::B)
    };
    let cd = if tp.p0 <= th.p_cd {
        (lines.t_c, SurfaceId::C)
    } else {
        (lines.t_d, SurfaceId::D)
    };
    // For s < 0 the AB side is the floor and the CD side the ceiling; for
    // s > 1 the roles flip.
    let ((t_lo, lo_surface), (t_hi, hi_surface)) = if s < 0.0 { (ab, cd) } else { (cd, ab) };
    debug_assert!(t_lo <= t_hi + 1e-9, "empty offset range: {t_lo} > {t_hi}");
    Ok(TBounds {
        range: Interval::sorted(t_lo, t_hi),
        lo_surface,
        hi_surface,
    })
}

/// Residues of admissible hyperbolas through the anchor: the image of
/// `t_range` under the anchor line E.
pub fn r_range(tp: ThroughPoint, s: f64) -> Result<Interval> {
    let tb = t_range(tp, s)?;
    Ok(Interval::sorted(
        surface_e(tp, s, tb.range.lo),
        surface_e(tp, s, tb.range.hi),
    ))
}

/// Range of the true derivative f'(x0), plus its absolute ceiling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivBounds {
    pub range: Interval,
    pub sv_bound: f64,
}

/// Bounds on f'(x0) over all admissible hyperbolas through the anchor.
///
/// On the anchor line, f'(x0) = (t - p0) / (x0 - s), so the derivative range
/// is the offset range rescaled.
pub fn deriv_bounds(tp: ThroughPoint, s: f64) -> Result<DerivBounds> {
    let tb = t_range(tp, s)?;
    let d_at = |t: f64| (t - tp.p0) / (tp.x0 - s);
    let range = Interval::sorted(d_at(tb.range.lo), d_at(tb.range.hi));
    Ok(DerivBounds {
        range,
        sv_bound: range.lo.abs().max(range.hi.abs()),
    })
}

/// Evidence-free ceiling on the sensitivity value at the anchor.
pub fn general_sv_bound(tp: ThroughPoint) -> f64 {
    tp.p0 * (1.0 - tp.p0) / (tp.x0 * (1.0 - tp.x0))
}

/// Which side of the unit window the asymptote lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SSign {
    Negative,
    Positive,
}

/// Anchor-only test that already guarantees a sensitivity value of at most
/// one. Sufficient, not necessary.
pub fn simple_rule_le_one(tp: ThroughPoint, sign: SSign) -> bool {
    let ThroughPoint { x0, p0 } = tp;
    match sign {
        SSign::Negative => x0 >= p0 || x0 + p0 >= 1.0,
        SSign::Positive => x0 <= p0 || x0 + p0 <= 1.0,
    }
}

/// One grid sample of the two extreme hyperbolas through the anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSample {
    pub x: f64,
    pub f_t_lo: f64,
    pub f_t_hi: f64,
}

/// The two extreme admissible hyperbolas through the anchor, sampled on a
/// grid. For each x the pair brackets every admissible value there; the
/// curves cross at the anchor, so which one is on top switches sides.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingCurves {
    pub t_bounds: TBounds,
    pub lo_form: HyperbolaForm,
    pub hi_form: HyperbolaForm,
    pub samples: Vec<EnvelopeSample>,
}

pub fn bounding_curves(tp: ThroughPoint, s: f64, grid: &[f64]) -> Result<BoundingCurves> {
    let tb = t_range(tp, s)?;
    let form_at = |t: f64| HyperbolaForm {
        s,
        t,
        r: surface_e(tp, s, t),
    };
    let lo_form = form_at(tb.range.lo);
    let hi_form = form_at(tb.range.hi);
    let samples = grid
        .iter()
        .map(|&x| EnvelopeSample {
            x,
            f_t_lo: lo_form.eval(x),
            f_t_hi: hi_form.eval(x),
        })
        .collect();
    Ok(BoundingCurves {
        t_bounds: tb,
        lo_form,
        hi_form,
        samples,
    })
}

/// `sv_bound` and the evidence-free ceiling tabulated over an interior grid
/// of anchors, for a fixed asymptote.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    pub s: f64,
    /// Anchor coordinates i / (resolution + 1), i = 1..=resolution.
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    /// sv_bound[ix][ip] belongs to the anchor (xs[ix], ps[ip]).
    pub sv_bound: Vec<Vec<f64>>,
    pub general: Vec<Vec<f64>>,
}

pub fn bound_surface_grid(resolution: usize, s: f64) -> Result<SurfaceGrid> {
    check_s(s)?;
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!(
            "surface grid resolution must be at least 2, got {resolution}"
        )));
    }
    let coords: Vec<f64> = (1..=resolution)
        .map(|i| i as f64 / (resolution + 1) as f64)
        .collect();
    let mut sv = Vec::with_capacity(resolution);
    let mut general = Vec::with_capacity(resolution);
    for &x0 in &coords {
        let mut sv_row = Vec::with_capacity(resolution);
        let mut g_row = Vec::with_capacity(resolution);
        for &p0 in &coords {
            let tp = ThroughPoint::new(x0, p0)?;
            sv_row.push(deriv_bounds(tp, s)?.sv_bound);
            g_row.push(general_sv_bound(tp));
        }
        sv.push(sv_row);
        general.push(g_row);
    }
    Ok(SurfaceGrid {
        s,
        xs: coords.clone(),
        ps: coords,
        sv_bound: sv,
        general,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(x0: f64, p0: f64) -> ThroughPoint {
        ThroughPoint::new(x0, p0).unwrap()
    }

    #[test]
    fn anchor_must_be_interior() {
        assert!(ThroughPoint::new(0.0, 0.5).is_err());
        assert!(ThroughPoint::new(0.5, 1.0).is_err());
        assert!(ThroughPoint::new(0.5, f64::NAN).is_err());
        assert!(ThroughPoint::new(0.5, 0.5).is_ok());
    }

    #[test]
    fn surfaces_and_membership() {
        assert!((surface_r(SurfaceId::A, -2.0, 0.5) - 1.0).abs() < 1e-15);
        assert!((surface_r(SurfaceId::B, -2.0, 0.5) + 1.5).abs() < 1e-15);
        assert!((surface_r(SurfaceId::C, -2.0, 0.5) + 1.0).abs() < 1e-15);
        assert!((surface_r(SurfaceId::D, -2.0, 0.5) - 1.5).abs() < 1e-15);

        // With s = -2, t = 0.5 the admissible residues are [-1, 1].
        assert!(in_subspace(-2.0, 0.5, 0.5, 0.0));
        assert!(in_subspace(-2.0, 0.5, 0.0, 0.0));
        assert!(in_subspace(-2.0, 0.5, -1.0, 1e-12));
        assert!(!in_subspace(-2.0, 0.5, 2.0, 0.0));
        assert!(!in_subspace(0.5, 0.5, 0.1, 0.0));

        assert!((surface_e(tp(0.1, 0.6), -2.0, -1.4) - 4.2).abs() < 1e-12);
    }

    #[test]
    fn crossing_offsets_and_their_mergers() {
        let lines = intersection_lines(tp(0.1, 0.6), -2.0).unwrap();
        assert!((lines.t_a + 7.4).abs() < 1e-12);
        assert!((lines.t_b + 1.4).abs() < 1e-12);
        assert!((lines.t_c - 12.6).abs() < 1e-12);
        assert!((lines.t_d - 29.0 / 15.0).abs() < 1e-12);

        let th = thresholds(0.1, -2.0).unwrap();
        assert!((th.p_ab - 6.0 / 7.0).abs() < 1e-12);
        assert!((th.p_cd - 1.0 / 7.0).abs() < 1e-12);

        // At p0 = p_ab the A and B crossings merge at t = s.
        let merged = intersection_lines(tp(0.1, th.p_ab), -2.0).unwrap();
        assert!((merged.t_a + 2.0).abs() < 1e-9);
        assert!((merged.t_b + 2.0).abs() < 1e-9);
        // At p0 = p_cd the C and D crossings merge at t = 1 - s.
        let merged = intersection_lines(tp(0.1, th.p_cd), -2.0).unwrap();
        assert!((merged.t_c - 3.0).abs() < 1e-9);
        assert!((merged.t_d - 3.0).abs() < 1e-9);

        let th = thresholds(0.4, -2.0 / 7.0).unwrap();
        assert!((th.p_ab - 0.25).abs() < 1e-12);
        assert!((th.p_cd - 0.75).abs() < 1e-12);
        let th = thresholds(0.9, -0.3).unwrap();
        assert!((th.p_ab - 0.025).abs() < 1e-12);
        assert!((th.p_cd - 0.975).abs() < 1e-12);
    }

    #[test]
    fn offset_range_picks_the_active_lines() {
        let tb = t_range(tp(0.1, 0.6), -2.0).unwrap();
        assert!((tb.range.lo + 1.4).abs() < 1e-12);
        assert!((tb.range.hi - 29.0 / 15.0).abs() < 1e-12);
        assert_eq!(tb.lo_surface, SurfaceId::B);
        assert_eq!(tb.hi_surface, SurfaceId::D);

        let tb = t_range(tp(0.4, 0.75), -2.0 / 7.0).unwrap();
        assert!((tb.range.lo - 4.0 / 7.0).abs() < 1e-12);
        assert!((tb.range.hi - 9.0 / 7.0).abs() < 1e-12);
        assert_eq!(tb.lo_surface, SurfaceId::A);
        // This anchor sits exactly on p_cd, where the C and D crossings
        // merge; the label is rounding-dependent, the value is not.
        assert!(matches!(tb.hi_surface, SurfaceId::C | SurfaceId::D));

        // Positive asymptote: the A/B side becomes the ceiling.
        let tb = t_range(tp(0.1, 0.6), 4.0).unwrap();
        assert!((tb.range.hi - 2.6).abs() < 1e-12);
        assert!((tb.range.lo + 11.0 / 15.0).abs() < 1e-12);
        assert_eq!(tb.hi_surface, SurfaceId::B);
        assert_eq!(tb.lo_surface, SurfaceId::D);

        assert!(t_range(tp(0.4, 0.75), 0.5).is_err());
    }

    #[test]
    fn residue_range_is_the_image_of_the_offset_range() {
        let r = r_range(tp(0.1, 0.6), -2.0).unwrap();
        assert!((r.lo + 2.8).abs() < 1e-12);
        assert!((r.hi - 4.2).abs() < 1e-12);

        let r = r_range(tp(0.4, 0.75), -2.0 / 7.0).unwrap();
        assert!((r.lo + 18.0 / 49.0).abs() < 1e-12);
        assert!((r.hi - 6.0 / 49.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_bounds_and_their_ceiling() {
        let d = deriv_bounds(tp(0.1, 0.6), -2.0).unwrap();
        assert!((d.range.lo + 20.0 / 21.0).abs() < 1e-12);
        assert!((d.range.hi - 0.634920634920635).abs() < 1e-12);
        assert!((d.sv_bound - 20.0 / 21.0).abs() < 1e-12);

        let d = deriv_bounds(tp(0.4, 0.75), -2.0 / 7.0).unwrap();
        assert!((d.range.lo + 0.2604166666666667).abs() < 1e-12);
        assert!((d.range.hi - 0.78125).abs() < 1e-12);
        assert!((d.sv_bound - 0.78125).abs() < 1e-12);

        let d = deriv_bounds(tp(0.1, 0.6), 4.0).unwrap();
        assert!((d.range.lo + 0.5128205128205128).abs() < 1e-12);
        assert!((d.range.hi - 0.3418803418803419).abs() < 1e-12);
        assert!((d.sv_bound - 0.5128205128205128).abs() < 1e-12);
    }

    #[test]
    fn ceilings_nest() {
        assert!((general_sv_bound(tp(0.1, 0.6)) - 8.0 / 3.0).abs() < 1e-12);
        assert!((general_sv_bound(tp(0.4, 0.75)) - 0.78125).abs() < 1e-12);
        assert!((general_sv_bound(tp(0.5, 0.5)) - 1.0).abs() < 1e-12);

        for &(x0, p0, s) in &[
            (0.1, 0.6, -2.0),
            (0.4, 0.75, -2.0 / 7.0),
            (0.9, 0.3, 1.05),
            (0.2, 0.8, 4.0),
        ] {
            let a = tp(x0, p0);
            assert!(
                deriv_bounds(a, s).unwrap().sv_bound <= general_sv_bound(a) + 1e-12,
                "ceiling order violated at ({x0}, {p0}, {s})"
            );
        }
    }

    #[test]
    fn anchor_only_rules() {
        assert!(simple_rule_le_one(tp(0.4, 0.75), SSign::Negative));
        assert!(!simple_rule_le_one(tp(0.1, 0.6), SSign::Negative));
        assert!(simple_rule_le_one(tp(0.1, 0.6), SSign::Positive));

        // The rule is a guarantee: whenever it fires, the bound agrees.
        for &(x0, p0, s) in &[
            (0.4, 0.75, -2.0 / 7.0),
            (0.1, 0.6, 4.0),
            (0.9, 0.1, -0.5),
            (0.3, 0.3, 2.0),
        ] {
            let a = tp(x0, p0);
            let sign = if s < 0.0 { SSign::Negative } else { SSign::Positive };
            if simple_rule_le_one(a, sign) {
                assert!(
                    deriv_bounds(a, s).unwrap().sv_bound <= 1.0 + 1e-12,
                    "rule fired but bound exceeds one at ({x0}, {p0}, {s})"
                );
            }
        }
    }

    #[test]
    fn envelope_passes_through_anchor_and_window_corners() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let curves = bounding_curves(tp(0.4, 0.75), -2.0 / 7.0, &grid).unwrap();
        let at_anchor = curves.samples.iter().find(|s| s.x == 0.4).unwrap();
        assert!((at_anchor.f_t_lo - 0.75).abs() < 1e-12);
        assert!((at_anchor.f_t_hi - 0.75).abs() < 1e-12);

        // Active lines here are A (floor) and C (ceiling): the extreme
        // curves touch f(0) = 1 and f(0) = 0.
        let at_zero = curves.samples.iter().find(|s| s.x == 0.0).unwrap();
        assert!((at_zero.f_t_lo - 1.0).abs() < 1e-12);
        assert!(at_zero.f_t_hi.abs() < 1e-12);

        // Every sample of both curves stays inside the unit band.
        for s in &curves.samples {
            for v in [s.f_t_lo, s.f_t_hi] {
                assert!((-1e-12..=1.0 + 1e-12).contains(&v), "escaped at {}", s.x);
            }
        }
    }

    #[test]
    fn surface_grid_cells() {
        let g = bound_surface_grid(9, -2.0).unwrap();
        assert_eq!(g.xs.len(), 9);
        let ix = g.xs.iter().position(|&x| (x - 0.1).abs() < 1e-12).unwrap();
        let ip = g.ps.iter().position(|&p| (p - 0.6).abs() < 1e-12).unwrap();
        assert!((g.sv_bound[ix][ip] - 20.0 / 21.0).abs() < 1e-12);
        let mid = g.xs.iter().position(|&x| (x - 0.5).abs() < 1e-12).unwrap();
        assert!((g.general[mid][mid] - 1.0).abs() < 1e-12);

        // Near asymptotes squeeze the adjacent side of the anchor plane.
        let g = bound_surface_grid(9, -0.1).unwrap();
        let lo = g.xs.iter().position(|&x| (x - 0.1).abs() < 1e-12).unwrap();
        let hi = g.xs.iter().position(|&x| (x - 0.9).abs() < 1e-12).unwrap();
        for ip in 0..g.ps.len() {
            assert!(g.sv_bound[lo][ip] >= g.sv_bound[hi][ip] - 1e-12);
        }

        assert!(bound_surface_grid(1, -2.0).is_err());
        assert!(bound_surface_grid(9, 0.5).is_err());
    }
}
