//! Network-wide screening: one row per CPT entry, carrying everything the
//! bounds can say about that parameter's influence on the queried posterior
//! without ever computing a sensitivity function, plus an oracle mode that
//! does compute them all and checks every bound against the truth.

use std::fmt;

use serde::Serialize;

use crate::bounds::{
    deriv_bounds, general_sv_bound, r_range, simple_rule_le_one, surface_r, t_range,
    BoundingCurves, Interval, SSign, SurfaceGrid, SurfaceId, TBounds, ThroughPoint,
};
use crate::error::{Error, Result};
use crate::inference::{
    linear_coeffs, posterior, s_in_unit_band, sensitivity_constants, CoeffRole, SensConstants,
    LINEAR_EPS,
};
use crate::model::{NetworkDef, ParameterRef, Query};
use crate::sensfun::{classify, FunctionKind, HyperbolaForm, Vertex};
use crate::vertexloc::{vertex_regions, VertexRegion, VertexWindow, VERTEX_R_EPS};

/// Tolerance used by the oracle when checking the bounds against the truth.
pub const VERIFY_TOL: f64 = 1e-9;

/// How a screened parameter relates to the hyperbolic analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// Asymptote on the given side; the actual quadrant depends on the
    /// residue sign, which screening never learns.
    Hyperbolic(SSign),
    Linear,
    Constant,
    /// Anchor or asymptote on the window boundary; bounds do not apply.
    Boundary,
    /// The entry holds its whole row; proportional co-variation degenerates.
    DegenerateCovariation,
}

impl fmt::Display for RowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RowKind::Hyperbolic(SSign::Negative) => "hyperbolic(I/IV)",
            RowKind::Hyperbolic(SSign::Positive) => "hyperbolic(II/III)",
            RowKind::Linear => "linear",
            RowKind::Constant => "constant",
            RowKind::Boundary => "boundary",
            RowKind::DegenerateCovariation => "degenerate-covariation",
        };
        write!(f, "{s}")
    }
}

/// Everything screening knows about one parameter.
#[derive(Debug, Clone)]
pub struct ScreenRow {
    pub parameter: String,
    pub pref: ParameterRef,
    pub x0: f64,
    pub p0: f64,
    pub kind: RowKind,
    pub s: Option<f64>,
    pub t_bounds: Option<TBounds>,
    pub r_range: Option<Interval>,
    pub d_range: Option<Interval>,
    pub sv_bound: Option<f64>,
    pub sv_bound_general: Option<f64>,
    pub rule_le_one: Option<bool>,
    pub vertex_possible: Option<bool>,
    pub x_v: Option<Interval>,
    pub y_v: Option<Interval>,
    pub regions: Vec<VertexRegion>,
    pub vertex_window: Option<VertexWindow>,
    pub flags: Vec<String>,
}

/// Where to look for vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VertexQuery {
    /// One fixed window for every parameter.
    Window(VertexWindow),
    /// A window of this radius around each parameter's current value.
    Vicinity(f64),
}

impl VertexQuery {
    pub fn resolve(&self, x0: f64) -> Result<VertexWindow> {
        match *self {
            VertexQuery::Window(w) => Ok(w),
            VertexQuery::Vicinity(radius) => VertexWindow::vicinity(x0, radius),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenOptions {
    pub vertex_query: VertexQuery,
}

impl Default for ScreenOptions {
    fn default() -> Self {
        ScreenOptions {
            vertex_query: VertexQuery::Window(VertexWindow::UNIT),
        }
    }
}

fn empty_row(parameter: String, pref: ParameterRef, x0: f64, p0: f64, kind: RowKind) -> ScreenRow {
    ScreenRow {
        parameter,
        pref,
        x0,
        p0,
        kind,
        s: None,
        t_bounds: None,
        r_range: None,
        d_range: None,
        sv_bound: None,
        sv_bound_general: None,
        rule_le_one: None,
        vertex_possible: None,
        x_v: None,
        y_v: None,
        regions: Vec::new(),
        vertex_window: None,
        flags: Vec::new(),
    }
}

fn hull(intervals: impl Iterator<Item = Interval>) -> Option<Interval> {
    intervals.fold(None, |acc, iv| match acc {
        None => Some(iv),
        Some(h) => Some(Interval {
            lo: h.lo.min(iv.lo),
            hi: h.hi.max(iv.hi),
        }),
    })
}

/// Screens every parameter of the network against the query.
///
/// Hyperbolic rows are produced from (x0, p0, s) alone; the posterior's
/// numerator is consulted only for linear rows, where the exact slope is
/// cheap and the bounds would be vacuous.
pub fn screen(net: &NetworkDef, q: &Query, opts: &ScreenOptions) -> Result<Vec<ScreenRow>> {
    let p0 = posterior(net, q)?;
    let mut rows = Vec::new();
    for pref in net.enumerate_parameters() {
        let parameter = net.parameter_string(&pref);
        let x0 = net.entry(&pref);

        if x0 == 1.0 {
            let mut row = empty_row(parameter, pref, x0, p0, RowKind::DegenerateCovariation);
            row.flags.push("degenerate-covariation".into());
            rows.push(row);
            continue;
        }

        let den = linear_coeffs(net, &pref, &q.evidence, CoeffRole::EvidenceDenominator)?;
        let anchor = ThroughPoint::new(x0, p0).ok();

        if den.slope.abs() < LINEAR_EPS * den.intercept.abs() {
            let joint = q.evidence.with(q.target)?;
            let num = linear_coeffs(net, &pref, &joint, CoeffRole::JointNumerator)?;
            let c = SensConstants {
                c1: num.slope,
                c2: num.intercept,
                c3: den.slope,
                c4: den.intercept,
            };
            let mut row = match classify(&c)? {
                FunctionKind::Linear { slope, .. } => {
                    let mut row =
                        empty_row(parameter, pref, x0, p0, RowKind::Linear);
                    row.d_range = Some(Interval::sorted(slope, slope));
                    row.sv_bound = Some(slope.abs());
                    row
                }
                FunctionKind::Constant(_) => {
                    let mut row =
                        empty_row(parameter, pref, x0, p0, RowKind::Constant);
                    row.d_range = Some(Interval::sorted(0.0, 0.0));
                    row.sv_bound = Some(0.0);
                    row
                }
                FunctionKind::Hyperbolic { .. } => unreachable!("denominator was flat"),
            };
            row.sv_bound_general = anchor.map(general_sv_bound);
            rows.push(row);
            continue;
        }

        let s = -den.intercept / den.slope;
        if s_in_unit_band(s) {
            let mut row = empty_row(parameter, pref, x0, p0, RowKind::Boundary);
            row.s = Some(s);
            row.sv_bound_general = anchor.map(general_sv_bound);
            row.flags.push("s-in-unit-window".into());
            rows.push(row);
            continue;
        }
        let tp = match anchor {
            Some(tp) => tp,
            None => {
                let mut row = empty_row(parameter, pref, x0, p0, RowKind::Boundary);
                row.s = Some(s);
                if x0 == 0.0 {
                    row.flags.push("x0-boundary".into());
                }
                if p0 <= 0.0 || p0 >= 1.0 {
                    row.flags.push("p0-boundary".into());
                }
                rows.push(row);
                continue;
            }
        };

        let sign = if s < 0.0 { SSign::Negative } else { SSign::Positive };
        let tb = t_range(tp, s)?;
        let d = deriv_bounds(tp, s)?;
        let window = opts.vertex_query.resolve(x0)?;
        let regions = vertex_regions(tp, s, window)?;
        let mut row = empty_row(parameter, pref, x0, p0, RowKind::Hyperbolic(sign));
        row.s = Some(s);
        row.t_bounds = Some(tb);
        row.r_range = Some(r_range(tp, s)?);
        row.d_range = Some(d.range);
        row.sv_bound = Some(d.sv_bound);
        row.sv_bound_general = Some(general_sv_bound(tp));
        row.rule_le_one = Some(simple_rule_le_one(tp, sign));
        row.vertex_possible = Some(!regions.is_empty());
        row.x_v = hull(regions.iter().map(|r| r.x_v));
        row.y_v = hull(regions.iter().map(|r| r.y_v));
        row.regions = regions;
        row.vertex_window = Some(window);
        rows.push(row);
    }
    sort_rows(&mut rows);
    Ok(rows)
}

/// Descending sv_bound, rows without one last, parameter name as tiebreak.
pub fn sort_rows(rows: &mut [ScreenRow]) {
    rows.sort_by(|a, b| match (a.sv_bound, b.sv_bound) {
        (Some(x), Some(y)) => y
            .total_cmp(&x)
            .then_with(|| a.parameter.cmp(&b.parameter)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.parameter.cmp(&b.parameter),
    });
}

/// Keeps the rows that could matter: sv_bound at or above the threshold, a
/// vertex rescue, or no bound at all (nothing was proven about them). The
/// rescue uses the verdict computed at screen time unless a window is given,
/// in which case it is re-evaluated against that window.
pub fn filter_rank(
    mut rows: Vec<ScreenRow>,
    sv_threshold: f64,
    vertex_window: Option<VertexWindow>,
) -> Vec<ScreenRow> {
    let rescued = |r: &ScreenRow| match vertex_window {
        None => r.vertex_possible == Some(true),
        Some(w) => {
            matches!(r.kind, RowKind::Hyperbolic(_))
                && ThroughPoint::new(r.x0, r.p0)
                    .and_then(|tp| crate::vertexloc::vertex_t_set(tp, r.s.unwrap(), w))
                    .map(|set| !set.is_empty())
                    .unwrap_or(false)
        }
    };
    rows.retain(|r| r.sv_bound.map_or(true, |sv| sv >= sv_threshold) || rescued(r));
    sort_rows(&mut rows);
    rows
}

/// The oracle's view of one parameter: the actual sensitivity function.
#[derive(Debug, Clone, Copy)]
pub struct TrueFunction {
    pub form: HyperbolaForm,
    pub d_at_x0: f64,
    pub vertex: Vertex,
}

/// Outcome of checking one bound against the truth.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub pass: bool,
    /// How far outside the bound the truth fell; zero when it holds.
    pub violation: f64,
}

fn check(name: &'static str, excess: f64, tol: f64) -> BoundCheck {
    let violation = excess.max(0.0);
    BoundCheck {
        name,
        pass: violation <= tol,
        violation,
    }
}

/// Checks every bound a screening row states against the true function.
/// Rows without hyperbolic bounds yield no checks.
pub fn check_row(row: &ScreenRow, truth: &TrueFunction, tol: f64) -> Vec<BoundCheck> {
    let mut out = Vec::new();
    let HyperbolaForm { s, t, r } = truth.form;
    if let Some(tb) = &row.t_bounds {
        let excess = (tb.range.lo - t).max(t - tb.range.hi);
        out.push(check("t-range", excess, tol));
    }
    if let Some(rr) = &row.r_range {
        let excess = (rr.lo - r).max(r - rr.hi);
        out.push(check("r-range", excess, tol));
    }
    if let Some(dr) = &row.d_range {
        if matches!(row.kind, RowKind::Hyperbolic(_)) {
            let excess = (dr.lo - truth.d_at_x0).max(truth.d_at_x0 - dr.hi);
            out.push(check("d-range", excess, tol));
        }
    }
    if let Some(sv) = row.sv_bound {
        if matches!(row.kind, RowKind::Hyperbolic(_)) {
            out.push(check("sv-bound", truth.d_at_x0.abs() - sv, tol));
        }
    }
    if let Some(general) = row.sv_bound_general {
        out.push(check("general-bound", truth.d_at_x0.abs() - general, tol));
    }
    if row.rule_le_one == Some(true) {
        out.push(check("unit-rule", truth.d_at_x0.abs() - 1.0, tol));
    }
    if matches!(row.kind, RowKind::Hyperbolic(_)) {
        let (lower, upper) = if s < 0.0 {
            (
                surface_r(SurfaceId::B, s, t).max(surface_r(SurfaceId::C, s, t)),
                surface_r(SurfaceId::A, s, t).min(surface_r(SurfaceId::D, s, t)),
            )
        } else {
            (
                surface_r(SurfaceId::A, s, t).max(surface_r(SurfaceId::D, s, t)),
                surface_r(SurfaceId::B, s, t).min(surface_r(SurfaceId::C, s, t)),
            )
        };
        out.push(check("subspace", (lower - r).max(r - upper), tol));
    }
    if let (Some(window), Some(possible)) = (row.vertex_window, row.vertex_possible) {
        // Vertices in the flat band or within tolerance of the window edge
        // are ambiguous by construction; everything else must be consistent.
        let ambiguous = r.abs() < 2.0 * VERTEX_R_EPS
            || (truth.vertex.x_v - window.alpha).abs() <= tol
            || (truth.vertex.x_v - window.beta).abs() <= tol;
        if !ambiguous {
            let inside = window.contains(truth.vertex.x_v, 0.0);
            let pass = if inside {
                possible
                    && row.regions.iter().any(|reg| {
                        reg.quadrant == truth.form.quadrant()
                            && reg.holds(t, r, truth.vertex.x_v, truth.vertex.y_v, tol)
                    })
            } else {
                true
            };
            out.push(BoundCheck {
                name: "vertex-region",
                pass,
                violation: if pass { 0.0 } else { 1.0 },
            });
        }
    }
    out
}

/// One verified parameter.
#[derive(Debug, Clone)]
pub struct VerifyRow {
    pub parameter: String,
    pub row_kind: String,
    pub true_kind: String,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub r: Option<f64>,
    pub sv_bound: Option<f64>,
    pub sv_true: Option<f64>,
    /// Slack between the sv ceiling and the truth; zero means attained.
    pub sv_gap: Option<f64>,
    pub t_gap: Option<f64>,
    pub r_gap: Option<f64>,
    pub d_gap: Option<f64>,
    pub checks: Vec<BoundCheck>,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct VerifySummary {
    pub parameters: usize,
    pub rows_checked: usize,
    pub checks_run: usize,
    pub checks_failed: usize,
    pub max_violation: f64,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
    pub summary: VerifySummary,
}

fn fill_hyperbolic(vrow: &mut VerifyRow, row: &ScreenRow, form: HyperbolaForm) {
    let truth = TrueFunction {
        form,
        d_at_x0: form.derivative_at(row.x0),
        vertex: form.vertex(),
    };
    vrow.t = Some(form.t);
    vrow.r = Some(form.r);
    vrow.sv_true = Some(truth.d_at_x0.abs());
    if let Some(sv) = row.sv_bound {
        vrow.sv_gap = Some(sv - truth.d_at_x0.abs());
    }
    if let Some(tb) = &row.t_bounds {
        vrow.t_gap = Some((form.t - tb.range.lo).min(tb.range.hi - form.t));
    }
    if let Some(rr) = &row.r_range {
        vrow.r_gap = Some((form.r - rr.lo).min(rr.hi - form.r));
    }
    if let Some(dr) = &row.d_range {
        vrow.d_gap = Some((truth.d_at_x0 - dr.lo).min(dr.hi - truth.d_at_x0));
    }
    vrow.checks = check_row(row, &truth, VERIFY_TOL);
}

/// Computes the full sensitivity function of every parameter and checks each
/// screening bound against it.
pub fn verify(net: &NetworkDef, q: &Query) -> Result<VerifyReport> {
    let rows = screen(net, q, &ScreenOptions::default())?;
    let mut out = Vec::with_capacity(rows.len());
    let mut summary = VerifySummary {
        parameters: rows.len(),
        ..Default::default()
    };
    for row in rows {
        let mut vrow = VerifyRow {
            parameter: row.parameter.clone(),
            row_kind: row.kind.to_string(),
            true_kind: String::new(),
            s: row.s,
            t: None,
            r: None,
            sv_bound: row.sv_bound,
            sv_true: None,
            sv_gap: None,
            t_gap: None,
            r_gap: None,
            d_gap: None,
            checks: Vec::new(),
        };
        if row.kind == RowKind::DegenerateCovariation {
            vrow.true_kind = "degenerate-covariation".into();
            out.push(vrow);
            continue;
        }
        let c = sensitivity_constants(net, &row.pref, q)?;
        match classify(&c) {
            Ok(FunctionKind::Hyperbolic { form, quadrant }) => {
                vrow.true_kind = format!("hyperbolic({quadrant})");
                fill_hyperbolic(&mut vrow, &row, form);
            }
            Ok(FunctionKind::Linear { slope, .. }) => {
                vrow.true_kind = "linear".into();
                vrow.sv_true = Some(slope.abs());
                if let Some(sv) = row.sv_bound {
                    vrow.sv_gap = Some(sv - slope.abs());
                    vrow.checks.push(check(
                        "exact-sv",
                        (sv - slope.abs()).abs(),
                        VERIFY_TOL,
                    ));
                }
            }
            Ok(FunctionKind::Constant(_)) => {
                vrow.true_kind = "constant".into();
                if matches!(row.kind, RowKind::Hyperbolic(_)) {
                    // The parameter is d-separated from the target: the
                    // denominator varies but the quotient does not, so the
                    // function is the residue-zero member of the screened
                    // family and every ceiling still applies.
                    let form = HyperbolaForm {
                        s: -c.c4 / c.c3,
                        t: c.c1 / c.c3,
                        r: (c.c2 * c.c3 - c.c1 * c.c4) / (c.c3 * c.c3),
                    };
                    fill_hyperbolic(&mut vrow, &row, form);
                } else {
                    vrow.sv_true = Some(0.0);
                    if let Some(sv) = row.sv_bound {
                        vrow.sv_gap = Some(sv);
                        vrow.checks.push(check("exact-sv", sv.abs(), VERIFY_TOL));
                    }
                }
            }
            Err(Error::AsymptoteInWindow(s)) => {
                vrow.true_kind = format!("asymptote-in-window({s})");
            }
            Err(e) => return Err(e),
        }
        if !vrow.checks.is_empty() {
            summary.rows_checked += 1;
        }
        summary.checks_run += vrow.checks.len();
        for c in &vrow.checks {
            if !c.pass {
                summary.checks_failed += 1;
            }
            summary.max_violation = summary.max_violation.max(c.violation);
        }
        out.push(vrow);
    }
    Ok(VerifyReport {
        rows: out,
        summary,
    })
}

/// Output formats of the emit functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table" => Ok(OutputFormat::Table),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

pub const CSV_HEADER: &str = "parameter,x0,p0,kind,s,t_lo,t_hi,r_lo,r_hi,d_lo,d_hi,sv_bound,sv_bound_general,rule_le_one,vertex_possible,xv_lo,xv_hi,yv_lo,yv_hi,flags";

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_bool(v: Option<bool>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn row_fields(row: &ScreenRow) -> Vec<String> {
    let t = row.t_bounds.as_ref().map(|tb| tb.range);
    vec![
        csv_field(&row.parameter),
        row.x0.to_string(),
        row.p0.to_string(),
        row.kind.to_string(),
        opt_num(row.s),
        opt_num(t.map(|iv| iv.lo)),
        opt_num(t.map(|iv| iv.hi)),
        opt_num(row.r_range.map(|iv| iv.lo)),
        opt_num(row.r_range.map(|iv| iv.hi)),
        opt_num(row.d_range.map(|iv| iv.lo)),
        opt_num(row.d_range.map(|iv| iv.hi)),
        opt_num(row.sv_bound),
        opt_num(row.sv_bound_general),
        opt_bool(row.rule_le_one),
        opt_bool(row.vertex_possible),
        opt_num(row.x_v.map(|iv| iv.lo)),
        opt_num(row.x_v.map(|iv| iv.hi)),
        opt_num(row.y_v.map(|iv| iv.lo)),
        opt_num(row.y_v.map(|iv| iv.hi)),
        csv_field(&row.flags.join(";")),
    ]
}

#[derive(Serialize)]
struct RowJson<'a> {
    parameter: &'a str,
    x0: f64,
    p0: f64,
    kind: String,
    s: Option<f64>,
    t_lo: Option<f64>,
    t_hi: Option<f64>,
    r_lo: Option<f64>,
    r_hi: Option<f64>,
    d_lo: Option<f64>,
    d_hi: Option<f64>,
    sv_bound: Option<f64>,
    sv_bound_general: Option<f64>,
    rule_le_one: Option<bool>,
    vertex_possible: Option<bool>,
    xv_lo: Option<f64>,
    xv_hi: Option<f64>,
    yv_lo: Option<f64>,
    yv_hi: Option<f64>,
    flags: &'a [String],
}

impl<'a> From<&'a ScreenRow> for RowJson<'a> {
    fn from(row: &'a ScreenRow) -> Self {
        let t = row.t_bounds.as_ref().map(|tb| tb.range);
        RowJson {
            parameter: &row.parameter,
            x0: row.x0,
            p0: row.p0,
            kind: row.kind.to_string(),
            s: row.s,
            t_lo: t.map(|iv| iv.lo),
            t_hi: t.map(|iv| iv.hi),
            r_lo: row.r_range.map(|iv| iv.lo),
            r_hi: row.r_range.map(|iv| iv.hi),
            d_lo: row.d_range.map(|iv| iv.lo),
            d_hi: row.d_range.map(|iv| iv.hi),
            sv_bound: row.sv_bound,
            sv_bound_general: row.sv_bound_general,
            rule_le_one: row.rule_le_one,
            vertex_possible: row.vertex_possible,
            xv_lo: row.x_v.map(|iv| iv.lo),
            xv_hi: row.x_v.map(|iv| iv.hi),
            yv_lo: row.y_v.map(|iv| iv.lo),
            yv_hi: row.y_v.map(|iv| iv.hi),
            flags: &row.flags,
        }
    }
}

fn table(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<String>| -> String {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = String::new();
    out.push_str(&line(header.iter().map(|h| h.to_string()).collect()));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

fn short(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

/// Renders screening rows in the requested format. Output is a pure function
/// of the rows, so identical screens emit identical bytes.
pub fn emit(rows: &[ScreenRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for row in rows {
                out.push_str(&row_fields(row).join(","));
                out.push('\n');
            }
            out
        }
        OutputFormat::Json => {
            let rows: Vec<RowJson> = rows.iter().map(RowJson::from).collect();
            let mut s = serde_json::to_string_pretty(&rows).expect("plain data serializes");
            s.push('\n');
            s
        }
        OutputFormat::Table => {
            let header: Vec<&str> = CSV_HEADER.split(',').collect();
            let body = rows
                .iter()
                .map(|row| {
                    let t = row.t_bounds.as_ref().map(|tb| tb.range);
                    vec![
                        row.parameter.clone(),
                        format!("{:.4}", row.x0),
                        format!("{:.4}", row.p0),
                        row.kind.to_string(),
                        short(row.s),
                        short(t.map(|iv| iv.lo)),
                        short(t.map(|iv| iv.hi)),
                        short(row.r_range.map(|iv| iv.lo)),
                        short(row.r_range.map(|iv| iv.hi)),
                        short(row.d_range.map(|iv| iv.lo)),
                        short(row.d_range.map(|iv| iv.hi)),
                        short(row.sv_bound),
                        short(row.sv_bound_general),
                        row.rule_le_one
                            .map(|b| b.to_string())
                            .unwrap_or_else(|| "-".into()),
                        row.vertex_possible
                            .map(|b| b.to_string())
                            .unwrap_or_else(|| "-".into()),
                        short(row.x_v.map(|iv| iv.lo)),
                        short(row.x_v.map(|iv| iv.hi)),
                        short(row.y_v.map(|iv| iv.lo)),
                        short(row.y_v.map(|iv| iv.hi)),
                        if row.flags.is_empty() {
                            "-".into()
                        } else {
                            row.flags.join(";")
                        },
                    ]
                })
                .collect();
            table(&header, body)
        }
    }
}

pub const VERIFY_CSV_HEADER: &str =
    "parameter,kind,true_kind,s,t,r,sv_bound,sv_true,sv_gap,t_gap,r_gap,d_gap,checks,failed";

#[derive(Serialize)]
struct VerifyRowJson<'a> {
    parameter: &'a str,
    kind: &'a str,
    true_kind: &'a str,
    s: Option<f64>,
    t: Option<f64>,
    r: Option<f64>,
    sv_bound: Option<f64>,
    sv_true: Option<f64>,
    sv_gap: Option<f64>,
    t_gap: Option<f64>,
    r_gap: Option<f64>,
    d_gap: Option<f64>,
    checks: &'a [BoundCheck],
}

#[derive(Serialize)]
struct VerifyJson<'a> {
    rows: Vec<VerifyRowJson<'a>>,
    summary: VerifySummary,
}

fn verify_fields(row: &VerifyRow) -> Vec<String> {
    let failed: Vec<&str> = row
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name)
        .collect();
    vec![
        csv_field(&row.parameter),
        row.row_kind.clone(),
        row.true_kind.clone(),
        opt_num(row.s),
        opt_num(row.t),
        opt_num(row.r),
        opt_num(row.sv_bound),
        opt_num(row.sv_true),
        opt_num(row.sv_gap),
        opt_num(row.t_gap),
        opt_num(row.r_gap),
        opt_num(row.d_gap),
        row.checks.len().to_string(),
        csv_field(&failed.join(";")),
    ]
}

/// Renders a verification report.
pub fn emit_verify(report: &VerifyReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from(VERIFY_CSV_HEADER);
            out.push('\n');
            for row in &report.rows {
                out.push_str(&verify_fields(row).join(","));
                out.push('\n');
            }
            out
        }
        OutputFormat::Json => {
            let doc = VerifyJson {
                rows: report
                    .rows
                    .iter()
                    .map(|r| VerifyRowJson {
                        parameter: &r.parameter,
                        kind: &r.row_kind,
                        true_kind: &r.true_kind,
                        s: r.s,
                        t: r.t,
                        r: r.r,
                        sv_bound: r.sv_bound,
                        sv_true: r.sv_true,
                        sv_gap: r.sv_gap,
                        t_gap: r.t_gap,
                        r_gap: r.r_gap,
                        d_gap: r.d_gap,
                        checks: &r.checks,
                    })
                    .collect(),
                summary: report.summary,
            };
            let mut s = serde_json::to_string_pretty(&doc).expect("plain data serializes");
            s.push('\n');
            s
        }
        OutputFormat::Table => {
            let header: Vec<&str> = VERIFY_CSV_HEADER.split(',').collect();
            let body = report
                .rows
                .iter()
                .map(|row| {
                    let failed: Vec<&str> = row
                        .checks
                        .iter()
                        .filter(|c| !c.pass)
                        .map(|c| c.name)
                        .collect();
                    vec![
                        row.parameter.clone(),
                        row.row_kind.clone(),
                        row.true_kind.clone(),
                        short(row.s),
                        short(row.t),
                        short(row.r),
                        short(row.sv_bound),
                        short(row.sv_true),
                        short(row.sv_gap),
                        short(row.t_gap),
                        short(row.r_gap),
                        short(row.d_gap),
                        row.checks.len().to_string(),
                        if failed.is_empty() {
                            "-".into()
                        } else {
                            failed.join(";")
                        },
                    ]
                })
                .collect();
            table(&header, body)
        }
    }
}

/// CSV of the two extreme curves: one line per grid point.
pub fn envelope_csv(curves: &BoundingCurves) -> String {
    let mut out = String::from("x,f_t_lo,f_t_hi\n");
    for s in &curves.samples {
        out.push_str(&format!("{},{},{}\n", s.x, s.f_t_lo, s.f_t_hi));
    }
    out
}

/// CSV of the bound surfaces: one line per anchor cell, x-major.
pub fn surface_csv(grid: &SurfaceGrid) -> String {
    let mut out = String::from("x0,p0,sv_bound,sv_bound_general\n");
    for (ix, &x0) in grid.xs.iter().enumerate() {
        for (ip, &p0) in grid.ps.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                x0, p0, grid.sv_bound[ix][ip], grid.general[ix][ip]
            ));
        }
    }
    out
}
