//! Macro-action sets: flat parameter vectors Φ decoded into finite sets of
//! open-loop primitive-action sequences, plus the handcrafted baselines.
//!
//! A primitive action is a small real vector whose meaning belongs to the
//! task: `[dx, dy]` unit directions for the 2-D navigation curves,
//! `[speed, steer]` command pairs for turn-and-go.

use serde::Serialize;
use thiserror::Error;

/// Ordered list of primitive actions of fixed length L.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MacroAction {
    pub actions: Vec<Vec<f64>>,
}

impl MacroAction {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Flat real vector Φ parameterizing a whole macro-action set.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroSetParams {
    pub values: Vec<f64>,
    pub macros_per_set: usize,
    pub params_per_macro: usize,
}

impl MacroSetParams {
    pub fn new(values: Vec<f64>, macros_per_set: usize, params_per_macro: usize) -> Result<Self, MacroError> {
        if values.len() != macros_per_set * params_per_macro {
            return Err(MacroError::ShapeMismatch {
                got: values.len(),
                expected: macros_per_set * params_per_macro,
            });
        }
        Ok(Self { values, macros_per_set, params_per_macro })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Curve family used to turn per-macro parameters into action sequences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveKind {
    /// Cubic Bezier traced by arc length; primitive step of fixed length.
    Bezier { step_length: f64 },
    /// Constant-speed drive, steering fixed over the first half.
    TurnAndGo { max_speed: f64, max_steer: f64 },
}

/// How raw generator outputs map into valid curve parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterizationSpec {
    pub kind: CurveKind,
    pub macro_len: usize,
    pub macros_per_set: usize,
    /// Per-parameter (min, max); raw values are squashed through tanh and
    /// mapped affinely into these ranges.
    pub bounds: Vec<(f64, f64)>,
}

impl ParameterizationSpec {
    /// Bezier spec: control points bounded within [-W, W]² where
    /// W = 1.5 × (L · step_length), so curves can reach anywhere a straight
    /// macro could, with slack for loops.
    pub fn bezier(macros_per_set: usize, macro_len: usize, step_length: f64) -> Self {
        let w = 1.5 * macro_len as f64 * step_length;
        Self {
            kind: CurveKind::Bezier { step_length },
            macro_len,
            macros_per_set,
            bounds: vec![(-w, w); 6],
        }
    }

    pub fn turn_and_go(macros_per_set: usize, macro_len: usize, max_speed: f64, max_steer: f64) -> Self {
        Self {
            kind: CurveKind::TurnAndGo { max_speed, max_steer },
            macro_len,
            macros_per_set,
            bounds: vec![(0.0, max_speed), (-max_steer, max_steer)],
        }
    }

    pub fn params_per_macro(&self) -> usize {
        self.bounds.len()
    }

    /// Total Φ dimension n·k.
    pub fn phi_dim(&self) -> usize {
        self.macros_per_set * self.params_per_macro()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MacroError {
    #[error("parameter vector length {got} does not match layout ({expected} expected)")]
    ShapeMismatch { got: usize, expected: usize },
    #[error("unknown task `{0}`")]
    UnknownTask(String),
}

// ---------------------------------------------------------------------------
// Cubic Bezier discretization
// ---------------------------------------------------------------------------

const ARC_SEGMENTS: usize = 1024;
const DEGENERATE_ARC: f64 = 1e-9;

/// 5-point Gauss-Legendre nodes/weights on [-1, 1].
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

#[derive(Debug, Clone, Copy)]
struct Cubic {
    p1: [f64; 2],
    p2: [f64; 2],
    p3: [f64; 2],
}

impl Cubic {
    /// B(t) with P0 anchored at the origin.
    fn point(&self, t: f64) -> [f64; 2] {
        let u = 1.0 - t;
        let b1 = 3.0 * u * u * t;
        let b2 = 3.0 * u * t * t;
        let b3 = t * t * t;
        [
            b1 * self.p1[0] + b2 * self.p2[0] + b3 * self.p3[0],
            b1 * self.p1[1] + b2 * self.p2[1] + b3 * self.p3[1],
        ]
    }

    fn velocity(&self, t: f64) -> [f64; 2] {
        let u = 1.0 - t;
        // B'(t) = 3u²(P1-P0) + 6ut(P2-P1) + 3t²(P3-P2), P0 = 0.
        let c0 = 3.0 * u * u;
        let c1 = 6.0 * u * t;
        let c2 = 3.0 * t * t;
        [
            c0 * self.p1[0] + c1 * (self.p2[0] - self.p1[0]) + c2 * (self.p3[0] - self.p2[0]),
            c0 * self.p1[1] + c1 * (self.p2[1] - self.p1[1]) + c2 * (self.p3[1] - self.p2[1]),
        ]
    }

    fn speed(&self, t: f64) -> f64 {
        let v = self.velocity(t);
        v[0].hypot(v[1])
    }

    fn segment_length(&self, a: f64, b: f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        GL_NODES
            .iter()
            .zip(GL_WEIGHTS)
            .map(|(&x, w)| w * self.speed(mid + half * x))
            .sum::<f64>()
            * half
    }
}

struct ArcTable {
    cum: Vec<f64>,
}

impl ArcTable {
    fn build(curve: &Cubic) -> Self {
        let mut cum = Vec::with_capacity(ARC_SEGMENTS + 1);
        cum.push(0.0);
        let h = 1.0 / ARC_SEGMENTS as f64;
        for i in 0..ARC_SEGMENTS {
            let a = i as f64 * h;
            let len = curve.segment_length(a, a + h);
            cum.push(cum[i] + len);
        }
        Self { cum }
    }

    fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn arc_to(&self, curve: &Cubic, t: f64) -> f64 {
        let h = 1.0 / ARC_SEGMENTS as f64;
        let j = ((t / h) as usize).min(ARC_SEGMENTS - 1);
        self.cum[j] + curve.segment_length(j as f64 * h, t)
    }

    /// Parameter t such that the arc length from 0 equals `s`; table lookup
    /// followed by Newton refinement against the quadrature integrand.
    fn invert(&self, curve: &Cubic, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= self.total() {
            return 1.0;
        }
        let j = self.cum.partition_point(|&c| c <= s).saturating_sub(1);
        let h = 1.0 / ARC_SEGMENTS as f64;
        let seg = (self.cum[j + 1] - self.cum[j]).max(1e-300);
        let mut t = (j as f64 + (s - self.cum[j]) / seg) * h;
        for _ in 0..3 {
            let speed = curve.speed(t);
            if speed < 1e-12 {
                break;
            }
            t -= (self.arc_to(curve, t) - s) / speed;
            t = t.clamp(0.0, 1.0);
        }
        t
    }
}

/// Points on the arc-length-rescaled curve at arc positions 0, step, 2·step,
/// ..., L·step. The curve is rescaled about the origin so that its total arc
/// length equals L·step_length. Returns `None` for degenerate (near-zero
/// length) curves.
pub fn bezier_equal_arc_points(
    control_points: [[f64; 2]; 3],
    macro_len: usize,
    step_length: f64,
) -> Option<Vec<[f64; 2]>> {
    assert!(macro_len >= 1 && step_length > 0.0);
    let raw = Cubic { p1: control_points[0], p2: control_points[1], p3: control_points[2] };
    let table = ArcTable::build(&raw);
    let total = table.total();
    if total < DEGENERATE_ARC {
        return None;
    }
    let scale = macro_len as f64 * step_length / total;
    let mut points = Vec::with_capacity(macro_len + 1);
    for i in 0..=macro_len {
        // Arc position i·step on the rescaled curve is i·step/scale on the raw one.
        let t = table.invert(&raw, i as f64 * step_length / scale);
        let p = raw.point(t);
        points.push([p[0] * scale, p[1] * scale]);
    }
    Some(points)
}

/// Discretize a cubic Bezier (P0 at the origin, relative control points
/// P1..P3) into L unit-direction primitive actions, each displacing the
/// robot by `step_length` along successive equal-arc-length chords.
///
/// Degenerate curves (arc length below 1e-9) yield L zero-displacement
/// actions; the generator can emit near-zero curves during early training
/// and the planner must tolerate them.
pub fn bezier_to_macro(
    control_points: [[f64; 2]; 3],
    macro_len: usize,
    step_length: f64,
) -> MacroAction {
    let points = match bezier_equal_arc_points(control_points, macro_len, step_length) {
        Some(p) => p,
        None => {
            return MacroAction { actions: vec![vec![0.0, 0.0]; macro_len] };
        }
    };
    let mut actions = Vec::with_capacity(macro_len);
    for w in points.windows(2) {
        let dx = w[1][0] - w[0][0];
        let dy = w[1][1] - w[0][1];
        let norm = dx.hypot(dy);
        if norm < 1e-12 {
            actions.push(vec![0.0, 0.0]);
        } else {
            actions.push(vec![dx / norm, dy / norm]);
        }
    }
    MacroAction { actions }
}

/// L (speed, steer) command pairs: the first ⌈L/2⌉ steps steer, the rest
/// drive straight at the same command speed.
pub fn turn_and_go_to_macro(speed: f64, steer: f64, macro_len: usize) -> MacroAction {
    assert!(macro_len >= 1);
    let turning = macro_len.div_ceil(2);
    let actions = (0..macro_len)
        .map(|i| if i < turning { vec![speed, steer] } else { vec![speed, 0.0] })
        .collect();
    MacroAction { actions }
}

/// Map one raw parameter into its bound interval through a saturating squash.
#[inline]
fn squash_to_bounds(raw: f64, lo: f64, hi: f64) -> f64 {
    lo + (raw.tanh() + 1.0) * 0.5 * (hi - lo)
}

/// Per-macro bounded parameter blocks decoded from Φ.
pub fn decode_params(phi: &MacroSetParams, spec: &ParameterizationSpec) -> Result<Vec<Vec<f64>>, MacroError> {
    let k = spec.params_per_macro();
    let expected = spec.macros_per_set * k;
    if phi.values.len() != expected || phi.macros_per_set != spec.macros_per_set || phi.params_per_macro != k {
        return Err(MacroError::ShapeMismatch { got: phi.values.len(), expected });
    }
    Ok(phi
        .values
        .chunks_exact(k)
        .map(|block| {
            block
                .iter()
                .zip(&spec.bounds)
                .map(|(&raw, &(lo, hi))| squash_to_bounds(raw, lo, hi))
                .collect()
        })
        .collect())
}

/// Decode Φ into exactly n macro-actions of length L.
pub fn decode_macro_set(phi: &MacroSetParams, spec: &ParameterizationSpec) -> Result<Vec<MacroAction>, MacroError> {
    let blocks = decode_params(phi, spec)?;
    Ok(blocks
        .iter()
        .map(|p| match spec.kind {
            CurveKind::Bezier { step_length } => bezier_to_macro(
                [[p[0], p[1]], [p[2], p[3]], [p[4], p[5]]],
                spec.macro_len,
                step_length,
            ),
            CurveKind::TurnAndGo { .. } => turn_and_go_to_macro(p[0], p[1], spec.macro_len),
        })
        .collect())
}

/// Fixed baseline macro-action sets.
///
/// * `light-dark`: 8 straight macros of length 6 at headings 2πi/8.
/// * `puck-push`: 8 straight macros of length 2 at headings 2πi/8.
/// * `turn-and-go-demo`: 7 macros covering {max, half-max, zero} speed ×
///   {-max, 0, +max} steer with the zero-speed duplicates collapsed.
pub fn handcrafted_set(task: &str) -> Result<Vec<MacroAction>, MacroError> {
    match task {
        "light-dark" => Ok(straight_macro_fan(8, 6)),
        "puck-push" => Ok(straight_macro_fan(8, 2)),
        "turn-and-go-demo" => {
            let (max_speed, max_steer) = (6.0, 15f64.to_radians());
            let mut out = Vec::with_capacity(7);
            for speed in [max_speed, 0.5 * max_speed] {
                for steer in [-max_steer, 0.0, max_steer] {
                    out.push(turn_and_go_to_macro(speed, steer, 3));
                }
            }
            out.push(turn_and_go_to_macro(0.0, 0.0, 3));
            Ok(out)
        }
        other => Err(MacroError::UnknownTask(other.to_string())),
    }
}

fn straight_macro_fan(count: usize, len: usize) -> Vec<MacroAction> {
    (0..count)
        .map(|i| {
            let heading = std::f64::consts::TAU * i as f64 / count as f64;
            MacroAction { actions: vec![vec![heading.cos(), heading.sin()]; len] }
        })
        .collect()
}

/// Polyline traced by executing a direction macro with the given step length,
/// starting at the origin.
pub fn direction_macro_polyline(macro_action: &MacroAction, step_length: f64) -> Vec<[f64; 2]> {
    let mut points = vec![[0.0, 0.0]];
    let mut cur = [0.0, 0.0];
    for a in &macro_action.actions {
        cur = [cur[0] + step_length * a[0], cur[1] + step_length * a[1]];
        points.push(cur);
    }
    points
}

/// One macro of an exported set: its primitive actions and the polyline it
/// traces, for external plotting.
#[derive(Debug, Clone, Serialize)]
pub struct MacroExportRecord {
    pub actions: Vec<Vec<f64>>,
    pub polyline: Vec<[f64; 2]>,
}

pub fn export_records(macros: &[MacroAction], step_length: f64) -> Vec<MacroExportRecord> {
    macros
        .iter()
        .map(|m| MacroExportRecord {
            actions: m.actions.clone(),
            polyline: if m.actions.iter().all(|a| a.len() == 2) {
                direction_macro_polyline(m, step_length)
            } else {
                Vec::new()
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn collinear_control_points_make_a_straight_macro() {
        let m = bezier_to_macro([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]], 8, 0.05);
        assert_eq!(m.len(), 8);
        for a in &m.actions {
            assert!((a[0] - 1.0).abs() < 1e-9, "heading should be 0 rad, got {a:?}");
            assert!(a[1].abs() < 1e-9);
        }
    }

    #[test]
    fn zero_length_curve_yields_zero_displacement_actions() {
        let m = bezier_to_macro([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]], 8, 0.05);
        assert_eq!(m.actions, vec![vec![0.0, 0.0]; 8]);
    }

    /// Dense-sample oracle: arc-length positions computed from a 10⁵-sample
    /// cumulative table, independent of the table/Newton code under test.
    fn dense_equal_arc_oracle(control: [[f64; 2]; 3], len: usize, step: f64) -> Vec<[f64; 2]> {
        let curve = Cubic { p1: control[0], p2: control[1], p3: control[2] };
        let n = 100_000usize;
        let mut cum = vec![0.0f64];
        let mut prev = curve.point(0.0);
        for i in 1..=n {
            let p = curve.point(i as f64 / n as f64);
            cum.push(cum[i - 1] + (p[0] - prev[0]).hypot(p[1] - prev[1]));
            prev = p;
        }
        let total = cum[n];
        let scale = len as f64 * step / total;
        (0..=len)
            .map(|i| {
                let s = i as f64 * step / scale;
                let j = cum.partition_point(|&c| c <= s).saturating_sub(1).min(n - 1);
                let seg = (cum[j + 1] - cum[j]).max(1e-300);
                let t = (j as f64 + (s - cum[j]) / seg) / n as f64;
                let p = curve.point(t.clamp(0.0, 1.0));
                [p[0] * scale, p[1] * scale]
            })
            .collect()
    }

    #[test]
    fn equal_arc_points_match_dense_oracle() {
        let control = [[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let mine = bezier_equal_arc_points(control, 8, 0.05).unwrap();
        let oracle = dense_equal_arc_oracle(control, 8, 0.05);
        for (a, b) in mine.iter().zip(&oracle) {
            let d = (a[0] - b[0]).hypot(a[1] - b[1]);
            assert!(d < 1e-6, "point {a:?} vs oracle {b:?}, distance {d}");
        }
    }

    /// Distance from a point to the polyline through dense curve samples.
    fn distance_to_dense_curve(p: [f64; 2], control: [[f64; 2]; 3], scale: f64) -> f64 {
        let curve = Cubic { p1: control[0], p2: control[1], p3: control[2] };
        let n = 100_000usize;
        let mut best = f64::INFINITY;
        let mut prev = curve.point(0.0);
        for i in 1..=n {
            let q = curve.point(i as f64 / n as f64);
            let (ax, ay) = (prev[0] * scale, prev[1] * scale);
            let (bx, by) = (q[0] * scale, q[1] * scale);
            let (dx, dy) = (bx - ax, by - ay);
            let len2 = dx * dx + dy * dy;
            let t = if len2 > 0.0 { (((p[0] - ax) * dx + (p[1] - ay) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let (cx, cy) = (ax + t * dx, ay + t * dy);
            best = best.min((p[0] - cx).hypot(p[1] - cy));
            prev = q;
        }
        best
    }

    #[test]
    fn chord_endpoints_lie_on_the_rescaled_curve() {
        let control = [[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let points = bezier_equal_arc_points(control, 8, 0.05).unwrap();
        let curve = Cubic { p1: control[0], p2: control[1], p3: control[2] };
        let table = ArcTable::build(&curve);
        let scale = 8.0 * 0.05 / table.total();
        for p in &points {
            let d = distance_to_dense_curve(*p, control, scale);
            assert!(d < 1e-6, "endpoint {p:?} is {d} from the curve");
        }
    }

    fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        if pts.len() < 3 {
            return pts;
        }
        let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
            (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
        };
        let mut chain = |iter: &mut dyn Iterator<Item = [f64; 2]>| {
            let mut out: Vec<[f64; 2]> = Vec::new();
            for p in iter {
                while out.len() >= 2 && cross(out[out.len() - 2], out[out.len() - 1], p) <= 0.0 {
                    out.pop();
                }
                out.push(p);
            }
            out.pop();
            out
        };
        let lower = chain(&mut pts.iter().copied());
        let upper = chain(&mut pts.iter().rev().copied());
        let mut hull = lower;
        hull.extend(upper);
        if hull.len() < 3 {
            // Collinear input: fall back to the extreme points as a segment.
            return vec![pts[0], pts[pts.len() - 1]];
        }
        hull
    }

    fn point_in_hull(p: [f64; 2], hull: &[[f64; 2]], tol: f64) -> bool {
        if hull.len() < 3 {
            // Degenerate hull: check distance to the segment / point set.
            return hull.iter().any(|h| (p[0] - h[0]).hypot(p[1] - h[1]) <= tol)
                || (hull.len() == 2 && {
                    let (a, b) = (hull[0], hull[1]);
                    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                    let len2 = dx * dx + dy * dy;
                    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
                    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy) <= tol
                });
        }
        hull.iter().zip(hull.iter().cycle().skip(1)).all(|(&a, &b)| {
            (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= -tol
        })
    }

    proptest! {
        #[test]
        fn equal_arc_points_stay_in_control_hull(
            coords in proptest::collection::vec(-0.6f64..0.6, 6),
        ) {
            let control = [[coords[0], coords[1]], [coords[2], coords[3]], [coords[4], coords[5]]];
            if let Some(points) = bezier_equal_arc_points(control, 8, 0.05) {
                let curve = Cubic { p1: control[0], p2: control[1], p3: control[2] };
                let table = ArcTable::build(&curve);
                let scale = 8.0 * 0.05 / table.total();
                let corners: Vec<[f64; 2]> = std::iter::once([0.0, 0.0])
                    .chain(control.iter().map(|c| [c[0] * scale, c[1] * scale]))
                    .collect();
                let hull = convex_hull(&corners);
                for p in points {
                    prop_assert!(point_in_hull(p, &hull, 1e-6), "{p:?} outside hull {hull:?}");
                }
            }
        }

        #[test]
        fn decode_is_deterministic_and_respects_bounds(
            raw in proptest::collection::vec(-20.0f64..20.0, 48),
        ) {
            let spec = ParameterizationSpec::bezier(8, 8, 0.05);
            let phi = MacroSetParams::new(raw, 8, 6).unwrap();
            let a = decode_macro_set(&phi, &spec).unwrap();
            let b = decode_macro_set(&phi, &spec).unwrap();
            prop_assert_eq!(&a, &b);
            for block in decode_params(&phi, &spec).unwrap() {
                for (v, (lo, hi)) in block.iter().zip(&spec.bounds) {
                    prop_assert!(v >= lo && v <= hi);
                }
            }
        }

        #[test]
        fn decoded_directions_are_unit_or_zero(
            raw in proptest::collection::vec(-3.0f64..3.0, 48),
        ) {
            let spec = ParameterizationSpec::bezier(8, 8, 0.05);
            let phi = MacroSetParams::new(raw, 8, 6).unwrap();
            for m in decode_macro_set(&phi, &spec).unwrap() {
                prop_assert_eq!(m.len(), 8);
                for a in &m.actions {
                    let norm = a[0].hypot(a[1]);
                    prop_assert!(norm < 1e-12 || (norm - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn turn_and_go_shapes() {
        let straight = turn_and_go_to_macro(2.0, 0.0, 3);
        assert_eq!(straight.actions, vec![vec![2.0, 0.0]; 3]);

        let stopped = turn_and_go_to_macro(0.0, 0.4, 3);
        for a in &stopped.actions {
            assert_eq!(a[0], 0.0);
        }

        let steer = 15f64.to_radians();
        let m = turn_and_go_to_macro(6.0, steer, 3);
        assert_eq!(m.actions, vec![vec![6.0, steer], vec![6.0, steer], vec![6.0, 0.0]]);
    }

    #[test]
    fn decode_shapes_match_parameter_counts() {
        let spec = ParameterizationSpec::bezier(8, 8, 0.05);
        assert_eq!(spec.phi_dim(), 48);
        let phi = MacroSetParams::new(vec![0.1; 48], 8, 6).unwrap();
        let macros = decode_macro_set(&phi, &spec).unwrap();
        assert_eq!(macros.len(), 8);
        assert!(macros.iter().all(|m| m.len() == 8));

        let tg = ParameterizationSpec::turn_and_go(7, 3, 6.0, 15f64.to_radians());
        assert_eq!(tg.phi_dim(), 14);

        let bad = MacroSetParams::new(vec![0.0; 47], 8, 6);
        assert!(matches!(bad, Err(MacroError::ShapeMismatch { .. })));
    }

    #[test]
    fn zero_phi_under_symmetric_bounds_is_degenerate_straight() {
        let spec = ParameterizationSpec::bezier(8, 8, 0.05);
        let phi = MacroSetParams::new(vec![0.0; 48], 8, 6).unwrap();
        let macros = decode_macro_set(&phi, &spec).unwrap();
        for m in &macros {
            assert_eq!(m, &macros[0]);
            assert_eq!(m.actions, vec![vec![0.0, 0.0]; 8]);
        }
    }

    #[test]
    fn handcrafted_sets_match_task_definitions() {
        let ld = handcrafted_set("light-dark").unwrap();
        assert_eq!(ld.len(), 8);
        for (i, m) in ld.iter().enumerate() {
            assert_eq!(m.len(), 6);
            let heading = std::f64::consts::TAU * i as f64 / 8.0;
            for a in &m.actions {
                assert!((a[0] - heading.cos()).abs() < 1e-12);
                assert!((a[1] - heading.sin()).abs() < 1e-12);
            }
        }

        let pp = handcrafted_set("puck-push").unwrap();
        assert_eq!(pp.len(), 8);
        assert!(pp.iter().all(|m| m.len() == 2));

        let tg = handcrafted_set("turn-and-go-demo").unwrap();
        assert_eq!(tg.len(), 7);
        let zero_speed = tg.iter().filter(|m| m.actions[0][0] == 0.0).count();
        assert_eq!(zero_speed, 1, "zero-speed duplicates must collapse to one");

        assert!(matches!(handcrafted_set("nope"), Err(MacroError::UnknownTask(_))));
    }

    #[test]
    fn handcrafted_set_is_a_set() {
        // Membership is what matters, not index order: every one of the 8
        // headings appears exactly once.
        let ld = handcrafted_set("light-dark").unwrap();
        for i in 0..8 {
            let heading = std::f64::consts::TAU * i as f64 / 8.0;
            let hits = ld
                .iter()
                .filter(|m| (m.actions[0][0] - heading.cos()).abs() < 1e-12 && (m.actions[0][1] - heading.sin()).abs() < 1e-12)
                .count();
            assert_eq!(hits, 1);
        }
    }

    #[test]
    fn export_records_carry_polylines() {
        let ld = handcrafted_set("light-dark").unwrap();
        let recs = export_records(&ld, 0.05);
        assert_eq!(recs.len(), 8);
        assert_eq!(recs[0].polyline.len(), 7);
        let end = recs[0].polyline[6];
        assert!((end[0] - 0.3).abs() < 1e-12 && end[1].abs() < 1e-12);
    }
}
