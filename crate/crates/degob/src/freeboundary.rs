//! Free-boundary extraction from discrete solutions and the corner/graph
//! validation machinery: sub-grid Γ location by edge bisection, per-slice
//! graph fitting with uniqueness checks, per-side slope and opening-angle
//! measurements, proximity to the fitted cone rays, directional
//! monotonicity, and cone inclusion at free-boundary points.

use crate::catalog::CatalogSolution;
use crate::grid::{weight, NodeClass, ScalarField};
use crate::{Error, Result};
use std::f64::consts::PI;

/// Unit normal of the reference cone's right ray, pointing into the
/// positive set.
pub const E_STAR: [f64; 2] = [-0.5, 0.866025403784438646763723170752936183];

/// Side tag for curve points.
#[derive(Clone, Copy, PartialEq, Eq, Debug, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Right,
    Left,
    NearOrigin,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct CurvePoint {
    pub pos: [f64; 2],
    pub side: Side,
    pub normal: [f64; 2],
}

/// Ordered sub-grid-accurate points on Γ with normals into {u > 0}.
#[derive(Clone, Debug, serde::Serialize)]
pub struct FreeBoundaryCurve {
    pub points: Vec<CurvePoint>,
}

/// Extraction parameters. The positivity threshold τ(x) = c_thr h²(h + |x|)
/// copies the shape of the nondegeneracy lower bound so genuinely positive
/// regions at scale >= h are never misclassified.
#[derive(Clone, Copy, Debug)]
pub struct ExtractOptions {
    pub c_thr: f64,
    /// |x| below which points are tagged NearOrigin (in units of h).
    pub origin_band_h: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { c_thr: 0.1, origin_band_h: 4.0 }
    }
}

impl ExtractOptions {
    pub fn tau(&self, h: f64, p: [f64; 2]) -> f64 {
        self.c_thr * h * h * (h + weight(p))
    }
}

/// Locate Γ: mark nodes with u > τ positive, bisect u - τ along grid edges
/// between positive and non-positive nodes, tag sides, estimate normals by
/// a local line fit oriented toward the positive side.
pub fn extract(field: &ScalarField, opts: &ExtractOptions) -> Result<FreeBoundaryCurve> {
    let spec = &field.spec;
    let n = spec.n;
    let h = spec.h;
    let positive = |i: usize, j: usize| {
        spec.class(i, j) != NodeClass::Exterior
            && field.value(i, j) > opts.tau(h, spec.node_pos(i, j))
    };
    let mut any_positive = false;
    let mut raw: Vec<[f64; 2]> = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            if spec.class(i, j) == NodeClass::Exterior {
                continue;
            }
            let p_here = positive(i, j);
            any_positive |= p_here;
            // look at east and north edges once each
            for (i2, j2) in [(i + 1, j), (i, j + 1)] {
                if i2 > n || j2 > n || spec.class(i2, j2) == NodeClass::Exterior {
                    continue;
                }
                if p_here != positive(i2, j2) {
                    let a = spec.node_pos(i, j);
                    let b = spec.node_pos(i2, j2);
                    let va = field.value(i, j);
                    let vb = field.value(i2, j2);
                    raw.push(bisect_edge(a, b, va, vb, |p| opts.tau(h, p)));
                }
            }
        }
    }
    if !any_positive {
        return Err(Error::EmptyPositiveSet);
    }
    if raw.is_empty() {
        return Err(Error::NoInteriorFreeBoundary);
    }
    // order by polar angle: the in-scope geometry is two branches through
    // the origin, which this ordering keeps contiguous
    raw.sort_by(|a, b| a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])));
    let normals = estimate_normals(&raw, field, opts);
    let points = raw
        .into_iter()
        .zip(normals)
        .map(|(pos, normal)| {
            let side = if weight(pos) < opts.origin_band_h * h {
                Side::NearOrigin
            } else if pos[0] > 0.0 {
                Side::Right
            } else {
                Side::Left
            };
            CurvePoint { pos, side, normal }
        })
        .collect();
    Ok(FreeBoundaryCurve { points })
}

/// Root of (u - τ) along the segment [a, b] by bisection on the linearly
/// interpolated node values.
fn bisect_edge(
    a: [f64; 2],
    b: [f64; 2],
    va: f64,
    vb: f64,
    tau: impl Fn([f64; 2]) -> f64,
) -> [f64; 2] {
    let at = |t: f64| -> ([f64; 2], f64) {
        let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        let u = va + t * (vb - va);
        (p, u - tau(p))
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (_, mut flo) = at(lo);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (_, fm) = at(mid);
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi)).0
}

/// Per-point normals by a least-squares line through the 5 nearest curve
/// points, signed toward larger u.
fn estimate_normals(points: &[[f64; 2]], field: &ScalarField, opts: &ExtractOptions) -> Vec<[f64; 2]> {
    let h = field.spec.h;
    let k = 5usize.min(points.len());
    points
        .iter()
        .map(|&p| {
            let mut nearest: Vec<(f64, [f64; 2])> =
                points.iter().map(|&q| ((q[0] - p[0]).hypot(q[1] - p[1]), q)).collect();
            nearest.sort_by(|a, b| a.0.total_cmp(&b.0));
            let sel: Vec<[f64; 2]> = nearest.iter().take(k).map(|e| e.1).collect();
            let mx = sel.iter().map(|q| q[0]).sum::<f64>() / sel.len() as f64;
            let my = sel.iter().map(|q| q[1]).sum::<f64>() / sel.len() as f64;
            let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
            for q in &sel {
                sxx += (q[0] - mx) * (q[0] - mx);
                sxy += (q[0] - mx) * (q[1] - my);
                syy += (q[1] - my) * (q[1] - my);
            }
            // normal = eigenvector of the smaller eigenvalue of the scatter
            let tr = sxx + syy;
            let det = sxx * syy - sxy * sxy;
            let lam = 0.5 * tr - (0.25 * tr * tr - det).max(0.0).sqrt();
            let mut nx;
            let mut ny;
            if sxy.abs() > 1e-30 {
                nx = lam - syy;
                ny = sxy;
            } else if sxx <= syy {
                nx = 1.0;
                ny = 0.0;
            } else {
                nx = 0.0;
                ny = 1.0;
            }
            let norm = nx.hypot(ny);
            nx /= norm;
            ny /= norm;
            // orient toward the positive side
            let probe = 2.0 * h;
            let max_r = field.spec.max_interp_radius();
            let plus = [p[0] + probe * nx, p[1] + probe * ny];
            let minus = [p[0] - probe * nx, p[1] - probe * ny];
            if weight(plus) < max_r && weight(minus) < max_r {
                let up = field.interpolate(plus) - opts.tau(h, plus);
                let um = field.interpolate(minus) - opts.tau(h, minus);
                if um > up {
                    nx = -nx;
                    ny = -ny;
                }
            }
            [nx, ny]
        })
        .collect()
}

/// Graph representation of Γ over vertical slices |x₁| < ϱ/4.
#[derive(Clone, Debug, serde::Serialize)]
pub struct GraphFit {
    pub rho: f64,
    /// (x₁, g(x₁)) pairs, increasing in x₁.
    pub samples: Vec<(f64, f64)>,
    /// (x₁, g'(x₁)) by centered differences.
    pub slopes: Vec<(f64, f64)>,
    pub slope_error_right: Vec<(f64, f64)>,
    pub slope_error_left: Vec<(f64, f64)>,
    pub opening_angle: f64,
    /// Largest |Δg|/|Δx₁| between adjacent samples.
    pub lipschitz: f64,
}

pub struct GraphOptions {
    pub slices_per_side: usize,
    /// Smallest |x₁| sampled, in units of h.
    pub min_x1_h: f64,
    pub extract: ExtractOptions,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions { slices_per_side: 40, min_x1_h: 5.0, extract: ExtractOptions::default() }
    }
}

/// Reference slope √3/3 of the right branch (the left branch carries -√3/3).
pub fn reference_slope() -> f64 {
    3f64.sqrt() / 3.0
}

/// Single crossing of the thresholded field along the vertical slice
/// x₁ = c inside |x₂| <= span. Scans at step h/2 for sign-change clusters
/// (more than one transition violates slice uniqueness), then bisects.
fn slice_crossing(
    field: &ScalarField,
    c: f64,
    span: f64,
    opts: &ExtractOptions,
) -> Result<f64> {
    let h = field.spec.h;
    let steps = ((2.0 * span) / (0.5 * h)).ceil() as usize;
    let s = |k: usize| -span + 2.0 * span * k as f64 / steps as f64;
    let val = |y: f64| {
        let p = [c, y];
        field.interpolate(p) - opts.tau(h, p)
    };
    let mut transitions: Vec<(f64, f64, bool)> = Vec::new(); // (lo, hi, rising)
    let mut prev = val(s(0)) > 0.0;
    for k in 1..=steps {
        let now = val(s(k)) > 0.0;
        if now != prev {
            transitions.push((s(k - 1), s(k), now));
        }
        prev = now;
    }
    match transitions.len() {
        0 => Err(Error::NoCrossing { x1: c }),
        1 => {
            let (mut lo, mut hi, _) = transitions[0];
            let mut flo = val(lo);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let fm = val(mid);
                if (fm > 0.0) == (flo > 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let y0 = 0.5 * (lo + hi);
            // The τ-level bracket quantizes near the contact kink. The
            // solution leaves the contact set quadratically, so two probes
            // in the smooth region above pin the actual zero; anchoring them
            // to node rows keeps the estimate smooth across slices.
            let tau0 = opts.tau(h, [c, y0]);
            let j1 = ((y0 + 1.5 * h + 1.0) / h).ceil();
            let y1 = -1.0 + j1 * h;
            let y2 = y1 + 2.0 * h;
            let u1 = field.interpolate([c, y1]);
            let u2 = field.interpolate([c, y2]);
            if tau0 > 0.0 && u1 > 4.0 * tau0 && u2 > u1 {
                let (s1, s2) = (u1.sqrt(), u2.sqrt());
                let x0 = (s2 * y1 - s1 * y2) / (s2 - s1);
                if (x0 - y0).abs() <= 2.5 * h {
                    return Ok(x0.min(y0 + 1.5 * h));
                }
            }
            Ok(y0)
        }
        k => Err(Error::MultipleCrossings { x1: c, count: k }),
    }
}

/// Fit the graph x₂ = g(x₁) on 0 < |x₁| < ϱ/4: one crossing per slice
/// (a second crossing is a hard failure), slopes by centered differences,
/// opening angle from per-side least-squares rays through the origin.
pub fn graph_fit(field: &ScalarField, rho: f64, opts: &GraphOptions) -> Result<GraphFit> {
    let h = field.spec.h;
    let span = rho.min(field.spec.max_interp_radius() - 1e-9);
    let m = opts.slices_per_side;
    let x1_max = rho / 4.0;
    let x1_min = (opts.min_x1_h * h).min(0.5 * x1_max);
    let mut samples = Vec::new();
    for side in [-1.0f64, 1.0] {
        for k in 0..m {
            let x1 = side * (x1_min + (x1_max - x1_min) * k as f64 / (m - 1).max(1) as f64);
            let g = slice_crossing(field, x1, span, &opts.extract)?;
            samples.push((x1, g));
        }
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));

    // centered differences per side; the baseline spans several cells so
    // sub-grid crossing noise does not swamp the slope
    let mut slopes = Vec::new();
    for side in [-1.0f64, 1.0] {
        let s: Vec<(f64, f64)> = samples.iter().cloned().filter(|(x, _)| x * side > 0.0).collect();
        if s.len() < 2 {
            continue;
        }
        let dx = (s[s.len() - 1].0 - s[0].0).abs() / (s.len() - 1) as f64;
        let stride = (((5.0 * h) / dx).ceil().max(1.0) as usize).min((s.len() - 1) / 2);
        if stride == 0 {
            continue;
        }
        for k in stride..s.len() - stride {
            let (x0, g0) = s[k - stride];
            let (x1, g1) = s[k + stride];
            slopes.push((s[k].0, (g1 - g0) / (x1 - x0)));
        }
    }
    slopes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let sref = reference_slope();
    let slope_error_right: Vec<(f64, f64)> =
        slopes.iter().filter(|(x, _)| *x > 0.0).map(|&(x, s)| (x, (s - sref).abs())).collect();
    let slope_error_left: Vec<(f64, f64)> =
        slopes.iter().filter(|(x, _)| *x < 0.0).map(|&(x, s)| (x, (s + sref).abs())).collect();

    // per-side rays through the origin
    let ray_slope = |side: f64| {
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for &(x, g) in &samples {
            if x * side > 0.0 {
                sxy += x * g;
                sxx += x * x;
            }
        }
        sxy / sxx
    };
    let m_r = ray_slope(1.0);
    let m_l = ray_slope(-1.0);
    let theta_r = m_r.atan();
    let theta_l = (-m_l).atan2(-1.0).rem_euclid(std::f64::consts::TAU);
    let opening_angle = (theta_l - theta_r).rem_euclid(std::f64::consts::TAU);

    let mut lipschitz = 0.0f64;
    for w in samples.windows(2) {
        lipschitz = lipschitz.max(((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs());
    }
    Ok(GraphFit {
        rho,
        samples,
        slopes,
        slope_error_right,
        slope_error_left,
        opening_angle,
        lipschitz,
    })
}

/// Largest dyadic ϱ <= 1/4 whose slice-uniqueness test passes.
pub fn select_rho(field: &ScalarField, opts: &GraphOptions) -> Option<f64> {
    let mut rho = 0.25;
    for _ in 0..4 {
        if graph_fit(field, rho, opts).is_ok() {
            return Some(rho);
        }
        rho *= 0.5;
    }
    None
}

/// Hausdorff-type distances between curve points and the free boundary of a
/// reference profile.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ProximityReport {
    /// max over curve points of d(x, Γ_ref).
    pub max_distance: f64,
    /// max of d(x₀, Γ_ref) / (|x₀| ‖u_{4|x₀|} - ref‖^{1/3}).
    pub max_ratio: f64,
    pub points_checked: usize,
}

/// Check curve proximity to the fitted profile's rays: for each curve point
/// x₀, compare d(x₀, Γ_ref) against |x₀| ‖u_{4|x₀|} - ref‖_∞^{1/3}.
pub fn proximity_check(
    field: &ScalarField,
    curve: &FreeBoundaryCurve,
    reference: &CatalogSolution,
) -> ProximityReport {
    let max_r = field.spec.max_interp_radius();
    let mut max_distance = 0.0f64;
    let mut max_ratio = 0.0f64;
    let mut checked = 0usize;
    for pt in &curve.points {
        let d = reference.distance_to_free_boundary(pt.pos);
        max_distance = max_distance.max(d);
        let r0 = weight(pt.pos);
        let scale = 4.0 * r0;
        if r0 < 1e-3 || scale > max_r {
            continue;
        }
        let norm = rescaled_sup_distance(field, scale, reference);
        if norm > 0.0 {
            max_ratio = max_ratio.max(d / (r0 * norm.powf(1.0 / 3.0)));
        }
        checked += 1;
    }
    ProximityReport { max_distance, max_ratio, points_checked: checked }
}

/// sup over B₁ of |u(s y)/s³ - ref(y)| on a polar sampling grid.
pub fn rescaled_sup_distance(field: &ScalarField, s: f64, reference: &CatalogSolution) -> f64 {
    let s3 = s * s * s;
    let mut sup = 0.0f64;
    for kr in 1..=24 {
        let r = kr as f64 / 24.0;
        for kt in 0..192 {
            let t = std::f64::consts::TAU * kt as f64 / 192.0;
            let y = [r * t.cos(), r * t.sin()];
            let v = field.interpolate([s * y[0], s * y[1]]) / s3;
            sup = sup.max((v - reference.eval(y)).abs());
        }
    }
    sup
}

/// Where the directional-derivative comparison gets its values: exact
/// closed-form gradients for catalog profiles, interpolated finite
/// differences for grid fields.
pub enum FieldSource<'a> {
    Catalog(&'a CatalogSolution),
    Grid(&'a ScalarField),
}

impl FieldSource<'_> {
    fn value(&self, p: [f64; 2]) -> f64 {
        match self {
            FieldSource::Catalog(sol) => sol.eval(p),
            FieldSource::Grid(f) => f.interpolate(p),
        }
    }

    fn directional(&self, p: [f64; 2], e: [f64; 2]) -> f64 {
        match self {
            FieldSource::Catalog(sol) => {
                let g = sol.grad(p);
                g[0] * e[0] + g[1] * e[1]
            }
            FieldSource::Grid(f) => {
                let s = f.spec.h;
                (f.interpolate([p[0] + s * e[0], p[1] + s * e[1]])
                    - f.interpolate([p[0] - s * e[0], p[1] - s * e[1]]))
                    / (2.0 * s)
            }
        }
    }
}

/// Polar wedge θ ∈ (θ_lo, θ_hi), r ∈ (r_lo, r_hi).
#[derive(Clone, Copy, Debug)]
pub struct WedgeRegion {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub r_lo: f64,
    pub r_hi: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct MonotonicityReport {
    pub min_value: f64,
    pub argmin: [f64; 2],
    pub violations: usize,
    pub samples: usize,
}

/// Evaluate c₀ ∂_e u - u over the wedge; negative values are violations.
pub fn directional_monotonicity_check(
    source: &FieldSource,
    e: [f64; 2],
    c0: f64,
    region: &WedgeRegion,
    tol: f64,
) -> MonotonicityReport {
    let (nr, nt) = (60usize, 120usize);
    let mut min_value = f64::INFINITY;
    let mut argmin = [0.0, 0.0];
    let mut violations = 0;
    let mut samples = 0;
    for kt in 0..=nt {
        let t = region.theta_lo + (region.theta_hi - region.theta_lo) * kt as f64 / nt as f64;
        for kr in 0..=nr {
            let r = region.r_lo + (region.r_hi - region.r_lo) * kr as f64 / nr as f64;
            let p = [r * t.cos(), r * t.sin()];
            let v = c0 * source.directional(p, e) - source.value(p);
            samples += 1;
            if v < min_value {
                min_value = v;
                argmin = p;
            }
            if v < -tol {
                violations += 1;
            }
        }
    }
    MonotonicityReport { min_value, argmin, violations, samples }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ConeInclusionReport {
    pub backward_max: f64,
    pub forward_min: f64,
    pub tau_at_x0: f64,
    pub samples_per_cone: usize,
}

/// Sample u on x₀ ∓ t e for directions e with e·e* > δ and t in
/// [t_lo, r]: the backward cone must stay within the positivity threshold,
/// the forward cone strictly positive.
pub fn cone_inclusion_check(
    source: &FieldSource,
    x0: [f64; 2],
    delta: f64,
    r: f64,
    t_lo: f64,
    opts: &ExtractOptions,
    h: f64,
) -> ConeInclusionReport {
    let half_angle = delta.acos();
    let base = E_STAR[1].atan2(E_STAR[0]);
    let (nd, nt) = (24usize, 24usize);
    let mut backward_max = f64::NEG_INFINITY;
    let mut forward_min = f64::INFINITY;
    for kd in 0..=nd {
        let a = base - half_angle + 2.0 * half_angle * kd as f64 / nd as f64;
        let e = [a.cos(), a.sin()];
        for kt in 0..=nt {
            let t = t_lo + (r - t_lo) * kt as f64 / nt as f64;
            let fwd = [x0[0] + t * e[0], x0[1] + t * e[1]];
            let bwd = [x0[0] - t * e[0], x0[1] - t * e[1]];
            forward_min = forward_min.min(source.value(fwd));
            backward_max = backward_max.max(source.value(bwd));
        }
    }
    ConeInclusionReport {
        backward_max,
        forward_min,
        tau_at_x0: opts.tau(h, x0),
        samples_per_cone: (nd + 1) * (nt + 1),
    }
}

/// Hausdorff distance between curve points and the two rays of a cone
/// profile (one-sided: max over points of the ray distance, and max over
/// dense ray samples of the distance to the curve).
pub fn hausdorff_to_rays(curve: &FreeBoundaryCurve, sol: &CatalogSolution, r_max: f64) -> f64 {
    let mut d1 = 0.0f64;
    for pt in &curve.points {
        d1 = d1.max(sol.distance_to_free_boundary(pt.pos));
    }
    let mut d2 = 0.0f64;
    for &beta in &sol.free_boundary_rays() {
        for k in 1..=200 {
            let r = r_max * k as f64 / 200.0;
            let p = [r * beta.cos(), r * beta.sin()];
            let nearest = curve
                .points
                .iter()
                .map(|q| (q.pos[0] - p[0]).hypot(q.pos[1] - p[1]))
                .fold(f64::INFINITY, f64::min);
            d2 = d2.max(nearest);
        }
    }
    d1.max(d2)
}

/// Opening angle of the reference cone.
pub fn reference_opening() -> f64 {
    2.0 * PI / 3.0
}
