//! Discrete scalar fields on the unit disk embedded in the square [-1,1]².
//!
//! A grid with `n` cells per axis has spacing `h = 2/n` and nodes
//! `x_(i,j) = (-1 + i h, -1 + j h)`. Nodes are classified interior
//! (`|x| < 1 - h`), boundary band (`1 - h <= |x| <= 1`) or exterior
//! (`|x| > 1`); exterior nodes always hold the value 0. Bulk quadrature uses
//! cut cells at the circle with area fractions from 4x4 subsampling;
//! boundary quadrature is the periodic trapezoid rule on uniform polar
//! traces.

use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

/// Node classification relative to the unit circle.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NodeClass {
    Interior,
    Band,
    Exterior,
}

impl NodeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeClass::Interior => "interior",
            NodeClass::Band => "boundary-band",
            NodeClass::Exterior => "exterior",
        }
    }
}

/// Uniform Cartesian grid on [-1,1]² with node classification and cached
/// cut-cell area fractions for the unit disk.
pub struct GridSpec {
    pub n: usize,
    pub h: f64,
    class: Vec<NodeClass>,
    /// Fraction of cell (i,j) inside the unit disk, i,j in 0..n.
    cell_frac: Vec<f32>,
}

impl GridSpec {
    pub fn new(n: usize) -> Arc<GridSpec> {
        assert!(n >= 8, "grid too coarse");
        let h = 2.0 / n as f64;
        let m = n + 1;
        let mut class = Vec::with_capacity(m * m);
        for j in 0..m {
            for i in 0..m {
                let x = -1.0 + i as f64 * h;
                let y = -1.0 + j as f64 * h;
                let r = (x * x + y * y).sqrt();
                class.push(if r < 1.0 - h {
                    NodeClass::Interior
                } else if r <= 1.0 {
                    NodeClass::Band
                } else {
                    NodeClass::Exterior
                });
            }
        }
        let mut cell_frac = vec![0.0f32; n * n];
        for cj in 0..n {
            for ci in 0..n {
                let x0 = -1.0 + ci as f64 * h;
                let y0 = -1.0 + cj as f64 * h;
                // min/max distance from the origin to the closed cell
                let cx = x0.max((-x0 - h).max(0.0)); // = distance of [x0,x0+h] to 0
                let cy = y0.max((-y0 - h).max(0.0));
                let dmin = (cx * cx + cy * cy).sqrt();
                let mx = x0.abs().max((x0 + h).abs());
                let my = y0.abs().max((y0 + h).abs());
                let dmax = (mx * mx + my * my).sqrt();
                cell_frac[cj * n + ci] = if dmax <= 1.0 {
                    1.0
                } else if dmin >= 1.0 {
                    0.0
                } else {
                    let mut inside = 0u32;
                    for sj in 0..4 {
                        for si in 0..4 {
                            let px = x0 + (si as f64 + 0.5) * h / 4.0;
                            let py = y0 + (sj as f64 + 0.5) * h / 4.0;
                            if px * px + py * py <= 1.0 {
                                inside += 1;
                            }
                        }
                    }
                    inside as f32 / 16.0
                };
            }
        }
        Arc::new(GridSpec { n, h, class, cell_frac })
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    #[inline]
    pub fn node_pos(&self, i: usize, j: usize) -> [f64; 2] {
        [-1.0 + i as f64 * self.h, -1.0 + j as f64 * self.h]
    }

    #[inline]
    pub fn class(&self, i: usize, j: usize) -> NodeClass {
        self.class[self.idx(i, j)]
    }

    #[inline]
    pub fn class_at(&self, idx: usize) -> NodeClass {
        self.class[idx]
    }

    pub fn num_nodes(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    /// Largest radius at which bilinear interpolation is safe.
    pub fn max_interp_radius(&self) -> f64 {
        1.0 - 2.0 * self.h
    }

    fn cell_fraction(&self, ci: usize, cj: usize) -> f64 {
        self.cell_frac[cj * self.n + ci] as f64
    }
}

/// Forcing weight f(x) = |x|.
#[inline]
pub fn weight(p: [f64; 2]) -> f64 {
    p[0].hypot(p[1])
}

/// Scalar field sampled at grid nodes. Exterior nodes hold 0.
#[derive(Clone)]
pub struct ScalarField {
    pub spec: Arc<GridSpec>,
    pub values: Vec<f64>,
    pub label: String,
}

impl ScalarField {
    pub fn zeros(spec: Arc<GridSpec>, label: &str) -> ScalarField {
        let len = spec.num_nodes();
        ScalarField { spec, values: vec![0.0; len], label: label.to_string() }
    }

    /// Sample `f` at every non-exterior node.
    pub fn from_fn(spec: Arc<GridSpec>, label: &str, f: impl Fn([f64; 2]) -> f64) -> ScalarField {
        let mut field = ScalarField::zeros(spec, label);
        let n = field.spec.n;
        for j in 0..=n {
            for i in 0..=n {
                if field.spec.class(i, j) != NodeClass::Exterior {
                    let idx = field.spec.idx(i, j);
                    field.values[idx] = f(field.spec.node_pos(i, j));
                }
            }
        }
        field
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.idx(i, j)]
    }

    /// Bilinear interpolation. Callers must stay within `max_interp_radius`.
    pub fn interpolate(&self, p: [f64; 2]) -> f64 {
        let n = self.spec.n;
        let h = self.spec.h;
        let fx = (p[0] + 1.0) / h;
        let fy = (p[1] + 1.0) / h;
        let i0 = (fx.floor() as isize).clamp(0, n as isize - 1) as usize;
        let j0 = (fy.floor() as isize).clamp(0, n as isize - 1) as usize;
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let v00 = self.value(i0, j0);
        let v10 = self.value(i0 + 1, j0);
        let v01 = self.value(i0, j0 + 1);
        let v11 = self.value(i0 + 1, j0 + 1);
        v00 * (1.0 - tx) * (1.0 - ty) + v10 * tx * (1.0 - ty) + v01 * (1.0 - tx) * ty + v11 * tx * ty
    }

    /// Finite values at all stored nodes.
    pub fn is_finite(&self) -> bool {
        let n = self.spec.n;
        for j in 0..=n {
            for i in 0..=n {
                if self.spec.class(i, j) != NodeClass::Exterior && !self.value(i, j).is_finite() {
                    return false;
                }
            }
        }
        true
    }
}

/// Five-point Laplacian (u_E + u_W + u_N + u_S - 4 u_C) / h² at an interior node.
pub fn laplacian_5pt(field: &ScalarField, i: usize, j: usize) -> Result<f64> {
    let spec = &field.spec;
    if i == 0 || j == 0 || i >= spec.n || j >= spec.n || spec.class(i, j) != NodeClass::Interior {
        return Err(Error::NotInterior { i, j, class: spec.class(i.min(spec.n), j.min(spec.n)).as_str() });
    }
    let h2 = spec.h * spec.h;
    Ok((field.value(i + 1, j) + field.value(i - 1, j) + field.value(i, j + 1) + field.value(i, j - 1)
        - 4.0 * field.value(i, j))
        / h2)
}

/// Componentwise discrete gradient: centered differences where both axis
/// neighbours are stored, one-sided in the outermost band, zero outside.
pub fn gradient_field(field: &ScalarField) -> (ScalarField, ScalarField) {
    let spec = field.spec.clone();
    let n = spec.n;
    let h = spec.h;
    let mut gx = ScalarField::zeros(spec.clone(), &format!("ddx({})", field.label));
    let mut gy = ScalarField::zeros(spec.clone(), &format!("ddy({})", field.label));
    let stored = |i: usize, j: usize| spec.class(i, j) != NodeClass::Exterior;
    for j in 0..=n {
        for i in 0..=n {
            if !stored(i, j) {
                continue;
            }
            let idx = spec.idx(i, j);
            let c = field.value(i, j);
            let e = i < n && stored(i + 1, j);
            let w = i > 0 && stored(i - 1, j);
            gx.values[idx] = match (w, e) {
                (true, true) => (field.value(i + 1, j) - field.value(i - 1, j)) / (2.0 * h),
                (true, false) => (c - field.value(i - 1, j)) / h,
                (false, true) => (field.value(i + 1, j) - c) / h,
                (false, false) => 0.0,
            };
            let nn = j < n && stored(i, j + 1);
            let s = j > 0 && stored(i, j - 1);
            gy.values[idx] = match (s, nn) {
                (true, true) => (field.value(i, j + 1) - field.value(i, j - 1)) / (2.0 * h),
                (true, false) => (c - field.value(i, j - 1)) / h,
                (false, true) => (field.value(i, j + 1) - c) / h,
                (false, false) => 0.0,
            };
        }
    }
    (gx, gy)
}

/// Composite quadrature of `f` over the unit disk. Cells cut by the circle
/// are weighted by their subsampled area fraction; the integrand is averaged
/// over the cell corners that lie inside the closed disk, so `f` is only ever
/// evaluated at points with |x| <= 1.
pub fn bulk_integral(spec: &GridSpec, f: impl Fn([f64; 2]) -> f64) -> f64 {
    let n = spec.n;
    let h = spec.h;
    let cell_area = h * h;
    let mut total = 0.0;
    for cj in 0..n {
        for ci in 0..n {
            let frac = spec.cell_fraction(ci, cj);
            if frac == 0.0 {
                continue;
            }
            let mut sum = 0.0;
            let mut count = 0u32;
            for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                let p = spec.node_pos(ci + di, cj + dj);
                if p[0] * p[0] + p[1] * p[1] <= 1.0 {
                    sum += f(p);
                    count += 1;
                }
            }
            let avg = if count > 0 {
                sum / count as f64
            } else {
                // sliver cell with all corners outside: sample the center, pulled onto the disk
                let c = [spec.node_pos(ci, cj)[0] + 0.5 * h, spec.node_pos(ci, cj)[1] + 0.5 * h];
                let r = weight(c);
                let s = if r > 1.0 { (1.0 - 1e-12) / r } else { 1.0 };
                f([c[0] * s, c[1] * s])
            };
            total += frac * cell_area * avg;
        }
    }
    total
}

/// Uniform periodic samples of a function on the circle of radius `radius`.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct PolarTrace {
    pub ntheta: usize,
    pub radius: f64,
    pub values: Vec<f64>,
}

impl PolarTrace {
    pub fn from_fn(ntheta: usize, radius: f64, f: impl Fn(f64) -> f64) -> PolarTrace {
        assert!(ntheta >= 64, "need at least 64 angular samples");
        let values = (0..ntheta).map(|k| f(theta_sample(k, ntheta))).collect();
        PolarTrace { ntheta, radius, values }
    }

    #[inline]
    pub fn theta(&self, k: usize) -> f64 {
        theta_sample(k, self.ntheta)
    }

    /// Periodic linear interpolation in theta.
    pub fn value_at(&self, theta: f64) -> f64 {
        let t = theta.rem_euclid(std::f64::consts::TAU) / std::f64::consts::TAU * self.ntheta as f64;
        let k0 = t.floor() as usize % self.ntheta;
        let k1 = (k0 + 1) % self.ntheta;
        let s = t - t.floor();
        self.values[k0] * (1.0 - s) + self.values[k1] * s
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

#[inline]
pub fn theta_sample(k: usize, ntheta: usize) -> f64 {
    std::f64::consts::TAU * k as f64 / ntheta as f64
}

/// Trapezoidal quadrature of `f(theta, value)` over the circle carrying the
/// trace; the arc-length element contributes a factor `radius`.
pub fn boundary_integral(trace: &PolarTrace, f: impl Fn(f64, f64) -> f64) -> f64 {
    let n = trace.ntheta;
    let sum: f64 = (0..n).map(|k| f(trace.theta(k), trace.values[k])).sum();
    sum * std::f64::consts::TAU / n as f64 * trace.radius
}

/// Bilinear resampling of a field on the circle of radius `r`.
pub fn resample_polar(field: &ScalarField, r: f64, ntheta: usize) -> Result<PolarTrace> {
    let max = field.spec.max_interp_radius();
    if !(0.0..=max + 1e-12).contains(&r) {
        return Err(Error::RadiusOutOfRange { r, min: 0.0, max });
    }
    Ok(PolarTrace::from_fn(ntheta, r, |t| field.interpolate([r * t.cos(), r * t.sin()])))
}

const FIELD_MAGIC: &str = "degob-field v1";

/// Write a field in the `degob-field v1` format: header line then
/// (n+1) rows of (n+1) comma-separated values, row-major, full precision.
pub fn write_field(field: &ScalarField, path: &Path) -> Result<()> {
    let n = field.spec.n;
    let mut out = String::new();
    writeln!(out, "{FIELD_MAGIC} n={n}").unwrap();
    for j in 0..=n {
        let mut row = String::new();
        for i in 0..=n {
            if i > 0 {
                row.push(',');
            }
            write!(row, "{}", field.value(i, j)).unwrap();
        }
        out.push_str(&row);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<ScalarField> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::FieldFormat("empty file".into()))?;
    let n: usize = header
        .strip_prefix(FIELD_MAGIC)
        .and_then(|rest| rest.trim().strip_prefix("n="))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::FieldFormat(format!("bad header `{header}`")))?;
    let spec = GridSpec::new(n);
    let mut field = ScalarField::zeros(spec, "loaded");
    for j in 0..=n {
        let line = lines.next().ok_or_else(|| Error::FieldFormat(format!("missing row {j}")))?;
        let mut count = 0;
        for (i, tok) in line.split(',').enumerate() {
            if i > n {
                return Err(Error::FieldFormat(format!("row {j} too long")));
            }
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|_| Error::FieldFormat(format!("bad value `{tok}` at ({i},{j})")))?;
            let idx = field.spec.idx(i, j);
            field.values[idx] = if field.spec.class(i, j) == NodeClass::Exterior { 0.0 } else { v };
            count = i + 1;
        }
        if count != n + 1 {
            return Err(Error::FieldFormat(format!("row {j} has {count} values, expected {}", n + 1)));
        }
    }
    if !field.is_finite() {
        return Err(Error::FieldFormat("non-finite value at a stored node".into()));
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn node_mapping_and_classes() {
        let spec = GridSpec::new(64);
        assert_eq!(spec.h, 2.0 / 64.0);
        let p = spec.node_pos(32, 32);
        assert_eq!(p, [0.0, 0.0]);
        assert_eq!(spec.class(32, 32), NodeClass::Interior);
        // (1, 0) lies exactly on the circle: band, not exterior
        assert_eq!(spec.class(64, 32), NodeClass::Band);
        assert_eq!(spec.class(64, 64), NodeClass::Exterior);
    }

    #[test]
    fn laplacian_constant_and_quadratic() {
        let spec = GridSpec::new(64);
        let ones = ScalarField::from_fn(spec.clone(), "one", |_| 1.0);
        let quad = ScalarField::from_fn(spec.clone(), "r2", |p| p[0] * p[0] + p[1] * p[1]);
        assert!(laplacian_5pt(&ones, 20, 30).unwrap().abs() < 1e-12);
        assert!((laplacian_5pt(&quad, 20, 30).unwrap() - 4.0).abs() < 1e-9);
        assert!(laplacian_5pt(&ones, 0, 5).is_err());
        assert!(laplacian_5pt(&ones, 63, 32).is_err()); // band node
    }

    #[test]
    fn laplacian_exact_on_cubics() {
        // the 5-point stencil reproduces Δp exactly for total degree <= 3
        let spec = GridSpec::new(32);
        let monomials: Vec<(Box<dyn Fn([f64; 2]) -> f64>, Box<dyn Fn([f64; 2]) -> f64>)> = vec![
            (Box::new(|p: [f64; 2]| p[0] * p[0] * p[0]), Box::new(|p: [f64; 2]| 6.0 * p[0])),
            (Box::new(|p: [f64; 2]| p[0] * p[0] * p[1]), Box::new(|p: [f64; 2]| 2.0 * p[1])),
            (Box::new(|p: [f64; 2]| p[0] * p[1] * p[1]), Box::new(|p: [f64; 2]| 2.0 * p[0])),
            (Box::new(|p: [f64; 2]| p[1] * p[1] * p[1]), Box::new(|p: [f64; 2]| 6.0 * p[1])),
            (Box::new(|p: [f64; 2]| p[0] * p[1]), Box::new(|_| 0.0)),
        ];
        for (f, lap) in monomials {
            let field = ScalarField::from_fn(spec.clone(), "m", &f);
            for (i, j) in [(16, 16), (10, 20), (13, 9)] {
                let p = spec.node_pos(i, j);
                assert!((laplacian_5pt(&field, i, j).unwrap() - lap(p)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn laplacian_radial_cubic_second_order() {
        // Δ(|x|³/9) = |x|; Richardson halving confirms O(h²)
        let mut errs = Vec::new();
        for n in [64usize, 128] {
            let spec = GridSpec::new(n);
            let field = ScalarField::from_fn(spec.clone(), "c", |p| weight(p).powi(3) / 9.0);
            // node nearest (0.5, 0)
            let i = ((0.5 + 1.0) / spec.h).round() as usize;
            let j = n / 2;
            let p = spec.node_pos(i, j);
            errs.push((laplacian_5pt(&field, i, j).unwrap() - weight(p)).abs());
        }
        assert!(errs[0] < 1e-3);
        assert!(errs[0] / errs[1] > 3.0, "expected ~4x error drop: {errs:?}");
    }

    #[test]
    fn bulk_integral_reference_values() {
        let spec = GridSpec::new(256);
        let area = bulk_integral(&spec, |_| 1.0);
        assert!((area - PI).abs() < 2e-3, "area {area}");
        let m1 = bulk_integral(&spec, weight);
        assert!((m1 - 2.0 * PI / 3.0).abs() < 2e-3, "m1 {m1}");
        let m4 = bulk_integral(&spec, |p| weight(p) * weight(p).powi(3) / 9.0);
        assert!((m4 - PI / 27.0).abs() < 1e-3, "m4 {m4}");
    }

    #[test]
    fn bulk_integral_convergence_order() {
        // smooth integrand: order >= 1; vanishing on the circle: order >= 2
        let f_smooth = |p: [f64; 2]| (p[0] + p[1]).exp();
        let f_vanish = |p: [f64; 2]| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            (1.0 - r2) * (1.0 - r2)
        };
        // reference values by fine quadrature
        let fine = GridSpec::new(1024);
        let ref_smooth = bulk_integral(&fine, f_smooth);
        let ref_vanish = PI / 3.0; // ∫(1-r²)² = 2π ∫₀¹ (1-r²)² r dr = π/3
        assert!((bulk_integral(&fine, f_vanish) - ref_vanish).abs() < 1e-6);
        let mut es = Vec::new();
        let mut ev = Vec::new();
        for n in [64usize, 128, 256] {
            let spec = GridSpec::new(n);
            es.push((bulk_integral(&spec, f_smooth) - ref_smooth).abs());
            ev.push((bulk_integral(&spec, f_vanish) - ref_vanish).abs());
        }
        let order = |e: &[f64]| {
            let lo = (e[0] / e[1]).ln() / 2f64.ln();
            let hi = (e[1] / e[2]).ln() / 2f64.ln();
            0.5 * (lo + hi)
        };
        assert!(order(&es) >= 1.0, "smooth order {} from {es:?}", order(&es));
        assert!(order(&ev) >= 2.0, "vanishing order {} from {ev:?}", order(&ev));
    }

    #[test]
    fn boundary_integral_reference_values() {
        let one = PolarTrace::from_fn(256, 1.0, |_| 1.0);
        assert!((boundary_integral(&one, |_, v| v) - 2.0 * PI).abs() < 1e-10);
        let s2 = PolarTrace::from_fn(256, 1.0, |t| (3.0 * t).sin().powi(2));
        assert!((boundary_integral(&s2, |_, v| v) - PI).abs() < 1e-10);
    }

    #[test]
    fn boundary_integral_piecewise_cone_square() {
        // oracle: Simpson quadrature of (1-cos3φ)² over (0, 2π/3)
        let g = |t: f64| {
            if t > 0.0 && t < 2.0 * PI / 3.0 {
                (1.0 - (3.0 * t).cos()).powi(2) / 81.0
            } else {
                0.0
            }
        };
        let m = 90_000;
        let a = 0.0;
        let b = 2.0 * PI / 3.0;
        let hh = (b - a) / m as f64;
        let mut simpson = 0.0;
        for k in 0..m {
            let x0 = a + k as f64 * hh;
            simpson += hh / 6.0
                * ((1.0 - (3.0 * x0).cos()).powi(2)
                    + 4.0 * (1.0 - (3.0 * (x0 + 0.5 * hh)).cos()).powi(2)
                    + (1.0 - (3.0 * (x0 + hh)).cos()).powi(2));
        }
        simpson /= 81.0;
        assert!((simpson - PI / 81.0).abs() < 1e-12, "oracle {simpson} vs {}", PI / 81.0);
        let trace = PolarTrace::from_fn(4096, 1.0, g);
        let q = boundary_integral(&trace, |_, v| v);
        assert!((q - PI / 81.0).abs() < 1e-6, "quadrature {q}");
    }

    #[test]
    fn resample_polar_radial_cubic() {
        let spec = GridSpec::new(128);
        let field = ScalarField::from_fn(spec, "c", |p| weight(p).powi(3) / 9.0);
        let trace = resample_polar(&field, 0.5, 128).unwrap();
        for v in &trace.values {
            assert!((v - 1.0 / 72.0).abs() / (1.0 / 72.0) < 2e-3, "{v}");
        }
        let zero = ScalarField::zeros(GridSpec::new(64), "z");
        let tz = resample_polar(&zero, 0.3, 64).unwrap();
        assert!(tz.values.iter().all(|v| *v == 0.0));
        assert!(resample_polar(&zero, 0.999, 64).is_err());
    }

    #[test]
    fn field_dump_round_trip() {
        let spec = GridSpec::new(16);
        let field = ScalarField::from_fn(spec, "probe", |p| 0.3 * p[0] - 1.7 * p[1] + 0.01);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_field(&field, &path).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(back.spec.n, 16);
        assert_eq!(back.values, field.values);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("degob-field v1 n=16"));
        assert_eq!(text.lines().count(), 18);
    }
}
