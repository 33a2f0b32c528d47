//! Projected SOR solver for the discrete complementarity system
//!
//! ```text
//!     u >= 0,   Δ_h u <= |x|,   u (|x| - Δ_h u) = 0
//! ```
//!
//! on interior nodes with Dirichlet values on the boundary band, plus the
//! signed variant minimizing the bulk of M(v) = ∫(|∇v|² + 2|x| v⁺) - 3∮v²
//! at fixed trace (the boundary term is constant there).
//!
//! Sweeps are exact coordinate descent on the lattice energy
//! `Σ_edges (v_a - v_b)² + 2h² Σ |x| v⁺` (or `2h² Σ |x| v` with v >= 0
//! clamped, for the obstacle variant), relaxed by ω in (0, 2). For the
//! signed variant a relaxed update that overshoots past zero is clamped to
//! zero, which keeps the per-update energy decrease of plain SOR.

use crate::catalog::CatalogSolution;
use crate::grid::{GridSpec, NodeClass, PolarTrace, ScalarField};
use crate::{Error, Result};
use std::sync::Arc;

/// Which problem the sweep solves.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Variant {
    /// v >= 0 with forcing |x| active on {v > 0}.
    Obstacle,
    /// unconstrained sign, forcing |x| acts on the positive part only.
    Signed,
}

/// Dirichlet datum on the unit circle.
#[derive(Clone, Debug)]
pub enum BoundaryTrace {
    Catalog { sol: CatalogSolution, scale: f64 },
    Tabulated(PolarTrace),
}

impl BoundaryTrace {
    pub fn at_angle(&self, theta: f64) -> f64 {
        match self {
            BoundaryTrace::Catalog { sol, scale } => scale * sol.boundary_trace(theta),
            BoundaryTrace::Tabulated(trace) => trace.value_at(theta),
        }
    }

    pub fn min_value(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|k| self.at_angle(std::f64::consts::TAU * k as f64 / samples as f64))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Problem description: unit-disk grid, circle trace, forcing fixed to |x|.
#[derive(Clone)]
pub struct DirichletProblem {
    pub spec: Arc<GridSpec>,
    pub boundary: BoundaryTrace,
    pub variant: Variant,
}

impl DirichletProblem {
    /// Degree-3 homogeneous extension of the trace, sampled at every stored
    /// node: g(θ(x)) |x|³. Band nodes take these values as Dirichlet data;
    /// the same extension seeds the sweep.
    pub fn homogeneous_extension(&self) -> ScalarField {
        ScalarField::from_fn(self.spec.clone(), "boundary extension", |p| {
            let r = p[0].hypot(p[1]);
            if r == 0.0 {
                0.0
            } else {
                self.boundary.at_angle(p[1].atan2(p[0])) * r * r * r
            }
        })
    }
}

/// Converged (or not) solve outcome.
pub struct SolveReport {
    pub field: ScalarField,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Value of the variant's objective for the returned iterate.
    pub energy: f64,
    /// Signed solves only: the active set kept flipping up to max_iter.
    pub oscillating: bool,
}

/// Near-optimal SOR factor for the 5-point stencil at this resolution.
pub fn omega_auto(n: usize) -> f64 {
    2.0 / (1.0 + (std::f64::consts::PI / n as f64).sin())
}

/// Gauss-Seidel/SOR state. One instance owns its working field.
pub struct PsorSolver {
    spec: Arc<GridSpec>,
    values: Vec<f64>,
    /// |x| at every node.
    forcing: Vec<f64>,
    /// Row-major list of unknowns as (idx, [W, E, S, N]) neighbour indices.
    free: Vec<(u32, [u32; 4])>,
    pub omega: f64,
    variant: Variant,
    sign_flips: usize,
}

const ZERO_SNAP: f64 = 1e-14;

impl PsorSolver {
    pub fn new(problem: &DirichletProblem, omega: Option<f64>) -> Result<PsorSolver> {
        let spec = problem.spec.clone();
        let n = spec.n;
        if problem.variant == Variant::Obstacle {
            let min = problem.boundary.min_value(4096);
            if min < -1e-12 {
                return Err(Error::NegativeBoundaryData(min));
            }
        }
        let init = problem.homogeneous_extension();
        let mut values = init.values;
        let mut forcing = vec![0.0; spec.num_nodes()];
        let mut free = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                let idx = spec.idx(i, j);
                let p = spec.node_pos(i, j);
                forcing[idx] = p[0].hypot(p[1]);
                match spec.class(i, j) {
                    NodeClass::Interior => {
                        free.push((
                            idx as u32,
                            [
                                spec.idx(i - 1, j) as u32,
                                spec.idx(i + 1, j) as u32,
                                spec.idx(i, j - 1) as u32,
                                spec.idx(i, j + 1) as u32,
                            ],
                        ));
                        if problem.variant == Variant::Obstacle {
                            values[idx] = values[idx].max(0.0);
                        }
                    }
                    NodeClass::Band | NodeClass::Exterior => {}
                }
            }
        }
        let omega = omega.unwrap_or_else(|| omega_auto(n));
        assert!(omega > 0.0 && omega < 2.0, "relaxation factor outside (0,2)");
        Ok(PsorSolver { spec, values, forcing, free, omega, variant: problem.variant, sign_flips: 0 })
    }

    /// One lexicographic sweep; returns the largest single-node update.
    pub fn sweep(&mut self) -> f64 {
        let h2 = self.spec.h * self.spec.h;
        let omega = self.omega;
        let mut max_change = 0.0f64;
        let mut flips = 0usize;
        for &(idx, nb) in &self.free {
            let idx = idx as usize;
            let nb_sum = self.values[nb[0] as usize]
                + self.values[nb[1] as usize]
                + self.values[nb[2] as usize]
                + self.values[nb[3] as usize];
            let old = self.values[idx];
            let new = match self.variant {
                Variant::Obstacle => {
                    let gs = (nb_sum - h2 * self.forcing[idx]) / 4.0;
                    (old + omega * (gs - old)).max(0.0)
                }
                Variant::Signed => {
                    // exact 1-d minimizer of the piecewise-quadratic energy
                    let m_plus = (nb_sum - h2 * self.forcing[idx]) / 4.0;
                    let m = if m_plus > 0.0 {
                        m_plus
                    } else {
                        let m_minus = nb_sum / 4.0;
                        if m_minus < 0.0 {
                            m_minus
                        } else {
                            0.0
                        }
                    };
                    let mut relaxed = old + omega * (m - old);
                    // never overshoot across the kink at zero
                    if m == 0.0 || (m > 0.0 && relaxed < 0.0) || (m < 0.0 && relaxed > 0.0) {
                        relaxed = if m == 0.0 { 0.0 } else { 0.0 };
                    }
                    relaxed
                }
            };
            let new = if new.abs() < ZERO_SNAP { 0.0 } else { new };
            if (new > 0.0) != (old > 0.0) {
                flips += 1;
            }
            let change = (new - old).abs();
            if change > max_change {
                max_change = change;
            }
            self.values[idx] = new;
        }
        self.sign_flips = flips;
        max_change
    }

    /// Max complementarity residual over interior nodes.
    /// Obstacle: |min(u, |x| - Δ_h u)|. Signed: distance of Δ_h u to the
    /// admissible forcing set per sign of u.
    pub fn residual(&self) -> f64 {
        let h2 = self.spec.h * self.spec.h;
        let mut worst = 0.0f64;
        for &(idx, nb) in &self.free {
            let idx = idx as usize;
            let lap = (self.values[nb[0] as usize]
                + self.values[nb[1] as usize]
                + self.values[nb[2] as usize]
                + self.values[nb[3] as usize]
                - 4.0 * self.values[idx])
                / h2;
            let r = self.node_residual(self.values[idx], lap, self.forcing[idx]);
            if r.abs() > worst {
                worst = r.abs();
            }
        }
        worst
    }

    fn node_residual(&self, u: f64, lap: f64, f: f64) -> f64 {
        match self.variant {
            Variant::Obstacle => u.min(f - lap),
            Variant::Signed => {
                if u > 0.0 {
                    lap - f
                } else if u < 0.0 {
                    lap
                } else {
                    // Δ_h u must lie in [0, f]
                    (lap - f).max(0.0) + (-lap).max(0.0)
                }
            }
        }
    }

    /// Per-node residual as a field (zero at band and exterior nodes).
    pub fn residual_field(&self) -> ScalarField {
        let mut out = ScalarField::zeros(self.spec.clone(), "complementarity residual");
        let h2 = self.spec.h * self.spec.h;
        for &(idx, nb) in &self.free {
            let idx = idx as usize;
            let lap = (self.values[nb[0] as usize]
                + self.values[nb[1] as usize]
                + self.values[nb[2] as usize]
                + self.values[nb[3] as usize]
                - 4.0 * self.values[idx])
                / h2;
            out.values[idx] = self.node_residual(self.values[idx], lap, self.forcing[idx]);
        }
        out
    }

    /// Lattice energy in the variant's objective scaling.
    /// Obstacle: ½ Σ_edges (Δv)² + h² Σ |x| v.
    /// Signed:     Σ_edges (Δv)² + 2h² Σ |x| v⁺  (the bulk of M).
    pub fn lattice_energy(&self) -> f64 {
        let e = lattice_dirichlet(&self.spec, &self.values) ;
        let mut fterm = 0.0;
        for (idx, class) in (0..self.spec.num_nodes()).map(|k| (k, self.spec.class_at(k))) {
            if class == NodeClass::Exterior {
                continue;
            }
            let v = self.values[idx];
            fterm += self.forcing[idx]
                * match self.variant {
                    Variant::Obstacle => v,
                    Variant::Signed => v.max(0.0),
                };
        }
        let h2 = self.spec.h * self.spec.h;
        match self.variant {
            Variant::Obstacle => 0.5 * e + h2 * fterm,
            Variant::Signed => e + 2.0 * h2 * fterm,
        }
    }

    pub fn field(&self) -> ScalarField {
        ScalarField {
            spec: self.spec.clone(),
            values: self.values.clone(),
            label: "solved".to_string(),
        }
    }

    /// Sweep until the complementarity residual drops below `tol`.
    pub fn solve(&mut self, tol: f64, max_iter: usize) -> SolveReport {
        assert!(tol > 0.0);
        let mut iterations = 0;
        let mut residual = self.residual();
        while residual > tol && iterations < max_iter {
            self.sweep();
            iterations += 1;
            residual = self.residual();
        }
        SolveReport {
            field: self.field(),
            iterations,
            residual,
            converged: residual <= tol,
            energy: self.lattice_energy(),
            oscillating: residual > tol && self.variant == Variant::Signed && self.sign_flips > 0,
        }
    }
}

/// Dirichlet sum Σ (v_a - v_b)² over grid edges with both endpoints stored;
/// a consistent quadrature of ∫ |∇v|² for the 5-point stencil.
pub fn lattice_dirichlet(spec: &GridSpec, values: &[f64]) -> f64 {
    let n = spec.n;
    let mut e = 0.0;
    for j in 0..=n {
        for i in 0..=n {
            if spec.class(i, j) == NodeClass::Exterior {
                continue;
            }
            let v = values[spec.idx(i, j)];
            if i < n && spec.class(i + 1, j) != NodeClass::Exterior {
                let d = values[spec.idx(i + 1, j)] - v;
                e += d * d;
            }
            if j < n && spec.class(i, j + 1) != NodeClass::Exterior {
                let d = values[spec.idx(i, j + 1)] - v;
                e += d * d;
            }
        }
    }
    e
}

/// Bulk of M for an arbitrary field in the same lattice functional the
/// signed solver minimizes: Σ_edges (Δv)² + 2h² Σ |x| v⁺.
pub fn lattice_signed_bulk(field: &ScalarField) -> f64 {
    let spec = &field.spec;
    let mut fterm = 0.0;
    let n = spec.n;
    for j in 0..=n {
        for i in 0..=n {
            if spec.class(i, j) == NodeClass::Exterior {
                continue;
            }
            let p = spec.node_pos(i, j);
            fterm += p[0].hypot(p[1]) * field.value(i, j).max(0.0);
        }
    }
    lattice_dirichlet(spec, &field.values) + 2.0 * spec.h * spec.h * fterm
}

/// Solve the obstacle problem (PSOR with projection onto v >= 0).
pub fn solve_obstacle(
    problem: &DirichletProblem,
    tol: f64,
    max_iter: usize,
    omega: Option<f64>,
) -> Result<SolveReport> {
    assert_eq!(problem.variant, Variant::Obstacle);
    let mut solver = PsorSolver::new(problem, omega)?;
    Ok(solver.solve(tol, max_iter))
}

/// Obstacle solve warm-started from a previous solution's interior values
/// (band values always come from the new boundary data). Used by parameter
/// continuation sweeps.
pub fn solve_obstacle_warm(
    problem: &DirichletProblem,
    tol: f64,
    max_iter: usize,
    omega: Option<f64>,
    init: Option<&ScalarField>,
) -> Result<SolveReport> {
    assert_eq!(problem.variant, Variant::Obstacle);
    let mut solver = PsorSolver::new(problem, omega)?;
    if let Some(field) = init {
        assert_eq!(field.spec.n, problem.spec.n);
        for &(idx, _) in &solver.free {
            solver.values[idx as usize] = field.values[idx as usize].max(0.0);
        }
    }
    Ok(solver.solve(tol, max_iter))
}

/// Minimize ∫(|∇v|² + 2|x| v⁺) at fixed trace (signed competitors).
pub fn solve_signed_mplus(
    problem: &DirichletProblem,
    tol: f64,
    max_iter: usize,
    omega: Option<f64>,
) -> Result<SolveReport> {
    assert_eq!(problem.variant, Variant::Signed);
    let mut solver = PsorSolver::new(problem, omega)?;
    Ok(solver.solve(tol, max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::CatalogSolution;
    use crate::grid::{weight, GridSpec};
    use std::f64::consts::PI;

    fn problem(n: usize, sol: CatalogSolution, scale: f64, variant: Variant) -> DirichletProblem {
        DirichletProblem {
            spec: GridSpec::new(n),
            boundary: BoundaryTrace::Catalog { sol, scale },
            variant,
        }
    }

    #[test]
    fn radial_data_recovers_radial_solution() {
        // positivity never binds: the discrete solution tracks |x|³/9
        for n in [64usize, 128] {
            let p = problem(n, CatalogSolution::full_support(0.0, 0.0).unwrap(), 1.0, Variant::Obstacle);
            let report = solve_obstacle(&p, 1e-10, 50_000, None).unwrap();
            assert!(report.converged);
            let h = p.spec.h;
            let mut max_err = 0.0f64;
            for j in 0..=n {
                for i in 0..=n {
                    if p.spec.class(i, j) == NodeClass::Exterior {
                        continue;
                    }
                    let x = p.spec.node_pos(i, j);
                    let err = (report.field.value(i, j) - weight(x).powi(3) / 9.0).abs();
                    max_err = max_err.max(err);
                }
            }
            assert!(max_err <= 5.0 * h * h, "n={n}: err {max_err} vs {}", 5.0 * h * h);
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let spec = GridSpec::new(64);
        let p = DirichletProblem {
            spec,
            boundary: BoundaryTrace::Tabulated(PolarTrace::from_fn(256, 1.0, |_| 0.0)),
            variant: Variant::Obstacle,
        };
        let report = solve_obstacle(&p, 1e-12, 100, None).unwrap();
        assert!(report.converged && report.iterations <= 1);
        assert!(report.field.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn negative_data_rejected() {
        let spec = GridSpec::new(64);
        let p = DirichletProblem {
            spec,
            boundary: BoundaryTrace::Tabulated(PolarTrace::from_fn(256, 1.0, |t| t.cos())),
            variant: Variant::Obstacle,
        };
        assert!(matches!(solve_obstacle(&p, 1e-8, 10, None), Err(Error::NegativeBoundaryData(_))));
    }

    #[test]
    fn cone_data_error_shrinks_under_refinement() {
        let ustar = CatalogSolution::reference();
        let mut errs = Vec::new();
        for n in [64usize, 128] {
            let p = problem(n, ustar, 1.0, Variant::Obstacle);
            let report = solve_obstacle(&p, 1e-9, 100_000, None).unwrap();
            assert!(report.converged);
            let mut max_err = 0.0f64;
            for j in 0..=n {
                for i in 0..=n {
                    if p.spec.class(i, j) == NodeClass::Exterior {
                        continue;
                    }
                    let x = p.spec.node_pos(i, j);
                    max_err = max_err.max((report.field.value(i, j) - ustar.eval(x)).abs());
                }
            }
            errs.push(max_err);
        }
        assert!(errs[1] < errs[0] / 2.5, "errors {errs:?}");
    }

    #[test]
    fn energy_monotone_across_sweeps() {
        let p = problem(64, CatalogSolution::reference(), 1.3, Variant::Obstacle);
        let mut solver = PsorSolver::new(&p, Some(1.8)).unwrap();
        let mut prev = solver.lattice_energy();
        for _ in 0..60 {
            solver.sweep();
            let e = solver.lattice_energy();
            assert!(e <= prev + 1e-13, "energy rose: {prev} -> {e}");
            prev = e;
        }
    }

    #[test]
    fn signed_energy_monotone_across_sweeps() {
        let trace = PolarTrace::from_fn(512, 1.0, |t| {
            CatalogSolution::single_cone(0.0).boundary_trace(t) - 0.02 * (2.0 * t).cos()
        });
        let p = DirichletProblem {
            spec: GridSpec::new(64),
            boundary: BoundaryTrace::Tabulated(trace),
            variant: Variant::Signed,
        };
        let mut solver = PsorSolver::new(&p, Some(1.7)).unwrap();
        let mut prev = solver.lattice_energy();
        for _ in 0..60 {
            solver.sweep();
            let e = solver.lattice_energy();
            assert!(e <= prev + 1e-13, "energy rose: {prev} -> {e}");
            prev = e;
        }
    }

    #[test]
    fn comparison_principle() {
        let ustar = CatalogSolution::reference();
        let small = solve_obstacle(&problem(64, ustar, 1.0, Variant::Obstacle), 1e-10, 50_000, None).unwrap();
        let large = solve_obstacle(&problem(64, ustar, 1.1, Variant::Obstacle), 1e-10, 50_000, None).unwrap();
        for (a, b) in small.field.values.iter().zip(&large.field.values) {
            assert!(a <= &(b + 1e-9), "{a} > {b}");
        }
    }

    #[test]
    fn residual_map_of_converged_run() {
        let p = problem(64, CatalogSolution::reference(), 1.0, Variant::Obstacle);
        let mut solver = PsorSolver::new(&p, None).unwrap();
        let report = solver.solve(1e-9, 50_000);
        assert!(report.converged);
        let res = solver.residual_field();
        let mut max_res = 0.0f64;
        for j in 0..=64 {
            for i in 0..=64 {
                max_res = max_res.max(res.value(i, j).abs());
            }
        }
        assert!(max_res <= 1e-9);
        // deep inside the zero set the residual is u itself, exactly zero
        let spec = &p.spec;
        let i = ((0.0 + 1.0) / spec.h) as usize;
        let j = ((-0.6 + 1.0) / spec.h) as usize;
        assert_eq!(report.field.value(i, j), 0.0);
        assert_eq!(res.value(i, j), 0.0);
    }

    #[test]
    fn signed_critical_trace_stays_near_cone() {
        // with the trace of h₀ the minimizer is the cone solution itself
        let n = 128;
        let h0 = CatalogSolution::single_cone(0.0);
        let p = problem(n, h0, 1.0, Variant::Signed);
        let report = solve_signed_mplus(&p, 1e-10, 100_000, None).unwrap();
        assert!(report.converged);
        let mut max_dev = 0.0f64;
        for j in 0..=n {
            for i in 0..=n {
                if p.spec.class(i, j) == NodeClass::Exterior {
                    continue;
                }
                let x = p.spec.node_pos(i, j);
                max_dev = max_dev.max((report.field.value(i, j) - h0.eval(x)).abs());
            }
        }
        let h = p.spec.h;
        assert!(max_dev <= 10.0 * h * h, "max deviation {max_dev}");
        // full M = bulk - 3∮g² with ∮g² = π/81 for the cone trace
        let m = report.energy - 3.0 * PI / 81.0;
        assert!((m - PI / 81.0).abs() < 0.02, "M = {m}");
    }

    #[test]
    fn signed_scaled_trace_beats_homogeneous_extension() {
        // competitor bound: the minimizer's lattice energy never exceeds the
        // energy of the admissible homogeneous extension
        let n = 128;
        let delta = 0.2;
        let p = problem(n, CatalogSolution::single_cone(0.0), 1.0 + delta, Variant::Signed);
        let report = solve_signed_mplus(&p, 1e-10, 100_000, None).unwrap();
        assert!(report.converged);
        let competitor = lattice_signed_bulk(&p.homogeneous_extension());
        assert!(report.energy <= competitor + 1e-7, "{} vs {competitor}", report.energy);
        // and the scaled-cone value (π/81)(1-δ²) bounds it after the shared
        // boundary term is subtracted
        let g2 = (1.0 + delta) * (1.0 + delta) * PI / 81.0;
        let m_v = report.energy - 3.0 * g2;
        let m_c = PI / 81.0 * (1.0 - delta * delta);
        assert!(m_v <= m_c + 2e-3, "M_v {m_v} vs closed form {m_c}");
    }

    #[test]
    fn signed_zero_trace() {
        let p = DirichletProblem {
            spec: GridSpec::new(64),
            boundary: BoundaryTrace::Tabulated(PolarTrace::from_fn(128, 1.0, |_| 0.0)),
            variant: Variant::Signed,
        };
        let report = solve_signed_mplus(&p, 1e-12, 100, None).unwrap();
        assert!(report.converged);
        assert!(report.field.values.iter().all(|v| *v == 0.0));
        assert_eq!(report.energy, 0.0);
    }

    #[test]
    fn nondegeneracy_and_growth_on_solved_field() {
        use rand::{Rng, SeedableRng};
        let n = 128;
        let p = problem(n, CatalogSolution::reference(), 1.0, Variant::Obstacle);
        let report = solve_obstacle(&p, 1e-9, 100_000, None).unwrap();
        let field = &report.field;
        let spec = &p.spec;
        let h = spec.h;
        let tau = |x: [f64; 2]| 0.1 * h * h * (h + weight(x));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        // sup over ∂B_r(x0) of u exceeds u(x0) + c r²(r + |x0|) with c > 0
        let mut c_min = f64::INFINITY;
        let mut tested = 0;
        while tested < 100 {
            let x0 = [rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6)];
            if field.interpolate(x0) <= tau(x0) {
                continue;
            }
            let r = rng.gen_range(0.05..0.25);
            if weight(x0) + r > spec.max_interp_radius() {
                continue;
            }
            let mut sup = f64::NEG_INFINITY;
            for k in 0..256 {
                let t = std::f64::consts::TAU * k as f64 / 256.0;
                let q = [x0[0] + r * t.cos(), x0[1] + r * t.sin()];
                sup = sup.max(field.interpolate(q));
            }
            let c = (sup - field.interpolate(x0)) / (r * r * (r + weight(x0)));
            c_min = c_min.min(c);
            tested += 1;
        }
        assert!(c_min > 0.0, "measured nondegeneracy constant {c_min}");
        // growth: u <= C d²(|x0| + d) near the free boundary, C bounded
        let ustar = CatalogSolution::reference();
        let mut growth_c: f64 = 0.0;
        for _ in 0..500 {
            let x = [rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)];
            let u = field.interpolate(x);
            if u <= 0.0 {
                continue;
            }
            let d = ustar.distance_to_zero_set(x).value.max(1e-6);
            growth_c = growth_c.max(u / (d * d * (weight(x) + d)));
        }
        assert!(growth_c.is_finite() && growth_c < 10.0, "growth constant {growth_c}");
    }

    #[test]
    fn rescaled_second_differences_uniformly_bounded() {
        // C^{1,1} uniformity: second differences of u_{0,r} bounded across r
        let n = 256;
        let p = problem(n, CatalogSolution::reference(), 1.0, Variant::Obstacle);
        let report = solve_obstacle(&p, 1e-9, 100_000, None).unwrap();
        let field = &report.field;
        let mut bound: f64 = 0.0;
        for k in 2..=5u32 {
            let r = 0.5f64.powi(k as i32);
            let s = 8.0 * p.spec.h / r; // probe step on the rescaled scale, >= 8h physical
            let mut max2 = 0.0f64;
            for jj in -6..=6 {
                for ii in -6..=6 {
                    let y = [ii as f64 * 0.12, jj as f64 * 0.12];
                    if weight(y) > 0.8 {
                        continue;
                    }
                    let at = |q: [f64; 2]| field.interpolate([r * q[0], r * q[1]]) / (r * r * r);
                    if weight(y) + s > 0.95 {
                        continue;
                    }
                    let dxx = (at([y[0] + s, y[1]]) - 2.0 * at(y) + at([y[0] - s, y[1]])) / (s * s);
                    let dyy = (at([y[0], y[1] + s]) - 2.0 * at(y) + at([y[0], y[1] - s])) / (s * s);
                    max2 = max2.max(dxx.abs().max(dyy.abs()));
                }
            }
            bound = bound.max(max2);
        }
        assert!(bound.is_finite() && bound < 20.0, "second-difference bound {bound}");
    }
}
