//! Configuration types, reproduction claims, and report/plot emission for
//! the `degob` command-line front end.
//!
//! Every `reproduce` claim id maps to exactly one acceptance check of the
//! pipeline; `claims()` is the exhaustive list. Reports are CSV/JSON, plots
//! are static SVG, and identical configurations (including seeds) produce
//! byte-identical outputs.

use crate::blowup::{self, ClassifyOptions, EnergyClass};
use crate::catalog::{self, CatalogSolution};
use crate::epicheck::{self, EpiCase, VerifyOptions};
use crate::freeboundary::{
    self, cone_inclusion_check, directional_monotonicity_check, extract, graph_fit, ExtractOptions,
    FieldSource, FreeBoundaryCurve, GraphOptions, WedgeRegion, E_STAR,
};
use crate::grid::{weight, GridSpec, NodeClass, PolarTrace, ScalarField};
use crate::solver::{solve_obstacle, BoundaryTrace, DirichletProblem, SolveReport, Variant};
use crate::weiss::{decay_fit, WeissAnalyzer};
use crate::{Error, Result};
use once_cell::sync::Lazy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

/// Boundary datum descriptor used in config files.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundarySpec {
    Catalog {
        #[serde(flatten)]
        sol: CatalogSolution,
    },
    ScaledCatalog {
        scale: f64,
        #[serde(flatten)]
        sol: CatalogSolution,
    },
    TraceFile {
        path: String,
    },
    Tabulated {
        ntheta: usize,
        #[serde(default = "default_radius")]
        radius: f64,
        values: Vec<f64>,
    },
}

fn default_radius() -> f64 {
    1.0
}

impl BoundarySpec {
    pub fn to_trace(&self) -> Result<BoundaryTrace> {
        Ok(match self {
            BoundarySpec::Catalog { sol } => BoundaryTrace::Catalog { sol: *sol, scale: 1.0 },
            BoundarySpec::ScaledCatalog { scale, sol } => {
                BoundaryTrace::Catalog { sol: *sol, scale: *scale }
            }
            BoundarySpec::TraceFile { path } => {
                let text = std::fs::read_to_string(path)?;
                BoundaryTrace::Tabulated(serde_json::from_str(&text)?)
            }
            BoundarySpec::Tabulated { ntheta, radius, values } => {
                if values.len() != *ntheta {
                    return Err(Error::Config(format!(
                        "tabulated trace has {} values, ntheta = {ntheta}",
                        values.len()
                    )));
                }
                BoundaryTrace::Tabulated(PolarTrace {
                    ntheta: *ntheta,
                    radius: *radius,
                    values: values.clone(),
                })
            }
        })
    }
}

/// Solve configuration (`degob solve --config cfg.json`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveConfig {
    pub n: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// SOR relaxation factor; omitted means the near-optimal value for n.
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default = "default_variant")]
    pub variant: String,
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub seed: u64,
}

fn default_tol() -> f64 {
    1e-8
}
fn default_max_iter() -> usize {
    400_000
}
fn default_variant() -> String {
    "obstacle".into()
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.n.is_power_of_two() || !(64..=1024).contains(&self.n) {
            return Err(Error::Config(format!("n = {} must be a power of two in [64, 1024]", self.n)));
        }
        if self.tol <= 0.0 {
            return Err(Error::Config("tol must be positive".into()));
        }
        if let Some(w) = self.omega {
            if !(0.0 < w && w < 2.0) {
                return Err(Error::Config(format!("omega = {w} outside (0, 2)")));
            }
        }
        if self.variant != "obstacle" && self.variant != "signed" {
            return Err(Error::Config(format!("unknown variant `{}`", self.variant)));
        }
        Ok(())
    }

    pub fn run(&self) -> Result<SolveReport> {
        self.validate()?;
        let variant = if self.variant == "obstacle" { Variant::Obstacle } else { Variant::Signed };
        let problem = DirichletProblem {
            spec: GridSpec::new(self.n),
            boundary: self.boundary.to_trace()?,
            variant,
        };
        let report = match variant {
            Variant::Obstacle => solve_obstacle(&problem, self.tol, self.max_iter, self.omega)?,
            Variant::Signed => {
                crate::solver::solve_signed_mplus(&problem, self.tol, self.max_iter, self.omega)?
            }
        };
        if !report.converged {
            return Err(if report.oscillating {
                Error::OscillatingActiveSet { residual: report.residual, iterations: report.iterations }
            } else {
                Error::NonConvergence { residual: report.residual, iterations: report.iterations }
            });
        }
        Ok(report)
    }
}

/// One named entry of an epi traces file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceEntry {
    pub label: String,
    pub trace: BoundarySpec,
}

/// Resolve a trace descriptor to circle samples.
pub fn spec_to_polar(spec: &BoundarySpec, ntheta: usize) -> Result<PolarTrace> {
    let trace = spec.to_trace()?;
    Ok(match trace {
        BoundaryTrace::Tabulated(t) => t,
        BoundaryTrace::Catalog { .. } => PolarTrace::from_fn(ntheta, 1.0, |t| trace.at_angle(t)),
    })
}

// ---------------------------------------------------------------------------
// shared solves (cached; the acceptance checks reuse them)

type SolveCell = std::sync::Arc<once_cell::sync::OnceCell<&'static SolveReport>>;

static SOLVE_CACHE: Lazy<Mutex<HashMap<String, SolveCell>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Per-key once-cells so concurrent claims block only on the solve they
/// actually need.
fn cached_solve(key: String, build: impl FnOnce() -> Result<SolveReport>) -> Result<&'static SolveReport> {
    let cell = {
        let mut cache = SOLVE_CACHE.lock().unwrap();
        cache.entry(key).or_default().clone()
    };
    cell.get_or_try_init(|| build().map(|report| &*Box::leak(Box::new(report)))).copied()
}

/// Obstacle solve with the reference-cone trace at resolution n.
pub fn reference_solve(n: usize) -> Result<&'static SolveReport> {
    cached_solve(format!("ref-{n}"), || {
        let problem = DirichletProblem {
            spec: GridSpec::new(n),
            boundary: BoundaryTrace::Catalog { sol: CatalogSolution::reference(), scale: 1.0 },
            variant: Variant::Obstacle,
        };
        let report = solve_obstacle(&problem, 1e-8, 400_000, None)?;
        if !report.converged {
            return Err(Error::NonConvergence { residual: report.residual, iterations: report.iterations });
        }
        Ok(report)
    })
}

/// Contact state of the origin for a solved field.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OriginState {
    /// u(0) above the positivity threshold: the membrane lifted off.
    Lifted,
    /// no positive node within the origin band: 0 swallowed by the zero set.
    Interior,
    /// 0 sits on (or within the band of) the free boundary.
    OnBoundary,
}

pub fn origin_state(field: &ScalarField, band_h: f64) -> OriginState {
    let spec = &field.spec;
    let h = spec.h;
    if field.interpolate([0.0, 0.0]) > 0.1 * h * h * h {
        return OriginState::Lifted;
    }
    let n_mid = spec.n / 2;
    let band = band_h.ceil() as i64;
    for dj in -band..=band {
        for di in -band..=band {
            let i = (n_mid as i64 + di) as usize;
            let j = (n_mid as i64 + dj) as usize;
            let p = spec.node_pos(i, j);
            let r = weight(p);
            if r <= band_h * h && field.value(i, j) > 0.1 * h * h * (h + r) {
                return OriginState::OnBoundary;
            }
        }
    }
    OriginState::Interior
}

/// Perturbed-boundary solve that keeps the origin on the free boundary.
///
/// The degenerate contact at 0 is unstable under generic data changes: an
/// amplitude surplus lifts the membrane off the origin, a deficit lets the
/// zero set swallow it. Bisecting the amplitude of an asymmetric two-cone
/// mixture lands between the two regimes; warm-started continuation keeps
/// the sweep count small.
pub fn balanced_perturbed_solve(n: usize, rotation: f64) -> Result<&'static SolveReport> {
    cached_solve(format!("balanced-{n}-{rotation}"), || {
        let g0 = CatalogSolution::reference();
        let grot = CatalogSolution::single_cone(PI / 6.0 + rotation);
        let spec = GridSpec::new(n);
        let band_h = 2.0;
        let solve_at = |s: f64, init: Option<&ScalarField>| -> Result<SolveReport> {
            let trace = PolarTrace::from_fn(4096, 1.0, |t| {
                (1.0 + s) * (0.5 * g0.boundary_trace(t) + 0.5 * grot.boundary_trace(t))
            });
            let problem = DirichletProblem {
                spec: spec.clone(),
                boundary: BoundaryTrace::Tabulated(trace),
                variant: Variant::Obstacle,
            };
            let report = crate::solver::solve_obstacle_warm(&problem, 1e-8, 400_000, None, init)?;
            if !report.converged {
                return Err(Error::NonConvergence {
                    residual: report.residual,
                    iterations: report.iterations,
                });
            }
            Ok(report)
        };
        let mut lo = 0.0f64; // swallowed at the plain mixture amplitude
        let mut hi = 0.6f64;
        let mut current = solve_at(hi, None)?;
        if origin_state(&current.field, band_h) != OriginState::Lifted {
            return Err(Error::ToleranceFailure(
                "amplitude bracket does not lift the membrane at the origin".into(),
            ));
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let report = solve_at(mid, Some(&current.field))?;
            let state = origin_state(&report.field, band_h);
            current = report;
            match state {
                OriginState::OnBoundary => return Ok(current),
                OriginState::Lifted => hi = mid,
                OriginState::Interior => lo = mid,
            }
        }
        Err(Error::ToleranceFailure(
            "amplitude bisection did not localize the free-boundary state at the origin".into(),
        ))
    })
}

// ---------------------------------------------------------------------------
// claims

#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClaimOutcome {
    pub id: String,
    pub reference: String,
    pub passed: bool,
    /// Wall-clock seconds; excluded from the emitted JSON so identical
    /// configurations produce byte-identical reports.
    #[serde(skip)]
    pub elapsed_s: f64,
    pub checks: Vec<CheckRow>,
    #[serde(skip)]
    pub files: Vec<String>,
}

impl ClaimOutcome {
    fn new(id: &str, reference: &str) -> ClaimOutcome {
        ClaimOutcome {
            id: id.into(),
            reference: reference.into(),
            passed: true,
            elapsed_s: 0.0,
            checks: Vec::new(),
            files: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.passed &= passed;
        self.checks.push(CheckRow { name: name.into(), passed, detail });
    }

    /// One human-readable line per check plus the verdict line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(out, "  [{}] {} — {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
        }
        let _ = writeln!(
            out,
            "criterion [{}] {} ({}, {:.1}s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.reference,
            self.elapsed_s
        );
        out
    }
}

pub struct Claim {
    pub id: &'static str,
    pub reference: &'static str,
    pub description: &'static str,
    run: fn(&Path) -> Result<ClaimOutcome>,
}

/// The exhaustive claim list, one per acceptance check.
pub fn claims() -> &'static [Claim] {
    &[
        Claim {
            id: "thm1.2-energies",
            reference: "Lemma 5.4 energy levels",
            description: "quadrature energy of each catalog family matches pi/81, 2pi/81, pi/27",
            run: claim_energies,
        },
        Claim {
            id: "catalog-pde-residual",
            reference: "Theorem 1.2 closed forms",
            description: "finite-difference Laplacian of every family equals |x| on the positivity set",
            run: claim_pde_residual,
        },
        Claim {
            id: "solver-convergence",
            reference: "discrete complementarity system",
            description: "reference-cone recovery at order >= 1.5 with residual <= 1e-8",
            run: claim_solver_convergence,
        },
        Claim {
            id: "thm1.4-corner",
            reference: "Theorem 1.4 and the corner remark",
            description: "extracted free boundary matches the two rays, opening angle and slopes",
            run: claim_corner,
        },
        Claim {
            id: "weiss-monotonicity",
            reference: "Lemma 4.3 monotonicity",
            description: "Phi nondecreasing on the solved field; derivative identity on an analytic field",
            run: claim_weiss,
        },
        Claim {
            id: "classification",
            reference: "Theorem 1.2 with the regular-point energy pi/81",
            description: "blow-up pipeline classifies catalog samples and the solved field",
            run: claim_classification,
        },
        Claim {
            id: "epiperimetric",
            reference: "Theorem 1 epiperimetric inequality",
            description: "first variation, scaled-trace closed form, competitor bound, kappa > 0",
            run: claim_epiperimetric,
        },
        Claim {
            id: "decay-uniqueness",
            reference: "Theorem 1.2un decay and uniqueness rates",
            description: "positive decay and uniqueness rates with ratio near 1/2 on a perturbed solve",
            run: claim_decay,
        },
        Claim {
            id: "nondegeneracy",
            reference: "Lemmas 6.1, 4.1 and the nondegeneracy bound",
            description: "brute-force minimum of the ratio rho, lower bound on random samples",
            run: claim_nondegeneracy,
        },
        Claim {
            id: "directional-monotonicity",
            reference: "Lemmas 7.1 and 7.4",
            description: "wedge monotonicity of the reference cone and cone inclusion on the solved field",
            run: claim_directional,
        },
    ]
}

pub fn find_claim(id: &str) -> Result<&'static Claim> {
    claims().iter().find(|c| c.id == id).ok_or_else(|| Error::UnknownClaim(id.to_string()))
}

/// Run one claim, writing its reports under `out_dir`.
pub fn run_claim(id: &str, out_dir: &Path) -> Result<ClaimOutcome> {
    let claim = find_claim(id)?;
    std::fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let mut outcome = (claim.run)(out_dir)?;
    outcome.elapsed_s = start.elapsed().as_secs_f64();
    let report_path = out_dir.join(format!("claim-{id}.json"));
    std::fs::write(&report_path, serde_json::to_string_pretty(&outcome)?)?;
    outcome.files.push(report_path.display().to_string());
    Ok(outcome)
}

fn write_text(out: &mut ClaimOutcome, path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    out.files.push(path.display().to_string());
    Ok(())
}

fn claim_energies(out_dir: &Path) -> Result<ClaimOutcome> {
    let mut out = ClaimOutcome::new("thm1.2-energies", "Lemma 5.4 energy levels");
    let cases = [
        ("single_cone", CatalogSolution::single_cone(PI / 6.0), catalog::energy_single()),
        ("double_cone", CatalogSolution::double_cone(0.9, 0.8).unwrap(), catalog::energy_double()),
        ("triple_cone", CatalogSolution::triple_cone(0.4), catalog::energy_top()),
        ("full_support", CatalogSolution::full_support(0.05, -0.03).unwrap(), catalog::energy_top()),
    ];
    let mut csv = String::from("family,phi,exact,error\n");
    for (name, sol, exact) in cases {
        let field = ScalarField::from_fn(GridSpec::new(512), name, |p| sol.eval(p));
        let analyzer = WeissAnalyzer::new(&field);
        let phi = analyzer.phi(0.5)?;
        let err = (phi - exact).abs();
        let _ = writeln!(csv, "{name},{phi},{exact},{err}");
        out.check(
            &format!("{name} energy"),
            err <= 2e-3,
            format!("phi = {phi:.7}, exact = {exact:.7}, |err| = {err:.2e} (tol 2e-3)"),
        );
    }
    write_text(&mut out, &out_dir.join("energies.csv"), &csv)?;
    Ok(out)
}

fn claim_pde_residual(out_dir: &Path) -> Result<ClaimOutcome> {
    let mut out = ClaimOutcome::new("catalog-pde-residual", "Theorem 1.2 closed forms");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cases = [
        ("single_cone", CatalogSolution::single_cone(0.7)),
        ("double_cone", CatalogSolution::double_cone(4.0, 0.9).unwrap()),
        ("triple_cone", CatalogSolution::triple_cone(0.2)),
        ("full_support", CatalogSolution::full_support(-0.06, 0.08).unwrap()),
    ];
    let step = 1e-4;
    let mut csv = String::from("family,max_rel_err,samples\n");
    for (name, sol) in cases {
        let mut max_rel: f64 = 0.0;
        let mut count = 0usize;
        while count < 10_000 {
            let p = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let r = weight(p);
            if r < 0.1 || r > 0.98 || sol.eval(p) <= 0.0 || sol.distance_to_zero_set(p).value < 0.05
            {
                continue;
            }
            let lap = (sol.eval([p[0] + step, p[1]])
                + sol.eval([p[0] - step, p[1]])
                + sol.eval([p[0], p[1] + step])
                + sol.eval([p[0], p[1] - step])
                - 4.0 * sol.eval(p))
                / (step * step);
            max_rel = max_rel.max((lap - r).abs() / r);
            count += 1;
        }
        let _ = writeln!(csv, "{name},{max_rel},{count}");
        out.check(
            &format!("{name} residual"),
            max_rel <= 1e-5,
            format!("max relative |Δu - |x||/|x| = {max_rel:.2e} over {count} points (tol 1e-5)"),
        );
    }
    write_text(&mut out, &out_dir.join("pde_residual.csv"), &csv)?;
    Ok(out)
}

fn claim_solver_convergence(out_dir: &Path) -> Result<ClaimOutcome> {
    let mut out = ClaimOutcome::new("solver-convergence", "discrete complementarity system");
    let ustar = CatalogSolution::reference();
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    let mut csv = String::from("n,h,max_err,residual,iterations\n");
    for n in [64usize, 128, 256, 512] {
        let report = reference_solve(n)?;
        let spec = &report.field.spec;
        let mut max_err = 0.0f64;
        for j in 0..=n {
            for i in 0..=n {
                if spec.class(i, j) == NodeClass::Exterior {
                    continue;
                }
                let p = spec.node_pos(i, j);
                max_err = max_err.max((report.field.value(i, j) - ustar.eval(p)).abs());
            }
        }
        let _ = writeln!(csv, "{n},{},{max_err},{},{}", spec.h, report.residual, report.iterations);
        out.check(
            &format!("residual at n={n}"),
            report.residual <= 1e-8,
            format!("complementarity residual {:.2e} after {} sweeps", report.residual, report.iterations),
        );
        errs.push(max_err);
        hs.push(spec.h);
    }
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    out.check(
        "empirical order",
        order >= 1.5,
        format!("max-norm errors {errs:?} give order {order:.2} (need >= 1.5)"),
    );
    write_text(&mut out, &out_dir.join("convergence.csv"), &csv)?;
    Ok(out)
}

fn claim_corner(out_dir: &Path) -> Result<ClaimOutcome> {
    let mut out = ClaimOutcome::new("thm1.4-corner", "Theorem 1.4 and the corner remark");
    let n = 512;
    let h = 2.0 / n as f64;
    let report = reference_solve(n)?;
    let curve = extract(&report.field, &ExtractOptions::default())?;
    let sol = CatalogSolution::reference();
    let hausdorff = freeboundary::hausdorff_to_rays(&curve, &sol, 0.9);
    out.check(
        "Hausdorff distance to the rays",
        hausdorff <= 5.0 * h,
        format!("{hausdorff:.4} vs 5h = {:.4}", 5.0 * h),
    );
    let opts = GraphOptions {
        slices_per_side: 40,
        min_x1_h: 0.02 / h,
        extract: ExtractOptions::default(),
    };
    let fit = graph_fit(&report.field, 0.4, &opts)?;
    out.check(
        "slice uniqueness",
        true,
        format!("{} slices, one crossing each", fit.samples.len()),
    );
    let opening_err = (fit.opening_angle - freeboundary::reference_opening()).abs();
    out.check(
        "opening angle",
        opening_err <= 0.05,
        format!("measured {:.4} rad vs 2π/3 = {:.4} (tol 0.05)", fit.opening_angle, freeboundary::reference_opening()),
    );
    let in_window = |x: f64| (0.02..=0.1).contains(&x.abs());
    let max_right = fit
        .slope_error_right
        .iter()
        .filter(|(x, _)| in_window(*x))
        .map(|(_, e)| *e)
        .fold(0.0f64, f64::max);
    let max_left = fit
        .slope_error_left
        .iter()
        .filter(|(x, _)| in_window(*x))
        .map(|(_, e)| *e)
        .fold(0.0f64, f64::max);
    out.check("right-branch slope", max_right <= 0.05, format!("max |g' - √3/3| = {max_right:.4}"));
    out.check("left-branch slope", max_left <= 0.05, format!("max |g' + √3/3| = {max_left:.4}"));

    let mut curve_csv = String::from("x1,x2,nx,ny,side\n");
    for p in &curve.points {
        let _ = writeln!(
            curve_csv,
            "{},{},{},{},{}",
            p.pos[0],
            p.pos[1],
            p.normal[0],
            p.normal[1],
            format!("{:?}", p.side).to_lowercase()
        );
    }
    write_text(&mut out, &out_dir.join("curve.csv"), &curve_csv)?;
    let mut graph_csv = String::from("x1,g,gprime,slope_err\n");
    let sref = freeboundary::reference_slope();
    for &(x, s) in &fit.slopes {
        let g = fit
            .samples
            .iter()
            .min_by(|a, b| (a.0 - x).abs().total_cmp(&(b.0 - x).abs()))
            .map(|e| e.1)
            .unwrap_or(f64::NAN);
        let err = if x > 0.0 { (s - sref).abs() } else { (s + sref).abs() };
        let _ = writeln!(graph_csv, "{x},{g},{s},{err}");
    }
    write_text(&mut out, &out_dir.join("graph.csv"), &graph_csv)?;
    let svg_path = out_dir.join("corner.svg");
    emit_field_svg(&report.field, Some(&curve), Some((PI / 6.0, 5.0 * PI / 6.0)), &svg_path)?;
    out.files.push(svg_path.display().to_string());
    Ok(out)
}

fn claim_weiss(out_dir: &Path) -> Result<ClaimOutcome> {
    let mut out = ClaimOutcome::new("weiss-monotonicity", "Lemma 4.3 monotonicity");
    let report = reference_solve(512)?;
    let analyzer = WeissAnalyzer::new(&report.field);
    let radii = analyzer.ladder(0.5, 0.125);
    let wreport = analyzer.report(&radii, 1e-4)?;
    let violation = wreport.monotonicity_violation();
    out.check(
        "Phi nondecreasing in r",
        violation <= 1e-4,
        format!("largest violation {violation:.2e} over ladder {radii:?} (slack 1e-4)"),
    );
    let mut csv = String::from("r,phi,dphi_lhs,dphi_rhs,e\n");
    for k in 0..wreport.radii.len() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            wreport.radii[k], wreport.phi[k], wreport.dphi_lhs[k], wreport.dphi_rhs[k], wreport.decay[k]
        );
    }
    write_text(&mut out, &out_dir.join("weiss.csv"), &csv)?;

    // derivative identity on a non-homogeneous analytic field
    let field = ScalarField::from_fn(GridSpec::new(512), "radial+quartic", |p| {
        let q4 = p[0].powi(4) - 6.0 * p[0] * p[0] * p[1] * p[1] + p[1].powi(4);
        weight(p).powi(3) / 9.0 + 0.05 * q4
    });
    let analyzer = WeissAnalyzer::new(&field);
    let (lhs, rhs) = analyzer.phi_derivative_check(0.5, 0.04)?;
    let ratio = lhs / rhs;
    out.check(
        "derivative identity",
        (0.9..=1.1).contains(&ratio) && lhs > 0.0,
        format!("lhs {lhs:.5e}, rhs {rhs:.5e}, ratio {ratio:.3} (need [0.9, 1.1])"),
    );
    Ok(out)
}

fn claim_classification(out_dir: &Path) -> Result<ClaimOutcome> {
    let mut out = ClaimOutcome::new("classification", "Theorem 1.2 with the regular-point energy pi/81");
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let n = 256;
    let h = 2.0 / n as f64;
    let opts = ClassifyOptions::default();
    let mut successes = 0usize;
    let mut csv = String::from("case,family,phi0,class,fit_ok,theta_err\n");
    for case in 0..20 {
        let (truth, label): (CatalogSolution, &str) = match case % 4 {
            0 => (CatalogSolution::single_cone(rng.gen_range(0.0..TAU)), "single_cone"),
            1 => (
                CatalogSolution::double_cone(rng.gen_range(0.0..TAU), rng.gen_range(0.15..1.95))
                    .unwrap(),
                "double_cone",
            ),
            2 => (CatalogSolution::triple_cone(rng.gen_range(0.0..TAU)), "triple_cone"),
            _ => {
                let rr: f64 = rng.gen_range(0.0..0.075);
                let ph: f64 = rng.gen_range(0.0..TAU);
                (CatalogSolution::full_support(rr * ph.cos(), rr * ph.sin()).unwrap(), "full_support")
            }
        };
        let field = ScalarField::from_fn(GridSpec::new(n), label, |p| truth.eval(p));
        let analyzer = WeissAnalyzer::new(&field);
        let radii = analyzer.ladder(0.5, 8.0 * h);
        let result = blowup::classify(&field, &radii, &opts)?;
        let (ok, theta_err) = classification_matches(&truth, &result, 2e-2);
        successes += ok as usize;
        let _ = writeln!(
            csv,
            "{case},{label},{},{:?},{ok},{theta_err}",
            result.phi0, result.class
        );
        if !ok {
            out.check(
                &format!("case {case} ({label})"),
                false,
                format!("misclassified: got {:?} fit {:?}", result.class, result.best),
            );
        }
    }
    out.check(
        "catalog self-classification",
        successes == 20,
        format!("{successes}/20 randomized fields classified with parameters within 2e-2"),
    );
    write_text(&mut out, &out_dir.join("classification.csv"), &csv)?;

    let report = reference_solve(512)?;
    let analyzer = WeissAnalyzer::new(&report.field);
    let radii = analyzer.ladder(0.5, 0.0625);
    let result = blowup::classify(&report.field, &radii, &opts)?;
    let phi0_err = (result.phi0 - catalog::energy_single()).abs();
    out.check(
        "solved field classified regular",
        result.class == EnergyClass::Regular && phi0_err <= 5e-3,
        format!(
            "class {:?}, phi0 = {:.6} vs π/81 = {:.6} (err {phi0_err:.2e}, tol 5e-3), theta1 = {:.4}",
            result.class,
            result.phi0,
            catalog::energy_single(),
            result.best_theta1
        ),
    );
    Ok(out)
}

fn classification_matches(truth: &CatalogSolution, result: &blowup::BlowupResult, tol: f64) -> (bool, f64) {
    let two_thirds = catalog::CONE_OPENING;
    let ang_err = |a: f64, b: f64| {
        let d = catalog::wrap_angle(a - b);
        d.min(TAU - d)
    };
    match (truth, &result.best) {
        (CatalogSolution::SingleCone { theta1 }, Some(CatalogSolution::SingleCone { theta1: fit })) => {
            let e = ang_err(*theta1, *fit);
            (result.class == EnergyClass::Regular && e <= tol, e)
        }
        (
            CatalogSolution::DoubleCone { theta1, sigma },
            Some(CatalogSolution::DoubleCone { theta1: ft, sigma: fs }),
        ) => {
            // relabeling symmetry of the two cones
            let direct = ang_err(*theta1, *ft).max((sigma - fs).abs());
            let swapped = ang_err(theta1 + two_thirds + sigma, *ft)
                .max(((two_thirds - sigma) - fs).abs());
            let e = direct.min(swapped);
            (result.class == EnergyClass::DoubleCone && e <= 2.0 * tol, e)
        }
        (CatalogSolution::TripleCone { theta1 }, Some(CatalogSolution::TripleCone { theta1: ft })) => {
            let d = (theta1 - ft).rem_euclid(two_thirds);
            let e = d.min(two_thirds - d);
            (result.class == EnergyClass::TopEnergy && e <= tol, e)
        }
        (
            CatalogSolution::FullSupport { a, b },
            Some(CatalogSolution::FullSupport { a: fa, b: fb }),
        ) => {
            let e = (a - fa).hypot(b - fb);
            (result.class == EnergyClass::TopEnergy && e <= 1e-2, e)
        }
        _ => (false, f64::NAN),
    }
}

fn claim_epiperimetric(out_dir: &Path) -> Result<ClaimOutcome> {
    let mut out = ClaimOutcome::new("epiperimetric", "Theorem 1 epiperimetric inequality");
    // first variation at the cone trace along admissible smooth directions
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let h0 = CatalogSolution::single_cone(0.0);
    let mut max_dm: f64 = 0.0;
    for _ in 0..5 {
        let c: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let phi = epicheck::cone_supported_direction(c);
        let t_step = 1e-4;
        let plus = PolarTrace::from_fn(2048, 1.0, |t| h0.boundary_trace(t) + t_step * phi(t));
        let minus = PolarTrace::from_fn(2048, 1.0, |t| h0.boundary_trace(t) - t_step * phi(t));
        let dm = (epicheck::reduced_m_signed(&plus) - epicheck::reduced_m_signed(&minus)) / (2.0 * t_step);
        max_dm = max_dm.max(dm.abs());
    }
    out.check("first variation at the cone", max_dm <= 1e-3, format!("max |δM| = {max_dm:.2e}"));

    // scaled-cone closed form
    let delta = 0.2;
    let scaled = PolarTrace::from_fn(4096, 1.0, |t| (1.0 + delta) * h0.boundary_trace(t));
    let m = epicheck::homogeneous_m(&scaled)?;
    let closed = PI / 81.0 * (1.0 - delta * delta);
    out.check(
        "scaled-trace closed form",
        (m - closed).abs() <= 1e-6,
        format!("M((1+δ)h) = {m:.9} vs (π/81)(1-δ²) = {closed:.9}"),
    );

    // kappa sweep over blended traces whose energy gaps are resolvable at
    // this resolution (the gap grows like the cube of the rotation)
    let spec = GridSpec::new(256);
    let rots = [0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60];
    let traces: Vec<(String, PolarTrace)> = rots
        .iter()
        .map(|rot| (format!("blend-{rot}"), epicheck::blended_cone_trace(4096, 0.0, *rot)))
        .collect();
    let opts = VerifyOptions::default();
    let reports = epicheck::kappa_sweep(&traces, spec, &opts);
    let mut csv = String::from("label,delta_norm,m_c,m_v,m_h_lattice,kappa,case\n");
    let mut bound_ok = true;
    let mut improvements = 0usize;
    let mut kappa_pos = true;
    let mut detail = String::new();
    for (label, r) in &reports {
        let r = r.as_ref().map_err(|e| Error::ToleranceFailure(format!("{label}: {e}")))?;
        let _ = writeln!(
            csv,
            "{label},{},{},{},{},{},{:?}",
            r.delta_norm,
            r.m_c,
            r.m_v,
            r.m_h_lattice,
            r.kappa_achieved.unwrap_or(f64::NAN),
            r.case
        );
        bound_ok &= r.m_v <= r.m_c + 1e-7;
        if r.case == EpiCase::Improvement {
            improvements += 1;
            let k = r.kappa_achieved.unwrap();
            kappa_pos &= k > 0.0;
            let _ = write!(detail, "{label}: κ={k:.4} δ={:.3}; ", r.delta_norm);
        }
    }
    out.check("competitor bound", bound_ok, "M_v <= M_c + 1e-7 on every sweep trace".into());
    out.check(
        "kappa positive on improvement rows",
        kappa_pos && improvements > 0,
        format!("{improvements}/{} traces above the cone energy; {detail}", rots.len()),
    );
    write_text(&mut out, &out_dir.join("epi.csv"), &csv)?;
    Ok(out)
}

fn claim_decay(out_dir: &Path) -> Result<ClaimOutcome> {
    let mut out = ClaimOutcome::new("decay-uniqueness", "Theorem 1.2un decay and uniqueness rates");
    let n = 512;
    let report = balanced_perturbed_solve(n, 1.0)?;
    let analyzer = WeissAnalyzer::new(&report.field);
    let radii = analyzer.ladder(0.5, 0.1);
    let wreport = analyzer.report(&radii, 1e-4)?;
    let fit = decay_fit(&wreport, 1e-4);
    out.check(
        "energy decay rate",
        !fit.saturated && fit.rate > 0.0,
        format!(
            "e(r) = Phi(r) - {:.6}: rate {:.3}, kappa {:.4}",
            wreport.phi0, fit.rate, fit.kappa
        ),
    );
    let result = blowup::classify(&report.field, &radii, &ClassifyOptions::default())?;
    let uniq = blowup::uniqueness_rate(&result, 1e-3);
    out.check(
        "trace uniqueness rate",
        uniq.map(|u| u > 0.0).unwrap_or(false),
        format!("l1 distances {:?} give rate {uniq:?}", result.l1_distance),
    );
    if let Some(u) = uniq {
        let ratio = u / fit.rate;
        out.check(
            "exponent ratio",
            (0.35..=0.65).contains(&ratio),
            format!("uniqueness/decay = {u:.3}/{:.3} = {ratio:.3} (ideal 0.5)", fit.rate),
        );
    } else {
        out.check("exponent ratio", false, "uniqueness rate saturated".into());
    }
    let mut csv = String::from("r,phi,e,l1\n");
    for k in 0..radii.len() {
        let _ = writeln!(csv, "{},{},{},{}", radii[k], wreport.phi[k], wreport.decay[k], result.l1_distance[k]);
    }
    write_text(&mut out, &out_dir.join("decay.csv"), &csv)?;
    Ok(out)
}

fn claim_nondegeneracy(out_dir: &Path) -> Result<ClaimOutcome> {
    let mut out = ClaimOutcome::new("nondegeneracy", "Lemmas 6.1, 4.1 and the nondegeneracy bound");
    let bisector = catalog::rho(PI / 3.0);
    let printed = 8.0 * 3f64.sqrt() / 81.0;
    let defining = 16.0 * (2.0 - 3f64.sqrt()) / 27.0;
    out.check(
        "rho(pi/3) equals the printed constant 8*sqrt(3)/81",
        (bisector - printed).abs() <= 1e-12,
        format!(
            "the defining ratio (1-cos3θ)/(9d²(d+1)) with d = sin(π/3) evaluates to \
             16(2-√3)/27 = {defining:.12}, not {printed:.12}; the printed constant is \
             inconsistent with the ratio's own definition (it would also violate the lower \
             bound it certifies, since u = 2/9 < {printed:.4}·d²(1+d) at the bisector). \
             Computed rho(π/3) = {bisector:.12}."
        ),
    );
    out.check(
        "brute-force minimum reproduces the bisector ratio",
        (catalog::nondegeneracy_constant() - defining).abs() <= 1e-12,
        format!("C* = {:.15} vs closed form {defining:.15}", catalog::nondegeneracy_constant()),
    );
    out.check(
        "endpoint limit",
        (catalog::rho(1e-6) - 0.5).abs() <= 1e-5,
        format!("rho(0+) -> {:.8} (limit 1/2)", catalog::rho(1e-6)),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let sol = CatalogSolution::single_cone(PI / 6.0);
    let mut pts = Vec::with_capacity(10_000);
    while pts.len() < 10_000 {
        let p = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        if weight(p) <= 1.0 {
            pts.push(p);
        }
    }
    let lb = catalog::lower_bound_check(&sol, &pts)?;
    out.check(
        "lower bound on random samples",
        lb.min_ratio >= 1.0 - 1e-12,
        format!("min u / (C d²(|x|+d)) = {:.15} over {} points", lb.min_ratio, lb.samples),
    );

    // measured nondegeneracy constant on the solved field across dyadic radii
    let report = reference_solve(256)?;
    let field = &report.field;
    let h = field.spec.h;
    let tau = |p: [f64; 2]| 0.1 * h * h * (h + weight(p));
    let mut csv = String::from("r,c_measured\n");
    let mut all_positive = true;
    for k in 2..=4u32 {
        let r = 0.5f64.powi(k as i32);
        let mut c_min = f64::INFINITY;
        let mut found = 0;
        while found < 40 {
            let x0 = [rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6)];
            if field.interpolate(x0) <= tau(x0) || weight(x0) + r > field.spec.max_interp_radius() {
                continue;
            }
            let mut sup = f64::NEG_INFINITY;
            for kt in 0..256 {
                let t = TAU * kt as f64 / 256.0;
                sup = sup.max(field.interpolate([x0[0] + r * t.cos(), x0[1] + r * t.sin()]));
            }
            c_min = c_min.min((sup - field.interpolate(x0)) / (r * r * (r + weight(x0))));
            found += 1;
        }
        let _ = writeln!(csv, "{r},{c_min}");
        all_positive &= c_min > 0.0;
    }
    out.check("measured constant positive across dyadic radii", all_positive, csv.replace('\n', "; "));
    write_text(&mut out, &out_dir.join("nondegeneracy.csv"), &csv)?;
    Ok(out)
}

fn claim_directional(out_dir: &Path) -> Result<ClaimOutcome> {
    let mut out = ClaimOutcome::new("directional-monotonicity", "Lemmas 7.1 and 7.4");
    let sol = CatalogSolution::reference();
    let source = FieldSource::Catalog(&sol);
    let region = WedgeRegion {
        theta_lo: PI / 6.0 + 1e-9,
        theta_hi: PI / 6.0 + 0.05,
        r_lo: 0.1,
        r_hi: 1.0,
    };
    let wedge = directional_monotonicity_check(&source, E_STAR, 1.0 / 20.0, &region, 1e-6);
    out.check(
        "wedge monotonicity",
        wedge.min_value >= -1e-6,
        format!("min of (1/20)∂_e u - u = {:.3e} over {} samples", wedge.min_value, wedge.samples),
    );

    let n = 512;
    let report = reference_solve(n)?;
    let h = 2.0 / n as f64;
    let curve = extract(&report.field, &ExtractOptions::default())?;
    let mut right: Vec<&freeboundary::CurvePoint> = curve
        .points
        .iter()
        .filter(|p| p.side == freeboundary::Side::Right && (0.15..=0.4).contains(&weight(p.pos)))
        .collect();
    right.sort_by(|a, b| weight(a.pos).total_cmp(&weight(b.pos)));
    let stride = (right.len() / 10).max(1);
    let picked: Vec<_> = right.iter().step_by(stride).take(10).collect();
    let opts = ExtractOptions::default();
    let grid_source = FieldSource::Grid(&report.field);
    let mut csv = String::from("x0_1,x0_2,backward_max,forward_min,tau\n");
    let mut all_ok = picked.len() == 10;
    for pt in &picked {
        let r = weight(pt.pos) / 2.0;
        let rep = cone_inclusion_check(&grid_source, pt.pos, 0.5, r, r / 2.0, &opts, h);
        let ok = rep.backward_max <= rep.tau_at_x0 && rep.forward_min > 0.0;
        all_ok &= ok;
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            pt.pos[0], pt.pos[1], rep.backward_max, rep.forward_min, rep.tau_at_x0
        );
    }
    out.check(
        "cone inclusion at free-boundary points",
        all_ok,
        format!("{} points: backward <= tau, forward > 0", picked.len()),
    );
    write_text(&mut out, &out_dir.join("cone_inclusion.csv"), &csv)?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// SVG emission

/// Static SVG: positive set shaded, free-boundary polylines, reference rays.
pub fn emit_field_svg(
    field: &ScalarField,
    curve: Option<&FreeBoundaryCurve>,
    rays: Option<(f64, f64)>,
    path: &Path,
) -> Result<()> {
    let spec = &field.spec;
    let n = spec.n;
    let h = spec.h;
    let opts = ExtractOptions::default();
    let mut svg = String::new();
    svg.push_str(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-1.1 -1.1 2.2 2.2\" width=\"640\" height=\"640\">\n",
    );
    svg.push_str("<circle cx=\"0\" cy=\"0\" r=\"1\" fill=\"none\" stroke=\"#888\" stroke-width=\"0.006\"/>\n");
    // shaded positive set, downsampled
    let stride = (n / 128).max(1);
    let cell = stride as f64 * h;
    svg.push_str("<g fill=\"#aecbe8\" stroke=\"none\">\n");
    for j in (0..=n).step_by(stride) {
        for i in (0..=n).step_by(stride) {
            if spec.class(i, j) == NodeClass::Exterior {
                continue;
            }
            let p = spec.node_pos(i, j);
            if field.value(i, j) > opts.tau(h, p) {
                let _ = writeln!(
                    svg,
                    "<rect x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\"/>",
                    p[0] - 0.5 * cell,
                    -p[1] - 0.5 * cell
                );
            }
        }
    }
    svg.push_str("</g>\n");
    if let Some((t1, t2)) = rays {
        for (k, t) in [t1, t2].into_iter().enumerate() {
            let _ = writeln!(
                svg,
                "<line id=\"ray-{k}\" x1=\"0\" y1=\"0\" x2=\"{}\" y2=\"{}\" stroke=\"#c33\" stroke-width=\"0.005\" stroke-dasharray=\"0.03,0.02\"/>",
                t.cos(),
                -t.sin()
            );
        }
    }
    if let Some(curve) = curve {
        for (side, id) in [
            (freeboundary::Side::Right, "curve-right"),
            (freeboundary::Side::Left, "curve-left"),
            (freeboundary::Side::NearOrigin, "curve-origin"),
        ] {
            let mut pts: Vec<[f64; 2]> = curve
                .points
                .iter()
                .filter(|p| p.side == side)
                .map(|p| p.pos)
                .collect();
            if pts.is_empty() {
                continue;
            }
            pts.sort_by(|a, b| weight(*a).total_cmp(&weight(*b)));
            let coords: Vec<String> = pts.iter().map(|p| format!("{},{}", p[0], -p[1])).collect();
            let _ = writeln!(
                svg,
                "<polyline id=\"{id}\" fill=\"none\" stroke=\"#000\" stroke-width=\"0.006\" points=\"{}\"/>",
                coords.join(" ")
            );
        }
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// CSV writers shared by the binary

pub fn weiss_csv(report: &crate::weiss::WeissReport) -> String {
    let mut csv = String::from("r,phi,dphi_lhs,dphi_rhs,e\n");
    for k in 0..report.radii.len() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            report.radii[k], report.phi[k], report.dphi_lhs[k], report.dphi_rhs[k], report.decay[k]
        );
    }
    csv
}

pub fn curve_csv(curve: &FreeBoundaryCurve) -> String {
    let mut csv = String::from("x1,x2,nx,ny,side\n");
    for p in &curve.points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            p.pos[0],
            p.pos[1],
            p.normal[0],
            p.normal[1],
            format!("{:?}", p.side).to_lowercase()
        );
    }
    csv
}

pub fn graph_csv(fit: &freeboundary::GraphFit) -> String {
    let sref = freeboundary::reference_slope();
    let mut csv = String::from("x1,g,gprime,slope_err\n");
    for &(x, s) in &fit.slopes {
        let g = fit
            .samples
            .iter()
            .min_by(|a, b| (a.0 - x).abs().total_cmp(&(b.0 - x).abs()))
            .map(|e| e.1)
            .unwrap_or(f64::NAN);
        let err = if x > 0.0 { (s - sref).abs() } else { (s + sref).abs() };
        let _ = writeln!(csv, "{x},{g},{s},{err}");
    }
    csv
}

pub fn epi_csv(reports: &[(String, Result<epicheck::EpiReport>)]) -> String {
    let mut csv = String::from("label,delta_norm,m_c,m_v,m_h_lattice,kappa,case\n");
    for (label, r) in reports {
        match r {
            Ok(r) => {
                let _ = writeln!(
                    csv,
                    "{label},{},{},{},{},{},{:?}",
                    r.delta_norm,
                    r.m_c,
                    r.m_v,
                    r.m_h_lattice,
                    r.kappa_achieved.unwrap_or(f64::NAN),
                    r.case
                );
            }
            Err(e) => {
                let _ = writeln!(csv, "{label},rejected: {e},,,,,");
            }
        }
    }
    csv
}

/// Where reproduce claims place their artifacts by default.
pub fn default_out_dir(id: &str) -> PathBuf {
    PathBuf::from("degob-out").join(id)
}
