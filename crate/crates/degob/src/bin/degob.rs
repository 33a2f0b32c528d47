//! Command-line front end: solve, evaluate, analyze, reproduce.

use clap::{Parser, Subcommand};
use degob::blowup::{classify, ClassifyOptions};
use degob::catalog::CatalogSolution;
use degob::cli::{self, spec_to_polar, SolveConfig, TraceEntry};
use degob::epicheck::VerifyOptions;
use degob::freeboundary::{extract, graph_fit, select_rho, ExtractOptions, GraphOptions};
use degob::grid::{read_field, write_field, GridSpec};
use degob::weiss::WeissAnalyzer;
use degob::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "degob", version, about = "Obstacle-problem laboratory with degenerate forcing |x| on the unit disk")]
struct Cli {
    /// Verbose progress on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a Dirichlet problem described by a JSON config.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a catalog solution and its gradient at a point.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Weiss-energy ladder of a stored field.
    Weiss {
        #[arg(long)]
        field: PathBuf,
        /// "auto" or a comma-separated decreasing list.
        #[arg(long, default_value = "auto")]
        radii: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Blow-up classification at the origin.
    Blowup {
        #[arg(long)]
        field: PathBuf,
        /// Base point; only the origin is supported.
        #[arg(long, default_value = "0,0")]
        x0: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Free-boundary extraction and graph fit.
    Fb {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Verify the energy-improvement inequality for a family of traces.
    Epi {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a reproduction claim (or list them with `--list`).
    Reproduce {
        claim: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        list: bool,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    Eval {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 0.0)]
        theta1: f64,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long, default_value_t = 0.0)]
        b: f64,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::UnknownClaim(_)
        | Error::Json(_)
        | Error::Io(_)
        | Error::FieldFormat(_)
        | Error::InvalidParameters(_)
        | Error::UnsupportedFamily(_)
        | Error::RadiusOutOfRange { .. }
        | Error::PointOutOfRange(..)
        | Error::NotInterior { .. }
        | Error::NegativeBoundaryData(_)
        | Error::NegativeTrace { .. } => 3,
        Error::NonConvergence { .. } | Error::OscillatingActiveSet { .. } => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("DEGOB_THREADS") {
        if let Ok(k) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global();
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn run(cli: Cli) -> degob::Result<u8> {
    let verbose = cli.verbose;
    match cli.command {
        Command::Solve { config, out } => {
            let cfg: SolveConfig = serde_json::from_str(&std::fs::read_to_string(config)?)?;
            if verbose {
                eprintln!("solving n={} variant={} tol={}", cfg.n, cfg.variant, cfg.tol);
            }
            let report = cfg.run()?;
            if verbose {
                eprintln!(
                    "converged in {} sweeps, residual {:.3e}, energy {:.6}",
                    report.iterations, report.residual, report.energy
                );
            }
            write_field(&report.field, &out)?;
            Ok(0)
        }
        Command::Catalog { action } => {
            let CatalogAction::Eval { family, theta1, sigma, a, b, x, y } = action;
            let sol = match family.as_str() {
                "single_cone" => CatalogSolution::single_cone(theta1),
                "double_cone" => CatalogSolution::double_cone(
                    theta1,
                    sigma.ok_or_else(|| Error::Config("double_cone needs --sigma".into()))?,
                )?,
                "triple_cone" => CatalogSolution::triple_cone(theta1),
                "full_support" => CatalogSolution::full_support(a, b)?,
                other => return Err(Error::Config(format!("unknown family `{other}`"))),
            };
            let p = [x, y];
            let g = sol.grad(p);
            println!("value = {}", sol.eval(p));
            println!("grad  = ({}, {})", g[0], g[1]);
            Ok(0)
        }
        Command::Weiss { field, radii, out } => {
            let field = read_field(&field)?;
            let analyzer = WeissAnalyzer::new(&field);
            let radii = if radii == "auto" {
                analyzer.ladder(0.5, 8.0 * field.spec.h)
            } else {
                let parsed: std::result::Result<Vec<f64>, _> =
                    radii.split(',').map(|t| t.trim().parse::<f64>()).collect();
                parsed.map_err(|_| Error::Config(format!("bad radii list `{radii}`")))?
            };
            let report = analyzer.report(&radii, 1e-4)?;
            std::fs::write(&out, cli::weiss_csv(&report))?;
            if verbose {
                eprintln!("phi0 = {} (flagged: {})", report.phi0, report.phi0_flagged);
            }
            Ok(0)
        }
        Command::Blowup { field, x0, out } => {
            let parts: Vec<&str> = x0.split(',').collect();
            let coords: std::result::Result<Vec<f64>, _> =
                parts.iter().map(|t| t.trim().parse::<f64>()).collect();
            let coords = coords.map_err(|_| Error::Config(format!("bad --x0 `{x0}`")))?;
            if coords.len() != 2 || coords[0] != 0.0 || coords[1] != 0.0 {
                return Err(Error::Config("only the origin x0 = 0,0 is supported".into()));
            }
            let field = read_field(&field)?;
            let analyzer = WeissAnalyzer::new(&field);
            let radii = analyzer.ladder(0.5, 8.0 * field.spec.h);
            let result = classify(&field, &radii, &ClassifyOptions::default())?;
            std::fs::write(&out, serde_json::to_string_pretty(&result)?)?;
            if verbose {
                eprintln!("class {:?}, theta1 {:.4}", result.class, result.best_theta1);
            }
            Ok(0)
        }
        Command::Fb { field, out, graph, svg } => {
            let field = read_field(&field)?;
            let curve = extract(&field, &ExtractOptions::default())?;
            std::fs::write(&out, cli::curve_csv(&curve))?;
            if let Some(graph_path) = graph {
                let opts = GraphOptions::default();
                let rho = select_rho(&field, &opts)
                    .ok_or_else(|| Error::ToleranceFailure("no dyadic rho passes slice uniqueness".into()))?;
                let fit = graph_fit(&field, rho, &opts)?;
                std::fs::write(&graph_path, cli::graph_csv(&fit))?;
                if verbose {
                    eprintln!("rho = {rho}, opening angle {:.4}", fit.opening_angle);
                }
            }
            if let Some(svg_path) = svg {
                cli::emit_field_svg(&field, Some(&curve), None, &svg_path)?;
            }
            Ok(0)
        }
        Command::Epi { traces, n, out } => {
            let entries: Vec<TraceEntry> = serde_json::from_str(&std::fs::read_to_string(traces)?)?;
            if !n.is_power_of_two() || !(64..=1024).contains(&n) {
                return Err(Error::Config(format!("n = {n} must be a power of two in [64, 1024]")));
            }
            let spec = GridSpec::new(n);
            let mut resolved = Vec::new();
            for e in &entries {
                resolved.push((e.label.clone(), spec_to_polar(&e.trace, 4096)?));
            }
            let reports = degob::epicheck::kappa_sweep(&resolved, spec, &VerifyOptions::default());
            std::fs::write(&out, cli::epi_csv(&reports))?;
            let rejected = reports.iter().filter(|(_, r)| r.is_err()).count();
            if verbose {
                eprintln!("{} traces, {} rejected", reports.len(), rejected);
            }
            Ok(0)
        }
        Command::Reproduce { claim, out, list } => {
            if list || claim.is_none() {
                for c in cli::claims() {
                    println!("{:<26} {}  [{}]", c.id, c.description, c.reference);
                }
                return Ok(if list { 0 } else { 3 });
            }
            let id = claim.unwrap();
            let out_dir = out.unwrap_or_else(|| cli::default_out_dir(&id));
            let outcome = cli::run_claim(&id, &out_dir)?;
            print!("{}", outcome.render());
            for f in &outcome.files {
                if verbose {
                    eprintln!("wrote {f}");
                }
            }
            Ok(if outcome.passed { 0 } else { 2 })
        }
    }
}
