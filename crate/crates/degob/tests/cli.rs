//! End-to-end checks of the `degob` binary: solve/analyze round trips,
//! exit codes, output determinism, and SVG re-parsing.

use degob::catalog::CatalogSolution;
use degob::grid::{write_field, GridSpec, ScalarField};
use std::path::Path;
use std::process::Command;

fn degob() -> Command {
    Command::new(env!("CARGO_BIN_EXE_degob"))
}

fn write_solve_config(path: &Path, n: usize) {
    let cfg = serde_json::json!({
        "n": n,
        "tol": 1e-9,
        "max_iter": 200000,
        "variant": "obstacle",
        "seed": 7,
        "boundary": {"type": "catalog", "family": "single_cone", "theta1": 0.5235987755982988}
    });
    std::fs::write(path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
}

#[test]
fn solve_weiss_fb_blowup_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let field = dir.path().join("field.csv");
    write_solve_config(&cfg, 64);

    let status = degob().args(["solve", "--config"]).arg(&cfg).arg("--out").arg(&field).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&field).unwrap();
    assert!(text.starts_with("degob-field v1 n=64"));

    let weiss = dir.path().join("weiss.csv");
    let status = degob()
        .args(["weiss", "--field"])
        .arg(&field)
        .args(["--radii", "auto", "--out"])
        .arg(&weiss)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let weiss_text = std::fs::read_to_string(&weiss).unwrap();
    assert!(weiss_text.starts_with("r,phi,dphi_lhs,dphi_rhs,e"));
    assert!(weiss_text.lines().count() >= 3);

    let curve = dir.path().join("curve.csv");
    let graph = dir.path().join("graph.csv");
    let status = degob()
        .args(["fb", "--field"])
        .arg(&field)
        .arg("--out")
        .arg(&curve)
        .arg("--graph")
        .arg(&graph)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(std::fs::read_to_string(&curve).unwrap().starts_with("x1,x2,nx,ny,side"));
    assert!(std::fs::read_to_string(&graph).unwrap().starts_with("x1,g,gprime,slope_err"));

    let blowup = dir.path().join("blowup.json");
    let status = degob()
        .args(["blowup", "--field"])
        .arg(&field)
        .args(["--x0", "0,0", "--out"])
        .arg(&blowup)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&blowup).unwrap()).unwrap();
    assert_eq!(report["class"], "regular");
}

#[test]
fn epi_subcommand_runs_a_trace_family() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("traces.json");
    let entries = serde_json::json!([
        {"label": "cone", "trace": {"type": "catalog", "family": "single_cone", "theta1": 0.0}},
        {"label": "scaled", "trace": {"type": "scaled_catalog", "scale": 1.2, "family": "single_cone", "theta1": 0.0}},
    ]);
    std::fs::write(&traces, serde_json::to_string(&entries).unwrap()).unwrap();
    let out = dir.path().join("epi.csv");
    let status = degob()
        .args(["epi", "--traces"])
        .arg(&traces)
        .args(["--n", "64", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("label,delta_norm,m_c,m_v,m_h_lattice,kappa,case"));
    assert!(text.contains("cone") && text.contains("scaled"));
    assert!(text.contains("CriticalPoint") && text.contains("BelowReference"));
}

#[test]
fn exit_codes_for_configuration_errors() {
    let status = degob().args(["reproduce", "bogus-id"]).status().unwrap();
    assert_eq!(status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    // n is not a power of two
    std::fs::write(
        &cfg,
        r#"{"n":100,"variant":"obstacle","boundary":{"type":"catalog","family":"single_cone","theta1":0.0}}"#,
    )
    .unwrap();
    let status = degob()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("f.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));

    let status = degob()
        .args(["catalog", "eval", "--family", "nonagon", "--x", "0.1", "--y", "0.1"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn catalog_eval_prints_value_and_gradient() {
    let out = degob()
        .args([
            "catalog", "eval", "--family", "full_support", "--a", "0", "--b", "0", "--x", "0.3",
            "--y", "0.4",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let value: f64 = text
        .lines()
        .find(|l| l.starts_with("value"))
        .and_then(|l| l.split('=').nth(1))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((value - 1.0 / 72.0).abs() < 1e-12);
}

#[test]
fn identical_configs_produce_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write_solve_config(&cfg, 64);
    let f1 = dir.path().join("f1.csv");
    let f2 = dir.path().join("f2.csv");
    for f in [&f1, &f2] {
        let status = degob().args(["solve", "--config"]).arg(&cfg).arg("--out").arg(f).status().unwrap();
        assert_eq!(status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&f1).unwrap(), std::fs::read(&f2).unwrap());
}

#[test]
fn reproduce_list_is_exhaustive() {
    let out = degob().args(["reproduce", "--list"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for id in [
        "thm1.2-energies",
        "catalog-pde-residual",
        "solver-convergence",
        "thm1.4-corner",
        "weiss-monotonicity",
        "classification",
        "epiperimetric",
        "decay-uniqueness",
        "nondegeneracy",
        "directional-monotonicity",
    ] {
        assert!(text.contains(id), "missing {id} in:\n{text}");
    }
}

#[test]
fn svg_curve_lies_on_the_reference_rays() {
    let dir = tempfile::tempdir().unwrap();
    let n = 256;
    let sol = CatalogSolution::reference();
    let field = ScalarField::from_fn(GridSpec::new(n), "ustar", move |p| sol.eval(p));
    let field_path = dir.path().join("field.csv");
    write_field(&field, &field_path).unwrap();
    let svg_path = dir.path().join("plot.svg");
    let status = degob()
        .args(["fb", "--field"])
        .arg(&field_path)
        .arg("--out")
        .arg(dir.path().join("curve.csv"))
        .arg("--svg")
        .arg(&svg_path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    let h = 2.0 / n as f64;
    let sol = CatalogSolution::reference();
    let mut parsed_points = 0usize;
    for line in svg.lines() {
        if !line.contains("polyline id=\"curve-") {
            continue;
        }
        let points = line.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        for pair in points.split_whitespace() {
            let mut it = pair.split(',');
            let x: f64 = it.next().unwrap().parse().unwrap();
            let y: f64 = -it.next().unwrap().parse::<f64>().unwrap();
            let d = sol.distance_to_free_boundary([x, y]);
            assert!(d <= 3.0 * h, "svg point ({x}, {y}) is {d} from the rays");
            parsed_points += 1;
        }
    }
    assert!(parsed_points > 50, "only {parsed_points} polyline points found");
    // zero field: empty positive set is a hard error for fb
    let zero = ScalarField::zeros(GridSpec::new(64), "zero");
    let zero_path = dir.path().join("zero.csv");
    write_field(&zero, &zero_path).unwrap();
    let status = degob()
        .args(["fb", "--field"])
        .arg(&zero_path)
        .arg("--out")
        .arg(dir.path().join("c.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
