//! Acceptance suite: runs every reproduction claim at its pinned tolerance
//! and prints one pass/fail line per criterion (visible with --nocapture).
//!
//! Criterion 9 carries a deliberate red sub-check: the printed bisector
//! constant 8√3/81 is arithmetically inconsistent with the defining ratio
//! (1-cos3θ)/(9d²(d+1)), whose exact value at π/3 is 16(2-√3)/27, and with
//! the lower bound the constant certifies. The check is asserted as stated
//! and fails honestly; the claim report carries the full analysis.

use degob::cli;

fn run(id: &str) {
    let dir = tempfile::tempdir().unwrap();
    let outcome = cli::run_claim(id, dir.path()).unwrap();
    print!("{}", outcome.render());
    assert!(outcome.passed, "criterion [{id}] failed:\n{}", outcome.render());
}

#[test]
fn criterion_01_catalog_energies() {
    run("thm1.2-energies");
}

#[test]
fn criterion_02_catalog_pde_residual() {
    run("catalog-pde-residual");
}

#[test]
fn criterion_03_solver_convergence() {
    run("solver-convergence");
}

#[test]
fn criterion_04_free_boundary_corner() {
    run("thm1.4-corner");
}

#[test]
fn criterion_05_weiss_monotonicity() {
    run("weiss-monotonicity");
}

#[test]
fn criterion_06_classification() {
    run("classification");
}

#[test]
fn criterion_07_epiperimetric() {
    run("epiperimetric");
}

#[test]
fn criterion_08_decay_uniqueness() {
    run("decay-uniqueness");
}

#[test]
fn criterion_09_nondegeneracy() {
    run("nondegeneracy");
}

#[test]
fn criterion_10_directional_monotonicity() {
    run("directional-monotonicity");
}

#[test]
fn claim_registry_is_exhaustive() {
    let ids: Vec<&str> = cli::claims().iter().map(|c| c.id).collect();
    assert_eq!(
        ids,
        [
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
        ]
    );
    assert!(cli::find_claim("bogus-id").is_err());
}
