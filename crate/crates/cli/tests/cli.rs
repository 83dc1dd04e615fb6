use std::path::{Path, PathBuf};
use std::process::Command;

use multisym_cli::{
    cmd_classify, cmd_derive, cmd_integrate, cmd_verify, CliError, IntegrateOptions, Model, Status, VerifyOptions,
};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("models")
        .join(format!("{name}.model"))
}

fn load(name: &str) -> Model {
    Model::load(&corpus(name)).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_multisym"))
}

fn status_of(r: &multisym_cli::Report, name: &str) -> Status {
    r.check(name).unwrap_or_else(|| panic!("no check {name}")).status
}

const EXP_MODEL: &str = "[model]\nname = exp\nm = 1\nN = 1\n[lagrangian]\nexpr = exp(v_1_1)\n";

#[test]
fn parse_errors_carry_lines() {
    let cases = [
        ("[model]\nname = a\nm = 4\nN = 1\n[lagrangian]\nexpr = v_1_1\n", 3),
        ("[model]\nname = a\nm = 1\nN = 1\n[lagrangian]\nexpr = v_1_2\n", 6),
        (
            "[model]\nname = a\nm = 1\nN = 1\ncolour = red\n[lagrangian]\nexpr = 1\n",
            5,
        ),
        ("[model]\nname = a\nm = 1\nN = 1\n[lagrangian]\nexpr = (v_1_1\n", 6),
        (
            "[model]\nname = a\nm = 1\nN = 1\n[lagrangian]\nexpr = v_1_1\n[numeric]\nt_end = -1\ninit_phi = 0\n",
            8,
        ),
        (
            "[model]\nname = a\nm = 2\nN = 1\n[lagrangian]\nexpr = v_1_1\n[numeric]\nt_end = 1\ninit_phi = x_1\n",
            9,
        ),
        (
            "[model]\nname = a\nm = 1\nN = 1\n[lagrangian]\nexpr = v_1_1\n[inverse_legendre]\ny_1 = p_1_1\n",
            8,
        ),
    ];
    for (src, want) in cases {
        match Model::parse(src) {
            Err(CliError::Model { line, .. }) => assert_eq!(line, want, "{src}"),
            other => panic!("expected a model error for {src:?}, got {other:?}"),
        }
    }
    assert!(matches!(
        Model::parse("[model]\nname = a\nm = 1\nN = 1\n"),
        Err(CliError::Model { .. })
    ));
}

#[test]
fn corpus_parses() {
    for name in ["oscillator", "free_particle", "affine", "wave", "klein_gordon", "rank1"] {
        let m = load(name);
        assert_eq!(m.name, name);
    }
    let r = load("rank1");
    assert_eq!((r.m, r.n, r.constraints.len()), (2, 1, 1));
    assert!(load("klein_gordon").numeric.is_some());
}

#[test]
fn derive_klein_gordon_hamiltonian() {
    let out = cmd_derive(&load("klein_gordon")).unwrap();
    // ½((p⁰)² − (p¹)²) + ½μ²y² with μ = 1
    assert!(out.contains("H = y_1^2/2 + p_1_1^2/2 - p_1_2^2/2"), "{out}");
    assert!(out.contains("extended operator (freedom 3)"));
}

#[test]
fn derive_oscillator_reduces_to_mechanics() {
    let out = cmd_derive(&load("oscillator")).unwrap();
    assert!(
        out.contains("restricted operator:\n  (∂/∂x_1 + (v_1_1)·∂/∂y_1 + (-y_1)·∂/∂p_1_1)"),
        "{out}"
    );
}

#[test]
fn affine_is_singular_but_has_an_operator() {
    let m = load("affine");
    assert!(cmd_classify(&m).unwrap().contains("classification: singular (rank 0)"));
    let out = cmd_derive(&m).unwrap();
    assert!(out.contains("classification: singular (rank 0)"));
    assert!(
        out.contains("extended operator (freedom 0):\n  (∂/∂x_1 + (v_1_1)·∂/∂y_1)"),
        "{out}"
    );
}

#[test]
fn verify_klein_gordon_all_pass() {
    let r = cmd_verify(&load("klein_gordon"), &VerifyOptions::default()).unwrap();
    assert!(r.all_pass(), "{}", r.render_text());
    for name in [
        "hamiltonian.pullback_theta_h",
        "fieldop.field_equation",
        "fieldop.el_roundtrip",
        "fieldop.hdw_roundtrip",
    ] {
        assert_eq!(status_of(&r, name), Status::Pass);
    }
    let mut names: Vec<&str> = r.checks.iter().map(|c| c.name.as_str()).collect();
    let total = names.len();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), total);
}

#[test]
fn singular_without_constraints_skips_hamiltonian_side() {
    let m = Model::parse("[model]\nname = s\nm = 2\nN = 1\n[lagrangian]\nexpr = (v_1_1 + v_1_2)^2/2\n").unwrap();
    let r = cmd_verify(&m, &VerifyOptions::default()).unwrap();
    assert!(r.all_pass(), "{}", r.render_text());
    for name in [
        "hamiltonian.pullback_theta_h",
        "hamiltonian.pullback_omega_h",
        "hamiltonian.hdw_multivector",
        "hamiltonian.constraints",
    ] {
        assert_eq!(status_of(&r, name), Status::Skipped, "{name}");
    }
    for name in [
        "fieldop.normalization",
        "fieldop.semi_holonomy",
        "fieldop.field_equation",
        "fieldop.freedom_count",
    ] {
        assert_eq!(status_of(&r, name), Status::Pass, "{name}");
    }
}

#[test]
fn wrong_inverse_is_named() {
    let good = Model::parse(&format!("{EXP_MODEL}[inverse_legendre]\nv_1_1 = log(p_1_1)\n")).unwrap();
    let r = cmd_verify(&good, &VerifyOptions::default()).unwrap();
    assert!(r.all_pass(), "{}", r.render_text());
    assert_eq!(
        r.facts.iter().find(|(k, _)| k == "H").unwrap().1,
        "p_1_1*log(p_1_1) - p_1_1"
    );

    let bad = Model::parse(&format!("{EXP_MODEL}[inverse_legendre]\nv_1_1 = p_1_1\n")).unwrap();
    let r = cmd_verify(&bad, &VerifyOptions::default()).unwrap();
    assert_eq!(status_of(&r, "hamiltonian.inverse_roundtrip"), Status::Fail);
    assert!(r.check("hamiltonian.inverse_roundtrip").unwrap().detail.is_some());
    assert!(!r.all_pass());

    let none = Model::parse(EXP_MODEL).unwrap();
    let r = cmd_verify(&none, &VerifyOptions::default()).unwrap();
    assert_eq!(status_of(&r, "hamiltonian.inverse_roundtrip"), Status::Skipped);
}

#[test]
fn constraint_not_on_image_fails_with_witness() {
    let src = std::fs::read_to_string(corpus("affine"))
        .unwrap()
        .replace("p_1_1 - 1", "p_1_1 - 2");
    let r = cmd_verify(&Model::parse(&src).unwrap(), &VerifyOptions::default()).unwrap();
    let c = r.check("hamiltonian.constraints").unwrap();
    assert_eq!(c.status, Status::Fail);
    assert!(c.detail.as_ref().unwrap().contains("c1"));
}

#[test]
fn integrate_oscillator_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let r = cmd_integrate(
        &load("oscillator"),
        &IntegrateOptions {
            out: Some(dir.path().to_path_buf()),
        },
    )
    .unwrap();
    assert!(r.all_pass(), "{}", r.render_text());
    let exact = r.check("numint.exact_solution").unwrap();
    assert!(exact.norms.iter().any(|n| n.name == "final" && n.value < 1e-6));
    let csv = std::fs::read_to_string(dir.path().join("oscillator_coarse.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x_1,y_1"));
    assert_eq!(lines.next(), Some("0,1"));
    assert_eq!(csv.lines().count(), 102);
}

#[test]
fn integrate_needs_numeric_block() {
    let e = cmd_integrate(&load("rank1"), &IntegrateOptions::default()).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert!(e.to_string().contains("no [numeric] block"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = bin().args(["verify"]).arg(corpus("oscillator")).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));

    let bad = dir.path().join("bad.model");
    std::fs::write(&bad, format!("{EXP_MODEL}[inverse_legendre]\nv_1_1 = p_1_1\n")).unwrap();
    let out = bin().arg("verify").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL hamiltonian.inverse_roundtrip"));

    let broken = dir.path().join("broken.model");
    std::fs::write(&broken, "[model]\nname = b\n").unwrap();
    let out = bin().arg("derive").arg(&broken).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));

    let cfl = dir.path().join("cfl.model");
    let src = std::fs::read_to_string(corpus("klein_gordon"))
        .unwrap()
        .replace("dx = 0.005", "dx = 0.01\ndt = 0.02");
    std::fs::write(&cfl, src).unwrap();
    let out = bin().arg("integrate").arg(&cfl).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).to_lowercase().contains("cfl"));

    let m3 = dir.path().join("m3.model");
    std::fs::write(
        &m3,
        "[model]\nname = c\nm = 3\nN = 1\n[lagrangian]\nexpr = v_1_1^2\n[numeric]\nt_end = 1\ndx = 0.1\ninit_phi = 0\n",
    )
    .unwrap();
    let out = bin().arg("integrate").arg(&m3).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn json_report_is_deterministic_and_schematic() {
    let run = || {
        let out = bin()
            .args(["verify", "--seed", "42", "--samples", "64", "--json", "-"])
            .arg(corpus("rank1"))
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        out.stdout
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["schema"], "multisym-report/1");
    assert_eq!(v["seed"], 42);
    assert_eq!(v["samples"], 64);
    let checks = v["checks"].as_array().unwrap();
    assert!(checks
        .iter()
        .all(|c| ["pass", "fail", "skipped"].contains(&c["status"].as_str().unwrap())));
    let skipped = checks.iter().find(|c| c["name"] == "fieldop.el_roundtrip").unwrap();
    assert_eq!(skipped["status"], "skipped");
    assert!(skipped["detail"].is_string());
}
