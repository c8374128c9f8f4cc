use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gauss-extremes"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Value column of the single data row.
fn single_value(o: &Output) -> f64 {
    let s = stdout(o);
    let row = s.lines().nth(1).expect("data row");
    row.rsplit(',').next().unwrap().parse().unwrap()
}

#[test]
fn limits_law_prints_inverse_e() {
    let o = run(&["limits", "--law", "2d", "--c", "1", "--r", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0.3678794"));
    assert!((single_value(&o) - (-1.0f64).exp()).abs() < 1e-12);
}

#[test]
fn limits_radial_constant() {
    let o = run(&["limits", "--radial-C", "--lambda", "1", "--r", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((single_value(&o) - 0.5).abs() < 1e-9);
}

#[test]
fn limits_negative_mass_is_config_error() {
    let o = run(&["limits", "--c", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("c = -1"));
}

#[test]
fn limits_grid_from_config_file() {
    let o = run(&["limits", "--config", configs().join("limits.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1 + 15);
    // Flags override the file.
    let o = run(&["limits", "--config", configs().join("limits.toml").to_str().unwrap(), "--c", "1", "--r", "0"]);
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn unknown_config_key_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "[limits]\nmass = 1.0\n").unwrap();
    let o = run(&["limits", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pickands_classical_constants() {
    for (alpha, h) in [("2", 1.0 / std::f64::consts::PI.sqrt()), ("1", 1.0)] {
        let o = run(&["pickands", "--alpha", alpha, "--ladder", "default", "--seed", "5"]);
        assert_eq!(o.status.code(), Some(0));
        let s = stdout(&o);
        assert!(s.starts_with("alpha,a,T,replicates,h_hat,stderr"));
        let last: f64 = s.lines().last().unwrap().split(',').nth(4).unwrap().parse().unwrap();
        assert!(((last - h) / h).abs() <= 0.15, "alpha {alpha}: {last}");
    }
}

#[test]
fn pickands_rejects_alpha_three() {
    assert_eq!(run(&["pickands", "--alpha", "3"]).status.code(), Some(2));
}

#[test]
fn verify_rect_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "verify",
        "--config",
        configs().join("verify_rect.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let gates = std::fs::read_to_string(dir.path().join("gates.csv")).unwrap();
    assert_eq!(gates.lines().count(), 4);
    let rows = std::fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(rows.starts_with("experiment,x,y,mass,u,m,q1,q2,replicates,successes,p_hat"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(json["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(json["passed"], true);
    assert_eq!(json["config"]["experiment"]["replicates"], 20000);
    assert!(json["timestamp_unix"].as_u64().unwrap() > 0);
}

fn small_config(extra_experiment: &str, job: &str) -> String {
    format!(
        r#"
seed = 3
[verify.experiment]
model = {{ alpha1 = 1.0, alpha2 = 1.0 }}
threshold = {{ kind = "area", n = 100.0 }}
grid = {{ kind = "per_unit", k = 2 }}
replicates = 2000
{extra_experiment}
{job}
"#
    )
}

fn verify_with(text: &str, extra: &[&str]) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    let out = dir.path().join("out");
    let mut args = vec!["verify", "--config", p.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (run(&args), dir)
}

#[test]
fn verify_over_memory_cap_is_runtime_failure() {
    let (o, _d) = verify_with(&small_config("memory_cap = 50", "[[verify.rect]]\nx = 1.0\ny = 1.0\n"), &[]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verify_wrong_target_fails_gate() {
    let (o, d) = verify_with(&small_config("", "[[verify.rect]]\nx = 1.0\ny = 1.0\ntarget = 0.05\n"), &[]);
    assert_eq!(o.status.code(), Some(1));
    let gates = std::fs::read_to_string(d.path().join("out/gates.csv")).unwrap();
    assert!(gates.lines().nth(1).unwrap().ends_with(",false"));
}

#[test]
fn verify_csv_independent_of_workers() {
    let text = small_config(
        "",
        "[[verify.rect]]\nx = 1.0\ny = 1.0\n[[verify.ball]]\nx = 0.4\n[[verify.strong]]\nn = 5\nwith = { r = 0.5, field = \"block_independent\" }\nbias = 1.0\n",
    );
    let (a, da) = verify_with(&text, &["--workers", "1"]);
    let (b, db) = verify_with(&text, &["--workers", "3"]);
    assert_eq!(a.status.code(), b.status.code());
    for f in ["gates.csv", "verify.csv"] {
        let x = std::fs::read(da.path().join("out").join(f)).unwrap();
        let y = std::fs::read(db.path().join("out").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn verify_without_section_is_config_error() {
    assert_eq!(run(&["verify"]).status.code(), Some(2));
}

#[test]
fn simulate_writes_readable_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        "--n1",
        "6",
        "--n2",
        "4",
        "--q1",
        "0.5",
        "--construction",
        "strong-mixture",
        "--r",
        "0.3",
        "--seed",
        "9",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let f = std::fs::File::open(dir.path().join("field.bin")).unwrap();
    let sample = gauss_extremes::field::read_field(std::io::BufReader::new(f)).unwrap();
    assert_eq!((sample.grid.n1, sample.grid.n2), (6, 4));
    assert_eq!(sample.seed, 9);
    assert_eq!(sample.construction, gauss_extremes::field::Construction::StrongMixture);
}

#[test]
fn simulate_over_cap_is_runtime_failure() {
    let o = run(&["simulate", "--n1", "100", "--n2", "100", "--memory-cap", "1000"]);
    assert_eq!(o.status.code(), Some(3));
}
