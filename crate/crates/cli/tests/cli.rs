use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symmetra"))
        .args(args)
        .env("SYMMETRA_NO_COLOR", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const TABLE_ONE_LATEX: &str = r"\begin{tabular}{c|ccccc}
$[\cdot,\cdot]$ & $X_{1}$ & $X_{2}$ & $X_{3}$ & $X_{4}$ & $X_{5}$ \\
\hline
$X_{1}$ & $0$ & $0$ & $0$ & $X_{3}$ & $3 X_{1}$ \\
$X_{2}$ & $0$ & $0$ & $0$ & $0$ & $X_{2}$ \\
$X_{3}$ & $0$ & $0$ & $0$ & $0$ & $X_{3}$ \\
$X_{4}$ & $-X_{3}$ & $0$ & $0$ & $0$ & $-2 X_{4}$ \\
$X_{5}$ & $-3 X_{1}$ & $-X_{2}$ & $-X_{3}$ & $2 X_{4}$ & $0$ \\
\end{tabular}
";

#[test]
fn commutator_table_latex_golden() {
    let o = run(&["commutators", "--family", "qzk", "--format", "latex"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), TABLE_ONE_LATEX);
}

#[test]
fn commutator_table_json() {
    let o = run(&["commutators", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["basis"].as_array().unwrap().len(), 5);
    assert_eq!(v["cells"][4][0], "-3*X1");
}

#[test]
fn classify_f_reproduces_the_classification() {
    let o = run(&["classify-f", "--check", "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    let dims: Vec<(u64, bool)> =
        rows.iter().map(|r| (r["dimension"].as_u64().unwrap(), r["infinite"].as_bool().unwrap())).collect();
    assert_eq!(dims, vec![(3, false), (5, false), (5, true), (4, false), (4, false), (4, false), (4, false)]);
    assert!(rows.iter().all(|r| r["status"] == "AGREE"));
}

#[test]
fn phase_base_case() {
    let o = run(&["phase", "--beta", "1", "--gamma", "1", "--u1", "0", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let points = v["points"].as_array().unwrap();
    assert_eq!(points.len(), 2);
    assert_eq!(points[0]["class"], "saddle");
    assert_eq!(points[1]["class"], "centre");
    assert_eq!(v["claims"][0]["status"], "DISPUTE");
}

#[test]
fn phase_csv_trajectory() {
    let o = run(&["phase", "--beta", "1", "--gamma", "1", "--u1", "0", "--format", "csv", "--steps", "100", "--every", "10"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "y,U,V,H");
    assert_eq!(lines.len(), 12);
}

#[test]
fn check_mode_flags_expected_disputes() {
    let o = run(&["adjoint", "--family", "quadratic", "--check"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("EXPECTED-DISPUTE"));
    assert!(!text.contains(" DISAGREE"));
}

#[test]
fn reduce_reports_quadratures() {
    let o = run(&["reduce", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["reduced"]["order"], 3);
    assert_eq!(v["quadratures"].as_array().unwrap().len(), 2);
    assert_eq!(v["quadratures"][1]["constants"], serde_json::json!(["U1", "U0"]));
    let o = run(&["reduce", "--pair", "X4", "X5"]);
    assert!(stdout(&o).contains("y*U_y - U = 0"));
}

#[test]
fn verify_passes_for_catalog_families() {
    for family in ["qzk", "const"] {
        let o = run(&["verify", "--family", family]);
        assert!(o.status.success(), "{}", stdout(&o));
    }
}

#[test]
fn json_output_is_deterministic() {
    let args = ["optimal", "--family", "qzk", "--samples", "60", "--seed", "9", "--format", "json"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["commutators", "--family", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["symmetries", "--family", "power", "--param", "mu=0"]).status.code(), Some(2));
    assert_eq!(run(&["symmetries", "--family", "power", "--param", "kappa=1"]).status.code(), Some(2));
    assert_eq!(run(&["reduce", "--format", "csv"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&["commutators", "--out", "/nonexistent/dir/t.json"]).status.code(), Some(2));
}

#[test]
fn verification_mismatch_exits_with_one() {
    // a coverage threshold above 1 cannot be met
    let o = run(&["optimal", "--family", "qzk", "--samples", "20", "--tol", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn out_writes_file_without_colour() {
    let dir = std::env::temp_dir().join(format!("symmetra-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("t1.txt");
    let o = Command::new(env!("CARGO_BIN_EXE_symmetra"))
        .args(["commutators", "--check", "--out", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("25 agree") && !text.contains('\x1b'));
    std::fs::remove_dir_all(&dir).unwrap();
}
