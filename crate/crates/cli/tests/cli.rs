use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ghgeo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ghgeo"))
        .args(args)
        .env_remove("GH_THREADS")
        .output()
        .expect("spawn ghgeo")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn dist(v: &Value) -> Vec<Vec<f64>> {
    serde_json::from_value(v["dist"].clone()).unwrap()
}

struct Fixture {
    dir: TempDir,
    line3: PathBuf,
    two: PathBuf,
    four: PathBuf,
}

fn fixture() -> Fixture {
    let dir = TempDir::new().unwrap();
    let line3 = write(&dir, "line3.csv", "0,1,2\n1,0,1\n2,1,0\n");
    let two = write(&dir, "two.csv", "0,2\n2,0\n");
    let four = write(&dir, "four.json", r#"{"dist": [[0, 4], [4, 0]]}"#);
    Fixture { dir, line3, two, four }
}

#[test]
fn validate_accepts_metric() {
    let f = fixture();
    let o = ghgeo(&["validate", s(&f.line3)]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "PASS n=3 diam=2");
}

#[test]
fn validate_reports_triangle_violation() {
    let f = fixture();
    let bad = write(&f.dir, "bad.csv", "0,1,3\n1,0,1\n3,1,0\n");
    let o = ghgeo(&["validate", s(&bad)]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout(&o).trim(), "TriangleViolation(0,2,1 slack=1)");
}

#[test]
fn validate_io_and_parse_errors_exit_2() {
    let f = fixture();
    let o = ghgeo(&["validate", s(&f.dir.path().join("missing.csv"))]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());

    let junk = write(&f.dir, "junk.csv", "0,1\n1,zero\n");
    let o = ghgeo(&["validate", s(&junk)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains('2'), "diagnostic names the line");
}

#[test]
fn gh_identical_files_is_zero() {
    let f = fixture();
    let o = ghgeo(&["gh", s(&f.line3), s(&f.line3)]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["distance"], 0.0);
    assert_eq!(v["exact"], true);
}

#[test]
fn gh_two_point_pair_all_modes() {
    let f = fixture();
    for mode in ["exact", "brute"] {
        let o = ghgeo(&["gh", s(&f.two), s(&f.four), "--mode", mode]);
        assert_eq!(code(&o), 0, "{mode}");
        let v = json(&o);
        assert_eq!(v["distance"], 1.0);
        assert_eq!(v["exact"], true);
        assert!(v["certificate"].is_object());
    }
}

#[test]
fn gh_net_mode_with_large_eps() {
    let f = fixture();
    let o = ghgeo(&["gh", s(&f.line3), s(&f.four), "--mode", "net", "--eps", "10"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["distance"], 0.0);
    assert_eq!(v["error_bar"], 20.0);
    assert_eq!(v["net_x"].as_array().unwrap().len(), 1);

    let o = ghgeo(&["gh", s(&f.line3), s(&f.four), "--mode", "net"]);
    assert_eq!(code(&o), 1, "net mode without --eps");
}

#[test]
fn gh_budget_exhaustion_exits_3() {
    let f = fixture();
    let a = ghgeo(&["generate", "--n", "7", "--seed", "1", "--out", s(&f.dir.path().join("a.json"))]);
    let b = ghgeo(&["generate", "--n", "7", "--seed", "2", "--out", s(&f.dir.path().join("b.json"))]);
    assert_eq!((code(&a), code(&b)), (0, 0));
    let o = ghgeo(&[
        "gh",
        s(&f.dir.path().join("a.json")),
        s(&f.dir.path().join("b.json")),
        "--budget",
        "1",
        "--no-seed",
    ]);
    let v = json(&o);
    if v["exact"] == false {
        assert_eq!(code(&o), 3);
        assert!(v["certificate"].is_null());
        assert!(v["lower"].as_f64().unwrap() <= v["upper"].as_f64().unwrap());
    } else {
        assert_eq!(code(&o), 0);
    }
}

#[test]
fn geodesic_endpoints_and_midpoint() {
    let f = fixture();
    let o = ghgeo(&["geodesic", s(&f.line3), s(&f.four), "--t", "0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(dist(&json(&o)), vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]);

    let o = ghgeo(&["geodesic", s(&f.two), s(&f.four), "--t", "0.5"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(dist(&v), vec![vec![0.0, 3.0], vec![3.0, 0.0]]);
    assert_eq!(v["provenance"]["t"], 0.5);

    let out = f.dir.path().join("many.json");
    let o = ghgeo(&["geodesic", s(&f.two), s(&f.four), "--t", "0,1", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert_eq!(dist(&v[1]), vec![vec![0.0, 4.0], vec![4.0, 0.0]]);
}

#[test]
fn geodesic_report() {
    let f = fixture();
    let csv = f.dir.path().join("cells.csv");
    let o = ghgeo(&["geodesic", s(&f.line3), s(&f.four), "--times", "0,0.5,1", "--csv", s(&csv)]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!(v["max_deviation"].as_f64().unwrap() <= 1e-9);
    let cells = v["cells"].as_array().unwrap().len();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "s,t,computed,target,exact");
    assert_eq!(text.lines().count(), cells + 1);
}

#[test]
fn geodesic_with_supplied_correspondence() {
    let f = fixture();
    let good = write(&f.dir, "r.json", r#"{"pairs":[[0,0],[1,1]],"left_size":2,"right_size":2}"#);
    let o = ghgeo(&["geodesic", s(&f.two), s(&f.four), "--times", "0,1", "--correspondence", s(&good)]);
    assert_eq!(code(&o), 0);

    let partial = write(&f.dir, "p.json", r#"{"pairs":[[0,0]],"left_size":2,"right_size":2}"#);
    let o = ghgeo(&["geodesic", s(&f.two), s(&f.four), "--correspondence", s(&partial)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn geodesic_rejects_suboptimal_correspondence() {
    let f = fixture();
    let far = write(&f.dir, "far.csv", "0,1,9\n1,0,9\n9,9,0\n");
    // Sends the isolated point to the close pair: valid but not optimal.
    let r = write(&f.dir, "r.json", r#"{"pairs":[[0,2],[1,2],[2,0],[2,1]],"left_size":3,"right_size":3}"#);
    let o = ghgeo(&["geodesic", s(&far), s(&far), "--times", "0,1", "--correspondence", s(&r)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn generate_is_deterministic_and_valid() {
    let a = ghgeo(&["generate", "--kind", "euclidean", "--n", "5", "--dim", "2", "--seed", "7"]);
    let b = ghgeo(&["generate", "--kind", "euclidean", "--n", "5", "--dim", "2", "--seed", "7"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);

    let f = fixture();
    for (kind, format, name) in [("euclidean", "csv", "e.csv"), ("perturbed-ultrametric", "json", "u.json")] {
        let p = f.dir.path().join(name);
        let o = ghgeo(&["generate", "--kind", kind, "--n", "6", "--seed", "3", "--format", format, "--out", s(&p)]);
        assert_eq!(code(&o), 0);
        let o = ghgeo(&["--tol", "1e-12", "validate", s(&p)]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
    }

    let one = ghgeo(&["generate", "--n", "1"]);
    assert_eq!(dist(&json(&one)), vec![vec![0.0]]);

    let zero = ghgeo(&["generate", "--n", "0"]);
    assert_eq!(code(&zero), 1);
}

#[test]
fn generated_csv_round_trips_bit_exact() {
    let f = fixture();
    let csv = f.dir.path().join("g.csv");
    let js = f.dir.path().join("g.json");
    ghgeo(&["generate", "--n", "6", "--seed", "11", "--format", "csv", "--out", s(&csv)]);
    ghgeo(&["generate", "--n", "6", "--seed", "11", "--format", "json", "--out", s(&js)]);
    let from_json: Value = serde_json::from_str(&std::fs::read_to_string(&js).unwrap()).unwrap();
    let from_csv: Vec<Vec<f64>> = std::fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    let a = dist(&from_json);
    for (ra, rb) in a.iter().zip(&from_csv) {
        for (x, y) in ra.iter().zip(rb) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

#[test]
fn solver_output_is_deterministic_except_timing() {
    let f = fixture();
    let a = f.dir.path().join("a.json");
    let b = f.dir.path().join("b.json");
    ghgeo(&["generate", "--n", "5", "--seed", "21", "--out", s(&a)]);
    ghgeo(&["generate", "--kind", "perturbed-ultrametric", "--n", "5", "--seed", "22", "--out", s(&b)]);
    let strip = |o: &Output| {
        let mut v = json(o);
        v.as_object_mut().unwrap().remove("ms");
        v
    };
    let first = ghgeo(&["gh", s(&a), s(&b), "--no-seed"]);
    let second = ghgeo(&["gh", s(&a), s(&b), "--no-seed"]);
    assert_eq!(strip(&first), strip(&second));

    let threaded = ghgeo(&["--threads", "4", "gh", s(&a), s(&b), "--no-seed"]);
    assert_eq!(json(&threaded)["distance"], json(&first)["distance"]);
}

#[test]
fn experiment_outputs() {
    let f = fixture();
    let csv = f.dir.path().join("exp.csv");
    let o = ghgeo(&["experiment", s(&f.line3), s(&f.four), "--schedule", "0.5", "--csv", s(&csv)]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let two_dgh = 2.0 * v["dgh"].as_f64().unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "eps,net_x,net_y,dis_Rn,two_dgh,dH_to_final,lemma_bound");
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row[3], two_dgh);
    assert!(lines.next().is_none());

    let o = ghgeo(&["experiment", s(&f.line3), s(&f.four), "--schedule", "1,0.8,0.3"]);
    assert_eq!(code(&o), 0);
    let final_dis = json(&o)["final_distortion"].as_f64().unwrap();
    for step in json(&o)["steps"].as_array().unwrap() {
        let dis = step["distortion"].as_f64().unwrap();
        let bound = step["lemma_bound"].as_f64().unwrap();
        assert!((dis - final_dis).abs() <= bound + 1e-9);
    }

    let o = ghgeo(&["experiment", s(&f.line3), s(&f.four), "--schedule", "0.5,0.9"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("ScheduleNotDecreasing"));
}
