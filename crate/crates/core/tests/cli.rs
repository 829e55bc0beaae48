use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use libags::data::{make_two_moons, write_candidate_csv, write_labeled_csv};
use libags::SelectionReport;

fn libags(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_libags")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn moons_inputs(dir: &Path) -> (PathBuf, PathBuf) {
    let moons = make_two_moons(40, 0.2, 0.3, 4).unwrap();
    let real = dir.join("real.csv");
    let cand = dir.join("candidates.csv");
    write_labeled_csv(&real, &moons.train).unwrap();
    write_candidate_csv(&cand, &moons.candidates).unwrap();
    (real, cand)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn select_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let (real, cand) = moons_inputs(dir.path());
    let out = dir.path().join("report.json");
    let model = dir.path().join("model.json");
    let scores = dir.path().join("scores.csv");
    let run = libags(&[
        "select", "--real", s(&real), "--candidates", s(&cand), "--out", s(&out),
        "--model-out", s(&model), "--scores-out", s(&scores),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let report = SelectionReport::load_json(&out).unwrap();
    assert_eq!(report.format, "libags-report/1");
    assert_eq!(report.m_hat, report.selected.len());
    assert!(report.metadata.is_some());
    assert!(String::from_utf8_lossy(&run.stdout).contains("m_hat="));
    assert!(model.exists());
    let lines = std::fs::read_to_string(&scores).unwrap().lines().count();
    assert_eq!(lines, report.n_candidates + 1);
}

#[test]
fn reproducible_select_omits_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let (real, cand) = moons_inputs(dir.path());
    let out = dir.path().join("report.json");
    let run = libags(&["select", "--reproducible", "--real", s(&real), "--candidates", s(&cand), "--out", s(&out)]);
    assert_eq!(code(&run), 0);
    assert!(SelectionReport::load_json(&out).unwrap().metadata.is_none());
}

#[test]
fn missing_required_flag_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cand) = moons_inputs(dir.path());
    let run = libags(&["select", "--candidates", s(&cand), "--out", "x.json"]);
    assert_eq!(code(&run), 1);
}

#[test]
fn dimension_mismatch_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let (real, _) = moons_inputs(dir.path());
    let cand = dir.path().join("wide.csv");
    std::fs::write(&cand, "x0,x1,x2,proposed_label\n0,0,0,0\n1,1,1,1\n").unwrap();
    let run = libags(&["select", "--real", s(&real), "--candidates", s(&cand), "--out", s(&dir.path().join("r.json"))]);
    assert_eq!(code(&run), 1);
    assert!(String::from_utf8_lossy(&run.stderr).contains("dimension"));
}

#[test]
fn missing_input_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cand) = moons_inputs(dir.path());
    let run = libags(&["select", "--real", s(&dir.path().join("absent.csv")), "--candidates", s(&cand), "--out", "r.json"]);
    assert_eq!(code(&run), 2);
}

#[test]
fn score_writes_one_row_per_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let (real, cand) = moons_inputs(dir.path());
    let out = dir.path().join("scores.csv");
    let run = libags(&["score", "--real", s(&real), "--candidates", s(&cand), "--out", s(&out)]);
    assert_eq!(code(&run), 0);
    let n_cand = std::fs::read_to_string(&cand).unwrap().lines().count();
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), n_cand);
}

#[test]
fn bench_rejects_unknown_method() {
    let dir = tempfile::tempdir().unwrap();
    let run = libags(&["bench", "--methods", "erm,bogus", "--seeds", "0", "--out", s(dir.path())]);
    assert_eq!(code(&run), 1);
}

#[test]
fn bench_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let run = libags(&["bench", "--methods", "erm,libags", "--seeds", "0", "--out", s(out)]);
        assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    }
    let results = std::fs::read_to_string(a.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 3);
    for name in ["results.csv", "per_seed.csv", "summary.txt"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn demo_writes_its_files_and_depends_on_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("seed7"), dir.path().join("seed8"));
    for (out, seed) in [(&a, "7"), (&b, "8")] {
        let run = libags(&["demo-two-moons", "--seed", seed, "--resolution", "21", "--out", s(out)]);
        assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    }
    for name in ["erm_grid.csv", "libags_grid.csv", "selected.csv", "report.json"] {
        assert!(a.join(name).exists(), "{name}");
    }
    assert_eq!(std::fs::read_to_string(a.join("erm_grid.csv")).unwrap().lines().count(), 21 * 21 + 1);
    assert_ne!(std::fs::read(a.join("report.json")).unwrap(), std::fs::read(b.join("report.json")).unwrap());

    // every selected row is a candidate of the seed-7 pool
    let pool = make_two_moons(100, 0.2, 0.65, 7).unwrap().candidates;
    let report = SelectionReport::load_json(a.join("report.json")).unwrap();
    assert!(report.m_hat > 0);
    let selected = libags::data::load_candidate_csv(a.join("selected.csv"), 2).unwrap();
    assert_eq!(selected.len(), report.m_hat);
    for (i, id) in selected.source_ids.iter().enumerate() {
        let j = pool.source_ids.iter().position(|p| p == id).unwrap();
        assert_eq!(selected.features.row(i), pool.features.row(j), "{id}");
    }
}

#[test]
fn export_grid_round_trips_a_saved_model() {
    let dir = tempfile::tempdir().unwrap();
    let (real, cand) = moons_inputs(dir.path());
    let model = dir.path().join("model.json");
    let run = libags(&[
        "select", "--real", s(&real), "--candidates", s(&cand), "--out", s(&dir.path().join("r.json")),
        "--model-out", s(&model),
    ]);
    assert_eq!(code(&run), 0);
    let grid = dir.path().join("grid.csv");
    let run = libags(&["export-grid", "--model", s(&model), "--resolution", "5", "--x1-min", "-2", "--out", s(&grid)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(std::fs::read_to_string(&grid).unwrap().lines().count(), 26);
}
