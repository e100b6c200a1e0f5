//! End-to-end runs of the workbench binary: generation determinism,
//! report shapes, solver-versus-oracle agreement, and the exit-code
//! contract (0 ok, 2 bound-audit failure, 1 error).

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hubway"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn gen_is_deterministic_per_seed() {
    let a = run(&["gen", "--family", "cluster-tree", "--n", "20", "--seed", "9"]);
    let b = run(&["gen", "--family", "cluster-tree", "--n", "20", "--seed", "9"]);
    let c = run(&["gen", "--family", "cluster-tree", "--n", "20", "--seed", "10"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "same seed must reproduce the same graph");
    assert_ne!(a.stdout, c.stdout, "a different seed should move the edges");
}

#[test]
fn gen_smallest_star_is_a_claw() {
    let out = run(&["gen", "--family", "star-of-stars", "--satellites", "1", "--leaves", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("4 3"));
    // One vertex of degree three, three of degree one.
    let mut deg = [0usize; 4];
    for line in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        deg[f[0].parse::<usize>().unwrap()] += 1;
        deg[f[1].parse::<usize>().unwrap()] += 1;
    }
    let mut deg = deg.to_vec();
    deg.sort_unstable();
    assert_eq!(deg, vec![1, 1, 1, 3]);
}

#[test]
fn gen_grid_16_is_connected_with_two_shortcuts() {
    let out = run(&["gen", "--family", "grid-with-highways", "--n", "16"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<usize> =
        lines.next().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
    let (n, m) = (header[0], header[1]);
    assert_eq!(n, 16);
    // 4x4 grid lattice edges plus the two long shortcuts.
    assert_eq!(m, 2 * 4 * 3 + 2);

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, mut v: usize) -> usize {
        while p[v] != v {
            p[v] = p[p[v]];
            v = p[v];
        }
        v
    }
    let mut shortcuts = 0;
    for line in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        let (u, v) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        let w: f64 = f[2].parse().unwrap();
        if w > 2.0 {
            shortcuts += 1;
        }
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        parent[a] = b;
    }
    assert_eq!(shortcuts, 2, "two highway shortcuts");
    let root = find(&mut parent, 0);
    assert!((0..n).all(|v| find(&mut parent, v) == root), "grid must be connected");
}

#[test]
fn instance_files_round_trip_through_gen() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    let out = bin()
        .args(["gen", "--family", "star-of-stars", "--n", "10", "--problem", "cvr", "--q", "2"])
        .arg("--out")
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&path).unwrap();
    let doc: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["problem"]["kind"], "cvr");
    assert_eq!(doc["defaults"]["seed"], 0);
    // No temporary litter next to the atomic write.
    let litter: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().contains("tmp"))
        .collect();
    assert!(litter.is_empty());
}

fn small_cvr_instance(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("small.json");
    let out = bin()
        .args([
            "gen",
            "--family",
            "star-of-stars",
            "--satellites",
            "2",
            "--leaves",
            "1",
            "--problem",
            "cvr",
            "--q",
            "2",
        ])
        .arg("--out")
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn solve_and_oracle_agree_on_a_small_star() {
    let dir = tempfile::tempdir().unwrap();
    let inst = small_cvr_instance(dir.path());
    let solved = stdout_json(&run(&["solve", inst.to_str().unwrap(), "--problem", "cvr"]));
    let oracle = stdout_json(&run(&["oracle", inst.to_str().unwrap(), "--problem", "cvr"]));
    let a = solved["solution"]["objective"].as_f64().unwrap();
    let b = oracle["optimum"].as_f64().unwrap();
    assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "solve {a} vs oracle {b}");
    assert_eq!(oracle["search_space"], 73, "four free clients");
}

#[test]
fn ptas_with_oracle_reports_a_tight_ratio_on_a_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("triangle.json");
    fs::write(
        &path,
        r#"{"graph": {"n": 3, "edges": [[0,1,1.0],[1,2,1.0],[0,2,1.5]]},
            "problem": {"kind": "cvr", "depots": [0], "capacity": 2, "demands": [0,1,1]}}"#,
    )
    .unwrap();
    let doc = stdout_json(&run(&[
        "ptas",
        path.to_str().unwrap(),
        "--problem",
        "cvr",
        "--eps",
        "0.3",
        "--oracle",
    ]));
    let ratio = doc["oracle"]["ratio"].as_f64().unwrap();
    assert!(ratio <= 1.3 + 1e-9, "ratio {ratio} must be within 1 + eps-hat");
    assert!(ratio >= 1.0 - 1e-9, "an approximation can't beat the optimum");
    let lb = doc["lower_bound"].as_f64().unwrap();
    let obj = doc["solution"]["objective"].as_f64().unwrap();
    assert!(obj + 1e-9 >= lb, "objective {obj} under its lower bound {lb}");
}

#[test]
fn embed_writes_host_and_decomposition_files() {
    let dir = tempfile::tempdir().unwrap();
    let inst = small_cvr_instance(dir.path());
    let host = dir.path().join("host.txt");
    let td = dir.path().join("td.txt");
    let out = bin()
        .args(["embed", inst.to_str().unwrap(), "--mode", "depot", "--depot", "0"])
        .arg("--host-out")
        .arg(&host)
        .arg("--td-out")
        .arg(&td)
        .output()
        .unwrap();
    let doc = stdout_json(&out);
    assert_eq!(doc["clean"], true);
    assert!(doc["width"].as_u64().unwrap() >= 1);

    let host_text = fs::read_to_string(&host).unwrap();
    let header: Vec<usize> = host_text
        .lines()
        .next()
        .unwrap()
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    assert_eq!(header.len(), 2);
    assert!(header[0] >= 5, "host covers at least the original vertices");

    let td_text = fs::read_to_string(&td).unwrap();
    let first: Vec<&str> = td_text.lines().next().unwrap().split_whitespace().collect();
    assert!(first.len() >= 2, "bag_id parent_id v1 v2 ...");
    // The texts are also embedded in the report itself.
    assert_eq!(doc["host_text"].as_str().unwrap(), host_text);
    assert_eq!(doc["td_text"].as_str().unwrap(), td_text);
}

#[test]
fn malformed_instances_exit_one_with_a_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");

    // Truly broken JSON.
    fs::write(&path, "{\"graph\": {\"n\": 2, \"edges\": [[0,1").unwrap();
    let out = run(&["cover", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid JSON"));

    // Well-formed JSON, wrong shape: the pointer names the bad element.
    fs::write(
        &path,
        r#"{"graph": {"n": 3, "edges": [[0,1,1.0],[1,2]]},
            "problem": {"kind": "cvr", "depots": [0], "capacity": 1, "demands": [0,1,1]}}"#,
    )
    .unwrap();
    let out = run(&["cover", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("/graph/edges/1"),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn under_calibrated_distortion_constant_fails_the_audit() {
    // A long unit cycle keeps band hubs off many geodesics, so the host
    // really does overshoot; dividing the corridor allowance by its
    // design constant must then trip the audit and exit 2.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cycle.txt");
    let n = 256;
    let mut text = format!("{n} {n}\n");
    for i in 0..n {
        text.push_str(&format!("{i} {} 1.0\n", (i + 1) % n));
    }
    fs::write(&path, text).unwrap();

    let out = run(&[
        "audit",
        path.to_str().unwrap(),
        "--mode",
        "depot",
        "--depot",
        "0",
        "--eps",
        "8",
        "--c-dist",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2), "under-calibrated audit must exit 2");
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let corridor = &doc["audits"]["corridor"];
    assert_eq!(corridor["clean"], false);
    assert!(corridor["violation_count"].as_u64().unwrap() > 0);
    let first = corridor["violations"][0].as_str().unwrap();
    assert!(first.contains("above allowance"), "worst pair listed: {first}");

    // The same audit at the designed constant is clean.
    let out = run(&[
        "audit",
        path.to_str().unwrap(),
        "--mode",
        "depot",
        "--depot",
        "0",
        "--eps",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn cover_rows_carry_scale_radius_and_hubs() {
    let dir = tempfile::tempdir().unwrap();
    let inst = small_cvr_instance(dir.path());
    let doc = stdout_json(&run(&["cover", inst.to_str().unwrap()]));
    let rows = doc.as_array().expect("array of scales");
    assert!(!rows.is_empty());
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row["i"].as_u64().unwrap() as usize, i);
        assert!(row["r"].as_f64().unwrap() > 0.0);
        assert!(row["hubs"].is_array());
    }
    // Bottom and top scales never need hubs.
    assert_eq!(rows[0]["hubs"].as_array().unwrap().len(), 0);
    assert_eq!(rows[rows.len() - 1]["hubs"].as_array().unwrap().len(), 0);
}

#[test]
fn towns_report_levels_sizes_and_core_hubs() {
    let dir = tempfile::tempdir().unwrap();
    let inst = small_cvr_instance(dir.path());
    let doc = stdout_json(&run(&["towns", inst.to_str().unwrap()]));
    let towns = doc["towns"].as_array().unwrap();
    assert!(!towns.is_empty());
    let root = doc["root"].as_u64().unwrap() as usize;
    assert_eq!(towns[root]["size"].as_u64().unwrap(), 5, "root town holds everything");
    for t in towns {
        assert!(t["size"].as_u64().unwrap() >= 1);
        assert!(t["diameter"].as_f64().unwrap() >= 0.0);
        assert!(t["core_hubs"].is_u64());
        assert!(t["level"].is_u64());
    }
}
