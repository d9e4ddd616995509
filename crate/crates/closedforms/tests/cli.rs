use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_closedforms"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("closedforms-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write(name: &str, text: &str) -> PathBuf {
    let p = scratch(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const DIM14: &str = r#"{"real_blocks":[{"size":3,"eig":"1"},{"size":2,"eig":"-1"}],
"complex_blocks":[{"half_size":4,"re":"0","im":"1"}]}"#;

#[test]
fn analyze_marks_the_example_table() {
    let spec = write("a14.json", DIM14);
    let o = run(&["analyze", spec.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((v["N"].as_u64(), v["D"].as_u64()), (Some(13), Some(14)));
    for row in v["existence"].as_array().unwrap() {
        if [6, 8, 10, 12, 14].contains(&row["rank"].as_u64().unwrap()) {
            assert_eq!(row["formula"], true);
        }
    }
    assert_eq!(v["symplectic"]["admissible"], true);
}

#[test]
fn analyze_small_and_abelian() {
    let spec = write("j2.json", r#"{"real_blocks":[{"size":2,"eig":"0"}]}"#);
    let o = run(&["analyze", "--oracle", spec.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["D"], 3);
    let ranks: Vec<u64> = v["existence"].as_array().unwrap().iter().map(|r| r["rank"].as_u64().unwrap()).collect();
    assert_eq!(ranks, vec![0, 2]);
    assert!(v["existence"].as_array().unwrap().iter().all(|r| r["formula"] == true && r["oracle"] == true));
    let ab = write("ab.json", r#"{"real_blocks":[{"size":1,"eig":"0"}]}"#);
    let o = run(&["analyze", ab.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("abelian"));
}

#[test]
fn parse_errors_name_the_field() {
    let bad = write("bad.json", "{\"real_blocks\": [{\"size\": 2, \"eig\": \"one\"}]}");
    let o = run(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("real_blocks[0].eig"));
    let broken = write("broken.json", "{\n\"real_blocks\": [\n}");
    let o = run(&["analyze", broken.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn construct_check_reduce_moduli_round_trip() {
    let spec = write("r14.json", DIM14);
    let s = spec.to_str().unwrap();
    let o = run(&["construct", s, "--rank", "14"]);
    assert!(o.status.success());
    let form = write("f14.json", &stdout(&o));
    let f = form.to_str().unwrap();
    let c = run(&["check", s, f]);
    assert!(c.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&c)).unwrap();
    assert_eq!((v["closed"].as_bool(), v["rank"].as_u64()), (Some(true), Some(14)));
    let r = run(&["reduce", s, f]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&r)).unwrap();
    assert!(v["residual"].as_str().unwrap().parse::<f64>().unwrap() < 1e-6);
    assert!(v["trace"]["steps"].as_array().is_some());
    let m = run(&["moduli", s, f]);
    assert!(m.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&m)).unwrap();
    assert_eq!(v["permutation"].as_array().unwrap().len(), 14);
}

#[test]
fn every_rank_round_trips_through_check() {
    let spec = write("rr.json", DIM14);
    let s = spec.to_str().unwrap();
    for r in (0..=14).step_by(2) {
        let o = run(&["construct", s, "--rank", &r.to_string(), "--seed", "3"]);
        assert!(o.status.success(), "rank {r}");
        let form = write(&format!("rr{r}.json"), &stdout(&o));
        let c = run(&["check", s, form.to_str().unwrap()]);
        let v: serde_json::Value = serde_json::from_str(&stdout(&c)).unwrap();
        assert_eq!(v["rank"].as_u64(), Some(r as u64));
    }
}

#[test]
fn rejections_exit_with_two() {
    let spec = write("x14.json", DIM14);
    let o = run(&["construct", spec.to_str().unwrap(), "--rank", "16"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rank exceeds dimension"));
    let unclosed = write("open.json", r#"{"rows":14,"cols":14,"entries":[[1,2,"1"],[2,1,"-1"]]}"#);
    let o = run(&["check", spec.to_str().unwrap(), unclosed.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["check", spec.to_str().unwrap(), "/nonexistent/form.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn output_is_byte_identical() {
    let spec = write("d14.json", DIM14);
    let s = spec.to_str().unwrap();
    for args in [vec!["construct", s, "--rank", "12", "--seed", "5"], vec!["oracle", s, "--trials", "5"]] {
        assert_eq!(run(&args).stdout, run(&args).stdout);
    }
}

#[test]
fn oracle_reports_the_errata_case() {
    let spec = write("c1.json", r#"[{"complex_blocks":[{"half_size":1,"re":"0","im":"1"}]}]"#);
    let o = run(&["oracle", spec.to_str().unwrap(), "--trials", "10", "--seed", "2"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["formula_rank"], 0);
    assert_eq!(v[0]["generic_rank"], 2);
    assert_eq!(v[0]["agreement"], false);
    assert_eq!(v[0]["witness_valid"], true);
}

#[test]
fn pretty_tables() {
    let spec = write("p14.json", DIM14);
    let o = run(&["--format", "pretty", "analyze", spec.to_str().unwrap()]);
    let text = stdout(&o);
    assert!(text.contains("N = 13, D = 14"));
    assert!(text.contains("clause"));
}
