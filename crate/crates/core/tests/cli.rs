use std::io::Write as _;
use std::process::{Command, Stdio};

use tempfile::TempDir;

const K2_N4: &str = "k=2 n=4; 1/2 12; 1/2 12; 1/2 10; 3/4 10\n";
const K1_N2: &str = "# two processors\nk=1 n=2\n1/2 1\n1/4 2\n";
const COSTS: &str = "k=2 n=3\n1/2 1 1\n1/2 1 2\n1/3 1 2\n";
const COUNTER: &str = "k=2 n=3\n1/2 2\n1/4 7/4\n3/4 7/4\n";

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn run(args: &[&str], stdin: &str) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut input = stdin.as_bytes();
    let code = kofn::cli::run(
        std::iter::once("kofn").chain(args.iter().copied()),
        &mut input,
        &mut out,
        &mut err,
    );
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn solve_reports_throughput_and_certificate() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "k2.txt", K2_N4);
    let r = run(&["solve", &inst, "--mode", "conservative"], "");
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("throughput 13\n"));
    assert!(r.out.contains("# certificate all-saturated\n"));
}

#[test]
fn solve_then_validate_passes_for_every_representation() {
    let dir = TempDir::new().unwrap();
    for text in [K2_N4, K1_N2, COUNTER] {
        let inst = write(&dir, "inst.txt", text);
        for rep in ["mega", "compressed", "perm"] {
            let solved = run(&["solve", &inst, "--rep", rep], "");
            assert_eq!(solved.code, 0, "{}", solved.err);
            let checked = run(&["validate", &inst, "-"], &solved.out);
            assert_eq!(checked.code, 0, "{}", checked.err);
            assert!(checked.out.contains("feasible yes"));
            assert!(!checked.out.contains("certificate none"));
        }
        let solved = run(&["solve", &inst, "--mode", "standard"], "");
        assert_eq!(solved.code, 0, "{}", solved.err);
        assert!(solved.out.contains("# certificate duality"));
        let checked = run(&["validate", &inst, "-"], &solved.out);
        assert_eq!(checked.code, 0, "{}", checked.err);
    }
}

#[test]
fn validate_names_the_overloaded_processor() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "k2.txt", K2_N4);
    let routing = "rep perm\nperm 11 | 3 1 2 4\n";
    let r = run(&["validate", &inst, "-"], routing);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("processor 3"), "{}", r.err);
    assert!(r.out.contains("processor 3: load"));
    assert!(r.out.contains("OVERLOADED"));
}

#[test]
fn bound_prints_exact_rational() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "k1.txt", K1_N2);
    let r = run(&["bound", &inst], "");
    assert_eq!(r.code, 0);
    assert_eq!(r.out, "16/7\n");
    let r = run(&["bound", &inst, "--decimal", "--precision", "5"], "");
    assert_eq!(r.out, "16/7 (~2.2857)\n");
}

#[test]
fn mincost_both_modes() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "costs.txt", COSTS);
    let r = run(&["mincost", &inst, "--mode", "standard"], "");
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.starts_with("expected-cost 23/6\n"));
    assert!(r.out.contains("tree 1 3 . 2 . . 2 3 . . .\n"), "{}", r.out);
    let r = run(&["mincost", &inst], "");
    assert_eq!(r.code, 0);
    assert!(r.out.contains("order "));
    let bare = write(&dir, "bare.txt", K1_N2);
    assert_eq!(run(&["mincost", &bare], "").code, 2);
}

#[test]
fn input_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.txt", "k=1 n=2\n1/2 1\n1 2\n");
    let r = run(&["bound", &bad], "");
    assert_eq!(r.code, 2);
    assert!(r.err.contains("line 3"), "{}", r.err);
    let r = run(&["solve", "/nonexistent/instance"], "");
    assert_eq!(r.code, 2);
    let r = run(&["frobnicate"], "");
    assert_eq!(r.code, 2);
    let r = run(&["solve", &bad, "--rep", "hex"], "");
    assert_eq!(r.code, 2);
}

#[test]
fn perm_cap_is_enforced() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "k2.txt", K2_N4);
    let r = run(&["solve", &inst, "--rep", "perm", "--cap", "3"], "");
    assert_eq!(r.code, 1);
    assert!(r.err.contains("cap"), "{}", r.err);
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "k2.txt", K2_N4);
    let solved = run(&["solve", &inst], "");
    let routing = write(&dir, "routing.txt", &solved.out);
    let args = [
        "simulate", &inst, &routing, "--items", "20000", "--seed", "9", "--shards", "3",
    ];
    let a = run(&args, "");
    let b = run(&args, "");
    assert_eq!(a.out, b.out);
    assert!(a.out.contains("items 20000 seed 9 shards 3"));
}

#[test]
fn solve_writes_routing_file() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "k1.txt", K1_N2);
    let target = dir.path().join("out.txt");
    let r = run(
        &[
            "solve",
            &inst,
            "--out",
            target.to_str().unwrap(),
            "--decimal",
        ],
        "",
    );
    assert_eq!(r.code, 0);
    assert_eq!(
        r.out,
        "throughput 16/7 (~2.28571428571)\ncertificate all-saturated\n"
    );
    let text = std::fs::read_to_string(target).unwrap();
    assert!(text.starts_with("kofn-routing v1\n"));
}

#[test]
fn binary_round_trip_through_pipes() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "k2.txt", K2_N4);
    let exe = env!("CARGO_BIN_EXE_kofn");
    let solved = Command::new(exe)
        .args(["solve", &inst, "--rep", "mega"])
        .output()
        .unwrap();
    assert!(solved.status.success());
    let mut child = Command::new(exe)
        .args(["validate", &inst, "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(&solved.stdout)
        .unwrap();
    let checked = child.wait_with_output().unwrap();
    assert!(checked.status.success());
    let text = String::from_utf8(checked.stdout).unwrap();
    assert!(text.contains("certificate all-saturated"));
}

#[test]
fn seed_env_override() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "k1.txt", K1_N2);
    let exe = env!("CARGO_BIN_EXE_kofn");
    let solved = Command::new(exe).args(["solve", &inst]).output().unwrap();
    let routing = write(&dir, "r.txt", std::str::from_utf8(&solved.stdout).unwrap());
    let sim = |seed: &str| {
        Command::new(exe)
            .args([
                "simulate", &inst, &routing, "--items", "5000", "--shards", "1",
            ])
            .env("KOFN_SEED", seed)
            .output()
            .unwrap()
    };
    let a = sim("31");
    assert!(String::from_utf8_lossy(&a.stdout).contains("seed 31"));
    assert_eq!(a.stdout, sim("31").stdout);
    assert!(!sim("x").status.success());
}
