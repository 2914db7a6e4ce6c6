use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use deltasketch::{ncd, DeltaSketch};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_deltasketch"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn run_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, data: &[u8]) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, data).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn text(seed: u64, n: usize) -> Vec<u8> {
    let mut x = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    (0..n)
        .map(|_| {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            b"acgt"[(x % 4) as usize]
        })
        .collect()
}

#[test]
fn estimate_banana_and_unary() {
    let dir = TempDir::new().unwrap();
    let banana = write(&dir, "banana", b"banana");
    let v: f64 = stdout(&run(&["estimate", "-e", "0.1", s(&banana)])).trim().parse().unwrap();
    assert!((2.7..=3.3).contains(&v), "{v}");
    let unary = write(&dir, "unary", &vec![b'a'; 1_000_000]);
    assert_eq!(stdout(&run(&["estimate", s(&unary)])), "1.000000\n");
}

#[test]
fn pipes_need_a_length_bound() {
    let o = run_stdin(&["estimate"], b"banana");
    assert_eq!(o.status.code(), Some(1));
    let with_bound = stdout(&run_stdin(&["estimate", "--n-max", "100"], b"banana"));
    let v: f64 = with_bound.trim().parse().unwrap();
    assert!((2.4..=3.6).contains(&v));
    let over = run_stdin(&["estimate", "--n-max", "4"], b"banana");
    assert_eq!(over.status.code(), Some(4));
}

#[test]
fn sketch_round_trip_is_exact() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in", &text(1, 20_000));
    let sk = dir.path().join("in.dsk");
    let summary = stdout(&run(&["sketch", s(&input), "-o", s(&sk)]));
    assert!(summary.contains("20000 bytes processed"), "{summary}");
    let direct = stdout(&run(&["estimate", s(&input)]));
    let saved = stdout(&run(&["estimate", "--from-sketch", s(&sk)]));
    assert_eq!(direct, saved);

    let empty = write(&dir, "empty", b"");
    let esk = dir.path().join("empty.dsk");
    stdout(&run(&["sketch", s(&empty), "-o", s(&esk)]));
    let back = DeltaSketch::deserialize(&fs::read(&esk).unwrap()).unwrap();
    assert_eq!(back.stream_len(), 0);
}

#[test]
fn ncd_from_files_matches_in_process() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a", &text(2, 5000));
    let b = write(&dir, "b", &text(3, 5000));
    let (ka, kb) = (dir.path().join("a.dsk"), dir.path().join("b.dsk"));
    for (src, dst) in [(&a, &ka), (&b, &kb)] {
        stdout(&run(&["sketch", "--for-ncd", "-e", "0.5", "--n-max", "5000", s(src), "-o", s(dst)]));
    }
    let printed = stdout(&run(&["ncd", s(&ka), s(&kb)]));
    let sa = DeltaSketch::deserialize(&fs::read(&ka).unwrap()).unwrap();
    let sb = DeltaSketch::deserialize(&fs::read(&kb).unwrap()).unwrap();
    let v = ncd::ncd_from_sketches(&sa, &sb).unwrap();
    assert_eq!(printed, format!("{:.6}\n", v.clamped));
    assert_eq!(sa.params().epsilon, 0.1);

    let raw = stdout(&run(&["ncd", "--raw", "-e", "0.5", s(&a), s(&b)]));
    assert_eq!(raw, printed);
    assert_eq!(stdout(&run(&["ncd", s(&ka), s(&ka)])), "0.000000\n");
}

#[test]
fn merge_of_a_sketch_with_itself() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a", &text(4, 3000));
    let ka = dir.path().join("a.dsk");
    let kaa = dir.path().join("aa.dsk");
    stdout(&run(&["sketch", s(&a), "-o", s(&ka)]));
    stdout(&run(&["merge", s(&ka), s(&ka), "-o", s(&kaa)]));
    assert_eq!(
        stdout(&run(&["estimate", "--from-sketch", s(&kaa)])),
        stdout(&run(&["estimate", "--from-sketch", s(&ka)]))
    );
}

#[test]
fn mismatched_sketches_exit_with_3() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a", b"abracadabra");
    let (k1, k2) = (dir.path().join("1.dsk"), dir.path().join("2.dsk"));
    stdout(&run(&["sketch", s(&a), "-o", s(&k1)]));
    stdout(&run(&["sketch", s(&a), "--seed", "7", "-o", s(&k2)]));
    for args in [vec!["ncd", s(&k1), s(&k2)], vec!["merge", s(&k1), s(&k2), "-o", s(&k1)]] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(3));
        assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
    }
}

#[test]
fn matrix_over_five_files() {
    let dir = TempDir::new().unwrap();
    let base = text(5, 4000);
    let mut paths = Vec::new();
    for i in 0..5u8 {
        let mut v = base.clone();
        for j in (0..v.len()).step_by(7 + i as usize * 13) {
            v[j] = b'a' + (v[j] + i) % 4;
        }
        paths.push(write(&dir, &format!("seq{i}"), &v));
    }
    let mut args = vec!["matrix", "--raw", "-e", "0.5"];
    args.extend(paths.iter().map(|p| s(p)));
    let out = stdout(&run(&args));
    let m = ncd::read_phylip(&out).unwrap();
    assert_eq!(m.names, ["seq0", "seq1", "seq2", "seq3", "seq4"]);
    for i in 0..5 {
        assert_eq!(m.values[i][i], 0.0);
        for j in 0..5 {
            assert_eq!(m.values[i][j], m.values[j][i]);
        }
    }
    args.push("--tsv");
    let tsv = stdout(&run(&args));
    assert_eq!(tsv.lines().count(), 1 + 10);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a", &text(6, 50_000));
    let (k1, k8) = (dir.path().join("1.dsk"), dir.path().join("8.dsk"));
    stdout(&run(&["sketch", "-t", "1", s(&a), "-o", s(&k1)]));
    stdout(&run(&["sketch", "-t", "8", s(&a), "-o", s(&k8)]));
    assert_eq!(fs::read(&k1).unwrap(), fs::read(&k8).unwrap());
}

#[test]
fn exact_and_dk() {
    let dir = TempDir::new().unwrap();
    let banana = write(&dir, "banana", b"banana");
    let abab = write(&dir, "abab", b"abab");
    let unary = write(&dir, "unary", b"aaaaaaa");
    assert_eq!(stdout(&run(&["exact", s(&banana)])), "delta = 3/1 = 3.000000, k_hat = 1\n");
    assert_eq!(stdout(&run(&["dk", s(&abab)])), "1:2 2:2 3:2 4:1\n");
    assert!(stdout(&run(&["exact", s(&unary)])).starts_with("delta = 1/1 "));
    assert_eq!(stdout(&run_stdin(&["exact"], b"banana")), "delta = 3/1 = 3.000000, k_hat = 1\n");
}

#[test]
fn exact_size_guard() {
    let dir = TempDir::new().unwrap();
    let big = write(&dir, "big", &vec![b'a'; 1_000_001]);
    assert_eq!(run(&["exact", s(&big)]).status.code(), Some(1));
    assert!(stdout(&run(&["exact", "--force", s(&big)])).starts_with("delta = 1/1"));
}

#[test]
fn presets_and_bad_arguments() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a", &text(7, 2000));
    let k = dir.path().join("p1.dsk");
    stdout(&run(&["sketch", "-p", "1", s(&a), "-o", s(&k)]));
    let sk = DeltaSketch::deserialize(&fs::read(&k).unwrap()).unwrap();
    assert_eq!(sk.params().epsilon, 1.0);
    assert_eq!(run(&["estimate", "-p", "6", s(&a)]).status.code(), Some(1));
    assert_eq!(run(&["estimate", "-e", "1.5", s(&a)]).status.code(), Some(1));
    assert_eq!(run(&["estimate", "-r", "3", s(&a)]).status.code(), Some(1));
    assert_eq!(run(&["estimate", "--seed", "nope", s(&a)]).status.code(), Some(1));
    assert_eq!(run(&["estimate", s(&dir.path().join("missing"))]).status.code(), Some(2));
    let junk = write(&dir, "junk.dsk", b"not a sketch");
    assert_eq!(run(&["estimate", "--from-sketch", s(&junk)]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn rlbwt_mode_runs() {
    let dir = TempDir::new().unwrap();
    let tm: Vec<u8> = (0..4096u32).map(|i| b'a' + (i.count_ones() % 2) as u8).collect();
    let a = write(&dir, "tm", &tm);
    let o = run(&["estimate", "--rlbwt", "--window", "64", "-e", "0.25", "-v", s(&a)]);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    let exact = 2560.0 / 769.0;
    assert!((v - exact).abs() <= 0.25 * exact, "{v}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("rlbwt on"));
}
