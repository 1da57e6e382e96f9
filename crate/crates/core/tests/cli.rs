use std::process::{Command, Output};

fn run(args: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ellipsephic"))
        .args(args.split_whitespace())
        .output()
        .expect("run ellipsephic")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn derive_factored_forms() {
    let out = run("derive --base 2 --block 11");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().next(), Some("((2n+1)/(2n+2))*((4n+2)/(4n+1))"));

    let out = run("derive --base 10 --block 9");
    assert_eq!(stdout(&out).lines().next(), Some("((10n+9)/(10n+10))"));

    let out = run("derive --base 2 --block 11 --format json");
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["terms"][0]["t"], "1");
}

#[test]
fn invalid_digit_exits_2_without_stdout() {
    let out = run("derive --base 2 --block 21");
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("digit 2 invalid for base 2"));
}

#[test]
fn checks_pass() {
    let out = run("check --base 2 --block 1 --k 0 --depth 20");
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("target=-1 PASS"));

    let out = run("check-digitsum --base 10 --k 5 --depth 7");
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("target=-2.302585") && text.ends_with("PASS\n"));
}

#[test]
fn uncertifiable_tail_exits_3() {
    let out = run("check --base 2 --block 1 --k 20 --depth 1");
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("increase --depth"));
}

#[test]
fn small_depth_check_is_pass_or_certification_failure() {
    let code = run("check --base 2 --block 11 --k 3 --depth 4").status.code();
    assert!(matches!(code, Some(0) | Some(3)));
}

#[test]
fn brute_sum() {
    let out = run("sum --base 2 --block 1 --k 1 --method brute --limit 10");
    assert_eq!((out.status.code(), stdout(&out)), (Some(0), "1.875\n".to_string()));
    let out = run("sum-digitsum --base 10 --k 1 --limit 100");
    assert_eq!(stdout(&out), "1.11\n");
}

#[test]
fn farhi_table_last_row() {
    let out = run("table --base 10 --block 9 --k 0..3 --method accel --format csv");
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,estimate,radius,limit,certified_distance"));
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(last[0], "3");
    assert!(last[1].starts_with("23.02585"));
}

#[test]
fn count_csv_is_binomial() {
    let out = run("count --base 2 --block 1 --max-k 4 --max-d 6 --format csv");
    let text = stdout(&out);
    let binom = |n: u64, r: u64| -> u64 { if r > n { 0 } else { (0..r).fold(1, |a, i| a * (n - i) / (i + 1)) } };
    for line in text.lines().skip(1) {
        let f: Vec<u64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let expected = if f[0] == 0 { 0 } else { binom(f[1] - 1, f[0] - 1) };
        assert_eq!(f[2], expected, "{line}");
    }
    assert_eq!(text.lines().count(), 1 + 5 * 6);
}

#[test]
fn output_file_and_threads() {
    let dir = std::env::temp_dir().join(format!("ellipsephic-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("table.json");
    let args = format!("table --base 2 --block 11 --k 0..4 --depth 16 --format json --output {}", path.display());
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read(&path).unwrap();
    let threaded = run("table --base 2 --block 11 --k 0..4 --depth 16 --format json --threads 2");
    assert_eq!(written, threaded.stdout);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn accelerated_digit_sum_needs_base_two() {
    assert_eq!(run("sum-digitsum --base 3 --k 2 --method accel").status.code(), Some(2));
    let two = run("sum-digitsum --base 2 --k 3 --method accel --depth 16");
    let one = run("sum --base 2 --block 1 --k 3 --method accel --depth 16");
    assert_eq!(two.stdout, one.stdout);
}
