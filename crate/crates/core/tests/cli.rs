use std::process::{Command, Output};

fn idisi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idisi"))
        .args(args)
        .env("IDISI_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bounds_reports_capacity_interval() {
    let out = idisi(&["bounds", "--kappa", "0"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["capacity_lower"], 0.25);
    assert_eq!(v["capacity_upper"], 1.0);
    assert_eq!(v["n_bar"], 1000);
}

#[test]
fn verify_passes() {
    let out = idisi(&["verify", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 5, "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn out_of_range_kappa_is_rejected() {
    let out = idisi(&["simulate", "--kappa", "0.6"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("kappa must lie in [0, 0.5)"), "{}", stderr(&out));
}

#[test]
fn unknown_flag_exits_two() {
    let out = idisi(&["bounds", "--nonsense", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate",
        "--n",
        "300",
        "--p-max",
        "4",
        "--trials",
        "400",
        "--codebook",
        "stress-pair",
        "--seed",
        "11",
    ];
    let first = idisi(&args);
    let second = idisi(&args);
    assert!(first.status.success(), "{}", stderr(&first));
    assert_eq!(first.stdout, second.stdout);
    let mut other_args = args;
    other_args[10] = "12";
    let other = idisi(&other_args);
    assert!(other.status.success(), "{}", stderr(&other));
    assert_ne!(first.stdout, other.stdout);
}

#[test]
fn sweep_expands_grid() {
    let out = idisi(&[
        "sweep",
        "--n",
        "100,200",
        "--kappa",
        "0,0.2",
        "--p-max",
        "4",
        "--trials",
        "50",
        "--codebook",
        "stress-pair",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5, "{text}");
    assert!(lines[0].starts_with("n,"));
    assert!(lines[1].starts_with("100,") && lines[3].starts_with("200,"));
    // trailing error column stays empty
    assert!(lines[1..].iter().all(|l| l.ends_with(',')), "{text}");
}

#[test]
fn help_lists_flags() {
    let out = idisi(&["simulate", "--help"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for flag in [
        "--n",
        "--kappa",
        "--a",
        "--b",
        "--sigma-z2",
        "--p-max",
        "--cir",
        "--trials",
        "--pairs",
        "--budget",
        "--seed",
        "--out",
        "--format",
    ] {
        assert!(text.contains(flag), "missing {flag}");
    }
    assert!(text.contains("base 2"));
}

#[test]
fn pack_writes_readable_codebook() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("book.csv");
    let out = idisi(&[
        "pack",
        "--n",
        "4",
        "--r0",
        "0.3",
        "--budget",
        "5000",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let file = std::fs::File::open(&path).unwrap();
    let (book, header) = idisi::codebook::read_codebook_csv(std::io::BufReader::new(file)).unwrap();
    assert_eq!(header.n, 4);
    assert!(book.len() >= 2);
    assert!(idisi::min_pairwise_distance(&book).unwrap() >= 0.6);

    let sim = idisi(&[
        "simulate",
        "--n",
        "4",
        "--a",
        "0.1",
        "--trials",
        "100",
        "--codebook",
        &format!("file:{}", path.display()),
    ]);
    assert!(sim.status.success(), "{}", stderr(&sim));
}
