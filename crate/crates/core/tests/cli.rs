use std::process::{Command, Output};

use rispace::cli::Report;

fn rispace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rispace"))
        .args(args)
        .env_remove("RISPACE_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> (Report, String) {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let o = rispace(&full);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    (serde_json::from_str(&text).expect("report parses"), text)
}

#[test]
fn classify_examples() {
    let (r, _) = json(&["classify", "--psi", "power:1"]);
    let Report::Classify(c) = r else { panic!("{r:?}") };
    assert_eq!(format!("{:?}", c.report.branch), "NormEqualsN");
    let (r, _) = json(&["classify", "--psi", "example7"]);
    let Report::Classify(c) = r else { panic!("{r:?}") };
    assert_eq!(format!("{:?}", c.report.branch), "PowerBound");
    let text = stdout(&rispace(&["classify", "--psi", "example7"]));
    assert!(text.contains("margin: 1e-3"), "{text}");
    assert!(text.contains("2^-4096"), "{text}");
}

#[test]
fn norm_example() {
    let o = rispace(&["norm", "--space", "lorentz:power:0.5", "--indicator", "0.25"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("norm: 0.5\n"));
    let o = rispace(&["norm", "--space", "lorentz:power:0.5", "--indicator", "0.25", "--format", "csv"]);
    assert_eq!(stdout(&o), "space,input,value\nlorentz:power:0.5,indicator:0.25,0.5\n");
}

#[test]
fn json_round_trips() {
    let cases: [&[&str]; 6] = [
        &["classify", "--psi", "power:0.5"],
        &["norm", "--space", "orlicz:Np:2", "--rademacher", "16"],
        &["opnorm", "--psi", "power:0.5", "--n", "2,4"],
        &["growth", "--space", "marcinkiewicz:logpow:2", "--ns", "2^4..2^8"],
        &["kruglov", "--phi", "power:1"],
        &["mc", "--sampler", "indicator:0.5", "--space", "lorentz:power:1", "--n", "2", "--trials", "2000", "--m", "256"],
    ];
    for args in cases {
        let (report, text) = json(args);
        let again = serde_json::to_string_pretty(&report).unwrap() + "\n";
        assert_eq!(again, text, "{args:?}");
    }
}

#[test]
fn identical_invocations_are_byte_identical() {
    let cases: [&[&str]; 3] = [
        &["mc", "--sampler", "gauss", "--space", "lpq:1.5:1.2", "--n", "5", "--trials", "5000", "--seed", "3"],
        &["growth", "--space", "lpq:1.5:1.2", "--sampler", "indicator:0.5", "--ns", "2^2..2^6", "--trials", "2000", "--format", "csv"],
        &["classify", "--psi", "logpow:2", "--format", "json"],
    ];
    for args in cases {
        let (a, b) = (rispace(args), rispace(args));
        assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn seed_from_environment() {
    let args = ["mc", "--sampler", "rademacher", "--space", "lorentz:power:1", "--n", "9", "--trials", "2000"];
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_rispace"))
            .args(args)
            .env("RISPACE_SEED", seed)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("17"), stdout(&rispace(&[&args[..], &["--seed", "17"]].concat())).into_bytes());
    assert_ne!(run("17"), run("18"));
}

#[test]
fn invalid_input_exits_2_with_one_line_reason() {
    let cases: [&[&str]; 5] = [
        &["norm", "--space", "lorentz:powr:0.5", "--indicator", "0.25"],
        &["norm", "--space", "lorentz:power:0.5", "--indicator", "1.5"],
        &["classify", "--psi", "power:2"],
        &["growth", "--space", "lorentz:power:1", "--ns", "2,4"],
        &["mc", "--sampler", "custom:0,1", "--space", "lorentz:power:1", "--n", "3"],
    ];
    for args in cases {
        let o = rispace(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("error: "), "{err}");
        assert!(o.stdout.is_empty());
    }
    let err = String::from_utf8(rispace(&["norm", "--space", "lorentz:powr:0.5", "--indicator", "0.25"]).stderr).unwrap();
    assert!(err.contains("`powr"), "{err}");
    assert_eq!(rispace(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn inconclusive_exits_1() {
    // ten probes cannot separate two windows of ten
    let o = rispace(&["opnorm", "--psi", "gauss", "--n", "2", "--j-max", "20", "--window", "10", "--tolerance", "1e-12"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("inconclusive: true"));
}

#[test]
fn config_file_and_output_path() {
    let dir = std::env::temp_dir().join(format!("rispace-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("exp.cfg");
    std::fs::write(&cfg, "# exact sums\nspace = marcinkiewicz:logpow:2\nns = 2^4..2^10\n").unwrap();
    let out = dir.join("table.csv");
    let o = rispace(&["growth", "--config", cfg.to_str().unwrap(), "--format", "csv", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(&out).unwrap();
    assert!(table.starts_with("n,value,fit_q,fit_C,residual\n16,"));
    assert_eq!(table.lines().count(), 8);
    std::fs::remove_dir_all(&dir).unwrap();
}
