use std::path::Path;
use std::process::{Command, Output};

fn mtensor(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtensor"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = mtensor(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().to_string()))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

#[test]
fn gen_compress_reconstruct_compare() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "--kind", "circulant_slices", "--dims", "8,4,8", "--seed", "1", "--output", "a.ten"], d);
    let info = ok(&["info", "a.ten"], d);
    assert_eq!(field(&info, "dims"), "[8, 4, 8]");

    let out = ok(
        &["compress", "a.ten", "--method", "tsvdm", "--transform", "dft", "--trank", "1", "--conjsym", "--output", "a.ttcr"],
        d,
    );
    let re: f64 = field(&out, "re").parse().unwrap();
    assert!(re < 1e-10, "circulant slices have t-rank one: {re}");
    // k(m + p)n real floats.
    assert_eq!(field(&out, "payload"), "96 floats, 0 integers");

    let info = ok(&["info", "a.ttcr"], d);
    assert_eq!(field(&info, "method"), "tsvdm");
    assert_eq!(field(&info, "conjsym"), "true");

    ok(&["reconstruct", "a.ttcr", "--output", "b.ten"], d);
    let cmp = ok(&["compare", "a.ten", "b.ten"], d);
    assert!(field(&cmp, "re").parse::<f64>().unwrap() < 1e-10);
    let cmp = ok(&["compare", "a.ten", "a.ttcr"], d);
    assert!(field(&cmp, "re").parse::<f64>().unwrap() < 1e-10);
}

#[test]
fn deterministic_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "--kind", "random_dense", "--dims", "5,4,6", "--seed", "9", "--output", "a.ten"], d);
    ok(&["gen", "--kind", "random_dense", "--dims", "5,4,6", "--seed", "9", "--output", "b.ten"], d);
    assert_eq!(std::fs::read(d.join("a.ten")).unwrap(), std::fs::read(d.join("b.ten")).unwrap());
    for name in ["x.ttcr", "y.ttcr"] {
        ok(
            &["compress", "a.ten", "--method", "tsvdm2", "--transform", "randorth", "--seed", "3", "--gamma", "0.9", "--output", name],
            d,
        );
    }
    assert_eq!(std::fs::read(d.join("x.ttcr")).unwrap(), std::fs::read(d.join("y.ttcr")).unwrap());
}

#[test]
fn every_method_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "--kind", "lowrank_plus_noise", "--dims", "8,5,4", "--seed", "2", "--noise", "0.05", "--output", "a.ten"], d);
    let cases: &[&[&str]] = &[
        &["--method", "tsvdm", "--trank", "2"],
        &["--method", "tsvdm2", "--gamma", "0.95"],
        &["--method", "matrix", "--trank", "2"],
        &["--method", "matrix", "--gamma", "0.9", "--slices", "horizontal"],
        &["--method", "hosvd", "--triple", "2,2,2"],
        &["--method", "sequential", "--pair", "2,2"],
        &["--method", "convex", "--pair", "2,2", "--alpha", "0.25"],
        &["--method", "fourd", "--gamma", "0.95"],
    ];
    for transform in ["dct", "dft", "haar", "identity"] {
        for case in cases {
            let mut args = vec!["compress", "a.ten", "--transform", transform, "--output", "c.ttcr"];
            args.extend_from_slice(case);
            let out = ok(&args, d);
            let re: f64 = field(&out, "re").parse().unwrap();
            assert!(re < 0.5, "{case:?} {transform}: {re}");
            let cmp = ok(&["compare", "a.ten", "c.ttcr"], d);
            assert_eq!(field(&cmp, "re"), field(&out, "re"), "{case:?}");
        }
    }
}

#[test]
fn sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "--dims", "8,4,8", "--seed", "5", "--noise", "0.01", "--output", "a.ten"], d);
    ok(
        &[
            "sweep", "a.ten", "--method", "tsvdm2,matrix", "--transform", "dft,randorth", "--gamma", "1.0,0.99,0",
            "--output", "s.csv",
        ],
        d,
    );
    let text = std::fs::read_to_string(d.join("s.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,transform,parameter,cr,re,seconds,payload_floats,integers,status");
    // 2 transforms × 3 gammas for tsvdm2, 3 gammas for the matrix baseline.
    assert_eq!(lines.len(), 1 + 6 + 3);
    assert!(lines[1].starts_with("tsvdm2,dft,gamma=1,"));
    assert!(lines[3].contains("failed: invalid energy level"));
    assert!(lines[7].starts_with("matrix,none,gamma=1,"));

    let stdout = ok(&["sweep", "a.ten", "--method", "tsvdm", "--transform", "dct", "--trank", "1:3:1"], d);
    assert_eq!(stdout.lines().count(), 4);
}

#[test]
fn image_input_and_patches() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let frames = d.join("frames");
    std::fs::create_dir(&frames).unwrap();
    for f in 0..3u8 {
        let mut pgm = b"P5\n4 6\n255\n".to_vec();
        pgm.extend((0..24u8).map(|i| i.wrapping_mul(7).wrapping_add(f * 40)));
        std::fs::write(frames.join(format!("f{f}.pgm")), pgm).unwrap();
    }
    ok(&["compress", "frames", "--method", "tsvdm2", "--gamma", "1", "--orientation", "lateral-transposed", "--output", "i.ttcr"], d);
    assert_eq!(field(&ok(&["info", "i.ttcr"], d), "dims"), "[4, 3, 6]");
    ok(&["reconstruct", "i.ttcr", "--orientation", "lateral-transposed", "--output", "out"], d);
    for f in 0..3u8 {
        let a = std::fs::read(frames.join(format!("f{f}.pgm"))).unwrap();
        let b = std::fs::read(d.join(format!("out/frame_{f:03}.pgm"))).unwrap();
        assert_eq!(a, b);
    }

    ok(&["compress", "frames", "--method", "fourd", "--gamma", "1", "--patch", "3,2", "--transform", "dft", "--output", "p.ttcr"], d);
    assert_eq!(field(&ok(&["info", "p.ttcr"], d), "dims"), "[2, 3, 2, 6]");
    ok(&["reconstruct", "p.ttcr", "--patch", "3,2", "--frame", "6,4", "--output", "pout"], d);
    let a = std::fs::read(frames.join("f1.pgm")).unwrap();
    assert_eq!(a, std::fs::read(d.join("pout/frame_001.pgm")).unwrap());
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("junk.ttcr"), b"XXXXjunk").unwrap();
    let out = mtensor(&["info", "junk.ttcr"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad magic"));

    ok(&["gen", "--dims", "4,2,4", "--output", "a.ten"], d);
    ok(&["compress", "a.ten", "--method", "tsvdm", "--trank", "1", "--output", "a.ttcr"], d);
    let bytes = std::fs::read(d.join("a.ttcr")).unwrap();
    std::fs::write(d.join("cut.ttcr"), &bytes[..bytes.len() / 2]).unwrap();
    let out = mtensor(&["reconstruct", "cut.ttcr", "--output", "x.ten"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("truncated payload"));

    assert!(!mtensor(&["compress", "a.ten", "--method", "tsvdm2", "--output", "b"], d).status.success());
    assert!(!mtensor(&["compress", "a.ten", "--method", "nope", "--gamma", "0.9", "--output", "b"], d).status.success());
    assert!(!mtensor(&["gen", "--kind", "circulant_slices", "--dims", "3,2,4", "--output", "b"], d).status.success());
}
