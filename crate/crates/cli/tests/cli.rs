use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crosslab"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn crosslab");
    assert!(
        out.status.success(),
        "crosslab {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn tmp(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli");
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn cross_emits_expected_cardinalities() {
    let out = run_ok(&["cross", "--dim", "2", "--level", "4"]);
    let lines = String::from_utf8(out.stdout).unwrap();
    // |Q_4| = 4*2^5 + 1 in d = 2
    assert_eq!(lines.lines().count(), 129);
    let layer = run_ok(&["cross", "--dim", "2", "--level", "4", "--layer"]);
    let layer_lines = String::from_utf8(layer.stdout).unwrap();
    assert_eq!(layer_lines.lines().count(), 129 - 49);
    for line in layer_lines.lines() {
        assert_eq!(line.split(',').count(), 2);
        line.split(',').for_each(|v| {
            v.parse::<i32>().unwrap();
        });
    }
}

#[test]
fn project_filters_coefficients_by_cross_membership() {
    let input = tmp("proj_in.csv");
    let output = tmp("proj_out.csv");
    fs::write(&input, "0,0,1.5,0\n4,4,0.5,0.25\n1,-2,0.125,0\n").unwrap();
    run_ok(&[
        "project",
        "--level",
        "3",
        "--kind",
        "sharp",
        "--in",
        input.to_str().unwrap(),
        "--out",
        output.to_str().unwrap(),
    ]);
    let got = fs::read_to_string(&output).unwrap();
    // (4,4) sits on level 6 and must be dropped; the rest pass through
    assert_eq!(got, "0,0,1.5,0\n1,-2,0.125,0\n");
}

#[test]
fn kernel_tables_have_requested_shape() {
    let out = run_ok(&["kernel", "--type", "dirichlet", "--m", "8", "--samples", "32"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 32);
    // D_m(0) = 2m + 1
    let first: f64 = text.lines().next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((first - 17.0).abs() < 1e-12);

    let out = run_ok(&[
        "kernel", "--type", "bernoulli", "--r", "2", "--kmax", "2", "--dim", "2",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 25);
    assert!(text.lines().any(|l| l == "0,0,1,0"));
}

fn bench_config(output: &Path) -> String {
    format!(
        r#"
method = "layered_H"
dim = 2
seed = 5
oversample = 2
output = "{}"

[class]
family = "H"
r = 0.4
p = inf

[schedule]
first = 32
last = 256

[function]
name = "random_H_ball"
level = 6
"#,
        output.display()
    )
}

#[test]
fn bench_reruns_are_byte_identical() {
    let cfg_path = tmp("bench.toml");
    let out_a = tmp("report_a.csv");
    let out_b = tmp("report_b.csv");
    fs::write(&cfg_path, bench_config(&out_a)).unwrap();
    run_ok(&["bench", "--config", cfg_path.to_str().unwrap()]);
    run_ok(&[
        "bench",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        out_b.to_str().unwrap(),
    ]);
    let a = fs::read(&out_a).unwrap();
    let b = fs::read(&out_b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("method,d,class,r,p,m,error_linf,error_l2,units_used,seconds\n"));
    assert_eq!(text.lines().count(), 1 + 4); // header + 32,64,128,256
}

#[test]
fn fit_reads_reports_and_prints_exponents() {
    let path = tmp("power.csv");
    let mut text =
        String::from("method,d,class,r,p,m,error_linf,error_l2,units_used,seconds\n");
    for e in 4..=12u32 {
        let m = 1u64 << e;
        let err = (m as f64).powf(-0.5);
        text.push_str(&format!(
            "greedy,1,W,0.5,4,{m},{err:.12e},{err:.12e},{m},0.000000\n"
        ));
    }
    fs::write(&path, text).unwrap();
    let out = run_ok(&["fit", "--in", path.to_str().unwrap()]);
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains("main_rate 0.500000"), "{report}");
    assert!(report.contains("window 16..4096"), "{report}");
}

#[test]
fn compare_produces_full_markdown_table() {
    let a = tmp("cmp_a.csv");
    let b = tmp("cmp_b.csv");
    let header = "method,d,class,r,p,m,error_linf,error_l2,units_used,seconds\n";
    fs::write(
        &a,
        format!("{header}smolyak,2,H,0.4,inf,64,1e-1,5e-2,64,0.000000\nsmolyak,2,H,0.4,inf,128,6e-2,3e-2,128,0.000000\n"),
    )
    .unwrap();
    fs::write(
        &b,
        format!("{header}layered_H,2,H,0.4,inf,128,4e-2,2e-2,128,0.000000\n"),
    )
    .unwrap();
    let table = tmp("table.md");
    run_ok(&[
        "compare",
        "--in",
        a.to_str().unwrap(),
        "--in",
        b.to_str().unwrap(),
        "--out",
        table.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&table).unwrap();
    assert!(text.contains("| 64 |"));
    assert!(text.contains("| 128 |"));
    assert!(text.contains("- nonlinear m-term"));
    assert!(text.contains("- sparse-grid sampling"));
    assert!(text.contains("worst-case"));
    // the m = 64 row has no layered data
    assert!(text.lines().any(|l| l.starts_with("| 64 |") && l.contains(" - |")));
}

#[test]
fn mterm_single_row_report() {
    let out_path = tmp("mterm.csv");
    run_ok(&[
        "mterm", "--class", "W", "--r", "0.4", "--p", "4", "--m", "64", "--method", "greedy",
        "--fn", "tensor_decay", "--beta", "1.5", "--box", "64", "--dim", "2", "--oversample", "2",
        "--out", out_path.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method,d,class,r,p,m,error_linf,error_l2,units_used,seconds"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("greedy,2,W,0.4,4,64,"));
    assert!(lines.next().is_none());
}
