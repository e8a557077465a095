use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_delaybound"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn verify_bundled_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--config", "paper_6_1.cfg", "--out", "o", "--svg"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/verify.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,|x|,y,ŷ");
    assert!(dir.path().join("o/verify.svg").exists());
}

#[test]
fn reproduce_fig1_both_cases() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in ["paper_6_1.cfg", "paper_6_1_b.cfg"] {
        let out = run(&["reproduce-fig1", "--config", cfg, "--out", "o"], dir.path());
        assert_eq!(code(&out), 0, "{cfg}: {}", stdout(&out));
        assert!(dir.path().join("o/fig1.svg").exists());
    }
}

#[test]
fn robust_prints_root() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "r.cfg",
        "[robust]\np_hat = -2.0\nc_hat = 1.0\nl_hat = [{ coeff = 1.0, degree = 3 }]\n",
    );
    let out = run(&["robust", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("y+ = 1.41421"), "{}", stdout(&out));

    let cfg = write(
        dir.path(),
        "bad.cfg",
        "[robust]\np_hat = -1.0\nc_hat = 2.0\nl_hat = [{ coeff = 1.0, degree = 1 }]\n",
    );
    assert_eq!(code(&run(&["robust", "--config", &cfg, "--out", "o"], dir.path())), 1);
}

#[test]
fn region_on_three_dimensional_system_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "three.cfg",
        "[system]\ndim = 3\na0 = -1.0\nhistory = { kind = \"constant\", values = [0.1, 0.1, 0.1] }\n",
    );
    let out = run(&["region", "--config", &cfg, "--out", "o", "--horizon", "5"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("2-dimensional"));
}

#[test]
fn config_and_usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.cfg", "");
    let out = run(&["simulate", "--config", &empty], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("system"));
    assert_eq!(code(&run(&["nonsense", "--config", "paper_6_1.cfg"], dir.path())), 2);
    assert_eq!(code(&run(&["simulate"], dir.path())), 2);
    assert_eq!(code(&run(&["simulate", "--config", "missing.cfg"], dir.path())), 2);
}

#[test]
fn violated_ordering_exits_one() {
    // A deliberately wrong p(t) that decays much faster than the system.
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{}\n",
        delaybound::config::PAPER_6_1.replace("coefficients = \"auto\"", "coefficients = \"closed_form\"\np = -20.0\nc = 1.0")
    );
    let cfg = write(dir.path(), "wrong.cfg", &text);
    let out = run(&["verify", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(code(&out), 1, "{}", stdout(&out));
    assert!(stdout(&out).contains("violated"));
}

#[test]
fn ill_conditioned_reduction_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "stiff.cfg",
        "[system]\ndim = 2\na0 = [[-40.0, 0.0], [0.0, 40.0]]\nhistory = { kind = \"constant\", values = [0.1, 0.1] }\n\
         [solver]\nhorizon = 2.0\n[reduction]\ncoefficients = \"numerical\"\n",
    );
    let out = run(&["reduce", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["a", "b"] {
        let out = run(&["simulate", "--config", "paper_6_1.cfg", "--out", sub], dir.path());
        assert_eq!(code(&out), 0);
    }
    let a = std::fs::read(dir.path().join("a/simulate.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/simulate.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn overrides_change_the_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["simulate", "--config", "paper_6_1.cfg", "--out", "o", "--horizon", "5", "--rtol", "1e-7", "--cap", "1e5"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("o/simulate.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    assert!(last.starts_with("5,"), "{last}");
    assert_eq!(code(&run(&["simulate", "--config", "paper_6_1.cfg", "--horizon", "-1"], dir.path())), 2);
}

#[test]
fn fts_needs_parameters() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["fts", "--config", "paper_6_1.cfg", "--out", "o"], dir.path())), 2);
    let text = format!("{}alpha = 0.6\nbeta = 1.0\nwindow = 10.0\ngamma = 0.2\n", delaybound::config::PAPER_6_1);
    let cfg = write(dir.path(), "fts.cfg", &text);
    let out = run(&["fts", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("FTCS"));
}
