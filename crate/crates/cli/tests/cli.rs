//! End-to-end tests of the binary: exit codes, determinism across thread
//! counts, schema errors, and the file interfaces.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn betamix() -> Command {
    Command::new(env!("CARGO_BIN_EXE_betamix"))
}

struct Workdir(PathBuf);

impl Workdir {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!(
            "betamix-cli-{tag}-{}",
            std::process::id()
        ));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        Workdir(dir)
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.0.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for Workdir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

const SIZE_CONFIG: &str = r#"
schema_version = 1
seed = 42
threads = 1
n = 200
replications = 40
alpha = 0.05
kappa = 4

[process]
kind = "gaussian_ar1"
a = 0.5
sigma = 1.0

[dgp]
psi0 = 0.0
psi1 = 0.0
h0 = "tanh"
c = 0.0
error_sd = 1.0
"#;

#[test]
fn size_runs_and_is_deterministic_across_threads() {
    let dir = Workdir::new("size");
    let config = dir.file("size.toml", SIZE_CONFIG);
    let out1 = dir.path("a.json");
    let out2 = dir.path("b.json");
    let run = |out: &Path, threads: &str| {
        let output = betamix()
            .args(["size", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .args(["--threads", threads])
            .output()
            .unwrap();
        assert_exit(&output, 0);
    };
    run(&out1, "1");
    run(&out2, "4");
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "results differ across thread counts");
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("\"rate\""));
    assert!(text.contains("\"se\""));
}

#[test]
fn seed_flag_and_env_override_config() {
    let dir = Workdir::new("seed");
    let config = dir.file("size.toml", SIZE_CONFIG);
    let base = dir.path("base.json");
    let flagged = dir.path("flag.json");
    let envd = dir.path("env.json");
    let output = betamix()
        .args(["size", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&base)
        .output()
        .unwrap();
    assert_exit(&output, 0);
    let output = betamix()
        .args(["size", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&flagged)
        .args(["--seed", "7"])
        .output()
        .unwrap();
    assert_exit(&output, 0);
    let output = betamix()
        .args(["size", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&envd)
        .env("BETAMIX_SEED", "7")
        .output()
        .unwrap();
    assert_exit(&output, 0);
    let base = std::fs::read(&base).unwrap();
    let flagged = std::fs::read(&flagged).unwrap();
    let envd = std::fs::read(&envd).unwrap();
    assert_ne!(base, flagged, "seed override had no effect");
    assert_eq!(flagged, envd, "env and flag overrides disagree");
}

#[test]
fn config_schema_error_names_field_and_exits_2() {
    let dir = Workdir::new("schema");
    let config = dir.file(
        "bad.toml",
        "schema_version = 1\nnot_a_field = true\n",
    );
    let output = betamix()
        .args(["size", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_exit(&output, 2);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("not_a_field"), "stderr: {stderr}");

    // Wrong schema version is also a config error.
    let config = dir.file("v9.toml", "schema_version = 9\n");
    let output = betamix().args(["size", "--config"]).arg(&config).output().unwrap();
    assert_exit(&output, 2);

    // Missing required section named in the message.
    let config = dir.file("nodgp.toml", "schema_version = 1\nn = 100\nreplications = 5\n");
    let output = betamix().args(["size", "--config"]).arg(&config).output().unwrap();
    assert_exit(&output, 2);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("dgp"), "stderr: {stderr}");
}

#[test]
fn simulate_writes_csv() {
    let dir = Workdir::new("simulate");
    let config = dir.file(
        "sim.toml",
        r#"
schema_version = 1
seed = 3
n = 50

[process]
kind = "finite_markov"
transition = [[0.75, 0.25], [0.25, 0.75]]
states = [0.0, 1.0]
"#,
    );
    let out = dir.path("path.csv");
    let output = betamix()
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_exit(&output, 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x");
    assert_eq!(lines.len(), 51);

    // Nonlinear autoregression parses through the nested map table.
    let config = dir.file(
        "nl.toml",
        r#"
schema_version = 1
seed = 4
n = 32

[process]
kind = "nonlinear_ar"
map = { kind = "tanh", a = 0.5 }
sigma = 1.0
"#,
    );
    let out = dir.path("nl.csv");
    let output = betamix()
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_exit(&output, 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 33);
}

#[test]
fn hausman_file_reproduces_library_call_bit_exactly() {
    let dir = Workdir::new("hausman");
    // Generate a null sample through the library, write it as CSV, and
    // check the binary reproduces the library report bit for bit.
    let dgp = betamix::hausman::LocalAltDgp::new(
        0.0,
        0.0,
        betamix::hausman::H0Shape::Tanh,
        0.0,
        betamix::mixing::ProcessSpec::gaussian_ar1(0.5, 1.0).unwrap(),
        betamix::hausman::ErrorLaw::Normal { sd: 1.0 },
    )
    .unwrap();
    let sample = betamix::hausman::simulate_local_alt(&dgp, 1000, 42).unwrap();
    let csv = betamix::hausman::to_yx_csv(&sample);
    let data = dir.file("data.csv", &csv);
    let output = betamix()
        .arg("hausman")
        .arg(&data)
        .args(["--kappa", "4", "--bandwidth", "6"])
        .output()
        .unwrap();
    assert_exit(&output, 0);
    let cli_json: serde_json::Value =
        serde_json::from_slice(&output.stdout).expect("valid JSON on stdout");

    let parsed = betamix::hausman::parse_yx_csv(&csv).unwrap();
    let report = betamix::hausman::analyze(
        &parsed,
        &betamix::hausman::AnalyzeOptions {
            kappa: Some(4),
            bandwidth: Some(6),
            hermite: false,
        },
    )
    .unwrap();
    let lib_json = report.to_flat_json();
    assert_eq!(cli_json, lib_json);
    // p-values are present and in range.
    let p2 = cli_json["p2"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p2));
}

#[test]
fn hausman_degenerate_and_data_errors() {
    let dir = Workdir::new("hausman-err");
    // Noiseless linear data: degenerate-variance report, exit 4.
    let mut csv = String::from("y,x\n");
    for i in 0..50 {
        let x = (i as f64 * 0.61).sin() * 2.0;
        csv.push_str(&format!("{},{}\n", 1.0 + 2.0 * x, x));
    }
    let data = dir.file("linear.csv", &csv);
    let output = betamix().arg("hausman").arg(&data).args(["--kappa", "3"]).output().unwrap();
    assert_exit(&output, 4);
    // The report is still emitted with null statistics.
    let json: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert!(json["H1"].is_null());

    // Missing column: data error, exit 3.
    let data = dir.file("bad.csv", "y,z\n1.0,2.0\n");
    let output = betamix().arg("hausman").arg(&data).output().unwrap();
    assert_exit(&output, 3);

    // Malformed row names its line.
    let data = dir.file("row.csv", "y,x\n1.0,2.0\nbroken,1\n");
    let output = betamix().arg("hausman").arg(&data).output().unwrap();
    assert_exit(&output, 3);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line 3"), "stderr: {stderr}");

    // Missing file.
    let output = betamix().arg("hausman").arg(dir.path("nope.csv")).output().unwrap();
    assert_exit(&output, 3);
}

#[test]
fn entropy_clt_equicontinuity_and_norm_commands() {
    let dir = Workdir::new("misc");
    let config = dir.file(
        "all.toml",
        r#"
schema_version = 1
seed = 11
threads = 2
n = 512
replications = 60

[process]
kind = "finite_markov"
transition = [[0.75, 0.25], [0.25, 0.75]]
states = [0.0, 1.0]

[clt]
functions = [[0.0, 1.0]]

[equicontinuity]
family = [[0.0, 1.0], [0.0, 1.05], [0.0, 1.1]]
delta = 0.5
eps = 0.4

[entropy]
s = 1.0
radius = 1.0
deltas = [0.2, 0.1, 0.05, 0.02]

[mixing]
values = [1.0, 0.0]

[norm]
constant = 2.0
"#,
    );
    // Entropy.
    let out = dir.path("entropy.csv");
    let output = betamix()
        .args(["entropy", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_exit(&output, 0);
    let table = std::fs::read_to_string(&out).unwrap();
    assert!(table.starts_with("delta,count,log_count"));
    assert_eq!(table.lines().count(), 5);

    // CLT summary plus replication dump.
    let out = dir.path("clt.csv");
    let dump = dir.path("reps.csv");
    let output = betamix()
        .args(["clt", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .arg("--dump")
        .arg(&dump)
        .output()
        .unwrap();
    assert_exit(&output, 0);
    let dumped = std::fs::read_to_string(&dump).unwrap();
    assert_eq!(dumped.lines().count(), 61, "one row per replication plus header");

    // Equicontinuity probe.
    let out = dir.path("eq.json");
    let output = betamix()
        .args(["equicontinuity", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_exit(&output, 0);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let p = json["exceed_probability"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));

    // Norm of a constant with beta = (1, 0): exactly 2.
    let out = dir.path("norm.json");
    let output = betamix()
        .args(["norm", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_exit(&output, 0);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!((json["norm"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(json["status"], "exact");
}

#[test]
fn power_emits_rates_with_errors_and_reps() {
    let dir = Workdir::new("power");
    let config = dir.file(
        "power.toml",
        r#"
schema_version = 1
seed = 5
threads = 2
n = 300
replications = 60
alpha = 0.05
kappa = 4

[process]
kind = "gaussian_ar1"
a = 0.5
sigma = 1.0

[dgp]
psi0 = 0.0
psi1 = 0.0
h0 = "tanh"
c_grid = [0.0, 8.0]
error_sd = 1.0
"#,
    );
    let out = dir.path("power.csv");
    let output = betamix()
        .args(["power", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_exit(&output, 0);
    let table = std::fs::read_to_string(&out).unwrap();
    let mut lines = table.lines();
    let header = lines.next().unwrap();
    assert!(header.contains("z_rate") && header.contains("z_se") && header.contains("reps"));
    assert_eq!(lines.count(), 2);
}
