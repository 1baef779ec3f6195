use std::path::Path;
use std::process::Command;

const SCENARIO: &str = r#"
seed = 9
trials = 3
snr_db = 10.0

[array]
elements = 16

[[sources]]
angle_deg = -12.0
range = 20.0

[[sources]]
angle_deg = 25.0
range = 80.0

[campaign]
sweep = "snr_db"
values = [0.0, 10.0]
estimators = ["two_stage", "baseline_ff_music"]
"#;

fn sfas(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sfas")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn every_verb_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SCENARIO);
    let cases: [(&str, &[&str]); 4] = [
        ("single-shot", &["stage1_spectrum.csv", "range_spectrum_2.csv", "refine_patch_1.csv", "estimate.json"]),
        ("campaign", &["rmse.csv", "trials.csv"]),
        ("crb", &["crb.csv"]),
        ("validate", &["validate.csv"]),
    ];
    for (verb, files) in cases {
        let out = dir.path().join(verb);
        let o = sfas(&[verb, &config, "--out", out.to_str().unwrap(), "--threads", "2"]);
        assert!(o.status.success(), "{verb}: {}", String::from_utf8_lossy(&o.stderr));
        for f in files.iter().chain(&["manifest.json"]) {
            assert!(out.join(f).exists(), "{verb}: missing {f}");
        }
    }
}

#[test]
fn overrides_land_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SCENARIO);
    let out = dir.path().join("o");
    let o = sfas(&["campaign", &config, "--out", out.to_str().unwrap(), "--seed", "123", "--trials", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 123);
    assert_eq!(manifest["summary"]["trials_per_point"], 2);
    assert!(manifest["config_toml"].as_str().unwrap().contains("trials = 2"));
}

#[test]
fn campaign_output_is_thread_count_independent() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SCENARIO);
    let run = |threads: &str| {
        let out = dir.path().join(format!("t{threads}"));
        let o = sfas(&["campaign", &config, "--out", out.to_str().unwrap(), "--threads", threads]);
        assert!(o.status.success());
        std::fs::read(out.join("rmse.csv")).unwrap()
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn invalid_configs_exit_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &SCENARIO.replace("-12.0", "95.0").replace("elements = 16", "elements = 1"));
    let o = sfas(&["validate", &config, "--out", dir.path().join("v").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("angle must lie in"), "{stderr}");
    assert!(stderr.lines().filter(|l| l.trim_start().starts_with("- ")).count() >= 2, "{stderr}");

    let config = write_config(dir.path(), "seed = 1\n[[sources]]\nangle_deg = 1.0\nrange = \"far\"\n");
    let o = sfas(&["crb", &config]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("range"));
}
