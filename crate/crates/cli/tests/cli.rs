use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn memsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn list_shows_all_bundled_scenarios() {
    let out = memsim(&["list"]);
    assert!(out.status.success());
    let stdout = text(&out.stdout);
    assert_eq!(stdout.lines().count(), 13);
    assert!(stdout.contains("none-smallgap"));
    assert!(stdout.contains("polyclonal"));
}

#[test]
fn run_writes_the_documented_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = memsim(&[
        "run",
        "both-smallgap",
        "--replicates",
        "6",
        "--seed",
        "3",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let dir = tmp.path().join("both-smallgap");
    for f in [
        "scenario.toml",
        "seeds.csv",
        "replicate_000.csv",
        "replicate_005.csv",
        "mean.csv",
        "summary.csv",
        "summary.txt",
        "population.svg",
        "antigen.svg",
        "affinity.svg",
    ] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
    assert!(!dir.join("replicate_006.csv").exists());
    let scenario = fs::read_to_string(dir.join("scenario.toml")).unwrap();
    assert!(scenario.contains("seed = 3") && scenario.contains("replicates = 6"));
    let mean = fs::read_to_string(dir.join("mean.csv")).unwrap();
    assert!(mean.starts_with("generation,rises,antigen,bound,network_bindings,aff_lt_0.01,"));
    assert_eq!(mean.lines().count(), 601);
    assert!(text(&out.stdout).contains("Both Small Gap"));

    // summarize recomputes the same table from the replicate files
    let summary = fs::read_to_string(dir.join("summary.csv")).unwrap();
    let again = memsim(&["summarize", tmp.path().to_str().unwrap()]);
    assert!(again.status.success(), "{}", text(&again.stderr));
    assert_eq!(
        fs::read_to_string(tmp.path().join("summary.csv")).unwrap(),
        summary
    );
}

#[test]
fn spatial_run_has_per_strain_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let out = memsim(&[
        "run",
        "polyclonal",
        "--replicates",
        "1",
        "--set",
        "spatial.total_ticks=120",
        "--set",
        "spatial.injections.2.tick=100",
        "--set",
        "run.plots=false",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("polyclonal/replicate_000.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    for col in [
        "tick",
        "memory_A",
        "memory_B",
        "antibodies_A",
        "antibodies_B",
        "antigen_A",
        "antigen_B",
        "il15_mass",
        "attractant_mass",
    ] {
        assert!(
            header.split(',').any(|h| h == col),
            "missing {col} in {header}"
        );
    }
    assert_eq!(csv.lines().count(), 121);
    assert!(!tmp.path().join("polyclonal/summary.csv").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().to_str().unwrap();
    let code = |args: &[&str]| memsim(args).status.code();

    assert_eq!(
        code(&["run", "no-such-scenario", "--out", out_dir]),
        Some(1)
    );
    assert_eq!(
        code(&["run", "none-smallgap", "--out", "/definitely/not/here"]),
        Some(1)
    );
    assert_eq!(
        code(&[
            "run",
            "none-smallgap",
            "--out",
            out_dir,
            "--set",
            "clonal.theory.death_rate=0"
        ]),
        Some(1)
    );
    assert_eq!(
        code(&[
            "run",
            "none-smallgap",
            "--out",
            out_dir,
            "--set",
            "nonsense"
        ]),
        Some(1)
    );

    let err = text(
        &memsim(&[
            "run",
            "none-smallgap",
            "--out",
            out_dir,
            "--set",
            "clonal.binding.radius=-4",
        ])
        .stderr,
    );
    assert!(err.contains("clonal.binding.radius"), "{err}");

    // a file where the run directory should go is a runtime failure
    fs::write(tmp.path().join("none-smallgap"), "in the way").unwrap();
    assert_eq!(
        code(&[
            "run",
            "none-smallgap",
            "--replicates",
            "1",
            "--out",
            out_dir
        ]),
        Some(2)
    );

    let empty = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&["summarize", empty.path().to_str().unwrap()]),
        Some(2)
    );
}

#[test]
fn scenario_files_run_by_path() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("mine.toml");
    fs::write(
        &file,
        "name = \"mine\"\nengine = \"clonal\"\n[run]\nreplicates = 1\nplots = false\n[clonal]\ntotal_generations = 200\n",
    )
    .unwrap();
    let out = memsim(&[
        "run",
        file.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(Path::new(&tmp.path().join("mine/replicate_000.csv")).is_file());
}
