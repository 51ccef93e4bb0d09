use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
[generate]
seed = 5
[[generate.jobs]]
generator = "rue"
n = 12
count = 2
[[generate.jobs]]
generator = "netgen"
n = 20
clusters = 2

[plan]
id = "demo"
runs = 2
cutoff_ms = 30
time_mode = "evals"
[[plan.solvers]]
id = "ils"
config = { family = "ils" }
[[plan.solvers]]
id = "ga"
config = { family = "ga", crossover = "eax", population = 8 }

[analyze]
alphas = [0.05, 0.0]
time_points = 8
"#;

fn tspanytime(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tspanytime"))
        .args(args)
        .env("TSPANYTIME_OUT", out)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("pipeline.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn full_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    let cfg = write_config(out, CONFIG);

    let g = tspanytime(out, &["--config", &cfg, "generate"]);
    assert_eq!(
        g.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&g.stderr)
    );
    assert_eq!(stdout(&g).matches("event=generated").count(), 3);
    let first = snapshot(&out.join("instances"));
    assert_eq!(first.iter().filter(|(n, _)| n.ends_with(".tsp")).count(), 3);
    assert!(first.iter().any(|(n, _)| n == "manifest.json"));
    tspanytime(out, &["--config", &cfg, "generate"]);
    assert_eq!(snapshot(&out.join("instances")), first);

    let s = tspanytime(out, &["--config", &cfg, "--jobs", "2", "solve"]);
    assert_eq!(
        s.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&s.stderr)
    );
    assert_eq!(stdout(&s).matches("event=run ").count(), 12);
    let store = out.join("plans/demo/trajectories.jsonl");
    let text = std::fs::read_to_string(&store).unwrap();
    assert_eq!(text.lines().count(), 12);

    // interrupted store: drop the last three lines and resume
    let kept: Vec<&str> = text.lines().take(9).collect();
    std::fs::write(&store, kept.join("\n") + "\n").unwrap();
    let r = tspanytime(out, &["--config", &cfg, "solve"]);
    assert_eq!(stdout(&r).matches("event=run ").count(), 3);
    assert_eq!(std::fs::read_to_string(&store).unwrap(), text);

    let a = tspanytime(out, &["--config", &cfg, "analyze"]);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    let results = out.join("analysis/demo");
    let csvs = snapshot(&results);
    let names: Vec<&str> = csvs.iter().map(|(n, _)| n.as_str()).collect();
    assert!(
        names.contains(&"success.csv")
            && names.contains(&"fht.csv")
            && names.contains(&"registry.json")
    );
    assert!(names.contains(&"curves_rue_n12.csv") && names.contains(&"curves_netgen_n20.csv"));
    let success = String::from_utf8(
        csvs.iter()
            .find(|(n, _)| n == "success.csv")
            .unwrap()
            .1
            .clone(),
    )
    .unwrap();
    assert!(success.starts_with("# config_hash="));
    assert!(success.contains("version="));
    tspanytime(out, &["--config", &cfg, "analyze"]);
    assert_eq!(snapshot(&results), csvs);

    let v = tspanytime(
        out,
        &[
            "validate",
            store.to_str().unwrap(),
            out.join("instances").to_str().unwrap(),
        ],
    );
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));

    let u = tspanytime(out, &["--config", &cfg, "registry", "update"]);
    assert_eq!(
        u.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&u.stderr)
    );
    let show = stdout(&tspanytime(out, &["--config", &cfg, "registry", "show"]));
    assert_eq!(show.matches("source=exact-dp").count(), 2);
    assert_eq!(show.matches("source=best-known").count(), 1);
}

#[test]
fn evals_mode_rerun_is_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let cfg = write_config(dir, CONFIG);
        tspanytime(dir, &["--config", &cfg, "generate"]);
        let s = tspanytime(dir, &["--config", &cfg, "--jobs", "1", "solve"]);
        assert_eq!(s.status.code(), Some(0));
    }
    let read = |d: &Path| std::fs::read(d.join("plans/demo/trajectories.jsonl")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    let bad_gen = write_config(out, &CONFIG.replace("\"netgen\"", "\"voronoi\""));
    let o = tspanytime(out, &["--config", &bad_gen, "generate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("instances").exists());

    let unknown = write_config(
        out,
        &CONFIG.replace("time_points = 8", "time_points = 8\nbogus = true"),
    );
    let o = tspanytime(out, &["--config", &unknown, "analyze"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));

    let empty_alpha = write_config(out, &CONFIG.replace("alphas = [0.05, 0.0]", "alphas = []"));
    assert_eq!(
        tspanytime(out, &["--config", &empty_alpha, "analyze"])
            .status
            .code(),
        Some(2)
    );

    // plan without generated instances on disk
    let cfg = write_config(out, CONFIG);
    assert_eq!(
        tspanytime(out, &["--config", &cfg, "solve"]).status.code(),
        Some(2)
    );
    assert_eq!(tspanytime(out, &["solve"]).status.code(), Some(2));
    assert_eq!(tspanytime(out, &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn missing_references_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    let text = format!("{CONFIG}\n[references]\nregistry = \"empty-registry.json\"\n");
    let cfg = write_config(out, &text);
    tspanytime(out, &["--config", &cfg, "generate"]);
    tspanytime(out, &["--config", &cfg, "solve"]);
    let o = tspanytime(out, &["--config", &cfg, "analyze"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("rue-n12-000") && err.contains("netgen-n20-000"),
        "{err}"
    );
}

#[test]
fn validate_flags_corrupt_store() {
    let tmp = tempfile::tempdir().unwrap();
    let store = tmp.path().join("bad.jsonl");
    std::fs::write(
        &store,
        concat!(
            r#"{"plan":"p","instance":"i","group":"rue","n":5,"solver":"s","run":0,"seed":1,"cutoff_ms":10,"#,
            r#""time_mode":"evals","status":"completed","events":[{"t_ms":1,"evals":1,"len":10},{"t_ms":2,"evals":2,"len":12}],"#,
            r#""final_len":12,"overshoot_ms":0,"host":{"os":"linux","arch":"x86_64"}}"#,
            "\n"
        ),
    )
    .unwrap();
    let o = tspanytime(tmp.path(), &["validate", store.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("status=invalid"));
}
