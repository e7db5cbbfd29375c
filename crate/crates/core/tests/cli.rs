use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_emission-sim"))
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const SMALL: &str = "[physics]\np = 3\n[discretization]\nT = 20.0\nN = 40\n";

fn run(args: &[&str]) -> std::process::Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn run_writes_trajectory_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("o");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,step,node,re_alpha_0,im_alpha_0,re_alpha_1,im_alpha_1,re_alpha_2,im_alpha_2,p_a"
    );
    assert_eq!(lines.count(), 40 * 4);
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["p"], 3);
    assert!(m["soe_modes"].as_u64().unwrap() > 0);
    assert!(!out.join("field.csv").exists());
}

#[test]
fn manifest_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let cache = dir.path().join("cache");
    assert!(run(&["run", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]).status.success());
    let manifest = a.join("manifest.json");
    let o = run(&[
        "run",
        "--config",
        manifest.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
        "--cache",
        cache.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read(a.join("trajectory.csv")).unwrap(),
        std::fs::read(b.join("trajectory.csv")).unwrap()
    );
    assert!(std::fs::read_dir(&cache).unwrap().count() > 0);
}

#[test]
fn config_errors_exit_2_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    for (body, field) in [
        ("[physics]\ng = \"strong\"\n", "physics.g"),
        ("[physics]\nsigmaa = 0.1\n", "physics"),
        ("[discretization]\nN = 0\n", "discretization"),
        ("[scenario]\nkind = \"wavepacket\"\n[scenario.wavepacket]\nxi0 = 0.4\n", "wavepacket"),
    ] {
        let cfg = write(dir.path(), "bad.toml", body);
        let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(o.status.code(), Some(2), "{body}: {err}");
        assert!(err.contains(field), "{body}: {err}");
    }
}

#[test]
fn unreachable_soe_tolerance_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{SMALL}[soe]\ntol = 1e-20\n"));
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bench_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{SMALL}[bench]\nn_list = [40]\nrepeats = 1\n"));
    let out = dir.path().join("o");
    let o = run(&["bench", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn field_writes_grid_and_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let body = "[physics]\np = 1\n[discretization]\nT = 5.0\nN = 50\n[outputs.field]\npath = \"field.csv\"\nradius = 50.0\npoints = 1001\ntimes = [5.0]\n";
    let cfg = write(dir.path(), "c.toml", body);
    let out = dir.path().join("o");
    let o = run(&["field", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let field = std::fs::read_to_string(out.join("field.csv")).unwrap();
    assert!(field.starts_with("x,t,re_u,im_u,re_scattered,im_scattered\n"));
    assert_eq!(field.lines().count(), 1002);
}
