use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spiral(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spiral"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// One second of the ridge-plane preset, analyzed with a small spiral bank.
fn analyzed(dir: &Path, name: &str) -> std::path::PathBuf {
    let wav = dir.join("in.wav");
    if !wav.exists() {
        let o = spiral(&["synth", "--preset", "ridge_plane", "--duration", "1", "-o", p(&wav)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let out = dir.join(name);
    let o = spiral(&[
        "analyze", p(&wav), "--q1", "8", "-J", "4", "--alpha-range", "2:16", "--beta-range", "1:2", "-o", p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn analysis_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = analyzed(dir.path(), "a");
    let b = analyzed(dir.path(), "b");
    for name in ["x1.f32", "S1.f32", "x2.f32", "x2.meta.json"] {
        let (x, y) = (fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
        assert!(!x.is_empty());
        assert!(x == y, "{name} differs between runs");
    }
    let cfg: serde_json::Value = serde_json::from_slice(&fs::read(a.join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg["Q1"], 8);
}

#[test]
fn spiral_mode_needs_two_octaves() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("in.wav");
    assert!(spiral(&["synth", "--preset", "attack", "--duration", "0.5", "-o", p(&wav)]).status.success());
    let o = spiral(&["analyze", p(&wav), "-J", "1", "--mode", "spiral", "-o", p(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`J`"), "{}", stderr(&o));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = spiral(&["analyze", p(&dir.path().join("absent.wav")), "-o", p(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("absent.wav"));
}

#[test]
fn clipped_partials_warn() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    fs::write(
        &model,
        r#"{"source_warp": {"family": "linear_scale", "rate": 1000.0},
            "filter_warp": {"family": "identity"},
            "envelope": {"family": "flat"},
            "partial_count": 40}"#,
    )
    .unwrap();
    let wav = dir.path().join("s.wav");
    let o = spiral(&["synth", "--config", p(&model), "--duration", "0.25", "-o", p(&wav)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("warning: "), "{}", stderr(&o));
    assert!(wav.exists());
}

#[test]
fn plot_data_slices() {
    let dir = tempfile::tempdir().unwrap();
    let out = analyzed(dir.path(), "a");
    let x1 = out.join("x1");

    let csv = dir.path().join("empty.csv");
    let o = spiral(&["plot-data", p(&x1), "--fix", "time=0.5", "--range", "lambda1=1:2", "-o", p(&csv)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&csv).unwrap().trim_end(), "lambda1_hz,value");

    let o = spiral(&["plot-data", p(&x1), "--fix", "time=0.50123", "--range", "lambda1=100:20000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning: "), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "lambda1_hz,value");
    assert!(rows.len() > 10);

    let o = spiral(&["plot-data", p(&x1), "--fix", "beta=1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("beta_cpo"), "{}", stderr(&o));
}
