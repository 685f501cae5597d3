mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::shipped_dataset;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spatial-gcn"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn value(doc: &str, key: &str) -> f64 {
    let t: toml::Table = toml::from_str(doc).unwrap();
    match &t[key] {
        toml::Value::Float(f) => *f,
        toml::Value::Integer(i) => *i as f64,
        v => panic!("{key} = {v:?}"),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// A 150-point dataset and a config pointing at it.
fn small_setup(dir: &Path) -> (PathBuf, PathBuf) {
    let spec = write(
        dir,
        "spec.toml",
        "n_points = 150\nn_clusters = 3\nwidth = 3000.0\nheight = 3000.0\nseed = 3\n",
    );
    let data = dir.join("small.csv");
    ok(&["gen", "--spec", s(&spec), "--out", s(&data)]);
    let cfg = write(
        dir,
        "cfg.toml",
        &format!(
            "dataset = \"{}\"\noutput_dir = \"{}\"\nepochs = 20\ntrain_fraction = 0.2\n",
            s(&data),
            s(&dir.join("out"))
        ),
    );
    (data, cfg)
}

#[test]
fn gen_writes_documented_schema_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let out = ok(&["gen", "--out", s(&a)]);
    assert_eq!(value(&out, "points"), 2000.0);
    ok(&["gen", "--out", s(&b)]);
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("id,x,y,type,checkins\n"));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(shipped_dataset()).unwrap()
    );
}

#[test]
fn gen_rejects_zero_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bad.toml", "n_clusters = 0\n");
    let o = run(&[
        "gen",
        "--spec",
        s(&spec),
        "--out",
        s(&dir.path().join("x.csv")),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("cluster"));
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn graph_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let pair = write(
        d,
        "pair.csv",
        "id,x,y,type,checkins\na,0,0,hotel,1\nb,500,0,hotel,2\n",
    );
    let edges = d.join("e.csv");
    let out = ok(&[
        "graph",
        "--dataset",
        s(&pair),
        "--radius",
        "600",
        "--out",
        s(&edges),
    ]);
    assert_eq!(value(&out, "edges"), 1.0);
    assert_eq!(
        std::fs::read_to_string(&edges).unwrap(),
        "src,dst,weight\na,b,1\n"
    );

    let far = write(
        d,
        "far.csv",
        "id,x,y,type,checkins\na,0,0,hotel,1\nb,5000,0,hotel,2\nc,0,5000,hotel,3\n",
    );
    let out = ok(&["graph", "--dataset", s(&far), "--out", s(&edges)]);
    assert_eq!(value(&out, "edges"), 0.0);
    assert_eq!(value(&out, "isolated"), 3.0);
    assert_eq!(std::fs::read_to_string(&edges).unwrap(), "src,dst,weight\n");

    let mut ten = String::from("id,x,y,type,checkins\n");
    for i in 0..10 {
        ten.push_str(&format!("n{i},{},{},hotel,1\n", i * 37 % 11 * 90, i * 130));
    }
    let ten = write(d, "ten.csv", &ten);
    let spectrum = d.join("spectrum.csv");
    let out = ok(&[
        "graph",
        "--dataset",
        s(&ten),
        "--scheme",
        "gaussian",
        "--k",
        "3",
        "--out",
        s(&edges),
        "--dump-spectrum",
        s(&spectrum),
    ]);
    assert_eq!(value(&out, "edges"), 45.0);
    assert_eq!(std::fs::read_to_string(&edges).unwrap().lines().count(), 46);
    assert_eq!(
        std::fs::read_to_string(&spectrum).unwrap().lines().count(),
        11
    );

    let o = run(&[
        "graph",
        "--dataset",
        s(&ten),
        "--scheme",
        "binary",
        "--radius",
        "-1",
        "--out",
        s(&edges),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_default_config_writes_full_history() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&[
        "train",
        "--config",
        s(&common::data_dir().join("train_default.toml")),
        "--output-dir",
        s(dir.path()),
    ]);
    assert!(value(&out, "validation_mae") < 0.7 * value(&out, "constant_mean_mae"));
    let h = std::fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert_eq!(h.lines().count(), 2001);
    assert!(h.starts_with("epoch,loss,abs_error\n1,"));
    assert!(dir.path().join("model.toml").exists());
    assert!(dir.path().join("metrics.toml").exists());
}

#[test]
fn train_epoch_override_and_missing_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cfg) = small_setup(dir.path());
    ok(&["train", "--config", s(&cfg), "--epochs", "3"]);
    let h = std::fs::read_to_string(dir.path().join("out/history.csv")).unwrap();
    assert_eq!(h.lines().count(), 4);

    let o = run(&[
        "train",
        "--config",
        s(&cfg),
        "--dataset",
        "/no/such/points.csv",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/points.csv"));
}

#[test]
fn exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cfg) = small_setup(dir.path());
    let diverge = run(&[
        "train",
        "--config",
        s(&cfg),
        "--learning-rate",
        "1e300",
        "--dropout",
        "0",
        "--epochs",
        "5",
    ]);
    let bad_data = write(
        dir.path(),
        "neg.csv",
        "id,x,y,type,checkins\na,0,0,hotel,-4\n",
    );
    let data_err = run(&["train", "--config", s(&cfg), "--dataset", s(&bad_data)]);
    let cfg_err = run(&["train", "--config", s(&cfg), "--dropout", "1.5"]);
    assert_eq!(diverge.status.code(), Some(4));
    assert_eq!(data_err.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&data_err.stderr).contains("row 2"));
    assert_eq!(cfg_err.status.code(), Some(2));
}

#[test]
fn predict_round_trip_and_dimension_check() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (data, cfg) = small_setup(d);
    ok(&["train", "--config", s(&cfg)]);
    let ckpt = d.join("out/model.toml");
    let p1 = d.join("p1.csv");
    let p2 = d.join("p2.csv");
    ok(&[
        "predict",
        "--config",
        s(&cfg),
        "--checkpoint",
        s(&ckpt),
        "--out",
        s(&p1),
    ]);

    // re-save through a copy and predict again
    let copy = d.join("copy.toml");
    std::fs::copy(&ckpt, &copy).unwrap();
    ok(&[
        "predict",
        "--dataset",
        s(&data),
        "--checkpoint",
        s(&copy),
        "--out",
        s(&p2),
    ]);
    let a = std::fs::read(&p1).unwrap();
    assert_eq!(a, std::fs::read(&p2).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("id,predicted_checkins,actual_checkins\n"));
    assert_eq!(text.lines().count(), 151);

    let spec5 = write(
        d,
        "spec5.toml",
        "n_points = 30\nn_types = 5\nn_clusters = 2\nwidth = 2000.0\nheight = 2000.0\n",
    );
    let data5 = d.join("five.csv");
    ok(&["gen", "--spec", s(&spec5), "--out", s(&data5)]);
    let o = run(&[
        "predict",
        "--dataset",
        s(&data5),
        "--types",
        "type0,type1,type2,type3,type4",
        "--checkpoint",
        s(&ckpt),
        "--out",
        s(&d.join("p5.csv")),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("expected 9") && err.contains("found 5"),
        "{err}"
    );
}

#[test]
fn eval_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let same = write(
        d,
        "same.csv",
        "id,predicted_checkins,actual_checkins\na,3,3\nb,7.5,7.5\n",
    );
    assert_eq!(value(&ok(&["eval", s(&same)]), "mae"), 0.0);
    let hand = write(
        d,
        "hand.csv",
        "id,predicted_checkins,actual_checkins\na,90,100\nb,10,10\n",
    );
    assert_eq!(value(&ok(&["eval", s(&hand)]), "mae"), 5.0);
    let blank = write(
        d,
        "blank.csv",
        "id,predicted_checkins,actual_checkins\na,90,\n",
    );
    assert_eq!(run(&["eval", s(&blank)]).status.code(), Some(3));

    let vals = [1.0, 2.0, 2.0, 3.0, 10.0, 40.0, 7.0];
    let mut text = String::from("id,predicted_checkins,actual_checkins\n");
    for (i, v) in vals.iter().enumerate() {
        text.push_str(&format!("n{i},{},{}\n", v * 0.5 + 1.0, v));
    }
    let f = write(d, "dist.csv", &text);
    let doc = ok(&["eval", s(&f), "--distribution", "--bins", "4"]);
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let m = |k: i32| vals.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
    let var = m(2) * n / (n - 1.0);
    let skew = m(3) / m(2).powf(1.5);
    let kurt = m(4) / (m(2) * m(2)) - 3.0;
    assert!((value(&doc, "actual_mean") - mean).abs() < 1e-9);
    assert!((value(&doc, "actual_variance") - var).abs() < 1e-9);
    assert!((value(&doc, "actual_skewness") - skew).abs() < 1e-9);
    assert!((value(&doc, "actual_excess_kurtosis") - kurt).abs() < 1e-9);
    // the predicted column is an affine image with positive slope
    assert!((value(&doc, "predicted_skewness") - skew).abs() < 1e-9);
    let t: toml::Table = toml::from_str(&doc).unwrap();
    assert_eq!(t["actual_binning"].as_str(), Some("log"));
    let counts = t["actual_bin_counts"].as_array().unwrap();
    assert_eq!(counts.len(), 4);
    assert_eq!(counts.iter().map(|c| c.as_float().unwrap()).sum::<f64>(), n);
}

fn read_cols(p: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(p)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn runs_envelope_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (_, cfg) = small_setup(d);

    let one = d.join("one");
    ok(&[
        "runs",
        "--config",
        s(&cfg),
        "-r",
        "1",
        "--output-dir",
        s(&one),
    ]);
    let env = read_cols(&one.join("envelope.csv"));
    assert_eq!(env.len(), 20);
    assert!(env.iter().all(|r| r[2] == 0.0));

    let a = d.join("a");
    let b = d.join("b");
    ok(&[
        "runs",
        "--config",
        s(&cfg),
        "-r",
        "3",
        "--seed-base",
        "40",
        "--output-dir",
        s(&a),
    ]);
    ok(&[
        "runs",
        "--config",
        s(&cfg),
        "-r",
        "3",
        "--seed-base",
        "40",
        "--output-dir",
        s(&b),
        "--sequential",
    ]);
    assert_eq!(
        std::fs::read(a.join("envelope.csv")).unwrap(),
        std::fs::read(b.join("envelope.csv")).unwrap()
    );
    let env = read_cols(&a.join("envelope.csv"));
    let runs: Vec<_> = [40, 41, 42]
        .iter()
        .map(|s| read_cols(&a.join(format!("runs/run_{s}.csv"))))
        .collect();
    for (e, row) in env.iter().enumerate() {
        let vals: Vec<f64> = runs.iter().map(|r| r[e][2]).collect();
        let mean = vals.iter().sum::<f64>() / 3.0;
        assert!((row[1] - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        assert_eq!(row[3], vals.iter().copied().fold(f64::INFINITY, f64::min));
        assert_eq!(
            row[4],
            vals.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        );
    }
}

#[test]
fn heatmap_outputs_and_shared_scale() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (data, cfg) = small_setup(d);
    ok(&["train", "--config", s(&cfg)]);
    let pred = d.join("pred.csv");
    ok(&[
        "predict",
        "--config",
        s(&cfg),
        "--checkpoint",
        s(&d.join("out/model.toml")),
        "--out",
        s(&pred),
    ]);
    let maps = d.join("maps");
    ok(&[
        "heatmap",
        "--dataset",
        s(&data),
        "--predictions",
        s(&pred),
        "--output-dir",
        s(&maps),
        "--shared-scale",
        "--cell-size",
        "100",
        "--bandwidth",
        "150",
    ]);
    for stem in ["predicted", "actual"] {
        for ext in ["csv", "pgm", "meta.toml"] {
            assert!(maps.join(format!("{stem}.{ext}")).exists(), "{stem}.{ext}");
        }
    }
    let mp = std::fs::read_to_string(maps.join("predicted.meta.toml")).unwrap();
    let ma = std::fs::read_to_string(maps.join("actual.meta.toml")).unwrap();
    assert_eq!(value(&mp, "value_max"), value(&ma, "value_max"));
    let (w, h) = (value(&mp, "width") as usize, value(&mp, "height") as usize);
    let pgm = std::fs::read(maps.join("predicted.pgm")).unwrap();
    let header = format!("P5\n{w} {h}\n255\n");
    assert_eq!(&pgm[..header.len()], header.as_bytes());
    assert_eq!(pgm.len(), header.len() + w * h);

    let out = ok(&[
        "heatmap",
        "--dataset",
        s(&data),
        "--predictions",
        s(&pred),
        "--output-dir",
        s(&maps),
        "--type",
        "hotel",
    ]);
    assert!(value(&out, "points") < 150.0);
    assert!(maps.join("predicted_hotel.pgm").exists());
    let o = run(&[
        "heatmap",
        "--dataset",
        s(&data),
        "--predictions",
        s(&pred),
        "--output-dir",
        s(&maps),
        "--type",
        "castle",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
