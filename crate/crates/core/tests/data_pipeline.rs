use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use hqnn::data::{generate_synthetic, load_csv, prepare, split, DatasetId, SYNTHETIC_ROWS};
use hqnn::model::{HybridModel, ModelKind};
use hqnn::trainer::{best_metrics, train, TrainConfig};
use hqnn::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

const DIABETES_HEADER: &str =
    "Pregnancies,Glucose,BloodPressure,SkinThickness,Insulin,BMI,DiabetesPedigreeFunction,Age,Outcome";

/// Same shape and class balance as the Pima diabetes table (500 / 268).
fn diabetes_fixture(dir: &TempDir) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut s = format!("{DIABETES_HEADER}\n");
    for i in 0..768 {
        let y = u8::from(i >= 500);
        let shift = f64::from(y) * 30.0;
        writeln!(
            s,
            "{},{:.0},{:.0},{:.0},{:.0},{:.1},{:.3},{},{}",
            rng.random_range(0..14),
            rng.random_range(60.0..170.0) + shift,
            rng.random_range(40.0..110.0),
            rng.random_range(0.0..60.0),
            rng.random_range(0.0..400.0),
            rng.random_range(18.0..50.0) + shift / 10.0,
            rng.random_range(0.08..2.4),
            rng.random_range(21..81),
            y
        )
        .unwrap();
    }
    let path = dir.path().join("diabetes.csv");
    std::fs::write(&path, s).unwrap();
    path
}

/// Same shape and class balance as the banknote table (762 / 610).
fn banknote_fixture(dir: &TempDir) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut s = String::from("variance,skewness,curtosis,entropy,class\n");
    for i in 0..1372 {
        let y = u8::from(i >= 762);
        let sign = if y == 1 { -1.0 } else { 1.0 };
        writeln!(
            s,
            "{:.5},{:.5},{:.5},{:.5},{}",
            sign * 2.0 + rng.random_range(-4.0..4.0),
            sign * 3.0 + rng.random_range(-9.0..9.0),
            rng.random_range(-5.0..17.0),
            rng.random_range(-8.0..2.5),
            y
        )
        .unwrap();
    }
    let path = dir.path().join("banknote.csv");
    std::fs::write(&path, s).unwrap();
    path
}

#[test]
fn diabetes_shaped_table_loads_and_splits() {
    let dir = TempDir::new().unwrap();
    let path = diabetes_fixture(&dir);
    let id = DatasetId::Diabetes;
    let data = load_csv(&path, id.default_features(), id.target_column()).unwrap();
    assert_eq!(data.len(), 768);
    assert_eq!(data.n_features(), 3);
    assert_eq!(data.names(), ["Glucose", "BMI", "Age"]);
    assert_eq!(data.class_counts(), (500, 268));

    let p = prepare(&data, 0.8, 3).unwrap();
    assert_eq!(p.train.len() + p.validation.len(), 768);
    assert_eq!(p.validation.len(), 153);
    for set in [&p.train, &p.validation] {
        assert!(set.features().iter().flatten().all(|v| (0.0..=PI).contains(v)));
    }
    for j in 0..3 {
        let col = p.train.column(j);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo.abs() < 1e-12 && (hi - PI).abs() < 1e-12);
    }
}

#[test]
fn banknote_shaped_table_loads_with_overrides() {
    let dir = TempDir::new().unwrap();
    let path = banknote_fixture(&dir);
    let id = DatasetId::Banknote;
    let data = load_csv(&path, id.default_features(), id.target_column()).unwrap();
    assert_eq!((data.len(), data.n_features()), (1372, 2));
    assert_eq!(data.class_counts(), (762, 610));
    let all = load_csv(&path, &["variance", "skewness", "curtosis", "entropy"], "class").unwrap();
    assert_eq!(all.n_features(), 4);
    assert!(matches!(
        load_csv(&path, &["variance", "kurtosis"], "class"),
        Err(Error::Schema(_))
    ));
}

#[test]
fn malformed_cells_report_their_position() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "a,b,class\n1,2,0\n3,oops,1\n").unwrap();
    match load_csv(&path, &["a", "b"], "class") {
        Err(Error::Parse { row, col, .. }) => assert_eq!((row, col), (3, 2)),
        other => panic!("expected a parse error, got {other:?}"),
    }
    std::fs::write(&path, "a,b,class\n1,2,0\n3,4,2\n").unwrap();
    assert!(load_csv(&path, &["a", "b"], "class").is_err());
    assert!(matches!(
        load_csv(dir.path().join("missing.csv"), &["a"], "class"),
        Err(Error::Io { .. })
    ));
}

#[test]
fn synthetic_split_is_deterministic_and_sized() {
    let data = generate_synthetic(11);
    assert_eq!(data.len(), SYNTHETIC_ROWS);
    let (a_train, a_val) = split(&data, 0.8, 4).unwrap();
    let (b_train, b_val) = split(&data, 0.8, 4).unwrap();
    assert_eq!((a_train.len(), a_val.len()), (280, 70));
    assert_eq!(a_train.features(), b_train.features());
    assert_eq!(a_val.targets(), b_val.targets());
    let (c_train, _) = split(&data, 0.8, 5).unwrap();
    assert_ne!(a_train.features(), c_train.features());
}

#[test]
fn short_classical_training_beats_chance() {
    let p = prepare(&generate_synthetic(0), 0.8, 0).unwrap();
    let config = TrainConfig {
        epochs: 15,
        model: ModelKind::ClassicalNet,
        ..TrainConfig::default()
    };
    let model = HybridModel::new(ModelKind::ClassicalNet, 3).unwrap();
    let out = train(&model, &p.train, &p.validation, &config).unwrap();
    let (loss, acc) = best_metrics(&out.history).unwrap();
    assert!(loss < 2f64.ln() - 0.1, "loss {loss}");
    assert!(acc > 0.75, "accuracy {acc}");
}
