use fairbench::data::{load_csv, load_csv_reader, write_csv, ColumnRole, ColumnSpec, Schema, ValueKind};
use proptest::prelude::*;

fn schema() -> Schema {
    Schema::new([
        ("x".to_string(), ColumnSpec::new(ColumnRole::Feature, ValueKind::Numeric)),
        ("color".to_string(), ColumnSpec::new(ColumnRole::Feature, ValueKind::Categorical)),
        ("group".to_string(), ColumnSpec::new(ColumnRole::Sensitive, ValueKind::Categorical)),
        ("y".to_string(), ColumnSpec::new(ColumnRole::Label, ValueKind::Numeric)),
        ("y_fair".to_string(), ColumnSpec::new(ColumnRole::UnbiasedLabel, ValueKind::Numeric)),
    ])
}

fn row() -> impl Strategy<Value = (f64, usize, usize, u8, u8)> {
    (-1e3..1e3f64, 0..3usize, 0..3usize, 0..2u8, 0..2u8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_load_preserves_dataset(rows in prop::collection::vec(row(), 2..40)) {
        let mut text = String::from("x,color,group,y,y_fair\n");
        for (x, c, g, y, u) in &rows {
            text.push_str(&format!("{x:e},{},{},{y},{u}\n", ["red", "green", "blue"][*c], ["a", "b", "c"][*g]));
        }
        let original = load_csv_reader(text.as_bytes(), &schema()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let written = write_csv(&original, &path).unwrap();
        let reloaded = load_csv(&path, &written).unwrap();

        prop_assert_eq!(original.labels(), reloaded.labels());
        prop_assert_eq!(original.unbiased_labels(), reloaded.unbiased_labels());
        prop_assert_eq!(original.sensitive(), reloaded.sensitive());
        prop_assert_eq!(original.feature_names(), reloaded.feature_names());
        for (a, b) in original.features().as_slice().iter().zip(reloaded.features().as_slice()) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{} vs {}", a, b);
        }
    }
}

#[test]
fn bad_label_names_row_and_column() {
    let text = "x,color,group,y,y_fair\n1,red,a,1,0\n2,red,b,2,0\n";
    let err = load_csv_reader(text.as_bytes(), &schema()).unwrap_err().to_string();
    assert!(err.contains('y') && err.contains('2'), "{err}");
}

#[test]
fn missing_declared_column() {
    let text = "x,color,y,y_fair\n1,red,1,0\n";
    let err = load_csv_reader(text.as_bytes(), &schema()).unwrap_err().to_string();
    assert!(err.contains("group"), "{err}");
}
