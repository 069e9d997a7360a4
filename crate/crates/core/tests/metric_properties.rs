use fairbench::data::{
    encode_sensitive, AttributeKind, ColumnKind, FeatureColumn, Matrix, SensitiveAttribute, SensitiveEncoding,
    SensitiveFormat, TabularDataset,
};
use fairbench::metrics::{harden, statistic, violation, DENOM_EPS};
use fairbench::FairnessNotion;
use proptest::prelude::*;

fn notion() -> impl Strategy<Value = FairnessNotion> {
    (0..7usize).prop_map(|i| FairnessNotion::ALL[i])
}

fn sample() -> impl Strategy<Value = (f64, u8, usize, usize, f64)> {
    (0.0..1.0f64, 0..2u8, 0..2usize, 0..3usize, 0.2..3.0f64)
}

fn dataset(rows: &[(f64, u8, usize, usize, f64)]) -> TabularDataset {
    let n = rows.len();
    let attr = |name: &str, d: usize, codes: Vec<usize>| SensitiveAttribute {
        name: name.into(),
        kind: AttributeKind::Categorical,
        categories: (0..d).map(|c| c.to_string()).collect(),
        codes,
    };
    TabularDataset::new(
        Matrix::zeros(n, 1),
        vec![FeatureColumn {
            name: "x".into(),
            kind: ColumnKind::Numeric { mean: 0.0, std: 1.0 },
        }],
        rows.iter().map(|r| r.1).collect(),
        None,
        vec![attr("a", 2, rows.iter().map(|r| r.2).collect()), attr("b", 3, rows.iter().map(|r| r.3).collect())],
        Some(rows.iter().map(|r| r.4).collect()),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn intersectional_dominates_parallel_dominates_binary(
        rows in prop::collection::vec(sample(), 12..60),
        notion in notion(),
        hard in any::<bool>(),
    ) {
        let ds = dataset(&rows);
        let soft: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let preds = if hard { harden(&soft) } else { soft };
        let mut values = Vec::new();
        for format in [SensitiveFormat::Binary, SensitiveFormat::Parallel, SensitiveFormat::Intersectional] {
            let Ok(enc) = encode_sensitive(&ds, format, 0) else { return Ok(()) };
            let Ok(stats) = statistic(notion, &preds, ds.labels(), Some(ds.weights()), &enc) else { return Ok(()) };
            if !stats.defined.iter().all(|&d| d) || stats.gamma_mean.abs() <= DENOM_EPS {
                return Ok(());
            }
            values.push(violation(&stats).unwrap().value);
        }
        prop_assert!(values[1] + 1e-12 >= values[0]);
        prop_assert!(values[2] + 1e-12 >= values[1]);
    }

    #[test]
    fn duplicating_every_sample_keeps_violation(
        rows in prop::collection::vec(sample(), 4..40),
        notion in notion(),
    ) {
        let groups: Vec<usize> = rows.iter().map(|r| r.3).collect();
        let preds: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let labels: Vec<u8> = rows.iter().map(|r| r.1).collect();
        let weights: Vec<f64> = rows.iter().map(|r| r.4).collect();
        let names = vec!["0".to_string(), "1".to_string(), "2".to_string()];
        let double = |v: &[f64]| [v, v].concat();
        let once = SensitiveEncoding::from_groups(&groups, names.clone());
        let twice = SensitiveEncoding::from_groups(&[groups.clone(), groups.clone()].concat(), names);
        let (Ok(once), Ok(twice)) = (once, twice) else { return Ok(()) };
        let a = statistic(notion, &preds, &labels, Some(&weights), &once).and_then(|s| violation(&s));
        let b = statistic(notion, &double(&preds), &[labels.clone(), labels.clone()].concat(), Some(&double(&weights)), &twice)
            .and_then(|s| violation(&s));
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert!((a.value - b.value).abs() <= 1e-12),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn scaling_weights_keeps_violation(
        rows in prop::collection::vec(sample(), 4..40),
        notion in notion(),
        scale in 0.1..10.0f64,
    ) {
        let groups: Vec<usize> = rows.iter().map(|r| r.2).collect();
        let Ok(enc) = SensitiveEncoding::from_groups(&groups, vec!["0".into(), "1".into()]) else { return Ok(()) };
        let preds: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let labels: Vec<u8> = rows.iter().map(|r| r.1).collect();
        let w: Vec<f64> = rows.iter().map(|r| r.4).collect();
        let ws: Vec<f64> = w.iter().map(|x| x * scale).collect();
        let a = statistic(notion, &preds, &labels, Some(&w), &enc).and_then(|s| violation(&s));
        let b = statistic(notion, &preds, &labels, Some(&ws), &enc).and_then(|s| violation(&s));
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!((a.value - b.value).abs() <= 1e-9);
            prop_assert!(a.value >= 0.0);
        }
    }
}
