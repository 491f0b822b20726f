use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vcistack::data::{RowKey, YearMonth};
use vcistack::evalreport::*;
use vcistack::indices::SupervisedDataset;

fn classes(v: &[u8]) -> Vec<DroughtClass> {
    v.iter().map(|c| DroughtClass::new(*c).unwrap()).collect()
}

#[test]
fn r2_cases() {
    let a = [3.0, 7.0, 1.0, 9.0, 4.0];
    assert!((r2(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    let neg: Vec<f64> = a.iter().map(|v| -v + 7.0).collect();
    assert!((r2(&neg, &a).unwrap() - 1.0).abs() < 1e-12);
    // covariance arithmetic by hand
    let p = [2.0, 6.0, 2.0, 8.0, 5.0];
    let (mp, ma) = (23.0 / 5.0, 24.0 / 5.0);
    let sxy: f64 = p.iter().zip(&a).map(|(x, y)| (x - mp) * (y - ma)).sum();
    let sxx: f64 = p.iter().map(|x| (x - mp) * (x - mp)).sum();
    let syy: f64 = a.iter().map(|y| (y - ma) * (y - ma)).sum();
    assert!((r2(&p, &a).unwrap() - sxy * sxy / (sxx * syy)).abs() < 1e-12);
    assert!(r2(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    assert!(r2(&[1.0, 2.0], &[1.0, 2.0]).is_err());
}

#[test]
fn error_metric_cases() {
    let e = error_metrics(&[4.0, 5.0], &[4.0, 5.0]).unwrap();
    assert_eq!((e.rmse, e.mae, e.mape), (0.0, 0.0, Some(0.0)));
    let e = error_metrics(&[12.0], &[10.0]).unwrap();
    assert_eq!((e.rmse, e.mae), (2.0, 2.0));
    assert!((e.mape.unwrap() - 20.0).abs() < 1e-12);
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let p: Vec<f64> = (0..20).map(|_| r.random_range(-50.0..50.0)).collect();
        let a: Vec<f64> = (0..20).map(|_| r.random_range(-50.0..50.0)).collect();
        let e = error_metrics(&p, &a).unwrap();
        assert!(e.rmse >= e.mae && e.mae >= 0.0);
    }
}

#[test]
fn class_bounds() {
    let c = |v: f64| classify_vci3m(v).unwrap().value();
    assert_eq!([c(5.0), c(15.0), c(30.0), c(40.0), c(75.0)], [1, 2, 3, 4, 5]);
    assert_eq!([c(10.0), c(35.0), c(50.0)], [2, 4, 5]);
    assert_eq!([c(-3.0), c(112.0)], [1, 5]);
    assert_eq!(classify_vci3m(1.0).unwrap().label(), "Extreme vegetation deficit");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]
    #[test]
    fn classification_is_total_and_monotone(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        let (ca, cb) = (classify_vci3m(a).unwrap(), classify_vci3m(b).unwrap());
        prop_assert!((1..=5).contains(&ca.value()));
        if a <= b {
            prop_assert!(ca <= cb);
        }
    }
}

proptest! {
    #[test]
    fn auroc_ignores_increasing_transforms(seed in 0u64..1000) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let s: Vec<f64> = (0..30).map(|_| r.random_range(-3.0..3.0)).collect();
        let mut e: Vec<bool> = (0..30).map(|_| r.random_bool(0.4)).collect();
        e[0] = true;
        e[1] = false;
        let t: Vec<f64> = s.iter().map(|v| v.exp() * 5.0 + 1.0).collect();
        prop_assert!((auroc_binary(&s, &e).unwrap() - auroc_binary(&t, &e).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn accuracy_cases() {
    let a = classes(&[1, 2, 3, 4, 5]);
    assert_eq!(accuracy(&a, &a).unwrap(), 1.0);
    assert_eq!(accuracy(&classes(&[2, 3, 4, 5, 1]), &a).unwrap(), 0.0);
    let actual = classes(&[3; 24]);
    let mut pred = classes(&[3; 24]);
    for p in pred.iter_mut().take(7) {
        *p = DroughtClass::new(4).unwrap();
    }
    assert!((accuracy(&pred, &actual).unwrap() - 17.0 / 24.0).abs() < 1e-12);
}

#[test]
fn auroc_cases() {
    let events = [true, true, false, false];
    assert_eq!(auroc_binary(&[0.9, 0.8, 0.1, 0.2], &events).unwrap(), 1.0);
    assert_eq!(auroc_binary(&[0.5; 4], &events).unwrap(), 0.5);
    assert!(auroc_binary(&[0.1, 0.2], &[true, true]).is_err());
    // pair counting oracle with ties
    let s = [0.3, 0.7, 0.7, 0.1, 0.5, 0.3];
    let e = [true, true, false, false, true, false];
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for i in 0..6 {
        for j in 0..6 {
            if e[i] && !e[j] {
                pairs += 1.0;
                wins += if s[i] > s[j] { 1.0 } else if s[i] == s[j] { 0.5 } else { 0.0 };
            }
        }
    }
    assert!((auroc_binary(&s, &e).unwrap() - wins / pairs).abs() < 1e-12);
}

#[test]
fn drought_recall_cases() {
    assert_eq!(moderate_extreme_recall(&classes(&[1, 3, 2]), &classes(&[2, 2, 3])).unwrap(), 1.0);
    assert_eq!(moderate_extreme_recall(&classes(&[3, 4, 4, 4]), &classes(&[2, 3, 4, 4])).unwrap(), 0.5);
    assert_eq!(moderate_extreme_recall(&classes(&[4, 5]), &classes(&[1, 2])).unwrap(), 0.0);
    assert!(moderate_extreme_recall(&classes(&[1]), &classes(&[5])).is_err());
}

fn holdout() -> SupervisedDataset {
    let start = YearMonth::new(2016, 3).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let mut ds = SupervisedDataset {
        keys: Vec::new(),
        target_months: Vec::new(),
        feature_names: vec!["x".into()],
        features: Vec::new(),
        targets: Vec::new(),
        target_name: "VCI3M".into(),
        lead: 1,
    };
    for u in ["A", "B", "C", "D"] {
        let level = r.random_range(10.0..60.0);
        for m in 0..24 {
            let month = start.add_months(m);
            ds.keys.push(RowKey::new(u, month));
            ds.target_months.push(month.add_months(1));
            ds.features.push(vec![0.0]);
            ds.targets.push(level + r.random_range(-25.0..25.0));
        }
    }
    ds
}

#[test]
fn report_tables_are_pooled_and_reproducible() {
    let ds = holdout();
    let approaches = || {
        let mut r = ChaCha8Rng::seed_from_u64(6);
        vec![
            (Approach::new("ann-champion", ""), ds.targets.iter().map(|t| t + r.random_range(-15.0..15.0)).collect()),
            (Approach::new("stacked", "heterogeneous"), ds.targets.iter().map(|t| t + r.random_range(-5.0..5.0)).collect()),
        ]
    };
    let res = evaluate(&ds, approaches()).unwrap();
    for a in &res {
        let overall = a.overall();
        assert_eq!(overall.group, OVERALL);
        assert_eq!(overall.n, a.metrics[..4].iter().map(|m| m.n).sum::<usize>());
        let pooled = r2(&a.predictions, &ds.targets).unwrap();
        assert_eq!(overall.r2, Some(pooled));
        let mean_of_units = a.metrics[..4].iter().map(|m| m.r2.unwrap()).sum::<f64>() / 4.0;
        assert!((pooled - mean_of_units).abs() > 1e-9);
    }
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let files = emit_report(d1.path(), &ds, &res).unwrap();
    emit_report(d2.path(), &ds, &evaluate(&ds, approaches()).unwrap()).unwrap();
    for f in &files {
        let name = f.file_name().unwrap();
        assert_eq!(std::fs::read(f).unwrap(), std::fs::read(d2.path().join(name)).unwrap(), "{name:?}");
    }
    let strip = std::fs::read_to_string(d1.path().join("agreement.csv")).unwrap();
    let stacked: Vec<&str> = strip.lines().filter(|l| l.starts_with("stacked,")).collect();
    assert_eq!(stacked.len(), 96);
    let matches = stacked.iter().filter(|l| l.ends_with(",1")).count() as f64 / 96.0;
    assert!((matches - res[1].overall().accuracy).abs() < 1e-12);
    let reg = std::fs::read_to_string(d1.path().join("regression.csv")).unwrap();
    assert!(reg.lines().next().unwrap().ends_with("A,B,C,D,OVERALL"));
}
