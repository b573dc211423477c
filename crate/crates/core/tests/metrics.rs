use dsi3d_core::dataset::{Pose, SequenceDataset, Split};
use dsi3d_core::eval::{
    confusion_at_threshold, constant_fit, crossover, f1_max, ground_truth_build, hits_at_n, linear_fit, GroundTruth,
    Protocol, RetrievalRecord, ScoreKind,
};
use proptest::prelude::*;

fn dataset(poses: &[(f64, f64, f64)]) -> SequenceDataset {
    let poses: Vec<Pose> = poses.iter().map(|&(x, y, t)| Pose::new(x, y, 0.0, t)).collect();
    let n = poses.len();
    SequenceDataset::from_sequence(0, 1, poses, vec![vec![1.0]; n]).unwrap()
}

fn record(q: usize, cands: Vec<(usize, f64)>) -> RetrievalRecord {
    RetrievalRecord {
        query_index: q,
        candidates: cands,
        score_kind: ScoreKind::Cosine,
    }
}

#[test]
fn ground_truth_time_rules() {
    // Frame 0 is EVAL; frames 1 and 2 are TRAIN.
    let ds = dataset(&[(0.0, 0.0, 100.0), (1.0, 0.0, 40.0), (0.0, 1.0, 90.0)]);
    let gt = ground_truth_build(&ds, Split::Eval, 3.0, 30.0);
    assert_eq!(gt[&0].iter().copied().collect::<Vec<_>>(), vec![1]);

    let isolated = dataset(&[(0.0, 0.0, 100.0), (50.0, 0.0, 0.0)]);
    assert!(ground_truth_build(&isolated, Split::Eval, 3.0, 30.0)[&0].is_empty());
}

#[test]
fn hits_examples() {
    let mut gt = GroundTruth::new();
    gt.insert(0, [5].into_iter().collect());
    let first = [record(0, vec![(5, 0.9), (6, 0.1)])];
    let second = [record(0, vec![(6, 0.9), (5, 0.1)])];
    assert_eq!(hits_at_n(&first, &gt, 1), Some(1.0));
    assert_eq!(hits_at_n(&second, &gt, 1), Some(0.0));
    assert_eq!(hits_at_n(&second, &gt, 2), Some(1.0));
}

#[test]
fn threshold_sentinels() {
    let ds = dataset(&[(0.0, 0.0, 100.0), (1.0, 0.0, 0.0), (30.0, 0.0, 0.0), (0.0, 0.0, 200.0)]);
    let records = [record(0, vec![(1, 0.8)]), record(3, vec![(2, 0.4)])];
    let p = Protocol::default();
    let all = confusion_at_threshold(&records, &ds, f64::NEG_INFINITY, &p);
    assert_eq!((all.tn, all.fn_), (0, 0));
    let none = confusion_at_threshold(&records, &ds, f64::INFINITY, &p);
    assert_eq!((none.tp, none.fp), (0, 0));
}

#[test]
fn constructed_timings_recover_crossover() {
    // Linear method 2e-6 s per reference plus 1 ms; constant method 50 ms.
    let sizes = [1000.0, 5000.0, 20000.0, 50000.0];
    let linear: Vec<f64> = sizes.iter().map(|n| 1e-3 + 2e-6 * n).collect();
    let fit = linear_fit(&sizes, &linear).unwrap();
    assert!(fit.slope > 0.0 && fit.r_squared > 0.999);
    let flat = constant_fit(&[0.05, 0.05, 0.05, 0.05]).unwrap();
    let n = crossover(&fit, flat).unwrap();
    let truth = (0.05 - 1e-3) / 2e-6;
    assert!((n - truth).abs() / truth < 0.2);
    assert!(linear_fit(&[1.0], &[2.0]).is_err());
}

/// Poses `(x, y, t)` and per-query ranked candidates.
type Instance = (Vec<(f64, f64, f64)>, Vec<(usize, Vec<(usize, f64)>)>);

fn arb_instance() -> impl Strategy<Value = Instance> {
    prop::collection::vec((0.0..60.0f64, 0.0..60.0f64, 0.0..300.0f64), 4..30).prop_flat_map(|poses| {
        let n = poses.len();
        let recs = prop::collection::vec(
            (0..n, prop::collection::vec((0..n, -1.0..1.0f64), 0..6)),
            1..20,
        );
        (Just(poses), recs)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn confusion_counts_cover_undiscarded_queries((poses, raw) in arb_instance(), threshold in -1.0..1.0f64) {
        let ds = dataset(&poses);
        let p = Protocol::default();
        let records: Vec<RetrievalRecord> = raw
            .into_iter()
            .map(|(q, mut c)| {
                c.sort_by(|a, b| b.1.total_cmp(&a.1));
                record(q, c)
            })
            .collect();
        let c = confusion_at_threshold(&records, &ds, threshold, &p);
        let discarded = records
            .iter()
            .filter(|r| {
                r.top1().is_some_and(|(s, score)| {
                    let d = ds.distance(r.query_index, s);
                    score >= threshold && d > p.pos_radius && d <= p.neg_radius
                })
            })
            .count();
        prop_assert_eq!(c.total(), records.len() - discarded);

        let best = f1_max(&records, &ds, &p);
        let at = dsi3d_core::eval::f1_score(&c);
        prop_assert!(best.f1 >= at);
    }

    #[test]
    fn hits_monotone_in_n((poses, raw) in arb_instance()) {
        let ds = dataset(&poses);
        let records: Vec<RetrievalRecord> = raw.into_iter().map(|(q, c)| record(q, c)).collect();
        let mut gt = GroundTruth::new();
        for r in &records {
            let set = (0..ds.len()).filter(|&i| i != r.query_index && ds.distance(i, r.query_index) <= 3.0).collect();
            gt.insert(r.query_index, set);
        }
        let mut last = 0.0;
        for n in 1..8 {
            if let Some(h) = hits_at_n(&records, &gt, n) {
                prop_assert!(h >= last);
                last = h;
            }
        }
    }
}
