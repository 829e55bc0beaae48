use libags::data::{
    load_candidate_csv, load_labeled_csv, write_candidate_csv, write_labeled_csv, CandidatePool,
    FeatureMatrix, LabeledDataset,
};
use proptest::prelude::*;

fn matrix() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..20, 1usize..6).prop_flat_map(|(n, d)| {
        (Just(n), Just(d), prop::collection::vec(-1e6f64..1e6, n * d))
    })
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0))
}

proptest! {
    #[test]
    fn labeled_csv_round_trips((n, d, values) in matrix(), seed in any::<u64>()) {
        let labels: Vec<usize> = (0..n).map(|i| ((seed >> (i % 60)) & 1) as usize + (i % 2)).collect();
        let ds = LabeledDataset::new(FeatureMatrix::new(values, n, d).unwrap(), labels, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("real.csv");
        write_labeled_csv(&path, &ds).unwrap();
        let back = load_labeled_csv(&path, 3).unwrap();
        prop_assert_eq!(&back.labels, &ds.labels);
        prop_assert_eq!(back.features.n_cols(), d);
        prop_assert!(close(back.features.as_slice(), ds.features.as_slice()));
    }

    #[test]
    fn candidate_csv_round_trips((n, d, values) in matrix()) {
        let ids: Vec<String> = (0..n).map(|i| format!("gen-{i}")).collect();
        let pool = CandidatePool::new(
            FeatureMatrix::new(values, n, d).unwrap(),
            (0..n).map(|i| i % 2).collect(),
            Some(ids),
            2,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cand.csv");
        write_candidate_csv(&path, &pool).unwrap();
        let back = load_candidate_csv(&path, 2).unwrap();
        prop_assert_eq!(&back.proposed_labels, &pool.proposed_labels);
        prop_assert_eq!(&back.source_ids, &pool.source_ids);
        prop_assert!(close(back.features.as_slice(), pool.features.as_slice()));
    }
}
