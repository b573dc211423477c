//! Round-trip properties of the on-disk formats.

use dsi3d::config::RunConfig;
use dsi3d::formats::descriptors::{read_descriptors, write_descriptors};
use dsi3d::formats::docids::{read_docids, read_meta, write_docids, write_meta};
use dsi3d::formats::poses::{load_poses, write_xyzt, PoseFormat};
use dsi3d::formats::reports::{read_records, write_records};
use dsi3d_core::dataset::Pose;
use dsi3d_core::docid::{CodecMeta, Docid, Strategy};
use dsi3d_core::eval::{RetrievalRecord, ScoreKind};
use proptest::prelude::{any, prop, prop_assert_eq, proptest, ProptestConfig};

fn finite() -> impl proptest::strategy::Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn codec_meta_offsets_are_bit_exact(x in finite(), y in finite(), scale in 0.001..1e6f64) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("docids.meta.json");
        let meta = CodecMeta { x_offset: x, y_offset: y, scale, ..CodecMeta::new(Strategy::Hilbert) };
        write_meta(&path, &meta).unwrap();
        let back = read_meta(&path).unwrap();
        prop_assert_eq!(back.x_offset.to_bits(), x.to_bits());
        prop_assert_eq!(back.y_offset.to_bits(), y.to_bits());
        prop_assert_eq!(back.scale.to_bits(), scale.to_bits());
    }

    #[test]
    fn xyzt_poses_are_bit_exact(rows in prop::collection::vec((finite(), finite(), finite(), 0.0..1e6f64), 0..20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("poses.csv");
        let poses: Vec<Pose> = rows.iter().map(|&(x, y, z, t)| Pose::new(x, y, z, t)).collect();
        write_xyzt(&path, &poses).unwrap();
        let back = load_poses(&path, PoseFormat::XyztCsv).unwrap();
        prop_assert_eq!(back.len(), poses.len());
        for (a, b) in back.iter().zip(&poses) {
            prop_assert_eq!([a.x, a.y, a.z, a.t].map(f64::to_bits), [b.x, b.y, b.z, b.t].map(f64::to_bits));
        }
    }

    #[test]
    fn descriptors_round_trip_through_f32(dim in 1usize..8, values in prop::collection::vec(-1e3..1e3f64, 0..64)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.dsc");
        let rows: Vec<Vec<f64>> = values.chunks_exact(dim).map(<[f64]>::to_vec).collect();
        write_descriptors(&path, dim, &rows).unwrap();
        let (d, back) = read_descriptors(&path).unwrap();
        prop_assert_eq!(d, dim);
        prop_assert_eq!(back.len(), rows.len());
        for (a, b) in back.iter().flatten().zip(rows.iter().flatten()) {
            prop_assert_eq!(*a, f64::from(*b as f32));
        }
    }

    #[test]
    fn docid_tables_round_trip(texts in prop::collection::btree_set("[0-9]{1,12}", 1..30)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("docids.csv");
        let docids: Vec<Docid> = texts.into_iter().map(|t| Docid::new(t, Strategy::Gps)).collect();
        write_docids(&path, &docids).unwrap();
        prop_assert_eq!(read_docids(&path).unwrap(), docids);
    }

    #[test]
    fn records_round_trip(records in prop::collection::vec((0usize..1000, prop::collection::vec((0usize..1000, finite()), 0..5)), 0..10)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let records: Vec<RetrievalRecord> = records
            .into_iter()
            .map(|(q, c)| RetrievalRecord { query_index: q, candidates: c, score_kind: ScoreKind::LogProb })
            .collect();
        write_records(&path, &records).unwrap();
        prop_assert_eq!(read_records(&path).unwrap(), records);
    }

    #[test]
    fn numeric_overrides_take_effect(epochs in 0usize..1000, seed in any::<u64>()) {
        let cfg = RunConfig::from_json("{}", &[format!("train.epochs={epochs}"), format!("seed={seed}")]).unwrap();
        prop_assert_eq!(cfg.train.epochs, epochs);
        prop_assert_eq!(cfg.seed, seed);
    }
}
