mod common;

use common::*;
use gpsim_core::clustering::ClusterAssignment;
use gpsim_core::evaluation::BioSimilarityMatrix;
use gpsim_core::gp::{FittedModel, Hyperparams};
use gpsim_core::io::{
    read_bio_similarity, read_dataset, read_labels, read_matrix, read_model, write_bio_similarity,
    write_labels, write_long, write_matrix, write_model, write_wide, DatasetLayout, ModelFile,
    Preprocessing,
};
use gpsim_core::similarity::{pairwise_matrix, Measure, Orientation, SimilarityMatrix};
use gpsim_core::synth::{generate, Sampling, SynthConfig};
use gpsim_core::{Error, TimeCourse};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6f64..1e6,
        -1.0f64..1.0,
        (-300i32..300).prop_map(|e| 1.234_567_890_123_456_7 * 10f64.powi(e))
    ]
}

fn dataset(shared: bool) -> impl Strategy<Value = Vec<TimeCourse>> {
    (
        1usize..6,
        2usize..8,
        any::<u64>(),
        prop::collection::vec(finite(), 60),
    )
        .prop_map(move |(n, t, seed, vals)| {
            let mut r = rng(seed);
            let shared_grid = random_grid(&mut r, t);
            (0..n)
                .map(|i| {
                    let times = if shared {
                        shared_grid.clone()
                    } else {
                        random_grid(&mut r, t + i % 3)
                    };
                    let values = (0..times.len())
                        .map(|k| vals[(i * 7 + k) % vals.len()])
                        .collect();
                    course(&format!("c{i}"), times, values)
                })
                .collect()
        })
}

proptest! {
    #[test]
    fn wide_round_trip(courses in dataset(true)) {
        let mut buf = Vec::new();
        write_wide(&mut buf, &courses).unwrap();
        let (back, layout) = read_dataset(buf.as_slice()).unwrap();
        prop_assert_eq!(layout, DatasetLayout::Wide);
        prop_assert_eq!(back, courses);
    }

    #[test]
    fn long_round_trip(courses in dataset(false)) {
        let mut buf = Vec::new();
        write_long(&mut buf, &courses).unwrap();
        let (back, layout) = read_dataset(buf.as_slice()).unwrap();
        prop_assert_eq!(layout, DatasetLayout::Long);
        prop_assert_eq!(back, courses);
    }

    #[test]
    fn matrix_round_trip(n in 1usize..7, vals in prop::collection::vec(finite(), 49), sim in any::<bool>()) {
        let scores = DMatrix::from_fn(n, n, |i, j| vals[i.min(j) * 7 + i.max(j)]);
        let ids = (0..n).map(|i| format!("id,{i}")).collect();
        let o = if sim { Orientation::Similarity } else { Orientation::Dissimilarity };
        let m = SimilarityMatrix::new(ids, scores, o, "gp").unwrap();
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        prop_assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn labels_round_trip(raw in prop::collection::vec(0usize..5, 1..30)) {
        let c = ClusterAssignment::from_labels(&raw);
        let ids: Vec<String> = (0..raw.len()).map(|i| format!("s{i}")).collect();
        let mut buf = Vec::new();
        write_labels(&mut buf, &ids, &c).unwrap();
        let (back_ids, back) = read_labels(buf.as_slice()).unwrap();
        prop_assert_eq!(back_ids, ids);
        prop_assert_eq!(back, c);
    }

    #[test]
    fn bio_round_trip(n in 1usize..7, vals in prop::collection::vec(0.0f64..1.0, 49)) {
        let scores = DMatrix::from_fn(n, n, |i, j| vals[i.min(j) * 7 + i.max(j)]);
        let s = BioSimilarityMatrix::new((0..n).map(|i| format!("g{i}")).collect(), scores).unwrap();
        let mut buf = Vec::new();
        write_bio_similarity(&mut buf, &s).unwrap();
        prop_assert_eq!(read_bio_similarity(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn model_round_trip(l in -20.0f64..20.0, f in -20.0f64..20.0, n in -20.0f64..20.0, obj in finite(),
                        center in any::<bool>(), off in finite(), scale in 1e-6f64..1e6) {
        let m = ModelFile {
            hyperparams: Hyperparams::from_log([l, f, n]).unwrap(),
            objective: obj,
            preprocessing: Preprocessing { center, time_offset: off, time_scale: scale },
        };
        let mut buf = Vec::new();
        write_model(&mut buf, &m).unwrap();
        prop_assert_eq!(read_model(buf.as_slice()).unwrap(), m);
    }
}

#[test]
fn gp_matrix_same_for_wide_and_long_encodings() {
    let d = generate(&SynthConfig {
        n_per_profile: 10,
        ..Default::default()
    })
    .unwrap();
    let mut wide = Vec::new();
    let mut long = Vec::new();
    write_wide(&mut wide, &d.courses).unwrap();
    write_long(&mut long, &d.courses).unwrap();
    let (a, _) = read_dataset(wide.as_slice()).unwrap();
    let (b, _) = read_dataset(long.as_slice()).unwrap();
    let model = FittedModel::from_hyperparams(hp(0.2, 0.4, 0.08), 0.0);
    let ma = pairwise_matrix(&a, Measure::Gp, Some(&model)).unwrap();
    let mb = pairwise_matrix(&b, Measure::Gp, Some(&model)).unwrap();
    assert!((ma.scores() - mb.scores()).amax() < 1e-8);
}

#[test]
fn wide_rejects_mixed_grids() {
    let d = generate(&SynthConfig {
        sampling: Sampling::Async,
        n_per_profile: 2,
        ..Default::default()
    })
    .unwrap();
    assert!(matches!(
        write_wide(Vec::new(), &d.courses),
        Err(Error::IncompatibleGrids(_))
    ));
}

#[test]
fn parse_errors_carry_line_numbers() {
    let cases = [
        ("series_id,time,value\na,0,1\na,1,2\nb,0,oops\nb,1,2\n", 4),
        ("id,0,1\na,1,2\nb,1\n", 3),
        ("series_id,time,value\na,0,1\na,0,2\n", 2),
        (
            "# measure=gp orientation=similarity\nid,a,b\na,1,2\nc,2,1\n",
            4,
        ),
    ];
    for (text, line) in &cases[..3] {
        match read_dataset(text.as_bytes()) {
            Err(Error::Parse { line: got, .. }) => assert_eq!(got, *line, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
    let (text, line) = cases[3];
    match read_matrix(text.as_bytes()) {
        Err(Error::Parse { line: got, .. }) => assert_eq!(got, line),
        other => panic!("{other:?}"),
    }
}

#[test]
fn single_point_series_rejected_on_read() {
    let text = "series_id,time,value\na,0,1\na,1,2\nb,0,3\n";
    assert!(matches!(
        read_dataset(text.as_bytes()),
        Err(Error::InvalidInput(_))
    ));
}
