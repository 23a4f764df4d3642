use proptest::prelude::*;

use topospc::geometry::{format_pointcloud, load_pointcloud, save_pointcloud, CloudFormat, PointCloud};
use topospc::harness::{read_run_lengths, run_length_experiment, write_run_length_outputs, ExperimentConfig};
use topospc::partgen::{apply_defect, gen_layered_tube, DefectKind, DefectSpec, Wireframe};
use topospc::persistence::{Feature, PersistenceDiagram};
use topospc::Error;

fn any_real() -> impl Strategy<Value = f64> {
    prop_oneof![-1e3..1e3f64, -1e-6..1e-6f64, Just(0.0), Just(-0.0), Just(1e300)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn point_clouds_round_trip_exactly(
        pts in prop::collection::vec([any_real(), any_real(), any_real()], 1..30),
        csv in any::<bool>(),
    ) {
        let format = if csv { CloudFormat::Csv } else { CloudFormat::Xyz };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(if csv { "c.csv" } else { "c.xyz" });
        let cloud = PointCloud::new(pts).unwrap();
        save_pointcloud(&cloud, &path, format).unwrap();
        let back = load_pointcloud(&path, CloudFormat::from_path(&path)).unwrap();
        prop_assert_eq!(back.points(), cloud.points());
    }

    #[test]
    fn diagrams_round_trip_exactly(
        feats in prop::collection::vec((0usize..3, 0.0..5.0f64, prop::option::of(0.0..5.0f64)), 0..20),
    ) {
        let d = PersistenceDiagram::new(
            feats
                .into_iter()
                .map(|(k, b, l)| match l {
                    Some(l) => Feature::finite(k, b, b + l),
                    None => Feature::essential(k, b),
                })
                .collect(),
        );
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = PersistenceDiagram::read_csv(buf.as_slice()).unwrap();
        // Files are written in (dimension, birth, death) order.
        let mut expected = d.features().to_vec();
        expected.sort_by(|a, b| (a.dimension, a.birth, a.death).partial_cmp(&(b.dimension, b.birth, b.death)).unwrap());
        prop_assert_eq!(back.features(), expected.as_slice());
    }
}

#[test]
fn malformed_inputs_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.xyz");
    std::fs::write(&bad, "0 0 0\n1 2\n").unwrap();
    let e = load_pointcloud(&bad, CloudFormat::Xyz).unwrap_err();
    assert!(e.is_validation());
    assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");

    let e = PersistenceDiagram::read_csv("dimension,birth,death\n1,2.0,1.0\n".as_bytes()).unwrap_err();
    assert!(e.is_validation(), "{e}");

    let e = load_pointcloud(dir.path().join("missing.xyz"), CloudFormat::Xyz).unwrap_err();
    assert!(!e.is_validation());
}

#[test]
fn wireframes_round_trip_through_json() {
    let w = gen_layered_tube(1.0, 3, 0.25).unwrap();
    let shifted = apply_defect(&w, &DefectSpec::new(DefectKind::ShiftLayer { layer: 1, axis: topospc::partgen::Axis::X }, 0.1))
        .unwrap();
    for w in [w, shifted] {
        assert_eq!(Wireframe::from_json(&w.to_json()).unwrap(), w);
    }
    assert!(Wireframe::from_json("{\"nodes\": []}").is_err());
}

#[test]
fn cloud_text_has_one_line_per_point() {
    let c = PointCloud::new(vec![[0.0, 1.5, -2.0], [0.1, 0.2, 0.3]]).unwrap().with_label("two");
    let xyz = format_pointcloud(&c, CloudFormat::Xyz);
    assert_eq!(xyz.lines().filter(|l| !l.starts_with('#')).count(), 2);
    let csv = format_pointcloud(&c, CloudFormat::Csv);
    assert!(csv.lines().any(|l| l == "0.1,0.2,0.3"), "{csv}");
}

#[test]
fn run_length_files_round_trip() {
    let cfg = ExperimentConfig::from_toml(
        r#"
replications = 6
base_seed = 5

[part]
generator = "cube"
edge = 1.0
spacing = 0.5

[noise]
sigma = 0.02

[chart]
alpha = 0.25
m0 = 7
"#,
    )
    .unwrap();
    let report = run_length_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_run_length_outputs(&report, &cfg, dir.path()).unwrap();
    let back = read_run_lengths(dir.path().join("run_lengths.csv")).unwrap();
    assert_eq!(back, report.records);
    let again = ExperimentConfig::load(dir.path().join("config.toml")).unwrap();
    assert_eq!(again, cfg);
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let header = summary.lines().next().unwrap();
    assert_eq!(header, "chart,arl,sdrl,n_replications,n_censored,reference_arl,reference_sdrl");
    assert_eq!(summary.lines().count(), 4);
}
