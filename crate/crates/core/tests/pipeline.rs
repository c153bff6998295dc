use capgate_core::batch::{
    ingest, run_batch, synth_dataset, write_dataset_csv, AssessConfig, SynthSpec, DEFAULT_LAMBDAS,
};
use capgate_core::resampling::BootstrapConfig;
use capgate_core::sim::{accept_counts, SimContext};

fn config(seed: u64) -> AssessConfig {
    AssessConfig::new(
        1.33,
        DEFAULT_LAMBDAS.to_vec(),
        BootstrapConfig::new(500, seed).unwrap(),
        0.05,
    )
    .unwrap()
}

#[test]
fn synth_csv_round_trip_preserves_assessments() {
    let spec = SynthSpec {
        dimensions: 60,
        seed: 17,
        ..SynthSpec::default()
    };
    let records = synth_dataset(&spec).unwrap();
    let mut buf = Vec::new();
    write_dataset_csv(&mut buf, &records).unwrap();
    let back = ingest(buf.as_slice()).unwrap();
    assert_eq!(back, records);

    let a = run_batch(&records, &config(17)).unwrap();
    let b = run_batch(&back, &config(17)).unwrap();
    assert_eq!(a.assessments, b.assessments);
    assert_eq!(a.reclassification, b.reclassification);
}

#[test]
fn batch_does_not_depend_on_thread_count() {
    let records = synth_dataset(&SynthSpec {
        dimensions: 40,
        seed: 5,
        ..SynthSpec::default()
    })
    .unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_batch(&records, &config(5)).unwrap().assessments)
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn monte_carlo_does_not_depend_on_thread_count() {
    let ctx = SimContext {
        replications: 2000,
        base_seed: 9,
        ..SimContext::default()
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| accept_counts(&ctx, 1.4, 32, &[0.0, 1.0, 2.0]).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn every_lambda_respects_the_subset_property() {
    for seed in 0..5 {
        let records = synth_dataset(&SynthSpec {
            dimensions: 80,
            near_fraction: 0.4,
            seed,
            ..SynthSpec::default()
        })
        .unwrap();
        let report = run_batch(&records, &config(seed)).unwrap();
        let overall = report.reclassification.overall.unwrap();
        for row in &overall.rows {
            assert_eq!(row.reject_to_accept, 0);
        }
        for w in overall.rows.windows(2) {
            assert!(w[1].accepted <= w[0].accepted);
            assert!(w[1].accept_to_reject >= w[0].accept_to_reject);
        }
    }
}
