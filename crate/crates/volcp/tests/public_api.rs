//! Cross-module integration through the public API only: generate data with
//! planted regimes, filter it, compare posteriors, cluster the result, and
//! resume from checkpoints, exactly as an external caller would.

use volcp::cluster::average_linkage;
use volcp::config::RunConfig;
use volcp::filter::{Filter, HazardModel};
use volcp::metric::{pairwise, w1};
use volcp::synth::{generate, SegmentCoeffs, SegmentParams, SynthSpec};

/// Returns with volatility switching at the given times; `quiet` and `loud`
/// alternate, starting quiet.
fn planted_series(changes_every: usize, length: usize, seed: u64, loud: f64) -> Vec<f64> {
    let mut g = vec![0.0f64; changes_every];
    g.push(1.0);
    let spec = SynthSpec {
        length,
        hazard: HazardModel::tabulated(g).unwrap(),
        params: SegmentParams::Explicit(
            (0..=length / changes_every)
                .map(|i| SegmentCoeffs {
                    mu: 0.0,
                    alpha: 0.0,
                    sigma: if i % 2 == 0 { 0.01 } else { loud },
                })
                .collect(),
        ),
        y0: 0.0,
        seed,
    };
    generate(&spec).unwrap().returns
}

fn fitted(ys: &[f64]) -> Filter {
    let config = RunConfig::default().filter_config().unwrap();
    let mut filter = Filter::new(ys[0], config).unwrap();
    for &y in &ys[1..] {
        filter.step(y).unwrap();
    }
    filter
}

#[test]
fn planted_regime_groups_are_recovered_end_to_end() {
    // Four series, two change schedules: a single quiet-to-loud switch at
    // time 100 (S1, S3) versus time 60 (S2, S4). The change-point
    // posteriors should separate the pairs.
    let length = 120;
    let series: Vec<(String, Vec<f64>)> = vec![
        ("S1".into(), planted_series(100, length, 1, 0.05)),
        ("S2".into(), planted_series(60, length, 2, 0.05)),
        ("S3".into(), planted_series(100, length, 3, 0.05)),
        ("S4".into(), planted_series(60, length, 4, 0.05)),
    ];
    let posteriors: Vec<(String, volcp::metric::SparsePmf)> =
        series.iter().map(|(name, ys)| (name.clone(), fitted(ys).posterior().unwrap())).collect();

    let matrix = pairwise(&posteriors).unwrap();
    assert_eq!(matrix.labels(), ["S1", "S2", "S3", "S4"]);

    let tree = average_linkage(&matrix).unwrap();
    let cut = tree.cut(2).unwrap();
    assert_eq!(cut[0], cut[2], "S1 and S3 share a change schedule");
    assert_eq!(cut[1], cut[3], "S2 and S4 share a change schedule");
    assert_ne!(cut[0], cut[1], "the two schedules separate");
}

#[test]
fn checkpoint_resume_matches_the_uninterrupted_run() {
    let ys = planted_series(50, 300, 77, 0.04);
    let config = RunConfig::default().filter_config().unwrap();

    let mut straight = Filter::new(ys[0], config.clone()).unwrap();
    let mut resumed = Filter::new(ys[0], config).unwrap();
    for &y in &ys[1..=150] {
        straight.step(y).unwrap();
        resumed.step(y).unwrap();
    }
    // Freeze, thaw, and continue; the states must stay bit-identical.
    let mut frozen = Vec::new();
    resumed.to_json_writer(&mut frozen).unwrap();
    let mut resumed = Filter::from_json_bytes(&frozen).unwrap();
    for &y in &ys[151..] {
        straight.step(y).unwrap();
        resumed.step(y).unwrap();
    }
    assert_eq!(straight, resumed);
    assert_eq!(straight.map_changepoint().unwrap(), resumed.map_changepoint().unwrap());
}

#[test]
fn posterior_distance_reflects_change_schedule_offsets() {
    // Two series whose latest changes are 60 steps apart should sit farther
    // from each other than two sharing the same schedule.
    let a1 = fitted(&planted_series(100, 160, 5, 0.05)).posterior().unwrap();
    let a2 = fitted(&planted_series(100, 160, 6, 0.05)).posterior().unwrap();
    let b = fitted(&planted_series(40, 160, 7, 0.05)).posterior().unwrap();
    let same = w1(&a1, &a2);
    let cross = w1(&a1, &b);
    assert!(cross > same, "offset schedules should be farther apart: same {same}, cross {cross}");
}

#[test]
fn run_config_json_drives_the_filter() {
    let doc = br#"{"hazard_p": 0.1, "a": 0.5, "b": 0.001, "max_support": 7, "include_mu": false}"#;
    let cfg = RunConfig::from_json_reader(&doc[..]).unwrap();
    let fc = cfg.filter_config().unwrap();
    assert_eq!(fc.max_support, 7);
    assert_eq!(fc.hyper.dim(), 1);
    assert_eq!(fc.hazard, HazardModel::ShiftedGeometric { p: 0.1 });

    let ys = planted_series(30, 90, 12, 0.05);
    let mut filter = Filter::new(ys[0], fc).unwrap();
    for &y in &ys[1..] {
        filter.step(y).unwrap();
        assert!(filter.atoms().len() <= 7, "support cap from the config holds");
    }
    assert!(filter.posterior().is_ok());
}
