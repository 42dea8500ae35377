//! Black-box tests of the `volcp` binary: every subcommand's outputs parse
//! back through the library readers, the config echo round-trips, and the
//! documented exit codes hold (0 success, 2 input error, 3 numeric failure).

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use volcp::cluster::{read_clusters_csv, Dendrogram};
use volcp::config::RunConfig;
use volcp::ingest::ReturnsTable;
use volcp::metric::DissimilarityMatrix;
use volcp::report::{read_map_trace, read_params, read_predictive, PosteriorSnapshot};
use volcp::synth::{MultiTruth, Truth};

fn volcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_volcp")).args(args).output().expect("binary must launch")
}

fn assert_exit(out: &Output, code: i32, what: &str) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "{what}: expected exit {code}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn simulate_outputs_parse_and_config_echo_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sim");
    let run = volcp(&[
        "simulate",
        "--out",
        &path_str(&out),
        "--length",
        "120",
        "--seed",
        "7",
        "--segments",
        "0:0:0.01,0:0:0.05",
        "--fixed-gap",
        "60",
    ]);
    assert_exit(&run, 0, "simulate");

    let table = ReturnsTable::from_csv_reader(&read(&out.join("returns.csv"))[..]).unwrap();
    assert_eq!(table.tickers(), ["S1"]);
    assert_eq!(table.num_rows(), 121, "y_0..y_120 gives one row per time");

    let truth = Truth::from_json_reader(&read(&out.join("truth.json"))[..]).unwrap();
    assert_eq!(truth.changepoints, vec![0, 60]);
    assert_eq!(truth.segments.len(), 2);
    assert_eq!(truth.seed, 7);

    // The echo parses as a RunConfig, reports the seed, and omits the
    // thread count (thread count never affects outputs).
    let echo_bytes = read(&out.join("config_used.json"));
    let echoed = RunConfig::from_json_reader(&echo_bytes[..]).unwrap();
    assert_eq!(echoed.seed, 7);
    assert!(!String::from_utf8(echo_bytes).unwrap().contains("threads"));

    // Feeding the echo back as the config file reproduces the run.
    let out2 = tmp.path().join("sim2");
    let rerun = volcp(&[
        "simulate",
        "--out",
        &path_str(&out2),
        "--length",
        "120",
        "--config",
        &path_str(&out.join("config_used.json")),
        "--segments",
        "0:0:0.01,0:0:0.05",
        "--fixed-gap",
        "60",
    ]);
    assert_exit(&rerun, 0, "simulate from echoed config");
    assert_eq!(read(&out.join("returns.csv")), read(&out2.join("returns.csv")));

    // Several series with prior-drawn parameters: the truth document
    // switches to the multi-series form. The shape/scale here keep the
    // prior concentrated enough that draws stay finite (the shipped
    // defaults put real mass on astronomically large variances, which is a
    // numeric failure by design).
    let out3 = tmp.path().join("sim3");
    let multi = volcp(&[
        "simulate",
        "--out",
        &path_str(&out3),
        "--length",
        "30",
        "--series",
        "3",
        "--seed",
        "9",
        "--a",
        "2",
        "--b",
        "1e-4",
    ]);
    assert_exit(&multi, 0, "simulate multi-series");
    let truth = MultiTruth::from_json_reader(&read(&out3.join("truth.json"))[..]).unwrap();
    assert_eq!(truth.series.len(), 3);
    let table = ReturnsTable::from_csv_reader(&read(&out3.join("returns.csv"))[..]).unwrap();
    assert_eq!(table.tickers(), ["S1", "S2", "S3"]);
}

#[test]
fn returns_wide_and_long_inputs_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let wide = tmp.path().join("wide.csv");
    fs::write(&wide, "date,AAA,BBB\n2020-01-01,100,200\n2020-01-02,101,198\n2020-01-03,99,202\n")
        .unwrap();
    let long = tmp.path().join("long.csv");
    fs::write(
        &long,
        "date,ticker,close\n\
         2020-01-01,AAA,100\n2020-01-01,BBB,200\n\
         2020-01-02,AAA,101\n2020-01-02,BBB,198\n\
         2020-01-03,AAA,99\n2020-01-03,BBB,202\n",
    )
    .unwrap();

    let out_wide = tmp.path().join("ow");
    let out_long = tmp.path().join("ol");
    assert_exit(
        &volcp(&["returns", "--prices", &path_str(&wide), "--out", &path_str(&out_wide)]),
        0,
        "returns wide",
    );
    assert_exit(
        &volcp(&[
            "returns",
            "--prices",
            &path_str(&long),
            "--long-format",
            "--out",
            &path_str(&out_long),
        ]),
        0,
        "returns long",
    );
    let bytes = read(&out_wide.join("returns.csv"));
    assert_eq!(bytes, read(&out_long.join("returns.csv")));

    let table = ReturnsTable::from_csv_reader(&bytes[..]).unwrap();
    assert_eq!(table.num_rows(), 2, "three prices give two returns");
    assert_eq!(table.value(0, 0), 101f64.ln() - 100f64.ln());
    assert_eq!(table.value(1, 1), 202f64.ln() - 198f64.ln());
}

#[test]
fn returns_missing_cells_follow_the_policy() {
    let tmp = tempfile::tempdir().unwrap();
    let prices = tmp.path().join("gappy.csv");
    fs::write(&prices, "date,AAA,BBB\n2020-01-01,100,200\n2020-01-02,,198\n2020-01-03,99,202\n")
        .unwrap();

    let strict = volcp(&[
        "returns",
        "--prices",
        &path_str(&prices),
        "--out",
        &path_str(&tmp.path().join("strict")),
    ]);
    assert_exit(&strict, 2, "missing cell under the default policy");

    let out = tmp.path().join("dropped");
    let lenient = volcp(&[
        "returns",
        "--prices",
        &path_str(&prices),
        "--missing",
        "drop_rows",
        "--out",
        &path_str(&out),
    ]);
    assert_exit(&lenient, 0, "missing cell under drop_rows");
    assert!(
        String::from_utf8_lossy(&lenient.stderr).contains("2020-01-02"),
        "dropped row should be reported on stderr"
    );
    let table = ReturnsTable::from_csv_reader(&read(&out.join("returns.csv"))[..]).unwrap();
    assert_eq!(table.num_rows(), 1, "one return spans the dropped middle row");
}

#[test]
fn fit_outputs_parse_and_respect_the_mean_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    assert_exit(
        &volcp(&[
            "simulate",
            "--out",
            &path_str(&sim),
            "--length",
            "60",
            "--series",
            "2",
            "--seed",
            "3",
            "--segments",
            "0:0:0.01,0:0:0.04",
            "--fixed-gap",
            "30",
        ]),
        0,
        "simulate",
    );
    let returns_csv = path_str(&sim.join("returns.csv"));

    // Day 30 of the simulated calendar (2000-01-01 + 30 days).
    let fit_out = tmp.path().join("fit");
    assert_exit(
        &volcp(&[
            "fit",
            "--returns",
            &returns_csv,
            "--out",
            &path_str(&fit_out),
            "--snapshot-dates",
            "2000-01-31",
        ]),
        0,
        "fit",
    );

    for ticker in ["S1", "S2"] {
        let dir = fit_out.join(ticker);
        let map = read_map_trace(&read(&dir.join("map_trace.csv"))[..]).unwrap();
        assert_eq!(map.len(), 60, "one row per step");
        assert_eq!((map[0].date.to_string().as_str(), map[0].gap), ("2000-01-02", 1));
        for row in &map {
            assert!(row.gap >= 1);
        }

        let params = read_params(&read(&dir.join("params.csv"))[..]).unwrap();
        assert_eq!(params.len(), 60);
        assert!(params.iter().all(|r| r.mu.is_some()), "default model carries a mean");
        for row in &params {
            assert!(row.alpha.lo <= row.alpha.point && row.alpha.point <= row.alpha.hi);
        }

        let pred = read_predictive(&read(&dir.join("predictive.csv"))[..]).unwrap();
        assert_eq!(pred.len(), 60);
        assert!(pred.iter().all(|r| r.lo < r.hi));

        let snap =
            PosteriorSnapshot::from_json_reader(&read(&dir.join("posterior_2000-01-31.json"))[..])
                .unwrap();
        assert_eq!(snap.date.to_string(), "2000-01-31");
        assert_eq!(snap.t, 30);
        let probs_sum: f64 = snap.pmf.probs().iter().sum();
        assert!((probs_sum - 1.0).abs() <= 1e-9);
    }

    // Without the mean term the parameter report drops the mu columns.
    let no_mu_out = tmp.path().join("fit_no_mu");
    assert_exit(
        &volcp(&[
            "fit",
            "--returns",
            &returns_csv,
            "--out",
            &path_str(&no_mu_out),
            "--include-mu",
            "false",
        ]),
        0,
        "fit without mean",
    );
    let params = read_params(&read(&no_mu_out.join("S1/params.csv"))[..]).unwrap();
    assert!(params.iter().all(|r| r.mu.is_none()));
}

#[test]
fn distance_and_cluster_outputs_parse() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    assert_exit(
        &volcp(&[
            "simulate",
            "--out",
            &path_str(&sim),
            "--length",
            "90",
            "--series",
            "4",
            "--seed",
            "11",
            "--segments",
            "0:0:0.01,0:0:0.05,0:0:0.02",
            "--fixed-gap",
            "30",
        ]),
        0,
        "simulate",
    );

    // Day 90 of the simulated calendar is the final row.
    let dist_out = tmp.path().join("dist");
    assert_exit(
        &volcp(&[
            "distance",
            "--returns",
            &path_str(&sim.join("returns.csv")),
            "--date",
            "2000-03-31",
            "--out",
            &path_str(&dist_out),
        ]),
        0,
        "distance",
    );
    let matrix =
        DissimilarityMatrix::from_csv_reader(&read(&dist_out.join("dissim.csv"))[..]).unwrap();
    assert_eq!(matrix.labels(), ["S1", "S2", "S3", "S4"]);
    for i in 0..4 {
        assert_eq!(matrix.value(i, i), 0.0);
        for j in 0..4 {
            assert_eq!(matrix.value(i, j), matrix.value(j, i));
        }
    }

    let clust_out = tmp.path().join("clust");
    assert_exit(
        &volcp(&[
            "cluster",
            "--dissim",
            &path_str(&dist_out.join("dissim.csv")),
            "--out",
            &path_str(&clust_out),
            "--k",
            "2",
        ]),
        0,
        "cluster",
    );
    let tree = Dendrogram::from_json_reader(&read(&clust_out.join("dendrogram.json"))[..]).unwrap();
    assert_eq!(tree.leaves(), 4);
    assert_eq!(tree.merges().len(), 3);

    // The reordered matrix carries the same labels permuted to leaf order.
    let reordered =
        DissimilarityMatrix::from_csv_reader(&read(&clust_out.join("reordered.csv"))[..]).unwrap();
    let mut sorted = reordered.labels().to_vec();
    sorted.sort();
    assert_eq!(sorted, ["S1", "S2", "S3", "S4"]);
    let order = tree.leaf_order();
    let expect: Vec<String> = order.iter().map(|&i| matrix.labels()[i].clone()).collect();
    assert_eq!(reordered.labels(), expect);

    let assignments = read_clusters_csv(&read(&clust_out.join("clusters.csv"))[..]).unwrap();
    assert_eq!(assignments.len(), 4);
    let mut ids: Vec<usize> = assignments.iter().map(|(_, c)| *c).collect();
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(ids.len(), 2, "a cut at k = 2 yields two cluster ids");

    // Without --k the flat cut is not produced.
    let no_k_out = tmp.path().join("clust_no_k");
    assert_exit(
        &volcp(&[
            "cluster",
            "--dissim",
            &path_str(&dist_out.join("dissim.csv")),
            "--out",
            &path_str(&no_k_out),
        ]),
        0,
        "cluster without k",
    );
    assert!(no_k_out.join("dendrogram.json").exists());
    assert!(!no_k_out.join("clusters.csv").exists());
}

#[test]
fn input_errors_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = path_str(&tmp.path().join("out"));

    let prices = tmp.path().join("bad.csv");
    fs::write(&prices, "date,AAA\n2020-01-01,not_a_number\n2020-01-02,100\n").unwrap();
    assert_exit(
        &volcp(&["returns", "--prices", &path_str(&prices), "--out", &out]),
        2,
        "malformed price cell",
    );

    assert_exit(
        &volcp(&["fit", "--returns", &path_str(&tmp.path().join("missing.csv")), "--out", &out]),
        2,
        "nonexistent input file",
    );

    let sim = tmp.path().join("sim");
    assert_exit(
        &volcp(&[
            "simulate",
            "--out",
            &path_str(&sim),
            "--length",
            "10",
            "--seed",
            "1",
            "--segments",
            "0:0:0.01",
        ]),
        0,
        "simulate",
    );
    let returns_csv = path_str(&sim.join("returns.csv"));

    let single = tmp.path().join("single.csv");
    fs::write(&single, "date,AAA\n2020-01-01,1.0e-2\n").unwrap();
    assert_exit(
        &volcp(&["fit", "--returns", &path_str(&single), "--out", &out]),
        2,
        "fit needs at least two rows",
    );

    assert_exit(
        &volcp(&[
            "fit",
            "--returns",
            &returns_csv,
            "--out",
            &out,
            "--snapshot-dates",
            "1999-01-01",
        ]),
        2,
        "snapshot date outside the series",
    );

    assert_exit(
        &volcp(&["distance", "--returns", &returns_csv, "--date", "1999-01-01", "--out", &out]),
        2,
        "distance date outside the series",
    );

    let dissim = tmp.path().join("dissim.csv");
    fs::write(&dissim, "label,A,B\nA,0,1\nB,1,0\n").unwrap();
    assert_exit(
        &volcp(&["cluster", "--dissim", &path_str(&dissim), "--out", &out, "--k", "5"]),
        2,
        "cut size beyond the leaf count",
    );

    let config = tmp.path().join("bad_config.json");
    fs::write(&config, "{\"hazard_p\": 0.02, \"bogus\": 1}\n").unwrap();
    assert_exit(
        &volcp(&["fit", "--returns", &returns_csv, "--out", &out, "--config", &path_str(&config)]),
        2,
        "unknown config key",
    );

    assert_exit(
        &volcp(&["returns", "--prices", &returns_csv, "--out", &out, "--missing", "sometimes"]),
        2,
        "unknown missing policy (argument parse error)",
    );

    assert_exit(
        &volcp(&["simulate", "--out", &out, "--segments", "1:2"]),
        2,
        "malformed segment triple (argument parse error)",
    );

    assert_exit(
        &volcp(&["fit", "--returns", &returns_csv, "--out", &out, "--hazard-p", "1.5"]),
        2,
        "hazard probability outside (0, 1)",
    );
}

#[test]
fn numeric_failures_exit_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    // A prior draw with shape 1e-300 underflows the variance draw to
    // infinity, which is a numeric failure rather than bad input.
    let run = volcp(&[
        "simulate",
        "--out",
        &path_str(&tmp.path().join("out")),
        "--length",
        "5",
        "--a",
        "1e-300",
    ]);
    assert_exit(&run, 3, "degenerate prior draw");
    assert!(
        String::from_utf8_lossy(&run.stderr).contains("numeric"),
        "stderr should name the failure class"
    );
}
