//! Fuzzes the cluster-assignment CSV reader and checks that accepted input
//! survives a write/read round trip unchanged.

#![no_main]

use libfuzzer_sys::fuzz_target;
use volcp::cluster::{read_clusters_csv, write_clusters_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_clusters_csv(data) {
        let (labels, assignment): (Vec<String>, Vec<usize>) = rows.iter().cloned().unzip();
        let mut bytes = Vec::new();
        write_clusters_csv(&labels, &assignment, &mut bytes).expect("serialize parsed rows");
        let reread = read_clusters_csv(bytes.as_slice()).expect("reparse serialized rows");
        assert_eq!(rows, reread, "cluster CSV round-trip changed the rows");
    }
});
