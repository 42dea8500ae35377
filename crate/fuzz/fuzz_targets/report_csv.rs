//! Fuzzes the three per-series report readers (change-point trace, parameter
//! intervals, predictive intervals) on the same input bytes. For whichever
//! reader accepts the input, the serialized form must be a write/read
//! fixpoint at the byte level; bytes are compared rather than row values so
//! that rows carrying NaN cannot produce a spurious inequality.

#![no_main]

use libfuzzer_sys::fuzz_target;
use volcp::report::{
    read_map_trace, read_params, read_predictive, write_map_trace, write_params, write_predictive,
};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_map_trace(data) {
        let mut first = Vec::new();
        write_map_trace(&rows, &mut first).expect("serialize trace rows");
        let reread = read_map_trace(first.as_slice()).expect("reparse trace rows");
        let mut second = Vec::new();
        write_map_trace(&reread, &mut second).expect("serialize reparsed trace rows");
        assert_eq!(first, second, "trace round-trip is not a fixpoint");
    }
    // A header-only file parses to zero rows, which the writer refuses
    // (it cannot pick a header without a first row), so skip that case.
    if let Some(rows) = read_params(data).ok().filter(|rows| !rows.is_empty()) {
        let mut first = Vec::new();
        write_params(&rows, &mut first).expect("serialize parameter rows");
        let reread = read_params(first.as_slice()).expect("reparse parameter rows");
        let mut second = Vec::new();
        write_params(&reread, &mut second).expect("serialize reparsed parameter rows");
        assert_eq!(first, second, "parameter round-trip is not a fixpoint");
    }
    if let Ok(rows) = read_predictive(data) {
        let mut first = Vec::new();
        write_predictive(&rows, &mut first).expect("serialize predictive rows");
        let reread = read_predictive(first.as_slice()).expect("reparse predictive rows");
        let mut second = Vec::new();
        write_predictive(&reread, &mut second).expect("serialize reparsed predictive rows");
        assert_eq!(first, second, "predictive round-trip is not a fixpoint");
    }
});
