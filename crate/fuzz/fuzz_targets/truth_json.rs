//! Fuzzes the ground-truth JSON readers for single series and batches, and
//! checks the write/read fixpoint for whichever form accepts the input.

#![no_main]

use libfuzzer_sys::fuzz_target;
use volcp::synth::{MultiTruth, Truth};

fuzz_target!(|data: &[u8]| {
    if let Ok(truth) = Truth::from_json_reader(data) {
        let mut first = Vec::new();
        truth.to_json_writer(&mut first).expect("serialize parsed truth");
        let reread = Truth::from_json_reader(first.as_slice()).expect("reparse serialized truth");
        let mut second = Vec::new();
        reread.to_json_writer(&mut second).expect("serialize reparsed truth");
        assert_eq!(first, second, "truth round-trip is not a fixpoint");
    }
    if let Ok(truth) = MultiTruth::from_json_reader(data) {
        let mut first = Vec::new();
        truth.to_json_writer(&mut first).expect("serialize parsed batch truth");
        let reread =
            MultiTruth::from_json_reader(first.as_slice()).expect("reparse serialized batch truth");
        let mut second = Vec::new();
        reread.to_json_writer(&mut second).expect("serialize reparsed batch truth");
        assert_eq!(first, second, "batch truth round-trip is not a fixpoint");
    }
});
