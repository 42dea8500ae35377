//! Fuzzes the run-configuration JSON reader. Accepted input (possibly
//! partial, with defaults filled in) must serialize to a byte-stable form:
//! writing, reparsing, and writing again yields identical bytes.

#![no_main]

use libfuzzer_sys::fuzz_target;
use volcp::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = RunConfig::from_json_reader(data) {
        let mut first = Vec::new();
        cfg.to_json_writer(&mut first).expect("serialize parsed config");
        let reread =
            RunConfig::from_json_reader(first.as_slice()).expect("reparse serialized config");
        let mut second = Vec::new();
        reread.to_json_writer(&mut second).expect("serialize reparsed config");
        assert_eq!(first, second, "config round-trip is not a fixpoint");
    }
});
