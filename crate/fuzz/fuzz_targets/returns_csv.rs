//! Fuzzes the returns CSV reader and checks the write/read fixpoint: once a
//! table has been serialized, reading it back and serializing again must
//! reproduce the same bytes.

#![no_main]

use libfuzzer_sys::fuzz_target;
use volcp::ingest::ReturnsTable;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = ReturnsTable::from_csv_reader(data) {
        let mut first = Vec::new();
        table.to_csv_writer(&mut first).expect("serialize parsed table");
        let reread =
            ReturnsTable::from_csv_reader(first.as_slice()).expect("reparse serialized table");
        let mut second = Vec::new();
        reread.to_csv_writer(&mut second).expect("serialize reparsed table");
        assert_eq!(first, second, "returns CSV round-trip is not a fixpoint");
    }
});
