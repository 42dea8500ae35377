//! Fuzzes the dissimilarity-matrix CSV reader and checks the write/read
//! fixpoint on anything it accepts.

#![no_main]

use libfuzzer_sys::fuzz_target;
use volcp::metric::DissimilarityMatrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(matrix) = DissimilarityMatrix::from_csv_reader(data) {
        let mut first = Vec::new();
        matrix.to_csv_writer(&mut first).expect("serialize parsed matrix");
        let reread = DissimilarityMatrix::from_csv_reader(first.as_slice())
            .expect("reparse serialized matrix");
        let mut second = Vec::new();
        reread.to_csv_writer(&mut second).expect("serialize reparsed matrix");
        assert_eq!(first, second, "dissimilarity CSV round-trip is not a fixpoint");
    }
});
