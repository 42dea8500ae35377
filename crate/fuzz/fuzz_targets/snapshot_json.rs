//! Fuzzes the frozen-posterior JSON reader. Accepted snapshots must
//! serialize to a document the reader accepts again with the same date,
//! step count, and support. Probabilities are renormalized on load, so
//! they are not compared bit for bit here.

#![no_main]

use libfuzzer_sys::fuzz_target;
use volcp::report::PosteriorSnapshot;

fuzz_target!(|data: &[u8]| {
    if let Ok(snap) = PosteriorSnapshot::from_json_reader(data) {
        let mut bytes = Vec::new();
        snap.to_json_writer(&mut bytes).expect("serialize validated snapshot");
        let reread = PosteriorSnapshot::from_json_reader(bytes.as_slice())
            .expect("reload freshly written snapshot");
        assert_eq!(snap.date, reread.date, "date changed across reload");
        assert_eq!(snap.t, reread.t, "step count changed across reload");
        assert_eq!(snap.pmf.support(), reread.pmf.support(), "support changed across reload");
    }
});
