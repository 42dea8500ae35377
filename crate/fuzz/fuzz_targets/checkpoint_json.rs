//! Fuzzes the filter checkpoint reader. Any checkpoint it accepts must
//! serialize to a document the reader accepts again with the same discrete
//! state (step count and atom support). Weights are renormalized on load,
//! so they are not compared bit for bit here.

#![no_main]

use libfuzzer_sys::fuzz_target;
use volcp::filter::Filter;

fuzz_target!(|data: &[u8]| {
    if let Ok(filter) = Filter::from_json_bytes(data) {
        let mut bytes = Vec::new();
        filter.to_json_writer(&mut bytes).expect("serialize validated checkpoint");
        let reloaded = Filter::from_json_bytes(&bytes).expect("reload freshly written checkpoint");
        assert_eq!(filter.t(), reloaded.t(), "step count changed across reload");
        // The writer drops atoms whose weight underflowed to zero, so only
        // the positive-mass support is expected to survive.
        let support: Vec<usize> = filter
            .atoms()
            .iter()
            .filter(|a| a.log_weight() > f64::NEG_INFINITY)
            .map(|a| a.s())
            .collect();
        let resupport: Vec<usize> = reloaded.atoms().iter().map(|a| a.s()).collect();
        assert_eq!(support, resupport, "atom support changed across reload");
    }
});
