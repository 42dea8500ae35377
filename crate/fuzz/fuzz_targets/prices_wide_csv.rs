//! Fuzzes the wide-format price CSV reader under both missing-cell policies,
//! then pushes any successfully parsed table through the log-return
//! transform, which has its own validation path.

#![no_main]

use libfuzzer_sys::fuzz_target;
use volcp::ingest::{MissingPolicy, PriceTable};

fuzz_target!(|data: &[u8]| {
    for policy in [MissingPolicy::Error, MissingPolicy::DropRows] {
        if let Ok((table, _report)) = PriceTable::from_wide_csv(data, policy) {
            let _ = table.log_returns();
        }
    }
});
