//! Fuzzes the long-format (date,ticker,price) CSV reader under both
//! missing-cell policies, then pushes any successfully parsed table through
//! the log-return transform.

#![no_main]

use libfuzzer_sys::fuzz_target;
use volcp::ingest::{MissingPolicy, PriceTable};

fuzz_target!(|data: &[u8]| {
    for policy in [MissingPolicy::Error, MissingPolicy::DropRows] {
        if let Ok((table, _report)) = PriceTable::from_long_csv(data, policy) {
            let _ = table.log_returns();
        }
    }
});
