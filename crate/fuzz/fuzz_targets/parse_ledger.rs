#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use qapsat::harness::read_ledger_from;

fuzz_target!(|data: &[u8]| {
    let _ = read_ledger_from(data, Path::new("fuzz.csv"));
});
