#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use qapsat::io::parse_sidecar;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_sidecar(text, Path::new("fuzz.toml"));
    }
});
