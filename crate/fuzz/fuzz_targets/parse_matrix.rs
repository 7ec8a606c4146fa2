#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use qapsat::io::{format_matrix_text, parse_matrix_text};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(inst) = parse_matrix_text(text, Path::new("fuzz.dat")) {
        // Whatever parses must survive a write/read cycle unchanged.
        let again = parse_matrix_text(&format_matrix_text(&inst), Path::new("fuzz.dat")).unwrap();
        assert_eq!(inst, again);
    }
});
