#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use qapsat::analysis::{read_csv_from, CurveRow, FitRow};

fuzz_target!(|data: &[u8]| {
    let _ = read_csv_from::<FitRow, _>(data, Path::new("fits.csv"));
    let _ = read_csv_from::<CurveRow, _>(data, Path::new("curves.csv"));
});
