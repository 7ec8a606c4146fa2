#![no_main]

use libfuzzer_sys::fuzz_target;
use qapsat::harness::PlanFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(plan) = PlanFile::parse(text) {
        let again = PlanFile::parse(&plan.to_toml()).unwrap();
        assert_eq!(plan, again);
    }
});
