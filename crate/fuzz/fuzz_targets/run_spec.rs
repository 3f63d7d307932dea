#![no_main]

use libfuzzer_sys::fuzz_target;
use rpinn::config::parse_run_spec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = parse_run_spec(text, &[]) {
        // the resolved form must resolve to itself
        let json = spec.to_json().unwrap();
        assert_eq!(parse_run_spec(&json, &[]).unwrap(), spec);
        let _ = spec.sweep_specs();
    }
});
