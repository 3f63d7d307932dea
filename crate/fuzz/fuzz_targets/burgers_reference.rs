#![no_main]

use libfuzzer_sys::fuzz_target;
use rpinn::problems::BurgersReference;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = BurgersReference::parse(text) {
        let again = BurgersReference::parse(&r.to_csv()).unwrap();
        assert_eq!(r, again);
        let _ = r.interpolate(0.0, 0.5);
    }
});
