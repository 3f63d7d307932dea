#![no_main]

use libfuzzer_sys::fuzz_target;
use rpinn::network::{parse_checkpoint, write_checkpoint};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((spec, params)) = parse_checkpoint(text) {
        // anything accepted must survive a write/read cycle unchanged
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &spec, &params).unwrap();
        let (spec2, params2) = parse_checkpoint(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(spec, spec2);
        let same = params.values().iter().zip(params2.values()).all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same && params.len() == params2.len());
    }
});
