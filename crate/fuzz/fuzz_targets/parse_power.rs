#![no_main]

use libfuzzer_sys::fuzz_target;
use noma_fbc::config::{format_power, parse_dbm, parse_power};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(w) = parse_power(text) {
        assert!(w >= 0.0);
        assert!(parse_dbm(text).is_ok());
        if w.is_finite() {
            assert_eq!(parse_power(&format_power(w)).unwrap(), w);
        }
    }
});
