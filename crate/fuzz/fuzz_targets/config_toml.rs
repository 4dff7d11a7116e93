#![no_main]

use libfuzzer_sys::fuzz_target;
use noma_fbc::config::RawConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(raw) = RawConfig::from_toml_str(text) else { return };
    if let Ok(run) = raw.resolve() {
        assert_eq!(run.to_raw().resolve().unwrap(), run);
    }
});
