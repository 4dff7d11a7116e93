#![no_main]

use libfuzzer_sys::fuzz_target;
use noma_fbc::config::RawConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(raw) = RawConfig::from_json_str(text) else { return };
    if let Ok(run) = raw.resolve() {
        let again = serde_json::to_string(&run.to_raw()).unwrap();
        assert_eq!(RawConfig::from_json_str(&again).unwrap().resolve().unwrap(), run);
    }
});
