#![no_main]
use libfuzzer_sys::fuzz_target;
use oiptb::fitting::FitConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = FitConfig::from_json(text) {
        if c.validate().is_ok() {
            let _ = c.elite_count();
            let _ = c.evaluations();
        }
    }
});
