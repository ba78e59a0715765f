#![no_main]
use libfuzzer_sys::fuzz_target;
use oiptb::fitting::CostSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = CostSpec::from_json(text) {
        let _ = spec.validate();
    }
});
