#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(materials) = oiptb::model::parse_materials(text) {
        for m in materials {
            assert!(m.validate().is_valid());
        }
    }
});
