#![no_main]
use libfuzzer_sys::fuzz_target;
use oiptb::properties::{parse_targets, targets_from_value, targets_to_value};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = parse_targets(text) {
        let again = targets_from_value(targets_to_value(&t)).expect("written targets parse");
        assert_eq!(again, t);
    }
});
