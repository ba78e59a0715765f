#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((header, rows)) = oiptb::io::parse_numeric_csv(text) {
        assert!(rows.iter().all(|r| r.len() == header.len()));
    }
});
