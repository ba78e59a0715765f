#![no_main]
use libfuzzer_sys::fuzz_target;
use oiptb::io::KPath;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(path) = text.parse::<KPath>() {
        // Keep sample generation bounded.
        if path.samples_per_segment <= 1000 && path.points.len() <= 64 {
            let s = path.samples();
            assert!(s.iter().all(|p| p.k.is_finite()));
        }
    }
});
