#![no_main]
use libfuzzer_sys::fuzz_target;
use oiptb::superlattice::LayerStack;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(stack) = text.parse::<LayerStack>() {
        let spelled: Vec<String> = stack.layers.iter().map(|l| format!("{}:{}", l.material, l.monolayers)).collect();
        let again: LayerStack = spelled.join(",").parse().expect("respelled stack parses");
        assert_eq!(again, stack);
    }
});
