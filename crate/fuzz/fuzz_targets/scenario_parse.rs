#![no_main]
use libfuzzer_sys::fuzz_target;

// Scenario files are user-supplied TOML; parsing and validation must never
// panic regardless of input.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = mildflow::scenario::Scenario::from_toml_str(text);
    }
});
