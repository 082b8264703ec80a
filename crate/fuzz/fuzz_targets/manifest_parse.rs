#![no_main]
use libfuzzer_sys::fuzz_target;

// Run manifests are re-read by `diagnose` and `rescale`; parsing stored
// (possibly tampered) run directories must never panic.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = mildflow::run::RunManifest::from_toml_str(text);
    }
});
