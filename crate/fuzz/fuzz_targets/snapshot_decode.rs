#![no_main]
use libfuzzer_sys::fuzz_target;

// MFLD snapshots come from disk and may be truncated or corrupted; the
// decoder must reject bad headers, lengths and payloads without panicking.
fuzz_target!(|data: &[u8]| {
    if let Ok(field) = mildflow::snapshot::from_bytes(data) {
        // decoded fields must re-encode to the same bytes
        let bytes = mildflow::snapshot::to_bytes(&field).unwrap();
        assert_eq!(bytes.as_slice(), data);
    }
});
