#![no_main]
use libfuzzer_sys::fuzz_target;

// Both gain parsers (inline "k1,k2,k3,k4" text and the JSON file payload)
// over the same bytes.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = platoon_hinf_cli::parse_gains_inline(text) {
        assert!(g.as_array().iter().all(|v| v.is_finite()));
    }
    if let Ok(g) = platoon_hinf_cli::parse_gains_doc(text) {
        assert!(g.as_array().iter().all(|v| v.is_finite()));
    }
});
