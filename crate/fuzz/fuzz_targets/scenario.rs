#![no_main]
use libfuzzer_sys::fuzz_target;

// Scenario documents: parsing and platoon validation must never panic, and
// accepted documents must survive a serialize/reparse round trip.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = platoon_hinf_cli::parse_scenario(text) else { return };
    let json = serde_json::to_string(&doc).unwrap();
    let again = platoon_hinf_cli::parse_scenario(&json).unwrap();
    assert_eq!(doc, again);
    // full dynamics validation; simulation itself is out of scope here
    let _ = doc.to_scenario();
});
