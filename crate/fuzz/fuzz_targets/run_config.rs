#![no_main]
use libfuzzer_sys::fuzz_target;

// Run-configuration parser: must never panic, and accepted configs must
// survive a serialize/reparse round trip.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = platoon_hinf_cli::parse_run_config(text) else { return };
    let json = serde_json::to_string(&cfg).unwrap();
    let again = platoon_hinf_cli::parse_run_config(&json).unwrap();
    assert_eq!(cfg, again);
    // building the synthesis configuration validates but must not panic
    let _ = cfg.to_synthesis_config(1);
});
