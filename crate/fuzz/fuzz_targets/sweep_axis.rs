#![no_main]
use libfuzzer_sys::fuzz_target;

// Sweep-axis specifications "index:min:max:count".
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(axis) = platoon_hinf_cli::parse_axis_spec(text) {
        assert!((1..=4).contains(&axis.axis));
        assert!(axis.min <= axis.max);
        assert!(axis.count >= 1);
    }
});
