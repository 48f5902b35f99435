#![no_main]

use csdc_core::config::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_json_str(text) {
        // Whatever parses must survive a round trip.
        let again = ExperimentConfig::from_json_str(&cfg.to_json()).expect("round trip");
        assert_eq!(cfg.to_json(), again.to_json());
    }
});
