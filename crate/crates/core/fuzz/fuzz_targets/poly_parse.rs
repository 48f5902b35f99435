#![no_main]

use csdc_core::poly::TrivariatePoly;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = TrivariatePoly::from_json(text) {
        let q = TrivariatePoly::from_json(&p.to_json()).expect("round trip");
        assert_eq!(p, q);
        let _ = p.eval([0.5, -0.25, 1.0]);
    }
});
