#![no_main]

use csdc_core::solver::solve_viewpoint;
use csdc_core::{ControlTriangle, Viewpoint};
use libfuzzer_sys::fuzz_target;

fn f64s(data: &[u8]) -> Option<[f64; 6]> {
    if data.len() < 48 {
        return None;
    }
    let mut out = [0.0; 6];
    for (i, v) in out.iter_mut().enumerate() {
        *v = f64::from_le_bytes(data[8 * i..8 * i + 8].try_into().ok()?);
    }
    out.iter().all(|v| v.is_finite() && v.abs() < 1e3).then_some(out)
}

fuzz_target!(|data: &[u8]| {
    let Some([a, b, c, x, y, z]) = f64s(data) else { return };
    let Ok(tri) = ControlTriangle::new(a, b, c) else { return };
    let o = Viewpoint::new(x, y, z);
    // Errors are fine; panics and malformed sets are not.
    if let Ok(set) = solve_viewpoint(&tri, o) {
        let total: usize = set.triplets.iter().map(|t| t.multiplicity).sum();
        assert!(total <= 4);
        assert!(set.p3p_count <= set.p3p_count_with_multiplicity);
    }
});
