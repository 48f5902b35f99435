use csdc_core::geometry::dc_value;
use csdc_core::rieck::deltoid_value;
use csdc_core::solver;
use csdc_core::surface::{
    cylinder_double, deltoid_limit_check, log_grid, membership, sweep_dc, theta_grid, MembershipLabel,
};
use csdc_core::{ControlTriangle, Viewpoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn cylinder_viewpoints_have_a_double_solution() {
    let tri = ControlTriangle::new(0.3, 2.0, 4.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let o = Viewpoint::on_cylinder(rng.gen_range(0.0..6.28), rng.gen_range(0.1..4.0));
        let set = solver::solve_viewpoint(&tri, o).unwrap();
        let double = set.double().expect("multiplicity-2 triplet");
        let centers = tri.centers_from_distances(double.real_parts());
        assert!(centers
            .iter()
            .any(|c| c.distance(o) <= 1e-6 || c.distance(o.mirrored()) <= 1e-6));
    }
}

#[test]
fn off_cylinder_viewpoints_have_simple_roots() {
    let tri = ControlTriangle::equilateral();
    for o in [Viewpoint::new(0.2, 0.1, 1.0), Viewpoint::new(1.5, -0.4, 0.7)] {
        let set = solver::solve_viewpoint(&tri, o).unwrap();
        assert!(set.triplets.iter().all(|t| t.multiplicity == 1));
    }
}

#[test]
fn split_matches_generic_solve() {
    let tri = ControlTriangle::equilateral();
    let split = cylinder_double(&tri, 0.7, 1.3).unwrap();
    let set = solver::solve_viewpoint(&tri, Viewpoint::on_cylinder(0.7, 1.3)).unwrap();
    let d = set.double().unwrap();
    assert!(d.distance(&split.double) < 1e-6);
    assert!(split.remainder < 1e-20);
}

#[test]
fn companions_share_the_source_angles() {
    let tri = ControlTriangle::new(0.3, 2.0, 4.0).unwrap();
    let sw = sweep_dc(&tri, &theta_grid(24), &log_grid(0.2, 5.0, 8));
    assert!(sw.samples.len() > 200);
    for s in &sw.samples {
        assert!(s.residual <= 1e-9, "{s:?}");
        assert!(s.dc_value.abs() > 1e-4);
        assert!(s.companion.z >= 0.0);
    }
}

#[test]
fn sweep_order_is_grid_order() {
    let tri = ControlTriangle::equilateral();
    let a = sweep_dc(&tri, &theta_grid(12), &log_grid(0.5, 2.0, 3));
    let b = sweep_dc(&tri, &theta_grid(12), &log_grid(0.5, 2.0, 3));
    assert_eq!(a.samples, b.samples);
    let keys: Vec<(f64, f64)> = a.samples.iter().map(|s| (s.theta, s.z0)).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    assert_eq!(keys, sorted);
}

#[test]
fn deltoid_limit_is_approached() {
    let tri = ControlTriangle::equilateral();
    let t = deltoid_limit_check(&tri, &[10.0, 100.0, 1000.0], 36).unwrap();
    assert!(t.monotone);
    assert!(t.reduction >= 10.0);
    assert!(t.rows[2].max_distance <= 1e-2);
    assert_eq!(deltoid_value(3.0, 0.0), 0.0);
    assert_eq!(deltoid_value(-1.0, 0.0), 0.0);
}

#[test]
fn membership_labels() {
    let tri = ControlTriangle::new(0.3, 2.0, 4.0).unwrap();
    let on = membership(&tri, Viewpoint::on_cylinder(1.0, 1.2), 1e-9).unwrap();
    assert_eq!(on.label, MembershipLabel::OnDC);
    let off = membership(&tri, Viewpoint::new(0.1, 0.3, 1.0), 1e-9).unwrap();
    assert_eq!(off.label, MembershipLabel::Off);
    let s = &sweep_dc(&tri, &[1.0], &[1.5]).samples[0];
    let c = membership(&tri, s.companion, 1e-9).unwrap();
    assert_eq!(c.label, MembershipLabel::OnCSDC);
    assert!(dc_value(s.companion).abs() > 1e-4);
}
