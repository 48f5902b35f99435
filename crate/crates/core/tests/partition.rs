use csdc_core::geometry::dc_value;
use csdc_core::partition::{
    boundary_check, count_map, default_epsilons, detect_crossings, fold_both_branches, fold_scaling,
    jacobian_analysis, radial_rank_profile, random_csdc_paths, random_fold_cases, regular_direction,
    PathSpec, Slice, SurfaceHit,
};
use csdc_core::{ControlTriangle, Error, Viewpoint};

fn generic() -> ControlTriangle {
    ControlTriangle::new(0.3, 2.0, 4.0).unwrap()
}

#[test]
fn companion_crossings_change_count_by_two() {
    let tri = generic();
    for p in random_csdc_paths(&tri, 10, 0.02, (0.3, 3.0), 41).unwrap() {
        let r = detect_crossings(&tri, &p.path).unwrap();
        let x = r
            .iter()
            .find(|x| (x.t - 0.5).abs() < 1e-6)
            .expect("crossing at the sampled companion");
        assert_eq!(x.hit, SurfaceHit::CSDC);
        assert!(!x.tangential);
        assert_eq!(x.delta.map(i64::abs), Some(2), "{x:?}");
        assert_eq!(x.pair_transitions, Some(1));
    }
}

#[test]
fn endpoint_on_surface_rejected() {
    let tri = generic();
    let p = PathSpec::new(Viewpoint::on_cylinder(0.4, 1.0), Viewpoint::new(0.0, 0.0, 1.0), 16, 1e-10).unwrap();
    assert!(matches!(detect_crossings(&tri, &p), Err(Error::EndpointOnSurface(0))));
}

#[test]
fn radial_path_crosses_the_cylinder() {
    let tri = generic();
    let p = PathSpec::new(Viewpoint::new(0.5, 0.3, 1.2), Viewpoint::new(1.6, 0.96, 1.2), 64, 1e-10).unwrap();
    let r = detect_crossings(&tri, &p).unwrap();
    let dc: Vec<_> = r.iter().filter(|x| matches!(x.hit, SurfaceHit::DC | SurfaceHit::Both)).collect();
    assert_eq!(dc.len(), 1, "{r:?}");
    assert!(dc[0].dc_value.abs() < 1e-8);
}

#[test]
fn rank_drops_on_the_cylinder() {
    let tri = generic();
    for k in 0..20 {
        let o = Viewpoint::on_cylinder(0.31 * k as f64, 0.3 + 0.1 * k as f64);
        assert!(jacobian_analysis(&tri, o).unwrap().ratio <= 1e-8);
    }
    let a = jacobian_analysis(&tri, Viewpoint::new(0.2, -0.3, 1.1)).unwrap();
    assert!(a.ratio >= 1e-3);
}

#[test]
fn rank_ratio_vanishes_linearly() {
    let tri = generic();
    let offsets: Vec<f64> = (2..=6).map(|k| 10f64.powi(-k)).collect();
    let (_, fit) = radial_rank_profile(&tri, 1.1, 1.4, &offsets).unwrap();
    let slope = fit.unwrap().slope;
    assert!((slope - 1.0).abs() < 0.1, "{slope}");
}

#[test]
fn fold_separation_is_square_root() {
    let tri = generic();
    for case in random_fold_cases(&tri, 5, (0.5, 2.0), 0.5, 9).unwrap() {
        let (real, complex) = fold_both_branches(&tri, case.viewpoint(), case.direction, &default_epsilons()).unwrap();
        assert!(real.pair_real);
        assert!((real.exponent().unwrap() - 0.5).abs() < 0.1);
        let c = complex.expect("opposite direction is complex");
        assert!((c.imag_exponent().unwrap() - 0.5).abs() < 0.1);
    }
}

#[test]
fn regular_direction_is_linear() {
    let tri = ControlTriangle::equilateral();
    let o = Viewpoint::on_cylinder(0.5, 1.0);
    let d = regular_direction(&tri, o, [0.3, -0.5, 0.8]).unwrap();
    let r = match fold_scaling(&tri, o, d, &default_epsilons()) {
        Ok(r) => r,
        Err(Error::PairNotReal(r)) => *r,
        Err(e) => panic!("{e}"),
    };
    assert!(r.fold_component.abs() < 1e-12);
    assert!((r.exponent().unwrap() - 1.0).abs() < 0.1, "{:?}", r.exponent());
}

#[test]
fn fold_needs_a_cylinder_point() {
    let tri = generic();
    let r = fold_scaling(&tri, Viewpoint::new(0.5, 0.5, 1.0), [1.0, 0.0, 0.0], &default_epsilons());
    assert!(matches!(r, Err(Error::NotOnDangerCylinder(_))));
}

#[test]
fn count_map_boundaries_follow_surfaces() {
    let tri = generic();
    let m = count_map(&tri, Slice::horizontal(0.8, 2.0, 96)).unwrap();
    assert!(m.counts.iter().all(Option::is_some));
    let b = boundary_check(&tri, &m, 100, 2, 5);
    assert!(b.probes > 0);
    assert!(b.unexplained.is_empty(), "{:?}", b.unexplained);
    let node = m.slice.node(48, 48);
    assert!(dc_value(node) < 0.0);
}
