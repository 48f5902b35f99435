use std::f64::consts::TAU;

use csdc_core::config::{Command, ExperimentConfig};
use csdc_core::geometry::ControlTriangle;
use csdc_core::partition::{
    self, boundary_check, count_map, detect_crossings, discriminant_trace, fold_both_branches,
    fold_scaling, random_csdc_paths, random_fold_cases, rank_survey, regular_direction, FoldReport,
    PathSpec, SurfaceHit,
};
use csdc_core::rieck::{deltoid_value, identity_survey};
use csdc_core::surface::{
    self, deltoid_limit_check, dc_nondivisibility, fit_poly, jittered_theta_grid, log_grid, membership,
    poly_obj, samples_csv, sweep_dc, theta_grid, MeshBox,
};
use csdc_core::Error;
use serde::Serialize;

/// One named pass/fail outcome of an experiment.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            pass,
            detail,
        }
    }
}

#[derive(Default)]
pub struct Outcome {
    /// File name and contents, written in this order.
    pub files: Vec<(String, Vec<u8>)>,
    pub checks: Vec<Check>,
}

impl Outcome {
    fn json(&mut self, name: &str, value: &impl Serialize) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.files.push((name.into(), text.into_bytes()));
        Ok(())
    }

    fn text(&mut self, name: &str, text: String) {
        self.files.push((name.into(), text.into_bytes()));
    }
}

pub fn run(command: Command, cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let tri = cfg.control_triangle()?;
    let seed = cfg.seed_for(command)?;
    match command {
        Command::Sweep => sweep(&tri, cfg, seed),
        Command::Fit => fit(&tri, cfg, seed),
        Command::Member => member(&tri, cfg),
        Command::Cross => cross(&tri, cfg, seed),
        Command::Map => map(&tri, cfg, seed),
        Command::Fold => fold(&tri, cfg, seed),
        Command::Rank => rank(&tri, cfg, seed),
        Command::RieckReport => rieck(&tri, cfg, seed),
    }
}

fn sweep_grid(cfg: &ExperimentConfig, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let s = &cfg.sweep;
    let thetas = if s.jitter {
        jittered_theta_grid(s.theta_count, seed)
    } else {
        theta_grid(s.theta_count)
    };
    (thetas, log_grid(s.z_min, s.z_max, s.z_count))
}

#[derive(Serialize)]
struct SweepSummary {
    samples: usize,
    exclusions: usize,
    max_residual: f64,
    max_abs_dc_value_of_sources: f64,
}

fn sweep(tri: &ControlTriangle, cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<Outcome> {
    let (thetas, z0s) = sweep_grid(cfg, seed);
    let sw = sweep_dc(tri, &thetas, &z0s);
    let mut out = Outcome::default();
    let max_residual = sw.samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    let summary = SweepSummary {
        samples: sw.samples.len(),
        exclusions: sw.exclusions.len(),
        max_residual,
        max_abs_dc_value_of_sources: sw
            .samples
            .iter()
            .map(|s| csdc_core::geometry::dc_value(s.source).abs())
            .fold(0.0, f64::max),
    };
    if !sw.samples.is_empty() {
        out.text("sweep.csv", samples_csv(&sw.samples)?);
    }
    out.json("sweep_exclusions.json", &sw.exclusions)?;
    out.json("sweep_summary.json", &summary)?;
    out.checks.push(Check::new(
        "companion angle residual",
        !sw.samples.is_empty() && max_residual <= 1e-8,
        format!("{} samples, max residual {max_residual:.3e}", sw.samples.len()),
    ));

    if !cfg.sweep.deltoid_z0.is_empty() {
        let table = deltoid_limit_check(tri, &cfg.sweep.deltoid_z0, cfg.sweep.deltoid_theta_count)?;
        out.json("deltoid.json", &table)?;
        let last = table.rows.last().expect("non-empty heights");
        out.checks.push(Check::new(
            "deltoid distance at largest height",
            last.max_distance <= 1e-2,
            format!("z0 = {}, max distance {:.3e}", last.z0, last.max_distance),
        ));
        if table.rows.len() > 1 {
            out.checks.push(Check::new(
                "deltoid max|q| reduction",
                table.monotone && table.reduction >= 10.0,
                format!("monotone {}, reduction {:.3e}", table.monotone, table.reduction),
            ));
        }
        let cusps = [deltoid_value(3.0, 0.0), deltoid_value(-1.0, 0.0)];
        out.checks.push(Check::new(
            "deltoid q(3,0) and q(-1,0)",
            cusps == [0.0, 0.0],
            format!("{:e}, {:e}", cusps[0], cusps[1]),
        ));
    }
    Ok(out)
}

#[derive(Serialize)]
struct FitSummary {
    samples: usize,
    reports: Vec<surface::FitReport>,
    /// Highest fitted degree with a unique null direction.
    nondivisibility_degree: Option<u32>,
    nondivisibility: Option<surface::Nondivisibility>,
}

fn fit(tri: &ControlTriangle, cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<Outcome> {
    let (thetas, z0s) = sweep_grid(cfg, seed);
    let sw = sweep_dc(tri, &thetas, &z0s);
    let f = &cfg.fit;
    let mut out = Outcome::default();
    let mut reports = Vec::new();
    let mut unique = None;
    let mut last = None;
    for &d in &f.degrees {
        let (poly, report) = fit_poly(&sw.samples, d, f.even_in_z)?;
        out.text(&format!("poly_deg{d}.json"), poly.to_json() + "\n");
        if f.mesh_resolution > 0 {
            let b = poly.scale_box();
            let mesh = MeshBox {
                lo: [0, 1, 2].map(|k| b.center[k] - b.half_width[k]),
                hi: [0, 1, 2].map(|k| b.center[k] + b.half_width[k]),
                resolution: f.mesh_resolution,
            };
            out.text(&format!("poly_deg{d}.obj"), poly_obj(&poly, mesh)?);
        }
        if !report.rank_deficient {
            unique = Some((d, poly.clone()));
        }
        last = Some((d, poly));
        reports.push(report);
    }
    let avoid: Vec<[f64; 3]> = sw
        .samples
        .iter()
        .map(|s| [s.companion.x, s.companion.y, s.companion.z])
        .collect();
    let target = unique.or(last);
    let nondivisibility = match (&target, f.nondivisibility_count) {
        (Some((_, p)), n) if n > 0 => Some(dc_nondivisibility(p, &avoid, f.clearance, n, seed)),
        _ => None,
    };
    let nondivisibility_degree = nondivisibility.as_ref().and(target.map(|(d, _)| d));
    let by_degree = |d: u32| reports.iter().find(|r| r.degree == d);
    if let Some(r) = by_degree(12) {
        out.checks.push(Check::new(
            "degree-12 held-out residual",
            sw.samples.len() >= 5000 && r.held_out_rms <= 1e-6,
            format!("{} samples, held-out rms {:.3e}", sw.samples.len(), r.held_out_rms),
        ));
    }
    if let Some(r) = by_degree(10) {
        out.checks.push(Check::new(
            "degree-10 held-out residual",
            r.held_out_rms >= 1e-3,
            format!("held-out rms {:.3e}", r.held_out_rms),
        ));
    }
    if let Some(n) = &nondivisibility {
        out.checks.push(Check::new(
            "nondivisibility by the cylinder",
            n.min_abs >= 1e-3,
            format!(
                "degree {}, min |p| on the cylinder {:.3e} over {} points",
                nondivisibility_degree.unwrap_or_default(),
                n.min_abs,
                n.evaluated
            ),
        ));
    }
    out.json(
        "fit_summary.json",
        &FitSummary {
            samples: sw.samples.len(),
            reports,
            nondivisibility_degree,
            nondivisibility,
        },
    )?;
    Ok(out)
}

fn member(tri: &ControlTriangle, cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let verdicts = cfg
        .member
        .points
        .iter()
        .map(|&o| membership(tri, o, cfg.member.tol))
        .collect::<csdc_core::Result<Vec<_>>>()?;
    let mut out = Outcome::default();
    out.json("membership.json", &verdicts)?;
    Ok(out)
}

#[derive(Serialize)]
struct PathResult {
    path: PathSpec,
    crossings: Vec<partition::CrossingReport>,
}

fn cross(tri: &ControlTriangle, cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<Outcome> {
    let c = &cfg.cross;
    let mut paths = c
        .paths
        .iter()
        .map(|p| PathSpec::new(p.start, p.end, c.samples, c.tolerance))
        .collect::<csdc_core::Result<Vec<_>>>()?;
    if c.random_paths > 0 {
        paths.extend(
            random_csdc_paths(tri, c.random_paths, c.half_length, (c.z_min, c.z_max), seed)?
                .into_iter()
                .map(|p| PathSpec {
                    samples: c.samples,
                    tolerance: c.tolerance,
                    ..p.path
                }),
        );
    }
    let mut results = Vec::with_capacity(paths.len());
    let mut trace = String::from("path,t,discriminant\n");
    for (i, p) in paths.iter().enumerate() {
        for tp in discriminant_trace(tri, p)? {
            trace.push_str(&format!("{i},{},{}\n", tp.t, tp.discriminant));
        }
        results.push(PathResult {
            path: *p,
            crossings: detect_crossings(tri, p)?,
        });
    }
    let counted: Vec<&partition::CrossingReport> = results
        .iter()
        .flat_map(|r| &r.crossings)
        .filter(|x| x.hit == SurfaceHit::CSDC && !x.tangential)
        .collect();
    let good = counted
        .iter()
        .filter(|x| x.delta.map(i64::abs) == Some(2) && x.pair_transitions == Some(1))
        .count();
    let mut out = Outcome::default();
    out.json("crossings.json", &results)?;
    out.text("crossing_traces.csv", trace);
    out.checks.push(Check::new(
        "companion-surface crossings change the count by 2",
        good == counted.len(),
        format!("{good}/{} transversal crossings", counted.len()),
    ));
    Ok(out)
}

fn map(tri: &ControlTriangle, cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<Outcome> {
    let m = count_map(tri, cfg.map.slice)?;
    let mut out = Outcome::default();
    out.text("count_map.csv", m.csv());
    out.files.push(("count_map.pgm".into(), m.pgm()));
    if cfg.map.boundary_probes > 0 {
        let b = boundary_check(tri, &m, cfg.map.boundary_probes, cfg.map.boundary_radius, seed);
        out.checks.push(Check::new(
            "count boundaries explained",
            b.unexplained.is_empty(),
            format!("{}/{} probes within {} cells", b.explained, b.probes, b.radius_cells),
        ));
        out.json("boundary_check.json", &b)?;
    }
    Ok(out)
}

#[derive(Serialize)]
struct FoldResult {
    case: partition::FoldCase,
    real: FoldReport,
    complex: Option<FoldReport>,
    /// Direction orthogonal to `u31`, for contrast.
    regular: FoldReport,
}

fn fold(tri: &ControlTriangle, cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<Outcome> {
    let f = &cfg.fold;
    let mut cases = f.cases.clone();
    if f.random_cases > 0 {
        cases.extend(random_fold_cases(
            tri,
            f.random_cases,
            (f.z_min, f.z_max),
            f.min_fold_component,
            seed,
        )?);
    }
    let mut results = Vec::with_capacity(cases.len());
    for case in cases {
        let o = case.viewpoint();
        let (real, complex) = fold_both_branches(tri, o, case.direction, &f.eps)?;
        let rd = regular_direction(tri, o, case.direction)?;
        let regular = match fold_scaling(tri, o, rd, &f.eps) {
            Ok(r) => r,
            Err(Error::PairNotReal(r)) => *r,
            Err(e) => return Err(e.into()),
        };
        results.push(FoldResult {
            case,
            real,
            complex,
            regular,
        });
    }
    let within = |v: Option<f64>| v.is_some_and(|v| (v - 0.5).abs() <= 0.05);
    let real_ok = results.iter().filter(|r| within(r.real.exponent())).count();
    let imag_ok = results
        .iter()
        .filter(|r| within(r.complex.as_ref().and_then(FoldReport::imag_exponent)))
        .count();
    let mut out = Outcome::default();
    out.json("fold.json", &results)?;
    out.checks.push(Check::new(
        "separation exponent 0.50 +- 0.05",
        real_ok == results.len(),
        format!("{real_ok}/{} cases", results.len()),
    ));
    out.checks.push(Check::new(
        "opposite direction imaginary exponent 0.50 +- 0.05",
        imag_ok == results.len(),
        format!("{imag_ok}/{} cases", results.len()),
    ));
    Ok(out)
}

fn rank(tri: &ControlTriangle, cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<Outcome> {
    let r = &cfg.rank;
    let s = rank_survey(tri, r.on_dc, r.off_dc, r.off_clearance, seed)?;
    let mut out = Outcome::default();
    if r.on_dc > 0 {
        out.checks.push(Check::new(
            "rank drop on the cylinder",
            s.max_ratio_on_dc <= 1e-8,
            format!("max ratio {:.3e} over {} points", s.max_ratio_on_dc, s.on_dc.len()),
        ));
    }
    if r.off_dc > 0 {
        out.checks.push(Check::new(
            "full rank off the cylinder",
            s.min_ratio_off_dc >= 1e-3,
            format!("min ratio {:.3e} over {} points", s.min_ratio_off_dc, s.off_dc.len()),
        ));
    }
    let (offsets, profile) = {
        let offsets: Vec<f64> = (1..=6).map(|k| 10f64.powi(-k)).collect();
        let p = partition::radial_rank_profile(tri, 0.37 * TAU, 1.3, &offsets)?;
        (offsets, p)
    };
    out.json("rank.json", &s)?;
    out.json(
        "rank_radial.json",
        &serde_json::json!({ "offsets": offsets, "ratios": profile.0, "fit": profile.1 }),
    )?;
    Ok(out)
}

fn rieck(tri: &ControlTriangle, cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<Outcome> {
    let survey = identity_survey(tri, cfg.rieck.count, seed)?;
    let reference = survey.reference.residuals[0];
    let mut out = Outcome::default();
    out.checks.push(Check::new(
        "reference residual -0.279",
        reference.is_some_and(|v| (v + 0.279).abs() <= 1e-3),
        format!("{reference:?}; verdict: {}", survey.verdict),
    ));
    out.json("rieck_report.json", &survey)?;
    Ok(out)
}
