use mtlab::blowup::{blowup_report, BlowupOptions, BlowupReport};
use mtlab::constants::{bubble_density, bubble_mass, bubble_residual, bubble_value, capacity_upper_bound, sharp_constants, Dimension};
use mtlab::fem::{EigOptions, FemSpace};
use mtlab::green::{
    build_test_family, capacity_minimizer_energy, discrete_capacity_check, growth_exponent, lower_bound_check,
    solve_green, solve_local_green, CapacitySpec, GreenOptions, GreenResult, LowerBound, TestFamilyParams,
};
use mtlab::mesh::{Mesh, Point};
use mtlab::subcritical::{continuation, initial_guess, MaximizeOptions, MaximizerResult, SubcriticalProblem};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::output::{num, read_linked, Output};
use crate::{CliError, Context};

fn eig_options(cfg: &ExperimentConfig) -> EigOptions {
    EigOptions {
        tol: cfg.solver.eigen_tol,
        max_iter: cfg.solver.eigen_max_iter,
    }
}

fn green_options(cfg: &ExperimentConfig, fit_annulus: Option<(f64, f64)>) -> GreenOptions {
    GreenOptions {
        tol: cfg.solver.green_tol,
        relaxation: cfg.solver.green_relaxation,
        fit_annulus,
        ..GreenOptions::default()
    }
}

fn build_mesh(cfg: &ExperimentConfig, h: f64) -> Result<Mesh, CliError> {
    cfg.domain.build(h).ctx(format!("building the mesh at h = {h}"))
}

/// Resolves `α`, solving for `λ₁` on `space` (always, since `α < λ₁` is
/// checked against it).
fn resolve_alpha(cfg: &ExperimentConfig, space: &FemSpace, n: Dimension) -> Result<(f64, f64), CliError> {
    let eig = space.neumann_eigenvalue(n, eig_options(cfg)).ctx("eigenvalue for alpha")?;
    let alpha = cfg.alpha.resolve(eig.lambda1);
    if !(alpha < eig.lambda1) {
        return Err(CliError::Config(format!("alpha = {alpha} is not below lambda_1 = {}", eig.lambda1)));
    }
    Ok((alpha, eig.lambda1))
}

#[derive(Serialize)]
struct EigenRow {
    h: f64,
    nodes: usize,
    elements: usize,
    lambda1: f64,
    iterations: usize,
    residual: f64,
}

#[derive(Serialize)]
struct EigenReport {
    ladder: Vec<EigenRow>,
    monotone_decreasing: bool,
    alpha_spec: crate::config::AlphaSpec,
    alpha_resolved: f64,
}

pub fn eigen(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let n = cfg.dimension()?;
    let out = Output::new("eigen", cfg)?;
    let h = cfg.domain.h();
    let ladder = cfg.eigen.ladder.clone().unwrap_or_else(|| vec![4.0 * h, 2.0 * h, h]);
    let mut rows = Vec::new();
    for &h in &ladder {
        let space = FemSpace::new(build_mesh(cfg, h)?);
        let res = space.neumann_eigenvalue(n, eig_options(cfg)).ctx(format!("eigen solve at h = {h}"))?;
        rows.push(EigenRow {
            h,
            nodes: space.node_count(),
            elements: space.mesh().element_count(),
            lambda1: res.lambda1,
            iterations: res.iterations,
            residual: res.residual,
        });
    }
    let monotone_decreasing = rows.windows(2).all(|w| w[1].lambda1 <= w[0].lambda1);
    let finest = rows.last().map_or(0.0, |r| r.lambda1);
    let csv: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![num(r.h), r.nodes.to_string(), num(r.lambda1), r.iterations.to_string(), num(r.residual)])
        .collect();
    out.csv("eigen_ladder.csv", &["h", "nodes", "lambda1", "iterations", "residual"], &csv)?;
    out.json(
        "eigen.json",
        &EigenReport {
            ladder: rows,
            monotone_decreasing,
            alpha_spec: cfg.alpha,
            alpha_resolved: cfg.alpha.resolve(finest),
        },
    )
}

#[derive(Serialize)]
struct StepRecord<'a> {
    index: usize,
    epsilon: f64,
    result: Option<&'a MaximizerResult>,
    blowup: Option<&'a BlowupReport>,
    lambda_bound_holds: Option<bool>,
    error: Option<String>,
}

#[derive(Serialize)]
struct MaximizeReport<'a> {
    nodes: usize,
    volume: f64,
    lambda1: f64,
    alpha: f64,
    seed: u64,
    steps: Vec<StepRecord<'a>>,
    c_nondecreasing: bool,
    all_converged: bool,
}

pub fn maximize(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let n = cfg.dimension()?;
    let out = Output::new("maximize", cfg)?;
    let space = FemSpace::new(build_mesh(cfg, cfg.domain.h())?);
    let eig = space.neumann_eigenvalue(n, eig_options(cfg)).ctx("eigenvalue for alpha")?;
    let alpha = cfg.alpha.resolve(eig.lambda1);
    let schedule = cfg.schedule();
    let first = SubcriticalProblem::new(&space, n, alpha, schedule[0], eig.lambda1).map_err(|e| CliError::Config(e.to_string()))?;
    let init = initial_guess(&first, &eig.eigenfunction, cfg.seed).ctx("initial guess")?;
    let opts = MaximizeOptions {
        tol: cfg.solver.maximize_tol,
        max_iter: cfg.solver.maximize_max_iter,
        ..MaximizeOptions::default()
    };
    let steps = continuation(&space, n, alpha, eig.lambda1, &schedule, &init, opts).ctx("continuation")?;
    let bopts = BlowupOptions {
        sample_radius: cfg.blowup.sample_radius,
        per_radius: cfg.blowup.per_radius,
        concentration_radius: cfg.blowup.concentration_radius,
    };
    let reports: Vec<Option<Result<BlowupReport, String>>> = steps
        .iter()
        .map(|s| s.result.as_ref().map(|r| blowup_report(&space, r, n, bopts).map_err(|e| e.to_string())))
        .collect();
    out.raw("mesh.txt", |w| space.mesh().write_to(w))?;
    let vol = space.volume();
    let mut records = Vec::new();
    let mut rows = Vec::new();
    let mut failure: Option<String> = None;
    for (k, (step, report)) in steps.iter().zip(&reports).enumerate() {
        let mut error = step.error.clone();
        let blowup = match report {
            Some(Ok(b)) => Some(b),
            Some(Err(e)) => {
                error.get_or_insert_with(|| format!("blow-up diagnostics: {e}"));
                None
            }
            None => None,
        };
        let bound = step.result.as_ref().map(|r| r.lambda_eps >= (r.big_c_eps - vol) / r.beta_eps);
        if bound == Some(false) {
            error.get_or_insert_with(|| "lambda_eps < (C_eps - |Omega|)/beta_eps".to_string());
        }
        if let Some(e) = &error {
            failure.get_or_insert_with(|| format!("epsilon = {}: {e}", step.epsilon));
        }
        if let Some(r) = &step.result {
            out.raw(&format!("u_eps{k}.field"), |w| r.u.write_to(w))?;
            let (r_eps, bd, dev, frac) = blowup.map_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN), |b| {
                (b.r_eps, b.boundary_distance, b.profile_deviation, b.gradient_mass_fraction)
            });
            rows.push(vec![
                num(step.epsilon),
                num(r.big_c_eps),
                num(r.c_eps),
                num(r.lambda_eps),
                num(r_eps),
                num(bd),
                num(r.mu_eps),
                num(r.nu_eps),
                num(r.el_residual),
                r.iterations.to_string(),
                num(dev),
                num(frac),
                bound.unwrap_or(false).to_string(),
            ]);
        }
        if let Some(b) = blowup {
            out.csv_with(&format!("profile_eps{k}.csv"), |w| b.profiles.write_csv(w))?;
        }
        let record = StepRecord {
            index: k,
            epsilon: step.epsilon,
            result: step.result.as_ref(),
            blowup,
            lambda_bound_holds: bound,
            error,
        };
        out.json(&format!("maximize_eps{k}.json"), &record)?;
        records.push(record);
    }
    out.csv(
        "maximize.csv",
        &[
            "epsilon",
            "C_eps",
            "c_eps",
            "lambda_eps",
            "r_eps",
            "boundary_distance",
            "mu_eps",
            "nu_eps",
            "el_residual",
            "iterations",
            "profile_deviation",
            "gradient_mass_fraction",
            "lambda_bound_holds",
        ],
        &rows,
    )?;
    let cs: Vec<f64> = steps.iter().filter_map(|s| s.result.as_ref().map(|r| r.big_c_eps)).collect();
    let report = MaximizeReport {
        nodes: space.node_count(),
        volume: vol,
        lambda1: eig.lambda1,
        alpha,
        seed: cfg.seed,
        c_nondecreasing: cs.windows(2).all(|w| w[1] >= w[0]),
        all_converged: failure.is_none(),
        steps: records,
    };
    out.json("maximize.json", &report)?;
    match failure {
        Some(msg) => Err(CliError::Solver(msg)),
        None => Ok(()),
    }
}

/// Boundary node with the largest x coordinate (lowest index on ties).
fn default_pole(mesh: &Mesh) -> Point {
    let mut best = mesh.boundary_nodes()[0];
    for &i in mesh.boundary_nodes() {
        if mesh.node(i)[0] > mesh.node(best)[0] {
            best = i;
        }
    }
    mesh.node(best)
}

fn as_point(v: &serde_json::Value) -> Option<Point> {
    let a = v.as_array()?;
    Some([a.first()?.as_f64()?, a.get(1)?.as_f64()?])
}

/// Pole from the config, else from the last converged step of a linked
/// maximize run, else the default boundary node.
fn resolve_pole(cfg: &ExperimentConfig, out: &Output, mesh: &Mesh) -> Result<(Point, String), CliError> {
    if let Some(p) = cfg.green.point {
        return Ok((p, "config".into()));
    }
    if let Some(prior) = read_linked(&out.dir, "maximize.json", &out.hash)? {
        let last = prior["steps"]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(|s| as_point(&s["result"]["x_eps"]))
            .last();
        if let Some(p) = last {
            return Ok((p, "maximize.json".into()));
        }
    }
    Ok((default_pole(mesh), "default".into()))
}

#[derive(Serialize)]
struct GreenLevel {
    h: f64,
    nodes: usize,
    #[serde(rename = "A_p")]
    a_p: f64,
    fit_slope: f64,
    integral: f64,
    iterations: usize,
}

#[derive(Serialize)]
struct GreenReport<'a> {
    pole_source: String,
    expected_slope: f64,
    ladder: Vec<GreenLevel>,
    finest: &'a GreenResult,
    slope_within_5pct: bool,
    mean_zero: bool,
    ap_cauchy: Option<f64>,
    ap_cauchy_within_2pct: Option<bool>,
}

pub fn green(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let n = cfg.dimension()?;
    let out = Output::new("green", cfg)?;
    let mut mesh = build_mesh(cfg, cfg.domain.h())?;
    let (pole, pole_source) = resolve_pole(cfg, &out, &mesh)?;
    let (alpha, _) = resolve_alpha(cfg, &FemSpace::new(mesh.clone()), n)?;
    let mut ladder = Vec::new();
    let mut finest = None;
    let mut h = cfg.domain.h();
    for level in 0..=cfg.green.refinements {
        if level > 0 {
            mesh = mesh.refine();
            h *= 0.5;
        }
        let space = FemSpace::new(mesh.clone());
        let res = solve_green(&space, pole, alpha, n, green_options(cfg, cfg.green.fit_annulus))
            .ctx(format!("green solve at h = {h}"))?;
        ladder.push(GreenLevel {
            h,
            nodes: space.node_count(),
            a_p: res.a_p,
            fit_slope: res.fit_slope,
            integral: space.integral(&res.g),
            iterations: res.iterations,
        });
        finest = Some((space, res));
    }
    let (space, res) = finest.expect("at least one level");
    let expected = -n.as_f64() / sharp_constants(n).beta_n;
    let cauchy = (ladder.len() >= 2).then(|| {
        let (a, b) = (ladder[ladder.len() - 2].a_p, ladder[ladder.len() - 1].a_p);
        (b - a).abs() / b.abs()
    });
    out.raw("green_mesh.txt", |w| space.mesh().write_to(w))?;
    out.raw("green.field", |w| res.g.write_to(w))?;
    let rem: Vec<Vec<String>> = res.remainder_samples.iter().map(|(r, b)| vec![num(*r), num(*b)]).collect();
    out.csv("green_remainder.csv", &["radius", "remainder"], &rem)?;
    let lad: Vec<Vec<String>> = ladder
        .iter()
        .map(|l| vec![num(l.h), l.nodes.to_string(), num(l.a_p), num(l.fit_slope), num(l.integral)])
        .collect();
    out.csv("green_ladder.csv", &["h", "nodes", "A_p", "fit_slope", "integral"], &lad)?;
    let report = GreenReport {
        pole_source,
        expected_slope: expected,
        slope_within_5pct: (res.fit_slope - expected).abs() <= 0.05 * expected.abs(),
        mean_zero: ladder.iter().all(|l| l.integral.abs() <= 1e-10),
        ap_cauchy: cauchy,
        ap_cauchy_within_2pct: cauchy.map(|c| c <= 0.02),
        ladder,
        finest: &res,
    };
    out.json("green.json", &report)
}

#[derive(Serialize)]
struct BoundsRow {
    params: Option<TestFamilyParams>,
    mean: f64,
    norm: f64,
    jump: f64,
    check: Option<LowerBound>,
    error: Option<String>,
}

#[derive(Serialize)]
struct BoundsReport {
    pole: Point,
    pole_source: String,
    nodes: usize,
    volume: f64,
    alpha: f64,
    #[serde(rename = "A_p_inline")]
    a_p_inline: f64,
    #[serde(rename = "A_p_consumed")]
    a_p_consumed: f64,
    a_p_source: String,
    capacity_upper_bound: f64,
    epsilons: Vec<f64>,
    rows: Vec<BoundsRow>,
    growth_exponent: Option<f64>,
    expected_growth_exponent: f64,
    growth_within_005: Option<bool>,
    margin_trend: String,
}

fn trend(values: &[f64]) -> String {
    if values.windows(2).all(|w| w[1] >= w[0]) {
        "nondecreasing".into()
    } else if values.windows(2).all(|w| w[1] <= w[0]) {
        "nonincreasing".into()
    } else {
        "mixed".into()
    }
}

pub fn bounds(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let n = cfg.dimension()?;
    let out = Output::new("bounds", cfg)?;
    let base = build_mesh(cfg, cfg.domain.h())?;
    // a linked green run fixes both the pole and the A_p fed to the bound
    let linked = read_linked(&out.dir, "green.json", &out.hash)?;
    let linked_pole = linked.as_ref().and_then(|g| as_point(&g["finest"]["p"]));
    let linked_ap = linked.as_ref().and_then(|g| g["finest"]["A_p"].as_f64());
    let (pole, pole_source) = match linked_pole {
        Some(p) => (p, "green.json".to_string()),
        None => resolve_pole(cfg, &out, &base)?,
    };
    let (alpha, _) = resolve_alpha(cfg, &FemSpace::new(base.clone()), n)?;
    let eps_min = cfg.bounds.epsilons.iter().copied().fold(f64::INFINITY, f64::min);
    let mesh = base
        .refine_near(pole, cfg.bounds.refine_radius, cfg.bounds.h_min_factor * eps_min, cfg.bounds.grading)
        .ctx("local refinement near the pole")?;
    let space = FemSpace::new(mesh);
    let mut g = solve_green(&space, pole, alpha, n, green_options(cfg, cfg.bounds.fit_annulus)).ctx("green solve on the refined mesh")?;
    let a_p_inline = g.a_p;
    let (a_p_consumed, a_p_source) = match linked_ap {
        Some(a) => (a, "green.json".to_string()),
        None => (g.a_p, "inline".to_string()),
    };
    // the family and the bound share one A_p
    g.a_p = a_p_consumed;
    let bound = capacity_upper_bound(n, a_p_consumed, space.volume()).ctx("capacity bound")?;
    let mut rows = Vec::new();
    let mut failure = None;
    for &eps in &cfg.bounds.epsilons {
        let row = build_test_family(&space, &g, eps, n).and_then(|fam| {
            let check = lower_bound_check(&space, &fam.phi, n, a_p_consumed)?;
            Ok(BoundsRow {
                params: Some(fam.params),
                mean: fam.mean,
                norm: fam.norm,
                jump: fam.jump,
                check: Some(check),
                error: None,
            })
        });
        match row {
            Ok(r) => rows.push(r),
            Err(e) => {
                rows.push(BoundsRow {
                    params: None,
                    mean: f64::NAN,
                    norm: f64::NAN,
                    jump: f64::NAN,
                    check: None,
                    error: Some(e.to_string()),
                });
                failure.get_or_insert(CliError::Core {
                    context: format!("test family at epsilon = {eps}"),
                    source: e,
                });
            }
        }
    }
    let ok: Vec<(f64, f64, f64)> = cfg
        .bounds
        .epsilons
        .iter()
        .zip(&rows)
        .filter_map(|(&e, r)| Some((e, r.params?.c, r.check?.margin)))
        .collect();
    let (es, cs): (Vec<f64>, Vec<f64>) = ok.iter().map(|&(e, c, _)| (e, c)).unzip();
    let growth = growth_exponent(&es, &cs).ok();
    let expected = (n.as_f64() - 1.0) / n.as_f64();
    let margins: Vec<f64> = ok.iter().map(|&(_, _, m)| m).collect();
    let csv: Vec<Vec<String>> = cfg
        .bounds
        .epsilons
        .iter()
        .zip(&rows)
        .map(|(&e, r)| {
            let p = r.params;
            let ch = r.check;
            vec![
                num(e),
                p.map_or("nan".into(), |p| num(p.big_r)),
                p.map_or("nan".into(), |p| num(p.c)),
                p.map_or("nan".into(), |p| num(p.big_a)),
                num(r.mean),
                num(r.norm),
                num(r.jump),
                ch.map_or("nan".into(), |c| num(c.functional)),
                ch.map_or("nan".into(), |c| num(c.bound)),
                ch.map_or("nan".into(), |c| num(c.margin)),
            ]
        })
        .collect();
    out.csv(
        "bounds_margin.csv",
        &["epsilon", "R", "c", "A", "mean", "norm", "jump", "functional", "bound", "margin"],
        &csv,
    )?;
    let report = BoundsReport {
        pole,
        pole_source,
        nodes: space.node_count(),
        volume: space.volume(),
        alpha,
        a_p_inline,
        a_p_consumed,
        a_p_source,
        capacity_upper_bound: bound,
        epsilons: cfg.bounds.epsilons.clone(),
        rows,
        growth_exponent: growth,
        expected_growth_exponent: expected,
        growth_within_005: growth.map(|g| (g - expected).abs() <= 0.05),
        margin_trend: trend(&margins),
    };
    out.json("bounds.json", &report)?;
    failure.map_or(Ok(()), Err)
}

#[derive(Serialize)]
struct MassRow {
    radius: f64,
    mass: f64,
    closed_form: Option<f64>,
}

#[derive(Serialize)]
struct BubbleReport {
    n: u32,
    beta_n: f64,
    phi_at_0: f64,
    residual_step: f64,
    residual_range: (f64, f64),
    max_abs_residual: f64,
    mass: Vec<MassRow>,
    total_mass: f64,
}

pub fn bubble(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let n = cfg.dimension()?;
    let out = Output::new("bubble", cfg)?;
    let b = &cfg.bubble;
    let samples = b.samples.max(2);
    let (r0, r1) = b.residual_range;
    let profile: Vec<Vec<String>> = (0..samples)
        .map(|i| {
            let r = r1 * i as f64 / (samples - 1) as f64;
            Ok(vec![num(r), num(bubble_value(n, r)?), num(bubble_density(n, r))])
        })
        .collect::<mtlab::error::Result<_>>()
        .ctx("bubble profile")?;
    out.csv("bubble_profile.csv", &["r", "phi", "density"], &profile)?;
    let residuals: Vec<(f64, f64)> = (0..samples)
        .map(|i| {
            let r = r0 + (r1 - r0) * i as f64 / (samples - 1) as f64;
            Ok((r, bubble_residual(n, r, b.residual_step)?))
        })
        .collect::<mtlab::error::Result<_>>()
        .ctx("bubble residual sweep")?;
    let rows: Vec<Vec<String>> = residuals.iter().map(|(r, v)| vec![num(*r), num(*v)]).collect();
    out.csv("bubble_residual.csv", &["r", "residual"], &rows)?;
    let mass: Vec<MassRow> = b
        .mass_radii
        .iter()
        .map(|&radius| {
            Ok(MassRow {
                radius,
                mass: bubble_mass(n, radius)?,
                closed_form: (n.get() == 2).then(|| 2.0 * (1.0 - 1.0 / (1.0 + 0.5 * std::f64::consts::PI * radius * radius))),
            })
        })
        .collect::<mtlab::error::Result<_>>()
        .ctx("bubble mass")?;
    let rows: Vec<Vec<String>> = mass
        .iter()
        .map(|m| vec![num(m.radius), num(m.mass), m.closed_form.map_or("nan".into(), num)])
        .collect();
    out.csv("bubble_mass.csv", &["R", "mass", "closed_form"], &rows)?;
    let report = BubbleReport {
        n: n.get(),
        beta_n: sharp_constants(n).beta_n,
        phi_at_0: bubble_value(n, 0.0).ctx("bubble value")?,
        residual_step: b.residual_step,
        residual_range: b.residual_range,
        max_abs_residual: residuals.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max),
        mass,
        total_mass: bubble_mass(n, f64::INFINITY).ctx("bubble mass")?,
    };
    out.json("bubble.json", &report)
}

#[derive(Serialize)]
struct CapacityCase {
    spec: CapacitySpec,
    n: u32,
    energy: f64,
}

#[derive(Serialize)]
struct AnnulusRow {
    h: f64,
    nodes: usize,
    discrete: f64,
    formula: f64,
    radial_oracle: f64,
    relative_error: f64,
}

#[derive(Serialize)]
struct LocalBand {
    pole: Point,
    delta: f64,
    spec: CapacitySpec,
    discrete: f64,
    formula: f64,
    relative_error: f64,
}

#[derive(Serialize)]
struct CapacityReport {
    cases: Vec<CapacityCase>,
    annulus: Vec<AnnulusRow>,
    error_ratios: Vec<f64>,
    local: LocalBand,
}

pub fn capacity(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let n = cfg.dimension()?;
    let out = Output::new("capacity", cfg)?;
    let cases = [
        (CapacitySpec { c1: 0.0, c2: 1.0, a: 0.5, b: 0.5 }, 2),
        (CapacitySpec { c1: 0.0, c2: 1.0, a: 0.0, b: 1.0 }, 2),
        (CapacitySpec { c1: 0.0, c2: 4.0, a: 0.0, b: 2.0 }, 3),
    ]
    .into_iter()
    .map(|(spec, dim)| {
        let energy = capacity_minimizer_energy(spec, Dimension::new(dim)?)?;
        Ok(CapacityCase { spec, n: dim, energy })
    })
    .collect::<mtlab::error::Result<Vec<_>>>()
    .ctx("capacity formula cases")?;

    let c = &cfg.capacity;
    let two_pi = 2.0 * std::f64::consts::PI;
    let spec = CapacitySpec {
        c1: -c.outer.ln() / two_pi,
        c2: -c.inner.ln() / two_pi,
        a: 0.0,
        b: 1.0,
    };
    let radial = two_pi / (c.outer / c.inner).ln();
    let mut annulus = Vec::new();
    for &h in &c.ladder {
        let mesh = mtlab::mesh::build_annulus(c.inner, c.outer, h).ctx(format!("annulus mesh at h = {h}"))?;
        let space = FemSpace::new(mesh);
        let pot = space.interpolate(|x| -x[0].hypot(x[1]).ln() / two_pi);
        let (discrete, formula) = discrete_capacity_check(&space, &pot, spec, n).ctx("annulus capacity")?;
        annulus.push(AnnulusRow {
            h,
            nodes: space.node_count(),
            discrete,
            formula,
            radial_oracle: radial,
            relative_error: (discrete - radial).abs() / radial,
        });
    }
    let error_ratios = annulus.windows(2).map(|w| w[1].relative_error / w[0].relative_error).collect();

    // band of the local potential between r = δ and r = δ/4 around the pole
    let space = FemSpace::new(build_mesh(cfg, cfg.domain.h())?);
    let (pole, _) = resolve_pole(cfg, &out, space.mesh())?;
    let delta = c.local_delta;
    let local = solve_local_green(&space, pole, delta, n, cfg.solver.green_tol).ctx("local green solve")?;
    let coef = n.as_f64() / sharp_constants(n).beta_n;
    let band = CapacitySpec {
        c1: -coef * delta.ln(),
        c2: -coef * (0.25 * delta).ln(),
        a: 0.0,
        b: 1.0,
    };
    let (discrete, formula) = discrete_capacity_check(&space, &local, band, n).ctx("local capacity")?;

    let rows: Vec<Vec<String>> = annulus
        .iter()
        .map(|r| vec![num(r.h), r.nodes.to_string(), num(r.discrete), num(r.formula), num(r.radial_oracle), num(r.relative_error)])
        .collect();
    out.csv("capacity_ladder.csv", &["h", "nodes", "discrete", "formula", "radial_oracle", "relative_error"], &rows)?;
    let report = CapacityReport {
        cases,
        annulus,
        error_ratios,
        local: LocalBand {
            pole: space.mesh().node(space.mesh().nearest_boundary_node(pole)),
            delta,
            spec: band,
            discrete,
            formula,
            relative_error: (discrete - formula).abs() / formula,
        },
    };
    out.json("capacity.json", &report)
}
