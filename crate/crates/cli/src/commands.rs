use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};

use anyhow::{bail, Context, Result};
use catvis::phase_space::{self, marginal_a, marginal_b, output_terms, post_selected_terms};
use catvis::{
    contrast_report, environment_overlap_oracle, extract_visibility, fock_brute_force_visibility, fringe_scan, q_full,
    sweep, visibility_analytic, BranchTerm64, CoherentLabel64, Complex64, ExperimentParams64, GridSpec64, QGrid64,
    Sign, SweepRanges,
};
use log::{info, warn};

use crate::args::{
    angle, FringeArgs, GridArgs, Marginal, PhysicsArgs, QfunctionArgs, Stage, StateKind, SweepArgs, VisibilityArgs,
};
use crate::report::{Cell, Report};

/// Largest full four-dimensional grid `qfunction` will write.
pub const MAX_FULL_GRID_ROWS: usize = 10_000_000;

/// Exit status of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// Output was written but some rows carry errors.
    RowErrors,
}

fn params_from(
    physics: &PhysicsArgs,
    cutoffs: (Option<usize>, Option<usize>),
    grid: GridSpec64,
) -> Result<ExperimentParams64> {
    let deg = physics.degrees;
    for (name, x) in [
        ("R", physics.reflectivity),
        ("alpha0", physics.alpha0),
        ("alpha0-phase", physics.alpha0_phase),
        ("phi", physics.phi),
        ("theta", physics.theta),
    ] {
        if !x.is_finite() {
            bail!("--{name} must be finite, got {x}");
        }
    }
    if physics.alpha0 < 0.0 {
        bail!("--alpha0 is a modulus and must be non-negative, got {}", physics.alpha0);
    }
    let alpha0 = Complex64::from_polar(physics.alpha0, angle(physics.alpha0_phase, deg));
    let params = ExperimentParams64::new(alpha0, angle(physics.phi, deg), physics.reflectivity)?
        .with_theta(angle(physics.theta, deg))
        .with_cutoffs(cutoffs.0, cutoffs.1)
        .with_grid(grid);
    Ok(params)
}

fn grid_spec(grid: &GridArgs, default_half_width: f64) -> Result<GridSpec64> {
    let spec = GridSpec64 { half_width: grid.half_width.unwrap_or(default_half_width), spacing: grid.spacing };
    spec.validate()?;
    Ok(spec)
}

fn echo_params(report: &mut Report, p: &ExperimentParams64) {
    report.param("R", p.reflectivity());
    report.param("abs_alpha0", p.alpha0().norm());
    report.param("alpha0_phase", p.alpha0().arg());
    report.param("phi", p.phi());
    report.param("theta", p.theta());
}

fn echo_grid(report: &mut Report, grid: &GridSpec64) {
    report.param("half_width", grid.half_width);
    report.param("spacing", grid.spacing);
}

pub fn visibility(args: &VisibilityArgs) -> Result<(Report, Outcome)> {
    let grid = grid_spec(&args.numeric.grid, GridSpec64::default().half_width)?;
    let p = params_from(&args.physics, (args.numeric.cutoff_a, args.numeric.cutoff_b), grid)?;

    let mut columns = vec!["R", "abs_alpha0", "alpha0_phase", "phi", "nu_analytic", "nu_oracle"];
    if args.brute_force {
        columns.push("nu_brute");
    }
    if args.q_integral {
        columns.push("nu_integral");
    }
    columns.extend(["T", "mean_ratio", "var_in", "var_out", "noise_var"]);
    let mut report = Report::new("visibility", &columns);
    echo_params(&mut report, &p);

    let contrast = contrast_report(&p);
    let mut row: Vec<Cell> = vec![
        p.reflectivity().into(),
        p.alpha0().norm().into(),
        p.alpha0().arg().into(),
        p.phi().into(),
        visibility_analytic(&p).into(),
        environment_overlap_oracle(&p).into(),
    ];
    if args.brute_force {
        report.param("cutoff_a", p.cutoff_a());
        report.param("cutoff_b", p.cutoff_b());
        let nu = fock_brute_force_visibility(&p).context("Fock brute force failed")?;
        row.push(nu.into());
    }
    if args.q_integral {
        echo_grid(&mut report, &grid);
        let (nu, integral) = phase_space::visibility_from_integral(&p)?;
        report.diag("integral_edge_ratio", integral.edge_ratio);
        row.push(nu.into());
    }
    row.extend([
        contrast.transmissivity.into(),
        contrast.mean_ratio.into(),
        contrast.var_in.into(),
        contrast.var_out.into(),
        contrast.noise_var.into(),
    ]);
    report.push(row);
    report.diag("component_overlap", phase_space::component_overlap(&p));
    Ok((report, Outcome::Ok))
}

fn state_terms(args: &QfunctionArgs, p: &ExperimentParams64) -> Vec<BranchTerm64> {
    let one = Complex64::new(1.0, 0.0);
    let vac = CoherentLabel64::vacuum();
    let single =
        |a: CoherentLabel64| BranchTerm64 { weight: one, ket: [a, vac], bra: [a, vac], tag: (Sign::Plus, Sign::Plus) };
    let bs = p.beam_splitter();
    match args.state {
        StateKind::Vacuum => vec![single(vac)],
        StateKind::Coherent => {
            let t = single(CoherentLabel64::new(p.alpha0()));
            match args.stage {
                Stage::Input => vec![t],
                Stage::Output => vec![t.after_beam_splitter(&bs)],
                Stage::PostSelected => vec![t.after_beam_splitter(&bs).post_selected(p.theta(), p.phi())],
            }
        }
        StateKind::Cat => match args.stage {
            Stage::Input => BranchTerm64::cat_terms(p).to_vec(),
            Stage::Output => output_terms(p).to_vec(),
            Stage::PostSelected => post_selected_terms(p).to_vec(),
        },
    }
}

pub fn qfunction(args: &QfunctionArgs) -> Result<(Report, Outcome)> {
    let grid_spec = grid_spec(&args.numeric.grid, args.physics.alpha0 + 6.0)?;
    let p = params_from(&args.physics, (None, None), grid_spec)?;
    let mut terms = state_terms(args, &p);

    // Post-selected terms carry the detection rate; rescale to a distribution.
    let rate: f64 = terms.iter().map(|t| t.trace().re).sum();
    if rate.is_nan() || rate <= 0.0 {
        bail!("state has zero weight at this stage (rate {rate:e})");
    }
    for t in &mut terms {
        t.weight /= rate;
    }

    let origin = Complex64::new(0.0, 0.0);
    let grid = QGrid64::new(grid_spec.half_width, grid_spec.spacing, origin, origin)?;
    let n = grid.cells_per_axis();
    let neg_tol = p.tolerances().negativity;

    let columns: &[&str] = match args.marginal {
        Marginal::None => &["re_alpha_p", "im_alpha_p", "re_beta_p", "im_beta_p", "q"],
        Marginal::A => &["re_alpha_p", "im_alpha_p", "q"],
        Marginal::B => &["re_beta_p", "im_beta_p", "q"],
    };
    let mut report = Report::new("qfunction", columns);
    report.param(
        "state",
        match args.state {
            StateKind::Vacuum => "vacuum",
            StateKind::Coherent => "coherent",
            StateKind::Cat => "cat",
        },
    );
    report.param(
        "stage",
        match args.stage {
            Stage::Input => "input",
            Stage::Output => "output",
            Stage::PostSelected => "post-selected",
        },
    );
    echo_params(&mut report, &p);
    echo_grid(&mut report, &grid_spec);
    report.param("cells_per_axis", n);
    if args.stage == Stage::PostSelected {
        report.param("post_selected_rate", rate);
    }

    let mut min_q = f64::INFINITY;
    let mut sum = 0.0;
    match args.marginal {
        Marginal::None => {
            let rows = n.checked_pow(4).unwrap_or(usize::MAX);
            if rows > MAX_FULL_GRID_ROWS {
                bail!(
                    "full grid has {rows} points (limit {MAX_FULL_GRID_ROWS}); increase --spacing, \
                     reduce --half-width or request a marginal"
                );
            }
            let nodes = grid.nodes(0);
            for &b in &nodes {
                for &a in &nodes {
                    let q = q_full(&terms, CoherentLabel64::new(a), CoherentLabel64::new(b), neg_tol)?;
                    min_q = min_q.min(q);
                    sum += q;
                    report.push(vec![a.re.into(), a.im.into(), b.re.into(), b.im.into(), q.into()]);
                }
            }
            sum *= grid.cell_area() * grid.cell_area();
        }
        Marginal::A | Marginal::B => {
            let values =
                if args.marginal == Marginal::A { marginal_a(&terms, &grid) } else { marginal_b(&terms, &grid) };
            for (node, q) in values {
                if q.im.abs() > 1e-10 * q.norm().max(f64::MIN_POSITIVE) + 1e-15 {
                    warn!("marginal has imaginary part {:e} at {node}", q.im);
                }
                min_q = min_q.min(q.re);
                sum += q.re;
                report.push(vec![node.re.into(), node.im.into(), q.re.into()]);
            }
            sum *= grid.cell_area();
            if min_q < -neg_tol {
                bail!("marginal is negative ({min_q:e}) beyond tolerance {neg_tol:e}");
            }
        }
    }
    report.param("normalization_integral", sum);
    report.param("min_q", min_q);
    if (sum - 1.0).abs() > 1e-4 {
        warn!("normalization integral {sum} differs from 1; the grid may not cover the state");
    }
    info!("qfunction: {} rows, integral {sum}", report.rows.len());
    Ok((report, Outcome::Ok))
}

pub fn fringe(args: &FringeArgs) -> Result<(Report, Outcome)> {
    let grid = grid_spec(&args.numeric.grid, GridSpec64::default().half_width)?;
    let p = params_from(&args.physics, (args.numeric.cutoff_a, args.numeric.cutoff_b), grid)?;
    let scan = fringe_scan(&p, args.n_theta)?;
    let fit = extract_visibility(&scan)?;

    let mut report = Report::new("fringe", &["theta", "rate"]);
    echo_params(&mut report, &p);
    echo_grid(&mut report, &grid);
    report.param("n_theta", args.n_theta);
    for (&theta, &rate) in scan.thetas.iter().zip(&scan.rates) {
        report.push(vec![theta.into(), rate.into()]);
    }
    report.diag("offset", fit.offset);
    report.diag("amplitude", fit.amplitude);
    report.diag("delta", fit.delta);
    report.diag("nu", fit.visibility);
    report.diag("raw_nu", fit.raw_visibility);
    report.diag("period", fit.period);
    report.diag("max_residual", fit.max_residual);
    report.diag("nu_analytic", visibility_analytic(&p));
    Ok((report, Outcome::Ok))
}

pub fn sweep_cmd(args: &SweepArgs) -> Result<(Report, Outcome)> {
    let deg = args.degrees;
    let phi = match &args.phi_values {
        Some(v) => v.iter().map(|&x| angle(x, deg)).collect(),
        None => vec![FRAC_PI_6, FRAC_PI_4, FRAC_PI_2],
    };
    for (name, v) in [("R", &args.r_values), ("alpha0", &args.alpha0_values), ("phi", &phi)] {
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            bail!("--{name}-values must be finite, got {x}");
        }
    }
    let mut ranges = SweepRanges::new(args.r_values.clone(), args.alpha0_values.clone(), phi);
    ranges.alpha0_phase = angle(args.alpha0_phase, deg);
    ranges.brute_force = args.brute_force;
    ranges.fringe = args.fringe;
    ranges.n_theta = args.n_theta;
    ranges.grid = grid_spec(&args.grid, GridSpec64::default().half_width)?;

    let mut columns = vec!["R", "abs_alpha0", "phi", "nu_analytic", "nu_oracle"];
    if args.brute_force {
        columns.push("nu_brute");
    }
    if args.fringe {
        columns.push("nu_fringe");
    }
    columns.extend(["T", "mean_ratio", "var_out", "error"]);
    let mut report = Report::new("sweep", &columns);
    report.param("alpha0_phase", ranges.alpha0_phase);
    if args.fringe {
        echo_grid(&mut report, &ranges.grid);
        report.param("n_theta", args.n_theta);
    }

    let rows = sweep(&ranges)?;
    let mut failures = 0;
    for r in rows {
        let mut row: Vec<Cell> =
            vec![r.reflectivity.into(), r.abs_alpha0.into(), r.phi.into(), r.nu_analytic.into(), r.nu_oracle.into()];
        if args.brute_force {
            row.push(r.nu_brute.into());
        }
        if args.fringe {
            row.push(r.nu_fringe.into());
        }
        row.extend([r.transmissivity.into(), r.mean_ratio.into(), r.var_out.into()]);
        if let Some(e) = &r.error {
            failures += 1;
            warn!("row R={} |alpha0|={} phi={}: {e}", r.reflectivity, r.abs_alpha0, r.phi);
        }
        row.push(r.error.into());
        report.push(row);
    }
    report.diag("rows", report.rows.len());
    report.diag("failed_rows", failures as usize);
    let outcome = if failures == 0 { Outcome::Ok } else { Outcome::RowErrors };
    Ok((report, outcome))
}
