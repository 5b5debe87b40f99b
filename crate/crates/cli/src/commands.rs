use std::io::Write;
use std::path::{Path, PathBuf};

use fragkit_core::admissibility::{check, CheckOptions, Verdict};
use fragkit_core::kernels::classify_mass;
use fragkit_core::simulator::{discretize, simulate, Grid, InitialCondition, Scheme};
use fragkit_core::weight_builder::{construct_weight, exp_weight_search, BuildOptions};
use fragkit_core::weights::{compare_weights, Weight};
use fragkit_core::BuildError;

use crate::config::{geometric, Config};
use crate::error::CliError;

/// Everything a command needs besides the config.
pub struct Context {
    pub config: Config,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub seed: u64,
    pub asserts: Vec<String>,
}

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_out(dir: &Path, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(name))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().map(num))?;
    }
    w.flush()?;
    Ok(())
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Inconclusive => 3,
    }
}

pub fn kernel_info(ctx: &Context, out: &mut dyn Write) -> Result<i32, CliError> {
    let c = &ctx.config;
    let kernel = c.kernel()?;
    let spec = c.quadrature(None)?;
    let ys = c.samples("mass", (1e-2, 1e2, 41))?;
    let tol = ctx.tol.unwrap_or(1e-8);
    let report = classify_mass(&kernel, &ys, tol, &spec)?;
    writeln!(out, "family = {}", kernel.family())?;
    writeln!(out, "classification = {}", report.classification)?;
    writeln!(out, "max_excess = {}", num(report.max_excess))?;
    writeln!(out, "tol = {}", num(tol))?;
    writeln!(out, "failed_samples = {}", report.failed_samples())?;
    writeln!(out, "y, m_over_y")?;
    for s in &report.samples {
        match s.mass {
            Some(m) => writeln!(out, "{}, {}", num(s.y), num(m / s.y))?,
            None => writeln!(out, "{}, failed: {}", num(s.y), s.failure.as_deref().unwrap_or("unknown"))?,
        }
    }
    if let Some(dir) = &ctx.out {
        let rows = report.samples.iter().map(|s| {
            let m = s.mass.unwrap_or(f64::NAN);
            vec![s.y, m, m / s.y]
        });
        csv_out(dir, "mass.csv", &["y", "mass", "m_over_y"], rows)?;
    }
    Ok(0)
}

fn check_options(c: &Config, spec: fragkit_core::QuadratureSpec) -> Result<CheckOptions<f64>, CliError> {
    let eta0 = c.f64_or("check", "eta0", 1.0)?;
    let mut opts = CheckOptions::new(eta0);
    opts.y_max = c.f64_or("check", "y_max", opts.y_max)?;
    opts.per_decade = c.usize_or("check", "per_decade", opts.per_decade)?;
    opts.kappa1_decades = c.f64_or("check", "kappa1_decades", opts.kappa1_decades)?;
    opts.margin = c.f64_or("check", "margin", opts.margin)?;
    opts.spec = spec;
    opts.validate()?;
    Ok(opts)
}

fn required_weight(c: &Config, section: &str) -> Result<Weight<f64>, CliError> {
    c.weight(section)?.ok_or_else(|| CliError::Invalid(format!("missing [{section}] section")))
}

pub fn check_weight(ctx: &Context, out: &mut dyn Write) -> Result<i32, CliError> {
    let c = &ctx.config;
    let kernel = c.kernel()?;
    let rate = c.rate()?;
    let weight = required_weight(c, "weight")?;
    let opts = check_options(c, c.quadrature(ctx.tol)?)?;
    let report = check(&kernel, &weight, &opts)?;
    let text = format!(
        "{report}alpha_hat = {}\nbeta_hat = {}\n",
        num(report.kappa2_hat),
        num(report.kappa1_hat * rate.envelope(opts.eta0))
    );
    out.write_all(text.as_bytes())?;
    if let Some(dir) = &ctx.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.txt"), &text)?;
        let rows = report.samples.iter().map(|s| vec![s.y, s.log_n_omega, s.log_omega, s.ratio]);
        csv_out(dir, "ratio_curve.csv", &["y", "log_n_omega", "log_omega", "ratio"], rows)?;
    }
    Ok(verdict_code(report.verdict_a41))
}

pub fn build_weight(ctx: &Context, out: &mut dyn Write) -> Result<i32, CliError> {
    let c = &ctx.config;
    let kernel = c.kernel()?;
    let omega0 = c.weight("weight")?.map_or_else(|| Weight::power(1.0), Ok)?;
    let eta0 = c.f64_or("build", "eta0", 1.0)?;
    let kappa = c.f64_or("build", "kappa", 1.0)?;
    let y_max = c.f64_or("build", "y_max", 50.0)?;
    let d = BuildOptions::<f64>::default();
    let opts = BuildOptions {
        h_samples_per_unit: c.usize_or("build", "h_samples_per_unit", d.h_samples_per_unit)?,
        b_samples_per_side: c.usize_or("build", "b_samples_per_side", d.b_samples_per_side)?,
        epsilon: c.f64_or("build", "epsilon", d.epsilon)?,
        step: c.f64_or("build", "step", d.step)?,
        residual_tol: c.f64_or("build", "residual_tol", d.residual_tol)?,
        certificate_points: c.usize_or("build", "certificate_points", d.certificate_points)?,
        certificate_tol: ctx.tol.unwrap_or(d.certificate_tol),
        validation_samples: c.usize_or("build", "validation_samples", d.validation_samples)?,
        seed: ctx.seed,
        spec: c.quadrature(None)?,
    };
    let built = match construct_weight(&kernel, &omega0, eta0, kappa, y_max, &opts) {
        Ok(b) => b,
        Err(e @ BuildError::CertificateViolation { .. }) => {
            writeln!(out, "certificate = fail")?;
            writeln!(out, "error = {e}")?;
            return Ok(1);
        }
        Err(e) => return Err(e.into()),
    };
    writeln!(out, "certificate = pass")?;
    writeln!(out, "eta0 = {}", num(eta0))?;
    writeln!(out, "kappa = {}", num(kappa))?;
    writeln!(out, "y_max = {}", num(y_max))?;
    writeln!(out, "step = {}", num(built.volterra.step))?;
    writeln!(out, "nodes = {}", built.volterra.nodes.len())?;
    writeln!(out, "residual_max = {}", num(built.volterra.residual_max))?;
    writeln!(out, "worst_margin = {}", num(built.worst_margin()))?;
    writeln!(out, "log_omega_at_y_max = {}", num(built.weight.log_eval(y_max)?))?;
    if let Some(dir) = &ctx.out {
        // Samples of ω₀ below η₀ followed by the Volterra nodes.
        let mut rows = Vec::new();
        if eta0 > 0.0 {
            for k in 1..64 {
                let x = eta0 * k as f64 / 64.0;
                if let Ok(l) = built.weight.log_eval(x) {
                    rows.push(vec![x, l]);
                }
            }
        }
        for (x, v) in built.volterra.nodes.iter().zip(&built.volterra.values) {
            rows.push(vec![*x, v.ln()]);
        }
        csv_out(dir, "weight.csv", &["x", "log_omega"], rows)?;
        let cert = built.certificate.iter().map(|r| vec![r.y, r.lhs, r.rhs, r.margin]);
        csv_out(dir, "certificate.csv", &["y", "lhs", "rhs", "margin"], cert)?;
    }
    Ok(0)
}

pub fn find_exp_weight(ctx: &Context, out: &mut dyn Write) -> Result<i32, CliError> {
    let c = &ctx.config;
    let (d1, d2) = (c.f64_req("search", "delta1")?, c.f64_req("search", "delta2")?);
    let (d, b_m) = (c.f64_req("search", "d")?, c.f64_req("search", "b_m")?);
    let params = match exp_weight_search(d1, d2, d, b_m) {
        Ok(p) => p,
        Err(e @ BuildError::SearchOverflow(_)) => {
            writeln!(out, "result = none")?;
            writeln!(out, "diagnostic = {e}")?;
            return Ok(1);
        }
        Err(e) => return Err(e.into()),
    };
    let ch = params.checks;
    let mut text = format!(
        "result = found\nc = {}\ndelta = {}\nbound = {}\ndelta_within_bound = {}\ndelta_bm_below_half = {}\nc_above_d = {}\nlog_c_above_inverse_delta1 = {}\nc_pow_below_half = {}\nsum_below_one = {}\n",
        num(params.c),
        num(params.delta),
        num(params.bound),
        ch.delta_within_bound,
        ch.delta_bm_below_half,
        ch.c_above_d,
        ch.log_c_above_inverse_delta1,
        ch.c_pow_below_half,
        ch.sum_below_one
    );
    if c.has_section("kernel") {
        let kernel = c.kernel()?;
        let weight = Weight::exponential(params.c)?;
        let report = check(&kernel, &weight, &check_options(c, c.quadrature(ctx.tol)?)?)?;
        text.push_str(&format!("tail_estimate = {}\nverdict_limsup = {}\n", num(report.tail_estimate), report.verdict_limsup));
    }
    out.write_all(text.as_bytes())?;
    if let Some(dir) = &ctx.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("exp_weight.txt"), &text)?;
    }
    Ok(0)
}

pub fn simulate_cmd(ctx: &Context, out: &mut dyn Write) -> Result<i32, CliError> {
    let c = &ctx.config;
    for a in &ctx.asserts {
        if !matches!(a.as_str(), "positivity" | "mass" | "substochastic") {
            return Err(CliError::Invalid(format!("unknown assertion `{a}` (expected positivity, mass, substochastic)")));
        }
    }
    let kernel = c.kernel()?;
    let rate = c.rate()?;
    let weight = c.weight("weight")?.map_or_else(|| Weight::power(1.0), Ok)?;
    let s = "simulate";
    let grid = Grid::geometric(c.f64_or(s, "x_min", 1e-4)?, c.f64_or(s, "x_max", 20.0)?, c.usize_or(s, "n", 512)?)?;
    let scheme: Scheme = c.get(s, "scheme").unwrap_or("implicit_euler").parse().map_err(CliError::Invalid)?;
    let initial = match c.get(s, "initial").unwrap_or("bump") {
        "bump" => InitialCondition::Bump { lo: c.f64_or(s, "lo", 1.0)?, hi: c.f64_or(s, "hi", 10.0)? },
        "exp_decay" => InitialCondition::ExpDecay { scale: c.f64_or(s, "scale", 1.0)? },
        "table" => InitialCondition::Table(c.initial_pairs()?),
        other => return Err(CliError::Invalid(format!("unknown initial condition `{other}`"))),
    };
    let u0 = initial.sample(&grid)?;
    let gen = discretize(&kernel, &rate, &grid, &c.quadrature(None)?)?;
    let traj = simulate(
        &u0,
        &gen,
        c.f64_or(s, "t_end", 1.0)?,
        c.f64_or(s, "dt", 1e-3)?,
        scheme,
        &weight,
        c.usize_or(s, "sample_every", 10)?,
    )?;

    let mass_tol = ctx.tol.unwrap_or(1e-3);
    let worst_column = gen.column_mass_defect().into_iter().flatten().fold(0.0, f64::max);
    writeln!(out, "steps = {}", traj.steps)?;
    writeln!(out, "dt = {}", num(traj.dt))?;
    writeln!(out, "min_density_ratio = {}", num(traj.min_density_ratio))?;
    writeln!(out, "max_norm_increase = {}", num(traj.max_norm_increase))?;
    writeln!(out, "max_mass_defect = {}", num(traj.max_mass_defect()))?;
    writeln!(out, "column_mass_defect = {}", num(worst_column))?;
    let mut failed = false;
    for a in &ctx.asserts {
        let ok = match a.as_str() {
            "positivity" => traj.min_density_ratio >= -1e-14 && traj.dust_monotone,
            "mass" => traj.max_mass_defect() <= mass_tol,
            _ => traj.max_norm_increase <= 1e-10,
        };
        writeln!(out, "assert_{a} = {}", if ok { "pass" } else { "fail" })?;
        failed |= !ok;
    }
    if let Some(dir) = &ctx.out {
        let rows = traj.samples.iter().map(|p| vec![p.t, p.m0, p.m1, p.norm_omega, p.dust_mass]);
        csv_out(dir, "trajectory.csv", &["t", "M0", "M1", "norm_omega", "dust_mass"], rows)?;
    }
    Ok(if failed { 1 } else { 0 })
}

pub fn compare(ctx: &Context, out: &mut dyn Write) -> Result<i32, CliError> {
    let c = &ctx.config;
    let kernel = c.kernel()?;
    let first = required_weight(c, "weight")?;
    let second = required_weight(c, "weight2")?;
    let xs = geometric(
        c.f64_or("compare", "x_min", 1e-2)?,
        c.f64_or("compare", "x_max", 1e2)?,
        c.usize_or("compare", "x_points", 201)?,
        "compare",
    )?;
    let ys = c.samples("compare", (1e-1, 1e2, 31))?;
    let v = compare_weights(&first, &second, &kernel, &xs, &ys, &c.quadrature(ctx.tol)?)?;
    writeln!(out, "hypothesis_holds = {}", v.hypothesis_holds)?;
    writeln!(out, "pointwise_inequality_holds = {}", v.pointwise_inequality_holds)?;
    match v.first_hypothesis_failure {
        Some(x) => writeln!(out, "first_hypothesis_failure = {}", num(x))?,
        None => writeln!(out, "first_hypothesis_failure = none")?,
    }
    writeln!(out, "one_sided_derivative = {}", v.one_sided_derivative)?;
    writeln!(out, "y, ratio_first, ratio_second")?;
    for p in &v.pairs {
        writeln!(out, "{}, {}, {}", num(p.y), num(p.ratio_first), num(p.ratio_second))?;
    }
    if let Some(dir) = &ctx.out {
        let rows = v.pairs.iter().map(|p| vec![p.y, p.ratio_first, p.ratio_second]);
        csv_out(dir, "comparison.csv", &["y", "ratio_first", "ratio_second"], rows)?;
    }
    Ok(0)
}
