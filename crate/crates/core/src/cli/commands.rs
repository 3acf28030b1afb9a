use rayon::prelude::*;

use super::config::{ComposeMethod, RunConfig};
use super::output::{tagged_path, Context};
use super::{Cell, CliError, Table};
use crate::bounds::{
    ab_constants, delta_star_fixed_gaussian, delta_star_fixed_laplace, fixed_scale, online_delta_bracket,
    online_delta_path, online_scale, per_index_delta, randomly_stopped_delta, shuffled_delta, shuffled_delta_fixed_noise,
    NoiseKind, NoiseModel, PrivacyBudget, ScheduleMode,
};
use crate::composition::{best_rdp_order, compose_epochs, Method, Trace, ALPHA_GRID};
use crate::simulator::{compare_variants, generate_synthetic, project_ball, Dataset, PnsgdConfig, SyntheticProblem, Variant};
use crate::special::LossProfile;

fn emit(table: &Table, ctx: &Context, notes: &[String]) -> Result<(), CliError> {
    ctx.emit(&table.render(ctx.format)?, ctx.out, notes)
}

/// Noise for a single dataset size: the explicit scale, else the fixed schedule at `n`.
fn noise_at(config: &RunConfig, n: u64) -> Result<NoiseModel, CliError> {
    if let Some(noise) = config.noise_scale()? {
        return Ok(noise);
    }
    let kind = config.kind()?;
    let sched = config.schedule().map_err(|_| CliError::config("noise.scale", "missing and no fixed schedule given"))?;
    if sched.mode != ScheduleMode::Fixed {
        return Err(CliError::config("noise.scale", "missing; online schedules have no single scale"));
    }
    let scale = fixed_scale(n, &sched, &config.profile()?, &config.geometry()?, kind)?;
    Ok(NoiseModel::new(kind, scale)?)
}

pub fn account_table(config: &RunConfig) -> Result<Table, CliError> {
    let epsilon = config.epsilon()?;
    let n = config.n()?;
    let i = config.index()?;
    if i > n {
        return Err(CliError::config("index", format!("must lie in 1..={n}, got {i}")));
    }
    let profile = config.profile()?;
    let geom = config.geometry()?;
    let noise = noise_at(config, n)?;
    let consts = ab_constants(&noise, &profile, &geom, epsilon)?;

    let mut t = Table::new(vec!["mode", "n", "index", "epsilon", "delta", "A", "B", "scale"]);
    let rows: [(&str, Option<u64>, f64); 3] = [
        ("per_index", Some(i), per_index_delta(&consts, n, i)?),
        ("randomly_stopped", Some(i), randomly_stopped_delta(&consts, n, i)?),
        ("shuffled", None, shuffled_delta(&consts, n)?),
    ];
    for (mode, index, delta) in rows {
        t.push(vec![
            mode.into(),
            n.into(),
            index.into(),
            epsilon.into(),
            delta.into(),
            consts.a.into(),
            consts.b.into(),
            noise.scale.into(),
        ]);
    }
    Ok(t)
}

pub fn account(config: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    emit(&account_table(config)?, ctx, &[])
}

/// The `n` values a command works over: the grid if present, else `n`.
fn points(config: &RunConfig) -> Result<Vec<u64>, CliError> {
    if config.grid.is_some() {
        config.grid()
    } else {
        Ok(vec![config.n()?])
    }
}

fn delta_star(kind: NoiseKind, epsilon: f64, c1: f64) -> crate::Result<f64> {
    match kind {
        NoiseKind::Laplace => delta_star_fixed_laplace(epsilon, c1),
        NoiseKind::Gaussian => delta_star_fixed_gaussian(epsilon, c1),
    }
}

pub fn calibrate_table(config: &RunConfig) -> Result<Table, CliError> {
    let epsilon = config.epsilon()?;
    let kind = config.kind()?;
    let profile = config.profile()?;
    let geom = config.geometry()?;
    let sched = config.schedule()?;
    let ns = points(config)?;
    let mut t = Table::new(vec!["n", "scale", "delta", "delta_star", "limit_lower", "limit_upper"]);
    match sched.mode {
        ScheduleMode::Fixed => {
            let star = delta_star(kind, epsilon, sched.c1)?;
            let rows: Vec<(f64, f64)> = ns
                .par_iter()
                .map(|&n| {
                    Ok((
                        fixed_scale(n, &sched, &profile, &geom, kind)?,
                        shuffled_delta_fixed_noise(n, epsilon, &sched, &profile, &geom, kind)?,
                    ))
                })
                .collect::<crate::Result<_>>()?;
            for (&n, (scale, delta)) in ns.iter().zip(rows) {
                t.push(vec![n.into(), scale.into(), delta.into(), star.into(), Cell::Empty, Cell::Empty]);
            }
        }
        ScheduleMode::Online { .. } => {
            let i = config.index()?;
            let bracket = online_delta_bracket(i, epsilon, &sched, &profile, &geom, kind)?;
            let tracked: Vec<u64> = ns.iter().copied().filter(|&n| n >= i).collect();
            let mut deltas = online_delta_path(&tracked, i, epsilon, &sched, &profile, &geom, kind)?.into_iter();
            for &n in &ns {
                let delta = if n >= i { deltas.next() } else { None };
                t.push(vec![
                    n.into(),
                    online_scale(n, &sched, &profile, &geom, kind)?.into(),
                    delta.into(),
                    Cell::Empty,
                    bracket.lower.into(),
                    bracket.upper.into(),
                ]);
            }
        }
    }
    Ok(t)
}

pub fn calibrate(config: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    emit(&calibrate_table(config)?, ctx, &[])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    LaplaceFixed,
    GaussianFixed,
    LaplaceOnline,
    GaussianOnline,
}

impl Figure {
    fn parse(id: &str) -> Result<Figure, CliError> {
        match id {
            "laplace-fixed" => Ok(Figure::LaplaceFixed),
            "gaussian-fixed" => Ok(Figure::GaussianFixed),
            "laplace-online" => Ok(Figure::LaplaceOnline),
            "gaussian-online" => Ok(Figure::GaussianOnline),
            other => Err(CliError::config(
                "figure",
                format!("unknown figure `{other}`; expected laplace-fixed, gaussian-fixed, laplace-online or gaussian-online"),
            )),
        }
    }

    fn kind(self) -> NoiseKind {
        match self {
            Figure::LaplaceFixed | Figure::LaplaceOnline => NoiseKind::Laplace,
            Figure::GaussianFixed | Figure::GaussianOnline => NoiseKind::Gaussian,
        }
    }

    fn online(self) -> bool {
        matches!(self, Figure::LaplaceOnline | Figure::GaussianOnline)
    }
}

const SWEEP_COLUMNS: [&str; 9] = ["eta", "n", "scale", "delta", "delta_star", "rate", "limit_lower", "limit_upper", "gap_to_upper"];

/// One table per learning rate.
pub fn sweep_tables(config: &RunConfig) -> Result<Vec<(f64, Table)>, CliError> {
    let figure = Figure::parse(config.figure.as_deref().ok_or_else(|| CliError::config("figure", "missing"))?)?;
    let kind = figure.kind();
    if let Some(noise) = &config.noise {
        if noise.kind != kind {
            return Err(CliError::config("noise.kind", format!("figure needs {} noise", kind.as_str())));
        }
    }
    let epsilon = config.epsilon()?;
    let geom = config.geometry_for(kind)?;
    let sched = config.schedule()?;
    if figure.online() != matches!(sched.mode, ScheduleMode::Online { .. }) {
        let need = if figure.online() { "an online schedule (set alpha)" } else { "a fixed schedule (no alpha)" };
        return Err(CliError::config("schedule", format!("figure needs {need}")));
    }
    let ns = config.grid()?;
    let base = config.profile()?;

    let mut out = Vec::new();
    for eta in config.etas()? {
        let profile = LossProfile::new(base.lipschitz, base.smoothness, base.strong_convexity, eta)
            .map_err(|e| CliError::config("eta_values", e))?;
        let mut t = Table::new(SWEEP_COLUMNS.to_vec());
        if figure.online() {
            let i = config.index()?;
            if ns[0] < i {
                return Err(CliError::config("grid", format!("points must be >= index {i}")));
            }
            let bracket = online_delta_bracket(i, epsilon, &sched, &profile, &geom, kind)?;
            let deltas = online_delta_path(&ns, i, epsilon, &sched, &profile, &geom, kind)?;
            for (&n, delta) in ns.iter().zip(deltas) {
                let gap = if bracket.upper > 0.0 { Some((delta - bracket.upper) / bracket.upper) } else { None };
                t.push(vec![
                    eta.into(),
                    n.into(),
                    online_scale(n, &sched, &profile, &geom, kind)?.into(),
                    delta.into(),
                    Cell::Empty,
                    Cell::Empty,
                    bracket.lower.into(),
                    bracket.upper.into(),
                    gap.into(),
                ]);
            }
        } else {
            let star = delta_star(kind, epsilon, sched.c1)?;
            let rows: Vec<(f64, f64)> = ns
                .par_iter()
                .map(|&n| {
                    Ok((
                        fixed_scale(n, &sched, &profile, &geom, kind)?,
                        shuffled_delta_fixed_noise(n, epsilon, &sched, &profile, &geom, kind)?,
                    ))
                })
                .collect::<crate::Result<_>>()?;
            for (&n, (scale, delta)) in ns.iter().zip(rows) {
                let weight = match kind {
                    NoiseKind::Laplace => n as f64,
                    NoiseKind::Gaussian => (n as f64).ln(),
                };
                t.push(vec![
                    eta.into(),
                    n.into(),
                    scale.into(),
                    delta.into(),
                    star.into(),
                    (weight * (delta - star)).into(),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                ]);
            }
        }
        out.push((eta, t));
    }
    Ok(out)
}

pub fn sweep(config: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let tables = sweep_tables(config)?;
    match ctx.out {
        Some(out) if tables.len() > 1 => {
            for (eta, t) in &tables {
                let path = tagged_path(out, &format!("eta-{eta}"));
                ctx.emit(&t.render(ctx.format)?, Some(&path), &[])?;
            }
            Ok(())
        }
        _ => {
            let mut all = Table::new(SWEEP_COLUMNS.to_vec());
            for (_, t) in tables {
                all.rows.extend(t.rows);
            }
            emit(&all, ctx, &[])
        }
    }
}

/// Per-epoch budget: `[budget]`, else the shuffled bound from the account fields.
fn per_epoch_budget(config: &RunConfig) -> Result<PrivacyBudget, CliError> {
    if let Some(b) = config.budget()? {
        return Ok(b);
    }
    let t = account_table(config)?;
    let delta = match &t.rows[2][4] {
        Cell::Float(d) => *d,
        _ => unreachable!("account rows carry float deltas"),
    };
    Ok(PrivacyBudget::new(config.epsilon()?, delta)?)
}

pub fn compose_table(config: &RunConfig) -> Result<Table, CliError> {
    let section = config.compose()?;
    let budget = per_epoch_budget(config)?;
    let mut t = Table::new(vec![
        "epochs",
        "method",
        "alpha",
        "epsilon",
        "delta",
        "per_epoch_currency",
        "composed_currency",
        "negative_rdp",
    ]);
    for e in 1..=section.epochs {
        let composed = match section.method {
            ComposeMethod::Rdp => {
                let delta_target = section.delta_target.ok_or_else(|| CliError::config("compose.delta_target", "missing"))?;
                match section.alpha {
                    Some(alpha) => compose_epochs(&budget, e, Method::Rdp { alpha, delta_target })?,
                    None => best_rdp_order(&budget, e, delta_target, &ALPHA_GRID)?,
                }
            }
            ComposeMethod::Gdp => {
                let epsilon_target =
                    section.epsilon_target.ok_or_else(|| CliError::config("compose.epsilon_target", "missing"))?;
                compose_epochs(&budget, e, Method::Gdp { epsilon_target })?
            }
        };
        let (method, alpha, per, total, negative): (&str, Option<f64>, f64, f64, Option<&str>) = match composed.trace {
            Trace::Rdp {
                per_epoch,
                composed,
                negative_per_epoch,
            } => (
                "rdp",
                Some(per_epoch.order),
                per_epoch.epsilon,
                composed.epsilon,
                Some(if negative_per_epoch { "true" } else { "false" }),
            ),
            Trace::Gdp { per_epoch, composed } => ("gdp", None, per_epoch.mu, composed.mu, None),
        };
        t.push(vec![
            e.into(),
            method.into(),
            alpha.into(),
            composed.budget.epsilon.into(),
            composed.budget.delta.into(),
            per.into(),
            total.into(),
            negative.into(),
        ]);
    }
    Ok(t)
}

pub fn compose(config: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    emit(&compose_table(config)?, ctx, &[])
}

pub fn simulate_table(config: &RunConfig, ctx: &Context, seed: u64) -> Result<Table, CliError> {
    let section = config.simulate()?;
    let profile = config.profile()?;
    let noise = config.noise_scale()?.ok_or_else(|| CliError::config("noise.scale", "missing"))?;
    let data = match (&section.dataset, &section.target) {
        (Some(path), _) => Dataset::from_csv(&ctx.base_dir.join(path)).map_err(|e| CliError::config("simulate.dataset", e))?,
        (None, Some(target)) => {
            let n = section.n.ok_or_else(|| CliError::config("simulate.n", "missing"))?;
            let mut target = target.clone();
            if target.is_empty() {
                return Err(CliError::config("simulate.target", "must not be empty"));
            }
            project_ball(&mut target, section.radius);
            generate_synthetic(&SyntheticProblem {
                loss: section.loss,
                n,
                target,
                seed,
            })
            .map_err(|e| CliError::config("simulate", e))?
        }
        (None, None) => return Err(CliError::config("simulate.target", "missing (or give simulate.dataset)")),
    };
    if let Some(n) = section.n {
        if n != data.len() {
            return Err(CliError::config("simulate.n", format!("dataset has {} rows", data.len())));
        }
    }
    let sim = PnsgdConfig {
        n: data.len(),
        d: data.dim(),
        noise,
        profile,
        radius: section.radius,
        loss: section.loss,
        seed,
        variant: Variant::Shuffled,
        replicas: section.replicas,
        record_steps: false,
    };
    let cmp = compare_variants(&sim, &data)?;

    let mut t = Table::new(vec!["row", "replica", "stopping_time", "shuffled_loss", "stopped_loss"]);
    for o in &cmp.outcomes {
        t.push(vec![
            "replica".into(),
            o.replica.into(),
            (o.stopping_time as u64).into(),
            o.shuffled_loss.into(),
            o.stopped_loss.into(),
        ]);
    }
    t.push(vec!["mean".into(), Cell::Empty, Cell::Empty, cmp.shuffled.mean.into(), cmp.stopped.mean.into()]);
    if let (Some(s), Some(r)) = (cmp.shuffled.std_dev, cmp.stopped.std_dev) {
        t.push(vec!["std_dev".into(), Cell::Empty, Cell::Empty, s.into(), r.into()]);
    }
    Ok(t)
}

pub fn simulate(config: &RunConfig, ctx: &Context, seed: u64) -> Result<(), CliError> {
    let notes = vec![
        "losses are full-data mean losses after one pass; per-step traces are available from the library".to_string(),
        "shuffled and randomly-stopped runs of a replica share the noise drawn at each step".to_string(),
    ];
    emit(&simulate_table(config, ctx, seed)?, ctx, &notes)
}
