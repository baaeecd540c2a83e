use std::collections::BTreeMap;
use std::path::PathBuf;

use heatstat_core::protocol::InitialStateMode;
use heatstat_core::qcore::C64;
use heatstat_core::{asymptotics, exact, montecarlo, qutrit, tol};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{from_core, CliError, Result};
use crate::svg::{line_chart, Series};
use crate::table::ResultTable;

/// Channel unitality deviation accepted by the validate audit.
const UNITALITY_BOUND: f64 = 1e-10;

pub struct RunContext {
    pub out: PathBuf,
    pub config_sha256: String,
    pub seed_override: Option<u64>,
    pub command: &'static str,
}

impl RunContext {
    pub fn metadata(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("command".to_string(), self.command.to_string());
        m.insert("config_sha256".to_string(), self.config_sha256.clone());
        m.insert("tool_version".to_string(), env!("CARGO_PKG_VERSION").to_string());
        m
    }

    fn metadata_json(&self) -> serde_json::Value {
        json!(self.metadata())
    }

    fn write_table(&self, name: &str, table: &ResultTable) -> Result<()> {
        table.write(&self.out.join(name))
    }

    fn write_json(&self, name: &str, value: &serde_json::Value) -> Result<()> {
        let text = serde_json::to_string_pretty(value).expect("JSON values serialize") + "\n";
        self.write_text(name, &text)
    }

    fn write_text(&self, name: &str, text: &str) -> Result<()> {
        let path = self.out.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::Io {
            message: format!("writing {}: {e}", path.display()),
        })
    }
}

pub fn exact(config: &ExperimentConfig, ctx: &RunContext) -> Result<()> {
    let spec = config.protocol_spec()?;
    let task = config.exact_task();
    if !(1..=exact::MAX_MOMENT_ORDER).contains(&task.max_moment) {
        return Err(CliError::config(
            "exact.max_moment",
            format!("must be between 1 and {}", exact::MAX_MOMENT_ORDER),
        ));
    }

    let dist = exact::heat_distribution(&spec).map_err(|e| from_core("exact", e))?;
    let mut heat = ResultTable::new(["Q", "prob"], ctx.metadata());
    for (&q, &p) in dist.support().iter().zip(dist.probabilities()) {
        heat.push(vec![q, p]);
    }
    ctx.write_table("heat_distribution.csv", &heat)?;

    let table = exact::conditional_table(&spec).map_err(|e| from_core("exact", e))?;
    let us = task.u_grid.values("exact.u_grid")?;
    let mut charfn = ResultTable::new(["re_u", "im_u", "re_G", "im_G"], ctx.metadata());
    let mut gs = Vec::with_capacity(us.len());
    for &u in &us {
        let g = exact::char_fn_with_table(&spec, &table, C64::new(u, 0.0))
            .map_err(|e| from_core("exact.u_grid", e))?;
        charfn.push(vec![u, 0.0, g.re, g.im]);
        gs.push(g);
    }
    ctx.write_table("charfn.csv", &charfn)?;

    let moments = exact::heat_moments(&spec, task.max_moment)
        .map_err(|e| from_core("exact.max_moment", e))?;
    let mut mt = ResultTable::new(["order", "moment"], ctx.metadata());
    for (k, &value) in moments.iter().enumerate() {
        mt.push(vec![(k + 1) as f64, value]);
    }
    ctx.write_table("moments.csv", &mt)?;

    if task.svg {
        let modulus: Vec<(f64, f64)> =
            us.iter().zip(&gs).map(|(&u, g)| (u, g.norm())).collect();
        let phase: Vec<(f64, f64)> =
            us.iter().zip(&gs).map(|(&u, g)| (u, g.arg())).collect();
        let chart = line_chart(
            "Characteristic function of the heat",
            "u",
            "|G| and arg G",
            &[
                Series::contiguous("|G(u)|", modulus),
                Series::contiguous("arg G(u)", phase),
            ],
        );
        ctx.write_text("charfn.svg", &chart)?;
    }
    Ok(())
}

pub fn sample(config: &ExperimentConfig, ctx: &RunContext) -> Result<()> {
    let spec = config.protocol_spec()?;
    let task = config.sample_task();
    let seed = ctx.seed_override.unwrap_or(task.seed);
    let stats = montecarlo::sample(&spec, task.trajectories, seed)
        .map_err(|e| from_core("sample", e))?;

    let mut metadata = ctx.metadata();
    metadata.insert("seed".to_string(), seed.to_string());
    metadata.insert("trajectories".to_string(), task.trajectories.to_string());

    let mut hist = ResultTable::new(["Q", "count", "frequency", "exact_prob"], metadata.clone());
    for (k, &q) in stats.support.iter().enumerate() {
        let count = stats.heat_counts[k];
        hist.push(vec![
            q,
            count as f64,
            count as f64 / task.trajectories as f64,
            stats.exact_probabilities[k],
        ]);
    }
    ctx.write_table("histogram.csv", &hist)?;

    let n = spec.dim();
    let table = exact::conditional_table(&spec).map_err(|e| from_core("sample", e))?;
    let weights = spec.initial().weights();
    let mut cond = ResultTable::new(
        ["final_level", "initial_level", "count", "frequency", "exact_prob"],
        metadata.clone(),
    );
    for m in 0..n {
        for i in 0..n {
            let count = stats.conditional_counts[m * n + i];
            cond.push(vec![
                m as f64,
                i as f64,
                count as f64,
                count as f64 / task.trajectories as f64,
                weights[i] * table.get(m, i),
            ]);
        }
    }
    ctx.write_table("conditional.csv", &cond)?;

    let pass = stats.jarzynski_mean.zip(stats.jarzynski_std_error).map(
        |(mean, se)| (mean - 1.0).abs() <= 3.0 * se,
    );
    let report = json!({
        "mean": stats.jarzynski_mean,
        "stderr": stats.jarzynski_std_error,
        "n": task.trajectories,
        "pass": pass,
        "mean_heat": stats.mean_heat,
        "mean_heat_sq": stats.mean_heat_sq,
        "seed": seed,
        "metadata": ctx.metadata_json(),
    });
    ctx.write_json("jarzynski.json", &report)
}

pub fn thermalize(config: &ExperimentConfig, ctx: &RunContext) -> Result<()> {
    let spec = config.protocol_spec()?;
    let task = config.thermalize_task();
    let regime = asymptotics::classify_regime(&spec).map_err(|e| from_core("thermalize", e))?;
    let decomp = asymptotics::block_decomposition(spec.energies(), spec.observable())
        .map_err(|e| from_core("thermalize", e))?;
    let report = asymptotics::thermalization_report(&spec, &task.m_list)
        .map_err(|e| from_core("thermalize.m_list", e))?;

    let regime_tag = match regime {
        asymptotics::MixingRegime::ZenoFrozen => "zeno_frozen",
        asymptotics::MixingRegime::InfiniteTemperature => "infinite_temperature",
        asymptotics::MixingRegime::Partial { .. } => "partial",
    };
    let blocks = json!({
        "regime": regime_tag,
        "block_count": report.block_count,
        "blocks": decomp.blocks(),
        "block_of_level": (0..spec.dim()).map(|k| decomp.block_of_level(k)).collect::<Vec<_>>(),
        "block_of_outcome": (0..spec.dim()).map(|k| decomp.block_of_outcome(k)).collect::<Vec<_>>(),
        "mixing_rate": report.rate,
        "limiting_weights": report.limiting_weights,
        "metadata": ctx.metadata_json(),
    });
    ctx.write_json("blocks.json", &blocks)?;

    let mut convergence = ResultTable::new(["m", "distance"], ctx.metadata());
    for &(m, distance) in &report.deviations {
        convergence.push(vec![m as f64, distance]);
    }
    ctx.write_table("convergence.csv", &convergence)
}

pub fn zeno(config: &ExperimentConfig, ctx: &RunContext) -> Result<()> {
    let system = config.system()?;
    let observable = config.observable(&system)?;
    let task = config.zeno_task();

    let mut escape = ResultTable::new(["m", "escape"], ctx.metadata());
    for &m in &task.m_list {
        let p = asymptotics::zeno_escape(&system.energies, &observable, task.total_time, m)
            .map_err(|e| from_core("zeno.m_list", e))?;
        escape.push(vec![m as f64, p]);
    }
    ctx.write_table("escape.csv", &escape)?;

    let fit = asymptotics::zeno_scan(&system.energies, &observable, task.total_time, &task.m_list)
        .map_err(|e| from_core("zeno", e))?;
    let report = json!({
        "slope": fit.slope,
        "intercept": fit.intercept,
        "points_used": fit.points.len(),
        "total_time": task.total_time,
        "metadata": ctx.metadata_json(),
    });
    ctx.write_json("zeno_fit.json", &report)
}

pub fn fig1(config: &ExperimentConfig, ctx: &RunContext) -> Result<()> {
    let system = config.system()?;
    let task = config.fig1_task();
    let alphas = task.alpha_grid.values("fig1.alpha_grid")?;
    let points = qutrit::sweep_beta_eff(&system.energies, &task.betas, &alphas)
        .map_err(|e| from_core("system", e))?;

    let mut table = ResultTable::new(["beta", "alpha", "beta_eff"], ctx.metadata());
    let mut notes = Vec::new();
    for point in &points {
        if let Some(beta_eff) = point.beta_eff {
            table.push(vec![point.beta, point.alpha, beta_eff]);
        }
        if let Some(note) = &point.note {
            notes.push(json!({
                "beta": point.beta,
                "alpha": point.alpha,
                "note": note,
            }));
        }
    }
    ctx.write_table("beta_eff.csv", &table)?;
    ctx.write_json(
        "fig1_notes.json",
        &json!({ "notes": notes, "metadata": ctx.metadata_json() }),
    )?;

    if task.svg {
        let mut series = Vec::new();
        for &beta in &task.betas {
            let mut segments: Vec<Vec<(f64, f64)>> = Vec::new();
            let mut current: Vec<(f64, f64)> = Vec::new();
            for point in points.iter().filter(|p| p.beta == beta) {
                match point.beta_eff {
                    Some(v) => current.push((point.alpha, v)),
                    None => {
                        if !current.is_empty() {
                            segments.push(std::mem::take(&mut current));
                        }
                    }
                }
            }
            if !current.is_empty() {
                segments.push(current);
            }
            series.push(Series { label: format!("beta = {beta}"), segments });
        }
        let chart = line_chart(
            "Effective inverse temperature",
            "alpha",
            "beta_eff",
            &series,
        );
        ctx.write_text("beta_eff.svg", &chart)?;
    }
    Ok(())
}

fn budgets_allow(n: usize, atoms: usize, m: usize) -> bool {
    (n as f64).powi(m as i32) <= tol::ENUMERATION_OUTCOMES
        && ((n * atoms) as f64).powi(m as i32) <= tol::ENUMERATION_JOINT
}

pub fn validate(config: &ExperimentConfig, ctx: &RunContext) -> Result<()> {
    let spec = config.protocol_spec()?;
    let mut checks: Vec<(&str, f64, f64)> = Vec::new();

    checks.push((
        "observable_unitarity",
        spec.observable().basis().unitarity_deviation(),
        tol::UNITARITY,
    ));
    let weight_sum: f64 = spec.initial().weights().iter().sum();
    checks.push(("initial_weight_sum", (weight_sum - 1.0).abs(), tol::WEIGHT_SUM));
    let averaged = spec.averaged_l().map_err(|e| from_core("waits", e))?;
    checks.push((
        "averaged_chain_doubly_stochastic",
        averaged.doubly_stochastic_deviation(),
        tol::DOUBLY_STOCHASTIC,
    ));
    let g0 = exact::char_fn(&spec, C64::new(0.0, 0.0)).map_err(|e| from_core("config", e))?;
    checks.push(("charfn_at_zero", (g0 - 1.0).norm(), tol::CHARFN_AT_ZERO));

    let n = spec.dim();
    let atoms = spec.waits().atoms().len();
    let mut m_small = spec.measurements().min(16);
    while m_small > 1 && !budgets_allow(n, atoms, m_small) {
        m_small -= 1;
    }
    let trial = heatstat_core::protocol::ProtocolSpec::new(
        spec.energies().to_vec(),
        spec.observable().clone(),
        spec.initial().clone(),
        spec.waits().clone(),
        m_small,
    )
    .map_err(|e| from_core("config", e))?;
    let unitality = exact::unitality_check(&trial).map_err(|e| from_core("config", e))?;
    checks.push(("channel_unitality", unitality.deviation, UNITALITY_BOUND));

    if let InitialStateMode::Gibbs { .. } = spec.initial().mode() {
        let ft = exact::fluctuation_check(&spec).map_err(|e| from_core("config", e))?;
        checks.push(("fluctuation_relation", ft.deviation, tol::FLUCTUATION_THEOREM));
    }

    let mut all_pass = true;
    let mut report = Vec::new();
    for (name, value, bound) in &checks {
        let pass = value <= bound;
        all_pass &= pass;
        println!(
            "check {name:<34} {}  ({value:.3e} vs {bound:.1e})",
            if pass { "pass" } else { "FAIL" }
        );
        report.push(json!({
            "name": name,
            "value": value,
            "bound": bound,
            "pass": pass,
        }));
    }
    ctx.write_json(
        "validation.json",
        &json!({
            "pass": all_pass,
            "checks": report,
            "metadata": ctx.metadata_json(),
        }),
    )?;
    if all_pass {
        Ok(())
    } else {
        let failed: Vec<&str> = checks
            .iter()
            .filter(|(_, v, b)| v > b)
            .map(|(name, _, _)| *name)
            .collect();
        Err(CliError::Numeric {
            kind: "validation".to_string(),
            message: format!("invariant checks failed: {}", failed.join(", ")),
        })
    }
}
