//! Scenario files, the runner and reports.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::stats::{decades, fit_log_growth, ks_exponential, ks_two_sample, trend};
use crate::engine::{log_checkpoints, return_probabilities, series_from};
use crate::env::{max_potential_in_scaling_band, EnvSpec, Site};
use crate::error::{Error, Result};
use crate::landscape::{h_extrema, potential_window, Eps, MAX_HALF_WIDTH};
use crate::montecarlo::overlap::trial_envs;
use crate::montecarlo::{
    collision_curve, kochen_stone_from, localization_floor, localization_samples, mean_se, meeting_sum, plain_walk_at, plan_coupling,
    run_coupling, same_env_meeting_sum, simulate_product, ProductConfig,
};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Recurrence,
    Meetings,
    Localization,
    CollisionDecay,
    SameEnvSum,
    Coupling,
    Series,
    LandscapeStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
}

impl Op {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Op::Le => value <= threshold,
            Op::Ge => value >= threshold,
            Op::Lt => value < threshold,
            Op::Gt => value > threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Le => "<=",
            Op::Ge => ">=",
            Op::Lt => "<",
            Op::Gt => ">",
        }
    }
}

/// A check `metric op threshold` declared in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Verdict {
    pub name: String,
    pub metric: String,
    pub op: Op,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: Kind,
    pub seed: u64,
    #[serde(default)]
    pub description: String,
    pub params: serde_json::Value,
    #[serde(default)]
    pub verdicts: Vec<Verdict>,
    /// Default output directory, relative to the working directory.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
        let s: Scenario =
            serde_json::from_str(&text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let mut names: Vec<&str> = self.verdicts.iter().map(|v| v.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("verdict names must be unique".into()));
        }
        if self.verdicts.iter().any(|v| !v.threshold.is_finite()) {
            return Err(Error::InvalidArgument("thresholds must be finite".into()));
        }
        match self.kind {
            Kind::Recurrence | Kind::Meetings => self.params::<ProductParams>()?.validate(),
            Kind::Localization => self.params::<LocalizationParams>()?.validate(),
            Kind::CollisionDecay => self.params::<CollisionParams>()?.validate(),
            Kind::SameEnvSum => self.params::<SameEnvParams>()?.validate(),
            Kind::Coupling => self.params::<CouplingParams>()?.validate(),
            Kind::Series => self.params::<SeriesParams>()?.validate(),
            Kind::LandscapeStats => self.params::<LandscapeParams>()?.validate(),
        }
    }

    fn params<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(self.params.clone())
            .map_err(|e| Error::InvalidArgument(format!("scenario {}: params: {e}", self.name)))
    }
}

fn check(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(msg.into()))
    }
}

fn strictly_increasing(v: &[u64]) -> bool {
    !v.is_empty() && v.windows(2).all(|w| w[0] < w[1])
}

fn default_one() -> u32 {
    1
}

fn default_per_decade() -> u32 {
    20
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProductCase {
    label: String,
    m: usize,
    r: usize,
    envs: usize,
    #[serde(default)]
    assignment: Vec<usize>,
    #[serde(default)]
    starts: Vec<Site>,
    #[serde(default)]
    trials: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProductParams {
    env: EnvSpec,
    horizon: u64,
    trials: usize,
    #[serde(default = "default_one")]
    from_decade: u32,
    #[serde(default = "default_per_decade")]
    per_decade: u32,
    cases: Vec<ProductCase>,
}

impl ProductParams {
    fn config(&self, i: usize, seed: u64) -> ProductConfig {
        let c = &self.cases[i];
        let mut cfg =
            ProductConfig::new(c.m, c.r, c.envs, self.env, self.horizon, c.trials.unwrap_or(self.trials), rng::key(&[seed, i as u64]));
        cfg.assignment = c.assignment.clone();
        cfg.starts = c.starts.clone();
        cfg.per_decade = self.per_decade;
        cfg
    }

    fn validate(&self) -> Result<()> {
        check(!self.cases.is_empty(), "no cases")?;
        check(decades(self.from_decade, self.horizon).len() >= 4, "need at least four decades up to the horizon")?;
        let mut labels: Vec<&str> = self.cases.iter().map(|c| c.label.as_str()).collect();
        labels.sort_unstable();
        check(labels.windows(2).all(|w| w[0] != w[1]), "case labels must be unique")?;
        for i in 0..self.cases.len() {
            let cfg = self.config(i, 0);
            check(cfg.trials >= 2, "need at least two trials")?;
            cfg.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocalizationParams {
    env: EnvSpec,
    c2: f64,
    grid: Vec<u64>,
    trials: usize,
}

impl LocalizationParams {
    fn validate(&self) -> Result<()> {
        self.env.validate()?;
        check(strictly_increasing(&self.grid), "grid must be strictly increasing")?;
        check(self.trials > 0, "need at least one trial")?;
        for &n in &self.grid {
            crate::landscape::valleys::xi_levels(n, self.c2)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CollisionParams {
    env: EnvSpec,
    grid: Vec<u64>,
    trials: usize,
    tol: f64,
}

impl CollisionParams {
    fn validate(&self) -> Result<()> {
        self.env.validate()?;
        check(strictly_increasing(&self.grid), "grid must be strictly increasing")?;
        check(self.trials >= 2, "need at least two trials")?;
        check(self.tol > 0.0, "tol must be positive")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SameEnvParams {
    env: EnvSpec,
    envs: usize,
    starts: Vec<Site>,
    horizon: u64,
    tol: f64,
    #[serde(default = "default_per_decade")]
    per_decade: u32,
    /// Also run the walks in independent environments.
    #[serde(default)]
    contrast: bool,
}

impl SameEnvParams {
    fn validate(&self) -> Result<()> {
        self.env.validate()?;
        check(self.envs >= 2, "need at least two environments")?;
        check(!self.starts.is_empty(), "need at least one start")?;
        check(self.starts.iter().all(|y| (y - self.starts[0]).rem_euclid(2) == 0), "starts must share one parity")?;
        check(self.horizon >= 2, "horizon must be at least 2")?;
        check(self.per_decade > 0, "per_decade must be positive")?;
        check(self.tol > 0.0, "tol must be positive")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingParams {
    env: EnvSpec,
    n: u64,
    #[serde(default)]
    eps: Eps,
    /// Passing environments to collect.
    envs: usize,
    /// Environments to scan for them.
    scan_limit: usize,
    tol: f64,
    /// Coupled and plain runs in the first passing environment.
    marginal_runs: usize,
    /// Coupled runs in every passing environment for the meeting-time statistics.
    runs_per_env: usize,
}

impl CouplingParams {
    fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.eps.validate()?;
        check(self.n >= 100, "n must be at least 100")?;
        check(self.envs >= 1 && self.scan_limit >= self.envs, "need 1 <= envs <= scan_limit")?;
        check(self.marginal_runs >= 1 && self.runs_per_env >= 1, "run counts must be positive")?;
        check(self.tol > 0.0, "tol must be positive")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesParams {
    env: EnvSpec,
    envs: usize,
    horizon: u64,
    thetas: Vec<f64>,
    tol: f64,
    #[serde(default = "default_per_decade")]
    per_decade: u32,
}

impl SeriesParams {
    fn validate(&self) -> Result<()> {
        self.env.validate()?;
        check(self.envs >= 1, "need at least one environment")?;
        check(self.horizon >= 100, "horizon must be at least 100")?;
        check(!self.thetas.is_empty() && self.thetas.iter().all(|t| (0.0..=1.0).contains(t)), "thetas must lie in [0, 1]")?;
        check(self.per_decade > 0, "per_decade must be positive")?;
        check(self.tol > 0.0, "tol must be positive")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct BandParams {
    n: u64,
    gamma: f64,
    envs: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SlopeParams {
    samples: usize,
    /// `h` in units of the standard deviation of `log rho_0`.
    h_sigmas: f64,
    /// Non-central slope compared with Exp(1).
    slope_index: i64,
    initial_half: Site,
    /// Reference value for the mean of `e(T_0) / h`.
    t0_reference: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct LandscapeParams {
    env: EnvSpec,
    #[serde(default)]
    slopes: Option<SlopeParams>,
    #[serde(default)]
    band: Option<BandParams>,
}

impl LandscapeParams {
    fn validate(&self) -> Result<()> {
        self.env.validate()?;
        check(self.slopes.is_some() || self.band.is_some(), "nothing to compute")?;
        if let Some(p) = &self.slopes {
            check(p.samples >= 30, "need at least 30 slope samples")?;
            check(p.h_sigmas > 0.0, "h_sigmas must be positive")?;
            check(p.slope_index != 0, "slope_index must be non-central")?;
            check(p.initial_half >= 1 && p.initial_half <= MAX_HALF_WIDTH, "initial_half out of range")?;
        }
        if let Some(b) = &self.band {
            check(b.n >= 2 && b.envs >= 1 && b.gamma > 0.0 && b.gamma < 1.0, "invalid band parameters")?;
        }
        Ok(())
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(io_err)?;
        w.write_record(&self.header).map_err(io_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

fn io_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictResult {
    pub name: String,
    pub metric: String,
    pub op: Op,
    pub threshold: f64,
    /// `None` when the run did not produce the metric.
    pub value: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub name: String,
    pub kind: Kind,
    pub provenance: Provenance,
    pub metrics: BTreeMap<String, f64>,
    pub verdicts: Vec<VerdictResult>,
    pub passed: bool,
    #[serde(skip)]
    pub tables: Vec<Table>,
    /// Seconds; written to `timing.json` so that `report.json` is reproducible.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Default)]
struct Collected {
    metrics: BTreeMap<String, f64>,
    tables: Vec<Table>,
}

impl Collected {
    fn put(&mut self, key: impl Into<String>, v: f64) {
        self.metrics.insert(key.into(), v);
    }
}

/// Runs `s` on the current rayon pool. Nothing is written to disk.
pub fn run_scenario(s: &Scenario) -> Result<Report> {
    s.validate()?;
    let t0 = Instant::now();
    let mut c = Collected::default();
    let ctx = |e: Error| Error::InvalidArgument(format!("scenario {}: {e}", s.name));
    match s.kind {
        Kind::Recurrence => run_product(&s.params()?, s.seed, false, &mut c),
        Kind::Meetings => run_product(&s.params()?, s.seed, true, &mut c),
        Kind::Localization => run_localization(&s.params()?, s.seed, &mut c),
        Kind::CollisionDecay => run_collision(&s.params()?, s.seed, &mut c),
        Kind::SameEnvSum => run_same_env(&s.params()?, s.seed, &mut c),
        Kind::Coupling => run_coupling_kind(&s.params()?, s.seed, &mut c),
        Kind::Series => run_series(&s.params()?, s.seed, &mut c),
        Kind::LandscapeStats => run_landscape(&s.params()?, s.seed, &mut c),
    }
    .map_err(ctx)?;
    let verdicts: Vec<VerdictResult> = s
        .verdicts
        .iter()
        .map(|v| {
            let value = c.metrics.get(&v.metric).copied();
            VerdictResult {
                name: v.name.clone(),
                metric: v.metric.clone(),
                op: v.op,
                threshold: v.threshold,
                value,
                pass: value.is_some_and(|x| v.op.holds(x, v.threshold)),
            }
        })
        .collect();
    Ok(Report {
        name: s.name.clone(),
        kind: s.kind,
        provenance: Provenance { seed: s.seed, version: env!("CARGO_PKG_VERSION").into() },
        metrics: c.metrics,
        passed: verdicts.iter().all(|v| v.pass),
        verdicts,
        tables: c.tables,
        wall_time: t0.elapsed().as_secs_f64(),
    })
}

/// Writes `report.json`, `timing.json` and one CSV per table into `dir`.
pub fn write_report(report: &Report, dir: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidArgument(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    fs::write(dir.join("report.json"), json + "\n").map_err(io)?;
    let timing = serde_json::json!({ "wall_time_seconds": report.wall_time });
    fs::write(dir.join("timing.json"), timing.to_string() + "\n").map_err(io)?;
    for t in &report.tables {
        t.write_csv(&dir.join(format!("{}.csv", t.name)))?;
    }
    Ok(())
}

/// Runs `s` on a pool of `workers` threads and writes its outputs to `out`.
pub fn run_scenario_in(s: &Scenario, workers: usize, out: Option<&Path>) -> Result<Report> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let report = pool.install(|| run_scenario(s))?;
    if let Some(dir) = out {
        write_report(&report, dir)?;
    }
    Ok(report)
}

fn run_product(p: &ProductParams, seed: u64, meets: bool, c: &mut Collected) -> Result<()> {
    let mut stats_t = Table::new(
        "stats",
        &["label", "horizon", "mean_a_count", "se_a_count", "mean_return_count", "se_return_count"],
    );
    let mut trend_t = Table::new("trend", &["label", "from", "to", "mean_increment", "se_increment"]);
    let dec = decades(p.from_decade, p.horizon);
    for (i, case) in p.cases.iter().enumerate() {
        let cfg = p.config(i, seed);
        let stats = simulate_product(&cfg)?;
        for (k, &h) in stats.checkpoints.iter().enumerate() {
            let (ma, sa) = mean_se(stats.meets.iter().map(|r| r[k] as f64));
            let (mr, sr) = mean_se(stats.returns.iter().map(|r| r[k] as f64));
            stats_t.rows.push(vec![case.label.clone(), h.to_string(), fmt_f64(ma), fmt_f64(sa), fmt_f64(mr), fmt_f64(sr)]);
        }
        let idx: Vec<usize> = dec
            .iter()
            .map(|&d| stats.checkpoint_index(d).ok_or_else(|| Error::InvalidArgument(format!("{d} is not a checkpoint"))))
            .collect::<Result<_>>()?;
        let counts = if meets { &stats.meets } else { &stats.returns };
        let rows: Vec<Vec<f64>> = counts.iter().map(|r| idx.iter().map(|&k| r[k] as f64).collect()).collect();
        let tr = trend(&dec, &rows)?;
        for (j, &(m, s)) in tr.increments.iter().enumerate() {
            trend_t.rows.push(vec![case.label.clone(), dec[j].to_string(), dec[j + 1].to_string(), fmt_f64(m), fmt_f64(s)]);
        }
        let l = &case.label;
        c.put(format!("{l}.min_z"), tr.min_z);
        c.put(format!("{l}.ratio"), tr.ratio);
        c.put(format!("{l}.ratio_se"), tr.ratio_se);
        c.put(format!("{l}.ratio_upper"), tr.ratio + 2.0 * tr.ratio_se);
        let last = *tr.means.last().unwrap();
        c.put(format!("{l}.final_mean"), last);
        let fit = fit_log_growth(&dec.iter().zip(&tr.means).map(|(&n, &m)| (n as f64, m)).collect::<Vec<_>>())?;
        c.put(format!("{l}.log_slope"), fit.slope);
        c.put(format!("{l}.log_r2"), fit.r2.unwrap_or(f64::NAN));
        let k = dec.len();
        let (tail, tail_se) = mean_se(rows.iter().map(|r| r[k - 1] - r[k - 3]));
        c.put(format!("{l}.tail_fraction"), tail / last);
        c.put(format!("{l}.tail_fraction_upper"), (tail + 2.0 * tail_se) / last);
        if let Some(ratio) = kochen_stone_from(&stats, stats.checkpoints.len() - 1).ratio {
            c.put(format!("{l}.kochen_stone"), ratio);
        }
    }
    c.tables.push(stats_t);
    c.tables.push(trend_t);
    Ok(())
}

fn run_localization(p: &LocalizationParams, seed: u64, c: &mut Collected) -> Result<()> {
    let samples = localization_samples(&p.env, &p.grid, p.trials, p.c2, seed)?;
    let est = crate::montecarlo::localization::summarize(&p.grid, p.c2, &samples);
    let mut t = Table::new("localization", &["n", "c2", "trials", "undetermined", "outside", "rate", "se"]);
    for e in &est {
        t.rows.push(vec![
            e.n.to_string(),
            fmt_f64(e.c2),
            e.trials.to_string(),
            e.undetermined.to_string(),
            e.outside.to_string(),
            fmt_f64(e.rate),
            fmt_f64(e.se),
        ]);
        c.put(format!("rate@{}", e.n), e.rate);
        c.put(format!("se@{}", e.n), e.se);
        c.put(format!("undetermined@{}", e.n), e.undetermined as f64);
    }
    let inc = est.windows(2).map(|w| w[1].rate - w[0].rate).fold(f64::NEG_INFINITY, f64::max);
    if est.len() >= 2 {
        c.put("max_increase", inc);
    }
    c.tables.push(t);
    Ok(())
}

fn run_collision(p: &CollisionParams, seed: u64, c: &mut Collected) -> Result<()> {
    let curve = collision_curve(&p.env, &p.grid, p.trials, seed, p.tol)?;
    let mut t = Table::new("collision", &["n", "mean", "se", "error"]);
    for q in &curve.points {
        t.rows.push(vec![q.n.to_string(), fmt_f64(q.mean), fmt_f64(q.se), fmt_f64(q.error)]);
        c.put(format!("mean@{}", q.n), q.mean);
        c.put(format!("se@{}", q.n), q.se);
    }
    let mut d = Table::new("collision_drops", &["from", "to", "mean_drop", "se_drop"]);
    let mut min_z = f64::INFINITY;
    for (i, &(m, s)) in curve.diffs.iter().enumerate() {
        let (a, b) = (p.grid[i], p.grid[i + 1]);
        d.rows.push(vec![a.to_string(), b.to_string(), fmt_f64(m), fmt_f64(s)]);
        let z = if s > 0.0 { m / s } else if m > 0.0 { f64::INFINITY } else { 0.0 };
        c.put(format!("drop_z@{a}-{b}"), z);
        min_z = min_z.min(z);
    }
    if !curve.diffs.is_empty() {
        c.put("min_drop_z", min_z);
    }
    c.put("error", curve.points[0].error);
    c.tables.push(t);
    c.tables.push(d);
    Ok(())
}

fn run_same_env(p: &SameEnvParams, seed: u64, c: &mut Collected) -> Result<()> {
    let checkpoints = log_checkpoints(p.horizon, p.per_decade);
    let sums = (0..p.envs as u64)
        .into_par_iter()
        .map(|i| {
            let env = trial_envs(&p.env, seed, i, 1)?.remove(0);
            same_env_meeting_sum(&env, &p.starts, p.horizon, &checkpoints, p.tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new("same_env_sum", &["env", "setting", "n", "normalized_sum"]);
    for (i, s) in sums.iter().enumerate() {
        for &(n, v) in &s.curve {
            t.rows.push(vec![i.to_string(), "same".into(), n.to_string(), fmt_f64(v)]);
        }
    }
    let (mean, se) = mean_se(sums.iter().map(|s| s.value));
    c.put("value_mean", mean);
    c.put("value_se", se);
    c.put("value_min", sums.iter().map(|s| s.value).fold(f64::INFINITY, f64::min));
    c.put("value_max", sums.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max));
    c.put("error_max", sums.iter().map(|s| s.error).fold(0.0, f64::max));
    if p.contrast {
        let indep = (0..p.envs as u64)
            .into_par_iter()
            .map(|i| {
                let envs = trial_envs(&p.env, seed, i, p.starts.len())?;
                let refs: Vec<&crate::env::Environment> = envs.iter().collect();
                meeting_sum(&refs, &p.starts, p.horizon, &checkpoints, p.tol)
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, s) in indep.iter().enumerate() {
            for &(n, v) in &s.curve {
                t.rows.push(vec![i.to_string(), "independent".into(), n.to_string(), fmt_f64(v)]);
            }
        }
        let (im, ise) = mean_se(indep.iter().map(|s| s.value));
        c.put("independent_mean", im);
        c.put("independent_se", ise);
        c.put("independent_max", indep.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max));
        c.put("same_over_independent", mean / im);
    }
    c.tables.push(t);
    Ok(())
}

fn run_coupling_kind(p: &CouplingParams, seed: u64, c: &mut Collected) -> Result<()> {
    let plans = (0..p.scan_limit as u64)
        .into_par_iter()
        .map(|i| {
            let env = trial_envs(&p.env, seed, i, 1)?.remove(0);
            Ok(plan_coupling(&env, p.n, &p.eps)?.ok().map(|plan| (i, env, plan)))
        })
        .collect::<Result<Vec<_>>>()?;
    let scanned = plans.len();
    let passing_total = plans.iter().filter(|x| x.is_some()).count();
    let chosen: Vec<_> = plans.into_iter().flatten().take(p.envs).collect();
    c.put("scanned", scanned as f64);
    c.put("pass_rate", passing_total as f64 / scanned as f64);
    c.put("passing", chosen.len() as f64);

    let floors = chosen
        .par_iter()
        .map(|(_, env, plan)| localization_floor(env, 0, plan.b_hat, p.n, p.tol))
        .collect::<Result<Vec<_>>>()?;
    let mut ft = Table::new("floors", &["env", "side", "b_hat", "floor", "argmin", "error"]);
    for ((i, _, plan), f) in chosen.iter().zip(&floors) {
        ft.rows.push(vec![
            i.to_string(),
            format!("{:?}", plan.side),
            plan.b_hat.to_string(),
            fmt_f64(f.value),
            f.argmin.to_string(),
            fmt_f64(f.error),
        ]);
    }
    if chosen.len() == p.envs {
        c.put("floor_min", floors.iter().map(|f| f.value).fold(f64::INFINITY, f64::min));
        c.put("floor_max", floors.iter().map(|f| f.value).fold(f64::NEG_INFINITY, f64::max));
        c.put("floor_positive_fraction", floors.iter().filter(|f| f.value > 0.0).count() as f64 / floors.len() as f64);
        c.put("floor_error_max", floors.iter().map(|f| f.error).fold(0.0, f64::max));
    }

    let half = p.n / 2;
    let late = (p.n as f64).powf(0.9);
    let mut ct = Table::new(
        "coupling",
        &["env", "trial", "z_hat_0", "tau_meet", "tau_exit", "d1", "d2", "d3", "tau_l_minus", "tau_l_plus", "z_half"],
    );
    let mut late_count = 0usize;
    let mut exits = 0usize;
    let mut total = 0usize;
    for (k, (i, env, plan)) in chosen.iter().enumerate() {
        let runs = if k == 0 { p.marginal_runs.max(p.runs_per_env) } else { p.runs_per_env };
        let env_seed = rng::key(&[seed, *i]);
        let out: Vec<_> = (0..runs as u64)
            .into_par_iter()
            .map(|t| run_coupling(env, plan, 0, &[half], env_seed, t, None))
            .collect();
        for o in &out {
            ct.rows.push(vec![
                i.to_string(),
                o.trial.to_string(),
                o.z_hat_0.to_string(),
                opt(o.tau_meet),
                opt(o.tau_exit),
                opt(o.d1),
                o.d2.to_string(),
                o.d3.to_string(),
                opt(o.tau_l_minus),
                opt(o.tau_l_plus),
                o.z_at[0].to_string(),
            ]);
        }
        let scored = &out[..p.runs_per_env.min(out.len())];
        late_count += scored.iter().filter(|o| o.tau_meet.is_none_or(|m| m as f64 > late)).count();
        exits += scored.iter().filter(|o| o.tau_exit.is_some()).count();
        total += scored.len();
        if k == 0 {
            let coupled: Vec<f64> = out[..p.marginal_runs].iter().map(|o| o.z_at[0] as f64).collect();
            let plain: Vec<f64> = (0..p.marginal_runs as u64)
                .into_par_iter()
                .map(|t| plain_walk_at(env, plan.b_hat, &[half], env_seed, t)[0] as f64)
                .collect();
            let mut pt = Table::new("plain", &["env", "trial", "z_half"]);
            for (t, z) in plain.iter().enumerate() {
                pt.rows.push(vec![i.to_string(), t.to_string(), (*z as Site).to_string()]);
            }
            c.tables.push(pt);
            c.put("marginal_ks", ks_two_sample(&coupled, &plain)?);
        }
    }
    if total > 0 {
        c.put("late_meet_fraction", late_count as f64 / total as f64);
        c.put("exit_fraction", exits as f64 / total as f64);
    }
    c.tables.push(ft);
    c.tables.push(ct);
    Ok(())
}

fn run_series(p: &SeriesParams, seed: u64, c: &mut Collected) -> Result<()> {
    let checkpoints = log_checkpoints(p.horizon, p.per_decade);
    let tenth = p.horizon / 10;
    let mut points = checkpoints.clone();
    if !points.contains(&tenth) {
        points.push(tenth);
        points.sort_unstable();
    }
    let per_env = (0..p.envs as u64)
        .into_par_iter()
        .map(|i| {
            let env = trial_envs(&p.env, seed, i, 1)?.remove(0);
            let (probs, leak) = return_probabilities(&env, p.horizon, p.tol)?;
            let series: Vec<Vec<(u64, f64)>> = p.thetas.iter().map(|&th| series_from(&probs, th, &points)).collect();
            Ok((series, leak))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new("series", &["env", "theta", "n", "partial_sum"]);
    for (i, (series, _)) in per_env.iter().enumerate() {
        for (th, s) in p.thetas.iter().zip(series) {
            for &(n, v) in s.iter().filter(|(n, _)| checkpoints.contains(n)) {
                t.rows.push(vec![i.to_string(), fmt_f64(*th), n.to_string(), fmt_f64(v)]);
            }
        }
    }
    let k_tenth = points.iter().position(|&n| n == tenth).unwrap();
    for (j, th) in p.thetas.iter().enumerate() {
        let fr: Vec<(f64, f64)> = per_env
            .iter()
            .map(|(s, _)| {
                let total = s[j].last().unwrap().1;
                (total - s[j][k_tenth].1, total)
            })
            .collect();
        let fractions: Vec<f64> = fr.iter().map(|(d, tot)| d / tot).collect();
        let key = format!("theta{th}");
        c.put(format!("{key}.last_decade_fraction_max"), fractions.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        c.put(format!("{key}.last_decade_fraction_min"), fractions.iter().copied().fold(f64::INFINITY, f64::min));
        c.put(format!("{key}.last_decade_fraction_mean"), mean_se(fractions.iter().copied()).0);
        let (d, tot) = fr.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        c.put(format!("{key}.last_decade_fraction_pooled"), d / tot);
    }
    c.put("leak_max", per_env.iter().map(|x| x.1).fold(0.0, f64::max));
    c.tables.push(t);
    Ok(())
}

fn run_landscape(p: &LandscapeParams, seed: u64, c: &mut Collected) -> Result<()> {
    if let Some(sp) = &p.slopes {
        slope_samples(&p.env, sp, seed, c)?;
    }
    if let Some(b) = &p.band {
        let inside = (0..b.envs as u64)
            .into_par_iter()
            .map(|i| Ok(max_potential_in_scaling_band(&trial_envs(&p.env, seed, i, 1)?[0], b.n, b.gamma)))
            .collect::<Result<Vec<bool>>>()?;
        c.put("band_fraction", inside.iter().filter(|&&x| x).count() as f64 / b.envs as f64);
    }
    Ok(())
}

fn slope_samples(spec: &EnvSpec, p: &SlopeParams, seed: u64, c: &mut Collected) -> Result<()> {
    let h = p.h_sigmas * spec.sigma2().sqrt();
    let samples = (0..p.samples as u64)
        .into_par_iter()
        .map(|i| {
            let env = trial_envs(spec, seed, i, 1)?.remove(0);
            let mut half = p.initial_half;
            loop {
                let w = potential_window(&env, -half, half)?;
                let d = h_extrema(&w, h)?;
                if let (Some(s0), Some(si)) = (d.slope(0), d.slope(p.slope_index)) {
                    return Ok((s0.excess / h, si.excess / h));
                }
                if half >= MAX_HALF_WIDTH {
                    return Err(Error::LandscapeUndetermined(format!("slopes not certified within {half}")));
                }
                half = (2 * half).min(MAX_HALF_WIDTH);
            }
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let mut t = Table::new("slopes", &["sample", "e_t0_over_h", "e_ti_over_h"]);
    for (i, (a, b)) in samples.iter().enumerate() {
        t.rows.push(vec![i.to_string(), fmt_f64(*a), fmt_f64(*b)]);
    }
    let ti: Vec<f64> = samples.iter().map(|s| s.1).collect();
    c.put("ks_slope", ks_exponential(&ti)?);
    c.put("mean_slope", mean_se(ti.iter().copied()).0);
    let (m0, se0) = mean_se(samples.iter().map(|s| s.0));
    c.put("mean_t0", m0);
    c.put("se_t0", se0);
    c.put("t0_abs_dev", (m0 - p.t0_reference).abs());
    c.put("h", h);
    c.tables.push(t);
    Ok(())
}
