//! Command-line front end: flag and config-file parsing, dispatch to the
//! engines, and CSV/JSON rendering of self-describing result rows.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::Serialize;
use serde_json::json;

use crate::asymptotics::{
    alpha_infinity, classify, landscape, thresholds, v_terms, variance_asymptotic, LandscapeConfig, TruncationPolicy,
};
use crate::error::{Error, Result};
use crate::genfun::{variance_via_roots, RadiusPolicy};
use crate::oracle::{
    exact_variance_enumeration, simulate_profile, variance_by_decomposition, SimulationConfig, ENUMERATION_MAX_LETTERS,
};
use crate::par::Exec;
use crate::words::{ModelParams, Source, PAIR_ENUMERATION_CAP};

/// Largest `4^k (n + k) k` the automaton decomposition is allowed to cost.
pub const AUTOMATON_COST_CAP: f64 = 2e8;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "PROFILIUM_THREADS";

const DEFAULT_REPLICATES: u64 = 10_000;
const DEFAULT_SEED: u64 = 1;
const LANDSCAPE_N: u64 = 1 << 16;

#[derive(Parser, Debug)]
#[command(name = "profilium", version, about = "Variance of the internal profile of random suffix trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: RunOpts,
}

#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Regime thresholds and the class of `alpha`.
    Regimes,
    /// Exact variance by enumeration, automaton decomposition and roots.
    Exact,
    /// Monte Carlo variance.
    Simulate,
    /// Three-regime asymptotic variance with its components.
    Asymptotic,
    /// The mid-level sums V1, V2 and Ṽ3.
    Vterms,
    /// Exponent landscape G and its diagonal maximum F.
    Landscape,
    /// Every applicable method over the `n` list.
    Compare,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Arbitrary-precision rationals.
    Exact,
    Float,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Args, Debug, Default, Clone)]
pub struct RunOpts {
    /// Flat `key = value` file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Probability of the letter `a`, in (1/2, 1).
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Derives `k = round(alpha ln n)`; exclusive with `--k`.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// One or more comma-separated values.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    /// Word length.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Monte Carlo replicates [default: 10000].
    #[arg(long, global = true)]
    pub replicates: Option<u64>,
    /// Monte Carlo seed [default: 1].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Arithmetic of the exact methods [default: float].
    #[arg(long, global = true, value_enum)]
    pub mode: Option<Mode>,
    /// Saddle-line terms kept on each side [default: 12].
    #[arg(long, global = true)]
    pub y_max: Option<usize>,
    /// Cap on the W-series length [default: 400].
    #[arg(long, global = true)]
    pub m_max: Option<usize>,
    /// Largest overlap length in the cross-class sum [default: regime-uniform cutoff].
    #[arg(long, global = true)]
    pub ell_max: Option<usize>,
    /// Relative tail tolerance of the series [default: 1e-12].
    #[arg(long, global = true)]
    pub tail_tol: Option<f64>,
    /// Write here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Output format [default: csv].
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker cap; falls back to `PROFILIUM_THREADS`.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Zeroes runtimes and omits the thread count so output bytes depend
    /// only on the inputs.
    #[arg(long, global = true)]
    pub reproducible: bool,
}

/// Fully resolved run configuration, echoed in every output header.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub p: f64,
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub n_list: Vec<u64>,
    pub replicates: u64,
    pub seed: u64,
    pub mode: Mode,
    pub truncation: TruncationPolicy,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub reproducible: bool,
}

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::Domain(format!("config key `{key}`: cannot parse `{raw}`")))
}

fn parse_list(key: &str, raw: &str) -> Result<Vec<u64>> {
    raw.split(',').map(|s| parse_value(key, s)).collect()
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Domain(format!("config line {}: expected `key = value`", lineno + 1)))?;
        out.insert(key.trim().replace('-', "_"), value.trim().to_string());
    }
    Ok(out)
}

impl RunConfig {
    pub fn resolve(cli: Cli) -> Result<Self> {
        let file = match &cli.opts.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Domain(format!("cannot read config {}: {e}", path.display())))?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        Self::merge(cli.command, cli.opts, &file)
    }

    /// Flags win over `file`; unknown file keys are rejected.
    pub fn merge(command: Command, o: RunOpts, file: &BTreeMap<String, String>) -> Result<Self> {
        const KEYS: [&str; 15] = [
            "p",
            "alpha",
            "n",
            "k",
            "replicates",
            "seed",
            "mode",
            "y_max",
            "m_max",
            "ell_max",
            "tail_tol",
            "output",
            "format",
            "threads",
            "reproducible",
        ];
        if let Some(key) = file.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::Domain(format!("unknown config key `{key}`")));
        }
        fn pick<T: std::str::FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
            match (flag, file.get(key)) {
                (Some(v), _) => Ok(Some(v)),
                (None, Some(raw)) => parse_value(key, raw).map(Some),
                (None, None) => Ok(None),
            }
        }
        let enum_pick = |flag: Option<String>, key: &str| -> Option<String> { flag.or_else(|| file.get(key).cloned()) };

        let mode = match enum_pick(o.mode.map(|m| format!("{m:?}").to_lowercase()), "mode").as_deref() {
            None | Some("float") => Mode::Float,
            Some("exact") => Mode::Exact,
            Some(other) => return Err(Error::Domain(format!("mode must be exact or float, got `{other}`"))),
        };
        let format = match enum_pick(o.format.map(|f| format!("{f:?}").to_lowercase()), "format").as_deref() {
            None | Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(other) => return Err(Error::Domain(format!("format must be csv or json, got `{other}`"))),
        };
        let n_list = match (o.n, file.get("n")) {
            (Some(v), _) => v,
            (None, Some(raw)) => parse_list("n", raw)?,
            (None, None) => Vec::new(),
        };
        let defaults = TruncationPolicy::default();
        let truncation = TruncationPolicy {
            y_max: pick(o.y_max, file, "y_max")?.unwrap_or(defaults.y_max),
            m_max: pick(o.m_max, file, "m_max")?.unwrap_or(defaults.m_max),
            ell_max: pick(o.ell_max, file, "ell_max")?.or(defaults.ell_max),
            tail_tol: pick(o.tail_tol, file, "tail_tol")?.unwrap_or(defaults.tail_tol),
        };
        let threads = match pick(o.threads, file, "threads")? {
            Some(t) => Some(t),
            None => match std::env::var(THREADS_ENV) {
                Ok(raw) => Some(parse_value(THREADS_ENV, &raw)?),
                Err(_) => None,
            },
        };
        let reproducible = o.reproducible || pick::<bool>(None, file, "reproducible")?.unwrap_or(false);
        let cfg = RunConfig {
            command,
            p: pick(o.p, file, "p")?.ok_or_else(|| Error::Domain("--p is required".into()))?,
            alpha: pick(o.alpha, file, "alpha")?,
            k: pick(o.k, file, "k")?,
            n_list,
            replicates: pick(o.replicates, file, "replicates")?.unwrap_or(DEFAULT_REPLICATES),
            seed: pick(o.seed, file, "seed")?.unwrap_or(DEFAULT_SEED),
            mode,
            truncation,
            format,
            output: pick(o.output, file, "output")?,
            threads: if reproducible { None } else { threads },
            reproducible,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Rejects combinations no subcommand can run, with a one-line reason.
    pub fn validate(&self) -> Result<()> {
        Source::new(self.p)?;
        if self.alpha.is_some() && self.k.is_some() {
            return Err(Error::Domain("give either --alpha or --k, not both".into()));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Domain(format!("alpha = {a} must be positive")));
            }
        }
        if self.n_list.contains(&0) {
            return Err(Error::Domain("every n must be at least 1".into()));
        }
        if self.replicates < 2 {
            return Err(Error::Domain("replicates must be at least 2".into()));
        }
        if !(self.truncation.tail_tol > 0.0) {
            return Err(Error::Domain("tail_tol must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Domain("threads must be at least 1".into()));
        }
        match self.command {
            Command::Regimes => Ok(()),
            Command::Landscape => {
                self.alpha.map(|_| ()).ok_or_else(|| Error::Domain("landscape needs --alpha".into()))
            }
            _ => {
                if self.n_list.is_empty() {
                    return Err(Error::Domain("--n is required".into()));
                }
                if self.alpha.is_none() && self.k.is_none() {
                    return Err(Error::Domain("give --alpha or --k".into()));
                }
                Ok(())
            }
        }
    }

    fn params(&self, n: u64) -> Result<ModelParams> {
        match (self.alpha, self.k) {
            (Some(a), None) => ModelParams::from_alpha(self.p, a, n),
            (None, Some(k)) => ModelParams::from_k(self.p, n, k),
            _ => Err(Error::Domain("give either --alpha or --k".into())),
        }
    }
}

/// One output record. Empty optional cells are rendered as blanks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub method: String,
    pub p: f64,
    pub alpha: Option<f64>,
    pub n: Option<u64>,
    pub k: Option<usize>,
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    pub regime: String,
    pub truncation: String,
    pub runtime_ms: f64,
    pub seed: Option<u64>,
    /// Exact rational value, when computed in exact mode.
    pub exact: String,
    /// Compact JSON with method-specific extras, or the skip reason.
    pub detail: String,
}

struct RowCtx<'a> {
    cfg: &'a RunConfig,
    params: Option<ModelParams>,
}

impl RowCtx<'_> {
    fn row(&self, method: &str, started: Instant) -> Row {
        let (alpha, n, k, regime) = match &self.params {
            Some(pr) => (Some(pr.alpha), Some(pr.n), Some(pr.k), regime_label(pr.p(), pr.alpha)),
            None => (self.cfg.alpha, None, None, self.cfg.alpha.map_or(String::new(), |a| regime_label(self.cfg.p, a))),
        };
        let runtime_ms = if self.cfg.reproducible {
            0.0
        } else {
            (started.elapsed().as_secs_f64() * 1e6).round() / 1e3
        };
        Row {
            method: method.into(),
            p: self.cfg.p,
            alpha,
            n,
            k,
            value: None,
            stderr: None,
            regime,
            truncation: "none".into(),
            runtime_ms,
            seed: None,
            exact: String::new(),
            detail: String::new(),
        }
    }

    fn skipped(&self, method: &str, reason: &str) -> Row {
        let mut row = self.row(method, Instant::now());
        row.runtime_ms = 0.0;
        row.method = format!("{method}:skipped({reason})");
        row.detail = json!({ "skipped": reason }).to_string();
        row
    }
}

fn regime_label(p: f64, alpha: f64) -> String {
    match classify(p, alpha) {
        Ok(r) => r.class.as_str().into(),
        Err(_) => "boundary".into(),
    }
}

/// Converts skippable failures into a `skipped(...)` row; anything else propagates.
fn or_skip(ctx: &RowCtx<'_>, method: &str, r: Result<Row>) -> Result<Row> {
    match r {
        Ok(row) => Ok(row),
        Err(e @ (Error::Domain(_) | Error::Resource(_) | Error::Regime(_) | Error::Boundary { .. })) => {
            Ok(ctx.skipped(method, &format!("{}: {e}", e.kind())))
        }
        Err(e) => Err(e),
    }
}

fn enumeration_row(ctx: &RowCtx<'_>, pr: &ModelParams) -> Result<Row> {
    let t = Instant::now();
    let (n, k) = (pr.n as usize, pr.k);
    if n + k - 1 > ENUMERATION_MAX_LETTERS {
        return Err(Error::Resource(format!("n + k - 1 = {} > {ENUMERATION_MAX_LETTERS} letters", n + k - 1)));
    }
    Ok(match ctx.cfg.mode {
        Mode::Exact => {
            let v: BigRational = exact_variance_enumeration(n, k, &pr.source, Exec::Auto)?;
            let mut row = ctx.row("enumeration", t);
            row.value = Some(crate::scalar::rational_to_f64(&v));
            row.exact = v.to_string();
            row
        }
        Mode::Float => {
            let v: f64 = exact_variance_enumeration(n, k, &pr.source, Exec::Auto)?;
            let mut row = ctx.row("enumeration", t);
            row.value = Some(v);
            row
        }
    })
}

fn automaton_row(ctx: &RowCtx<'_>, pr: &ModelParams) -> Result<Row> {
    let t = Instant::now();
    let (n, k) = (pr.n as usize, pr.k);
    if k > PAIR_ENUMERATION_CAP {
        return Err(Error::Resource(format!("k = {k} > {PAIR_ENUMERATION_CAP}")));
    }
    let cost = 4f64.powi(k as i32) * (n + k) as f64 * k as f64;
    if cost > AUTOMATON_COST_CAP {
        return Err(Error::Resource(format!("4^k (n+k) k = {cost:.3e} > {AUTOMATON_COST_CAP:e}")));
    }
    Ok(match ctx.cfg.mode {
        Mode::Exact => {
            let v: BigRational = variance_by_decomposition(n, k, &pr.source)?;
            let mut row = ctx.row("automaton", t);
            row.value = Some(crate::scalar::rational_to_f64(&v));
            row.exact = v.to_string();
            row
        }
        Mode::Float => {
            let v: f64 = variance_by_decomposition(n, k, &pr.source)?;
            let mut row = ctx.row("automaton", t);
            row.value = Some(v);
            row
        }
    })
}

fn roots_row(ctx: &RowCtx<'_>, pr: &ModelParams) -> Result<Row> {
    let t = Instant::now();
    let v = variance_via_roots(pr.n, pr.k, &pr.source, RadiusPolicy::Adaptive, Exec::Auto)?;
    let mut row = ctx.row("roots", t);
    row.value = Some(v.value);
    row.stderr = Some(v.error_scale);
    row.truncation = "dominant poles".into();
    row.detail = json!({
        "error_scale": v.error_scale,
        "certificate_failures": v.certificate_failures,
        "coincident_roots": v.coincident_roots,
    })
    .to_string();
    Ok(row)
}

fn simulate_row(ctx: &RowCtx<'_>, pr: &ModelParams) -> Result<Row> {
    let t = Instant::now();
    let s = simulate_profile(
        &SimulationConfig {
            params: *pr,
            replicates: ctx.cfg.replicates,
            seed: ctx.cfg.seed,
        },
        Exec::Auto,
    )?;
    let mut row = ctx.row("simulate", t);
    row.value = Some(s.variance);
    row.stderr = Some(s.stderr_variance);
    row.seed = Some(ctx.cfg.seed);
    row.truncation = format!("replicates={}", s.replicates);
    row.detail = json!({ "mean": s.mean, "full_level_fraction": s.full_level_fraction }).to_string();
    Ok(row)
}

fn asymptotic_row(ctx: &RowCtx<'_>, pr: &ModelParams) -> Result<Row> {
    let t = Instant::now();
    let r = variance_asymptotic(pr, &ctx.cfg.truncation, Exec::Auto)?;
    let mut row = ctx.row("asymptotic", t);
    row.value = Some(r.value);
    row.regime = r.regime.as_str().into();
    row.truncation = TruncationPolicy {
        ell_max: Some(r.ell_max),
        ..r.truncation
    }
    .summary();
    row.detail = json!({
        "alpha_eff": r.alpha_eff,
        "printed_value": r.printed_value,
        "components": r.components,
        "error_exponent": r.error_exponent,
        "flags": r.flags,
    })
    .to_string();
    Ok(row)
}

fn vterms_rows(ctx: &RowCtx<'_>, pr: &ModelParams) -> Result<Vec<Row>> {
    let t = Instant::now();
    let v = v_terms(pr, Exec::Auto)?;
    let trunc = if v.v2_exact { "v2=exact" } else { "v2=grouped" };
    let mk = |method: &str, value: f64| {
        let mut row = ctx.row(method, t);
        row.value = Some(value);
        row.truncation = trunc.into();
        row
    };
    let mut assembled = mk("vterms", v.assembled());
    assembled.detail = serde_json::to_string(&v).map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(vec![assembled, mk("vterms-v1", v.v1), mk("vterms-v2", v.v2), mk("vterms-v3tilde", v.v3tilde)])
}

fn regimes_rows(cfg: &RunConfig) -> Result<Vec<Row>> {
    let t = Instant::now();
    let ctx = RowCtx { cfg, params: None };
    let (a1, a2) = thresholds(cfg.p);
    let mut rows = Vec::new();
    for (method, value) in [("alpha1", a1), ("alpha2", a2), ("alpha_infinity", alpha_infinity(cfg.p))] {
        let mut row = ctx.row(method, t);
        row.value = Some(value);
        rows.push(row);
    }
    if let Some(alpha) = cfg.alpha {
        let mut row = ctx.row("classification", t);
        row.value = Some(alpha);
        match classify(cfg.p, alpha) {
            Ok(r) => row.detail = json!({ "margin": r.margin }).to_string(),
            Err(e) => row.detail = json!({ "boundary": e.to_string() }).to_string(),
        }
        rows.push(row);
    }
    Ok(rows)
}

fn landscape_rows(cfg: &RunConfig) -> Result<Vec<Row>> {
    let t = Instant::now();
    let alpha = cfg.alpha.ok_or_else(|| Error::Domain("landscape needs --alpha".into()))?;
    let params = ModelParams::from_alpha(cfg.p, alpha, LANDSCAPE_N)?;
    let report = landscape(&params, &LandscapeConfig::default(), Exec::Auto)?;
    let ctx = RowCtx { cfg, params: None };
    let mut rows = Vec::new();
    for lr in &report.rows {
        let mut row = ctx.row("landscape-argmax", t);
        row.value = lr.grid_max;
        row.detail = json!({
            "r": lr.r,
            "argmax": lr.argmax,
            "diagonal_within_cell": lr.diagonal_within_cell,
            "rho_hat": lr.rho_hat_at_argmax,
            "c_m": lr.c_m,
            "F": lr.f,
        })
        .to_string();
        rows.push(row);
    }
    for &(r, f) in &report.f_table {
        let mut row = ctx.row("landscape-F", t);
        row.value = f;
        row.detail = json!({ "r": r }).to_string();
        rows.push(row);
    }
    let mut summary = ctx.row("landscape-F0", t);
    summary.value = Some(report.f0);
    summary.detail = json!({
        "form": report.form,
        "f_prime0": report.f_prime0,
        "h_ref": report.h_ref,
        "f_max_second_diff": report.f_max_second_diff,
        "lemma8_bound": report.lemma8_bound,
        "lemma8_worst": report.lemma8_worst,
        "lemma8_holds": report.lemma8_holds,
    })
    .to_string();
    rows.push(summary);
    Ok(rows)
}

/// Runs the configured subcommand and returns its rows in emission order.
pub fn execute(cfg: &RunConfig) -> Result<Vec<Row>> {
    match cfg.command {
        Command::Regimes => return regimes_rows(cfg),
        Command::Landscape => return landscape_rows(cfg),
        _ => {}
    }
    let mut n_list = cfg.n_list.clone();
    n_list.sort_unstable();
    n_list.dedup();
    let mut rows = Vec::new();
    for n in n_list {
        let params = cfg.params(n)?;
        let ctx = RowCtx {
            cfg,
            params: Some(params),
        };
        match cfg.command {
            Command::Exact => {
                let mut batch = vec![
                    or_skip(&ctx, "enumeration", enumeration_row(&ctx, &params))?,
                    or_skip(&ctx, "automaton", automaton_row(&ctx, &params))?,
                    or_skip(&ctx, "roots", roots_row(&ctx, &params))?,
                ];
                if batch.iter().all(|r| r.value.is_none()) {
                    return Err(Error::Resource(format!("no exact method applies at n = {n}, k = {}", params.k)));
                }
                rows.append(&mut batch);
            }
            Command::Simulate => rows.push(simulate_row(&ctx, &params)?),
            Command::Asymptotic => rows.push(asymptotic_row(&ctx, &params)?),
            Command::Vterms => rows.extend(vterms_rows(&ctx, &params)?),
            Command::Compare => {
                rows.push(or_skip(&ctx, "enumeration", enumeration_row(&ctx, &params))?);
                rows.push(or_skip(&ctx, "automaton", automaton_row(&ctx, &params))?);
                rows.push(or_skip(&ctx, "roots", roots_row(&ctx, &params))?);
                match vterms_rows(&ctx, &params) {
                    Ok(mut v) => rows.append(&mut v),
                    Err(e) => rows.push(or_skip(&ctx, "vterms", Err(e))?),
                }
                rows.push(or_skip(&ctx, "asymptotic", asymptotic_row(&ctx, &params))?);
                rows.push(or_skip(&ctx, "simulate", simulate_row(&ctx, &params))?);
            }
            Command::Regimes | Command::Landscape => unreachable!(),
        }
    }
    Ok(rows)
}

/// Renders rows with the resolved config as a header: a `# config:` line
/// before the CSV table, or a `config` key beside `rows` in JSON.
pub fn render(cfg: &RunConfig, rows: &[Row]) -> Result<String> {
    let header = serde_json::to_string(cfg).map_err(|e| Error::Numeric(e.to_string()))?;
    match cfg.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows {
                w.serialize(row).map_err(|e| Error::Numeric(e.to_string()))?;
            }
            let body = w.into_inner().map_err(|e| Error::Numeric(e.to_string()))?;
            let body = String::from_utf8(body).map_err(|e| Error::Numeric(e.to_string()))?;
            Ok(format!("# config: {header}\n{body}"))
        }
        Format::Json => {
            let doc = json!({ "config": cfg, "rows": rows });
            serde_json::to_string_pretty(&doc)
                .map(|s| s + "\n")
                .map_err(|e| Error::Numeric(e.to_string()))
        }
    }
}

/// Executes, renders and writes to `cfg.output` or standard output.
pub fn run(cfg: &RunConfig) -> Result<()> {
    crate::par::configure_threads(cfg.threads);
    let text = render(cfg, &execute(cfg)?)?;
    match &cfg.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Resource(format!("cannot write {}: {e}", path.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::Resource(format!("cannot write to stdout: {e}")))
        }
    }
}

/// Machine-readable error record for standard error.
pub fn error_record(e: &Error) -> String {
    json!({ "error": e.kind(), "message": e.to_string(), "exit_code": e.exit_code() }).to_string()
}
