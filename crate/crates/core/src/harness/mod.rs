//! End-to-end verification: profile, non-singularity, bounds, counts and
//! densities for one system, ending in a table of `N(P) / P^{s-K}` against `C`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::{default_bounds, BoundReport, PluginRegistry};
use crate::counting::{count_solutions, CountCache, CountResult, Method, RangeKind, RangeSpec};
use crate::density::{
    bigfmt, chi_inf, predicted_constant, singular_series, ChiInfEstimate, ChiInfMethod, DepthPolicy,
    PredictedConstant, DEFAULT_PRIME_BOUND,
};
use crate::error::{Error, Result};
use crate::system::{check_highly_nonsingular, derive_profile, parse_system, AdditiveSystem, CheckMode, NonSingularityReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Text,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "text" => Ok(ReportFormat::Text),
            _ => Err(Error::invalid(format!("unknown format '{s}' (json, csv, text)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyPlan {
    pub system_path: Option<PathBuf>,
    #[serde(rename = "P_ladder")]
    pub p_ladder: Vec<u64>,
    pub range_kind: RangeKind,
    pub eta: Option<f64>,
    pub method: Method,
    pub prime_bound: u64,
    pub depth: DepthPolicy,
    pub chi_inf: ChiInfMethod,
    pub check: CheckMode,
    pub format: ReportFormat,
    pub seed: u64,
    /// run past a failed non-singularity check, recording it as a caveat
    pub force: bool,
    pub cache_dir: Option<PathBuf>,
}

impl Default for VerifyPlan {
    fn default() -> Self {
        VerifyPlan {
            system_path: None,
            p_ladder: Vec::new(),
            range_kind: RangeKind::Full,
            eta: None,
            method: Method::Mitm,
            prime_bound: DEFAULT_PRIME_BOUND,
            depth: DepthPolicy::default(),
            chi_inf: ChiInfMethod::default(),
            check: CheckMode::default(),
            format: ReportFormat::Json,
            seed: 0,
            force: false,
            cache_dir: None,
        }
    }
}

impl VerifyPlan {
    pub fn validate(&self) -> Result<()> {
        if self.p_ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("P ladder must be strictly increasing"));
        }
        if self.p_ladder.first() == Some(&0) {
            return Err(Error::invalid("P must be positive"));
        }
        if self.prime_bound < 2 || self.depth.max_depth == 0 || !(self.depth.tolerance > 0.0) {
            return Err(Error::invalid("prime bound, depth and tolerance must be positive"));
        }
        match self.chi_inf {
            ChiInfMethod::Volume { samples, .. } if samples == 0 => {
                return Err(Error::invalid("sample budget must be positive"));
            }
            _ => {}
        }
        if let CheckMode::Exhaustive { budget: 0 } = self.check {
            return Err(Error::invalid("minor budget must be positive"));
        }
        Ok(())
    }

    fn range(&self, p: u64) -> RangeSpec {
        match self.range_kind {
            RangeKind::Full => RangeSpec::full(p),
            RangeKind::Smooth => RangeSpec::smooth(p, self.eta.unwrap_or(crate::counting::DEFAULT_ETA)),
            RangeKind::Dyadic => RangeSpec::dyadic(p),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub s: usize,
    pub r: usize,
    pub degrees: Vec<u32>,
    pub mu: Vec<usize>,
    pub nu: Vec<usize>,
    #[serde(rename = "K")]
    pub total_degree: u64,
    #[serde(rename = "M")]
    pub m: usize,
    /// the exponent of `P` in the ratios
    pub s_minus_k: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    #[serde(rename = "P")]
    pub p: u64,
    #[serde(rename = "N")]
    pub n: u128,
    pub ratio: f64,
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalSummary {
    pub p: u64,
    pub depth: u32,
    /// exact rational
    pub chi: String,
    pub chi_f64: f64,
    pub stabilized: bool,
    pub hensel_certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub last_ratio: f64,
    pub relative_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub system: String,
    pub system_digest: String,
    pub profile: Option<ProfileSummary>,
    pub nonsingular: Option<NonSingularityReport>,
    pub bounds: Option<BoundReport>,
    pub counts: Vec<CountRow>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    #[serde(rename = "C_error")]
    pub c_error: Option<f64>,
    pub constant: Option<PredictedConstant>,
    pub chi_inf: Option<ChiInfEstimate>,
    pub series_product: Option<String>,
    pub locals: Vec<LocalSummary>,
    pub convergence: Option<Convergence>,
    pub caveats: Vec<String>,
    /// set on a partial report written after a stage failed
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
}

impl VerifyReport {
    fn empty(sys: &AdditiveSystem) -> Self {
        VerifyReport {
            system: sys.to_canonical_text(),
            system_digest: sys.digest(),
            profile: None,
            nonsingular: None,
            bounds: None,
            counts: Vec::new(),
            c: None,
            c_error: None,
            constant: None,
            chi_inf: None,
            series_product: None,
            locals: Vec::new(),
            convergence: None,
            caveats: Vec::new(),
            failed_stage: None,
        }
    }
}

pub fn load_system(path: &Path) -> Result<AdditiveSystem> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        AdditiveSystem::from_json(&text)
    } else {
        parse_system(&text)
    }
}

/// Loads the plan's system file and runs the pipeline on it.
pub fn run_verify(plan: &VerifyPlan) -> Result<VerifyReport> {
    let path = plan
        .system_path
        .as_deref()
        .ok_or_else(|| Error::invalid("plan has no system file"))?;
    let sys = load_system(path).map_err(|e| e.in_stage("parse"))?;
    run_verify_system(&sys, plan)
}

/// Runs the pipeline. On a stage failure the partial report is written next
/// to the cache (when one is configured) and the error names the stage.
pub fn run_verify_system(sys: &AdditiveSystem, plan: &VerifyPlan) -> Result<VerifyReport> {
    plan.validate()?;
    let cache = match &plan.cache_dir {
        Some(d) => Some(CountCache::new(d)?),
        None => CountCache::from_env()?,
    };
    let mut report = VerifyReport::empty(sys);
    match pipeline(sys, plan, cache.as_ref(), &mut report) {
        Ok(()) => Ok(report),
        Err((stage, e)) => {
            report.failed_stage = Some(stage.to_string());
            report.caveats.push(format!("{stage}: {e}"));
            if let Some(c) = &cache {
                let path = c.dir().join(format!("verify-{}.partial.json", &report.system_digest[..16]));
                match serde_json::to_string_pretty(&report) {
                    Ok(text) => {
                        if let Err(err) = std::fs::write(&path, text) {
                            log::warn!("could not persist partial report: {err}");
                        } else {
                            log::info!("partial report written to {}", path.display());
                        }
                    }
                    Err(err) => log::warn!("could not serialize partial report: {err}"),
                }
            }
            Err(e.in_stage(stage))
        }
    }
}

type StageResult = std::result::Result<(), (&'static str, Error)>;

fn pipeline(sys: &AdditiveSystem, plan: &VerifyPlan, cache: Option<&CountCache>, report: &mut VerifyReport) -> StageResult {
    report.caveats.extend(sys.caveats());

    let prof = derive_profile(sys);
    let s_minus_k = sys.s() as i64 - prof.total_degree as i64;
    report.profile = Some(ProfileSummary {
        s: sys.s(),
        r: sys.r(),
        degrees: sys.degrees().to_vec(),
        mu: prof.mu.clone(),
        nu: prof.nu.clone(),
        total_degree: prof.total_degree,
        m: prof.m,
        s_minus_k,
    });
    if s_minus_k <= 1 {
        let msg = format!("s - K = {s_minus_k}: slow convergence expected, the o(1) term dominates at this scale");
        log::warn!("{msg}");
        report.caveats.push(msg);
    }

    let ns = check_highly_nonsingular(sys, &prof, plan.check).map_err(|e| ("nonsingular", e))?;
    report.nonsingular = Some(ns.clone());
    if !ns.holds {
        let what = ns
            .witness
            .as_ref()
            .map(|w| w.to_string())
            .unwrap_or_else(|| "no witness".to_string());
        if !plan.force {
            return Err(("nonsingular", Error::NotHighlyNonSingular(what)));
        }
        report.caveats.push(format!("forced past failed non-singularity check: {what}"));
    } else if !ns.certified {
        report.caveats.push("non-singularity only sampled, not decided".to_string());
    }

    match default_bounds(&prof, &PluginRegistry::default()) {
        Ok(b) => report.bounds = Some(b),
        Err(e @ Error::InvalidInput(_)) => report.caveats.push(format!("bounds: {e}")),
        Err(e) => return Err(("bounds", e)),
    }
    if let Some(b) = &report.bounds {
        if let Some(g) = b.tg_star_upper {
            if (sys.s() as u64) < g {
                report.caveats.push(format!("s = {} is below the full-range bound {g}", sys.s()));
            }
        }
    }

    if plan.range_kind != RangeKind::Full {
        report
            .caveats
            .push(format!("{:?} range: C describes the full box, ratios are not expected to approach it", plan.range_kind));
    }
    for &p in &plan.p_ladder {
        let range = plan.range(p);
        let res: CountResult = match cache {
            Some(c) => {
                let (res, hit) = c
                    .get_or_compute(&sys.digest(), &range, plan.method, || count_solutions(sys, &range, plan.method))
                    .map_err(|e| ("count", e))?;
                log::info!("P = {p}: N = {} ({})", res.count, if hit { "cached" } else { "computed" });
                res
            }
            None => count_solutions(sys, &range, plan.method).map_err(|e| ("count", e))?,
        };
        report.counts.push(CountRow {
            p,
            n: res.count,
            ratio: res.count as f64 / (p as f64).powi(s_minus_k as i32),
            wall_time: res.wall_time,
        });
    }

    let series = singular_series(sys, plan.prime_bound, &plan.depth).map_err(|e| ("series", e))?;
    report.locals = series
        .local
        .iter()
        .map(|d| LocalSummary {
            p: d.p,
            depth: d.depth,
            chi: bigfmt::rat_to_string(&d.chi()),
            chi_f64: d.chi_f64(),
            stabilized: d.stabilized,
            hensel_certified: d.hensel_certified,
        })
        .collect();
    report.series_product = Some(series.product_decimal.clone());
    report.caveats.extend(series.caveats.iter().cloned());

    let method = match plan.chi_inf.clone() {
        ChiInfMethod::Volume {
            eps0, levels, samples, batches, ..
        } => ChiInfMethod::Volume {
            eps0,
            levels,
            samples,
            batches,
            seed: plan.seed,
        },
        m => m,
    };
    let chi = chi_inf(sys, &method).map_err(|e| ("chi_inf", e))?;
    if chi.unstable {
        report.caveats.push("chi_inf ladder is unstable".to_string());
    }
    let constant = predicted_constant(&chi, &series);
    report.c = Some(constant.c);
    report.c_error = Some(constant.error);
    if let Some(last) = report.counts.last() {
        report.convergence = Some(Convergence {
            last_ratio: last.ratio,
            relative_deviation: if constant.c != 0.0 {
                (last.ratio - constant.c).abs() / constant.c.abs()
            } else {
                f64::INFINITY
            },
        });
    }
    report.constant = Some(constant);
    report.chi_inf = Some(chi);
    Ok(())
}

/// Renders a report. JSON is lossless, CSV holds the per-P rows, text is a
/// summary plus an aligned table.
pub fn emit_report(report: &VerifyReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
            w.write_record(["P", "N", "ratio", "wall_time"]).map_err(io)?;
            for row in &report.counts {
                w.write_record([
                    row.p.to_string(),
                    row.n.to_string(),
                    format!("{:e}", row.ratio),
                    format!("{:.6}", row.wall_time),
                ])
                .map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
            Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
        }
        ReportFormat::Text => Ok(text_report(report)),
    }
}

fn text_report(rep: &VerifyReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "system {}", &rep.system_digest[..16]);
    for line in rep.system.lines() {
        let _ = writeln!(out, "  {}", truncate(line, 96));
    }
    if let Some(p) = &rep.profile {
        let _ = writeln!(out, "s = {}  r = {}  K = {}  M = {}  s - K = {}", p.s, p.r, p.total_degree, p.m, p.s_minus_k);
    }
    if let Some(ns) = &rep.nonsingular {
        let _ = writeln!(
            out,
            "highly non-singular: {}{}",
            if ns.holds { "yes" } else { "no" },
            if ns.certified { "" } else { " (sampled)" }
        );
    }
    if let Some(b) = &rep.bounds {
        let fmt = |v: Option<u64>| v.map_or("-".to_string(), |x| x.to_string());
        let _ = writeln!(out, "G* <= {}  G~* <= {}", fmt(b.g_star_upper), fmt(b.tg_star_upper));
    }
    if let (Some(c), Some(err)) = (rep.c, rep.c_error) {
        let _ = writeln!(out, "C = {c:.6} +- {err:.2e}");
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{:>8}  {:>24}  {:>14}  {:>10}", "P", "N", "ratio", "seconds");
    for row in &rep.counts {
        let _ = writeln!(out, "{:>8}  {:>24}  {:>14.6e}  {:>10.3}", row.p, row.n, row.ratio, row.wall_time);
    }
    if let Some(c) = &rep.convergence {
        let _ = writeln!(out, "\nlast ratio {:.6}, relative deviation from C {:.4}", c.last_ratio, c.relative_deviation);
    }
    for c in &rep.caveats {
        let _ = writeln!(out, "note: {}", truncate(c, 94));
    }
    out
}

fn truncate(s: &str, width: usize) -> String {
    if s.chars().count() <= width {
        s.to_string()
    } else {
        let mut t: String = s.chars().take(width - 3).collect();
        t.push_str("...");
        t
    }
}
