use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use addsys::bounds::{default_bounds, kncor_bounds, maincor_bound, quadcub_bounds, PluginRegistry};
use addsys::counting::{
    block_bound_diagnostic, count_solutions, mean_value_J, slope_estimate, BlockPartition, CountCache, Method,
    RangeKind, RangeSpec, CACHE_ENV, DEFAULT_ETA,
};
use addsys::density::{chi_inf, singular_series, ChiInfMethod, DepthPolicy, DEFAULT_PRIME_BOUND};
use addsys::expsum::{
    classify_arc, envelope_scan, default_envelope_grid, f_eval_range, sqa_bound_scan, weyl_diagnostic, ArcParams,
    ArcStyle,
};
use addsys::harness::{emit_report, load_system, run_verify, ReportFormat, VerifyPlan};
use addsys::system::{check_highly_nonsingular, derive_profile, CheckMode, DEFAULT_MINOR_BUDGET};
use addsys::{AdditiveSystem, DegreeProfile};

/// Solution counts, local densities and variable bounds for systems of
/// diagonal equations.
#[derive(Parser, Debug)]
#[command(name = "addsys", version, about)]
struct Cli {
    /// Output format: json, csv or text
    #[arg(long, global = true, default_value = "json")]
    format: ReportFormat,

    /// Directory for cached counts
    #[arg(long, global = true, env = CACHE_ENV)]
    cache_dir: Option<PathBuf>,

    /// Seed for every randomized step
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct SystemArg {
    /// System file (text or JSON)
    #[arg(long)]
    system: PathBuf,
}

#[derive(Args, Debug)]
struct RangeArgs {
    /// full, smooth or dyadic
    #[arg(long, default_value = "full")]
    range: RangeKind,
    /// Smoothness exponent for the smooth range
    #[arg(long)]
    eta: Option<f64>,
}

impl RangeArgs {
    fn spec(&self, p: u64) -> RangeSpec {
        match self.range {
            RangeKind::Full => RangeSpec::full(p),
            RangeKind::Smooth => RangeSpec::smooth(p, self.eta.unwrap_or(DEFAULT_ETA)),
            RangeKind::Dyadic => RangeSpec::dyadic(p),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether the system is highly non-singular
    Check {
        #[command(flatten)]
        sys: SystemArg,
        /// Sample random minors instead of checking them all
        #[arg(long)]
        randomized: bool,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_MINOR_BUDGET)]
        budget: u128,
    },
    /// Degree profile of a system
    Profile {
        #[command(flatten)]
        sys: SystemArg,
    },
    /// Variable bounds for a system, a degree list or a named family
    Bounds {
        #[arg(long, conflicts_with_all = ["degrees", "kn", "quadcub"])]
        system: Option<PathBuf>,
        /// Comma separated degrees
        #[arg(long, value_delimiter = ',')]
        degrees: Option<Vec<u32>>,
        /// `k,n` for the (k,k,n), (k,k,n,n) and (k,n,n) families
        #[arg(long, value_delimiter = ',', num_args = 1)]
        kn: Option<Vec<u32>>,
        /// `rQ,rC` quadratic and cubic equation counts
        #[arg(long, value_delimiter = ',', num_args = 1)]
        quadcub: Option<Vec<u64>>,
        /// JSON list of mean value plug-ins replacing the defaults
        #[arg(long)]
        plugins: Option<PathBuf>,
    },
    /// Count solutions in a box
    Count {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long = "P-list", alias = "P", value_delimiter = ',', required = true)]
        p_list: Vec<u64>,
        #[command(flatten)]
        range: RangeArgs,
        #[arg(long, default_value = "mitm")]
        method: Method,
    },
    /// Mean values J_{u,k}, or I against its J bounds when a system is given
    Meanvalue {
        /// Variables per side (J), or per block and level (I) as a comma list
        #[arg(long, value_delimiter = ',', required = true)]
        u: Vec<usize>,
        /// Exponents of the symmetric system (J)
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<u32>>,
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long = "P-list", value_delimiter = ',', required = true)]
        p_list: Vec<u64>,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Major/minor arc classification and Weyl-type diagnostics
    Arcs {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long = "X")]
        x: f64,
        #[arg(long = "Q")]
        q: f64,
        #[arg(long = "P")]
        p: f64,
        /// m or n
        #[arg(long, default_value = "m")]
        style: String,
        /// Classify this point only (comma separated, one entry per equation)
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alpha: Option<Vec<f64>>,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
    },
    /// Exponential sums: f(gamma), the S(q,a) scan or the v-integral envelope
    Expsum {
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<u32>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        gamma: Option<Vec<f64>>,
        #[arg(long = "P")]
        p: Option<u64>,
        #[command(flatten)]
        range: RangeArgs,
        /// Scan |S(q,a)| over q up to this bound
        #[arg(long)]
        scan_q: Option<u64>,
        /// Scan the v-integral envelope at this P
        #[arg(long)]
        envelope: Option<f64>,
    },
    /// Truncated singular series
    Series {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long, default_value_t = DEFAULT_PRIME_BOUND)]
        prime_bound: u64,
        #[arg(long, default_value_t = 6)]
        depth: u32,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Real density chi_inf
    Integral {
        #[command(flatten)]
        sys: SystemArg,
        #[command(flatten)]
        chi: ChiArgs,
    },
    /// Full pipeline with a ratio table against the predicted constant
    Verify {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long = "P-list", value_delimiter = ',', required = true)]
        p_list: Vec<u64>,
        #[command(flatten)]
        range: RangeArgs,
        #[arg(long, default_value = "mitm")]
        count_method: Method,
        #[arg(long, default_value_t = DEFAULT_PRIME_BOUND)]
        prime_bound: u64,
        #[arg(long, default_value_t = 6)]
        depth: u32,
        #[command(flatten)]
        chi: ChiArgs,
        /// Continue past a failed non-singularity check
        #[arg(long)]
        force: bool,
    },
}

#[derive(Args, Debug)]
struct ChiArgs {
    /// volume or fourier
    #[arg(long, default_value = "volume")]
    method: String,
    #[arg(long, default_value_t = 4_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0.1)]
    eps0: f64,
    #[arg(long, default_value_t = 3)]
    levels: usize,
    #[arg(long, default_value_t = 50.0)]
    beta_box: f64,
}

impl ChiArgs {
    fn method(&self, seed: u64) -> anyhow::Result<ChiInfMethod> {
        Ok(match self.method.as_str() {
            "volume" => ChiInfMethod::Volume {
                eps0: self.eps0,
                levels: self.levels,
                samples: self.samples,
                batches: 64,
                seed,
            },
            "fourier" => ChiInfMethod::fourier(self.beta_box),
            other => return Err(addsys::Error::invalid(format!("unknown chi_inf method '{other}'")).into()),
        })
    }
}

fn system(path: &Path) -> anyhow::Result<AdditiveSystem> {
    load_system(path).with_context(|| format!("reading {}", path.display()))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes") + "\n"
}

/// Prints `value` as JSON, or the given CSV/text rendering when there is one.
fn emit(format: ReportFormat, value: Value, csv: Option<String>, text: Option<String>) {
    let out = match format {
        ReportFormat::Json => pretty(&value),
        ReportFormat::Csv => csv.unwrap_or_else(|| {
            log::warn!("no csv layout for this command, writing json");
            pretty(&value)
        }),
        ReportFormat::Text => text.unwrap_or_else(|| pretty(&value)),
    };
    print!("{out}");
}

fn profile_text(sys: &AdditiveSystem, prof: &DegreeProfile) -> String {
    format!(
        "s = {}  r = {}  degrees {:?}\nt = {}  mu = {:?}  nu = {:?}  K = {}  M = {}  varpi = {:?}  k~ = {:?}\n",
        sys.s(),
        sys.r(),
        sys.degrees(),
        prof.t,
        prof.mu,
        prof.nu,
        prof.total_degree,
        prof.m,
        prof.varpi,
        prof.k_tilde
    )
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let fmt = cli.format;
    let cache = match &cli.cache_dir {
        Some(d) => Some(CountCache::new(d)?),
        None => None,
    };
    match cli.command {
        Command::Check {
            sys,
            randomized,
            trials,
            budget,
        } => {
            let sys = system(&sys.system)?;
            let prof = derive_profile(&sys);
            let mode = if randomized {
                CheckMode::Randomized { seed: cli.seed, trials }
            } else {
                CheckMode::Exhaustive { budget }
            };
            let rep = check_highly_nonsingular(&sys, &prof, mode)?;
            let text = match &rep.witness {
                None if rep.certified => "highly non-singular\n".to_string(),
                None => format!("no vanishing minor among {} sampled\n", rep.minors_checked),
                Some(w) => format!("not highly non-singular: {w}\n"),
            };
            emit(fmt, serde_json::to_value(&rep)?, None, Some(text));
            if let Some(w) = rep.witness {
                return Err(addsys::Error::NotHighlyNonSingular(w.to_string()).into());
            }
        }
        Command::Profile { sys } => {
            let sys = system(&sys.system)?;
            let prof = derive_profile(&sys);
            let text = profile_text(&sys, &prof);
            emit(fmt, serde_json::to_value(&prof)?, None, Some(text));
        }
        Command::Bounds {
            system: path,
            degrees,
            kn,
            quadcub,
            plugins,
        } => {
            let registry = match plugins {
                Some(p) => PluginRegistry::from_json(&std::fs::read_to_string(&p)?)?,
                None => PluginRegistry::default(),
            };
            let value = if let Some(kn) = kn {
                let [k, n] = kn[..] else { bail!(addsys::Error::invalid("--kn takes k,n")) };
                serde_json::to_value(kncor_bounds(k, n)?)?
            } else if let Some(qc) = quadcub {
                let [rq, rc] = qc[..] else { bail!(addsys::Error::invalid("--quadcub takes rQ,rC")) };
                serde_json::to_value(quadcub_bounds(rq, rc)?)?
            } else {
                let prof = match (path, degrees) {
                    (Some(p), _) => derive_profile(&system(&p)?),
                    (None, Some(d)) => DegreeProfile::from_degrees(&d)?,
                    (None, None) => bail!(addsys::Error::invalid("give --system, --degrees, --kn or --quadcub")),
                };
                let mut v = json!({ "profile": prof, "default": default_bounds(&prof, &registry)? });
                if let Ok(m) = maincor_bound(&prof) {
                    v["all_degrees_at_least_3"] = serde_json::to_value(m)?;
                }
                v
            };
            emit(fmt, value, None, None);
        }
        Command::Count {
            sys,
            p_list,
            range,
            method,
        } => {
            let sys = system(&sys.system)?;
            let digest = sys.digest();
            let mut rows = Vec::new();
            for p in p_list {
                let spec = range.spec(p);
                let res = match &cache {
                    Some(c) => c.get_or_compute(&digest, &spec, method, || count_solutions(&sys, &spec, method))?.0,
                    None => count_solutions(&sys, &spec, method)?,
                };
                rows.push(res);
            }
            let csv = rows.iter().fold("P,N,wall_time\n".to_string(), |acc, r| {
                acc + &format!("{},{},{:.6}\n", r.range.p, r.count, r.wall_time)
            });
            let text = rows.iter().fold(String::new(), |acc, r| {
                acc + &format!("{:>8}  {:>24}  {:>10.3}s\n", r.range.p, r.count, r.wall_time)
            });
            emit(fmt, serde_json::to_value(&rows)?, Some(csv), Some(text));
        }
        Command::Meanvalue {
            u,
            k,
            system: path,
            p_list,
            range,
        } => {
            if let Some(path) = path {
                let sys = system(&path)?;
                let prof = derive_profile(&sys);
                let part = BlockPartition::sequential(&prof, &u, sys.s())?;
                let diag = block_bound_diagnostic(&sys, &part, &range.spec(1), &p_list)?;
                emit(fmt, serde_json::to_value(&diag)?, None, None);
            } else {
                let k = k.ok_or_else(|| addsys::Error::invalid("--k is required without --system"))?;
                let [u] = u[..] else { bail!(addsys::Error::invalid("J takes a single --u")) };
                let mut rows = Vec::new();
                for &p in &p_list {
                    rows.push((p, mean_value_J(u, &k, &range.spec(p))?.count));
                }
                let fit = if rows.len() >= 3 { Some(slope_estimate(&rows)?) } else { None };
                let csv = rows.iter().fold("P,J\n".to_string(), |acc, (p, j)| acc + &format!("{p},{j}\n"));
                let value = json!({
                    "u": u,
                    "k": k,
                    "counts": rows.iter().map(|(p, j)| json!({"P": p, "J": j})).collect::<Vec<_>>(),
                    "fit": fit,
                });
                emit(fmt, value, Some(csv), None);
            }
        }
        Command::Arcs {
            sys,
            x,
            q,
            p,
            style,
            alpha,
            samples,
            epsilon,
        } => {
            let sys = system(&sys.system)?;
            let params = ArcParams::new(x, q, p)?;
            let style = match style.as_str() {
                "m" | "M" => ArcStyle::M,
                "n" | "N" => ArcStyle::N,
                other => bail!(addsys::Error::invalid(format!("unknown arc style '{other}'"))),
            };
            let value = match alpha {
                Some(a) => serde_json::to_value(classify_arc(&a, &params, sys.degrees(), style)?)?,
                None => serde_json::to_value(weyl_diagnostic(&sys, &params, style, samples, cli.seed, epsilon)?)?,
            };
            emit(fmt, value, None, None);
        }
        Command::Expsum {
            k,
            gamma,
            p,
            range,
            scan_q,
            envelope,
        } => {
            let value = if let Some(qmax) = scan_q {
                serde_json::to_value(sqa_bound_scan(qmax, &k)?)?
            } else if let Some(pp) = envelope {
                let kmax = *k.iter().max().unwrap_or(&1) as f64;
                serde_json::to_value(envelope_scan(&k, pp, 0.0, 1.0 / kmax, &default_envelope_grid())?)?
            } else {
                let gamma = gamma.ok_or_else(|| addsys::Error::invalid("give --gamma, --scan-q or --envelope"))?;
                let p = p.ok_or_else(|| addsys::Error::invalid("--P is required with --gamma"))?;
                let f = f_eval_range(&gamma, &k, &range.spec(p))?;
                json!({ "re": f.re, "im": f.im, "abs": f.norm() })
            };
            emit(fmt, value, None, None);
        }
        Command::Series {
            sys,
            prime_bound,
            depth,
            tolerance,
        } => {
            let sys = system(&sys.system)?;
            let policy = DepthPolicy {
                max_depth: depth,
                tolerance,
                seed: cli.seed,
                ..DepthPolicy::default()
            };
            let rep = singular_series(&sys, prime_bound, &policy)?;
            let csv = rep.local.iter().fold("p,depth,chi,stabilized\n".to_string(), |acc, d| {
                acc + &format!("{},{},{:e},{}\n", d.p, d.depth, d.chi_f64(), d.stabilized)
            });
            let mut text = format!(
                "product over p <= {}: {}{}\n",
                rep.prime_bound,
                rep.product_decimal,
                if rep.provisional { " (provisional)" } else { "" }
            );
            for d in &rep.local {
                text += &format!("{:>6}  depth {}  chi {:.12}{}\n", d.p, d.depth, d.chi_f64(), if d.stabilized { "" } else { "  *" });
            }
            emit(fmt, serde_json::to_value(&rep)?, Some(csv), Some(text));
        }
        Command::Integral { sys, chi } => {
            let sys = system(&sys.system)?;
            let est = chi_inf(&sys, &chi.method(cli.seed)?)?;
            let text = format!(
                "chi_inf = {:.6} +- {:.2e} (statistical) +- {:.2e} (extrapolation){}\n",
                est.value,
                est.statistical_error,
                est.extrapolation_error,
                if est.unstable { "  unstable" } else { "" }
            );
            emit(fmt, serde_json::to_value(&est)?, None, Some(text));
        }
        Command::Verify {
            sys,
            p_list,
            range,
            count_method,
            prime_bound,
            depth,
            chi,
            force,
        } => {
            let plan = VerifyPlan {
                system_path: Some(sys.system),
                p_ladder: p_list,
                range_kind: range.range,
                eta: range.eta,
                method: count_method,
                prime_bound,
                depth: DepthPolicy {
                    max_depth: depth,
                    seed: cli.seed,
                    ..DepthPolicy::default()
                },
                chi_inf: chi.method(cli.seed)?,
                format: fmt,
                seed: cli.seed,
                force,
                cache_dir: cli.cache_dir.clone(),
                ..VerifyPlan::default()
            };
            let rep = run_verify(&plan)?;
            print!("{}", emit_report(&rep, fmt)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.chain().find_map(|c| c.downcast_ref::<addsys::Error>()).map_or(1, |ae| ae.exit_code());
            ExitCode::from(code as u8)
        }
    }
}
