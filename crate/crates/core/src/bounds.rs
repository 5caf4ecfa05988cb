//! Upper bounds for the number of variables needed for the Hasse principle
//! (`G*`) and for the asymptotic formula (`G~*`).
//!
//! Both bounds take the form `2 * sum_h (mu_h - mu_{h+1}) * s_h + tail` where
//! `s_h = max(plugin_h, k(1 + varpi_h) / 2)`. The second argument can be a
//! half-integer, so every `s_h` is carried doubled and the sums stay integral.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::DegreeProfile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PluginKind {
    /// Smooth-range exponent `u_0`: used for `G*`.
    U0,
    /// Full-range exponent `v_0`: used for `G~*`.
    V0,
}

impl PluginKind {
    pub fn range_name(self) -> &'static str {
        match self {
            PluginKind::U0 => "smooth",
            PluginKind::V0 => "full",
        }
    }
}

/// A mean value exponent taken from the literature.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeanValuePlugin {
    pub kind: PluginKind,
    /// The exponent set, ascending.
    pub degrees: Vec<u32>,
    pub value: u64,
    pub source: String,
    #[serde(default)]
    pub applicable: String,
    /// Set when the value stands for a bound of the form `(1 + o(1)) * value`.
    #[serde(default)]
    pub asymptotic: bool,
    #[serde(default)]
    pub caveats: Vec<String>,
}

fn normalized(k_vec: &[u32]) -> Result<Vec<u32>> {
    if k_vec.is_empty() {
        return Err(Error::invalid("exponent list is empty"));
    }
    if k_vec.contains(&0) {
        return Err(Error::invalid("exponents must be at least 1"));
    }
    let mut ks = k_vec.to_vec();
    ks.sort_unstable();
    if ks.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid(format!("exponents must be distinct: {k_vec:?}")));
    }
    Ok(ks)
}

/// Default full-range exponent `v_0(k)`.
pub fn v0_estimate(k_vec: &[u32]) -> Result<MeanValuePlugin> {
    let ks = normalized(k_vec)?;
    let top = *ks.last().unwrap() as u64;
    let mut caveats = Vec::new();
    let (value, source, applicable) = if ks == [1] {
        (1, "orthogonality: x_1 = x_2 forced", "k = (1)")
    } else if ks == [2] {
        (2, "Hua's lemma", "k = (2)")
    } else if top == 2 {
        // (1, 2): the quadratic Vinogradov system
        caveats.push("degree-2 Vinogradov system: value k(k+1)/2 from the main conjecture".to_string());
        (3, "Vinogradov mean value theorem, k = 2", "k = (1, 2)")
    } else {
        if ks.len() > 1 || ks[0] != top as u32 {
            caveats.push(format!(
                "estimated trivially by the complete system v_0(1, ..., {top})"
            ));
        }
        (
            top * (top - 1),
            "efficient congruencing bound v_0 <= k(k-1)",
            "max exponent >= 3",
        )
    };
    Ok(MeanValuePlugin {
        kind: PluginKind::V0,
        degrees: ks,
        value,
        source: source.to_string(),
        applicable: applicable.to_string(),
        asymptotic: false,
        caveats,
    })
}

/// `H(k) = k~ * varpi * (ln k~ + 3 ln varpi)`, natural logarithms.
pub fn h_function(k_vec: &[u32]) -> f64 {
    let top = *k_vec.iter().max().unwrap_or(&1) as f64;
    let w = k_vec.len() as f64;
    top * w * (top.ln() + 3.0 * w.ln())
}

/// Default smooth-range exponent: `ceil(H(k))`, standing for `(1 + o(1)) H(k)`.
pub fn u0_estimate(k_vec: &[u32]) -> Result<MeanValuePlugin> {
    let ks = normalized(k_vec)?;
    let h = h_function(&ks);
    let value = (h.ceil() as u64).max(1);
    Ok(MeanValuePlugin {
        kind: PluginKind::U0,
        degrees: ks,
        value,
        source: "smooth Weyl sum mean values: u_0 <= (1 + o(1)) H(k)".to_string(),
        applicable: "any exponent set".to_string(),
        asymptotic: true,
        caveats: vec![format!(
            "u_0 taken as ceil(H) = {value} (H = {h:.4}); the (1 + o(1)) factor is not effective"
        )],
    })
}

/// User-supplied plug-ins that replace the defaults on an exact exponent-set match.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PluginRegistry {
    pub overrides: Vec<MeanValuePlugin>,
}

impl PluginRegistry {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut reg: PluginRegistry = serde_json::from_str(text)?;
        for p in &mut reg.overrides {
            p.degrees = normalized(&p.degrees)?;
            if p.value == 0 {
                return Err(Error::invalid(format!(
                    "plug-in for {:?} has value 0",
                    p.degrees
                )));
            }
        }
        Ok(reg)
    }

    pub fn lookup(&self, kind: PluginKind, k_vec: &[u32]) -> Result<MeanValuePlugin> {
        let ks = normalized(k_vec)?;
        if let Some(p) = self
            .overrides
            .iter()
            .find(|p| p.kind == kind && p.degrees == ks)
        {
            return Ok(p.clone());
        }
        match kind {
            PluginKind::U0 => u0_estimate(&ks),
            PluginKind::V0 => v0_estimate(&ks),
        }
    }

    /// One plug-in per level `h`, for the exponent set `k_h`.
    pub fn for_profile(&self, prof: &DegreeProfile, kind: PluginKind) -> Result<Vec<MeanValuePlugin>> {
        (0..prof.t)
            .map(|h| self.lookup(kind, &prof.degree_set(h)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelBound {
    pub kind: PluginKind,
    /// 1-based level index.
    pub h: usize,
    pub multiplicity_drop: usize,
    pub plugin: MeanValuePlugin,
    /// `k (1 + varpi_h)`, twice the square-root-barrier term.
    pub barrier_twice: u64,
    /// Twice `s(k_h)` (or `s~(k_h)`).
    pub s_twice: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub g_star_upper: Option<u64>,
    pub tg_star_upper: Option<u64>,
    pub per_level: Vec<LevelBound>,
    pub formula_used: String,
    pub caveats: Vec<String>,
}

fn level_bounds(
    prof: &DegreeProfile,
    kind: PluginKind,
    plugins: &[MeanValuePlugin],
) -> Result<Vec<LevelBound>> {
    if plugins.len() != prof.t {
        return Err(Error::invalid(format!(
            "expected {} plug-ins, got {}",
            prof.t,
            plugins.len()
        )));
    }
    let k = prof.k as u64;
    plugins
        .iter()
        .enumerate()
        .map(|(h, plug)| {
            let want = prof.degree_set(h);
            if plug.kind != kind || plug.degrees != want {
                return Err(Error::invalid(format!(
                    "mismatched plug-in at level {}: expected {:?} {:?}, got {:?} {:?}",
                    h + 1,
                    kind,
                    want,
                    plug.kind,
                    plug.degrees
                )));
            }
            let barrier_twice = k * (1 + prof.varpi[h] as u64);
            Ok(LevelBound {
                kind,
                h: h + 1,
                multiplicity_drop: prof.mu[h] - prof.mu_next(h),
                plugin: plug.clone(),
                barrier_twice,
                s_twice: (2 * plug.value).max(barrier_twice),
            })
        })
        .collect()
}

fn total(levels: &[LevelBound]) -> u64 {
    levels
        .iter()
        .map(|lb| lb.multiplicity_drop as u64 * lb.s_twice)
        .sum()
}

/// Evaluates the general bounds: `G*` from smooth-range plug-ins (tail `M`)
/// and `G~*` from full-range plug-ins (tail 1). Either side may be omitted.
pub fn theorem1_bounds(
    prof: &DegreeProfile,
    u0: Option<&[MeanValuePlugin]>,
    v0: Option<&[MeanValuePlugin]>,
) -> Result<BoundReport> {
    let mut report = BoundReport {
        g_star_upper: None,
        tg_star_upper: None,
        per_level: Vec::new(),
        formula_used: String::new(),
        caveats: Vec::new(),
    };
    let mut formulas = Vec::new();
    if let Some(plugins) = u0 {
        let levels = level_bounds(prof, PluginKind::U0, plugins)?;
        report.g_star_upper = Some(total(&levels) + prof.m as u64);
        formulas.push("theorem1A");
        report.per_level.extend(levels);
    }
    if let Some(plugins) = v0 {
        let levels = level_bounds(prof, PluginKind::V0, plugins)?;
        report.tg_star_upper = Some(total(&levels) + 1);
        formulas.push("theorem1B");
        report.per_level.extend(levels);
    }
    report.formula_used = formulas.join("+");
    for lb in &report.per_level {
        for c in &lb.plugin.caveats {
            let c = format!("level {} ({}): {c}", lb.h, lb.plugin.kind.range_name());
            if !report.caveats.contains(&c) {
                report.caveats.push(c);
            }
        }
    }
    if report.per_level.iter().any(|lb| lb.plugin.asymptotic) {
        report
            .caveats
            .push("asymptotic plug-in used: G* value omits a (1 + o(1)) factor".to_string());
    }
    Ok(report)
}

/// Both bounds with the default (or registry) plug-ins.
pub fn default_bounds(prof: &DegreeProfile, registry: &PluginRegistry) -> Result<BoundReport> {
    let u0 = registry.for_profile(prof, PluginKind::U0)?;
    let v0 = registry.for_profile(prof, PluginKind::V0)?;
    theorem1_bounds(prof, Some(&u0), Some(&v0))
}

/// `G~*` for systems with every degree at least 3:
/// `2 mu k(k-1) + 2 sum_{h<t} (mu_h - mu_{h+1}) max(k~_h(k~_h - 1), k(1 + varpi_h)/2) + 1`.
pub fn maincor_bound(prof: &DegreeProfile) -> Result<BoundReport> {
    if prof.k_table.iter().flatten().any(|&d| d < 3) {
        return Err(Error::invalid("this bound requires every degree to be at least 3"));
    }
    let k = prof.k as u64;
    let mut sum_twice = 2 * prof.mu_min as u64 * k * (k - 1);
    let mut per_level = Vec::new();
    for h in 0..prof.t {
        let kt = prof.k_tilde[h] as u64;
        let plugin = MeanValuePlugin {
            kind: PluginKind::V0,
            degrees: prof.degree_set(h),
            value: kt * (kt - 1),
            source: "v_0 = k~(k~-1)".to_string(),
            applicable: "all degrees >= 3".to_string(),
            asymptotic: false,
            caveats: Vec::new(),
        };
        let barrier_twice = k * (1 + prof.varpi[h] as u64);
        let s_twice = if h + 1 == prof.t {
            2 * k * (k - 1)
        } else {
            (2 * kt * (kt - 1)).max(barrier_twice)
        };
        let drop = prof.mu[h] - prof.mu_next(h);
        if h + 1 < prof.t {
            sum_twice += drop as u64 * s_twice;
        }
        per_level.push(LevelBound {
            kind: PluginKind::V0,
            h: h + 1,
            multiplicity_drop: drop,
            plugin,
            barrier_twice,
            s_twice,
        });
    }
    Ok(BoundReport {
        g_star_upper: None,
        tg_star_upper: Some(sum_twice + 1),
        per_level,
        formula_used: "maincor".to_string(),
        caveats: Vec::new(),
    })
}

/// Bounds for the degree patterns `(k,k,n)`, `(k,k,n,n)` and `(k,n,n)`.
pub fn kncor_bounds(k: u32, n: u32) -> Result<Vec<BoundReport>> {
    if n < 2 || k <= n {
        return Err(Error::invalid(format!("need k > n >= 2, got k = {k}, n = {n}")));
    }
    let registry = PluginRegistry::default();
    let cases: [(&str, Vec<u32>, &str); 3] = [
        ("kncor.kkn", vec![k, k, n], "(6+o(1)) k log k"),
        ("kncor.kknn", vec![k, k, n, n], "(8+o(1)) k log k"),
        ("kncor.knn", vec![k, n, n], "(4+o(1)) k log k + 2 n log n"),
    ];
    cases
        .into_iter()
        .map(|(name, degrees, asym)| {
            let prof = DegreeProfile::from_degrees(&degrees)?;
            let mut rep = default_bounds(&prof, &registry)?;
            rep.formula_used = name.to_string();
            rep.caveats.push(format!(
                "G* evaluated with u_0 = ceil(H); the asymptotic statement is G* <= {asym}"
            ));
            Ok(rep)
        })
        .collect()
}

/// Bounds for `r_q` quadratic and `r_c` cubic forms.
pub fn quadcub_bounds(r_q: u64, r_c: u64) -> Result<BoundReport> {
    if r_q + r_c == 0 {
        return Err(Error::invalid("need at least one equation"));
    }
    let quad_branch = 4 * r_q + (20 * r_c) / 3 + 1;
    let cubic_branch = 8 * r_c + (8 * r_q) / 3 + 1;
    let (tg, formula) = if r_q > r_c {
        (quad_branch, "quadcub.rq_ge_rc")
    } else if r_c > r_q {
        (cubic_branch, "quadcub.rc_ge_rq")
    } else {
        if quad_branch != cubic_branch {
            return Err(Error::invalid(format!(
                "branch formulas disagree at r_q = r_c = {r_q}: {quad_branch} vs {cubic_branch}"
            )));
        }
        (quad_branch, "quadcub.equal")
    };
    let g = (r_c > r_q).then(|| 7 * r_c + (11 * r_q).div_ceil(3));
    Ok(BoundReport {
        g_star_upper: g,
        tg_star_upper: Some(tg),
        per_level: Vec::new(),
        formula_used: formula.to_string(),
        caveats: Vec::new(),
    })
}
