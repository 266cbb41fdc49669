//! Experiment configuration: a sectioned `key = value` format with line
//! and key diagnostics, plus a canonical echo that parses back to an equal
//! config (the summary round-trip contract).
//!
//! ```text
//! [experiment]
//! kind = binary-accuracy      # continuous-risk | binary-accuracy | markov-exact
//!                             # | fit-predict | validate
//! seed = 7                    # default 0
//! plot = false                # default false
//! out = .                     # default "."
//!
//! [task]
//! d = 30
//! n = 40
//! prior = binary              # gaussian | binary
//! k = 2                       # binary prior sparsity
//! omega = 1.0                 # gaussian prior scale, default 1
//! sigma_eps = 0.1             # label noise sd (sigma_eps_sq accepted)
//! covariance = identity       # identity | poly, default identity
//! r = 1.0                     # poly decay exponent
//! eta = 0.025
//!
//! [sampler]
//! kind = binary-sample        # deterministic | constant | linear
//!                             # | binary-sample | binary-greedy
//! sigma = 0.1                 # noise sd for constant/linear (sigma_sq accepted)
//! k = 2                       # draws per step for binary samplers
//!
//! [sweep]
//! t_list = 1,5,10
//! n_list = 1,64               # ensemble sizes, default 1
//! methods = mv                # avg | bon-oracle | bon-sparsity | mv
//! trials = 500                # default 1
//! t_query_list = 30           # fit-predict horizons to extrapolate to
//! n_query_list = 64           # fit-predict ensemble sizes to extrapolate to
//! ```

use crate::error::CliError;
use icl_ttc_core::{CoefficientPrior, CovarianceKind, CovarianceSpec, SamplerKind, TaskConfig, TrialMethod};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    ContinuousRisk,
    BinaryAccuracy,
    MarkovExact,
    FitPredict,
    Validate,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::ContinuousRisk => "continuous-risk",
            ExperimentKind::BinaryAccuracy => "binary-accuracy",
            ExperimentKind::MarkovExact => "markov-exact",
            ExperimentKind::FitPredict => "fit-predict",
            ExperimentKind::Validate => "validate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "continuous-risk" => Some(ExperimentKind::ContinuousRisk),
            "binary-accuracy" => Some(ExperimentKind::BinaryAccuracy),
            "markov-exact" => Some(ExperimentKind::MarkovExact),
            "fit-predict" => Some(ExperimentKind::FitPredict),
            "validate" => Some(ExperimentKind::Validate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub t_list: Vec<usize>,
    /// Ensemble sizes (paths per aggregate).
    pub n_list: Vec<usize>,
    pub methods: Vec<TrialMethod>,
    pub trials: usize,
    pub t_query_list: Vec<usize>,
    pub n_query_list: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub plot: bool,
    pub out: String,
    pub task: TaskConfig,
    pub sampler: SamplerKind,
    pub sweep: SweepConfig,
}

// ---- raw entry collection ----

const SECTIONS: [(&str, &[&str]); 4] = [
    ("experiment", &["kind", "seed", "plot", "out"]),
    (
        "task",
        &["d", "n", "prior", "omega", "k", "sigma_eps", "sigma_eps_sq", "covariance", "r", "eta"],
    ),
    ("sampler", &["kind", "sigma", "sigma_sq", "k"]),
    (
        "sweep",
        &["t_list", "n_list", "methods", "trials", "t_query_list", "n_query_list"],
    ),
];

struct Entries {
    map: BTreeMap<(String, String), (String, usize)>,
}

impl Entries {
    fn take(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        self.map.remove(&(section.to_string(), key.to_string()))
    }
}

fn err(msg: String) -> CliError {
    CliError::Config(msg)
}

fn collect_entries(text: &str) -> Result<Entries, CliError> {
    let mut map = BTreeMap::new();
    let mut section: Option<&str> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(stripped) = line.strip_prefix('[') {
            let Some(name) = stripped.strip_suffix(']') else {
                return Err(err(format!("unterminated section header (line {line_no})")));
            };
            let name = name.trim();
            match SECTIONS.iter().find(|(s, _)| *s == name) {
                Some((s, _)) => section = Some(s),
                None => {
                    return Err(err(format!("unknown section `[{name}]` (line {line_no})")))
                }
            }
            continue;
        }
        let Some(sec) = section else {
            return Err(err(format!(
                "assignment before any [section] header (line {line_no})"
            )));
        };
        let Some(eq) = line.find('=') else {
            return Err(err(format!("expected `key = value` (line {line_no})")));
        };
        let key = line[..eq].trim();
        let value = line[eq + 1..].trim();
        let known = SECTIONS
            .iter()
            .find(|(s, _)| *s == sec)
            .map(|(_, keys)| keys.contains(&key))
            .unwrap_or(false);
        if !known {
            return Err(err(format!(
                "unknown key `{key}` in [{sec}] (line {line_no})"
            )));
        }
        if map
            .insert((sec.to_string(), key.to_string()), (value.to_string(), line_no))
            .is_some()
        {
            return Err(err(format!(
                "duplicate key `{key}` in [{sec}] (line {line_no})"
            )));
        }
    }
    Ok(Entries { map })
}

// ---- typed readers ----

fn parse_u64(section: &str, key: &str, raw: &(String, usize)) -> Result<u64, CliError> {
    raw.0.parse::<u64>().map_err(|_| {
        err(format!(
            "key `{key}` in [{section}]: expected an unsigned integer, got `{}` (line {})",
            raw.0, raw.1
        ))
    })
}

fn parse_usize(section: &str, key: &str, raw: &(String, usize)) -> Result<usize, CliError> {
    raw.0.parse::<usize>().map_err(|_| {
        err(format!(
            "key `{key}` in [{section}]: expected an unsigned integer, got `{}` (line {})",
            raw.0, raw.1
        ))
    })
}

fn parse_f64(section: &str, key: &str, raw: &(String, usize)) -> Result<f64, CliError> {
    raw.0.parse::<f64>().map_err(|_| {
        err(format!(
            "key `{key}` in [{section}]: expected a number, got `{}` (line {})",
            raw.0, raw.1
        ))
    })
}

fn parse_bool(section: &str, key: &str, raw: &(String, usize)) -> Result<bool, CliError> {
    match raw.0.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(err(format!(
            "key `{key}` in [{section}]: expected true or false, got `{other}` (line {})",
            raw.1
        ))),
    }
}

fn parse_usize_list(section: &str, key: &str, raw: &(String, usize)) -> Result<Vec<usize>, CliError> {
    if raw.0.is_empty() {
        return Ok(Vec::new());
    }
    raw.0
        .split(',')
        .map(|item| {
            item.trim().parse::<usize>().map_err(|_| {
                err(format!(
                    "key `{key}` in [{section}]: expected comma-separated unsigned integers, got `{}` (line {})",
                    item.trim(),
                    raw.1
                ))
            })
        })
        .collect()
}

fn parse_methods(raw: &(String, usize)) -> Result<Vec<TrialMethod>, CliError> {
    if raw.0.is_empty() {
        return Ok(Vec::new());
    }
    raw.0
        .split(',')
        .map(|item| {
            let item = item.trim();
            match item {
                "avg" => Ok(TrialMethod::Avg),
                "bon-oracle" => Ok(TrialMethod::BonOracle),
                "bon-sparsity" => Ok(TrialMethod::BonSparsity),
                "mv" => Ok(TrialMethod::Mv),
                other => Err(err(format!(
                    "key `methods` in [sweep]: unknown method `{other}` (line {})",
                    raw.1
                ))),
            }
        })
        .collect()
}

fn required(section: &str, key: &str, raw: Option<(String, usize)>) -> Result<(String, usize), CliError> {
    raw.ok_or_else(|| err(format!("missing required key `{key}` in [{section}]")))
}

fn reject(section: &str, key: &str, raw: Option<(String, usize)>, why: &str) -> Result<(), CliError> {
    if let Some((_, line)) = raw {
        return Err(err(format!(
            "key `{key}` in [{section}] {why} (line {line})"
        )));
    }
    Ok(())
}

/// Reads `key` or `key_sq` as a standard deviation; `key_sq` values are
/// square-rooted. Supplying both is an error.
fn sd_from_pair(
    section: &str,
    key: &str,
    sd: Option<(String, usize)>,
    sq: Option<(String, usize)>,
) -> Result<Option<f64>, CliError> {
    match (sd, sq) {
        (Some(_), Some((_, line))) => Err(err(format!(
            "keys `{key}` and `{key}_sq` in [{section}] are mutually exclusive (line {line})"
        ))),
        (Some(raw), None) => Ok(Some(parse_f64(section, key, &raw)?)),
        (None, Some(raw)) => {
            let v = parse_f64(section, &format!("{key}_sq"), &raw)?;
            if v < 0.0 {
                return Err(err(format!(
                    "key `{key}_sq` in [{section}]: must be >= 0, got {v} (line {})",
                    raw.1
                )));
            }
            Ok(Some(v.sqrt()))
        }
        (None, None) => Ok(None),
    }
}

// ---- assembly ----

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut e = collect_entries(text)?;

    let kind_raw = required("experiment", "kind", e.take("experiment", "kind"))?;
    let kind = ExperimentKind::parse(&kind_raw.0).ok_or_else(|| {
        err(format!(
            "key `kind` in [experiment]: unknown experiment `{}` (line {})",
            kind_raw.0, kind_raw.1
        ))
    })?;
    let seed = match e.take("experiment", "seed") {
        Some(raw) => parse_u64("experiment", "seed", &raw)?,
        None => 0,
    };
    let plot = match e.take("experiment", "plot") {
        Some(raw) => parse_bool("experiment", "plot", &raw)?,
        None => false,
    };
    let out = match e.take("experiment", "out") {
        Some((v, _)) => v,
        None => ".".to_string(),
    };

    let d = parse_usize("task", "d", &required("task", "d", e.take("task", "d"))?)?;
    let n = parse_usize("task", "n", &required("task", "n", e.take("task", "n"))?)?;
    let prior_raw = required("task", "prior", e.take("task", "prior"))?;
    let omega_raw = e.take("task", "omega");
    let task_k_raw = e.take("task", "k");
    let coefficient_prior = match prior_raw.0.as_str() {
        "gaussian" => {
            reject("task", "k", task_k_raw, "requires prior = binary")?;
            let omega = match omega_raw {
                Some(raw) => parse_f64("task", "omega", &raw)?,
                None => 1.0,
            };
            CoefficientPrior::Gaussian { omega }
        }
        "binary" => {
            reject("task", "omega", omega_raw, "requires prior = gaussian")?;
            let raw = required("task", "k", task_k_raw)?;
            CoefficientPrior::BinarySparse {
                k: parse_usize("task", "k", &raw)?,
            }
        }
        other => {
            return Err(err(format!(
                "key `prior` in [task]: expected gaussian or binary, got `{other}` (line {})",
                prior_raw.1
            )))
        }
    };
    let label_noise_sd = sd_from_pair(
        "task",
        "sigma_eps",
        e.take("task", "sigma_eps"),
        e.take("task", "sigma_eps_sq"),
    )?
    .unwrap_or(0.0);
    let cov_raw = e.take("task", "covariance");
    let r_raw = e.take("task", "r");
    let covariance = match cov_raw.as_ref().map(|(v, _)| v.as_str()).unwrap_or("identity") {
        "identity" => {
            reject("task", "r", r_raw, "requires covariance = poly")?;
            CovarianceSpec::identity(d)
        }
        "poly" => {
            let raw = required("task", "r", r_raw)?;
            CovarianceSpec::polynomial(d, parse_f64("task", "r", &raw)?)
        }
        other => {
            let line = cov_raw.as_ref().map(|(_, l)| *l).unwrap_or(0);
            return Err(err(format!(
                "key `covariance` in [task]: expected identity or poly, got `{other}` (line {line})"
            )));
        }
    };
    let eta = parse_f64("task", "eta", &required("task", "eta", e.take("task", "eta"))?)?;
    let task = TaskConfig {
        d,
        n,
        coefficient_prior,
        label_noise_sd,
        covariance,
        step_size: eta,
    };

    let sampler_kind = e.take("sampler", "kind");
    let sampler_sigma = sd_from_pair(
        "sampler",
        "sigma",
        e.take("sampler", "sigma"),
        e.take("sampler", "sigma_sq"),
    )?;
    let sampler_k_raw = e.take("sampler", "k");
    let need_sigma = |sigma: Option<f64>, variant: &str| {
        sigma.ok_or_else(|| {
            err(format!(
                "missing required key `sigma` in [sampler] (kind = {variant})"
            ))
        })
    };
    let sampler = match sampler_kind.as_ref().map(|(v, _)| v.as_str()).unwrap_or("deterministic") {
        "deterministic" => {
            if sampler_sigma.is_some() {
                return Err(err(
                    "key `sigma` in [sampler] requires kind = constant or linear".to_string(),
                ));
            }
            reject("sampler", "k", sampler_k_raw, "requires a binary sampler kind")?;
            SamplerKind::Deterministic
        }
        "constant" => {
            reject("sampler", "k", sampler_k_raw, "requires a binary sampler kind")?;
            SamplerKind::ConstantNoise {
                sigma: need_sigma(sampler_sigma, "constant")?,
            }
        }
        "linear" => {
            reject("sampler", "k", sampler_k_raw, "requires a binary sampler kind")?;
            SamplerKind::LinearNoise {
                sigma: need_sigma(sampler_sigma, "linear")?,
            }
        }
        "binary-sample" | "binary-greedy" => {
            if sampler_sigma.is_some() {
                return Err(err(
                    "key `sigma` in [sampler] requires kind = constant or linear".to_string(),
                ));
            }
            let raw = required("sampler", "k", sampler_k_raw)?;
            let k = parse_usize("sampler", "k", &raw)?;
            if sampler_kind.as_ref().map(|(v, _)| v.as_str()) == Some("binary-greedy") {
                SamplerKind::BinaryGreedy { k }
            } else {
                SamplerKind::BinarySample { k }
            }
        }
        other => {
            let line = sampler_kind.as_ref().map(|(_, l)| *l).unwrap_or(0);
            return Err(err(format!(
                "key `kind` in [sampler]: unknown sampler `{other}` (line {line})"
            )));
        }
    };

    let t_list = match e.take("sweep", "t_list") {
        Some(raw) => parse_usize_list("sweep", "t_list", &raw)?,
        None => Vec::new(),
    };
    let n_list = match e.take("sweep", "n_list") {
        Some(raw) => parse_usize_list("sweep", "n_list", &raw)?,
        None => vec![1],
    };
    let methods = match e.take("sweep", "methods") {
        Some(raw) => parse_methods(&raw)?,
        None => Vec::new(),
    };
    let trials = match e.take("sweep", "trials") {
        Some(raw) => parse_usize("sweep", "trials", &raw)?,
        None => 1,
    };
    let t_query_list = match e.take("sweep", "t_query_list") {
        Some(raw) => parse_usize_list("sweep", "t_query_list", &raw)?,
        None => Vec::new(),
    };
    let n_query_list = match e.take("sweep", "n_query_list") {
        Some(raw) => parse_usize_list("sweep", "n_query_list", &raw)?,
        None => Vec::new(),
    };
    let sweep = SweepConfig {
        t_list,
        n_list,
        methods,
        trials,
        t_query_list,
        n_query_list,
    };

    debug_assert!(e.map.is_empty(), "all known keys are consumed above");

    let config = ExperimentConfig {
        kind,
        seed,
        plot,
        out,
        task,
        sampler,
        sweep,
    };
    validate_semantics(&config)?;
    Ok(config)
}

/// Cross-field checks that the key-level parser cannot express.
fn validate_semantics(cfg: &ExperimentConfig) -> Result<(), CliError> {
    cfg.task.validate()?;
    cfg.sampler.validate(cfg.task.d)?;
    let sweep = &cfg.sweep;
    if sweep.trials == 0 {
        return Err(err("key `trials` in [sweep] must be >= 1".to_string()));
    }
    if sweep.t_list.iter().any(|&t| t == 0) {
        return Err(err("key `t_list` in [sweep]: horizons start at 1".to_string()));
    }
    if sweep.n_list.iter().any(|&n| n == 0) {
        return Err(err("key `n_list` in [sweep]: ensemble sizes start at 1".to_string()));
    }
    let binary_prior = matches!(cfg.task.coefficient_prior, CoefficientPrior::BinarySparse { .. });
    match cfg.kind {
        ExperimentKind::ContinuousRisk => {
            if binary_prior {
                return Err(err(
                    "continuous-risk needs prior = gaussian in [task]".to_string(),
                ));
            }
            if sweep.t_list.is_empty() {
                return Err(err("continuous-risk needs a non-empty t_list in [sweep]".to_string()));
            }
            if sweep.methods.is_empty() {
                return Err(err("continuous-risk needs at least one method in [sweep]".to_string()));
            }
        }
        ExperimentKind::BinaryAccuracy => {
            if !binary_prior {
                return Err(err(
                    "binary-accuracy needs prior = binary in [task]".to_string(),
                ));
            }
            if sweep.t_list.is_empty() {
                return Err(err("binary-accuracy needs a non-empty t_list in [sweep]".to_string()));
            }
            if sweep.methods.is_empty() {
                return Err(err("binary-accuracy needs at least one method in [sweep]".to_string()));
            }
        }
        ExperimentKind::MarkovExact => {
            if !binary_prior {
                return Err(err("markov-exact needs prior = binary in [task]".to_string()));
            }
            if sweep.t_list.is_empty() {
                return Err(err("markov-exact needs a non-empty t_list in [sweep]".to_string()));
            }
        }
        ExperimentKind::FitPredict => {
            if !binary_prior {
                return Err(err("fit-predict needs prior = binary in [task]".to_string()));
            }
            if !cfg.sampler.is_binary() {
                return Err(err(
                    "fit-predict needs a binary sampler for majority voting".to_string(),
                ));
            }
            if sweep.t_list.len() < 3 {
                return Err(err(
                    "fit-predict needs >= 3 horizons in t_list to fit the single-path column".to_string(),
                ));
            }
            if !sweep.n_list.contains(&1) {
                return Err(err(
                    "fit-predict needs ensemble size 1 in n_list (the single-path column)".to_string(),
                ));
            }
            if sweep.t_query_list.is_empty() || sweep.n_query_list.is_empty() {
                return Err(err(
                    "fit-predict needs non-empty t_query_list and n_query_list in [sweep]".to_string(),
                ));
            }
            if sweep.t_query_list.iter().any(|&t| t == 0) {
                return Err(err("key `t_query_list` in [sweep]: horizons start at 1".to_string()));
            }
            for &tq in &sweep.t_query_list {
                if sweep.t_list.contains(&tq) {
                    return Err(err(format!(
                        "query horizon {tq} already appears in t_list; queries must be held out"
                    )));
                }
            }
            for &nq in &sweep.n_query_list {
                if !sweep.n_list.contains(&nq) {
                    return Err(err(format!(
                        "query ensemble size {nq} must also appear in n_list so its column is measured at cheap horizons"
                    )));
                }
            }
        }
        ExperimentKind::Validate => {}
    }
    if sweep.methods.contains(&TrialMethod::Mv) && !cfg.sampler.is_binary() {
        return Err(err(
            "method mv needs a binary sampler (discrete final weights)".to_string(),
        ));
    }
    Ok(())
}

// ---- canonical echo ----

/// Renders the config in the documented format; `parse_config` on the result
/// yields an equal config.
pub fn canonical_echo(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[experiment]");
    let _ = writeln!(s, "kind = {}", cfg.kind.as_str());
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s, "plot = {}", cfg.plot);
    let _ = writeln!(s, "out = {}", cfg.out);
    let _ = writeln!(s);
    let _ = writeln!(s, "[task]");
    let _ = writeln!(s, "d = {}", cfg.task.d);
    let _ = writeln!(s, "n = {}", cfg.task.n);
    match cfg.task.coefficient_prior {
        CoefficientPrior::Gaussian { omega } => {
            let _ = writeln!(s, "prior = gaussian");
            let _ = writeln!(s, "omega = {omega}");
        }
        CoefficientPrior::BinarySparse { k } => {
            let _ = writeln!(s, "prior = binary");
            let _ = writeln!(s, "k = {k}");
        }
    }
    let _ = writeln!(s, "sigma_eps = {}", cfg.task.label_noise_sd);
    match cfg.task.covariance.kind {
        CovarianceKind::Identity => {
            let _ = writeln!(s, "covariance = identity");
        }
        CovarianceKind::PolynomialDecay => {
            let _ = writeln!(s, "covariance = poly");
            let _ = writeln!(s, "r = {}", cfg.task.covariance.r);
        }
    }
    let _ = writeln!(s, "eta = {}", cfg.task.step_size);
    let _ = writeln!(s);
    let _ = writeln!(s, "[sampler]");
    match cfg.sampler {
        SamplerKind::Deterministic => {
            let _ = writeln!(s, "kind = deterministic");
        }
        SamplerKind::ConstantNoise { sigma } => {
            let _ = writeln!(s, "kind = constant");
            let _ = writeln!(s, "sigma = {sigma}");
        }
        SamplerKind::LinearNoise { sigma } => {
            let _ = writeln!(s, "kind = linear");
            let _ = writeln!(s, "sigma = {sigma}");
        }
        SamplerKind::BinarySample { k } => {
            let _ = writeln!(s, "kind = binary-sample");
            let _ = writeln!(s, "k = {k}");
        }
        SamplerKind::BinaryGreedy { k } => {
            let _ = writeln!(s, "kind = binary-greedy");
            let _ = writeln!(s, "k = {k}");
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "[sweep]");
    if !cfg.sweep.t_list.is_empty() {
        let _ = writeln!(s, "t_list = {}", join_usize(&cfg.sweep.t_list));
    }
    let _ = writeln!(s, "n_list = {}", join_usize(&cfg.sweep.n_list));
    if !cfg.sweep.methods.is_empty() {
        let names: Vec<&str> = cfg.sweep.methods.iter().map(|m| m.as_str()).collect();
        let _ = writeln!(s, "methods = {}", names.join(","));
    }
    let _ = writeln!(s, "trials = {}", cfg.sweep.trials);
    if !cfg.sweep.t_query_list.is_empty() {
        let _ = writeln!(s, "t_query_list = {}", join_usize(&cfg.sweep.t_query_list));
    }
    if !cfg.sweep.n_query_list.is_empty() {
        let _ = writeln!(s, "n_query_list = {}", join_usize(&cfg.sweep.n_query_list));
    }
    s
}

fn join_usize(v: &[usize]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
