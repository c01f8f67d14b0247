use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{error::ErrorKind, Parser, ValueEnum};

use super::CliError;
use crate::model::{BuiltinModelParams, Example, TamingVariant};
use crate::schemes::{SchemeKind, SchemeSpec, SimOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Ensemble moments along one path.
    Simulate,
    /// Strong-convergence ladder over time levels.
    Convergence,
    /// Tamed Euler against full tamed Milstein as the particle count grows.
    LderivDecay,
    /// Full particle system against two half systems.
    Poc,
    /// Closed-form check on the linear mean-field model.
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Convergence => "convergence",
            Command::LderivDecay => "lderiv-decay",
            Command::Poc => "poc",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "mvsde", version, about = "Tamed Euler and Milstein particle schemes for McKean-Vlasov SDEs")]
struct RawArgs {
    #[arg(value_enum)]
    command: Command,
    /// Settings file with `key = value` lines; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// ex1..ex5
    #[arg(long)]
    model: Option<String>,
    /// tamed-euler | milstein
    #[arg(long)]
    scheme: Option<String>,
    /// none | s1 | s2
    #[arg(long)]
    taming: Option<String>,
    /// on | off
    #[arg(long)]
    lions: Option<String>,
    /// on | off
    #[arg(long)]
    gradient: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    /// Level exponents, e.g. 4..10 or 4,6,8
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    particles: Option<String>,
    /// Particle-count exponents, e.g. 2..6
    #[arg(long)]
    particle_levels: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    /// Diffusion parameter (the noise level `s` for validate)
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    coupling_c: Option<String>,
    #[arg(long)]
    x0: Option<String>,
    /// Linear drift coefficient for validate
    #[arg(long)]
    drift_a: Option<String>,
    /// Bridge-expansion terms for Lévy areas (default ceil(sqrt(M)))
    #[arg(long)]
    levy_terms: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// Worker threads (default: all cores); never changes results
    #[arg(long)]
    workers: Option<String>,
}

const KEYS: &[&str] = &[
    "model",
    "scheme",
    "taming",
    "lions",
    "gradient",
    "steps",
    "levels",
    "particles",
    "particle-levels",
    "reps",
    "seed",
    "horizon",
    "sigma",
    "coupling-c",
    "x0",
    "drift-a",
    "levy-terms",
    "out",
    "format",
    "workers",
];

impl RawArgs {
    fn flags(self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("model", self.model),
            ("scheme", self.scheme),
            ("taming", self.taming),
            ("lions", self.lions),
            ("gradient", self.gradient),
            ("steps", self.steps),
            ("levels", self.levels),
            ("particles", self.particles),
            ("particle-levels", self.particle_levels),
            ("reps", self.reps),
            ("seed", self.seed),
            ("horizon", self.horizon),
            ("sigma", self.sigma),
            ("coupling-c", self.coupling_c),
            ("x0", self.x0),
            ("drift-a", self.drift_a),
            ("levy-terms", self.levy_terms),
            ("out", self.out),
            ("format", self.format),
            ("workers", self.workers),
        ]
    }
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub model: Option<Example>,
    pub params: BuiltinModelParams,
    pub drift_a: f64,
    pub kind: SchemeKind,
    pub taming: TamingVariant,
    pub gradient: bool,
    pub lions: bool,
    pub steps: usize,
    pub levels: Vec<u32>,
    pub particles: usize,
    pub particle_levels: Vec<u32>,
    pub repetitions: usize,
    pub seed: u64,
    pub horizon: f64,
    pub levy_terms: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn scheme_spec(&self) -> Result<SchemeSpec, CliError> {
        Ok(SchemeSpec::new(self.kind, self.taming, self.gradient, self.lions)?)
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            levy_terms: self.levy_terms,
            ..SimOptions::default()
        }
    }

    /// Settings that determine the results, in a fixed order, for echoing
    /// into output metadata. Output location and worker count are omitted.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let mut v = vec![("command", self.command.name().to_string())];
        if self.command == Command::Validate {
            v.push(("drift-a", self.drift_a.to_string()));
            v.push(("coupling-c", self.params.c.to_string()));
            v.push(("sigma", self.params.sigma_param.to_string()));
            v.push(("x0", self.params.x0.to_string()));
            v.push(("steps", self.steps.to_string()));
            v.push(("particles", self.particles.to_string()));
            v.push(("horizon", self.horizon.to_string()));
            return v;
        }
        v.push(("model", self.model.map(|m| m.id().to_string()).unwrap_or_default()));
        v.push((
            "scheme",
            match self.kind {
                SchemeKind::TamedEuler => "tamed-euler",
                SchemeKind::Milstein => "milstein",
            }
            .into(),
        ));
        v.push((
            "taming",
            match self.taming {
                TamingVariant::None => "none",
                TamingVariant::Scheme1 => "s1",
                TamingVariant::Scheme2 => "s2",
            }
            .into(),
        ));
        v.push(("lions", on_off(self.lions)));
        v.push(("gradient", on_off(self.gradient)));
        match self.command {
            Command::Convergence => {
                v.push(("levels", list(&self.levels)));
                v.push(("particles", self.particles.to_string()));
            }
            Command::LderivDecay | Command::Poc => {
                v.push(("steps", self.steps.to_string()));
                v.push(("particle-levels", list(&self.particle_levels)));
            }
            _ => {
                v.push(("steps", self.steps.to_string()));
                v.push(("particles", self.particles.to_string()));
            }
        }
        if self.command != Command::Simulate {
            v.push(("reps", self.repetitions.to_string()));
        }
        v.push(("horizon", self.horizon.to_string()));
        v.push(("sigma", self.params.sigma_param.to_string()));
        v.push(("coupling-c", self.params.c.to_string()));
        v.push(("x0", self.params.x0.to_string()));
        v.push(("levy-terms", self.levy_terms.map_or("auto".into(), |k| k.to_string())));
        v
    }
}

fn on_off(b: bool) -> String {
    if b { "on" } else { "off" }.to_string()
}

fn list(levels: &[u32]) -> String {
    levels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(";")
}

/// Why parsing stopped without a config.
#[derive(Debug, Clone, PartialEq)]
pub enum ParseOutcome {
    /// `--help` or `--version`; the text goes to stdout.
    Help(String),
    Error(CliError),
}

impl From<CliError> for ParseOutcome {
    fn from(e: CliError) -> Self {
        ParseOutcome::Error(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `key = value` settings; `#` starts a comment.
pub(crate) fn parse_settings_file(text: &str, origin: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{origin}:{}: expected 'key = value', got '{line}'", no + 1)))?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(usage(format!("{origin}:{}: unknown key '{key}'", no + 1)));
        }
        let value = value.trim().trim_matches('"').to_string();
        if value.is_empty() {
            return Err(usage(format!("{origin}:{}: empty value for '{key}'", no + 1)));
        }
        map.insert(key, value);
    }
    Ok(map)
}

fn get<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse::<T>()
            .map(Some)
            .map_err(|_| usage(format!("invalid value '{v}' for '{key}'"))),
    }
}

fn positive<T: PartialOrd + Default + Copy>(v: Option<T>, key: &str) -> Result<Option<T>, CliError> {
    match v {
        Some(x) if x <= T::default() => Err(usage(format!("'{key}' must be positive"))),
        other => Ok(other),
    }
}

fn switch(map: &BTreeMap<String, String>, key: &str) -> Result<Option<bool>, CliError> {
    match map.get(key).map(|s| s.to_ascii_lowercase()) {
        None => Ok(None),
        Some(v) if v == "on" || v == "true" => Ok(Some(true)),
        Some(v) if v == "off" || v == "false" => Ok(Some(false)),
        Some(v) => Err(usage(format!("invalid value '{v}' for '{key}' (expected on|off)"))),
    }
}

/// `a..b` (inclusive), a comma list, or a single exponent.
pub(crate) fn parse_exponents(text: &str, key: &str) -> Result<Vec<u32>, CliError> {
    let bad = || usage(format!("invalid value '{text}' for '{key}' (expected a..b or a,b,c)"));
    let out: Vec<u32> = if let Some((a, b)) = text.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<u32>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if out.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage(format!("'{key}' must be strictly increasing")));
    }
    Ok(out)
}

/// Parses the command line (and the `--config` file it names) into a
/// validated configuration.
pub fn parse_config<I, T>(args: I) -> Result<ExperimentConfig, ParseOutcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let raw = match RawArgs::try_parse_from(args) {
        Ok(r) => r,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            return Err(ParseOutcome::Help(e.to_string()))
        }
        Err(e) => return Err(usage(e.to_string()).into()),
    };
    let command = raw.command;
    let mut map = match &raw.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            parse_settings_file(&text, &path.display().to_string())?
        }
        None => BTreeMap::new(),
    };
    for (k, v) in raw.flags() {
        if let Some(v) = v {
            map.insert(k.to_string(), v);
        }
    }
    Ok(resolve(command, &map)?)
}

fn resolve(command: Command, map: &BTreeMap<String, String>) -> Result<ExperimentConfig, CliError> {
    let model = match map.get("model") {
        Some(m) => Some(
            m.parse::<Example>()
                .map_err(|_| usage(format!("invalid value '{m}' for 'model' (expected ex1..ex5)")))?,
        ),
        None if command == Command::Validate => None,
        None => return Err(usage("missing required setting 'model' (--model ex1..ex5)")),
    };

    let kind = match map.get("scheme").map(String::as_str) {
        None | Some("milstein") => SchemeKind::Milstein,
        Some("tamed-euler") => SchemeKind::TamedEuler,
        Some(v) => return Err(usage(format!("invalid value '{v}' for 'scheme' (expected tamed-euler|milstein)"))),
    };
    let taming = match map.get("taming").map(String::as_str) {
        None | Some("s1") => TamingVariant::Scheme1,
        Some("s2") => TamingVariant::Scheme2,
        Some("none") => TamingVariant::None,
        Some(v) => return Err(usage(format!("invalid value '{v}' for 'taming' (expected none|s1|s2)"))),
    };
    let euler = kind == SchemeKind::TamedEuler;
    let lions = switch(map, "lions")?;
    let gradient = switch(map, "gradient")?;
    if euler && lions == Some(true) {
        return Err(usage("'lions' cannot be on with the tamed-euler scheme"));
    }
    if euler && gradient == Some(true) {
        return Err(usage("'gradient' cannot be on with the tamed-euler scheme"));
    }
    let sweep = matches!(command, Command::LderivDecay | Command::Poc);
    let lions = lions.unwrap_or(sweep && !euler);
    let gradient = gradient.unwrap_or(!euler);

    let defaults = BuiltinModelParams::default();
    let params = BuiltinModelParams {
        sigma_param: get(map, "sigma")?.unwrap_or(defaults.sigma_param),
        c: get(map, "coupling-c")?.unwrap_or(defaults.c),
        x0: get(map, "x0")?.unwrap_or(defaults.x0),
    };
    if command == Command::Validate {
        if ![params.sigma_param, params.c, params.x0].iter().all(|v| v.is_finite()) {
            return Err(usage("'sigma', 'coupling-c' and 'x0' must be finite"));
        }
    } else {
        params.validate().map_err(|e| usage(e.to_string()))?;
    }
    let drift_a: f64 = get(map, "drift-a")?.unwrap_or(-1.0);
    if !drift_a.is_finite() {
        return Err(usage("'drift-a' must be finite"));
    }
    let horizon: f64 = positive(get(map, "horizon")?, "horizon")?.unwrap_or(1.0);
    if !horizon.is_finite() {
        return Err(usage("'horizon' must be finite"));
    }

    let default_steps = match command {
        Command::LderivDecay | Command::Poc => 64,
        _ => 256,
    };
    let steps = positive(get::<usize>(map, "steps")?, "steps")?.unwrap_or(default_steps);
    let particles = positive(get::<usize>(map, "particles")?, "particles")?.unwrap_or(match model {
        Some(Example::Ex3) => 1_000,
        _ => 10_000,
    });
    let levels = match map.get("levels") {
        Some(t) => parse_exponents(t, "levels")?,
        None => (4..=10).collect(),
    };
    let particle_levels = match map.get("particle-levels") {
        Some(t) => parse_exponents(t, "particle-levels")?,
        None if command == Command::Poc => (3..=7).collect(),
        None => (2..=6).collect(),
    };
    let repetitions = positive(get::<usize>(map, "reps")?, "reps")?.unwrap_or(match command {
        Command::Convergence if particles <= 20 => 1_000,
        Command::LderivDecay | Command::Poc => 100,
        _ => 1,
    });
    let seed = get::<u64>(map, "seed")?.unwrap_or(1);
    let levy_terms = positive(get::<usize>(map, "levy-terms")?, "levy-terms")?;
    let workers = positive(get::<usize>(map, "workers")?, "workers")?;
    let format = match map.get("format").map(String::as_str) {
        None | Some("csv") => OutputFormat::Csv,
        Some("json") => OutputFormat::Json,
        Some(v) => return Err(usage(format!("invalid value '{v}' for 'format' (expected csv|json)"))),
    };
    let cfg = ExperimentConfig {
        command,
        model,
        params,
        drift_a,
        kind,
        taming,
        gradient,
        lions,
        steps,
        levels,
        particles,
        particle_levels,
        repetitions,
        seed,
        horizon,
        levy_terms,
        out: map.get("out").map(PathBuf::from),
        format,
        workers,
    };
    cfg.scheme_spec()?;
    Ok(cfg)
}
