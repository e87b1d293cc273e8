//! Flat `key = value` run configuration with command-line overrides.

use std::collections::BTreeMap;
use std::path::Path;

use crate::CliError;

/// Every accepted key. Anything else is rejected.
pub const KEYS: &[&str] = &[
    "model",
    "dt",
    "T",
    "T_obs",
    "m",
    "gamma",
    "kappa",
    "dx",
    "sor_tol",
    "mu",
    "eta",
    "s",
    "alpha",
    "noise_std",
    "seed",
    "ic_seed",
    "solver",
    "init",
    "max_iters",
    "output_dir",
    "schedule",
    "constraint_tol",
    "observations",
    "initial_step",
    "shrink",
    "c1",
    "grad_tol",
    "trials",
    "fd_eps",
    "corrupt_adjoint",
    "box",
    "resolution",
];

pub const MODELS: &[&str] = &["lorenz", "burgers-fd", "burgers-fem", "burgers-spectral", "vorticity2d"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

fn check_key(key: &str) -> Result<(), CliError> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("unknown config key `{key}`")))
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut values = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("config line {}: expected `key = value`", n + 1)));
        };
        let (k, v) = (k.trim(), v.trim());
        check_key(k)?;
        values.insert(k.to_string(), v.to_string());
    }
    Ok(values)
}

/// `--key value` or `--key=value` pairs.
pub fn parse_overrides(args: &[String]) -> Result<BTreeMap<String, String>, CliError> {
    let mut values = BTreeMap::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(body) = arg.strip_prefix("--") else {
            return Err(CliError::Usage(format!("unexpected argument `{arg}`, expected --key value")));
        };
        let (k, v) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Usage(format!("missing value for --{body}")))?;
                (body.to_string(), v.clone())
            }
        };
        check_key(&k)?;
        values.insert(k, v);
    }
    Ok(values)
}

fn model_defaults(model: &str) -> Vec<(&'static str, String)> {
    let common = [
        ("eta", "0.1".to_string()),
        ("s", (2.0f64 / 3.0).to_string()),
        ("alpha", "0.1".to_string()),
        ("seed", "1".to_string()),
        ("ic_seed", "0".to_string()),
        ("solver", "admm".to_string()),
        ("output_dir", "out".to_string()),
        ("schedule", "jacobi".to_string()),
        ("constraint_tol", "none".to_string()),
        ("observations", "none".to_string()),
        ("initial_step", "1".to_string()),
        ("shrink", "0.5".to_string()),
        ("c1", "0.0001".to_string()),
        ("grad_tol", "0.00001".to_string()),
        ("trials", "100".to_string()),
        ("fd_eps", "0.000001".to_string()),
        ("corrupt_adjoint", "false".to_string()),
        ("box", "-6,6,-6,6,14,26".to_string()),
        ("resolution", "49".to_string()),
    ];
    let specific: Vec<(&'static str, String)> = match model {
        "lorenz" => vec![
            ("dt", "0.01".into()),
            ("T", "3".into()),
            ("T_obs", "0.3".into()),
            ("mu", "100".into()),
            ("noise_std", "0".into()),
            ("init", "rollout:-3,-3,10".into()),
            ("max_iters", "600".into()),
        ],
        "burgers-fd" | "burgers-fem" | "burgers-spectral" => {
            let (dt, noise) = match model {
                "burgers-fd" => ("0.005", 0.1),
                "burgers-fem" => ("0.0025", 0.1),
                _ => ("0.0025", 0.1 * 2f64.sqrt() * 0.1),
            };
            vec![
                ("dt", dt.into()),
                ("T", "2".into()),
                ("T_obs", "0.2".into()),
                ("m", "100".into()),
                ("gamma", "0.05".into()),
                ("mu", "20".into()),
                ("noise_std", noise.to_string()),
                ("init", "zeros".into()),
                ("max_iters", "1000".into()),
            ]
        }
        "vorticity2d" => vec![
            ("dt", "0.12".into()),
            ("T", "36".into()),
            ("T_obs", "3.6".into()),
            ("m", "20".into()),
            ("dx", "0.2".into()),
            ("kappa", "0.00004".into()),
            ("sor_tol", "1e-10".into()),
            ("mu", "20".into()),
            ("noise_std", "0.5".into()),
            ("init", "zeros".into()),
            ("max_iters", "1000".into()),
        ],
        _ => Vec::new(),
    };
    specific.into_iter().chain(common).collect()
}

impl RunConfig {
    /// Merges an optional config file with overrides (overrides win) and
    /// fills model defaults for every key left unset.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut values = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                parse_text(&text)?
            }
            None => BTreeMap::new(),
        };
        values.extend(parse_overrides(overrides)?);
        Self::resolve(values)
    }

    pub fn resolve(mut values: BTreeMap<String, String>) -> Result<Self, CliError> {
        let model = values
            .get("model")
            .cloned()
            .ok_or_else(|| CliError::Usage("missing required config key `model`".into()))?;
        if !MODELS.contains(&model.as_str()) {
            return Err(CliError::Usage(format!(
                "config key `model`: unknown model `{model}` (expected one of {})",
                MODELS.join(", ")
            )));
        }
        for (k, v) in model_defaults(&model) {
            values.entry(k.to_string()).or_insert(v);
        }
        Ok(Self { values })
    }

    pub fn model(&self) -> &str {
        &self.values["model"]
    }

    pub fn str(&self, key: &str) -> Result<&str, CliError> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| CliError::Usage(format!("missing config key `{key}` for model {}", self.model())))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<T, CliError> {
        let raw = self.str(key)?;
        raw.parse()
            .map_err(|_| CliError::Usage(format!("config key `{key}`: expected {what}, got `{raw}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        self.parsed(key, "a number")
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        self.parsed(key, "a non-negative integer")
    }

    pub fn u64(&self, key: &str) -> Result<u64, CliError> {
        self.parsed(key, "a non-negative integer")
    }

    pub fn bool(&self, key: &str) -> Result<bool, CliError> {
        self.parsed(key, "true or false")
    }

    /// `none` maps to `None`.
    pub fn optional(&self, key: &str) -> Result<Option<&str>, CliError> {
        let v = self.str(key)?;
        Ok(if v == "none" { None } else { Some(v) })
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        parse_list(self.str(key)?).map_err(|raw| CliError::Usage(format!("config key `{key}`: bad number `{raw}`")))
    }

    /// `value / dt` as an integer step count, rejecting non-integral ratios.
    pub fn steps_of(&self, key: &str) -> Result<usize, CliError> {
        let (v, dt) = (self.f64(key)?, self.f64("dt")?);
        if !(dt > 0.0) || !(v >= 0.0) {
            return Err(CliError::Usage(format!("config keys `{key}` and `dt` must be positive")));
        }
        let ratio = v / dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * steps.max(1.0) {
            return Err(CliError::Usage(format!(
                "config key `{key}`: {key}/dt = {ratio} is not an integer"
            )));
        }
        Ok(steps as usize)
    }

    /// Every resolved key, one `key = value` line each, sorted.
    pub fn echo(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

pub fn parse_list(raw: &str) -> Result<Vec<f64>, String> {
    raw.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| p.trim().to_string()))
        .collect()
}
