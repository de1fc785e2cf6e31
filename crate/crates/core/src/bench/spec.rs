use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::problem::{GeneratorKind, GeneratorSpec};
use crate::splr::{Execution, SplrConfig};

/// Solver selector shared by the CLI and the keyfile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Sinkhorn,
    Splr,
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sinkhorn" => Ok(Self::Sinkhorn),
            "splr" => Ok(Self::Splr),
            other => Err(Error::Parse(format!("unknown algorithm {other:?}"))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sinkhorn => "sinkhorn",
            Self::Splr => "splr",
        })
    }
}

/// Interprets a `--problem` value: a generator name, or otherwise a path
/// to a problem file.
pub fn problem_from_arg(arg: &str) -> (GeneratorKind, Option<PathBuf>) {
    match arg.parse::<GeneratorKind>() {
        Ok(GeneratorKind::File) | Err(_) => (GeneratorKind::File, Some(PathBuf::from(arg))),
        Ok(kind) => (kind, None),
    }
}

/// Splits keyfile text into `key -> value`. Blank lines and `#` comments
/// are ignored; a key may appear once.
pub fn parse_keyfile(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!(
                "line {}: expected `key = value`, got {raw:?}",
                lineno + 1
            ))
        })?;
        let key = key.trim().trim_start_matches("--");
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Parse(format!(
                "line {}: empty key or value",
                lineno + 1
            )));
        }
        if out.insert(key.to_string(), value.to_string()).is_some() {
            return Err(Error::Parse(format!(
                "line {}: duplicate key {key:?}",
                lineno + 1
            )));
        }
    }
    Ok(out)
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("bad value {value:?} for key {key:?}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Parse(format!(
            "bad boolean {value:?} for key {key:?}"
        ))),
    }
}

/// A complete benchmark description.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchSpec {
    pub generator: GeneratorSpec,
    pub eta: f64,
    pub algorithms: Vec<Algorithm>,
    /// SPLR settings; `max_iter` and `tol` are overridden per checkpoint.
    pub splr: SplrConfig,
    /// Strictly increasing iteration budgets.
    pub checkpoints: Vec<usize>,
    pub repeats: usize,
    pub warmup: usize,
    /// Run the timed repeats concurrently. Timings are then not
    /// meaningful; intended for property runs only.
    pub parallel_repeats: bool,
    pub output: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            generator: GeneratorSpec::default(),
            eta: 0.01,
            algorithms: vec![Algorithm::Sinkhorn, Algorithm::Splr],
            splr: SplrConfig::default(),
            checkpoints: vec![10, 20, 50, 100],
            repeats: 10,
            warmup: 1,
            parallel_repeats: false,
            output: None,
            plot: None,
        }
    }
}

impl BenchSpec {
    /// Builds a spec from keyfile text; absent keys keep their defaults.
    pub fn from_keyfile(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        for (key, value) in parse_keyfile(text)? {
            let v = value.as_str();
            match key.as_str() {
                "problem" => {
                    let (kind, path) = problem_from_arg(v);
                    spec.generator.kind = kind;
                    spec.generator.path = path;
                }
                "n" => spec.generator.n = parse_value(&key, v)?,
                "m" => spec.generator.m = parse_value(&key, v)?,
                "d" => spec.generator.d = parse_value(&key, v)?,
                "seed" => spec.generator.seed = parse_value(&key, v)?,
                "eta" => spec.eta = parse_value(&key, v)?,
                "algo" => spec.algorithms = parse_list(&key, v)?,
                "tau-max" => spec.splr.tau_max = parse_value(&key, v)?,
                "S" => spec.splr.refresh_period = parse_value(&key, v)?,
                "J" => spec.splr.sinkhorn_candidates = parse_value(&key, v)?,
                "density" => spec.splr.density = parse_value(&key, v)?,
                "c1" => spec.splr.c1 = parse_value(&key, v)?,
                "c2" => spec.splr.c2 = parse_value(&key, v)?,
                "overlap" => {
                    spec.splr.execution = if parse_bool(&key, v)? {
                        Execution::Overlapped
                    } else {
                        Execution::Serial
                    }
                }
                "checkpoints" => spec.checkpoints = parse_list(&key, v)?,
                "repeats" => spec.repeats = parse_value(&key, v)?,
                "warmup" => spec.warmup = parse_value(&key, v)?,
                "parallel-repeats" => spec.parallel_repeats = parse_bool(&key, v)?,
                "output" => spec.output = Some(PathBuf::from(v)),
                "plot" => spec.plot = Some(PathBuf::from(v)),
                _ => return Err(Error::Config(format!("unknown keyfile key {key:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.checkpoints.is_empty() {
            return bad("at least one checkpoint is required".into());
        }
        if self.checkpoints[0] == 0 || self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!(
                "checkpoints must be positive and strictly increasing, got {:?}",
                self.checkpoints
            ));
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            return bad("algorithms must not repeat".into());
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        let g = &self.generator;
        if g.kind != GeneratorKind::File && (g.n < 2 || g.m < 2 || g.d < 1) {
            return bad("generated problems need n, m >= 2 and d >= 1".into());
        }
        // per-checkpoint budgets are filled in at run time
        SplrConfig {
            max_iter: 1,
            tol: 0.0,
            ..self.splr.clone()
        }
        .validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyfile_basics() {
        let kv = parse_keyfile("# comment\n a = 1 \n\n--b=x y # trailing\n").unwrap();
        assert_eq!(kv.get("a").map(String::as_str), Some("1"));
        assert_eq!(kv.get("b").map(String::as_str), Some("x y"));
        assert!(parse_keyfile("a = 1\na = 2").is_err());
        assert!(parse_keyfile("just words").is_err());
        assert!(parse_keyfile("a =").is_err());
    }

    #[test]
    fn spec_from_keyfile() {
        let text = "problem = synth1-diff\nn = 40\nm = 30\nd = 3\nseed = 9\neta = 0.05\n\
                    algo = splr\ntau-max = 0.5\nS = 4\nJ = 0\ndensity = 0.02\nc1 = 1e-3\nc2 = 0.8\n\
                    checkpoints = 5, 10\nrepeats = 2\nwarmup = 0\noverlap = yes\n";
        let s = BenchSpec::from_keyfile(text).unwrap();
        assert_eq!(s.generator.kind, GeneratorKind::Synth1Diff);
        assert_eq!(
            (
                s.generator.n,
                s.generator.m,
                s.generator.d,
                s.generator.seed
            ),
            (40, 30, 3, 9)
        );
        assert_eq!(s.eta, 0.05);
        assert_eq!(s.algorithms, vec![Algorithm::Splr]);
        assert_eq!(s.splr.tau_max, 0.5);
        assert_eq!(s.splr.refresh_period, 4);
        assert_eq!(s.splr.sinkhorn_candidates, 0);
        assert_eq!(s.splr.density, 0.02);
        assert_eq!((s.splr.c1, s.splr.c2), (1e-3, 0.8));
        assert_eq!(s.splr.execution, Execution::Overlapped);
        assert_eq!(s.checkpoints, vec![5, 10]);
        assert_eq!((s.repeats, s.warmup), (2, 0));
    }

    #[test]
    fn spec_rejects_bad_input() {
        assert!(BenchSpec::from_keyfile("bogus = 1").is_err());
        assert!(BenchSpec::from_keyfile("checkpoints = 10, 10").is_err());
        assert!(BenchSpec::from_keyfile("checkpoints = 0, 10").is_err());
        assert!(BenchSpec::from_keyfile("repeats = 0").is_err());
        assert!(BenchSpec::from_keyfile("algo = newton").is_err());
        assert!(BenchSpec::from_keyfile("algo = splr, splr").is_err());
        assert!(BenchSpec::from_keyfile("c1 = 0.7").is_err());
        assert!(BenchSpec::from_keyfile("n = many").is_err());
    }

    #[test]
    fn problem_argument_forms() {
        assert_eq!(problem_from_arg("synth2"), (GeneratorKind::Synth2, None));
        assert_eq!(
            problem_from_arg("data/x.rotb"),
            (GeneratorKind::File, Some(PathBuf::from("data/x.rotb")))
        );
        assert_eq!(
            problem_from_arg("file"),
            (GeneratorKind::File, Some(PathBuf::from("file")))
        );
    }

    #[test]
    fn algorithm_round_trip() {
        for a in [Algorithm::Sinkhorn, Algorithm::Splr] {
            assert_eq!(a.to_string().parse::<Algorithm>().unwrap(), a);
        }
    }
}
