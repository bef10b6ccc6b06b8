//! Experiment configuration: a TOML file with `[model]`, `[rates]` and `[run]`
//! tables, plus optional `[oracle]` and `[simulate]` geometry overrides.

use std::fmt;
use std::ops::Range;

use serde::Deserialize;
use toml::Spanned;

use rwdre::{EnvKind, EnvModel, LatticeTorus, RateSpec};

/// Configuration problem, anchored to a line of the file when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "config line {line}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Oracle,
    Simulate,
    Compare,
    Sweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Oracle => "oracle",
            Mode::Simulate => "simulate",
            Mode::Compare => "compare",
            Mode::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Spanned<RawModel>,
    rates: Spanned<RawRates>,
    run: Spanned<RawRun>,
    oracle: Option<Spanned<RawGeometry>>,
    simulate: Option<Spanned<RawGeometry>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: Spanned<String>,
    rho: Spanned<f64>,
    dim: Spanned<usize>,
    side: Spanned<usize>,
    j: Option<Spanned<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRates {
    family: Spanned<String>,
    strength: Spanned<f64>,
    range: Spanned<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    mode: Option<Spanned<String>>,
    seed: Option<u64>,
    horizon: Option<Spanned<f64>>,
    replicas: Option<Spanned<usize>>,
    order: Option<Spanned<usize>>,
    tolerance: Option<Spanned<f64>>,
    equality_tolerance: Option<Spanned<f64>>,
    batches: Option<Spanned<usize>>,
    out: Option<String>,
    tv_tolerance: Option<Spanned<f64>>,
    times: Option<Spanned<Vec<f64>>>,
    functions: Option<Spanned<usize>>,
    state_cap: Option<usize>,
    gamma: Option<Spanned<f64>>,
    strengths: Option<Spanned<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    side: Spanned<usize>,
}

/// Validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub source: String,
    pub model: EnvModel<f64>,
    pub spec: RateSpec<f64>,
    pub family: String,
    pub strength: f64,
    pub oracle_torus: LatticeTorus,
    pub sim_torus: LatticeTorus,
    pub seed: Option<u64>,
    pub horizon: Option<f64>,
    pub replicas: Option<usize>,
    pub order: usize,
    pub tolerance: f64,
    pub equality_tolerance: f64,
    pub batches: usize,
    pub out: Option<String>,
    /// Line of the `side` entry that sets the oracle torus, for state-cap errors.
    pub oracle_side_line: usize,
    pub tv_tolerance: f64,
    pub times: Vec<f64>,
    pub functions: usize,
    pub state_cap: usize,
    pub gamma: Option<f64>,
    pub strengths: Vec<f64>,
}

struct Lines<'a> {
    src: &'a str,
}

impl Lines<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        self.src[..span.start.min(self.src.len())].matches('\n').count() + 1
    }

    fn err<T>(&self, span: Range<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError {
            line: Some(self.line(span)),
            message: message.into(),
        })
    }
}

pub fn build_spec(family: &str, strength: f64, dim: usize) -> rwdre::Result<RateSpec<f64>> {
    match family {
        "interface" => RateSpec::interface(strength),
        "driven_probe" => RateSpec::driven_probe(strength),
        "decoupled" => RateSpec::decoupled(dim),
        other => Err(rwdre::Error::InvalidRates(format!("unknown rate family `{other}`"))),
    }
}

/// Parses and validates `src` for `mode`.
pub fn parse(src: &str, mode: Mode) -> Result<Experiment, ConfigError> {
    let raw: RawConfig = toml::from_str(src).map_err(|e| ConfigError {
        line: e.span().map(|s| Lines { src }.line(s)),
        message: e.message().trim().to_string(),
    })?;
    let at = Lines { src };

    let run = raw.run.get_ref();
    if let Some(m) = &run.mode {
        if m.get_ref() != mode.name() {
            return at.err(
                m.span(),
                format!(
                    "run.mode is `{}` but the `{}` subcommand was invoked",
                    m.get_ref(),
                    mode.name()
                ),
            );
        }
    }

    let m = raw.model.get_ref();
    let rho = *m.rho.get_ref();
    let kind = match (m.kind.get_ref().as_str(), &m.j) {
        ("independent", None) => EnvKind::IndependentFlip,
        ("east", None) => EnvKind::East,
        ("fa", Some(j)) => EnvKind::FaJf(*j.get_ref()),
        ("fa", None) => return at.err(m.kind.span(), "kind `fa` needs the constraint parameter `j`"),
        ("independent" | "east", Some(j)) => return at.err(j.span(), "`j` only applies to kind `fa`"),
        (other, _) => {
            return at.err(
                m.kind.span(),
                format!("unknown environment kind `{other}` (independent, east, fa)"),
            )
        }
    };
    let model = EnvModel::new(kind, rho).or_else(|e| at.err(m.rho.span(), e.to_string()))?;
    let dim = *m.dim.get_ref();
    let torus =
        |side: &Spanned<usize>| LatticeTorus::new(dim, *side.get_ref()).or_else(|e| at.err(side.span(), e.to_string()));
    let model_torus = torus(&m.side)?;
    model
        .validate(&model_torus)
        .or_else(|e| at.err(m.kind.span(), e.to_string()))?;

    let r = raw.rates.get_ref();
    let family = r.family.get_ref().clone();
    let strength = *r.strength.get_ref();
    let spec = build_spec(&family, strength, dim).or_else(|e| at.err(r.family.span(), e.to_string()))?;
    if spec.range() != *r.range.get_ref() {
        return at.err(
            r.range.span(),
            format!(
                "family `{family}` has range {}, not {}",
                spec.range(),
                r.range.get_ref()
            ),
        );
    }
    if spec.dim() != dim {
        return at.err(
            r.family.span(),
            format!("family `{family}` is {}-dimensional", spec.dim()),
        );
    }

    let oracle_torus = match &raw.oracle {
        Some(g) => torus(&g.get_ref().side)?,
        None => model_torus,
    };
    let sim_torus = match &raw.simulate {
        Some(g) => torus(&g.get_ref().side)?,
        None => model_torus,
    };
    for (t, span) in [
        (
            oracle_torus,
            raw.oracle.as_ref().map_or(m.side.span(), |g| g.get_ref().side.span()),
        ),
        (
            sim_torus,
            raw.simulate.as_ref().map_or(m.side.span(), |g| g.get_ref().side.span()),
        ),
    ] {
        spec.check_torus(&t).or_else(|e| at.err(span, e.to_string()))?;
    }
    if mode == Mode::Compare && oracle_torus != sim_torus {
        let span = raw
            .simulate
            .as_ref()
            .or(raw.oracle.as_ref())
            .map_or(m.side.span(), |g| g.get_ref().side.span());
        return at.err(
            span,
            format!(
                "compare needs one torus, but the oracle uses side {} and the simulation side {}",
                oracle_torus.side(),
                sim_torus.side()
            ),
        );
    }

    let needs_mc = matches!(mode, Mode::Simulate | Mode::Compare);
    let positive = |v: &Option<Spanned<f64>>, name: &str| -> Result<Option<f64>, ConfigError> {
        match v {
            Some(s) if !(*s.get_ref() > 0.0) => at.err(s.span(), format!("run.{name} must be positive")),
            Some(s) => Ok(Some(*s.get_ref())),
            None => Ok(None),
        }
    };
    let horizon = positive(&run.horizon, "horizon")?;
    let gamma = positive(&run.gamma, "gamma")?;
    let replicas = match &run.replicas {
        Some(n) if *n.get_ref() < 2 => return at.err(n.span(), "run.replicas must be at least 2"),
        Some(n) => Some(*n.get_ref()),
        None => None,
    };
    if needs_mc && (horizon.is_none() || replicas.is_none()) {
        return at.err(
            raw.run.span(),
            format!("mode {} needs run.horizon and run.replicas", mode.name()),
        );
    }
    let strengths = match (&run.strengths, mode) {
        (Some(s), _) => {
            for &x in s.get_ref() {
                build_spec(&family, x, dim).or_else(|e| at.err(s.span(), e.to_string()))?;
            }
            s.get_ref().clone()
        }
        (None, Mode::Sweep) => return at.err(raw.run.span(), "mode sweep needs run.strengths"),
        (None, _) => Vec::new(),
    };
    let batches = match &run.batches {
        Some(b) if *b.get_ref() == 0 => return at.err(b.span(), "run.batches must be at least 1"),
        Some(b) => *b.get_ref(),
        None => 10,
    };
    let oracle_side_line = at.line(raw.oracle.as_ref().map_or(m.side.span(), |g| g.get_ref().side.span()));
    let non_negative = |v: &Option<Spanned<f64>>, name: &str, default: f64| -> Result<f64, ConfigError> {
        match v {
            Some(s) if !(*s.get_ref() >= 0.0) => at.err(s.span(), format!("run.{name} must be non-negative")),
            Some(s) => Ok(*s.get_ref()),
            None => Ok(default),
        }
    };
    let tolerance = non_negative(&run.tolerance, "tolerance", 1e-9)?;
    let equality_tolerance = non_negative(&run.equality_tolerance, "equality_tolerance", 1e-8)?;
    let tv_tolerance = non_negative(&run.tv_tolerance, "tv_tolerance", 0.05)?;
    let times = match &run.times {
        Some(t) if t.get_ref().is_empty() || t.get_ref().iter().any(|x| !(*x >= 0.0)) => {
            return at.err(t.span(), "run.times must be a non-empty list of non-negative times")
        }
        Some(t) => t.get_ref().clone(),
        None => vec![0.1, 0.5, 1.0, 2.0, 5.0],
    };
    let functions = match &run.functions {
        Some(n) if *n.get_ref() == 0 => return at.err(n.span(), "run.functions must be at least 1"),
        Some(n) => *n.get_ref(),
        None => 20,
    };
    let order = run.order.as_ref().map_or(5, |o| *o.get_ref());

    Ok(Experiment {
        source: src.to_string(),
        model,
        spec,
        family,
        strength,
        oracle_torus,
        sim_torus,
        seed: run.seed,
        horizon,
        replicas,
        order,
        tolerance,
        equality_tolerance,
        batches,
        out: run.out.clone(),
        oracle_side_line,
        tv_tolerance,
        times,
        functions,
        state_cap: run.state_cap.unwrap_or(rwdre::oracle::DEFAULT_STATE_CAP),
        gamma,
        strengths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
[model]
kind = \"independent\"
rho = 0.5
dim = 1
side = 4

[rates]
family = \"interface\"
strength = 0.05
range = 1

[run]
seed = 1
";

    #[test]
    fn minimal_oracle_config() {
        let e = parse(BASE, Mode::Oracle).unwrap();
        assert_eq!(e.oracle_torus.side(), 4);
        assert_eq!(e.order, 5);
    }

    #[test]
    fn missing_physical_field_is_reported() {
        let src = BASE.replace("rho = 0.5\n", "");
        let err = parse(&src, Mode::Oracle).unwrap_err();
        assert!(err.message.contains("rho"), "{err}");
    }

    #[test]
    fn bad_density_points_at_its_line() {
        let src = BASE.replace("rho = 0.5", "rho = 1.5");
        let err = parse(&src, Mode::Oracle).unwrap_err();
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn unknown_kind_and_family() {
        let err = parse(&BASE.replace("\"independent\"", "\"north\""), Mode::Oracle).unwrap_err();
        assert_eq!(err.line, Some(2));
        let err = parse(&BASE.replace("\"interface\"", "\"ballistic\""), Mode::Oracle).unwrap_err();
        assert_eq!(err.line, Some(8));
    }

    #[test]
    fn compare_needs_matching_tori() {
        let src = format!("{BASE}horizon = 10.0\nreplicas = 10\n\n[oracle]\nside = 4\n\n[simulate]\nside = 6\n");
        let err = parse(&src, Mode::Compare).unwrap_err();
        assert!(err.message.contains("one torus") && err.line.is_some(), "{err}");
        assert!(parse(&src, Mode::Oracle).is_ok());
    }

    #[test]
    fn simulate_needs_horizon() {
        let err = parse(BASE, Mode::Simulate).unwrap_err();
        assert!(err.message.contains("horizon"));
    }

    #[test]
    fn mode_mismatch() {
        let src = BASE.replace("seed = 1", "seed = 1\nmode = \"sweep\"");
        let err = parse(&src, Mode::Oracle).unwrap_err();
        assert_eq!(err.line, Some(14));
    }

    #[test]
    fn negative_tolerance_is_rejected() {
        let src = BASE.replace("seed = 1", "seed = 1\ntolerance = -1.0");
        let err = parse(&src, Mode::Oracle).unwrap_err();
        assert_eq!(err.line, Some(14));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let src = BASE.replace("dim = 1", "dim = 1\ndensity = 0.2");
        let err = parse(&src, Mode::Oracle).unwrap_err();
        assert!(err.message.contains("density") && err.line == Some(5), "{err}");
    }

    #[test]
    fn sweep_needs_strengths_within_family_limits() {
        let err = parse(BASE, Mode::Sweep).unwrap_err();
        assert!(err.message.contains("strengths"));
        let src = format!("{BASE}strengths = [0.1, 0.7]\n");
        let err = parse(&src, Mode::Sweep).unwrap_err();
        assert_eq!(err.line, Some(14));
        let src = format!("{BASE}strengths = [0.1, 0.2]\n");
        assert_eq!(parse(&src, Mode::Sweep).unwrap().strengths, vec![0.1, 0.2]);
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let src = BASE.replace("dim = 1", "dim = = 1");
        let err = parse(&src, Mode::Oracle).unwrap_err();
        assert_eq!(err.line, Some(4));
    }
}
