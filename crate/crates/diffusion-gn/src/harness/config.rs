//! Flat-text experiment configuration.
//!
//! A config file is UTF-8 text with one `key = value` pair per line, dotted
//! key namespaces (`problem.`, `topology.`, `combine.`, `solver.`,
//! `analysis.`, `output.`) and `#` comments. The format is deliberately dumb:
//! no sections, no quoting, no escapes. Unknown keys and duplicate keys are
//! errors rather than silently ignored, so a typo cannot quietly run the
//! wrong experiment.
//!
//! [`to_config_text`] renders a config back into the canonical commented
//! template; the output of `gen-config` round-trips through [`parse_config`]
//! bit-identically.

use super::HarnessError;
use crate::network::WeightRule;
use crate::problem::{ProblemKind, DEFAULT_SAFETY};
use crate::solvers::{AdaptAt, Mode};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

const DEFAULT_NOISE: f64 = 0.0;
const DEFAULT_SEED: u64 = 1;
const DEFAULT_TOL: f64 = 1e-8;
const DEFAULT_SAMPLES: usize = 200;

/// Everything one experiment needs, fully validated.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub topology: TopologySpec,
    pub combine_rule: WeightRule,
    pub solver: SolverSpec,
    pub analysis: AnalysisSpec,
    /// Directory all artifacts are written into (created on demand).
    pub output_dir: PathBuf,
}

/// Which generated problem instance to solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub nodes: usize,
    pub dim: usize,
    pub noise: f64,
    pub seed: u64,
}

/// How the nodes are wired together.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologySpec {
    Complete,
    Ring,
    Path,
    RandomGeometric { radius: f64, seed: u64 },
    /// Edge list file in the format written by `Topology::write_edge_list`.
    EdgeList { path: PathBuf },
}

impl TopologySpec {
    pub fn kind_str(&self) -> &'static str {
        match self {
            TopologySpec::Complete => "complete",
            TopologySpec::Ring => "ring",
            TopologySpec::Path => "path",
            TopologySpec::RandomGeometric { .. } => "random_geometric",
            TopologySpec::EdgeList { .. } => "edge_list",
        }
    }
}

/// Step rule parameters plus the common initial estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub mode: Mode,
    pub alpha: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub adapt_at: AdaptAt,
    /// Initial estimate as per-component fractions of the domain box; every
    /// node starts from the same point.
    pub x0_frac: Vec<f64>,
}

/// Certification parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSpec {
    /// Iteration horizon for the discrepancy recursion; `None` defaults to
    /// `solver.max_iters` at use time.
    pub horizon: Option<usize>,
    pub safety: f64,
    pub samples: usize,
    pub seed: u64,
}

impl AnalysisSpec {
    /// The horizon actually used when certifying against `max_iters`.
    pub fn effective_horizon(&self, max_iters: usize) -> usize {
        self.horizon.unwrap_or(max_iters)
    }
}

// ---------------------------------------------------------------------------
// parsing
// ---------------------------------------------------------------------------

/// One `key = value` line, in file order.
struct Entry {
    line: usize,
    key: String,
    value: String,
    consumed: bool,
}

struct RawConfig {
    entries: Vec<Entry>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut entries: Vec<Entry> = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw_line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(HarnessError::Parse {
                    line,
                    message: format!("expected `key = value`, got '{trimmed}'"),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(HarnessError::Parse {
                    line,
                    message: "missing key before '='".into(),
                });
            }
            if value.is_empty() {
                return Err(HarnessError::Parse {
                    line,
                    message: format!("missing value for key '{key}'"),
                });
            }
            if entries.iter().any(|e| e.key == key) {
                return Err(HarnessError::Parse {
                    line,
                    message: format!("duplicate key '{key}'"),
                });
            }
            entries.push(Entry {
                line,
                key,
                value,
                consumed: false,
            });
        }
        Ok(RawConfig { entries })
    }

    /// Takes a key's value, marking it consumed. `None` when absent.
    fn take(&mut self, key: &str) -> Option<&str> {
        self.entries.iter_mut().find(|e| e.key == key).map(|e| {
            e.consumed = true;
            e.value.as_str()
        })
    }

    fn require(&mut self, key: &str) -> Result<&str, HarnessError> {
        // Two passes keep the borrow checker happy with the error path.
        if self.entries.iter().any(|e| e.key == key) {
            Ok(self.take(key).expect("key just located"))
        } else {
            Err(missing(key))
        }
    }

    /// First never-consumed key in file order, if any.
    fn leftover(&self) -> Option<&Entry> {
        self.entries.iter().find(|e| !e.consumed)
    }
}

fn missing(key: &str) -> HarnessError {
    HarnessError::Validation {
        key: key.into(),
        message: "missing required key".into(),
    }
}

fn invalid(key: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Validation {
        key: key.into(),
        message: message.into(),
    }
}

fn parse_as<T>(key: &str, raw: &str) -> Result<T, HarnessError>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| invalid(key, format!("cannot parse '{raw}': {e}")))
}

fn required<T>(raw: &mut RawConfig, key: &str) -> Result<T, HarnessError>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    let value = raw.require(key)?.to_string();
    parse_as(key, &value)
}

fn optional<T>(raw: &mut RawConfig, key: &str, default: T) -> Result<T, HarnessError>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    match raw.take(key) {
        Some(value) => {
            let value = value.to_string();
            parse_as(key, &value)
        }
        None => Ok(default),
    }
}

/// Rejects keys that only make sense for another topology kind.
fn forbid(raw: &mut RawConfig, key: &str, kind: &str) -> Result<(), HarnessError> {
    if raw.take(key).is_some() {
        return Err(invalid(key, format!("not valid for topology.kind = {kind}")));
    }
    Ok(())
}

/// Parses and fully validates a config from text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, HarnessError> {
    let mut raw = RawConfig::parse(text)?;

    let kind: ProblemKind = required(&mut raw, "problem.kind")?;
    let nodes: usize = required(&mut raw, "problem.nodes")?;
    let dim: usize = required(&mut raw, "problem.dim")?;
    let noise: f64 = optional(&mut raw, "problem.noise", DEFAULT_NOISE)?;
    let problem_seed: u64 = optional(&mut raw, "problem.seed", DEFAULT_SEED)?;
    if nodes == 0 {
        return Err(invalid("problem.nodes", "need at least one node"));
    }
    if dim == 0 {
        return Err(invalid("problem.dim", "need at least one parameter"));
    }
    if !noise.is_finite() || noise < 0.0 {
        return Err(invalid(
            "problem.noise",
            format!("must be finite and nonnegative, got {noise}"),
        ));
    }
    let problem = ProblemSpec {
        kind,
        nodes,
        dim,
        noise,
        seed: problem_seed,
    };

    let topology_kind = raw.require("topology.kind")?.to_string();
    let topology = match topology_kind.as_str() {
        "complete" | "ring" | "path" => {
            forbid(&mut raw, "topology.radius", &topology_kind)?;
            forbid(&mut raw, "topology.seed", &topology_kind)?;
            forbid(&mut raw, "topology.edge_file", &topology_kind)?;
            match topology_kind.as_str() {
                "complete" => TopologySpec::Complete,
                "ring" => TopologySpec::Ring,
                _ => TopologySpec::Path,
            }
        }
        "random_geometric" => {
            let radius: f64 = required(&mut raw, "topology.radius")?;
            let seed: u64 = optional(&mut raw, "topology.seed", DEFAULT_SEED)?;
            forbid(&mut raw, "topology.edge_file", "random_geometric")?;
            if !radius.is_finite() || radius <= 0.0 {
                return Err(invalid(
                    "topology.radius",
                    format!("must be finite and positive, got {radius}"),
                ));
            }
            TopologySpec::RandomGeometric { radius, seed }
        }
        "edge_list" => {
            let path = raw.require("topology.edge_file")?.to_string();
            forbid(&mut raw, "topology.radius", "edge_list")?;
            forbid(&mut raw, "topology.seed", "edge_list")?;
            TopologySpec::EdgeList {
                path: PathBuf::from(path),
            }
        }
        other => {
            return Err(invalid(
                "topology.kind",
                format!(
                    "unknown topology '{other}' (expected complete, ring, path, random_geometric, or edge_list)"
                ),
            ));
        }
    };

    let combine_rule: WeightRule = optional(&mut raw, "combine.rule", WeightRule::Uniform)?;

    let mode: Mode = required(&mut raw, "solver.mode")?;
    let alpha: f64 = required(&mut raw, "solver.alpha")?;
    let max_iters: usize = required(&mut raw, "solver.max_iters")?;
    let tol: f64 = optional(&mut raw, "solver.tol", DEFAULT_TOL)?;
    let adapt_at: AdaptAt = optional(&mut raw, "solver.adapt_at", AdaptAt::default())?;
    let x0_text = raw.require("solver.x0_frac")?.to_string();
    if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
        return Err(invalid(
            "solver.alpha",
            format!("step size must lie in (0, 1], got {alpha}"),
        ));
    }
    if max_iters == 0 {
        return Err(invalid("solver.max_iters", "must be at least 1"));
    }
    if !tol.is_finite() || tol < 0.0 {
        return Err(invalid(
            "solver.tol",
            format!("must be finite and nonnegative, got {tol}"),
        ));
    }
    let x0_frac = parse_fractions(&x0_text)?;
    if x0_frac.len() != dim {
        return Err(invalid(
            "solver.x0_frac",
            format!(
                "{} fractions for a {dim}-dimensional problem",
                x0_frac.len()
            ),
        ));
    }
    let solver = SolverSpec {
        mode,
        alpha,
        max_iters,
        tol,
        adapt_at,
        x0_frac,
    };

    let horizon: Option<usize> = match raw.take("analysis.horizon") {
        Some(value) => {
            let value = value.to_string();
            Some(parse_as("analysis.horizon", &value)?)
        }
        None => None,
    };
    let safety: f64 = optional(&mut raw, "analysis.safety", DEFAULT_SAFETY)?;
    let samples: usize = optional(&mut raw, "analysis.samples", DEFAULT_SAMPLES)?;
    let analysis_seed: u64 = optional(&mut raw, "analysis.seed", DEFAULT_SEED)?;
    if horizon == Some(0) {
        return Err(invalid("analysis.horizon", "must be at least 1"));
    }
    if !safety.is_finite() || safety <= 1.0 {
        return Err(invalid(
            "analysis.safety",
            format!("must be finite and greater than 1, got {safety}"),
        ));
    }
    if samples < 2 {
        return Err(invalid("analysis.samples", "need at least 2 samples"));
    }
    let analysis = AnalysisSpec {
        horizon,
        safety,
        samples,
        seed: analysis_seed,
    };

    let output_dir = PathBuf::from(raw.require("output.dir")?);

    if let Some(entry) = raw.leftover() {
        return Err(invalid(
            &entry.key,
            format!("unknown key (line {})", entry.line),
        ));
    }

    Ok(ExperimentConfig {
        problem,
        topology,
        combine_rule,
        solver,
        analysis,
        output_dir,
    })
}

fn parse_fractions(text: &str) -> Result<Vec<f64>, HarnessError> {
    let key = "solver.x0_frac";
    let mut fractions = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err(invalid(key, "empty component in fraction list"));
        }
        let value: f64 = parse_as(key, part)?;
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(invalid(
                key,
                format!("fractions must lie in [0, 1], got {value}"),
            ));
        }
        fractions.push(value);
    }
    Ok(fractions)
}

/// Reads and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

// ---------------------------------------------------------------------------
// rendering
// ---------------------------------------------------------------------------

/// Renders the canonical commented config text for `config`.
///
/// The rendering is deterministic and parses back to an equal config, so
/// `gen-config` output round-trips bit-identically.
pub fn to_config_text(config: &ExperimentConfig) -> String {
    let mut out = String::new();
    let p = &config.problem;
    let s = &config.solver;
    let a = &config.analysis;

    out.push_str("# diffusion-gn experiment configuration.\n");
    out.push_str("# Flat `key = value` lines; `#` starts a comment; unknown keys are rejected.\n");
    out.push('\n');
    out.push_str("# Problem family: linear, scalar_sqrt, exponential_fit, or localization.\n");
    let _ = writeln!(out, "problem.kind = {}", p.kind);
    out.push_str("# Node count and parameter dimension.\n");
    let _ = writeln!(out, "problem.nodes = {}", p.nodes);
    let _ = writeln!(out, "problem.dim = {}", p.dim);
    out.push_str("# Measurement noise scale and generator seed.\n");
    let _ = writeln!(out, "problem.noise = {}", p.noise);
    let _ = writeln!(out, "problem.seed = {}", p.seed);
    out.push('\n');
    out.push_str("# Topology: complete, ring, path, random_geometric, or edge_list.\n");
    out.push_str("# random_geometric also takes topology.radius and topology.seed;\n");
    out.push_str("# edge_list also takes topology.edge_file.\n");
    let _ = writeln!(out, "topology.kind = {}", config.topology.kind_str());
    match &config.topology {
        TopologySpec::RandomGeometric { radius, seed } => {
            let _ = writeln!(out, "topology.radius = {radius}");
            let _ = writeln!(out, "topology.seed = {seed}");
        }
        TopologySpec::EdgeList { path } => {
            let _ = writeln!(out, "topology.edge_file = {}", path.display());
        }
        _ => {}
    }
    out.push('\n');
    out.push_str("# Combination weights: uniform or metropolis.\n");
    let _ = writeln!(out, "combine.rule = {}", config.combine_rule);
    out.push('\n');
    out.push_str("# Solver mode: centralized, noncooperative, or diffusion.\n");
    let _ = writeln!(out, "solver.mode = {}", s.mode);
    let _ = writeln!(out, "solver.alpha = {}", s.alpha);
    let _ = writeln!(out, "solver.max_iters = {}", s.max_iters);
    let _ = writeln!(out, "solver.tol = {}", s.tol);
    out.push_str("# Where the adapt phase evaluates neighbor models:\n");
    out.push_str("# neighbor_aggregates (the literal update rule) or own_aggregate.\n");
    let _ = writeln!(out, "solver.adapt_at = {}", s.adapt_at);
    out.push_str("# Initial estimate as per-component fractions of the domain box.\n");
    let fractions: Vec<String> = s.x0_frac.iter().map(|f| format!("{f}")).collect();
    let _ = writeln!(out, "solver.x0_frac = {}", fractions.join(","));
    out.push('\n');
    out.push_str("# Certification horizon (omit to default to solver.max_iters),\n");
    out.push_str("# bound sampling effort and seed, and the safety inflation factor.\n");
    if let Some(horizon) = a.horizon {
        let _ = writeln!(out, "analysis.horizon = {horizon}");
    }
    let _ = writeln!(out, "analysis.safety = {}", a.safety);
    let _ = writeln!(out, "analysis.samples = {}", a.samples);
    let _ = writeln!(out, "analysis.seed = {}", a.seed);
    out.push('\n');
    out.push_str("# Artifacts are written into this directory.\n");
    let _ = writeln!(out, "output.dir = {}", config.output_dir.display());
    out
}

/// The default experiment: a localization instance whose certificate passes
/// every condition, suitable for `run`, `certify`, and `audit` as generated.
pub fn template_config() -> ExperimentConfig {
    ExperimentConfig {
        problem: ProblemSpec {
            kind: ProblemKind::Localization,
            nodes: 6,
            dim: 2,
            noise: 0.01,
            seed: 31,
        },
        topology: TopologySpec::Complete,
        combine_rule: WeightRule::Uniform,
        solver: SolverSpec {
            mode: Mode::Diffusion,
            alpha: 0.02,
            max_iters: 1200,
            tol: 1e-8,
            adapt_at: AdaptAt::NeighborAggregates,
            x0_frac: vec![0.9, 0.9],
        },
        analysis: AnalysisSpec {
            horizon: Some(50),
            safety: 1.005,
            samples: 200,
            seed: 11,
        },
        output_dir: PathBuf::from("out"),
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_text() -> String {
        [
            "problem.kind = scalar_sqrt",
            "problem.nodes = 4",
            "problem.dim = 1",
            "topology.kind = ring",
            "solver.mode = diffusion",
            "solver.alpha = 0.5",
            "solver.max_iters = 100",
            "solver.x0_frac = 0.25",
            "output.dir = out",
        ]
        .join("\n")
    }

    #[test]
    fn template_round_trips_bit_identically() {
        let text = to_config_text(&template_config());
        let parsed = parse_config(&text).expect("template parses");
        assert_eq!(
            parsed,
            template_config(),
            "parsed template differs from the source config"
        );
        assert_eq!(
            to_config_text(&parsed),
            text,
            "re-rendered template is not byte-identical"
        );
    }

    #[test]
    fn minimal_config_fills_documented_defaults() {
        let config = parse_config(&minimal_text()).expect("minimal config parses");
        assert_eq!(config.problem.noise, DEFAULT_NOISE);
        assert_eq!(config.problem.seed, DEFAULT_SEED);
        assert_eq!(config.combine_rule, WeightRule::Uniform);
        assert_eq!(config.solver.tol, DEFAULT_TOL);
        assert_eq!(config.solver.adapt_at, AdaptAt::NeighborAggregates);
        assert_eq!(config.analysis.horizon, None);
        assert_eq!(config.analysis.safety, DEFAULT_SAFETY);
        assert_eq!(config.analysis.samples, DEFAULT_SAMPLES);
        assert_eq!(
            config.analysis.effective_horizon(config.solver.max_iters),
            100,
            "horizon should default to the iteration budget"
        );
    }

    #[test]
    fn defaulted_config_also_round_trips() {
        let config = parse_config(&minimal_text()).expect("minimal config parses");
        let text = to_config_text(&config);
        let reparsed = parse_config(&text).expect("rendered config parses");
        assert_eq!(reparsed, config);
        assert_eq!(to_config_text(&reparsed), text);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let text = format!("{}\nsolver.alhpa = 0.1\n", minimal_text());
        match parse_config(&text) {
            Err(HarnessError::Validation { key, .. }) => assert_eq!(key, "solver.alhpa"),
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_keys_are_parse_errors_with_the_second_line() {
        let text = "problem.kind = linear\nproblem.kind = localization\n";
        match parse_config(text) {
            Err(HarnessError::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("duplicate"), "message was '{message}'");
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn structural_garbage_reports_its_line_number() {
        let text = "# comment\n\nthis line has no equals sign\n";
        match parse_config(text) {
            Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_topology_kind_is_a_validation_error() {
        let text = minimal_text().replace("topology.kind = ring\n", "");
        match parse_config(&text) {
            Err(HarnessError::Validation { key, .. }) => assert_eq!(key, "topology.kind"),
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_alpha_names_the_solver_key() {
        let text = minimal_text().replace("solver.alpha = 0.5", "solver.alpha = 1.5");
        match parse_config(&text) {
            Err(HarnessError::Validation { key, .. }) => assert_eq!(key, "solver.alpha"),
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn fraction_count_must_match_the_dimension() {
        let text = minimal_text().replace("solver.x0_frac = 0.25", "solver.x0_frac = 0.25,0.5");
        match parse_config(&text) {
            Err(HarnessError::Validation { key, message }) => {
                assert_eq!(key, "solver.x0_frac");
                assert!(message.contains("1-dimensional"), "message was '{message}'");
            }
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn topology_parameters_are_scoped_to_their_kind() {
        let text = format!("{}\ntopology.radius = 0.5\n", minimal_text());
        match parse_config(&text) {
            Err(HarnessError::Validation { key, .. }) => assert_eq!(key, "topology.radius"),
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn geometric_and_edge_list_topologies_round_trip() {
        let mut config = parse_config(&minimal_text()).expect("minimal config parses");
        config.topology = TopologySpec::RandomGeometric {
            radius: 0.75,
            seed: 9,
        };
        let text = to_config_text(&config);
        assert_eq!(parse_config(&text).expect("geometric parses"), config);

        config.topology = TopologySpec::EdgeList {
            path: PathBuf::from("graph.edges"),
        };
        let text = to_config_text(&config);
        assert_eq!(parse_config(&text).expect("edge list parses"), config);
    }

    #[test]
    fn comments_blanks_and_spacing_are_ignored() {
        let text = format!(
            "# leading comment\n\n   {}\n\n# trailing comment\n",
            minimal_text().replace('\n', "\n  ")
        );
        let config = parse_config(&text).expect("whitespace-heavy config parses");
        assert_eq!(config.problem.nodes, 4);
    }
}
