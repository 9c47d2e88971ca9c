//! Batch front door: parses TOML run configurations, executes analysis
//! pipelines over built-in or inline sets, and writes a `lipgeo-report/1`
//! JSON document, per-curve CSVs, and a plain-text summary.
//!
//! Exit status contract: 0 when every verdict-bearing task matched its
//! declared expectation (expectations are optional), 2 on a verdict mismatch,
//! 1 on errors.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use lipgeo::analysis::{
    check_isosceles, compare_center_links, detect_arc_divergence, estimate_lne_constant,
    estimate_llne, log_grid, tangent_cone_at_infinity, verify_equivalence_triple,
    verify_link_equivalence, AnalysisError, ArcSample, FitDirection, Verdict,
};
use lipgeo::corpus;
use lipgeo::embed::{distortion_bound, normal_embed, DEFAULT_SLACK};
use lipgeo::expr::Expr;
use lipgeo::geom::{norm, Region};
use lipgeo::io;
use lipgeo::metric::{build_graph, clamp_radius, GraphRule, RadiusFunction};
use lipgeo::report::{render_summary, Report, TaskRecord, TaskStatus};
use lipgeo::setdef::{sample_set, SampleCloud, SetSpec};
use lipgeo::transforms::{
    conjugate_by_inversion, invert, radius_normalize, seeded_bilipschitz_map, seeded_points,
    seeded_sphere_points, stereographic_lift, stereographic_project, stereographic_project_south,
    SampledMap,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("set `{0}` is not declared and is not a corpus entry")]
    UnknownSet(String),
    #[error("task {index} ({kind}): {msg}")]
    Task { index: usize, kind: String, msg: String },
    #[error("set `{name}`: {msg}")]
    Set { name: String, msg: String },
}

// ---------------------------------------------------------------------------
// Configuration schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    /// Global density override applied to sets without their own.
    pub density: Option<f64>,
    /// Discretization slack for embedding bound checks.
    pub slack: Option<f64>,
    #[serde(default)]
    pub fail_fast: bool,
    #[serde(default)]
    pub sets: Vec<SetConfig>,
    #[serde(default)]
    pub tasks: Vec<TaskConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetConfig {
    /// Name of a built-in entry; mutually exclusive with an inline spec.
    pub corpus: Option<String>,
    pub name: Option<String>,
    pub ambient_dim: Option<usize>,
    #[serde(default)]
    pub unbounded: bool,
    #[serde(default)]
    pub pieces: Vec<PieceConfig>,
    pub region: Option<RegionConfig>,
    pub density: Option<f64>,
    /// Neighborhood rule: eps = factor * density; defaults to 3.
    pub epsilon_factor: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PieceConfig {
    /// Polynomials in x1..xn; the piece is {eq = 0, ineq >= 0}.
    Implicit {
        #[serde(default)]
        equalities: Vec<String>,
        #[serde(default)]
        inequalities: Vec<String>,
    },
    /// Map components in u1..uk over the given parameter box.
    Parametric { param_box: Vec<[f64; 2]>, map: Vec<String> },
    Cloud { points: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegionConfig {
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
}

impl RegionConfig {
    fn to_region(&self) -> Region {
        match self {
            RegionConfig::Ball { center, radius } => Region::ball(center.clone(), *radius),
            RegionConfig::Annulus { center, inner, outer } => {
                Region::annulus(center.clone(), *inner, *outer)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum TGridConfig {
    List(Vec<f64>),
    Log { min: f64, max: f64, count: usize },
}

impl TGridConfig {
    fn to_grid(&self) -> Result<Vec<f64>, String> {
        let grid = match self {
            TGridConfig::List(v) => v.clone(),
            TGridConfig::Log { min, max, count } => {
                if !(*min > 0.0 && max > min && *count >= 2) {
                    return Err("log grid needs 0 < min < max and count >= 2".into());
                }
                log_grid(*min, *max, *count)
            }
        };
        if grid.len() < 2 {
            return Err("grid needs at least two values".into());
        }
        if grid[0] <= 0.0 || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err("grid must be strictly increasing and positive".into());
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Sample,
    Lne,
    Llne,
    LinkEquivalence,
    ArcDivergence,
    TangentCone,
    Isosceles,
    CenterCompare,
    EquivalenceTriple,
    Embed,
    TransformCheck,
}

impl TaskKind {
    fn name(&self) -> &'static str {
        match self {
            TaskKind::Sample => "sample",
            TaskKind::Lne => "lne",
            TaskKind::Llne => "llne",
            TaskKind::LinkEquivalence => "link-equivalence",
            TaskKind::ArcDivergence => "arc-divergence",
            TaskKind::TangentCone => "tangent-cone",
            TaskKind::Isosceles => "isosceles",
            TaskKind::CenterCompare => "center-compare",
            TaskKind::EquivalenceTriple => "equivalence-triple",
            TaskKind::Embed => "embed",
            TaskKind::TransformCheck => "transform-check",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub kind: TaskKind,
    /// Referenced set; required for everything except transform-check.
    pub set: Option<String>,
    pub t_grid: Option<TGridConfig>,
    pub density: Option<f64>,
    /// Shifted sphere center for center-compare (or llne around p).
    pub center: Option<Vec<f64>>,
    /// Arc coordinate expressions in the variable t (2 arcs for divergence,
    /// 3 for isosceles).
    pub arcs: Option<Vec<Vec<String>>>,
    /// Norm band for tangent-cone clustering.
    pub band: Option<[f64; 2]>,
    /// Transform pipelines to check; defaults to all of
    /// invert, stereo, stereo-inverse, normalize, conjugate.
    pub checks: Option<Vec<String>>,
    pub expect: Option<String>,
    pub slack: Option<f64>,
    /// Claimed piece constant for embed tasks; overrides the corpus value and
    /// lets inline sets (whose pieces become the pancakes) run the tower.
    pub pancake_m: Option<f64>,
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

// ---------------------------------------------------------------------------
// Set resolution and sampling cache
// ---------------------------------------------------------------------------

struct ResolvedSet {
    spec: SetSpec,
    region: Region,
    density: f64,
    epsilon_factor: f64,
    t_grid: Option<Vec<f64>>,
    pancake_m: Option<f64>,
    center_p: Option<Vec<f64>>,
    tangent_band: Option<(f64, f64)>,
}

impl ResolvedSet {
    fn rule(&self, density: f64) -> GraphRule {
        GraphRule::EpsilonBall(self.epsilon_factor * density)
    }
}

fn resolve_sets(config: &RunConfig) -> Result<HashMap<String, ResolvedSet>, ConfigError> {
    let mut out = HashMap::new();
    for sc in &config.sets {
        let (key, resolved) = match (&sc.corpus, &sc.name) {
            (Some(corpus_name), _) => {
                let entry = corpus::get(corpus_name)
                    .ok_or_else(|| ConfigError::UnknownSet(corpus_name.clone()))?;
                let eps_factor = match entry.rule {
                    GraphRule::EpsilonBall(e) => e / entry.density,
                    GraphRule::KNearest(_) => 3.0,
                };
                (
                    corpus_name.clone(),
                    ResolvedSet {
                        spec: entry.spec(),
                        region: sc.region.as_ref().map(|r| r.to_region()).unwrap_or(entry.region.clone()),
                        density: sc.density.or(config.density).unwrap_or(entry.density),
                        epsilon_factor: sc.epsilon_factor.unwrap_or(eps_factor),
                        t_grid: entry.t_grid.clone(),
                        pancake_m: entry.pancake_m,
                        center_p: entry.center_p.clone(),
                        tangent_band: entry.tangent_band,
                    },
                )
            }
            (None, Some(name)) => {
                let dim = sc.ambient_dim.ok_or_else(|| ConfigError::Set {
                    name: name.clone(),
                    msg: "inline set needs ambient_dim".into(),
                })?;
                if sc.pieces.is_empty() {
                    return Err(ConfigError::Set {
                        name: name.clone(),
                        msg: "inline set needs at least one piece".into(),
                    });
                }
                let pieces = sc
                    .pieces
                    .iter()
                    .map(|p| build_piece(p, dim))
                    .collect::<Result<Vec<_>, String>>()
                    .map_err(|msg| ConfigError::Set { name: name.clone(), msg })?;
                let spec = SetSpec::new(name, dim, pieces, sc.unbounded);
                spec.validate().map_err(|e| ConfigError::Set {
                    name: name.clone(),
                    msg: e.to_string(),
                })?;
                (
                    name.clone(),
                    ResolvedSet {
                        spec,
                        region: sc
                            .region
                            .as_ref()
                            .map(|r| r.to_region())
                            .unwrap_or(Region::ball(vec![0.0; dim], 2.0)),
                        density: sc.density.or(config.density).unwrap_or(0.01),
                        epsilon_factor: sc.epsilon_factor.unwrap_or(3.0),
                        t_grid: None,
                        pancake_m: None,
                        center_p: None,
                        tangent_band: None,
                    },
                )
            }
            (None, None) => {
                return Err(ConfigError::Parse(
                    "a [[sets]] entry needs either `corpus` or `name`".into(),
                ))
            }
        };
        out.insert(key, resolved);
    }
    Ok(out)
}

fn build_piece(p: &PieceConfig, dim: usize) -> Result<lipgeo::PieceSpec, String> {
    match p {
        PieceConfig::Implicit { equalities, inequalities } => {
            let eqs: Vec<&str> = equalities.iter().map(|s| s.as_str()).collect();
            let ineqs: Vec<&str> = inequalities.iter().map(|s| s.as_str()).collect();
            SetSpec::implicit_piece(&eqs, &ineqs, dim).map_err(|e| e.to_string())
        }
        PieceConfig::Parametric { param_box, map } => {
            let boxes: Vec<(f64, f64)> = param_box.iter().map(|b| (b[0], b[1])).collect();
            let maps: Vec<&str> = map.iter().map(|s| s.as_str()).collect();
            SetSpec::parametric_piece(&boxes, &maps).map_err(|e| e.to_string())
        }
        PieceConfig::Cloud { points } => {
            Ok(lipgeo::PieceSpec::CloudLiteral { points: points.clone() })
        }
    }
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct RunOutcome {
    pub report: Report,
    pub exit_code: i32,
}

struct Runner<'a> {
    sets: HashMap<String, ResolvedSet>,
    clouds: HashMap<(String, u64), SampleCloud>,
    out_dir: &'a Path,
    seed: u64,
    slack: f64,
}

impl<'a> Runner<'a> {
    fn resolved(&self, name: &str) -> Result<&ResolvedSet, ConfigError> {
        self.sets.get(name).ok_or_else(|| ConfigError::UnknownSet(name.to_string()))
    }

    fn cloud(&mut self, name: &str, density: Option<f64>) -> anyhow::Result<(SampleCloud, f64)> {
        let rs = self.resolved(name)?;
        let density = density.unwrap_or(rs.density);
        let key = (name.to_string(), density.to_bits());
        if !self.clouds.contains_key(&key) {
            let cloud = sample_set(&rs.spec, &rs.region, density, self.seed)?;
            self.clouds.insert(key.clone(), cloud);
        }
        Ok((self.clouds[&key].clone(), density))
    }

    fn grid_for(&self, task: &TaskConfig, name: &str) -> Result<Vec<f64>, String> {
        if let Some(g) = &task.t_grid {
            return g.to_grid();
        }
        if let Some(g) = self.sets.get(name).and_then(|r| r.t_grid.clone()) {
            return Ok(g);
        }
        Err("task needs a t_grid (none configured and the set has no default)".into())
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Bounded => "bounded",
        Verdict::Diverging => "diverging",
        Verdict::Inconclusive => "inconclusive",
        Verdict::NotApplicable => "not-applicable",
    }
}

fn parse_arcs(arcs: &[Vec<String>], grid: &[f64]) -> Result<Vec<ArcSample>, String> {
    arcs.iter()
        .map(|coords| {
            let exprs: Vec<Expr> = coords
                .iter()
                .map(|c| Expr::parse(c, &["t"]))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let points: Vec<Vec<f64>> = grid
                .iter()
                .map(|t| exprs.iter().map(|e| e.eval(&[*t])).collect())
                .collect();
            Ok(ArcSample::new(grid.to_vec(), points))
        })
        .collect()
}

/// Executes all tasks of a parsed configuration, writing outputs under
/// `out_dir`. Task errors are recorded per task without aborting later tasks
/// unless `fail_fast` is set.
pub fn run_config(config: &RunConfig, out_dir: &Path) -> anyhow::Result<RunOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let seed = config.seed.unwrap_or(0);
    let slack = config.slack.unwrap_or(DEFAULT_SLACK);
    let sets = resolve_sets(config)?;

    // validate references and grids before any task runs
    for (index, task) in config.tasks.iter().enumerate() {
        if task.kind != TaskKind::TransformCheck {
            let name = task.set.as_deref().ok_or_else(|| ConfigError::Task {
                index,
                kind: task.kind.name().into(),
                msg: "task needs a set".into(),
            })?;
            if !sets.contains_key(name) {
                return Err(ConfigError::UnknownSet(name.to_string()).into());
            }
        }
        if let Some(grid) = &task.t_grid {
            grid.to_grid().map_err(|msg| ConfigError::Task {
                index,
                kind: task.kind.name().into(),
                msg,
            })?;
        }
        if let Some(d) = task.density {
            if d <= 0.0 || d.is_nan() {
                return Err(ConfigError::Task {
                    index,
                    kind: task.kind.name().into(),
                    msg: format!("density must be positive, got {d}"),
                }
                .into());
            }
        }
    }

    let mut runner = Runner { sets, clouds: HashMap::new(), out_dir, seed, slack };

    let config_echo = serde_json::to_value(ConfigEcho::from(config))?;
    let mut report = Report::new(seed, config_echo);

    for (index, task) in config.tasks.iter().enumerate() {
        let record = run_task(&mut runner, index, task);
        let is_error = record.status == TaskStatus::Error;
        report.tasks.push(record);
        if is_error && config.fail_fast {
            break;
        }
    }

    let json = report.to_json();
    std::fs::write(out_dir.join("report.json"), serde_json::to_string_pretty(&json)?)?;
    std::fs::write(out_dir.join("summary.txt"), render_summary(&report))?;

    let exit_code = if report.has_errors() {
        1
    } else if report.has_mismatches() {
        2
    } else {
        0
    };
    Ok(RunOutcome { report, exit_code })
}

/// Serializable echo of the configuration for the report.
#[derive(serde::Serialize)]
struct ConfigEcho {
    seed: u64,
    sets: Vec<String>,
    tasks: Vec<String>,
}

impl From<&RunConfig> for ConfigEcho {
    fn from(c: &RunConfig) -> Self {
        ConfigEcho {
            seed: c.seed.unwrap_or(0),
            sets: c
                .sets
                .iter()
                .map(|s| s.corpus.clone().or(s.name.clone()).unwrap_or_default())
                .collect(),
            tasks: c.tasks.iter().map(|t| t.kind.name().to_string()).collect(),
        }
    }
}

fn run_task(runner: &mut Runner<'_>, index: usize, task: &TaskConfig) -> TaskRecord {
    let mut record = TaskRecord {
        index,
        kind: task.kind.name().to_string(),
        set: task.set.clone(),
        status: TaskStatus::Ok,
        verdict: None,
        expected: task.expect.clone(),
        error: None,
        details: Value::Null,
        curves: Vec::new(),
    };
    match execute(runner, index, task, &mut record) {
        Ok(()) => {
            if let (Some(expect), Some(got)) = (&task.expect, &record.verdict) {
                if expect != got {
                    record.status = TaskStatus::Mismatch;
                }
            }
        }
        Err(e) => {
            record.status = TaskStatus::Error;
            record.error = Some(format!("{e:#}"));
        }
    }
    record
}

fn execute(
    runner: &mut Runner<'_>,
    index: usize,
    task: &TaskConfig,
    record: &mut TaskRecord,
) -> anyhow::Result<()> {
    let need_set = || -> anyhow::Result<String> {
        task.set.clone().ok_or_else(|| {
            ConfigError::Task {
                index,
                kind: task.kind.name().into(),
                msg: "task needs a set".into(),
            }
            .into()
        })
    };

    match task.kind {
        TaskKind::Sample => {
            let name = need_set()?;
            let (cloud, density) = runner.cloud(&name, task.density)?;
            let rs = runner.resolved(&name)?;
            let graph = build_graph(&cloud, rs.rule(density));
            let base = format!("{index:02}-sample-{name}");
            io::save_cloud_csv(&runner.out_dir.join(format!("{base}.csv")), &cloud)?;
            io::save_cloud_binary(&runner.out_dir.join(format!("{base}.bin")), &cloud)?;
            io::write_graph_edges(
                std::fs::File::create(runner.out_dir.join(format!("{base}.edges.txt")))?,
                &graph,
            )?;
            record.curves =
                vec![format!("{base}.csv"), format!("{base}.bin"), format!("{base}.edges.txt")];
            let max_residual = cloud.residual.iter().copied().fold(0.0f64, f64::max);
            record.details = json!({
                "points": cloud.len(),
                "max_residual": max_residual,
                "components": graph.component_count,
                "edges": graph.edge_count(),
            });
        }
        TaskKind::Lne => {
            let name = need_set()?;
            let (cloud, density) = runner.cloud(&name, task.density)?;
            let rs = runner.resolved(&name)?;
            let graph = build_graph(&cloud, rs.rule(density));
            match estimate_lne_constant(&graph) {
                Ok(est) => {
                    let (i, j) = est.witness_pair;
                    record.details = json!({
                        "constant": est.constant,
                        "witness_pair": [i, j],
                        "witness_points": [graph.points[i], graph.points[j]],
                        "pairs_scanned": est.pairs_scanned,
                        "resolution": est.resolution_note,
                    });
                }
                Err(AnalysisError::DisconnectedInput { components }) => {
                    record.details = json!({
                        "disconnected": true,
                        "component_constants":
                            components.iter().map(|c| c.constant).collect::<Vec<_>>(),
                    });
                }
                Err(e) => return Err(e.into()),
            }
        }
        TaskKind::Llne => {
            let name = need_set()?;
            let grid = runner.grid_for(task, &name).map_err(|msg| ConfigError::Task {
                index,
                kind: task.kind.name().into(),
                msg,
            })?;
            let (cloud, _) = runner.cloud(&name, task.density)?;
            let rs = runner.resolved(&name)?;
            let radius = match &task.center {
                Some(p) => RadiusFunction::NormFrom(p.clone()),
                None => RadiusFunction::Norm,
            };
            let rep = estimate_llne(&rs.spec, &cloud, &radius, &grid)?;
            record.verdict = Some(verdict_str(rep.verdict).into());
            let curve = format!("{index:02}-llne-{name}.csv");
            let pairs: Vec<(f64, f64)> =
                rep.t_grid.iter().copied().zip(rep.ratio_per_t.iter().copied()).collect();
            io::write_curve_csv(
                std::fs::File::create(runner.out_dir.join(&curve))?,
                "t",
                "ratio",
                &pairs,
            )?;
            record.curves.push(curve);
            record.details = serde_json::to_value(&rep)?;
        }
        TaskKind::LinkEquivalence => {
            let name = need_set()?;
            let grid = runner.grid_for(task, &name).map_err(|msg| ConfigError::Task {
                index,
                kind: task.kind.name().into(),
                msg,
            })?;
            let (cloud, _) = runner.cloud(&name, task.density)?;
            let rs = runner.resolved(&name)?;
            match verify_link_equivalence(&rs.spec, &cloud, &RadiusFunction::Norm, &grid) {
                Ok(rep) => {
                    record.verdict = Some(verdict_str(rep.verdict).into());
                    let curve = format!("{index:02}-link-equivalence-{name}.csv");
                    let pairs: Vec<(f64, f64)> =
                        rep.per_t.iter().map(|e| (e.t, e.k)).collect();
                    io::write_curve_csv(
                        std::fs::File::create(runner.out_dir.join(&curve))?,
                        "t",
                        "k",
                        &pairs,
                    )?;
                    record.curves.push(curve);
                    record.details = serde_json::to_value(&rep)?;
                }
                Err(AnalysisError::DisconnectedLink { t }) => {
                    // hypothesis failure: report the abstention as a verdict
                    record.verdict = Some("disconnected-link".into());
                    record.details = json!({ "disconnected_at_t": t });
                }
                Err(e) => return Err(e.into()),
            }
        }
        TaskKind::ArcDivergence => {
            let name = need_set()?;
            let grid = runner.grid_for(task, &name).map_err(|msg| ConfigError::Task {
                index,
                kind: task.kind.name().into(),
                msg,
            })?;
            let arcs_cfg = task.arcs.as_ref().ok_or_else(|| ConfigError::Task {
                index,
                kind: task.kind.name().into(),
                msg: "arc-divergence needs two arcs".into(),
            })?;
            if arcs_cfg.len() != 2 {
                return Err(ConfigError::Task {
                    index,
                    kind: task.kind.name().into(),
                    msg: format!("expected 2 arcs, got {}", arcs_cfg.len()),
                }
                .into());
            }
            let arcs = parse_arcs(arcs_cfg, &grid).map_err(|msg| ConfigError::Task {
                index,
                kind: task.kind.name().into(),
                msg,
            })?;
            let (cloud, density) = runner.cloud(&name, task.density)?;
            let rs = runner.resolved(&name)?;
            let graph = build_graph(&cloud, rs.rule(density));
            let direction = if grid[0] < 1.0 { FitDirection::AtZero } else { FitDirection::AtInfinity };
            let rep = detect_arc_divergence(
                &graph,
                &RadiusFunction::Norm,
                &arcs[0],
                &arcs[1],
                3.0 * density,
                0.05,
                direction,
            )?;
            record.verdict = Some(verdict_str(rep.verdict).into());
            let curve = format!("{index:02}-arc-divergence-{name}.csv");
            let pairs: Vec<(f64, f64)> =
                rep.t_grid.iter().copied().zip(rep.ratio_per_t.iter().copied()).collect();
            io::write_curve_csv(
                std::fs::File::create(runner.out_dir.join(&curve))?,
                "t",
                "ratio",
                &pairs,
            )?;
            record.curves.push(curve);
            record.details = serde_json::to_value(&rep)?;
        }
        TaskKind::TangentCone => {
            let name = need_set()?;
            let (cloud, _) = runner.cloud(&name, task.density)?;
            let rs = runner.resolved(&name)?;
            let band = task
                .band
                .map(|b| (b[0], b[1]))
                .or(rs.tangent_band)
                .unwrap_or((0.98 * rs.region.outer_radius(), rs.region.outer_radius()));
            let clusters = tangent_cone_at_infinity(&cloud, band)?;
            record.details = json!({
                "band": [band.0, band.1],
                "clusters": serde_json::to_value(&clusters)?,
            });
        }
        TaskKind::Isosceles => {
            let name = need_set()?;
            let grid = runner.grid_for(task, &name).map_err(|msg| ConfigError::Task {
                index,
                kind: task.kind.name().into(),
                msg,
            })?;
            let arcs_cfg = task.arcs.as_ref().ok_or_else(|| ConfigError::Task {
                index,
                kind: task.kind.name().into(),
                msg: "isosceles needs three arcs".into(),
            })?;
            if arcs_cfg.len() != 3 {
                return Err(ConfigError::Task {
                    index,
                    kind: task.kind.name().into(),
                    msg: format!("expected 3 arcs, got {}", arcs_cfg.len()),
                }
                .into());
            }
            let arcs = parse_arcs(arcs_cfg, &grid).map_err(|msg| ConfigError::Task {
                index,
                kind: task.kind.name().into(),
                msg,
            })?;
            let rep = check_isosceles(&[arcs[0].clone(), arcs[1].clone(), arcs[2].clone()])?;
            record.verdict = Some(if rep.holds { "holds".into() } else { "violated".into() });
            record.details = serde_json::to_value(&rep)?;
        }
        TaskKind::CenterCompare => {
            let name = need_set()?;
            let grid = runner.grid_for(task, &name).map_err(|msg| ConfigError::Task {
                index,
                kind: task.kind.name().into(),
                msg,
            })?;
            let (cloud, _) = runner.cloud(&name, task.density)?;
            let rs = runner.resolved(&name)?;
            let p = task.center.clone().or(rs.center_p.clone()).ok_or_else(|| {
                ConfigError::Task {
                    index,
                    kind: task.kind.name().into(),
                    msg: "center-compare needs a center".into(),
                }
            })?;
            let rep = compare_center_links(&rs.spec, &cloud, &p, &grid)?;
            record.verdict =
                Some(if rep.consistent { "consistent".into() } else { "inconsistent".into() });
            for (suffix, side) in [("origin", &rep.at_origin), ("center", &rep.at_center)] {
                let curve = format!("{index:02}-center-compare-{name}-{suffix}.csv");
                let pairs: Vec<(f64, f64)> =
                    side.t_grid.iter().copied().zip(side.ratio_per_t.iter().copied()).collect();
                io::write_curve_csv(
                    std::fs::File::create(runner.out_dir.join(&curve))?,
                    "t",
                    "ratio",
                    &pairs,
                )?;
                record.curves.push(curve);
            }
            record.details = serde_json::to_value(&rep)?;
        }
        TaskKind::EquivalenceTriple => {
            let name = need_set()?;
            let grid = runner.grid_for(task, &name).map_err(|msg| ConfigError::Task {
                index,
                kind: task.kind.name().into(),
                msg,
            })?;
            let (cloud, _) = runner.cloud(&name, task.density)?;
            let rs = runner.resolved(&name)?;
            let rep = verify_equivalence_triple(&rs.spec, &cloud, &grid)?;
            record.verdict = Some(if !rep.verdicts_agree {
                "disagree".into()
            } else {
                verdict_str(rep.verdicts[0]).into()
            });
            record.details = serde_json::to_value(&rep)?;
        }
        TaskKind::Embed => {
            let name = need_set()?;
            let (cloud, density) = runner.cloud(&name, task.density)?;
            let rs = runner.resolved(&name)?;
            let m = task.pancake_m.or(rs.pancake_m).ok_or_else(|| ConfigError::Task {
                index,
                kind: task.kind.name().into(),
                msg: format!("set `{name}` ships no decomposition; set pancake_m on the task"),
            })?;
            let graph = build_graph(&cloud, rs.rule(density));
            let dec = lipgeo::metric::PancakeDecomposition::from_piece_labels(
                &graph,
                cloud.piece_label.clone(),
                m,
            );
            let slack = task.slack.unwrap_or(runner.slack);
            let input = estimate_lne_constant(&graph)?;
            let trace = normal_embed(&graph, &dec, slack)?;
            let bound = distortion_bound(trace.stages(), slack);
            record.verdict = Some(if trace.distortion <= bound {
                "embedded".into()
            } else {
                "distortion-exceeded".into()
            });
            // one CSV per stage: the lifted coordinates
            for (s, pts) in trace.stage_points.iter().enumerate() {
                let fname = format!("{index:02}-embed-{name}-stage{s}.csv");
                let mut w = std::fs::File::create(runner.out_dir.join(&fname))?;
                let stage_cloud = SampleCloud {
                    dim: pts.first().map_or(0, |p| p.len()),
                    points: pts.clone(),
                    piece_label: cloud.piece_label.clone(),
                    residual: vec![0.0; pts.len()],
                    density_target: density,
                    seed: runner.seed,
                };
                io::write_cloud_csv(&mut w, &stage_cloud)?;
                record.curves.push(fname);
            }
            record.details = json!({
                "stages": trace.stages(),
                "input_constant": input.constant,
                "final_constant": trace.final_lne.constant,
                "distortion": trace.distortion,
                "distortion_bound": bound,
                "claim_checks": serde_json::to_value(&trace.per_stage_claim_check)?,
            });
        }
        TaskKind::TransformCheck => {
            let all = ["invert", "stereo", "stereo-inverse", "normalize", "conjugate"];
            let checks: Vec<String> = task
                .checks
                .clone()
                .unwrap_or_else(|| all.iter().map(|s| s.to_string()).collect());
            let mut details = serde_json::Map::new();
            let mut ok = true;
            for c in &checks {
                let (passed, info) = run_transform_check(c, runner.seed)?;
                ok &= passed;
                details.insert(c.clone(), info);
            }
            record.verdict = Some(if ok { "ok".into() } else { "failed".into() });
            record.details = Value::Object(details);
        }
    }
    Ok(())
}

fn run_transform_check(name: &str, seed: u64) -> anyhow::Result<(bool, Value)> {
    let tol = 1e-12;
    match name {
        "invert" => {
            let pts = seeded_points(3, 10_000, seed ^ 0x11);
            let mut worst_inv: f64 = 0.0;
            let mut worst_rec: f64 = 0.0;
            for x in &pts {
                let ix = invert(x)?;
                let back = invert(&ix)?;
                worst_inv = worst_inv.max(lipgeo::geom::dist(&back, x) / norm(x));
                worst_rec = worst_rec.max((norm(&ix) * norm(x) - 1.0).abs());
            }
            let ok = worst_inv <= tol && worst_rec <= tol;
            Ok((ok, json!({"involution_rel": worst_inv, "reciprocity": worst_rec, "points": pts.len()})))
        }
        "stereo" => {
            let pts = seeded_points(2, 1000, seed ^ 0x22);
            let mut worst: f64 = 0.0;
            for x in pts.iter().filter(|x| norm(x) <= 30.0) {
                let q = stereographic_lift(x);
                let sphere_err = (norm(&q) - 1.0).abs();
                let back = stereographic_project(&q)?;
                let r = lipgeo::geom::dist(&back, x) / (1.0 + norm(x));
                worst = worst.max(sphere_err).max(r);
            }
            Ok((worst <= tol, json!({"roundtrip_rel": worst})))
        }
        "stereo-inverse" => {
            let qs = seeded_sphere_points(2, 1000, seed ^ 0x33);
            let mut worst: f64 = 0.0;
            for q in &qs {
                let rho = stereographic_project(q)?;
                let rho_hat = stereographic_project_south(q)?;
                let composed = invert(&rho_hat)?;
                worst = worst.max(lipgeo::geom::dist(&composed, &rho) / (1.0 + norm(&rho)));
            }
            Ok((worst <= tol, json!({"conjugation_rel": worst, "points": qs.len()})))
        }
        "normalize" => {
            let c = 2f64.sqrt();
            let pts = seeded_points(2, 400, seed ^ 0x44);
            let img: Vec<Vec<f64>> = pts
                .iter()
                .map(|x| {
                    let phi = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    let phi = clamp_radius(phi, norm(x), c);
                    radius_normalize(x, phi, c).map_err(anyhow::Error::from)
                })
                .collect::<anyhow::Result<_>>()?;
            let map = SampledMap::new(pts, img, None)?;
            let (lip, _) = map.empirical_lipschitz();
            Ok((lip <= 3.0 * c, json!({"lipschitz": lip, "bound": 3.0 * c})))
        }
        "conjugate" => {
            let mut worst_margin = f64::INFINITY;
            let mut ok = true;
            for i in 0..20u64 {
                let map = seeded_bilipschitz_map(2, 200, seed ^ (0x55 + i));
                let c = map.measured_bilipschitz();
                let with_claim = SampledMap { claimed_c: Some(c), ..map };
                let out = conjugate_by_inversion(&with_claim)?;
                let (lip, _) = out.map.empirical_lipschitz();
                ok &= lip <= out.lipschitz_bound;
                worst_margin = worst_margin.min(out.lipschitz_bound / lip);
            }
            Ok((ok, json!({"maps": 20, "worst_bound_over_lip": worst_margin})))
        }
        other => Err(ConfigError::Parse(format!("unknown transform check `{other}`")).into()),
    }
}

/// Plain-text table of the built-in corpus: name, dimension, boundedness,
/// recommended recipe, and the known verdicts with their oracles.
pub fn list_corpus_table() -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<26} {:>3} {:>9} {:>9} {:<14} known\n",
        "name", "dim", "bounded", "density", "rule"
    ));
    for e in corpus::all() {
        let first = e.known.first();
        out.push_str(&format!(
            "{:<26} {:>3} {:>9} {:>9} {:<14} {}\n",
            e.name,
            e.ambient_dim,
            if e.unbounded { "no" } else { "yes" },
            e.density,
            e.rule.describe(),
            first.map(|f| format!("{}: {} [{}]", f.quantity, f.expected, f.oracle))
                .unwrap_or_default(),
        ));
        for f in e.known.iter().skip(1) {
            out.push_str(&format!(
                "{:<66} {}: {} [{}]\n",
                "", f.quantity, f.expected, f.oracle
            ));
        }
    }
    out
}
