//! Space, problem and report documents.
//!
//! All three are JSON. Reals go through `serde_json`, which writes the
//! shortest decimal that parses back to the same `f64`, and every struct
//! serializes its fields in declaration order, so saving a loaded file twice
//! gives identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use mrws_core::least_gradient::TieBreak;
use mrws_core::space::{RandomWalkSpace, StateSpace, WeightTable};
use mrws_core::{make_problem, DomainProblem};

use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelRow {
    pub state: String,
    pub jumps: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum WalkSpec {
    /// Undirected weights; `ν` is the weighted degree.
    Graph { edges: Vec<(String, String, f64)> },
    /// Explicit kernel rows, one per state.
    Rows { rows: Vec<KernelRow> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MetricSpec {
    CoordsEuclidean,
    Table { distances: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub format_version: u32,
    pub states: Vec<StateEntry>,
    pub walk: WalkSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TieBreakArg {
    Min,
    Max,
}

impl From<TieBreakArg> for TieBreak {
    fn from(t: TieBreakArg) -> Self {
        match t {
            TieBreakArg::Min => TieBreak::Minimal,
            TieBreakArg::Max => TieBreak::Maximal,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_break: Option<TieBreakArg>,
}

impl SolverOptions {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// A path relative to the problem file, or the space itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceRef {
    Path(String),
    Inline(Box<SpaceFile>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub format_version: u32,
    pub space: SpaceRef,
    pub omega: Vec<String>,
    pub psi: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "SolverOptions::is_empty")]
    pub options: SolverOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    pub options: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UEntry {
    pub state: String,
    pub value: f64,
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    /// `"J"` for the relaxed 1-energy, `"F_p"` for the p-energy.
    pub functional: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format_version: u32,
    pub command: String,
    pub passed: bool,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub u: Vec<UEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub energies: Vec<Energy>,
    pub result: serde_json::Value,
}

/// Flat table for `--csv`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Shortest round-trip decimal, as in the JSON documents.
pub fn fmt_real(v: f64) -> String {
    serde_json::to_string(&v).unwrap_or_else(|_| "null".into())
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn digest(path: &Path, bytes: &[u8]) -> InputDigest {
    InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(bytes)),
    }
}

pub(crate) fn parse<T: serde::de::DeserializeOwned>(path: &Path, bytes: &[u8]) -> CliResult<T> {
    serde_json::from_slice(bytes).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })
}

pub(crate) fn check_version(path: &Path, found: u32) -> CliResult<()> {
    if found == FORMAT_VERSION {
        Ok(())
    } else {
        Err(CliError::SchemaVersionUnsupported {
            path: path.display().to_string(),
            found,
        })
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("documents serialize");
    out.push(b'\n');
    out
}

/// Writes next to the target and renames over it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_csv(path: &Path, table: &Table) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header).map_err(CliError::Csv)?;
    for r in &table.rows {
        w.write_record(r).map_err(CliError::Csv)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?;
    write_atomic(path, &bytes)
}

fn index_of(states: &StateSpace, id: &str) -> CliResult<usize> {
    states
        .index_of(id)
        .ok_or_else(|| CliError::Invalid(format!("unknown state {id:?}")))
}

impl SpaceFile {
    pub fn parse(path: &Path, bytes: &[u8]) -> CliResult<Self> {
        let file: SpaceFile = parse(path, bytes)?;
        check_version(path, file.format_version)?;
        Ok(file)
    }

    /// Builds the space; builder failures become `ValidationFailed`.
    pub fn build(&self) -> CliResult<RandomWalkSpace> {
        let mut states = StateSpace::new(self.states.iter().map(|s| s.id.clone())).map_err(CliError::from_build)?;
        match &self.metric {
            None => {}
            Some(MetricSpec::CoordsEuclidean) => {
                let coords = self
                    .states
                    .iter()
                    .map(|s| {
                        s.coords
                            .clone()
                            .ok_or_else(|| CliError::Invalid(format!("state {:?} has no coords", s.id)))
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                states = states.with_coords(coords).map_err(CliError::from_build)?;
            }
            Some(MetricSpec::Table { distances }) => {
                states = states.with_metric(distances.clone()).map_err(CliError::from_build)?;
            }
        }
        let n = states.len();
        let rws = match &self.walk {
            WalkSpec::Graph { edges } => {
                if self.states.iter().any(|s| s.nu.is_some()) {
                    return Err(CliError::Invalid("graph walks take nu from the weighted degree".into()));
                }
                let mut weights = WeightTable::new();
                for (a, b, w) in edges {
                    weights.add_edge(index_of(&states, a)?, index_of(&states, b)?, *w);
                }
                RandomWalkSpace::from_symmetric_weights(states, &weights)
            }
            WalkSpec::Rows { rows } => {
                let mut kernel: Vec<Option<Vec<(usize, f64)>>> = vec![None; n];
                for r in rows {
                    let x = index_of(&states, &r.state)?;
                    if kernel[x].is_some() {
                        return Err(CliError::Invalid(format!("duplicate kernel row for {:?}", r.state)));
                    }
                    let jumps = r
                        .jumps
                        .iter()
                        .map(|(y, p)| Ok((index_of(&states, y)?, *p)))
                        .collect::<CliResult<Vec<_>>>()?;
                    kernel[x] = Some(jumps);
                }
                let kernel = kernel
                    .into_iter()
                    .enumerate()
                    .map(|(x, r)| r.ok_or_else(|| CliError::Invalid(format!("no kernel row for {:?}", self.states[x].id))))
                    .collect::<CliResult<Vec<_>>>()?;
                let nu = match self.states.iter().map(|s| s.nu).collect::<Option<Vec<f64>>>() {
                    Some(nu) => Some(nu),
                    None if self.states.iter().all(|s| s.nu.is_none()) => None,
                    None => return Err(CliError::Invalid("nu must be given for every state or for none".into())),
                };
                RandomWalkSpace::from_markov_kernel(states, kernel, nu)
            }
        };
        rws.map_err(CliError::from_build)
    }

    /// Canonical document: explicit rows and `ν`.
    pub fn from_space(rws: &RandomWalkSpace) -> Self {
        let s = rws.states();
        let coords = s.coords();
        let states = (0..rws.len())
            .map(|x| StateEntry {
                id: rws.label(x).to_string(),
                coords: coords.map(|c| c[x].clone()),
                nu: Some(rws.nu(x)),
            })
            .collect();
        let rows = (0..rws.len())
            .map(|x| KernelRow {
                state: rws.label(x).to_string(),
                jumps: rws.row(x).iter().map(|&(y, p)| (rws.label(y).to_string(), p)).collect(),
            })
            .collect();
        let metric = if coords.is_some() {
            Some(MetricSpec::CoordsEuclidean)
        } else {
            s.metric_table().map(|distances| MetricSpec::Table { distances })
        };
        SpaceFile {
            format_version: FORMAT_VERSION,
            states,
            walk: WalkSpec::Rows { rows },
            metric,
        }
    }
}

pub fn load_space(path: &Path) -> CliResult<RandomWalkSpace> {
    SpaceFile::parse(path, &read_bytes(path)?)?.build()
}

pub fn save_space(rws: &RandomWalkSpace, path: &Path) -> CliResult<()> {
    write_atomic(path, &to_json(&SpaceFile::from_space(rws)))
}

/// A problem with the digests of every file it was read from.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub file: ProblemFile,
    pub problem: DomainProblem,
    pub inputs: Vec<InputDigest>,
}

impl ProblemFile {
    pub fn parse(path: &Path, bytes: &[u8]) -> CliResult<Self> {
        let file: ProblemFile = parse(path, bytes)?;
        check_version(path, file.format_version)?;
        Ok(file)
    }

    pub fn pose(&self, rws: &RandomWalkSpace) -> CliResult<DomainProblem> {
        let states = rws.states();
        let omega = self
            .omega
            .iter()
            .map(|id| index_of(states, id))
            .collect::<CliResult<Vec<_>>>()?;
        let psi = self
            .psi
            .iter()
            .map(|(id, &v)| Ok((index_of(states, id)?, v)))
            .collect::<CliResult<Vec<_>>>()?;
        make_problem(rws, &omega, &psi).map_err(CliError::from_build)
    }

    pub fn from_problem(problem: &DomainProblem, space: SpaceRef) -> Self {
        let rws = problem.space();
        ProblemFile {
            format_version: FORMAT_VERSION,
            space,
            omega: problem.omega().iter().map(|&x| rws.label(x).to_string()).collect(),
            psi: problem
                .boundary()
                .iter()
                .zip(problem.psi())
                .map(|(&x, &v)| (rws.label(x).to_string(), v))
                .collect(),
            options: SolverOptions::default(),
        }
    }
}

pub fn load_problem(path: &Path) -> CliResult<LoadedProblem> {
    let bytes = read_bytes(path)?;
    let file = ProblemFile::parse(path, &bytes)?;
    let mut inputs = vec![digest(path, &bytes)];
    let rws = match &file.space {
        SpaceRef::Inline(space) => space.build()?,
        SpaceRef::Path(rel) => {
            let space_path = path.parent().unwrap_or(Path::new("")).join(rel);
            let space_bytes = read_bytes(&space_path)?;
            inputs.push(digest(&space_path, &space_bytes));
            SpaceFile::parse(&space_path, &space_bytes)?.build()?
        }
    };
    let problem = file.pose(&rws)?;
    Ok(LoadedProblem { file, problem, inputs })
}

pub fn load_report(path: &Path) -> CliResult<ReportFile> {
    let report: ReportFile = parse(path, &read_bytes(path)?)?;
    check_version(path, report.format_version)?;
    Ok(report)
}

/// Values on `Ω` read from a report's `u` table.
pub fn report_values(report: &ReportFile, problem: &DomainProblem) -> CliResult<Vec<f64>> {
    let rws = problem.space();
    let table: BTreeMap<&str, f64> = report
        .u
        .iter()
        .filter(|e| !e.boundary)
        .map(|e| (e.state.as_str(), e.value))
        .collect();
    problem
        .omega()
        .iter()
        .map(|&x| {
            table
                .get(rws.label(x))
                .copied()
                .ok_or_else(|| CliError::Invalid(format!("report has no value for {:?}", rws.label(x))))
        })
        .collect()
}
