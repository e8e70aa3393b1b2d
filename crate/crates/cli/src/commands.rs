//! One adapter per subcommand. Each returns the report, a flat table and the
//! lines printed to stdout; nothing here computes beyond formatting.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use mrws_core::calculus::PairField;
use mrws_core::calibration::{find_calibration, median_value_check, verify_calibration, CalibrationCertificate};
use mrws_core::counterexamples::{gen_markov_counterexample, gen_tworow_counterexample};
use mrws_core::least_gradient::{solve_exact, TieBreak};
use mrws_core::plap::{continuation_to_one, default_schedule, energy_p, ContinuationOptions, PSolveOptions};
use mrws_core::poincare::{estimate, BestConstantOptions, ShellMetric};
use mrws_core::problem::relaxed_energy;
use mrws_core::space::{CertificateReport, RandomWalkSpace};
use mrws_core::DomainProblem;

use crate::error::{CliError, CliResult};
use crate::files::{
    self, digest, fmt_real, load_problem, load_report, read_bytes, report_values, Energy, InputDigest, LoadedProblem,
    ProblemFile, Provenance, ReportFile, SpaceFile, SpaceRef, Table, TieBreakArg, UEntry, FORMAT_VERSION,
};

pub struct Outcome {
    pub report: ReportFile,
    pub table: Table,
    pub lines: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.report.passed
    }
}

struct Draft {
    command: &'static str,
    inputs: Vec<InputDigest>,
    options: serde_json::Value,
    u: Vec<UEntry>,
    energies: Vec<Energy>,
}

impl Draft {
    fn new(command: &'static str, inputs: Vec<InputDigest>, options: serde_json::Value) -> Self {
        Self {
            command,
            inputs,
            options,
            u: Vec::new(),
            energies: Vec::new(),
        }
    }

    fn finish(self, passed: bool, result: serde_json::Value, table: Table, lines: Vec<String>) -> Outcome {
        Outcome {
            report: ReportFile {
                format_version: FORMAT_VERSION,
                command: self.command.to_string(),
                passed,
                provenance: Provenance {
                    tool: "mrws".into(),
                    version: env!("CARGO_PKG_VERSION").into(),
                    inputs: self.inputs,
                    options: self.options,
                },
                u: self.u,
                energies: self.energies,
                result,
            },
            table,
            lines,
        }
    }
}

fn value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("results serialize")
}

fn energy(functional: &str, p: Option<f64>, value: f64) -> Energy {
    Energy {
        functional: functional.into(),
        p,
        value,
    }
}

/// `Ω` first, then `∂_mΩ` with `ψ`.
fn u_entries(problem: &DomainProblem, u: &[f64]) -> Vec<UEntry> {
    let rws = problem.space();
    let inner = problem.omega().iter().zip(u).map(|(&x, &v)| UEntry {
        state: rws.label(x).to_string(),
        value: v,
        boundary: false,
    });
    let outer = problem.boundary().iter().zip(problem.psi()).map(|(&x, &v)| UEntry {
        state: rws.label(x).to_string(),
        value: v,
        boundary: true,
    });
    inner.chain(outer).collect()
}

fn u_table(entries: &[UEntry]) -> Table {
    let mut t = Table::new(&["state", "value", "boundary"]);
    for e in entries {
        t.push(vec![e.state.clone(), fmt_real(e.value), e.boundary.to_string()]);
    }
    t
}

fn pair_triples(rws: &RandomWalkSpace, g: &PairField) -> Vec<(String, String, f64)> {
    g.iter()
        .map(|(x, y, v)| (rws.label(x).to_string(), rws.label(y).to_string(), v))
        .collect()
}

fn pair_table(triples: &[(String, String, f64)]) -> Table {
    let mut t = Table::new(&["x", "y", "g"]);
    for (x, y, v) in triples {
        t.push(vec![x.clone(), y.clone(), fmt_real(*v)]);
    }
    t
}

fn certificate_value(rws: &RandomWalkSpace, cert: &CalibrationCertificate) -> serde_json::Value {
    let mut v = value(cert);
    v["g"] = value(&pair_triples(rws, &cert.g));
    v
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn certificate_line(c: &CertificateReport) -> String {
    let mut line = format!("{} {}: max residual {:e} (tol {:e})", verdict(c.passed), c.check, c.max_residual, c.tolerance);
    if let (false, Some((x, y))) = (c.passed, &c.worst) {
        line.push_str(&format!(" at ({x}, {y})"));
    }
    line
}

pub fn validate(path: &Path, tol: f64) -> CliResult<Outcome> {
    let bytes = read_bytes(path)?;
    let draft = Draft::new("validate", vec![digest(path, &bytes)], json!({ "tol": tol }));
    let file = SpaceFile::parse(path, &bytes)?;
    let mut table = Table::new(&["check", "passed", "max_residual", "tolerance"]);
    let rws = match file.build() {
        Ok(rws) => rws,
        Err(CliError::ValidationFailed(e)) => {
            let mut cert = CertificateReport::new("construction", tol);
            cert.passed = false;
            cert.max_residual = f64::INFINITY;
            if let mrws_core::Error::NotStochastic { state, sum } = &e {
                cert.check = "stochasticity".into();
                cert.max_residual = (sum - 1.0).abs();
                cert.tolerance = mrws_core::space::ROW_SUM_TOL;
                cert.worst = Some((state.clone(), state.clone()));
            }
            cert.notes.push(e.to_string());
            table.push(vec![cert.check.clone(), "false".into(), fmt_real(cert.max_residual), fmt_real(cert.tolerance)]);
            let lines = vec![format!("FAIL {}: {e}", cert.check)];
            return Ok(draft.finish(false, json!({ "certificates": [cert] }), table, lines));
        }
        Err(e) => return Err(e),
    };
    let invariance = rws.validate_invariance(tol);
    let reversibility = rws.validate_reversibility(tol);
    let ergodicity = rws.is_ergodic();
    let mut lines = vec![certificate_line(&invariance), certificate_line(&reversibility)];
    lines.push(format!("{} ergodicity", verdict(ergodicity.ergodic)));
    for c in [&invariance, &reversibility] {
        table.push(vec![c.check.clone(), c.passed.to_string(), fmt_real(c.max_residual), fmt_real(c.tolerance)]);
    }
    table.push(vec!["ergodicity".into(), ergodicity.ergodic.to_string(), String::new(), String::new()]);
    let partition = ergodicity.partition.as_ref().map(|(a, b)| {
        let names = |s: &[usize]| s.iter().map(|&x| rws.label(x).to_string()).collect::<Vec<_>>();
        (names(a), names(b))
    });
    let passed = invariance.passed && reversibility.passed && ergodicity.ergodic;
    let result = json!({
        "states": rws.len(),
        "certificates": [invariance, reversibility],
        "ergodic": ergodicity.ergodic,
        "partition": partition,
    });
    Ok(draft.finish(passed, result, table, lines))
}

fn tie_break(flag: Option<TieBreakArg>, loaded: &LoadedProblem) -> TieBreakArg {
    flag.or(loaded.file.options.tie_break).unwrap_or(TieBreakArg::Min)
}

pub fn solve(path: &Path, flag: Option<TieBreakArg>) -> CliResult<Outcome> {
    let loaded = load_problem(path)?;
    let tb = tie_break(flag, &loaded);
    let p = &loaded.problem;
    let sol = solve_exact(p, tb.into())?;
    let mut draft = Draft::new("solve", loaded.inputs.clone(), json!({ "tie_break": tb }));
    draft.u = u_entries(p, sol.omega_values());
    draft.energies = vec![energy("J", None, sol.energy)];
    let table = u_table(&draft.u);
    let lines = vec![
        format!("energy J = {}", fmt_real(sol.energy)),
        format!("{} levels, tie-break {}", sol.levels.len(), json!(tb).as_str().unwrap_or("")),
    ];
    let result = json!({ "method": sol.method, "tie_break": sol.tie_break, "levels": sol.levels });
    Ok(draft.finish(true, result, table, lines))
}

pub fn plap(path: &Path, schedule: Option<Vec<f64>>, tol: Option<f64>, max_iter: usize) -> CliResult<Outcome> {
    let loaded = load_problem(path)?;
    let opts_file = &loaded.file.options;
    let schedule = schedule.or_else(|| opts_file.schedule.clone()).unwrap_or_else(default_schedule);
    let defaults = ContinuationOptions::default();
    let opts = ContinuationOptions {
        trend_tol: tol.or(opts_file.tol).unwrap_or(defaults.trend_tol),
        solve: PSolveOptions {
            max_iter,
            ..defaults.solve
        },
    };
    let p = &loaded.problem;
    let res = continuation_to_one(p, &schedule, &opts)?;
    let p_last = *schedule.last().expect("validated schedule is nonempty");
    let mut draft = Draft::new(
        "plap",
        loaded.inputs.clone(),
        json!({ "schedule": schedule, "tol": opts.trend_tol, "max_iter": max_iter }),
    );
    draft.u = u_entries(p, &res.u);
    draft.energies = vec![
        energy("J", None, res.j_value),
        energy("F_p", Some(p_last), res.p_trace.last().map_or(f64::NAN, |t| t.energy)),
    ];
    let table = u_table(&draft.u);
    let mut lines = vec![
        format!("J = {} at p = {}", fmt_real(res.j_value), fmt_real(p_last)),
        format!("clip magnitude {:e}, converged {}", res.clip_magnitude, res.converged),
    ];
    if !res.converged {
        lines.push("FAIL continuation did not converge".into());
    }
    let result = json!({
        "p_trace": res.p_trace,
        "g": pair_triples(p.space(), &res.g),
        "clip_magnitude": res.clip_magnitude,
        "converged": res.converged,
    });
    Ok(draft.finish(res.converged, result, table, lines))
}

/// `u` on `Ω` from a report, or the minimal exact solution.
fn domain_values(loaded: &LoadedProblem, u_report: Option<&Path>, tb: TieBreakArg) -> CliResult<(Vec<f64>, Option<InputDigest>)> {
    match u_report {
        Some(path) => {
            let bytes = read_bytes(path)?;
            let report = load_report(path)?;
            Ok((report_values(&report, &loaded.problem)?, Some(digest(path, &bytes))))
        }
        None => Ok((solve_exact(&loaded.problem, TieBreak::from(tb))?.omega_values().to_vec(), None)),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairFile {
    pub format_version: u32,
    pub g: Vec<(String, String, f64)>,
}

fn load_pairs(path: &Path, rws: &RandomWalkSpace) -> CliResult<(PairField, InputDigest)> {
    let bytes = read_bytes(path)?;
    let file: PairFile = files::parse(path, &bytes)?;
    files::check_version(path, file.format_version)?;
    let index = |id: &str| {
        rws.states()
            .index_of(id)
            .ok_or_else(|| CliError::Invalid(format!("unknown state {id:?} in {}", path.display())))
    };
    let entries = file
        .g
        .iter()
        .map(|(x, y, v)| Ok((index(x)?, index(y)?, *v)))
        .collect::<CliResult<Vec<_>>>()?;
    Ok((PairField::from_entries(rws.len(), entries), digest(path, &bytes)))
}

pub fn calibrate(
    path: &Path,
    u_report: Option<&Path>,
    g_file: Option<&Path>,
    tol: f64,
    flag: Option<TieBreakArg>,
) -> CliResult<Outcome> {
    let loaded = load_problem(path)?;
    let tb = tie_break(flag, &loaded);
    let p = &loaded.problem;
    let (u, u_digest) = domain_values(&loaded, u_report, tb)?;
    let mut inputs = loaded.inputs.clone();
    inputs.extend(u_digest);
    let (passed, result, triples) = match g_file {
        Some(g_path) => {
            let (g, d) = load_pairs(g_path, p.space())?;
            inputs.push(d);
            let cert = verify_calibration(p, &u, &g, tol)?;
            let triples = pair_triples(p.space(), &cert.g);
            (cert.passed, json!({ "mode": "verify", "certificate": certificate_value(p.space(), &cert) }), triples)
        }
        None => {
            let search = find_calibration(p, &u, tol)?;
            let mut v = value(&search);
            let triples = match search.certificate() {
                Some(cert) => {
                    v["certificate"] = certificate_value(p.space(), cert);
                    pair_triples(p.space(), &cert.g)
                }
                None => Vec::new(),
            };
            let passed = search.certificate().is_some_and(|c| c.passed);
            v["mode"] = json!("find");
            (passed, v, triples)
        }
    };
    let mut draft = Draft::new(
        "calibrate",
        inputs,
        json!({ "tol": tol, "tie_break": tb, "g_file": g_file.map(|g| g.display().to_string()) }),
    );
    draft.u = u_entries(p, &u);
    draft.energies = vec![energy("J", None, relaxed_energy(p, &u))];
    let lines = vec![format!(
        "{} calibration ({})",
        verdict(passed),
        if g_file.is_some() { "verify" } else { "find" }
    )];
    Ok(draft.finish(passed, result, pair_table(&triples), lines))
}

pub fn median(path: &Path, u_report: Option<&Path>, tau: f64, flag: Option<TieBreakArg>) -> CliResult<Outcome> {
    let loaded = load_problem(path)?;
    let tb = tie_break(flag, &loaded);
    let p = &loaded.problem;
    let (u, u_digest) = domain_values(&loaded, u_report, tb)?;
    let mut inputs = loaded.inputs.clone();
    inputs.extend(u_digest);
    let rep = median_value_check(p, &u, tau);
    let mut draft = Draft::new("median", inputs, json!({ "tau": tau, "tie_break": tb }));
    draft.u = u_entries(p, &u);
    draft.energies = vec![energy("J", None, relaxed_energy(p, &u))];
    let mut table = Table::new(&["state", "plus", "minus", "zero", "passed"]);
    let mut lines = Vec::new();
    for e in &rep.entries {
        table.push(vec![e.state.clone(), fmt_real(e.plus), fmt_real(e.minus), fmt_real(e.zero), e.passed.to_string()]);
        if !e.passed {
            lines.push(format!("FAIL median at {}: plus {} minus {} zero {}", e.state, e.plus, e.minus, e.zero));
        }
    }
    lines.push(format!("{} median value property at {} states", verdict(rep.passed), rep.entries.len()));
    Ok(draft.finish(rep.passed, value(&rep), table, lines))
}

pub fn parse_shells(s: &str) -> Result<ShellMetric, String> {
    match s {
        "hop" => Ok(ShellMetric::Hop),
        _ => match s.strip_prefix("width=").map(str::parse::<f64>) {
            Some(Ok(w)) if w > 0.0 && w.is_finite() => Ok(ShellMetric::Width(w)),
            _ => Err(format!("expected `hop` or `width=W` with W > 0, got {s:?}")),
        },
    }
}

pub fn poincare(path: &Path, q: Option<f64>, shells: ShellMetric, starts: usize, seed: u64) -> CliResult<Outcome> {
    let loaded = load_problem(path)?;
    let q = q.or(loaded.file.options.q).unwrap_or(2.0);
    let p = &loaded.problem;
    let opts = BestConstantOptions {
        starts,
        seed,
        ..BestConstantOptions::default()
    };
    let est = estimate(p, q, shells, &opts)?;
    let draft = Draft::new(
        "poincare",
        loaded.inputs.clone(),
        json!({ "q": q, "shells": shells, "starts": starts, "seed": seed }),
    );
    let mut lines = vec![format!("lambda_upper = {} (start {})", fmt_real(est.upper.lambda_upper), est.upper.start)];
    let passed = match (est.lambda_lower, &est.lower_error) {
        (Some(lb), _) => {
            lines.push(format!("lambda_lower = {}", fmt_real(lb)));
            lb <= est.upper.lambda_upper * (1.0 + 1e-9)
        }
        (None, Some(err)) => {
            lines.push(format!("lambda_lower unavailable: {err}"));
            true
        }
        (None, None) => true,
    };
    if !passed {
        lines.push("FAIL lower bound exceeds the upper bound".into());
    }
    let rws = p.space();
    let mut table = Table::new(&["state", "witness", "boundary"]);
    for (&x, &v) in p.omega().iter().zip(&est.upper.witness_u) {
        table.push(vec![rws.label(x).to_string(), fmt_real(v), "false".into()]);
    }
    for (&x, &v) in p.boundary().iter().zip(&est.upper.witness_psi) {
        table.push(vec![rws.label(x).to_string(), fmt_real(v), "true".into()]);
    }
    let mut result = value(&est);
    if let Some(sh) = &est.shells {
        let named: Vec<Vec<&str>> = sh.shells.iter().map(|s| s.iter().map(|&x| rws.label(x)).collect()).collect();
        result["shells"]["shells"] = json!(named);
    }
    Ok(draft.finish(passed, result, table, lines))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Markov,
    Tworow,
}

pub fn paper_examples(which: Which, n: usize, dir: &Path) -> CliResult<Outcome> {
    let ex = match which {
        Which::Markov => gen_markov_counterexample(n)?,
        Which::Tworow => gen_tworow_counterexample(n)?,
    };
    let stem = format!("{}-{n}", json!(which).as_str().unwrap_or("example"));
    let space_name = format!("{stem}.space.json");
    let space_path: PathBuf = dir.join(&space_name);
    let problem_path: PathBuf = dir.join(format!("{stem}.problem.json"));
    let space_bytes = files::to_json(&SpaceFile::from_space(&ex.space));
    let problem_bytes = files::to_json(&ProblemFile::from_problem(&ex.problem, SpaceRef::Path(space_name)));
    files::write_atomic(&space_path, &space_bytes)?;
    files::write_atomic(&problem_path, &problem_bytes)?;
    let written = vec![digest(&space_path, &space_bytes), digest(&problem_path, &problem_bytes)];
    let rws = &ex.space;
    let mut table = Table::new(&["state", "nu"]);
    for x in 0..rws.len() {
        table.push(vec![rws.label(x).to_string(), fmt_real(rws.nu(x))]);
    }
    let lines = vec![
        format!("wrote {} and {}", space_path.display(), problem_path.display()),
        format!("{} states, tail bound {:e}", rws.len(), ex.truncation.tail_bound),
    ];
    let draft = Draft::new("paper-examples", Vec::new(), json!({ "which": which, "n": n }));
    let result = json!({ "truncation": ex.truncation, "files": written });
    Ok(draft.finish(true, result, table, lines))
}

pub fn report(path: &Path, problem: Option<&Path>, tol: f64) -> CliResult<Outcome> {
    let bytes = read_bytes(path)?;
    let rep = load_report(path)?;
    let mut inputs = vec![digest(path, &bytes)];
    let mut lines = Vec::new();
    let mut checks = Vec::new();
    let mut passed = true;
    let mut table = Table::new(&["functional", "p", "reported", "recomputed", "difference"]);
    if !rep.energies.is_empty() {
        let problem_path = match (problem, rep.provenance.inputs.first()) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(d)) => PathBuf::from(&d.path),
            (None, None) => return Err(CliError::Invalid("report names no problem; pass --problem".into())),
        };
        let loaded = load_problem(&problem_path)?;
        if let Some(recorded) = rep.provenance.inputs.first() {
            if recorded.sha256 != loaded.inputs[0].sha256 {
                passed = false;
                lines.push(format!("FAIL problem digest differs from {}", recorded.path));
            }
        }
        inputs.extend(loaded.inputs.iter().cloned());
        let p = &loaded.problem;
        let u = report_values(&rep, p)?;
        for e in &rep.energies {
            let recomputed = match (e.functional.as_str(), e.p) {
                ("J", _) => relaxed_energy(p, &u),
                ("F_p", Some(exp)) => energy_p(p, &u, exp)?,
                _ => return Err(CliError::Invalid(format!("unknown energy {:?}", e.functional))),
            };
            let diff = (recomputed - e.value).abs();
            let ok = diff <= tol;
            passed &= ok;
            lines.push(format!("{} {} = {} (recomputed {}, difference {:e})", verdict(ok), e.functional, fmt_real(e.value), fmt_real(recomputed), diff));
            table.push(vec![
                e.functional.clone(),
                e.p.map(fmt_real).unwrap_or_default(),
                fmt_real(e.value),
                fmt_real(recomputed),
                fmt_real(diff),
            ]);
            checks.push(json!({ "functional": e.functional, "p": e.p, "reported": e.value, "recomputed": recomputed, "passed": ok }));
        }
    }
    lines.push(format!("{} report of `{}` (recorded verdict {})", verdict(passed && rep.passed), rep.command, rep.passed));
    let draft = Draft::new("report", inputs, json!({ "tol": tol }));
    let result = json!({ "command": rep.command, "recorded_passed": rep.passed, "energies": checks });
    Ok(draft.finish(passed && rep.passed, result, table, lines))
}
