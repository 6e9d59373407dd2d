//! Command-line front end: single programs, plan sweeps, ellipse coverage,
//! oracle runs and re-verification of stored certificates.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{
    certify_program, covers, Certificate, Coverage, EllipseRegion, PipelineOptions, Rect, ReuseData, Shape,
};
use crate::error::{Error, Result};
use crate::fourier::SineCoefficient;
use crate::oracle::{self, StepFunction};
use crate::programs::{build_full, build_lp, ProgramInput, ProgramSource};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_FAIL: i32 = 4;
pub const EXIT_ENVELOPE: i32 = 5;

/// Programs with more intervals than this only run with `--long`.
pub const LONG_N: usize = 20_000;
pub const DEFAULT_THRESHOLD_OFFSET: f64 = 5e-5;
pub const DEFAULT_GUARD: f64 = 1e-12;
pub const ORACLE_SLACK_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "minoverlap",
    version,
    about = "Certified lower bounds for the minimum overlap constant"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Use the 8/(m pi) sine coefficient instead of 4/(m pi).
    #[arg(long, global = true)]
    pub paper_compat: bool,
    /// Allow large programs and large-scale plans.
    #[arg(long, global = true)]
    pub long: bool,
    /// Concurrent jobs in a sweep.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    /// Output file (lp, bound, oracle, verify) or directory (sweep, ellipses).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify the even-function linear program.
    Lp {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        r: usize,
    },
    /// Certify the full program on a parameter box.
    Bound {
        /// Program input file; overrides the size and box flags.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 500)]
        t: usize,
        #[arg(long, default_value_t = 10)]
        r: usize,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range, default_value = "0,2")]
        h: (f64, f64),
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range, default_value = "0,1")]
        p: (f64, f64),
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range, default_value = "-1,1")]
        q: (f64, f64),
    },
    /// Run every job of a plan file and assemble the overall bound.
    Sweep { plan: PathBuf },
    /// Build reuse ellipses from a directory of certificates and test coverage.
    Ellipses {
        certs: PathBuf,
        /// Defaults to the smallest certified objective minus 5e-5.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range)]
        h: (f64, f64),
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range)]
        p: (f64, f64),
        #[arg(long, default_value_t = DEFAULT_GUARD)]
        guard: f64,
    },
    /// Check the assignment generated by a step function against the program.
    Oracle {
        f: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range, default_value = "0,2")]
        h: (f64, f64),
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range, default_value = "0,1")]
        p: (f64, f64),
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range, default_value = "-1,1")]
        q: (f64, f64),
        /// Terms used for the coefficient tails (default 20 T).
        #[arg(long)]
        k_ext: Option<usize>,
        /// Also solve the program and compare its optimum with the sup-norm.
        #[arg(long)]
        solve: bool,
    },
    /// Re-verify a stored certificate.
    Verify { cert: PathBuf },
}

pub fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected lo,hi, got {s:?}"))?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(format!("range {s:?} is empty"));
    }
    Ok((lo, hi))
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Solver(_) | Error::Polish(_) => EXIT_SOLVER,
        Error::MissingPivot(_) => EXIT_INTERNAL,
        _ => EXIT_INPUT,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Lp { n, r } => {
            check_scale(cli, *n)?;
            single(cli, build_lp(*n, *r)?)
        }
        Command::Bound {
            input,
            n,
            t,
            r,
            h,
            p,
            q,
        } => {
            let mut input = match input {
                Some(path) => serde_json::from_str::<ProgramInput>(&read(path)?)?,
                None => ProgramInput::valid_ranges(*n, *t, *r).with_box(*h, *p, *q),
            };
            if cli.paper_compat {
                input.sine = SineCoefficient::PaperCompat;
            }
            input.validate()?;
            check_scale(cli, input.n)?;
            single(cli, build_full(&input)?)
        }
        Command::Sweep { plan } => {
            let plan = Plan::from_json(&read(plan)?)?;
            let out = cli
                .out
                .as_deref()
                .ok_or_else(|| Error::InvalidArgument("sweep needs --out DIR".into()))?;
            let report = run_sweep(&plan, cli, out)?;
            eprintln!("{}", report.headline());
            Ok(report.exit_code())
        }
        Command::Ellipses {
            certs,
            threshold,
            h,
            p,
            guard,
        } => {
            let out = cli
                .out
                .as_deref()
                .ok_or_else(|| Error::InvalidArgument("ellipses needs --out DIR".into()))?;
            let certs = load_certificates(certs)?;
            let rect = Rect::new(*h, *p)?;
            let cov = run_ellipses(&certs, *threshold, rect, *guard)?;
            write_ellipse_outputs(&cov, out)?;
            eprintln!(
                "{} threshold={} regions={} cells={}",
                if cov.coverage.covered { "COVERED" } else { "UNCOVERED" },
                cov.threshold,
                cov.regions.len(),
                cov.coverage.cells
            );
            Ok(if cov.coverage.covered { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Oracle {
            f,
            n,
            t,
            r,
            h,
            p,
            q,
            k_ext,
            solve,
        } => {
            let f = StepFunction::from_json(&read(f)?)?;
            let mut input = ProgramInput::valid_ranges(*n, *t, *r).with_box(*h, *p, *q);
            if cli.paper_compat {
                input.sine = SineCoefficient::PaperCompat;
            }
            input.validate()?;
            check_scale(cli, input.n)?;
            let report = oracle_report(&f, &input, k_ext.unwrap_or(20 * input.t), *solve)?;
            emit(cli, &serde_json::to_string_pretty(&report)?)?;
            eprintln!(
                "{} min_slack={:e} sup_norm={}",
                if report.feasible { "FEASIBLE" } else { "INFEASIBLE" },
                report.min_slack,
                report.sup_norm
            );
            Ok(if report.feasible && report.optimum_consistent != Some(false) {
                EXIT_OK
            } else {
                EXIT_FAIL
            })
        }
        Command::Verify { cert } => {
            let cert = Certificate::from_json(&read(cert)?)?;
            let report = cert.reverify()?;
            let summary = report.summary();
            let reproduced = report.pass && report.certified_bound == cert.objective;
            emit(cli, &serde_json::to_string_pretty(&summary)?)?;
            eprintln!(
                "{} bound={} recorded={} min_slack={:e}",
                if reproduced { "PASS" } else { "FAIL" },
                report.certified_bound,
                cert.objective,
                summary.min_slack
            );
            if !reproduced {
                Ok(EXIT_FAIL)
            } else if !cert.within_envelope() {
                Ok(EXIT_ENVELOPE)
            } else {
                Ok(EXIT_OK)
            }
        }
    }
}

fn check_scale(cli: &Cli, n: usize) -> Result<()> {
    if n > LONG_N && !cli.long {
        return Err(Error::InvalidArgument(format!("N = {n} exceeds {LONG_N}; pass --long")));
    }
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(path) => fs::write(path, format!("{text}\n"))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn single(cli: &Cli, prog: crate::programs::ConicProgram) -> Result<i32> {
    let start = Instant::now();
    let outcome = certify_program(prog, &PipelineOptions::default())?;
    let cert = &outcome.certificate;
    emit(cli, &cert.to_json()?)?;
    eprintln!(
        "{} bound={} checks={} min_slack={:e} time={:.2}s",
        if cert.report.pass { "PASS" } else { "FAIL" },
        cert.objective,
        cert.report.checks,
        cert.report.min_slack,
        start.elapsed().as_secs_f64()
    );
    if !cert.report.pass {
        Ok(EXIT_FAIL)
    } else if !cert.within_envelope() {
        eprintln!("bound {} lies outside the known envelope", cert.objective);
        Ok(EXIT_ENVELOPE)
    } else {
        Ok(EXIT_OK)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Desk,
    Large,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub label: String,
    pub program: ProgramSource,
    /// Bound the job is expected to reach; reported, not enforced.
    #[serde(default)]
    pub target: Option<f64>,
}

/// Anchor certificates whose ellipses should cover `h x p` for every `q`
/// shared by the anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covering {
    pub anchors: Vec<ProgramInput>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default = "default_offset")]
    pub threshold_offset: f64,
    pub h: (f64, f64),
    pub p: (f64, f64),
    #[serde(default = "default_guard")]
    pub guard: f64,
}

fn default_offset() -> f64 {
    DEFAULT_THRESHOLD_OFFSET
}

fn default_guard() -> f64 {
    DEFAULT_GUARD
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cuboid {
    pub h: (f64, f64),
    pub p: (f64, f64),
    pub q: (f64, f64),
}

impl Cuboid {
    pub const VALID: Cuboid = Cuboid {
        h: (0.0, 2.0),
        p: (0.0, 1.0),
        q: (-1.0, 1.0),
    };

    fn of(input: &ProgramInput) -> Self {
        Self {
            h: (input.h1, input.h2),
            p: (input.p1, input.p2),
            q: (input.q1, input.q2),
        }
    }

    fn contains(&self, pt: [f64; 3]) -> bool {
        let inside = |(lo, hi): (f64, f64), x: f64| lo <= x && x <= hi;
        inside(self.h, pt[0]) && inside(self.p, pt[1]) && inside(self.q, pt[2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub name: String,
    #[serde(default)]
    pub scale: Scale,
    pub jobs: Vec<Job>,
    #[serde(default)]
    pub covering: Option<Covering>,
    /// Parameter region the plan should exhaust.
    #[serde(default = "default_domain")]
    pub domain: Cuboid,
}

fn default_domain() -> Cuboid {
    Cuboid::VALID
}

impl Plan {
    pub fn from_json(text: &str) -> Result<Self> {
        let plan: Plan = serde_json::from_str(text)?;
        if plan.jobs.is_empty() && plan.covering.as_ref().is_none_or(|c| c.anchors.is_empty()) {
            return Err(Error::InvalidArgument(format!("plan {:?} has no jobs", plan.name)));
        }
        Ok(plan)
    }

    fn max_n(&self) -> usize {
        let jobs = self.jobs.iter().map(|j| match &j.program {
            ProgramSource::Lp { n, .. } => *n,
            ProgramSource::Full(i) => i.n,
        });
        let anchors = self.covering.iter().flat_map(|c| c.anchors.iter().map(|a| a.n));
        jobs.chain(anchors).max().unwrap_or(0)
    }
}

/// Cells of the grid spanned by every box edge that lie in `domain` but in
/// none of `boxes`.
pub fn residual(domain: Cuboid, boxes: &[Cuboid]) -> Vec<Cuboid> {
    let axis = |pick: fn(&Cuboid) -> (f64, f64)| -> Vec<f64> {
        let (lo, hi) = pick(&domain);
        let mut v: Vec<f64> = std::iter::once((lo, hi))
            .chain(boxes.iter().map(pick))
            .flat_map(|(a, b)| [a, b])
            .filter(|x| lo <= *x && *x <= hi)
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let hs = axis(|c| c.h);
    let ps = axis(|c| c.p);
    let qs = axis(|c| c.q);
    let mut out = Vec::new();
    for h in hs.windows(2) {
        for p in ps.windows(2) {
            for q in qs.windows(2) {
                let mid = [(h[0] + h[1]) / 2.0, (p[0] + p[1]) / 2.0, (q[0] + q[1]) / 2.0];
                if !boxes.iter().any(|b| b.contains(mid)) {
                    out.push(Cuboid {
                        h: (h[0], h[1]),
                        p: (p[0], p[1]),
                        q: (q[0], q[1]),
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobResult {
    pub label: String,
    pub file: Option<String>,
    pub pass: bool,
    pub bound: Option<f64>,
    pub within_envelope: bool,
    pub meets_target: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringResult {
    pub threshold: f64,
    pub h: (f64, f64),
    pub p: (f64, f64),
    pub q: (f64, f64),
    pub coverage: Coverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub plan: String,
    pub jobs: Vec<JobResult>,
    pub anchors: Vec<JobResult>,
    pub covering: Option<CoveringResult>,
    pub failed: usize,
    /// Smallest bound over the jobs that passed.
    pub min_bound: Option<f64>,
    /// Domain cells covered neither by a job box nor by the covered region.
    pub residual: Vec<Cuboid>,
    /// Bound on the whole domain: present only when nothing failed and the
    /// residual is empty. Never above any constituent certificate.
    pub claimed_bound: Option<f64>,
}

impl SweepReport {
    pub fn headline(&self) -> String {
        let fmt = |b: Option<f64>| b.map_or("none".to_string(), |x| x.to_string());
        format!(
            "{} jobs={} failed={} min_bound={} residual_cells={} claimed={}",
            if self.failed > 0 {
                "PARTIAL"
            } else if self.claimed_bound.is_some() {
                "COMPLETE"
            } else {
                "UNCOVERED"
            },
            self.jobs.len() + self.anchors.len(),
            self.failed,
            fmt(self.min_bound),
            self.residual.len(),
            fmt(self.claimed_bound)
        )
    }

    pub fn exit_code(&self) -> i32 {
        if self.failed > 0 {
            EXIT_FAIL
        } else {
            EXIT_OK
        }
    }
}

struct Ran {
    result: JobResult,
    cert: Option<Certificate>,
    secs: f64,
}

fn run_job(label: &str, program: &ProgramSource, target: Option<f64>, paper_compat: bool) -> (Ran, Option<String>) {
    let start = Instant::now();
    let built = match program {
        ProgramSource::Lp { n, r } => build_lp(*n, *r),
        ProgramSource::Full(input) => {
            let mut input = *input;
            if paper_compat {
                input.sine = SineCoefficient::PaperCompat;
            }
            input.validate().and_then(|_| build_full(&input))
        }
    };
    let outcome = built.and_then(|prog| certify_program(prog, &PipelineOptions::default()));
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(o) => {
            let cert = o.certificate;
            let pass = cert.report.pass;
            let within = cert.within_envelope();
            let text = cert.to_json().ok();
            let result = JobResult {
                label: label.to_string(),
                file: None,
                pass: pass && within,
                bound: pass.then_some(cert.objective),
                within_envelope: within,
                meets_target: target.map(|t| pass && cert.objective >= t),
                error: match (pass, within) {
                    (false, _) => Some("verification failed".into()),
                    (true, false) => Some("bound outside the known envelope".into()),
                    _ => None,
                },
            };
            (
                Ran {
                    result,
                    cert: Some(cert),
                    secs,
                },
                text,
            )
        }
        Err(e) => (
            Ran {
                result: JobResult {
                    label: label.to_string(),
                    file: None,
                    pass: false,
                    bound: None,
                    within_envelope: false,
                    meets_target: target.map(|_| false),
                    error: Some(e.to_string()),
                },
                cert: None,
                secs,
            },
            None,
        ),
    }
}

/// Runs all jobs and anchors of `plan`, writing certificates under
/// `out/certs`, the report to `out/report.json` and timings to `out/run.log`.
pub fn run_sweep(plan: &Plan, cli: &Cli, out: &Path) -> Result<SweepReport> {
    if plan.scale == Scale::Large && !cli.long {
        return Err(Error::InvalidArgument(format!(
            "plan {:?} is large-scale; pass --long",
            plan.name
        )));
    }
    check_scale(cli, plan.max_n())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let certs_dir = out.join("certs");
    fs::create_dir_all(&certs_dir)?;
    let started = unix_now();

    let mut tasks: Vec<(String, ProgramSource, Option<f64>)> = plan
        .jobs
        .iter()
        .map(|j| (j.label.clone(), j.program.clone(), j.target))
        .collect();
    let anchors = plan.covering.as_ref().map_or(&[][..], |c| &c.anchors[..]);
    tasks.extend(
        anchors
            .iter()
            .enumerate()
            .map(|(i, a)| (format!("anchor-{:02}", i + 1), ProgramSource::Full(*a), None)),
    );
    let ran: Vec<(Ran, Option<String>)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(label, prog, target)| run_job(label, prog, *target, cli.paper_compat))
            .collect()
    });

    let mut log = format!("started {started}\n");
    let mut results = Vec::with_capacity(ran.len());
    for (i, (mut r, text)) in ran.into_iter().enumerate() {
        if let Some(text) = text {
            let name = format!("{:03}-{}.json", i + 1, sanitize(&r.result.label));
            fs::write(certs_dir.join(&name), format!("{text}\n"))?;
            r.result.file = Some(format!("certs/{name}"));
        }
        let _ = writeln!(log, "{} {:.3}s", r.result.label, r.secs);
        results.push(r);
    }
    let anchor_runs = results.split_off(plan.jobs.len());

    let mut covering = None;
    if let Some(c) = &plan.covering {
        if anchor_runs.iter().all(|r| r.result.pass) && !anchor_runs.is_empty() {
            let certs: Vec<Certificate> = anchor_runs.iter().filter_map(|r| r.cert.clone()).collect();
            let rect = Rect::new(c.h, c.p)?;
            let threshold = c.threshold.or_else(|| {
                let lo = certs.iter().map(|c| c.objective).fold(f64::INFINITY, f64::min);
                Some(lo - c.threshold_offset)
            });
            let e = run_ellipses(&certs, threshold, rect, c.guard)?;
            write_ellipse_outputs(&e, &out.join("ellipses"))?;
            covering = Some(CoveringResult {
                threshold: e.threshold,
                h: c.h,
                p: c.p,
                q: e.q,
                coverage: e.coverage,
            });
        }
    }

    let jobs: Vec<JobResult> = results.iter().map(|r| r.result.clone()).collect();
    let anchors: Vec<JobResult> = anchor_runs.iter().map(|r| r.result.clone()).collect();
    let failed = jobs.iter().chain(&anchors).filter(|j| !j.pass).count();
    let min_bound = jobs
        .iter()
        .chain(&anchors)
        .filter_map(|j| j.bound.filter(|_| j.pass))
        .min_by(f64::total_cmp);

    let mut boxes: Vec<Cuboid> = plan
        .jobs
        .iter()
        .zip(&jobs)
        .filter(|(_, r)| r.pass)
        .filter_map(|(j, _)| match &j.program {
            ProgramSource::Full(i) => Some(Cuboid::of(i)),
            ProgramSource::Lp { .. } => None,
        })
        .collect();
    if let Some(c) = covering.as_ref().filter(|c| c.coverage.covered) {
        boxes.push(Cuboid { h: c.h, p: c.p, q: c.q });
    }
    let residual = residual(plan.domain, &boxes);
    let claimed_bound = if failed == 0 && residual.is_empty() {
        let cover_thr = covering.as_ref().map(|c| c.threshold);
        min_bound.map(|m| cover_thr.map_or(m, |t| m.min(t)))
    } else {
        None
    };
    let report = SweepReport {
        plan: plan.name.clone(),
        jobs,
        anchors,
        covering,
        failed,
        min_bound,
        residual,
        claimed_bound,
    };
    fs::write(
        out.join("report.json"),
        format!("{}\n", serde_json::to_string_pretty(&report)?),
    )?;
    let _ = writeln!(log, "finished {}", unix_now());
    fs::write(out.join("run.log"), log)?;
    Ok(report)
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Certificates of a directory, in file-name order.
pub fn load_certificates(dir: &Path) -> Result<Vec<Certificate>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidArgument(format!("no certificates in {}", dir.display())));
    }
    paths.iter().map(|p| Certificate::from_json(&read(p)?)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipseRun {
    pub threshold: f64,
    pub rect: Rect,
    /// Intersection of the anchors' `q` ranges.
    pub q: (f64, f64),
    pub regions: Vec<EllipseRegion>,
    pub coverage: Coverage,
}

pub fn run_ellipses(certs: &[Certificate], threshold: Option<f64>, rect: Rect, guard: f64) -> Result<EllipseRun> {
    let data: Vec<ReuseData> = certs.iter().map(ReuseData::from_certificate).collect::<Result<_>>()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("no certificates".into()));
    }
    let threshold = threshold
        .unwrap_or_else(|| data.iter().map(|d| d.objective).fold(f64::INFINITY, f64::min) - DEFAULT_THRESHOLD_OFFSET);
    let q = data.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), d| {
        (lo.max(d.q.0), hi.min(d.q.1))
    });
    if q.0 > q.1 {
        return Err(Error::InvalidArgument("certificates share no q range".into()));
    }
    let regions: Vec<EllipseRegion> = data.iter().map(|d| d.ellipse(threshold)).collect();
    let coverage = covers(&regions, rect, guard);
    Ok(EllipseRun {
        threshold,
        rect,
        q,
        regions,
        coverage,
    })
}

/// Writes `regions.csv`, `regions.svg` and `coverage.json` into `dir`.
pub fn write_ellipse_outputs(run: &EllipseRun, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("regions.csv"), regions_csv(run))?;
    fs::write(dir.join("regions.svg"), regions_svg(run))?;
    let summary = serde_json::json!({
        "threshold": run.threshold,
        "h": run.rect.h,
        "p": run.rect.p,
        "q": run.q,
        "covered": run.coverage.covered,
        "witness": run.coverage.witness,
        "cells": run.coverage.cells,
    });
    fs::write(
        dir.join("coverage.json"),
        format!("{}\n", serde_json::to_string_pretty(&summary)?),
    )?;
    Ok(())
}

pub fn regions_csv(run: &EllipseRun) -> String {
    let mut s = String::from("kind,index,h,p,objective,shape,semi_h,semi_p\n");
    for (i, r) in run.regions.iter().enumerate() {
        let (shape, sh, sp, ch, cp) = match r.shape() {
            Shape::Ellipse { center, semi_axes } => ("ellipse", semi_axes.0, semi_axes.1, center.0, center.1),
            Shape::Empty => ("empty", 0.0, 0.0, r.anchor.0, r.anchor.1),
            Shape::WholePlane => ("whole_plane", f64::INFINITY, f64::INFINITY, r.anchor.0, r.anchor.1),
            Shape::Unbounded => ("unbounded", f64::INFINITY, f64::INFINITY, r.anchor.0, r.anchor.1),
        };
        let _ = writeln!(
            s,
            "anchor,{},{},{},{},{shape},,",
            i + 1,
            r.anchor.0,
            r.anchor.1,
            r.anchor.2
        );
        let _ = writeln!(s, "region,{},{ch},{cp},{},{shape},{sh},{sp}", i + 1, run.threshold);
    }
    let _ = writeln!(
        s,
        "box,,{};{},{};{},{},{},,",
        run.rect.h.0,
        run.rect.h.1,
        run.rect.p.0,
        run.rect.p.1,
        run.threshold,
        if run.coverage.covered { "covered" } else { "uncovered" }
    );
    if let Some((h, p)) = run.coverage.witness {
        let _ = writeln!(s, "witness,,{h},{p},,,,");
    }
    s
}

const PALETTE: [&str; 8] = [
    "#2ca02c", "#1f77b4", "#d62728", "#9467bd", "#98df8a", "#ff7f0e", "#17becf", "#8c564b",
];

pub fn regions_svg(run: &EllipseRun) -> String {
    let (size, pad) = (600.0, 40.0);
    let (h0, h1) = run.rect.h;
    let (p0, p1) = run.rect.p;
    // view is the box plus a quarter of its extent on each side
    let dh = (h1 - h0).max(1e-9) / 4.0;
    let dp = (p1 - p0).max(1e-9) / 4.0;
    let (vh0, vh1, vp0, vp1) = (h0 - dh, h1 + dh, p0 - dp, p1 + dp);
    let sx = (size - 2.0 * pad) / (vh1 - vh0);
    let sy = (size - 2.0 * pad) / (vp1 - vp0);
    let x = |h: f64| pad + (h - vh0) * sx;
    let y = |p: f64| size - pad - (p - vp0) * sy;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(s, r#"<rect width="{size}" height="{size}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<clipPath id="view"><rect x="{pad}" y="{pad}" width="{w}" height="{w}"/></clipPath>"#,
        w = size - 2.0 * pad
    );
    let _ = writeln!(s, r#"<g clip-path="url(#view)">"#);
    for (i, r) in run.regions.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        if let Shape::Ellipse { center, semi_axes } = r.shape() {
            let _ = writeln!(
                s,
                r#"<ellipse cx="{:.3}" cy="{:.3}" rx="{:.3}" ry="{:.3}" fill="{colour}" fill-opacity="0.25" stroke="{colour}"/>"#,
                x(center.0),
                y(center.1),
                semi_axes.0 * sx,
                semi_axes.1 * sy
            );
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        x(h0),
        y(p1),
        (h1 - h0) * sx,
        (p1 - p0) * sy
    );
    for (i, r) in run.regions.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let (cx, cy) = (x(r.anchor.0), y(r.anchor.1));
        let _ = writeln!(
            s,
            r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="3" fill="{colour}" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-size="11">{}</text>"#,
            cx + 5.0,
            cy - 5.0,
            i + 1
        );
    }
    if let Some((h, p)) = run.coverage.witness {
        let (cx, cy) = (x(h), y(p));
        let _ = writeln!(
            s,
            r#"<path d="M{:.3} {:.3} L{:.3} {:.3} M{:.3} {:.3} L{:.3} {:.3}" stroke="red" stroke-width="2"/>"#,
            cx - 5.0,
            cy - 5.0,
            cx + 5.0,
            cy + 5.0,
            cx - 5.0,
            cy + 5.0,
            cx + 5.0,
            cy - 5.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{pad}" y="{:.3}" font-size="12">h in [{h0}, {h1}], p in [{p0}, {p1}], threshold {}: {}</text>"#,
        size - 12.0,
        run.threshold,
        if run.coverage.covered { "covered" } else { "uncovered" }
    );
    s.push_str("</svg>\n");
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub input: ProgramInput,
    pub sup_norm: f64,
    pub mean: f64,
    pub second_moment: f64,
    pub c1: f64,
    pub d1: f64,
    pub truncation_residual: f64,
    pub min_slack: f64,
    pub worst: String,
    pub feasible: bool,
    pub optimum: Option<f64>,
    pub gap: Option<f64>,
    /// `optimum <= sup_norm + gap`, when solved.
    pub optimum_consistent: Option<bool>,
}

pub fn oracle_report(f: &StepFunction, input: &ProgramInput, k_ext: usize, solve: bool) -> Result<OracleReport> {
    let a = oracle::assignment(f, input, k_ext)?;
    let x = a.to_point(input)?;
    let prog = build_full(input)?;
    let (worst_i, min_slack) = prog
        .constraints
        .iter()
        .enumerate()
        .map(|(i, c)| (i, c.slack(&x)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::InvalidArgument("program has no constraints".into()))?;
    let tag = prog.constraints[worst_i].tag;
    let m = oracle::convolve(f);
    let (optimum, gap) = if solve {
        let sol = crate::solver::solve(&prog, &Default::default())?;
        if !sol.status.is_usable() {
            return Err(Error::Solver(format!("solver stopped with status {:?}", sol.status)));
        }
        (Some(sol.primal_objective), Some(sol.gap))
    } else {
        (None, None)
    };
    Ok(OracleReport {
        name: f.name().to_string(),
        input: *input,
        sup_norm: a.omega,
        mean: a.mean,
        second_moment: oracle::second_moment(&m),
        c1: a.coeffs.c(1),
        d1: a.coeffs.d(1),
        truncation_residual: a.truncation_residual,
        min_slack,
        worst: format!("{:?}[{}]", tag.family, tag.index),
        feasible: min_slack >= -ORACLE_SLACK_TOL,
        optimum,
        gap,
        optimum_consistent: optimum.zip(gap).map(|(o, g)| o <= a.omega + g.abs()),
    })
}
