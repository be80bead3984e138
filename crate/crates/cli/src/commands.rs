//! The subcommands. Each returns a [`RunReport`] plus an optional CSV table.

use std::path::Path;
use std::time::SystemTime;

use anyhow::{bail, Context, Result};
use lie_plateau::dla::DlaManifest;
use lie_plateau::moments::{expressiveness_report, LambdaOptions};
use lie_plateau::purity::{apply_global_depolarizing, purity_report};
use lie_plateau::setups::{Setup, SetupFamily};
use lie_plateau::simulate::{estimate_variance_mc, McEstimate, McOptions, Spam};
use lie_plateau::variance::{bp_diagnose_points, loss_variance, FamilyPoint, VariancePrediction};
use lie_plateau::{decompose, lie_closure, DlaBasis, DlaDecomposition, Error, Execution, HermitianOp, PauliString};
use serde::Serialize;

use crate::config::{ExperimentConfig, Problem};
use crate::report::{write_csv, write_json, PointReport, PurityBlock, RunReport, Status};

pub const DEFAULT_SI_RANGE: [usize; 2] = [3, 9];

/// Exit status for an error raised by the library.
pub fn classify(e: &anyhow::Error) -> Status {
    match e.downcast_ref::<Error>() {
        Some(Error::Truncated { .. }) => Status::Truncated,
        Some(Error::OutsideTheory(_)) => Status::OutsideTheory,
        Some(Error::NotConverged { .. }) => Status::NotConverged,
        _ => Status::Error,
    }
}

fn record(point: &mut PointReport, e: anyhow::Error) {
    point.fail(classify(&e), format!("{e:#}"));
}

/// The circuit's DLA, coherent-error generators included.
fn algebra(cfg: &ExperimentConfig, p: &Problem) -> Result<DlaBasis> {
    let mut gens: Vec<PauliString> = p.generators.clone();
    gens.extend(cfg.noise.coherent_errors.iter().map(|e| e.generator));
    Ok(lie_closure(&gens, cfg.dim_cap(p.n))?)
}

fn decomposed(cfg: &ExperimentConfig, p: &Problem, point: &mut PointReport) -> Result<DlaDecomposition> {
    let basis = algebra(cfg, p)?;
    if basis.is_truncated() {
        point.dla = Some(DlaManifest::truncated(&basis));
        return Err(Error::Truncated { cap: basis.dim_cap() }.into());
    }
    let dec = decompose(&basis)?;
    point.dla = Some(dec.to_manifest());
    Ok(dec)
}

/// Exact prediction with global depolarizing SPAM folded in: the input
/// channel acts on the state, the output channel scales the centered loss.
fn exact(cfg: &ExperimentConfig, p: &Problem, dec: &DlaDecomposition) -> Result<VariancePrediction> {
    let o = p.observable.as_ref().context("config needs an observable (or a setup)")?;
    let spam = cfg.noise.spam.unwrap_or(Spam { p_before: 0.0, p_after: 0.0 });
    let rho = if spam.p_before > 0.0 { apply_global_depolarizing(&p.state, spam.p_before)? } else { p.state.clone() };
    let mut pred = loss_variance(&rho, o, dec)?;
    if spam.p_after > 0.0 {
        let keep = 1.0 - spam.p_after;
        let d = (1u64 << p.n) as f64;
        pred.mean = keep * pred.mean + spam.p_after * o.trace() / d;
        pred.variance *= keep * keep;
        for c in &mut pred.ideals {
            c.contribution *= keep * keep;
        }
    }
    Ok(pred)
}

fn purity(p: &Problem, dec: &DlaDecomposition) -> Result<PurityBlock> {
    Ok(PurityBlock {
        state: purity_report(&p.state, dec, false)?,
        observable: p.observable.as_ref().map(|o| purity_report(o, dec, false)).transpose()?,
        observable_norm_sq: p.observable.as_ref().map(|o| o.hs_norm_sq()),
    })
}

fn monte_carlo(cfg: &ExperimentConfig, p: &Problem, seed: u64) -> Result<McEstimate> {
    let o = p.observable.as_ref().context("config needs an observable (or a setup)")?;
    let spec = cfg.circuit(p)?;
    let mut opts = McOptions::new(cfg.sampling.samples, seed);
    opts.batches = cfg.sampling.batches;
    if !cfg.sampling.fixed_depth {
        opts = opts.with_convergence(cfg.sampling.convergence);
    }
    Ok(estimate_variance_mc(&p.state, o, &spec, &opts)?)
}

fn family_point(point: &PointReport) -> Option<FamilyPoint> {
    let v = point.variance.as_ref()?;
    let pur = point.purity.as_ref()?;
    let o = pur.observable.as_ref()?;
    Some(FamilyPoint {
        n: point.n,
        dim_g: point.dla.as_ref()?.dim,
        purity_rho: pur.state.total(),
        purity_o: o.total(),
        trace_o2: pur.observable_norm_sq?,
        variance: v.variance,
    })
}

pub struct Outcome {
    pub report: RunReport,
    pub summary: Vec<String>,
}

fn finish(cfg: &ExperimentConfig, command: &str, report: RunReport, csv: Option<&dyn Fn(&Path) -> Result<()>>) -> Result<RunReport> {
    if let Some(dir) = &cfg.output.dir {
        write_json(&dir.join(format!("{command}.json")), &report)?;
        if let Some(f) = csv {
            f(&dir.join(format!("{command}.csv")))?;
        }
    }
    Ok(report)
}

fn for_sizes(cfg: &ExperimentConfig, f: impl Fn(&mut PointReport, &Problem) -> Result<()>) -> Result<Vec<PointReport>> {
    let mut points = Vec::new();
    for n in cfg.sizes()? {
        let p = cfg.problem(n)?;
        let mut point = PointReport::new(n, p.setup);
        point.prep = p.prep.clone();
        if let Err(e) = f(&mut point, &p) {
            record(&mut point, e);
        }
        points.push(point);
    }
    Ok(points)
}

fn dims_line(point: &PointReport) -> String {
    match &point.dla {
        Some(m) if m.truncated => format!("dim >= {} (truncated)", m.dim),
        Some(m) => format!(
            "dim {} = center {} + ideals {:?}",
            m.dim,
            m.center.dim,
            m.ideals.iter().map(|c| c.dim).collect::<Vec<_>>()
        ),
        None => "no algebra".into(),
    }
}

fn status_suffix(point: &PointReport) -> String {
    match &point.message {
        Some(m) => format!(" [{:?}: {m}]", point.status),
        None => String::new(),
    }
}

pub fn dla(cfg: &ExperimentConfig) -> Result<Outcome> {
    let started = SystemTime::now();
    let points = for_sizes(cfg, |point, p| decomposed(cfg, p, point).map(|_| ()))?;
    let summary = points.iter().map(|pt| format!("n = {}: {}{}", pt.n, dims_line(pt), status_suffix(pt))).collect();
    let report = finish(cfg, "dla", RunReport::new("dla", cfg, started, points), None)?;
    Ok(Outcome { report, summary })
}

pub fn purity_cmd(cfg: &ExperimentConfig) -> Result<Outcome> {
    let started = SystemTime::now();
    let points = for_sizes(cfg, |point, p| {
        let dec = decomposed(cfg, p, point)?;
        point.purity = Some(purity(p, &dec)?);
        Ok(())
    })?;
    let summary = points
        .iter()
        .map(|pt| {
            let pur = pt.purity.as_ref().map(|b| {
                let o = b.observable.as_ref().map(|o| format!(", P_g(O) = {:.6e}", o.total())).unwrap_or_default();
                format!("P_g(rho) = {:.6e}{o}", b.state.total())
            });
            format!("n = {}: {}{}", pt.n, pur.unwrap_or_default(), status_suffix(pt))
        })
        .collect();
    let report = finish(cfg, "purity", RunReport::new("purity", cfg, started, points), None)?;
    Ok(Outcome { report, summary })
}

pub fn variance(cfg: &ExperimentConfig) -> Result<Outcome> {
    let started = SystemTime::now();
    let points = for_sizes(cfg, |point, p| {
        let dec = decomposed(cfg, p, point)?;
        point.purity = Some(purity(p, &dec)?);
        point.variance = Some(exact(cfg, p, &dec)?);
        Ok(())
    })?;
    let mut summary: Vec<String> = points
        .iter()
        .map(|pt| match &pt.variance {
            Some(v) => format!("n = {}: mean {:.6e}, variance {:.6e}", pt.n, v.mean, v.variance),
            None => format!("n = {}:{}", pt.n, status_suffix(pt)),
        })
        .collect();
    let mut report = RunReport::new("variance", cfg, started, points);
    if cfg.n_range.is_some() {
        let fp: Vec<FamilyPoint> = report.points.iter().filter_map(family_point).collect();
        if fp.len() == report.points.len() && fp.len() >= 4 {
            let name = match cfg.setup {
                Some(s) => format!("setup {s}"),
                None => "config".into(),
            };
            let d = bp_diagnose_points(name, fp)?;
            summary.push(format!(
                "verdict {:?}: log2 Var slope {:.3} (R^2 {:.3}), cause {:?}",
                d.verdict, d.exponential_fit.slope, d.exponential_fit.r_squared, d.dominant_cause
            ));
            report.diagnosis.push(d);
        }
    }
    let report = finish(cfg, "variance", report, None)?;
    Ok(Outcome { report, summary })
}

#[derive(Serialize)]
struct McRow {
    n: usize,
    setup: Option<Setup>,
    #[serde(rename = "L")]
    layers: usize,
    samples: usize,
    var_hat: f64,
    stderr: f64,
    var_exact: Option<f64>,
    z_score: Option<f64>,
}

pub fn montecarlo(cfg: &ExperimentConfig) -> Result<Outcome> {
    let started = SystemTime::now();
    let points = for_sizes(cfg, |point, p| {
        match decomposed(cfg, p, point).and_then(|dec| {
            point.purity = Some(purity(p, &dec)?);
            exact(cfg, p, &dec)
        }) {
            Ok(v) => point.variance = Some(v),
            Err(e) if classify(&e) == Status::OutsideTheory => point.message = Some(format!("no exact value: {e:#}")),
            Err(e) if classify(&e) == Status::Truncated => point.message = Some(format!("no exact value: {e:#}")),
            Err(e) => return Err(e),
        }
        let est = monte_carlo(cfg, p, cfg.seed)?;
        let converged = est.converged;
        point.monte_carlo = Some(est);
        if !converged {
            point.fail(Status::NotConverged, "variance did not settle before the layer cap");
        }
        Ok(())
    })?;
    let rows: Vec<McRow> = points
        .iter()
        .filter_map(|pt| {
            let est = pt.monte_carlo.as_ref()?;
            let exact = pt.variance.as_ref().map(|v| v.variance);
            Some(McRow {
                n: pt.n,
                setup: pt.setup,
                layers: est.layers_used,
                samples: est.num_samples,
                var_hat: est.variance_hat,
                stderr: est.stderr_of_variance,
                var_exact: exact,
                z_score: exact.map(|x| est.z_score(x)),
            })
        })
        .collect();
    let summary = rows
        .iter()
        .map(|r| {
            let ex = r.var_exact.map(|x| format!(", exact {x:.6e}, z {:+.2}", r.z_score.unwrap_or(f64::NAN))).unwrap_or_default();
            format!("n = {}: L = {}, var {:.6e} +- {:.2e}{ex}", r.n, r.layers, r.var_hat, r.stderr)
        })
        .collect();
    let report = RunReport::new("montecarlo", cfg, started, points);
    let report = finish(cfg, "montecarlo", report, Some(&|path: &Path| write_csv(path, &rows)))?;
    Ok(Outcome { report, summary })
}

#[derive(Serialize)]
struct DepthRow {
    n: usize,
    lambda_max: f64,
    epsilon: f64,
    #[serde(rename = "L")]
    layers: usize,
}

pub fn depth(cfg: &ExperimentConfig) -> Result<Outcome> {
    let started = SystemTime::now();
    let opts = LambdaOptions { tol: cfg.depth.tol, ..LambdaOptions::default() };
    let mut points = Vec::new();
    for n in cfg.sizes()? {
        let mut point = PointReport::new(n, cfg.setup);
        let run = || -> Result<_> {
            let observable = match (cfg.setup, &cfg.observable) {
                (Some(s), _) => cfg.setup_problem(s, n)?.observable,
                (None, Some(o)) => Some(o.build(n)?),
                (None, None) => None,
            };
            let op = observable.map(HermitianOp::Pauli);
            let gap = match (&op, cfg.depth.layers.is_empty()) {
                (Some(o), false) => Some((o, cfg.depth.layers.as_slice())),
                _ => None,
            };
            Ok(expressiveness_report(n, &cfg.depth.epsilons, gap, &opts)?)
        };
        match run() {
            Ok(r) => point.expressiveness = Some(r),
            Err(e) => record(&mut point, e),
        }
        points.push(point);
    }
    let rows: Vec<DepthRow> = points
        .iter()
        .filter_map(|pt| pt.expressiveness.as_ref())
        .flat_map(|r| r.epsilon_targets.iter().map(|&(epsilon, layers)| DepthRow { n: r.n, lambda_max: r.lambda_max, epsilon, layers }))
        .collect();
    let summary = points
        .iter()
        .map(|pt| match &pt.expressiveness {
            Some(r) => {
                let t: Vec<String> = r.epsilon_targets.iter().map(|(e, l)| format!("L({e:e}) = {l}")).collect();
                format!("n = {}: lambda_max = {:.6}, {}", pt.n, r.lambda_max, t.join(", "))
            }
            None => format!("n = {}:{}", pt.n, status_suffix(pt)),
        })
        .collect();
    let report = RunReport::new("depth", cfg, started, points);
    let report = finish(cfg, "depth", report, Some(&|path: &Path| write_csv(path, &rows)))?;
    Ok(Outcome { report, summary })
}

#[derive(Serialize)]
struct SiRow {
    setup: Setup,
    n: usize,
    dim_g: Option<usize>,
    purity_rho: Option<f64>,
    #[serde(rename = "purity_O")]
    purity_o: Option<f64>,
    var_exact: Option<f64>,
    var_mc: Option<f64>,
    stderr: Option<f64>,
    z: Option<f64>,
}

pub fn reproduce_si(cfg: &ExperimentConfig) -> Result<Outcome> {
    let started = SystemTime::now();
    if cfg.generators.is_some() || cfg.state.is_some() || cfg.observable.is_some() || cfg.setup.is_some() {
        bail!("reproduce-si takes its problems from `setups`; remove generators, state, observable and setup");
    }
    let setups = cfg.setups.clone().unwrap_or_else(|| Setup::ALL.to_vec());
    let sizes = match (cfg.n, cfg.n_range) {
        (None, None) => (DEFAULT_SI_RANGE[0]..=DEFAULT_SI_RANGE[1]).collect(),
        _ => cfg.sizes()?,
    };
    let runs: Vec<(Setup, usize)> = setups.iter().flat_map(|&s| sizes.iter().map(move |&n| (s, n))).collect();
    let points = Execution::Parallel.map(runs.len(), |i| {
        let (setup, n) = runs[i];
        let mut point = PointReport::new(n, Some(setup));
        let run = |point: &mut PointReport| -> Result<()> {
            let p = cfg.setup_problem(setup, n)?;
            point.prep = p.prep.clone();
            let dec = decomposed(cfg, &p, point)?;
            point.purity = Some(purity(&p, &dec)?);
            point.variance = Some(exact(cfg, &p, &dec)?);
            let est = monte_carlo(cfg, &p, cfg.seed)?;
            let converged = est.converged;
            point.monte_carlo = Some(est);
            if !converged {
                point.fail(Status::NotConverged, "variance did not settle before the layer cap");
            }
            Ok(())
        };
        if let Err(e) = run(&mut point) {
            record(&mut point, e);
        }
        if let Some(dir) = &cfg.output.dir {
            let path = dir.join("runs").join(format!("setup{setup}_n{n}.json"));
            if let Err(e) = write_json(&path, &point) {
                point.fail(Status::Error, format!("{e:#}"));
            }
        }
        point
    });
    let rows: Vec<SiRow> = points
        .iter()
        .map(|pt| {
            let exact = pt.variance.as_ref().map(|v| v.variance);
            let mc = pt.monte_carlo.as_ref();
            SiRow {
                setup: pt.setup.expect("setup runs"),
                n: pt.n,
                dim_g: pt.dla.as_ref().map(|m| m.dim),
                purity_rho: pt.purity.as_ref().map(|b| b.state.total()),
                purity_o: pt.purity.as_ref().and_then(|b| b.observable.as_ref()).map(|o| o.total()),
                var_exact: exact,
                var_mc: mc.map(|e| e.variance_hat),
                stderr: mc.map(|e| e.stderr_of_variance),
                z: mc.zip(exact).map(|(e, x)| e.z_score(x)),
            }
        })
        .collect();
    let mut summary: Vec<String> = points
        .iter()
        .zip(&rows)
        .map(|(pt, r)| {
            format!(
                "setup {} n = {}: exact {}, mc {} +- {}, z {}{}",
                r.setup,
                r.n,
                fmt_opt(r.var_exact, "e"),
                fmt_opt(r.var_mc, "e"),
                fmt_opt(r.stderr, "e"),
                fmt_opt(r.z, "f"),
                status_suffix(pt)
            )
        })
        .collect();
    let mut report = RunReport::new("reproduce-si", cfg, started, points);
    for &setup in &setups {
        let fp: Vec<FamilyPoint> = report.points.iter().filter(|p| p.setup == Some(setup)).filter_map(family_point).collect();
        if fp.len() < 4 {
            summary.push(format!("setup {setup}: {} usable sizes, no verdict", fp.len()));
            continue;
        }
        let family = SetupFamily { setup, seed: cfg.seed, options: cfg.setup_options };
        let d = bp_diagnose_points(lie_plateau::variance::ProblemFamily::name(&family), fp)?;
        summary.push(format!(
            "setup {setup}: {:?} (log2 Var slope {:.3}, R^2 {:.3}, base {:.3}, cause {:?})",
            d.verdict, d.exponential_fit.slope, d.exponential_fit.r_squared, d.fitted_base, d.dominant_cause
        ));
        report.diagnosis.push(d);
    }
    let report = finish(cfg, "reproduce-si", report, Some(&|path: &Path| write_csv(path, &rows)))?;
    Ok(Outcome { report, summary })
}

fn fmt_opt(v: Option<f64>, style: &str) -> String {
    match (v, style) {
        (None, _) => "-".into(),
        (Some(x), "e") => format!("{x:.4e}"),
        (Some(x), _) => format!("{x:+.2}"),
    }
}
