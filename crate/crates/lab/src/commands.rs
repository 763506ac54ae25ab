use std::path::Path;

use serde::Serialize;
use sw_core::discrete_ot::DEFAULT_SUPPORT_CAP;
use sw_core::experiments::{
    counterexample_run, narrow_convergence_demo, rate_experiment, two_sample_experiment,
    w_vs_sw_dimension_sweep, write_csv, CounterexampleConfig, CsvReport, NarrowConfig, RateConfig,
    SweepConfig, TwoSampleConfig,
};
use sw_core::rng::{derive_seed, Domain};
use sw_core::sliced::{check_sw_leq_w, sw_estimate};
use sw_core::surface::{default_max_proposals, sample_directions};

use crate::cli::Cmd;
use crate::config::RunConfig;
use crate::{selftest, Check, LabError, Outcome};

pub(crate) fn dispatch(command: &Cmd, c: &RunConfig, out: &Path) -> Result<Outcome, LabError> {
    match command {
        Cmd::Estimate => estimate(c, out),
        Cmd::Rate => rate(c, out),
        Cmd::TwoSample => two_sample(c, out),
        Cmd::Counterexample => counterexample(c, out),
        Cmd::NarrowDemo => narrow(c, out),
        Cmd::DimSweep => dim_sweep(c, out),
        Cmd::Selftest { inject_fault } => {
            let report = selftest::run_suite(c.seeds.as_deref().unwrap_or(&[0]), *inject_fault)?;
            let path = out.join("selftest.csv");
            write_csv(&path, &report.rows)?;
            Ok(Outcome {
                outputs: vec![path],
                checks: report.checks(),
                notes: Vec::new(),
            })
        }
    }
}

#[derive(Serialize)]
struct DirectionRow {
    direction: usize,
    wpp: f64,
}

#[derive(Serialize)]
struct EstimateSummary {
    d: usize,
    p: f64,
    n_mu: usize,
    n_nu: usize,
    directions: usize,
    shell_width: Option<f64>,
    proposals_used: usize,
    acceptance_rate: f64,
    seed: u64,
    sw: f64,
    sw_std_error: f64,
    w_exact: Option<f64>,
}

fn estimate(c: &RunConfig, out: &Path) -> Result<Outcome, LabError> {
    let (d, p, seed, n) = (c.d.unwrap(), c.p.unwrap(), c.seed.unwrap(), c.n.unwrap());
    let mu_in = c.mu.as_ref().expect("resolved");
    let mu = mu_in.realize(n, derive_seed(seed, Domain::MeasureDraw, 0))?;
    let nu = match &c.nu {
        Some(nu) => nu.realize(n, derive_seed(seed, Domain::MeasureDraw, 1))?,
        None => mu.clone(),
    };
    let k = c.directions.unwrap();
    let dirs = sample_directions(
        &c.reference_for(d)?,
        k,
        c.eps.unwrap(),
        derive_seed(seed, Domain::DirectionProposal, 0),
        default_max_proposals(k),
    )?;
    let est = sw_estimate(&mu, &nu, p, &dirs)?;
    let mut checks = Vec::new();
    let mut w_exact = None;
    if mu.len() <= DEFAULT_SUPPORT_CAP && nu.len() <= DEFAULT_SUPPORT_CAP {
        let report = check_sw_leq_w(&mu, &nu, p, &dirs)?;
        w_exact = Some(report.w_exact);
        checks.push(Check::new(
            "sw-leq-w",
            report.passed(),
            format!(
                "SW = {:.6e}, W = {:.6e}, {} per-direction violations",
                report.sw_value, report.w_exact, report.per_direction_violations
            ),
        ));
    }

    let rows: Vec<DirectionRow> = est
        .per_direction
        .iter()
        .enumerate()
        .map(|(direction, &wpp)| DirectionRow { direction, wpp })
        .collect();
    let meta = dirs.meta();
    let summary = EstimateSummary {
        d,
        p,
        n_mu: mu.len(),
        n_nu: nu.len(),
        directions: meta.count,
        shell_width: meta.shell_width,
        proposals_used: meta.proposals_used,
        acceptance_rate: meta.acceptance_rate,
        seed,
        sw: est.value,
        sw_std_error: est.value_std_error(),
        w_exact,
    };
    let per_dir = out.join("estimate.csv");
    let sum = out.join("estimate_summary.csv");
    write_csv(&per_dir, &rows)?;
    write_csv(&sum, &[summary])?;
    Ok(Outcome {
        outputs: vec![per_dir, sum],
        checks,
        notes: vec![format!("SW_{p} = {:.6e} +- {:.2e}", est.value, est.value_std_error())],
    })
}

fn rate(c: &RunConfig, out: &Path) -> Result<Outcome, LabError> {
    let d = c.d.unwrap();
    let spec = c.spec_mu().expect("validated").clone();
    let p = c.p.unwrap();
    let mut cfg = RateConfig::new(spec, c.reference_for(d)?, p, c.s.unwrap());
    cfg.n_grid = c.n_grid.clone().unwrap();
    cfg.replicates = c.replicates.unwrap();
    cfg.directions = c.directions.unwrap();
    cfg.eps = c.eps.unwrap();
    cfg.seed = c.seed.unwrap();
    cfg.reference_atoms = c.reference_atoms.unwrap();
    cfg.refine_eps = c.refine_eps.unwrap();
    cfg.refine_reference = c.refine_reference.unwrap();
    let report = rate_experiment(&cfg)?;

    let mut checks = vec![Check::new(
        "rate-bound",
        report.all_within_bound(),
        format!(
            "{} of {} sample sizes within C n^(-1/(2p)), C = {:.4}",
            report.summary.iter().filter(|r| r.within_bound).count(),
            report.summary.len(),
            report.fit.constant
        ),
    )];
    let target = -1.0 / (2.0 * p) + 0.1;
    match report.fit.slope {
        Some(slope) => checks.push(Check::new(
            "rate-slope",
            slope <= target,
            format!("fitted slope {slope:.4}, required <= {target:.4}"),
        )),
        None => checks.push(Check::new(
            "rate-slope",
            report.fit.degenerate,
            if report.fit.degenerate {
                "all estimates are zero; no slope to fit".to_string()
            } else {
                "too few positive points to fit a slope".to_string()
            },
        )),
    }
    for r in &report.refinements {
        checks.push(Check::new(
            &format!("refinement-{}", r.check),
            r.abs_diff <= 3.0 * r.combined_std_error + 1e-12,
            format!("|base - refined| = {:.3e}, 3 SE = {:.3e}", r.abs_diff, 3.0 * r.combined_std_error),
        ));
    }
    Ok(Outcome {
        outputs: report.write_tables(out, "rate")?,
        checks,
        notes: vec![report.fit.constant_note.to_string()],
    })
}

fn two_sample(c: &RunConfig, out: &Path) -> Result<Outcome, LabError> {
    let d = c.d.unwrap();
    let mut cfg = TwoSampleConfig::new(
        c.spec_mu().expect("validated").clone(),
        c.spec_nu().expect("validated").clone(),
        c.reference_for(d)?,
        c.p.unwrap(),
        c.s.unwrap(),
    );
    cfg.grid = c.cells.clone().unwrap();
    cfg.replicates = c.replicates.unwrap();
    cfg.directions = c.directions.unwrap();
    cfg.eps = c.eps.unwrap();
    cfg.seed = c.seed.unwrap();
    cfg.reference_atoms = c.reference_atoms.unwrap();
    let report = two_sample_experiment(&cfg)?;
    let within = report.cells.iter().filter(|r| r.within_bound).count();
    Ok(Outcome {
        outputs: report.write_tables(out, "two_sample")?,
        checks: vec![Check::new(
            "two-sample-bound",
            within == report.cells.len(),
            format!("{within} of {} cells within the bound", report.cells.len()),
        )],
        notes: Vec::new(),
    })
}

fn counterexample(c: &RunConfig, out: &Path) -> Result<Outcome, LabError> {
    let d = c.d.unwrap();
    let mut cfg = CounterexampleConfig::new(c.reference_for(d)?, c.n_max.unwrap());
    cfg.directions = c.directions.unwrap();
    cfg.eps = c.eps.unwrap();
    cfg.seed = c.seed.unwrap();
    let report = counterexample_run(&cfg)?;
    let worst = report
        .rows
        .iter()
        .map(|r| (r.m2 - (r.n as f64).powf(2.0 / 3.0)).abs() / (r.n as f64).powf(2.0 / 3.0))
        .fold(0.0, f64::max);
    let first = report.rows.first().map_or(0.0, |r| r.m2);
    let slope = report.fit.map(|f| f.slope);
    Ok(Outcome {
        outputs: report.write_tables(out, "counterexample")?,
        checks: vec![
            Check::new(
                "m2-exact",
                worst <= 1e-14,
                format!("max relative deviation of M_2 from n^(2/3): {worst:.2e}"),
            ),
            Check::new(
                "m2-unbounded",
                report.rows.len() < 2 || report.sup_m2 > first,
                format!("sup M_2 = {:.4} over n <= {}", report.sup_m2, c.n_max.unwrap()),
            ),
        ],
        notes: vec![format!(
            "fitted SW_2 log-log slope: {}",
            slope.map_or("n/a".to_string(), |s| format!("{s:.4}"))
        )],
    })
}

fn narrow(c: &RunConfig, out: &Path) -> Result<Outcome, LabError> {
    let d = c.d.unwrap();
    let mut cfg = NarrowConfig::new(c.reference_for(d)?, c.p.unwrap());
    cfg.steps = c.steps.clone().unwrap();
    cfg.directions = c.directions.unwrap();
    cfg.eps = c.eps.unwrap();
    cfg.seed = c.seed.unwrap();
    let report = narrow_convergence_demo(&cfg)?;
    let detail = report
        .verdicts
        .iter()
        .map(|v| format!("{}: sw->0 {}, cdf->0 {}", v.sequence, v.sw_to_zero, v.cdf_to_zero))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Outcome {
        outputs: report.write_tables(out, "narrow")?,
        checks: vec![Check::new("narrow-consistency", report.consistent(), detail)],
        notes: Vec::new(),
    })
}

fn dim_sweep(c: &RunConfig, out: &Path) -> Result<Outcome, LabError> {
    let cfg = SweepConfig {
        dims: c.dims.clone().unwrap(),
        p: c.p.unwrap(),
        n: c.n.unwrap(),
        replicates: c.replicates.unwrap(),
        directions: c.directions.unwrap(),
        eps: c.eps.unwrap(),
        seed: c.seed.unwrap(),
    };
    let report = w_vs_sw_dimension_sweep(&cfg)?;
    let mut outputs = report.write_tables(out, "dim_sweep")?;
    outputs.push(report.write_timing(out, "dim_sweep")?);
    let last = report.summary.last().expect("nonempty sweep");
    Ok(Outcome {
        outputs,
        checks: vec![Check::new(
            "dim-sweep-ordering",
            report.ordering_holds(),
            format!(
                "W ratio {:.3}, SW ratio {:.3} at d = {} relative to d = {}",
                last.w_ratio, last.sw_ratio, last.d, report.summary[0].d
            ),
        )],
        notes: Vec::new(),
    })
}
