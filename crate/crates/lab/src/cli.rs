//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sw_core::surface::ReferenceSpec;

use crate::config::{Command, RunConfig};

const GLOBAL_HELP: &str = "\
Settings come from --config (TOML, or JSON by extension; a manifest.json is
accepted), then flags override file values. The worker count is taken from
--threads, then the config file, then SW_LAB_THREADS, then the core count.
Common defaults: --seed 0, --out out, --eps 0.05, --reference isotropic.

Exit status: 0 success, 1 failed check (the criterion is named on stderr),
2 configuration error, 3 runtime or resource failure.";

#[derive(Debug, Parser)]
#[command(name = "sw-lab", version, about = "Sliced Wasserstein experiments on truncated Hilbert spaces")]
#[command(after_help = GLOBAL_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// SW_p between two measures, with the exact W_p when supports are small.
    #[command(after_help = "\
Defaults: --d 8, --p 1, --directions 1024, --n 256, mu = gaussian-kl with
lambda_i = 1/sqrt(d); when nu is omitted it is mu itself.
Outputs: estimate.csv (direction, wpp);
estimate_summary.csv (d, p, n_mu, n_nu, directions, shell_width,
proposals_used, acceptance_rate, seed, sw, sw_std_error, w_exact).")]
    Estimate,
    /// E SW_p(mu^n, mu) against C n^(-1/(2p)).
    #[command(after_help = "\
Defaults: --d 8, --p 1, --s 4p, --directions 1024, n_grid
[100, 316, 1000, 3162, 10000], --replicates 50, reference_atoms 100000.
Outputs: rate.csv (n, replicate, estimate, std_error, bound);
rate_summary.csv (n, mean_estimate, replicate_sd, mean_std_error, bound,
within_bound); rate_fit.csv (p, s, d, seed, reference_atoms, moment_s,
constant, slope, intercept, fit_points, fit_excluded_n, degenerate,
constant_note); with --refine, rate_refinement.csv (check, n, base, refined,
abs_diff, combined_std_error).")]
    Rate,
    /// |SW(mu^n, nu^m) - SW(mu, nu)| against the two-sample bound.
    #[command(name = "two-sample")]
    #[command(after_help = "\
Defaults: --d 8, --p 1, --s 4p, --directions 256, cells [(100,100),
(1000,1000)], --replicates 20, nu = mu.
Outputs: two_sample.csv (n, m, replicate, sw_empirical, sw_reference,
abs_diff, bound); two_sample_cells.csv (n, m, mean_abs_diff, se_abs_diff,
bound, within_bound).")]
    TwoSample,
    /// delta at n^(1/3) e_n: growing second moment with SW_2 computed per n.
    #[command(after_help = "\
Defaults: --d 256, --n-max min(200, d), --directions 20000, p = 2.
Outputs: counterexample.csv (n, c_n, c_n_se, sw2_sq, sw2_sq_se, sw2, sw2_se,
m2); counterexample_fit.csv (d, directions, eps, seed, slope, intercept,
sup_m2).")]
    Counterexample,
    /// SW against projected-CDF convergence for a shrinking and a fixed sequence.
    #[command(name = "narrow-demo")]
    #[command(after_help = "\
Defaults: --d 8, --p 2, --directions 2000, steps [1, 2, 5, ..., 1000].
Outputs: narrow.csv (sequence, n, sw, sw_se, w_exact, moment_p, cdf_gap);
narrow_verdicts.csv (sequence, sw_to_zero, cdf_to_zero, consistent, sw_le_w,
sup_moment).")]
    NarrowDemo,
    /// Exact W_p and SW_p between independent samples across dimensions.
    #[command(name = "dim-sweep")]
    #[command(after_help = "\
Defaults: dims [2, 4, 8, 16, 32], --p 1, --n 64, --replicates 8,
--directions 256.
Outputs: dim_sweep.csv (d, replicate, w_exact, sw, sw_se);
dim_sweep_summary.csv (d, mean_w, sd_w, mean_sw, sd_sw, w_ratio, sw_ratio);
dim_sweep_timing.csv (d, n, directions, w_seconds, sw_seconds), which holds
wall-clock times and is not reproducible.")]
    DimSweep,
    /// Fast invariant suite at reduced sizes.
    #[command(after_help = "\
Checks: metric-axioms, sw-leq-w, unit-norm, lipschitz, uniform-bound,
bobkov-integral, bobkov-bound, chebyshev-envelope.
Outputs: selftest.csv (seed, invariant, cases, violations, worst_slack,
passed).")]
    Selftest {
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<Fault>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Feed a direction of norm 1.5 to the direction checks.
    UnitNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Refine {
    Eps,
    Reference,
    Both,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Config file (TOML, or JSON by extension).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Truncation dimension.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Moment order for the rate constant.
    #[arg(long, global = true)]
    pub s: Option<f64>,
    /// Shell half-width of the direction sampler.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Number of directions k.
    #[arg(long, global = true)]
    pub directions: Option<usize>,
    /// Reference decay: isotropic, poly(a) or geom(r).
    #[arg(long, global = true)]
    pub reference: Option<String>,
    /// Repeat the largest-n estimate with a refined discretization.
    #[arg(long, global = true, value_enum, num_args = 0..=1, default_missing_value = "both")]
    pub refine: Option<Refine>,
    /// Atoms per sampled measure.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub n_max: Option<usize>,
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
}

impl Cmd {
    pub fn kind(&self) -> Command {
        match self {
            Cmd::Estimate => Command::Estimate,
            Cmd::Rate => Command::Rate,
            Cmd::TwoSample => Command::TwoSample,
            Cmd::Counterexample => Command::Counterexample,
            Cmd::NarrowDemo => Command::NarrowDemo,
            Cmd::DimSweep => Command::DimSweep,
            Cmd::Selftest { .. } => Command::Selftest,
        }
    }
}

impl Common {
    /// The settings given as flags.
    pub fn overrides(&self) -> RunConfig {
        let (refine_eps, refine_reference) = match self.refine {
            None => (None, None),
            Some(Refine::Eps) => (Some(true), None),
            Some(Refine::Reference) => (None, Some(true)),
            Some(Refine::Both) => (Some(true), Some(true)),
        };
        RunConfig {
            seed: self.seed,
            threads: self.threads,
            out: self.out.clone(),
            d: self.d,
            p: self.p,
            s: self.s,
            eps: self.eps,
            directions: self.directions,
            reference: self.reference.clone().map(ReferenceSpec::Named),
            refine_eps,
            refine_reference,
            n: self.n,
            n_max: self.n_max,
            replicates: self.replicates,
            ..RunConfig::default()
        }
    }
}
