//! Run configuration: file values, flag overrides and per-command defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sw_core::hilbert::{CoefficientVector, DiscreteMeasure, MeasureSpec};
use sw_core::surface::{GaussianReference, ReferenceSpec, DEFAULT_EPS};

use crate::LabError;

/// Environment variable supplying the default worker count.
pub const THREADS_ENV: &str = "SW_LAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Estimate,
    Rate,
    TwoSample,
    Counterexample,
    NarrowDemo,
    DimSweep,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Rate => "rate",
            Command::TwoSample => "two-sample",
            Command::Counterexample => "counterexample",
            Command::NarrowDemo => "narrow-demo",
            Command::DimSweep => "dim-sweep",
            Command::Selftest => "selftest",
        }
    }
}

/// A measure given either as a family to sample from or as explicit atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureInput {
    Atoms {
        points: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    Spec(MeasureSpec),
}

impl MeasureInput {
    pub fn dim(&self) -> Option<usize> {
        match self {
            MeasureInput::Atoms { points, .. } => points.first().map(Vec::len),
            MeasureInput::Spec(spec) => Some(spec.dim()),
        }
    }

    /// Explicit atoms as given, families as an `n`-point sample.
    pub fn realize(&self, n: usize, seed: u64) -> sw_core::Result<DiscreteMeasure> {
        match self {
            MeasureInput::Atoms { points, weights } => {
                let pts = points
                    .iter()
                    .map(|p| CoefficientVector::new(p.clone()))
                    .collect::<sw_core::Result<Vec<_>>>()?;
                match weights {
                    Some(w) => DiscreteMeasure::weighted(pts, w.clone()),
                    None => DiscreteMeasure::uniform(pts),
                }
            }
            MeasureInput::Spec(spec) => spec.sample(n, seed),
        }
    }

    fn spec(&self) -> Option<&MeasureSpec> {
        match self {
            MeasureInput::Spec(spec) => Some(spec),
            MeasureInput::Atoms { .. } => None,
        }
    }
}

/// Every setting of a run. All fields are optional in a config file; after
/// [`RunConfig::resolve`] each field the command uses is filled in.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine_eps: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine_reference: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<MeasureInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<MeasureInput>,
    /// Atoms drawn per sampled measure (estimate, dim-sweep).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    /// `(n, m)` cells of the two-sample experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_atoms: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<usize>>,
    /// Selftest seeds; each seed runs the whole suite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
}

fn config_err(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

impl RunConfig {
    /// Reads a TOML or JSON file, chosen by extension. A run manifest is
    /// accepted too; its `config` object is used.
    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            let mut value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            if value.get("version").is_some() && value.get("config").is_some() {
                value = value["config"].take();
            }
            serde_json::from_value(value).map_err(|e| config_err(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
        }
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merge(self, over: RunConfig) -> RunConfig {
        macro_rules! pick {
            ($($f:ident),*) => { RunConfig { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            command, seed, threads, out, d, p, s, eps, directions, reference, refine_eps,
            refine_reference, mu, nu, n, n_grid, cells, replicates, reference_atoms, n_max, dims,
            steps, seeds
        )
    }

    /// Fills the defaults of `command` and validates the result.
    pub fn resolve(self, command: Command, env_threads: Option<usize>) -> Result<RunConfig, LabError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(config_err(format!(
                    "config file is for `{}` but `{}` was requested",
                    c.name(),
                    command.name()
                )));
            }
        }
        let mut c = self;
        c.command = Some(command);
        c.threads = c.threads.or(env_threads);
        c.seed.get_or_insert(0);
        c.out.get_or_insert_with(|| PathBuf::from("out"));
        c.eps.get_or_insert(DEFAULT_EPS);
        let needs_reference = !matches!(command, Command::DimSweep | Command::Selftest);
        if needs_reference {
            c.reference.get_or_insert_with(ReferenceSpec::default);
        }

        match command {
            Command::Estimate => {
                c.p.get_or_insert(1.0);
                c.directions.get_or_insert(1024);
                c.n.get_or_insert(256);
                let d = c
                    .d
                    .or_else(|| c.mu.as_ref().and_then(MeasureInput::dim))
                    .unwrap_or(8);
                c.d = Some(d);
                c.mu.get_or_insert_with(|| MeasureInput::Spec(standard_gaussian(d)));
            }
            Command::Rate => {
                let p = *c.p.get_or_insert(1.0);
                c.s.get_or_insert(4.0 * p);
                c.directions.get_or_insert(1024);
                c.n_grid.get_or_insert_with(|| vec![100, 316, 1000, 3162, 10_000]);
                c.replicates.get_or_insert(50);
                c.reference_atoms.get_or_insert(sw_core::experiments::DEFAULT_REFERENCE_ATOMS);
                c.refine_eps.get_or_insert(false);
                c.refine_reference.get_or_insert(false);
                let d = *c.d.get_or_insert(8);
                c.mu.get_or_insert_with(|| MeasureInput::Spec(standard_gaussian(d)));
            }
            Command::TwoSample => {
                let p = *c.p.get_or_insert(1.0);
                c.s.get_or_insert(4.0 * p);
                c.directions.get_or_insert(256);
                c.cells.get_or_insert_with(|| vec![(100, 100), (1000, 1000)]);
                c.replicates.get_or_insert(20);
                c.reference_atoms.get_or_insert(sw_core::experiments::DEFAULT_REFERENCE_ATOMS);
                let d = *c.d.get_or_insert(8);
                let mu = c
                    .mu
                    .get_or_insert_with(|| MeasureInput::Spec(standard_gaussian(d)))
                    .clone();
                c.nu.get_or_insert(mu);
            }
            Command::Counterexample => {
                if c.p.is_some_and(|p| p != 2.0) {
                    return Err(config_err("the counterexample is defined for p = 2"));
                }
                c.p = Some(2.0);
                c.directions.get_or_insert(20_000);
                let d = *c.d.get_or_insert(256);
                c.n_max.get_or_insert(d.min(200));
            }
            Command::NarrowDemo => {
                c.p.get_or_insert(2.0);
                c.directions.get_or_insert(2000);
                c.d.get_or_insert(8);
                c.steps
                    .get_or_insert_with(|| vec![1, 2, 5, 10, 20, 50, 100, 200, 500, 1000]);
            }
            Command::DimSweep => {
                c.p.get_or_insert(1.0);
                c.directions.get_or_insert(256);
                c.dims.get_or_insert_with(|| vec![2, 4, 8, 16, 32]);
                c.n.get_or_insert(64);
                c.replicates.get_or_insert(8);
            }
            Command::Selftest => {
                c.seeds.get_or_insert_with(|| vec![c.seed.unwrap_or(0)]);
            }
        }
        c.validate(command)?;
        Ok(c)
    }

    fn validate(&self, command: Command) -> Result<(), LabError> {
        let positive = |name: &str, v: Option<usize>| match v {
            Some(0) => Err(config_err(format!("{name} must be >= 1"))),
            _ => Ok(()),
        };
        positive("threads", self.threads)?;
        positive("d", self.d)?;
        positive("directions", self.directions)?;
        positive("n", self.n)?;
        positive("replicates", self.replicates)?;
        positive("reference_atoms", self.reference_atoms)?;
        positive("n_max", self.n_max)?;
        if let Some(p) = self.p {
            if !(p.is_finite() && p >= 1.0) {
                return Err(config_err(format!("p must be finite and >= 1, got {p}")));
            }
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0 && eps <= 0.5) {
                return Err(config_err(format!("eps must lie in (0, 0.5], got {eps}")));
            }
        }
        if let (Some(s), Some(p)) = (self.s, self.p) {
            if matches!(command, Command::Rate | Command::TwoSample) && !(s > 2.0 * p) {
                return Err(config_err(format!("rate commands need s > 2p (p = {p}, s = {s})")));
            }
        }
        for (name, list) in [("n_grid", &self.n_grid), ("dims", &self.dims), ("steps", &self.steps)] {
            if let Some(list) = list {
                if list.is_empty() || list.contains(&0) {
                    return Err(config_err(format!("{name} must be nonempty with entries >= 1")));
                }
            }
        }
        if let Some(cells) = &self.cells {
            if cells.is_empty() || cells.iter().any(|&(n, m)| n == 0 || m == 0) {
                return Err(config_err("cells must be nonempty with n, m >= 1"));
            }
        }
        if let (Some(n_max), Some(d)) = (self.n_max, self.d) {
            if command == Command::Counterexample && n_max > d {
                return Err(config_err(format!("n_max = {n_max} exceeds d = {d}")));
            }
        }
        if let Some(d) = self.d {
            for (name, m) in [("mu", &self.mu), ("nu", &self.nu)] {
                if let Some(md) = m.as_ref().and_then(MeasureInput::dim) {
                    if md != d {
                        return Err(config_err(format!("{name} has dimension {md}, expected d = {d}")));
                    }
                }
            }
            if let Some(reference) = &self.reference {
                reference.resolve(d).map_err(|e| config_err(e.to_string()))?;
            }
        }
        if matches!(command, Command::Rate | Command::TwoSample) {
            for m in [&self.mu, &self.nu].into_iter().flatten() {
                let spec = m
                    .spec()
                    .ok_or_else(|| config_err("rate commands need a measure family, not explicit atoms"))?;
                spec.validate().map_err(|e| config_err(e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn reference_for(&self, d: usize) -> sw_core::Result<GaussianReference> {
        self.reference.clone().unwrap_or_default().resolve(d)
    }

    pub fn spec_mu(&self) -> Option<&MeasureSpec> {
        self.mu.as_ref().and_then(MeasureInput::spec)
    }

    pub fn spec_nu(&self) -> Option<&MeasureSpec> {
        self.nu.as_ref().and_then(MeasureInput::spec)
    }
}

/// `gaussian-kl` with `λ_i = 1/√d`, so that `E‖X‖² = 1`.
pub fn standard_gaussian(d: usize) -> MeasureSpec {
    MeasureSpec::GaussianKl {
        eigenvalues: vec![1.0 / (d as f64).sqrt(); d],
    }
}
