//! Run configuration: flags over a TOML file over defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::rounding::RoundingConfig;
use crate::salp::{LpBackend, LpOptions, RelaxationConfig, DEFAULT_LP_TOL, DEFAULT_MAX_LP_VARIABLES};

use super::CliError;

/// Default largest `n` for which the exhaustive optimum is included in reports.
pub const DEFAULT_OPT_MAX_N: usize = 20;

/// Optional settings; unset fields fall through to the next layer.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub degree: Option<usize>,
    pub tau: Option<f64>,
    pub epsilon: Option<f64>,
    pub t_pairs: Option<usize>,
    pub r_max: Option<usize>,
    pub samples: Option<usize>,
    pub n_bruteforce: Option<usize>,
    pub seed: Option<u64>,
    pub backend: Option<LpBackend>,
    pub max_lp_variables: Option<usize>,
    pub lp_tol: Option<f64>,
    pub strict_degree: Option<bool>,
    pub allow_incomplete: Option<bool>,
    pub delta_2sat_threshold_factor: Option<f64>,
    pub log_floor: Option<f64>,
    pub opt_max_n: Option<usize>,
}

macro_rules! layer {
    ($self:ident, $lower:ident; $($f:ident),*) => {
        Overrides { $($f: $self.$f.or($lower.$f)),* }
    };
}

impl Overrides {
    pub fn from_toml_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// `self` where set, `lower` otherwise.
    pub fn over(&self, lower: &Overrides) -> Overrides {
        layer!(self, lower; degree, tau, epsilon, t_pairs, r_max, samples, n_bruteforce, seed, backend,
            max_lp_variables, lp_tol, strict_degree, allow_incomplete, delta_2sat_threshold_factor,
            log_floor, opt_max_n)
    }

    /// Concrete configuration for an instance on `n` variables.
    pub fn resolve(&self, n: usize) -> Result<RunConfig, CliError> {
        let degree = self.degree.unwrap_or(6);
        if degree < 3 {
            return Err(CliError::Usage(format!("--degree must be at least 3, got {degree}")));
        }
        let mut r = RoundingConfig::for_n(n);
        if let Some(f) = self.log_floor {
            r.log_floor = f;
            let l = crate::rounding::log_scale(n, f);
            r.tau = l * l;
            r.epsilon = 1.0 / (10.0 * l);
        }
        r.tau = self.tau.unwrap_or(r.tau);
        r.epsilon = self.epsilon.unwrap_or(r.epsilon);
        r.t_pairs = self.t_pairs.unwrap_or(r.t_pairs);
        r.r_max = self.r_max.unwrap_or(r.r_max);
        r.samples_per_stage = self.samples.unwrap_or(r.samples_per_stage);
        r.n_bruteforce = self.n_bruteforce.unwrap_or(r.n_bruteforce);
        r.delta_2sat_threshold_factor = self.delta_2sat_threshold_factor.unwrap_or(r.delta_2sat_threshold_factor);
        r.allow_incomplete = self.allow_incomplete.unwrap_or(false);
        r.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let lp_tol = self.lp_tol.unwrap_or(DEFAULT_LP_TOL);
        if !(lp_tol > 0.0) {
            return Err(CliError::Usage("lp_tol must be positive".into()));
        }
        Ok(RunConfig {
            seed: self.seed.unwrap_or(0),
            degree,
            backend: self.backend.unwrap_or_default(),
            max_lp_variables: self.max_lp_variables.unwrap_or(DEFAULT_MAX_LP_VARIABLES),
            lp_tol,
            strict_degree: self.strict_degree.unwrap_or(false),
            allow_incomplete: self.allow_incomplete.unwrap_or(false),
            opt_max_n: self.opt_max_n.unwrap_or(DEFAULT_OPT_MAX_N),
            rounding: r,
        })
    }
}

/// Fully resolved settings of one solve run, embedded verbatim in reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub degree: usize,
    pub backend: LpBackend,
    pub max_lp_variables: usize,
    pub lp_tol: f64,
    pub strict_degree: bool,
    pub allow_incomplete: bool,
    pub opt_max_n: usize,
    /// Rounding settings; its `seed` is derived from the run seed.
    pub rounding: RoundingConfig,
}

impl RunConfig {
    pub fn relaxation(&self) -> RelaxationConfig {
        RelaxationConfig {
            degree: self.degree,
            max_variables: self.max_lp_variables,
            lp: LpOptions { tol: self.lp_tol, backend: self.backend, ..LpOptions::default() },
            allow_degree_fallback: !self.strict_degree,
            allow_incomplete: self.allow_incomplete,
        }
    }
}
