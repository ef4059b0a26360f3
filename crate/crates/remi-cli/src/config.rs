//! Effective run configuration: per-environment defaults overlaid with
//! config-file values, then command-line flags.

use std::path::PathBuf;

use remi::rm::PriorParams;
use remi::{AnnealConfig, RolloutParams};

use crate::CommonArgs;

/// Where the MDP comes from: a shipped benchmark (which also carries the
/// true machine) or a user grid file (inference only).
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Env(String),
    Grid(PathBuf),
}

/// A usage mistake: reported on stderr with exit code 2, as distinct from
/// runtime failures (exit code 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: Source,
    pub n: usize,
    pub rewards: Vec<f64>,
    pub runs: usize,
    pub ep_len: usize,
    pub eval_episodes: usize,
    pub iterations: usize,
    pub alpha: f64,
    pub alpha_expert: f64,
    pub gamma: f64,
    pub tolerance: f64,
    pub t0: f64,
    pub t_min: f64,
    pub beta_t: f64,
    pub p0: f64,
    pub p_min: f64,
    pub beta_p: f64,
    pub k: usize,
    pub pt: f64,
    pub pr: f64,
    pub chains: usize,
    pub seed: u64,
    pub out: PathBuf,
}

/// One benchmark column of defaults; `generic` covers user grids.
struct Defaults {
    n: usize,
    rewards: &'static [f64],
    runs: usize,
    ep_len: usize,
    iterations: usize,
    t0: f64,
    t_min: f64,
    beta_t: f64,
    p_min: f64,
    beta_p: f64,
    k: usize,
}

fn defaults_for(env: Option<&str>) -> Defaults {
    match env {
        Some("recharge") => Defaults {
            n: 3,
            rewards: &[0.0, 1.0],
            runs: 1000,
            ep_len: 25,
            iterations: 2000,
            t0: 500_000.0,
            t_min: 200.0,
            beta_t: 0.98,
            p_min: 1.0 / 16.0,
            beta_p: 0.99,
            k: 5,
        },
        Some("multi_coffee") => Defaults {
            n: 4,
            rewards: &[0.0, 1.0, 2.0],
            runs: 300,
            ep_len: 100,
            iterations: 10_000,
            t0: 1_000_000.0,
            t_min: 50.0,
            beta_t: 0.99,
            p_min: 1.0 / 16.0,
            beta_p: 0.995,
            k: 10,
        },
        // The coffee column doubles as the generic default for user grids.
        _ => Defaults {
            n: 3,
            rewards: &[0.0, 1.0],
            runs: 100,
            ep_len: 100,
            iterations: 1000,
            t0: 100_000.0,
            t_min: 300.0,
            beta_t: 0.96,
            p_min: 1.0 / 12.0,
            beta_p: 0.99,
            k: 5,
        },
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, UsageError> {
    value
        .trim()
        .parse()
        .map_err(|_| UsageError(format!("bad value for {key}: {value:?}")))
}

impl CommonArgs {
    /// Parses a `key=value` config file into the same shape as the flags.
    /// Flag values stay untouched; only unset fields are filled.
    fn absorb_config_file(&mut self, path: &std::path::Path) -> Result<(), UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config file {}: {e}", path.display())))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                UsageError(format!("config line {}: expected key=value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "env" => fill_with(&mut self.env, value.to_string()),
                "grid" => fill_with(&mut self.grid, PathBuf::from(value)),
                "out" => fill_with(&mut self.out, PathBuf::from(value)),
                "runs" => fill(&mut self.runs, key, value)?,
                "ep-len" => fill(&mut self.ep_len, key, value)?,
                "eval-episodes" => fill(&mut self.eval_episodes, key, value)?,
                "n" => fill(&mut self.n, key, value)?,
                "iterations" => fill(&mut self.iterations, key, value)?,
                "alpha" => fill(&mut self.alpha, key, value)?,
                "alpha-expert" => fill(&mut self.alpha_expert, key, value)?,
                "gamma" => fill(&mut self.gamma, key, value)?,
                "t0" => fill(&mut self.t0, key, value)?,
                "t-min" => fill(&mut self.t_min, key, value)?,
                "beta-t" => fill(&mut self.beta_t, key, value)?,
                "p0" => fill(&mut self.p0, key, value)?,
                "p-min" => fill(&mut self.p_min, key, value)?,
                "beta-p" => fill(&mut self.beta_p, key, value)?,
                "k" => fill(&mut self.k, key, value)?,
                "pt" => fill(&mut self.pt, key, value)?,
                "pr" => fill(&mut self.pr, key, value)?,
                "chains" => fill(&mut self.chains, key, value)?,
                "seed" => fill(&mut self.seed, key, value)?,
                other => {
                    return Err(UsageError(format!(
                        "config line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(())
    }

    /// Resolves defaults < config file < flags into one effective config.
    pub fn resolve(&self) -> Result<RunConfig, UsageError> {
        let mut merged = self.clone();
        if let Some(path) = &self.config {
            merged.absorb_config_file(path)?;
        }
        let source = match (&merged.env, &merged.grid) {
            (Some(env), None) => Source::Env(env.clone()),
            (None, Some(grid)) => Source::Grid(grid.clone()),
            (Some(_), Some(_)) => {
                return Err(UsageError("--env and --grid are mutually exclusive".into()))
            }
            (None, None) => return Err(UsageError("one of --env or --grid is required".into())),
        };
        let env_name = match &source {
            Source::Env(name) => Some(name.as_str()),
            Source::Grid(_) => None,
        };
        let d = defaults_for(env_name);
        Ok(RunConfig {
            source,
            n: merged.n.unwrap_or(d.n),
            rewards: d.rewards.to_vec(),
            runs: merged.runs.unwrap_or(d.runs),
            ep_len: merged.ep_len.unwrap_or(d.ep_len),
            eval_episodes: merged.eval_episodes.unwrap_or(100),
            iterations: merged.iterations.unwrap_or(d.iterations),
            alpha: merged.alpha.unwrap_or(50.0),
            alpha_expert: merged.alpha_expert.unwrap_or(50.0),
            gamma: merged.gamma.unwrap_or(0.95),
            tolerance: 1e-9,
            t0: merged.t0.unwrap_or(d.t0),
            t_min: merged.t_min.unwrap_or(d.t_min),
            beta_t: merged.beta_t.unwrap_or(d.beta_t),
            p0: merged.p0.unwrap_or(0.5),
            p_min: merged.p_min.unwrap_or(d.p_min),
            beta_p: merged.beta_p.unwrap_or(d.beta_p),
            k: merged.k.unwrap_or(d.k),
            pt: merged.pt.unwrap_or(3.0 / 5.0),
            pr: merged.pr.unwrap_or(3.0 / 4.0),
            chains: merged.chains.unwrap_or(3),
            seed: merged.seed.unwrap_or(0),
            out: merged.out.clone().unwrap_or_else(|| PathBuf::from(".")),
        })
    }
}

/// Sets `slot` from a config-file value unless a flag already set it.
/// Values are parsed either way so typos fail loudly.
fn fill<T: std::str::FromStr>(
    slot: &mut Option<T>,
    key: &str,
    value: &str,
) -> Result<(), UsageError> {
    let parsed = parse_value(key, value)?;
    slot.get_or_insert(parsed);
    Ok(())
}

fn fill_with<T>(slot: &mut Option<T>, value: T) {
    slot.get_or_insert(value);
}

impl RunConfig {
    pub fn env_name(&self) -> Result<&str, UsageError> {
        match &self.source {
            Source::Env(name) => Ok(name),
            Source::Grid(_) => Err(UsageError(
                "this subcommand needs a true reward machine; use --env".into(),
            )),
        }
    }

    pub fn anneal_config(&self) -> Result<AnnealConfig, remi::Error> {
        Ok(AnnealConfig {
            n_states: self.n,
            rewards: self.rewards.clone(),
            alpha: self.alpha,
            gamma: self.gamma,
            tolerance: self.tolerance,
            iterations: self.iterations,
            temp_initial: self.t0,
            temp_min: self.t_min,
            temp_decay: self.beta_t,
            perturb_initial: self.p0,
            perturb_min: self.p_min,
            perturb_decay: self.beta_p,
            decay_period: self.k,
            prior: PriorParams::new(self.pt, self.pr)?,
        })
    }

    pub fn demo_params(&self) -> RolloutParams {
        RolloutParams {
            episodes: self.runs,
            ep_len: self.ep_len,
            gamma: self.gamma,
            tolerance: self.tolerance,
        }
    }

    pub fn eval_params(&self) -> RolloutParams {
        RolloutParams {
            episodes: self.eval_episodes,
            ep_len: self.ep_len,
            gamma: self.gamma,
            tolerance: self.tolerance,
        }
    }

    /// Key=value lines echoed into the summary file: the benchmark table's
    /// rows first, then the remaining effective settings.
    pub fn summary(&self, r_e: f64, r_a: f64) -> String {
        let source = match &self.source {
            Source::Env(name) => format!("env={name}"),
            Source::Grid(path) => format!("grid={}", path.display()),
        };
        format!(
            "{source}\nn={}\nruns={}\nep_len={}\nN={}\nT0={}\nT_min={}\nbeta_T={}\n\
             p0={}\np_min={}\nbeta_p={}\nk={}\nr_e={r_e}\nr_a={r_a}\n\
             alpha={}\nalpha_expert={}\ngamma={}\ntol={}\np_t={}\np_r={}\nchains={}\n\
             seed={}\neval_episodes={}\n",
            self.n,
            self.runs,
            self.ep_len,
            self.iterations,
            self.t0,
            self.t_min,
            self.beta_t,
            self.p0,
            self.p_min,
            self.beta_p,
            self.k,
            self.alpha,
            self.alpha_expert,
            self.gamma,
            self.tolerance,
            self.pt,
            self.pr,
            self.chains,
            self.seed,
            self.eval_episodes,
        )
    }
}
