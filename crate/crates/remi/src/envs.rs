//! Gridworld environments: a text format for slippery grids, the three
//! shipped benchmark tasks with their ground-truth machines, and rollout
//! helpers for generating demonstrations and scoring agents.

use rand::Rng;

use crate::alphabet::{Alphabet, Symbol, BLANK};
use crate::error::{Error, Result};
use crate::mdp::{build_product, Demonstration, LabeledMdp};
use crate::rm::{RewardMachine, INITIAL_STATE};
use crate::solver::{boltzmann_distribution, policy_iteration, QTable};

/// Action order used by every grid: up, down, right, left.
pub const ACTION_NAMES: [&str; 4] = ["up", "down", "right", "left"];

/// Row/column deltas per action, in [`ACTION_NAMES`] order.
const MOVES: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, 1), (0, -1)];

/// A rectangular gridworld. `.` is an unlabeled cell, `S` the unique start
/// (also unlabeled), and any other non-whitespace character is a labeled
/// cell named by that character. Moves slip sideways with probability
/// `slip` (split evenly between the two orthogonal directions); moving off
/// the edge stays in place.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    width: usize,
    height: usize,
    start: (usize, usize),
    cells: Vec<Symbol>,
    alphabet: Alphabet,
    slip: f64,
}

impl GridSpec {
    /// Parses the grid text format: optional `slip=<p>` header, then one
    /// line per row. The alphabet is the blank symbol followed by the other
    /// cell characters in order of first appearance.
    pub fn parse(text: &str) -> Result<Self> {
        let mut slip = 0.0;
        let mut rows: Vec<Vec<char>> = Vec::new();
        for line in text.lines() {
            if rows.is_empty() {
                if let Some(v) = line.strip_prefix("slip=") {
                    slip = v.trim().parse().map_err(|_| {
                        Error::InvalidConfig(format!("bad slip value {:?}", v.trim()))
                    })?;
                    if !(0.0..=1.0).contains(&slip) {
                        return Err(Error::InvalidConfig(format!(
                            "slip must lie in [0, 1], got {slip}"
                        )));
                    }
                    continue;
                }
            }
            if line.is_empty() {
                continue;
            }
            rows.push(line.chars().collect());
        }
        if rows.is_empty() {
            return Err(Error::NoStart { count: 0 });
        }
        let width = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::NonRectangular { row: i });
            }
        }
        let height = rows.len();
        let mut names: Vec<String> = vec![BLANK.to_string()];
        let mut starts = Vec::new();
        let mut cells = Vec::with_capacity(width * height);
        for (r, row) in rows.iter().enumerate() {
            for (c, &ch) in row.iter().enumerate() {
                match ch {
                    '.' => cells.push(0),
                    'S' => {
                        starts.push((r, c));
                        cells.push(0);
                    }
                    ch if ch.is_whitespace() || ch.is_control() => {
                        return Err(Error::UnknownChar { ch, row: r, col: c });
                    }
                    ch => {
                        let name = ch.to_string();
                        let idx = names.iter().position(|n| *n == name).unwrap_or_else(|| {
                            names.push(name);
                            names.len() - 1
                        });
                        cells.push(idx);
                    }
                }
            }
        }
        if starts.len() != 1 {
            return Err(Error::NoStart { count: starts.len() });
        }
        Ok(Self {
            width,
            height,
            start: starts[0],
            cells,
            alphabet: Alphabet::new(names)?,
            slip,
        })
    }

    /// Canonical serialization; parsing it back reproduces the spec.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut out = format!("slip={}\n", self.slip);
        for r in 0..self.height {
            for c in 0..self.width {
                if (r, c) == self.start {
                    out.push('S');
                } else {
                    let sym = self.cells[r * self.width + c];
                    if sym == self.alphabet.blank() {
                        out.push('.');
                    } else {
                        write!(out, "{}", self.alphabet.name(sym)).unwrap();
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn slip(&self) -> f64 {
        self.slip
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn start(&self) -> (usize, usize) {
        self.start
    }

    /// MDP state for a cell.
    pub fn state_at(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    fn step_cell(&self, row: usize, col: usize, mv: (isize, isize)) -> usize {
        let r = row as isize + mv.0;
        let c = col as isize + mv.1;
        if r < 0 || c < 0 || r as usize >= self.height || c as usize >= self.width {
            self.state_at(row, col)
        } else {
            self.state_at(r as usize, c as usize)
        }
    }

    /// Compiles to a labeled MDP with the four grid actions.
    pub fn compile(&self) -> Result<LabeledMdp> {
        let n = self.width * self.height;
        let mut transition = Vec::with_capacity(n * 4);
        for row in 0..self.height {
            for col in 0..self.width {
                for (a, &mv) in MOVES.iter().enumerate() {
                    let mut t_row = vec![0.0; n];
                    t_row[self.step_cell(row, col, mv)] += 1.0 - self.slip;
                    // Orthogonal slips: up/down slip sideways and vice versa.
                    let (o1, o2) = if a < 2 { (MOVES[2], MOVES[3]) } else { (MOVES[0], MOVES[1]) };
                    t_row[self.step_cell(row, col, o1)] += self.slip / 2.0;
                    t_row[self.step_cell(row, col, o2)] += self.slip / 2.0;
                    transition.push(t_row);
                }
            }
        }
        LabeledMdp::new(
            n,
            4,
            self.state_at(self.start.0, self.start.1),
            transition,
            self.cells.clone(),
            self.alphabet.clone(),
        )
    }
}

/// A benchmark task: the grid, its compiled MDP, and the ground-truth
/// machine demonstrations are sampled from.
#[derive(Debug, Clone)]
pub struct Env {
    pub name: String,
    pub grid: GridSpec,
    pub mdp: LabeledMdp,
    pub machine: RewardMachine,
}

pub const ENV_NAMES: [&str; 3] = ["recharge", "coffee", "multi_coffee"];

const RECHARGE_GRID: &str = include_str!("../grids/recharge.grid");
const COFFEE_GRID: &str = include_str!("../grids/coffee.grid");
const MULTI_COFFEE_GRID: &str = include_str!("../grids/multi_coffee.grid");

/// Builds a shipped benchmark environment by name.
pub fn make_env(name: &str) -> Result<Env> {
    let (text, machine) = match name {
        // A robot recharging across a lava field: the straight line to the
        // station crosses lava (l), which ends the task, so the expert
        // detours. Stepping in water (w) makes it wet, the towel (t) dries
        // it, and recharging (r) pays only while dry. Alphabet order:
        // _, l, w, t, r.
        "recharge" => {
            let alphabet = Alphabet::from_names(&["_", "l", "w", "t", "r"])?;
            let machine = RewardMachine::from_rows(
                alphabet,
                vec![0.0, 1.0],
                &[
                    vec![0, 2, 1, 0, 2], // dry
                    vec![1, 2, 1, 0, 2], // wet
                    vec![2, 2, 2, 2, 2], // done
                ],
                &[
                    vec![0.0, 0.0, 0.0, 0.0, 1.0],
                    vec![0.0; 5],
                    vec![0.0; 5],
                ],
            )?;
            (RECHARGE_GRID, machine)
        }
        // Fetch coffee (c) and deliver it to the office (o); lava (*) ends
        // the task from either phase. Alphabet order: _, *, c, o.
        "coffee" => {
            let alphabet = Alphabet::from_names(&["_", "*", "c", "o"])?;
            let machine = RewardMachine::from_rows(
                alphabet,
                vec![0.0, 1.0],
                &[
                    vec![0, 2, 1, 0], // empty-handed
                    vec![1, 2, 1, 2], // carrying
                    vec![2, 2, 2, 2], // done
                ],
                &[
                    vec![0.0; 4],
                    vec![0.0, 0.0, 0.0, 1.0],
                    vec![0.0; 4],
                ],
            )?;
            (COFFEE_GRID, machine)
        }
        // Same delivery task with two roasts: strong coffee (c) pays 2 on
        // delivery, weak coffee (k) pays 1. Alphabet order: _, *, k, c, o.
        "multi_coffee" => {
            let alphabet = Alphabet::from_names(&["_", "*", "k", "c", "o"])?;
            let machine = RewardMachine::from_rows(
                alphabet,
                vec![0.0, 1.0, 2.0],
                &[
                    vec![0, 3, 2, 1, 0], // empty-handed
                    vec![1, 3, 1, 1, 3], // carrying strong
                    vec![2, 3, 2, 2, 3], // carrying weak
                    vec![3, 3, 3, 3, 3], // done
                ],
                &[
                    vec![0.0; 5],
                    vec![0.0, 0.0, 0.0, 0.0, 2.0],
                    vec![0.0, 0.0, 0.0, 0.0, 1.0],
                    vec![0.0; 5],
                ],
            )?;
            (MULTI_COFFEE_GRID, machine)
        }
        other => return Err(Error::UnknownEnvironment { name: other.to_string() }),
    };
    let grid = GridSpec::parse(text)?;
    if grid.alphabet() != machine.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    let mdp = grid.compile()?;
    Ok(Env { name: name.to_string(), grid, mdp, machine })
}

/// Episode shape and solver settings shared by rollout helpers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutParams {
    pub episodes: usize,
    pub ep_len: usize,
    pub gamma: f64,
    pub tolerance: f64,
}

impl RolloutParams {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.ep_len == 0 {
            return Err(Error::InvalidConfig(
                "episodes and ep_len must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Mean undiscounted return and settings of one evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub expert_avg_return: f64,
    pub agent_avg_return: f64,
    pub episodes: usize,
    pub episode_length: usize,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        format!(
            "r_e={}\nr_a={}\nepisodes={}\nep_len={}\n",
            self.expert_avg_return, self.agent_avg_return, self.episodes, self.episode_length
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut fields = std::collections::HashMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::ReportFormat(format!("bad line {line:?}")))?;
            fields.insert(k.to_string(), v.to_string());
        }
        let get = |key: &str| {
            fields
                .get(key)
                .ok_or_else(|| Error::ReportFormat(format!("missing key {key:?}")))
        };
        Ok(Self {
            expert_avg_return: get("r_e")?
                .parse()
                .map_err(|_| Error::ReportFormat("bad r_e".into()))?,
            agent_avg_return: get("r_a")?
                .parse()
                .map_err(|_| Error::ReportFormat("bad r_a".into()))?,
            episodes: get("episodes")?
                .parse()
                .map_err(|_| Error::ReportFormat("bad episodes".into()))?,
            episode_length: get("ep_len")?
                .parse()
                .map_err(|_| Error::ReportFormat("bad ep_len".into()))?,
        })
    }
}

enum Policy<'a> {
    /// Sample from the Boltzmann distribution over the action values.
    Boltzmann { q: &'a QTable, alpha: f64 },
    /// Follow a fixed deterministic policy.
    Greedy(&'a [usize]),
}

fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Rolls out episodes of `behavior` against `m`, scoring true rewards with
/// `truth`. Each step draws one uniform for the action (Boltzmann only)
/// and one for the transition. Returns the raw episodes and the mean
/// undiscounted true return.
fn rollout(
    m: &LabeledMdp,
    behavior_rm: &RewardMachine,
    behavior: &Policy,
    truth: &RewardMachine,
    params: &RolloutParams,
    rng: &mut impl Rng,
) -> Result<(Vec<Vec<(usize, usize)>>, f64)> {
    params.validate()?;
    let ny = behavior_rm.n_states();
    let mut probs_cache: Vec<Option<Vec<f64>>> = match behavior {
        Policy::Boltzmann { q, .. } => vec![None; q.n_states()],
        Policy::Greedy(_) => Vec::new(),
    };
    let mut episodes = Vec::with_capacity(params.episodes);
    let mut total = 0.0;
    for _ in 0..params.episodes {
        let mut s = m.initial_state();
        let mut y_beh = INITIAL_STATE;
        let mut y_true = INITIAL_STATE;
        let mut steps = Vec::with_capacity(params.ep_len);
        for _ in 0..params.ep_len {
            let x = s * ny + y_beh;
            let a = match behavior {
                Policy::Boltzmann { q, alpha } => {
                    let probs = probs_cache[x]
                        .get_or_insert_with(|| boltzmann_distribution(q.row(x), *alpha));
                    sample_index(probs, rng.random())
                }
                Policy::Greedy(policy) => policy[x],
            };
            steps.push((s, a));
            let next = sample_index(m.transition_row(s, a), rng.random());
            let label = m.label(next);
            y_beh = behavior_rm.target(y_beh, label);
            total += truth.reward(y_true, label);
            y_true = truth.target(y_true, label);
            s = next;
        }
        episodes.push(steps);
    }
    Ok((episodes, total / params.episodes as f64))
}

/// Samples expert episodes: a Boltzmann-rational policy with rationality
/// `alpha` on the product of `m` with the true machine.
pub fn generate_demonstration(
    m: &LabeledMdp,
    truth: &RewardMachine,
    alpha: f64,
    params: &RolloutParams,
    rng: &mut impl Rng,
) -> Result<Demonstration> {
    let product = build_product(m, truth)?;
    let (_, q) = policy_iteration(&product, params.gamma, params.tolerance)?;
    let behavior = Policy::Boltzmann { q: &q, alpha };
    let (episodes, _) = rollout(m, truth, &behavior, truth, params, rng)?;
    Demonstration::from_state_actions(&episodes, m)
}

/// Mean true return of the demonstrating expert itself.
pub fn expert_baseline(
    m: &LabeledMdp,
    truth: &RewardMachine,
    alpha: f64,
    params: &RolloutParams,
    rng: &mut impl Rng,
) -> Result<f64> {
    let product = build_product(m, truth)?;
    let (_, q) = policy_iteration(&product, params.gamma, params.tolerance)?;
    let behavior = Policy::Boltzmann { q: &q, alpha };
    let (_, mean) = rollout(m, truth, &behavior, truth, params, rng)?;
    Ok(mean)
}

/// Mean true return of an agent that plans greedily against `inferred`,
/// tracking the inferred machine as its memory while the true machine
/// scores it.
pub fn evaluate_agent(
    m: &LabeledMdp,
    truth: &RewardMachine,
    inferred: &RewardMachine,
    params: &RolloutParams,
    rng: &mut impl Rng,
) -> Result<f64> {
    let product = build_product(m, inferred)?;
    let (policy, _) = policy_iteration(&product, params.gamma, params.tolerance)?;
    let behavior = Policy::Greedy(&policy);
    let (_, mean) = rollout(m, inferred, &behavior, truth, params, rng)?;
    Ok(mean)
}

/// Scores expert and agent under identical settings.
pub fn evaluate(
    m: &LabeledMdp,
    truth: &RewardMachine,
    inferred: &RewardMachine,
    alpha: f64,
    params: &RolloutParams,
    rng: &mut impl Rng,
) -> Result<EvalReport> {
    let expert = expert_baseline(m, truth, alpha, params, rng)?;
    let agent = evaluate_agent(m, truth, inferred, params, rng)?;
    Ok(EvalReport {
        expert_avg_return: expert,
        agent_avg_return: agent,
        episodes: params.episodes,
        episode_length: params.ep_len,
    })
}
