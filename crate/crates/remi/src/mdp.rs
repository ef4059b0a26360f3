//! Labeled MDPs, their product with a reward machine, and recorded
//! demonstrations.
//!
//! A labeled MDP carries no reward of its own; each state instead emits a
//! symbol through its labeling function. Rewards only appear once the MDP is
//! crossed with a reward machine that reads those symbols. A label is
//! observed when a transition enters its state, self-loops included; the
//! initial state's own label is never consumed.

use crate::alphabet::{Alphabet, Symbol};
use crate::error::{Error, Result};
use crate::rm::{RewardMachine, INITIAL_STATE};

/// Tolerance for transition rows summing to one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// A reward-free MDP whose states emit symbols from a shared alphabet.
///
/// Construction only checks shapes, so that malformed models can still be
/// built and inspected; [`validate`](Self::validate) reports semantic
/// violations.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMdp {
    n_states: usize,
    n_actions: usize,
    initial: usize,
    transition: Vec<Vec<f64>>,
    labels: Vec<usize>,
    alphabet: Alphabet,
}

/// A single semantic defect found by [`LabeledMdp::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Transition row does not sum to one within [`ROW_SUM_TOLERANCE`].
    RowSum { state: usize, action: usize, sum: f64 },
    /// Negative or non-finite transition probability.
    BadProbability { state: usize, action: usize, next: usize, value: f64 },
    /// State label outside the alphabet.
    UnknownLabel { state: usize, label: usize },
    /// Initial state index out of range.
    BadInitial { state: usize },
}

/// Everything wrong with a labeled MDP, in deterministic order.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl LabeledMdp {
    /// `transition` has one row per (state, action) pair, laid out as
    /// `state * n_actions + action`, each row a distribution over next
    /// states. `labels` maps each state to a symbol index.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        initial: usize,
        transition: Vec<Vec<f64>>,
        labels: Vec<usize>,
        alphabet: Alphabet,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidMdp("need at least one state and one action".into()));
        }
        if transition.len() != n_states * n_actions {
            return Err(Error::InvalidMdp(format!(
                "expected {} transition rows, got {}",
                n_states * n_actions,
                transition.len()
            )));
        }
        if let Some((i, row)) = transition.iter().enumerate().find(|(_, r)| r.len() != n_states) {
            return Err(Error::InvalidMdp(format!(
                "transition row {i} has {} entries, expected {n_states}",
                row.len()
            )));
        }
        if labels.len() != n_states {
            return Err(Error::InvalidMdp(format!(
                "expected {n_states} labels, got {}",
                labels.len()
            )));
        }
        Ok(Self { n_states, n_actions, initial, transition, labels, alphabet })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn initial_state(&self) -> usize {
        self.initial
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Symbol emitted by state `s`.
    pub fn label(&self, s: usize) -> Symbol {
        self.labels[s]
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        &self.transition[s * self.n_actions + a]
    }

    pub fn transition(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition_row(s, a)[next]
    }

    /// Checks row-stochasticity, probability signs, label range, and the
    /// initial state. Violations come out ordered by state, then action,
    /// then next state.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.initial >= self.n_states {
            violations.push(Violation::BadInitial { state: self.initial });
        }
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let row = self.transition_row(s, a);
                for (next, &p) in row.iter().enumerate() {
                    if !(p >= 0.0 && p.is_finite()) {
                        violations.push(Violation::BadProbability { state: s, action: a, next, value: p });
                    }
                }
                let sum: f64 = row.iter().sum();
                if !((sum - 1.0).abs() <= ROW_SUM_TOLERANCE) {
                    violations.push(Violation::RowSum { state: s, action: a, sum });
                }
            }
        }
        for (s, &l) in self.labels.iter().enumerate() {
            if l >= self.alphabet.len() {
                violations.push(Violation::UnknownLabel { state: s, label: l });
            }
        }
        ValidationReport { violations }
    }
}

/// Joint state index for environment state `s` and machine state `y`.
pub fn joint_index(s: usize, y: usize, n_machine: usize) -> usize {
    s * n_machine + y
}

/// The synchronous product of a labeled MDP and a reward machine: an
/// ordinary MDP over joint states (s, y) whose reward for landing in s' is
/// the machine's output for the symbol s' emits.
#[derive(Debug, Clone)]
pub struct ProductMdp {
    n_env: usize,
    n_machine: usize,
    n_actions: usize,
    initial: usize,
    transition: Vec<Vec<f64>>,
    /// reward[y * n_env + s'] = machine output in state y on reading L(s').
    reward: Vec<f64>,
}

impl ProductMdp {
    pub fn n_states(&self) -> usize {
        self.n_env * self.n_machine
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_env_states(&self) -> usize {
        self.n_env
    }

    pub fn n_machine_states(&self) -> usize {
        self.n_machine
    }

    pub fn initial_state(&self) -> usize {
        self.initial
    }

    pub fn joint_index(&self, s: usize, y: usize) -> usize {
        joint_index(s, y, self.n_machine)
    }

    /// Splits a joint index back into (environment state, machine state).
    pub fn decompose(&self, x: usize) -> (usize, usize) {
        (x / self.n_machine, x % self.n_machine)
    }

    pub fn transition_row(&self, x: usize, a: usize) -> &[f64] {
        &self.transition[x * self.n_actions + a]
    }

    pub fn reward(&self, x: usize, _a: usize, next: usize) -> f64 {
        let (_, y) = (x / self.n_machine, x % self.n_machine);
        let (s_next, _) = (next / self.n_machine, next % self.n_machine);
        self.reward[y * self.n_env + s_next]
    }
}

/// Crosses a labeled MDP with a reward machine. The MDP must validate
/// cleanly and both must share one alphabet.
pub fn build_product(m: &LabeledMdp, rm: &RewardMachine) -> Result<ProductMdp> {
    if m.alphabet() != rm.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    let report = m.validate();
    if !report.is_ok() {
        return Err(Error::InvalidMdp(format!(
            "cannot take a product with an invalid MDP: {:?}",
            report.violations[0]
        )));
    }
    let ns = m.n_states();
    let ny = rm.n_states();
    let na = m.n_actions();
    let nx = ns * ny;
    let mut transition = vec![Vec::new(); nx * na];
    for s in 0..ns {
        for y in 0..ny {
            let x = joint_index(s, y, ny);
            for a in 0..na {
                let mut row = vec![0.0; nx];
                for (s_next, &p) in m.transition_row(s, a).iter().enumerate() {
                    if p > 0.0 {
                        let y_next = rm.target(y, m.label(s_next));
                        row[joint_index(s_next, y_next, ny)] += p;
                    }
                }
                transition[x * na + a] = row;
            }
        }
    }
    let mut reward = vec![0.0; ny * ns];
    for y in 0..ny {
        for s_next in 0..ns {
            reward[y * ns + s_next] = rm.reward(y, m.label(s_next));
        }
    }
    Ok(ProductMdp {
        n_env: ns,
        n_machine: ny,
        n_actions: na,
        initial: joint_index(m.initial_state(), INITIAL_STATE, ny),
        transition,
        reward,
    })
}

/// One recorded step: the state occupied, the action taken there, and the
/// symbol that state emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub label: Symbol,
}

/// One episode, starting from the MDP's initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Episode {
    pub steps: Vec<Step>,
}

/// A state-history-action triple: the history is the label sequence
/// consumed so far in the episode, which excludes the first state's label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub state: usize,
    pub history: Vec<Symbol>,
    pub action: usize,
}

/// A set of expert episodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Demonstration {
    pub episodes: Vec<Episode>,
}

impl Demonstration {
    /// Attaches labels from `m` to raw (state, action) episodes.
    pub fn from_state_actions(episodes: &[Vec<(usize, usize)>], m: &LabeledMdp) -> Result<Self> {
        let mut out = Vec::with_capacity(episodes.len());
        for (k, ep) in episodes.iter().enumerate() {
            if ep.is_empty() {
                return Err(Error::DemoFormat(format!("episode {k} has no steps")));
            }
            let mut steps = Vec::with_capacity(ep.len());
            for &(state, action) in ep {
                if state >= m.n_states() {
                    return Err(Error::DemoFormat(format!(
                        "state {state} out of range in episode {k}"
                    )));
                }
                if action >= m.n_actions() {
                    return Err(Error::DemoFormat(format!(
                        "action {action} out of range in episode {k}"
                    )));
                }
                steps.push(Step { state, action, label: m.label(state) });
            }
            out.push(Episode { steps });
        }
        Ok(Self { episodes: out })
    }

    /// Parses the demonstration text format: an `episode <k>` header per
    /// episode followed by one `s=<state> a=<action>` line per step.
    pub fn parse(text: &str, m: &LabeledMdp) -> Result<Self> {
        let mut episodes: Vec<Vec<(usize, usize)>> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("episode ") {
                let k: usize = rest.trim().parse().map_err(|_| {
                    Error::DemoFormat(format!("line {}: bad episode header {line:?}", lineno + 1))
                })?;
                if k != episodes.len() {
                    return Err(Error::DemoFormat(format!(
                        "line {}: expected episode {}, found {k}",
                        lineno + 1,
                        episodes.len()
                    )));
                }
                episodes.push(Vec::new());
            } else if let Some((s_part, a_part)) = line.split_once(' ') {
                let parse_field = |part: &str, key: &str| -> Result<usize> {
                    part.strip_prefix(key)
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| {
                            Error::DemoFormat(format!("line {}: bad step line {line:?}", lineno + 1))
                        })
                };
                let s = parse_field(s_part.trim(), "s=")?;
                let a = parse_field(a_part.trim(), "a=")?;
                let ep = episodes.last_mut().ok_or_else(|| {
                    Error::DemoFormat(format!("line {}: step before any episode header", lineno + 1))
                })?;
                ep.push((s, a));
            } else {
                return Err(Error::DemoFormat(format!(
                    "line {}: unrecognized line {line:?}",
                    lineno + 1
                )));
            }
        }
        Self::from_state_actions(&episodes, m)
    }

    /// Serializes to the text format accepted by [`parse`](Self::parse).
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        for (k, ep) in self.episodes.iter().enumerate() {
            writeln!(out, "episode {k}").unwrap();
            for step in &ep.steps {
                writeln!(out, "s={} a={}", step.state, step.action).unwrap();
            }
        }
        out
    }

    /// Total number of state-history-action triples.
    pub fn n_triples(&self) -> usize {
        self.episodes.iter().map(|e| e.steps.len()).sum()
    }

    /// Materializes every triple with its explicit label history.
    pub fn triples(&self) -> Vec<Triple> {
        let mut out = Vec::with_capacity(self.n_triples());
        for ep in &self.episodes {
            let mut history = Vec::new();
            for (i, step) in ep.steps.iter().enumerate() {
                if i > 0 {
                    history.push(step.label);
                }
                out.push(Triple { state: step.state, history: history.clone(), action: step.action });
            }
        }
        out
    }

    /// Replaces each history by the machine state it drives `rm` to,
    /// yielding (joint state, action) pairs in the product with `rm`. The
    /// machine restarts at every episode boundary and never consumes the
    /// first state's label.
    pub fn project(&self, rm: &RewardMachine) -> Result<Vec<(usize, usize)>> {
        let ny = rm.n_states();
        let mut out = Vec::with_capacity(self.n_triples());
        for ep in &self.episodes {
            let mut y = INITIAL_STATE;
            for (i, step) in ep.steps.iter().enumerate() {
                if i > 0 {
                    let (next, _) = rm.step(y, step.label)?;
                    y = next;
                }
                out.push((joint_index(step.state, y, ny), step.action));
            }
        }
        Ok(out)
    }
}
