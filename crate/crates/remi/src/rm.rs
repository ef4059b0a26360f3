//! Mealy-style reward machines: finite-state transducers that read event
//! symbols and emit scalar rewards. A machine over alphabet Σ with states
//! 1..n is a pair of n x |Σ| tables: `t` gives the successor state and `r`
//! the emitted reward for each (state, symbol) pair. State 1 (index 0 here)
//! is always the initial state.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, Symbol};
use crate::error::{Error, Result};

/// Proposal resampling cap before the search gives up.
pub const RESAMPLE_LIMIT: usize = 100_000;

/// Parameters of the factored structural prior over machines.
///
/// `p_t` is the weight a transition entry puts on being a self-loop, `p_r`
/// the weight a reward entry puts on being zero; the remaining mass is
/// spread uniformly over the other choices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorParams {
    pub p_t: f64,
    pub p_r: f64,
}

impl PriorParams {
    pub fn new(p_t: f64, p_r: f64) -> Result<Self> {
        for (name, v) in [("p_t", p_t), ("p_r", p_r)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie strictly between 0 and 1, got {v}"
                )));
            }
        }
        Ok(Self { p_t, p_r })
    }
}

/// Outcome of the structural validity check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Validity {
    /// States not reachable from the initial state, ascending.
    pub unreachable: Vec<usize>,
    /// True if at least one reward entry is nonzero.
    pub nontrivial: bool,
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        self.unreachable.is_empty() && self.nontrivial
    }
}

/// A reward machine: transition table `t`, reward table `r`, and the reward
/// range Γ the entries of `r` index into.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardMachine {
    alphabet: Alphabet,
    rewards: Vec<f64>,
    zero: usize,
    n: usize,
    t: Vec<usize>,
    r: Vec<usize>,
}

/// Initial machine state.
pub const INITIAL_STATE: usize = 0;

pub(crate) fn check_rewards(rewards: &[f64]) -> Result<usize> {
    if rewards.len() < 2 {
        return Err(Error::InvalidRewardMachine(
            "reward range needs at least two values".into(),
        ));
    }
    for (i, v) in rewards.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::InvalidRewardMachine(format!(
                "reward value {v} is not finite"
            )));
        }
        if rewards[..i].contains(v) {
            return Err(Error::InvalidRewardMachine(format!(
                "duplicate reward value {v}"
            )));
        }
    }
    rewards
        .iter()
        .position(|&v| v == 0.0)
        .ok_or_else(|| Error::InvalidRewardMachine("reward range must contain 0".into()))
}

impl RewardMachine {
    /// Builds a machine from flat tables. `t` holds 0-based successor states
    /// and `r` holds indices into `rewards`, both row-major with one row per
    /// state and one column per symbol in alphabet order.
    pub fn from_tables(
        alphabet: Alphabet,
        rewards: Vec<f64>,
        n: usize,
        t: Vec<usize>,
        r: Vec<usize>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidRewardMachine("no states".into()));
        }
        let zero = check_rewards(&rewards)?;
        let nm = n * alphabet.len();
        if t.len() != nm || r.len() != nm {
            return Err(Error::InvalidRewardMachine(format!(
                "expected {nm} table entries, got t={} r={}",
                t.len(),
                r.len()
            )));
        }
        if let Some(&bad) = t.iter().find(|&&y| y >= n) {
            return Err(Error::InvalidRewardMachine(format!(
                "transition target {bad} out of range for {n} states"
            )));
        }
        if let Some(&bad) = r.iter().find(|&&k| k >= rewards.len()) {
            return Err(Error::InvalidRewardMachine(format!(
                "reward index {bad} out of range for {} values",
                rewards.len()
            )));
        }
        Ok(Self { alphabet, rewards, zero, n, t, r })
    }

    /// Builds a machine from per-state rows, with rewards given by value.
    pub fn from_rows(
        alphabet: Alphabet,
        rewards: Vec<f64>,
        t_rows: &[Vec<usize>],
        r_rows: &[Vec<f64>],
    ) -> Result<Self> {
        let n = t_rows.len();
        if r_rows.len() != n {
            return Err(Error::InvalidRewardMachine(format!(
                "{n} transition rows but {} reward rows",
                r_rows.len()
            )));
        }
        let m = alphabet.len();
        let mut t = Vec::with_capacity(n * m);
        let mut r = Vec::with_capacity(n * m);
        for (y, (trow, rrow)) in t_rows.iter().zip(r_rows).enumerate() {
            if trow.len() != m || rrow.len() != m {
                return Err(Error::InvalidRewardMachine(format!(
                    "state {y} rows must have {m} entries"
                )));
            }
            t.extend_from_slice(trow);
            for &v in rrow {
                let k = rewards.iter().position(|&w| w == v).ok_or_else(|| {
                    Error::InvalidRewardMachine(format!("reward {v} not in the reward range"))
                })?;
                r.push(k);
            }
        }
        Self::from_tables(alphabet, rewards, n, t, r)
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn n_symbols(&self) -> usize {
        self.alphabet.len()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// The reward range Γ.
    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn target(&self, y: usize, s: Symbol) -> usize {
        self.t[y * self.alphabet.len() + s]
    }

    pub fn reward(&self, y: usize, s: Symbol) -> f64 {
        self.rewards[self.r[y * self.alphabet.len() + s]]
    }

    /// One transducer step: successor state and emitted reward.
    pub fn step(&self, y: usize, s: Symbol) -> Result<(usize, f64)> {
        if y >= self.n {
            return Err(Error::BadState { state: y, n_states: self.n });
        }
        if s >= self.alphabet.len() {
            return Err(Error::UnknownSymbol { symbol: s, alphabet_len: self.alphabet.len() });
        }
        Ok((self.target(y, s), self.reward(y, s)))
    }

    /// Folds [`step`](Self::step) over a symbol sequence from the initial
    /// state; returns the final state and the total emitted reward.
    pub fn run_trace(&self, trace: &[Symbol]) -> Result<(usize, f64)> {
        let mut y = INITIAL_STATE;
        let mut total = 0.0;
        for &s in trace {
            let (next, rew) = self.step(y, s)?;
            y = next;
            total += rew;
        }
        Ok((y, total))
    }

    /// Breadth-first reachability from the initial state, visiting symbols
    /// in alphabet order. Returns visit order and the old-to-new relabeling
    /// (usize::MAX for unreached states).
    fn bfs_order(&self) -> (Vec<usize>, Vec<usize>) {
        let m = self.alphabet.len();
        let mut map = vec![usize::MAX; self.n];
        let mut order = Vec::with_capacity(self.n);
        map[INITIAL_STATE] = 0;
        order.push(INITIAL_STATE);
        let mut head = 0;
        while head < order.len() {
            let y = order[head];
            head += 1;
            for s in 0..m {
                let tgt = self.target(y, s);
                if map[tgt] == usize::MAX {
                    map[tgt] = order.len();
                    order.push(tgt);
                }
            }
        }
        (order, map)
    }

    /// Checks reachability of every state and non-triviality of the reward
    /// table.
    pub fn check_valid(&self) -> Validity {
        let (_, map) = self.bfs_order();
        let unreachable = (0..self.n).filter(|&y| map[y] == usize::MAX).collect();
        let nontrivial = self.r.iter().any(|&k| k != self.zero);
        Validity { unreachable, nontrivial }
    }

    pub fn is_valid(&self) -> bool {
        self.check_valid().is_valid()
    }

    /// Relabels states by breadth-first discovery order. Two valid machines
    /// are isomorphic exactly when their canonical forms are equal.
    /// Requires a valid machine.
    pub fn canonical_form(&self) -> RewardMachine {
        let (order, map) = self.bfs_order();
        assert_eq!(order.len(), self.n, "canonical form requires a valid machine");
        let m = self.alphabet.len();
        let mut t = vec![0; self.n * m];
        let mut r = vec![0; self.n * m];
        for (new_y, &old_y) in order.iter().enumerate() {
            for s in 0..m {
                t[new_y * m + s] = map[self.t[old_y * m + s]];
                r[new_y * m + s] = self.r[old_y * m + s];
            }
        }
        RewardMachine {
            alphabet: self.alphabet.clone(),
            rewards: self.rewards.clone(),
            zero: self.zero,
            n: self.n,
            t,
            r,
        }
    }

    /// Deterministic text encoding of the canonical form. Reward entries are
    /// printed by value, so the ordering of the reward range does not affect
    /// the key.
    pub fn canonical_key(&self) -> String {
        use std::fmt::Write;
        let c = self.canonical_form();
        let m = c.alphabet.len();
        let mut key = format!("n={};sigma={}", c.n, c.alphabet.names().join(","));
        for y in 0..c.n {
            write!(key, ";{y}:").unwrap();
            for s in 0..m {
                if s > 0 {
                    key.push(' ');
                }
                write!(key, "{}>{:?}", c.t[y * m + s], c.rewards[c.r[y * m + s]]).unwrap();
            }
        }
        key
    }

    /// True if the two machines are identical up to a relabeling of their
    /// non-initial states. Both must be valid.
    pub fn is_isomorphic(&self, other: &RewardMachine) -> bool {
        self.n == other.n
            && self.alphabet == other.alphabet
            && self.canonical_key() == other.canonical_key()
    }

    /// Log of the unnormalized structural prior. Reward entries contribute
    /// `p_r` when zero and `(1-p_r)/(G-1)` otherwise; transition entries
    /// contribute `p_t` on self-loops and `(1-p_t)/(n-1)` otherwise. The
    /// transition factor is dropped for single-state machines, where
    /// self-loops are the only option.
    pub fn log_prior_unnormalized(&self, prior: &PriorParams) -> f64 {
        let m = self.alphabet.len();
        let nm = (self.n * m) as f64;
        let g = self.rewards.len() as f64;
        let zeros = self.r.iter().filter(|&&k| k == self.zero).count() as f64;
        let mut lp = zeros * prior.p_r.ln() + (nm - zeros) * ((1.0 - prior.p_r) / (g - 1.0)).ln();
        if self.n > 1 {
            let loops = (0..self.n)
                .flat_map(|y| (0..m).map(move |s| (y, s)))
                .filter(|&(y, s)| self.t[y * m + s] == y)
                .count() as f64;
            lp += loops * prior.p_t.ln()
                + (nm - loops) * ((1.0 - prior.p_t) / (self.n as f64 - 1.0)).ln();
        }
        lp
    }

    /// Samples table entries uniformly until the machine comes out valid.
    pub fn random_valid(
        n: usize,
        alphabet: &Alphabet,
        rewards: &[f64],
        rng: &mut impl Rng,
    ) -> Result<RewardMachine> {
        let zero = check_rewards(rewards)?;
        if n == 0 {
            return Err(Error::InvalidRewardMachine("no states".into()));
        }
        let nm = n * alphabet.len();
        for _ in 0..RESAMPLE_LIMIT {
            let t: Vec<usize> = (0..nm).map(|_| rng.random_range(0..n)).collect();
            let r: Vec<usize> = (0..nm).map(|_| rng.random_range(0..rewards.len())).collect();
            let cand = RewardMachine {
                alphabet: alphabet.clone(),
                rewards: rewards.to_vec(),
                zero,
                n,
                t,
                r,
            };
            if cand.is_valid() {
                return Ok(cand);
            }
        }
        Err(Error::ResampleLimitExceeded { attempts: RESAMPLE_LIMIT })
    }

    /// One raw perturbation pass: every mutable table entry is resampled
    /// with probability `p` to a fresh value, and if nothing changed a
    /// single uniformly chosen entry is forced to change. Transition entries
    /// are immutable when n = 1. Does not check validity.
    fn perturb_once(&self, p: f64, rng: &mut impl Rng) -> RewardMachine {
        let m = self.alphabet.len();
        let nm = self.n * m;
        let mut t = self.t.clone();
        let mut r = self.r.clone();
        let g = self.rewards.len();
        let mut changed = 0usize;
        if self.n > 1 {
            for e in 0..nm {
                if rng.random::<f64>() < p {
                    t[e] = resample_excluding(t[e], self.n, rng);
                    changed += 1;
                }
            }
        }
        for e in 0..nm {
            if rng.random::<f64>() < p {
                r[e] = resample_excluding(r[e], g, rng);
                changed += 1;
            }
        }
        if changed == 0 {
            if self.n > 1 {
                let e = rng.random_range(0..2 * nm);
                if e < nm {
                    t[e] = resample_excluding(t[e], self.n, rng);
                } else {
                    r[e - nm] = resample_excluding(r[e - nm], g, rng);
                }
            } else {
                let e = rng.random_range(0..nm);
                r[e] = resample_excluding(r[e], g, rng);
            }
        }
        RewardMachine {
            alphabet: self.alphabet.clone(),
            rewards: self.rewards.clone(),
            zero: self.zero,
            n: self.n,
            t,
            r,
        }
    }

    /// Proposes a valid neighbor by redrawing whole perturbations until one
    /// passes the validity check.
    pub fn propose_neighbor(&self, p: f64, rng: &mut impl Rng) -> Result<RewardMachine> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "perturbance must lie in (0, 1], got {p}"
            )));
        }
        for _ in 0..RESAMPLE_LIMIT {
            let cand = self.perturb_once(p, rng);
            if cand.is_valid() {
                return Ok(cand);
            }
        }
        Err(Error::ResampleLimitExceeded { attempts: RESAMPLE_LIMIT })
    }

    /// Serializes to the JSON file format: 1-based transition targets,
    /// rewards by value.
    pub fn to_json(&self) -> String {
        let m = self.alphabet.len();
        let file = RmFile {
            n: self.n,
            alphabet: self.alphabet.names().to_vec(),
            rewards: self.rewards.clone(),
            t: (0..self.n)
                .map(|y| (0..m).map(|s| self.t[y * m + s] + 1).collect())
                .collect(),
            r: (0..self.n)
                .map(|y| (0..m).map(|s| self.rewards[self.r[y * m + s]]).collect())
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&file).expect("serializable");
        out.push('\n');
        out
    }

    /// Parses the JSON file format produced by [`to_json`](Self::to_json).
    pub fn from_json(text: &str) -> Result<RewardMachine> {
        let file: RmFile =
            serde_json::from_str(text).map_err(|e| Error::RmFormat(e.to_string()))?;
        let alphabet = Alphabet::new(file.alphabet)?;
        let m = alphabet.len();
        if file.t.len() != file.n || file.r.len() != file.n {
            return Err(Error::RmFormat(format!(
                "expected {} rows in t and r, got {} and {}",
                file.n,
                file.t.len(),
                file.r.len()
            )));
        }
        let mut t = Vec::with_capacity(file.n * m);
        for (y, row) in file.t.iter().enumerate() {
            if row.len() != m {
                return Err(Error::RmFormat(format!("t row {y} must have {m} entries")));
            }
            for &tgt in row {
                if tgt < 1 || tgt > file.n {
                    return Err(Error::RmFormat(format!(
                        "transition target {tgt} out of range 1..={}",
                        file.n
                    )));
                }
                t.push(tgt - 1);
            }
        }
        let mut r = Vec::with_capacity(file.n * m);
        for (y, row) in file.r.iter().enumerate() {
            if row.len() != m {
                return Err(Error::RmFormat(format!("r row {y} must have {m} entries")));
            }
            for &v in row {
                let k = file.rewards.iter().position(|&w| w == v).ok_or_else(|| {
                    Error::RmFormat(format!("reward {v} not in the declared range"))
                })?;
                r.push(k);
            }
        }
        RewardMachine::from_tables(alphabet, file.rewards, file.n, t, r)
    }
}

/// Uniform draw from 0..k excluding `current`. Requires k >= 2.
fn resample_excluding(current: usize, k: usize, rng: &mut impl Rng) -> usize {
    debug_assert!(k >= 2 && current < k);
    let v = rng.random_range(0..k - 1);
    if v >= current {
        v + 1
    } else {
        v
    }
}

#[derive(Serialize, Deserialize)]
struct RmFile {
    n: usize,
    alphabet: Vec<String>,
    rewards: Vec<f64>,
    t: Vec<Vec<usize>>,
    r: Vec<Vec<f64>>,
}
