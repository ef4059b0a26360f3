//! Exact discounted MDP solving by policy iteration, plus the Boltzmann
//! action distribution used to model noisily rational experts.

use crate::error::{Error, Result};
use crate::mdp::ProductMdp;

/// Hard cap on value sweeps; hitting it means the discount or tolerance is
/// numerically hopeless.
const MAX_SWEEPS: usize = 10_000_000;

/// Minimal interface the solver needs: a finite MDP with dense transition
/// rows and a reward on each (state, action, next state) triple.
pub trait Mdp {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn transition_row(&self, s: usize, a: usize) -> &[f64];
    fn reward(&self, s: usize, a: usize, next: usize) -> f64;
}

impl Mdp for ProductMdp {
    fn n_states(&self) -> usize {
        self.n_states()
    }

    fn n_actions(&self) -> usize {
        self.n_actions()
    }

    fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        self.transition_row(s, a)
    }

    fn reward(&self, s: usize, a: usize, next: usize) -> f64 {
        self.reward(s, a, next)
    }
}

/// A dense tabular MDP, mostly useful for small models and cross-checks.
#[derive(Debug, Clone)]
pub struct DenseMdp {
    n_states: usize,
    n_actions: usize,
    /// Row `s * n_actions + a`: distribution over next states.
    transition: Vec<Vec<f64>>,
    /// Row `s * n_actions + a`: reward per next state.
    rewards: Vec<Vec<f64>>,
}

impl DenseMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<Vec<f64>>,
        rewards: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidMdp("need at least one state and one action".into()));
        }
        let rows = n_states * n_actions;
        if transition.len() != rows || rewards.len() != rows {
            return Err(Error::InvalidMdp(format!(
                "expected {rows} transition and reward rows, got {} and {}",
                transition.len(),
                rewards.len()
            )));
        }
        for (i, row) in transition.iter().chain(&rewards).enumerate() {
            if row.len() != n_states {
                return Err(Error::InvalidMdp(format!(
                    "row {} has {} entries, expected {n_states}",
                    i % rows,
                    row.len()
                )));
            }
        }
        Ok(Self { n_states, n_actions, transition, rewards })
    }
}

impl Mdp for DenseMdp {
    fn n_states(&self) -> usize {
        self.n_states
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        &self.transition[s * self.n_actions + a]
    }

    fn reward(&self, s: usize, a: usize, next: usize) -> f64 {
        self.rewards[s * self.n_actions + a][next]
    }
}

/// Optimal action values for every (state, action) pair, together with the
/// discount and tolerance they were solved under.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    q: Vec<f64>,
    pub discount: f64,
    pub tolerance: f64,
}

impl QTable {
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn value(&self, s: usize, a: usize) -> f64 {
        self.q[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.q[s * self.n_actions..(s + 1) * self.n_actions]
    }

    /// Greedy action, breaking ties toward the lowest index.
    pub fn greedy(&self, s: usize) -> usize {
        let row = self.row(s);
        let mut best = 0;
        for (a, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = a;
            }
        }
        best
    }
}

/// Sparse compiled form: per (state, action), the arcs with positive
/// probability as (next, probability, reward).
struct Arcs {
    offsets: Vec<usize>,
    arcs: Vec<(usize, f64, f64)>,
}

impl Arcs {
    fn compile(mdp: &impl Mdp) -> Result<Self> {
        let (ns, na) = (mdp.n_states(), mdp.n_actions());
        if ns == 0 || na == 0 {
            return Err(Error::InvalidMdp("need at least one state and one action".into()));
        }
        let mut offsets = Vec::with_capacity(ns * na + 1);
        let mut arcs = Vec::new();
        offsets.push(0);
        for s in 0..ns {
            for a in 0..na {
                for (next, &p) in mdp.transition_row(s, a).iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    let r = mdp.reward(s, a, next);
                    if !p.is_finite() || !r.is_finite() {
                        return Err(Error::NonFiniteValue(format!(
                            "transition ({s}, {a}) -> {next}: p={p}, r={r}"
                        )));
                    }
                    arcs.push((next, p, r));
                }
                offsets.push(arcs.len());
            }
        }
        Ok(Self { offsets, arcs })
    }

    fn row(&self, s: usize, a: usize, na: usize) -> &[(usize, f64, f64)] {
        let i = s * na + a;
        &self.arcs[self.offsets[i]..self.offsets[i + 1]]
    }
}

fn backup(arcs: &[(usize, f64, f64)], discount: f64, v: &[f64]) -> f64 {
    arcs.iter().map(|&(next, p, r)| p * (r + discount * v[next])).sum()
}

/// Solves for the optimal policy and action values.
///
/// Runs policy iteration (in-place evaluation sweeps, greedy improvement
/// with lowest-index tie-breaking), then polishes with full value-iteration
/// sweeps until successive iterates change by at most `tolerance`. The
/// returned table's Bellman residual is bounded by `discount^2 * tolerance`.
pub fn policy_iteration(
    mdp: &impl Mdp,
    discount: f64,
    tolerance: f64,
) -> Result<(Vec<usize>, QTable)> {
    if !(discount > 0.0 && discount < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "discount must lie strictly between 0 and 1, got {discount}"
        )));
    }
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let arcs = Arcs::compile(mdp)?;
    let mut v = vec![0.0; ns];
    let mut policy = vec![0; ns];
    let mut sweeps = 0usize;

    for _ in 0..1_000 {
        // Evaluate the current policy in place until it settles.
        loop {
            let mut delta = 0.0f64;
            for s in 0..ns {
                let new = backup(arcs.row(s, policy[s], na), discount, &v);
                delta = delta.max((new - v[s]).abs());
                v[s] = new;
            }
            sweeps += 1;
            if delta <= tolerance {
                break;
            }
            if sweeps > MAX_SWEEPS {
                return Err(Error::SolverStalled { sweeps });
            }
        }
        // Greedy improvement; stop once the policy is stable.
        let mut stable = true;
        for s in 0..ns {
            let mut best = 0;
            let mut best_q = backup(arcs.row(s, 0, na), discount, &v);
            for a in 1..na {
                let q = backup(arcs.row(s, a, na), discount, &v);
                if q > best_q {
                    best_q = q;
                    best = a;
                }
            }
            if best != policy[s] {
                policy[s] = best;
                stable = false;
            }
        }
        if stable {
            break;
        }
    }

    // Value-iteration polish: full Bellman sweeps into a fresh buffer so the
    // final iterate is exactly one application of the optimality operator.
    let mut v_next = vec![0.0; ns];
    loop {
        let mut delta = 0.0f64;
        for s in 0..ns {
            let mut best = backup(arcs.row(s, 0, na), discount, &v);
            for a in 1..na {
                best = best.max(backup(arcs.row(s, a, na), discount, &v));
            }
            delta = delta.max((best - v[s]).abs());
            v_next[s] = best;
        }
        std::mem::swap(&mut v, &mut v_next);
        sweeps += 1;
        if delta <= tolerance {
            break;
        }
        if sweeps > MAX_SWEEPS {
            return Err(Error::SolverStalled { sweeps });
        }
    }

    let mut q = vec![0.0; ns * na];
    for s in 0..ns {
        for a in 0..na {
            q[s * na + a] = backup(arcs.row(s, a, na), discount, &v);
        }
    }
    if let Some(bad) = q.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFiniteValue(format!("action value {bad}")));
    }
    let table = QTable { n_states: ns, n_actions: na, q, discount, tolerance };
    let policy = (0..ns).map(|s| table.greedy(s)).collect();
    Ok((policy, table))
}

/// Largest absolute one-step Bellman error of `q` on `mdp`.
pub fn bellman_residual(mdp: &impl Mdp, q: &QTable, discount: f64) -> f64 {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let v: Vec<f64> = (0..ns).map(|s| {
        q.row(s).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }).collect();
    let mut worst = 0.0f64;
    for s in 0..ns {
        for a in 0..na {
            let mut backup = 0.0;
            for (next, &p) in mdp.transition_row(s, a).iter().enumerate() {
                if p > 0.0 {
                    backup += p * (mdp.reward(s, a, next) + discount * v[next]);
                }
            }
            worst = worst.max((q.value(s, a) - backup).abs());
        }
    }
    worst
}

/// Numerically stable log of `sum(exp(x))` over the inputs.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Softmax of `alpha * q_row`, computed in log space so large `alpha`
/// cannot overflow. `alpha` of zero gives the uniform distribution.
pub fn boltzmann_distribution(q_row: &[f64], alpha: f64) -> Vec<f64> {
    let scaled: Vec<f64> = q_row.iter().map(|&q| alpha * q).collect();
    let m = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scaled.iter().map(|&w| (w - m).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Straight Q-value iteration, kept independent of the solver under
    /// test.
    fn value_iteration_oracle(mdp: &impl Mdp, discount: f64) -> Vec<f64> {
        let (ns, na) = (mdp.n_states(), mdp.n_actions());
        let mut q = vec![0.0; ns * na];
        loop {
            let v: Vec<f64> = (0..ns)
                .map(|s| {
                    q[s * na..(s + 1) * na]
                        .iter()
                        .cloned()
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            let mut next = vec![0.0; ns * na];
            let mut delta = 0.0f64;
            for s in 0..ns {
                for a in 0..na {
                    let mut total = 0.0;
                    for (nx, &p) in mdp.transition_row(s, a).iter().enumerate() {
                        total += p * (mdp.reward(s, a, nx) + discount * v[nx]);
                    }
                    next[s * na + a] = total;
                    delta = delta.max((total - q[s * na + a]).abs());
                }
            }
            q = next;
            if delta < 1e-12 {
                return q;
            }
        }
    }

    fn random_mdp(rng: &mut ChaCha8Rng) -> DenseMdp {
        let ns = rng.random_range(2..=6);
        let na = rng.random_range(1..=3);
        let mut transition = Vec::new();
        let mut rewards = Vec::new();
        for _ in 0..ns * na {
            let mut row: Vec<f64> = (0..ns).map(|_| rng.random::<f64>() + 1e-3).collect();
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
            transition.push(row);
            rewards.push((0..ns).map(|_| rng.random_range(-1.0..1.0)).collect());
        }
        DenseMdp::new(ns, na, transition, rewards).unwrap()
    }

    /// One state, two actions, both self-loops: a0 pays 0, a1 pays 1.
    fn two_lever() -> DenseMdp {
        DenseMdp::new(
            1,
            2,
            vec![vec![1.0], vec![1.0]],
            vec![vec![0.0], vec![1.0]],
        )
        .unwrap()
    }

    #[test]
    fn geometric_series_comes_out_exact() {
        // Optimal play earns 1 forever: Q(a1) = 1/(1-0.9) = 10, and the
        // inferior lever still rides the optimal continuation: Q(a0) = 9.
        let (policy, q) = policy_iteration(&two_lever(), 0.9, 1e-12).unwrap();
        assert_eq!(policy, vec![1]);
        assert!((q.value(0, 1) - 10.0).abs() < 1e-9);
        assert!((q.value(0, 0) - 9.0).abs() < 1e-9);
        assert_eq!(q.greedy(0), 1);
    }

    #[test]
    fn ties_break_toward_the_lowest_action_index() {
        let mdp = DenseMdp::new(
            1,
            3,
            vec![vec![1.0], vec![1.0], vec![1.0]],
            vec![vec![0.5], vec![0.5], vec![0.5]],
        )
        .unwrap();
        let (policy, q) = policy_iteration(&mdp, 0.9, 1e-10).unwrap();
        assert_eq!(policy, vec![0]);
        assert_eq!(q.greedy(0), 0);
    }

    #[test]
    fn matches_value_iteration_on_random_mdps() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..25 {
            let mdp = random_mdp(&mut rng);
            let (_, q) = policy_iteration(&mdp, 0.95, 1e-9).unwrap();
            let oracle = value_iteration_oracle(&mdp, 0.95);
            for s in 0..mdp.n_states() {
                for a in 0..mdp.n_actions() {
                    let diff = (q.value(s, a) - oracle[s * mdp.n_actions() + a]).abs();
                    assert!(diff < 1e-6, "diverged from oracle by {diff}");
                }
            }
            assert!(bellman_residual(&mdp, &q, 0.95) <= 1e-9);
        }
    }

    #[test]
    fn shifting_q_by_a_constant_shifts_the_residual() {
        // For Q* + c the residual is exactly (1 - discount) * |c|.
        let (_, mut q) = policy_iteration(&two_lever(), 0.9, 1e-12).unwrap();
        for x in &mut q.q {
            *x += 1.0;
        }
        let res = bellman_residual(&two_lever(), &q, 0.9);
        assert!((res - 0.1).abs() < 1e-9, "residual {res}");
    }

    #[test]
    fn solving_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mdp = random_mdp(&mut rng);
        let (p1, q1) = policy_iteration(&mdp, 0.95, 1e-9).unwrap();
        let (p2, q2) = policy_iteration(&mdp, 0.95, 1e-9).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(q1.q, q2.q);
    }

    #[test]
    fn rejects_bad_parameters_and_non_finite_inputs() {
        let mdp = two_lever();
        assert!(matches!(policy_iteration(&mdp, 1.0, 1e-9), Err(Error::InvalidConfig(_))));
        assert!(matches!(policy_iteration(&mdp, 0.0, 1e-9), Err(Error::InvalidConfig(_))));
        assert!(matches!(policy_iteration(&mdp, 0.9, 0.0), Err(Error::InvalidConfig(_))));

        let bad = DenseMdp::new(
            1,
            1,
            vec![vec![1.0]],
            vec![vec![f64::NAN]],
        )
        .unwrap();
        assert!(matches!(policy_iteration(&bad, 0.9, 1e-9), Err(Error::NonFiniteValue(_))));
    }

    #[test]
    fn boltzmann_matches_hand_values_and_survives_extremes() {
        // exp(ln 3) = 3 against 1: probabilities 3/4 and 1/4.
        let p = boltzmann_distribution(&[1.0, 0.0], 3.0f64.ln());
        assert!((p[0] - 0.75).abs() < 1e-12);
        assert!((p[1] - 0.25).abs() < 1e-12);

        let uniform = boltzmann_distribution(&[5.0, -2.0, 0.3], 0.0);
        for &x in &uniform {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }

        let extreme = boltzmann_distribution(&[1000.0, 0.0], 1e6);
        assert!(extreme.iter().all(|x| x.is_finite()));
        assert!((extreme[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_is_stable() {
        let direct = (1.0f64.exp() + 2.0f64.exp()).ln();
        assert!((log_sum_exp(&[1.0, 2.0]) - direct).abs() < 1e-12);
        // Would overflow naive exp.
        let shifted = log_sum_exp(&[1000.0, 1001.0]);
        assert!((shifted - (1001.0 + (1.0 + (-1.0f64).exp()).ln())).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn boltzmann_is_a_distribution(
            q in prop::collection::vec(-50.0f64..50.0, 1..6),
            alpha in 0.0f64..100.0,
        ) {
            let p = boltzmann_distribution(&q, alpha);
            prop_assert_eq!(p.len(), q.len());
            prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
            let total: f64 = p.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn residual_honors_the_contract(seed in 0u64..) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mdp = random_mdp(&mut rng);
            let (_, q) = policy_iteration(&mdp, 0.95, 1e-9).unwrap();
            prop_assert!(bellman_residual(&mdp, &q, 0.95) <= 1e-9);
        }
    }
}
