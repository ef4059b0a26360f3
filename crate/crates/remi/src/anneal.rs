//! Posterior search over reward machines by simulated annealing.
//!
//! Each candidate machine is scored by crossing it with the demonstration
//! MDP, solving the product exactly, and evaluating the Boltzmann likelihood
//! of the demonstrated actions at the machine states the demonstration
//! drives the candidate through. A modified Metropolis rule tempers only the
//! likelihood ratio; the structural prior enters at full strength throughout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdp::{build_product, Demonstration, LabeledMdp};
use crate::rm::{check_rewards, PriorParams, RewardMachine};
use crate::solver::{log_sum_exp, policy_iteration, QTable};

/// Search hyperparameters. Temperature and perturbance both decay by a
/// fixed factor every `decay_period` iterations, clamped below.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealConfig {
    /// Machine states in every hypothesis.
    pub n_states: usize,
    /// Reward range Γ every hypothesis draws from.
    pub rewards: Vec<f64>,
    /// Boltzmann rationality assumed of the demonstrator.
    pub alpha: f64,
    /// Discount used when solving product MDPs.
    pub gamma: f64,
    /// Solver tolerance.
    pub tolerance: f64,
    /// Number of proposals, which is also the trace length.
    pub iterations: usize,
    pub temp_initial: f64,
    pub temp_min: f64,
    pub temp_decay: f64,
    pub perturb_initial: f64,
    pub perturb_min: f64,
    pub perturb_decay: f64,
    /// Iterations between schedule decays.
    pub decay_period: usize,
    pub prior: PriorParams,
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 {
            return Err(Error::InvalidConfig("n_states must be at least 1".into()));
        }
        check_rewards(&self.rewards)?;
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma must lie strictly between 0 and 1, got {}",
                self.gamma
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(self.temp_min > 0.0 && self.temp_initial >= self.temp_min) {
            return Err(Error::InvalidConfig(format!(
                "need temp_initial >= temp_min > 0, got {} and {}",
                self.temp_initial, self.temp_min
            )));
        }
        if !(self.temp_decay > 0.0 && self.temp_decay <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "temp_decay must lie in (0, 1], got {}",
                self.temp_decay
            )));
        }
        if !(self.perturb_min > 0.0
            && self.perturb_initial >= self.perturb_min
            && self.perturb_initial <= 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "need 1 >= perturb_initial >= perturb_min > 0, got {} and {}",
                self.perturb_initial, self.perturb_min
            )));
        }
        if !(self.perturb_decay > 0.0 && self.perturb_decay <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "perturb_decay must lie in (0, 1], got {}",
                self.perturb_decay
            )));
        }
        if self.decay_period == 0 {
            return Err(Error::InvalidConfig("decay_period must be at least 1".into()));
        }
        Ok(())
    }

    /// Temperature in effect at 0-based iteration `i`:
    /// max(T0 * decay^(i / period), T_min) with integer division.
    pub fn temperature_at(&self, i: usize) -> f64 {
        let steps = (i / self.decay_period) as i32;
        (self.temp_initial * self.temp_decay.powi(steps)).max(self.temp_min)
    }

    /// Perturbance in effect at 0-based iteration `i`.
    pub fn perturbance_at(&self, i: usize) -> f64 {
        let steps = (i / self.decay_period) as i32;
        (self.perturb_initial * self.perturb_decay.powi(steps)).max(self.perturb_min)
    }
}

/// One row of the search trace, describing the proposal made at one
/// iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub log_likelihood: f64,
    pub log_prior: f64,
    pub temperature: f64,
    pub perturbance: f64,
    pub accepted: bool,
    /// Best tempered score seen up to and including this iteration.
    pub best_score: f64,
}

/// Full per-iteration history of one annealing chain.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnealTrace {
    pub records: Vec<TraceRecord>,
}

impl AnnealTrace {
    /// CSV with one row per iteration.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut out =
            String::from("iteration,loglik,logprior,temperature,perturbance,accepted,best_score\n");
        for rec in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                rec.iteration,
                rec.log_likelihood,
                rec.log_prior,
                rec.temperature,
                rec.perturbance,
                rec.accepted,
                rec.best_score
            )
            .unwrap();
        }
        out
    }
}

/// Boltzmann log-likelihood of the projected (joint state, action) pairs
/// under action values `q`.
pub fn log_likelihood(pairs: &[(usize, usize)], q: &QTable, alpha: f64) -> Result<f64> {
    let mut lse = vec![f64::NAN; q.n_states()];
    let mut total = 0.0;
    let mut scaled = vec![0.0; q.n_actions()];
    for &(x, a) in pairs {
        if x >= q.n_states() || a >= q.n_actions() {
            return Err(Error::MissingQ { state: x, action: a });
        }
        if lse[x].is_nan() {
            for (w, &v) in scaled.iter_mut().zip(q.row(x)) {
                *w = alpha * v;
            }
            lse[x] = log_sum_exp(&scaled);
        }
        total += alpha * q.value(x, a) - lse[x];
    }
    if !total.is_finite() {
        return Err(Error::NonFiniteValue(format!("log-likelihood {total}")));
    }
    Ok(total)
}

/// Modified Metropolis acceptance probability: the likelihood ratio is
/// tempered by `1/temperature`, the prior ratio is not.
pub fn acceptance_probability(d_loglik: f64, d_logprior: f64, temperature: f64) -> f64 {
    (d_loglik / temperature + d_logprior).min(0.0).exp()
}

/// Tempered posterior score used to rank hypotheses across the whole run:
/// the log-likelihood is damped by the final (minimum) temperature so that
/// ranking matches the acceptance rule in its coldest state.
pub fn hypothesis_score(loglik: f64, logprior: f64, temp_min: f64) -> f64 {
    loglik / temp_min + logprior
}

/// Result of one or more annealing chains.
#[derive(Debug, Clone)]
pub struct AnnealOutcome {
    pub best: RewardMachine,
    pub best_score: f64,
    pub trace: AnnealTrace,
}

fn evaluate(
    m: &LabeledMdp,
    d: &Demonstration,
    cand: &RewardMachine,
    cfg: &AnnealConfig,
) -> Result<(f64, f64)> {
    let product = build_product(m, cand)?;
    let (_, q) = policy_iteration(&product, cfg.gamma, cfg.tolerance)?;
    let pairs = d.project(cand)?;
    let ll = log_likelihood(&pairs, &q, cfg.alpha)?;
    let lp = cand.log_prior_unnormalized(&cfg.prior);
    Ok((ll, lp))
}

/// Runs one annealing chain and returns the best hypothesis seen, its
/// score, and the full trace.
///
/// Exactly one uniform variate is drawn per iteration for the accept
/// decision, even when acceptance is certain, so traces are reproducible
/// from the seed alone.
pub fn anneal(
    m: &LabeledMdp,
    d: &Demonstration,
    cfg: &AnnealConfig,
    rng: &mut impl Rng,
) -> Result<AnnealOutcome> {
    cfg.validate()?;
    let mut current = RewardMachine::random_valid(cfg.n_states, m.alphabet(), &cfg.rewards, rng)?;
    let (mut ll_cur, mut lp_cur) = evaluate(m, d, &current, cfg)?;
    let mut best = current.clone();
    let mut best_score = hypothesis_score(ll_cur, lp_cur, cfg.temp_min);
    let mut trace = AnnealTrace::default();
    trace.records.reserve(cfg.iterations);

    for i in 0..cfg.iterations {
        let temperature = cfg.temperature_at(i);
        let perturbance = cfg.perturbance_at(i);
        let cand = current.propose_neighbor(perturbance, rng)?;
        let (ll, lp) = evaluate(m, d, &cand, cfg)?;
        let accept = acceptance_probability(ll - ll_cur, lp - lp_cur, temperature);
        let accepted = rng.random::<f64>() < accept;
        let score = hypothesis_score(ll, lp, cfg.temp_min);
        if score > best_score {
            best = cand.clone();
            best_score = score;
        }
        if accepted {
            current = cand;
            ll_cur = ll;
            lp_cur = lp;
        }
        trace.records.push(TraceRecord {
            iteration: i,
            log_likelihood: ll,
            log_prior: lp,
            temperature,
            perturbance,
            accepted,
            best_score,
        });
    }
    Ok(AnnealOutcome { best, best_score, trace })
}

/// Runs independent chains in parallel, each on its own stream derived
/// from `base_seed`, and keeps the best-scoring hypothesis (ties favor
/// the lowest chain index).
pub fn anneal_chains(
    m: &LabeledMdp,
    d: &Demonstration,
    cfg: &AnnealConfig,
    base_seed: u64,
    n_chains: usize,
) -> Result<(AnnealOutcome, Vec<AnnealTrace>)> {
    if n_chains == 0 {
        return Err(Error::InvalidConfig("need at least one chain".into()));
    }
    cfg.validate()?;
    let outcomes: Vec<Result<AnnealOutcome>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..n_chains)
            .map(|c| {
                scope.spawn(move || {
                    // SplitMix-style mix keeps chain streams disjoint across
                    // nearby base seeds.
                    let mixed = (base_seed ^ (c as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
                        .wrapping_add(0xD1B5_4A32_D192_ED03_u64.rotate_left(c as u32));
                    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
                    anneal(m, d, cfg, &mut rng)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("chain panicked")).collect()
    });
    let mut results = Vec::with_capacity(n_chains);
    for outcome in outcomes {
        results.push(outcome?);
    }
    let winner = results
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| {
            a.best_score
                .partial_cmp(&b.best_score)
                .expect("scores are finite")
                .then(j.cmp(i))
        })
        .map(|(i, _)| i)
        .expect("at least one chain");
    let traces = results.iter().map(|o| o.trace.clone()).collect();
    Ok((results.swap_remove(winner), traces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::solver::boltzmann_distribution;
    use proptest::prelude::*;

    fn recharge_schedule() -> AnnealConfig {
        AnnealConfig {
            n_states: 2,
            rewards: vec![0.0, 1.0],
            alpha: 50.0,
            gamma: 0.95,
            tolerance: 1e-9,
            iterations: 20,
            temp_initial: 500_000.0,
            temp_min: 200.0,
            temp_decay: 0.98,
            perturb_initial: 0.5,
            perturb_min: 1.0 / 16.0,
            perturb_decay: 0.99,
            decay_period: 5,
            prior: PriorParams::new(3.0 / 5.0, 3.0 / 4.0).unwrap(),
        }
    }

    /// Three-state corridor: a0 advances, a1 stays. State 2 is absorbing
    /// and the only labeled state.
    fn corridor() -> LabeledMdp {
        let a = Alphabet::from_names(&["_", "x"]).unwrap();
        let rows = vec![
            vec![0.0, 1.0, 0.0], // s0 a0
            vec![1.0, 0.0, 0.0], // s0 a1
            vec![0.0, 0.0, 1.0], // s1 a0
            vec![0.0, 1.0, 0.0], // s1 a1
            vec![0.0, 0.0, 1.0], // s2 a0
            vec![0.0, 0.0, 1.0], // s2 a1
        ];
        LabeledMdp::new(3, 2, 0, rows, vec![0, 0, 1], a).unwrap()
    }

    fn rush_demo(m: &LabeledMdp) -> Demonstration {
        // Four episodes of an expert that advances twice then idles.
        let ep = vec![(0usize, 0usize), (1, 0), (2, 0), (2, 0)];
        Demonstration::from_state_actions(&[ep.clone(), ep.clone(), ep.clone(), ep], m).unwrap()
    }

    #[test]
    fn schedules_follow_the_closed_form() {
        let cfg = recharge_schedule();
        for i in 0..5 {
            assert_eq!(cfg.temperature_at(i), 500_000.0);
        }
        assert_eq!(cfg.temperature_at(5), 490_000.0);
        assert_eq!(cfg.temperature_at(9), 490_000.0);
        assert_eq!(cfg.temperature_at(10), 500_000.0 * 0.98f64.powi(2));
        // Far enough out, both schedules sit on their floors.
        assert_eq!(cfg.temperature_at(2_000_000), 200.0);
        assert_eq!(cfg.perturbance_at(2_000_000), 1.0 / 16.0);
        assert_eq!(cfg.perturbance_at(4), 0.5);
        assert_eq!(cfg.perturbance_at(5), 0.5 * 0.99);
    }

    #[test]
    fn likelihood_of_a_uniform_row_is_log_one_over_actions() {
        // Equal action values make every action equiprobable.
        let mdp = crate::solver::DenseMdp::new(
            1,
            4,
            vec![vec![1.0]; 4],
            vec![vec![0.5]; 4],
        )
        .unwrap();
        let (_, q) = policy_iteration(&mdp, 0.9, 1e-12).unwrap();
        let ll = log_likelihood(&[(0, 2)], &q, 50.0).unwrap();
        assert!((ll - 0.25f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn likelihood_agrees_with_the_boltzmann_distribution() {
        let mdp = crate::solver::DenseMdp::new(
            2,
            2,
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]],
            vec![vec![0.3, 0.0], vec![0.0, 1.0], vec![0.2, 0.9], vec![0.0, 0.0]],
        )
        .unwrap();
        let (_, q) = policy_iteration(&mdp, 0.9, 1e-10).unwrap();
        let pairs = [(0, 1), (1, 0), (0, 0), (1, 1)];
        let ll = log_likelihood(&pairs, &q, 3.0).unwrap();
        let direct: f64 = pairs
            .iter()
            .map(|&(s, a)| boltzmann_distribution(q.row(s), 3.0)[a].ln())
            .sum();
        assert!((ll - direct).abs() < 1e-12);
    }

    #[test]
    fn likelihood_rejects_out_of_range_pairs() {
        let mdp = crate::solver::DenseMdp::new(
            1,
            2,
            vec![vec![1.0]; 2],
            vec![vec![0.0]; 2],
        )
        .unwrap();
        let (_, q) = policy_iteration(&mdp, 0.9, 1e-9).unwrap();
        assert!(matches!(
            log_likelihood(&[(1, 0)], &q, 1.0),
            Err(Error::MissingQ { .. })
        ));
        assert!(matches!(
            log_likelihood(&[(0, 2)], &q, 1.0),
            Err(Error::MissingQ { .. })
        ));
    }

    #[test]
    fn acceptance_probability_matches_the_modified_rule() {
        // Improvements are certain.
        assert_eq!(acceptance_probability(5.0, 0.0, 10.0), 1.0);
        assert_eq!(acceptance_probability(0.0, 0.0, 10.0), 1.0);
        // The likelihood drop is tempered, the prior drop is not.
        let p = acceptance_probability(-20.0, -1.5, 10.0);
        assert!((p - (-2.0f64 - 1.5).exp()).abs() < 1e-15);
        // Extreme drops underflow to zero rather than NaN.
        assert_eq!(acceptance_probability(-1e9, -1e9, 1.0), 0.0);
    }

    #[test]
    fn trace_has_one_row_per_iteration_and_best_never_decreases() {
        use rand::SeedableRng;
        let m = corridor();
        let d = rush_demo(&m);
        let cfg = AnnealConfig { iterations: 60, ..recharge_schedule() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out = anneal(&m, &d, &cfg, &mut rng).unwrap();
        assert_eq!(out.trace.records.len(), 60);
        let mut prev = f64::NEG_INFINITY;
        for (i, rec) in out.trace.records.iter().enumerate() {
            assert_eq!(rec.iteration, i);
            assert!(rec.best_score >= prev);
            prev = rec.best_score;
            assert_eq!(rec.temperature, cfg.temperature_at(i));
            assert_eq!(rec.perturbance, cfg.perturbance_at(i));
        }
        assert_eq!(out.best_score, prev);
        assert!(out.best.is_valid());
    }

    #[test]
    fn annealing_is_deterministic_in_the_seed() {
        use rand::SeedableRng;
        let m = corridor();
        let d = rush_demo(&m);
        let cfg = AnnealConfig { iterations: 40, ..recharge_schedule() };
        let mut rng1 = ChaCha8Rng::seed_from_u64(9);
        let mut rng2 = ChaCha8Rng::seed_from_u64(9);
        let out1 = anneal(&m, &d, &cfg, &mut rng1).unwrap();
        let out2 = anneal(&m, &d, &cfg, &mut rng2).unwrap();
        assert_eq!(out1.best, out2.best);
        assert_eq!(out1.trace, out2.trace);
        assert_eq!(out1.trace.to_csv(), out2.trace.to_csv());
    }

    #[test]
    fn chains_pick_the_highest_scoring_run() {
        let m = corridor();
        let d = rush_demo(&m);
        let cfg = AnnealConfig { iterations: 30, ..recharge_schedule() };
        let (winner, traces) = anneal_chains(&m, &d, &cfg, 11, 3).unwrap();
        assert_eq!(traces.len(), 3);
        let max_single = (0..3u64)
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(11 + c);
                anneal(&m, &d, &cfg, &mut rng).unwrap().best_score
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(winner.best_score, max_single);
    }

    #[test]
    fn trace_csv_round_trips_shape() {
        let trace = AnnealTrace {
            records: vec![TraceRecord {
                iteration: 0,
                log_likelihood: -1.5,
                log_prior: -2.25,
                temperature: 500000.0,
                perturbance: 0.5,
                accepted: true,
                best_score: -2.2575,
            }],
        };
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "iteration,loglik,logprior,temperature,perturbance,accepted,best_score"
        );
        assert_eq!(lines.next().unwrap(), "0,-1.5,-2.25,500000,0.5,true,-2.2575");
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn config_validation_catches_bad_parameters() {
        let good = recharge_schedule();
        assert!(good.validate().is_ok());
        for bad in [
            AnnealConfig { n_states: 0, ..good.clone() },
            AnnealConfig { rewards: vec![0.0], ..good.clone() },
            AnnealConfig { rewards: vec![1.0, 2.0], ..good.clone() },
            AnnealConfig { alpha: 0.0, ..good.clone() },
            AnnealConfig { gamma: 1.0, ..good.clone() },
            AnnealConfig { tolerance: 0.0, ..good.clone() },
            AnnealConfig { temp_min: 0.0, ..good.clone() },
            AnnealConfig { temp_initial: 100.0, ..good.clone() },
            AnnealConfig { temp_decay: 0.0, ..good.clone() },
            AnnealConfig { perturb_min: 0.0, ..good.clone() },
            AnnealConfig { perturb_initial: 0.01, ..good.clone() },
            AnnealConfig { perturb_decay: 1.5, ..good.clone() },
            AnnealConfig { decay_period: 0, ..good.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn acceptance_probability_is_a_probability(
            d_ll in -1e6f64..1e6,
            d_lp in -100.0f64..100.0,
            temp in 1e-3f64..1e6,
        ) {
            let p = acceptance_probability(d_ll, d_lp, temp);
            prop_assert!((0.0..=1.0).contains(&p));
            if d_ll / temp + d_lp >= 0.0 {
                prop_assert_eq!(p, 1.0);
            }
        }

        #[test]
        fn schedule_is_monotone_and_floored(i in 0usize..10_000, j in 0usize..10_000) {
            let cfg = recharge_schedule();
            let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
            prop_assert!(cfg.temperature_at(lo) >= cfg.temperature_at(hi));
            prop_assert!(cfg.temperature_at(hi) >= cfg.temp_min);
            prop_assert!(cfg.perturbance_at(lo) >= cfg.perturbance_at(hi));
            prop_assert!(cfg.perturbance_at(hi) >= cfg.perturb_min);
        }
    }
}
