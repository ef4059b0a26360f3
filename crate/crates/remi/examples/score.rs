//! Scores a reward machine against a demonstration file the way the
//! annealer does: log-likelihood, log-prior, and hypothesis score.
//! Usage: `score <env> <demo-file> <rm-file|true> <t_min>`.

use remi::anneal::{hypothesis_score, log_likelihood};
use remi::envs::make_env;
use remi::rm::PriorParams;
use remi::{build_product, policy_iteration, Demonstration, RewardMachine};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let env = make_env(&args[0]).unwrap();
    let text = std::fs::read_to_string(&args[1]).unwrap();
    let demo = Demonstration::parse(&text, &env.mdp).unwrap();
    let rm = if args[2] == "true" {
        env.machine.clone()
    } else {
        RewardMachine::from_json(&std::fs::read_to_string(&args[2]).unwrap()).unwrap()
    };
    let t_min: f64 = args[3].parse().unwrap();

    let product = build_product(&env.mdp, &rm).unwrap();
    let (_, q) = policy_iteration(&product, 0.95, 1e-9).unwrap();
    let pairs = demo.project(&rm).unwrap();
    let ll = log_likelihood(&pairs, &q, 50.0).unwrap();
    let prior = PriorParams::new(3.0 / 5.0, 3.0 / 4.0).unwrap();
    let lp = rm.log_prior_unnormalized(&prior);
    println!("triples={}", pairs.len());
    println!("loglik={ll}");
    println!("logprior={lp}");
    println!("score={}", hypothesis_score(ll, lp, t_min));
    println!("uniform={}", pairs.len() as f64 * (1.0 / env.mdp.n_actions() as f64).ln());
}
