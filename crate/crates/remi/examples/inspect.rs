//! Prints rollout statistics for a shipped environment: expert and
//! true-machine-agent returns, expert label traffic, and (for the
//! multi-roast task) which pickup the expert reaches first. Used to tune
//! grid layouts. Usage: `inspect <env> [episodes]`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use remi::envs::{evaluate_agent, expert_baseline, generate_demonstration, make_env};
use remi::solver::boltzmann_distribution;
use remi::{build_product, policy_iteration, RolloutParams, INITIAL_STATE};

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "recharge".to_string());
    let episodes: usize = args.next().map(|s| s.parse().unwrap()).unwrap_or(2000);

    let env = make_env(&name).expect("unknown environment");
    let (ep_len, alpha) = match name.as_str() {
        "recharge" => (25, 50.0),
        _ => (100, 50.0),
    };
    let params = RolloutParams { episodes, ep_len, gamma: 0.95, tolerance: 1e-9 };

    print!("{}", env.grid.to_text());
    println!("alphabet: {:?}", env.machine.alphabet().names());

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let r_e = expert_baseline(&env.mdp, &env.machine, alpha, &params, &mut rng).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let r_a = evaluate_agent(&env.mdp, &env.machine, &env.machine, &params, &mut rng).unwrap();
    println!("r_e={r_e:.4}  r_a(true machine)={r_a:.4}  ratio={:.4}", r_a / r_e.max(1e-12));

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let demo =
        generate_demonstration(&env.mdp, &env.machine, alpha, &params, &mut rng).unwrap();

    let blank = env.machine.alphabet().blank();
    let m = env.machine.alphabet().len();
    let mut label_steps = vec![0usize; m];
    let mut label_episodes = vec![0usize; m];
    let mut rewarded = 0usize;
    let mut first_pickup = vec![0usize; m];
    let mut total_reward = 0.0;
    for ep in &demo.episodes {
        let mut seen = vec![false; m];
        let mut y = INITIAL_STATE;
        let mut reward = 0.0;
        let mut picked = false;
        for step in ep.steps.iter().skip(1) {
            label_steps[step.label] += 1;
            if !seen[step.label] {
                seen[step.label] = true;
                label_episodes[step.label] += 1;
            }
            if !picked && step.label != blank {
                first_pickup[step.label] += 1;
                picked = true;
            }
            reward += env.machine.reward(y, step.label);
            y = env.machine.target(y, step.label);
        }
        total_reward += reward;
        if reward > 0.0 {
            rewarded += 1;
        }
    }
    let n_ep = demo.episodes.len() as f64;
    println!("expert mean return (recount)={:.4}", total_reward / n_ep);
    println!("episodes with reward: {:.1}%", 100.0 * rewarded as f64 / n_ep);

    // Per-episode return histogram separates reward magnitudes.
    let mut by_return = std::collections::BTreeMap::new();
    for ep in &demo.episodes {
        let mut y = INITIAL_STATE;
        let mut reward = 0.0;
        for step in ep.steps.iter().skip(1) {
            reward += env.machine.reward(y, step.label);
            y = env.machine.target(y, step.label);
        }
        *by_return.entry(format!("{reward}")).or_insert(0usize) += 1;
    }
    for (ret, count) in &by_return {
        println!("  return {ret}: {:.1}%", 100.0 * *count as f64 / n_ep);
    }
    for s in 0..m {
        if s == blank {
            continue;
        }
        println!(
            "  {}: touched in {:.1}% of episodes, {:.2} steps/episode, first non-blank in {:.1}%",
            env.machine.alphabet().name(s),
            100.0 * label_episodes[s] as f64 / n_ep,
            label_steps[s] as f64 / n_ep,
            100.0 * first_pickup[s] as f64 / n_ep,
        );
    }

    // Remaining args: probe cells "row,col[,y]" to print expert Q rows and
    // action probabilities at decision points.
    let product = build_product(&env.mdp, &env.machine).unwrap();
    let (_, q) = policy_iteration(&product, params.gamma, params.tolerance).unwrap();
    for probe in args {
        let parts: Vec<usize> = probe.split(',').map(|p| p.parse().unwrap()).collect();
        let (row, col, y) = (parts[0], parts[1], parts.get(2).copied().unwrap_or(0));
        let s = env.grid.state_at(row, col);
        let x = s * env.machine.n_states() + y;
        let probs = boltzmann_distribution(q.row(x), alpha);
        println!(
            "probe ({row},{col}) y={y}: Q={:?} probs={:?}",
            q.row(x).iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
            probs.iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>(),
        );
    }
}
