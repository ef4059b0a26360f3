//! Exhaustive-MAP check on a 3-state deterministic MDP with a binary
//! alphabet and 2-state machines: enumerate every candidate, score it,
//! then see how often annealing lands on the exhaustive maximum.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use remi::{
    anneal, build_product, generate_demonstration, hypothesis_score, log_likelihood,
    policy_iteration, Alphabet, AnnealConfig, LabeledMdp, PriorParams, RewardMachine,
    RolloutParams,
};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let alpha: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(5.0);
    let t0: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(200.0);
    let t_min: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1.0);

    let alphabet = Alphabet::from_names(&["_", "a"]).unwrap();
    // Action 0 advances the cycle 0 -> 1 -> 2 -> 0, action 1 stays put.
    let mut rows = Vec::new();
    for s in 0..3usize {
        let mut adv = vec![0.0; 3];
        adv[(s + 1) % 3] = 1.0;
        rows.push(adv);
        let mut stay = vec![0.0; 3];
        stay[s] = 1.0;
        rows.push(stay);
    }
    let m = LabeledMdp::new(3, 2, 0, rows, vec![0, 0, 1], alphabet.clone()).unwrap();

    let truth = RewardMachine::from_tables(
        alphabet.clone(),
        vec![0.0, 1.0],
        2,
        vec![0, 1, 1, 1],
        vec![0, 1, 0, 0],
    )
    .unwrap();

    let params = RolloutParams { episodes: 50, ep_len: 10, gamma: 0.95, tolerance: 1e-9 };
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let demo = generate_demonstration(&m, &truth, alpha, &params, &mut rng).unwrap();
    println!("triples: {}", demo.n_triples());

    let prior = PriorParams::new(0.6, 0.75).unwrap();

    // Exhaustive scan over all 2-state machines: 2^4 transition tables
    // times 2^4 reward tables.
    let mut best_exh = f64::NEG_INFINITY;
    let mut scored: Vec<(f64, f64, f64, String)> = Vec::new();
    for t_bits in 0..16u32 {
        for r_bits in 0..16u32 {
            let t: Vec<usize> = (0..4).map(|i| ((t_bits >> i) & 1) as usize).collect();
            let r: Vec<usize> = (0..4).map(|i| ((r_bits >> i) & 1) as usize).collect();
            let cand =
                RewardMachine::from_tables(alphabet.clone(), vec![0.0, 1.0], 2, t, r).unwrap();
            if !cand.is_valid() {
                continue;
            }
            let product = build_product(&m, &cand).unwrap();
            let (_, q) = policy_iteration(&product, params.gamma, params.tolerance).unwrap();
            let pairs = demo.project(&cand).unwrap();
            let ll = log_likelihood(&pairs, &q, alpha).unwrap();
            let lp = cand.log_prior_unnormalized(&prior);
            let score = hypothesis_score(ll, lp, t_min);
            if score > best_exh {
                best_exh = score;
            }
            scored.push((score, ll, lp, cand.canonical_key()));
        }
    }
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    println!("valid machines: {}", scored.len());
    println!("true machine key: {}", truth.canonical_key());
    for (score, ll, lp, key) in scored.iter().take(5) {
        println!("  score={score:.4} ll={ll:.3} lp={lp:.3} {key}");
    }

    let cfg = AnnealConfig {
        n_states: 2,
        rewards: vec![0.0, 1.0],
        alpha,
        gamma: params.gamma,
        tolerance: params.tolerance,
        iterations: 500,
        temp_initial: t0,
        temp_min: t_min,
        temp_decay: 0.95,
        perturb_initial: 0.5,
        perturb_min: 0.1,
        perturb_decay: 0.98,
        decay_period: 5,
        prior,
    };

    let mut hits = 0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = anneal(&m, &demo, &cfg, &mut rng).unwrap();
        let hit = (out.best_score - best_exh).abs() < 1e-9;
        if hit {
            hits += 1;
        }
        println!("seed {seed}: best={:.6} exh={best_exh:.6} hit={hit}", out.best_score);
    }
    println!("hits: {hits}/10");
}
