//! Scores a ladder of partial hypotheses against a fresh demonstration to
//! check that each structural refinement raises the likelihood. Useful when
//! tuning layouts: annealing can only assemble a machine whose pieces each
//! pay their way.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use remi::{
    build_product, generate_demonstration, hypothesis_score, log_likelihood, make_env,
    policy_iteration, Demonstration, LabeledMdp, PriorParams, RewardMachine, RolloutParams,
};

fn score_one(
    name: &str,
    m: &LabeledMdp,
    demo: &Demonstration,
    cand: &RewardMachine,
    alpha: f64,
    t_min: f64,
    prior: &PriorParams,
) {
    let product = build_product(m, cand).unwrap();
    let (_, q) = policy_iteration(&product, 0.95, 1e-9).unwrap();
    let pairs = demo.project(cand).unwrap();
    let ll = log_likelihood(&pairs, &q, alpha).unwrap();
    let lp = cand.log_prior_unnormalized(prior);
    let score = hypothesis_score(ll, lp, t_min);
    println!("{name:<24} ll={ll:>14.3} lp={lp:>8.3} score={score:>12.4}");
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let env_name = args.get(1).map(String::as_str).unwrap_or("recharge");
    let (runs, ep_len, t_min) = match env_name {
        "recharge" => (1000, 25, 200.0),
        "coffee" => (100, 100, 300.0),
        _ => (300, 100, 50.0),
    };
    let env = make_env(env_name).unwrap();
    let alpha = 50.0;
    let params = RolloutParams { episodes: runs, ep_len, gamma: 0.95, tolerance: 1e-9 };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let demo = generate_demonstration(&env.mdp, &env.machine, alpha, &params, &mut rng).unwrap();
    println!("{env_name}: {} triples", demo.n_triples());
    let prior = PriorParams::new(0.6, 0.75).unwrap();

    let alphabet = env.machine.alphabet().clone();
    let n = env.machine.n_states();
    let m_sym = alphabet.len();
    let uniform_t: Vec<usize> = (0..n).flat_map(|y| vec![y; m_sym]).collect();
    let mut ladder: Vec<(&str, Vec<usize>, Vec<usize>)> = Vec::new();

    match env_name {
        // Alphabet _, l, w, t, r. Stairs: reward alone, then lava.
        "recharge" => {
            let mut r0 = vec![0; n * m_sym];
            r0[4] = 1;
            let mut t_pay = uniform_t.clone();
            t_pay[4] = 2;
            ladder.push(("r pays once", t_pay.clone(), r0.clone()));
            let mut t_lava = t_pay.clone();
            t_lava[1] = 2;
            ladder.push(("r pays + lava dead", t_lava, r0));
        }
        // Alphabet _, *, c, o. The ladder walks the whole assembly path one
        // table entry at a time so every dip and stair the sampler must
        // cross is visible.
        "coffee" => {
            let mut rc = vec![0; n * m_sym];
            rc[2] = 1; // y0 coffee reward
            ladder.push(("rc only", uniform_t.clone(), rc.clone()));
            let mut t_c = uniform_t.clone();
            t_c[2] = 2;
            ladder.push(("rc + c-edge", t_c.clone(), rc.clone()));
            t_c[1] = 2;
            ladder.push(("c pays (full)", t_c.clone(), rc.clone()));
            let mut t_e = t_c.clone();
            t_e[2] = 1; // c-edge re-aimed at y1, still inert
            ladder.push(("c-edge to y1", t_e.clone(), rc.clone()));
            t_e[m_sym + 1] = 2; // y1 lava edge
            ladder.push(("+ y1 lava edge", t_e.clone(), rc.clone()));
            t_e[m_sym + 3] = 2; // y1 delivery edge, reward still zero
            ladder.push(("+ y1 o-edge", t_e.clone(), rc.clone()));
            let mut r_both = rc.clone();
            r_both[m_sym + 3] = 1;
            ladder.push(("+ y1 o reward", t_e.clone(), r_both.clone()));

            let mut ro = vec![0; n * m_sym];
            ro[3] = 1;
            let mut t_o = uniform_t.clone();
            t_o[3] = 2;
            t_o[1] = 2;
            ladder.push(("o pays (rival)", t_o, ro));
        }
        // Alphabet _, *, k, c, o. The strong arm's rungs, then the weak and
        // single-stage rivals.
        "multi_coffee" => {
            let mut rc = vec![0; n * m_sym];
            rc[3] = 2; // y0 strong-coffee reward, paid on touch
            let mut t_c = uniform_t.clone();
            t_c[3] = 3;
            t_c[1] = 3;
            ladder.push(("c pays (full)", t_c.clone(), rc.clone()));
            let mut t_e = t_c.clone();
            t_e[3] = 1;
            ladder.push(("c-edge to y1", t_e.clone(), rc.clone()));
            t_e[m_sym + 1] = 3;
            ladder.push(("+ y1 lava edge", t_e.clone(), rc.clone()));
            t_e[m_sym + 4] = 3;
            ladder.push(("+ y1 o-edge", t_e.clone(), rc.clone()));
            let mut r_both = rc.clone();
            r_both[m_sym + 4] = 2;
            ladder.push(("+ y1 o reward", t_e.clone(), r_both.clone()));
            let mut r_strong = vec![0; n * m_sym];
            r_strong[m_sym + 4] = 2;
            ladder.push(("strong arm only", t_e.clone(), r_strong));

            let mut rk = vec![0; n * m_sym];
            rk[2] = 1;
            let mut t_k = uniform_t.clone();
            t_k[2] = 3;
            t_k[1] = 3;
            ladder.push(("k pays (rival)", t_k, rk.clone()));
            let mut t_w = uniform_t.clone();
            t_w[2] = 2;
            t_w[1] = 3;
            t_w[2 * m_sym + 1] = 3;
            t_w[2 * m_sym + 4] = 3;
            let mut r_w = vec![0; n * m_sym];
            r_w[2 * m_sym + 4] = 1;
            ladder.push(("weak arm only", t_w, r_w));
            let mut ro = vec![0; n * m_sym];
            ro[4] = 2;
            let mut t_o = uniform_t.clone();
            t_o[4] = 3;
            t_o[1] = 3;
            ladder.push(("o pays (rival)", t_o, ro));
        }
        _ => {}
    }

    {
        let mut r_stub = vec![0; n * m_sym];
        r_stub[n * m_sym - 1] = 1;
        score_one("uniform-ish", &env.mdp, &demo, &stub(&env, uniform_t, r_stub), alpha, t_min, &prior);
    }
    for (name, t, r) in ladder {
        score_one(name, &env.mdp, &demo, &stub(&env, t, r), alpha, t_min, &prior);
    }
    score_one("truth", &env.mdp, &demo, &env.machine, alpha, t_min, &prior);
}

fn stub(env: &remi::Env, t: Vec<usize>, r: Vec<usize>) -> RewardMachine {
    RewardMachine::from_tables(
        env.machine.alphabet().clone(),
        env.machine.rewards().to_vec(),
        env.machine.n_states(),
        t,
        r,
    )
    .unwrap()
}
