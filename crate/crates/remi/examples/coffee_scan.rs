//! Sweeps candidate coffee-machine positions and prints the hypothesis
//! ladder for each: how much likelihood each partial structure earns over
//! a uniform predictor, and where the true machine lands. Used to pick a
//! layout whose posterior landscape annealing can actually climb.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use remi::{
    build_product, evaluate_agent, generate_demonstration, log_likelihood, policy_iteration,
    Demonstration, GridSpec, LabeledMdp, PriorParams, RewardMachine, RolloutParams,
};

const BASE: [&str; 8] = [
    "S.......",
    "........",
    "**.*****",
    "........",
    "........",
    "*****.**",
    "........",
    ".......o",
];

fn grid_with_c(row: usize, col: usize) -> String {
    let mut lines: Vec<Vec<u8>> = BASE.iter().map(|l| l.as_bytes().to_vec()).collect();
    assert_eq!(lines[row][col], b'.', "c must go on a blank cell");
    lines[row][col] = b'c';
    let mut text = String::from("slip=0.1\n");
    for l in lines {
        text.push_str(std::str::from_utf8(&l).unwrap());
        text.push('\n');
    }
    text
}

struct Scored {
    ll: f64,
    lp: f64,
}

fn score(
    m: &LabeledMdp,
    demo: &Demonstration,
    cand: &RewardMachine,
    prior: &PriorParams,
) -> Scored {
    let product = build_product(m, cand).unwrap();
    let (_, q) = policy_iteration(&product, 0.95, 1e-9).unwrap();
    let pairs = demo.project(cand).unwrap();
    let ll = log_likelihood(&pairs, &q, 50.0).unwrap();
    let lp = cand.log_prior_unnormalized(prior);
    Scored { ll, lp }
}

fn main() {
    let spots: Vec<(usize, usize)> = vec![
        (4, 0),
        (4, 1),
        (4, 2),
        (3, 0),
        (3, 1),
        (4, 6),
        (4, 7),
        (3, 6),
        (3, 7),
        (1, 1),
        (1, 2),
        (0, 4),
        (1, 4),
        (6, 0),
        (6, 1),
        (6, 6),
        (7, 0),
        (7, 1),
        (7, 2),
        (6, 2),
    ];
    let prior = PriorParams::new(0.6, 0.75).unwrap();
    let t_min = 300.0;
    println!(
        "{:>5} | {:>8} {:>8} {:>8} {:>8} | {:>7} {:>7} | {:>6} {:>6}",
        "c", "cpay-u", "gate-c", "tru-gate", "opay-u", "tru_sc", "margin", "r_e", "r_a"
    );
    for (row, col) in spots {
        let text = grid_with_c(row, col);
        let grid = GridSpec::parse(&text).unwrap();
        let alphabet = grid.alphabet().clone();
        let mdp = grid.compile().unwrap();
        let star = alphabet.index_of("*").unwrap();
        let c = alphabet.index_of("c").unwrap();
        let o = alphabet.index_of("o").unwrap();
        let m_sym = alphabet.len();

        let table = |edits: &[(usize, usize, usize)], rewards: &[(usize, usize)]| {
            let mut t: Vec<usize> = (0..3).flat_map(|y| vec![y; m_sym]).collect();
            for &(y, s, to) in edits {
                t[y * m_sym + s] = to;
            }
            let mut r = vec![0; 3 * m_sym];
            for &(y, s) in rewards {
                r[y * m_sym + s] = 1;
            }
            RewardMachine::from_tables(alphabet.clone(), vec![0.0, 1.0], 3, t, r).unwrap()
        };

        let truth = table(
            &[(0, star, 2), (0, c, 1), (1, star, 2), (1, o, 2)],
            &[(1, o)],
        );
        let c_pays = table(&[(0, star, 2), (0, c, 2)], &[(0, c)]);
        let c_gate = table(
            &[(0, star, 2), (0, c, 1), (1, star, 2), (1, o, 2)],
            &[(0, c), (1, o)],
        );
        let o_pays = table(&[(0, star, 2), (0, o, 2)], &[(0, o)]);

        let params = RolloutParams { episodes: 100, ep_len: 100, gamma: 0.95, tolerance: 1e-9 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let demo = generate_demonstration(&mdp, &truth, 50.0, &params, &mut rng).unwrap();

        // A drifting hypothesis with no active reward predicts uniform
        // actions; score that behavior directly as the plateau baseline,
        // with the prior of the cheapest valid machine.
        let n_actions = 4.0f64;
        let u_ll = (params.episodes * params.ep_len) as f64 * (1.0 / n_actions).ln();
        let u_lp = (3.0 * m_sym as f64) * (0.6f64).ln() + (3.0 * m_sym as f64) * (0.75f64).ln()
            + 3.0 * ((0.2f64 / 0.6).ln())
            + ((0.25f64 / 0.75).ln());
        let s_u = Scored { ll: u_ll, lp: u_lp };
        let s_c = score(&mdp, &demo, &c_pays, &prior);
        let s_g = score(&mdp, &demo, &c_gate, &prior);
        let s_t = score(&mdp, &demo, &truth, &prior);
        let s_o = score(&mdp, &demo, &o_pays, &prior);

        let sc = |s: &Scored| s.ll / t_min + s.lp;
        let truth_score = sc(&s_t);
        let margin = truth_score
            - [sc(&s_u), sc(&s_c), sc(&s_g), sc(&s_o)]
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);

        let mut rng_e = ChaCha8Rng::seed_from_u64(1);
        let (_, q) = {
            let product = build_product(&mdp, &truth).unwrap();
            policy_iteration(&product, 0.95, 1e-9).unwrap()
        };
        let _ = q;
        let r_e = remi::expert_baseline(&mdp, &truth, 50.0, &params, &mut rng_e).unwrap();
        let mut rng_a = ChaCha8Rng::seed_from_u64(2);
        let r_a = evaluate_agent(&mdp, &truth, &truth, &params, &mut rng_a).unwrap();

        println!(
            "({},{}) | {:>8.0} {:>8.0} {:>8.0} {:>8.0} | {:>7.2} {:>7.2} | {:>6.3} {:>6.3}",
            row,
            col,
            s_c.ll - s_u.ll,
            s_g.ll - s_c.ll,
            s_t.ll - s_g.ll,
            s_o.ll - s_u.ll,
            truth_score,
            margin,
            r_e,
            r_a
        );
    }
}
