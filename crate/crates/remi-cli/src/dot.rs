//! Graphviz rendering of reward machines.

use remi::{RewardMachine, INITIAL_STATE};

/// Renders the reachable part of a machine as a DOT digraph. Parallel
/// edges with the same target and reward are merged into one edge whose
/// label joins the symbols with "∨"; a state whose every symbol self-loops
/// without reward gets a single loop labeled only by the reward.
pub fn to_dot(rm: &RewardMachine) -> String {
    let mut out = String::from("digraph reward_machine {\n  rankdir=LR;\n  node [shape=circle];\n");
    let unreachable = rm.check_valid().unreachable;
    let reachable: Vec<usize> =
        (0..rm.n_states()).filter(|y| !unreachable.contains(y)).collect();
    for &y in &reachable {
        out.push_str(&format!("  y{y};\n"));
    }
    out.push_str("  start [shape=point];\n");
    out.push_str(&format!("  start -> y{INITIAL_STATE};\n"));
    let m = rm.alphabet().len();
    for &y in &reachable {
        let all_zero_loop =
            (0..m).all(|s| rm.target(y, s) == y && rm.reward(y, s) == 0.0);
        if all_zero_loop {
            out.push_str(&format!("  y{y} -> y{y} [label=\"0\"];\n"));
            continue;
        }
        // Group symbols by (target, reward), keeping symbol order.
        let mut groups: Vec<((usize, f64), Vec<usize>)> = Vec::new();
        for s in 0..m {
            let key = (rm.target(y, s), rm.reward(y, s));
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, symbols)) => symbols.push(s),
                None => groups.push((key, vec![s])),
            }
        }
        for ((target, reward), symbols) in groups {
            let label = symbols
                .iter()
                .map(|&s| rm.alphabet().name(s))
                .collect::<Vec<_>>()
                .join(" ∨ ");
            out.push_str(&format!(
                "  y{y} -> y{target} [label=\"{label} | {reward}\"];\n"
            ));
        }
    }
    out.push_str("}\n");
    out
}
