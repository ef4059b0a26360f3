//! Checks whether a saved machine is isomorphic to a benchmark's true
//! machine on the reachable part. Usage: iso <env> <file.rm>

use remi::{make_env, RewardMachine};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let env = make_env(args.get(1).map(String::as_str).unwrap_or("coffee")).unwrap();
    let text = std::fs::read_to_string(&args[2]).unwrap();
    let cand = RewardMachine::from_json(&text).unwrap();
    if cand.canonical_key() == env.machine.canonical_key() {
        println!("ISO");
    } else {
        println!("not-iso");
    }
    let ab = cand.alphabet();
    if let (Some(c), Some(k), Some(o)) = (ab.index_of("c"), ab.index_of("k"), ab.index_of("o")) {
        let strong = cand.run_trace(&[c, o]).unwrap().1;
        let weak = cand.run_trace(&[k, o]).unwrap().1;
        println!("strong={strong} weak={weak} ordered={}", strong > weak);
    }
}
