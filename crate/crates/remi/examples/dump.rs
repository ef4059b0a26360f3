//! Prints a benchmark's true machine in the .rm file format.

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "coffee".into());
    print!("{}", remi::make_env(&name).unwrap().machine.to_json());
}
