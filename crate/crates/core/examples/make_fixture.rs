//! Writes the synthetic pipeline fixture into a directory:
//! `cargo run --example make_fixture -- <dir> [seed]`

use std::path::PathBuf;

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "fixture".into()));
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(42);
    let config = rumorlens::synth::write_pipeline_fixture(&dir, seed).expect("write fixture");
    println!("{}", config.display());
}
