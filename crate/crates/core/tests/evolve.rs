//! Slow statistical check of the instance evolution loop.
//!
//! `cargo test --release --test evolve -- --ignored --nocapture`

use tsp_anytime::generators::{evolve_instance, Direction, EvolutionConfig, GeneratorConfig};
use tsp_anytime::solvers::SolverConfig;

#[test]
#[ignore = "a few minutes in release mode"]
fn evolution_improves_the_seed_in_most_repetitions() {
    let mut improved = 0;
    for rep in 0..10 {
        let mut cfg = EvolutionConfig::new(
            GeneratorConfig::new(1000 + rep, 50),
            SolverConfig::ils(0),
            SolverConfig::ga(0),
            Direction::EasyA,
        );
        cfg.generations = 30;
        let out = evolve_instance(&cfg, None).unwrap();
        let (seed, last) = (out.seed_fitness.unwrap(), out.fitness.unwrap());
        println!("rep {rep}: fitness {seed:.4} -> {last:.4}");
        improved += usize::from(last < seed);
    }
    println!("strictly improved in {improved}/10 repetitions");
    assert!(improved >= 8);
}
