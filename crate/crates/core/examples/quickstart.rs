//! Run each search strategy once against a synthetic landscape and print
//! what it found. `cargo run --example quickstart -p tunebench`

use rand::SeedableRng;
use tunebench::objective::{ObjectiveKind, ObjectiveSpec};
use tunebench::space::SearchSpace;
use tunebench::strategies::{run_strategy, StrategySpec};
use tunebench::TuneRng;

fn main() {
    let space = SearchSpace::default();
    let objective = ObjectiveSpec::synthetic(ObjectiveKind::SyntheticMandelbrot, 0.05);
    let budget = 100;

    let strategies = [
        ("random search", StrategySpec::RandomSearch(Default::default())),
        ("forest surrogate", StrategySpec::RfSurrogate(Default::default())),
        ("genetic", StrategySpec::Genetic(Default::default())),
        ("bo-gp", StrategySpec::BoGp(Default::default())),
        ("bo-tpe", StrategySpec::BoTpe(Default::default())),
    ];
    println!("budget {budget}, lognormal noise 0.05, work-group product <= 256\n");
    for (name, spec) in strategies {
        let mut rng = TuneRng::seed_from_u64(1);
        let out = run_strategy(&spec, &space, &objective, budget, None, 10, &mut rng)
            .expect("strategy runs");
        println!(
            "{name:>16}: best {} searched {:.4} ms, final mean {:.4} ms ({} evaluations)",
            out.best_config,
            out.best_search_runtime_ms,
            out.final_score.mean_runtime_ms,
            out.evaluations_used,
        );
    }
}
