//! Workload builders shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use ttr_core::catalog::builtin_ics_catalog;
use ttr_core::matching::Game;
use ttr_core::sim::{
    nested_fleet, parse_experiment, prepare_instance, stream, Experiment, Instance, Stream,
};

/// A game with every `(task, device)` cell present and uniform scores.
pub fn dense_game(tasks: usize, devices: usize, seed: u64) -> Game {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let (mut t, mut d, mut s) = (Vec::new(), Vec::new(), Vec::new());
    for task in 0..tasks {
        for device in 0..devices {
            t.push(task);
            d.push(device);
            s.push(rng.random_range(0.05..1.0));
        }
    }
    Game::new(t, d, s).expect("cells are distinct")
}

/// The four-subtask batch on a nested fleet of `n` collaborators.
pub fn fleet_instance(n: usize, seed: u64) -> Instance {
    let json = format!(
        r#"{{"bootstrap_tasks": 500, "sweep": {{"axis": "fleet_size", "values": [{n}]}}}}"#
    );
    let spec = parse_experiment(&json).expect("valid spec");
    let exp = Experiment::new(spec, builtin_ics_catalog()).expect("valid experiment");
    let point = exp.spec.sweep.as_ref().map(|s| s.values[0]);
    prepare_instance(&exp, seed, point.as_ref()).expect("instance")
}

/// Device list of a nested fleet, for trust-engine benchmarks.
pub fn fleet_devices(n: usize, seed: u64) -> Vec<ttr_core::DeviceSpec> {
    nested_fleet(n, &mut stream(seed, Stream::Layout))
}
