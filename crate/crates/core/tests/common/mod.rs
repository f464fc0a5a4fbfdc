#![allow(dead_code)]

use hyperdiff::{
    planted_hypergraph, prf1, sample_seeds, solve, sweepcut, DiffusionConfig, Hypergraph64, NodeSet, PlantedConfig,
    PlantedInstance, SeedMode,
};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two blocks of 200 nodes, 600 edges per block of sizes 3 to 6, 5% cross edges.
pub fn planted_fixture(rng_seed: u64) -> PlantedInstance {
    planted_hypergraph(&PlantedConfig::new(vec![200, 200], 600, (3, 6), 0.05, rng_seed)).unwrap()
}

/// F1 of the sweep cluster against block 0 when seeding 1% of that block.
pub fn planted_f1(inst: &PlantedInstance, h: &Hypergraph64, kappa: f64, seed_rng: u64) -> f64 {
    let seeds = sample_seeds(h, &inst.labels, 0, 2, SeedMode::Uniform, seed_rng).unwrap();
    let x = solve(h, &seeds, &DiffusionConfig::new(kappa)).unwrap();
    assert!(x.converged);
    let profile = sweepcut(h, &x.x).unwrap();
    prf1(&profile.best_set, &inst.block(0)).f1
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Random small instance: hypergraph, seeds among positive-degree nodes, and a config.
pub struct Instance {
    pub h: Hypergraph64,
    pub seeds: NodeSet,
    pub cfg: DiffusionConfig<f64>,
}

pub fn random_instance(
    rng: &mut ChaCha8Rng,
    max_n: usize,
    max_m: usize,
    max_size: usize,
    deltas: &[f64],
    kappas: &[f64],
) -> Instance {
    loop {
        let n = rng.gen_range(4..=max_n);
        let m = rng.gen_range(1..=max_m);
        let delta = deltas[rng.gen_range(0..deltas.len())];
        let kappa = kappas[rng.gen_range(0..kappas.len())];
        let edges: Vec<Vec<usize>> = (0..m)
            .map(|_| {
                let size = rng.gen_range(2..=max_size.min(n));
                let mut e = sample(rng, n, size).into_vec();
                e.sort_unstable();
                e
            })
            .collect();
        let h = Hypergraph64::with_delta(n, edges, delta).unwrap();
        let eligible: Vec<usize> = (0..n).filter(|&v| h.degree(v) > 0.0).collect();
        if eligible.is_empty() {
            continue;
        }
        let k = rng.gen_range(1..=3.min(eligible.len()));
        let seeds = NodeSet::new(n, sample(rng, eligible.len(), k).into_iter().map(|i| eligible[i])).unwrap();
        let cfg = DiffusionConfig::new(kappa).with_emit_aux(true);
        return Instance { h, seeds, cfg };
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense auxiliary values from a solve run (unstored gadgets are zero).
pub fn dense_aux(h: &Hypergraph64, aux: &Option<Vec<(usize, f64, f64)>>) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); h.num_gadgets()];
    for &(g, a, b) in aux.iter().flatten() {
        out[g] = (a, b);
    }
    out
}
