use compo_motor::optimizer::*;
use compo_motor::periodic::median;

fn sphere(x: &[f64], _: usize) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn run(seed: u64, generations: usize) -> OptResult {
    let cfg = OptConfig {
        max_epochs: generations,
        rng_seed: seed,
        ..OptConfig::default()
    };
    minimize(sphere, 10, &cfg, &mut GaussianEs::new(), Parallelism::Serial).unwrap()
}

#[test]
fn doubling_the_budget_gains_an_order_of_magnitude() {
    let mut short: Vec<f64> = (0..10).map(|s| run(s, 250).best_cost).collect();
    let mut long: Vec<f64> = (0..10).map(|s| run(s, 500).best_cost).collect();
    let (a, b) = (median(&mut short), median(&mut long));
    assert!(b * 10.0 <= a, "median {a} -> {b}");
}

#[test]
fn best_so_far_never_increases() {
    for seed in 0..5 {
        let r = run(seed, 300);
        for w in r.cost_history.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
        assert_eq!(r.cost_history.last().unwrap().1, r.best_cost);
        assert_eq!(sphere(&r.best_genotype, 0), r.best_cost);
    }
}

#[test]
fn runs_are_bit_identical() {
    assert_eq!(run(42, 100), run(42, 100));
}

#[test]
fn best_generation_points_into_the_history() {
    let r = run(1, 50);
    assert!(r.best_generation < r.generations);
    let at = r.cost_history[r.best_generation].1;
    assert_eq!(at, r.best_cost);
    if r.best_generation > 0 {
        assert!(r.cost_history[r.best_generation - 1].1 > r.best_cost);
    }
}
