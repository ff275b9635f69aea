//! Seeded noise tables and their aggregation to coarser grids.
//!
//! The same (master seed, path index) pair always reproduces the same table,
//! and aggregation sums increments blockwise, so coarse and fine simulations
//! ride the same Brownian and Poisson paths.

use delay_cir_bim::cli::increments_csv;
use delay_cir_bim::driver::{generate, GridSpec, SeedPolicy};

fn main() {
    let grid = GridSpec::new(2.0, 0.25, 1.0).unwrap();
    let seed = SeedPolicy::new(2024, 0);
    let table = generate(grid, 2.0, seed).unwrap();
    let again = generate(grid, 2.0, seed).unwrap();
    assert_eq!(table, again);
    println!(
        "grid: {} steps of h = {}, delay resolved by {} steps",
        grid.n_steps(),
        grid.h(),
        grid.delay_steps()
    );
    println!("{}", increments_csv(&table));

    let coarse = table.aggregate(2).unwrap();
    println!("aggregated by 2 (h = {}):", coarse.grid().h());
    println!("{}", increments_csv(&coarse));

    let total_fine: f64 = table.brownian().iter().sum();
    let total_coarse: f64 = coarse.brownian().iter().sum();
    println!("Brownian total, fine vs coarse: {total_fine:.6} vs {total_coarse:.6}");
    let jumps_fine: u64 = table.jump_counts().iter().sum();
    let jumps_coarse: u64 = coarse.jump_counts().iter().sum();
    println!("jump count total, fine vs coarse: {jumps_fine} vs {jumps_coarse}");
}
