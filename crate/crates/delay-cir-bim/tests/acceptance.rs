//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line (run with `--nocapture` to see them).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use delay_cir_bim::cli::{self, CliCommand, RunConfig};
use delay_cir_bim::driver::{generate, GridSpec, SeedPolicy};
use delay_cir_bim::experiments::{
    convergence_study, moment_study, positivity_census, simulate_ensemble,
};
use delay_cir_bim::observables::{barrier_option_price, bond_price, mean_bound};
use delay_cir_bim::schemes::{bim_step, simulate_path, ControlConfig, PathRecorder, Scheme};
use delay_cir_bim::{InitialHistory, ModelParams};

fn example1() -> ModelParams {
    ModelParams {
        lambda: 5.0,
        mu: 0.5,
        sigma: 1.5,
        gamma: 0.5,
        delta: 1.0,
        beta: 2.0,
        tau: 1.0,
    }
}

fn example2() -> ModelParams {
    ModelParams {
        lambda: 100.0,
        mu: 5.0,
        sigma: 2.0,
        gamma: 1.0,
        delta: 2.0,
        beta: 4.0,
        tau: 1.0,
    }
}

fn ctrl1() -> ControlConfig {
    ControlConfig::with_epsilon(10.0, 1.0, 1e-3)
}

fn ctrl2() -> ControlConfig {
    ControlConfig::with_epsilon(200.0, 5.0, 1e-3)
}

fn unit_history() -> InitialHistory {
    InitialHistory::Constant(1.0)
}

fn report(criterion: &str, ok: bool, detail: &str) {
    println!(
        "[acceptance] {criterion}: {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "{criterion}: {detail}");
}

// Criterion 1: the balanced scheme records no negative value and never clamps
// from a state at or above epsilon, at h = 0.5 and h = 0.1 over 1000 paths;
// a million randomized single steps from epsilon-safe states stay nonnegative.
#[test]
fn criterion_1_positivity() {
    let params = example1();
    let ctrl = ctrl1();
    let history = unit_history();

    let mut negative_paths = 0;
    let mut safe_clamps = 0;
    for h in [0.5, 0.1] {
        let census =
            positivity_census(&params, &ctrl, &[Scheme::Bim], &history, h, 5.0, 1000, 2024)
                .unwrap();
        negative_paths += census.per_scheme[0].paths_with_negative_values;
        safe_clamps += census.per_scheme[0].clamps_from_safe_state;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7071);
    let mut step_negatives = 0usize;
    for _ in 0..1_000_000 {
        let state = rng.random_range(ctrl.epsilon..20.0);
        let delayed: f64 = rng.random_range(0.0..20.0);
        let h: f64 = rng.random_range(1e-3..0.999);
        let dw = rng.random_range(-10.0f64..10.0) * h.sqrt();
        let jumps = rng.random_range(0u64..=20);
        let dn_tilde = jumps as f64 - params.beta * h;
        let next = bim_step(state, delayed, dw, dn_tilde, &params, &ctrl, h).unwrap();
        if next < 0.0 {
            step_negatives += 1;
        }
    }

    report(
        "criterion 1 (positivity at large and small steps)",
        negative_paths == 0 && safe_clamps == 0 && step_negatives == 0,
        &format!(
            "negative paths {negative_paths}, clamps from safe states {safe_clamps}, \
             negative unit steps {step_negatives}/1000000"
        ),
    );
}

// Criterion 2: Euler at h = 0.01 loses positivity on at least 1% of 1000
// paths; a second seed is consulted before declaring failure.
#[test]
fn criterion_2_euler_contrast() {
    let params = example1();
    let ctrl = ctrl1();
    let history = unit_history();
    let run = |seed: u64| {
        positivity_census(
            &params,
            &ctrl,
            &[Scheme::Euler],
            &history,
            0.01,
            2.0,
            1000,
            seed,
        )
        .unwrap()
        .per_scheme[0]
            .paths_with_negative_values
    };
    let first = run(1001);
    let negative_paths = if first >= 10 { first } else { run(1002) };
    report(
        "criterion 2 (Euler loses positivity)",
        negative_paths >= 10,
        &format!("{negative_paths}/1000 paths with a negative value"),
    );
}

// Criterion 3: with sigma = delta = beta = 0, c2 = 0, c0 = lambda the
// balanced path matches s_{n+1} = s_n + lambda*(mu - s_n)*h/(1 + lambda*h)
// within 1e-12 relative error over ten thousand steps.
#[test]
fn criterion_3_deterministic_reduction() {
    let mut params = example1();
    params.sigma = 0.0;
    params.delta = 0.0;
    params.beta = 0.0;
    let ctrl = ControlConfig::new(params.lambda, 0.0);
    let grid = GridSpec::new(100.0, 0.01, 1.0).unwrap();
    assert_eq!(grid.n_steps(), 10_000);
    let table = generate(grid, 0.0, SeedPolicy::new(0, 0)).unwrap();
    let path = simulate_path(Scheme::Bim, &params, &ctrl, grid, &table, &unit_history()).unwrap();

    let mut expected = 1.0;
    let mut worst = 0.0f64;
    for n in 0..=grid.n_steps() {
        let rel = (path.values[n] - expected).abs() / expected.abs();
        worst = worst.max(rel);
        expected +=
            params.lambda * (params.mu - expected) * grid.h() / (1.0 + params.lambda * grid.h());
    }
    report(
        "criterion 3 (deterministic reduction)",
        worst <= 1e-12,
        &format!("worst relative error {worst:.3e} over 10000 steps"),
    );
}

// Criterion 4: a convergence study whose coarse list includes the reference
// step reports exactly zero error there.
#[test]
fn criterion_4_coupling_zero_error() {
    let params = example1();
    let ctrl = ctrl1();
    let h_ref = 2f64.powi(-6);
    let report_data = convergence_study(
        &params,
        &ctrl,
        Scheme::Bim,
        &unit_history(),
        1.0,
        h_ref,
        &[h_ref, 2f64.powi(-4), 2f64.powi(-2)],
        100,
        404,
    )
    .unwrap();
    let entry = &report_data.entries[0];
    report(
        "criterion 4 (coupling zero-error)",
        entry.strong_error == 0.0 && entry.std_error == 0.0,
        &format!(
            "e(h_ref) = {:e}, se = {:e}",
            entry.strong_error, entry.std_error
        ),
    );
}

// Criterion 5: the strong-error protocol (reference h = 2^-11, coarse steps
// 2^(2i-1) * h_ref, 500 paths, T = 1) shows errors decreasing in h within
// two standard errors on adjacent pairs and a positive fitted slope, with
// the balanced slope no worse than the Euler slope minus 0.1 on the same
// randomness.
#[test]
fn criterion_5_strong_convergence() {
    let params = example1();
    let ctrl = ctrl1();
    let history = unit_history();
    let h_ref = 2f64.powi(-11);
    let h_list: Vec<f64> = [-10i32, -8, -6, -4, -2]
        .iter()
        .map(|&e| 2f64.powi(e))
        .collect();
    let seed = 505;

    let bim = convergence_study(
        &params,
        &ctrl,
        Scheme::Bim,
        &history,
        1.0,
        h_ref,
        &h_list,
        500,
        seed,
    )
    .unwrap();
    let euler = convergence_study(
        &params,
        &ctrl,
        Scheme::Euler,
        &history,
        1.0,
        h_ref,
        &h_list,
        500,
        seed,
    )
    .unwrap();

    let mut decreasing = true;
    for pair in bim.entries.windows(2) {
        let (small, big) = (&pair[0], &pair[1]);
        let slack = 2.0 * (small.std_error.powi(2) + big.std_error.powi(2)).sqrt();
        if small.strong_error - big.strong_error >= slack {
            decreasing = false;
        }
    }

    let ok = decreasing && bim.slope > 0.0 && bim.slope >= euler.slope - 0.1;
    report(
        "criterion 5 (strong convergence)",
        ok,
        &format!(
            "bim slope {:.3}, euler slope {:.3}, errors {:?}",
            bim.slope,
            euler.slope,
            bim.entries
                .iter()
                .map(|e| e.strong_error)
                .collect::<Vec<_>>()
        ),
    );
}

// Criterion 6: at h = 0.1 < 2/lambda the tail sample mean sits at or below
// mu within three standard errors, and the analytic bound starts at xi(0)
// and settles within 1e-3 of mu from step ten on.
#[test]
fn criterion_6_mean_bound() {
    let params = example1();
    let ctrl = ctrl1();
    let study = moment_study(
        &params,
        &ctrl,
        Scheme::Bim,
        &unit_history(),
        0.1,
        10.0,
        1000,
        &[],
        606,
    )
    .unwrap();
    let bound = study.mean_bound.as_ref().expect("h = 0.1 < 2/lambda = 0.4");

    let nodes = study.report.times.len();
    let tail_start = (3 * (nodes - 1)) / 4;
    let tail = &study.report.mean[tail_start..];
    let tail_se = &study.report.mean_se[tail_start..];
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let tail_se_mean = tail_se.iter().sum::<f64>() / tail_se.len() as f64;

    let bound_ok = bound.values[0] == 1.0
        && (10..nodes).all(|n| (bound.values[n] - params.mu).abs() < 1e-3)
        && (10..nodes).all(|n| (mean_bound(&params, 0.1, 1.0, n as u32) - params.mu).abs() < 1e-3);
    let mean_ok = tail_mean <= params.mu + 3.0 * tail_se_mean;
    report(
        "criterion 6 (mean bound)",
        bound_ok && mean_ok,
        &format!(
            "tail mean {tail_mean:.4} vs {} + 3*{tail_se_mean:.4}, bound(0) = {}",
            params.mu, bound.values[0]
        ),
    );
}

// Criterion 7: second moments of both reference parameter sets stay bounded
// (running maximum in the first half, or a last-quarter average below the
// global maximum) and the p = 1, 2, 3 moments are finite throughout.
#[test]
fn criterion_7_moment_boundedness() {
    let cases = [
        ("example 1", example1(), ctrl1()),
        ("example 2", example2(), ctrl2()),
    ];
    let mut ok = true;
    let mut details = Vec::new();
    for (label, params, ctrl) in cases {
        let study = moment_study(
            &params,
            &ctrl,
            Scheme::Bim,
            &unit_history(),
            0.1,
            10.0,
            1000,
            &[1.0, 2.0, 3.0],
            707,
        )
        .unwrap();
        let m2 = &study.report.second_moment;
        let nodes = m2.len();
        let (argmax, max) = m2
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &v)| {
                    if v > acc.1 {
                        (i, v)
                    } else {
                        acc
                    }
                },
            );
        let tail = &m2[(3 * (nodes - 1)) / 4..];
        let tail_avg = tail.iter().sum::<f64>() / tail.len() as f64;
        let bounded = argmax <= (nodes - 1) / 2 || tail_avg < max;
        let finite = study
            .report
            .extra_moments
            .iter()
            .all(|(_, trajectory)| trajectory.iter().all(|m| m.is_finite()));
        if !(bounded && finite) {
            ok = false;
        }
        details.push(format!(
            "{label}: max {max:.3} at node {argmax}/{}, tail avg {tail_avg:.3}, finite {finite}",
            nodes - 1
        ));
        // the stiff second set must suppress the bound overlay
        if label == "example 2" && study.mean_bound.is_some() {
            ok = false;
            details.push("bound not suppressed at h >= 2/lambda".into());
        }
    }
    report("criterion 7 (moment boundedness)", ok, &details.join("; "));
}

// Criterion 8: degenerate bond matches exp(-mu*T) exactly with zero standard
// error, the three barrier identities hold exactly, and bond estimates at h
// and h/2 on coupled noise agree within three combined standard errors.
#[test]
fn criterion_8_bond_and_barrier() {
    // deterministic constant-rate bond
    let mut flat = example1();
    flat.sigma = 0.0;
    flat.delta = 0.0;
    flat.beta = 0.0;
    let ctrl_flat = ControlConfig::new(flat.lambda, 0.0);
    let history_mu = InitialHistory::Constant(flat.mu);
    let grid = GridSpec::new(1.0, 0.1, 1.0).unwrap();
    let paths =
        simulate_ensemble(Scheme::Bim, &flat, &ctrl_flat, &history_mu, grid, 1, 808).unwrap();
    let (estimate, se) = bond_price(&paths, 1.0).unwrap();
    let expected = (-flat.mu * 1.0f64).exp();
    let bond_exact_ok = (estimate - expected).abs() <= 1e-12 * expected && se == 0.0;

    // barrier payoff identities on constant paths
    let make = |value: f64| PathRecorder {
        grid,
        values: vec![value; grid.n_steps() + 1],
        negativity_events: 0,
        clamp_applied: 0,
        clamps_from_safe_state: 0,
    };
    let (strike, barrier) = (1.0, 3.0);
    let (below, _) = barrier_option_price(&[make(0.5)], strike, barrier, 1.0).unwrap();
    let mut touching = make(2.0);
    touching.values[3] = barrier + 0.25;
    let (knocked, _) = barrier_option_price(&[touching], strike, barrier, 1.0).unwrap();
    let (mid, _) =
        barrier_option_price(&[make((strike + barrier) / 2.0)], strike, barrier, 1.0).unwrap();
    let barrier_ok = below == 0.0 && knocked == 0.0 && mid == (barrier - strike) / 2.0;

    // coupled refinement stability of the stochastic bond, at a resolution
    // where the Monte Carlo error dominates the residual discretization bias
    let params = example1();
    let ctrl = ctrl1();
    let history = unit_history();
    let grid_fine = GridSpec::new(1.0, 2f64.powi(-8), 1.0).unwrap();
    let mut fine_paths = Vec::with_capacity(1000);
    let mut coarse_paths = Vec::with_capacity(1000);
    for path_index in 0..1000 {
        let table = generate(grid_fine, params.beta, SeedPolicy::new(809, path_index)).unwrap();
        fine_paths
            .push(simulate_path(Scheme::Bim, &params, &ctrl, grid_fine, &table, &history).unwrap());
        let coarse = table.aggregate(2).unwrap();
        coarse_paths.push(
            simulate_path(
                Scheme::Bim,
                &params,
                &ctrl,
                coarse.grid(),
                &coarse,
                &history,
            )
            .unwrap(),
        );
    }
    let (fine_estimate, fine_se) = bond_price(&fine_paths, 1.0).unwrap();
    let (coarse_estimate, coarse_se) = bond_price(&coarse_paths, 1.0).unwrap();
    let gap = (fine_estimate - coarse_estimate).abs();
    let coupled_ok = gap < 3.0 * (fine_se.powi(2) + coarse_se.powi(2)).sqrt();

    report(
        "criterion 8 (bond and barrier estimators)",
        bond_exact_ok && barrier_ok && coupled_ok,
        &format!(
            "bond {estimate:.15} vs {expected:.15} (se {se:e}); barrier identities \
             ({below}, {knocked}, {mid}); refinement gap {gap:.2e} vs se ({fine_se:.2e}, {coarse_se:.2e})"
        ),
    );
}

// Criterion 9: every command writes byte-identical CSV when rerun with the
// same config and seed, whatever the worker count.
#[test]
fn criterion_9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let base = "\
lambda = 5
mu = 0.5
sigma = 1.5
gamma = 0.5
delta = 1
beta = 2
tau = 1
xi = 1
c0 = 10
c2 = 1
n_paths = 50
master_seed = 77
";
    let configs: Vec<(CliCommand, String)> = vec![
        (
            CliCommand::Paths,
            format!("{base}scheme = bim\nT = 2\nh = 0.5\n"),
        ),
        (
            CliCommand::Converge,
            format!("{base}scheme = bim\nT = 1\nh_ref = 0.015625\nh_list = 0.03125,0.0625,0.25\n"),
        ),
        (
            CliCommand::Moments,
            format!("{base}scheme = bim\nT = 2\nh = 0.1\np_list = 1,2,3\n"),
        ),
        (
            CliCommand::Bond,
            format!("{base}scheme = bim\nT = 1\nh = 0.1\n"),
        ),
        (
            CliCommand::Barrier,
            format!("{base}scheme = bim\nT = 1\nh = 0.1\nstrike = 0.5\nbarrier = 2\n"),
        ),
    ];

    let mut ok = true;
    let mut details = Vec::new();
    for (command, text) in &configs {
        let mut bodies = Vec::new();
        for (label, threads) in [("a", 1usize), ("b", 4), ("c", 1)] {
            let mut config: RunConfig = cli::parse_config(text).unwrap();
            let out = dir.path().join(format!("{command}_{label}.csv"));
            config.out = Some(out.to_string_lossy().into_owned());
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| cli::run(*command, &config)).unwrap();
            bodies.push(std::fs::read(&out).unwrap());
        }
        let identical = bodies[0] == bodies[1] && bodies[0] == bodies[2];
        if !identical {
            ok = false;
        }
        details.push(format!(
            "{command}: {}",
            if identical { "stable" } else { "DIVERGED" }
        ));
    }

    // the shipped binary behaves the same way
    let config_path = dir.path().join("paths.conf");
    std::fs::write(&config_path, &configs[0].1).unwrap();
    let mut binary_bodies = Vec::new();
    for (label, threads) in [("x", "1"), ("y", "4")] {
        let out = dir.path().join(format!("bin_{label}.csv"));
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_delay-cir-bim"))
            .args([
                "paths",
                "--config",
                config_path.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--threads",
                threads,
            ])
            .status()
            .unwrap();
        assert!(status.success());
        binary_bodies.push(std::fs::read(&out).unwrap());
    }
    if binary_bodies[0] != binary_bodies[1] {
        ok = false;
        details.push("binary: DIVERGED".into());
    }

    report(
        "criterion 9 (byte-identical reruns)",
        ok,
        &details.join(", "),
    );
}
