//! Reference values computed by the independent oracles, for checking tests
//! and runs by eye.

use std::fmt::Write;

use smirl_core::oracle;

use crate::config::ExperimentConfig;

/// One `name = value` line per reference quantity.
pub fn report(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let mut line = |name: &str, v: String| writeln!(s, "{name} = {v}").unwrap();
    let fmt = |xs: &[f64]| {
        xs.iter()
            .map(|x| format!("{x:.12}"))
            .collect::<Vec<_>>()
            .join(", ")
    };

    let e = &cfg.env;
    let uniform = vec![e.p_max / 2.0; e.baseline.len()];
    let d0 = oracle::elastic_demand(&e.baseline, &uniform, e.elasticity);
    line("demand_at_uniform_price", format!("[{}]", fmt(&d0)));
    line(
        "energy_reward_at_uniform_price",
        format!("{:.12}", -oracle::dot(&d0, &e.grid).ln()),
    );

    // Free hours where the grid is cheapest, maximum price elsewhere.
    let g_min = e.grid.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = e
        .grid
        .iter()
        .map(|g| if *g == g_min { 0.0 } else { e.p_max })
        .collect();
    let d1 = oracle::elastic_demand(&e.baseline, &shifted, e.elasticity);
    line("demand_at_cheapest_hours_free", format!("[{}]", fmt(&d1)));
    line(
        "energy_reward_at_cheapest_hours_free",
        format!("{:.12}", -oracle::dot(&d1, &e.grid).ln()),
    );
    let total: f64 = e.baseline.iter().sum();
    line(
        "energy_reward_upper_bound",
        format!("{:.12}", -(total * g_min).ln()),
    );

    line(
        "single_peak_demand",
        format!("[{}]", fmt(&oracle::single_peak_demand())),
    );
    line(
        "unit_gaussian_entropy",
        format!("{:.12}", oracle::gaussian_entropy(1.0)),
    );
    line(
        "constant_window_entropy_10d",
        format!("{:.12}", 10.0 * oracle::gaussian_entropy(1e-12)),
    );
    line(
        "unit_log_density_at_mean",
        format!("{:.12}", oracle::gaussian_log_pdf(0.0, 0.0, 1.0)),
    );

    let (mean, sd) = oracle::simplex_coordinate_moments(10, cfg.sampler.norm_target);
    line("simplex_coordinate_mean", format!("{mean:.12}"));
    line("simplex_coordinate_std", format!("{sd:.12}"));
    line(
        "simplex_mean_3se_band_1e5",
        format!("{:.12}", 3.0 * sd / (1e5f64).sqrt()),
    );
    line(
        "ks_critical_0.01_1e5_vs_1e5",
        format!("{:.12}", oracle::ks_critical_value(0.01, 100_000, 100_000)),
    );

    let (g, l) = (cfg.ppo.gamma, cfg.ppo.gae_lambda);
    let adv = oracle::gae_by_summation(
        &[1.0, 0.0, 1.0],
        &[0.5, 0.5, 0.5],
        &[false, false, true],
        0.0,
        g,
        l,
    );
    line("gae_three_step_example", format!("[{}]", fmt(&adv)));
    s
}
