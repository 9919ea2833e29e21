use nonsmooth_lb::harness::{
    cap_probability_experiment, run_cell, AlgoSelection, CellSpec, Execution,
};
use nonsmooth_lb::seeds;
use nonsmooth_lb::vecspace::{sample_haar_orthonormal, sample_unit_sphere};
use nonsmooth_lb::AlgorithmKind;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::beta::beta_reg;

/// Pearson statistic of `counts` against equal expected cell sizes.
fn chi_square_uniform(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let expected = n as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum()
}

fn chi_square_p_value(stat: f64, cells: usize) -> f64 {
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn circle_angles_are_uniform() {
    let mut rng = seeds::stream(11);
    let cells = 36;
    let mut counts = vec![0usize; cells];
    for _ in 0..36_000 {
        let u = sample_unit_sphere(2, &mut rng);
        let angle = u[1].atan2(u[0]) + std::f64::consts::PI;
        let cell = ((angle / std::f64::consts::TAU) * cells as f64) as usize;
        counts[cell.min(cells - 1)] += 1;
    }
    let p = chi_square_p_value(chi_square_uniform(&counts), cells);
    assert!(p > 1e-3, "p = {p}, counts = {counts:?}");
}

#[test]
fn haar_vectors_have_isotropic_coordinates() {
    // Each coordinate of each Haar vector has mean 0 and variance 1/d, and
    // every vector is equally likely to lean towards any axis.
    let (d, m, draws) = (6usize, 3usize, 20_000usize);
    let mut rng = seeds::stream(5);
    let mut second = vec![vec![0.0f64; d]; m];
    let mut argmax = vec![0usize; d];
    for _ in 0..draws {
        let basis = sample_haar_orthonormal(d, m, &mut rng).unwrap();
        for (j, v) in basis.vectors().iter().enumerate() {
            for i in 0..d {
                second[j][i] += v[i] * v[i];
            }
        }
        let last = basis.get(m - 1);
        let top = (0..d)
            .max_by(|&a, &b| last[a].abs().total_cmp(&last[b].abs()))
            .unwrap();
        argmax[top] += 1;
    }
    for row in &second {
        for &s in row {
            let var = s / draws as f64;
            assert!((var - 1.0 / d as f64).abs() < 0.01, "{var}");
        }
    }
    let p = chi_square_p_value(chi_square_uniform(&argmax), d);
    assert!(p > 1e-3, "p = {p}, counts = {argmax:?}");
}

#[test]
fn single_piece_event_matches_the_cap_integral() {
    // k = 1: E is |<u, v_1>| < 1/4 for a uniform u, whose law is that of
    // the first coordinate: P = I_{1/16}(1/2, (d-1)/2).
    let d = 16;
    let trials = 4000;
    let cell = CellSpec {
        k: 1,
        d,
        lipschitz: 1.0,
        radius: 1.0,
        budget: 1,
        trials,
        base_seed: 21,
    };
    let row = run_cell(&cell, "random-search".into(), |_| AlgorithmKind::RandomSearch, Execution::Parallel)
        .unwrap();
    let exact = beta_reg(0.5, (d as f64 - 1.0) / 2.0, 1.0 / 16.0);
    let sd = (exact * (1.0 - exact) / trials as f64).sqrt();
    assert!((row.p_e_hat - exact).abs() < 4.0 * sd, "{} vs {exact}", row.p_e_hat);
    assert!(row.p_e_ci_lo <= exact && exact <= row.p_e_ci_hi);
}

#[test]
fn quarter_circle_caps_hold_half_the_circle() {
    let r = cap_probability_experiment(2, 0.5f64.sqrt(), 40_000, 3, Execution::Parallel).unwrap();
    assert!((r.empirical - 0.5).abs() < 0.01, "{}", r.empirical);
}

#[test]
fn cap_matches_the_beta_tail_in_moderate_dimension() {
    let (d, tau, n) = (50usize, 0.2f64, 50_000usize);
    let r = cap_probability_experiment(d, tau, n, 8, Execution::Parallel).unwrap();
    let exact = 1.0 - beta_reg(0.5, (d as f64 - 1.0) / 2.0, tau * tau);
    let sd = (exact * (1.0 - exact) / n as f64).sqrt();
    assert!((r.empirical - exact).abs() < 4.0 * sd, "{} vs {exact}", r.empirical);
    assert!(r.empirical <= r.analytic_bound);
}

#[test]
fn event_probability_grows_with_dimension() {
    let mut last = -1.0;
    for d in [8usize, 64, 4096] {
        let cell = CellSpec {
            k: 2,
            d,
            lipschitz: 1.0,
            radius: 1.0,
            budget: 2,
            trials: 400,
            base_seed: 2,
        };
        let row = nonsmooth_lb::harness::run_selection(
            &cell,
            AlgoSelection::One(AlgorithmKind::RandomSearch),
            Execution::Parallel,
        )
        .unwrap()
        .remove(0);
        assert!(row.p_e_ci_hi >= last, "d={d}: {} after {last}", row.p_e_hat);
        last = row.p_e_hat;
    }
    assert!(last > 0.9);
}
