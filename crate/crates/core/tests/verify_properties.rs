use varshot_core::seed::rng_for;
use varshot_core::verify::{
    alpha_grid, closed_form_alpha, estimate_c1_c2, oracle_alpha, LinearRegression,
};

const THETA: [f64; 2] = [0.0, 0.0];
const BETA: f64 = 0.5;

#[test]
fn c1_estimate_is_stable_when_doubling_points_per_task() {
    let fam = LinearRegression::reference();
    let a = estimate_c1_c2(&fam, &THETA, 10_000, 5, &mut rng_for(&[41])).unwrap();
    let b = estimate_c1_c2(&fam, &THETA, 10_000, 10, &mut rng_for(&[42])).unwrap();
    let se = (a.c1_se.powi(2) + b.c1_se.powi(2)).sqrt();
    assert!((a.c1 - b.c1).abs() < 3.0 * se, "{a:?} vs {b:?}");
}

#[test]
fn oracle_rate_grows_with_shots() {
    let fam = LinearRegression::reference();
    let grid = alpha_grid(BETA, 1001);
    let rates: Vec<f64> = [1, 2, 3, 5, 8, 10]
        .iter()
        .map(|&s| {
            oracle_alpha(
                &fam,
                &THETA,
                BETA,
                s,
                &grid,
                20_000,
                &mut rng_for(&[43, s as u64]),
            )
            .unwrap()
            .alpha
        })
        .collect();
    assert!(rates.windows(2).all(|w| w[0] <= w[1]), "{rates:?}");
}

#[test]
fn sampled_curve_is_convex_at_its_minimum() {
    let fam = LinearRegression::reference();
    let grid = alpha_grid(BETA, 1001);
    for s in [1, 5] {
        let o = oracle_alpha(
            &fam,
            &THETA,
            BETA,
            s,
            &grid,
            10_000,
            &mut rng_for(&[44, s as u64]),
        )
        .unwrap();
        assert!(o.curve.local_curvature(40) > 0.0);
    }
}

#[test]
fn many_shots_approach_beta() {
    let fam = LinearRegression::reference();
    let grid = alpha_grid(BETA, 1001);
    let o = oracle_alpha(
        &fam,
        &THETA,
        BETA,
        10_000,
        &grid,
        10_000,
        &mut rng_for(&[45]),
    )
    .unwrap();
    assert!((o.alpha - BETA).abs() < 0.02 * BETA, "{}", o.alpha);
    let (c1, c2) = fam.constants(&THETA).unwrap();
    assert!((closed_form_alpha(c1, c2, BETA, 10_000) - BETA).abs() < 0.02 * BETA);
}
