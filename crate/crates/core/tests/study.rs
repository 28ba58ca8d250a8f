use bsmix::em::EmConfig;
use bsmix::study::{run_cell, run_grid, Scenario};
use bsmix::InitStrategy;

#[test]
fn single_cell_grid_equals_run_cell() {
    let cfg = EmConfig::default();
    let sc = Scenario::scenario2();
    let grid = run_grid(
        std::slice::from_ref(&sc),
        &[200],
        &[InitStrategy::KBumps],
        20,
        &cfg,
        11,
    )
    .unwrap();
    let cell = run_cell(&sc, 200, 20, InitStrategy::KBumps, &cfg, 11).unwrap();
    assert_eq!(grid, vec![cell]);
}

#[test]
fn strategy_order_does_not_change_cells() {
    let cfg = EmConfig::default();
    let sc = [Scenario::scenario1()];
    let fwd = run_grid(
        &sc,
        &[150],
        &[InitStrategy::KMeans, InitStrategy::KBumps],
        15,
        &cfg,
        4,
    )
    .unwrap();
    let rev = run_grid(
        &sc,
        &[150],
        &[InitStrategy::KBumps, InitStrategy::KMeans],
        15,
        &cfg,
        4,
    )
    .unwrap();
    assert_eq!(fwd[0], rev[1]);
    assert_eq!(fwd[1], rev[0]);
}

#[test]
fn rmse_shrinks_with_sample_size() {
    let cfg = EmConfig::default();
    let sc = Scenario::scenario1();
    let cells: Vec<_> = [100, 500, 1000]
        .iter()
        .map(|&n| run_cell(&sc, n, 200, InitStrategy::KBumps, &cfg, 2024).unwrap())
        .collect();
    for i in 0..cells[0].params.len() {
        let r: Vec<f64> = cells.iter().map(|c| c.params[i].rmse).collect();
        assert!(
            r[0] > r[1] && r[1] > r[2],
            "{}: {r:?}",
            cells[0].params[i].name
        );
    }
}

#[test]
fn kbumps_small_sample_bias_is_competitive() {
    let cfg = EmConfig::default();
    let cells = run_grid(
        &[Scenario::scenario1()],
        &[75],
        &InitStrategy::ALL,
        200,
        &cfg,
        75,
    )
    .unwrap();
    let bias = |s: InitStrategy| {
        cells
            .iter()
            .find(|c| c.strategy == s.as_str())
            .unwrap()
            .param("alpha1")
            .unwrap()
            .bias
            .abs()
    };
    let best_other = bias(InitStrategy::KMeans).min(bias(InitStrategy::KMedoids));
    assert!(
        bias(InitStrategy::KBumps) <= 1.5 * best_other,
        "kbumps {} vs best competitor {best_other}",
        bias(InitStrategy::KBumps)
    );
}
