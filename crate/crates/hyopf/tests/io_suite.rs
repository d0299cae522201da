//! End-to-end serialization checks: document round trips on randomized
//! grids and the MATPOWER-to-document import path.

mod common;

use hyopf::io::{parse_matpower, read_document, to_grid, write_document, DEFAULT_COST_SAMPLES};
use rand::SeedableRng;

#[test]
fn round_trip_law_holds_on_randomized_grids() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let grid = common::random_grid(&mut rng);
        let report = grid.validate();
        assert!(
            report.is_valid(),
            "case {case}: generator produced an invalid grid: {:?}",
            report.violations
        );

        let text = write_document(&grid);
        let back = read_document(&text).unwrap_or_else(|e| panic!("case {case}: {e}"));
        assert_eq!(back, grid, "case {case}: round trip must be the identity");

        // Writing the read-back grid must reproduce the text verbatim.
        assert_eq!(write_document(&back), text, "case {case}: text must be stable");
    }
}

#[test]
fn matpower_import_feeds_the_document_pipeline() {
    let source = r#"
function mpc = case3
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
    1  3  0   0   0  0  1  1  0  230  1  1.1  0.9;
    2  1  90  30  0  0  1  1  0  230  1  1.1  0.9;
    3  1  60  10  0  2  1  1  0  230  1  1.1  0.9;
];
mpc.gen = [
    1  0  0  80  -80  1  100  1  250  0;
    3  0  0  50  -50  1  100  1  120  0;
];
mpc.branch = [
    1  2  0.02  0.2   0.04  250  0  0  0     0  1  -25  25;
    2  3  0.01  0.1   0.02  250  0  0  0     0  1  -25  25;
    1  3  0.03  0.25  0.0   180  0  0  1.02  2  1    0   0;
];
mpc.gencost = [
    2  0  0  3  0.02  15  0;
    2  0  0  2  32  0;
];
"#;

    let case = parse_matpower(source).expect("case parses");
    let grid = to_grid(&case, DEFAULT_COST_SAMPLES).expect("case converts");

    let report = grid.validate();
    assert!(report.is_valid(), "imported grid is invalid: {:?}", report.violations);
    assert_eq!(report.subgrid_count, 1);
    assert!(report.dc_radial);

    assert_eq!(grid.buses.len(), 3);
    assert_eq!(grid.branches.len(), 3);
    assert_eq!(grid.injectors.len(), 2);

    // The quadratic cost was sampled into ten breakpoints, the linear one
    // into a two-point line; both in per-unit abscissae.
    assert_eq!(grid.injectors[0].cost_p.points.len(), DEFAULT_COST_SAMPLES);
    assert_eq!(grid.injectors[1].cost_p.points.len(), DEFAULT_COST_SAMPLES);
    assert!((grid.injectors[0].cost_p.points.last().unwrap().0 - 2.5).abs() < 1e-12);

    let text = write_document(&grid);
    let back = read_document(&text).expect("document reads back");
    assert_eq!(back, grid);
}
