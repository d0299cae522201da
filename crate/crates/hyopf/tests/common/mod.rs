//! Shared fixtures for the integration suites: randomized grid generation
//! with independently checkable structure.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use hyopf::grid::{
    Branch, Bus, BusId, BusKind, Converter, CostCurve, Grid, Injector, Polygon, Side,
};

/// A random structurally valid hybrid grid: a meshed AC core, an optional
/// radial DC extension behind a converter, and a scattering of injectors,
/// names, and free-form annotations.  Every draw passes `Grid::validate`.
pub fn random_grid(rng: &mut ChaCha8Rng) -> Grid {
    let n_ac = rng.random_range(2..8usize);
    let n_dc = if rng.random::<f64>() < 0.5 { rng.random_range(2..5usize) } else { 0 };
    let n = n_ac + n_dc;

    let mut grid = Grid { base_mva: 100.0, ..Grid::default() };

    for i in 0..n {
        let dc = i >= n_ac;
        grid.buses.push(Bus {
            id: BusId(i + 1),
            kind: if dc { BusKind::Dc } else { BusKind::Ac },
            y_sh: if dc || rng.random::<f64>() < 0.6 {
                Complex64::ZERO
            } else {
                Complex64::new(rng.random_range(0.0..0.02), rng.random_range(-0.1..0.3))
            },
            v_lb: rng.random_range(0.85..0.95),
            v_ub: rng.random_range(1.05..1.15),
            load: if dc {
                Complex64::new(rng.random_range(0.0..0.3), 0.0)
            } else {
                Complex64::new(rng.random_range(0.0..0.5), rng.random_range(-0.1..0.2))
            },
            name: maybe_name(rng, "bus", i + 1),
            description: None,
            extra: maybe_extra(rng),
        });
    }

    // AC spanning tree plus a few chords (meshes are fine on the AC side).
    let mut ends: Vec<(usize, usize)> = (1..n_ac).map(|i| (rng.random_range(0..i), i)).collect();
    for _ in 0..rng.random_range(0..3usize) {
        if n_ac >= 2 {
            let a = rng.random_range(0..n_ac - 1);
            let b = rng.random_range(a + 1..n_ac);
            ends.push((a, b));
        }
    }
    for &(a, b) in &ends {
        grid.branches.push(random_ac_branch(rng, grid.branches.len() + 1, a, b));
    }

    // The DC side must stay radial: connect bus i to a random predecessor.
    for i in n_ac + 1..n {
        let parent = rng.random_range(n_ac..i);
        grid.branches.push(Branch {
            id: grid.branches.len() + 1,
            src: BusId(parent + 1),
            dst: BusId(i + 1),
            ybar: Complex64::new(rng.random_range(2.0..20.0), 0.0),
            y_src: Complex64::ZERO,
            y_dst: Complex64::ZERO,
            rho_src: Complex64::ONE,
            rho_dst: Complex64::ONE,
            i_src_ub: rng.random_range(0.5..3.0),
            i_dst_ub: rng.random_range(0.5..3.0),
            nu_lb: None,
            nu_ub: None,
            delta_lb: None,
            delta_ub: None,
            name: None,
            description: None,
            extra: BTreeMap::new(),
        });
    }

    // One converter couples the subgrids when a DC side exists.
    if n_dc > 0 {
        let limit = rng.random_range(0.5..2.0);
        grid.converters.push(Converter {
            id: 1,
            src: BusId(rng.random_range(0..n_ac) + 1),
            dst: BusId(n_ac + 1),
            eta_fwd: rng.random_range(0.0..0.15),
            eta_bwd: rng.random_range(0.0..0.15),
            static_loss_mw: rng.random_range(0.0..2.0),
            loss_side: if rng.random::<bool>() { Side::Src } else { Side::Dst },
            cap_src: Polygon::boxed(-limit, limit, -limit / 2.0, limit / 2.0),
            cap_dst: Polygon::active_interval(-limit, limit),
            name: maybe_name(rng, "hvdc", 1),
            description: None,
            extra: maybe_extra(rng),
        });
    }

    for j in 0..rng.random_range(1..4usize) {
        let bus = rng.random_range(0..n);
        let dc = grid.buses[bus].kind == BusKind::Dc;
        let p_max = rng.random_range(0.5..3.0);
        grid.injectors.push(Injector {
            id: j + 1,
            bus: BusId(bus + 1),
            capability: if dc {
                Polygon::active_interval(0.0, p_max)
            } else {
                Polygon::boxed(0.0, p_max, -p_max / 2.0, p_max / 2.0)
            },
            cost_p: random_cost(rng, p_max),
            cost_q: CostCurve::default(),
            name: maybe_name(rng, "gen", j + 1),
            description: None,
            extra: maybe_extra(rng),
        });
    }

    grid.name = maybe_name(rng, "grid", 0);
    grid
}

fn random_ac_branch(rng: &mut ChaCha8Rng, id: usize, a: usize, b: usize) -> Branch {
    let shunt = Complex64::new(0.0, rng.random_range(0.0..0.15));
    Branch {
        id,
        src: BusId(a + 1),
        dst: BusId(b + 1),
        ybar: Complex64::new(rng.random_range(0.1..2.0), rng.random_range(-15.0..-1.0)),
        y_src: shunt,
        y_dst: shunt,
        rho_src: if rng.random::<f64>() < 0.3 {
            Complex64::from_polar(rng.random_range(0.9..1.1), rng.random_range(-0.2..0.2))
        } else {
            Complex64::ONE
        },
        rho_dst: Complex64::ONE,
        i_src_ub: rng.random_range(0.5..3.0),
        i_dst_ub: rng.random_range(0.5..3.0),
        nu_lb: Some(rng.random_range(-0.3..-0.1)),
        nu_ub: Some(rng.random_range(0.1..0.3)),
        delta_lb: Some(rng.random_range(-0.9..-0.2)),
        delta_ub: Some(rng.random_range(0.2..0.9)),
        name: None,
        description: None,
        extra: BTreeMap::new(),
    }
}

fn random_cost(rng: &mut ChaCha8Rng, p_max: f64) -> CostCurve {
    match rng.random_range(0..3) {
        0 => CostCurve::default(),
        1 => CostCurve::linear(rng.random_range(5.0..50.0)),
        _ => {
            // Convex piecewise-linear curve: accumulate increasing slopes.
            let mut points = vec![(0.0, 0.0)];
            let mut slope = rng.random_range(5.0..20.0);
            let mut x = 0.0;
            let mut y = 0.0;
            for _ in 0..rng.random_range(1..4usize) {
                let dx = p_max * rng.random_range(0.2..0.5);
                x += dx;
                y += slope * dx;
                points.push((x, y));
                slope += rng.random_range(0.0..15.0);
            }
            CostCurve { points }
        }
    }
}

fn maybe_name(rng: &mut ChaCha8Rng, stem: &str, index: usize) -> Option<String> {
    (rng.random::<f64>() < 0.4).then(|| format!("{stem}-{index}"))
}

fn maybe_extra(rng: &mut ChaCha8Rng) -> BTreeMap<String, serde_json::Value> {
    let mut extra = BTreeMap::new();
    if rng.random::<f64>() < 0.3 {
        extra.insert("zone".to_string(), serde_json::json!(rng.random_range(1..5)));
    }
    if rng.random::<f64>() < 0.2 {
        extra.insert(
            "tags".to_string(),
            serde_json::json!(["planning", format!("area-{}", rng.random_range(1..9))]),
        );
    }
    extra
}
