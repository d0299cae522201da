//! Bundled study cases.
//!
//! Small grids with hand-checkable physics, used by the test suites and
//! shipped as JSON documents under `cases/` at the workspace root.  Every
//! case keeps the whole bus/branch graph acyclic, so the relaxations are
//! expected to be exact on all of them, and each constructor's doc comment
//! states the intended dispatch story.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::grid::{
    Branch, Bus, BusId, BusKind, Converter, CostCurve, Grid, Injector, Polygon, Side,
};

fn injector(id: usize, bus: usize, capability: Polygon, cost_p: CostCurve) -> Injector {
    Injector {
        id,
        bus: BusId(bus),
        capability,
        cost_p,
        cost_q: CostCurve::default(),
        name: None,
        description: None,
        extra: BTreeMap::new(),
    }
}

fn dc_branch(id: usize, src: usize, dst: usize, g: f64) -> Branch {
    Branch {
        id,
        src: BusId(src),
        dst: BusId(dst),
        ybar: Complex64::new(g, 0.0),
        y_src: Complex64::ZERO,
        y_dst: Complex64::ZERO,
        rho_src: Complex64::ONE,
        rho_dst: Complex64::ONE,
        i_src_ub: 1e3,
        i_dst_ub: 1e3,
        nu_lb: None,
        nu_ub: None,
        delta_lb: None,
        delta_ub: None,
        name: None,
        description: None,
        extra: BTreeMap::new(),
    }
}

fn dc_bus(id: usize) -> Bus {
    Bus { id: BusId(id), kind: BusKind::Dc, ..Bus::default() }
}

/// Two AC buses joined by a lossy line (`ybar = 1 − 8i`), a `0.4 + 0.05i`
/// load at bus 2, a cheap generator (10/p.u.) at bus 1 and an expensive
/// backstop (50/p.u.) at bus 2.  The cheap unit covers load plus roughly
/// half a percent of series loss, voltages ride the 1.1 p.u. upper bound,
/// and the downstream price exceeds 10 by the marginal-loss factor.
pub fn case2_ac() -> Grid {
    let mut grid = Grid { base_mva: 100.0, ..Grid::default() };
    grid.name = Some("case2-ac".to_string());
    grid.buses.push(Bus { id: BusId(1), ..Bus::default() });
    grid.buses.push(Bus {
        id: BusId(2),
        load: Complex64::new(0.4, 0.05),
        ..Bus::default()
    });
    grid.branches.push(Branch {
        id: 1,
        src: BusId(1),
        dst: BusId(2),
        ybar: Complex64::new(1.0, -8.0),
        ..Branch::default()
    });
    grid.injectors.push(injector(1, 1, Polygon::boxed(0.0, 5.0, -5.0, 5.0), CostCurve::linear(10.0)));
    grid.injectors.push(injector(2, 2, Polygon::boxed(0.0, 5.0, -5.0, 5.0), CostCurve::linear(50.0)));
    grid
}

/// [`case2_ac`] with the line ampacity tightened to 0.25 p.u. so the branch
/// congests: the cheap unit can no longer serve the whole load and the
/// expensive bus-2 generator sets the local price near its 50/p.u. slope.
pub fn case2_congested() -> Grid {
    let mut grid = case2_ac();
    grid.name = Some("case2-congested".to_string());
    grid.branches[0].i_src_ub = 0.25;
    grid.branches[0].i_dst_ub = 0.25;
    grid
}

/// Two-bus DC link: conductance 10 p.u., a 0.3 p.u. load behind it, cheap
/// generation (10/p.u.) at bus 1 against a 50/p.u. backstop at the load.
/// The cheap unit serves the load plus `P²/(g·|V|²)` of ohmic loss.
pub fn case2_dc() -> Grid {
    let mut grid = Grid { base_mva: 100.0, ..Grid::default() };
    grid.name = Some("case2-dc".to_string());
    grid.buses.push(dc_bus(1));
    let mut load_bus = dc_bus(2);
    load_bus.load = Complex64::new(0.3, 0.0);
    grid.buses.push(load_bus);
    grid.branches.push(dc_branch(1, 1, 2, 10.0));
    grid.injectors.push(injector(1, 1, Polygon::active_interval(0.0, 2.0), CostCurve::linear(10.0)));
    grid.injectors.push(injector(2, 2, Polygon::active_interval(0.0, 2.0), CostCurve::linear(50.0)));
    grid
}

/// Three AC buses on a path with purely reactive lines (`−50i`), narrow
/// voltage (±1%) and angle (±0.03 rad) windows, loads at buses 2 and 3,
/// and generators priced 10/25/40.  The cheap bus-1 unit serves everything
/// (negligible loss), so the objective sits near `10 × 0.7`.  The narrow
/// windows keep a brute-force sweep over the state space tractable.
pub fn case3_ac() -> Grid {
    let mut grid = Grid { base_mva: 100.0, ..Grid::default() };
    grid.name = Some("case3-ac".to_string());
    for (id, load) in [
        (1, Complex64::ZERO),
        (2, Complex64::new(0.3, 0.02)),
        (3, Complex64::new(0.4, 0.03)),
    ] {
        grid.buses.push(Bus {
            id: BusId(id),
            v_lb: 0.99,
            v_ub: 1.01,
            load,
            ..Bus::default()
        });
    }
    for (id, src, dst) in [(1, 1, 2), (2, 2, 3)] {
        grid.branches.push(Branch {
            id,
            src: BusId(src),
            dst: BusId(dst),
            ybar: Complex64::new(0.0, -50.0),
            nu_lb: Some(-0.03),
            nu_ub: Some(0.03),
            delta_lb: Some(-0.03),
            delta_ub: Some(0.03),
            ..Branch::default()
        });
    }
    for (j, slope) in [(1, 10.0), (2, 25.0), (3, 40.0)] {
        grid.injectors.push(injector(j, j, Polygon::boxed(0.0, 2.0, -1.0, 1.0), CostCurve::linear(slope)));
    }
    grid
}

/// Three AC buses on a path with a tapped, phase-shifting transformer on
/// the first span (ratio 1.02, shift 0.03 rad) and an ordinary line on the
/// second.  Cheap generation at bus 1 (12/p.u.) serves both loads against
/// a 35/p.u. unit at bus 3.
pub fn case3_tap() -> Grid {
    let mut grid = Grid { base_mva: 100.0, ..Grid::default() };
    grid.name = Some("case3-tap".to_string());
    for (id, load) in [
        (1, Complex64::ZERO),
        (2, Complex64::new(0.25, 0.05)),
        (3, Complex64::new(0.3, 0.04)),
    ] {
        grid.buses.push(Bus {
            id: BusId(id),
            v_lb: 0.95,
            v_ub: 1.05,
            load,
            ..Bus::default()
        });
    }
    grid.branches.push(Branch {
        id: 1,
        src: BusId(1),
        dst: BusId(2),
        ybar: Complex64::new(2.0, -20.0),
        y_src: Complex64::new(0.0, 0.01),
        y_dst: Complex64::new(0.0, 0.01),
        rho_src: Complex64::from_polar(1.0 / 1.02, -0.03),
        nu_lb: Some(-0.15),
        nu_ub: Some(0.15),
        delta_lb: Some(-0.5),
        delta_ub: Some(0.5),
        ..Branch::default()
    });
    grid.branches.push(Branch {
        id: 2,
        src: BusId(2),
        dst: BusId(3),
        ybar: Complex64::new(1.5, -12.0),
        nu_lb: Some(-0.15),
        nu_ub: Some(0.15),
        delta_lb: Some(-0.5),
        delta_ub: Some(0.5),
        ..Branch::default()
    });
    grid.injectors.push(injector(1, 1, Polygon::boxed(0.0, 2.0, -1.0, 1.0), CostCurve::linear(12.0)));
    grid.injectors.push(injector(2, 3, Polygon::boxed(0.0, 1.5, -1.0, 1.0), CostCurve::linear(35.0)));
    grid
}

/// Point-to-point HVDC between two AC subgrids: cheap generation (10/p.u.)
/// on the first island exports over the DC link to an island whose own
/// unit costs 45/p.u.  Converter losses are 2% per direction plus 0.5 MW
/// static, so the import price lands a few percent above 10.
pub fn case4_hybrid_p2p() -> Grid {
    let mut grid = Grid { base_mva: 100.0, ..Grid::default() };
    grid.name = Some("case4-hybrid-p2p".to_string());
    grid.buses.push(Bus { id: BusId(1), ..Bus::default() });
    grid.buses.push(Bus { id: BusId(2), load: Complex64::new(0.35, 0.05), ..Bus::default() });
    grid.buses.push(dc_bus(3));
    grid.buses.push(dc_bus(4));
    grid.buses.push(Bus { id: BusId(5), load: Complex64::new(0.25, 0.03), ..Bus::default() });
    grid.branches.push(Branch {
        id: 1,
        src: BusId(1),
        dst: BusId(2),
        ybar: Complex64::new(1.2, -9.0),
        y_src: Complex64::new(0.0, 0.01),
        y_dst: Complex64::new(0.0, 0.01),
        nu_lb: Some(-0.25),
        nu_ub: Some(0.25),
        ..Branch::default()
    });
    grid.branches.push(dc_branch(2, 3, 4, 12.0));
    for (id, src, dst) in [(1, 2, 3), (2, 5, 4)] {
        grid.converters.push(Converter {
            id,
            src: BusId(src),
            dst: BusId(dst),
            eta_fwd: 0.02,
            eta_bwd: 0.02,
            static_loss_mw: 0.5,
            loss_side: Side::Src,
            cap_src: Polygon::boxed(-1.0, 1.0, -0.5, 0.5),
            cap_dst: Polygon::active_interval(-1.0, 1.0),
            name: None,
            description: None,
            extra: BTreeMap::new(),
        });
    }
    grid.injectors.push(injector(1, 1, Polygon::boxed(0.0, 3.0, -2.0, 2.0), CostCurve::linear(10.0)));
    grid.injectors.push(injector(2, 5, Polygon::boxed(0.0, 2.0, -1.0, 1.0), CostCurve::linear(45.0)));
    grid
}

/// Three-terminal radial HVDC: single-bus AC islands priced 8, 30, and
/// 60/p.u. meet at a DC star (terminal 4 doubles as the hub; legs to 5 and
/// 6).  The cheap island exports to both others, so the whole dispatch
/// rides on the multi-terminal DC system.
pub fn case5_mt_hvdc() -> Grid {
    let mut grid = Grid { base_mva: 100.0, ..Grid::default() };
    grid.name = Some("case5-mt-hvdc".to_string());
    grid.buses.push(Bus { id: BusId(1), load: Complex64::new(0.1, 0.01), ..Bus::default() });
    grid.buses.push(Bus { id: BusId(2), load: Complex64::new(0.3, 0.04), ..Bus::default() });
    grid.buses.push(Bus { id: BusId(3), load: Complex64::new(0.25, 0.02), ..Bus::default() });
    grid.buses.push(dc_bus(4));
    grid.buses.push(dc_bus(5));
    grid.buses.push(dc_bus(6));
    grid.branches.push(dc_branch(1, 4, 5, 15.0));
    grid.branches.push(dc_branch(2, 4, 6, 15.0));
    for (id, src, dst) in [(1, 1, 4), (2, 2, 5), (3, 3, 6)] {
        grid.converters.push(Converter {
            id,
            src: BusId(src),
            dst: BusId(dst),
            eta_fwd: 0.015,
            eta_bwd: 0.015,
            static_loss_mw: 0.3,
            loss_side: Side::Src,
            cap_src: Polygon::boxed(-1.5, 1.5, -0.5, 0.5),
            cap_dst: Polygon::active_interval(-1.5, 1.5),
            name: None,
            description: None,
            extra: BTreeMap::new(),
        });
    }
    grid.injectors.push(injector(1, 1, Polygon::boxed(0.0, 3.0, -2.0, 2.0), CostCurve::linear(8.0)));
    grid.injectors.push(injector(2, 2, Polygon::boxed(0.0, 2.0, -1.0, 1.0), CostCurve::linear(30.0)));
    grid.injectors.push(injector(3, 3, Polygon::boxed(0.0, 2.0, -1.0, 1.0), CostCurve::linear(60.0)));
    grid
}

/// Adversarial mode-complementarity case.  A must-run unit at bus 1 earns
/// 5/p.u. (negative cost) while disposal through the co-located dump
/// injector costs 3/p.u.; the back-to-back converter to the load island
/// has asymmetric losses (5% forward, 50% backward).  Running both
/// converter directions at once burns surplus power for free, so the
/// relaxation prefers that physically meaningless point — the canonical
/// converter loss-error situation, detectable via ϑ and repaired by
/// pinning the dominant direction and re-solving.
pub fn case_adv() -> Grid {
    let mut grid = Grid { base_mva: 100.0, ..Grid::default() };
    grid.name = Some("case-adv".to_string());
    grid.buses.push(Bus { id: BusId(1), ..Bus::default() });
    grid.buses.push(Bus { id: BusId(2), load: Complex64::new(0.3, 0.0), ..Bus::default() });
    grid.converters.push(Converter {
        id: 1,
        src: BusId(1),
        dst: BusId(2),
        eta_fwd: 0.05,
        eta_bwd: 0.5,
        static_loss_mw: 0.0,
        loss_side: Side::Src,
        cap_src: Polygon::boxed(-1.0, 1.0, -0.5, 0.5),
        cap_dst: Polygon::boxed(-1.0, 1.0, -0.5, 0.5),
        name: None,
        description: None,
        extra: BTreeMap::new(),
    });
    grid.injectors.push(injector(
        1,
        1,
        Polygon::boxed(0.8, 1.0, -0.5, 0.5),
        CostCurve::linear(-5.0),
    ));
    grid.injectors.push(injector(
        2,
        1,
        Polygon::boxed(-2.0, 0.0, -0.5, 0.5),
        CostCurve { points: vec![(-2.0, 6.0), (0.0, 0.0)] },
    ));
    grid.injectors.push(injector(3, 2, Polygon::boxed(0.0, 2.0, -1.0, 1.0), CostCurve::linear(10.0)));
    grid
}

/// Every bundled case with its document stem, in a stable order.
pub fn bundled() -> Vec<(&'static str, Grid)> {
    vec![
        ("case2_ac", case2_ac()),
        ("case2_congested", case2_congested()),
        ("case2_dc", case2_dc()),
        ("case3_ac", case3_ac()),
        ("case3_tap", case3_tap()),
        ("case4_hybrid_p2p", case4_hybrid_p2p()),
        ("case5_mt_hvdc", case5_mt_hvdc()),
        ("case_adv", case_adv()),
    ]
}
