//! Hybrid AC/DC network model: buses, branches, converters, injectors, and
//! the structural validation that downstream builders rely on.
//!
//! All electrical quantities are stored in per-unit on the grid's base power.
//! A `Grid` is plain data; [`Grid::validate`] reports every rule violation
//! instead of failing fast, and the solvers refuse grids whose report is not
//! clean.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One-based bus identifier. Bus ids must form the contiguous range `1..=N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub usize);

impl BusId {
    /// Zero-based index into per-bus arrays.
    pub fn index(self) -> usize {
        self.0 - 1
    }
}

impl std::fmt::Display for BusId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// AC or DC side of the bus partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Ac,
    Dc,
}

/// Terminal selector for converter-side data (static loss placement).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Src,
    Dst,
}

impl Default for Side {
    fn default() -> Self {
        Side::Src
    }
}

/// Half-space `a_p·P + a_q·Q ≤ b` in the terminal (P, Q) plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub a_p: f64,
    pub a_q: f64,
    pub b: f64,
}

/// Capability region: intersection of up to eight half-spaces, required to be
/// nonempty and bounded.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon {
    pub halfspaces: Vec<Halfspace>,
}

/// Axis-aligned enclosure of a polygon, from its vertex set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extent {
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
}

const GEOM_TOL: f64 = 1e-9;

impl Polygon {
    /// Axis-aligned box `[p_min, p_max] × [q_min, q_max]`.
    pub fn boxed(p_min: f64, p_max: f64, q_min: f64, q_max: f64) -> Self {
        Polygon {
            halfspaces: vec![
                Halfspace { a_p: 1.0, a_q: 0.0, b: p_max },
                Halfspace { a_p: -1.0, a_q: 0.0, b: -p_min },
                Halfspace { a_p: 0.0, a_q: 1.0, b: q_max },
                Halfspace { a_p: 0.0, a_q: -1.0, b: -q_min },
            ],
        }
    }

    /// `[p_min, p_max]` with Q pinned to zero, for DC terminals.
    pub fn active_interval(p_min: f64, p_max: f64) -> Self {
        Polygon {
            halfspaces: vec![
                Halfspace { a_p: 1.0, a_q: 0.0, b: p_max },
                Halfspace { a_p: -1.0, a_q: 0.0, b: -p_min },
                Halfspace { a_p: 0.0, a_q: 1.0, b: 0.0 },
                Halfspace { a_p: 0.0, a_q: -1.0, b: 0.0 },
            ],
        }
    }

    /// A polygon is bounded iff its (nonzero) normals positively span the
    /// plane, i.e. the largest angular gap between consecutive normal
    /// directions is below π. Zero normals are ignored here; validation
    /// reports them separately.
    pub fn is_bounded(&self) -> bool {
        let mut angles: Vec<f64> = self
            .halfspaces
            .iter()
            .filter(|h| h.a_p.hypot(h.a_q) > GEOM_TOL)
            .map(|h| h.a_q.atan2(h.a_p))
            .collect();
        if angles.len() < 3 {
            return false;
        }
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut max_gap: f64 = 0.0;
        for i in 0..angles.len() {
            let next = if i + 1 == angles.len() {
                angles[0] + std::f64::consts::TAU
            } else {
                angles[i + 1]
            };
            max_gap = max_gap.max(next - angles[i]);
        }
        max_gap < std::f64::consts::PI - GEOM_TOL
    }

    /// Membership test with tolerance.
    pub fn contains(&self, p: f64, q: f64, tol: f64) -> bool {
        self.halfspaces
            .iter()
            .all(|h| h.a_p * p + h.a_q * q <= h.b + tol)
    }

    /// Feasible pairwise intersections of the boundary lines. For a bounded,
    /// nonempty polygon these are exactly its corners (possibly with
    /// duplicates under degeneracy).
    pub fn vertices(&self) -> Vec<(f64, f64)> {
        let hs = &self.halfspaces;
        let mut out = Vec::new();
        for i in 0..hs.len() {
            for j in i + 1..hs.len() {
                let det = hs[i].a_p * hs[j].a_q - hs[i].a_q * hs[j].a_p;
                if det.abs() <= GEOM_TOL {
                    continue;
                }
                let p = (hs[i].b * hs[j].a_q - hs[i].a_q * hs[j].b) / det;
                let q = (hs[i].a_p * hs[j].b - hs[i].b * hs[j].a_p) / det;
                let scale = 1.0 + p.abs() + q.abs();
                if self.contains(p, q, GEOM_TOL * scale) {
                    out.push((p, q));
                }
            }
        }
        out
    }

    /// Extreme coordinate values over the polygon; `None` when the vertex set
    /// is empty (an empty or unbounded region).
    pub fn extent(&self) -> Option<Extent> {
        let vs = self.vertices();
        let first = *vs.first()?;
        let mut e = Extent {
            p_min: first.0,
            p_max: first.0,
            q_min: first.1,
            q_max: first.1,
        };
        for (p, q) in vs {
            e.p_min = e.p_min.min(p);
            e.p_max = e.p_max.max(p);
            e.q_min = e.q_min.min(q);
            e.q_max = e.q_max.max(q);
        }
        Some(e)
    }

    /// True when every feasible point has Q = 0 (required on DC terminals).
    pub fn forces_q_zero(&self) -> bool {
        match self.extent() {
            Some(e) => e.q_min.abs() <= GEOM_TOL && e.q_max.abs() <= GEOM_TOL,
            None => false,
        }
    }
}

/// Piecewise-linear convex cost as a breakpoint list `(x, value)`.
///
/// An empty list means zero cost; a single point means a constant cost. Two
/// or more points define segments whose end slopes extend the curve convexly
/// beyond the sampled range.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CostCurve {
    pub points: Vec<(f64, f64)>,
}

/// One epigraph segment `t ≥ slope·x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostSegment {
    pub slope: f64,
    pub intercept: f64,
}

impl CostCurve {
    pub fn constant(value: f64) -> Self {
        CostCurve { points: vec![(0.0, value)] }
    }

    /// Line through the origin with the given marginal cost.
    pub fn linear(slope: f64) -> Self {
        CostCurve { points: vec![(0.0, 0.0), (1.0, slope)] }
    }

    pub fn is_zero(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.points.len() == 1
    }

    /// Segment list of the convex curve (empty for constant/zero costs).
    pub fn segments(&self) -> Vec<CostSegment> {
        self.points
            .windows(2)
            .map(|w| {
                let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                CostSegment { slope, intercept: w[0].1 - slope * w[0].0 }
            })
            .collect()
    }

    /// Curve value: the maximum over segment lines, i.e. the convex
    /// extension of the sampled breakpoints.
    pub fn value(&self, x: f64) -> f64 {
        match self.points.len() {
            0 => 0.0,
            1 => self.points[0].1,
            _ => self
                .segments()
                .iter()
                .map(|s| s.slope * x + s.intercept)
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn check(&self) -> Result<(), String> {
        for p in &self.points {
            if !(p.0.is_finite() && p.1.is_finite()) {
                return Err("cost breakpoints must be finite".into());
            }
        }
        for w in self.points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err("cost breakpoint abscissae must be strictly increasing".into());
            }
        }
        let segs = self.segments();
        for w in segs.windows(2) {
            // Relative slack: sampled curves carry rounding proportional to
            // the slope magnitude, and a microscopically decreasing slope
            // only makes a segment redundant in the epigraph.
            if w[1].slope < w[0].slope - 1e-9 * (1.0 + w[0].slope.abs()) {
                return Err("cost segments must have nondecreasing slopes".into());
            }
        }
        Ok(())
    }
}

fn is_none<T>(v: &Option<T>) -> bool {
    v.is_none()
}

/// Network node. The fixed load is folded into a constant injection when the
/// OPF problem is assembled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    /// Shunt admittance in p.u.; zero on DC buses.
    pub y_sh: Complex64,
    /// Voltage magnitude bounds in p.u., `0 < v_lb < v_ub`.
    pub v_lb: f64,
    pub v_ub: f64,
    /// Fixed load (consumption) in p.u.; reactive part zero on DC buses.
    pub load: Complex64,
    #[serde(default, skip_serializing_if = "is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "is_none")]
    pub description: Option<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

/// Two-port branch (line, cable, transformer, or phase shifter) with complex
/// voltage ratios on both terminals. The total ratio is
/// `conj(rho_src)·rho_dst`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: usize,
    pub src: BusId,
    pub dst: BusId,
    /// Series admittance in p.u.
    pub ybar: Complex64,
    /// Terminal shunt admittances in p.u.
    pub y_src: Complex64,
    pub y_dst: Complex64,
    /// Nonzero complex voltage ratios.
    pub rho_src: Complex64,
    pub rho_dst: Complex64,
    /// Ampacity (current magnitude) bounds per terminal, positive, in p.u.
    pub i_src_ub: f64,
    pub i_dst_ub: f64,
    /// Voltage-drop bounds, AC branches only: `|V_dst| / |V_src| − 1 ∈ [nu_lb, nu_ub]`.
    #[serde(default, skip_serializing_if = "is_none")]
    pub nu_lb: Option<f64>,
    #[serde(default, skip_serializing_if = "is_none")]
    pub nu_ub: Option<f64>,
    /// Angle-difference bounds in radians, AC branches only, within (−π/2, π/2).
    #[serde(default, skip_serializing_if = "is_none")]
    pub delta_lb: Option<f64>,
    #[serde(default, skip_serializing_if = "is_none")]
    pub delta_ub: Option<f64>,
    #[serde(default, skip_serializing_if = "is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "is_none")]
    pub description: Option<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

/// AC/DC, DC/AC, or back-to-back converter. Active power entering one
/// terminal leaves the other scaled by the conversion loss factor of the
/// transfer direction; capability polygons are stated in the terminal
/// injection frame (P, Q) = (−Re S, −Im S).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Converter {
    pub id: usize,
    pub src: BusId,
    pub dst: BusId,
    /// Loss factors in [0, 1): forward (src→dst) and backward (dst→src).
    pub eta_fwd: f64,
    pub eta_bwd: f64,
    /// No-load loss in MW, folded as a fixed load at `loss_side`.
    #[serde(default)]
    pub static_loss_mw: f64,
    #[serde(default)]
    pub loss_side: Side,
    pub cap_src: Polygon,
    pub cap_dst: Polygon,
    #[serde(default, skip_serializing_if = "is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "is_none")]
    pub description: Option<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

/// Generator, prosumer, or dispatchable load: a capability polygon in the
/// (P, Q) injection plane plus separable piecewise-linear convex costs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Injector {
    pub id: usize,
    pub bus: BusId,
    pub capability: Polygon,
    #[serde(default, skip_serializing_if = "CostCurve::is_zero")]
    pub cost_p: CostCurve,
    #[serde(default, skip_serializing_if = "CostCurve::is_zero")]
    pub cost_q: CostCurve,
    #[serde(default, skip_serializing_if = "is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "is_none")]
    pub description: Option<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

/// A complete network scenario.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Base power in MVA for the per-unit system.
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub converters: Vec<Converter>,
    pub injectors: Vec<Injector>,
    #[serde(default, skip_serializing_if = "is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "is_none")]
    pub description: Option<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl Default for Bus {
    fn default() -> Self {
        Bus {
            id: BusId(0),
            kind: BusKind::Ac,
            y_sh: Complex64::ZERO,
            v_lb: 0.9,
            v_ub: 1.1,
            load: Complex64::ZERO,
            name: None,
            description: None,
            extra: BTreeMap::new(),
        }
    }
}

impl Default for Branch {
    fn default() -> Self {
        Branch {
            id: 0,
            src: BusId(0),
            dst: BusId(0),
            ybar: Complex64::ONE,
            y_src: Complex64::ZERO,
            y_dst: Complex64::ZERO,
            rho_src: Complex64::ONE,
            rho_dst: Complex64::ONE,
            i_src_ub: 1e3,
            i_dst_ub: 1e3,
            nu_lb: Some(-0.2),
            nu_ub: Some(0.2),
            delta_lb: Some(-1.0),
            delta_ub: Some(1.0),
            name: None,
            description: None,
            extra: BTreeMap::new(),
        }
    }
}

/// One violated modeling rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Stable rule identifier, e.g. `dc_branch_series`.
    pub rule: String,
    /// Offending entity, e.g. `branch 3`.
    pub entity: String,
    pub message: String,
}

/// Outcome of [`Grid::validate`]: every violated rule plus the structural
/// flags the relaxation theory depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// True iff every DC subgrid is a tree (no cycles, parallel DC branches
    /// count as cycles).
    pub dc_radial: bool,
    /// True iff the whole bus/branch graph is acyclic.
    pub hybrid_architecture: bool,
    pub subgrid_count: usize,
    /// Component index per bus, in bus order.
    pub subgrid_of: Vec<usize>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Bus partition into connected components over branches only; converters do
/// not join subgrids.
#[derive(Clone, Debug, PartialEq)]
pub struct Subgrids {
    /// Component index per bus, in bus order.
    pub component_of: Vec<usize>,
    /// Buses of each component, ascending; components ordered by their
    /// smallest bus.
    pub components: Vec<Vec<BusId>>,
}

/// Per-bus device incidence: outgoing/incoming branches and converters plus
/// attached injectors, all as zero-based indices into the grid's lists.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Incidence {
    pub branches_src: Vec<Vec<usize>>,
    pub branches_dst: Vec<Vec<usize>>,
    pub converters_src: Vec<Vec<usize>>,
    pub converters_dst: Vec<Vec<usize>>,
    pub injectors: Vec<Vec<usize>>,
}

struct RuleSink {
    violations: Vec<Violation>,
}

impl RuleSink {
    fn push(&mut self, rule: &str, entity: String, message: impl Into<String>) {
        self.violations.push(Violation {
            rule: rule.to_string(),
            entity,
            message: message.into(),
        });
    }
}

impl Grid {
    pub fn num_buses(&self) -> usize {
        self.buses.len()
    }

    fn bus_id_ok(&self, id: BusId) -> bool {
        id.0 >= 1 && id.0 <= self.buses.len()
    }

    pub fn bus(&self, id: BusId) -> &Bus {
        &self.buses[id.index()]
    }

    /// Check every modeling rule and compute the structural flags. Problems
    /// are reported, never thrown; an empty violation list marks the grid as
    /// ready for problem assembly.
    pub fn validate(&self) -> ValidationReport {
        let mut sink = RuleSink { violations: Vec::new() };

        if !(self.base_mva.is_finite() && self.base_mva > 0.0) {
            sink.push("base_power", "grid".into(), "base power must be positive");
        }

        for (i, bus) in self.buses.iter().enumerate() {
            let entity = format!("bus {}", bus.id);
            if bus.id.0 != i + 1 {
                sink.push(
                    "bus_id_sequence",
                    format!("bus at position {}", i + 1),
                    format!("bus ids must be 1..N in order, found {}", bus.id),
                );
            }
            if !(bus.v_lb.is_finite() && bus.v_ub.is_finite() && 0.0 < bus.v_lb && bus.v_lb < bus.v_ub)
            {
                sink.push(
                    "voltage_bounds",
                    entity.clone(),
                    "voltage bounds must satisfy 0 < lb < ub",
                );
            }
            if !(bus.y_sh.re.is_finite() && bus.y_sh.im.is_finite() && bus.load.re.is_finite() && bus.load.im.is_finite()) {
                sink.push("finite_parameter", entity.clone(), "bus parameters must be finite");
            }
            if bus.kind == BusKind::Dc {
                if bus.y_sh != Complex64::ZERO {
                    sink.push("dc_bus_shunt", entity.clone(), "DC bus shunt admittance must be zero");
                }
                if bus.load.im != 0.0 {
                    sink.push("dc_bus_load", entity, "DC bus fixed load must have zero reactive part");
                }
            }
        }

        for (k, br) in self.branches.iter().enumerate() {
            let entity = format!("branch {}", br.id);
            if br.id != k + 1 {
                sink.push(
                    "branch_id_sequence",
                    format!("branch at position {}", k + 1),
                    format!("branch ids must be 1..count in order, found {}", br.id),
                );
            }
            let endpoints_ok = self.bus_id_ok(br.src) && self.bus_id_ok(br.dst);
            if !endpoints_ok {
                sink.push(
                    "branch_endpoint",
                    entity.clone(),
                    format!("branch references missing bus ({} or {})", br.src, br.dst),
                );
                continue;
            }
            if br.src == br.dst {
                sink.push("branch_self_loop", entity.clone(), "branch endpoints must differ");
            }
            let (src, dst) = (self.bus(br.src), self.bus(br.dst));
            if src.kind != dst.kind {
                sink.push(
                    "branch_kind",
                    entity.clone(),
                    "branch must connect two buses of the same kind",
                );
            }
            if br.rho_src.norm() <= 0.0 || br.rho_dst.norm() <= 0.0 {
                sink.push("branch_ratio_zero", entity.clone(), "voltage ratios must be nonzero");
            }
            if !(br.i_src_ub.is_finite() && br.i_src_ub > 0.0 && br.i_dst_ub.is_finite() && br.i_dst_ub > 0.0) {
                sink.push("branch_ampacity", entity.clone(), "ampacity bounds must be positive");
            }
            let is_dc = src.kind == BusKind::Dc && dst.kind == BusKind::Dc;
            if is_dc {
                if br.ybar.im != 0.0 {
                    sink.push(
                        "dc_branch_series",
                        entity.clone(),
                        "DC branch series admittance must be real",
                    );
                }
                if br.ybar.re <= 0.0 {
                    sink.push(
                        "dc_branch_conductance",
                        entity.clone(),
                        "DC branch series conductance must be positive",
                    );
                }
                if br.y_src != Complex64::ZERO || br.y_dst != Complex64::ZERO {
                    sink.push("dc_branch_shunt", entity.clone(), "DC branch shunt admittances must be zero");
                }
                if br.rho_src != Complex64::ONE || br.rho_dst != Complex64::ONE {
                    sink.push("dc_branch_ratio", entity.clone(), "DC branch voltage ratios must be one");
                }
                if br.nu_lb.is_some() || br.nu_ub.is_some() || br.delta_lb.is_some() || br.delta_ub.is_some() {
                    sink.push(
                        "dc_branch_limits",
                        entity.clone(),
                        "drop and angle bounds apply to AC branches only",
                    );
                }
            } else {
                match (br.nu_lb, br.nu_ub) {
                    (Some(lb), Some(ub)) => {
                        if !(lb.is_finite() && ub.is_finite() && lb >= -1.0 && lb < ub) {
                            sink.push(
                                "branch_drop_bounds",
                                entity.clone(),
                                "drop bounds must satisfy −1 ≤ lb < ub",
                            );
                        }
                    }
                    _ => sink.push("branch_drop_bounds", entity.clone(), "AC branch needs drop bounds"),
                }
                match (br.delta_lb, br.delta_ub) {
                    (Some(lb), Some(ub)) => {
                        let quarter = std::f64::consts::FRAC_PI_2;
                        if !(lb > -quarter && ub < quarter && lb < ub) {
                            sink.push(
                                "branch_angle_bounds",
                                entity.clone(),
                                "angle bounds must satisfy −π/2 < lb < ub < π/2",
                            );
                        }
                    }
                    _ => sink.push("branch_angle_bounds", entity.clone(), "AC branch needs angle bounds"),
                }
            }
        }

        for (l, cv) in self.converters.iter().enumerate() {
            let entity = format!("converter {}", cv.id);
            if cv.id != l + 1 {
                sink.push(
                    "converter_id_sequence",
                    format!("converter at position {}", l + 1),
                    format!("converter ids must be 1..count in order, found {}", cv.id),
                );
            }
            if !(self.bus_id_ok(cv.src) && self.bus_id_ok(cv.dst)) {
                sink.push(
                    "converter_endpoint",
                    entity.clone(),
                    format!("converter references missing bus ({} or {})", cv.src, cv.dst),
                );
                continue;
            }
            if cv.src == cv.dst {
                sink.push("converter_self_loop", entity.clone(), "converter endpoints must differ");
            }
            if !((0.0..1.0).contains(&cv.eta_fwd) && (0.0..1.0).contains(&cv.eta_bwd)) {
                sink.push("converter_eta", entity.clone(), "loss factors must lie in [0, 1)");
            }
            if !(cv.static_loss_mw.is_finite() && cv.static_loss_mw >= 0.0) {
                sink.push("converter_static_loss", entity.clone(), "static loss must be nonnegative");
            }
            for (side, cap) in [(Side::Src, &cv.cap_src), (Side::Dst, &cv.cap_dst)] {
                let side_name = match side {
                    Side::Src => "src",
                    Side::Dst => "dst",
                };
                self.check_polygon(&mut sink, cap, &entity, side_name);
                let bus = match side {
                    Side::Src => self.bus(cv.src),
                    Side::Dst => self.bus(cv.dst),
                };
                if bus.kind == BusKind::Dc && !cap.forces_q_zero() {
                    sink.push(
                        "capability_dc_q",
                        entity.clone(),
                        format!("{side_name} capability on a DC bus must force Q = 0"),
                    );
                }
            }
        }

        for (j, inj) in self.injectors.iter().enumerate() {
            let entity = format!("injector {}", inj.id);
            if inj.id != j + 1 {
                sink.push(
                    "injector_id_sequence",
                    format!("injector at position {}", j + 1),
                    format!("injector ids must be 1..count in order, found {}", inj.id),
                );
            }
            if !self.bus_id_ok(inj.bus) {
                sink.push(
                    "injector_bus",
                    entity.clone(),
                    format!("injector references missing bus {}", inj.bus),
                );
                continue;
            }
            self.check_polygon(&mut sink, &inj.capability, &entity, "capability");
            if self.bus(inj.bus).kind == BusKind::Dc && !inj.capability.forces_q_zero() {
                sink.push(
                    "injector_dc_q",
                    entity.clone(),
                    "capability on a DC bus must force Q = 0",
                );
            }
            for (label, curve) in [("active", &inj.cost_p), ("reactive", &inj.cost_q)] {
                if let Err(msg) = curve.check() {
                    sink.push("cost_breakpoints", entity.clone(), format!("{label} cost: {msg}"));
                }
            }
        }

        // Structural flags over the branch multigraph (invalid endpoints are
        // skipped so the flags remain defined on partially broken input).
        let sub = self.subgrids();
        let dc_radial = self.acyclic(|br| {
            self.bus(br.src).kind == BusKind::Dc && self.bus(br.dst).kind == BusKind::Dc
        });
        let hybrid_architecture = self.acyclic(|_| true);
        if !dc_radial {
            sink.push("dc_radial", "grid".into(), "radial DC subgrid required");
        }

        ValidationReport {
            violations: sink.violations,
            dc_radial,
            hybrid_architecture,
            subgrid_count: sub.components.len(),
            subgrid_of: sub.component_of,
        }
    }

    fn check_polygon(&self, sink: &mut RuleSink, poly: &Polygon, entity: &str, label: &str) {
        if poly.halfspaces.len() > 8 {
            sink.push(
                "capability_size",
                entity.to_string(),
                format!("{label} polygon may use at most 8 half-spaces"),
            );
        }
        for h in &poly.halfspaces {
            if !(h.a_p.is_finite() && h.a_q.is_finite() && h.b.is_finite()) || h.a_p.hypot(h.a_q) <= GEOM_TOL {
                sink.push(
                    "capability_normal",
                    entity.to_string(),
                    format!("{label} polygon half-space has a zero or non-finite normal"),
                );
                return;
            }
        }
        if !poly.is_bounded() {
            sink.push(
                "capability_unbounded",
                entity.to_string(),
                format!("{label} polygon must be bounded"),
            );
            return;
        }
        if poly.extent().is_none() {
            sink.push(
                "capability_empty",
                entity.to_string(),
                format!("{label} polygon must be nonempty"),
            );
        }
    }

    /// Acyclicity of the sub-multigraph over branches selected by `keep`
    /// (restricted to branches with valid, non-equal endpoints). A multigraph
    /// is acyclic iff every component satisfies `edges = vertices − 1`.
    fn acyclic(&self, keep: impl Fn(&Branch) -> bool) -> bool {
        let sub = self.subgrids_filtered(&keep);
        let mut edges_of = vec![0usize; sub.components.len()];
        for br in self.branches.iter().filter(|b| self.edge_usable(b) && keep(b)) {
            edges_of[sub.component_of[br.src.index()]] += 1;
        }
        sub.components
            .iter()
            .zip(&edges_of)
            .all(|(comp, &edges)| edges == comp.len() - 1)
    }

    fn edge_usable(&self, br: &Branch) -> bool {
        self.bus_id_ok(br.src) && self.bus_id_ok(br.dst) && br.src != br.dst
    }

    /// Connected components of the bus/branch graph. Converters never join
    /// subgrids.
    pub fn subgrids(&self) -> Subgrids {
        self.subgrids_filtered(&|_| true)
    }

    fn subgrids_filtered(&self, keep: &dyn Fn(&Branch) -> bool) -> Subgrids {
        let n = self.buses.len();
        let mut adjacency = vec![Vec::new(); n];
        for br in self.branches.iter().filter(|b| self.edge_usable(b) && keep(b)) {
            adjacency[br.src.index()].push(br.dst.index());
            adjacency[br.dst.index()].push(br.src.index());
        }
        let mut component_of = vec![usize::MAX; n];
        let mut components = Vec::new();
        for start in 0..n {
            if component_of[start] != usize::MAX {
                continue;
            }
            let label = components.len();
            let mut queue = vec![start];
            let mut members = Vec::new();
            component_of[start] = label;
            while let Some(u) = queue.pop() {
                members.push(BusId(u + 1));
                for &v in &adjacency[u] {
                    if component_of[v] == usize::MAX {
                        component_of[v] = label;
                        queue.push(v);
                    }
                }
            }
            members.sort();
            components.push(members);
        }
        Subgrids { component_of, components }
    }

    /// Per-bus incidence of branches (by terminal), converters (by terminal),
    /// and injectors. Indices are zero-based positions in the grid's lists.
    pub fn incidence(&self) -> Incidence {
        let n = self.buses.len();
        let mut inc = Incidence {
            branches_src: vec![Vec::new(); n],
            branches_dst: vec![Vec::new(); n],
            converters_src: vec![Vec::new(); n],
            converters_dst: vec![Vec::new(); n],
            injectors: vec![Vec::new(); n],
        };
        for (k, br) in self.branches.iter().enumerate() {
            inc.branches_src[br.src.index()].push(k);
            inc.branches_dst[br.dst.index()].push(k);
        }
        for (l, cv) in self.converters.iter().enumerate() {
            inc.converters_src[cv.src.index()].push(l);
            inc.converters_dst[cv.dst.index()].push(l);
        }
        for (j, inj) in self.injectors.iter().enumerate() {
            inc.injectors[inj.bus.index()].push(j);
        }
        inc
    }

    /// Kind of the bus a converter terminal connects to.
    pub fn converter_side_kind(&self, cv: &Converter, side: Side) -> BusKind {
        match side {
            Side::Src => self.bus(cv.src).kind,
            Side::Dst => self.bus(cv.dst).kind,
        }
    }
}
