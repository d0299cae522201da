//! MATPOWER case import.
//!
//! [`parse_matpower`] extracts the numeric case tables from the
//! matrix-assignment subset of a MATLAB case script — comments, the
//! `function` header, string assignments, and unrelated script content are
//! skipped — and [`to_grid`] converts the tables into a per-unit [`Grid`]:
//! pi-model branches, box generator capabilities, and piecewise-linear
//! costs sampled from polynomial cost data.
//!
//! Only the subset needed for optimal power flow is interpreted.  Other
//! case data (`dcline`, user extensions) produces warnings, never errors,
//! so enriched cases still import.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::grid::{Branch, Bus, BusId, BusKind, CostCurve, Grid, Injector, Polygon};

/// Default number of equidistant samples when linearizing polynomial costs.
pub const DEFAULT_COST_SAMPLES: usize = 10;

/// Ampacity bound used for unlimited (`rateA = 0`) branches, in p.u.
const UNLIMITED_AMPACITY: f64 = 1e3;

/// Angle-difference bounds are clamped strictly inside ±π/2.
const ANGLE_CLAMP: f64 = PI / 2.0 - 0.01;

/// Raw numeric tables of a MATPOWER case, in file order.
///
/// Rows keep every column the file provides; the documented leading columns
/// are interpreted by [`to_grid`], the rest ride along untouched.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatpowerCase {
    pub base_mva: f64,
    pub bus: Vec<Vec<f64>>,
    pub gen: Vec<Vec<f64>>,
    pub branch: Vec<Vec<f64>>,
    /// Empty when the case carries no cost data.
    pub gencost: Vec<Vec<f64>>,
    /// Human-readable notes about ignored case data.
    pub warnings: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum MatpowerError {
    #[error("case defines no `{0}` table")]
    MissingTable(&'static str),
    #[error("`baseMVA` is not a number: `{0}`")]
    BadBase(String),
    #[error("`{table}` row {row} has {got} columns, expected at least {want}")]
    Arity { table: &'static str, row: usize, got: usize, want: usize },
    #[error("`{table}` row {row}: cell `{cell}` is not a number")]
    Number { table: &'static str, row: usize, cell: String },
    #[error("`{table}` row {row} references unknown bus {bus}")]
    UnknownBus { table: &'static str, row: usize, bus: i64 },
    #[error("duplicate bus number {0}")]
    DuplicateBus(i64),
    #[error("bus {bus} has Vmin = {vmin} ≥ Vmax = {vmax}")]
    VoltageBounds { bus: i64, vmin: f64, vmax: f64 },
    #[error("`branch` row {row} has zero series impedance")]
    ZeroImpedance { row: usize },
    #[error("`branch` row {row}: tap ratio and shift produce a zero voltage ratio")]
    ZeroRatio { row: usize },
    #[error("`gencost` row {row}: unknown cost model {model}")]
    CostModel { row: usize, model: i64 },
    #[error("`gencost` has {rows} rows for {gens} generators; expected {gens} or {}", 2 * gens)]
    CostRows { rows: usize, gens: usize },
    #[error("cost linearization needs at least 2 samples, got {0}")]
    Samples(usize),
    #[error("malformed case text: {0}")]
    Malformed(String),
}

/// Parse the matrix assignments of a MATPOWER case script.
///
/// `baseMVA`, `bus`, `gen`, and `branch` are mandatory; `gencost` is
/// optional.  `%` comments, `...` line continuations, and non-numeric
/// script content are handled; assignments this importer does not use are
/// recorded as warnings on the returned case.
pub fn parse_matpower(text: &str) -> Result<MatpowerCase, MatpowerError> {
    let mut case = MatpowerCase::default();
    let mut seen_base = false;
    let mut seen = (false, false, false);

    for assignment in scan_assignments(&strip_noise(text))? {
        let Assignment { name, path, value } = assignment;
        match (name.as_str(), value) {
            ("baseMVA", Value::Scalar(s)) => {
                case.base_mva = s.parse().map_err(|_| MatpowerError::BadBase(s))?;
                seen_base = true;
            }
            ("bus", Value::Matrix(rows)) => {
                case.bus = numeric_table("bus", rows, |_| 13)?;
                seen.0 = true;
            }
            ("gen", Value::Matrix(rows)) => {
                case.gen = numeric_table("gen", rows, |_| 10)?;
                seen.1 = true;
            }
            ("branch", Value::Matrix(rows)) => {
                case.branch = numeric_table("branch", rows, |_| 13)?;
                seen.2 = true;
            }
            ("gencost", Value::Matrix(rows)) => {
                case.gencost = numeric_table("gencost", rows, gencost_arity)?;
                // Model/NCOST consistency needs parsed numbers; check here so
                // arity errors name the row.
                for (i, row) in case.gencost.iter().enumerate() {
                    let want = match row[0] as i64 {
                        1 => 4 + 2 * row[3] as usize,
                        2 => 4 + row[3] as usize,
                        m => return Err(MatpowerError::CostModel { row: i + 1, model: m }),
                    };
                    if row.len() < want {
                        return Err(MatpowerError::Arity {
                            table: "gencost",
                            row: i + 1,
                            got: row.len(),
                            want,
                        });
                    }
                }
            }
            ("version", _) => {}
            (_, _) => case.warnings.push(format!("ignored case data `{path}`")),
        }
    }

    if !seen_base {
        return Err(MatpowerError::MissingTable("baseMVA"));
    }
    for (ok, name) in [(seen.0, "bus"), (seen.1, "gen"), (seen.2, "branch")] {
        if !ok {
            return Err(MatpowerError::MissingTable(name));
        }
    }
    Ok(case)
}

/// Convert parsed case tables into a per-unit grid.
///
/// All quantities are scaled on `baseMVA`; buses are renumbered 1..N in
/// table order; only in-service branches and generators are imported; and
/// polynomial costs are sampled equidistantly over the active-power range
/// with `samples` points (see [`DEFAULT_COST_SAMPLES`]).
pub fn to_grid(case: &MatpowerCase, samples: usize) -> Result<Grid, MatpowerError> {
    if samples < 2 {
        return Err(MatpowerError::Samples(samples));
    }
    let base = case.base_mva;
    if !(base.is_finite() && base > 0.0) {
        return Err(MatpowerError::BadBase(base.to_string()));
    }

    let mut grid = Grid { base_mva: base, ..Grid::default() };
    let mut number_of = BTreeMap::new();

    for (i, row) in case.bus.iter().enumerate() {
        let number = row[0].round() as i64;
        if number_of.insert(number, BusId(i + 1)).is_some() {
            return Err(MatpowerError::DuplicateBus(number));
        }
        let (vmax, vmin) = (row[11], row[12]);
        if vmin >= vmax {
            return Err(MatpowerError::VoltageBounds { bus: number, vmin, vmax });
        }
        grid.buses.push(Bus {
            id: BusId(i + 1),
            kind: BusKind::Ac,
            y_sh: Complex64::new(row[4], row[5]) / base,
            v_lb: vmin,
            v_ub: vmax,
            load: Complex64::new(row[2], row[3]) / base,
            ..Bus::default()
        });
    }

    let lookup = |table, row, cell: f64| {
        let number = cell.round() as i64;
        number_of
            .get(&number)
            .copied()
            .ok_or(MatpowerError::UnknownBus { table, row, bus: number })
    };

    for (i, row) in case.branch.iter().enumerate() {
        if row[10] == 0.0 {
            continue; // out of service
        }
        let (r, x, b) = (row[2], row[3], row[4]);
        if r == 0.0 && x == 0.0 {
            return Err(MatpowerError::ZeroImpedance { row: i + 1 });
        }
        let ratio = if row[8] == 0.0 { 1.0 } else { row[8] };
        let shift = row[9] * PI / 180.0;
        let rho_src = Complex64::new(1.0, 0.0) / Complex64::from_polar(ratio, shift);
        if !rho_src.is_finite() || rho_src == Complex64::ZERO {
            return Err(MatpowerError::ZeroRatio { row: i + 1 });
        }
        let i_ub = if row[5] == 0.0 { UNLIMITED_AMPACITY } else { row[5] / base };
        // The source format carries no voltage-drop limits, but every AC
        // branch here needs them: bounds slightly wider than what the bus
        // voltage limits already imply leave the feasible set unchanged.
        let src = lookup("branch", i + 1, row[0])?;
        let dst = lookup("branch", i + 1, row[1])?;
        let nu_lb = (grid.buses[dst.index()].v_lb / grid.buses[src.index()].v_ub) * 0.99 - 1.0;
        let nu_ub = (grid.buses[dst.index()].v_ub / grid.buses[src.index()].v_lb) * 1.01 - 1.0;
        let (angmin, angmax) = (row[11], row[12]);
        let (delta_lb, delta_ub) = if angmin == 0.0 && angmax == 0.0 {
            (-ANGLE_CLAMP, ANGLE_CLAMP)
        } else {
            (
                (angmin * PI / 180.0).clamp(-ANGLE_CLAMP, ANGLE_CLAMP),
                (angmax * PI / 180.0).clamp(-ANGLE_CLAMP, ANGLE_CLAMP),
            )
        };
        grid.branches.push(Branch {
            id: grid.branches.len() + 1,
            src,
            dst,
            ybar: Complex64::new(1.0, 0.0) / Complex64::new(r, x),
            y_src: Complex64::new(0.0, b / 2.0),
            y_dst: Complex64::new(0.0, b / 2.0),
            rho_src,
            rho_dst: Complex64::new(1.0, 0.0),
            i_src_ub: i_ub,
            i_dst_ub: i_ub,
            nu_lb: Some(nu_lb),
            nu_ub: Some(nu_ub),
            delta_lb: Some(delta_lb),
            delta_ub: Some(delta_ub),
            ..Branch::default()
        });
    }

    let ng = case.gen.len();
    if !(case.gencost.is_empty() || case.gencost.len() == ng || case.gencost.len() == 2 * ng) {
        return Err(MatpowerError::CostRows { rows: case.gencost.len(), gens: ng });
    }

    for (i, row) in case.gen.iter().enumerate() {
        if row[7] <= 0.0 {
            continue; // out of service
        }
        let cost_p = match case.gencost.get(i) {
            Some(cost) => cost_curve(cost, i + 1, row, samples, base)?,
            None => CostCurve::default(),
        };
        let cost_q = match case.gencost.get(ng + i) {
            Some(cost) if case.gencost.len() == 2 * ng => {
                cost_curve(cost, ng + i + 1, row, samples, base)?
            }
            _ => CostCurve::default(),
        };
        grid.injectors.push(Injector {
            id: grid.injectors.len() + 1,
            bus: lookup("gen", i + 1, row[0])?,
            capability: Polygon::boxed(row[9] / base, row[8] / base, row[4] / base, row[3] / base),
            cost_p,
            cost_q,
            name: None,
            description: None,
            extra: BTreeMap::new(),
        });
    }

    Ok(grid)
}

/// Convert one gencost row: piecewise-linear data is rescaled to per-unit,
/// polynomial data is sampled equidistantly over `[Pmin, Pmax]`.
fn cost_curve(
    cost: &[f64],
    row: usize,
    gen: &[f64],
    samples: usize,
    base: f64,
) -> Result<CostCurve, MatpowerError> {
    let n = cost[3] as usize;
    match cost[0] as i64 {
        1 => {
            let points = cost[4..4 + 2 * n]
                .chunks_exact(2)
                .map(|pair| (pair[0] / base, pair[1]))
                .collect();
            Ok(CostCurve { points })
        }
        2 => {
            let coeffs = &cost[4..4 + n];
            let value = |p: f64| coeffs.iter().fold(0.0, |acc, c| acc * p + c);
            let (pmin, pmax) = (gen[9], gen[8]);
            if pmax <= pmin {
                return Ok(CostCurve::constant(value(pmin)));
            }
            let points = (0..samples)
                .map(|k| {
                    let p = pmin + (pmax - pmin) * k as f64 / (samples - 1) as f64;
                    (p / base, value(p))
                })
                .collect();
            Ok(CostCurve { points })
        }
        m => Err(MatpowerError::CostModel { row, model: m }),
    }
}

// ---------------------------------------------------------------------------
// Case-script scanning
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum Value {
    Scalar(String),
    Matrix(Vec<Vec<String>>),
    Text,
}

#[derive(Debug)]
struct Assignment {
    /// Final path segment, e.g. `bus` for `mpc.bus`.
    name: String,
    /// Full assignment target, for warnings.
    path: String,
    value: Value,
}

/// Remove `%` comments and splice `...` line continuations.
fn strip_noise(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        let line = match line.find('%') {
            Some(cut) => &line[..cut],
            None => line,
        };
        match line.trim_end().strip_suffix("...") {
            Some(head) => {
                out.push_str(head);
                out.push(' ');
            }
            None => {
                out.push_str(line);
                out.push('\n');
            }
        }
    }
    out
}

struct Scanner<'a> {
    s: &'a [u8],
    i: usize,
}

impl<'a> Scanner<'a> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.i).copied()
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n' | b';' | b',')) {
            self.i += 1;
        }
    }

    fn skip_line(&mut self) {
        while !matches!(self.peek(), None | Some(b'\n')) {
            self.i += 1;
        }
    }

    fn ident(&mut self) -> Option<&'a str> {
        let start = self.i;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.i += 1;
        }
        (self.i > start && !self.s[start].is_ascii_digit())
            .then(|| std::str::from_utf8(&self.s[start..self.i]).expect("ascii identifier"))
    }

    /// Text between the opener at the cursor and its closing delimiter.
    fn delimited(&mut self, close: u8) -> Result<&'a str, MatpowerError> {
        self.i += 1;
        let start = self.i;
        while let Some(c) = self.peek() {
            if c == close {
                let body = &self.s[start..self.i];
                self.i += 1;
                return Ok(std::str::from_utf8(body)
                    .map_err(|_| MatpowerError::Malformed("case text is not UTF-8".into()))?);
            }
            self.i += 1;
        }
        Err(MatpowerError::Malformed(format!("unterminated `{}` block", close as char)))
    }

    fn scalar(&mut self) -> String {
        let start = self.i;
        while !matches!(self.peek(), None | Some(b';' | b'\n' | b',')) {
            self.i += 1;
        }
        String::from_utf8_lossy(&self.s[start..self.i]).trim().to_string()
    }
}

fn scan_assignments(text: &str) -> Result<Vec<Assignment>, MatpowerError> {
    let mut scan = Scanner { s: text.as_bytes(), i: 0 };
    let mut out = Vec::new();

    while scan.i < scan.s.len() {
        scan.skip_separators();
        let Some(first) = scan.ident() else {
            if scan.peek().is_some() {
                scan.i += 1;
            }
            continue;
        };
        if first == "function" {
            scan.skip_line();
            continue;
        }
        let mut path = first.to_string();
        let mut name = first;
        while scan.peek() == Some(b'.') {
            scan.i += 1;
            match scan.ident() {
                Some(field) => {
                    path.push('.');
                    path.push_str(field);
                    name = field;
                }
                None => break,
            }
        }
        while matches!(scan.peek(), Some(b' ' | b'\t')) {
            scan.i += 1;
        }
        if scan.peek() != Some(b'=') {
            continue; // keyword or expression, not an assignment
        }
        scan.i += 1;
        scan.skip_separators();

        let value = match scan.peek() {
            Some(b'[') => Value::Matrix(split_matrix(scan.delimited(b']')?)),
            Some(b'{') => {
                scan.delimited(b'}')?;
                Value::Text
            }
            Some(b'\'') => {
                scan.delimited(b'\'')?;
                Value::Text
            }
            _ => Value::Scalar(scan.scalar()),
        };
        out.push(Assignment { name: name.to_string(), path, value });
    }
    Ok(out)
}

/// Split matrix body text into rows of cell strings. Rows end at `;` or a
/// newline; cells are whitespace- or comma-separated.
fn split_matrix(body: &str) -> Vec<Vec<String>> {
    body.split(|c| c == ';' || c == '\n')
        .map(|row| {
            row.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|cell| !cell.is_empty())
                .map(str::to_string)
                .collect::<Vec<_>>()
        })
        .filter(|row: &Vec<String>| !row.is_empty())
        .collect()
}

fn numeric_table(
    table: &'static str,
    rows: Vec<Vec<String>>,
    min_arity: impl Fn(&[f64]) -> usize,
) -> Result<Vec<Vec<f64>>, MatpowerError> {
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.into_iter().enumerate() {
        let mut numbers = Vec::with_capacity(row.len());
        for cell in row {
            let value = cell.parse::<f64>().map_err(|_| MatpowerError::Number {
                table,
                row: i + 1,
                cell: cell.clone(),
            })?;
            numbers.push(value);
        }
        let want = min_arity(&numbers);
        if numbers.len() < want {
            return Err(MatpowerError::Arity { table, row: i + 1, got: numbers.len(), want });
        }
        out.push(numbers);
    }
    Ok(out)
}

/// Structural minimum for gencost rows; the model-dependent tail length is
/// checked after parsing.
fn gencost_arity(_row: &[f64]) -> usize {
    4
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    use super::*;

    const CASE2: &str = r#"
function mpc = case2
% A 2-bus, 1-branch, 1-generator case.
mpc.version = '2';
mpc.baseMVA = 100;

%	bus_i	type	Pd	Qd	Gs	Bs	area	Vm	Va	baseKV	zone	Vmax	Vmin
mpc.bus = [
	1	3	0	0	0	0	1	1	0	345	1	1.05	0.95;
	2	1	80	30	2	5	1	1	0	345	1	1.05	0.95;
];

%	bus	Pg	Qg	Qmax	Qmin	Vg	mBase	status	Pmax	Pmin
mpc.gen = [
	1	0	0	60	-60	1	100	1	150	10;
];

%	fbus	tbus	r	x	b	rateA	rateB	rateC	ratio	angle	status	angmin	angmax
mpc.branch = [
	1	2	0.01	0.1	0.2	130	0	0	0	0	1	-30	30;
];

%	model	startup	shutdown	n	c2	c1	c0
mpc.gencost = [
	2	0	0	3	0.01	20	0;
];
"#;

    #[test]
    fn minimal_case_has_the_expected_counts() {
        let case = parse_matpower(CASE2).expect("case parses");
        assert_eq!(case.base_mva, 100.0);
        assert_eq!(case.bus.len(), 2);
        assert_eq!(case.gen.len(), 1);
        assert_eq!(case.branch.len(), 1);
        assert_eq!(case.gencost.len(), 1);
        assert!(case.warnings.is_empty());
    }

    #[test]
    fn comments_inside_a_matrix_change_nothing() {
        let plain = parse_matpower(CASE2).unwrap();
        let row2 = "\t2\t1\t80\t30\t2\t5\t1\t1\t0\t345\t1\t1.05\t0.95;";
        let commented = CASE2.replace(
            row2,
            &format!("% leading note\n{row2} % trailing note\n% another full-line note"),
        );
        let case = parse_matpower(&commented).unwrap();
        assert_eq!(case.bus, plain.bus);
        assert_eq!(case.branch, plain.branch);
    }

    #[test]
    fn line_continuations_keep_a_row_together() {
        let split = CASE2.replace(
            "\t1\t2\t0.01\t0.1\t0.2\t130",
            "\t1\t2\t0.01 ...\n\t0.1\t0.2\t130",
        );
        let case = parse_matpower(&split).unwrap();
        assert_eq!(case.branch, parse_matpower(CASE2).unwrap().branch);
    }

    #[test]
    fn short_branch_row_names_the_row() {
        let text = CASE2.replace("\t1\t-30\t30;", "\t1\t-30;");
        let err = parse_matpower(&text).unwrap_err();
        assert_eq!(
            err.to_string(),
            "`branch` row 1 has 12 columns, expected at least 13"
        );
    }

    #[test]
    fn non_numeric_cell_is_reported_with_its_content() {
        let text = CASE2.replace("\t80\t30", "\teighty\t30");
        let err = parse_matpower(&text).unwrap_err();
        assert_eq!(err.to_string(), "`bus` row 2: cell `eighty` is not a number");
    }

    #[test]
    fn missing_mandatory_table_is_an_error() {
        let text = CASE2.replace("mpc.gen = [", "mpc.generators = [");
        match parse_matpower(&text).unwrap_err() {
            MatpowerError::MissingTable(name) => assert_eq!(name, "gen"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn unused_case_data_becomes_a_warning() {
        let text = format!(
            "{CASE2}\nmpc.dcline = [\n 1 2 1 0 0 0 0 0 0 0 0 0 0 0 0 0 0;\n];\nmpc.bus_name = {{'a'; 'b'}};\n"
        );
        let case = parse_matpower(&text).unwrap();
        assert_eq!(
            case.warnings,
            vec![
                "ignored case data `mpc.dcline`".to_string(),
                "ignored case data `mpc.bus_name`".to_string()
            ]
        );
    }

    #[test]
    fn gencost_arity_depends_on_the_model() {
        // Polynomial row claiming 4 coefficients but carrying 3.
        let text = CASE2.replace("\t3\t0.01\t20\t0;", "\t4\t0.01\t20\t0;");
        let err = parse_matpower(&text).unwrap_err();
        assert_eq!(err.to_string(), "`gencost` row 1 has 7 columns, expected at least 8");
    }

    fn imported() -> Grid {
        to_grid(&parse_matpower(CASE2).unwrap(), DEFAULT_COST_SAMPLES).unwrap()
    }

    #[test]
    fn per_unit_conversion_covers_loads_shunts_and_ratings() {
        let grid = imported();
        assert_eq!(grid.base_mva, 100.0);
        let bus2 = &grid.buses[1];
        assert_eq!(bus2.load, Complex64::new(0.8, 0.3));
        assert_eq!(bus2.y_sh, Complex64::new(0.02, 0.05));
        assert_eq!(bus2.v_lb, 0.95);
        assert_eq!(bus2.v_ub, 1.05);
        assert_eq!(grid.branches[0].i_src_ub, 1.3);
        let cap = &grid.injectors[0].capability;
        assert!(cap.contains(0.5, 0.0, 0.0));
        assert!(!cap.contains(1.6, 0.0, 0.0)); // above Pmax = 150 MVA
        assert!(!cap.contains(0.05, 0.0, 0.0)); // below Pmin = 10 MVA
    }

    #[test]
    fn pi_model_branch_matches_the_textbook_block() {
        let text = CASE2.replace(
            "\t1\t2\t0.01\t0.1\t0.2\t130\t0\t0\t0\t0",
            "\t1\t2\t0\t0.1\t0.2\t0\t0\t0\t0\t0",
        );
        let grid = to_grid(&parse_matpower(&text).unwrap(), 10).unwrap();
        let branch = &grid.branches[0];
        assert_relative_eq!(branch.ybar.re, 0.0);
        assert_relative_eq!(branch.ybar.im, -10.0, max_relative = 1e-14);
        assert_eq!(branch.y_src, Complex64::new(0.0, 0.1));
        assert_eq!(branch.y_dst, Complex64::new(0.0, 0.1));
        assert_eq!(branch.rho_src, Complex64::new(1.0, 0.0));
        assert_eq!(branch.rho_dst, Complex64::new(1.0, 0.0));
        // rateA = 0 means unlimited: the sentinel ampacity applies.
        assert_eq!(branch.i_src_ub, UNLIMITED_AMPACITY);
    }

    #[test]
    fn tap_and_shift_land_on_the_source_ratio() {
        let text = CASE2.replace(
            "\t130\t0\t0\t0\t0\t1",
            "\t130\t0\t0\t1.05\t30\t1",
        );
        let grid = to_grid(&parse_matpower(&text).unwrap(), 10).unwrap();
        let rho = grid.branches[0].rho_src;
        let expected = Complex64::from_polar(1.0 / 1.05, -PI / 6.0);
        assert_relative_eq!(rho.re, expected.re, max_relative = 1e-14);
        assert_relative_eq!(rho.im, expected.im, max_relative = 1e-14);
        assert_eq!(grid.branches[0].rho_dst, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn derived_drop_bounds_never_bind() {
        // With both terminals limited to [0.95, 1.05], the voltage ratio
        // can reach at most 1.05/0.95; the derived bounds must sit outside.
        let branch = &imported().branches[0];
        assert!(branch.nu_lb.unwrap() < 0.95 / 1.05 - 1.0);
        assert!(branch.nu_ub.unwrap() > 1.05 / 0.95 - 1.0);
        assert!(branch.nu_lb.unwrap() > -1.0);
    }

    #[test]
    fn angle_limits_convert_and_clamp() {
        let grid = imported();
        let branch = &grid.branches[0];
        assert_relative_eq!(branch.delta_lb.unwrap(), -30.0 * PI / 180.0);
        assert_relative_eq!(branch.delta_ub.unwrap(), 30.0 * PI / 180.0);

        // angmin = angmax = 0 means unconstrained; ±100° clamps inside ±π/2.
        let open = CASE2.replace("\t1\t-30\t30;", "\t1\t0\t0;");
        let grid = to_grid(&parse_matpower(&open).unwrap(), 10).unwrap();
        assert_eq!(grid.branches[0].delta_lb, Some(-ANGLE_CLAMP));
        assert_eq!(grid.branches[0].delta_ub, Some(ANGLE_CLAMP));

        let wide = CASE2.replace("\t1\t-30\t30;", "\t1\t-100\t100;");
        let grid = to_grid(&parse_matpower(&wide).unwrap(), 10).unwrap();
        assert_eq!(grid.branches[0].delta_lb, Some(-ANGLE_CLAMP));
        assert_eq!(grid.branches[0].delta_ub, Some(ANGLE_CLAMP));
    }

    #[test]
    fn out_of_service_devices_are_skipped() {
        let text = CASE2
            .replace("\t0\t0\t1\t-30\t30;", "\t0\t0\t0\t-30\t30;")
            .replace("\t100\t1\t150\t10;", "\t100\t0\t150\t10;");
        let grid = to_grid(&parse_matpower(&text).unwrap(), 10).unwrap();
        assert!(grid.branches.is_empty());
        assert!(grid.injectors.is_empty());
    }

    #[test]
    fn quadratic_cost_sampling_matches_hand_computation() {
        // c(p) = p² over [0, 2] MW with 3 samples and unit base power:
        // breakpoints (0,0), (1,1), (2,4) with slopes 1 then 3.
        let text = CASE2
            .replace("mpc.baseMVA = 100;", "mpc.baseMVA = 1;")
            .replace("\t100\t1\t150\t10;", "\t100\t1\t2\t0;")
            .replace("\t2\t0\t0\t3\t0.01\t20\t0;", "\t2\t0\t0\t3\t1\t0\t0;");
        let grid = to_grid(&parse_matpower(&text).unwrap(), 3).unwrap();
        let curve = &grid.injectors[0].cost_p;
        assert_eq!(curve.points, vec![(0.0, 0.0), (1.0, 1.0), (2.0, 4.0)]);
        let segments = curve.segments();
        assert_eq!(segments[0].slope, 1.0);
        assert_eq!(segments[1].slope, 3.0);
    }

    #[test]
    fn cost_abscissae_are_per_unit_and_values_stay_in_currency() {
        // c(p) = 20·p $/h over [10, 150] MW on a 100 MVA base: breakpoints
        // run from 0.1 to 1.5 p.u. and the slope becomes 2000 $/p.u.·h.
        let grid = to_grid(&parse_matpower(CASE2).unwrap(), 2).unwrap();
        let linear = CASE2.replace("\t2\t0\t0\t3\t0.01\t20\t0;", "\t2\t0\t0\t2\t20\t0;");
        let grid_lin = to_grid(&parse_matpower(&linear).unwrap(), 2).unwrap();
        let curve = &grid_lin.injectors[0].cost_p;
        assert_eq!(curve.points, vec![(0.1, 200.0), (1.5, 3000.0)]);
        assert_relative_eq!(curve.segments()[0].slope, 2000.0, max_relative = 1e-14);

        // The quadratic original keeps its endpoint values too.
        let quad = &grid.injectors[0].cost_p;
        assert_relative_eq!(quad.value(0.1), 0.01 * 100.0 + 20.0 * 10.0, max_relative = 1e-12);
    }

    #[test]
    fn piecewise_linear_costs_are_rescaled_not_resampled() {
        let text = CASE2.replace(
            "\t2\t0\t0\t3\t0.01\t20\t0;",
            "\t1\t0\t0\t3\t10\t100\t50\t700\t150\t1800;",
        );
        let grid = to_grid(&parse_matpower(&text).unwrap(), 10).unwrap();
        let curve = &grid.injectors[0].cost_p;
        assert_eq!(curve.points, vec![(0.1, 100.0), (0.5, 700.0), (1.5, 1800.0)]);
    }

    #[test]
    fn reactive_cost_rows_attach_when_gencost_is_doubled() {
        let text = CASE2.replace(
            "\t2\t0\t0\t3\t0.01\t20\t0;",
            "\t2\t0\t0\t3\t0.01\t20\t0;\n\t2\t0\t0\t2\t5\t0;",
        );
        let grid = to_grid(&parse_matpower(&text).unwrap(), 2).unwrap();
        let inj = &grid.injectors[0];
        assert!(!inj.cost_p.is_zero());
        assert_relative_eq!(inj.cost_q.segments()[0].slope, 500.0, max_relative = 1e-14);
    }

    #[test]
    fn sampled_convex_polynomials_have_nondecreasing_slopes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let c2 = rng.random_range(0.0..5.0);
            let c1 = rng.random_range(-20.0..20.0);
            let c0 = rng.random_range(0.0..100.0);
            let pmin = rng.random_range(0.0..50.0);
            let pmax = pmin + rng.random_range(1.0..200.0);
            let samples = rng.random_range(2..12usize);
            let gen = vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 100.0, 1.0, pmax, pmin];
            let cost = vec![2.0, 0.0, 0.0, 3.0, c2, c1, c0];
            let curve = cost_curve(&cost, 1, &gen, samples, 100.0).unwrap();
            let segments = curve.segments();
            for pair in segments.windows(2) {
                assert!(
                    pair[1].slope >= pair[0].slope - 1e-9,
                    "slopes must be nondecreasing: {} then {}",
                    pair[0].slope,
                    pair[1].slope
                );
            }
        }
    }

    #[test]
    fn fixed_output_generators_get_a_constant_cost() {
        let text = CASE2.replace("\t100\t1\t150\t10;", "\t100\t1\t50\t50;");
        let grid = to_grid(&parse_matpower(&text).unwrap(), 10).unwrap();
        let curve = &grid.injectors[0].cost_p;
        assert!(curve.is_constant());
        assert_relative_eq!(curve.value(0.5), 0.01 * 2500.0 + 20.0 * 50.0);
    }

    #[test]
    fn inverted_voltage_bounds_are_rejected() {
        let text = CASE2.replace("\t345\t1\t1.05\t0.95;\n];", "\t345\t1\t0.95\t1.05;\n];");
        let err = to_grid(&parse_matpower(&text).unwrap(), 10).unwrap_err();
        assert_eq!(err.to_string(), "bus 2 has Vmin = 1.05 ≥ Vmax = 0.95");
    }

    #[test]
    fn zero_impedance_branches_are_rejected() {
        let text = CASE2.replace("\t0.01\t0.1", "\t0\t0");
        let err = to_grid(&parse_matpower(&text).unwrap(), 10).unwrap_err();
        assert!(matches!(err, MatpowerError::ZeroImpedance { row: 1 }));
    }

    #[test]
    fn branch_referencing_an_unknown_bus_is_rejected() {
        let text = CASE2.replace("\t1\t2\t0.01", "\t1\t9\t0.01");
        let err = to_grid(&parse_matpower(&text).unwrap(), 10).unwrap_err();
        match err {
            MatpowerError::UnknownBus { table, row, bus } => {
                assert_eq!((table, row, bus), ("branch", 1, 9));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn buses_renumber_in_table_order() {
        // Non-contiguous original numbering maps onto 1..N.
        let text = CASE2
            .replace("\t1\t3\t0", "\t101\t3\t0")
            .replace("\t2\t1\t80", "\t205\t1\t80")
            .replace("\t1\t2\t0.01", "\t101\t205\t0.01")
            .replace("mpc.gen = [\n\t1", "mpc.gen = [\n\t205");
        let grid = to_grid(&parse_matpower(&text).unwrap(), 10).unwrap();
        assert_eq!(grid.buses[0].id, BusId(1));
        assert_eq!(grid.buses[1].id, BusId(2));
        assert_eq!(grid.branches[0].src, BusId(1));
        assert_eq!(grid.branches[0].dst, BusId(2));
        assert_eq!(grid.injectors[0].bus, BusId(2));
    }

    #[test]
    fn imported_case_passes_grid_validation() {
        let report = imported().validate();
        assert!(report.is_valid(), "violations: {:?}", report.violations);
    }
}
