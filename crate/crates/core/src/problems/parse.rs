//! Readers for the TSPLIB, CVRPLIB, QAPLIB and LOLIB text formats.

use std::collections::BTreeMap;

use super::{Matrix, Permutation, ProblemInstance};
use crate::error::{parse_err, Error, Result};

/// TSPLIB rounding for EUC_2D: `nint(sqrt(dx^2 + dy^2))`.
fn euc_2d(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    ((dx * dx + dy * dy).sqrt() + 0.5).floor()
}

fn coord_matrix(coords: &[(f64, f64)]) -> Matrix {
    let n = coords.len();
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            let d = euc_2d(coords[i], coords[j]);
            m.set(i, j, d);
            m.set(j, i, d);
        }
    }
    m
}

#[derive(Default)]
struct Header {
    fields: BTreeMap<String, (usize, String)>,
}

impl Header {
    fn get(&self, key: &str) -> Option<&str> {
        self.fields.get(key).map(|(_, v)| v.as_str())
    }

    fn line_of(&self, key: &str) -> usize {
        self.fields.get(key).map_or(0, |(l, _)| *l)
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| parse_err(self.line_of(key), format!("{key} is not an integer: {v:?}"))),
        }
    }
}

/// Line-oriented cursor over a TSPLIB-family file.
struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Lines { lines, pos: 0 }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.lines.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let l = self.peek();
        self.pos += 1;
        l
    }

    fn last_line(&self) -> usize {
        self.lines.last().map_or(1, |(n, _)| *n)
    }

    /// Reads `KEY : VALUE` lines up to the first section keyword.
    fn header(&mut self) -> Result<Header> {
        let mut header = Header::default();
        while let Some((n, line)) = self.peek() {
            if is_section(line) || line == "EOF" {
                break;
            }
            let (key, value) = match line.split_once(':') {
                Some((k, v)) => (k.trim(), v.trim()),
                None => {
                    let mut it = line.splitn(2, char::is_whitespace);
                    match (it.next(), it.next()) {
                        (Some(k), Some(v)) => (k.trim(), v.trim()),
                        _ => return Err(parse_err(n, format!("malformed header line {line:?}"))),
                    }
                }
            };
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(parse_err(n, format!("malformed header line {line:?}")));
            }
            header
                .fields
                .insert(key.to_ascii_uppercase(), (n, value.to_string()));
            self.pos += 1;
        }
        Ok(header)
    }

    /// Collects every numeric token until the next section keyword or EOF.
    fn numbers_until_section(&mut self) -> Result<Vec<(usize, f64)>> {
        let mut out = Vec::new();
        while let Some((n, line)) = self.peek() {
            if is_section(line) || line == "EOF" {
                break;
            }
            for tok in line.split_whitespace() {
                out.push((n, parse_number(n, tok)?));
            }
            self.pos += 1;
        }
        Ok(out)
    }

    /// Moves to `name`, returning the line it was found on.
    fn seek_section(&mut self, name: &str) -> Option<usize> {
        let start = self.pos;
        while let Some((n, line)) = self.next() {
            if section_name(line) == Some(name) {
                return Some(n);
            }
        }
        self.pos = start;
        None
    }
}

fn section_name(line: &str) -> Option<&str> {
    let head = line.split(|c: char| c == ':' || c.is_whitespace()).next()?;
    head.ends_with("_SECTION").then_some(head)
}

fn is_section(line: &str) -> bool {
    section_name(line).is_some()
}

fn parse_number(line: usize, tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_err(line, format!("expected a number, found {tok:?}")))
}

fn read_coords(lines: &mut Lines, n: usize, section_line: usize) -> Result<Vec<(f64, f64)>> {
    let mut coords = vec![None; n];
    for _ in 0..n {
        let (ln, line) = lines
            .next()
            .filter(|(_, l)| !is_section(l) && *l != "EOF")
            .ok_or_else(|| parse_err(section_line, format!("NODE_COORD_SECTION has fewer than {n} nodes")))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(ln, format!("expected `id x y`, found {line:?}")));
        }
        let id = toks[0]
            .parse::<usize>()
            .map_err(|_| parse_err(ln, format!("node id {:?} is not an integer", toks[0])))?;
        if id == 0 || id > n {
            return Err(parse_err(ln, format!("node id {id} outside 1..={n}")));
        }
        let x = parse_number(ln, toks[1])?;
        let y = parse_number(ln, toks[2])?;
        if coords[id - 1].replace((x, y)).is_some() {
            return Err(parse_err(ln, format!("node {id} listed twice")));
        }
    }
    Ok(coords.into_iter().map(|c| c.expect("all ids filled")).collect())
}

fn name_or(header: &Header, fallback: &str) -> String {
    header.get("NAME").unwrap_or(fallback).to_string()
}

/// TSPLIB symmetric TSP with `EDGE_WEIGHT_TYPE` `EUC_2D` or `EXPLICIT` (`FULL_MATRIX`).
pub fn parse_tsplib(text: &str) -> Result<ProblemInstance> {
    let mut lines = Lines::new(text);
    let header = lines.header()?;
    if let Some(t) = header.get("TYPE") {
        if t != "TSP" {
            return Err(parse_err(header.line_of("TYPE"), format!("unsupported TYPE {t:?}")));
        }
    }
    let n = header
        .usize("DIMENSION")?
        .ok_or_else(|| parse_err(lines.last_line(), "missing DIMENSION"))?;
    let name = name_or(&header, "unnamed");
    let weight_type = header.get("EDGE_WEIGHT_TYPE").unwrap_or("EUC_2D");
    let dist = match weight_type {
        "EUC_2D" => {
            let at = lines
                .seek_section("NODE_COORD_SECTION")
                .ok_or_else(|| parse_err(lines.last_line(), "missing NODE_COORD_SECTION"))?;
            coord_matrix(&read_coords(&mut lines, n, at)?)
        }
        "EXPLICIT" => {
            let format = header.get("EDGE_WEIGHT_FORMAT").unwrap_or("FULL_MATRIX");
            if format != "FULL_MATRIX" {
                return Err(parse_err(
                    header.line_of("EDGE_WEIGHT_FORMAT"),
                    format!("unsupported EDGE_WEIGHT_FORMAT {format:?}"),
                ));
            }
            let at = lines
                .seek_section("EDGE_WEIGHT_SECTION")
                .ok_or_else(|| parse_err(lines.last_line(), "missing EDGE_WEIGHT_SECTION"))?;
            let values = lines.numbers_until_section()?;
            if values.len() != n * n {
                return Err(parse_err(
                    at,
                    format!("EDGE_WEIGHT_SECTION has {} values, expected {}", values.len(), n * n),
                ));
            }
            Matrix::from_flat(n, values.into_iter().map(|(_, v)| v).collect())?
        }
        other => {
            return Err(parse_err(
                header.line_of("EDGE_WEIGHT_TYPE"),
                format!("unsupported EDGE_WEIGHT_TYPE {other:?}"),
            ))
        }
    };
    ProblemInstance::tsp(name, dist)
}

/// CVRPLIB: the depot becomes matrix index 0, the remaining nodes keep their
/// relative order as customers `1..=D`.
pub fn parse_cvrp(text: &str) -> Result<ProblemInstance> {
    let mut lines = Lines::new(text);
    let header = lines.header()?;
    let n = header
        .usize("DIMENSION")?
        .ok_or_else(|| parse_err(lines.last_line(), "missing DIMENSION"))?;
    if n < 2 {
        return Err(parse_err(header.line_of("DIMENSION"), "CVRP needs a depot and at least one customer"));
    }
    let capacity: f64 = match header.get("CAPACITY") {
        None => return Err(parse_err(lines.last_line(), "missing CAPACITY")),
        Some(v) => parse_number(header.line_of("CAPACITY"), v)?,
    };
    let name = name_or(&header, "unnamed");
    if let Some(t) = header.get("EDGE_WEIGHT_TYPE") {
        if t != "EUC_2D" {
            return Err(parse_err(header.line_of("EDGE_WEIGHT_TYPE"), format!("unsupported EDGE_WEIGHT_TYPE {t:?}")));
        }
    }

    let mut coords = None;
    let mut demands: Option<Vec<f64>> = None;
    let mut depots: Option<Vec<usize>> = None;
    while let Some((ln, line)) = lines.next() {
        match section_name(line) {
            Some("NODE_COORD_SECTION") => coords = Some(read_coords(&mut lines, n, ln)?),
            Some("DEMAND_SECTION") => {
                let mut d = vec![None; n];
                for _ in 0..n {
                    let (l2, row) = lines
                        .next()
                        .filter(|(_, l)| !is_section(l) && *l != "EOF")
                        .ok_or_else(|| parse_err(ln, format!("DEMAND_SECTION has fewer than {n} entries")))?;
                    let toks: Vec<&str> = row.split_whitespace().collect();
                    if toks.len() != 2 {
                        return Err(parse_err(l2, format!("expected `id demand`, found {row:?}")));
                    }
                    let id = toks[0]
                        .parse::<usize>()
                        .ok()
                        .filter(|&id| id >= 1 && id <= n)
                        .ok_or_else(|| parse_err(l2, format!("bad node id {:?}", toks[0])))?;
                    d[id - 1] = Some(parse_number(l2, toks[1])?);
                }
                demands = Some(d.into_iter().map(|v| v.unwrap_or(0.0)).collect());
            }
            Some("DEPOT_SECTION") => {
                let mut ids = Vec::new();
                for (l2, v) in lines.numbers_until_section()? {
                    if v < 0.0 {
                        break;
                    }
                    if v.fract() != 0.0 || v < 1.0 || v as usize > n {
                        return Err(parse_err(l2, format!("bad depot id {v}")));
                    }
                    ids.push(v as usize);
                }
                depots = Some(ids);
            }
            Some(other) => return Err(parse_err(ln, format!("unexpected section {other}"))),
            None if line == "EOF" => break,
            None => return Err(parse_err(ln, format!("unexpected line {line:?}"))),
        }
    }

    let coords = coords.ok_or_else(|| parse_err(lines.last_line(), "missing NODE_COORD_SECTION"))?;
    let demands = demands.ok_or_else(|| parse_err(lines.last_line(), "missing DEMAND_SECTION"))?;
    let depot = match depots.as_deref() {
        Some([d]) => *d,
        Some([]) | None => return Err(parse_err(lines.last_line(), "depot not identified")),
        Some(_) => return Err(parse_err(lines.last_line(), "multiple depots are not supported")),
    };

    let order: Vec<usize> = std::iter::once(depot - 1)
        .chain((0..n).filter(|&i| i != depot - 1))
        .collect();
    let reordered: Vec<(f64, f64)> = order.iter().map(|&i| coords[i]).collect();
    let customer_demands: Vec<f64> = order[1..].iter().map(|&i| demands[i]).collect();
    if let Some((i, q)) = customer_demands.iter().enumerate().find(|(_, &q)| q > capacity) {
        return Err(parse_err(
            lines.last_line(),
            format!("customer {} demand {q} exceeds capacity {capacity}; instance infeasible", order[i + 1] + 1),
        ));
    }
    ProblemInstance::cvrp(name, coord_matrix(&reordered), customer_demands, capacity)
}

fn numeric_tokens(text: &str) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        for tok in line.split_whitespace() {
            out.push((i + 1, parse_number(i + 1, tok)?));
        }
    }
    Ok(out)
}

fn leading_size(tokens: &[(usize, f64)]) -> Result<usize> {
    let &(line, v) = tokens.first().ok_or_else(|| parse_err(1, "empty file"))?;
    if v.fract() != 0.0 || v < 1.0 {
        return Err(parse_err(line, format!("size must be a positive integer, found {v}")));
    }
    Ok(v as usize)
}

/// QAPLIB: `n`, then the flow matrix, then the distance matrix.
pub fn parse_qaplib(text: &str) -> Result<ProblemInstance> {
    parse_qaplib_named(text, "unnamed")
}

pub(crate) fn parse_qaplib_named(text: &str, name: &str) -> Result<ProblemInstance> {
    let tokens = numeric_tokens(text)?;
    let n = leading_size(&tokens)?;
    let body = &tokens[1..];
    if body.len() != 2 * n * n {
        let line = body.last().map_or(tokens[0].0, |t| t.0);
        return Err(parse_err(
            line,
            format!("expected two {n}x{n} matrices ({} values), found {}", 2 * n * n, body.len()),
        ));
    }
    let flow = Matrix::from_flat(n, body[..n * n].iter().map(|t| t.1).collect())?;
    let dist = Matrix::from_flat(n, body[n * n..].iter().map(|t| t.1).collect())?;
    ProblemInstance::qap(name, flow, dist)
}

/// LOLIB: an optional name line, `n`, then the `n x n` matrix row-major.
pub fn parse_lolib(text: &str) -> Result<ProblemInstance> {
    let mut name = "unnamed".to_string();
    let mut body = text;
    if let Some(first) = text.lines().find(|l| !l.trim().is_empty()) {
        if first.split_whitespace().any(|t| t.parse::<f64>().is_err()) {
            name = first.trim().to_string();
            let offset = text.find(first).expect("line comes from text") + first.len();
            body = &text[offset..];
        }
    }
    let line_shift = text[..text.len() - body.len()].lines().count().saturating_sub(1);
    let tokens: Vec<(usize, f64)> = numeric_tokens(body)
        .map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line: line + line_shift,
                message,
            },
            other => other,
        })?
        .into_iter()
        .map(|(l, v)| (l + line_shift, v))
        .collect();
    let n = leading_size(&tokens)?;
    let body = &tokens[1..];
    if body.len() != n * n {
        let line = body.last().map_or(tokens[0].0, |t| t.0);
        return Err(parse_err(line, format!("expected {} matrix values, found {}", n * n, body.len())));
    }
    ProblemInstance::lop(name, Matrix::from_flat(n, body.iter().map(|t| t.1).collect())?)
}

/// A TSPLIB `.tour` file.
#[derive(Clone, Debug, PartialEq)]
pub struct TourFile {
    pub name: String,
    pub comment: Option<String>,
    pub tour: Permutation,
}

impl TourFile {
    /// The tour length recorded in the COMMENT line, e.g. `Optimal tour (length 21282)`.
    pub fn recorded_length(&self) -> Option<f64> {
        let comment = self.comment.as_deref()?;
        let idx = comment.to_ascii_lowercase().find("length")?;
        comment[idx + "length".len()..]
            .split(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-'))
            .find(|t| !t.is_empty())
            .and_then(|t| t.parse().ok())
    }
}

pub fn parse_tsplib_tour(text: &str) -> Result<TourFile> {
    let mut lines = Lines::new(text);
    let header = lines.header()?;
    let at = lines
        .seek_section("TOUR_SECTION")
        .ok_or_else(|| parse_err(lines.last_line(), "missing TOUR_SECTION"))?;
    let mut order = Vec::new();
    for (ln, v) in lines.numbers_until_section()? {
        if v < 0.0 {
            break;
        }
        if v.fract() != 0.0 {
            return Err(parse_err(ln, format!("tour entry {v} is not an integer")));
        }
        order.push(v as usize);
    }
    if let Some(n) = header.usize("DIMENSION")? {
        if n != order.len() {
            return Err(parse_err(at, format!("DIMENSION is {n} but the tour lists {} nodes", order.len())));
        }
    }
    let tour = Permutation::new(order).map_err(|e| parse_err(at, e.to_string()))?;
    Ok(TourFile {
        name: name_or(&header, "unnamed"),
        comment: header.get("COMMENT").map(str::to_string),
        tour,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{ProblemData, ProblemKind};

    const TRIANGLE: &str = "NAME : tri\nTYPE : TSP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 3 0\n3 0 4\nEOF\n";

    fn dist_rows(inst: &ProblemInstance) -> Vec<Vec<f64>> {
        let ProblemData::Tsp { dist } = inst.data() else { panic!("not TSP") };
        (0..dist.n()).map(|i| dist.row(i).to_vec()).collect()
    }

    #[test]
    fn pythagorean_triangle() {
        let inst = parse_tsplib(TRIANGLE).unwrap();
        assert_eq!(inst.name(), "tri");
        assert_eq!(
            dist_rows(&inst),
            vec![vec![0., 3., 4.], vec![3., 0., 5.], vec![4., 5., 0.]]
        );
    }

    #[test]
    fn nint_rounding() {
        let text = "DIMENSION: 2\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 1 1\nEOF";
        assert_eq!(dist_rows(&parse_tsplib(text).unwrap())[0][1], 1.0);
        // 2.5 rounds up under nint.
        let text = "DIMENSION: 2\nNODE_COORD_SECTION\n1 0 0\n2 1.5 2\nEOF";
        assert_eq!(dist_rows(&parse_tsplib(text).unwrap())[0][1], 3.0);
    }

    #[test]
    fn explicit_full_matrix() {
        let text = "NAME: e\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: FULL_MATRIX\nEDGE_WEIGHT_SECTION\n0 1.5 2\n1.5 0 3\n2 3 0\nEOF\n";
        assert_eq!(dist_rows(&parse_tsplib(text).unwrap())[1], vec![1.5, 0., 3.]);
    }

    #[test]
    fn missing_coord_section_is_reported() {
        let text = "NAME: x\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EUC_2D\nEOF\n";
        let err = parse_tsplib(text).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn non_numeric_coordinate_names_its_line() {
        let text = "DIMENSION: 2\nNODE_COORD_SECTION\n1 0 0\n2 zero 1\nEOF";
        assert!(matches!(parse_tsplib(text), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn malformed_header_is_reported() {
        let text = "NAME: x\n???\nNODE_COORD_SECTION\n1 0 0\nEOF";
        assert!(matches!(parse_tsplib(text), Err(Error::Parse { line: 2, .. })));
    }

    const SMALL_VRP: &str = "NAME : tiny\nTYPE : CVRP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nCAPACITY : 10\nNODE_COORD_SECTION\n1 3 0\n2 0 0\n3 0 4\nDEMAND_SECTION\n1 4\n2 0\n3 6\nDEPOT_SECTION\n2\n-1\nEOF\n";

    #[test]
    fn cvrp_depot_moves_to_index_zero() {
        let inst = parse_cvrp(SMALL_VRP).unwrap();
        assert_eq!(inst.kind(), ProblemKind::Cvrp);
        assert_eq!(inst.dimension(), 2);
        let ProblemData::Cvrp { dist, demands, capacity } = inst.data() else { panic!() };
        assert_eq!(*capacity, 10.0);
        assert_eq!(demands, &vec![4.0, 6.0]);
        // depot (0,0) -> node 1 (3,0) = 3, depot -> node 3 (0,4) = 4
        assert_eq!(dist.get(0, 1), 3.0);
        assert_eq!(dist.get(0, 2), 4.0);
        assert_eq!(dist.get(1, 2), 5.0);
    }

    #[test]
    fn cvrp_single_zero_demand_customer() {
        let text = "NAME: one\nDIMENSION: 2\nCAPACITY: 5\nNODE_COORD_SECTION\n1 0 0\n2 1 0\nDEMAND_SECTION\n1 0\n2 0\nDEPOT_SECTION\n1\n-1\nEOF";
        let inst = parse_cvrp(text).unwrap();
        assert_eq!(inst.dimension(), 1);
        assert_eq!(inst.evaluate(&Permutation::identity(1)).unwrap(), 2.0);
    }

    #[test]
    fn cvrp_infeasible_demand_rejected() {
        let text = SMALL_VRP.replace("CAPACITY : 10", "CAPACITY : 5");
        assert!(matches!(parse_cvrp(&text), Err(Error::Parse { .. })));
        let text = "NAME: big\nDIMENSION: 2\nCAPACITY: 100\nNODE_COORD_SECTION\n1 0 0\n2 1 0\nDEMAND_SECTION\n1 0\n2 200\nDEPOT_SECTION\n1\n-1\nEOF";
        assert!(parse_cvrp(text).is_err());
    }

    #[test]
    fn cvrp_missing_parts() {
        let no_cap = SMALL_VRP.replace("CAPACITY : 10\n", "");
        assert!(parse_cvrp(&no_cap).is_err());
        let no_depot = SMALL_VRP.replace("DEPOT_SECTION\n2\n-1\n", "");
        assert!(parse_cvrp(&no_depot).unwrap_err().to_string().contains("depot"));
        let no_demand = SMALL_VRP.replace("DEMAND_SECTION\n1 4\n2 0\n3 6\n", "");
        assert!(parse_cvrp(&no_demand).is_err());
    }

    #[test]
    fn qaplib_minimal_and_truncated() {
        let inst = parse_qaplib("2\n\n0 1\n1 0\n\n0 5\n5 0\n").unwrap();
        assert_eq!(inst.kind(), ProblemKind::Qap);
        assert_eq!(inst.evaluate(&Permutation::identity(2)).unwrap(), 10.0);
        assert!(matches!(parse_qaplib("2\n0 1\n1 0\n0 5\n5\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn lolib_with_and_without_name() {
        let a = parse_lolib("2\n0 5\n3 0\n").unwrap();
        assert_eq!(a.evaluate(&Permutation::identity(2)).unwrap(), -5.0);
        let b = parse_lolib("N-test\n2\n0 5\n3 0\n").unwrap();
        assert_eq!(b.name(), "N-test");
        assert_eq!(b.dimension(), 2);
        let one = parse_lolib("1\n42\n").unwrap();
        assert_eq!(one.evaluate(&Permutation::identity(1)).unwrap(), -42.0);
        assert!(matches!(parse_lolib("name\n3\n1 2 3\n4 x 6"), Err(Error::Parse { line: 4, .. })));
        assert!(parse_lolib("2\n1 2 3\n").is_err());
    }

    #[test]
    fn tour_file_and_recorded_length() {
        let text = "NAME : tri.opt.tour\nCOMMENT : Optimal tour (length 12)\nTYPE : TOUR\nDIMENSION : 3\nTOUR_SECTION\n1\n3\n2\n-1\nEOF\n";
        let t = parse_tsplib_tour(text).unwrap();
        assert_eq!(t.tour.as_slice(), &[1, 3, 2]);
        assert_eq!(t.recorded_length(), Some(12.0));
        let inst = parse_tsplib(TRIANGLE).unwrap();
        assert_eq!(inst.evaluate(&t.tour).unwrap(), 12.0);
    }
}
