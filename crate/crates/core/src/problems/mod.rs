//! The four permutation-coded problem families and their objectives.
//!
//! Every objective is in minimization form. Solutions are [`Permutation`]s of
//! the labels `1..=D`; how a permutation is read depends on the family:
//!
//! | kind | reading of `s` | objective |
//! |------|----------------|-----------|
//! | TSP  | visiting order of cities | closed tour length |
//! | CVRP | giant tour of customers, split greedily by capacity | total route length including depot legs |
//! | QAP  | `s[k]` = facility placed at location `k` | `sum_ij flow[s_i][s_j] * dist[i][j]` |
//! | LOP  | row/column ordering of the weight matrix | negated sum of `w[s_i][s_j]` over `i <= j` |
//!
//! The QAP objective is the standard QAPLIB form. A literal reading of the
//! original formulation, `sum_ij c[s_i][s_j] * d[s_i][s_j]`, would make every
//! permutation cost the same, so it is not used.

mod parse;

pub use parse::{parse_cvrp, parse_lolib, parse_qaplib, parse_tsplib, parse_tsplib_tour};

use std::fmt;
use std::ops::Index;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};

/// Dense row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Instance(format!(
                    "matrix row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        Ok(Matrix { n, data })
    }

    pub fn from_flat(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Instance(format!(
                "matrix needs {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Matrix { n, data })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    fn is_symmetric_zero_diagonal(&self) -> bool {
        (0..self.n).all(|i| {
            self.get(i, i) == 0.0 && (i + 1..self.n).all(|j| self.get(i, j) == self.get(j, i))
        })
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

/// An ordering of the labels `1..=D`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    /// Validates that `order` is a bijection on `1..=order.len()`.
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let d = order.len();
        let mut seen = vec![false; d + 1];
        for &label in &order {
            if label == 0 || label > d {
                return Err(contract(format!("label {label} outside 1..={d}")));
            }
            if std::mem::replace(&mut seen[label], true) {
                return Err(contract(format!("label {label} repeated")));
            }
        }
        Ok(Permutation(order))
    }

    pub fn identity(d: usize) -> Self {
        Permutation((1..=d).collect())
    }

    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        let mut order: Vec<usize> = (1..=d).collect();
        order.shuffle(rng);
        Permutation(order)
    }

    /// Skips validation; callers inside the crate guarantee bijectivity.
    pub(crate) fn from_vec_unchecked(order: Vec<usize>) -> Self {
        debug_assert!(Permutation::new(order.clone()).is_ok());
        Permutation(order)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(order: Vec<usize>) -> Result<Self> {
        Permutation::new(order)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Vec<usize> {
        p.0
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for label in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{label}")?;
            first = false;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ProblemKind {
    Tsp,
    Cvrp,
    Qap,
    Lop,
}

impl ProblemKind {
    /// Routing problems compare solutions by tour edges; assignment/ordering
    /// problems compare them position by position.
    pub fn is_permutation_based(self) -> bool {
        matches!(self, ProblemKind::Tsp | ProblemKind::Cvrp)
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Tsp => "TSP",
            ProblemKind::Cvrp => "CVRP",
            ProblemKind::Qap => "QAP",
            ProblemKind::Lop => "LOP",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemData {
    Tsp {
        dist: Matrix,
    },
    /// `dist` is `(D+1) x (D+1)` with the depot at index 0.
    Cvrp {
        dist: Matrix,
        demands: Vec<f64>,
        capacity: f64,
    },
    Qap {
        flow: Matrix,
        dist: Matrix,
    },
    Lop {
        weight: Matrix,
    },
}

/// A parsed, validated problem instance. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    name: String,
    dimension: usize,
    data: ProblemData,
}

impl ProblemInstance {
    pub fn tsp(name: impl Into<String>, dist: Matrix) -> Result<Self> {
        check_dimension(dist.n())?;
        if !dist.is_symmetric_zero_diagonal() {
            return Err(Error::Instance(
                "TSP distances must be symmetric with a zero diagonal".into(),
            ));
        }
        check_non_negative(&dist, "distance")?;
        Ok(ProblemInstance {
            name: name.into(),
            dimension: dist.n(),
            data: ProblemData::Tsp { dist },
        })
    }

    pub fn cvrp(
        name: impl Into<String>,
        dist: Matrix,
        demands: Vec<f64>,
        capacity: f64,
    ) -> Result<Self> {
        let d = demands.len();
        check_dimension(d)?;
        if dist.n() != d + 1 {
            return Err(Error::Instance(format!(
                "CVRP distance matrix must be {0}x{0} for {d} customers",
                d + 1
            )));
        }
        if !dist.is_symmetric_zero_diagonal() {
            return Err(Error::Instance(
                "CVRP distances must be symmetric with a zero diagonal".into(),
            ));
        }
        check_non_negative(&dist, "distance")?;
        if !(capacity > 0.0) {
            return Err(Error::Instance(format!("capacity {capacity} must be positive")));
        }
        for (i, &q) in demands.iter().enumerate() {
            if q < 0.0 {
                return Err(Error::Instance(format!("customer {} has negative demand", i + 1)));
            }
            if q > capacity {
                return Err(Error::Instance(format!(
                    "customer {} demand {q} exceeds vehicle capacity {capacity}",
                    i + 1
                )));
            }
        }
        Ok(ProblemInstance {
            name: name.into(),
            dimension: d,
            data: ProblemData::Cvrp {
                dist,
                demands,
                capacity,
            },
        })
    }

    pub fn qap(name: impl Into<String>, flow: Matrix, dist: Matrix) -> Result<Self> {
        check_dimension(flow.n())?;
        if flow.n() != dist.n() {
            return Err(Error::Instance(format!(
                "flow is {0}x{0} but distance is {1}x{1}",
                flow.n(),
                dist.n()
            )));
        }
        check_non_negative(&flow, "flow")?;
        check_non_negative(&dist, "distance")?;
        Ok(ProblemInstance {
            name: name.into(),
            dimension: flow.n(),
            data: ProblemData::Qap { flow, dist },
        })
    }

    pub fn lop(name: impl Into<String>, weight: Matrix) -> Result<Self> {
        check_dimension(weight.n())?;
        Ok(ProblemInstance {
            name: name.into(),
            dimension: weight.n(),
            data: ProblemData::Lop { weight },
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ProblemKind {
        match self.data {
            ProblemData::Tsp { .. } => ProblemKind::Tsp,
            ProblemData::Cvrp { .. } => ProblemKind::Cvrp,
            ProblemData::Qap { .. } => ProblemKind::Qap,
            ProblemData::Lop { .. } => ProblemKind::Lop,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn data(&self) -> &ProblemData {
        &self.data
    }

    /// Objective of a full solution.
    pub fn evaluate(&self, s: &Permutation) -> Result<f64> {
        if s.len() != self.dimension {
            return Err(contract(format!(
                "permutation of length {} evaluated on {} ({}, D={})",
                s.len(),
                self.name,
                self.kind(),
                self.dimension
            )));
        }
        Ok(self.cost(s.as_slice()))
    }

    /// Objective of a sequence of distinct labels drawn from `1..=D`.
    ///
    /// The sequence may be partial: TSP closes the tour over the labels
    /// present, CVRP splits the partial giant tour, QAP places the labels on
    /// locations `0..len`, and LOP sums the induced sub-block. On a full
    /// permutation this equals [`ProblemInstance::evaluate`].
    pub fn cost(&self, order: &[usize]) -> f64 {
        match &self.data {
            ProblemData::Tsp { dist } => tour_length(dist, order),
            ProblemData::Cvrp {
                dist,
                demands,
                capacity,
            } => {
                let mut total = 0.0;
                for_each_route(demands, *capacity, order, |route| {
                    total += route_length(dist, route);
                });
                total
            }
            ProblemData::Qap { flow, dist } => {
                let mut total = 0.0;
                for (i, &a) in order.iter().enumerate() {
                    let flow_row = flow.row(a - 1);
                    let dist_row = dist.row(i);
                    for (j, &b) in order.iter().enumerate() {
                        total += flow_row[b - 1] * dist_row[j];
                    }
                }
                total
            }
            ProblemData::Lop { weight } => {
                let mut total = 0.0;
                for (i, &a) in order.iter().enumerate() {
                    let row = weight.row(a - 1);
                    for &b in &order[i..] {
                        total += row[b - 1];
                    }
                }
                -total
            }
        }
    }

    /// Greedy sequential split of a giant tour into capacity-feasible routes.
    pub fn decode_cvrp(&self, s: &Permutation) -> Result<RouteSet> {
        let ProblemData::Cvrp {
            demands, capacity, ..
        } = &self.data
        else {
            return Err(contract(format!("decode_cvrp called on a {} instance", self.kind())));
        };
        let mut routes = Vec::new();
        for_each_route(demands, *capacity, s.as_slice(), |route| routes.push(route.to_vec()));
        Ok(RouteSet { routes })
    }
}

fn check_dimension(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::Instance("instance has no nodes".into()));
    }
    Ok(())
}

fn check_non_negative(m: &Matrix, what: &str) -> Result<()> {
    if m.data.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::Instance(format!("{what} matrix has a negative or NaN entry")));
    }
    Ok(())
}

#[inline]
fn tour_length(dist: &Matrix, order: &[usize]) -> f64 {
    match order {
        [] => 0.0,
        [first, ..] => {
            let mut total = 0.0;
            for w in order.windows(2) {
                total += dist.get(w[0] - 1, w[1] - 1);
            }
            total + dist.get(order[order.len() - 1] - 1, first - 1)
        }
    }
}

/// Depot (index 0) -> route -> depot. Customer labels index the matrix directly.
#[inline]
fn route_length(dist: &Matrix, route: &[usize]) -> f64 {
    let mut total = dist.get(0, route[0]);
    for w in route.windows(2) {
        total += dist.get(w[0], w[1]);
    }
    total + dist.get(route[route.len() - 1], 0)
}

/// Opens a new route whenever the next customer would overflow the vehicle.
fn for_each_route(demands: &[f64], capacity: f64, order: &[usize], mut f: impl FnMut(&[usize])) {
    let mut start = 0;
    let mut load = 0.0;
    for (i, &c) in order.iter().enumerate() {
        let q = demands[c - 1];
        if i > start && load + q > capacity {
            f(&order[start..i]);
            start = i;
            load = 0.0;
        }
        load += q;
    }
    if start < order.len() {
        f(&order[start..]);
    }
}

/// Capacity-feasible routes whose concatenation is the source giant tour.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RouteSet {
    pub routes: Vec<Vec<usize>>,
}

impl RouteSet {
    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn concat(&self) -> Vec<usize> {
        self.routes.concat()
    }
}
