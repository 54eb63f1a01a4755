//! Finite weighted reversible graphs.
//!
//! A [`Graph`] stores transition rates `q(x, y)` densely together with an
//! invariant measure `m` satisfying detailed balance
//! `q(x, y) m(x) = q(y, x) m(y)`. Hop distances are computed once at
//! construction; every stored graph is connected.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};

/// Relative tolerance for the detailed-balance check.
pub const REVERSIBILITY_RTOL: f64 = 1e-12;

/// One directed rate `q(from, to)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEntry {
    pub from: String,
    pub to: String,
    pub rate: f64,
}

impl RateEntry {
    pub fn new(from: impl Into<String>, to: impl Into<String>, rate: f64) -> Self {
        Self { from: from.into(), to: to.into(), rate }
    }
}

/// All-pairs hop distances of a connected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<u32>,
}

impl DistanceMatrix {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> usize {
        self.d[x * self.n + y] as usize
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn diameter(&self) -> usize {
        self.d.iter().copied().max().unwrap_or(0) as usize
    }
}

/// Finite weighted reversible graph; immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    rates: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
    measure: Vec<f64>,
    dist: DistanceMatrix,
    q_min: f64,
}

struct Validated {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    rates: Vec<f64>,
    measure: Vec<f64>,
}

fn validate(
    vertices: Vec<String>,
    entries: &[RateEntry],
    measure: Option<Vec<f64>>,
) -> Result<Validated> {
    let n = vertices.len();
    let mut index = HashMap::with_capacity(n);
    for (i, v) in vertices.iter().enumerate() {
        if index.insert(v.clone(), i).is_some() {
            return Err(Error::DuplicateVertex(v.clone()));
        }
    }
    let lookup = |v: &str| index.get(v).copied().ok_or_else(|| Error::UnknownVertex(v.to_string()));

    let mut rates = vec![0.0; n * n];
    let mut seen = HashSet::new();
    for e in entries {
        let (x, y) = (lookup(&e.from)?, lookup(&e.to)?);
        if x == y {
            return Err(Error::SelfLoop(e.from.clone()));
        }
        if !(e.rate.is_finite() && e.rate > 0.0) {
            return Err(Error::NonPositiveRate { x: e.from.clone(), y: e.to.clone(), rate: e.rate });
        }
        if !seen.insert((x, y)) {
            return Err(Error::DuplicateRate { x: e.from.clone(), y: e.to.clone() });
        }
        rates[x * n + y] = e.rate;
    }

    for x in 0..n {
        for y in 0..n {
            if rates[x * n + y] > 0.0 && rates[y * n + x] == 0.0 {
                return Err(Error::AsymmetricSupport { x: vertices[x].clone(), y: vertices[y].clone() });
            }
        }
    }

    let measure = match measure {
        Some(m) => {
            if m.len() != n {
                return Err(Error::BadParams(format!("measure has {} entries for {n} vertices", m.len())));
            }
            for (v, &mass) in vertices.iter().zip(&m) {
                if !(mass.is_finite() && mass > 0.0) {
                    return Err(Error::NonPositiveMass { vertex: v.clone(), mass });
                }
            }
            m
        }
        None => vec![1.0; n],
    };

    for x in 0..n {
        for y in (x + 1)..n {
            let lhs = rates[x * n + y] * measure[x];
            let rhs = rates[y * n + x] * measure[y];
            if (lhs - rhs).abs() > REVERSIBILITY_RTOL * lhs.abs().max(rhs.abs()) {
                return Err(Error::NonReversible { x: vertices[x].clone(), y: vertices[y].clone(), lhs, rhs });
            }
        }
    }

    Ok(Validated { labels: vertices, index, rates, measure })
}

fn component_ids(n: usize, rates: &[f64]) -> (usize, Vec<usize>) {
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = count;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for y in 0..n {
                if rates[x * n + y] > 0.0 && comp[y] == usize::MAX {
                    comp[y] = count;
                    queue.push_back(y);
                }
            }
        }
        count += 1;
    }
    (count, comp)
}

/// Validates rates and measure and builds a connected [`Graph`].
///
/// When `measure` is `None` the counting measure is used, which forces the
/// rates to be symmetric.
pub fn build_graph(vertices: Vec<String>, entries: &[RateEntry], measure: Option<Vec<f64>>) -> Result<Graph> {
    let v = validate(vertices, entries, measure)?;
    Graph::from_validated(v)
}

/// Like [`build_graph`] but splits a disconnected input into its connected
/// components. Isolated vertices carry no rates and are dropped.
pub fn build_components(
    vertices: Vec<String>,
    entries: &[RateEntry],
    measure: Option<Vec<f64>>,
) -> Result<Vec<Graph>> {
    let v = validate(vertices, entries, measure)?;
    let n = v.labels.len();
    let (count, comp) = component_ids(n, &v.rates);
    let mut out = Vec::new();
    for c in 0..count {
        let members: Vec<usize> = (0..n).filter(|&i| comp[i] == c).collect();
        if members.len() < 2 {
            continue;
        }
        let k = members.len();
        let mut rates = vec![0.0; k * k];
        for (a, &x) in members.iter().enumerate() {
            for (b, &y) in members.iter().enumerate() {
                rates[a * k + b] = v.rates[x * n + y];
            }
        }
        let labels: Vec<String> = members.iter().map(|&i| v.labels[i].clone()).collect();
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        let measure = members.iter().map(|&i| v.measure[i]).collect();
        out.push(Graph::from_validated(Validated { labels, index, rates, measure })?);
    }
    if out.is_empty() {
        return Err(Error::NoEdges);
    }
    Ok(out)
}

impl Graph {
    fn from_validated(v: Validated) -> Result<Self> {
        let n = v.labels.len();
        let q_min = v.rates.iter().copied().filter(|&r| r > 0.0).fold(f64::INFINITY, f64::min);
        if !q_min.is_finite() {
            return Err(Error::NoEdges);
        }
        let (count, _) = component_ids(n, &v.rates);
        if count > 1 {
            return Err(Error::DisconnectedGraph { components: count });
        }
        let neighbors: Vec<Vec<usize>> =
            (0..n).map(|x| (0..n).filter(|&y| v.rates[x * n + y] > 0.0).collect()).collect();

        let mut d = vec![u32::MAX; n * n];
        for s in 0..n {
            d[s * n + s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                let dx = d[s * n + x];
                for &y in &neighbors[x] {
                    if d[s * n + y] == u32::MAX {
                        d[s * n + y] = dx + 1;
                        queue.push_back(y);
                    }
                }
            }
        }

        Ok(Self {
            labels: v.labels,
            index: v.index,
            rates: v.rates,
            neighbors,
            measure: v.measure,
            dist: DistanceMatrix { n, d },
            q_min,
        })
    }

    /// Number of vertices.
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Dense index for `label`, or [`Error::UnknownVertex`].
    pub fn vertex(&self, label: &str) -> Result<usize> {
        self.index_of(label).ok_or_else(|| Error::UnknownVertex(label.to_string()))
    }

    #[inline]
    pub fn rate(&self, x: usize, y: usize) -> f64 {
        self.rates[x * self.n() + y]
    }

    #[inline]
    pub fn mass(&self, x: usize) -> f64 {
        self.measure[x]
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn total_mass(&self) -> f64 {
        self.measure.iter().sum()
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.neighbors[x]
    }

    /// Total outgoing rate `Deg(x)`.
    pub fn degree(&self, x: usize) -> f64 {
        self.neighbors[x].iter().map(|&y| self.rate(x, y)).sum()
    }

    pub fn max_degree(&self) -> f64 {
        (0..self.n()).map(|x| self.degree(x)).fold(0.0, f64::max)
    }

    /// Edge weight `w(x, y) = m(x) q(x, y)`, symmetric by reversibility.
    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.measure[x] * self.rate(x, y)
    }

    /// Minimum positive rate.
    pub fn q_min(&self) -> f64 {
        self.q_min
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.dist
    }

    #[inline]
    pub fn dist(&self, x: usize, y: usize) -> usize {
        self.dist.get(x, y)
    }

    pub fn diameter(&self) -> usize {
        self.dist.diameter()
    }

    /// Closed ball of hop radius `r` around `x`, ascending.
    pub fn ball(&self, x: usize, r: usize) -> Vec<usize> {
        (0..self.n()).filter(|&y| self.dist(x, y) <= r).collect()
    }

    /// Unordered adjacent pairs `(x, y)` with `x < y`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n())
            .flat_map(|x| self.neighbors[x].iter().filter(move |&&y| y > x).map(move |&y| (x, y)))
            .collect()
    }

    /// Every directed rate as a [`RateEntry`], in index order.
    pub fn rate_entries(&self) -> Vec<RateEntry> {
        (0..self.n())
            .flat_map(|x| {
                self.neighbors[x].iter().map(move |&y| RateEntry::new(&self.labels[x], &self.labels[y], self.rate(x, y)))
            })
            .collect()
    }

    /// `Δf(x) = Σ_y q(x,y)(f(y) − f(x))`.
    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|x| self.neighbors[x].iter().map(|&y| self.rate(x, y) * (f[y] - f[x])).sum())
            .collect()
    }

    /// `Σ_x m(x) f(x) g(x)`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.measure.iter().zip(f).zip(g).map(|((m, a), b)| m * a * b).sum()
    }

    /// `‖f‖₁ = Σ_x m(x)|f(x)|`.
    pub fn l1_norm(&self, f: &[f64]) -> f64 {
        self.measure.iter().zip(f).map(|(m, a)| m * a.abs()).sum()
    }

    /// Optimal Lipschitz constant `max_{x≠y} |f(x) − f(y)| / d(x,y)`.
    pub fn lipschitz(&self, f: &[f64]) -> f64 {
        let n = self.n();
        let mut best = 0.0f64;
        for x in 0..n {
            for y in (x + 1)..n {
                best = best.max((f[x] - f[y]).abs() / self.dist(x, y) as f64);
            }
        }
        best
    }

    /// Copy with every rate multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Graph> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::BadParams(format!("scale factor must be positive, got {c}")));
        }
        let mut g = self.clone();
        g.rates.iter_mut().for_each(|r| *r *= c);
        g.q_min *= c;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k2(qxy: f64, qyx: f64, m: Option<Vec<f64>>) -> Result<Graph> {
        build_graph(
            vec!["x".into(), "y".into()],
            &[RateEntry::new("x", "y", qxy), RateEntry::new("y", "x", qyx)],
            m,
        )
    }

    #[test]
    fn unit_edge_is_valid() {
        let g = k2(1.0, 1.0, None).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.q_min(), 1.0);
        assert_eq!(g.dist(0, 1), 1);
    }

    #[test]
    fn detailed_balance_is_enforced() {
        assert!(matches!(k2(2.0, 1.0, Some(vec![1.0, 1.0])), Err(Error::NonReversible { .. })));
        assert!(matches!(k2(2.0, 1.0, None), Err(Error::NonReversible { .. })));
        let g = k2(2.0, 1.0, Some(vec![1.0, 2.0])).unwrap();
        assert_eq!(g.weight(0, 1), g.weight(1, 0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let v = || vec!["a".to_string(), "b".to_string(), "c".to_string()];
        assert!(matches!(
            build_graph(v(), &[RateEntry::new("a", "b", 1.0)], None),
            Err(Error::AsymmetricSupport { .. })
        ));
        assert!(matches!(
            build_graph(v(), &[RateEntry::new("a", "b", -1.0), RateEntry::new("b", "a", 1.0)], None),
            Err(Error::NonPositiveRate { .. })
        ));
        assert!(matches!(
            build_graph(v(), &[RateEntry::new("a", "b", 1.0), RateEntry::new("b", "a", 1.0)], None),
            Err(Error::DisconnectedGraph { components: 2 })
        ));
        assert!(matches!(
            build_graph(v(), &[RateEntry::new("a", "z", 1.0)], None),
            Err(Error::UnknownVertex(_))
        ));
        assert!(matches!(build_graph(v(), &[], None), Err(Error::NoEdges)));
    }

    #[test]
    fn components_are_split() {
        let v: Vec<String> = ["a", "b", "c", "d", "e"].iter().map(|s| s.to_string()).collect();
        let e = [
            RateEntry::new("a", "b", 1.0),
            RateEntry::new("b", "a", 1.0),
            RateEntry::new("c", "d", 2.0),
            RateEntry::new("d", "c", 2.0),
        ];
        let parts = build_components(v, &e, None).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[1].labels(), &["c".to_string(), "d".to_string()]);
        assert_eq!(parts[1].q_min(), 2.0);
    }

    #[test]
    fn q_min_picks_smallest_rate() {
        let v: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let e = [
            RateEntry::new("a", "b", 1.0),
            RateEntry::new("b", "a", 1.0),
            RateEntry::new("b", "c", 0.5),
            RateEntry::new("c", "b", 0.5),
            RateEntry::new("a", "c", 2.0),
            RateEntry::new("c", "a", 2.0),
        ];
        assert_eq!(build_graph(v, &e, None).unwrap().q_min(), 0.5);
    }
}
