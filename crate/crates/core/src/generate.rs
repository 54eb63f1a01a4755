//! Standard graph families used as a test corpus and by `curvlab gen`.
//!
//! Families are written in a compact call syntax, e.g. `cycle(6)`,
//! `torus2d(4,4)` or `product(cycle(4),path(3))`; see [`Family::parse`].

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{build_graph, Graph, RateEntry};

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Cycle { n: usize },
    Path { n: usize },
    Complete { n: usize },
    Hypercube { dim: usize },
    Torus2d { rows: usize, cols: usize },
    /// Constant-rate chain on `0..n`. The absorbing variant is a directed
    /// generator and only exists in [`crate::heat`].
    BirthDeath { n: usize, rate: f64, absorbing: bool },
    CartesianProduct(Box<Family>, Box<Family>),
    /// Two unit-rate cliques of size `clique` joined by one bridge of rate `bridge`.
    Dumbbell { clique: usize, bridge: f64 },
    /// Connected random graph with random conductances and random measure.
    RandomReversible { n: usize, p: f64, seed: u64 },
}

fn bad(msg: impl Into<String>) -> Error {
    Error::BadParams(msg.into())
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = s[start..].trim();
    if !last.is_empty() || !parts.is_empty() {
        parts.push(last);
    }
    parts
}

fn num<T: std::str::FromStr>(family: &str, args: &[&str], i: usize) -> Result<T> {
    let raw = args.get(i).ok_or_else(|| bad(format!("{family}: missing argument {}", i + 1)))?;
    raw.parse().map_err(|_| bad(format!("{family}: cannot parse argument {:?}", raw)))
}

impl Family {
    /// Parses the call syntax `name(arg, ...)`.
    pub fn parse(text: &str) -> Result<Family> {
        let text = text.trim();
        let (name, args) = match text.find('(') {
            Some(open) if text.ends_with(')') => (&text[..open], &text[open + 1..text.len() - 1]),
            _ => return Err(bad(format!("expected name(args), got {text:?}"))),
        };
        let args = split_top_level(args);
        let fam = match name.trim() {
            "cycle" => Family::Cycle { n: num(name, &args, 0)? },
            "path" => Family::Path { n: num(name, &args, 0)? },
            "complete" => Family::Complete { n: num(name, &args, 0)? },
            "hypercube" => Family::Hypercube { dim: num(name, &args, 0)? },
            "torus2d" => Family::Torus2d { rows: num(name, &args, 0)?, cols: num(name, &args, 1)? },
            "birth_death" => Family::BirthDeath {
                n: num(name, &args, 0)?,
                rate: if args.len() > 1 { num(name, &args, 1)? } else { 1.0 },
                absorbing: if args.len() > 2 { num(name, &args, 2)? } else { false },
            },
            "product" | "cartesian_product" => {
                if args.len() != 2 {
                    return Err(bad("product takes two families"));
                }
                Family::CartesianProduct(Box::new(Family::parse(args[0])?), Box::new(Family::parse(args[1])?))
            }
            "dumbbell" => Family::Dumbbell {
                clique: num(name, &args, 0)?,
                bridge: if args.len() > 1 { num(name, &args, 1)? } else { 1.0 },
            },
            "random" => Family::RandomReversible {
                n: num(name, &args, 0)?,
                p: num(name, &args, 1)?,
                seed: num(name, &args, 2)?,
            },
            other => return Err(bad(format!("unknown family {other:?}"))),
        };
        Ok(fam)
    }

    /// Builds a family from its name and `key=value` parameters, e.g.
    /// `("torus2d", "rows=4,cols=4")`. Names without parentheses only; nested
    /// products need the call syntax.
    pub fn from_named(name: &str, params: &str) -> Result<Family> {
        let keys: &[&str] = match name {
            "cycle" | "path" | "complete" => &["n"],
            "hypercube" => &["dim"],
            "torus2d" => &["rows", "cols"],
            "birth_death" => &["n", "rate", "absorbing"],
            "dumbbell" => &["clique", "bridge"],
            "random" => &["n", "p", "seed"],
            other => return Err(bad(format!("unknown family {other:?} (products use the call syntax)"))),
        };
        let mut given: Vec<(&str, &str)> = Vec::new();
        for item in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| bad(format!("expected key=value, got {item:?}")))?;
            let k = k.trim();
            if !keys.contains(&k) {
                return Err(bad(format!("{name} has no parameter {k:?}; expected {}", keys.join(", "))));
            }
            given.push((k, v.trim()));
        }
        let mut args = Vec::new();
        for k in keys {
            match given.iter().find(|(g, _)| g == k) {
                Some((_, v)) => args.push(*v),
                None => break,
            }
        }
        if args.len() != given.len() {
            return Err(bad(format!("{name} parameters cannot skip an earlier one: {}", keys.join(", "))));
        }
        Family::parse(&format!("{name}({})", args.join(",")))
    }

    /// Builds the family member.
    pub fn build(&self) -> Result<Graph> {
        match *self {
            Family::Cycle { n } => {
                if n < 3 {
                    return Err(bad("cycle needs n >= 3"));
                }
                unit_graph(n, (0..n).map(|i| (i, (i + 1) % n)))
            }
            Family::Path { n } => {
                if n < 2 {
                    return Err(bad("path needs n >= 2"));
                }
                unit_graph(n, (0..n - 1).map(|i| (i, i + 1)))
            }
            Family::Complete { n } => {
                if n < 2 {
                    return Err(bad("complete graph needs n >= 2"));
                }
                unit_graph(n, (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))))
            }
            Family::Hypercube { dim } => hypercube(dim),
            Family::Torus2d { rows, cols } => torus(rows, cols),
            Family::BirthDeath { n, rate, absorbing } => {
                if absorbing {
                    return Err(bad("the absorbing chain is not reversible; use heat::birth_death_generator"));
                }
                if n < 2 || !(rate.is_finite() && rate > 0.0) {
                    return Err(bad("birth_death needs n >= 2 and a positive rate"));
                }
                let labels = (0..n).map(|i| i.to_string()).collect();
                let entries: Vec<RateEntry> = (0..n - 1)
                    .flat_map(|i| {
                        [
                            RateEntry::new(i.to_string(), (i + 1).to_string(), rate),
                            RateEntry::new((i + 1).to_string(), i.to_string(), rate),
                        ]
                    })
                    .collect();
                build_graph(labels, &entries, None)
            }
            Family::CartesianProduct(ref a, ref b) => cartesian_product(&a.build()?, &b.build()?),
            Family::Dumbbell { clique, bridge } => dumbbell(clique, bridge),
            Family::RandomReversible { n, p, seed } => random_reversible(n, p, seed),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Cycle { n } => write!(f, "cycle({n})"),
            Family::Path { n } => write!(f, "path({n})"),
            Family::Complete { n } => write!(f, "complete({n})"),
            Family::Hypercube { dim } => write!(f, "hypercube({dim})"),
            Family::Torus2d { rows, cols } => write!(f, "torus2d({rows},{cols})"),
            Family::BirthDeath { n, rate, absorbing } => write!(f, "birth_death({n},{rate},{absorbing})"),
            Family::CartesianProduct(a, b) => write!(f, "product({a},{b})"),
            Family::Dumbbell { clique, bridge } => write!(f, "dumbbell({clique},{bridge})"),
            Family::RandomReversible { n, p, seed } => write!(f, "random({n},{p},{seed})"),
        }
    }
}

/// Convenience wrapper around [`Family::parse`] + [`Family::build`].
pub fn generate(text: &str) -> Result<Graph> {
    Family::parse(text)?.build()
}

fn unit_graph_labeled(labels: Vec<String>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Graph> {
    let entries: Vec<RateEntry> = edges
        .into_iter()
        .flat_map(|(i, j)| {
            [RateEntry::new(&labels[i], &labels[j], 1.0), RateEntry::new(&labels[j], &labels[i], 1.0)]
        })
        .collect();
    build_graph(labels, &entries, None)
}

fn unit_graph(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Graph> {
    unit_graph_labeled((0..n).map(|i| i.to_string()).collect(), edges)
}

fn hypercube(dim: usize) -> Result<Graph> {
    if dim == 0 || dim > 12 {
        return Err(bad("hypercube dimension must be in 1..=12"));
    }
    let n = 1usize << dim;
    let labels = (0..n).map(|i| format!("{:0width$b}", i, width = dim)).collect();
    let edges = (0..n).flat_map(|i| (0..dim).map(move |b| (i, i ^ (1 << b))).filter(|&(i, j)| i < j));
    unit_graph_labeled(labels, edges)
}

fn torus(rows: usize, cols: usize) -> Result<Graph> {
    if rows < 3 || cols < 3 {
        return Err(bad("torus2d needs both sides >= 3"));
    }
    let id = |r: usize, c: usize| r * cols + c;
    let labels = (0..rows).flat_map(|r| (0..cols).map(move |c| format!("{r},{c}"))).collect();
    let edges = (0..rows).flat_map(|r| {
        (0..cols).flat_map(move |c| [(id(r, c), id(r, (c + 1) % cols)), (id(r, c), id((r + 1) % rows, c))])
    });
    unit_graph_labeled(labels, edges)
}

/// Cartesian product: `(g,h) → (g',h)` at rate `q_G(g,g')`, `(g,h) → (g,h')`
/// at rate `q_H(h,h')`, measure `m_G ⊗ m_H`.
pub fn cartesian_product(a: &Graph, b: &Graph) -> Result<Graph> {
    let (na, nb) = (a.n(), b.n());
    let id = |i: usize, j: usize| i * nb + j;
    let labels: Vec<String> =
        (0..na).flat_map(|i| (0..nb).map(move |j| format!("({},{})", a.label(i), b.label(j)))).collect();
    let mut entries = Vec::new();
    for i in 0..na {
        for j in 0..nb {
            for &i2 in a.neighbors(i) {
                entries.push(RateEntry::new(&labels[id(i, j)], &labels[id(i2, j)], a.rate(i, i2)));
            }
            for &j2 in b.neighbors(j) {
                entries.push(RateEntry::new(&labels[id(i, j)], &labels[id(i, j2)], b.rate(j, j2)));
            }
        }
    }
    let measure = (0..na).flat_map(|i| (0..nb).map(move |j| a.mass(i) * b.mass(j))).collect();
    build_graph(labels, &entries, Some(measure))
}

fn dumbbell(clique: usize, bridge: f64) -> Result<Graph> {
    if clique < 2 || !(bridge.is_finite() && bridge > 0.0) {
        return Err(bad("dumbbell needs clique >= 2 and a positive bridge rate"));
    }
    let labels: Vec<String> =
        (0..clique).map(|i| format!("L{i}")).chain((0..clique).map(|i| format!("R{i}"))).collect();
    let mut entries = Vec::new();
    for side in [0, clique] {
        for i in 0..clique {
            for j in 0..clique {
                if i != j {
                    entries.push(RateEntry::new(&labels[side + i], &labels[side + j], 1.0));
                }
            }
        }
    }
    entries.push(RateEntry::new("L0", "R0", bridge));
    entries.push(RateEntry::new("R0", "L0", bridge));
    build_graph(labels, &entries, None)
}

fn random_reversible(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n < 2 || !(0.0..=1.0).contains(&p) {
        return Err(bad("random needs n >= 2 and p in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mass: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let mut conductance = vec![0.0; n * n];
    for v in 1..n {
        let u = rng.gen_range(0..v);
        let w = rng.gen_range(0.5..2.0);
        conductance[u * n + v] = w;
        conductance[v * n + u] = w;
    }
    for u in 0..n {
        for v in (u + 1)..n {
            if conductance[u * n + v] == 0.0 && rng.gen_bool(p) {
                let w = rng.gen_range(0.5..2.0);
                conductance[u * n + v] = w;
                conductance[v * n + u] = w;
            }
        }
    }
    let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let mut entries = Vec::new();
    for x in 0..n {
        for y in 0..n {
            let w = conductance[x * n + y];
            if w > 0.0 {
                entries.push(RateEntry::new(&labels[x], &labels[y], w / mass[x]));
            }
        }
    }
    build_graph(labels, &entries, Some(mass))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_has_unit_rates() {
        let g = generate("cycle(6)").unwrap();
        assert_eq!(g.n(), 6);
        assert_eq!(g.rate_entries().len(), 12);
        assert!(g.rate_entries().iter().all(|e| e.rate == 1.0));
        assert_eq!(g.dist(0, 3), 3);
        assert_eq!(g.diameter(), 3);
    }

    #[test]
    fn hypercube_is_regular() {
        let g = generate("hypercube(3)").unwrap();
        assert_eq!(g.n(), 8);
        assert!((0..8).all(|x| g.neighbors(x).len() == 3));
        let (a, b) = (g.vertex("000").unwrap(), g.vertex("111").unwrap());
        assert_eq!(g.dist(a, b), 3);
    }

    #[test]
    fn simple_diameters() {
        assert_eq!(generate("complete(5)").unwrap().diameter(), 1);
        assert_eq!(generate("path(7)").unwrap().diameter(), 6);
        assert_eq!(generate("torus2d(4,4)").unwrap().diameter(), 4);
    }

    #[test]
    fn product_adds_diameters() {
        for (a, b) in [("cycle(5)", "path(3)"), ("cycle(6)", "cycle(4)"), ("path(4)", "path(2)")] {
            let (ga, gb) = (generate(a).unwrap(), generate(b).unwrap());
            let p = cartesian_product(&ga, &gb).unwrap();
            assert_eq!(p.diameter(), ga.diameter() + gb.diameter(), "{a} x {b}");
        }
        let p = generate("product(cycle(4),path(3))").unwrap();
        assert_eq!(p.n(), 12);
    }

    #[test]
    fn birth_death_family() {
        let g = generate("birth_death(5,2)").unwrap();
        assert_eq!(g.q_min(), 2.0);
        assert_eq!(g.diameter(), 4);
        assert!(matches!(generate("birth_death(5,2,true)"), Err(Error::BadParams(_))));
    }

    #[test]
    fn random_graphs_are_reproducible() {
        let a = generate("random(8,0.3,11)").unwrap();
        let b = generate("random(8,0.3,11)").unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate("random(8,0.3,12)").unwrap());
    }

    #[test]
    fn named_parameters() {
        assert_eq!(Family::from_named("cycle", "n=6").unwrap(), Family::Cycle { n: 6 });
        assert_eq!(Family::from_named("torus2d", "cols=5, rows=4").unwrap(), Family::Torus2d { rows: 4, cols: 5 });
        assert!(Family::from_named("cycle", "m=6").is_err());
        assert!(Family::from_named("random", "n=5,seed=1").is_err());
    }

    #[test]
    fn parse_errors() {
        assert!(Family::parse("cycle").is_err());
        assert!(Family::parse("cycle(x)").is_err());
        assert!(Family::parse("blob(3)").is_err());
        assert!(generate("cycle(2)").is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in ["cycle(6)", "torus2d(3,4)", "product(cycle(4),path(3))", "random(6,0.5,3)"] {
            let f = Family::parse(s).unwrap();
            assert_eq!(Family::parse(&f.to_string()).unwrap(), f);
        }
    }
}
