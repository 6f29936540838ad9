//! Position-invariant pairwise range test, plausibility graph and greedy
//! satellite-unique clique selection.

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::acquisition::SignalCandidate;
use crate::geometry::EcefVector;
use crate::{Error, Result};

/// Near-parallel tolerance on `1 - v vᵀ'`.
pub const PARALLEL_TOLERANCE: f64 = 1e-6;

/// Admissible satellite distances, m.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RangeBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for RangeBounds {
    fn default() -> Self {
        Self { min: 18_000e3, max: 28_000e3 }
    }
}

impl RangeBounds {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min > 0.0 && min < max) {
            return Err(Error::InvalidGeometry(format!("range bounds [{min}, {max}] are not ordered")));
        }
        Ok(Self { min, max })
    }
}

/// What the pairwise test needs to know about one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairInput {
    pub prn: u8,
    pub pseudorange: f64,
    /// Unit DoA vector in the array frame.
    pub direction: Vector3<f64>,
    /// Almanac position of the claimed satellite.
    pub satellite: EcefVector,
}

/// Outcome of one directed pairwise test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairwiseRange {
    /// `(rho^_{v <- v'}, c)`.
    Root { range: f64, c: f64 },
    /// Near-parallel directions or negative discriminant.
    Implausible,
}

/// Distance to `a`'s satellite implied by `a` and `b`, independent of the
/// receiver position, clock and orientation.
pub fn pairwise_range(a: &PairInput, b: &PairInput) -> Result<PairwiseRange> {
    if a.prn == b.prn {
        return Err(Error::SamePair);
    }
    let one_minus = 1.0 - a.direction.dot(&b.direction);
    if one_minus.abs() < PARALLEL_TOLERANCE {
        return Ok(PairwiseRange::Implausible);
    }
    let rd = a.pseudorange - b.pseudorange;
    let qa = 2.0 * one_minus;
    let qb = -2.0 * rd * one_minus;
    let qc = rd * rd - (a.satellite - b.satellite).norm_squared();
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Ok(PairwiseRange::Implausible);
    }
    Ok(PairwiseRange::Root { range: (-qb + disc.sqrt()) / (2.0 * qa), c: qc })
}

/// `1` iff the root lies within the bounds and `c < 0`.
pub fn plausibility(result: &PairwiseRange, bounds: &RangeBounds) -> bool {
    match *result {
        PairwiseRange::Root { range, c } => c < 0.0 && range >= bounds.min && range <= bounds.max,
        PairwiseRange::Implausible => false,
    }
}

/// Directed plausibility matrix and its symmetric part.
#[derive(Debug, Clone, PartialEq)]
pub struct PlausibilityGraph {
    /// Satellite claimed by each vertex.
    pub prns: Vec<u8>,
    pub directed: Vec<Vec<bool>>,
    pub adjacency: Vec<Vec<bool>>,
}

impl PlausibilityGraph {
    /// Builds the graph from an explicit symmetric adjacency.
    pub fn from_adjacency(prns: Vec<u8>, adjacency: Vec<Vec<bool>>) -> Self {
        let n = prns.len();
        assert_eq!(adjacency.len(), n);
        let sym = (0..n).map(|i| (0..n).map(|j| i != j && adjacency[i][j] && adjacency[j][i]).collect()).collect();
        Self { prns, directed: adjacency, adjacency: sym }
    }

    pub fn len(&self) -> usize {
        self.prns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prns.is_empty()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].iter().filter(|&&x| x).count()
    }

    pub fn is_clique(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(i, &u)| set[i + 1..].iter().all(|&v| self.adjacency[u][v]))
    }

    /// Writes the symmetric adjacency as CSV.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for row in &self.adjacency {
            let line: Vec<&str> = row.iter().map(|&x| if x { "1" } else { "0" }).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Pair inputs for candidates that carry a pseudorange and a DoA.
pub fn pair_inputs(
    candidates: &[SignalCandidate],
    satellite_position: impl Fn(u8) -> Option<EcefVector>,
) -> Vec<Option<PairInput>> {
    candidates
        .iter()
        .map(|c| {
            Some(PairInput {
                prn: c.prn,
                pseudorange: c.pseudorange?,
                direction: c.doa.as_ref()?.direction().unit_vector(),
                satellite: satellite_position(c.prn)?,
            })
        })
        .collect()
}

/// Plausibility graph over `inputs`; vertices without inputs are isolated,
/// equal-satellite pairs get `p = 0`.
pub fn build_graph(inputs: &[Option<PairInput>], prns: Vec<u8>, bounds: &RangeBounds) -> PlausibilityGraph {
    let n = inputs.len();
    let mut directed = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if let (Some(a), Some(b)) = (&inputs[i], &inputs[j]) {
                directed[i][j] = match pairwise_range(a, b) {
                    Ok(r) => plausibility(&r, bounds),
                    Err(_) => false,
                };
            }
        }
    }
    PlausibilityGraph::from_adjacency(prns, directed)
}

fn pick_max(items: impl Iterator<Item = (usize, usize)>, rng: &mut ChaCha8Rng) -> Option<usize> {
    let all: Vec<(usize, usize)> = items.collect();
    let best = all.iter().map(|x| x.1).max()?;
    let ties: Vec<usize> = all.iter().filter(|x| x.1 == best).map(|x| x.0).collect();
    Some(ties[rng.gen_range(0..ties.len())])
}

/// Greedy satellite-unique clique: seed with a maximum-degree vertex and keep
/// adding the highest-degree vertex adjacent to every member whose satellite
/// is not represented yet. Ties are broken uniformly at random.
pub fn greedy_clique(graph: &PlausibilityGraph, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = graph.len();
    let Some(first) = pick_max((0..n).map(|v| (v, graph.degree(v))), rng) else {
        return Vec::new();
    };
    let mut clique = vec![first];
    loop {
        let next = pick_max(
            (0..n)
                .filter(|&v| {
                    !clique.contains(&v)
                        && clique.iter().all(|&u| graph.adjacency[u][v])
                        && clique.iter().all(|&u| graph.prns[u] != graph.prns[v])
                })
                .map(|v| (v, graph.degree(v))),
            rng,
        );
        match next {
            Some(v) => clique.push(v),
            None => return clique,
        }
    }
}

/// Size of the largest satellite-unique clique, by exhaustive enumeration.
pub fn max_unique_clique_size(graph: &PlausibilityGraph) -> usize {
    let n = graph.len();
    assert!(n <= 20, "exhaustive search is exponential");
    let mut best = 0;
    for mask in 0u32..(1u32 << n) {
        let set: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        if set.len() <= best {
            continue;
        }
        let mut prns: Vec<u8> = set.iter().map(|&i| graph.prns[i]).collect();
        prns.sort_unstable();
        prns.dedup();
        if prns.len() == set.len() && graph.is_clique(&set) {
            best = set.len();
        }
    }
    best
}
