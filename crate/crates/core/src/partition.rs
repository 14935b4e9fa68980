//! Tagged partitions of an interval `[a, b]`.
//!
//! Nodes are stored ascending, `a = x_0 < x_1 < ... < x_n = b`, with one tag
//! per cell. The composition convention indexes cells in descending order
//! (`b = s_0 > s_1 > ... > s_n = a`, cell `i` is `[s_{i+1}, s_i]`), so ascending
//! cell `k` is descending cell `n - 1 - k`. [`Partition::descending_cells`]
//! exposes that view.

use alloc::vec::Vec;

use crate::rng::UnitStream;

/// How the tag point inside each cell is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TagRule {
    Left,
    Right,
    Midpoint,
    /// Uniform in each cell, drawn from a stream seeded with this value.
    Random(u64),
}

impl TagRule {
    pub(crate) fn tagger(self) -> Tagger {
        Tagger {
            rule: self,
            stream: match self {
                TagRule::Random(seed) => Some(UnitStream::new(seed)),
                _ => None,
            },
        }
    }

    fn tags(self, nodes: &[f64]) -> Vec<f64> {
        let mut tagger = self.tagger();
        nodes.windows(2).map(|w| tagger.tag(w[0], w[1])).collect()
    }
}

/// Produces tags cell by cell, in ascending cell order.
#[derive(Debug, Clone)]
pub(crate) struct Tagger {
    rule: TagRule,
    stream: Option<UnitStream>,
}

impl Tagger {
    pub(crate) fn tag(&mut self, lo: f64, hi: f64) -> f64 {
        match self.rule {
            TagRule::Left => lo,
            TagRule::Right => hi,
            TagRule::Midpoint => lo + 0.5 * (hi - lo),
            TagRule::Random(_) => {
                let u = self.stream.as_mut().map_or(0.0, UnitStream::next_unit);
                (lo + u * (hi - lo)).clamp(lo, hi)
            }
        }
    }
}

/// Node `k` of the uniform `n`-cell mesh of `[a, b]`.
///
/// Anchored at `a` rather than accumulated, so node `n` is `b` exactly.
#[inline]
pub(crate) fn uniform_node(a: f64, b: f64, n: usize, k: usize) -> f64 {
    if k == n {
        b
    } else {
        a + k as f64 * (b - a) / n as f64
    }
}

/// Streams the cells `(lower, upper, tag)` of `Partition::uniform(a, b, n, rule)`
/// in ascending order without materializing the partition.
pub(crate) fn uniform_cells(
    a: f64,
    b: f64,
    n: usize,
    rule: TagRule,
) -> impl Iterator<Item = (f64, f64, f64)> {
    let mut tagger = rule.tagger();
    (0..n).map(move |k| {
        let lo = uniform_node(a, b, n, k);
        let hi = uniform_node(a, b, n, k + 1);
        (lo, hi, tagger.tag(lo, hi))
    })
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PartitionError {
    #[error("interval endpoints must be finite with a <= b (got a = {a}, b = {b})")]
    BadInterval { a: f64, b: f64 },
    #[error("a non-degenerate interval [{a}, {b}] needs at least one cell")]
    NoCells { a: f64, b: f64 },
    #[error("nodes must be finite and strictly increasing (violated at index {index})")]
    NotIncreasing { index: usize },
    #[error("partition needs at least one node")]
    NoNodes,
    #[error("right endpoint {left_end} does not match left endpoint {right_start}")]
    EndpointMismatch { left_end: f64, right_start: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Uniform,
    General,
}

/// A tagged partition of `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    nodes: Vec<f64>,
    tags: Vec<f64>,
    rule: TagRule,
    layout: Layout,
}

/// One cell in descending order: `lower = s_{i+1}`, `upper = s_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
    pub tag: f64,
}

impl Cell {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

impl Partition {
    /// `n` equal cells of `[a, b]`, with nodes `a + k (b - a) / n`.
    pub fn uniform(a: f64, b: f64, n: usize, rule: TagRule) -> Result<Self, PartitionError> {
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(PartitionError::BadInterval { a, b });
        }
        if a == b {
            // a degenerate interval has only the empty partition
            return Ok(Self::empty(a, rule));
        }
        if n == 0 {
            return Err(PartitionError::NoCells { a, b });
        }
        let nodes: Vec<f64> = (0..=n).map(|k| uniform_node(a, b, n, k)).collect();
        if let Some(index) = first_non_increasing(&nodes) {
            return Err(PartitionError::NotIncreasing { index });
        }
        let tags = rule.tags(&nodes);
        Ok(Partition {
            nodes,
            tags,
            rule,
            layout: Layout::Uniform,
        })
    }

    /// The null partition of the degenerate interval `[a, a]`.
    pub fn empty(a: f64, rule: TagRule) -> Self {
        Partition {
            nodes: alloc::vec![a],
            tags: Vec::new(),
            rule,
            layout: Layout::Uniform,
        }
    }

    /// A partition with arbitrary ascending nodes, tagged by `rule`.
    pub fn from_nodes(nodes: Vec<f64>, rule: TagRule) -> Result<Self, PartitionError> {
        if nodes.is_empty() {
            return Err(PartitionError::NoNodes);
        }
        if let Some(index) = first_non_increasing(&nodes) {
            return Err(PartitionError::NotIncreasing { index });
        }
        let tags = rule.tags(&nodes);
        Ok(Partition {
            nodes,
            tags,
            rule,
            layout: Layout::General,
        })
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn rule(&self) -> TagRule {
        self.rule
    }

    /// Ascending nodes `a = x_0 < ... < x_n = b`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Tags of the cells, in ascending cell order.
    pub fn tags(&self) -> &[f64] {
        &self.tags
    }

    /// Mesh norm: the widest cell, or zero for the empty partition.
    pub fn mesh(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Cells in ascending order `(lower, upper, tag)`; this is the order in
    /// which a composition applies them.
    pub fn ascending_cells(&self) -> impl DoubleEndedIterator<Item = (f64, f64, f64)> + '_ {
        self.nodes
            .windows(2)
            .zip(&self.tags)
            .map(|(w, &tag)| (w[0], w[1], tag))
    }

    /// Cells in descending order, `i = 0` being the cell that touches `b`.
    pub fn descending_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.ascending_cells()
            .rev()
            .enumerate()
            .map(|(index, (lower, upper, tag))| Cell {
                index,
                lower,
                upper,
                tag,
            })
    }

    /// Joins a partition of `[a, b]` with one of `[b, c]`.
    ///
    /// The tags of both pieces are kept as they are. The result is retagged
    /// with this partition's rule if it is later refined.
    pub fn concat(&self, right: &Partition) -> Result<Partition, PartitionError> {
        if self.end() != right.start() {
            return Err(PartitionError::EndpointMismatch {
                left_end: self.end(),
                right_start: right.start(),
            });
        }
        if self.is_empty() {
            return Ok(right.clone());
        }
        if right.is_empty() {
            return Ok(self.clone());
        }
        let mut nodes = self.nodes.clone();
        nodes.extend_from_slice(&right.nodes[1..]);
        let mut tags = self.tags.clone();
        tags.extend_from_slice(&right.tags);
        Ok(Partition {
            nodes,
            tags,
            rule: self.rule,
            layout: Layout::General,
        })
    }

    /// Splits every cell at its midpoint and retags with the partition's rule.
    pub fn refine_dyadic(&self) -> Partition {
        if self.is_empty() {
            return self.clone();
        }
        if self.layout == Layout::Uniform {
            if let Ok(p) = Partition::uniform(self.start(), self.end(), 2 * self.len(), self.rule) {
                return p;
            }
        }
        let mut nodes = Vec::with_capacity(2 * self.len() + 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(w[0] + 0.5 * (w[1] - w[0]));
        }
        nodes.push(self.end());
        // cells narrower than two ulps cannot be split
        nodes.dedup();
        let tags = self.rule.tags(&nodes);
        Partition {
            nodes,
            tags,
            rule: self.rule,
            layout: Layout::General,
        }
    }
}

fn first_non_increasing(nodes: &[f64]) -> Option<usize> {
    if let Some(i) = nodes.iter().position(|x| !x.is_finite()) {
        return Some(i);
    }
    nodes.windows(2).position(|w| w[0] >= w[1]).map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_left() {
        let p = Partition::uniform(0.0, 1.0, 4, TagRule::Left).unwrap();
        assert_eq!(p.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(p.tags(), &[0.0, 0.25, 0.5, 0.75]);
        assert_eq!(p.mesh(), 0.25);
        let desc: Vec<f64> = p.descending_cells().map(|c| c.tag).collect();
        assert_eq!(desc, [0.75, 0.5, 0.25, 0.0]);
    }

    #[test]
    fn uniform_empty() {
        let p = Partition::uniform(0.0, 0.0, 0, TagRule::Left).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.mesh(), 0.0);
        assert_eq!((p.start(), p.end()), (0.0, 0.0));
        // any requested count collapses to the null partition on [a, a]
        assert_eq!(
            Partition::uniform(2.0, 2.0, 7, TagRule::Left)
                .unwrap()
                .len(),
            0
        );
    }

    #[test]
    fn uniform_midpoint() {
        let p = Partition::uniform(0.0, 1.0, 3, TagRule::Midpoint).unwrap();
        let want = [1.0 / 6.0, 0.5, 5.0 / 6.0];
        for (got, want) in p.tags().iter().zip(want) {
            assert!((got - want).abs() <= 1e-15);
        }
        assert!((p.mesh() - 1.0 / 3.0).abs() <= 1e-15);
    }

    #[test]
    fn uniform_rejects_bad_input() {
        assert_eq!(
            Partition::uniform(0.0, 1.0, 0, TagRule::Left),
            Err(PartitionError::NoCells { a: 0.0, b: 1.0 })
        );
        assert!(matches!(
            Partition::uniform(1.0, 0.0, 3, TagRule::Left),
            Err(PartitionError::BadInterval { .. })
        ));
        assert!(matches!(
            Partition::uniform(0.0, f64::INFINITY, 3, TagRule::Left),
            Err(PartitionError::BadInterval { .. })
        ));
    }

    #[test]
    fn last_node_is_exact() {
        let p = Partition::uniform(0.1, 0.7, 3, TagRule::Right).unwrap();
        assert_eq!(p.end(), 0.7);
        assert_eq!(p.tags()[2], 0.7);
    }

    #[test]
    fn concat_joins() {
        let p = Partition::uniform(0.0, 0.5, 2, TagRule::Left).unwrap();
        let r = Partition::uniform(0.5, 1.0, 2, TagRule::Left).unwrap();
        let q = p.concat(&r).unwrap();
        assert_eq!(q.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(q.len(), 4);
        assert_eq!(q.mesh(), p.mesh().max(r.mesh()));
    }

    #[test]
    fn concat_identity_and_mismatch() {
        let p = Partition::uniform(0.0, 1.0, 5, TagRule::Midpoint).unwrap();
        let e = Partition::empty(0.0, TagRule::Left);
        assert_eq!(e.concat(&p).unwrap(), p);
        assert_eq!(p.concat(&Partition::empty(1.0, TagRule::Left)).unwrap(), p);
        let r = Partition::uniform(2.0, 3.0, 1, TagRule::Left).unwrap();
        assert_eq!(
            p.concat(&r),
            Err(PartitionError::EndpointMismatch {
                left_end: 1.0,
                right_start: 2.0
            })
        );
    }

    #[test]
    fn refine() {
        let p = Partition::uniform(0.0, 1.0, 2, TagRule::Left).unwrap();
        assert_eq!(
            p.refine_dyadic(),
            Partition::uniform(0.0, 1.0, 4, TagRule::Left).unwrap()
        );
        let e = Partition::empty(0.3, TagRule::Left);
        assert_eq!(e.refine_dyadic(), e);
        let p = Partition::uniform(0.0, 1.0, 5, TagRule::Left).unwrap();
        assert!((p.refine_dyadic().mesh() - 0.1).abs() <= 1e-16);
    }

    #[test]
    fn refine_general_partition() {
        let p = Partition::from_nodes(alloc::vec![0.0, 0.1, 0.5, 1.0], TagRule::Right).unwrap();
        let q = p.refine_dyadic();
        let want = [0.0, 0.05, 0.1, 0.3, 0.5, 0.75, 1.0];
        assert_eq!(q.len(), 6);
        for (got, want) in q.nodes().iter().zip(want) {
            assert!((got - want).abs() <= 1e-16);
        }
        assert_eq!(q.tags(), &q.nodes()[1..]);
        assert_eq!(q.mesh(), 0.25);
    }

    #[test]
    fn random_tags_are_reproducible() {
        let p = Partition::uniform(0.0, 1.0, 16, TagRule::Random(7)).unwrap();
        let q = Partition::uniform(0.0, 1.0, 16, TagRule::Random(7)).unwrap();
        let r = Partition::uniform(0.0, 1.0, 16, TagRule::Random(8)).unwrap();
        assert_eq!(p, q);
        assert_ne!(p.tags(), r.tags());
    }

    #[test]
    fn from_nodes_validates() {
        assert_eq!(
            Partition::from_nodes(Vec::new(), TagRule::Left),
            Err(PartitionError::NoNodes)
        );
        assert_eq!(
            Partition::from_nodes(alloc::vec![0.0, 0.5, 0.5], TagRule::Left),
            Err(PartitionError::NotIncreasing { index: 2 })
        );
        assert!(Partition::from_nodes(alloc::vec![0.0, f64::NAN], TagRule::Left).is_err());
    }
}
