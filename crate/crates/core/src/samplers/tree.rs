//! Marked trees and the tree sampler.
//!
//! Vertices carry states, edges carry one kernel step each: travelling along
//! an edge `u -> v` applies `K`, travelling against it applies `K̂`. `L`-step
//! transitions are expressed by `L - 1` unmarked vertices between marks.

use std::collections::VecDeque;
use std::fmt;

use rand::seq::SliceRandom;

use super::{Method, SampleSet};
use crate::error::{Error, Result};
use crate::kernel::{Direction, Kernel};
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeViolation {
    NoVertices,
    VertexOutOfRange { vertex: usize, vertex_count: usize },
    SelfLoop { vertex: usize },
    DuplicateEdge { u: usize, v: usize },
    Cycle { u: usize, v: usize },
    Disconnected { edges: usize, vertex_count: usize },
    NoMarks,
    TooManyMarks { marks: usize, vertex_count: usize },
    MarksNotInjective { vertex: usize },
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeViolation::NoVertices => write!(f, "tree has no vertices"),
            TreeViolation::VertexOutOfRange { vertex, vertex_count } => {
                write!(f, "vertex {vertex} out of range (vertex count {vertex_count})")
            }
            TreeViolation::SelfLoop { vertex } => write!(f, "self-loop at vertex {vertex}"),
            TreeViolation::DuplicateEdge { u, v } => write!(f, "duplicate edge between {u} and {v}"),
            TreeViolation::Cycle { u, v } => write!(f, "edge {u} -> {v} closes a cycle"),
            TreeViolation::Disconnected { edges, vertex_count } => {
                write!(f, "disconnected: {edges} edges for {vertex_count} vertices")
            }
            TreeViolation::NoMarks => write!(f, "no marked vertices"),
            TreeViolation::TooManyMarks { marks, vertex_count } => {
                write!(f, "{marks} marks exceed {vertex_count} vertices")
            }
            TreeViolation::MarksNotInjective { vertex } => {
                write!(f, "vertex {vertex} carries more than one mark")
            }
        }
    }
}

/// A directed tree with an injective mark map `{0..M} -> V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedTree {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
    marks: Vec<usize>,
    adjacency: Vec<Vec<(usize, Direction)>>,
}

impl MarkedTree {
    /// `marks[i]` is the vertex `ℓ(i)`.
    pub fn new(vertex_count: usize, edges: Vec<(usize, usize)>, marks: Vec<usize>) -> Result<Self> {
        validate(vertex_count, &edges, &marks)?;
        let mut adjacency = vec![Vec::new(); vertex_count];
        for &(u, v) in &edges {
            adjacency[u].push((v, Direction::Forward));
            adjacency[v].push((u, Direction::Reverse));
        }
        Ok(Self {
            vertex_count,
            edges,
            marks,
            adjacency,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn marks(&self) -> &[usize] {
        &self.marks
    }

    /// `M`, the number of draws the tree produces.
    pub fn draw_count(&self) -> usize {
        self.marks.len() - 1
    }

    pub fn is_marked(&self, vertex: usize) -> bool {
        self.marks.contains(&vertex)
    }

    /// Breadth-first traversal from `root`: `(vertex, parent, direction)` for
    /// every non-root vertex, in visiting order.
    pub fn bfs_from(&self, root: usize) -> Vec<(usize, usize, Direction)> {
        let mut seen = vec![false; self.vertex_count];
        let mut order = Vec::with_capacity(self.vertex_count.saturating_sub(1));
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, dir) in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    order.push((v, u, dir));
                    queue.push_back(v);
                }
            }
        }
        order
    }
}

fn validate(n: usize, edges: &[(usize, usize)], marks: &[usize]) -> std::result::Result<(), TreeViolation> {
    if n == 0 {
        return Err(TreeViolation::NoVertices);
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut seen = std::collections::HashSet::with_capacity(edges.len());
    for &(u, v) in edges {
        for w in [u, v] {
            if w >= n {
                return Err(TreeViolation::VertexOutOfRange { vertex: w, vertex_count: n });
            }
        }
        if u == v {
            return Err(TreeViolation::SelfLoop { vertex: u });
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(TreeViolation::DuplicateEdge { u, v });
        }
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru == rv {
            return Err(TreeViolation::Cycle { u, v });
        }
        parent[ru] = rv;
    }
    if edges.len() != n - 1 {
        return Err(TreeViolation::Disconnected {
            edges: edges.len(),
            vertex_count: n,
        });
    }
    if marks.is_empty() {
        return Err(TreeViolation::NoMarks);
    }
    if marks.len() > n {
        return Err(TreeViolation::TooManyMarks {
            marks: marks.len(),
            vertex_count: n,
        });
    }
    let mut marked = vec![false; n];
    for &m in marks {
        if m >= n {
            return Err(TreeViolation::VertexOutOfRange { vertex: m, vertex_count: n });
        }
        if marked[m] {
            return Err(TreeViolation::MarksNotInjective { vertex: m });
        }
        marked[m] = true;
    }
    Ok(())
}

fn require_positive(name: &str, value: usize) -> Result<()> {
    if value == 0 {
        return Err(Error::Argument(format!("{name} must be at least 1")));
    }
    Ok(())
}

/// Serial chain `0 -> 1 -> .. -> M·L` with marks every `L` vertices.
pub fn build_path_tree(m: usize, step: usize) -> Result<MarkedTree> {
    require_positive("M", m)?;
    require_positive("L", step)?;
    let n = m * step + 1;
    let edges = (0..n - 1).map(|i| (i, i + 1)).collect();
    let marks = (0..=m).map(|i| i * step).collect();
    MarkedTree::new(n, edges, marks)
}

/// Unmarked hub (vertex 0) with `M + 1` outgoing arms of `L` edges; the arm
/// tips carry the marks.
pub fn build_star_tree(m: usize, step: usize) -> Result<MarkedTree> {
    require_positive("M", m)?;
    require_positive("L", step)?;
    let arms = m + 1;
    let n = 1 + arms * step;
    let mut edges = Vec::with_capacity(n - 1);
    let mut marks = Vec::with_capacity(arms);
    for a in 0..arms {
        let first = 1 + a * step;
        edges.push((0, first));
        for j in 0..step - 1 {
            edges.push((first + j, first + j + 1));
        }
        marks.push(first + step - 1);
    }
    MarkedTree::new(n, edges, marks)
}

/// Hub with `m1` outgoing serial arms, each carrying `m2` marks spaced `L`
/// edges apart. The hub itself holds mark 0, giving `m1·m2 + 1` marks.
pub fn build_split_star(m1: usize, m2: usize, step: usize) -> Result<MarkedTree> {
    require_positive("M1", m1)?;
    require_positive("M2", m2)?;
    require_positive("L", step)?;
    let arm_len = m2 * step;
    let n = 1 + m1 * arm_len;
    let mut edges = Vec::with_capacity(n - 1);
    let mut marks = vec![0];
    for a in 0..m1 {
        let first = 1 + a * arm_len;
        edges.push((0, first));
        for j in 0..arm_len - 1 {
            edges.push((first + j, first + j + 1));
        }
        marks.extend((1..=m2).map(|p| first + p * step - 1));
    }
    MarkedTree::new(n, edges, marks)
}

/// Tree sampler: uniform `σ`, `Y_{ℓ(σ(0))} = x0`, breadth-first exploration
/// from that vertex (`K` along edges, `K̂` against), then
/// `X̃_i = Y_{ℓ(σ(i))}`. Each edge is one step of `kernel`.
pub fn sample_tree<K: Kernel>(kernel: &K, x0: K::State, tree: &MarkedTree, stream: &Stream) -> SampleSet<K::State> {
    let mut rng = stream.rng();
    let mut sigma: Vec<usize> = (0..tree.marks.len()).collect();
    sigma.shuffle(&mut rng);
    let root = tree.marks[sigma[0]];

    let mut ys: Vec<Option<K::State>> = vec![None; tree.vertex_count];
    ys[root] = Some(x0.clone());
    for (v, parent, dir) in tree.bfs_from(root) {
        let mut s = ys[parent].clone().expect("parent visited first");
        kernel.step(&mut s, dir, &mut rng);
        ys[v] = Some(s);
    }
    let chain: Vec<K::State> = ys.into_iter().map(|y| y.expect("tree is connected")).collect();
    let draws = sigma[1..].iter().map(|&i| chain[tree.marks[i]].clone()).collect();

    SampleSet {
        observed: x0,
        draws,
        method: Method::Tree,
        anchor: Some(sigma[0]),
        permutation: Some(sigma),
        step_size: None,
        seed: stream.seed(),
        hub: None,
        chain: Some(chain),
        reversible_kernel: kernel.is_reversible(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{DiscreteDistribution, DiscreteKernel, FiniteChain};

    #[test]
    fn path_tree_smallest() {
        let t = build_path_tree(2, 1).unwrap();
        assert_eq!(t.vertex_count(), 3);
        assert_eq!(t.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(t.marks(), &[0, 1, 2]);
    }

    #[test]
    fn star_tree_counts() {
        let t = build_star_tree(3, 2).unwrap();
        assert_eq!(t.vertex_count(), 1 + 4 * 2);
        assert_eq!(t.edges().len(), t.vertex_count() - 1);
        assert!(!t.is_marked(0));
        assert_eq!(t.marks().len(), 4);
        for v in 1..t.vertex_count() {
            let is_leaf = t.edges().iter().all(|&(u, _)| u != v);
            assert_eq!(t.is_marked(v), is_leaf, "vertex {v}");
        }
    }

    #[test]
    fn split_star_counts() {
        let t = build_split_star(2, 2, 1).unwrap();
        assert_eq!(t.marks().len(), 5);
        assert_eq!(t.draw_count(), 4);
        let t = build_split_star(3, 4, 5).unwrap();
        assert_eq!(t.marks().len(), 13);
        assert_eq!(t.vertex_count(), 1 + 3 * 4 * 5);
    }

    #[test]
    fn builders_reject_zero() {
        assert!(matches!(build_path_tree(0, 1), Err(Error::Argument(_))));
        assert!(matches!(build_star_tree(1, 0), Err(Error::Argument(_))));
        assert!(matches!(build_split_star(0, 1, 1), Err(Error::Argument(_))));
    }

    #[test]
    fn validation_names_the_violation() {
        let v = |n, e: Vec<(usize, usize)>, m: Vec<usize>| match MarkedTree::new(n, e, m) {
            Err(Error::InvalidTree(v)) => v,
            other => panic!("expected invalid tree, got {other:?}"),
        };
        assert_eq!(v(0, vec![], vec![]), TreeViolation::NoVertices);
        assert_eq!(v(2, vec![(0, 0)], vec![0]), TreeViolation::SelfLoop { vertex: 0 });
        assert_eq!(v(2, vec![(0, 1), (1, 0)], vec![0]), TreeViolation::DuplicateEdge { u: 1, v: 0 });
        assert_eq!(
            v(3, vec![(0, 1), (1, 2), (2, 0)], vec![0]),
            TreeViolation::Cycle { u: 2, v: 0 }
        );
        assert_eq!(
            v(4, vec![(0, 1), (2, 3)], vec![0]),
            TreeViolation::Disconnected { edges: 2, vertex_count: 4 }
        );
        assert_eq!(v(2, vec![(0, 1)], vec![1, 1]), TreeViolation::MarksNotInjective { vertex: 1 });
        assert_eq!(v(2, vec![(0, 1)], vec![]), TreeViolation::NoMarks);
        assert_eq!(
            v(2, vec![(0, 5)], vec![0]),
            TreeViolation::VertexOutOfRange { vertex: 5, vertex_count: 2 }
        );
    }

    #[test]
    fn single_vertex_tree() {
        let t = MarkedTree::new(1, vec![], vec![0]).unwrap();
        let chain = FiniteChain::new(DiscreteKernel::identity(2), DiscreteDistribution::uniform(2).unwrap()).unwrap();
        let set = sample_tree(&chain, 1, &t, &Stream::new(0));
        assert!(set.draws.is_empty());
        assert_eq!(set.observed, 1);
        assert_eq!(set.permutation, Some(vec![0]));
    }

    #[test]
    fn edges_follow_direction() {
        // 0 -> 1 <- 2 on the deterministic cycle 0->1->2->0
        let k = DiscreteKernel::new(vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        let chain = FiniteChain::new(k, DiscreteDistribution::uniform(3).unwrap()).unwrap();
        let t = MarkedTree::new(3, vec![(0, 1), (2, 1)], vec![0, 1, 2]).unwrap();
        for seed in 0..20 {
            let set = sample_tree(&chain, 0, &t, &Stream::new(seed));
            let y = set.chain.unwrap();
            assert_eq!(y[1], (y[0] + 1) % 3);
            assert_eq!(y[1], (y[2] + 1) % 3);
            assert_eq!(y[t.marks()[set.anchor.unwrap()]], 0);
        }
    }
}
