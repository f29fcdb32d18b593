//! Plane trees in a flat breadth-first arena, Galton–Watson samplers under the
//! conditionings used by the experiments, and reduced trees.
//!
//! Layout: vertex 0 is the root, vertices are numbered in breadth-first order,
//! and the children of every vertex occupy a contiguous index range in birth
//! order. Depth is therefore nondecreasing in the index, and each level is a
//! contiguous range as well.

use std::io::{BufRead, Write};
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::offspring::{OffspringDistribution, OffspringKind};

pub const DEFAULT_NODE_CAP: usize = 10_000_000;
pub const DEFAULT_TRIAL_CAP: u64 = 100_000_000;

const NO_PARENT: u32 = u32::MAX;

/// The population would have exceeded the node cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CapExceeded;

/// The tree has no vertex at the requested depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoSurvivor;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaneTree {
    parent: Vec<u32>,
    first_child: Vec<u32>,
    child_count: Vec<u32>,
    depth: Vec<u32>,
    /// `level_start[d]..level_start[d + 1]` holds the depth-`d` vertices.
    level_start: Vec<u32>,
}

impl Default for PlaneTree {
    fn default() -> Self {
        Self::single()
    }
}

impl PlaneTree {
    /// The one-vertex tree.
    pub fn single() -> Self {
        Self {
            parent: vec![NO_PARENT],
            first_child: vec![1],
            child_count: vec![0],
            depth: vec![0],
            level_start: vec![0, 1],
        }
    }

    /// A path with `len` edges.
    pub fn path(len: usize) -> Self {
        Self::from_offspring_bfs((0..=len).map(|d| usize::from(d < len)))
            .expect("path offspring sequence is valid")
    }

    /// Root with `k` leaf children.
    pub fn star(k: usize) -> Self {
        Self::from_offspring_bfs(std::iter::once(k).chain(std::iter::repeat_n(0, k)))
            .expect("star offspring sequence is valid")
    }

    fn clear(&mut self) {
        self.parent.clear();
        self.first_child.clear();
        self.child_count.clear();
        self.depth.clear();
        self.level_start.clear();
        self.parent.push(NO_PARENT);
        self.first_child.push(1);
        self.child_count.push(0);
        self.depth.push(0);
        self.level_start.extend([0, 1]);
    }

    fn push_child(&mut self, parent: usize) {
        self.parent.push(parent as u32);
        self.first_child.push(0);
        self.child_count.push(0);
        self.depth.push(self.depth[parent] + 1);
    }

    /// Builds a tree from offspring counts listed in breadth-first order.
    pub fn from_offspring_bfs(counts: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut tree = Self::single();
        tree.level_start.clear();
        tree.level_start.push(0);
        let mut next = 1usize;
        let mut v = 0usize;
        let mut level_end = 1usize;
        for k in counts {
            if v >= tree.len() {
                return Err(Error::Config("offspring sequence longer than the tree".into()));
            }
            if v == level_end {
                tree.level_start.push(v as u32);
                level_end = tree.len();
            }
            tree.first_child[v] = next as u32;
            tree.child_count[v] = k as u32;
            for _ in 0..k {
                tree.push_child(v);
            }
            next += k;
            v += 1;
        }
        if v != tree.len() {
            return Err(Error::Config("offspring sequence shorter than the tree".into()));
        }
        tree.level_start.push(tree.len() as u32);
        Ok(tree)
    }

    /// Builds a tree from a parent array in depth-first (preorder) numbering,
    /// where siblings appear in birth order. `parents[0]` is ignored.
    pub fn from_preorder_parents(parents: &[usize]) -> Result<Self> {
        let n = parents.len();
        if n == 0 {
            return Err(Error::Config("empty parent array".into()));
        }
        let mut counts = vec![0usize; n];
        for (i, &p) in parents.iter().enumerate().skip(1) {
            if p >= i {
                return Err(Error::Config(format!("vertex {i} has parent {p}, not earlier in preorder")));
            }
            counts[p] += 1;
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + counts[i];
        }
        let mut fill = start.clone();
        let mut kids = vec![0usize; n - 1];
        for (i, &p) in parents.iter().enumerate().skip(1) {
            kids[fill[p]] = i;
            fill[p] += 1;
        }
        let mut order = Vec::with_capacity(n);
        order.push(0);
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            order.extend_from_slice(&kids[start[v]..start[v + 1]]);
        }
        Self::from_offspring_bfs(order.iter().map(|&v| counts[v]))
    }

    /// Builds a tree from its Łukasiewicz word: offspring counts in preorder.
    pub fn from_preorder_offspring(offspring: &[usize]) -> Result<Self> {
        let mut parents = Vec::with_capacity(offspring.len());
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for (i, &k) in offspring.iter().enumerate() {
            match stack.last_mut() {
                Some((p, remaining)) => {
                    parents.push(*p);
                    *remaining -= 1;
                    if *remaining == 0 {
                        stack.pop();
                    }
                }
                None if i == 0 => parents.push(0),
                None => return Err(Error::Config("Łukasiewicz word ends early".into())),
            }
            if k > 0 {
                stack.push((i, k));
            }
        }
        if !stack.is_empty() {
            return Err(Error::Config("Łukasiewicz word is incomplete".into()));
        }
        Self::from_preorder_parents(&parents)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn edge_count(&self) -> usize {
        self.len() - 1
    }

    pub fn height(&self) -> usize {
        self.level_start.len() - 2
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        let p = self.parent[v];
        (p != NO_PARENT).then_some(p as usize)
    }

    pub fn children(&self, v: usize) -> Range<usize> {
        let start = self.first_child[v] as usize;
        start..start + self.child_count[v] as usize
    }

    pub fn child_count(&self, v: usize) -> usize {
        self.child_count[v] as usize
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v] as usize
    }

    /// Depth-`k` vertices in order; empty past the height.
    pub fn level_set(&self, k: usize) -> Range<usize> {
        if k > self.height() {
            let end = self.len();
            return end..end;
        }
        self.level_start[k] as usize..self.level_start[k + 1] as usize
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.level_start.windows(2).map(|w| (w[1] - w[0]) as usize).collect()
    }

    /// Vertices of depth `to_depth` below `v`, a contiguous range in this layout.
    pub fn descendants_at(&self, v: usize, to_depth: usize) -> Range<usize> {
        let mut lo = v;
        let mut hi = v + 1;
        for _ in self.depth(v)..to_depth {
            // first child of the first vertex that has one, to one past the
            // last child of the last vertex that has one
            let mut new_lo = None;
            let mut new_hi = 0;
            for u in lo..hi {
                let c = self.children(u);
                if !c.is_empty() {
                    new_lo.get_or_insert(c.start);
                    new_hi = c.end;
                }
            }
            match new_lo {
                Some(l) => {
                    lo = l;
                    hi = new_hi;
                }
                None => return self.len()..self.len(),
            }
        }
        lo..hi
    }

    pub fn ancestor_at_depth(&self, mut v: usize, depth: usize) -> usize {
        while self.depth(v) > depth {
            v = self.parent[v] as usize;
        }
        v
    }

    /// Preorder offspring counts (the Łukasiewicz word).
    pub fn preorder_offspring(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            out.push(self.child_count(v));
            stack.extend(self.children(v).rev());
        }
        out
    }

    /// Structural checks: links, depths, layout.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if self.parent[0] != NO_PARENT {
            return Err("root has a parent".into());
        }
        let mut expected_next = 1usize;
        for v in 0..self.len() {
            if v > 0 {
                let p = self.parent[v];
                if p == NO_PARENT || p as usize >= v {
                    return Err(format!("vertex {v} has bad parent {p}"));
                }
                if !self.children(p as usize).contains(&v) {
                    return Err(format!("vertex {v} missing from its parent's child range"));
                }
                if self.depth[v] != self.depth[p as usize] + 1 {
                    return Err(format!("vertex {v} depth inconsistent"));
                }
            }
            let c = self.children(v);
            if !c.is_empty() {
                if c.start != expected_next {
                    return Err(format!("children of {v} not contiguous in breadth-first order"));
                }
                expected_next = c.end;
            }
            for w in c {
                if self.parent[w] as usize != v {
                    return Err(format!("child {w} of {v} points elsewhere"));
                }
            }
        }
        if expected_next != self.len() {
            return Err("child ranges do not cover the arena".into());
        }
        for d in 0..=self.height() {
            if self.level_set(d).any(|v| self.depth(v) != d) || self.level_set(d).is_empty() {
                return Err(format!("level {d} index range inconsistent"));
            }
        }
        Ok(())
    }

    /// Writes one line per vertex: `index parent depth`, root parent `-1`.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for v in 0..self.len() {
            let parent = self.parent(v).map_or(-1, |p| p as i64);
            writeln!(out, "{v} {parent} {}", self.depth(v))?;
        }
        Ok(())
    }

    /// Inverse of [`Self::write_dump`].
    pub fn read_dump<R: BufRead>(input: R) -> Result<Self> {
        let bad = |msg: String| Error::Config(format!("tree dump: {msg}"));
        let mut parents = Vec::new();
        let mut depths = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<tree dump>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<i64> = line
                .split_whitespace()
                .map(|c| c.parse::<i64>().map_err(|_| bad(format!("line {}: not an integer", i + 1))))
                .collect::<Result<_>>()?;
            if cols.len() != 3 || cols[0] != parents.len() as i64 {
                return Err(bad(format!("line {}: expected `index parent depth`", i + 1)));
            }
            parents.push(cols[1]);
            depths.push(cols[2]);
        }
        if parents.first() != Some(&-1) {
            return Err(bad("first vertex must be the root".into()));
        }
        let mut counts = vec![0usize; parents.len()];
        for (v, &p) in parents.iter().enumerate().skip(1) {
            if p < 0 || p as usize >= v {
                return Err(bad(format!("vertex {v} has parent {p}")));
            }
            counts[p as usize] += 1;
        }
        let tree = Self::from_offspring_bfs(counts)?;
        let consistent = (1..tree.len()).all(|v| tree.parent[v] as i64 == parents[v])
            && (0..tree.len()).all(|v| tree.depth[v] as i64 == depths[v]);
        if !consistent {
            return Err(bad("not in breadth-first layout".into()));
        }
        Ok(tree)
    }
}

/// A tree keeping only the ancestors of its depth-`n` vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedTree {
    tree: PlaneTree,
    height: usize,
}

impl ReducedTree {
    pub fn tree(&self) -> &PlaneTree {
        &self.tree
    }

    pub fn into_tree(self) -> PlaneTree {
        self.tree
    }

    /// Target height `n`.
    pub fn height(&self) -> usize {
        self.height
    }

    /// Depth-`n` vertices.
    pub fn boundary(&self) -> Range<usize> {
        self.tree.level_set(self.height)
    }

    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        self.tree.check_invariants()?;
        if self.tree.height() != self.height {
            return Err(format!("height {} != target {}", self.tree.height(), self.height));
        }
        for v in 0..self.boundary().start {
            if self.tree.child_count(v) == 0 {
                return Err(format!("vertex {v} has no descendant at depth {}", self.height));
            }
        }
        if self.boundary().any(|v| self.tree.child_count(v) != 0) {
            return Err("boundary vertex has children".into());
        }
        Ok(())
    }
}

/// Keeps the vertices with a descendant at depth `n`, relabelled in order.
pub fn reduce(tree: &PlaneTree, n: usize) -> std::result::Result<ReducedTree, NoSurvivor> {
    if n > tree.height() {
        return Err(NoSurvivor);
    }
    let end = tree.level_set(n).end;
    let mut alive = vec![false; end];
    alive[tree.level_set(n)].iter_mut().for_each(|a| *a = true);
    for v in (0..tree.level_set(n).start).rev() {
        alive[v] = tree.children(v).any(|w| alive[w]);
    }
    let kept = alive.iter().filter(|&&a| a).count();
    let mut counts = Vec::with_capacity(kept);
    for v in 0..end {
        if alive[v] {
            let k = if tree.depth(v) == n {
                0
            } else {
                tree.children(v).filter(|&w| alive[w]).count()
            };
            counts.push(k);
        }
    }
    let reduced = PlaneTree::from_offspring_bfs(counts).expect("reduction preserves layout");
    Ok(ReducedTree {
        tree: reduced,
        height: n,
    })
}

/// Vertices of depth at most `n - ⌊s⌋`.
pub fn truncate(reduced: &ReducedTree, s: f64) -> Result<PlaneTree> {
    let n = reduced.height();
    if !(0.0..=n as f64).contains(&s) {
        return Err(Error::Domain {
            name: "s",
            value: s,
            expected: "[0, n]",
        });
    }
    let keep = n - s.floor() as usize;
    let tree = &reduced.tree;
    let end = tree.level_set(keep).end;
    let mut out = PlaneTree {
        parent: tree.parent[..end].to_vec(),
        first_child: tree.first_child[..end].to_vec(),
        child_count: tree.child_count[..end].to_vec(),
        depth: tree.depth[..end].to_vec(),
        level_start: tree.level_start[..keep + 2].to_vec(),
    };
    for v in out.level_set(keep) {
        out.child_count[v] = 0;
        out.first_child[v] = end as u32;
    }
    Ok(out)
}

/// Fills `tree` with a Galton–Watson tree generated breadth-first, stopping
/// at `max_depth` when given.
fn generate_into<R: RngCore + ?Sized>(
    tree: &mut PlaneTree,
    dist: &OffspringDistribution,
    rng: &mut R,
    max_depth: Option<usize>,
    node_cap: usize,
) -> std::result::Result<(), CapExceeded> {
    tree.clear();
    let mut level = 0..1usize;
    let mut depth = 0usize;
    while !level.is_empty() && max_depth.is_none_or(|m| depth < m) {
        for v in level.clone() {
            let k = dist.sample(rng);
            if tree.len() + k > node_cap {
                return Err(CapExceeded);
            }
            tree.first_child[v] = tree.len() as u32;
            tree.child_count[v] = k as u32;
            for _ in 0..k {
                tree.push_child(v);
            }
        }
        level = level.end..tree.len();
        depth += 1;
        if !level.is_empty() {
            tree.level_start.push(tree.len() as u32);
        }
    }
    let len = tree.len() as u32;
    for v in level {
        tree.first_child[v] = len;
    }
    Ok(())
}

/// Unconditioned Galton–Watson tree.
pub fn sample_gw<R: RngCore + ?Sized>(
    dist: &OffspringDistribution,
    rng: &mut R,
    node_cap: usize,
) -> std::result::Result<PlaneTree, CapExceeded> {
    let mut tree = PlaneTree::single();
    generate_into(&mut tree, dist, rng, None, node_cap)?;
    Ok(tree)
}

/// Galton–Watson tree restricted to generations `0..=max_depth`.
pub fn sample_gw_truncated<R: RngCore + ?Sized>(
    dist: &OffspringDistribution,
    max_depth: usize,
    rng: &mut R,
    node_cap: usize,
) -> std::result::Result<PlaneTree, CapExceeded> {
    let mut tree = PlaneTree::single();
    generate_into(&mut tree, dist, rng, Some(max_depth), node_cap)?;
    Ok(tree)
}

/// An accepted conditioned sample together with the number of trials used.
#[derive(Debug, Clone)]
pub struct Conditioned {
    pub tree: PlaneTree,
    pub trials: u64,
}

/// Galton–Watson tree conditioned on reaching generation `n`, by rejection.
///
/// Generations below `n` are never materialized: everything the experiments
/// read (reduced trees, level sets, harmonic measure of generation `n`) lives
/// in depths `0..=n`, so the returned tree has height exactly `n`. Draws that
/// hit the node cap are rejected like extinct ones.
pub fn sample_conditioned_height<R: RngCore + ?Sized>(
    dist: &OffspringDistribution,
    n: usize,
    rng: &mut R,
    trial_cap: u64,
) -> Result<Conditioned> {
    sample_conditioned_height_capped(dist, n, rng, trial_cap, DEFAULT_NODE_CAP)
}

pub fn sample_conditioned_height_capped<R: RngCore + ?Sized>(
    dist: &OffspringDistribution,
    n: usize,
    rng: &mut R,
    trial_cap: u64,
    node_cap: usize,
) -> Result<Conditioned> {
    if n == 0 {
        return Err(Error::Domain {
            name: "n",
            value: 0.0,
            expected: "n >= 1",
        });
    }
    let mut tree = PlaneTree::single();
    for trial in 1..=trial_cap {
        if generate_into(&mut tree, dist, rng, Some(n), node_cap).is_ok() && tree.height() == n {
            return Ok(Conditioned { tree, trials: trial });
        }
    }
    Err(Error::TrialCapExhausted {
        trials: trial_cap,
        height: n,
    })
}

/// Rotates a step sequence with total sum `-1` to the unique rotation whose
/// partial sums stay nonnegative until the final step.
pub fn cycle_lemma_rotate(steps: &mut [i64]) {
    debug_assert_eq!(steps.iter().sum::<i64>(), -1);
    // first index (in prefix-sum positions 0..len) where the minimum is reached
    let mut sum = 0i64;
    let mut min = 0i64;
    let mut at = 0usize;
    for (i, s) in steps.iter().enumerate().take(steps.len() - 1) {
        sum += s;
        if sum < min {
            min = sum;
            at = i + 1;
        }
    }
    steps.rotate_left(at);
}

/// Galton–Watson tree conditioned to have exactly `edges` edges.
///
/// Geometric: a uniform arrangement of `edges` up-steps and `edges + 1`
/// down-steps, rotated by the cycle lemma, is a uniform Dyck path followed by
/// a final down-step. Poisson: offspring counts are multinomial over
/// `edges + 1` slots (i.i.d. Poisson conditioned on their sum), rotated into a
/// valid Łukasiewicz word.
pub fn sample_fixed_size<R: RngCore + ?Sized>(
    dist: &OffspringDistribution,
    edges: usize,
    rng: &mut R,
) -> Result<PlaneTree> {
    match dist.kind() {
        OffspringKind::Geometric => {
            let mut steps: Vec<i64> = std::iter::repeat_n(1, edges)
                .chain(std::iter::repeat_n(-1, edges + 1))
                .collect();
            steps.shuffle(rng);
            cycle_lemma_rotate(&mut steps);
            Ok(tree_from_dyck(&steps[..2 * edges]))
        }
        OffspringKind::Poisson => {
            let slots = edges + 1;
            let mut counts = vec![0i64; slots];
            for _ in 0..edges {
                counts[rng.random_range(0..slots)] += 1;
            }
            let mut steps: Vec<i64> = counts.iter().map(|c| c - 1).collect();
            cycle_lemma_rotate(&mut steps);
            let offspring: Vec<usize> = steps.iter().map(|s| (s + 1) as usize).collect();
            PlaneTree::from_preorder_offspring(&offspring)
        }
        _ => Err(Error::UnsupportedDistribution(dist.name())),
    }
}

/// Fixed-size tree resampled until it reaches generation `n`.
pub fn sample_fixed_size_reaching<R: RngCore + ?Sized>(
    dist: &OffspringDistribution,
    edges: usize,
    n: usize,
    rng: &mut R,
    trial_cap: u64,
) -> Result<Conditioned> {
    if n > edges {
        return Err(Error::Config(format!(
            "a tree with {edges} edges cannot reach generation {n}"
        )));
    }
    for trial in 1..=trial_cap {
        let tree = sample_fixed_size(dist, edges, rng)?;
        if tree.height() >= n {
            return Ok(Conditioned { tree, trials: trial });
        }
    }
    Err(Error::TrialCapExhausted {
        trials: trial_cap,
        height: n,
    })
}

/// Contour (Dyck) path with steps `+1` / `-1` to a plane tree.
fn tree_from_dyck(steps: &[i64]) -> PlaneTree {
    let mut parents = vec![0usize];
    let mut current = 0usize;
    for &s in steps {
        if s > 0 {
            parents.push(current);
            current = parents.len() - 1;
        } else {
            current = parents[current];
        }
    }
    PlaneTree::from_preorder_parents(&parents).expect("Dyck path encodes a tree")
}
