//! Block metric models, component decompositions and the embedding of
//! zero-dimensional finite metric spaces into the nonnegative integers.

use std::collections::BTreeMap;

use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::supernatural::Tower;

/// Largest truncation that is materialized as explicit points.
pub const MAX_POINTS: usize = 1 << 32;

/// The depth-`N` truncation of a tower's canonical ultrametric model.
///
/// Points are `0..k_N`; `d(x, y)` is the least `n` such that `x` and `y`
/// fall in the same aligned interval of length `k_n`. The `n`-components are
/// exactly those intervals (the left cosets of the level-`n` subgroup).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BlockSpaceRepr", into = "BlockSpaceRepr")]
pub struct BlockSpace {
    tower: Tower,
    depth: usize,
    orders: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct BlockSpaceRepr {
    tower: Tower,
    depth: usize,
}

impl TryFrom<BlockSpaceRepr> for BlockSpace {
    type Error = Error;

    fn try_from(repr: BlockSpaceRepr) -> Result<Self> {
        BlockSpace::new(repr.tower, repr.depth)
    }
}

impl From<BlockSpace> for BlockSpaceRepr {
    fn from(s: BlockSpace) -> Self {
        BlockSpaceRepr { tower: s.tower, depth: s.depth }
    }
}

impl BlockSpace {
    pub fn new(tower: Tower, depth: usize) -> Result<Self> {
        let orders = tower
            .orders_usize(depth)
            .filter(|o| o[depth] <= MAX_POINTS)
            .ok_or_else(|| {
                Error::TooLarge(format!("k_{depth} = {} points", tower.order(depth)))
            })?;
        Ok(BlockSpace { tower, depth, orders })
    }

    pub fn tower(&self) -> &Tower {
        &self.tower
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of points, `k_N`.
    pub fn size(&self) -> usize {
        self.orders[self.depth]
    }

    /// `k_n` for `n <= depth`.
    pub fn order(&self, n: usize) -> usize {
        self.orders[n]
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn distance(&self, x: usize, y: usize) -> Result<usize> {
        for p in [x, y] {
            if p >= self.size() {
                return Err(Error::PointOutOfRange { point: p as u64, size: self.size() as u64 });
            }
        }
        Ok(self.dist(x, y))
    }

    /// `distance` without range checks.
    pub fn dist(&self, x: usize, y: usize) -> usize {
        self.orders.iter().position(|&k| x / k == y / k).unwrap_or(self.depth)
    }

    /// The `n`-components: aligned intervals of length `k_n`, in increasing order.
    pub fn components(&self, n: usize) -> Result<Partition> {
        if n > self.depth {
            return Err(Error::LevelOutOfRange { level: n, depth: self.depth });
        }
        let k = self.orders[n];
        let blocks = (0..self.size() / k)
            .map(|j| {
                let points: Vec<usize> = (j * k..(j + 1) * k).collect();
                let diameter = self.dist(j * k, (j + 1) * k - 1) as u64;
                Block { points, diameter }
            })
            .collect();
        Ok(Partition { blocks })
    }

    /// Index of the `n`-component containing `x`.
    pub fn component_of(&self, x: usize, n: usize) -> usize {
        x / self.orders[n]
    }
}

/// A finite metric space with nonnegative integer distances.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteMetricSpace {
    size: usize,
    distances: Vec<u64>,
}

impl FiniteMetricSpace {
    /// Validates symmetry, zero diagonal, positivity off the diagonal and the
    /// triangle inequality.
    pub fn new(distances: Vec<Vec<u64>>) -> Result<Self> {
        let size = distances.len();
        if size == 0 {
            return Err(Error::InvalidMetric("empty space".into()));
        }
        if let Some(i) = distances.iter().position(|row| row.len() != size) {
            return Err(Error::InvalidMetric(format!("row {i} does not have {size} entries")));
        }
        let space = FiniteMetricSpace { size, distances: distances.into_iter().flatten().collect() };
        space.validate()?;
        Ok(space)
    }

    fn validate(&self) -> Result<()> {
        let n = self.size;
        for x in 0..n {
            for y in 0..n {
                let d = self.d(x, y);
                if d != self.d(y, x) {
                    return Err(Error::InvalidMetric(format!("d({x},{y}) != d({y},{x})")));
                }
                if (d == 0) != (x == y) {
                    return Err(Error::InvalidMetric(format!("d({x},{y}) = {d}")));
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                let dxy = self.d(x, y);
                for z in 0..n {
                    if self.d(x, z) > dxy + self.d(y, z) {
                        return Err(Error::InvalidMetric(format!(
                            "triangle inequality fails for ({x},{y},{z})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// The block space rendered as a distance matrix.
    pub fn from_block_space(s: &BlockSpace) -> Self {
        let n = s.size();
        let mut distances = Vec::with_capacity(n * n);
        for x in 0..n {
            distances.extend((0..n).map(|y| s.dist(x, y) as u64));
        }
        FiniteMetricSpace { size: n, distances }
    }

    /// The same space with point `i` renamed from `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let n = self.size;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidMetric("relabeling is not a permutation".into()));
        }
        let mut distances = Vec::with_capacity(n * n);
        for x in 0..n {
            distances.extend((0..n).map(|y| self.d(perm[x], perm[y])));
        }
        Ok(FiniteMetricSpace { size: n, distances })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn d(&self, x: usize, y: usize) -> u64 {
        self.distances[x * self.size + y]
    }

    pub fn max_distance(&self) -> u64 {
        self.distances.iter().copied().max().unwrap_or(0)
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.distances.chunks(self.size).map(<[u64]>::to_vec).collect()
    }

    fn diameter_of(&self, points: &[usize]) -> u64 {
        let mut diam = 0;
        for (i, &x) in points.iter().enumerate() {
            for &y in &points[i + 1..] {
                diam = diam.max(self.d(x, y));
            }
        }
        diam
    }

    /// All unordered pairs `(d, x, y)` with `x < y`, sorted by distance.
    fn sorted_pairs(&self) -> Vec<(u64, usize, usize)> {
        let n = self.size;
        let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
        for x in 0..n {
            for y in x + 1..n {
                pairs.push((self.d(x, y), x, y));
            }
        }
        pairs.sort_unstable();
        pairs
    }
}

#[derive(Serialize, Deserialize)]
struct MetricRepr {
    size: usize,
    distances: Vec<Vec<u64>>,
}

impl Serialize for FiniteMetricSpace {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MetricRepr { size: self.size, distances: self.rows() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FiniteMetricSpace {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MetricRepr::deserialize(deserializer)?;
        if repr.size != repr.distances.len() {
            return Err(serde::de::Error::custom(format!(
                "size {} does not match {} rows",
                repr.size,
                repr.distances.len()
            )));
        }
        FiniteMetricSpace::new(repr.distances).map_err(serde::de::Error::custom)
    }
}

/// One part of a partition, with its diameter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub points: Vec<usize>,
    pub diameter: u64,
}

impl Block {
    pub fn cardinality(&self) -> usize {
        self.points.len()
    }
}

/// Disjoint blocks covering a space, each sorted, ordered by least element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Block>,
}

impl Partition {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn as_lists(&self) -> Vec<Vec<usize>> {
        self.blocks.iter().map(|b| b.points.clone()).collect()
    }

    /// Whether every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        let owner = coarser.owner_table();
        self.blocks.iter().all(|b| b.points.iter().all(|p| owner.get(p) == owner.get(&b.points[0])))
    }

    fn owner_table(&self) -> BTreeMap<usize, usize> {
        let mut owner = BTreeMap::new();
        for (i, b) in self.blocks.iter().enumerate() {
            for &p in &b.points {
                owner.insert(p, i);
            }
        }
        owner
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.blocks.len()))?;
        for b in &self.blocks {
            seq.serialize_element(&b.points)?;
        }
        seq.end()
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut x = x;
        while self.parent[x] != root {
            x = std::mem::replace(&mut self.parent[x], root);
        }
        root
    }

    /// Returns the surviving root.
    fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return a;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        a
    }
}

/// Equivalence classes of the chain relation generated by `d(x, y) <= radius`.
pub fn r_components(m: &FiniteMetricSpace, radius: u64) -> Partition {
    let n = m.size();
    let mut uf = UnionFind::new(n);
    for x in 0..n {
        for y in x + 1..n {
            if m.d(x, y) <= radius {
                uf.union(x, y);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for x in 0..n {
        groups.entry(uf.find(x)).or_default().push(x);
    }
    let mut blocks: Vec<Block> = groups
        .into_values()
        .map(|points| Block { diameter: m.diameter_of(&points), points })
        .collect();
    blocks.sort_by_key(|b| b.points[0]);
    Partition { blocks }
}

/// Largest component diameter and cardinality at one radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ProfileEntry {
    pub radius: u64,
    pub max_diameter: u64,
    pub max_cardinality: usize,
}

/// For every radius `0..=max distance`, the largest diameter and cardinality
/// among the radius-components.
pub fn asdim_zero_profile(m: &FiniteMetricSpace) -> Vec<ProfileEntry> {
    let n = m.size();
    let mut uf = UnionFind::new(n);
    let mut members: Vec<Vec<usize>> = (0..n).map(|x| vec![x]).collect();
    let mut diameter = vec![0u64; n];
    let (mut max_diameter, mut max_cardinality) = (0u64, 1usize);
    let mut out = Vec::new();
    let mut radius = 0u64;

    let pairs = m.sorted_pairs();
    let mut i = 0;
    loop {
        while i < pairs.len() && pairs[i].0 <= radius {
            let (_, x, y) = pairs[i];
            i += 1;
            let (rx, ry) = (uf.find(x), uf.find(y));
            if rx == ry {
                continue;
            }
            let mut across = 0;
            for &a in &members[rx] {
                for &b in &members[ry] {
                    across = across.max(m.d(a, b));
                }
            }
            let merged = diameter[rx].max(diameter[ry]).max(across);
            let root = uf.union(rx, ry);
            let other = if root == rx { ry } else { rx };
            let moved = std::mem::take(&mut members[other]);
            members[root].extend(moved);
            diameter[root] = merged;
            max_diameter = max_diameter.max(merged);
            max_cardinality = max_cardinality.max(members[root].len());
        }
        out.push(ProfileEntry { radius, max_diameter, max_cardinality });
        if radius >= m.max_distance() {
            break;
        }
        radius += 1;
    }
    out
}

/// An injective placement of the points of a finite metric space in `Z>=0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Embedding {
    pub positions: Vec<u64>,
}

impl Embedding {
    pub fn image(&self) -> Vec<u64> {
        let mut image = self.positions.clone();
        image.sort_unstable();
        image
    }
}

struct Cluster {
    threshold: u64,
    children: Vec<usize>,
    least_point: usize,
    points: Vec<usize>,
}

/// Single-linkage hierarchy keeping only the levels where components merge.
/// Leaves are `0..n`; the last node is the root.
fn merge_hierarchy(m: &FiniteMetricSpace) -> Vec<Cluster> {
    let n = m.size();
    let mut nodes: Vec<Cluster> = (0..n)
        .map(|x| Cluster { threshold: 0, children: Vec::new(), least_point: x, points: vec![x] })
        .collect();
    let mut uf = UnionFind::new(n);
    let mut node_of_root: Vec<usize> = (0..n).collect();

    let pairs = m.sorted_pairs();
    let mut i = 0;
    while i < pairs.len() {
        let level = pairs[i].0;
        let mut touched = Vec::new();
        let mut j = i;
        while j < pairs.len() && pairs[j].0 == level {
            let (_, x, y) = pairs[j];
            touched.push(uf.find(x));
            touched.push(uf.find(y));
            j += 1;
        }
        touched.sort_unstable();
        touched.dedup();
        for &(_, x, y) in &pairs[i..j] {
            uf.union(x, y);
        }
        let mut merged: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for old in touched {
            merged.entry(uf.find(old)).or_default().push(node_of_root[old]);
        }
        for (root, children) in merged {
            if children.len() < 2 {
                node_of_root[root] = children[0];
                continue;
            }
            let mut points: Vec<usize> = children.iter().flat_map(|&c| nodes[c].points.iter().copied()).collect();
            points.sort_unstable();
            let least_point = points[0];
            nodes.push(Cluster { threshold: level, children, least_point, points });
            node_of_root[root] = nodes.len() - 1;
        }
        i = j;
    }
    nodes
}

/// Places the points so that every `k`-component of `m` is carried onto a
/// `k`-component of the image, for every `k`.
///
/// Works up the merge hierarchy: at a merge level `L` the sub-component
/// holding the base point goes first with the base at 0; every other
/// sub-component, in order of least index, is placed with its own least
/// point exactly `L` to the right of everything placed so far. Point 0 is
/// the global base point.
pub fn embed_into_nonneg_integers(m: &FiniteMetricSpace) -> Embedding {
    let nodes = merge_hierarchy(m);
    let mut positions = vec![0u64; m.size()];
    place(&nodes, nodes.len() - 1, 0, 0, &mut positions);
    Embedding { positions }
}

/// Places cluster `node` with `base` at `offset`; returns the rightmost position used.
fn place(nodes: &[Cluster], node: usize, base: usize, offset: u64, positions: &mut [u64]) -> u64 {
    let cluster = &nodes[node];
    if cluster.children.is_empty() {
        positions[cluster.least_point] = offset;
        return offset;
    }
    let mut order: Vec<usize> = cluster.children.clone();
    order.sort_by_key(|&c| (nodes[c].points.binary_search(&base).is_err(), nodes[c].least_point));
    let mut right = place(nodes, order[0], base, offset, positions);
    for &child in &order[1..] {
        let start = right + cluster.threshold;
        right = place(nodes, child, nodes[child].least_point, start, positions);
    }
    right
}

/// `k`-components of a finite subset of `Z>=0` with the standard metric.
pub fn integer_components(points: &[u64], k: u64) -> Vec<Vec<u64>> {
    let mut sorted = points.to_vec();
    sorted.sort_unstable();
    let mut out: Vec<Vec<u64>> = Vec::new();
    for p in sorted {
        match out.last_mut() {
            Some(last) if p - last[last.len() - 1] <= k => last.push(p),
            _ => out.push(vec![p]),
        }
    }
    out
}

/// Checks injectivity and that for every `k` up to the maximum distance the
/// image of each `k`-component of `m` is exactly a `k`-component of the image.
pub fn verify_embedding(m: &FiniteMetricSpace, e: &Embedding) -> bool {
    let n = m.size();
    if e.positions.len() != n {
        return false;
    }
    let image = e.image();
    if image.windows(2).any(|w| w[0] == w[1]) {
        return false;
    }
    let top = m.max_distance().max(image.last().copied().unwrap_or(0) - image[0]);
    (0..=top).all(|k| {
        let mut mapped: Vec<Vec<u64>> = r_components(m, k)
            .blocks()
            .iter()
            .map(|b| {
                let mut img: Vec<u64> = b.points.iter().map(|&p| e.positions[p]).collect();
                img.sort_unstable();
                img
            })
            .collect();
        mapped.sort();
        mapped == integer_components(&image, k)
    })
}
