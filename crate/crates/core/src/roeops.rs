//! Exact finite-propagation operators on block spaces: the dense
//! `*`-algebra of the uniform Roe algebra at truncation scale, its
//! block-diagonal structure, connecting maps and trace vectors.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::blockspace::BlockSpace;
use crate::equivalence::TowerBijection;
use crate::error::{Error, Result};
use crate::ktheory::{class_of_rank_vector, K0Class};
use crate::supernatural::Tower;

type Entries = BTreeMap<(usize, usize), BigRational>;

fn insert_sum(entries: &mut Entries, key: (usize, usize), value: BigRational) {
    if value.is_zero() {
        return;
    }
    let slot = entries.entry(key).or_insert_with(BigRational::zero);
    *slot += value;
    if slot.is_zero() {
        entries.remove(&key);
    }
}

fn sparse_product(a: &Entries, b: &Entries) -> Entries {
    let mut rows_of_b: BTreeMap<usize, Vec<(usize, &BigRational)>> = BTreeMap::new();
    for (&(r, c), v) in b {
        rows_of_b.entry(r).or_default().push((c, v));
    }
    let mut out = Entries::new();
    for (&(r, k), x) in a {
        for &(c, y) in rows_of_b.get(&k).map(Vec::as_slice).unwrap_or(&[]) {
            insert_sum(&mut out, (r, c), x * y);
        }
    }
    out
}

fn sparse_adjoint(a: &Entries) -> Entries {
    // real scalars: the adjoint is the transpose
    a.iter().map(|(&(r, c), v)| ((c, r), v.clone())).collect()
}

/// Parses `"num/den"` or `"num"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Parse(format!("expected a rational \"num/den\", got {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim().parse::<BigInt>().map_err(|_| bad())?, d.trim().parse::<BigInt>().map_err(|_| bad())?),
        None => (s.trim().parse::<BigInt>().map_err(|_| bad())?, BigInt::one()),
    };
    if den.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(num, den))
}

pub fn format_rational(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// A square exact-rational matrix stored sparsely.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    dim: usize,
    entries: Entries,
}

impl Matrix {
    pub fn zero(dim: usize) -> Self {
        Matrix { dim, entries: Entries::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal((0..dim).map(|_| BigRational::one()).collect())
    }

    pub fn diagonal(values: Vec<BigRational>) -> Self {
        let dim = values.len();
        let entries = values.into_iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(i, v)| ((i, i), v)).collect();
        Matrix { dim, entries }
    }

    /// Diagonal 0/1 matrix with ones at `support`.
    pub fn diagonal_projection(dim: usize, support: &[usize]) -> Self {
        let entries = support.iter().map(|&i| ((i, i), BigRational::one())).collect();
        Matrix { dim, entries }
    }

    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        Matrix { dim, entries: [((i, j), BigRational::one())].into_iter().collect() }
    }

    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (usize, usize, BigRational)>) -> Result<Self> {
        let mut m = Matrix::zero(dim);
        for (r, c, v) in entries {
            if r >= dim || c >= dim {
                return Err(Error::PointOutOfRange { point: r.max(c) as u64, size: dim as u64 });
            }
            insert_sum(&mut m.entries, (r, c), v);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &BigRational)> {
        self.entries.iter().map(|(&(r, c), v)| (r, c, v))
    }

    pub fn get(&self, r: usize, c: usize) -> BigRational {
        self.entries.get(&(r, c)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        Matrix { dim: self.dim, entries: sparse_product(&self.entries, &other.entries) }
    }

    pub fn adjoint(&self) -> Matrix {
        Matrix { dim: self.dim, entries: sparse_adjoint(&self.entries) }
    }

    pub fn trace(&self) -> BigRational {
        self.entries.iter().filter(|((r, c), _)| r == c).map(|(_, v)| v.clone()).sum()
    }

    /// `P² = P = P*`.
    pub fn is_projection(&self) -> bool {
        self.adjoint() == *self && self.mul(self) == *self
    }

    /// Support of a diagonal 0/1 matrix, if it is one.
    fn diagonal_support(&self) -> Option<Vec<usize>> {
        self.entries
            .iter()
            .map(|(&(r, c), v)| (r == c && v.is_one()).then_some(r))
            .collect()
    }
}

/// A finite-propagation operator on a block space with exact rational
/// matrix coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "OperatorRepr", into = "OperatorRepr")]
pub struct PropagationOperator {
    space: BlockSpace,
    entries: Entries,
}

#[derive(Serialize, Deserialize)]
struct OperatorRepr {
    space: BlockSpace,
    entries: Vec<(u64, u64, String)>,
}

impl TryFrom<OperatorRepr> for PropagationOperator {
    type Error = Error;

    fn try_from(repr: OperatorRepr) -> Result<Self> {
        let entries = repr
            .entries
            .iter()
            .map(|(r, c, v)| Ok((*r as usize, *c as usize, parse_rational(v)?)))
            .collect::<Result<Vec<_>>>()?;
        PropagationOperator::from_entries(repr.space, entries)
    }
}

impl From<PropagationOperator> for OperatorRepr {
    fn from(t: PropagationOperator) -> Self {
        let entries = t.entries.iter().map(|(&(r, c), v)| (r as u64, c as u64, format_rational(v))).collect();
        OperatorRepr { space: t.space, entries }
    }
}

impl PropagationOperator {
    pub fn from_entries(space: BlockSpace, entries: impl IntoIterator<Item = (usize, usize, BigRational)>) -> Result<Self> {
        let size = space.size();
        let mut out = Entries::new();
        for (r, c, v) in entries {
            if r >= size || c >= size {
                return Err(Error::PointOutOfRange { point: r.max(c) as u64, size: size as u64 });
            }
            insert_sum(&mut out, (r, c), v);
        }
        Ok(PropagationOperator { space, entries: out })
    }

    pub fn zero(space: &BlockSpace) -> Self {
        PropagationOperator { space: space.clone(), entries: Entries::new() }
    }

    pub fn identity(space: &BlockSpace) -> Self {
        let entries = (0..space.size()).map(|i| ((i, i), BigRational::one())).collect();
        PropagationOperator { space: space.clone(), entries }
    }

    /// The matrix unit `e_{i,j}`, sending `δ_j` to `δ_i`.
    pub fn matrix_unit(space: &BlockSpace, i: usize, j: usize) -> Result<Self> {
        Self::from_entries(space.clone(), [(i, j, BigRational::one())])
    }

    /// Multiplication by a function in `ℓ∞` of the points.
    pub fn diagonal(space: &BlockSpace, values: &[BigRational]) -> Result<Self> {
        if values.len() != space.size() {
            return Err(Error::SpaceMismatch);
        }
        Self::from_entries(space.clone(), values.iter().enumerate().map(|(i, v)| (i, i, v.clone())))
    }

    pub fn space(&self) -> &BlockSpace {
        &self.space
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &BigRational)> {
        self.entries.iter().map(|(&(r, c), v)| (r, c, v))
    }

    pub fn get(&self, r: usize, c: usize) -> BigRational {
        self.entries.get(&(r, c)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries.keys().all(|(r, c)| r == c)
    }

    /// Largest distance between a row and a column carrying a nonzero entry.
    pub fn propagation(&self) -> usize {
        self.entries.keys().map(|&(r, c)| self.space.dist(r, c)).max().unwrap_or(0)
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.space == other.space {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        let mut entries = self.entries.clone();
        for (&key, v) in &other.entries {
            insert_sum(&mut entries, key, v.clone());
        }
        Ok(PropagationOperator { space: self.space.clone(), entries })
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(PropagationOperator { space: self.space.clone(), entries: sparse_product(&self.entries, &other.entries) })
    }

    pub fn adjoint(&self) -> Self {
        PropagationOperator { space: self.space.clone(), entries: sparse_adjoint(&self.entries) }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let entries = if c.is_zero() {
            Entries::new()
        } else {
            self.entries.iter().map(|(&k, v)| (k, v * c)).collect()
        };
        PropagationOperator { space: self.space.clone(), entries }
    }
}

/// Block-diagonal form at level `n`: one `k_n × k_n` block per level-`n`
/// component of the truncation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BlockTupleRepr", into = "BlockTupleRepr")]
pub struct BlockTuple {
    level: usize,
    dim: usize,
    blocks: Vec<Matrix>,
}

#[derive(Serialize, Deserialize)]
struct BlockTupleRepr {
    level: usize,
    dim: usize,
    blocks: Vec<Vec<(u64, u64, String)>>,
}

impl TryFrom<BlockTupleRepr> for BlockTuple {
    type Error = Error;

    fn try_from(repr: BlockTupleRepr) -> Result<Self> {
        let blocks = repr
            .blocks
            .iter()
            .map(|b| {
                let entries = b
                    .iter()
                    .map(|(r, c, v)| Ok((*r as usize, *c as usize, parse_rational(v)?)))
                    .collect::<Result<Vec<_>>>()?;
                Matrix::from_entries(repr.dim, entries)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockTuple { level: repr.level, dim: repr.dim, blocks })
    }
}

impl From<BlockTuple> for BlockTupleRepr {
    fn from(b: BlockTuple) -> Self {
        let blocks = b
            .blocks
            .iter()
            .map(|m| m.entries().map(|(r, c, v)| (r as u64, c as u64, format_rational(v))).collect())
            .collect();
        BlockTupleRepr { level: b.level, dim: b.dim, blocks }
    }
}

impl BlockTuple {
    pub fn new(level: usize, dim: usize, blocks: Vec<Matrix>) -> Result<Self> {
        if blocks.iter().any(|b| b.dim != dim) {
            return Err(Error::Precondition(format!("every block must be {dim} x {dim}")));
        }
        Ok(BlockTuple { level, dim, blocks })
    }

    /// Diagonal 0/1 blocks with the given supports.
    pub fn diagonal_projections(level: usize, dim: usize, supports: &[Vec<usize>]) -> Result<Self> {
        let blocks = supports.iter().map(|s| Matrix::diagonal_projection(dim, s)).collect();
        Self::new(level, dim, blocks)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Matrix] {
        &self.blocks
    }

    pub fn is_projection(&self) -> bool {
        self.blocks.iter().all(Matrix::is_projection)
    }

    fn zip(&self, other: &Self, f: impl Fn(&Matrix, &Matrix) -> Matrix) -> Result<Self> {
        if self.level != other.level || self.dim != other.dim || self.blocks.len() != other.blocks.len() {
            return Err(Error::SpaceMismatch);
        }
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect();
        Ok(BlockTuple { level: self.level, dim: self.dim, blocks })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip(other, Matrix::mul)
    }

    pub fn adjoint(&self) -> Self {
        BlockTuple { level: self.level, dim: self.dim, blocks: self.blocks.iter().map(Matrix::adjoint).collect() }
    }
}

/// Splits `t` into its level-`n` diagonal blocks.
pub fn block_decompose(t: &PropagationOperator, n: usize) -> Result<BlockTuple> {
    let space = &t.space;
    if n > space.depth() {
        return Err(Error::LevelOutOfRange { level: n, depth: space.depth() });
    }
    let propagation = t.propagation();
    if propagation > n {
        return Err(Error::NotBlockDiagonal { propagation, level: n });
    }
    let k = space.order(n);
    let mut blocks = vec![Matrix::zero(k); space.size() / k];
    for (&(r, c), v) in &t.entries {
        blocks[r / k].entries.insert((r % k, c % k), v.clone());
    }
    Ok(BlockTuple { level: n, dim: k, blocks })
}

/// Reassembles a block tuple into an operator on `space`.
pub fn recompose(space: &BlockSpace, b: &BlockTuple) -> Result<PropagationOperator> {
    if b.level > space.depth() || space.order(b.level) != b.dim || b.blocks.len() * b.dim != space.size() {
        return Err(Error::SpaceMismatch);
    }
    let k = b.dim;
    let entries = b
        .blocks
        .iter()
        .enumerate()
        .flat_map(|(j, m)| m.entries.iter().map(move |(&(r, c), v)| ((j * k + r, j * k + c), v.clone())))
        .collect();
    Ok(PropagationOperator { space: space.clone(), entries })
}

fn ratio_at(t: &Tower, n: usize) -> Result<usize> {
    let r = t.ratio(n).ok_or(Error::LevelOutOfRange {
        level: n + 1,
        depth: t.finite_length().unwrap_or(n),
    })?;
    r.to_usize().ok_or_else(|| Error::TooLarge(format!("ratio {r}")))
}

/// `φ_n`: groups consecutive runs of `r_n` blocks into one diagonal block.
pub fn connecting_map(t: &Tower, n: usize, b: &BlockTuple) -> Result<BlockTuple> {
    if b.level != n {
        return Err(Error::Precondition(format!("blocks are at level {}, not {n}", b.level)));
    }
    let r = ratio_at(t, n)?;
    if b.blocks.len() % r != 0 {
        return Err(Error::LevelOutOfRange { level: n + 1, depth: n });
    }
    let k = b.dim;
    let blocks = b
        .blocks
        .chunks(r)
        .map(|run| {
            let mut m = Matrix::zero(k * r);
            for (i, block) in run.iter().enumerate() {
                for (&(row, col), v) in &block.entries {
                    m.entries.insert((i * k + row, i * k + col), v.clone());
                }
            }
            m
        })
        .collect();
    Ok(BlockTuple { level: n + 1, dim: k * r, blocks })
}

/// `Tr★`: the non-normalized trace of each block.
pub fn trace_vector(b: &BlockTuple, require_projection: bool) -> Result<Vec<i64>> {
    b.blocks
        .iter()
        .enumerate()
        .map(|(i, m)| {
            if require_projection && !m.is_projection() {
                return Err(Error::NotProjection(i));
            }
            let tr = m.trace();
            if !tr.is_integer() {
                return Err(Error::NonIntegralTrace(i));
            }
            tr.to_integer().to_i64().ok_or(Error::Overflow("trace"))
        })
        .collect()
}

/// `α_n` on a finite rank vector: sums of consecutive runs of `r_n` entries.
pub fn alpha_step(t: &Tower, n: usize, v: &[i64]) -> Result<Vec<i64>> {
    let r = ratio_at(t, n)?;
    if v.len() % r != 0 {
        return Err(Error::LevelOutOfRange { level: n + 1, depth: n });
    }
    v.chunks(r)
        .map(|run| run.iter().try_fold(0i64, |acc, &x| acc.checked_add(x)).ok_or(Error::Overflow("alpha step")))
        .collect()
}

/// The K₀ class of a level-`n` projection: its rank vector expanded into
/// level-0 positions `(m_j, 0, ..., 0)`.
pub fn k0_class_of(t: &Tower, p: &BlockTuple) -> Result<K0Class> {
    let ranks = trace_vector(p, true)?;
    class_of_rank_vector(t, p.level, &ranks)
}

/// A partial isometry `v` with `v*v = p` and `vv* = q`, built blockwise.
///
/// Blocks must be diagonal 0/1 projections or equal; anything else is
/// refused with `UnsupportedEntries`. `None` when the trace vectors differ.
pub fn mvn_partial_isometry(p: &BlockTuple, q: &BlockTuple) -> Result<Option<BlockTuple>> {
    if p.level != q.level || p.dim != q.dim || p.blocks.len() != q.blocks.len() {
        return Err(Error::SpaceMismatch);
    }
    if trace_vector(p, true)? != trace_vector(q, true)? {
        return Ok(None);
    }
    let mut blocks = Vec::with_capacity(p.blocks.len());
    for (i, (a, b)) in p.blocks.iter().zip(&q.blocks).enumerate() {
        if a == b {
            blocks.push(a.clone());
            continue;
        }
        let (Some(from), Some(to)) = (a.diagonal_support(), b.diagonal_support()) else {
            return Err(Error::UnsupportedEntries(i));
        };
        let entries = to.into_iter().zip(from).map(|(r, c)| ((r, c), BigRational::one())).collect();
        blocks.push(Matrix { dim: p.dim, entries });
    }
    Ok(Some(BlockTuple { level: p.level, dim: p.dim, blocks }))
}

/// `uTu*` with `uδ_x = δ_{f(x)}`: moves the entry at `(x₁, x₂)` to
/// `(f(x₁), f(x₂))`. The result lives on the target truncation of `b`.
pub fn conjugate_by_bijection(b: &TowerBijection, t: &PropagationOperator) -> Result<PropagationOperator> {
    if t.space.tower() != &b.source {
        return Err(Error::ContextMismatch);
    }
    let target = b.target_space()?;
    let image = |x: usize| {
        b.map
            .get(x)
            .map(|&y| y as usize)
            .filter(|&y| y < target.size())
            .ok_or_else(|| Error::DepthExhausted(format!("point {x} lies outside the depth-{} map", b.depth)))
    };
    let mut entries = Entries::new();
    for (&(r, c), v) in &t.entries {
        entries.insert((image(r)?, image(c)?), v.clone());
    }
    Ok(PropagationOperator { space: target, entries })
}
