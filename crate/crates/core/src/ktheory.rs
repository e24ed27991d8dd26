//! The ordered K₀ group `ℓ∞(N, Z) / H` of the uniform Roe algebra of a
//! locally finite group, with order unit the constant sequence 1.
//!
//! `H` is the union over `n` of the sequences whose aligned `k_n`-blocks
//! all sum to zero. Classes are represented by eventually periodic integer
//! sequences, which makes equality and positivity decidable: with `d` the
//! difference of two representatives, `S_i` its partial sums, `σ` its period
//! sum and `q` its period, `d ∈ H` iff `σ = 0` and `S` vanishes on every tail
//! index that is a multiple of `g* = gcd(k_n, q)` for large `n`.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::equivalence::TowerBijection;
use crate::error::{Error, Result};
use crate::supernatural::{coarsely_equivalent, sn_equal, Exponent, Tower};

/// Largest representative (in explicit entries) materialized as a witness.
pub const MAX_REPRESENTATIVE: usize = 1 << 22;

/// An eventually periodic integer sequence: `prefix` followed by `period`
/// repeated forever.
///
/// Kept canonical: the period is primitive and the prefix never ends with
/// the period's last entry, so equal sequences have equal representations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PeriodicSeq {
    prefix: Vec<i64>,
    period: Vec<i64>,
}

impl PeriodicSeq {
    pub fn new(mut prefix: Vec<i64>, mut period: Vec<i64>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::Parse("period must be nonempty".into()));
        }
        let n = period.len();
        let p = (1..=n)
            .find(|&p| n % p == 0 && (p..n).all(|i| period[i] == period[i - p]))
            .unwrap_or(n);
        period.truncate(p);
        while prefix.last() == period.last() {
            prefix.pop();
            period.rotate_right(1);
        }
        Ok(PeriodicSeq { prefix, period })
    }

    pub fn zero() -> Self {
        PeriodicSeq { prefix: Vec::new(), period: vec![0] }
    }

    pub fn constant(c: i64) -> Self {
        PeriodicSeq { prefix: Vec::new(), period: vec![c] }
    }

    /// A finitely supported sequence.
    pub fn finite(values: Vec<i64>) -> Self {
        Self::new(values, vec![0]).expect("nonempty period")
    }

    pub fn prefix(&self) -> &[i64] {
        &self.prefix
    }

    pub fn period(&self) -> &[i64] {
        &self.period
    }

    pub fn get(&self, i: usize) -> i64 {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.period[(i - self.prefix.len()) % self.period.len()]
        }
    }

    /// The first `len` entries.
    pub fn take(&self, len: usize) -> Vec<i64> {
        (0..len).map(|i| self.get(i)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.prefix.is_empty() && self.period == [0]
    }

    pub fn is_finitely_supported(&self) -> bool {
        self.period == [0]
    }

    pub fn period_sum(&self) -> BigInt {
        self.period.iter().map(|&x| BigInt::from(x)).sum()
    }

    /// Largest absolute entry.
    pub fn bound(&self) -> u64 {
        self.prefix.iter().chain(&self.period).map(|x| x.unsigned_abs()).max().unwrap_or(0)
    }

    /// `S_i`, the sum of the first `i` entries.
    pub fn partial_sum(&self, i: &BigUint) -> BigInt {
        self.partial_sums().at(i)
    }

    fn partial_sums(&self) -> PartialSums {
        let running = |v: &[i64]| {
            std::iter::once(0i128)
                .chain(v.iter().scan(0i128, |acc, &x| {
                    *acc += x as i128;
                    Some(*acc)
                }))
                .collect::<Vec<_>>()
        };
        let head = running(&self.prefix);
        let tail = running(&self.period);
        PartialSums { head, sigma: *tail.last().expect("nonempty"), tail }
    }

    /// Entrywise combination over a common shape.
    fn zip_with(&self, other: &PeriodicSeq, f: impl Fn(i64, i64) -> Option<i64>) -> Result<Self> {
        let s = self.prefix.len().max(other.prefix.len());
        let q = self.period.len().lcm(&other.period.len());
        let combine = |range: std::ops::Range<usize>| {
            range
                .map(|i| f(self.get(i), other.get(i)).ok_or(Error::Overflow("class arithmetic")))
                .collect::<Result<Vec<_>>>()
        };
        Self::new(combine(0..s)?, combine(s..s + q)?)
    }

    fn map(&self, f: impl Fn(i64) -> Option<i64>) -> Result<Self> {
        let apply = |v: &[i64]| {
            v.iter()
                .map(|&x| f(x).ok_or(Error::Overflow("class arithmetic")))
                .collect::<Result<Vec<_>>>()
        };
        Self::new(apply(&self.prefix)?, apply(&self.period)?)
    }

    /// Blocks `j` with `j*k >= prefix length` repeat with period
    /// `q / gcd(k, q)`; returns the first such block index and that period.
    fn block_shape(&self, k: &BigUint) -> (usize, usize) {
        let s = BigUint::from(self.prefix.len());
        let q = BigUint::from(self.period.len());
        let first_periodic = s.div_ceil(k).to_usize().expect("at most the prefix length");
        let block_period = (&q / k.gcd(&q)).to_usize().expect("at most the period");
        (first_periodic, block_period)
    }

    /// Block sums for every block needed to decide a property of all blocks.
    fn decisive_block_sums(&self, k: &BigUint) -> impl Iterator<Item = BigInt> {
        let (j0, jq) = self.block_shape(k);
        let sums = self.partial_sums();
        let k = k.clone();
        (0..j0 + jq).map(move |j| {
            let start = &k * BigUint::from(j);
            let end = &start + &k;
            sums.at(&end) - sums.at(&start)
        })
    }

    /// The sequence of aligned `k`-block sums.
    pub fn block_sums(&self, k: &BigUint) -> Result<Self> {
        let (j0, _) = self.block_shape(k);
        let sums = self
            .decisive_block_sums(k)
            .map(|x| x.to_i64().ok_or(Error::Overflow("block sums")))
            .collect::<Result<Vec<_>>>()?;
        let (prefix, period) = sums.split_at(j0);
        Self::new(prefix.to_vec(), period.to_vec())
    }
}

/// Running sums of the prefix and of one period, for `S_i` at any index.
struct PartialSums {
    head: Vec<i128>,
    tail: Vec<i128>,
    sigma: i128,
}

impl PartialSums {
    fn at(&self, i: &BigUint) -> BigInt {
        let s = self.head.len() - 1;
        if let Some(i) = i.to_usize().filter(|&i| i <= s) {
            return BigInt::from(self.head[i]);
        }
        let q = BigUint::from(self.tail.len() - 1);
        let (full, rem) = (i - BigUint::from(s)).div_rem(&q);
        let rem = rem.to_usize().expect("remainder below the period length");
        BigInt::from(self.head[s]) + BigInt::from(full) * self.sigma + self.tail[rem]
    }
}

impl fmt::Display for PeriodicSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[i64]| v.iter().map(i64::to_string).collect::<Vec<_>>().join(",");
        write!(f, "[{}]({})", join(&self.prefix), join(&self.period))
    }
}

/// An element of `ℓ∞(N, Z) / H` over an infinite tower.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "K0ClassRepr", into = "K0ClassRepr")]
pub struct K0Class {
    context: Tower,
    seq: PeriodicSeq,
}

#[derive(Serialize, Deserialize)]
struct K0ClassRepr {
    context: Tower,
    prefix: Vec<i64>,
    period: Vec<i64>,
}

impl TryFrom<K0ClassRepr> for K0Class {
    type Error = Error;

    fn try_from(repr: K0ClassRepr) -> Result<Self> {
        K0Class::new(repr.context, PeriodicSeq::new(repr.prefix, repr.period)?)
    }
}

impl From<K0Class> for K0ClassRepr {
    fn from(c: K0Class) -> Self {
        K0ClassRepr { context: c.context, prefix: c.seq.prefix, period: c.seq.period }
    }
}

fn require_infinite(t: &Tower) -> Result<()> {
    if t.is_finite() {
        Err(Error::Precondition(format!("{t} is finite; its K0 group is FiniteK0")))
    } else {
        Ok(())
    }
}

impl K0Class {
    pub fn new(context: Tower, seq: PeriodicSeq) -> Result<Self> {
        require_infinite(&context)?;
        Ok(K0Class { context, seq })
    }

    pub fn from_parts(context: &Tower, prefix: &[i64], period: &[i64]) -> Result<Self> {
        Self::new(context.clone(), PeriodicSeq::new(prefix.to_vec(), period.to_vec())?)
    }

    pub fn context(&self) -> &Tower {
        &self.context
    }

    pub fn seq(&self) -> &PeriodicSeq {
        &self.seq
    }

    fn same_context(&self, other: &K0Class) -> Result<()> {
        if self.context == other.context {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }
}

impl fmt::Display for K0Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} over {}", self.seq, self.context)
    }
}

/// K₀ of a finite group's Roe algebra: `Z` with unit the group order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteK0 {
    pub rank: BigInt,
    pub unit_rank: BigUint,
}

impl FiniteK0 {
    pub fn unit(t: &Tower) -> Result<Self> {
        let order = t
            .group_order()
            .ok_or_else(|| Error::Precondition(format!("{t} is infinite")))?;
        Ok(FiniteK0 { rank: BigInt::from(order.clone()), unit_rank: order })
    }
}

/// The class of the constant sequence 1.
pub fn k0_unit(t: &Tower) -> Result<K0Class> {
    K0Class::new(t.clone(), PeriodicSeq::constant(1))
}

pub fn k0_zero(t: &Tower) -> Result<K0Class> {
    K0Class::new(t.clone(), PeriodicSeq::zero())
}

pub fn k0_add(a: &K0Class, b: &K0Class) -> Result<K0Class> {
    a.same_context(b)?;
    Ok(K0Class { context: a.context.clone(), seq: a.seq.zip_with(&b.seq, i64::checked_add)? })
}

pub fn k0_sub(a: &K0Class, b: &K0Class) -> Result<K0Class> {
    a.same_context(b)?;
    Ok(K0Class { context: a.context.clone(), seq: a.seq.zip_with(&b.seq, i64::checked_sub)? })
}

pub fn k0_neg(a: &K0Class) -> Result<K0Class> {
    Ok(K0Class { context: a.context.clone(), seq: a.seq.map(i64::checked_neg)? })
}

pub fn k0_scale(c: i64, a: &K0Class) -> Result<K0Class> {
    Ok(K0Class { context: a.context.clone(), seq: a.seq.map(|x| x.checked_mul(c))? })
}

/// Whether every aligned `k_n`-block of `d` sums to zero.
pub fn h_membership(t: &Tower, d: &K0Class, n: usize) -> Result<bool> {
    require_infinite(t)?;
    if &d.context != t {
        return Err(Error::ContextMismatch);
    }
    Ok(d.seq.decisive_block_sums(&t.order(n)).all(|s| s.is_zero()))
}

/// `α_{n-1} ∘ ... ∘ α_0`: the aligned `k_n`-block sums of `v`.
pub fn alpha_iterate(t: &Tower, n: usize, v: &PeriodicSeq) -> Result<PeriodicSeq> {
    require_infinite(t)?;
    v.block_sums(&t.order(n))
}

/// `g* = ∏_{p | q} p^{min(v_p(q), e_p)}`, the eventual value of `gcd(k_n, q)`.
pub fn stable_gcd(t: &Tower, q: usize) -> usize {
    let sn = t.supernatural();
    arith::factorize(&BigUint::from(q))
        .into_iter()
        .map(|(p, e)| {
            let cap = match sn.exponent(&p) {
                Exponent::Finite(f) => f.min(e),
                Exponent::Infinite => e,
            };
            p.to_usize().expect("divides q").pow(cap as u32)
        })
        .product()
}

/// `n*`: the least level with `gcd(k_n, q) = g*` and `k_n >= s + q`.
pub fn decision_level(t: &Tower, prefix_len: usize, period_len: usize) -> usize {
    let g = BigUint::from(stable_gcd(t, period_len));
    let q = BigUint::from(period_len);
    let floor = BigUint::from(prefix_len + period_len);
    let mut k = BigUint::one();
    for n in 0.. {
        if k.gcd(&q) == g && k >= floor {
            return n;
        }
        k *= t.ratio(n).expect("infinite tower");
    }
    unreachable!()
}

/// Partial sums `S_i` at one tail index per residue class `0, g, 2g, ... (mod q)`.
fn tail_sums_on_multiples(seq: &PeriodicSeq, g: usize) -> Vec<BigInt> {
    let (s, q) = (seq.prefix.len(), seq.period.len());
    let sums = seq.partial_sums();
    (0..q)
        .step_by(g)
        .map(|r| {
            let i = s + (r + q - s % q) % q;
            sums.at(&BigUint::from(i))
        })
        .collect()
}

/// Equality in `ℓ∞(N, Z) / H`, decided exactly.
pub fn k0_equal(a: &K0Class, b: &K0Class) -> Result<bool> {
    let d = k0_sub(a, b)?;
    if !d.seq.period_sum().is_zero() {
        return Ok(false);
    }
    let g = stable_gcd(&d.context, d.seq.period.len());
    Ok(tail_sums_on_multiples(&d.seq, g).iter().all(Zero::is_zero))
}

/// Outcome of a positivity decision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Positivity {
    pub positive: bool,
    /// Least level whose block sums are all nonnegative.
    pub level: Option<usize>,
    /// Pointwise nonnegative representative built at `level`, when small enough.
    pub representative: Option<K0Class>,
}

fn all_blocks_nonnegative(seq: &PeriodicSeq, k: &BigUint) -> bool {
    seq.decisive_block_sums(k).all(|s| !s.is_negative())
}

/// Whether the class has a pointwise nonnegative representative.
pub fn k0_positive(a: &K0Class) -> Result<Positivity> {
    let t = &a.context;
    let seq = &a.seq;
    let sigma = seq.period_sum();
    let (s, q) = (seq.prefix.len(), seq.period.len());
    let negative = Positivity { positive: false, level: None, representative: None };

    let top = if sigma.is_negative() {
        return Ok(negative);
    } else if sigma.is_zero() {
        let g = stable_gcd(t, q);
        let sums = tail_sums_on_multiples(seq, g);
        if sums.iter().any(|v| v != &sums[0]) || sums[0].is_negative() {
            return Ok(negative);
        }
        decision_level(t, s, q)
    } else {
        // every aligned block is nonnegative once ⌊k_n/q⌋σ exceeds 2(s+q+1)B
        let need = BigInt::from(2 * (s + q + 1)) * BigInt::from(seq.bound());
        let mut n = 0;
        while BigInt::from(t.order(n) / BigUint::from(q)) * &sigma <= need {
            n += 1;
        }
        n
    };
    let level = (0..=top)
        .find(|&n| all_blocks_nonnegative(seq, &t.order(n)))
        .expect("the decisive level has nonnegative blocks");
    Ok(Positivity { positive: true, level: Some(level), representative: block_representative(a, level)? })
}

/// Replaces each aligned `k_n`-block by `(block sum, 0, ..., 0)`.
fn block_representative(a: &K0Class, level: usize) -> Result<Option<K0Class>> {
    let k = a.context.order(level);
    let Some(width) = k.to_usize() else { return Ok(None) };
    let sums = a.seq.block_sums(&k)?;
    let (j0, jq) = a.seq.block_shape(&k);
    if (j0 + jq).saturating_mul(width) > MAX_REPRESENTATIVE {
        return Ok(None);
    }
    let expand = |range: std::ops::Range<usize>| {
        let mut out = vec![0i64; range.len() * width];
        for (slot, j) in range.enumerate() {
            out[slot * width] = sums.get(j);
        }
        out
    };
    let seq = PeriodicSeq::new(expand(0..j0), expand(j0..j0 + jq))?;
    Ok(Some(K0Class { context: a.context.clone(), seq }))
}

/// A class `w` with `p^r · w = [1]`, when `p^r` divides the supernatural
/// number: `k_n / p^r` ones followed by zeros, with `n` least such that
/// `p^r | k_n`. `None` when `p^r` does not divide it.
pub fn unit_divide(t: &Tower, p: &BigUint, r: u32) -> Result<Option<K0Class>> {
    require_infinite(t)?;
    if !arith::is_prime(p) {
        return Err(Error::NotPrime(p.to_string()));
    }
    if r == 0 {
        return k0_unit(t).map(Some);
    }
    if !t.supernatural().exponent(p).admits(r as u64) {
        return Ok(None);
    }
    // one point in every p^r: each deep enough block holds exactly k_n / p^r of them
    let len = p
        .pow(r)
        .to_usize()
        .filter(|&l| l <= MAX_REPRESENTATIVE)
        .ok_or_else(|| Error::TooLarge(format!("witness period of length {p}^{r}")))?;
    let mut period = vec![0i64; len];
    period[0] = 1;
    K0Class::new(t.clone(), PeriodicSeq::new(Vec::new(), period)?).map(Some)
}

/// Isomorphism of ordered K₀ groups with order unit.
pub fn k0_iso_exists(t1: &Tower, t2: &Tower) -> bool {
    match (t1.is_finite(), t2.is_finite()) {
        (true, true) => t1.group_order() == t2.group_order(),
        (false, false) => sn_equal(&t1.supernatural(), &t2.supernatural()),
        _ => false,
    }
}

/// Isomorphism of the bare K₀ groups: `Z` for finite groups, a group that is
/// not singly generated for infinite ones.
pub fn k0_groups_abstractly_iso(t1: &Tower, t2: &Tower) -> bool {
    coarsely_equivalent(t1, t2)
}

/// Relocates a finitely supported class along `b`'s map.
pub fn transport_class(b: &TowerBijection, a: &K0Class) -> Result<K0Class> {
    if a.context != b.source {
        return Err(Error::ContextMismatch);
    }
    if !a.seq.is_finitely_supported() {
        return Err(Error::Precondition("only finitely supported classes can be transported".into()));
    }
    let support: Vec<(usize, i64)> =
        a.seq.prefix.iter().copied().enumerate().filter(|&(_, x)| x != 0).collect();
    let mut relocated: Vec<(usize, i64)> = Vec::with_capacity(support.len());
    for (i, x) in support {
        let y = *b.map.get(i).ok_or_else(|| {
            Error::DepthExhausted(format!("support point {i} lies beyond the depth-{} map", b.depth))
        })?;
        relocated.push((y as usize, x));
    }
    let len = relocated.iter().map(|&(y, _)| y + 1).max().unwrap_or(0);
    let mut prefix = vec![0i64; len];
    for (y, x) in relocated {
        prefix[y] = x;
    }
    K0Class::new(b.target.clone(), PeriodicSeq::finite(prefix))
}

/// The class of a level-`n` rank vector: entry `j` placed at position `j·k_n`.
pub fn class_of_rank_vector(t: &Tower, n: usize, ranks: &[i64]) -> Result<K0Class> {
    let k = t
        .order(n)
        .to_usize()
        .ok_or_else(|| Error::TooLarge(format!("k_{n}")))?;
    let mut values = vec![0i64; ranks.len() * k];
    for (j, &r) in ranks.iter().enumerate() {
        values[j * k] = r;
    }
    K0Class::new(t.clone(), PeriodicSeq::finite(values))
}
