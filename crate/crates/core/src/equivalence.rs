//! Explicit bijective coarse equivalences between block models of towers
//! with equal supernatural numbers, built by a back-and-forth argument, and
//! a verifier for candidate maps.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::blockspace::BlockSpace;
use crate::error::{Error, Result};
use crate::supernatural::{sn_equal, Tower};

/// Largest source truncation the construction will materialize.
pub const MAX_BIJECTION_POINTS: usize = 1 << 24;

/// Interleaved subtower indices `n_1 < n_2 < ...` (source) and
/// `m_1 < m_2 < ...` (target) with
/// `k_{n_1} | k'_{m_1} | k_{n_2} | k'_{m_2} | ... | k_{n_{D+1}}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interleaving {
    pub pairs: Vec<(usize, usize)>,
    /// `n_{D+1}`, the source level the last backward step maps into.
    pub closing_source_level: usize,
}

impl Interleaving {
    pub fn depth(&self) -> usize {
        self.pairs.len()
    }
}

fn scan_bound(t: &Tower, depth: usize) -> usize {
    64.max(depth * (t.prefix_ratios().len() + t.tail_ratios().len()) * 8)
}

/// Least level `n >= from` with `divisor | k_n` and `k_n != divisor`
/// (`strict`), or `divisor | k_n` otherwise.
fn least_dividing_level(t: &Tower, divisor: &BigUint, from: usize, strict: bool, bound: usize) -> Result<(usize, BigUint)> {
    let mut order = t.order(from);
    for n in from..=bound {
        if order.is_multiple_of(divisor) && !(strict && &order == divisor) {
            return Ok((n, order));
        }
        if let Some(r) = t.ratio(n) {
            order *= r;
        }
    }
    Err(Error::DepthExhausted(format!(
        "no level <= {bound} of {t} is divisible by {divisor}"
    )))
}

/// Greedy interleaving: each source index is the least one whose order is a
/// proper multiple of the previous target order, each target index the
/// least one whose order is a multiple of the new source order.
pub fn interleave_towers(t1: &Tower, t2: &Tower, depth: usize) -> Result<Interleaving> {
    if t1.is_finite() || t2.is_finite() {
        return Err(Error::Precondition("interleaving needs two infinite towers".into()));
    }
    if !sn_equal(&t1.supernatural(), &t2.supernatural()) {
        return Err(Error::NotEquivalent);
    }
    let (bound1, bound2) = (scan_bound(t1, depth), scan_bound(t2, depth));
    let mut pairs = Vec::with_capacity(depth);
    let mut target_order = BigUint::from(1u32);
    let (mut n, mut m) = (0, 0);
    for _ in 0..depth {
        let (next_n, source_order) = least_dividing_level(t1, &target_order, n, true, bound1)?;
        let (next_m, next_target) = least_dividing_level(t2, &source_order, m, false, bound2)?;
        pairs.push((next_n, next_m));
        n = next_n;
        m = next_m;
        target_order = next_target;
    }
    let (closing, _) = least_dividing_level(t1, &target_order, n, true, bound1)?;
    Ok(Interleaving { pairs, closing_source_level: closing })
}

/// A truncated bijective coarse equivalence between two block models.
///
/// `map` sends the source points `0..k_{n_D}` into the target block model;
/// its image is a union of target components of level `m_{D-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BijectionRepr", into = "BijectionRepr")]
pub struct TowerBijection {
    pub source: Tower,
    pub target: Tower,
    pub depth: usize,
    pub levels: Vec<(usize, usize)>,
    pub map: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct BijectionRepr {
    source: Tower,
    target: Tower,
    depth: usize,
    levels: Vec<(usize, usize)>,
    map: Vec<String>,
}

impl TryFrom<BijectionRepr> for TowerBijection {
    type Error = Error;

    fn try_from(repr: BijectionRepr) -> Result<Self> {
        if repr.map.len() % 2 != 0 {
            return Err(Error::MalformedMap("map must be a flat list of pairs".into()));
        }
        let mut map = Vec::with_capacity(repr.map.len() / 2);
        for (i, pair) in repr.map.chunks(2).enumerate() {
            let parse = |s: &String| {
                s.parse::<u64>().map_err(|_| Error::Parse(format!("expected a point, got {s:?}")))
            };
            if parse(&pair[0])? != i as u64 {
                return Err(Error::MalformedMap(format!("pair {i} does not start with source point {i}")));
            }
            map.push(parse(&pair[1])?);
        }
        Ok(TowerBijection { source: repr.source, target: repr.target, depth: repr.depth, levels: repr.levels, map })
    }
}

impl From<TowerBijection> for BijectionRepr {
    fn from(b: TowerBijection) -> Self {
        let map = b
            .map
            .iter()
            .enumerate()
            .flat_map(|(x, y)| [x.to_string(), y.to_string()])
            .collect();
        BijectionRepr { source: b.source, target: b.target, depth: b.depth, levels: b.levels, map }
    }
}

impl TowerBijection {
    /// The identity on the depth-`depth` block model of `t`.
    pub fn identity(t: &Tower, depth: usize) -> Result<Self> {
        let space = BlockSpace::new(t.clone(), depth)?;
        Ok(TowerBijection {
            source: t.clone(),
            target: t.clone(),
            depth,
            levels: (1..=depth).map(|n| (n, n)).collect(),
            map: (0..space.size() as u64).collect(),
        })
    }

    /// `n_D`, or 0 at depth 0.
    pub fn source_level(&self) -> usize {
        self.levels.last().map_or(0, |&(n, _)| n)
    }

    /// `m_D`, or 0 at depth 0.
    pub fn target_level(&self) -> usize {
        self.levels.last().map_or(0, |&(_, m)| m)
    }

    /// The source truncation `0..k_{n_D}`.
    pub fn source_space(&self) -> Result<BlockSpace> {
        BlockSpace::new(self.source.clone(), self.source_level())
    }

    /// The target truncation containing the image.
    pub fn target_space(&self) -> Result<BlockSpace> {
        BlockSpace::new(self.target.clone(), self.target_level())
    }

    /// Whether this map extends `prev` (same towers, earlier levels, same values).
    pub fn extends(&self, prev: &TowerBijection) -> bool {
        self.source == prev.source
            && self.target == prev.target
            && prev.depth <= self.depth
            && self.levels.starts_with(&prev.levels)
            && self.map.starts_with(&prev.map)
    }

    fn check_structure(&self) -> Result<(BlockSpace, BlockSpace)> {
        if self.levels.len() != self.depth {
            return Err(Error::MalformedMap(format!(
                "{} level pairs for depth {}",
                self.levels.len(),
                self.depth
            )));
        }
        let increasing = |v: Vec<usize>| std::iter::once(0).chain(v).collect::<Vec<_>>().windows(2).all(|w| w[0] < w[1]);
        if !increasing(self.levels.iter().map(|p| p.0).collect()) || !increasing(self.levels.iter().map(|p| p.1).collect()) {
            return Err(Error::MalformedMap("level indices must increase strictly".into()));
        }
        let source = self.source_space()?;
        let target = self.target_space()?;
        if self.map.len() != source.size() {
            return Err(Error::MalformedMap(format!(
                "map covers {} points, source truncation has {}",
                self.map.len(),
                source.size()
            )));
        }
        if let Some(&y) = self.map.iter().find(|&&y| y >= target.size() as u64) {
            return Err(Error::MalformedMap(format!("image point {y} outside the target truncation")));
        }
        Ok((source, target))
    }

    /// The measured modulus `ρ(ℓ)` for `ℓ = 0..=n_D`.
    pub fn modulus(&self) -> Result<Vec<usize>> {
        let (source, target) = self.check_structure()?;
        Ok(measure_modulus(&self.map, &source, &target))
    }
}

fn measure_modulus(map: &[u64], source: &BlockSpace, target: &BlockSpace) -> Vec<usize> {
    (0..=source.depth())
        .map(|level| {
            let k = source.order(level);
            (0..map.len())
                .map(|x| target.dist(map[x - x % k] as usize, map[x] as usize))
                .max()
                .unwrap_or(0)
        })
        .collect()
}

/// Runs the back-and-forth construction to `depth`.
pub fn build_back_and_forth(t1: &Tower, t2: &Tower, depth: usize) -> Result<TowerBijection> {
    Ok(BackAndForth::run(t1, t2, depth)?.forward)
}

/// The depth-`D` forward map together with the backward map `ψ_D` defined
/// on the target points `0..k'_{m_D}`.
#[derive(Clone, Debug)]
pub struct BackAndForth {
    pub forward: TowerBijection,
    pub backward: Vec<u64>,
    pub interleaving: Interleaving,
}

const UNSET: u64 = u64::MAX;

impl BackAndForth {
    /// Alternates forward steps `φ_k` (source level `n_k` onto target
    /// level-`m_{k-1}` blocks) with backward steps `ψ_k` (target level `m_k`
    /// onto source level-`n_k` blocks inside level `n_{k+1}`). New blocks are
    /// taken lowest index first and filled by order-preserving translation.
    pub fn run(t1: &Tower, t2: &Tower, depth: usize) -> Result<Self> {
        let interleaving = interleave_towers(t1, t2, depth)?;
        let size = |o: BigUint| {
            o.to_usize()
                .filter(|&s| s <= MAX_BIJECTION_POINTS)
                .ok_or_else(|| Error::TooLarge(format!("{o} points")))
        };
        // a[j] = k_{n_j}, b[j] = k'_{m_j}, with n_0 = m_0 = 0
        let mut a = vec![1usize];
        let mut b = vec![1usize];
        for &(n, m) in &interleaving.pairs {
            a.push(size(t1.order(n))?);
            b.push(size(t2.order(m))?);
        }
        a.push(size(t1.order(interleaving.closing_source_level))?);

        let mut fwd = vec![UNSET; a[depth + 1]];
        let mut bwd = vec![UNSET; b[depth]];
        fwd[0] = 0;
        bwd[0] = 0;
        for k in 1..=depth {
            extend(&mut fwd, &mut bwd, a[k], a[k - 1], b[k], b[k - 1]);
            extend(&mut bwd, &mut fwd, b[k], b[k - 1], a[k + 1], a[k]);
        }
        debug_assert!(fwd[..a[depth]].iter().all(|&y| y != UNSET));
        debug_assert!(bwd.iter().all(|&x| x != UNSET));

        fwd.truncate(a[depth]);
        let forward = TowerBijection {
            source: t1.clone(),
            target: t2.clone(),
            depth,
            levels: interleaving.pairs.clone(),
            map: fwd,
        };
        Ok(BackAndForth { forward, backward: bwd, interleaving })
    }
}

/// One step: every unmapped `unit`-block of `from[..domain]` is sent by
/// translation into the next free `unit`-slot of the unused `slot_block`-blocks
/// of `to[..codomain]`; `from` and `to` stay mutually inverse.
fn extend(from: &mut [u64], to: &mut [u64], domain: usize, unit: usize, codomain: usize, slot_block: usize) {
    let free: Vec<usize> = (0..codomain).step_by(slot_block).filter(|&s| to[s] == UNSET).collect();
    let mut slots = free.into_iter().flat_map(|s| (s..s + slot_block).step_by(unit));
    for start in (0..domain).step_by(unit) {
        if from[start] != UNSET {
            continue;
        }
        let slot = slots.next().expect("divisibility leaves enough free blocks");
        for i in 0..unit {
            from[start + i] = (slot + i) as u64;
            to[slot + i] = (start + i) as u64;
        }
    }
}

/// Indices of the aligned `k`-blocks lying entirely in the image.
fn covered_components(inverse: &[u64], k: usize) -> Vec<usize> {
    (0..inverse.len() / k)
        .filter(|&j| inverse[j * k..(j + 1) * k].iter().all(|&x| x != UNSET))
        .collect()
}

/// Divisibility of component orders at one source level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DivisibilityCheck {
    pub level: usize,
    pub target_level: usize,
    pub source_order: u64,
    pub target_order: u64,
    /// Target components at `target_level` lying entirely in the image.
    pub covered_components: usize,
    /// Every covered component is a disjoint union of source-component images.
    pub disjoint_union: bool,
    pub divides: bool,
}

/// Interleaving condition at one pair `(n_j, m_j)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelCheck {
    pub pair: usize,
    pub source_level: usize,
    pub target_level: usize,
    /// `ρ(n_j) <= m_j`.
    pub forward_ok: bool,
    /// Covered `m_j`-components pull back into single `n_{j+1}`-components;
    /// `None` at the last pair, where `n_{D+1}` lies beyond the truncation.
    pub backward_ok: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub injective: bool,
    pub modulus: Vec<usize>,
    pub levels: Vec<LevelCheck>,
    pub divisibility: Vec<DivisibilityCheck>,
    pub passed: bool,
}

impl VerificationReport {
    /// First source level whose components are not carried into single
    /// target components at the interleaved level.
    pub fn first_component_failure(&self) -> Option<usize> {
        self.levels.iter().find(|c| !c.forward_ok).map(|c| c.source_level)
    }
}

/// Checks injectivity, measures the modulus, checks the interleaving
/// conditions in both directions, and checks that fully covered target
/// components are disjoint unions of source components of dividing order.
/// Failed checks are reported; only structurally invalid maps are errors.
pub fn verify_bijective_coarse_equivalence(b: &TowerBijection) -> Result<VerificationReport> {
    let (source, target) = b.check_structure()?;
    let map = &b.map;

    let mut inverse = vec![UNSET; target.size()];
    let mut injective = true;
    for (x, &y) in map.iter().enumerate() {
        let slot = &mut inverse[y as usize];
        if *slot != UNSET {
            injective = false;
        }
        *slot = x as u64;
    }

    let modulus = measure_modulus(map, &source, &target);

    let covered = |level: usize| covered_components(&inverse, target.order(level));

    let mut levels = Vec::with_capacity(b.depth);
    for (j, &(n, m)) in b.levels.iter().enumerate() {
        let forward_ok = modulus[n] <= m;
        let backward_ok = b.levels.get(j + 1).map(|&(next_n, _)| {
            let k = target.order(m);
            covered(m).into_iter().all(|c| {
                let block = &inverse[c * k..(c + 1) * k];
                block.iter().all(|&x| source.component_of(x as usize, next_n) == source.component_of(block[0] as usize, next_n))
            })
        });
        levels.push(LevelCheck { pair: j + 1, source_level: n, target_level: m, forward_ok, backward_ok });
    }

    let mut divisibility = Vec::with_capacity(modulus.len());
    for (level, &s) in modulus.iter().enumerate() {
        let (ks, kt) = (source.order(level), target.order(s));
        let mut covered_components = 0;
        let mut disjoint_union = true;
        for c in covered(s) {
            covered_components += 1;
            let pre = &inverse[c * kt..(c + 1) * kt];
            // every source component meeting the preimage lies inside it
            disjoint_union &= pre.iter().all(|&x| {
                let start = x as usize - x as usize % ks;
                (start..start + ks).all(|z| target.component_of(map[z] as usize, s) == c)
            });
        }
        divisibility.push(DivisibilityCheck {
            level,
            target_level: s,
            source_order: ks as u64,
            target_order: kt as u64,
            covered_components,
            disjoint_union,
            divides: kt % ks == 0,
        });
    }

    let passed = injective
        && levels.iter().all(|c| c.forward_ok && c.backward_ok != Some(false))
        && divisibility.iter().all(|d| d.disjoint_union && (d.covered_components == 0 || d.divides));
    Ok(VerificationReport { injective, modulus, levels, divisibility, passed })
}
