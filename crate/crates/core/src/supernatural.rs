//! Order towers of locally finite groups and their supernatural numbers.
//!
//! A countable locally finite group is an increasing union of finite
//! subgroups `{e} = G_0 <= G_1 <= ...`. Up to bijective coarse equivalence
//! only the orders `k_n = |G_n|` matter, and those are recorded here as the
//! ratio stream `r_n = k_{n+1} / k_n`, restricted to eventually periodic
//! streams.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::error::{Error, Result};

/// An eventually periodic ratio stream `r_0, r_1, ...`.
///
/// Values are kept in a canonical form: ratios equal to one are dropped, the
/// tail is its own primitive period and the prefix never ends with the
/// tail's last ratio. Two towers describing the same stream compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TowerRepr", into = "TowerRepr")]
pub struct Tower {
    prefix: Vec<BigUint>,
    tail: Vec<BigUint>,
}

impl Tower {
    pub fn new(prefix: Vec<BigUint>, tail: Vec<BigUint>) -> Result<Self> {
        if prefix.iter().chain(&tail).any(|r| r == &BigUint::ZERO) {
            return Err(Error::InvalidTower("ratios must be positive".into()));
        }
        let mut prefix: Vec<BigUint> = prefix.into_iter().filter(|r| !r.is_one()).collect();
        let mut tail: Vec<BigUint> = tail.into_iter().filter(|r| !r.is_one()).collect();

        if let Some(p) = primitive_period(&tail) {
            tail.truncate(p);
        }
        while !tail.is_empty() && prefix.last() == tail.last() {
            prefix.pop();
            tail.rotate_right(1);
        }
        Ok(Tower { prefix, tail })
    }

    pub fn from_ratios(prefix: &[u64], tail: &[u64]) -> Result<Self> {
        Self::new(
            prefix.iter().copied().map(BigUint::from).collect(),
            tail.iter().copied().map(BigUint::from).collect(),
        )
    }

    /// The tower `r, r, r, ...`.
    pub fn periodic(tail: &[u64]) -> Result<Self> {
        Self::from_ratios(&[], tail)
    }

    /// A finite group of order `prod(prefix)`.
    pub fn finite(prefix: &[u64]) -> Result<Self> {
        Self::from_ratios(prefix, &[])
    }

    pub fn prefix_ratios(&self) -> &[BigUint] {
        &self.prefix
    }

    pub fn tail_ratios(&self) -> &[BigUint] {
        &self.tail
    }

    pub fn is_finite(&self) -> bool {
        self.tail.is_empty()
    }

    pub fn is_infinite(&self) -> bool {
        !self.tail.is_empty()
    }

    /// The `i`-th unrolled ratio, or `None` past the end of a finite tower.
    pub fn ratio(&self, i: usize) -> Option<&BigUint> {
        if i < self.prefix.len() {
            Some(&self.prefix[i])
        } else if self.tail.is_empty() {
            None
        } else {
            Some(&self.tail[(i - self.prefix.len()) % self.tail.len()])
        }
    }

    /// `k_n`, saturating at the group order for finite towers.
    pub fn order(&self, n: usize) -> BigUint {
        let mut k = BigUint::one();
        for i in 0..n {
            match self.ratio(i) {
                Some(r) => k *= r,
                None => break,
            }
        }
        k
    }

    /// `[k_0, k_1, ..., k_n]`.
    pub fn orders(&self, n: usize) -> Vec<BigUint> {
        let mut out = Vec::with_capacity(n + 1);
        let mut k = BigUint::one();
        out.push(k.clone());
        for i in 0..n {
            if let Some(r) = self.ratio(i) {
                k *= r;
            }
            out.push(k.clone());
        }
        out
    }

    /// `[k_0, ..., k_n]` as machine integers, if they all fit.
    pub fn orders_usize(&self, n: usize) -> Option<Vec<usize>> {
        self.orders(n).iter().map(ToPrimitive::to_usize).collect()
    }

    /// Group order of a finite tower.
    pub fn group_order(&self) -> Option<BigUint> {
        self.is_finite().then(|| self.prefix.iter().product())
    }

    /// Number of levels after which a finite tower stops growing.
    pub fn finite_length(&self) -> Option<usize> {
        self.is_finite().then_some(self.prefix.len())
    }

    pub fn supernatural(&self) -> SupernaturalNumber {
        supernatural_of_tower(self)
    }
}

impl fmt::Display for Tower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[BigUint]| v.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "[{}]({})", join(&self.prefix), join(&self.tail))
    }
}

fn primitive_period(seq: &[BigUint]) -> Option<usize> {
    let n = seq.len();
    (1..=n).find(|&p| n % p == 0 && (p..n).all(|i| seq[i] == seq[i - p]))
}

#[derive(Serialize, Deserialize)]
struct TowerRepr {
    prefix: Vec<String>,
    tail: Vec<String>,
}

impl TryFrom<TowerRepr> for Tower {
    type Error = Error;

    fn try_from(repr: TowerRepr) -> Result<Self> {
        Tower::new(parse_biguints(&repr.prefix)?, parse_biguints(&repr.tail)?)
    }
}

impl From<Tower> for TowerRepr {
    fn from(t: Tower) -> Self {
        TowerRepr {
            prefix: t.prefix.iter().map(|r| r.to_string()).collect(),
            tail: t.tail.iter().map(|r| r.to_string()).collect(),
        }
    }
}

fn parse_biguints(items: &[String]) -> Result<Vec<BigUint>> {
    items
        .iter()
        .map(|s| {
            s.parse::<BigUint>()
                .map_err(|_| Error::Parse(format!("expected a decimal integer, got {s:?}")))
        })
        .collect()
}

/// A value in `N ∪ {∞}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Exponent {
    Finite(u64),
    Infinite,
}

impl Exponent {
    pub const ZERO: Exponent = Exponent::Finite(0);

    pub fn finite(self) -> Option<u64> {
        match self {
            Exponent::Finite(e) => Some(e),
            Exponent::Infinite => None,
        }
    }

    /// Whether `p^m` divides a prime with this exponent.
    pub fn admits(self, m: u64) -> bool {
        match self {
            Exponent::Finite(e) => m <= e,
            Exponent::Infinite => true,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(e) => write!(f, "{e}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "∞" => Ok(Exponent::Infinite),
            _ => s
                .parse::<u64>()
                .map(Exponent::Finite)
                .map_err(|_| Error::Parse(format!("expected an exponent or \"inf\", got {s:?}"))),
        }
    }
}

/// A formal product `∏ p^{e_p}` with `e_p ∈ N ∪ {∞}`.
///
/// Primes not listed carry `default_exponent`, which is either 0 or ∞; no
/// listed exponent equals the default, so derived equality is the
/// prime-by-prime equality of supernatural numbers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SupernaturalRepr", into = "SupernaturalRepr")]
pub struct SupernaturalNumber {
    exponents: BTreeMap<BigUint, Exponent>,
    default_exponent: Exponent,
}

impl SupernaturalNumber {
    pub fn new(exponents: BTreeMap<BigUint, Exponent>, default_exponent: Exponent) -> Result<Self> {
        if default_exponent != Exponent::ZERO && default_exponent != Exponent::Infinite {
            return Err(Error::InvalidSupernatural(format!(
                "default exponent must be 0 or inf, got {default_exponent}"
            )));
        }
        if let Some(p) = exponents.keys().find(|p| !arith::is_prime(p)) {
            return Err(Error::NotPrime(p.to_string()));
        }
        let exponents = exponents
            .into_iter()
            .filter(|(_, e)| *e != default_exponent)
            .collect();
        Ok(SupernaturalNumber { exponents, default_exponent })
    }

    /// The supernatural number 1.
    pub fn one() -> Self {
        SupernaturalNumber { exponents: BTreeMap::new(), default_exponent: Exponent::ZERO }
    }

    /// `2^∞ 3^∞ 5^∞ ...`, e.g. for `S_∞` or `Q/Z`.
    pub fn all_infinite() -> Self {
        SupernaturalNumber { exponents: BTreeMap::new(), default_exponent: Exponent::Infinite }
    }

    pub fn exponents(&self) -> &BTreeMap<BigUint, Exponent> {
        &self.exponents
    }

    pub fn default_exponent(&self) -> Exponent {
        self.default_exponent
    }

    pub fn exponent(&self, p: &BigUint) -> Exponent {
        self.exponents.get(p).copied().unwrap_or(self.default_exponent)
    }

    /// Whether `p^m` divides this supernatural number.
    pub fn divides_prime_power(&self, p: &BigUint, m: u64) -> Result<bool> {
        if !arith::is_prime(p) {
            return Err(Error::NotPrime(p.to_string()));
        }
        Ok(self.exponent(p).admits(m))
    }

    /// Pointwise `e_p(self) <= e_p(other)` for every prime.
    pub fn divides(&self, other: &SupernaturalNumber) -> bool {
        if self.default_exponent > other.default_exponent {
            // Some prime outside both key sets carries the defaults.
            return false;
        }
        self.exponents
            .keys()
            .chain(other.exponents.keys())
            .all(|p| self.exponent(p) <= other.exponent(p))
    }

    /// Whether this is the supernatural number of a finite group.
    pub fn is_finite(&self) -> bool {
        self.default_exponent == Exponent::ZERO
            && self.exponents.values().all(|e| matches!(e, Exponent::Finite(_)))
    }
}

impl fmt::Display for SupernaturalNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> =
            self.exponents.iter().map(|(p, e)| format!("{p}^{e}")).collect();
        if self.default_exponent == Exponent::Infinite {
            parts.push("(others)^inf".into());
        }
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join(" "))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SupernaturalRepr {
    exponents: BTreeMap<String, String>,
    default: String,
}

impl TryFrom<SupernaturalRepr> for SupernaturalNumber {
    type Error = Error;

    fn try_from(repr: SupernaturalRepr) -> Result<Self> {
        let mut exponents = BTreeMap::new();
        for (p, e) in &repr.exponents {
            let p = p
                .parse::<BigUint>()
                .map_err(|_| Error::Parse(format!("expected a prime, got {p:?}")))?;
            exponents.insert(p, e.parse()?);
        }
        SupernaturalNumber::new(exponents, repr.default.parse()?)
    }
}

impl From<SupernaturalNumber> for SupernaturalRepr {
    fn from(s: SupernaturalNumber) -> Self {
        SupernaturalRepr {
            exponents: s.exponents.iter().map(|(p, e)| (p.to_string(), e.to_string())).collect(),
            default: s.default_exponent.to_string(),
        }
    }
}

/// `k_n = r_0 r_1 ... r_{n-1}`; saturates at the group order of a finite tower.
pub fn tower_order(t: &Tower, n: usize) -> BigUint {
    t.order(n)
}

/// `e_p = sup_n v_p(k_n)`: infinite for primes of the tail, otherwise the
/// valuation of the prefix product.
pub fn supernatural_of_tower(t: &Tower) -> SupernaturalNumber {
    let mut exponents: BTreeMap<BigUint, Exponent> = BTreeMap::new();
    for r in &t.prefix {
        for (p, e) in arith::factorize(r) {
            let slot = exponents.entry(p).or_insert(Exponent::ZERO);
            if let Exponent::Finite(acc) = slot {
                *acc += e;
            }
        }
    }
    for r in &t.tail {
        for p in arith::factorize(r).into_keys() {
            exponents.insert(p, Exponent::Infinite);
        }
    }
    SupernaturalNumber { exponents, default_exponent: Exponent::ZERO }
}

pub fn sn_divides(p: &BigUint, m: u64, s: &SupernaturalNumber) -> Result<bool> {
    s.divides_prime_power(p, m)
}

pub fn sn_equal(s: &SupernaturalNumber, u: &SupernaturalNumber) -> bool {
    s == u
}

/// Same supernatural number, i.e. bijectively coarsely equivalent groups.
pub fn bijectively_coarsely_equivalent(t1: &Tower, t2: &Tower) -> bool {
    sn_equal(&t1.supernatural(), &t2.supernatural())
}

/// Infinite locally finite groups are all coarsely equivalent, and so are
/// finite ones; an infinite group is never coarsely equivalent to a finite one.
pub fn coarsely_equivalent(t1: &Tower, t2: &Tower) -> bool {
    t1.is_finite() == t2.is_finite()
}

/// A prime power dividing exactly one of two supernatural numbers.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Obstruction {
    pub prime: BigUint,
    pub exponent: u64,
}

/// Smallest prime `p`, then least `r >= 1`, with `p^r` dividing exactly one
/// of the two towers' supernatural numbers.
pub fn obstruction_witness(t1: &Tower, t2: &Tower) -> Option<Obstruction> {
    obstruction_between(&t1.supernatural(), &t2.supernatural())
}

pub fn obstruction_between(s: &SupernaturalNumber, u: &SupernaturalNumber) -> Option<Obstruction> {
    let mut candidates: Vec<BigUint> = s.exponents.keys().chain(u.exponents.keys()).cloned().collect();
    if s.default_exponent != u.default_exponent {
        let smallest_unlisted = arith::primes()
            .map(BigUint::from)
            .find(|p| !s.exponents.contains_key(p) && !u.exponents.contains_key(p))
            .expect("infinitely many primes");
        candidates.push(smallest_unlisted);
    }
    candidates.sort();
    candidates.into_iter().find_map(|p| {
        let (a, b) = (s.exponent(&p), u.exponent(&p));
        if a == b {
            return None;
        }
        let low = a.min(b).finite().expect("two differing exponents have a finite minimum");
        Some(Obstruction { prime: p, exponent: low + 1 })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    fn sn(pairs: &[(u64, Exponent)], default: Exponent) -> SupernaturalNumber {
        SupernaturalNumber::new(pairs.iter().map(|&(p, e)| (big(p), e)).collect(), default).unwrap()
    }

    use Exponent::{Finite, Infinite};

    #[test]
    fn orders() {
        let t = Tower::periodic(&[2]).unwrap();
        assert_eq!(tower_order(&t, 3), big(8));
        assert_eq!(tower_order(&t, 0), big(1));
        let t = Tower::from_ratios(&[2, 3], &[5]).unwrap();
        assert_eq!(tower_order(&t, 4), big(150));
        assert_eq!(t.orders(4), vec![big(1), big(2), big(6), big(30), big(150)]);
    }

    #[test]
    fn finite_towers_saturate() {
        let t = Tower::finite(&[2, 3]).unwrap();
        assert_eq!(t.order(2), big(6));
        assert_eq!(t.order(10), big(6));
        assert_eq!(t.group_order(), Some(big(6)));
        assert!(t.ratio(2).is_none());
    }

    #[test]
    fn normalization() {
        let t = Tower::from_ratios(&[1, 2, 1], &[1, 3, 1, 3]).unwrap();
        assert_eq!(t, Tower::from_ratios(&[2], &[3]).unwrap());
        assert_eq!(Tower::from_ratios(&[6], &[1, 1]).unwrap(), Tower::finite(&[6]).unwrap());
        // the prefix 2 is absorbed into the periodic tail
        assert_eq!(Tower::from_ratios(&[3, 2], &[2]).unwrap(), Tower::from_ratios(&[3], &[2]).unwrap());
        assert_eq!(
            Tower::from_ratios(&[5, 3], &[2, 3]).unwrap(),
            Tower::from_ratios(&[5], &[3, 2]).unwrap()
        );
        assert!(Tower::from_ratios(&[0], &[]).is_err());
    }

    #[test]
    fn supernatural_numbers_of_towers() {
        assert_eq!(Tower::periodic(&[2]).unwrap().supernatural(), sn(&[(2, Infinite)], Finite(0)));
        assert_eq!(Tower::finite(&[6]).unwrap().supernatural(), sn(&[(2, Finite(1)), (3, Finite(1))], Finite(0)));
        assert_eq!(
            Tower::from_ratios(&[2], &[6]).unwrap().supernatural(),
            sn(&[(2, Infinite), (3, Infinite)], Finite(0))
        );
        assert_eq!(
            Tower::from_ratios(&[12, 5], &[3]).unwrap().supernatural(),
            sn(&[(2, Finite(2)), (3, Infinite), (5, Finite(1))], Finite(0))
        );
    }

    #[test]
    fn divisibility_queries() {
        let two_inf = sn(&[(2, Infinite)], Finite(0));
        let six = sn(&[(2, Finite(1)), (3, Finite(1))], Finite(0));
        assert!(sn_divides(&big(2), 3, &two_inf).unwrap());
        assert!(!sn_divides(&big(3), 1, &two_inf).unwrap());
        assert!(!sn_divides(&big(2), 2, &six).unwrap());
        assert!(sn_divides(&big(2), 1, &six).unwrap());
        assert_eq!(sn_divides(&big(4), 1, &six), Err(Error::NotPrime("4".into())));
        assert!(six.divides(&SupernaturalNumber::all_infinite()));
        assert!(!SupernaturalNumber::all_infinite().divides(&six));
    }

    #[test]
    fn equality() {
        let two_inf = sn(&[(2, Infinite)], Finite(0));
        assert!(sn_equal(&two_inf, &two_inf.clone()));
        assert!(!sn_equal(&two_inf, &sn(&[(3, Infinite)], Finite(0))));
        // same exponent at 2, but every other prime differs
        let all = SupernaturalNumber::all_infinite();
        let two_only_default_inf = sn(&[(2, Infinite)], Infinite);
        assert_eq!(all, two_only_default_inf);
        assert!(!sn_equal(&all, &two_inf));
    }

    #[test]
    fn default_infinite_with_finite_entries() {
        let s = sn(&[(3, Finite(0)), (5, Finite(2))], Infinite);
        assert_eq!(s.exponent(&big(2)), Infinite);
        assert_eq!(s.exponent(&big(3)), Finite(0));
        assert!(!s.is_finite());
        assert!(SupernaturalNumber::new([(big(9), Finite(1))].into(), Finite(0)).is_err());
        assert!(SupernaturalNumber::new(BTreeMap::new(), Finite(3)).is_err());
    }

    #[test]
    fn classification_decisions() {
        let t2 = Tower::periodic(&[2]).unwrap();
        let t3 = Tower::periodic(&[3]).unwrap();
        let t42 = Tower::from_ratios(&[4], &[2]).unwrap();
        let f6 = Tower::finite(&[6]).unwrap();
        let f8 = Tower::finite(&[8]).unwrap();
        assert!(bijectively_coarsely_equivalent(&t2, &t42));
        assert!(!bijectively_coarsely_equivalent(&t2, &t3));
        assert!(bijectively_coarsely_equivalent(&t3, &t3));
        assert!(coarsely_equivalent(&t2, &t3));
        assert!(coarsely_equivalent(&f6, &f8));
        assert!(!coarsely_equivalent(&f6, &t2));
    }

    #[test]
    fn obstructions() {
        let t2 = Tower::periodic(&[2]).unwrap();
        let t3 = Tower::periodic(&[3]).unwrap();
        let t4 = Tower::periodic(&[4]).unwrap();
        assert_eq!(obstruction_witness(&t2, &t3), Some(Obstruction { prime: big(2), exponent: 1 }));
        assert_eq!(obstruction_witness(&t2, &t2), None);
        assert_eq!(obstruction_witness(&t4, &t2), None);
        let f12 = Tower::finite(&[12]).unwrap();
        let f18 = Tower::finite(&[18]).unwrap();
        // 12 = 2^2 3, 18 = 2 3^2: 2^2 divides only the first
        assert_eq!(obstruction_witness(&f12, &f18), Some(Obstruction { prime: big(2), exponent: 2 }));
        let between = obstruction_between(&SupernaturalNumber::all_infinite(), &sn(&[(2, Infinite)], Finite(0)));
        assert_eq!(between, Some(Obstruction { prime: big(3), exponent: 1 }));
    }

    #[test]
    fn json_formats() {
        let t: Tower = serde_json::from_str(r#"{"prefix": ["2","3"], "tail": ["5"]}"#).unwrap();
        assert_eq!(t, Tower::from_ratios(&[2, 3], &[5]).unwrap());
        assert_eq!(serde_json::to_string(&t).unwrap(), r#"{"prefix":["2","3"],"tail":["5"]}"#);
        let s: SupernaturalNumber =
            serde_json::from_str(r#"{"exponents": {"2": "inf", "3": "1"}, "default": "0"}"#).unwrap();
        assert_eq!(s, sn(&[(2, Infinite), (3, Finite(1))], Finite(0)));
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"exponents":{"2":"inf","3":"1"},"default":"0"}"#
        );
        assert!(serde_json::from_str::<Tower>(r#"{"prefix": ["x"], "tail": []}"#).is_err());
        assert!(serde_json::from_str::<Tower>(r#"{"prefix": ["0"], "tail": []}"#).is_err());
    }
}
