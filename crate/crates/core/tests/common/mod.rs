//! Brute-force oracles and random generators shared by the test targets.
//! Nothing here calls the decision procedures under test.
#![allow(dead_code)]

use std::collections::BTreeMap;

use locfin::{FiniteMetricSpace, Tower};
use num_traits::ToPrimitive;
use rand::Rng;

pub fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `k_0, ..., k_n` as machine integers.
pub fn orders(t: &Tower, n: usize) -> Vec<u128> {
    let mut out = vec![1u128];
    for i in 0..n {
        let r = t.ratio(i).map_or(1, |r| r.to_u128().unwrap());
        out.push(out[i] * r);
    }
    out
}

pub fn entry(prefix: &[i64], period: &[i64], i: u128) -> i64 {
    let s = prefix.len() as u128;
    if i < s {
        prefix[i as usize]
    } else {
        period[((i - s) % period.len() as u128) as usize]
    }
}

/// Sum of entries `a..a+k`, counting how often each tail residue occurs.
pub fn window_sum(prefix: &[i64], period: &[i64], a: u128, k: u128) -> i128 {
    let s = prefix.len() as u128;
    let q = period.len() as u128;
    let end = a + k;
    let mut total: i128 = (a..end.min(s)).map(|i| prefix[i as usize] as i128).sum();
    let start = a.max(s);
    if start < end {
        for (r, &x) in period.iter().enumerate() {
            // tail indices i in [start, end) with (i - s) % q == r
            let first = s + r as u128;
            let count = |bound: u128| if bound <= first { 0 } else { (bound - first - 1) / q + 1 };
            total += x as i128 * (count(end) - count(start)) as i128;
        }
    }
    total
}

/// Block sums of the first `s + q + 1` aligned `k`-blocks, enough to see
/// every block shape.
pub fn block_sums(prefix: &[i64], period: &[i64], k: u128) -> Vec<i128> {
    let blocks = (prefix.len() + period.len() + 1) as u128;
    (0..blocks).map(|j| window_sum(prefix, period, j * k, k)).collect()
}

/// The least level with `gcd(k_n, q)` at its eventual value and `k_n >= s + q`.
pub fn decision_level(t: &Tower, s: usize, q: usize) -> usize {
    let far = t.prefix_ratios().len() + t.tail_ratios().len() * 4 + 4;
    let ks = orders(t, far);
    let stable = gcd(ks[far], q as u128);
    (0..=far)
        .find(|&n| gcd(ks[n], q as u128) == stable && ks[n] >= (s + q) as u128)
        .unwrap_or(far)
}

/// Aligns two eventually periodic sequences to a common shape and subtracts.
pub fn difference(a: (&[i64], &[i64]), b: (&[i64], &[i64])) -> (Vec<i64>, Vec<i64>) {
    let s = a.0.len().max(b.0.len());
    let mut q = a.1.len();
    while q % b.1.len() != 0 {
        q += a.1.len();
    }
    let at = |v: (&[i64], &[i64]), i: usize| entry(v.0, v.1, i as u128);
    let prefix = (0..s).map(|i| at(a, i) - at(b, i)).collect();
    let period = (s..s + q).map(|i| at(a, i) - at(b, i)).collect();
    (prefix, period)
}

/// `∃ n <= max_level` with every aligned `k_n`-block summing to zero.
pub fn brute_in_h(t: &Tower, prefix: &[i64], period: &[i64], max_level: usize) -> Option<usize> {
    let ks = orders(t, max_level);
    (0..=max_level).find(|&n| block_sums(prefix, period, ks[n]).iter().all(|&x| x == 0))
}

/// `∃ n <= max_level` with every aligned `k_n`-block sum nonnegative.
pub fn brute_positive(t: &Tower, prefix: &[i64], period: &[i64], max_level: usize) -> Option<usize> {
    let ks = orders(t, max_level);
    (0..=max_level).find(|&n| block_sums(prefix, period, ks[n]).iter().all(|&x| x >= 0))
}

/// Search horizon for the positivity oracle: four levels past the point
/// where `⌊k_n/q⌋σ > (s + 2q)B` (or past the decision level when `σ <= 0`).
pub fn positivity_horizon(t: &Tower, prefix: &[i64], period: &[i64]) -> usize {
    let (s, q) = (prefix.len(), period.len());
    let sigma: i128 = period.iter().map(|&x| x as i128).sum();
    let base = if sigma > 0 {
        let b = prefix.iter().chain(period).map(|x| x.unsigned_abs()).max().unwrap_or(0) as i128;
        let need = (s + 2 * q) as i128 * b;
        (0..).find(|&n| (orders(t, n)[n] / q as u128) as i128 * sigma > need).unwrap()
    } else {
        decision_level(t, s, q)
    };
    base.max(decision_level(t, s, q)) + 4
}

/// Prime valuations of a finite product of ratios, by trial division.
pub fn valuations(ratios: &[u64]) -> BTreeMap<u64, u64> {
    let mut out = BTreeMap::new();
    for &r in ratios {
        let mut r = r;
        let mut p = 2;
        while r > 1 {
            while r % p == 0 {
                *out.entry(p).or_insert(0) += 1;
                r /= p;
            }
            p += 1;
        }
    }
    out
}

/// Exponents of the supernatural number of `prefix (tail)^∞`: primes of the
/// tail get `None` (infinite), others their prefix valuation.
pub fn sn_oracle(prefix: &[u64], tail: &[u64]) -> BTreeMap<u64, Option<u64>> {
    let mut out: BTreeMap<u64, Option<u64>> = valuations(prefix).into_iter().map(|(p, e)| (p, Some(e))).collect();
    for p in valuations(tail).into_keys() {
        out.insert(p, None);
    }
    out
}

pub fn random_ratios(rng: &mut impl Rng, max_len: usize, max_ratio: u64) -> Vec<u64> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| rng.gen_range(1..=max_ratio)).collect()
}

pub fn random_seq(rng: &mut impl Rng, max_prefix: usize, max_period: usize, bound: i64) -> (Vec<i64>, Vec<i64>) {
    let s = rng.gen_range(0..=max_prefix);
    let q = rng.gen_range(1..=max_period);
    let prefix = (0..s).map(|_| rng.gen_range(-bound..=bound)).collect();
    let period = (0..q).map(|_| rng.gen_range(-bound..=bound)).collect();
    (prefix, period)
}

/// Two towers with equal supernatural numbers, built by regrouping the same
/// finite prime multiset differently on each side and giving both tails the
/// same prime support.
pub fn random_equivalent_pair(rng: &mut impl Rng) -> (Vec<u64>, Vec<u64>, Vec<u64>, Vec<u64>) {
    use rand::seq::SliceRandom;
    let support: Vec<u64> = loop {
        let s: Vec<u64> = [2u64, 3, 5].into_iter().filter(|_| rng.gen_bool(0.5)).collect();
        if !s.is_empty() {
            break s;
        }
    };
    let tail = |rng: &mut dyn rand::RngCore| -> Vec<u64> {
        let mut ratios: Vec<u64> = support.iter().map(|&p| if rng.gen_bool(0.3) { p * p } else { p }).collect();
        ratios.shuffle(rng);
        // merge neighbours now and then
        if ratios.len() > 1 && rng.gen_bool(0.5) {
            let last = ratios.pop().unwrap();
            *ratios.last_mut().unwrap() *= last;
        }
        ratios
    };
    let finite_primes: Vec<u64> = (0..rng.gen_range(0..=3)).map(|_| *[2u64, 3, 5, 7].choose(rng).unwrap()).collect();
    let regroup = |rng: &mut dyn rand::RngCore| -> Vec<u64> {
        let mut primes = finite_primes.clone();
        primes.shuffle(rng);
        let mut out = Vec::new();
        for p in primes {
            match out.last_mut() {
                Some(last) if rng.gen_bool(0.4) => *last *= p,
                _ => out.push(p),
            }
        }
        if rng.gen_bool(0.3) {
            out.insert(0, *support.choose(rng).unwrap());
        }
        out
    };
    let (p1, p2) = (regroup(rng), regroup(rng));
    let (t1, t2) = (tail(rng), tail(rng));
    (p1, t1, p2, t2)
}

/// Components by breadth-first search over pairs within `radius`.
pub fn brute_components(m: &FiniteMetricSpace, radius: u64) -> Vec<Vec<usize>> {
    let n = m.size();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut comp = Vec::new();
        while let Some(x) = stack.pop() {
            comp.push(x);
            for y in 0..n {
                if !seen[y] && m.d(x, y) <= radius {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        comp.sort();
        out.push(comp);
    }
    out.sort();
    out
}

/// Maximal runs of integers with consecutive gaps at most `k`.
pub fn integer_runs(points: &[u64], k: u64) -> Vec<Vec<u64>> {
    let mut sorted = points.to_vec();
    sorted.sort();
    let mut out: Vec<Vec<u64>> = Vec::new();
    for p in sorted {
        match out.last_mut() {
            Some(run) if p - run.last().unwrap() <= k => run.push(p),
            _ => out.push(vec![p]),
        }
    }
    out
}
