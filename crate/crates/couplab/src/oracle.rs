//! Exact reference computations. Everything here is finite, deterministic
//! and rational, so the statistical modules can be checked against values
//! that carry no sampling error of their own.

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::graph::{End, TreeBall};

/// Probability that m i.i.d. uniform draws from n labels are pairwise
/// distinct: the exact product of (1 - i/n) for i = 1 .. m-1. Returns 0
/// when m exceeds n.
pub fn distinct_product(m: u32, n: u32) -> BigRational {
    if m > n {
        return BigRational::zero();
    }
    let mut p = BigRational::one();
    for i in 1..m {
        p *= BigRational::new(BigInt::from(n - i), BigInt::from(n));
    }
    p
}

/// Smallest n <= max_n with distinct_product(m, n) >= target, found by
/// bisection; the product is strictly increasing in n once n >= m.
pub fn threshold_n(target: &BigRational, m: u32, max_n: u32) -> Option<u32> {
    if max_n < m || distinct_product(m, max_n) < *target {
        return None;
    }
    let (mut lo, mut hi) = (m, max_n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if distinct_product(m, mid) >= *target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

pub fn five_sixths() -> BigRational {
    BigRational::new(BigInt::from(5), BigInt::from(6))
}

/// Exact ingredients of the transport lower bound at alphabet size n:
/// the 20-distinct and 9-distinct probabilities and the union lower bound
/// p20 + p9 - 1 (clamped at 0) for the probability that both distinctness
/// events hold.
#[derive(Clone, Debug)]
pub struct ThresholdCertificate {
    pub n: u32,
    pub p_distinct_20: BigRational,
    pub p_distinct_9: BigRational,
    pub union_lower_bound: BigRational,
    /// p_distinct_20 >= 5/6, which makes the union lower bound >= 2/3 given
    /// p_distinct_9 >= 5/6 as well.
    pub meets_target: bool,
}

pub fn certificate(n: u32) -> ThresholdCertificate {
    let p20 = distinct_product(20, n);
    let p9 = distinct_product(9, n);
    let union = &p20 + &p9 - BigRational::one();
    let union_lower_bound = if union.is_negative() {
        BigRational::zero()
    } else {
        union
    };
    let meets_target = p20 >= five_sixths();
    ThresholdCertificate {
        n,
        p_distinct_20: p20,
        p_distinct_9: p9,
        union_lower_bound,
        meets_target,
    }
}

/// Rounds a nonnegative rational to a fixed number of decimal digits.
pub fn decimal(r: &BigRational, digits: u32) -> String {
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = (r.numer() * &scale * 2 + r.denom()) / (r.denom() * 2);
    let whole = &scaled / &scale;
    let frac = &scaled % &scale;
    if digits == 0 {
        format!("{whole}")
    } else {
        format!("{whole}.{frac:0>width$}", width = digits as usize)
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("rational fits in f64")
}

/// A bit process whose value at a vertex is a function of that vertex's
/// edge star. Covers everything the samplers build from fair edge bits.
#[derive(Clone, Copy, Debug)]
pub enum BitRule {
    /// max over the two edges pointing away from the end
    EndMax(End),
    /// max over all three incident edges
    IncidentMax,
    /// 1 unless all three incident bits agree
    Disagreement,
}

impl BitRule {
    fn involved_edges(&self, ball: &TreeBall, v: usize) -> Result<Vec<usize>> {
        match self {
            BitRule::EndMax(end) => Ok(ball.away_edges(v, *end)?.to_vec()),
            _ => Ok(ball.incident_edges(v)?.to_vec()),
        }
    }

    fn eval(&self, ball: &TreeBall, v: usize, bit_of: &dyn Fn(usize) -> u8) -> Result<u8> {
        Ok(match self {
            BitRule::EndMax(end) => {
                let [e1, e2] = ball.away_edges(v, *end)?;
                bit_of(e1).max(bit_of(e2))
            }
            BitRule::IncidentMax => {
                let es = ball.incident_edges(v)?;
                es.iter().map(|&e| bit_of(e)).max().unwrap()
            }
            BitRule::Disagreement => {
                let es = ball.incident_edges(v)?;
                u8::from(es.iter().any(|&e| bit_of(e) != bit_of(es[0])))
            }
        })
    }
}

/// Exact probability, under i.i.d. fair edge bits, that the process takes
/// value 1 on all of `ones` and 0 on all of `zeros`, by exhaustive
/// enumeration of the edges the queried vertices actually touch. Edges
/// outside that union marginalize away, so the cost is 2^(involved edges),
/// capped at 2^20.
pub fn exact_bit_joint(
    ball: &TreeBall,
    rule: BitRule,
    ones: &[usize],
    zeros: &[usize],
) -> Result<BigRational> {
    for v in ones {
        if zeros.contains(v) {
            return Err(Error::OverlappingQuery {
                vertex: ball.word(*v).to_string(),
            });
        }
    }
    let mut edges: Vec<usize> = Vec::new();
    for &v in ones.iter().chain(zeros) {
        edges.extend(rule.involved_edges(ball, v)?);
    }
    edges.sort_unstable();
    edges.dedup();
    if edges.len() > 20 {
        return Err(Error::EnumerationTooLarge { edges: edges.len() });
    }
    let k = edges.len();
    let mut satisfied = 0u64;
    for mask in 0u64..(1u64 << k) {
        let bit_of = |e: usize| -> u8 {
            let pos = edges.binary_search(&e).expect("edge was collected");
            ((mask >> pos) & 1) as u8
        };
        let ok = ones
            .iter()
            .all(|&v| rule.eval(ball, v, &bit_of).unwrap() == 1)
            && zeros
                .iter()
                .all(|&v| rule.eval(ball, v, &bit_of).unwrap() == 0);
        satisfied += u64::from(ok);
    }
    Ok(BigRational::new(
        BigInt::from(satisfied),
        BigInt::from(1u64 << k),
    ))
}

/// Exact size distribution (sizes 1, 2, 3) of the set of three i.i.d.
/// uniform labels, by enumerating all n^3 triples. Meant for small n.
pub fn triple_set_size_law(n: u32) -> Result<[BigRational; 3]> {
    if n == 0 {
        return Err(Error::EmptyAlphabet { n });
    }
    if n > 6 {
        return Err(Error::EnumerationTooLarge {
            edges: n as usize,
        });
    }
    let mut counts = [0u64; 3];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut s = crate::config::LabelSet::new();
                s.insert(a);
                s.insert(b);
                s.insert(c);
                counts[s.len() - 1] += 1;
            }
        }
    }
    let total = BigInt::from(n).pow(3);
    Ok(counts.map(|c| BigRational::new(BigInt::from(c), total.clone())))
}

/// Exact size distribution (singleton, pair) of the union of two i.i.d.
/// uniform labels, by enumerating all n^2 ordered pairs.
pub fn pair_set_size_law(n: u32) -> Result<[BigRational; 2]> {
    if n == 0 {
        return Err(Error::EmptyAlphabet { n });
    }
    if n > 4096 {
        return Err(Error::EnumerationTooLarge {
            edges: n as usize,
        });
    }
    let mut singleton = 0u64;
    for a in 0..n {
        for b in 0..n {
            singleton += u64::from(a == b);
        }
    }
    let total = BigInt::from(n).pow(2);
    let p1 = BigRational::new(BigInt::from(singleton), total.clone());
    Ok([p1.clone(), BigRational::one() - p1])
}
