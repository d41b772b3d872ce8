//! Edge-indexed randomness and the vertex processes built from it.
//!
//! Everything here is a deterministic local function of sampled edge data:
//! bit processes take the maximum (or detect disagreement) over a vertex's
//! incident edges, set processes collect the labels of those edges. The
//! "away" variants use only the two edges not leading toward a chosen end;
//! those edge pairs are disjoint across vertices, which is what makes the
//! away processes i.i.d. over the interior.
//!
//! Draw order is pinned: edge data is sampled in edge-index order, vertex
//! data in interior-enumeration order, so a given stream always produces the
//! same configuration.

use rand::Rng;

use crate::config::{BitConfig, LabelSet, ProductBitConfig, SetConfig};
use crate::error::{Error, Result};
use crate::graph::{End, TreeBall};

/// One bit per ball edge.
#[derive(Clone, Debug)]
pub struct EdgeBits {
    pub bits: Vec<u8>,
}

/// One label from {0, .., n-1} per ball edge.
#[derive(Clone, Debug)]
pub struct EdgeLabels {
    pub n: u32,
    pub labels: Vec<u32>,
}

pub fn sample_edge_bits(ball: &TreeBall, p: f64, rng: &mut impl Rng) -> Result<EdgeBits> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadProbability { p });
    }
    let bits = (0..ball.edge_count())
        .map(|_| u8::from(rng.random_bool(p)))
        .collect();
    Ok(EdgeBits { bits })
}

/// I.i.d. Bernoulli bits directly on the interior-1 vertices; the simplest
/// invariant bit process, used as a control.
pub fn sample_vertex_bits(ball: &TreeBall, p: f64, rng: &mut impl Rng) -> Result<BitConfig> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadProbability { p });
    }
    let bits = (0..ball.interior1().len())
        .map(|_| u8::from(rng.random_bool(p)))
        .collect();
    Ok(BitConfig { bits })
}

pub fn sample_edge_labels(ball: &TreeBall, n: u32, rng: &mut impl Rng) -> Result<EdgeLabels> {
    if n == 0 {
        return Err(Error::EmptyAlphabet { n });
    }
    let labels = (0..ball.edge_count())
        .map(|_| rng.random_range(0..n))
        .collect();
    Ok(EdgeLabels { n, labels })
}

/// Maximum of the two away-from-the-end edge bits at v. With fair bits this
/// is 1 with probability 3/4, and the family is i.i.d. across the interior.
pub fn end_max_bit_at(eta: &EdgeBits, ball: &TreeBall, end: End, v: usize) -> Result<u8> {
    let [e1, e2] = ball.away_edges(v, end)?;
    Ok(eta.bits[e1].max(eta.bits[e2]))
}

pub fn end_max_bits(eta: &EdgeBits, ball: &TreeBall, end: End) -> Result<BitConfig> {
    let bits = ball
        .interior1()
        .iter()
        .map(|&v| end_max_bit_at(eta, ball, end, v as usize))
        .collect::<Result<_>>()?;
    Ok(BitConfig { bits })
}

/// Maximum over all three incident edge bits; 1 with probability 7/8 under
/// fair bits, and pointwise at least any process that maximizes over a
/// subset of the star.
pub fn incident_max_bit_at(eta: &EdgeBits, ball: &TreeBall, v: usize) -> Result<u8> {
    let es = ball.incident_edges(v)?;
    Ok(es.iter().map(|&e| eta.bits[e]).max().unwrap())
}

pub fn incident_max_bits(eta: &EdgeBits, ball: &TreeBall) -> Result<BitConfig> {
    let bits = ball
        .interior1()
        .iter()
        .map(|&v| incident_max_bit_at(eta, ball, v as usize))
        .collect::<Result<_>>()?;
    Ok(BitConfig { bits })
}

/// 1 unless the three incident edge bits agree. Under fair bits this is
/// Bernoulli(3/4) at every vertex and the family is i.i.d.: the probability
/// of value 1 on k vertices and 0 on l others is (3/4)^k (1/4)^l. It sits
/// below the incident maximum pointwise, since disagreement forces a 1
/// somewhere in the star.
pub fn disagreement_bit_at(eta: &EdgeBits, ball: &TreeBall, v: usize) -> Result<u8> {
    let es = ball.incident_edges(v)?;
    let first = eta.bits[es[0]];
    Ok(u8::from(es[1..].iter().any(|&e| eta.bits[e] != first)))
}

pub fn disagreement_bits(eta: &EdgeBits, ball: &TreeBall) -> Result<BitConfig> {
    let bits = ball
        .interior1()
        .iter()
        .map(|&v| disagreement_bit_at(eta, ball, v as usize))
        .collect::<Result<_>>()?;
    Ok(BitConfig { bits })
}

/// The set of labels on the three incident edges: size 1 to 3.
pub fn incident_set_at(lambda: &EdgeLabels, ball: &TreeBall, v: usize) -> Result<LabelSet> {
    let es = ball.incident_edges(v)?;
    Ok(LabelSet::from_labels(&es.map(|e| lambda.labels[e])))
}

pub fn incident_sets(lambda: &EdgeLabels, ball: &TreeBall) -> Result<SetConfig> {
    let sets = ball
        .interior1()
        .iter()
        .map(|&v| incident_set_at(lambda, ball, v as usize))
        .collect::<Result<_>>()?;
    Ok(SetConfig { sets })
}

/// The labels of the two away-from-the-end edges: size 1 or 2, always a
/// subset of the incident set at the same vertex, and i.i.d. across the
/// interior with the same law as `sample_pair_set`.
pub fn away_set_at(
    lambda: &EdgeLabels,
    ball: &TreeBall,
    end: End,
    v: usize,
) -> Result<LabelSet> {
    let es = ball.away_edges(v, end)?;
    Ok(LabelSet::from_labels(&es.map(|e| lambda.labels[e])))
}

pub fn away_sets(lambda: &EdgeLabels, ball: &TreeBall, end: End) -> Result<SetConfig> {
    let sets = ball
        .interior1()
        .iter()
        .map(|&v| away_set_at(lambda, ball, end, v as usize))
        .collect::<Result<_>>()?;
    Ok(SetConfig { sets })
}

/// The union of two independent uniform singletons: a singleton with
/// probability 1/n, otherwise a pair.
pub fn sample_pair_set(n: u32, rng: &mut impl Rng) -> Result<LabelSet> {
    if n == 0 {
        return Err(Error::EmptyAlphabet { n });
    }
    let x1 = rng.random_range(0..n);
    let x2 = rng.random_range(0..n);
    Ok(LabelSet::from_labels(&[x1, x2]))
}

/// Independent pair sets at every interior-1 vertex.
pub fn iid_pair_sets(ball: &TreeBall, n: u32, rng: &mut impl Rng) -> Result<SetConfig> {
    let sets = (0..ball.interior1().len())
        .map(|_| sample_pair_set(n, rng))
        .collect::<Result<_>>()?;
    Ok(SetConfig { sets })
}

/// Encodes a set configuration as bits on the product with the n-cycle:
/// bit (u, j) = 1 exactly when j lies in the set at u. Invertible on
/// configurations with nonempty sets.
pub fn lift(cfg: &SetConfig, ball: &TreeBall, n: u32) -> Result<ProductBitConfig> {
    if n == 0 {
        return Err(Error::EmptyAlphabet { n });
    }
    let mut bits = vec![0u8; cfg.sets.len() * n as usize];
    for (rank, set) in cfg.sets.iter().enumerate() {
        if let Some(max) = set.max_label() {
            if max >= n {
                return Err(Error::LabelOutOfRange { label: max, n });
            }
        }
        for &l in set.labels() {
            bits[rank * n as usize + l as usize] = 1;
        }
    }
    let _ = ball;
    Ok(ProductBitConfig { n, bits })
}

/// Decodes lifted bits back into label sets. Each vertex row must carry 1 to
/// 3 ones; anything else cannot come from a set configuration.
pub fn unlift(cfg: &ProductBitConfig, ball: &TreeBall) -> Result<SetConfig> {
    let n = cfg.n as usize;
    let rows = cfg.bits.len() / n;
    let mut sets = Vec::with_capacity(rows);
    for rank in 0..rows {
        let row = &cfg.bits[rank * n..(rank + 1) * n];
        let size = row.iter().filter(|&&b| b != 0).count();
        if size == 0 || size > 3 {
            return Err(Error::BadSetSize { size });
        }
        let mut set = LabelSet::new();
        for (j, &b) in row.iter().enumerate() {
            if b != 0 {
                set.insert(j as u32);
            }
        }
        sets.push(set);
    }
    let _ = ball;
    Ok(SetConfig { sets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Gen;
    use crate::stats::{stream_rng, wilson_ci};

    fn ball(r: u32) -> TreeBall {
        TreeBall::build(r).unwrap()
    }

    #[test]
    fn degenerate_bit_probabilities() {
        let b = ball(4);
        let mut rng = stream_rng(0, 0, "eta");
        let zero = sample_edge_bits(&b, 0.0, &mut rng).unwrap();
        assert!(zero.bits.iter().all(|&x| x == 0));
        let one = sample_edge_bits(&b, 1.0, &mut rng).unwrap();
        assert!(one.bits.iter().all(|&x| x == 1));
        assert!(sample_edge_bits(&b, 1.5, &mut rng).is_err());
    }

    #[test]
    fn fair_edge_bits_have_fair_mean() {
        let b = ball(16);
        let mut rng = stream_rng(1, 0, "eta");
        let eta = sample_edge_bits(&b, 0.5, &mut rng).unwrap();
        let ones = eta.bits.iter().map(|&x| x as u64).sum::<u64>();
        let (lo, hi) = wilson_ci(ones, eta.bits.len() as u64, 0.99).unwrap();
        assert!(lo < 0.5 && 0.5 < hi, "({lo}, {hi})");
    }

    #[test]
    fn vertex_bits_match_their_probability() {
        let b = ball(12);
        let mut rng = stream_rng(2, 0, "vertex");
        let cfg = sample_vertex_bits(&b, 0.75, &mut rng).unwrap();
        let ones = cfg.bits.iter().map(|&x| x as u64).sum::<u64>();
        let (lo, hi) = wilson_ci(ones, cfg.bits.len() as u64, 0.99).unwrap();
        assert!(lo < 0.75 && 0.75 < hi, "({lo}, {hi})");
    }

    #[test]
    fn single_letter_alphabet_labels_everything_zero() {
        let b = ball(4);
        let mut rng = stream_rng(3, 0, "lambda");
        let lam = sample_edge_labels(&b, 1, &mut rng).unwrap();
        assert!(lam.labels.iter().all(|&l| l == 0));
        assert!(sample_edge_labels(&b, 0, &mut rng).is_err());
    }

    #[test]
    fn labels_are_uniform() {
        let b = ball(16);
        let mut rng = stream_rng(4, 0, "lambda");
        let n = 1050u32;
        let lam = sample_edge_labels(&b, n, &mut rng).unwrap();
        let mut counts = vec![0u64; n as usize];
        for &l in &lam.labels {
            counts[l as usize] += 1;
        }
        let probs = vec![1.0 / n as f64; n as usize];
        let r = crate::stats::chi_square_gof(&counts, &probs, 0.01).unwrap();
        assert!(!r.reject, "p = {}", r.p_value);
    }

    #[test]
    fn disagreement_truth_table() {
        let b = ball(1);
        let o = b.origin();
        for pattern in 0u8..8 {
            let bits = (0..3).map(|i| (pattern >> i) & 1).collect();
            let eta = EdgeBits { bits };
            let got = disagreement_bit_at(&eta, &b, o).unwrap();
            let expect = u8::from(pattern != 0 && pattern != 7);
            assert_eq!(got, expect, "pattern {pattern:03b}");
        }
    }

    #[test]
    fn end_and_incident_maxima_from_known_bits() {
        let b = ball(1);
        let o = b.origin();
        let end = End::new(Gen::A);
        // edge toward the end at the origin is the a-edge
        let a_edge = b.toward_edge(o, end).unwrap();
        let mut bits = vec![0u8; 3];
        bits[a_edge] = 1;
        let eta = EdgeBits { bits };
        assert_eq!(end_max_bit_at(&eta, &b, end, o).unwrap(), 0);
        assert_eq!(incident_max_bit_at(&eta, &b, o).unwrap(), 1);
        assert_eq!(disagreement_bit_at(&eta, &b, o).unwrap(), 1);
    }

    #[test]
    fn marginals_at_the_origin() {
        let b = ball(3);
        let o = b.origin();
        let end = End::new(Gen::B);
        let n = 100_000u64;
        let mut hits = [0u64; 3];
        for i in 0..n {
            let mut rng = stream_rng(5, i, "eta");
            let eta = sample_edge_bits(&b, 0.5, &mut rng).unwrap();
            hits[0] += end_max_bit_at(&eta, &b, end, o).unwrap() as u64;
            hits[1] += incident_max_bit_at(&eta, &b, o).unwrap() as u64;
            hits[2] += disagreement_bit_at(&eta, &b, o).unwrap() as u64;
        }
        for (successes, expect) in [(hits[0], 0.75), (hits[1], 0.875), (hits[2], 0.75)] {
            let (lo, hi) = wilson_ci(successes, n, 0.99).unwrap();
            assert!(lo < expect && expect < hi, "{expect} not in ({lo}, {hi})");
        }
    }

    #[test]
    fn pointwise_dominations_hold_on_every_sample() {
        let b = ball(3);
        let end = End::new(Gen::C);
        for i in 0..10_000u64 {
            let mut rng = stream_rng(6, i, "eta");
            let eta = sample_edge_bits(&b, 0.5, &mut rng).unwrap();
            let lowers = [
                end_max_bits(&eta, &b, end).unwrap(),
                disagreement_bits(&eta, &b).unwrap(),
            ];
            let upper = incident_max_bits(&eta, &b).unwrap();
            for lower in lowers {
                assert!(lower
                    .bits
                    .iter()
                    .zip(&upper.bits)
                    .all(|(l, u)| l <= u));
            }
        }
    }

    #[test]
    fn incident_sets_from_known_labels() {
        let b = ball(1);
        let o = b.origin();
        let lam = EdgeLabels {
            n: 10,
            labels: vec![3, 1, 2],
        };
        let s = incident_set_at(&lam, &b, o).unwrap();
        assert_eq!(s.labels(), &[1, 2, 3]);
        let lam = EdgeLabels {
            n: 10,
            labels: vec![5, 5, 5],
        };
        assert_eq!(incident_set_at(&lam, &b, o).unwrap().labels(), &[5]);
    }

    #[test]
    fn incident_set_sizes_follow_the_triple_law() {
        // size law for 3 i.i.d. uniforms over n = 4:
        // P(1) = 1/n^2, P(3) = (n-1)(n-2)/n^2, P(2) the rest.
        let b = ball(2);
        let o = b.origin();
        let n_samples = 40_000u64;
        let mut counts = [0u64; 3];
        for i in 0..n_samples {
            let mut rng = stream_rng(7, i, "lambda");
            let lam = sample_edge_labels(&b, 4, &mut rng).unwrap();
            counts[incident_set_at(&lam, &b, o).unwrap().len() - 1] += 1;
        }
        let probs = [1.0 / 16.0, 9.0 / 16.0, 6.0 / 16.0];
        let r = crate::stats::chi_square_gof(&counts, &probs, 0.01).unwrap();
        assert!(!r.reject, "p = {}", r.p_value);
    }

    #[test]
    fn away_sets_are_contained_in_incident_sets() {
        let b = ball(3);
        let end = End::new(Gen::A);
        for i in 0..10_000u64 {
            let mut rng = stream_rng(8, i, "lambda");
            let lam = sample_edge_labels(&b, 7, &mut rng).unwrap();
            let away = away_sets(&lam, &b, end).unwrap();
            let full = incident_sets(&lam, &b).unwrap();
            for (a, f) in away.sets.iter().zip(&full.sets) {
                assert!(a.is_subset_of(f));
                assert!(a.len() <= 2);
            }
        }
    }

    #[test]
    fn away_set_marginal_matches_the_pair_law() {
        let b = ball(2);
        let o = b.origin();
        let end = End::new(Gen::B);
        let n = 4u32;
        let n_samples = 40_000u64;
        let mut singleton = 0u64;
        for i in 0..n_samples {
            let mut rng = stream_rng(9, i, "lambda");
            let lam = sample_edge_labels(&b, n, &mut rng).unwrap();
            singleton += u64::from(away_set_at(&lam, &b, end, o).unwrap().len() == 1);
        }
        let (lo, hi) = wilson_ci(singleton, n_samples, 0.99).unwrap();
        let expect = 1.0 / n as f64;
        assert!(lo < expect && expect < hi, "({lo}, {hi})");
    }

    #[test]
    fn pair_sets_collapse_for_one_label() {
        let mut rng = stream_rng(10, 0, "nu");
        let s = sample_pair_set(1, &mut rng).unwrap();
        assert_eq!(s.labels(), &[0]);
    }

    #[test]
    fn pair_set_sizes_at_two_labels() {
        // enumeration of the four equally likely draws gives P(pair) = 1/2
        let n_samples = 40_000u64;
        let mut pairs = 0u64;
        for i in 0..n_samples {
            let mut rng = stream_rng(11, i, "nu");
            pairs += u64::from(sample_pair_set(2, &mut rng).unwrap().len() == 2);
        }
        let (lo, hi) = wilson_ci(pairs, n_samples, 0.99).unwrap();
        assert!(lo < 0.5 && 0.5 < hi, "({lo}, {hi})");
    }

    #[test]
    fn iid_pair_sets_are_independent_across_vertices() {
        let b = ball(2);
        let n_samples = 40_000u64;
        let mut joint = [0u64; 4];
        for i in 0..n_samples {
            let mut rng = stream_rng(12, i, "nu");
            let cfg = iid_pair_sets(&b, 2, &mut rng).unwrap();
            let s0 = usize::from(cfg.sets[0].len() == 2);
            let s1 = usize::from(cfg.sets[1].len() == 2);
            joint[s0 * 2 + s1] += 1;
        }
        let probs = [0.25; 4];
        let r = crate::stats::chi_square_gof(&joint, &probs, 0.01).unwrap();
        assert!(!r.reject, "p = {}", r.p_value);
    }

    #[test]
    fn away_bits_are_uncorrelated_across_the_interior() {
        let b = ball(3);
        let end = End::new(Gen::A);
        let n_samples = 20_000u64;
        let interior: Vec<usize> = b.interior1().iter().map(|&v| v as usize).collect();
        let mut sums = vec![0f64; interior.len()];
        let mut cross = vec![vec![0f64; interior.len()]; interior.len()];
        for i in 0..n_samples {
            let mut rng = stream_rng(13, i, "eta");
            let eta = sample_edge_bits(&b, 0.5, &mut rng).unwrap();
            let x: Vec<f64> = interior
                .iter()
                .map(|&v| end_max_bit_at(&eta, &b, end, v).unwrap() as f64)
                .collect();
            for a in 0..x.len() {
                sums[a] += x[a];
                for c in a + 1..x.len() {
                    cross[a][c] += x[a] * x[c];
                }
            }
        }
        let n = n_samples as f64;
        for a in 0..interior.len() {
            for c in a + 1..interior.len() {
                let ma = sums[a] / n;
                let mc = sums[c] / n;
                let cov = cross[a][c] / n - ma * mc;
                let corr = cov / (ma * (1.0 - ma) * mc * (1.0 - mc)).sqrt();
                assert!(corr.abs() < 3.0 / n.sqrt(), "corr({a},{c}) = {corr}");
            }
        }
    }

    #[test]
    fn lift_writes_membership_rows() {
        let b = ball(1);
        let cfg = SetConfig {
            sets: vec![LabelSet::from_labels(&[2])],
        };
        let lifted = lift(&cfg, &b, 3).unwrap();
        assert_eq!(lifted.bits, vec![0, 0, 1]);
        let back = unlift(&lifted, &b).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn lift_rejects_out_of_range_labels() {
        let b = ball(1);
        let cfg = SetConfig {
            sets: vec![LabelSet::from_labels(&[5])],
        };
        assert!(matches!(
            lift(&cfg, &b, 3),
            Err(Error::LabelOutOfRange { label: 5, n: 3 })
        ));
    }

    #[test]
    fn unlift_rejects_bad_rows() {
        let b = ball(1);
        let empty = ProductBitConfig {
            n: 3,
            bits: vec![0, 0, 0],
        };
        assert!(matches!(unlift(&empty, &b), Err(Error::BadSetSize { size: 0 })));
        let four = ProductBitConfig {
            n: 4,
            bits: vec![1, 1, 1, 1],
        };
        assert!(matches!(unlift(&four, &b), Err(Error::BadSetSize { size: 4 })));
    }

    #[test]
    fn lift_round_trips_random_configs() {
        let b = ball(3);
        let n = 9u32;
        for i in 0..200u64 {
            let mut rng = stream_rng(14, i, "roundtrip");
            let cfg = iid_pair_sets(&b, n, &mut rng).unwrap();
            let back = unlift(&lift(&cfg, &b, n).unwrap(), &b).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn lift_preserves_and_reflects_containment() {
        let b = ball(3);
        let end = End::new(Gen::B);
        let n = 6u32;
        for i in 0..500u64 {
            let mut rng = stream_rng(15, i, "lambda");
            let lam = sample_edge_labels(&b, n, &mut rng).unwrap();
            let lower = away_sets(&lam, &b, end).unwrap();
            let upper = incident_sets(&lam, &b).unwrap();
            let ll = lift(&lower, &b, n).unwrap();
            let lu = lift(&upper, &b, n).unwrap();
            assert!(ll.bits.iter().zip(&lu.bits).all(|(a, c)| a <= c));

            // and an independent pair set config is typically not dominated
            let mut rng2 = stream_rng(16, i, "nu");
            let indep = iid_pair_sets(&b, n, &mut rng2).unwrap();
            let dominated_sets = indep
                .sets
                .iter()
                .zip(&upper.sets)
                .all(|(a, c)| a.is_subset_of(c));
            let li = lift(&indep, &b, n).unwrap();
            let dominated_bits = li.bits.iter().zip(&lu.bits).all(|(a, c)| a <= c);
            assert_eq!(dominated_sets, dominated_bits);
        }
    }
}
