//! Distributional invariance checks on finite windows.
//!
//! A process on the tree (or the tree-cycle product) is shift invariant when
//! the joint law of any finite window of values equals the law of the same
//! window moved by a graph automorphism. We test this by drawing two
//! independent batches of replicates, reading one through the base window
//! and the other through the shifted window, and comparing the two pattern
//! histograms with a two-sample chi-square test. A true invariant process
//! passes at the nominal level; a planted non-invariant control fails
//! loudly.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{End, Gen, Shift, TreeBall, Word, MAX_CATEGORIES};
use crate::sampler;
use crate::stats::{self, TestResult};

/// Processes whose window laws we can test. Each variant evaluates lazily at
/// the queried vertices; nothing builds a full configuration per replicate.
#[derive(Clone, Copy, Debug)]
pub enum WindowProcess {
    /// maximum of the two bits pointing away from the end
    EndMaxBits(End),
    /// maximum over all three incident bits
    IncidentMaxBits,
    /// 1 unless all three incident bits agree
    DisagreementBits,
    /// away-edge label pair, a set-valued process
    AwaySets(End, u32),
    /// full incident label set, the upper side of the set couplings
    IncidentSets(u32),
    /// vertexwise independent pair sets, the decoupled control randomness
    IidPairSets(u32),
    /// cycle-product bit: membership of the cycle coordinate in the away set
    LiftedAwayBits(End, u32),
    /// cycle-product bit: membership in the incident set
    LiftedIncidentBits(u32),
    /// deterministic planted control: 1 iff the word starts with the letter
    PrefixControl(Gen),
}

impl WindowProcess {
    fn stream(&self) -> &'static str {
        match self {
            WindowProcess::EndMaxBits(_)
            | WindowProcess::IncidentMaxBits
            | WindowProcess::DisagreementBits => "eta",
            WindowProcess::AwaySets(..)
            | WindowProcess::IncidentSets(_)
            | WindowProcess::LiftedAwayBits(..)
            | WindowProcess::LiftedIncidentBits(_) => "lambda",
            WindowProcess::IidPairSets(_) => "nu",
            WindowProcess::PrefixControl(_) => "control",
        }
    }

    fn on_product(&self) -> bool {
        matches!(
            self,
            WindowProcess::LiftedAwayBits(..) | WindowProcess::LiftedIncidentBits(_)
        )
    }

    fn alphabet(&self) -> Option<u32> {
        match self {
            WindowProcess::AwaySets(_, n)
            | WindowProcess::IncidentSets(n)
            | WindowProcess::IidPairSets(n)
            | WindowProcess::LiftedAwayBits(_, n)
            | WindowProcess::LiftedIncidentBits(n) => Some(*n),
            _ => None,
        }
    }
}

/// A window site: a tree vertex plus an optional cycle coordinate.
type Site = (Word, Option<i64>);

fn tree_window(w: u32) -> Result<Vec<Word>> {
    Ok(TreeBall::build(w)?.words().to_vec())
}

/// Sites within product distance w of (origin, 0), sorted.
fn product_window(w: u32, n: u32) -> Result<Vec<Site>> {
    if n < 3 {
        return Err(Error::CycleTooShort { n });
    }
    let mut sites = Vec::new();
    for word in tree_window(w)? {
        let budget = w - word.len() as u32;
        let mut offsets: Vec<i64> = Vec::new();
        for d in 0..=budget as i64 {
            if d == 0 {
                offsets.push(0);
            } else if 2 * d < n as i64 {
                offsets.push(d);
                offsets.push(n as i64 - d);
            } else if 2 * d == n as i64 {
                offsets.push(d);
            }
        }
        offsets.sort_unstable();
        for j in offsets {
            sites.push((word.clone(), Some(j)));
        }
    }
    sites.sort();
    Ok(sites)
}

fn apply_shift(site: &Site, shift: Shift, n: u32) -> Result<Site> {
    match site.1 {
        None => Ok((shift.apply_word(&site.0)?, None)),
        Some(j) => {
            let c = j.rem_euclid(n as i64) as u32;
            let (word, c) = shift.apply_product(&site.0, c, n);
            Ok((word, Some(c as i64)))
        }
    }
}

/// One replicate's pattern at a tuple of sites: a small byte signature.
/// Bits map to 0/1 bytes; sets map to their size followed by the pairwise
/// intersection sizes, which captures the joint structure without depending
/// on the (exchangeable) label identities. `idx` holds the ball index of
/// each site's tree vertex.
fn pattern_at(
    process: &WindowProcess,
    ball: &TreeBall,
    sites: &[Site],
    idx: &[usize],
    seed: u64,
    replicate: u64,
) -> Result<Vec<u8>> {
    let mut rng = stats::stream_rng(seed, replicate, process.stream());
    match process {
        WindowProcess::EndMaxBits(end) => {
            let eta = sampler::sample_edge_bits(ball, 0.5, &mut rng)?;
            idx.iter()
                .map(|&v| sampler::end_max_bit_at(&eta, ball, *end, v))
                .collect()
        }
        WindowProcess::IncidentMaxBits => {
            let eta = sampler::sample_edge_bits(ball, 0.5, &mut rng)?;
            idx.iter()
                .map(|&v| sampler::incident_max_bit_at(&eta, ball, v))
                .collect()
        }
        WindowProcess::DisagreementBits => {
            let eta = sampler::sample_edge_bits(ball, 0.5, &mut rng)?;
            idx.iter()
                .map(|&v| sampler::disagreement_bit_at(&eta, ball, v))
                .collect()
        }
        WindowProcess::AwaySets(end, n) => {
            let lambda = sampler::sample_edge_labels(ball, *n, &mut rng)?;
            let sets = idx
                .iter()
                .map(|&v| sampler::away_set_at(&lambda, ball, *end, v))
                .collect::<Result<Vec<_>>>()?;
            Ok(set_signature(&sets))
        }
        WindowProcess::IncidentSets(n) => {
            let lambda = sampler::sample_edge_labels(ball, *n, &mut rng)?;
            let sets = idx
                .iter()
                .map(|&v| sampler::incident_set_at(&lambda, ball, v))
                .collect::<Result<Vec<_>>>()?;
            Ok(set_signature(&sets))
        }
        WindowProcess::IidPairSets(n) => {
            // one draw per interior vertex, read off at the queried sites
            let cfg = sampler::iid_pair_sets(ball, *n, &mut rng)?;
            let sets = idx
                .iter()
                .map(|&v| {
                    let rank = ball.interior1_rank(v).ok_or_else(|| Error::NotInterior {
                        vertex: ball.word(v).to_string(),
                        radius: 1,
                    })?;
                    Ok(cfg.sets[rank])
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(set_signature(&sets))
        }
        WindowProcess::LiftedAwayBits(end, n) => {
            let lambda = sampler::sample_edge_labels(ball, *n, &mut rng)?;
            sites
                .iter()
                .zip(idx)
                .map(|(s, &v)| {
                    let j = cycle_coord(s, *n)?;
                    let set = sampler::away_set_at(&lambda, ball, *end, v)?;
                    Ok(u8::from(set.contains(j)))
                })
                .collect()
        }
        WindowProcess::LiftedIncidentBits(n) => {
            let lambda = sampler::sample_edge_labels(ball, *n, &mut rng)?;
            sites
                .iter()
                .zip(idx)
                .map(|(s, &v)| {
                    let j = cycle_coord(s, *n)?;
                    let set = sampler::incident_set_at(&lambda, ball, v)?;
                    Ok(u8::from(set.contains(j)))
                })
                .collect()
        }
        WindowProcess::PrefixControl(g) => sites
            .iter()
            .map(|s| Ok(u8::from(s.0.letters().first() == Some(g))))
            .collect(),
    }
}

fn cycle_coord(site: &Site, n: u32) -> Result<u32> {
    let j = site.1.ok_or_else(|| Error::ShiftMismatch {
        what: "product process queried at a tree site".into(),
    })?;
    Ok(j.rem_euclid(n as i64) as u32)
}

fn set_signature(sets: &[crate::config::LabelSet]) -> Vec<u8> {
    let mut sig = Vec::with_capacity(sets.len() * (sets.len() + 1) / 2);
    for s in sets {
        sig.push(s.len() as u8);
    }
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            sig.push(sets[i].intersection_size(&sets[j]) as u8);
        }
    }
    sig
}

/// Pools sparse pattern cells so the two-sample test's expected counts stay
/// above 5, keeping the heaviest cells intact. Everything rare lands in one
/// residual cell; if even that stays too light it joins the lightest kept
/// cell.
fn pool_patterns(map: BTreeMap<Vec<u8>, [u64; 2]>) -> Result<(Vec<u64>, Vec<u64>)> {
    let (na, nb) = map
        .values()
        .fold((0u64, 0u64), |(a, b), c| (a + c[0], b + c[1]));
    if na == 0 || nb == 0 {
        return Err(Error::NoReplicates);
    }
    // pooled expected count in the lighter batch decides whether a cell can
    // stand alone
    let lighter = na.min(nb) as f64 / (na + nb) as f64;
    let mut kept: Vec<[u64; 2]> = Vec::new();
    let mut residual = [0u64; 2];
    let mut cells: Vec<&[u64; 2]> = map.values().collect();
    cells.sort_by_key(|c| std::cmp::Reverse(c[0] + c[1]));
    for c in cells {
        if (c[0] + c[1]) as f64 * lighter >= 5.0 {
            kept.push(*c);
        } else {
            residual[0] += c[0];
            residual[1] += c[1];
        }
    }
    if residual[0] + residual[1] > 0 {
        if (residual[0] + residual[1]) as f64 * lighter >= 5.0 || kept.is_empty() {
            kept.push(residual);
        } else {
            let last = kept.len() - 1;
            kept[last][0] += residual[0];
            kept[last][1] += residual[1];
        }
    }
    if kept.len() < 2 {
        return Err(Error::TooFewCells { cells: kept.len() });
    }
    Ok((
        kept.iter().map(|c| c[0]).collect(),
        kept.iter().map(|c| c[1]).collect(),
    ))
}

/// Tests whether the window law of `process` at distance `w` around the
/// origin matches the law seen through `shift`. Two independent batches of
/// `replicates` draws each; batch two uses replicate indices offset by
/// `replicates` so the streams never collide.
pub fn check_invariance_window(
    process: &WindowProcess,
    ball: &TreeBall,
    shift: Shift,
    w: u32,
    replicates: u64,
    alpha: f64,
    seed: u64,
    workers: Option<usize>,
) -> Result<TestResult> {
    if replicates == 0 {
        return Err(Error::NoReplicates);
    }
    let base: Vec<Site> = if process.on_product() {
        let n = process.alphabet().expect("product process carries n");
        product_window(w, n)?
    } else {
        if matches!(shift, Shift::Rotate(_)) {
            return Err(Error::ShiftMismatch {
                what: "cycle rotation applied to a tree process".into(),
            });
        }
        tree_window(w)?.into_iter().map(|v| (v, None)).collect()
    };
    let n = process.alphabet().unwrap_or(0);
    let shifted = base
        .iter()
        .map(|s| apply_shift(s, shift, n))
        .collect::<Result<Vec<Site>>>()?;
    // every site in either window must have its full star inside the ball
    let resolve = |sites: &[Site]| -> Result<Vec<usize>> {
        sites
            .iter()
            .map(|site| {
                let v = ball.index_of(&site.0).ok_or_else(|| Error::NotInBall {
                    vertex: site.0.to_string(),
                })?;
                ball.interior1_rank(v).ok_or_else(|| Error::NotInterior {
                    vertex: site.0.to_string(),
                    radius: 1,
                })?;
                Ok(v)
            })
            .collect()
    };
    let base_idx = resolve(&base)?;
    let shifted_idx = resolve(&shifted)?;

    let map = stats::run_replicated(
        replicates,
        workers,
        |i| -> Result<(Vec<u8>, Vec<u8>)> {
            let a = pattern_at(process, ball, &base, &base_idx, seed, i)?;
            let b = pattern_at(process, ball, &shifted, &shifted_idx, seed, replicates + i)?;
            Ok((a, b))
        },
        Ok(BTreeMap::<Vec<u8>, [u64; 2]>::new()),
        |acc: Result<BTreeMap<Vec<u8>, [u64; 2]>>, pair| {
            let mut acc = acc?;
            let (a, b) = pair?;
            acc.entry(a).or_insert([0, 0])[0] += 1;
            acc.entry(b).or_insert([0, 0])[1] += 1;
            if acc.len() > MAX_CATEGORIES {
                return Err(Error::CategoryExplosion { cap: MAX_CATEGORIES });
            }
            Ok(acc)
        },
    )?;
    let (a, b) = pool_patterns(map)?;
    stats::chi_square_two_sample(&a, &b, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball(r: u32) -> TreeBall {
        TreeBall::build(r).unwrap()
    }

    #[test]
    fn tree_window_is_the_sorted_small_ball() {
        let w: Vec<String> = tree_window(1).unwrap().iter().map(|v| v.to_string()).collect();
        assert_eq!(w, ["", "a", "b", "c"]);
        assert_eq!(tree_window(2).unwrap().len(), 10);
    }

    #[test]
    fn product_window_counts_both_directions_once() {
        let sites = product_window(1, 5).unwrap();
        // (o,0) (o,1) (o,4) (a,0) (b,0) (c,0)
        assert_eq!(sites.len(), 6);
        assert_eq!(sites[0], (Word::origin(), Some(0)));
        let offsets: Vec<i64> = sites
            .iter()
            .filter(|s| s.0.is_empty())
            .map(|s| s.1.unwrap())
            .collect();
        assert_eq!(offsets, [0, 1, 4]);
        // n = 4 at w = 2 hits the antipode exactly once
        let sites4 = product_window(2, 4).unwrap();
        let origin_offsets: Vec<i64> = sites4
            .iter()
            .filter(|s| s.0.is_empty())
            .map(|s| s.1.unwrap())
            .collect();
        assert_eq!(origin_offsets, [0, 1, 2, 3]);
    }

    #[test]
    fn disagreement_bits_window_is_invariant_under_letter_shifts() {
        let b = ball(4);
        for g in Gen::ALL {
            let r = check_invariance_window(
                &WindowProcess::DisagreementBits,
                &b,
                Shift::Letter(g),
                1,
                20_000,
                0.01,
                7,
                None,
            )
            .unwrap();
            assert!(!r.reject, "{:?}: p = {}", g, r.p_value);
        }
    }

    #[test]
    fn incident_max_window_is_invariant() {
        let b = ball(4);
        let r = check_invariance_window(
            &WindowProcess::IncidentMaxBits,
            &b,
            Shift::Letter(Gen::B),
            1,
            20_000,
            0.01,
            11,
            None,
        )
        .unwrap();
        assert!(!r.reject, "p = {}", r.p_value);
    }

    #[test]
    fn away_sets_window_is_invariant() {
        // window 0 compares the set law at the origin with the law one step
        // over; joint structure is covered by the lifted-bit windows, whose
        // pattern space stays under the category cap
        let b = ball(4);
        let r = check_invariance_window(
            &WindowProcess::AwaySets(End::new(Gen::A), 8),
            &b,
            Shift::Letter(Gen::A),
            0,
            20_000,
            0.01,
            13,
            None,
        )
        .unwrap();
        assert!(!r.reject, "p = {}", r.p_value);
    }

    #[test]
    fn rich_windows_hit_the_category_cap() {
        let b = ball(3);
        let err = check_invariance_window(
            &WindowProcess::LiftedAwayBits(End::new(Gen::A), 5),
            &b,
            Shift::Rotate(1),
            2,
            2_000,
            0.01,
            29,
            None,
        );
        assert!(matches!(err, Err(Error::CategoryExplosion { .. })));
    }

    #[test]
    fn lifted_bits_window_is_invariant_under_rotation_and_letters() {
        let b = ball(3);
        for shift in [Shift::Rotate(1), Shift::Letter(Gen::C)] {
            let r = check_invariance_window(
                &WindowProcess::LiftedAwayBits(End::new(Gen::A), 6),
                &b,
                shift,
                1,
                20_000,
                0.01,
                17,
                None,
            )
            .unwrap();
            assert!(!r.reject, "{:?}: p = {}", shift, r.p_value);
        }
    }

    #[test]
    fn planted_control_is_rejected() {
        let b = ball(4);
        let r = check_invariance_window(
            &WindowProcess::PrefixControl(Gen::A),
            &b,
            Shift::Letter(Gen::A),
            1,
            2_000,
            0.01,
            19,
            None,
        )
        .unwrap();
        assert!(r.reject);
        assert!(r.p_value < 1e-9);
    }

    #[test]
    fn rotations_do_not_apply_to_tree_processes() {
        let b = ball(4);
        let err = check_invariance_window(
            &WindowProcess::DisagreementBits,
            &b,
            Shift::Rotate(1),
            1,
            100,
            0.01,
            0,
            None,
        );
        assert!(matches!(err, Err(Error::ShiftMismatch { .. })));
    }

    #[test]
    fn windows_must_fit_inside_the_ball() {
        let b = ball(2);
        // shifted window reaches length 3: its stars leave the radius-2 ball
        let err = check_invariance_window(
            &WindowProcess::DisagreementBits,
            &b,
            Shift::Letter(Gen::A),
            1,
            100,
            0.01,
            0,
            None,
        );
        assert!(matches!(err, Err(Error::NotInterior { .. })));
    }

    #[test]
    fn pooling_keeps_heavy_cells_and_merges_the_tail() {
        let mut map = BTreeMap::new();
        map.insert(vec![0u8], [5_000u64, 5_100u64]);
        map.insert(vec![1u8], [4_900, 4_800]);
        for k in 2..10u8 {
            map.insert(vec![k], [2, 1]);
        }
        let (a, b) = pool_patterns(map).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a.iter().sum::<u64>(), 5_000 + 4_900 + 16);
        assert_eq!(b.iter().sum::<u64>(), 5_100 + 4_800 + 8);
    }

    #[test]
    fn iid_pair_sets_window_is_invariant() {
        let b = ball(3);
        let r = check_invariance_window(
            &WindowProcess::IidPairSets(5),
            &b,
            Shift::Letter(Gen::B),
            0,
            20_000,
            0.01,
            23,
            None,
        )
        .unwrap();
        assert!(!r.reject, "p = {}", r.p_value);
    }

    #[test]
    fn incident_sets_window_is_invariant() {
        let b = ball(3);
        let r = check_invariance_window(
            &WindowProcess::IncidentSets(7),
            &b,
            Shift::Letter(Gen::C),
            0,
            20_000,
            0.01,
            31,
            None,
        )
        .unwrap();
        assert!(!r.reject, "p = {}", r.p_value);
    }
}
