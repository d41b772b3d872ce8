//! Mass transport over coupled set configurations.
//!
//! The transport rule sends one unit of mass from v to an adjacent vertex u
//! when the local distinctness event holds at v and the lower set at v meets
//! the upper set at u. For an invariant coupling the mass-transport principle
//! forces expected sent and received mass at the origin to agree; the audit
//! here measures both sides and their gap.
//!
//! Interiority bookkeeping: the event at v reads sets up to distance 2 from
//! v, and sets live on vertices whose full star is inside the ball. So the
//! event needs |v| <= R-3, out-degrees need the same, in-degrees need
//! |v| <= R-4, and the origin audit (which evaluates the event at the
//! origin's neighbors) needs R >= 4.

use crate::config::{LabelSet, SetConfig};
use crate::coupling::{CouplingPlan, CouplingSample};
use crate::error::{Error, Result};
use crate::graph::{End, Gen, TreeBall, Word};
use crate::sampler;
use crate::stats::{self};

/// Outcome of the local distinctness event at one vertex.
#[derive(Clone, Copy, Debug)]
pub struct EventWitness {
    pub holds: bool,
    /// the three neighbors' upper sets have size 3 and are pairwise disjoint
    pub incident_triples_distinct: bool,
    /// the ten lower sets within distance 2 have size 2 and are pairwise
    /// disjoint
    pub away_pairs_distinct: bool,
}

fn set_at(cfg: &SetConfig, ball: &TreeBall, v: usize) -> Result<LabelSet> {
    let rank = ball.interior1_rank(v).ok_or_else(|| Error::NotInterior {
        vertex: ball.word(v).to_string(),
        radius: 1,
    })?;
    Ok(cfg.sets[rank])
}

fn neighbors3(ball: &TreeBall, v: usize) -> Result<[usize; 3]> {
    let mut out = [0usize; 3];
    for (slot, g) in out.iter_mut().zip(Gen::ALL) {
        *slot = ball.neighbor(v, g).ok_or_else(|| Error::NotInterior {
            vertex: ball.word(v).to_string(),
            radius: 1,
        })?;
    }
    Ok(out)
}

fn pairwise_disjoint(sets: &[LabelSet]) -> bool {
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if sets[i].intersects(&sets[j]) {
                return false;
            }
        }
    }
    true
}

fn event_at(sample: &CouplingSample<SetConfig>, ball: &TreeBall, v: usize) -> Result<EventWitness> {
    let nbrs = neighbors3(ball, v)?;
    let mut uppers = Vec::with_capacity(3);
    for u in nbrs {
        uppers.push(set_at(&sample.upper, ball, u)?);
    }
    let e1 = uppers.iter().all(|s| s.len() == 3) && pairwise_disjoint(&uppers);

    let mut ten = Vec::with_capacity(10);
    ten.push(v);
    for u in nbrs {
        ten.push(u);
        for g in Gen::ALL {
            match ball.neighbor(u, g) {
                Some(x) if x != v => ten.push(x),
                Some(_) => {}
                None => {
                    return Err(Error::NotInterior {
                        vertex: ball.word(u).to_string(),
                        radius: 1,
                    })
                }
            }
        }
    }
    let mut lowers = Vec::with_capacity(10);
    for x in ten {
        lowers.push(set_at(&sample.lower, ball, x)?);
    }
    let e2 = lowers.iter().all(|s| s.len() == 2) && pairwise_disjoint(&lowers);

    Ok(EventWitness {
        holds: e1 && e2,
        incident_triples_distinct: e1,
        away_pairs_distinct: e2,
    })
}

/// Evaluates the distinctness event at a vertex given by its word.
pub fn distinctness_event(
    sample: &CouplingSample<SetConfig>,
    ball: &TreeBall,
    v0: &Word,
) -> Result<EventWitness> {
    let v = ball.index_of(v0).ok_or_else(|| Error::NotInBall {
        vertex: v0.to_string(),
    })?;
    event_at(sample, ball, v)
}

/// Mass sent from `from` to `to`: 1 when the event holds at `from`, the two
/// vertices are adjacent, and the lower set at `from` meets the upper set at
/// `to`. Non-adjacent pairs carry no mass.
pub fn transport_mass(
    sample: &CouplingSample<SetConfig>,
    ball: &TreeBall,
    from: &Word,
    to: &Word,
) -> Result<u8> {
    let vf = ball.index_of(from).ok_or_else(|| Error::NotInBall {
        vertex: from.to_string(),
    })?;
    let vt = ball.index_of(to).ok_or_else(|| Error::NotInBall {
        vertex: to.to_string(),
    })?;
    if !Gen::ALL.iter().any(|&g| ball.neighbor(vf, g) == Some(vt)) {
        return Ok(0);
    }
    let e = event_at(sample, ball, vf)?;
    if !e.holds {
        return Ok(0);
    }
    let x = set_at(&sample.lower, ball, vf)?;
    let y = set_at(&sample.upper, ball, vt)?;
    Ok(u8::from(x.intersects(&y)))
}

#[derive(Clone, Copy, Debug)]
pub struct TransportReport {
    pub replicates: u64,
    pub mean_sent: f64,
    pub sent_ci: (f64, f64),
    pub mean_received: f64,
    pub received_ci: (f64, f64),
    /// mean of (sent - received) with its CI; an invariant coupling must
    /// have this straddle zero
    pub imbalance: f64,
    pub imbalance_ci: (f64, f64),
    pub max_received: u8,
    pub event_rate: f64,
    pub event_ci: (f64, f64),
    /// replicates where sent mass was neither 0 nor 2
    pub sent_support_violations: u64,
    /// replicates where more than one unit arrived at the origin
    pub received_above_one: u64,
    pub ci_level: f64,
}

#[derive(Clone, Default)]
struct AuditAcc {
    sum_sent: u64,
    sumsq_sent: u64,
    sum_recv: u64,
    sumsq_recv: u64,
    sum_d: i64,
    sumsq_d: u64,
    sent_bad: u64,
    recv_gt1: u64,
    max_recv: u8,
    events: u64,
}

fn mean_and_ci(sum: f64, sumsq: f64, n: f64, z: f64) -> (f64, (f64, f64)) {
    let mean = sum / n;
    let var = if n > 1.0 {
        ((sumsq - sum * sum / n) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    let half = z * (var / n).sqrt();
    (mean, (mean - half, mean + half))
}

/// Samples the coupling repeatedly and measures transported mass at the
/// origin: sent to the three neighbors, received from them, the gap, the
/// event rate, and the pointwise support checks.
pub fn audit_origin(
    plan: &CouplingPlan,
    ball: &TreeBall,
    replicates: u64,
    ci_level: f64,
    seed: u64,
    workers: Option<usize>,
) -> Result<TransportReport> {
    if replicates == 0 {
        return Err(Error::NoReplicates);
    }
    if !plan.kind.is_set_valued() {
        return Err(Error::RuleMismatch {
            what: format!("{} has no set transport", plan.kind.name()),
        });
    }
    if ball.radius() < 4 {
        // the event at the origin's neighbors reads sets three steps out
        return Err(Error::NotInterior {
            vertex: "a".to_string(),
            radius: 3,
        });
    }
    let o = ball.origin();
    let nbrs = neighbors3(ball, o)?;
    let acc = stats::run_replicated(
        replicates,
        workers,
        |i| -> Result<(u8, u8, bool)> {
            let sets = plan.sample_sets(ball, seed, i)?;
            let e_o = event_at(&sets, ball, o)?;
            let x_o = set_at(&sets.lower, ball, o)?;
            let y_o = set_at(&sets.upper, ball, o)?;
            let mut sent = 0u8;
            let mut recv = 0u8;
            for u in nbrs {
                if e_o.holds && x_o.intersects(&set_at(&sets.upper, ball, u)?) {
                    sent += 1;
                }
                let e_u = event_at(&sets, ball, u)?;
                if e_u.holds && set_at(&sets.lower, ball, u)?.intersects(&y_o) {
                    recv += 1;
                }
            }
            Ok((sent, recv, e_o.holds))
        },
        Ok(AuditAcc::default()),
        |acc: Result<AuditAcc>, r| {
            let mut acc = acc?;
            let (sent, recv, ev) = r?;
            acc.sum_sent += sent as u64;
            acc.sumsq_sent += (sent as u64) * (sent as u64);
            acc.sum_recv += recv as u64;
            acc.sumsq_recv += (recv as u64) * (recv as u64);
            let d = sent as i64 - recv as i64;
            acc.sum_d += d;
            acc.sumsq_d += (d * d) as u64;
            acc.sent_bad += u64::from(sent != 0 && sent != 2);
            acc.recv_gt1 += u64::from(recv > 1);
            acc.max_recv = acc.max_recv.max(recv);
            acc.events += u64::from(ev);
            Ok(acc)
        },
    )?;
    let n = replicates as f64;
    let z = stats::z_for_level(ci_level)?;
    let (mean_sent, sent_ci) = mean_and_ci(acc.sum_sent as f64, acc.sumsq_sent as f64, n, z);
    let (mean_received, received_ci) =
        mean_and_ci(acc.sum_recv as f64, acc.sumsq_recv as f64, n, z);
    let (imbalance, imbalance_ci) = mean_and_ci(acc.sum_d as f64, acc.sumsq_d as f64, n, z);
    let event_ci = stats::wilson_ci(acc.events, replicates, ci_level)?;
    Ok(TransportReport {
        replicates,
        mean_sent,
        sent_ci,
        mean_received,
        received_ci,
        imbalance,
        imbalance_ci,
        max_received: acc.max_recv,
        event_rate: acc.events as f64 / n,
        event_ci,
        sent_support_violations: acc.sent_bad,
        received_above_one: acc.recv_gt1,
        ci_level,
    })
}

/// Invariant processes whose balance the mass-transport principle predicts.
#[derive(Clone, Copy, Debug)]
pub enum BalanceProcess {
    /// the bit coupling built from one fair edge-bit field
    DisagreementCoupling,
    /// vertexwise independent bits, the simplest invariant process
    IidVertexBits(f64),
    /// the monotone set coupling; invariance fails and so may balance
    EndSetsCoupling { n: u32, end: End },
    /// independent lower sets against incident upper sets; invariant, so
    /// balance must hold even though the coupling is not monotone
    IndependentSetsCoupling { n: u32, end: End },
}

/// Diagonally invariant local mass rules.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TransportRule {
    /// send 1 to each neighbor whose upper label is 1
    UpperNeighborIndicator,
    /// send nothing anywhere
    Zero,
    /// the distinctness-gated set transport
    Distinctness,
}

impl TransportRule {
    fn min_radius(self) -> u32 {
        match self {
            TransportRule::Zero => 1,
            TransportRule::UpperNeighborIndicator => 2,
            TransportRule::Distinctness => 4,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BalanceReport {
    pub replicates: u64,
    pub mean_sent: f64,
    pub mean_received: f64,
    pub mean_imbalance: f64,
    /// studentized imbalance; |z| <= 3 counts as balanced
    pub z_score: f64,
    pub balanced: bool,
}

fn balance_plan(process: BalanceProcess) -> Option<CouplingPlan> {
    match process {
        BalanceProcess::EndSetsCoupling { n, end } => Some(CouplingPlan::new(
            crate::coupling::CouplingKind::EndSets,
            n,
            end,
        )),
        BalanceProcess::IndependentSetsCoupling { n, end } => Some(CouplingPlan::new(
            crate::coupling::CouplingKind::IndependentSets,
            n,
            end,
        )),
        _ => None,
    }
}

/// Estimates sent and received mass at the origin for the given invariant
/// process and rule, and tests their equality at three standard errors.
pub fn mtp_balance(
    process: BalanceProcess,
    rule: TransportRule,
    ball: &TreeBall,
    replicates: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<BalanceReport> {
    if replicates == 0 {
        return Err(Error::NoReplicates);
    }
    let compatible = match (process, rule) {
        (_, TransportRule::Zero) => true,
        (
            BalanceProcess::DisagreementCoupling | BalanceProcess::IidVertexBits(_),
            TransportRule::UpperNeighborIndicator,
        ) => true,
        (
            BalanceProcess::EndSetsCoupling { .. } | BalanceProcess::IndependentSetsCoupling { .. },
            TransportRule::Distinctness,
        ) => true,
        _ => false,
    };
    if !compatible {
        return Err(Error::RuleMismatch {
            what: format!("{:?} does not apply to {:?}", rule, process),
        });
    }
    if ball.radius() < rule.min_radius() {
        return Err(Error::NotInterior {
            vertex: String::new(),
            radius: rule.min_radius(),
        });
    }
    let o = ball.origin();
    let nbrs = neighbors3(ball, o)?;
    let (sum_sent, sum_recv, sumsq_d) = stats::run_replicated(
        replicates,
        workers,
        |i| -> Result<(i64, i64)> {
            let pair = match rule {
                TransportRule::Zero => (0, 0),
                TransportRule::UpperNeighborIndicator => {
                    let (sent, recv) = match process {
                        BalanceProcess::DisagreementCoupling => {
                            let mut rng = stats::stream_rng(seed, i, "eta");
                            let eta = sampler::sample_edge_bits(ball, 0.5, &mut rng)?;
                            let mut sent = 0i64;
                            for u in nbrs {
                                sent += sampler::incident_max_bit_at(&eta, ball, u)? as i64;
                            }
                            let recv = 3 * sampler::incident_max_bit_at(&eta, ball, o)? as i64;
                            (sent, recv)
                        }
                        BalanceProcess::IidVertexBits(p) => {
                            let mut rng = stats::stream_rng(seed, i, "iota");
                            let cfg = sampler::sample_vertex_bits(ball, p, &mut rng)?;
                            let bit = |v: usize| -> Result<i64> {
                                cfg.get(ball, v).map(i64::from).ok_or_else(|| {
                                    Error::NotInterior {
                                        vertex: ball.word(v).to_string(),
                                        radius: 1,
                                    }
                                })
                            };
                            let mut sent = 0i64;
                            for u in nbrs {
                                sent += bit(u)?;
                            }
                            (sent, 3 * bit(o)?)
                        }
                        _ => unreachable!("checked by compatibility"),
                    };
                    (sent, recv)
                }
                TransportRule::Distinctness => {
                    let plan = balance_plan(process).expect("checked by compatibility");
                    let sets = plan.sample_sets(ball, seed, i)?;
                    let e_o = event_at(&sets, ball, o)?;
                    let x_o = set_at(&sets.lower, ball, o)?;
                    let y_o = set_at(&sets.upper, ball, o)?;
                    let mut sent = 0i64;
                    let mut recv = 0i64;
                    for u in nbrs {
                        if e_o.holds && x_o.intersects(&set_at(&sets.upper, ball, u)?) {
                            sent += 1;
                        }
                        let e_u = event_at(&sets, ball, u)?;
                        if e_u.holds && set_at(&sets.lower, ball, u)?.intersects(&y_o) {
                            recv += 1;
                        }
                    }
                    (sent, recv)
                }
            };
            Ok(pair)
        },
        Ok((0i64, 0i64, 0u64)),
        |acc: Result<(i64, i64, u64)>, r| {
            let (s, rv, sq) = acc?;
            let (sent, recv) = r?;
            let d = sent - recv;
            Ok((s + sent, rv + recv, sq + (d * d) as u64))
        },
    )?;
    let sum_d = sum_sent - sum_recv;
    let n = replicates as f64;
    let mean = sum_d as f64 / n;
    let var = if replicates > 1 {
        ((sumsq_d as f64 - (sum_d as f64) * (sum_d as f64) / n) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    let se = (var / n).sqrt();
    let (z_score, balanced) = if se == 0.0 {
        if sum_d == 0 {
            (0.0, true)
        } else {
            (f64::INFINITY * mean.signum(), false)
        }
    } else {
        let z = mean / se;
        (z, z.abs() <= 3.0)
    };
    Ok(BalanceReport {
        replicates,
        mean_sent: sum_sent as f64 / n,
        mean_received: sum_recv as f64 / n,
        mean_imbalance: mean,
        z_score,
        balanced,
    })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct OrientationReport {
    pub replicates: u64,
    /// vertices audited for out-degree (event evaluable there)
    pub out_vertices: usize,
    /// vertices audited for in-degree (event evaluable at all neighbors)
    pub in_vertices: usize,
    /// histogram over degrees 0..3
    pub out_degree_counts: [u64; 4],
    pub in_degree_counts: [u64; 4],
    pub out_not_zero_or_two: u64,
    /// out-degree 2 must occur exactly when the event holds
    pub out_event_mismatches: u64,
    pub in_above_one: u64,
}

/// Checks the orientation structure the transport induces: every vertex
/// fires mass along both its away edges or not at all, and no vertex is hit
/// twice.
pub fn end_orientation(
    plan: &CouplingPlan,
    ball: &TreeBall,
    replicates: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<OrientationReport> {
    if replicates == 0 {
        return Err(Error::NoReplicates);
    }
    if !plan.kind.is_set_valued() {
        return Err(Error::RuleMismatch {
            what: format!("{} has no set transport", plan.kind.name()),
        });
    }
    if ball.radius() < 4 {
        return Err(Error::NotInterior {
            vertex: String::new(),
            radius: 4,
        });
    }
    let out_vertices: Vec<usize> = ball
        .interior_vertices(3)
        .iter()
        .map(|&v| v as usize)
        .collect();
    let in_vertices: Vec<usize> = ball
        .interior_vertices(4)
        .iter()
        .map(|&v| v as usize)
        .collect();
    let acc = stats::run_replicated(
        replicates,
        workers,
        |i| -> Result<OrientationReport> {
            let sets = plan.sample_sets(ball, seed, i)?;
            // events for every vertex that can need one
            let mut events = vec![None::<bool>; ball.vertex_count()];
            for &v in &out_vertices {
                events[v] = Some(event_at(&sets, ball, v)?.holds);
            }
            let mut rep = OrientationReport::default();
            for &v in &out_vertices {
                let holds = events[v].unwrap();
                let x = set_at(&sets.lower, ball, v)?;
                let mut out = 0usize;
                if holds {
                    for u in neighbors3(ball, v)? {
                        out += usize::from(x.intersects(&set_at(&sets.upper, ball, u)?));
                    }
                }
                rep.out_degree_counts[out.min(3)] += 1;
                rep.out_not_zero_or_two += u64::from(out != 0 && out != 2);
                rep.out_event_mismatches += u64::from((out == 2) != holds);
            }
            for &v in &in_vertices {
                let y = set_at(&sets.upper, ball, v)?;
                let mut indeg = 0usize;
                for u in neighbors3(ball, v)? {
                    let holds = events[u].ok_or_else(|| Error::NotInterior {
                        vertex: ball.word(u).to_string(),
                        radius: 3,
                    })?;
                    if holds && set_at(&sets.lower, ball, u)?.intersects(&y) {
                        indeg += 1;
                    }
                }
                rep.in_degree_counts[indeg.min(3)] += 1;
                rep.in_above_one += u64::from(indeg > 1);
            }
            Ok(rep)
        },
        Ok(OrientationReport::default()),
        |acc: Result<OrientationReport>, rep| {
            let mut acc = acc?;
            let rep = rep?;
            for k in 0..4 {
                acc.out_degree_counts[k] += rep.out_degree_counts[k];
                acc.in_degree_counts[k] += rep.in_degree_counts[k];
            }
            acc.out_not_zero_or_two += rep.out_not_zero_or_two;
            acc.out_event_mismatches += rep.out_event_mismatches;
            acc.in_above_one += rep.in_above_one;
            Ok(acc)
        },
    )?;
    Ok(OrientationReport {
        replicates,
        out_vertices: out_vertices.len(),
        in_vertices: in_vertices.len(),
        ..acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::CouplingKind;
    use crate::oracle;
    use crate::sampler::EdgeLabels;

    fn ball(r: u32) -> TreeBall {
        TreeBall::build(r).unwrap()
    }

    fn end_a() -> End {
        End::new(Gen::A)
    }

    /// every edge its own label: all distinctness events hold
    fn distinct_labels(b: &TreeBall) -> EdgeLabels {
        EdgeLabels {
            n: b.edge_count() as u32,
            labels: (0..b.edge_count() as u32).collect(),
        }
    }

    fn sets_from(lambda: &EdgeLabels, b: &TreeBall) -> CouplingSample<SetConfig> {
        CouplingSample {
            lower: sampler::away_sets(lambda, b, end_a()).unwrap(),
            upper: sampler::incident_sets(lambda, b).unwrap(),
            streams: &[],
        }
    }

    fn word(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn edge(b: &TreeBall, v: &str, g: Gen) -> usize {
        b.incident_edge(b.index_of(&word(v)).unwrap(), g).unwrap()
    }

    #[test]
    fn distinct_labels_make_the_event_hold() {
        let b = ball(4);
        let s = sets_from(&distinct_labels(&b), &b);
        let w = distinctness_event(&s, &b, &Word::origin()).unwrap();
        assert!(w.holds && w.incident_triples_distinct && w.away_pairs_distinct);
    }

    #[test]
    fn neighbor_label_collision_breaks_the_incident_part() {
        let b = ball(4);
        let mut bad = distinct_labels(&b);
        // one label shared between an edge at neighbor a and one at neighbor b
        let e1 = edge(&b, "a", Gen::B);
        let e2 = edge(&b, "b", Gen::A);
        bad.labels[e1] = bad.labels[e2];
        // upper sets from the collided field, lower sets from a clean one
        let clean = distinct_labels(&b);
        let s = CouplingSample {
            lower: sampler::away_sets(&clean, &b, end_a()).unwrap(),
            upper: sampler::incident_sets(&bad, &b).unwrap(),
            streams: &[],
        };
        let w = distinctness_event(&s, &b, &Word::origin()).unwrap();
        assert!(!w.holds && !w.incident_triples_distinct && w.away_pairs_distinct);
    }

    #[test]
    fn away_label_collision_breaks_the_pair_part_only() {
        let b = ball(4);
        let mut bad = distinct_labels(&b);
        // collide two away edges at distance 2 from the origin; neither is
        // incident to a neighbor of the origin, so the incident part survives
        let e1 = edge(&b, "ab", Gen::C);
        let e2 = edge(&b, "ac", Gen::A);
        bad.labels[e1] = bad.labels[e2];
        let s = sets_from(&bad, &b);
        let w = distinctness_event(&s, &b, &Word::origin()).unwrap();
        assert!(!w.holds && w.incident_triples_distinct && !w.away_pairs_distinct);
    }

    #[test]
    fn any_incident_collision_also_breaks_the_pair_part() {
        // the nine incident labels sit among the twenty away labels, so a
        // single label field can never break the incident part alone
        let b = ball(4);
        let mut bad = distinct_labels(&b);
        let e1 = edge(&b, "a", Gen::B);
        let e2 = edge(&b, "b", Gen::A);
        bad.labels[e1] = bad.labels[e2];
        let s = sets_from(&bad, &b);
        let w = distinctness_event(&s, &b, &Word::origin()).unwrap();
        assert!(!w.incident_triples_distinct && !w.away_pairs_distinct);
    }

    #[test]
    fn mass_goes_along_both_away_edges_exactly() {
        let b = ball(4);
        let s = sets_from(&distinct_labels(&b), &b);
        let o = Word::origin();
        // end based at a: the origin's away edges lead to b and c
        assert_eq!(transport_mass(&s, &b, &o, &word("a")).unwrap(), 0);
        assert_eq!(transport_mass(&s, &b, &o, &word("b")).unwrap(), 1);
        assert_eq!(transport_mass(&s, &b, &o, &word("c")).unwrap(), 1);
        // the toward neighbor sends back: its away pair contains the shared
        // edge label
        assert_eq!(transport_mass(&s, &b, &word("a"), &o).unwrap(), 1);
        assert_eq!(transport_mass(&s, &b, &word("b"), &o).unwrap(), 0);
        assert_eq!(transport_mass(&s, &b, &word("c"), &o).unwrap(), 0);
    }

    #[test]
    fn non_adjacent_pairs_carry_no_mass() {
        let b = ball(4);
        let s = sets_from(&distinct_labels(&b), &b);
        let o = Word::origin();
        assert_eq!(transport_mass(&s, &b, &o, &word("ab")).unwrap(), 0);
        assert_eq!(transport_mass(&s, &b, &o, &o).unwrap(), 0);
        assert!(matches!(
            transport_mass(&s, &b, &o, &word("abababababab")),
            Err(Error::NotInBall { .. })
        ));
    }

    #[test]
    fn event_needs_room_around_the_vertex() {
        let b = ball(4);
        let s = sets_from(&distinct_labels(&b), &b);
        // distance-2 neighborhood of "ab" reaches length 4 words, whose sets
        // are undefined on a radius-4 ball
        assert!(matches!(
            distinctness_event(&s, &b, &word("ab")),
            Err(Error::NotInterior { .. })
        ));
        assert!(distinctness_event(&s, &b, &word("a")).is_ok());
    }

    #[test]
    fn audit_matches_the_exact_event_probability() {
        let b = ball(4);
        let n = 1050u32;
        let plan = CouplingPlan::new(CouplingKind::EndSets, n, end_a());
        let reps = 20_000u64;
        let r = audit_origin(&plan, &b, reps, 0.99, 5, None).unwrap();
        assert_eq!(r.sent_support_violations, 0);
        assert_eq!(r.received_above_one, 0);
        assert!(r.max_received <= 1);
        // sent is exactly twice the event indicator
        assert_eq!(r.mean_sent, 2.0 * r.event_rate);
        // the twenty away labels around any vertex are distinct with the
        // same product probability, and the event reduces to exactly that
        let p20 = oracle::to_f64(&oracle::distinct_product(20, n));
        let sigma = (p20 * (1.0 - p20) / reps as f64).sqrt();
        assert!(
            (r.event_rate - p20).abs() <= 3.0 * sigma,
            "event rate {} vs exact {}",
            r.event_rate,
            p20
        );
        // received is the event indicator at the toward neighbor
        assert!((r.mean_received - p20).abs() <= 3.0 * sigma);
        assert!(r.sent_ci.0 >= 4.0 / 3.0);
        assert!(r.imbalance_ci.0 > 0.0, "imbalance CI {:?}", r.imbalance_ci);
    }

    #[test]
    fn independent_control_breaks_the_sent_support() {
        let b = ball(4);
        let plan = CouplingPlan::new(CouplingKind::IndependentSets, 1050, end_a());
        let r = audit_origin(&plan, &b, 20_000, 0.99, 7, None).unwrap();
        assert!(r.sent_support_violations > 0);
    }

    #[test]
    fn audit_rejects_bit_kinds_and_small_balls() {
        let b = ball(4);
        let bits = CouplingPlan::new(CouplingKind::EndBits, 0, end_a());
        assert!(matches!(
            audit_origin(&bits, &b, 10, 0.99, 0, None),
            Err(Error::RuleMismatch { .. })
        ));
        let small = ball(3);
        let plan = CouplingPlan::new(CouplingKind::EndSets, 50, end_a());
        assert!(matches!(
            audit_origin(&plan, &small, 10, 0.99, 0, None),
            Err(Error::NotInterior { .. })
        ));
    }

    #[test]
    fn invariant_processes_balance() {
        let b = ball(4);
        let cases = [
            (
                BalanceProcess::DisagreementCoupling,
                TransportRule::UpperNeighborIndicator,
            ),
            (
                BalanceProcess::IidVertexBits(0.3),
                TransportRule::UpperNeighborIndicator,
            ),
            (
                BalanceProcess::IndependentSetsCoupling {
                    n: 1050,
                    end: end_a(),
                },
                TransportRule::Distinctness,
            ),
            (BalanceProcess::DisagreementCoupling, TransportRule::Zero),
        ];
        for (proc, rule) in cases {
            let r = mtp_balance(proc, rule, &b, 30_000, 11, None).unwrap();
            assert!(
                r.balanced,
                "{:?}/{:?}: z = {}, mean = {}",
                proc, rule, r.z_score, r.mean_imbalance
            );
        }
    }

    #[test]
    fn the_monotone_set_coupling_does_not_balance() {
        let b = ball(4);
        let r = mtp_balance(
            BalanceProcess::EndSetsCoupling {
                n: 1050,
                end: end_a(),
            },
            TransportRule::Distinctness,
            &b,
            20_000,
            13,
            None,
        )
        .unwrap();
        assert!(!r.balanced);
        assert!(r.z_score > 3.0);
        // sent exceeds received by at least 4/3 - 1 in expectation
        assert!(r.mean_imbalance > 1.0 / 3.0);
    }

    #[test]
    fn zero_rule_is_exactly_balanced() {
        let b = ball(4);
        let r = mtp_balance(
            BalanceProcess::IidVertexBits(0.5),
            TransportRule::Zero,
            &b,
            100,
            0,
            None,
        )
        .unwrap();
        assert_eq!(r.mean_imbalance, 0.0);
        assert_eq!(r.z_score, 0.0);
        assert!(r.balanced);
    }

    #[test]
    fn incompatible_rules_are_rejected() {
        let b = ball(4);
        assert!(matches!(
            mtp_balance(
                BalanceProcess::DisagreementCoupling,
                TransportRule::Distinctness,
                &b,
                10,
                0,
                None
            ),
            Err(Error::RuleMismatch { .. })
        ));
        assert!(matches!(
            mtp_balance(
                BalanceProcess::EndSetsCoupling {
                    n: 10,
                    end: end_a()
                },
                TransportRule::UpperNeighborIndicator,
                &b,
                10,
                0,
                None
            ),
            Err(Error::RuleMismatch { .. })
        ));
    }

    #[test]
    fn orientation_has_the_claimed_degree_structure() {
        let b = ball(5);
        let plan = CouplingPlan::new(CouplingKind::EndSets, 1050, end_a());
        let r = end_orientation(&plan, &b, 2_000, 17, None).unwrap();
        assert_eq!(r.out_vertices, 10);
        assert_eq!(r.in_vertices, 4);
        assert_eq!(r.out_not_zero_or_two, 0);
        assert_eq!(r.out_event_mismatches, 0);
        assert_eq!(r.in_above_one, 0);
        assert_eq!(r.out_degree_counts[1] + r.out_degree_counts[3], 0);
        assert!(r.out_degree_counts[0] > 0 && r.out_degree_counts[2] > 0);
        assert!(r.in_degree_counts[0] > 0 && r.in_degree_counts[1] > 0);
        assert_eq!(
            r.out_degree_counts.iter().sum::<u64>(),
            2_000 * r.out_vertices as u64
        );
    }

    #[test]
    fn independent_control_breaks_orientation() {
        let b = ball(5);
        let plan = CouplingPlan::new(CouplingKind::IndependentSets, 1050, end_a());
        let r = end_orientation(&plan, &b, 2_000, 19, None).unwrap();
        assert!(r.out_not_zero_or_two > 0);
    }
}
