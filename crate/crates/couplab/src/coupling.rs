//! Coupled pairs of processes on a common source of randomness, and the
//! checks that a claimed coupling actually has the advertised marginals and
//! ordering.
//!
//! All pair constructions are driven by named streams so that a (seed,
//! replicate) pair pins the full configuration. The bit couplings share one
//! fair edge-bit stream, the set couplings one edge-label stream; the
//! independent control deliberately uses two unrelated streams.

use crate::config::{BitConfig, ProductBitConfig, SetConfig};
use crate::error::{Error, Result};
use crate::graph::{End, TreeBall};
use crate::sampler;
use crate::stats::{self, TestResult};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CouplingKind {
    /// (away max, incident max) from one fair bit stream
    EndBits,
    /// (disagreement, incident max) from one fair bit stream
    DisagreementBits,
    /// (away label set, incident label set) from one label stream
    EndSets,
    /// EndSets pushed to the cycle product via lift
    LiftedBits,
    /// independent pair sets against incident sets: a non-monotone control
    IndependentSets,
}

impl CouplingKind {
    pub const ALL: [CouplingKind; 5] = [
        CouplingKind::EndBits,
        CouplingKind::DisagreementBits,
        CouplingKind::EndSets,
        CouplingKind::LiftedBits,
        CouplingKind::IndependentSets,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CouplingKind::EndBits => "end-bits",
            CouplingKind::DisagreementBits => "disagreement-bits",
            CouplingKind::EndSets => "end-sets",
            CouplingKind::LiftedBits => "lifted-bits",
            CouplingKind::IndependentSets => "independent-sets",
        }
    }

    pub fn from_name(s: &str) -> Option<CouplingKind> {
        CouplingKind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Whether the construction guarantees lower <= upper pointwise.
    pub fn monotone_by_construction(self) -> bool {
        !matches!(self, CouplingKind::IndependentSets)
    }

    pub fn is_set_valued(self) -> bool {
        matches!(
            self,
            CouplingKind::EndSets | CouplingKind::LiftedBits | CouplingKind::IndependentSets
        )
    }
}

/// One sampled coupled pair.
#[derive(Clone, Debug)]
pub struct CouplingSample<C> {
    pub lower: C,
    pub upper: C,
    /// Stream names consumed, in draw order.
    pub streams: &'static [&'static str],
}

#[derive(Clone, Debug)]
pub enum CouplingOutput {
    Bits(CouplingSample<BitConfig>),
    Sets(CouplingSample<SetConfig>),
    ProductBits(CouplingSample<ProductBitConfig>),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Lower => "lower",
            Side::Upper => "upper",
        }
    }
}

/// Everything needed to draw replicates of one coupling kind. `n` is the
/// label alphabet (and cycle length for the lifted kind); bit kinds ignore
/// it. The end parameter orients the away constructions.
#[derive(Clone, Copy, Debug)]
pub struct CouplingPlan {
    pub kind: CouplingKind,
    pub n: u32,
    pub end: End,
}

impl CouplingPlan {
    pub fn new(kind: CouplingKind, n: u32, end: End) -> CouplingPlan {
        CouplingPlan { kind, n, end }
    }

    fn validate(&self) -> Result<()> {
        if self.kind.is_set_valued() && self.n == 0 {
            return Err(Error::EmptyAlphabet { n: self.n });
        }
        if self.kind == CouplingKind::LiftedBits && self.n < 3 {
            return Err(Error::CycleTooShort { n: self.n });
        }
        Ok(())
    }

    pub fn streams(&self) -> &'static [&'static str] {
        match self.kind {
            CouplingKind::EndBits | CouplingKind::DisagreementBits => &["eta"],
            CouplingKind::EndSets | CouplingKind::LiftedBits => &["lambda"],
            CouplingKind::IndependentSets => &["nu", "lambda"],
        }
    }

    pub fn sample(&self, ball: &TreeBall, seed: u64, replicate: u64) -> Result<CouplingOutput> {
        self.validate()?;
        match self.kind {
            CouplingKind::EndBits => {
                let mut rng = stats::stream_rng(seed, replicate, "eta");
                let eta = sampler::sample_edge_bits(ball, 0.5, &mut rng)?;
                Ok(CouplingOutput::Bits(CouplingSample {
                    lower: sampler::end_max_bits(&eta, ball, self.end)?,
                    upper: sampler::incident_max_bits(&eta, ball)?,
                    streams: self.streams(),
                }))
            }
            CouplingKind::DisagreementBits => {
                let mut rng = stats::stream_rng(seed, replicate, "eta");
                let eta = sampler::sample_edge_bits(ball, 0.5, &mut rng)?;
                Ok(CouplingOutput::Bits(CouplingSample {
                    lower: sampler::disagreement_bits(&eta, ball)?,
                    upper: sampler::incident_max_bits(&eta, ball)?,
                    streams: self.streams(),
                }))
            }
            CouplingKind::EndSets | CouplingKind::IndependentSets => {
                Ok(CouplingOutput::Sets(self.sample_sets(ball, seed, replicate)?))
            }
            CouplingKind::LiftedBits => {
                let sets = self.sets_from_labels(ball, seed, replicate)?;
                Ok(CouplingOutput::ProductBits(CouplingSample {
                    lower: sampler::lift(&sets.lower, ball, self.n)?,
                    upper: sampler::lift(&sets.upper, ball, self.n)?,
                    streams: self.streams(),
                }))
            }
        }
    }

    fn sets_from_labels(
        &self,
        ball: &TreeBall,
        seed: u64,
        replicate: u64,
    ) -> Result<CouplingSample<SetConfig>> {
        let mut rng = stats::stream_rng(seed, replicate, "lambda");
        let lambda = sampler::sample_edge_labels(ball, self.n, &mut rng)?;
        Ok(CouplingSample {
            lower: sampler::away_sets(&lambda, ball, self.end)?,
            upper: sampler::incident_sets(&lambda, ball)?,
            streams: self.streams(),
        })
    }

    /// The set-valued view of this coupling, used by the transport audits.
    /// The lifted kind round-trips through its product encoding so the audit
    /// exercises exactly what the lifted configurations contain.
    pub fn sample_sets(
        &self,
        ball: &TreeBall,
        seed: u64,
        replicate: u64,
    ) -> Result<CouplingSample<SetConfig>> {
        self.validate()?;
        match self.kind {
            CouplingKind::EndSets => self.sets_from_labels(ball, seed, replicate),
            CouplingKind::LiftedBits => {
                let sets = self.sets_from_labels(ball, seed, replicate)?;
                let lower = sampler::unlift(&sampler::lift(&sets.lower, ball, self.n)?, ball)?;
                let upper = sampler::unlift(&sampler::lift(&sets.upper, ball, self.n)?, ball)?;
                Ok(CouplingSample {
                    lower,
                    upper,
                    streams: sets.streams,
                })
            }
            CouplingKind::IndependentSets => {
                let mut nu_rng = stats::stream_rng(seed, replicate, "nu");
                let lower = sampler::iid_pair_sets(ball, self.n, &mut nu_rng)?;
                let mut rng = stats::stream_rng(seed, replicate, "lambda");
                let lambda = sampler::sample_edge_labels(ball, self.n, &mut rng)?;
                Ok(CouplingSample {
                    lower,
                    upper: sampler::incident_sets(&lambda, ball)?,
                    streams: self.streams(),
                })
            }
            _ => Err(Error::RuleMismatch {
                what: format!("{} is not set-valued", self.kind.name()),
            }),
        }
    }
}

/// Result of a pointwise order check.
#[derive(Clone, Debug)]
pub struct MonotoneReport {
    pub ok: bool,
    /// First violating vertex in enumeration order, as a dump-style id.
    pub violation: Option<String>,
}

pub fn check_monotone(out: &CouplingOutput, ball: &TreeBall) -> MonotoneReport {
    let violation = match out {
        CouplingOutput::Bits(cs) => cs
            .lower
            .bits
            .iter()
            .zip(&cs.upper.bits)
            .position(|(l, u)| l > u)
            .map(|r| ball.word(ball.interior1()[r] as usize).to_string()),
        CouplingOutput::Sets(cs) => cs
            .lower
            .sets
            .iter()
            .zip(&cs.upper.sets)
            .position(|(l, u)| !l.is_subset_of(u))
            .map(|r| ball.word(ball.interior1()[r] as usize).to_string()),
        CouplingOutput::ProductBits(cs) => cs
            .lower
            .bits
            .iter()
            .zip(&cs.upper.bits)
            .position(|(l, u)| l > u)
            .map(|i| {
                let n = cs.lower.n as usize;
                let v = ball.interior1()[i / n] as usize;
                format!("{},{}", ball.word(v), i % n)
            }),
    };
    MonotoneReport {
        ok: violation.is_none(),
        violation,
    }
}

/// The exact one-vertex law a coupling side must have at the origin (at
/// cycle position 0 for the lifted kind).
#[derive(Clone, Copy, Debug)]
pub enum MarginalLaw {
    /// P(bit = 1)
    Bernoulli(f64),
    /// set size 1 or 2 with P(size 1) = 1/n
    PairSizes(u32),
    /// set size 1, 2 or 3 with P = (1, 3(n-1), (n-1)(n-2)) / n^2
    TripleSizes(u32),
}

impl MarginalLaw {
    pub fn cell_count(&self) -> usize {
        match self {
            MarginalLaw::Bernoulli(_) => 2,
            MarginalLaw::PairSizes(_) => 2,
            MarginalLaw::TripleSizes(_) => 3,
        }
    }

    pub fn probs(&self) -> Vec<f64> {
        match self {
            MarginalLaw::Bernoulli(p) => vec![1.0 - p, *p],
            MarginalLaw::PairSizes(n) => {
                let n = *n as f64;
                vec![1.0 / n, (n - 1.0) / n]
            }
            MarginalLaw::TripleSizes(n) => {
                let n = *n as f64;
                vec![
                    1.0 / (n * n),
                    3.0 * (n - 1.0) / (n * n),
                    (n - 1.0) * (n - 2.0) / (n * n),
                ]
            }
        }
    }
}

impl CouplingPlan {
    pub fn marginal_law(&self, side: Side) -> MarginalLaw {
        let n = self.n as f64;
        match (self.kind, side) {
            (CouplingKind::EndBits | CouplingKind::DisagreementBits, Side::Lower) => {
                MarginalLaw::Bernoulli(0.75)
            }
            (CouplingKind::EndBits | CouplingKind::DisagreementBits, Side::Upper) => {
                MarginalLaw::Bernoulli(0.875)
            }
            (CouplingKind::EndSets | CouplingKind::IndependentSets, Side::Lower) => {
                MarginalLaw::PairSizes(self.n)
            }
            (CouplingKind::EndSets | CouplingKind::IndependentSets, Side::Upper) => {
                MarginalLaw::TripleSizes(self.n)
            }
            // membership of one fixed cycle position in the vertex set
            (CouplingKind::LiftedBits, Side::Lower) => {
                MarginalLaw::Bernoulli((2.0 * n - 1.0) / (n * n))
            }
            (CouplingKind::LiftedBits, Side::Upper) => {
                MarginalLaw::Bernoulli((3.0 * n * n - 3.0 * n + 1.0) / (n * n * n))
            }
        }
    }
}

/// Merges adjacent cells until every expected count reaches 5, keeping at
/// least two cells. Returns the merged observed counts and probabilities.
fn merge_small_cells(
    mut counts: Vec<u64>,
    mut probs: Vec<f64>,
    total: u64,
) -> (Vec<u64>, Vec<f64>) {
    loop {
        if counts.len() <= 2 {
            return (counts, probs);
        }
        let (argmin, &min_p) = probs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        if min_p * total as f64 >= 5.0 {
            return (counts, probs);
        }
        let into = if argmin == 0 { 1 } else { argmin - 1 };
        counts[into] += counts[argmin];
        probs[into] += probs[argmin];
        counts.remove(argmin);
        probs.remove(argmin);
    }
}

/// Draws fresh replicates of the coupling and tests the chosen side's label
/// at the origin (cycle position 0 for the lifted kind) against its declared
/// law.
pub fn check_marginal(
    plan: &CouplingPlan,
    ball: &TreeBall,
    side: Side,
    replicates: u64,
    alpha: f64,
    seed: u64,
    workers: Option<usize>,
) -> Result<TestResult> {
    if replicates == 0 {
        return Err(Error::NoReplicates);
    }
    plan.validate()?;
    let law = plan.marginal_law(side);
    let origin_rank = ball
        .interior1_rank(ball.origin())
        .ok_or(Error::NotInterior {
            vertex: String::new(),
            radius: 1,
        })?;
    let cells = law.cell_count();
    let counts = stats::run_replicated(
        replicates,
        workers,
        |i| -> Result<usize> {
            let out = plan.sample(ball, seed, i)?;
            let sample = match (&out, side) {
                (CouplingOutput::Bits(cs), Side::Lower) => cs.lower.bits[origin_rank] as usize,
                (CouplingOutput::Bits(cs), Side::Upper) => cs.upper.bits[origin_rank] as usize,
                (CouplingOutput::Sets(cs), Side::Lower) => cs.lower.sets[origin_rank].len() - 1,
                (CouplingOutput::Sets(cs), Side::Upper) => cs.upper.sets[origin_rank].len() - 1,
                (CouplingOutput::ProductBits(cs), Side::Lower) => {
                    cs.lower.get(origin_rank, 0) as usize
                }
                (CouplingOutput::ProductBits(cs), Side::Upper) => {
                    cs.upper.get(origin_rank, 0) as usize
                }
            };
            Ok(sample)
        },
        Ok(vec![0u64; cells]),
        |acc: Result<Vec<u64>>, cell| {
            let mut acc = acc?;
            acc[cell?] += 1;
            Ok(acc)
        },
    )?;
    let (counts, probs) = merge_small_cells(counts, law.probs(), replicates);
    stats::chi_square_gof(&counts, &probs, alpha)
}
