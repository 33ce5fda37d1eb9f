//! Protocol orchestration: plans a run (queries frozen, schedule fixed),
//! materializes all messages as a function of inputs and randomness, decodes,
//! seals a transcript only after the decoded output matches the plaintext
//! demand, and measures exact rates against the converse region.
//!
//! Keeping the message pipeline a pure function of (inputs, randomness) is
//! what lets the verifier probe the very same code path it certifies.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::algebra::{vec_add, vec_scale, FieldElement};
use crate::codes::{EvaluationPoints, Matrix};
use crate::model::{
    compute_rates, DemandMatrix, DropoutSchedule, InputSet, ParamsRecord, ProblemParams, Rate,
    RateReport, SchemeId, Transcript, SCHEMA_VERSION,
};
use crate::scheme_baseline::{rewrite_demand_for_baseline, DemandRewrite};
use crate::scheme_multi::{
    self, build_retrieval_queries, queries_from_blinds, MultiKeyMaterial, RetrievalQuery,
};
use crate::scheme_single::{self, encoder_matrix, SingleKeyMaterial, SingleQueryState};
use crate::Error;

/// How the surviving sets of a run are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum DropoutModel {
    /// Exactly the given sets.
    Fixed {
        u1: BTreeSet<usize>,
        u2: BTreeSet<usize>,
    },
    /// Each user survives each round independently with this probability,
    /// resampled until the schedule is admissible.
    Random { survive_prob: f64 },
    /// Every admissible (u1, u2) pair.
    Exhaustive,
    /// The schedule that maximizes the per-user round-2 load.
    AdversarialWorst,
}

/// Deliberate protocol faults used as negative controls by the verifiers.
/// A verifier without a failing control proves nothing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sabotage {
    None,
    /// All key and mask symbols forced to zero: round-1 messages become the
    /// raw inputs.
    DisableMasking,
    /// One mask symbol shared by all retrievals of the same block instead of
    /// one per (combination, block) instance.
    ReuseRetrievalMask,
    /// The first random blind of every retrieval is replaced by the demand
    /// row, so queries carry the demand in the clear.
    LeakDemandInQuery,
}

/// Expands a dropout model into concrete schedules. `Fixed`, `Random` and
/// `AdversarialWorst` yield one; `Exhaustive` yields all of them.
pub fn schedules<R: Rng + ?Sized>(
    model: &DropoutModel,
    params: &ProblemParams,
    scheme: SchemeId,
    rng: &mut R,
) -> Result<Vec<DropoutSchedule>, Error> {
    match model {
        DropoutModel::Fixed { u1, u2 } => Ok(vec![DropoutSchedule::new(
            u1.clone(),
            u2.clone(),
            params,
        )?]),
        DropoutModel::Random { survive_prob } => {
            Ok(vec![sample_schedule(params, *survive_prob, rng)])
        }
        DropoutModel::Exhaustive => exhaustive_schedules(params),
        DropoutModel::AdversarialWorst => {
            let (schedule, _) = adversarial_worst(params, scheme)?;
            Ok(vec![schedule])
        }
    }
}

fn sample_schedule<R: Rng + ?Sized>(
    params: &ProblemParams,
    survive_prob: f64,
    rng: &mut R,
) -> DropoutSchedule {
    let p = survive_prob.clamp(0.0, 1.0);
    for _ in 0..1000 {
        let u1: BTreeSet<usize> = (1..=params.k())
            .filter(|_| rng.random::<f64>() < p)
            .collect();
        if u1.len() < params.u() {
            continue;
        }
        let u2: BTreeSet<usize> = u1
            .iter()
            .copied()
            .filter(|_| rng.random::<f64>() < p)
            .collect();
        if u2.len() < params.u() {
            continue;
        }
        return DropoutSchedule::new(u1, u2, params).expect("sampled schedule is admissible");
    }
    // Degenerate survival probability; fall back to no dropouts.
    DropoutSchedule::full(params)
}

fn exhaustive_schedules(params: &ProblemParams) -> Result<Vec<DropoutSchedule>, Error> {
    let k = params.k();
    if k > 16 {
        return Err(Error::EnumerationTooLarge(format!(
            "exhaustive dropout sweep over k={k} users"
        )));
    }
    let mut out = Vec::new();
    for mask1 in 0u32..(1 << k) {
        if (mask1.count_ones() as usize) < params.u() {
            continue;
        }
        // iterate submasks of mask1, including mask1 itself
        let mut sub = mask1;
        loop {
            if (sub.count_ones() as usize) >= params.u() {
                let u1 = mask_to_set(mask1);
                let u2 = mask_to_set(sub);
                out.push(DropoutSchedule::new(u1, u2, params)?);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & mask1;
        }
    }
    Ok(out)
}

fn mask_to_set(mask: u32) -> BTreeSet<usize> {
    (0..32)
        .filter(|i| mask & (1 << i) != 0)
        .map(|i| i + 1)
        .collect()
}

/// All round-1 and round-2 messages of a run: X for every user (dropouts lose
/// messages in transit, they still compute them) and a round-2 answer vector
/// per round-1 survivor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageSet {
    pub x: Vec<Vec<FieldElement>>,
    pub y: BTreeMap<usize, Vec<FieldElement>>,
}

#[derive(Clone, Debug)]
struct RetrievalPlan {
    combination: usize,
    block: usize,
    mask_slot: usize,
    queries: BTreeMap<usize, RetrievalQuery>,
}

#[derive(Clone, Debug)]
enum SchemePlan {
    Single {
        state: SingleQueryState,
        encoder: Matrix,
    },
    Multi {
        points: EvaluationPoints,
        retrievals: Vec<RetrievalPlan>,
    },
    Baseline {
        rewrite: DemandRewrite,
        states: Vec<SingleQueryState>,
        encoder: Matrix,
    },
}

/// A run with schedule and queries frozen. The remaining degrees of freedom
/// are the inputs and the randomness vector, and [`PlannedRun::messages`] is
/// a pure (affine) function of them.
pub struct PlannedRun {
    scheme: SchemeId,
    params: ProblemParams,
    demand: DemandMatrix,
    schedule: DropoutSchedule,
    sabotage: Sabotage,
    plan: SchemePlan,
}

impl PlannedRun {
    /// Freezes queries for one run, drawing whatever blinding the scheme
    /// needs from `rng`. Key material is *not* drawn here; it arrives as the
    /// explicit randomness vector of [`PlannedRun::messages`].
    pub fn new<R: Rng + ?Sized>(
        scheme: SchemeId,
        params: &ProblemParams,
        demand: &DemandMatrix,
        schedule: &DropoutSchedule,
        sabotage: Sabotage,
        rng: &mut R,
    ) -> Result<PlannedRun, Error> {
        params.require_regime(scheme)?;
        let plan = match scheme {
            SchemeId::Single => {
                let state = if sabotage == Sabotage::LeakDemandInQuery {
                    // blinding scalar pinned to 1: queries expose 1/a_i
                    let row: Vec<FieldElement> =
                        (1..=params.k()).map(|i| demand.coeff(1, i)).collect();
                    scheme_single::queries_for_t(&row, params.field().one())?
                } else {
                    scheme_single::gen_queries(demand, params, rng)?
                };
                SchemePlan::Single {
                    state,
                    encoder: encoder_matrix(params)?,
                }
            }
            SchemeId::Multi => Self::plan_multi(params, demand, schedule, sabotage, rng)?,
            SchemeId::Baseline => {
                let rewrite = rewrite_demand_for_baseline(demand, params, rng)?;
                let field = params.field();
                let states = (1..=params.kc())
                    .map(|n| {
                        let row: Vec<FieldElement> = (1..=params.k())
                            .map(|i| rewrite.rewritten().coeff(n, i))
                            .collect();
                        scheme_single::queries_for_t(&row, field.sample_nonzero(rng))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                SchemePlan::Baseline {
                    rewrite,
                    states,
                    encoder: encoder_matrix(params)?,
                }
            }
        };
        Ok(PlannedRun {
            scheme,
            params: *params,
            demand: demand.clone(),
            schedule: schedule.clone(),
            sabotage,
            plan,
        })
    }

    fn plan_multi<R: Rng + ?Sized>(
        params: &ProblemParams,
        demand: &DemandMatrix,
        schedule: &DropoutSchedule,
        sabotage: Sabotage,
        rng: &mut R,
    ) -> Result<SchemePlan, Error> {
        let field = params.field();
        let l_prime = params.u() - 1;
        let l_pad = params.padded_len(SchemeId::Multi);
        let blocks = l_pad / l_prime;
        let points = EvaluationPoints::standard(params.k(), l_prime, field)?;
        let u1 = schedule.u1();
        let mut retrievals = Vec::with_capacity(params.kc() * blocks);
        for n in 1..=params.kc() {
            let row: Vec<FieldElement> = (1..=params.k())
                .map(|i| {
                    if u1.contains(&i) {
                        demand.coeff(n, i)
                    } else {
                        field.zero()
                    }
                })
                .collect();
            for block in 0..blocks {
                let mask_slot = if sabotage == Sabotage::ReuseRetrievalMask {
                    block
                } else {
                    (n - 1) * blocks + block
                };
                let queries = if sabotage == Sabotage::LeakDemandInQuery {
                    let mut blinds: Vec<Vec<FieldElement>> = (0..l_prime)
                        .map(|_| (0..params.k()).map(|_| field.sample(rng)).collect())
                        .collect();
                    blinds[0] = row.clone();
                    queries_from_blinds(&row, n, block, &points, u1, &blinds)?
                } else {
                    build_retrieval_queries(&row, n, block, &points, u1, rng)?
                };
                retrievals.push(RetrievalPlan {
                    combination: n,
                    block,
                    mask_slot,
                    queries,
                });
            }
        }
        // A fresh mask per retrieval instance is a protocol invariant; only
        // the deliberate fault is allowed to violate it.
        if sabotage != Sabotage::ReuseRetrievalMask {
            let mut seen = BTreeSet::new();
            for r in &retrievals {
                if !seen.insert(r.mask_slot) {
                    return Err(Error::MaskReused { slot: r.mask_slot });
                }
            }
        }
        Ok(SchemePlan::Multi { points, retrievals })
    }

    pub fn scheme(&self) -> SchemeId {
        self.scheme
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn demand(&self) -> &DemandMatrix {
        &self.demand
    }

    pub fn schedule(&self) -> &DropoutSchedule {
        &self.schedule
    }

    pub fn sabotage(&self) -> Sabotage {
        self.sabotage
    }

    /// Stacked input length: k * l_padded.
    pub fn input_len(&self) -> usize {
        self.params.k() * self.params.padded_len(self.scheme)
    }

    /// Number of uniform symbols the run consumes (keys, plus masks for the
    /// multi scheme, per repetition for the baseline).
    pub fn randomness_len(&self) -> usize {
        let l_pad = self.params.padded_len(self.scheme);
        match self.scheme {
            SchemeId::Single => self.params.k() * l_pad,
            SchemeId::Multi => MultiKeyMaterial::symbol_count(&self.params),
            SchemeId::Baseline => self.params.kc() * self.params.k() * l_pad,
        }
    }

    /// All messages of the run as a function of padded inputs and the flat
    /// randomness vector.
    pub fn messages(
        &self,
        w_padded: &[Vec<FieldElement>],
        randomness: &[FieldElement],
    ) -> Result<MessageSet, Error> {
        if randomness.len() != self.randomness_len() {
            return Err(Error::LengthMismatch {
                context: "randomness vector",
                got: randomness.len(),
                expected: self.randomness_len(),
            });
        }
        let field = self.params.field();
        let zeroed;
        let r_eff = if self.sabotage == Sabotage::DisableMasking {
            zeroed = vec![field.zero(); randomness.len()];
            &zeroed
        } else {
            randomness
        };
        match &self.plan {
            SchemePlan::Single { state, encoder } => {
                let material =
                    SingleKeyMaterial::from_key_symbols(&self.params, encoder, r_eff)?;
                let x = (1..=self.params.k())
                    .map(|i| {
                        scheme_single::round1_message(
                            &w_padded[i - 1],
                            state.query_for(i),
                            material.key(i),
                        )
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let mut y = BTreeMap::new();
                for &j in self.schedule.u1() {
                    y.insert(
                        j,
                        scheme_single::round2_message(j, self.schedule.u1(), &material, encoder)?,
                    );
                }
                Ok(MessageSet { x, y })
            }
            SchemePlan::Multi { points, retrievals } => {
                let material = MultiKeyMaterial::from_symbols(&self.params, r_eff)?;
                let x = (1..=self.params.k())
                    .map(|i| scheme_multi::round1_message(&w_padded[i - 1], material.key(i)))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut y: BTreeMap<usize, Vec<FieldElement>> = self
                    .schedule
                    .u1()
                    .iter()
                    .map(|&i| (i, Vec::with_capacity(retrievals.len())))
                    .collect();
                let mut pool = material.masks().clone();
                for rp in retrievals {
                    let s = if self.sabotage == Sabotage::ReuseRetrievalMask {
                        pool.peek(rp.mask_slot)?
                    } else {
                        pool.take(rp.mask_slot)?
                    };
                    for &i in self.schedule.u1() {
                        let a =
                            scheme_multi::answer(i, &rp.queries[&i], material.keys(), s, points)?;
                        y.get_mut(&i).expect("survivor entry exists").push(a);
                    }
                }
                Ok(MessageSet { x, y })
            }
            SchemePlan::Baseline {
                states, encoder, ..
            } => {
                let l_pad = self.params.padded_len(SchemeId::Baseline);
                let per_rep = self.params.k() * l_pad;
                let mut x = vec![Vec::new(); self.params.k()];
                let mut y: BTreeMap<usize, Vec<FieldElement>> = self
                    .schedule
                    .u1()
                    .iter()
                    .map(|&i| (i, Vec::new()))
                    .collect();
                for (rep, state) in states.iter().enumerate() {
                    let material = SingleKeyMaterial::from_key_symbols(
                        &self.params,
                        encoder,
                        &r_eff[rep * per_rep..(rep + 1) * per_rep],
                    )?;
                    for i in 1..=self.params.k() {
                        let xi = scheme_single::round1_message(
                            &w_padded[i - 1],
                            state.query_for(i),
                            material.key(i),
                        )?;
                        x[i - 1].extend(xi);
                    }
                    for &j in self.schedule.u1() {
                        let yj = scheme_single::round2_message(
                            j,
                            self.schedule.u1(),
                            &material,
                            encoder,
                        )?;
                        y.get_mut(&j).expect("survivor entry exists").extend(yj);
                    }
                }
                Ok(MessageSet { x, y })
            }
        }
    }

    /// Decodes from what the server actually receives: round-1 messages of
    /// u1, round-2 answers of u2.
    pub fn decode(&self, msgs: &MessageSet) -> Result<Vec<Vec<FieldElement>>, Error> {
        let u1 = self.schedule.u1();
        let u2 = self.schedule.u2();
        let x_received: BTreeMap<usize, Vec<FieldElement>> = u1
            .iter()
            .map(|&i| (i, msgs.x[i - 1].clone()))
            .collect();
        match &self.plan {
            SchemePlan::Single { state, encoder } => {
                let y_received: BTreeMap<usize, Vec<FieldElement>> = u2
                    .iter()
                    .map(|&i| (i, msgs.y[&i].clone()))
                    .collect();
                let out = scheme_single::server_decode(
                    &x_received,
                    &y_received,
                    state,
                    u1,
                    encoder,
                    &self.params,
                )?;
                Ok(vec![out])
            }
            SchemePlan::Multi { points, retrievals } => {
                let l_prime = self.params.u() - 1;
                let l_pad = self.params.padded_len(SchemeId::Multi);
                let blocks = l_pad / l_prime;
                let mut combos =
                    vec![Vec::with_capacity(l_pad); self.params.kc()];
                for (idx, rp) in retrievals.iter().enumerate() {
                    let answers: BTreeMap<usize, FieldElement> = u2
                        .iter()
                        .map(|&i| (i, msgs.y[&i][idx]))
                        .collect();
                    let symbols = scheme_multi::retrieve(&answers, points, self.params.u())?;
                    if rp.block != combos[rp.combination - 1].len() / l_prime {
                        return Err(Error::MissingBlock {
                            combination: rp.combination,
                            block: rp.block,
                        });
                    }
                    combos[rp.combination - 1].extend(symbols);
                }
                for (n, combo) in combos.iter().enumerate() {
                    if combo.len() != blocks * l_prime {
                        return Err(Error::MissingBlock {
                            combination: n + 1,
                            block: combo.len() / l_prime,
                        });
                    }
                }
                scheme_multi::server_decode(&x_received, &combos, &self.demand, u1, &self.params)
            }
            SchemePlan::Baseline {
                rewrite,
                states,
                encoder,
            } => {
                let l_pad = self.params.padded_len(SchemeId::Baseline);
                let sub_len = l_pad / self.params.u();
                let mut outputs = Vec::with_capacity(states.len());
                for (rep, state) in states.iter().enumerate() {
                    let x_rep: BTreeMap<usize, Vec<FieldElement>> = x_received
                        .iter()
                        .map(|(&i, xi)| (i, xi[rep * l_pad..(rep + 1) * l_pad].to_vec()))
                        .collect();
                    let y_rep: BTreeMap<usize, Vec<FieldElement>> = u2
                        .iter()
                        .map(|&i| {
                            (
                                i,
                                msgs.y[&i][rep * sub_len..(rep + 1) * sub_len].to_vec(),
                            )
                        })
                        .collect();
                    outputs.push(scheme_single::server_decode(
                        &x_rep,
                        &y_rep,
                        state,
                        u1,
                        encoder,
                        &self.params,
                    )?);
                }
                rewrite.apply_inverse(&outputs)
            }
        }
    }

    /// The adversarial numeric view used by the security verifier: round-1
    /// messages of every user followed by the round-2 answers of all of u1,
    /// in user order.
    pub fn view_vector(&self, msgs: &MessageSet) -> Vec<FieldElement> {
        let mut v: Vec<FieldElement> = msgs.x.iter().flatten().copied().collect();
        for y in msgs.y.values() {
            v.extend_from_slice(y);
        }
        v
    }

    /// Per-user query symbols for the transcript: (round-1, round-2).
    pub fn query_records(&self) -> (BTreeMap<usize, Vec<u64>>, BTreeMap<usize, Vec<u64>>) {
        match &self.plan {
            SchemePlan::Single { state, .. } => {
                let r1 = (1..=self.params.k())
                    .map(|i| (i, vec![state.query_for(i).value()]))
                    .collect();
                (r1, BTreeMap::new())
            }
            SchemePlan::Multi { retrievals, .. } => {
                let mut r2: BTreeMap<usize, Vec<u64>> = self
                    .schedule
                    .u1()
                    .iter()
                    .map(|&i| (i, Vec::new()))
                    .collect();
                for rp in retrievals {
                    for (&i, q) in &rp.queries {
                        r2.get_mut(&i).expect("survivor entry exists").extend(q.symbols());
                    }
                }
                (BTreeMap::new(), r2)
            }
            SchemePlan::Baseline { states, .. } => {
                let r1 = (1..=self.params.k())
                    .map(|i| {
                        (
                            i,
                            states.iter().map(|s| s.query_for(i).value()).collect(),
                        )
                    })
                    .collect();
                (r1, BTreeMap::new())
            }
        }
    }
}

/// The plaintext value of the demand on the surviving set, the oracle every
/// sealed transcript is checked against.
pub fn plaintext_demand(
    demand: &DemandMatrix,
    u1: &BTreeSet<usize>,
    w_padded: &[Vec<FieldElement>],
) -> Vec<Vec<FieldElement>> {
    let field = demand.matrix().field();
    let len = w_padded[0].len();
    (1..=demand.kc())
        .map(|n| {
            let mut acc = vec![field.zero(); len];
            for &i in u1 {
                acc = vec_add(&acc, &vec_scale(demand.coeff(n, i), &w_padded[i - 1]));
            }
            acc
        })
        .collect()
}

/// One sealed run: transcript, measured rates, and the converse gap.
#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub transcript: Transcript,
    pub rates: RateReport,
    pub gap: Rate,
}

/// Executes one full run under a fixed schedule. The transcript is sealed
/// only if the decoded output equals the plaintext demand and the measured
/// rates respect the converse bound.
#[allow(clippy::too_many_arguments)]
pub fn run_one(
    scheme: SchemeId,
    params: &ProblemParams,
    demand: &DemandMatrix,
    inputs: &InputSet,
    schedule: &DropoutSchedule,
    seed: u64,
    sabotage: Sabotage,
    debug_demand: bool,
) -> Result<ProtocolRun, Error> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let salt: [u8; 16] = rng.random();
    let plan = PlannedRun::new(scheme, params, demand, schedule, sabotage, &mut rng)?;

    let field = params.field();
    let randomness: Vec<FieldElement> = (0..plan.randomness_len())
        .map(|_| field.sample(&mut rng))
        .collect();
    let l_pad = params.padded_len(scheme);
    let w_padded = inputs.padded(l_pad);

    let msgs = plan.messages(&w_padded, &randomness)?;
    let decoded = plan.decode(&msgs)?;

    let expected = plaintext_demand(demand, schedule.u1(), &w_padded);
    for (n, (got, want)) in decoded.iter().zip(&expected).enumerate() {
        if got != want {
            return Err(Error::DecodeMismatch { combination: n + 1 });
        }
    }

    let (round1_queries, round2_queries) = plan.query_records();
    let transcript = Transcript {
        schema_version: SCHEMA_VERSION,
        params: ParamsRecord {
            k: params.k(),
            u: params.u(),
            kc: params.kc(),
            q: params.q(),
            l: params.l(),
            l_padded: l_pad,
            scheme,
        },
        demand_digest: demand.digest(&salt),
        round1_queries,
        u1: schedule.u1().iter().copied().collect(),
        round1_messages: schedule
            .u1()
            .iter()
            .map(|&i| (i, msgs.x[i - 1].iter().map(|e| e.value()).collect()))
            .collect(),
        round2_queries,
        round2_answers: schedule
            .u2()
            .iter()
            .map(|&i| (i, msgs.y[&i].iter().map(|e| e.value()).collect()))
            .collect(),
        u2: schedule.u2().iter().copied().collect(),
        decoded: decoded
            .iter()
            .map(|row| row.iter().map(|e| e.value()).collect())
            .collect(),
        seed,
        demand_debug: debug_demand.then(|| demand.rows_as_values()),
    };

    let rates = compute_rates(&transcript)?;
    let gap = converse_check(&rates)?;
    Ok(ProtocolRun {
        transcript,
        rates,
        gap,
    })
}

/// Full protocol execution under a dropout model: one run per schedule the
/// model produces (one for fixed/random/worst, all of them for exhaustive).
/// Schedule sampling uses a separate RNG stream so every run still sees the
/// seed-determined key material.
pub fn run_protocol(
    scheme: SchemeId,
    params: &ProblemParams,
    demand: &DemandMatrix,
    inputs: &InputSet,
    model: &DropoutModel,
    seed: u64,
) -> Result<Vec<ProtocolRun>, Error> {
    let mut sched_rng = ChaCha20Rng::seed_from_u64(seed);
    sched_rng.set_stream(1);
    let schedules = schedules(model, params, scheme, &mut sched_rng)?;
    schedules
        .iter()
        .map(|s| run_one(scheme, params, demand, inputs, s, seed, Sabotage::None, false))
        .collect()
}

/// Asserts the converse region r1 >= 1, r2 >= kc/u and returns the gap
/// r2 / (kc/u). A violation always signals an accounting bug, never a
/// legitimate outcome.
pub fn converse_check(report: &RateReport) -> Result<Rate, Error> {
    let one = Rate::new(1, 1);
    if report.r1 < one || report.r2 < report.converse_r2 {
        return Err(Error::ConverseViolation {
            r1: report.r1,
            r2: report.r2,
            min_r2: report.converse_r2,
        });
    }
    Ok(report.r2 / report.converse_r2)
}

/// One row of the rate-region comparison: the best known scheme (point A),
/// the repetition baseline (point B), and the converse corner, per kc.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RateRegionPoint {
    pub kc: usize,
    pub u: usize,
    pub scheme: SchemeId,
    pub achievable_r1: Rate,
    pub achievable_r2: Rate,
    pub baseline_r1: Rate,
    pub baseline_r2: Rate,
    pub converse_r1: Rate,
    pub converse_r2: Rate,
    pub gap: Rate,
}

impl RateRegionPoint {
    pub fn csv_header() -> &'static str {
        "schema_version,kc,r1_multi,r2_multi,r1_baseline,r2_baseline,r1_converse,r2_converse,gap"
    }

    pub fn csv_row(&self) -> String {
        fn dec(r: Rate) -> f64 {
            *r.numer() as f64 / *r.denom() as f64
        }
        format!(
            "{},{},{},{},{},{},{},{},{}",
            SCHEMA_VERSION,
            self.kc,
            dec(self.achievable_r1),
            dec(self.achievable_r2),
            dec(self.baseline_r1),
            dec(self.baseline_r2),
            dec(self.converse_r1),
            dec(self.converse_r2),
            dec(self.gap),
        )
    }
}

/// Achievable and converse rate points for every kc in the inclusive range.
/// kc = 1 uses the single-combination scheme as point A; 2 <= kc < u uses the
/// multi-combination scheme; kc >= u is outside every scheme's regime.
pub fn rate_sweep(
    k: usize,
    u: usize,
    kc_min: usize,
    kc_max: usize,
) -> Result<Vec<RateRegionPoint>, Error> {
    if u > k.saturating_sub(1) || u == 0 {
        return Err(Error::Model(crate::model::ModelError::BadSurvivorBound {
            u,
            k,
        }));
    }
    let mut out = Vec::new();
    for kc in kc_min..=kc_max {
        let (scheme, a_r1, a_r2) = if kc == 1 {
            (
                SchemeId::Single,
                Rate::new(1, 1),
                Rate::new(1, u as u64),
            )
        } else if kc < u {
            (
                SchemeId::Multi,
                Rate::new(1, 1),
                Rate::new(kc as u64, (u - 1) as u64),
            )
        } else {
            return Err(Error::Model(crate::model::ModelError::RegimeViolation {
                scheme: SchemeId::Multi,
                kc,
                u,
            }));
        };
        let converse_r2 = Rate::new(kc as u64, u as u64);
        out.push(RateRegionPoint {
            kc,
            u,
            scheme,
            achievable_r1: a_r1,
            achievable_r2: a_r2,
            baseline_r1: Rate::new(kc as u64, 1),
            baseline_r2: converse_r2,
            converse_r1: Rate::new(1, 1),
            converse_r2,
            gap: a_r2 / converse_r2,
        });
    }
    Ok(out)
}

/// Finds the schedule maximizing the per-user round-2 load by measuring the
/// answer sizes of a dry run for every admissible u1 (sizes only above k=12).
/// Both schemes send schedule-independent loads; the boolean flags any
/// measured deviation instead of assuming it.
pub fn adversarial_worst(
    params: &ProblemParams,
    scheme: SchemeId,
) -> Result<(DropoutSchedule, bool), Error> {
    params.require_regime(scheme)?;
    let mut rng = ChaCha20Rng::seed_from_u64(0x5EED);
    let demand = DemandMatrix::sample(params, &mut rng);
    let field = params.field();
    let l_pad = params.padded_len(scheme);
    let w_zero = vec![vec![field.zero(); l_pad]; params.k()];

    let candidates: Vec<BTreeSet<usize>> = if params.k() <= 12 {
        let mut c = Vec::new();
        for mask in 0u32..(1 << params.k()) {
            if (mask.count_ones() as usize) >= params.u() {
                c.push(mask_to_set(mask));
            }
        }
        c
    } else {
        (params.u()..=params.k())
            .map(|m| (1..=m).collect())
            .collect()
    };

    let mut best: Option<(usize, DropoutSchedule)> = None;
    let mut loads = BTreeSet::new();
    for u1 in candidates {
        let schedule = DropoutSchedule::new(u1.clone(), u1, params)?;
        let plan = PlannedRun::new(scheme, params, &demand, &schedule, Sabotage::None, &mut rng)?;
        let r_zero = vec![field.zero(); plan.randomness_len()];
        let msgs = plan.messages(&w_zero, &r_zero)?;
        let load = msgs.y.values().map(Vec::len).max().unwrap_or(0);
        loads.insert(load);
        if best.as_ref().is_none_or(|(b, _)| load > *b) {
            best = Some((load, schedule));
        }
    }
    let (_, schedule) = best.expect("at least one admissible schedule");
    Ok((schedule, loads.len() > 1))
}
