//! Multi-combination scheme (2 <= kc < u).
//!
//! Keys are replicated at every user and inputs are masked by plain addition
//! in round 1. Each demanded combination of keys is then recovered in round 2
//! by an independent symmetric private-computation retrieval per sub-key
//! block: the server sends each survivor evaluations of query polynomials
//! whose beta-values pin the demanded functional and whose alpha_1-value is a
//! uniform random blind; users answer with a single symbol, masked by a
//! shared-randomness polynomial vanishing at all betas. Any `u` answers
//! reconstruct the degree-(u-1) answer polynomial.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::algebra::{dot, vec_add, vec_scale, vec_sub, FieldElement, Polynomial};
use crate::codes::EvaluationPoints;
use crate::model::{DemandMatrix, ProblemParams, SchemeId};
use crate::Error;

/// Shared mask symbols, one per retrieval instance. Slots are single-use:
/// handing the same slot out twice is rejected, because a reused mask lets
/// the server difference two answer polynomials and learn key combinations
/// beyond its demand.
#[derive(Clone, Debug)]
pub struct MaskPool {
    symbols: Vec<FieldElement>,
    used: Vec<bool>,
}

impl MaskPool {
    pub fn new(symbols: Vec<FieldElement>) -> MaskPool {
        let used = vec![false; symbols.len()];
        MaskPool { symbols, used }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Consumes a slot; a second take of the same slot is an error.
    pub fn take(&mut self, slot: usize) -> Result<FieldElement, Error> {
        if slot >= self.symbols.len() {
            return Err(Error::MaskSlotOutOfRange {
                slot,
                len: self.symbols.len(),
            });
        }
        if self.used[slot] {
            return Err(Error::MaskReused { slot });
        }
        self.used[slot] = true;
        Ok(self.symbols[slot])
    }

    /// Reads a slot without consuming it. Exists only so the harness can
    /// simulate the reused-mask fault that the verifier must catch.
    pub fn peek(&self, slot: usize) -> Result<FieldElement, Error> {
        self.symbols
            .get(slot)
            .copied()
            .ok_or(Error::MaskSlotOutOfRange {
                slot,
                len: self.symbols.len(),
            })
    }
}

/// Key material replicated at every user: all k keys plus the shared mask
/// pool, sized kc * (l_padded / (u-1)) so every retrieval gets a fresh mask.
#[derive(Clone, Debug)]
pub struct MultiKeyMaterial {
    keys: Vec<Vec<FieldElement>>,
    masks: MaskPool,
}

impl MultiKeyMaterial {
    /// Expected flat randomness length: k * l_padded key symbols followed by
    /// the mask pool.
    pub fn symbol_count(params: &ProblemParams) -> usize {
        let l_pad = params.padded_len(SchemeId::Multi);
        params.k() * l_pad + params.kc() * (l_pad / (params.u() - 1))
    }

    pub fn from_symbols(
        params: &ProblemParams,
        flat: &[FieldElement],
    ) -> Result<MultiKeyMaterial, Error> {
        params.require_regime(SchemeId::Multi)?;
        let expected = MultiKeyMaterial::symbol_count(params);
        if flat.len() != expected {
            return Err(Error::LengthMismatch {
                context: "key and mask symbols",
                got: flat.len(),
                expected,
            });
        }
        let l_pad = params.padded_len(SchemeId::Multi);
        let keys = (0..params.k())
            .map(|i| flat[i * l_pad..(i + 1) * l_pad].to_vec())
            .collect();
        let masks = MaskPool::new(flat[params.k() * l_pad..].to_vec());
        Ok(MultiKeyMaterial { keys, masks })
    }

    pub fn generate<R: Rng + ?Sized>(
        params: &ProblemParams,
        rng: &mut R,
    ) -> Result<MultiKeyMaterial, Error> {
        let field = params.field();
        let flat: Vec<FieldElement> = (0..MultiKeyMaterial::symbol_count(params))
            .map(|_| field.sample(rng))
            .collect();
        MultiKeyMaterial::from_symbols(params, &flat)
    }

    pub fn keys(&self) -> &[Vec<FieldElement>] {
        &self.keys
    }

    /// Key of a 1-based user id.
    pub fn key(&self, user: usize) -> &[FieldElement] {
        &self.keys[user - 1]
    }

    /// The package stored by any single user; every user holds the same one.
    pub fn user_package(&self, _user: usize) -> &[Vec<FieldElement>] {
        &self.keys
    }

    pub fn masks(&self) -> &MaskPool {
        &self.masks
    }

    pub fn masks_mut(&mut self) -> &mut MaskPool {
        &mut self.masks
    }
}

/// Round-1 message X_i = W_i + Z_i.
pub fn round1_message(
    w_i: &[FieldElement],
    z_i: &[FieldElement],
) -> Result<Vec<FieldElement>, Error> {
    if w_i.len() != z_i.len() {
        return Err(Error::LengthMismatch {
            context: "round-1 input vs key",
            got: z_i.len(),
            expected: w_i.len(),
        });
    }
    Ok(vec_add(w_i, z_i))
}

/// Coefficient of the random blind in user `i`'s query components and in the
/// mask polynomial: the product over betas of (alpha_i - beta_l)/(alpha_1 -
/// beta_l). Nonzero for every user because alphas and betas are disjoint.
pub fn blind_factor(points: &EvaluationPoints, user: usize) -> FieldElement {
    let a1 = points.alpha(1);
    let ai = points.alpha(user);
    let field = ai.field();
    points.betas().iter().fold(field.one(), |acc, &b| {
        acc * (ai - b) * (a1 - b).inv().expect("alpha_1 differs from every beta")
    })
}

/// Coefficient of the demand functional in component `j` (0-based) of user
/// `i`'s query: the degree-(u-1) Lagrange factor that is 1 at beta_j, 0 at
/// every other beta, and 0 at alpha_1.
pub fn demand_factor(points: &EvaluationPoints, user: usize, j: usize) -> FieldElement {
    let a1 = points.alpha(1);
    let ai = points.alpha(user);
    let bj = points.betas()[j];
    let mut acc = (ai - a1) * (bj - a1).inv().expect("beta_j differs from alpha_1");
    for (l, &b) in points.betas().iter().enumerate() {
        if l == j {
            continue;
        }
        acc = acc * (ai - b) * (bj - b).inv().expect("betas are distinct");
    }
    acc
}

/// One retrieval's query for one user: the evaluations of the u-1 query
/// polynomials at the user's alpha, each a linear functional on the k j-th
/// block symbols. The demanded functional only appears blinded by a uniform
/// random functional, so each component's marginal is uniform.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RetrievalQuery {
    combination: usize,
    block: usize,
    components: Vec<Vec<FieldElement>>,
}

impl RetrievalQuery {
    pub fn combination(&self) -> usize {
        self.combination
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn components(&self) -> &[Vec<FieldElement>] {
        &self.components
    }

    pub fn symbols(&self) -> impl Iterator<Item = u64> + '_ {
        self.components.iter().flatten().map(|e| e.value())
    }
}

/// Builds the per-survivor queries of one retrieval (combination index n,
/// block b): draws u-1 uniform random functionals and combines each with the
/// demand functional through the two interpolation factors. Users outside the
/// surviving set receive nothing.
pub fn build_retrieval_queries<R: Rng + ?Sized>(
    demand_row: &[FieldElement],
    combination: usize,
    block: usize,
    points: &EvaluationPoints,
    u1: &BTreeSet<usize>,
    rng: &mut R,
) -> Result<BTreeMap<usize, RetrievalQuery>, Error> {
    let field = demand_row[0].field();
    let k = demand_row.len();
    let l_prime = points.betas().len();
    let blinds: Vec<Vec<FieldElement>> = (0..l_prime)
        .map(|_| (0..k).map(|_| field.sample(rng)).collect())
        .collect();
    queries_from_blinds(demand_row, combination, block, points, u1, &blinds)
}

/// Deterministic core of the query construction, also used by the
/// enumeration-based privacy verifier and by the planted-leak control.
pub fn queries_from_blinds(
    demand_row: &[FieldElement],
    combination: usize,
    block: usize,
    points: &EvaluationPoints,
    u1: &BTreeSet<usize>,
    blinds: &[Vec<FieldElement>],
) -> Result<BTreeMap<usize, RetrievalQuery>, Error> {
    let l_prime = points.betas().len();
    if blinds.len() != l_prime {
        return Err(Error::LengthMismatch {
            context: "random blind functionals",
            got: blinds.len(),
            expected: l_prime,
        });
    }
    let mut out = BTreeMap::new();
    for &i in u1 {
        let c = blind_factor(points, i);
        let components = (0..l_prime)
            .map(|j| {
                let d = demand_factor(points, i, j);
                vec_add(&vec_scale(c, &blinds[j]), &vec_scale(d, demand_row))
            })
            .collect();
        out.insert(
            i,
            RetrievalQuery {
                combination,
                block,
                components,
            },
        );
    }
    Ok(out)
}

/// User `i`'s one-symbol answer: apply each query component to the j-th
/// symbols of every key's block, then add the mask polynomial evaluated at
/// the user's alpha.
pub fn answer(
    user: usize,
    query: &RetrievalQuery,
    keys: &[Vec<FieldElement>],
    s: FieldElement,
    points: &EvaluationPoints,
) -> Result<FieldElement, Error> {
    let l_prime = points.betas().len();
    let field = s.field();
    let mut acc = field.zero();
    for (j, component) in query.components.iter().enumerate() {
        if component.len() != keys.len() {
            return Err(Error::LengthMismatch {
                context: "query component vs key count",
                got: component.len(),
                expected: keys.len(),
            });
        }
        let column: Vec<FieldElement> = keys
            .iter()
            .map(|z| z[query.block * l_prime + j])
            .collect();
        acc = acc + dot(component, &column);
    }
    Ok(acc + s * blind_factor(points, user))
}

/// The answer polynomial of one retrieval: every survivor's answer is its
/// evaluation at that user's alpha, and its beta-values are the retrieved
/// symbols. Degree is at most u-1, so any u answers determine it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnswerPolynomial {
    zeta: Polynomial,
}

impl AnswerPolynomial {
    /// Interpolates the answers and rejects any set that does not lie on a
    /// polynomial of the expected degree.
    pub fn reconstruct(
        answers: &BTreeMap<usize, FieldElement>,
        points: &EvaluationPoints,
        min_answers: usize,
    ) -> Result<AnswerPolynomial, Error> {
        if answers.len() < min_answers {
            return Err(Error::InsufficientAnswers {
                needed: min_answers,
                got: answers.len(),
            });
        }
        let pts: Vec<(FieldElement, FieldElement)> = answers
            .iter()
            .map(|(&user, &a)| (points.alpha(user), a))
            .collect();
        let zeta = Polynomial::lagrange_interpolate(&pts)?;
        let max_degree = points.betas().len();
        if zeta.degree().is_some_and(|d| d > max_degree) {
            return Err(Error::AnswersInconsistent {
                got: zeta.degree().unwrap(),
                max: max_degree,
            });
        }
        Ok(AnswerPolynomial { zeta })
    }

    pub fn zeta(&self) -> &Polynomial {
        &self.zeta
    }

    /// Reads the retrieved symbols off the betas; the mask polynomial
    /// vanishes there by construction.
    pub fn read_betas(&self, points: &EvaluationPoints) -> Result<Vec<FieldElement>, Error> {
        points
            .betas()
            .iter()
            .map(|&b| self.zeta.eval(b).map_err(Error::from))
            .collect()
    }
}

/// Recovers the u-1 symbols of one retrieved block from at least u answers.
pub fn retrieve(
    answers: &BTreeMap<usize, FieldElement>,
    points: &EvaluationPoints,
    min_answers: usize,
) -> Result<Vec<FieldElement>, Error> {
    AnswerPolynomial::reconstruct(answers, points, min_answers)?.read_betas(points)
}

/// Final decode: for each combination, subtract the retrieved key combination
/// from the matching combination of round-1 messages.
pub fn server_decode(
    x: &BTreeMap<usize, Vec<FieldElement>>,
    key_combinations: &[Vec<FieldElement>],
    demand: &DemandMatrix,
    u1: &BTreeSet<usize>,
    params: &ProblemParams,
) -> Result<Vec<Vec<FieldElement>>, Error> {
    let field = params.field();
    let l_pad = params.padded_len(SchemeId::Multi);
    if key_combinations.len() != params.kc() {
        return Err(Error::MissingBlock {
            combination: key_combinations.len() + 1,
            block: 0,
        });
    }
    let mut out = Vec::with_capacity(params.kc());
    for n in 1..=params.kc() {
        let combo = &key_combinations[n - 1];
        if combo.len() != l_pad {
            return Err(Error::LengthMismatch {
                context: "retrieved key combination",
                got: combo.len(),
                expected: l_pad,
            });
        }
        let mut masked = vec![field.zero(); l_pad];
        for &i in u1 {
            let xi = x.get(&i).ok_or(Error::UserNotSurviving { user: i })?;
            masked = vec_add(&masked, &vec_scale(demand.coeff(n, i), xi));
        }
        out.push(vec_sub(&masked, combo));
    }
    Ok(out)
}
