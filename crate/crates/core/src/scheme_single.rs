//! Single-combination scheme (kc = 1).
//!
//! The server blinds its demand row with a uniform nonzero scalar `t` and
//! sends each user the query 1/(t * a_i). Users mask inputs additively with
//! their key scaled by the query; keys are MDS-shared offline so that round 2
//! can recover the aggregate key of the surviving set from any `u` answers.
//! Round 2 needs no queries at all.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::algebra::{vec_add, vec_scale, FieldElement};
use crate::codes::{mds_encode, rs_erasure_decode, vandermonde, Matrix};
use crate::model::{DemandMatrix, ProblemParams, SchemeId};
use crate::Error;

/// The server's round-1 query state: the blinding scalar and one query per
/// user. Invariant: q1[i] * t * a_i = 1 for every user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SingleQueryState {
    t: FieldElement,
    q1: Vec<FieldElement>,
}

impl SingleQueryState {
    pub fn t(&self) -> FieldElement {
        self.t
    }

    /// Query for a 1-based user id.
    pub fn query_for(&self, user: usize) -> FieldElement {
        self.q1[user - 1]
    }

    pub fn queries(&self) -> &[FieldElement] {
        &self.q1
    }
}

/// Draws t uniformly from the nonzero elements and derives the per-user
/// queries 1/(t * a_i). Each query is a multiplicative blinding of the
/// demand coefficient, so its marginal is uniform regardless of the demand.
pub fn gen_queries<R: Rng + ?Sized>(
    demand: &DemandMatrix,
    params: &ProblemParams,
    rng: &mut R,
) -> Result<SingleQueryState, Error> {
    params.require_regime(SchemeId::Single)?;
    let row: Vec<FieldElement> = (1..=params.k()).map(|i| demand.coeff(1, i)).collect();
    let t = params.field().sample_nonzero(rng);
    queries_for_t(&row, t)
}

/// Deterministic core, also driven row-by-row by the baseline and by the
/// enumerating verifiers.
pub fn queries_for_t(
    demand_row: &[FieldElement],
    t: FieldElement,
) -> Result<SingleQueryState, Error> {
    let mut q1 = Vec::with_capacity(demand_row.len());
    for (idx, &a) in demand_row.iter().enumerate() {
        if a.is_zero() {
            return Err(Error::ZeroCoefficient { user: idx + 1 });
        }
        q1.push((t * a).inv()?);
    }
    Ok(SingleQueryState { t, q1 })
}

/// The public u x k encoder all key sharing goes through: a Vandermonde
/// matrix over the points 1..=k (reduced mod q, distinct whenever q >= k).
pub fn encoder_matrix(params: &ProblemParams) -> Result<Matrix, Error> {
    let field = params.field();
    let points: Vec<FieldElement> = (1..=params.k() as u64).map(|v| field.element(v)).collect();
    Ok(vandermonde(params.u(), &points)?)
}

/// Offline key material for all users: user i stores its own key Z_i plus the
/// coded share of every other user's key destined for position i.
///
/// The user's own coded share is not stored; it is computable from Z_i and
/// column i of the encoder, and [`SingleKeyMaterial::own_share`] does exactly
/// that on demand.
#[derive(Clone, Debug)]
pub struct SingleKeyMaterial {
    u: usize,
    sub_len: usize,
    keys: Vec<Vec<FieldElement>>,
    /// shares[i-1][j] = coded share of user j's key held by user i (j != i).
    shares: Vec<BTreeMap<usize, Vec<FieldElement>>>,
}

impl SingleKeyMaterial {
    /// Builds the material from a flat list of k * l_padded uniform symbols
    /// (key of user 1 first). The flat layout is what lets the verifier treat
    /// a whole run as an affine function of its randomness.
    pub fn from_key_symbols(
        params: &ProblemParams,
        encoder: &Matrix,
        flat: &[FieldElement],
    ) -> Result<SingleKeyMaterial, Error> {
        let l_pad = params.padded_len(SchemeId::Single);
        let k = params.k();
        let u = params.u();
        if flat.len() != k * l_pad {
            return Err(Error::LengthMismatch {
                context: "key symbols",
                got: flat.len(),
                expected: k * l_pad,
            });
        }
        let sub_len = l_pad / u;
        let keys: Vec<Vec<FieldElement>> = (0..k)
            .map(|i| flat[i * l_pad..(i + 1) * l_pad].to_vec())
            .collect();
        let mut shares = vec![BTreeMap::new(); k];
        for (owner0, key) in keys.iter().enumerate() {
            let subkeys = split_subkeys(key, u);
            let coded = mds_encode(&subkeys, encoder)?;
            for holder0 in 0..k {
                if holder0 == owner0 {
                    continue;
                }
                shares[holder0].insert(owner0 + 1, coded[holder0].clone());
            }
        }
        Ok(SingleKeyMaterial {
            u,
            sub_len,
            keys,
            shares,
        })
    }

    /// Uniform i.i.d. keys.
    pub fn generate<R: Rng + ?Sized>(
        params: &ProblemParams,
        encoder: &Matrix,
        rng: &mut R,
    ) -> Result<SingleKeyMaterial, Error> {
        let field = params.field();
        let n = params.k() * params.padded_len(SchemeId::Single);
        let flat: Vec<FieldElement> = (0..n).map(|_| field.sample(rng)).collect();
        SingleKeyMaterial::from_key_symbols(params, encoder, &flat)
    }

    /// Own key of a 1-based user id.
    pub fn key(&self, user: usize) -> &[FieldElement] {
        &self.keys[user - 1]
    }

    /// Stored coded share of `owner`'s key held by `holder` (owner != holder).
    pub fn stored_share(&self, holder: usize, owner: usize) -> Option<&[FieldElement]> {
        self.shares[holder - 1].get(&owner).map(|v| v.as_slice())
    }

    /// The share of the user's own key for its own column, computed from the
    /// stored key and the public encoder.
    pub fn own_share(&self, user: usize, encoder: &Matrix) -> Result<Vec<FieldElement>, Error> {
        let subkeys = split_subkeys(&self.keys[user - 1], self.u);
        let col = encoder.column(user - 1);
        let field = encoder.field();
        let mut share = vec![field.zero(); self.sub_len];
        for (m, subkey) in subkeys.iter().enumerate() {
            for (sym, &s) in subkey.iter().enumerate() {
                share[sym] = share[sym] + col[m] * s;
            }
        }
        Ok(share)
    }

    pub fn sub_len(&self) -> usize {
        self.sub_len
    }
}

fn split_subkeys(key: &[FieldElement], u: usize) -> Vec<Vec<FieldElement>> {
    let sub_len = key.len() / u;
    (0..u)
        .map(|m| key[m * sub_len..(m + 1) * sub_len].to_vec())
        .collect()
}

/// Round-1 message X_i = W_i + Q_i * Z_i, componentwise.
pub fn round1_message(
    w_i: &[FieldElement],
    q1_i: FieldElement,
    z_i: &[FieldElement],
) -> Result<Vec<FieldElement>, Error> {
    if w_i.len() != z_i.len() {
        return Err(Error::LengthMismatch {
            context: "round-1 input vs key",
            got: z_i.len(),
            expected: w_i.len(),
        });
    }
    Ok(vec_add(w_i, &vec_scale(q1_i, z_i)))
}

/// Round-2 answer of user j: the column-j coded share of the aggregate key
/// of the surviving set, i.e. the sum of the stored (or self-computed) shares
/// of every survivor's key.
pub fn round2_message(
    user: usize,
    u1: &BTreeSet<usize>,
    material: &SingleKeyMaterial,
    encoder: &Matrix,
) -> Result<Vec<FieldElement>, Error> {
    if !u1.contains(&user) {
        return Err(Error::UserNotSurviving { user });
    }
    let field = encoder.field();
    let mut acc = vec![field.zero(); material.sub_len()];
    for &owner in u1 {
        let share = if owner == user {
            material.own_share(user, encoder)?
        } else {
            material
                .stored_share(user, owner)
                .ok_or(Error::UserNotSurviving { user: owner })?
                .to_vec()
        };
        acc = vec_add(&acc, &share);
    }
    Ok(acc)
}

/// Server decode: recover the aggregate key from any u coded answers, strip
/// it from the query-weighted sum of round-1 messages, and unblind by 1/t.
pub fn server_decode(
    x: &BTreeMap<usize, Vec<FieldElement>>,
    y: &BTreeMap<usize, Vec<FieldElement>>,
    state: &SingleQueryState,
    u1: &BTreeSet<usize>,
    encoder: &Matrix,
    params: &ProblemParams,
) -> Result<Vec<FieldElement>, Error> {
    let field = params.field();
    let l_pad = params.padded_len(SchemeId::Single);
    if y.len() < params.u() {
        return Err(Error::InsufficientAnswers {
            needed: params.u(),
            got: y.len(),
        });
    }

    // Query-weighted sum over the surviving set:
    // sum_i X_i / Q_i = sum_i W_i / Q_i + sum_i Z_i.
    let mut weighted = vec![field.zero(); l_pad];
    for &i in u1 {
        let xi = x
            .get(&i)
            .ok_or(Error::UserNotSurviving { user: i })?;
        if xi.len() != l_pad {
            return Err(Error::LengthMismatch {
                context: "round-1 message",
                got: xi.len(),
                expected: l_pad,
            });
        }
        let inv_q = state.query_for(i).inv()?;
        weighted = vec_add(&weighted, &vec_scale(inv_q, xi));
    }

    // Aggregate key from the coded answers.
    let shares: Vec<(usize, Vec<FieldElement>)> = y
        .iter()
        .map(|(&user, share)| (user - 1, share.clone()))
        .collect();
    let subkeys = rs_erasure_decode(&shares, encoder)?;
    let aggregate_key: Vec<FieldElement> = subkeys.concat();
    if aggregate_key.len() != l_pad {
        return Err(Error::LengthMismatch {
            context: "recovered aggregate key",
            got: aggregate_key.len(),
            expected: l_pad,
        });
    }

    // t * sum a_i W_i = sum W_i / Q_i, so unblind with 1/t.
    let masked = crate::algebra::vec_sub(&weighted, &aggregate_key);
    Ok(vec_scale(state.t().inv()?, &masked))
}
