//! Shared data model: problem parameters, demand matrices, inputs, dropout
//! schedules, run transcripts, and exact rate accounting.
//!
//! Rates are always computed from the symbol counts recorded in a transcript,
//! never from closed-form expressions, so a scheme bug shows up as a rate
//! mismatch instead of being papered over.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::algebra::{AlgebraError, FieldConfig, FieldElement};
use crate::codes::{CodesError, Matrix};

/// Version stamped into every exported transcript, report, and CSV.
pub const SCHEMA_VERSION: u32 = 1;

/// Exact rational rate (symbols sent per input symbol).
pub type Rate = Ratio<u64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Codes(#[from] CodesError),
    #[error("need at least 2 users, got {0}")]
    TooFewUsers(usize),
    #[error("survivor threshold u={u} must satisfy 1 <= u <= k-1 (k={k})")]
    BadSurvivorBound { u: usize, k: usize },
    #[error("demand count kc={kc} must satisfy 1 <= kc <= k (k={k})")]
    BadDemandCount { kc: usize, k: usize },
    #[error("input length must be at least 1")]
    EmptyInput,
    #[error("field size q={q} is below the minimum {min} for this configuration")]
    FieldTooSmall { q: u64, min: u64 },
    #[error("scheme {scheme} does not support kc={kc} with u={u}")]
    RegimeViolation {
        scheme: SchemeId,
        kc: usize,
        u: usize,
    },
    #[error("demand matrix has shape {rows}x{cols}, expected {kc}x{k}")]
    WrongDemandShape {
        rows: usize,
        cols: usize,
        kc: usize,
        k: usize,
    },
    #[error("demand matrix is not full row rank")]
    RankDeficient,
    #[error("demand matrix column {0} is all zero")]
    ZeroColumn(usize),
    #[error("demand entry for user {user} is zero; kc=1 requires nonzero coefficients")]
    ZeroEntryForSingleScheme { user: usize },
    #[error("invalid dropout schedule: {0}")]
    InvalidSchedule(String),
    #[error("input vector for user {user} has length {got}, expected {expected}")]
    WrongInputLength {
        user: usize,
        got: usize,
        expected: usize,
    },
    #[error("incomplete transcript: {0}")]
    IncompleteTranscript(String),
}

/// Which protocol variant a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeId {
    Single,
    Multi,
    Baseline,
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SchemeId::Single => "single",
            SchemeId::Multi => "multi",
            SchemeId::Baseline => "baseline",
        };
        write!(f, "{s}")
    }
}

impl FromStr for SchemeId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(SchemeId::Single),
            "multi" => Ok(SchemeId::Multi),
            "baseline" => Ok(SchemeId::Baseline),
            other => Err(format!("unknown scheme '{other}' (expected single|multi|baseline)")),
        }
    }
}

/// One problem instance: k users, at least u survivors per round, kc demanded
/// linear combinations of length-l inputs over GF(q).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProblemParams {
    k: usize,
    u: usize,
    kc: usize,
    field: FieldConfig,
    l: usize,
}

impl ProblemParams {
    /// Validates the structural assumptions. The field must be prime and
    /// large enough for k distinct encoder points (q >= k); the larger
    /// minimum the multi-combination scheme needs for its retrieval points
    /// is checked when a scheme binds the parameters.
    pub fn new(k: usize, u: usize, kc: usize, q: u64, l: usize) -> Result<Self, ModelError> {
        if k < 2 {
            return Err(ModelError::TooFewUsers(k));
        }
        if u < 1 || u > k - 1 {
            return Err(ModelError::BadSurvivorBound { u, k });
        }
        if kc < 1 || kc > k {
            return Err(ModelError::BadDemandCount { kc, k });
        }
        if l < 1 {
            return Err(ModelError::EmptyInput);
        }
        let field = FieldConfig::new(q)?;
        if q < k as u64 {
            return Err(ModelError::FieldTooSmall { q, min: k as u64 });
        }
        Ok(ProblemParams { k, u, kc, field, l })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn u(&self) -> usize {
        self.u
    }

    pub fn kc(&self) -> usize {
        self.kc
    }

    pub fn field(&self) -> FieldConfig {
        self.field
    }

    pub fn q(&self) -> u64 {
        self.field.modulus()
    }

    /// Unpadded input length.
    pub fn l(&self) -> usize {
        self.l
    }

    /// Sub-key block length of a scheme: u symbols for the single-combination
    /// scheme and the baseline, u-1 for the multi-combination scheme.
    pub fn block_len(&self, scheme: SchemeId) -> usize {
        match scheme {
            SchemeId::Single | SchemeId::Baseline => self.u,
            SchemeId::Multi => self.u - 1,
        }
    }

    /// Input length after zero-padding to a multiple of the scheme's block
    /// length. Rates are reported against this value, with the unpadded
    /// length carried alongside.
    pub fn padded_len(&self, scheme: SchemeId) -> usize {
        let b = self.block_len(scheme);
        self.l.div_ceil(b) * b
    }

    /// Rejects parameter/scheme pairings outside each scheme's regime. The
    /// multi scheme also needs k + u - 1 distinct evaluation points with
    /// nonzero alphas, hence q >= k + u.
    pub fn require_regime(&self, scheme: SchemeId) -> Result<(), ModelError> {
        let ok = match scheme {
            SchemeId::Single => self.kc == 1,
            SchemeId::Multi => self.kc >= 2 && self.kc < self.u,
            SchemeId::Baseline => true,
        };
        if !ok {
            return Err(ModelError::RegimeViolation {
                scheme,
                kc: self.kc,
                u: self.u,
            });
        }
        if scheme == SchemeId::Multi && self.q() < (self.k + self.u) as u64 {
            return Err(ModelError::FieldTooSmall {
                q: self.q(),
                min: (self.k + self.u) as u64,
            });
        }
        Ok(())
    }

    /// Smallest field size accepted for any scheme at (k, u), with one spare
    /// nonzero element. Used as the default when no q is configured.
    pub fn recommended_min_q(k: usize, u: usize) -> u64 {
        (k + u + 1) as u64
    }

    /// Smallest prime >= the recommended minimum.
    pub fn default_q(k: usize, u: usize) -> u64 {
        let mut q = Self::recommended_min_q(k, u);
        while FieldConfig::new(q).is_err() {
            q += 1;
        }
        q
    }
}

/// The server's secret kc x k coefficient matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemandMatrix {
    f: Matrix,
}

impl DemandMatrix {
    /// Validates a candidate coefficient matrix against the structural
    /// assumptions: full row rank, no all-zero column, and (for kc = 1, where
    /// queries divide by each coefficient) no zero entry at all.
    pub fn new(f: Matrix, params: &ProblemParams) -> Result<DemandMatrix, ModelError> {
        if f.rows() != params.kc() || f.cols() != params.k() {
            return Err(ModelError::WrongDemandShape {
                rows: f.rows(),
                cols: f.cols(),
                kc: params.kc(),
                k: params.k(),
            });
        }
        if f.rank() != params.kc() {
            return Err(ModelError::RankDeficient);
        }
        // For kc = 1 a zero entry and an all-zero column coincide; report the
        // sharper error, since queries divide by each coefficient there.
        if params.kc() == 1 {
            for c in 0..f.cols() {
                if f.get(0, c).is_zero() {
                    return Err(ModelError::ZeroEntryForSingleScheme { user: c + 1 });
                }
            }
        }
        for c in 0..f.cols() {
            if (0..f.rows()).all(|r| f.get(r, c).is_zero()) {
                return Err(ModelError::ZeroColumn(c + 1));
            }
        }
        Ok(DemandMatrix { f })
    }

    pub fn from_rows(rows: &[Vec<u64>], params: &ProblemParams) -> Result<DemandMatrix, ModelError> {
        let field = params.field();
        let rows: Vec<Vec<FieldElement>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| field.element(v)).collect())
            .collect();
        DemandMatrix::new(Matrix::from_rows(&rows)?, params)
    }

    /// Draws entries uniformly and rejects until the invariants hold.
    pub fn sample<R: Rng + ?Sized>(params: &ProblemParams, rng: &mut R) -> DemandMatrix {
        let field = params.field();
        loop {
            let entries: Vec<FieldElement> = (0..params.kc() * params.k())
                .map(|_| field.sample(rng))
                .collect();
            let Ok(m) = Matrix::new(params.kc(), params.k(), entries) else {
                continue;
            };
            if let Ok(d) = DemandMatrix::new(m, params) {
                return d;
            }
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.f
    }

    pub fn kc(&self) -> usize {
        self.f.rows()
    }

    pub fn k(&self) -> usize {
        self.f.cols()
    }

    /// Coefficient a_{n,i} for combination n (1-based) and user i (1-based).
    pub fn coeff(&self, n: usize, user: usize) -> FieldElement {
        self.f.get(n - 1, user - 1)
    }

    /// The demand with coefficients of dropped users zeroed: the map actually
    /// being computed once the surviving set is known.
    pub fn restricted_to(&self, u1: &BTreeSet<usize>) -> Matrix {
        let mut m = self.f.clone();
        for c in 0..m.cols() {
            if !u1.contains(&(c + 1)) {
                for r in 0..m.rows() {
                    m.set(r, c, m.field().zero());
                }
            }
        }
        m
    }

    /// Salted SHA-256 of the coefficients. Exported transcripts carry this
    /// digest instead of the matrix so the artifact's own files do not leak
    /// the demand they are meant to protect.
    pub fn digest(&self, salt: &[u8; 16]) -> String {
        let mut hasher = Sha256::new();
        hasher.update(salt);
        hasher.update(self.f.field().modulus().to_le_bytes());
        hasher.update((self.f.rows() as u64).to_le_bytes());
        hasher.update((self.f.cols() as u64).to_le_bytes());
        for r in 0..self.f.rows() {
            for e in self.f.row(r) {
                hasher.update(e.value().to_le_bytes());
            }
        }
        to_hex(&hasher.finalize())
    }

    pub fn rows_as_values(&self) -> Vec<Vec<u64>> {
        (0..self.f.rows())
            .map(|r| self.f.row(r).iter().map(|e| e.value()).collect())
            .collect()
    }
}

fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// The k input vectors, each of unpadded length l.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputSet {
    w: Vec<Vec<FieldElement>>,
}

impl InputSet {
    pub fn new(w: Vec<Vec<FieldElement>>, params: &ProblemParams) -> Result<InputSet, ModelError> {
        if w.len() != params.k() {
            return Err(ModelError::WrongInputLength {
                user: 0,
                got: w.len(),
                expected: params.k(),
            });
        }
        for (i, v) in w.iter().enumerate() {
            if v.len() != params.l() {
                return Err(ModelError::WrongInputLength {
                    user: i + 1,
                    got: v.len(),
                    expected: params.l(),
                });
            }
        }
        Ok(InputSet { w })
    }

    pub fn from_values(values: &[Vec<u64>], params: &ProblemParams) -> Result<InputSet, ModelError> {
        let field = params.field();
        let w = values
            .iter()
            .map(|v| v.iter().map(|&x| field.element(x)).collect())
            .collect();
        InputSet::new(w, params)
    }

    pub fn sample<R: Rng + ?Sized>(params: &ProblemParams, rng: &mut R) -> InputSet {
        let field = params.field();
        InputSet {
            w: (0..params.k())
                .map(|_| (0..params.l()).map(|_| field.sample(rng)).collect())
                .collect(),
        }
    }

    pub fn vectors(&self) -> &[Vec<FieldElement>] {
        &self.w
    }

    /// Zero-padded copies of every input, length `l_padded`.
    pub fn padded(&self, l_padded: usize) -> Vec<Vec<FieldElement>> {
        let field = self.w[0][0].field();
        self.w
            .iter()
            .map(|v| {
                let mut out = v.clone();
                out.resize(l_padded, field.zero());
                out
            })
            .collect()
    }
}

/// Surviving user sets after each round, 1-based ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DropoutSchedule {
    u1: BTreeSet<usize>,
    u2: BTreeSet<usize>,
}

impl DropoutSchedule {
    pub fn new(
        u1: BTreeSet<usize>,
        u2: BTreeSet<usize>,
        params: &ProblemParams,
    ) -> Result<DropoutSchedule, ModelError> {
        if u1.iter().any(|&i| i < 1 || i > params.k()) {
            return Err(ModelError::InvalidSchedule(format!(
                "u1 contains a user id outside 1..={}",
                params.k()
            )));
        }
        if !u2.is_subset(&u1) {
            return Err(ModelError::InvalidSchedule(
                "u2 must be a subset of u1".to_string(),
            ));
        }
        if u1.len() < params.u() {
            return Err(ModelError::InvalidSchedule(format!(
                "|u1|={} is below the survivor threshold u={}",
                u1.len(),
                params.u()
            )));
        }
        if u2.len() < params.u() {
            return Err(ModelError::InvalidSchedule(format!(
                "|u2|={} is below the survivor threshold u={}",
                u2.len(),
                params.u()
            )));
        }
        Ok(DropoutSchedule { u1, u2 })
    }

    /// No dropouts at all.
    pub fn full(params: &ProblemParams) -> DropoutSchedule {
        let all: BTreeSet<usize> = (1..=params.k()).collect();
        DropoutSchedule {
            u1: all.clone(),
            u2: all,
        }
    }

    pub fn u1(&self) -> &BTreeSet<usize> {
        &self.u1
    }

    pub fn u2(&self) -> &BTreeSet<usize> {
        &self.u2
    }
}

/// Parameter block echoed into every transcript.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub k: usize,
    pub u: usize,
    pub kc: usize,
    pub q: u64,
    pub l: usize,
    pub l_padded: usize,
    pub scheme: SchemeId,
}

/// Complete record of one protocol run. Per-user maps are keyed by 1-based
/// user id; symbol vectors hold canonical residues.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub schema_version: u32,
    pub params: ParamsRecord,
    pub demand_digest: String,
    pub round1_queries: BTreeMap<usize, Vec<u64>>,
    pub u1: Vec<usize>,
    pub round1_messages: BTreeMap<usize, Vec<u64>>,
    pub round2_queries: BTreeMap<usize, Vec<u64>>,
    pub round2_answers: BTreeMap<usize, Vec<u64>>,
    pub u2: Vec<usize>,
    pub decoded: Vec<Vec<u64>>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demand_debug: Option<Vec<Vec<u64>>>,
}

impl Transcript {
    /// Stable pretty-printed JSON with a trailing newline; identical inputs
    /// produce identical bytes.
    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("transcript serializes");
        bytes.push(b'\n');
        bytes
    }
}

fn ser_rate<S: Serializer>(r: &Rate, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("Rate", 2)?;
    st.serialize_field("num", r.numer())?;
    st.serialize_field("den", r.denom())?;
    st.end()
}

/// Exact per-round rates measured from a transcript, with the converse corner
/// and the gap ratio attached.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RateReport {
    pub schema_version: u32,
    pub scheme: SchemeId,
    pub k: usize,
    pub u: usize,
    pub kc: usize,
    pub l: usize,
    pub l_padded: usize,
    /// Rates against the padded input length (exact by construction).
    #[serde(serialize_with = "ser_rate")]
    pub r1: Rate,
    #[serde(serialize_with = "ser_rate")]
    pub r2: Rate,
    /// The same symbol counts divided by the unpadded length; differs from
    /// (r1, r2) by the factor l_padded/l whenever padding occurred.
    #[serde(serialize_with = "ser_rate")]
    pub r1_unpadded: Rate,
    #[serde(serialize_with = "ser_rate")]
    pub r2_unpadded: Rate,
    pub padding_applied: bool,
    #[serde(serialize_with = "ser_rate")]
    pub converse_r1: Rate,
    #[serde(serialize_with = "ser_rate")]
    pub converse_r2: Rate,
    /// r2 / converse_r2.
    #[serde(serialize_with = "ser_rate")]
    pub gap: Rate,
}

impl RateReport {
    pub fn csv_header() -> &'static str {
        "schema_version,scheme,k,u,kc,l,l_padded,r1,r2,r1_unpadded,r2_unpadded,converse_r1,converse_r2,gap"
    }

    pub fn csv_row(&self) -> String {
        fn dec(r: Rate) -> f64 {
            *r.numer() as f64 / *r.denom() as f64
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.schema_version,
            self.scheme,
            self.k,
            self.u,
            self.kc,
            self.l,
            self.l_padded,
            dec(self.r1),
            dec(self.r2),
            dec(self.r1_unpadded),
            dec(self.r2_unpadded),
            dec(self.converse_r1),
            dec(self.converse_r2),
            dec(self.gap),
        )
    }
}

/// Exact rates from recorded symbol counts: r1 is the largest round-1 message
/// and r2 the largest round-2 answer, both per (padded) input symbol, for the
/// schedule this transcript records.
pub fn compute_rates(t: &Transcript) -> Result<RateReport, ModelError> {
    if t.round1_messages.is_empty() {
        return Err(ModelError::IncompleteTranscript(
            "no round-1 messages recorded".to_string(),
        ));
    }
    if t.round2_answers.is_empty() {
        return Err(ModelError::IncompleteTranscript(
            "no round-2 answers recorded".to_string(),
        ));
    }
    if t.decoded.len() != t.params.kc {
        return Err(ModelError::IncompleteTranscript(format!(
            "decoded {} combinations, expected {}",
            t.decoded.len(),
            t.params.kc
        )));
    }
    let x_max = t.round1_messages.values().map(Vec::len).max().unwrap() as u64;
    let y_max = t.round2_answers.values().map(Vec::len).max().unwrap() as u64;
    let lp = t.params.l_padded as u64;
    let l = t.params.l as u64;
    let r1 = Rate::new(x_max, lp);
    let r2 = Rate::new(y_max, lp);
    let converse_r1 = Rate::new(1, 1);
    let converse_r2 = Rate::new(t.params.kc as u64, t.params.u as u64);
    Ok(RateReport {
        schema_version: SCHEMA_VERSION,
        scheme: t.params.scheme,
        k: t.params.k,
        u: t.params.u,
        kc: t.params.kc,
        l: t.params.l,
        l_padded: t.params.l_padded,
        r1,
        r2,
        r1_unpadded: Rate::new(x_max, l),
        r2_unpadded: Rate::new(y_max, l),
        padding_applied: t.params.l_padded != t.params.l,
        converse_r1,
        converse_r2,
        gap: r2 / converse_r2,
    })
}
