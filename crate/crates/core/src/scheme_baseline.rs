//! Baseline: run the single-combination scheme once per demanded combination,
//! with independent blinding scalars and independent keys, all repetitions
//! sharing one dropout schedule. Exists as the rate comparison point for the
//! multi-combination scheme.
//!
//! The single-combination scheme divides by every demand coefficient, so a
//! demand row containing zeros cannot drive it directly. The baseline first
//! applies an invertible row recombination with all-nonzero entries and
//! undoes it after decoding, which keeps the comparison fair on any valid
//! demand.

use rand::Rng;

use crate::algebra::FieldElement;
use crate::codes::Matrix;
use crate::harness::{run_one, ProtocolRun, Sabotage};
use crate::model::{DemandMatrix, DropoutSchedule, InputSet, ProblemParams, SchemeId};
use crate::Error;

/// Sampling attempts before concluding the field is too small to admit an
/// all-nonzero recombination.
const REWRITE_ATTEMPTS: usize = 10_000;

/// An invertible change of demand basis whose rewritten rows have no zero
/// entries, together with the inverse applied after decoding.
#[derive(Clone, Debug)]
pub struct DemandRewrite {
    mix: Matrix,
    inverse: Matrix,
    rewritten: DemandMatrix,
}

impl DemandRewrite {
    pub fn mix(&self) -> &Matrix {
        &self.mix
    }

    pub fn inverse(&self) -> &Matrix {
        &self.inverse
    }

    /// The all-nonzero demand the repetitions actually run on.
    pub fn rewritten(&self) -> &DemandMatrix {
        &self.rewritten
    }

    pub fn is_identity(&self) -> bool {
        let f = self.mix.field();
        let id = Matrix::identity(self.mix.rows(), f);
        self.mix == id
    }

    /// Maps the decoded outputs of the rewritten demand back to the original
    /// demand: row n of the result is the inverse-matrix combination of the
    /// repetition outputs.
    pub fn apply_inverse(
        &self,
        outputs: &[Vec<FieldElement>],
    ) -> Result<Vec<Vec<FieldElement>>, Error> {
        let kc = self.inverse.rows();
        if outputs.len() != kc {
            return Err(Error::LengthMismatch {
                context: "repetition outputs",
                got: outputs.len(),
                expected: kc,
            });
        }
        let field = self.inverse.field();
        let len = outputs[0].len();
        let mut result = Vec::with_capacity(kc);
        for n in 0..kc {
            let mut row = vec![field.zero(); len];
            for (m, out) in outputs.iter().enumerate() {
                let c = self.inverse.get(n, m);
                if c.is_zero() {
                    continue;
                }
                for (sym, &v) in out.iter().enumerate() {
                    row[sym] = row[sym] + c * v;
                }
            }
            result.push(row);
        }
        Ok(result)
    }
}

/// Finds an invertible kc x kc matrix R such that R * F has no zero entry,
/// by rejection sampling; the identity when F already has none. Every row of
/// R avoids k proper hyperplanes, so a uniform draw succeeds with probability
/// at least 1 - k/q per row and the retry bound only triggers at tiny fields.
pub fn rewrite_demand_for_baseline<R: Rng + ?Sized>(
    demand: &DemandMatrix,
    params: &ProblemParams,
    rng: &mut R,
) -> Result<DemandRewrite, Error> {
    let f = demand.matrix();
    let field = params.field();
    let kc = params.kc();

    let has_zero = (0..f.rows()).any(|r| f.row(r).iter().any(|e| e.is_zero()));
    if !has_zero {
        let id = Matrix::identity(kc, field);
        return Ok(DemandRewrite {
            mix: id.clone(),
            inverse: id,
            rewritten: demand.clone(),
        });
    }

    for _ in 0..REWRITE_ATTEMPTS {
        let entries: Vec<FieldElement> = (0..kc * kc).map(|_| field.sample(rng)).collect();
        let Ok(mix) = Matrix::new(kc, kc, entries) else {
            continue;
        };
        let Ok(inverse) = mix.invert() else {
            continue;
        };
        let candidate = mix.mul(f)?;
        let all_nonzero =
            (0..candidate.rows()).all(|r| candidate.row(r).iter().all(|e| !e.is_zero()));
        if !all_nonzero {
            continue;
        }
        // R is invertible and F full row rank, so R*F stays full row rank and
        // zero-column-free; revalidate anyway to keep the invariant local.
        let rewritten = DemandMatrix::new(candidate, params)?;
        return Ok(DemandRewrite {
            mix,
            inverse,
            rewritten,
        });
    }
    Err(Error::RewriteExhausted {
        attempts: REWRITE_ATTEMPTS,
    })
}

/// One full baseline run under a fixed schedule: kc repetitions with
/// independent blinding scalars and independent keys, decoded per repetition
/// and mapped back through the rewrite. Per-user cost is kc * l symbols in
/// round 1 and kc * l / u in round 2.
pub fn run_baseline(
    params: &ProblemParams,
    demand: &DemandMatrix,
    inputs: &InputSet,
    schedule: &DropoutSchedule,
    seed: u64,
) -> Result<ProtocolRun, Error> {
    run_one(
        SchemeId::Baseline,
        params,
        demand,
        inputs,
        schedule,
        seed,
        Sabotage::None,
        false,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn identity_when_no_zeros() {
        let p = ProblemParams::new(4, 3, 2, 11, 2).unwrap();
        let d = DemandMatrix::from_rows(&[vec![1, 1, 1, 1], vec![1, 2, 3, 4]], &p).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let rw = rewrite_demand_for_baseline(&d, &p, &mut rng).unwrap();
        assert!(rw.is_identity());
        assert_eq!(rw.rewritten().matrix(), d.matrix());
    }

    #[test]
    fn mixes_zero_rows_and_records_inverse() {
        // rows (1,0,..) and (0,1,..) force a real rewrite
        let p = ProblemParams::new(4, 3, 2, 11, 2).unwrap();
        let d = DemandMatrix::from_rows(&[vec![1, 0, 1, 1], vec![0, 1, 2, 3]], &p).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let rw = rewrite_demand_for_baseline(&d, &p, &mut rng).unwrap();
        let g = rw.rewritten().matrix();
        for r in 0..g.rows() {
            assert!(g.row(r).iter().all(|e| !e.is_zero()));
        }
        // inverse * mixed = original
        let back = rw.inverse().mul(g).unwrap();
        assert_eq!(&back, d.matrix());
    }

    #[test]
    fn inverse_applied_to_outputs_recovers_original_combinations() {
        let p = ProblemParams::new(4, 3, 2, 11, 3).unwrap();
        let f = p.field();
        let d = DemandMatrix::from_rows(&[vec![1, 0, 1, 1], vec![0, 1, 2, 3]], &p).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let rw = rewrite_demand_for_baseline(&d, &p, &mut rng).unwrap();

        // plaintext w, compute rewritten-demand outputs, map back, compare
        let w: Vec<Vec<FieldElement>> = (0..4)
            .map(|_| (0..3).map(|_| f.sample(&mut rng)).collect())
            .collect();
        let combo = |m: &Matrix, n: usize| -> Vec<FieldElement> {
            let mut acc = vec![f.zero(); 3];
            for (i, wi) in w.iter().enumerate() {
                for (sym, &v) in wi.iter().enumerate() {
                    acc[sym] = acc[sym] + m.get(n, i) * v;
                }
            }
            acc
        };
        let rewritten_outputs: Vec<Vec<FieldElement>> =
            (0..2).map(|n| combo(rw.rewritten().matrix(), n)).collect();
        let recovered = rw.apply_inverse(&rewritten_outputs).unwrap();
        let expected: Vec<Vec<FieldElement>> = (0..2).map(|n| combo(d.matrix(), n)).collect();
        assert_eq!(recovered, expected);
    }

    #[test]
    fn baseline_run_rates_and_outputs() {
        use rand::SeedableRng;
        let p = ProblemParams::new(4, 3, 2, 11, 6).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let d = DemandMatrix::sample(&p, &mut rng);
        let w = crate::model::InputSet::sample(&p, &mut rng);
        let schedule = DropoutSchedule::full(&p);
        // sealing inside run_one already compares the decode to the
        // plaintext demand of the surviving set
        for seed in 0..50u64 {
            let run = run_baseline(&p, &d, &w, &schedule, seed).unwrap();
            assert_eq!(run.rates.r1, crate::model::Rate::new(2, 1));
            assert_eq!(run.rates.r2, crate::model::Rate::new(2, 3));
        }
    }

    #[test]
    fn exhaustion_at_tiny_field() {
        // q = k = 5 leaves no room for an all-nonzero recombination of rows
        // that hit every coordinate pattern; the bound must trip rather than
        // loop forever. Construct a demand whose column space forces zeros.
        let p = ProblemParams::new(5, 1, 5, 5, 2).unwrap();
        let rows: Vec<Vec<u64>> = (0..5)
            .map(|r| (0..5).map(|c| u64::from(r == c)).collect())
            .collect();
        let d = DemandMatrix::from_rows(&rows, &p).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        // With kc = k = 5 and F = I, R*F = R must itself be all-nonzero and
        // invertible over GF(5); such matrices exist, so this either finds one
        // or proves the retry bound functions. Accept both outcomes but
        // require a definite answer.
        match rewrite_demand_for_baseline(&d, &p, &mut rng) {
            Ok(rw) => {
                let g = rw.rewritten().matrix();
                for r in 0..g.rows() {
                    assert!(g.row(r).iter().all(|e| !e.is_zero()));
                }
            }
            Err(Error::RewriteExhausted { .. }) => {}
            Err(other) => panic!("unexpected error: {other}"),
        }
    }
}
