use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::doc::{MonomialRecord, SystemDoc};
use crate::derivation::DegreeReading;
use crate::error::{Error, Result};

/// Exponent vectors `(tExp, pExp...)` over `1 + q` variables with total
/// degree at most `d`, in a fixed order.
fn exponent_vectors(q: usize, d: u32) -> Vec<Vec<u32>> {
    fn go(var: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if var == cur.len() {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur[var] = e;
            go(var + 1, left - e, cur, out);
        }
        cur[var] = 0;
    }
    let mut out = Vec::new();
    go(0, d, &mut vec![0; q + 1], &mut out);
    out
}

/// A random system: every monomial of joint degree at most `d` gets an
/// independent uniform coefficient in `[-M, M]`; zeros are omitted.
pub fn gen_random(n: usize, d: u32, m: u64, q: usize, seed: u64) -> Result<SystemDoc> {
    if n == 0 {
        return Err(Error::usage("n must be at least 1"));
    }
    if m == 0 {
        return Err(Error::usage("M must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exps = exponent_vectors(q, d);
    let bound = m as i64;
    let matrix = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    exps.iter()
                        .filter_map(|e| {
                            let c = rng.gen_range(-bound..=bound);
                            (c != 0).then(|| MonomialRecord {
                                t_exp: e[0],
                                p_exp: e[1..].to_vec(),
                                coeff: BigInt::from(c),
                            })
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(SystemDoc {
        n,
        q,
        degree: d,
        matrix,
        name: Some(format!("random-n{n}-d{d}-M{m}-q{q}")),
        seed: Some(seed),
        degree_reading: DegreeReading::Joint,
        division_probes: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_in_seed() {
        let a = gen_random(2, 1, 1, 1, 7).unwrap();
        let b = gen_random(2, 1, 1, 1, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.render(), b.render());
        let c = gen_random(3, 2, 5, 1, 8).unwrap();
        assert_ne!(c, gen_random(3, 2, 5, 1, 9).unwrap());
    }

    #[test]
    fn generated_documents_parse() {
        for seed in 0..20 {
            let doc = gen_random(1 + seed as usize % 4, (seed % 3) as u32, 1 + seed % 5, 1 + seed as usize % 2, seed).unwrap();
            let again = SystemDoc::parse(doc.render().as_bytes()).unwrap();
            assert_eq!(doc, again);
            let sys = again.to_linsys().unwrap();
            assert!(sys.max_coeff() <= &BigInt::from(1 + seed % 5));
        }
    }

    #[test]
    fn monomial_enumeration() {
        assert_eq!(exponent_vectors(1, 1).len(), 3);
        assert_eq!(exponent_vectors(2, 2).len(), 10);
        assert_eq!(exponent_vectors(0, 3).len(), 4);
    }
}
