//! Seeded random instance generators for the verification suites. Each
//! instance derives its own ChaCha stream from (seed, index), so suites are
//! order-independent and safe to parallelize.

use mmcap_core::model::{Codebook, Dmc, InputDistribution, Metric};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

pub fn random_pmf(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= total;
    }
    v
}

pub fn random_dmc(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize) -> Dmc {
    let rows = (0..inputs).map(|_| random_pmf(rng, outputs)).collect();
    Dmc::new(rows).expect("random rows are stochastic")
}

/// Additive metric; occasionally small-integer valued so the integer-lattice
/// tail paths get exercised alongside generic real tables.
pub fn random_additive_metric(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize) -> Metric {
    let integer = rng.gen_bool(1.0 / 3.0);
    let table: Vec<Vec<f64>> = (0..inputs)
        .map(|_| {
            (0..outputs)
                .map(|_| {
                    if integer {
                        rng.gen_range(0..=2) as f64
                    } else {
                        rng.gen_range(-1.0..1.0)
                    }
                })
                .collect()
        })
        .collect();
    Metric::additive(table).expect("finite table")
}

pub fn random_nonnegative_metric(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize) -> Metric {
    let table: Vec<Vec<f64>> = (0..inputs)
        .map(|_| {
            (0..outputs)
                .map(|_| {
                    // zeros appear often enough to exercise the vanishing
                    // branch of the pointwise bound
                    if rng.gen_bool(0.2) {
                        0.0
                    } else {
                        rng.gen_range(0.0..2.0)
                    }
                })
                .collect()
        })
        .collect();
    Metric::additive(table).expect("finite table")
}

pub fn random_explicit_metric(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize, n: usize) -> Metric {
    let len = inputs.pow(n as u32) * outputs.pow(n as u32);
    let table: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Metric::explicit(n, inputs, outputs, table).expect("finite table")
}

pub fn random_codebook(rng: &mut ChaCha8Rng, m: usize, n: usize, inputs: usize) -> Codebook {
    let words = (0..m)
        .map(|_| (0..n).map(|_| rng.gen_range(0..inputs)).collect())
        .collect();
    Codebook::new(n, words).expect("nonempty")
}

/// A codebook whose word multiset is closed under the binary complement;
/// relabeling the channel inputs then leaves the output marginal unchanged.
pub fn complement_closed_codebook(rng: &mut ChaCha8Rng, pairs: usize, n: usize) -> Codebook {
    let mut words = Vec::with_capacity(2 * pairs);
    for _ in 0..pairs {
        let w: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2usize)).collect();
        let flip: Vec<usize> = w.iter().map(|&b| 1 - b).collect();
        words.push(w);
        words.push(flip);
    }
    Codebook::new(n, words).expect("nonempty")
}

pub fn random_input_distribution(
    rng: &mut ChaCha8Rng,
    n: usize,
    inputs: usize,
) -> InputDistribution {
    match rng.gen_range(0..3) {
        0 => InputDistribution::iid(n, random_pmf(rng, inputs)).expect("valid pmf"),
        1 => {
            let total = inputs.pow(n as u32);
            InputDistribution::dense(n, inputs, random_pmf(rng, total)).expect("valid pmf")
        }
        _ => {
            // random composition of n over the alphabet
            let mut comp = vec![0usize; inputs];
            for _ in 0..n {
                comp[rng.gen_range(0..inputs)] += 1;
            }
            InputDistribution::uniform_type(comp).expect("positive length")
        }
    }
}

/// A threshold that is usually an achieved metric value (exercising ties)
/// and otherwise a uniform point of the value range.
pub fn random_tau(rng: &mut ChaCha8Rng, q: &Metric, cb: &Codebook, outputs: usize) -> f64 {
    let n = cb.n();
    let random_y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..outputs)).collect();
    let word = cb.word(rng.gen_range(0..cb.size()));
    let achieved = q.value(word, &random_y);
    if rng.gen_bool(0.5) {
        achieved
    } else {
        achieved + rng.gen_range(-0.5..0.5)
    }
}
