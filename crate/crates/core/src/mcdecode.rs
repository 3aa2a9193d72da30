//! Random codebooks, Monte Carlo decoding runs, exact maximal error
//! probability, and the expurgation inequality check.
//!
//! Simulation shares the decoder semantics of [`crate::exactprob`]: metric
//! comparisons are exact (no tolerance) and any tie at the top is an error,
//! so a long run converges to the same quantity `exact_pe` enumerates.

use crate::exactprob::{self, DecodeRule, IdentityReport, Relation};
use crate::model::{Codebook, Dmc, InputDistribution, Metric, NLetterChannel};
use crate::spectrum::{draw_word, trial_rng};
use crate::util::wilson_ci95;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest ensemble size enumerated exactly by [`check_expurgation`].
pub const MAX_ENSEMBLE_ENUM: u128 = 100_000;

/// Outcome of a Monte Carlo error-probability run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimResult {
    pub estimate: f64,
    pub trials: usize,
    pub wilson_ci95: (f64, f64),
    pub seed: u64,
}

/// M words drawn independently from P. The draw is sequential from a single
/// seeded stream, so a codebook is a pure function of (P, M, n, seed).
pub fn random_codebook(
    p: &InputDistribution,
    m: usize,
    n: usize,
    seed: u64,
) -> Result<Codebook> {
    if p.n() != n {
        return Err(Error::Dimension(format!(
            "input distribution is over length {}, requested n = {n}",
            p.n()
        )));
    }
    if m == 0 {
        return Err(Error::Dimension("codebook needs at least one word".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words: Vec<Vec<usize>> = (0..m).map(|_| draw_word(p, &mut rng)).collect();
    Codebook::new(n, words)
}

fn check_sim_instance(w: &Dmc, cb: &Codebook, q: &Metric) -> Result<()> {
    if cb.max_symbol() >= w.num_inputs() {
        return Err(Error::Dimension(format!(
            "codebook symbol {} outside channel input alphabet of size {}",
            cb.max_symbol(),
            w.num_inputs()
        )));
    }
    if q.base_inputs() != w.num_inputs() || q.base_outputs() != w.num_outputs() {
        return Err(Error::Dimension(
            "metric alphabet does not match the channel".into(),
        ));
    }
    if !q.is_additive() && q.native_n() != cb.n() {
        return Err(Error::Dimension(format!(
            "explicit metric is over length {}, codebook over {}",
            q.native_n(),
            cb.n()
        )));
    }
    Ok(())
}

/// Per-trial decoding outcomes (true = error): each trial draws a uniform
/// message, pushes its codeword through the memoryless channel and runs the
/// decoder. Trials use counter-based substreams, so outcomes are
/// reproducible and independent of the worker count.
pub fn simulate_trials(
    w: &Dmc,
    cb: &Codebook,
    q: &Metric,
    trials: usize,
    seed: u64,
    rule: DecodeRule,
) -> Result<Vec<bool>> {
    check_sim_instance(w, cb, q)?;
    if trials == 0 {
        return Err(Error::Dimension("need at least one trial".into()));
    }
    let m = cb.size();
    Ok((0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let sent = rng.gen_range(0..m);
            let xs = cb.word(sent);
            let y: Vec<usize> = xs
                .iter()
                .map(|&xi| sample_row(&mut rng, w.row(xi)))
                .collect();
            let own = q.value(xs, &y);
            match rule {
                DecodeRule::MaxMetric => {
                    (0..m).any(|o| o != sent && q.value(cb.word(o), &y) >= own)
                }
                DecodeRule::Threshold { tau } => {
                    own < tau || (0..m).any(|o| o != sent && q.value(cb.word(o), &y) >= tau)
                }
            }
        })
        .collect())
}

/// Monte Carlo estimate of the average error probability.
pub fn simulate_pe(
    w: &Dmc,
    cb: &Codebook,
    q: &Metric,
    trials: usize,
    seed: u64,
    rule: DecodeRule,
) -> Result<SimResult> {
    let errors = simulate_trials(w, cb, q, trials, seed, rule)?
        .into_iter()
        .filter(|&e| e)
        .count();
    Ok(SimResult {
        estimate: errors as f64 / trials as f64,
        trials,
        wilson_ci95: wilson_ci95(errors as u64, trials as u64),
        seed,
    })
}

fn sample_row(rng: &mut ChaCha8Rng, row: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    row.len() - 1
}

/// Worst conditional error probability over the messages, exact.
pub fn p_max_exact(wn: &NLetterChannel, cb: &Codebook, q: &Metric) -> Result<f64> {
    let per = exactprob::per_message_error_probs(wn, cb, q, DecodeRule::MaxMetric)?;
    Ok(per.into_iter().fold(0.0, f64::max))
}

/// How the ensemble average on the left side is evaluated.
#[derive(Debug, Clone, Copy)]
pub enum EnsembleEval {
    /// Enumerate every way of drawing the small codebook, weight by its
    /// multiplicity. Only allowed while M^M_eps stays enumerable.
    Exact,
    /// Monte Carlo over the ensemble; the check then compares the upper
    /// Wilson confidence limit against the right side.
    Sampled { trials: usize, seed: u64 },
}

/// Expurgation inequality: drawing M_eps = 2^{n(R-eps)} codewords uniformly
/// (with replacement) from a codebook of M = 2^{nR} distinct words, the
/// ensemble average error is at most P_max of the mother code plus
/// delta = (M_eps - 1) / (2 M), which is the exact rational value of
/// (2^{-n eps} - 2^{-n R}) / 2.
pub fn check_expurgation(
    wn: &NLetterChannel,
    cb: &Codebook,
    q: &Metric,
    eps: f64,
    eval: EnsembleEval,
) -> Result<IdentityReport> {
    if cb.has_duplicates() {
        return Err(Error::Precondition(
            "expurgation bound requires distinct codewords".into(),
        ));
    }
    let m = cb.size();
    let n = cb.n() as f64;
    // R = log2(M)/n; M_eps = M * 2^{-n*eps} must land on an integer >= 1
    let m_eps_real = m as f64 * (-n * eps).exp2();
    let m_eps = m_eps_real.round();
    if (m_eps_real - m_eps).abs() > 1e-9 * m_eps_real.max(1.0) || m_eps < 1.0 {
        return Err(Error::Domain(format!(
            "eps = {eps} gives ensemble size {m_eps_real}, not a positive integer"
        )));
    }
    let m_eps = m_eps as usize;
    if m_eps > m {
        return Err(Error::Domain(format!(
            "eps = {eps} is negative enough to ask for {m_eps} > {m} codewords"
        )));
    }
    let delta = (m_eps as f64 - 1.0) / (2.0 * m as f64);
    let rhs = p_max_exact(wn, cb, q)? + delta;

    let lhs_exact = |draw: &[usize]| -> Result<f64> {
        let words: Vec<Vec<usize>> = draw.iter().map(|&i| cb.word(i).to_vec()).collect();
        let small = Codebook::new(cb.n(), words)?;
        exactprob::exact_pe(wn, &small, q, DecodeRule::MaxMetric)
    };

    match eval {
        EnsembleEval::Exact => {
            let total = (m as u128).checked_pow(m_eps as u32).ok_or(Error::TooLarge {
                size: usize::MAX,
                cap: MAX_ENSEMBLE_ENUM as usize,
            })?;
            if total > MAX_ENSEMBLE_ENUM {
                return Err(Error::TooLarge {
                    size: total.min(usize::MAX as u128) as usize,
                    cap: MAX_ENSEMBLE_ENUM as usize,
                });
            }
            let mut sum = 0.0;
            let mut draw = vec![0usize; m_eps];
            loop {
                sum += lhs_exact(&draw)?;
                // odometer over [m]^{m_eps}
                let mut pos = 0;
                loop {
                    if pos == m_eps {
                        break;
                    }
                    draw[pos] += 1;
                    if draw[pos] < m {
                        break;
                    }
                    draw[pos] = 0;
                    pos += 1;
                }
                if pos == m_eps {
                    break;
                }
            }
            let lhs = sum / total as f64;
            Ok(IdentityReport::new(lhs, rhs, 1e-12, Relation::LessEq))
        }
        EnsembleEval::Sampled { trials, seed } => {
            if trials == 0 {
                return Err(Error::Dimension("need at least one trial".into()));
            }
            let pes: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(seed, t);
                    let draw: Vec<usize> =
                        (0..m_eps).map(|_| rng.gen_range(0..m)).collect();
                    lhs_exact(&draw)
                })
                .collect::<Result<_>>()?;
            let mean = pes.iter().sum::<f64>() / trials as f64;
            // conservative upper confidence limit for a bounded mean: treat
            // each trial's pe as a Bernoulli success weight
            let half = 1.959963984540054
                * (pes.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
                    / (trials.max(2) as f64 - 1.0)
                    / trials as f64)
                    .sqrt();
            Ok(IdentityReport::new(mean + half, rhs, 0.0, Relation::LessEq))
        }
    }
}
