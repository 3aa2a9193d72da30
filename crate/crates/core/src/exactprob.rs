//! Exact error probabilities for max-metric and threshold decoders, and the
//! finite-blocklength identities and bounds connecting them to the tail
//! quantity `phi`.
//!
//! Everything here enumerates: channels are n-letter tables, codebooks are
//! explicit, and all probabilities come out as float sums over a fixed
//! lexicographic order, so a report is reproducible bit for bit.

use crate::model::{
    Codebook, DistForm, InputDistribution, Metric, NLetterChannel, DEFAULT_ENTRY_CAP,
};
use crate::util::index_to_word;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// How two report sides are supposed to relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// |lhs - rhs| <= tolerance
    Equal,
    /// lhs >= rhs - tolerance
    GreaterEq,
    /// lhs <= rhs + tolerance
    LessEq,
}

/// Outcome of one identity or bound check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_diff: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub passed: bool,
    /// SHA-256 of the instance inputs; attached by callers that serialize
    /// the instance (the CLI does).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance_digest: Option<String>,
}

impl IdentityReport {
    pub fn new(lhs: f64, rhs: f64, tolerance: f64, relation: Relation) -> Self {
        let passed = match relation {
            Relation::Equal => (lhs - rhs).abs() <= tolerance,
            Relation::GreaterEq => lhs >= rhs - tolerance,
            Relation::LessEq => lhs <= rhs + tolerance,
        };
        IdentityReport {
            lhs,
            rhs,
            abs_diff: (lhs - rhs).abs(),
            tolerance,
            relation,
            passed,
            instance_digest: None,
        }
    }

    pub fn with_digest(mut self, digest: String) -> Self {
        self.instance_digest = Some(digest);
        self
    }
}

/// Decoder under test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum DecodeRule {
    /// Largest metric wins; any tie for the top is an error.
    MaxMetric,
    /// Output m iff its metric clears tau and every other message falls
    /// short; anything else (no qualifier, several qualifiers) is an error.
    Threshold { tau: f64 },
}

/// phi(c, mu, y): mu-mass of input words whose metric against y is >= c.
/// The comparison is exact (no tolerance); c enters the lattice-based iid
/// path through the documented 1e-9 snap.
pub fn phi(c: f64, mu: &InputDistribution, y: &[usize], q: &Metric) -> Result<f64> {
    if mu.n() != y.len() {
        return Err(Error::Dimension(format!(
            "mu is over length {}, y has length {}",
            mu.n(),
            y.len()
        )));
    }
    if !q.is_additive() && q.native_n() != y.len() {
        return Err(Error::Dimension("explicit metric length != n".into()));
    }
    match mu.form() {
        DistForm::UniformCodebook(cb) => {
            // occurrences, not distinct words: the uniform codebook measure
            // weights each index 1/M, and phi > 1/M must reduce to exact
            // occurrence counting
            let hits = cb.words().iter().filter(|w| q.value(w, y) >= c).count();
            Ok(hits as f64 / cb.size() as f64)
        }
        DistForm::Iid(pmf) if q.is_additive() => {
            // exact lattice convolution when the metric embeds; otherwise
            // fall back to enumerating the product support
            match crate::spectrum::tail_product_exact(q, pmf, y, c) {
                Err(Error::NoLattice { .. }) => phi_by_support(c, mu, y, q),
                other => other,
            }
        }
        _ => phi_by_support(c, mu, y, q),
    }
}

fn phi_by_support(c: f64, mu: &InputDistribution, y: &[usize], q: &Metric) -> Result<f64> {
    let support = mu.support(DEFAULT_ENTRY_CAP)?;
    Ok(support
        .iter()
        .filter(|(w, _)| q.value(w, y) >= c)
        .map(|(_, p)| p)
        .sum())
}

fn check_instance(wn: &NLetterChannel, cb: &Codebook, q: &Metric) -> Result<()> {
    if cb.n() != wn.n() {
        return Err(Error::Dimension("codebook length != channel length".into()));
    }
    if cb.size() == 0 {
        return Err(Error::Domain("empty codebook".into()));
    }
    if cb.max_symbol() >= wn.base_inputs() {
        return Err(Error::Dimension(
            "codebook symbol outside channel input alphabet".into(),
        ));
    }
    if !q.is_additive() && q.native_n() != wn.n() {
        return Err(Error::Dimension("explicit metric length != n".into()));
    }
    Ok(())
}

/// Per-message error probabilities of the decoder, by full enumeration of
/// the output space.
pub fn per_message_error_probs(
    wn: &NLetterChannel,
    cb: &Codebook,
    q: &Metric,
    rule: DecodeRule,
) -> Result<Vec<f64>> {
    check_instance(wn, cb, q)?;
    let m = cb.size();
    let n = wn.n();
    let ny = wn.num_output_words();
    let mut out = Vec::with_capacity(m);
    for sent in 0..m {
        let xs = cb.word(sent);
        let mut pe = 0.0;
        for yi in 0..ny {
            let y = index_to_word(yi, wn.base_outputs(), n);
            let w = wn.prob(xs, &y);
            if w == 0.0 {
                continue;
            }
            let own = q.value(xs, &y);
            let error = match rule {
                DecodeRule::MaxMetric => (0..m)
                    .any(|other| other != sent && q.value(cb.word(other), &y) >= own),
                DecodeRule::Threshold { tau } => {
                    own < tau
                        || (0..m)
                            .any(|other| other != sent && q.value(cb.word(other), &y) >= tau)
                }
            };
            if error {
                pe += w;
            }
        }
        out.push(pe);
    }
    Ok(out)
}

/// Average error probability over equiprobable messages.
pub fn exact_pe(wn: &NLetterChannel, cb: &Codebook, q: &Metric, rule: DecodeRule) -> Result<f64> {
    let per = per_message_error_probs(wn, cb, q, rule)?;
    let m = per.len() as f64;
    Ok(per.iter().sum::<f64>() / m)
}

/// Tail identity for the max-metric decoder (and its threshold variant):
/// the decoding-error event is exactly a phi tail event against the uniform
/// codebook measure,
///
/// ```text
/// max-metric:  error  <=>  phi(q_n(X_m, Y), P_C, Y) > 1/M
/// threshold:   error  <=>  q_n(X_m, Y) < tau  or  phi(tau, P_C, Y) > 1/M
/// ```
///
/// The lhs evaluates the phi side, the rhs runs the decoder; both use one
/// division by M, so agreement is exact counting, not float luck.
pub fn check_lemma1(
    wn: &NLetterChannel,
    cb: &Codebook,
    q: &Metric,
    rule: DecodeRule,
    tolerance: f64,
) -> Result<IdentityReport> {
    check_instance(wn, cb, q)?;
    let m = cb.size();
    let mu = InputDistribution::uniform_codebook(wn.base_inputs(), cb.clone())?;
    let inv_m = 1.0 / m as f64;
    let n = wn.n();
    let ny = wn.num_output_words();
    let mut lhs_total = 0.0;
    for sent in 0..m {
        let xs = cb.word(sent);
        let mut p_event = 0.0;
        for yi in 0..ny {
            let y = index_to_word(yi, wn.base_outputs(), n);
            let w = wn.prob(xs, &y);
            if w == 0.0 {
                continue;
            }
            let event = match rule {
                DecodeRule::MaxMetric => phi(q.value(xs, &y), &mu, &y, q)? > inv_m,
                DecodeRule::Threshold { tau } => {
                    q.value(xs, &y) < tau || phi(tau, &mu, &y, q)? > inv_m
                }
            };
            if event {
                p_event += w;
            }
        }
        lhs_total += p_event;
    }
    let lhs = lhs_total / m as f64;
    let rhs = exact_pe(wn, cb, q, rule)?;
    Ok(IdentityReport::new(lhs, rhs, tolerance, Relation::Equal))
}

/// Threshold decoding at any level is at worst a factor two above
/// max-metric decoding: P_e(threshold at tau) >= P_e(max-metric) / 2.
pub fn check_threshold_half(
    wn: &NLetterChannel,
    cb: &Codebook,
    q: &Metric,
    tau: f64,
) -> Result<IdentityReport> {
    let lhs = exact_pe(wn, cb, q, DecodeRule::Threshold { tau })?;
    let rhs = exact_pe(wn, cb, q, DecodeRule::MaxMetric)?;
    Ok(IdentityReport::new(
        lhs,
        0.5 * rhs,
        1e-12,
        Relation::GreaterEq,
    ))
}

/// One (x, y) pair of the pointwise tail bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaPair {
    pub x_index: usize,
    pub y_index: usize,
    pub lhs: f64,
    /// -inf when the shifted metric vanished at (x, y).
    pub rhs: f64,
}

/// Pointwise check of the tail bound for non-negative metrics:
///
/// ```text
/// -(1/n) log2 phi(v_n(x,y), P, y) >= (1/n) log2( v_n(x,y) / ptilde(y) ),
/// ptilde(y) = sum_x P(x) v_n(x, y)
/// ```
///
/// Metrics with negative entries are shifted up by their lower bound first;
/// phi is invariant under the shift, so only the rhs moves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaReport {
    pub pairs_checked: usize,
    pub violations: usize,
    /// min over pairs of lhs - rhs (>= -1e-12 when the bound holds).
    pub min_margin: f64,
    pub shift: f64,
    pub worst: Option<ThetaPair>,
}

pub fn theta_pointwise(
    v: &Metric,
    p: &InputDistribution,
    wn: &NLetterChannel,
) -> Result<ThetaReport> {
    if p.n() != wn.n() {
        return Err(Error::Dimension("input distribution length != n".into()));
    }
    if !v.is_additive() && v.native_n() != wn.n() {
        return Err(Error::Dimension("explicit metric length != n".into()));
    }
    let min = v.min_entry();
    let shift = if min < 0.0 { -min } else { 0.0 };
    let v = if shift > 0.0 { v.shifted(shift)? } else { v.clone() };
    let support = p.support(DEFAULT_ENTRY_CAP)?;
    let n = wn.n();
    let ny = wn.num_output_words();
    let mut pairs_checked = 0;
    let mut violations = 0;
    let mut min_margin = f64::INFINITY;
    let mut worst: Option<ThetaPair> = None;
    for yi in 0..ny {
        let y = index_to_word(yi, wn.base_outputs(), n);
        let ptilde: f64 = support.iter().map(|(w, pw)| pw * v.value(w, &y)).sum();
        for (x, px) in &support {
            if *px == 0.0 || wn.prob(x, &y) == 0.0 {
                continue;
            }
            let vn = v.value(x, &y);
            let lhs = -phi(vn, p, &y, &v)?.log2() / n as f64;
            let rhs = if vn == 0.0 {
                f64::NEG_INFINITY
            } else {
                (vn / ptilde).log2() / n as f64
            };
            pairs_checked += 1;
            let margin = lhs - rhs;
            if margin < min_margin {
                min_margin = margin;
                worst = Some(ThetaPair {
                    x_index: crate::util::word_to_index(x, wn.base_inputs()),
                    y_index: yi,
                    lhs,
                    rhs,
                });
            }
            if lhs < rhs - 1e-12 {
                violations += 1;
            }
        }
    }
    Ok(ThetaReport {
        pairs_checked,
        violations,
        min_margin,
        shift,
        worst,
    })
}

/// (1/n) E[ log2 1/phi(q_n(X,Y), P, Y) ] with (X, Y) ~ P x W, in bits.
pub fn expectation_bound(
    p: &InputDistribution,
    wn: &NLetterChannel,
    q: &Metric,
) -> Result<f64> {
    if p.n() != wn.n() {
        return Err(Error::Dimension("input distribution length != n".into()));
    }
    let support = p.support(DEFAULT_ENTRY_CAP)?;
    let n = wn.n();
    let ny = wn.num_output_words();
    let mut total = 0.0;
    for (x, px) in &support {
        for yi in 0..ny {
            let y = index_to_word(yi, wn.base_outputs(), n);
            let w = wn.prob(x, &y);
            if w == 0.0 {
                continue;
            }
            // x itself sits in the tail, so phi >= P(x) > 0
            let tail = phi(q.value(x, &y), p, &y, q)?;
            total += px * w * (-tail.log2());
        }
    }
    Ok(total / n as f64)
}

/// Exact ensemble-average error probability of max-metric decoding over M
/// codewords drawn iid from P (ties to the sent word count as errors):
/// E[ 1 - (1 - phi(q_n(X,Y), P, Y))^(M-1) ].
pub fn ensemble_pe_exact(
    p: &InputDistribution,
    wn: &NLetterChannel,
    q: &Metric,
    m: u64,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("need at least one message".into()));
    }
    if p.n() != wn.n() {
        return Err(Error::Dimension("input distribution length != n".into()));
    }
    if m == 1 {
        return Ok(0.0);
    }
    let support = p.support(DEFAULT_ENTRY_CAP)?;
    let n = wn.n();
    let ny = wn.num_output_words();
    let mut total = 0.0;
    for (x, px) in &support {
        for yi in 0..ny {
            let y = index_to_word(yi, wn.base_outputs(), n);
            let w = wn.prob(x, &y);
            if w == 0.0 {
                continue;
            }
            let tail = phi(q.value(x, &y), p, &y, q)?;
            // 1 - (1-t)^(m-1), stable for tiny t
            let term = -f64::exp_m1((m - 1) as f64 * f64::ln_1p(-tail));
            total += px * w * term;
        }
    }
    Ok(total)
}

/// Outcome of the two-channel domination check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominationReport {
    /// Output marginals under the codebook matched within 1e-9.
    pub precondition_ok: bool,
    pub marginal_gap: f64,
    pub zeta: f64,
    pub eta: f64,
    /// Pe(wt) <= Pe(w) + zeta + eta; absent when the precondition failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity: Option<IdentityReport>,
}

/// If W and Wt induce the same output distribution under the codebook, the
/// error probability under Wt is controlled by the one under W plus two
/// threshold tails:
///
/// ```text
/// Pe(Wt) <= Pe(W) + Pr{tau < q_n(X,Y)} + Pr{q_n(X,Yt) < tau}
/// ```
///
/// Both decoders are max-metric; zeta is computed under W, eta under Wt.
pub fn check_domination(
    wn: &NLetterChannel,
    wtn: &NLetterChannel,
    cb: &Codebook,
    q: &Metric,
    tau: f64,
) -> Result<DominationReport> {
    check_instance(wn, cb, q)?;
    check_instance(wtn, cb, q)?;
    if wn.base_outputs() != wtn.base_outputs() || wn.n() != wtn.n() {
        return Err(Error::Dimension("channels have different shapes".into()));
    }
    let m = cb.size();
    let n = wn.n();
    let ny = wn.num_output_words();
    let mut marginal_gap = 0.0f64;
    let mut zeta = 0.0;
    let mut eta = 0.0;
    for yi in 0..ny {
        let y = index_to_word(yi, wn.base_outputs(), n);
        let mut py = 0.0;
        let mut pty = 0.0;
        for sent in 0..m {
            let xs = cb.word(sent);
            let qv = q.value(xs, &y);
            let w = wn.prob(xs, &y);
            let wt = wtn.prob(xs, &y);
            py += w;
            pty += wt;
            if tau < qv {
                zeta += w;
            }
            if qv < tau {
                eta += wt;
            }
        }
        marginal_gap = marginal_gap.max((py - pty).abs() / m as f64);
    }
    zeta /= m as f64;
    eta /= m as f64;
    if marginal_gap > 1e-9 {
        return Ok(DominationReport {
            precondition_ok: false,
            marginal_gap,
            zeta,
            eta,
            identity: None,
        });
    }
    let lhs = exact_pe(wtn, cb, q, DecodeRule::MaxMetric)?;
    let rhs = exact_pe(wn, cb, q, DecodeRule::MaxMetric)? + zeta + eta;
    Ok(DominationReport {
        precondition_ok: true,
        marginal_gap,
        zeta,
        eta,
        identity: Some(IdentityReport::new(lhs, rhs, 1e-12, Relation::LessEq)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{log_likelihood_metric, Dmc};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn agreement() -> Metric {
        Metric::additive(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    fn random_dmc(rng: &mut ChaCha8Rng, nx: usize, ny: usize) -> Dmc {
        let rows = (0..nx)
            .map(|_| {
                let raw: Vec<f64> = (0..ny).map(|_| rng.gen::<f64>() + 1e-3).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / s).collect()
            })
            .collect();
        Dmc::new(rows).unwrap()
    }

    fn random_metric(rng: &mut ChaCha8Rng, nx: usize, ny: usize) -> Metric {
        Metric::additive(
            (0..nx)
                .map(|_| (0..ny).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect(),
        )
        .unwrap()
    }

    fn random_codebook(rng: &mut ChaCha8Rng, n: usize, nx: usize, m: usize) -> Codebook {
        Codebook::new(
            n,
            (0..m)
                .map(|_| (0..n).map(|_| rng.gen_range(0..nx)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn repetition_code_on_bsc_oracle() {
        // two antipodal words of length 2 on BSC(0.1): ties at Hamming
        // weight 1 are errors, so Pe = 2 * 0.9 * 0.1 + 0.1^2 = 0.19
        let wn = NLetterChannel::power(&Dmc::bsc(0.1).unwrap(), 2).unwrap();
        let cb = Codebook::new(2, vec![vec![0, 0], vec![1, 1]]).unwrap();
        let pe = exact_pe(&wn, &cb, &agreement(), DecodeRule::MaxMetric).unwrap();
        assert!((pe - 0.19).abs() < 1e-15);
    }

    #[test]
    fn duplicate_codewords_always_err() {
        let wn = NLetterChannel::power(&Dmc::bsc(0.1).unwrap(), 2).unwrap();
        let cb = Codebook::new(2, vec![vec![0, 1], vec![0, 1]]).unwrap();
        let pe = exact_pe(&wn, &cb, &agreement(), DecodeRule::MaxMetric).unwrap();
        assert_eq!(pe, 1.0);
    }

    #[test]
    fn noiseless_distinct_words_decode_cleanly() {
        let w = Dmc::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let wn = NLetterChannel::power(&w, 3).unwrap();
        let cb = Codebook::new(3, vec![vec![0, 0, 0], vec![1, 1, 1], vec![0, 1, 0]]).unwrap();
        let pe = exact_pe(&wn, &cb, &agreement(), DecodeRule::MaxMetric).unwrap();
        assert_eq!(pe, 0.0);
    }

    #[test]
    fn phi_of_codeword_metric_is_at_least_one_over_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let n = rng.gen_range(1..=3);
            let m = rng.gen_range(1..=4);
            let cb = random_codebook(&mut rng, n, 2, m);
            let q = random_metric(&mut rng, 2, 2);
            let mu = InputDistribution::uniform_codebook(2, cb.clone()).unwrap();
            let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            for word in cb.words() {
                let v = phi(q.value(word, &y), &mu, &y, &q).unwrap();
                assert!(v >= 1.0 / m as f64);
            }
        }
    }

    #[test]
    fn phi_is_nonincreasing_in_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = random_metric(&mut rng, 2, 3);
        let mu = InputDistribution::iid(3, vec![0.3, 0.7]).unwrap();
        let y = vec![0usize, 2, 1];
        let mut last = f64::INFINITY;
        for i in 0..60 {
            let c = -2.5 + i as f64 * 0.09;
            let v = phi(c, &mu, &y, &q).unwrap();
            assert!(v <= last + 1e-15);
            last = v;
        }
    }

    #[test]
    fn phi_iid_lattice_agrees_with_dense_enumeration() {
        let q = agreement();
        let pmf = vec![0.2, 0.8];
        let iid = InputDistribution::iid(3, pmf.clone()).unwrap();
        let dense_probs: Vec<f64> = (0..8)
            .map(|i| {
                index_to_word(i, 2, 3)
                    .iter()
                    .map(|&s| pmf[s])
                    .product::<f64>()
            })
            .collect();
        let dense = InputDistribution::dense(3, 2, dense_probs).unwrap();
        let y = vec![0usize, 1, 0];
        for i in 0..12 {
            let c = -0.1 + i as f64 * 0.11;
            let a = phi(c, &iid, &y, &q).unwrap();
            let b = phi(c, &dense, &y, &q).unwrap();
            assert!((a - b).abs() <= 1e-12, "c={c}: {a} vs {b}");
        }
    }

    #[test]
    fn lemma1_holds_on_random_instances_both_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..60 {
            let nx = rng.gen_range(2..=3);
            let nyb = rng.gen_range(2..=3);
            let n = rng.gen_range(1..=3);
            let m = rng.gen_range(1..=4);
            let w = random_dmc(&mut rng, nx, nyb);
            let wn = NLetterChannel::power(&w, n).unwrap();
            let cb = random_codebook(&mut rng, n, nx, m);
            let q = random_metric(&mut rng, nx, nyb);
            let r = check_lemma1(&wn, &cb, &q, DecodeRule::MaxMetric, 1e-12).unwrap();
            assert!(r.passed, "max-metric trial {trial}: {r:?}");
            let tau = rng.gen_range(-1.0..1.0);
            let rt =
                check_lemma1(&wn, &cb, &q, DecodeRule::Threshold { tau }, 1e-12).unwrap();
            assert!(rt.passed, "threshold trial {trial}: {rt:?}");
        }
    }

    #[test]
    fn threshold_misses_at_most_half_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for trial in 0..60 {
            let n = rng.gen_range(1..=2);
            let m = rng.gen_range(2..=4);
            let w = random_dmc(&mut rng, 2, 2);
            let wn = NLetterChannel::power(&w, n).unwrap();
            let cb = random_codebook(&mut rng, n, 2, m);
            let q = random_metric(&mut rng, 2, 2);
            let tau = rng.gen_range(-1.5..1.5);
            let r = check_threshold_half(&wn, &cb, &q, tau).unwrap();
            assert!(r.passed, "trial {trial}: {r:?}");
        }
    }

    #[test]
    fn matched_expectation_bound_oracle() {
        // BSC(0.1), uniform input, n = 1, matched metric: the two clean
        // pairs contribute one bit each at weight 0.45
        let w = Dmc::bsc(0.1).unwrap();
        let (q, _) = log_likelihood_metric(&w);
        let p = InputDistribution::uniform_iid(1, 2).unwrap();
        let wn = NLetterChannel::from_dmc(&w);
        let v = expectation_bound(&p, &wn, &q).unwrap();
        assert!((v - 0.9).abs() < 1e-12);
    }

    #[test]
    fn ensemble_pe_oracle_and_edges() {
        let w = Dmc::bsc(0.1).unwrap();
        let (q, _) = log_likelihood_metric(&w);
        let p = InputDistribution::uniform_iid(1, 2).unwrap();
        let wn = NLetterChannel::from_dmc(&w);
        let v = ensemble_pe_exact(&p, &wn, &q, 2).unwrap();
        assert!((v - 0.55).abs() < 1e-12);
        assert_eq!(ensemble_pe_exact(&p, &wn, &q, 1).unwrap(), 0.0);
        // more codewords, more collisions
        let v4 = ensemble_pe_exact(&p, &wn, &q, 4).unwrap();
        assert!(v4 > v);
    }

    #[test]
    fn theta_bound_has_no_violations_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..40 {
            let nx = rng.gen_range(2..=3);
            let nyb = rng.gen_range(2..=3);
            let n = rng.gen_range(1..=2);
            let w = random_dmc(&mut rng, nx, nyb);
            let wn = NLetterChannel::power(&w, n).unwrap();
            // negative entries exercise the shift path
            let v = random_metric(&mut rng, nx, nyb);
            let pmf: Vec<f64> = {
                let raw: Vec<f64> = (0..nx).map(|_| rng.gen::<f64>() + 0.05).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|t| t / s).collect()
            };
            let p = InputDistribution::iid(n, pmf).unwrap();
            let r = theta_pointwise(&v, &p, &wn).unwrap();
            assert_eq!(r.violations, 0, "trial {trial}: {r:?}");
            assert!(r.min_margin >= -1e-12);
        }
    }

    #[test]
    fn theta_handles_vanishing_metric() {
        // metric hits zero at (1, 0): rhs must be -inf there, not NaN
        let v = Metric::additive(vec![vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        let w = Dmc::bsc(0.2).unwrap();
        let wn = NLetterChannel::from_dmc(&w);
        let p = InputDistribution::uniform_iid(1, 2).unwrap();
        let r = theta_pointwise(&v, &p, &wn).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.pairs_checked, 4);
    }

    #[test]
    fn domination_with_identical_channels_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let w = random_dmc(&mut rng, 2, 2);
        let wn = NLetterChannel::power(&w, 2).unwrap();
        let cb = random_codebook(&mut rng, 2, 2, 3);
        let q = random_metric(&mut rng, 2, 2);
        let r = check_domination(&wn, &wn, &cb, &q, 0.3).unwrap();
        assert!(r.precondition_ok);
        assert!(r.identity.unwrap().passed);
    }

    #[test]
    fn domination_flags_marginal_mismatch() {
        let w = NLetterChannel::from_dmc(&Dmc::bsc(0.1).unwrap());
        let wt = NLetterChannel::from_dmc(&Dmc::bsc(0.3).unwrap());
        let cb = Codebook::new(1, vec![vec![0], vec![0]]).unwrap();
        let q = agreement();
        let r = check_domination(&w, &wt, &cb, &q, 0.5).unwrap();
        assert!(!r.precondition_ok);
        assert!(r.marginal_gap > 1e-2);
        assert!(r.identity.is_none());
    }

    #[test]
    fn domination_swapped_rows_preserve_uniform_marginal() {
        // row-swapped BSC keeps the output marginal uniform under a
        // balanced codebook, so the precondition holds and the bound must
        let w = NLetterChannel::from_dmc(&Dmc::bsc(0.1).unwrap());
        let wt = NLetterChannel::from_dmc(&Dmc::bsc(0.9).unwrap());
        let cb = Codebook::new(1, vec![vec![0], vec![1]]).unwrap();
        let q = agreement();
        let r = check_domination(&w, &wt, &cb, &q, 0.5).unwrap();
        assert!(r.precondition_ok, "{r:?}");
        assert!(r.identity.unwrap().passed);
    }
}
