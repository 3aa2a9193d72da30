//! Information-spectrum engine: exact tail probabilities of additive metric
//! sums under product or fixed-composition inputs, seeded sampling of
//! normalized statistics, quantile proxies for p-liminf / p-limsup, and the
//! derived diagnostics (strong-converse gap, threshold exponent, matched
//! identity check).
//!
//! Exactness strategy: an additive metric is embedded into an integer
//! lattice (value = offset + unit * k), so tail events {sum >= threshold}
//! become integer comparisons and never hinge on float rounding. Thresholds
//! arriving as reals are snapped to the lattice within a 1e-9 relative
//! tolerance; thresholds arising from sampled pairs are formed directly in
//! integer arithmetic.

use crate::model::{composition, Dmc, InputDistribution, Metric, STOCHASTIC_TOL};
use crate::util::{big_ratio_to_f64, log2_sum_exp2, multinomial_big};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_traits::Zero;
use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest allowed integer span of a lattice-embedded sum.
pub const MAX_LATTICE_SPAN: usize = 1_000_000;

/// Largest lattice denominator tried when rationalizing gap ratios.
pub const MAX_LATTICE_DENOM: u64 = 1_000_000;

/// Inner draws used by the Monte Carlo fallback when a metric admits no
/// lattice embedding.
pub const MC_PHI_DRAWS: usize = 10_000;

/// Joint-composition enumeration guard: (n+1)^dof must stay below this.
pub const MAX_JOINT_TYPES: f64 = 1e8;

/// An additive metric rewritten as q(x,y) = offset + unit * ints[x][y] with
/// integer entries. Exact for every two-valued metric (the unit absorbs the
/// gap) and for metrics whose gap ratios are rational with denominator at
/// most [`MAX_LATTICE_DENOM`].
#[derive(Debug, Clone)]
pub struct MetricLattice {
    ints: Vec<Vec<i64>>,
    offset: f64,
    unit: f64,
    denom: u64,
}

impl MetricLattice {
    pub fn embed(q: &Metric) -> Result<Self> {
        let table = q.additive_table().ok_or_else(|| {
            Error::Unsupported("lattice embedding requires an additive metric".into())
        })?;
        let mut values: Vec<f64> = table.iter().flatten().cloned().collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let v0 = values[0];
        if values.len() == 1 {
            return Ok(MetricLattice {
                ints: table.iter().map(|r| vec![0; r.len()]).collect(),
                offset: v0,
                unit: 1.0,
                denom: 1,
            });
        }
        let g1 = values[1] - v0;
        // smallest gap fixes the unit up to a rational refinement
        let mut denom: u64 = 1;
        for &v in &values[2..] {
            let r = (v - v0) / g1;
            let scaled = r * denom as f64;
            if (scaled - scaled.round()).abs() <= 1e-9 * scaled.max(1.0) {
                continue;
            }
            let (_, den) = crate::util::rationalize(r, MAX_LATTICE_DENOM, 1e-9)
                .ok_or(Error::NoLattice {
                    max_den: MAX_LATTICE_DENOM,
                })?;
            let lcm = denom / crate::util::gcd_u64(denom, den) * den;
            if lcm > MAX_LATTICE_DENOM {
                return Err(Error::NoLattice {
                    max_den: MAX_LATTICE_DENOM,
                });
            }
            denom = lcm;
        }
        let unit = g1 / denom as f64;
        let to_int = |v: f64| -> Result<i64> {
            let t = (v - v0) / unit;
            let k = t.round();
            if (t - k).abs() > 1e-9 * t.abs().max(1.0) {
                return Err(Error::NoLattice {
                    max_den: MAX_LATTICE_DENOM,
                });
            }
            Ok(k as i64)
        };
        let ints = table
            .iter()
            .map(|row| row.iter().map(|&v| to_int(v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(MetricLattice {
            ints,
            offset: v0,
            unit,
            denom,
        })
    }

    pub fn int_value(&self, x: usize, y: usize) -> i64 {
        self.ints[x][y]
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn unit(&self) -> f64 {
        self.unit
    }

    /// Integer metric sum of a word pair (no division by n).
    pub fn sum_int(&self, x: &[usize], y: &[usize]) -> i64 {
        x.iter().zip(y).map(|(&xi, &yi)| self.ints[xi][yi]).sum()
    }

    /// Smallest integer sum S such that offset + unit*S/n >= c, i.e. the
    /// lattice form of the event {q_n >= c}. Values of c within 1e-9
    /// (relative) of a lattice point snap onto it.
    pub fn threshold_int(&self, c: f64, n: usize) -> i64 {
        let t = (c - self.offset) * n as f64 / self.unit;
        let r = t.round();
        if (t - r).abs() <= 1e-9 * t.abs().max(1.0) {
            r as i64
        } else {
            t.ceil() as i64
        }
    }

    fn column_range(&self, y: usize) -> (i64, i64) {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for row in &self.ints {
            lo = lo.min(row[y]);
            hi = hi.max(row[y]);
        }
        (lo, hi)
    }
}

/// Exact distribution of the integer metric sum against a fixed output word,
/// when the input letters are drawn iid. Stored as a complementary CDF so a
/// tail query is one array lookup.
#[derive(Debug, Clone)]
pub struct ProductTail {
    min_sum: i64,
    ccdf: Vec<f64>,
}

impl ProductTail {
    /// Build for iid letters ~ pmf against any output word of composition
    /// `y_comp`. The sum distribution depends on the output only through its
    /// composition.
    pub fn build(lattice: &MetricLattice, pmf: &[f64], y_comp: &[usize]) -> Result<Self> {
        if pmf.len() != lattice.ints.len() {
            return Err(Error::Dimension("pmf length != metric inputs".into()));
        }
        let n: usize = y_comp.iter().sum();
        if n == 0 {
            return Err(Error::Domain("empty output word".into()));
        }
        let mut span: i64 = 0;
        let mut min_sum: i64 = 0;
        for (y, &k) in y_comp.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let (lo, hi) = lattice.column_range(y);
            span += k as i64 * (hi - lo);
            min_sum += k as i64 * lo;
        }
        if span as usize > MAX_LATTICE_SPAN {
            return Err(Error::TooLarge {
                size: span as usize,
                cap: MAX_LATTICE_SPAN,
            });
        }
        let mut dist = vec![1.0f64];
        let mut base = 0i64;
        for (y, &k) in y_comp.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let (lo, hi) = lattice.column_range(y);
            let width = (hi - lo) as usize;
            // step pmf over offsets 0..=width
            let mut step = vec![0.0f64; width + 1];
            for (x, &p) in pmf.iter().enumerate() {
                step[(lattice.ints[x][y] - lo) as usize] += p;
            }
            for _ in 0..k {
                let mut next = vec![0.0f64; dist.len() + width];
                for (i, &d) in dist.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for (j, &s) in step.iter().enumerate() {
                        next[i + j] += d * s;
                    }
                }
                dist = next;
                base += lo;
            }
        }
        debug_assert_eq!(base, min_sum);
        // suffix-sum from the top so small tail masses are not swamped
        let mut ccdf = dist;
        let mut acc = 0.0;
        for v in ccdf.iter_mut().rev() {
            acc += *v;
            *v = acc;
        }
        Ok(ProductTail { min_sum, ccdf })
    }

    /// Pr{sum >= s}.
    pub fn query(&self, s: i64) -> f64 {
        if s <= self.min_sum {
            // total mass; clamp the accumulated roundoff
            return self.ccdf[0].min(1.0);
        }
        let idx = (s - self.min_sum) as usize;
        if idx >= self.ccdf.len() {
            0.0
        } else {
            self.ccdf[idx].min(1.0)
        }
    }
}

/// Pr{(1/n) sum q(X_i, y_i) >= c} for X iid ~ p, by exact lattice
/// convolution.
pub fn tail_product_exact(q: &Metric, p: &[f64], y: &[usize], c: f64) -> Result<f64> {
    let lattice = MetricLattice::embed(q)?;
    let y_comp = composition(y, q.base_outputs());
    let tail = ProductTail::build(&lattice, p, &y_comp)?;
    Ok(tail.query(lattice.threshold_int(c, y.len())))
}

/// Exact tail of the integer metric sum when the input word is uniform over
/// a composition class. Masses are aggregated per integer sum in exact
/// big-integer counts and converted once.
#[derive(Debug, Clone)]
pub struct CompositionTail {
    sums: Vec<i64>,
    ccdf: Vec<f64>,
}

impl CompositionTail {
    pub fn build(lattice: &MetricLattice, comp: &[usize], y_comp: &[usize]) -> Result<Self> {
        let n: usize = comp.iter().sum();
        if n != y_comp.iter().sum::<usize>() {
            return Err(Error::Dimension(
                "input and output compositions disagree on n".into(),
            ));
        }
        let nx = comp.len();
        let ny = y_comp.len();
        if nx != lattice.ints.len() || ny != lattice.ints[0].len() {
            return Err(Error::Dimension("lattice shape mismatch".into()));
        }
        let dof = (nx.saturating_sub(1)) * (ny.saturating_sub(1));
        if ((n + 1) as f64).powi(dof as i32) > MAX_JOINT_TYPES {
            return Err(Error::TooLarge {
                size: usize::MAX,
                cap: MAX_JOINT_TYPES as usize,
            });
        }
        // enumerate joint compositions J with row marginal comp and column
        // marginal y_comp; weight of J is prod_y multinomial(y_comp[y]; J(.,y))
        let mut masses: BTreeMap<i64, BigInt> = BTreeMap::new();
        let mut col_left = y_comp.to_vec();
        let mut rows: Vec<Vec<usize>> = Vec::with_capacity(nx);
        enumerate_joint(
            lattice,
            comp,
            y_comp,
            0,
            &mut col_left,
            &mut rows,
            &mut masses,
        );
        let denom = multinomial_big(n, comp);
        let mut sums: Vec<i64> = masses.keys().cloned().collect();
        sums.sort_unstable();
        let mut ccdf = vec![0.0; sums.len()];
        let mut acc = BigInt::zero();
        for i in (0..sums.len()).rev() {
            acc += masses.get(&sums[i]).unwrap();
            ccdf[i] = big_ratio_to_f64(&acc, &denom).min(1.0);
        }
        Ok(CompositionTail { sums, ccdf })
    }

    /// Pr{sum >= s}.
    pub fn query(&self, s: i64) -> f64 {
        match self.sums.binary_search(&s) {
            Ok(i) => self.ccdf[i],
            Err(i) if i < self.sums.len() => self.ccdf[i],
            _ => 0.0,
        }
    }
}

fn enumerate_joint(
    lattice: &MetricLattice,
    comp: &[usize],
    y_comp: &[usize],
    x: usize,
    col_left: &mut Vec<usize>,
    rows: &mut Vec<Vec<usize>>,
    masses: &mut BTreeMap<i64, BigInt>,
) {
    if x == comp.len() {
        if col_left.iter().any(|&c| c != 0) {
            return;
        }
        let mut sum = 0i64;
        let mut weight = BigInt::from(1);
        for (xi, row) in rows.iter().enumerate() {
            for (yi, &k) in row.iter().enumerate() {
                sum += k as i64 * lattice.ints[xi][yi];
            }
        }
        for yi in 0..y_comp.len() {
            let col: Vec<usize> = rows.iter().map(|r| r[yi]).collect();
            weight *= multinomial_big(y_comp[yi], &col);
        }
        *masses.entry(sum).or_insert_with(BigInt::zero) += weight;
        return;
    }
    // distribute comp[x] over columns within remaining capacity
    let ny = y_comp.len();
    let mut row = vec![0usize; ny];
    fn fill(
        row: &mut Vec<usize>,
        y: usize,
        left: usize,
        col_left: &mut Vec<usize>,
        next: &mut dyn FnMut(&mut Vec<usize>, &mut Vec<usize>),
    ) {
        let ny = row.len();
        if y == ny - 1 {
            if left <= col_left[y] {
                row[y] = left;
                col_left[y] -= left;
                next(row, col_left);
                col_left[y] += left;
                row[y] = 0;
            }
            return;
        }
        let tail_cap: usize = col_left[y + 1..].iter().sum();
        let lo = left.saturating_sub(tail_cap);
        let hi = left.min(col_left[y]);
        for k in lo..=hi {
            row[y] = k;
            col_left[y] -= k;
            fill(row, y + 1, left - k, col_left, next);
            col_left[y] += k;
            row[y] = 0;
        }
    }
    let left = comp[x];
    let lattice_ref = lattice;
    let mut cont = |row: &mut Vec<usize>, col_left: &mut Vec<usize>| {
        rows.push(row.clone());
        enumerate_joint(lattice_ref, comp, y_comp, x + 1, col_left, rows, masses);
        rows.pop();
    };
    fill(&mut row, 0, left, col_left, &mut cont);
}

/// Pr{(1/n) sum q(X_i, y_i) >= c} for X uniform over the type class of
/// `comp`, by exact joint-composition counting.
pub fn tail_fixed_composition_exact(
    q: &Metric,
    comp: &[usize],
    y: &[usize],
    c: f64,
) -> Result<f64> {
    let lattice = MetricLattice::embed(q)?;
    let y_comp = composition(y, q.base_outputs());
    let tail = CompositionTail::build(&lattice, comp, &y_comp)?;
    Ok(tail.query(lattice.threshold_int(c, y.len())))
}

/// Normalized per-block statistic to sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Statistic {
    /// -(1/n) log2 Phi(q_n(X,Y), P, Y)
    NegLogPhi,
    /// (1/n) log2 W^n(Y|X) / P_Y^n(Y)
    InfoDensity,
    /// q_n(X, Y)
    MetricValue,
    /// -(1/n) log2 Phi(tau, P, Y)
    NegLogPhiAtTau { tau: f64 },
}

/// Channel law for a block: a plain DMC used memorylessly, or a finite
/// mixture whose component is drawn once per block and then used
/// memorylessly (the non-ergodic regime that separates p-liminf from
/// p-limsup).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelModelSchema", into = "ChannelModelSchema")]
pub enum ChannelModel {
    Single(Dmc),
    Mixture(Vec<(f64, Dmc)>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ChannelModelSchema {
    Mixture { mixture: Vec<MixtureComponent> },
    Single(Dmc),
}

#[derive(Serialize, Deserialize)]
struct MixtureComponent {
    weight: f64,
    channel: Dmc,
}

impl TryFrom<ChannelModelSchema> for ChannelModel {
    type Error = Error;
    fn try_from(s: ChannelModelSchema) -> Result<Self> {
        match s {
            ChannelModelSchema::Single(w) => Ok(ChannelModel::Single(w)),
            ChannelModelSchema::Mixture { mixture } => ChannelModel::mixture(
                mixture.into_iter().map(|c| (c.weight, c.channel)).collect(),
            ),
        }
    }
}

impl From<ChannelModel> for ChannelModelSchema {
    fn from(m: ChannelModel) -> Self {
        match m {
            ChannelModel::Single(w) => ChannelModelSchema::Single(w),
            ChannelModel::Mixture(parts) => ChannelModelSchema::Mixture {
                mixture: parts
                    .into_iter()
                    .map(|(weight, channel)| MixtureComponent { weight, channel })
                    .collect(),
            },
        }
    }
}

impl ChannelModel {
    pub fn mixture(parts: Vec<(f64, Dmc)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Dimension("mixture needs a component".into()));
        }
        let (i0, o0) = (parts[0].1.num_inputs(), parts[0].1.num_outputs());
        let mut total = 0.0;
        for (w, ch) in &parts {
            if !(*w > 0.0) {
                return Err(Error::Domain(format!("mixture weight {w} must be > 0")));
            }
            if ch.num_inputs() != i0 || ch.num_outputs() != o0 {
                return Err(Error::Dimension("mixture components differ in shape".into()));
            }
            total += w;
        }
        if (total - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::NotStochastic {
                row: 0,
                sum: total,
                tol: STOCHASTIC_TOL,
            });
        }
        Ok(ChannelModel::Mixture(parts))
    }

    pub fn num_inputs(&self) -> usize {
        match self {
            ChannelModel::Single(w) => w.num_inputs(),
            ChannelModel::Mixture(p) => p[0].1.num_inputs(),
        }
    }

    pub fn num_outputs(&self) -> usize {
        match self {
            ChannelModel::Single(w) => w.num_outputs(),
            ChannelModel::Mixture(p) => p[0].1.num_outputs(),
        }
    }

    fn components(&self) -> Vec<(f64, &Dmc)> {
        match self {
            ChannelModel::Single(w) => vec![(1.0, w)],
            ChannelModel::Mixture(p) => p.iter().map(|(w, c)| (*w, c)).collect(),
        }
    }

    fn draw_component(&self, rng: &mut impl Rng) -> usize {
        match self {
            ChannelModel::Single(_) => 0,
            ChannelModel::Mixture(parts) => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (i, (w, _)) in parts.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        return i;
                    }
                }
                parts.len() - 1
            }
        }
    }
}

/// Sorted iid samples of a normalized statistic at fixed n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSamples {
    pub n: usize,
    pub statistic: Statistic,
    pub values: Vec<f64>,
    pub seed: u64,
    pub sample_count: usize,
    /// Set when an inner Monte Carlo fallback replaced the exact tail op.
    pub bias_warning: bool,
}

fn sample_index(rng: &mut impl Rng, pmf: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in pmf.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    pmf.len() - 1
}

/// One word drawn from any input-distribution form.
pub(crate) fn draw_word(p: &InputDistribution, rng: &mut ChaCha8Rng) -> Vec<usize> {
    match p.form() {
        crate::model::DistForm::Iid(pmf) => {
            (0..p.n()).map(|_| sample_index(rng, pmf)).collect()
        }
        crate::model::DistForm::UniformType(comp) => {
            let mut word = Vec::with_capacity(p.n());
            for (s, &k) in comp.iter().enumerate() {
                word.extend(std::iter::repeat(s).take(k));
            }
            // Fisher-Yates makes the arrangement uniform over the class
            for i in (1..word.len()).rev() {
                let j = Uniform::new_inclusive(0, i).sample(rng);
                word.swap(i, j);
            }
            word
        }
        crate::model::DistForm::Dense(v) => {
            let i = sample_index(rng, v);
            crate::util::index_to_word(i, p.num_symbols(), p.n())
        }
        crate::model::DistForm::UniformCodebook(cb) => {
            let i = Uniform::new(0, cb.size()).sample(rng);
            cb.word(i).to_vec()
        }
    }
}

pub(crate) fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // stream 0 is left unused so auxiliary draws can never collide with a
    // trial substream
    rng.set_stream(trial as u64 + 1);
    rng
}

struct DrawnPair {
    x: Vec<usize>,
    y: Vec<usize>,
}

/// One (X^n, Y^n) draw. A mixture component applies to the whole block.
fn draw_pair(
    p: &InputDistribution,
    channel: &ChannelModel,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DrawnPair> {
    let comp_idx = channel.draw_component(rng);
    let w = match channel {
        ChannelModel::Single(w) => w,
        ChannelModel::Mixture(parts) => &parts[comp_idx].1,
    };
    let x: Vec<usize> = match p.form() {
        crate::model::DistForm::Iid(_) | crate::model::DistForm::UniformType(_) => {
            debug_assert_eq!(p.n(), n);
            draw_word(p, rng)
        }
        _ => {
            return Err(Error::Unsupported(
                "sampling needs an iid or uniform_type input distribution".into(),
            ))
        }
    };
    let y: Vec<usize> = x.iter().map(|&xi| sample_index(rng, w.row(xi))).collect();
    Ok(DrawnPair { x, y })
}

fn draw_pairs(
    p: &InputDistribution,
    channel: &ChannelModel,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<DrawnPair>> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            draw_pair(p, channel, n, &mut rng)
        })
        .collect()
}

/// Per-trial thresholds for the phi statistic: either the pair's own metric
/// sum or a fixed lattice level.
enum PhiLevel {
    OwnSum,
    Fixed(i64),
}

/// Exact Phi values for each drawn pair, with tails cached per output
/// composition. Works for iid and uniform_type inputs.
fn exact_phi_values(
    pairs: &[DrawnPair],
    p: &InputDistribution,
    q: &Metric,
    lattice: &MetricLattice,
    level: &PhiLevel,
) -> Result<Vec<f64>> {
    let outputs = q.base_outputs();
    let mut comp_keys: Vec<Vec<usize>> = pairs
        .iter()
        .map(|pair| composition(&pair.y, outputs))
        .collect();
    let mut distinct: Vec<Vec<usize>> = comp_keys.clone();
    distinct.sort_unstable();
    distinct.dedup();
    enum Tail {
        Product(ProductTail),
        Composition(CompositionTail),
    }
    let tails: Vec<Tail> = match p.form() {
        crate::model::DistForm::Iid(pmf) => distinct
            .par_iter()
            .map(|yc| ProductTail::build(lattice, pmf, yc).map(Tail::Product))
            .collect::<Result<_>>()?,
        crate::model::DistForm::UniformType(comp) => distinct
            .par_iter()
            .map(|yc| CompositionTail::build(lattice, comp, yc).map(Tail::Composition))
            .collect::<Result<_>>()?,
        _ => {
            return Err(Error::Unsupported(
                "exact phi sampling needs iid or uniform_type inputs".into(),
            ))
        }
    };
    let index_of = |key: &Vec<usize>| distinct.binary_search(key).unwrap();
    Ok(pairs
        .par_iter()
        .zip(comp_keys.par_iter_mut())
        .map(|(pair, key)| {
            let s = match level {
                PhiLevel::OwnSum => lattice.sum_int(&pair.x, &pair.y),
                PhiLevel::Fixed(t) => *t,
            };
            match &tails[index_of(key)] {
                Tail::Product(t) => t.query(s),
                Tail::Composition(t) => t.query(s),
            }
        })
        .collect())
}

/// Monte Carlo fallback for Phi when the metric has no lattice embedding:
/// draws [`MC_PHI_DRAWS`] inner words from mu per trial. Biased at the
/// resolution of the inner sample; callers surface `bias_warning`.
fn mc_phi_values(
    pairs: &[DrawnPair],
    p: &InputDistribution,
    q: &Metric,
    level_tau: Option<f64>,
    seed: u64,
) -> Result<Vec<f64>> {
    pairs
        .par_iter()
        .enumerate()
        .map(|(t, pair)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            rng.set_stream(t as u64 + 1);
            let c = match level_tau {
                Some(tau) => tau,
                None => q.value(&pair.x, &pair.y),
            };
            let mut hits = 0usize;
            for _ in 0..MC_PHI_DRAWS {
                let xt: Vec<usize> = match p.form() {
                    crate::model::DistForm::Iid(pmf) => {
                        (0..pair.y.len()).map(|_| sample_index(&mut rng, pmf)).collect()
                    }
                    crate::model::DistForm::UniformType(comp) => {
                        let mut word = Vec::with_capacity(pair.y.len());
                        for (s, &k) in comp.iter().enumerate() {
                            word.extend(std::iter::repeat(s).take(k));
                        }
                        for i in (1..word.len()).rev() {
                            let j = Uniform::new_inclusive(0, i).sample(&mut rng);
                            word.swap(i, j);
                        }
                        word
                    }
                    _ => unreachable!("guarded by caller"),
                };
                if q.value(&xt, &pair.y) >= c {
                    hits += 1;
                }
            }
            Ok(hits as f64 / MC_PHI_DRAWS as f64)
        })
        .collect()
}

fn neg_log_phi(phi: f64, n: usize) -> Result<f64> {
    if phi <= 0.0 {
        return Err(Error::Domain(
            "phi vanished; the statistic is not finite".into(),
        ));
    }
    Ok(-phi.log2() / n as f64)
}

fn info_density_values(
    pairs: &[DrawnPair],
    p: &InputDistribution,
    channel: &ChannelModel,
    n: usize,
) -> Result<Vec<f64>> {
    let pmf = p.iid_pmf().ok_or_else(|| {
        Error::Unsupported("info_density needs an iid input distribution".into())
    })?;
    let comps = channel.components();
    // per component: log2 weight, log2 W, log2 output marginal
    let mut lw = Vec::new();
    for (weight, ch) in &comps {
        let marg = ch.output_marginal(pmf)?;
        let log_rows: Vec<Vec<f64>> = ch
            .rows()
            .iter()
            .map(|r| r.iter().map(|&v| v.log2()).collect())
            .collect();
        let log_marg: Vec<f64> = marg.iter().map(|&v| v.log2()).collect();
        lw.push((weight.log2(), log_rows, log_marg));
    }
    Ok(pairs
        .par_iter()
        .map(|pair| {
            let mut num = Vec::with_capacity(lw.len());
            let mut den = Vec::with_capacity(lw.len());
            for (lwk, log_rows, log_marg) in &lw {
                let mut ln = *lwk;
                let mut ld = *lwk;
                for (&xi, &yi) in pair.x.iter().zip(&pair.y) {
                    ln += log_rows[xi][yi];
                    ld += log_marg[yi];
                }
                num.push(ln);
                den.push(ld);
            }
            (log2_sum_exp2(&num) - log2_sum_exp2(&den)) / n as f64
        })
        .collect())
}

/// Draw `trials` iid blocks and evaluate the statistic on each. Values are
/// returned sorted ascending; the result is a pure function of
/// (seed, trials, n) regardless of thread count.
pub fn sample_statistic(
    statistic: Statistic,
    p: &InputDistribution,
    channel: &ChannelModel,
    q: &Metric,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<SpectrumSamples> {
    if p.n() != n {
        return Err(Error::Dimension(format!(
            "input distribution is over length {}, requested n = {n}",
            p.n()
        )));
    }
    if trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    if p.num_symbols() != channel.num_inputs() {
        return Err(Error::Dimension("input alphabet != channel inputs".into()));
    }
    let pairs = draw_pairs(p, channel, n, trials, seed)?;
    let mut bias_warning = false;
    let mut values: Vec<f64> = match statistic {
        Statistic::MetricValue => pairs
            .par_iter()
            .map(|pair| q.value(&pair.x, &pair.y))
            .collect(),
        Statistic::InfoDensity => info_density_values(&pairs, p, channel, n)?,
        Statistic::NegLogPhi => {
            let phis = match MetricLattice::embed(q) {
                Ok(lattice) => exact_phi_values(&pairs, p, q, &lattice, &PhiLevel::OwnSum)?,
                Err(Error::NoLattice { .. }) => {
                    bias_warning = true;
                    mc_phi_values(&pairs, p, q, None, seed)?
                }
                Err(e) => return Err(e),
            };
            phis.into_iter()
                .map(|phi| neg_log_phi(phi, n))
                .collect::<Result<_>>()?
        }
        Statistic::NegLogPhiAtTau { tau } => {
            let phis = match MetricLattice::embed(q) {
                Ok(lattice) => {
                    let t = lattice.threshold_int(tau, n);
                    exact_phi_values(&pairs, p, q, &lattice, &PhiLevel::Fixed(t))?
                }
                Err(Error::NoLattice { .. }) => {
                    bias_warning = true;
                    mc_phi_values(&pairs, p, q, Some(tau), seed)?
                }
                Err(e) => return Err(e),
            };
            phis.into_iter()
                .map(|phi| neg_log_phi(phi, n))
                .collect::<Result<_>>()?
        }
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite statistic sample".into()));
    }
    values.sort_by(f64::total_cmp);
    Ok(SpectrumSamples {
        n,
        statistic,
        sample_count: values.len(),
        values,
        seed,
        bias_warning,
    })
}

fn check_quantile_args(samples: &SpectrumSamples, eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Domain(format!("eps {eps} outside (0, 1/2)")));
    }
    if samples.sample_count < 100 {
        return Err(Error::Precondition(format!(
            "{} samples; quantile proxies need at least 100",
            samples.sample_count
        )));
    }
    Ok(())
}

/// Finite-n stand-in for the p-liminf: the empirical eps-quantile.
pub fn p_liminf_estimate(samples: &SpectrumSamples, eps: f64) -> Result<f64> {
    check_quantile_args(samples, eps)?;
    let idx = (eps * samples.sample_count as f64).floor() as usize;
    Ok(samples.values[idx.min(samples.sample_count - 1)])
}

/// Finite-n stand-in for the p-limsup: the empirical (1-eps)-quantile.
pub fn p_limsup_estimate(samples: &SpectrumSamples, eps: f64) -> Result<f64> {
    check_quantile_args(samples, eps)?;
    let idx = (eps * samples.sample_count as f64).floor() as usize;
    Ok(samples.values[samples.sample_count - 1 - idx.min(samples.sample_count - 1)])
}

/// Quantile-proxy pair and their gap for one statistic. A large gap flags
/// the non-ergodic regime in which the strong converse fails.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrongConverseReport {
    pub statistic: Statistic,
    pub liminf_proxy: f64,
    pub limsup_proxy: f64,
    pub gap: f64,
    pub eps: f64,
    pub bias_warning: bool,
}

pub fn strong_converse_gap(
    statistic: Statistic,
    p: &InputDistribution,
    channel: &ChannelModel,
    q: &Metric,
    n: usize,
    trials: usize,
    eps: f64,
    seed: u64,
) -> Result<StrongConverseReport> {
    let samples = sample_statistic(statistic, p, channel, q, n, trials, seed)?;
    let lo = p_liminf_estimate(&samples, eps)?;
    let hi = p_limsup_estimate(&samples, eps)?;
    Ok(StrongConverseReport {
        statistic,
        liminf_proxy: lo,
        limsup_proxy: hi,
        gap: hi - lo,
        eps,
        bias_warning: samples.bias_warning,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdExponentReport {
    pub tau: f64,
    pub exponent: f64,
    /// Fraction of trials whose own metric value fell below tau.
    pub below_threshold_fraction: f64,
    /// Set when that fraction exceeds eps, i.e. tau is too aggressive for
    /// this input/channel pair.
    pub feasibility_warning: bool,
    pub bias_warning: bool,
}

/// liminf proxy of -(1/n) log2 Phi(tau, P, Y^n), with a feasibility check of
/// the sent word against the same threshold. Comparisons run on the metric
/// lattice whenever one exists, so the check agrees exactly with the tail.
pub fn threshold_exponent(
    p: &InputDistribution,
    channel: &ChannelModel,
    q: &Metric,
    tau: f64,
    n: usize,
    trials: usize,
    eps: f64,
    seed: u64,
) -> Result<ThresholdExponentReport> {
    let samples = sample_statistic(Statistic::NegLogPhiAtTau { tau }, p, channel, q, n, trials, seed)?;
    let exponent = p_liminf_estimate(&samples, eps)?;
    // feasibility pass reuses the same draws
    let pairs = draw_pairs(p, channel, n, trials, seed)?;
    let below = match MetricLattice::embed(q) {
        Ok(lattice) => {
            let t = lattice.threshold_int(tau, n);
            pairs
                .iter()
                .filter(|pair| lattice.sum_int(&pair.x, &pair.y) < t)
                .count()
        }
        Err(Error::NoLattice { .. }) => pairs
            .iter()
            .filter(|pair| q.value(&pair.x, &pair.y) < tau)
            .count(),
        Err(e) => return Err(e),
    };
    let frac = below as f64 / trials as f64;
    Ok(ThresholdExponentReport {
        tau,
        exponent,
        below_threshold_fraction: frac,
        feasibility_warning: frac > eps,
        bias_warning: samples.bias_warning,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchedIdentityReport {
    pub info_density_proxy: f64,
    pub neg_log_phi_proxy: f64,
    /// neg_log_phi proxy minus info_density proxy.
    pub difference: f64,
    /// difference >= -0.05 (the tail proxy may only exceed the density
    /// proxy, up to quantile noise).
    pub dominance_ok: bool,
}

/// Compare the liminf proxies of the information density and of the
/// phi tail statistic under the matched (log-likelihood) metric, on paired
/// draws from the same seed.
pub fn matched_identity_check(
    w: &Dmc,
    pmf: &[f64],
    n: usize,
    trials: usize,
    eps: f64,
    seed: u64,
) -> Result<MatchedIdentityReport> {
    let (q, _) = crate::model::log_likelihood_metric(w);
    let p = InputDistribution::iid(n, pmf.to_vec())?;
    let channel = ChannelModel::Single(w.clone());
    let density = sample_statistic(Statistic::InfoDensity, &p, &channel, &q, n, trials, seed)?;
    let tail = sample_statistic(Statistic::NegLogPhi, &p, &channel, &q, n, trials, seed)?;
    let info_proxy = p_liminf_estimate(&density, eps)?;
    let phi_proxy = p_liminf_estimate(&tail, eps)?;
    let difference = phi_proxy - info_proxy;
    Ok(MatchedIdentityReport {
        info_density_proxy: info_proxy,
        neg_log_phi_proxy: phi_proxy,
        difference,
        dominance_ok: difference >= -0.05,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::lift_metric;
    use crate::util::index_to_word;

    fn agreement() -> Metric {
        Metric::additive(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn binomial_tail_oracle() {
        // Pr{Bin(3, 1/2) >= 2} = 1/2
        let v = tail_product_exact(&agreement(), &[0.5, 0.5], &[0, 0, 0], 2.0 / 3.0).unwrap();
        assert_eq!(v, 0.5);
        let all = tail_product_exact(&agreement(), &[0.5, 0.5], &[0, 0, 0], -1.0).unwrap();
        assert_eq!(all, 1.0);
        let none = tail_product_exact(&agreement(), &[0.5, 0.5], &[0, 0, 0], 1.1).unwrap();
        assert_eq!(none, 0.0);
    }

    #[test]
    fn product_tail_matches_enumeration() {
        // dyadic metric entries make the enumeration sums exact
        let q = Metric::additive(vec![vec![0.25, 0.875], vec![0.5, 0.125]]).unwrap();
        let pmf = [0.25, 0.75];
        let n = 4;
        let y = vec![0usize, 1, 1, 0];
        let qn = lift_metric(&q, n).unwrap();
        for ci in 0..40 {
            let c = -0.1 + ci as f64 * 0.03;
            let exact = tail_product_exact(&q, &pmf, &y, c).unwrap();
            let mut brute = 0.0;
            for xi in 0..16 {
                let x = index_to_word(xi, 2, n);
                if qn.value(&x, &y) >= c {
                    brute += x.iter().map(|&s| pmf[s]).product::<f64>();
                }
            }
            assert!(
                (exact - brute).abs() <= 1e-12,
                "c={c}: exact {exact} vs brute {brute}"
            );
        }
    }

    #[test]
    fn composition_tail_matches_enumeration() {
        let q = agreement();
        let comp = vec![2usize, 2];
        let y = vec![0usize, 0, 1, 1];
        let class = crate::model::type_class_words(&comp, 100).unwrap();
        // exact dyadic lattice points plus clearly interior levels; floats
        // within 1e-9 of a lattice point are snapped by design and would
        // need the same convention on the brute-force side
        let levels: Vec<f64> = (-2..=5)
            .flat_map(|k| [k as f64 * 0.25, k as f64 * 0.25 + 0.1])
            .collect();
        for c in levels {
            let exact = tail_fixed_composition_exact(&q, &comp, &y, c).unwrap();
            let brute = class
                .iter()
                .filter(|x| q.value(x, &y) >= c)
                .count() as f64
                / class.len() as f64;
            assert!(
                (exact - brute).abs() <= 1e-12,
                "c={c}: exact {exact} vs brute {brute}"
            );
        }
    }

    #[test]
    fn lattice_embeds_two_valued_metrics_exactly() {
        let (q, _) = crate::model::log_likelihood_metric(&Dmc::bsc(0.1).unwrap());
        let lat = MetricLattice::embed(&q).unwrap();
        assert_eq!(lat.denom(), 1);
        let t = q.additive_table().unwrap();
        let lo = t.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
        for x in 0..2 {
            for y in 0..2 {
                // the integer image is exact; the float reconstruction can
                // differ by the one rounding in (v1 - v0)
                let expected = usize::from(t[x][y] != lo) as i64;
                assert_eq!(lat.int_value(x, y), expected);
                let rebuilt = lat.offset() + lat.unit() * lat.int_value(x, y) as f64;
                assert!((rebuilt - t[x][y]).abs() <= 1e-12 * t[x][y].abs());
            }
        }
    }

    #[test]
    fn lattice_rejects_unresolvable_ratios() {
        // gap ratio 1.0000001 has no rational approximation within 1e-9
        // using a denominator <= 1e6, so this metric must not embed (well
        // approximable irrationals like sqrt(2) do embed, by design)
        let q = Metric::additive(vec![vec![0.0, 1.0], vec![1.000_000_1, 0.0]]).unwrap();
        assert!(matches!(
            MetricLattice::embed(&q),
            Err(Error::NoLattice { .. })
        ));
        let (sq, _) = crate::model::log_likelihood_metric(&Dmc::bsc(0.1).unwrap());
        assert!(MetricLattice::embed(&sq).is_ok());
    }

    #[test]
    fn noiseless_matched_samples_are_exactly_one() {
        let w = Dmc::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let (q, _) = crate::model::log_likelihood_metric(&w);
        let p = InputDistribution::uniform_iid(8, 2).unwrap();
        let s = sample_statistic(
            Statistic::NegLogPhi,
            &p,
            &ChannelModel::Single(w),
            &q,
            8,
            200,
            7,
        )
        .unwrap();
        assert!(s.values.iter().all(|&v| v == 1.0));
        assert!(!s.bias_warning);
    }

    #[test]
    fn quantile_proxies_are_monotone_in_eps() {
        let w = Dmc::bsc(0.1).unwrap();
        let (q, _) = crate::model::log_likelihood_metric(&w);
        let p = InputDistribution::uniform_iid(50, 2).unwrap();
        let s = sample_statistic(
            Statistic::InfoDensity,
            &p,
            &ChannelModel::Single(w),
            &q,
            50,
            500,
            3,
        )
        .unwrap();
        let mut last_lo = f64::NEG_INFINITY;
        let mut last_hi = f64::INFINITY;
        for eps in [0.05, 0.1, 0.2, 0.3, 0.4] {
            let lo = p_liminf_estimate(&s, eps).unwrap();
            let hi = p_limsup_estimate(&s, eps).unwrap();
            assert!(lo >= last_lo && hi <= last_hi);
            assert!(lo <= hi);
            last_lo = lo;
            last_hi = hi;
        }
    }

    #[test]
    fn sampling_is_deterministic_across_thread_counts() {
        let w = Dmc::bsc(0.2).unwrap();
        let q = agreement();
        let p = InputDistribution::uniform_iid(32, 2).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                sample_statistic(
                    Statistic::NegLogPhi,
                    &p,
                    &ChannelModel::Single(w.clone()),
                    &q,
                    32,
                    300,
                    99,
                )
                .unwrap()
            })
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.values.len(), b.values.len());
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn mixture_draws_split_by_weight() {
        let m = ChannelModel::mixture(vec![
            (0.5, Dmc::bsc(0.01).unwrap()),
            (0.5, Dmc::bsc(0.3).unwrap()),
        ])
        .unwrap();
        let p = InputDistribution::uniform_iid(100, 2).unwrap();
        let q = agreement();
        // per-block metric value concentrates near 0.99 or 0.7 depending on
        // the realized component
        let s = sample_statistic(Statistic::MetricValue, &p, &m, &q, 100, 400, 11).unwrap();
        let low = s.values.iter().filter(|&&v| v < 0.85).count();
        let high = s.values.len() - low;
        assert!(low > 100 && high > 100, "low {low} high {high}");
    }

    #[test]
    fn mixture_schema_round_trips() {
        let m = ChannelModel::mixture(vec![
            (0.5, Dmc::bsc(0.01).unwrap()),
            (0.5, Dmc::bsc(0.3).unwrap()),
        ])
        .unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("mixture"));
        let back: ChannelModel = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
        let single: ChannelModel =
            serde_json::from_str(&serde_json::to_string(&Dmc::bsc(0.1).unwrap()).unwrap())
                .unwrap();
        assert!(matches!(single, ChannelModel::Single(_)));
    }

    #[test]
    fn threshold_exponent_trivial_levels() {
        let w = Dmc::bsc(0.1).unwrap();
        let q = agreement();
        let p = InputDistribution::uniform_type(vec![8, 8]).unwrap();
        let r = threshold_exponent(
            &p,
            &ChannelModel::Single(w),
            &q,
            -0.5,
            16,
            150,
            0.05,
            5,
        )
        .unwrap();
        // tau below the minimum: Phi = 1 surely
        assert_eq!(r.exponent, 0.0);
        assert!(!r.feasibility_warning);
    }
}
