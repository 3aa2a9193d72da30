//! Channels, decoding metrics, codebooks, and input distributions, plus the
//! exact combinatorics of composition (type) classes.
//!
//! Conventions used throughout:
//! * words over an alphabet of size `b` are indexed lexicographically, with
//!   the rightmost position varying fastest (see [`crate::util::word_to_index`]);
//! * an n-letter metric value for an additive metric is the per-letter
//!   average `(1/n) * sum q(x_i, y_i)`, summed first and divided once;
//! * all probability tables are validated row-stochastic within [`STOCHASTIC_TOL`].

use crate::util::{
    big_ratio_to_f64, checked_pow, index_to_word, multinomial_big, word_to_index,
};
use crate::{Error, Result};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

/// Rows must sum to one within this tolerance.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Dense n-letter tables larger than this are refused by default.
pub const DEFAULT_ENTRY_CAP: usize = 10_000_000;

/// Surrogate for log2(0) when building log-likelihood metrics.
pub const LOG_ZERO_SURROGATE: f64 = -1e3;

fn validate_rows(rows: &[Vec<f64>], cols: usize) -> Result<()> {
    if rows.is_empty() || cols == 0 {
        return Err(Error::Dimension("empty probability table".into()));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::Dimension(format!(
                "row {i} has {} entries, expected {cols}",
                row.len()
            )));
        }
        let mut sum = 0.0;
        for (j, &p) in row.iter().enumerate() {
            if !(p >= 0.0) {
                return Err(Error::NegativeEntry {
                    row: i,
                    col: j,
                    value: p,
                });
            }
            sum += p;
        }
        // the relative fudge keeps the decimal boundary case inclusive: a
        // row summing to the literal 0.999999999 parses a hair beyond 1e-9
        // in binary and must still pass
        if (sum - 1.0).abs() > STOCHASTIC_TOL * (1.0 + 1e-6) {
            return Err(Error::NotStochastic {
                row: i,
                sum,
                tol: STOCHASTIC_TOL,
            });
        }
    }
    Ok(())
}

/// A discrete memoryless channel: a row-stochastic |X| x |Y| matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DmcSchema", into = "DmcSchema")]
pub struct Dmc {
    rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct DmcSchema {
    inputs: usize,
    outputs: usize,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<DmcSchema> for Dmc {
    type Error = Error;
    fn try_from(s: DmcSchema) -> Result<Self> {
        if s.rows.len() != s.inputs {
            return Err(Error::Dimension(format!(
                "declared {} inputs but {} rows",
                s.inputs,
                s.rows.len()
            )));
        }
        if s.outputs == 0 || s.rows.iter().any(|r| r.len() != s.outputs) {
            return Err(Error::Dimension(format!(
                "declared {} outputs but row lengths differ",
                s.outputs
            )));
        }
        Dmc::new(s.rows)
    }
}

impl From<Dmc> for DmcSchema {
    fn from(w: Dmc) -> Self {
        DmcSchema {
            inputs: w.num_inputs(),
            outputs: w.num_outputs(),
            rows: w.rows,
        }
    }
}

impl Dmc {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        validate_rows(&rows, cols)?;
        Ok(Dmc { rows })
    }

    /// Binary symmetric channel with crossover probability p.
    pub fn bsc(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("crossover {p} outside [0, 1]")));
        }
        Dmc::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    pub fn num_inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Output marginal induced by a single-letter input pmf.
    pub fn output_marginal(&self, pmf: &[f64]) -> Result<Vec<f64>> {
        if pmf.len() != self.num_inputs() {
            return Err(Error::Dimension("pmf length != channel inputs".into()));
        }
        let mut out = vec![0.0; self.num_outputs()];
        for (x, row) in self.rows.iter().enumerate() {
            for (y, &w) in row.iter().enumerate() {
                out[y] += pmf[x] * w;
            }
        }
        Ok(out)
    }
}

/// A channel over n-letter words, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct NLetterChannel {
    n: usize,
    base_inputs: usize,
    base_outputs: usize,
    rows: Vec<Vec<f64>>,
}

impl NLetterChannel {
    pub fn explicit(
        n: usize,
        base_inputs: usize,
        base_outputs: usize,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let nx = checked_pow(base_inputs, n)
            .ok_or_else(|| Error::Domain("input word count overflows".into()))?;
        let ny = checked_pow(base_outputs, n)
            .ok_or_else(|| Error::Domain("output word count overflows".into()))?;
        if rows.len() != nx {
            return Err(Error::Dimension(format!(
                "expected {nx} rows, got {}",
                rows.len()
            )));
        }
        validate_rows(&rows, ny)?;
        Ok(NLetterChannel {
            n,
            base_inputs,
            base_outputs,
            rows,
        })
    }

    pub fn from_dmc(w: &Dmc) -> Self {
        NLetterChannel {
            n: 1,
            base_inputs: w.num_inputs(),
            base_outputs: w.num_outputs(),
            rows: w.rows().to_vec(),
        }
    }

    /// n-fold memoryless extension of `w`, refusing tables above `cap` entries.
    pub fn power_with_cap(w: &Dmc, n: usize, cap: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("blocklength must be positive".into()));
        }
        let nx = checked_pow(w.num_inputs(), n)
            .ok_or_else(|| Error::TooLarge { size: usize::MAX, cap })?;
        let ny = checked_pow(w.num_outputs(), n)
            .ok_or_else(|| Error::TooLarge { size: usize::MAX, cap })?;
        let size = nx
            .checked_mul(ny)
            .ok_or_else(|| Error::TooLarge { size: usize::MAX, cap })?;
        if size > cap {
            return Err(Error::TooLarge { size, cap });
        }
        let mut rows = Vec::with_capacity(nx);
        for xi in 0..nx {
            let xw = index_to_word(xi, w.num_inputs(), n);
            let mut row = Vec::with_capacity(ny);
            for yi in 0..ny {
                let yw = index_to_word(yi, w.num_outputs(), n);
                let mut p = 1.0;
                for i in 0..n {
                    p *= w.prob(xw[i], yw[i]);
                }
                row.push(p);
            }
            rows.push(row);
        }
        Ok(NLetterChannel {
            n,
            base_inputs: w.num_inputs(),
            base_outputs: w.num_outputs(),
            rows,
        })
    }

    pub fn power(w: &Dmc, n: usize) -> Result<Self> {
        Self::power_with_cap(w, n, DEFAULT_ENTRY_CAP)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn base_inputs(&self) -> usize {
        self.base_inputs
    }

    pub fn base_outputs(&self) -> usize {
        self.base_outputs
    }

    pub fn num_input_words(&self) -> usize {
        self.rows.len()
    }

    pub fn num_output_words(&self) -> usize {
        self.rows[0].len()
    }

    pub fn prob_by_index(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    pub fn prob(&self, x: &[usize], y: &[usize]) -> f64 {
        self.rows[word_to_index(x, self.base_inputs)][word_to_index(y, self.base_outputs)]
    }

    pub fn row_by_index(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    /// Reinterpret words as single symbols, e.g. to feed product channels to
    /// single-letter solvers.
    pub fn to_dmc(&self) -> Dmc {
        Dmc {
            rows: self.rows.clone(),
        }
    }
}

/// Product channel W^k with lexicographic word indexing.
pub fn product_channel(w: &Dmc, k: usize) -> Result<NLetterChannel> {
    NLetterChannel::power(w, k)
}

/// A decoding metric: either a single-letter table applied additively, or an
/// explicit n-letter table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MetricSchema", into = "MetricSchema")]
pub struct Metric {
    form: MetricForm,
    bound: f64,
    non_negative: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricForm {
    Additive {
        table: Vec<Vec<f64>>,
    },
    Explicit {
        n: usize,
        inputs: usize,
        outputs: usize,
        table: Vec<f64>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum MetricSchema {
    Additive {
        table: Vec<Vec<f64>>,
    },
    Explicit {
        n: usize,
        inputs: usize,
        outputs: usize,
        table: Vec<f64>,
    },
}

impl TryFrom<MetricSchema> for Metric {
    type Error = Error;
    fn try_from(s: MetricSchema) -> Result<Self> {
        match s {
            MetricSchema::Additive { table } => Metric::additive(table),
            MetricSchema::Explicit {
                n,
                inputs,
                outputs,
                table,
            } => Metric::explicit(n, inputs, outputs, table),
        }
    }
}

impl From<Metric> for MetricSchema {
    fn from(m: Metric) -> Self {
        match m.form {
            MetricForm::Additive { table } => MetricSchema::Additive { table },
            MetricForm::Explicit {
                n,
                inputs,
                outputs,
                table,
            } => MetricSchema::Explicit {
                n,
                inputs,
                outputs,
                table,
            },
        }
    }
}

fn scan_entries<'a>(entries: impl Iterator<Item = &'a f64>) -> Result<(f64, bool)> {
    let mut bound = 0.0f64;
    let mut non_negative = true;
    let mut any = false;
    for &v in entries {
        if !v.is_finite() {
            return Err(Error::Domain(format!("non-finite metric entry {v}")));
        }
        any = true;
        bound = bound.max(v.abs());
        if v < 0.0 {
            non_negative = false;
        }
    }
    if !any {
        return Err(Error::Dimension("empty metric table".into()));
    }
    Ok((bound, non_negative))
}

impl Metric {
    pub fn additive(table: Vec<Vec<f64>>) -> Result<Self> {
        let cols = table.first().map(|r| r.len()).unwrap_or(0);
        if cols == 0 || table.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("metric table must be rectangular".into()));
        }
        let (bound, non_negative) = scan_entries(table.iter().flatten())?;
        Ok(Metric {
            form: MetricForm::Additive { table },
            bound,
            non_negative,
        })
    }

    pub fn explicit(n: usize, inputs: usize, outputs: usize, table: Vec<f64>) -> Result<Self> {
        let nx = checked_pow(inputs, n)
            .ok_or_else(|| Error::Domain("input word count overflows".into()))?;
        let ny = checked_pow(outputs, n)
            .ok_or_else(|| Error::Domain("output word count overflows".into()))?;
        let size = nx
            .checked_mul(ny)
            .ok_or_else(|| Error::Domain("metric table size overflows".into()))?;
        if table.len() != size {
            return Err(Error::Dimension(format!(
                "expected {size} metric entries, got {}",
                table.len()
            )));
        }
        if size > DEFAULT_ENTRY_CAP {
            return Err(Error::TooLarge {
                size,
                cap: DEFAULT_ENTRY_CAP,
            });
        }
        let (bound, non_negative) = scan_entries(table.iter())?;
        Ok(Metric {
            form: MetricForm::Explicit {
                n,
                inputs,
                outputs,
                table,
            },
            bound,
            non_negative,
        })
    }

    pub fn form(&self) -> &MetricForm {
        &self.form
    }

    pub fn is_additive(&self) -> bool {
        matches!(self.form, MetricForm::Additive { .. })
    }

    pub fn additive_table(&self) -> Option<&Vec<Vec<f64>>> {
        match &self.form {
            MetricForm::Additive { table } => Some(table),
            _ => None,
        }
    }

    /// Native blocklength: 1 for additive metrics, n for explicit tables.
    pub fn native_n(&self) -> usize {
        match &self.form {
            MetricForm::Additive { .. } => 1,
            MetricForm::Explicit { n, .. } => *n,
        }
    }

    pub fn base_inputs(&self) -> usize {
        match &self.form {
            MetricForm::Additive { table } => table.len(),
            MetricForm::Explicit { inputs, .. } => *inputs,
        }
    }

    pub fn base_outputs(&self) -> usize {
        match &self.form {
            MetricForm::Additive { table } => table[0].len(),
            MetricForm::Explicit { outputs, .. } => *outputs,
        }
    }

    /// Largest absolute entry. For additive metrics this also bounds every
    /// per-letter average.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn is_non_negative(&self) -> bool {
        self.non_negative
    }

    pub fn min_entry(&self) -> f64 {
        match &self.form {
            MetricForm::Additive { table } => table
                .iter()
                .flatten()
                .cloned()
                .fold(f64::INFINITY, f64::min),
            MetricForm::Explicit { table, .. } => {
                table.iter().cloned().fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Metric value of a word pair. For additive metrics the value is the
    /// per-letter average, accumulated as a single sum divided once by n so
    /// that equal letter multisets give bit-identical values.
    pub fn value(&self, x: &[usize], y: &[usize]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match &self.form {
            MetricForm::Additive { table } => {
                let mut sum = 0.0;
                for (&xi, &yi) in x.iter().zip(y) {
                    sum += table[xi][yi];
                }
                sum / x.len() as f64
            }
            MetricForm::Explicit {
                n,
                inputs,
                outputs,
                table,
            } => {
                debug_assert_eq!(x.len(), *n);
                let xi = word_to_index(x, *inputs);
                let yi = word_to_index(y, *outputs);
                let ny = checked_pow(*outputs, *n).unwrap();
                table[xi * ny + yi]
            }
        }
    }

    /// Entrywise shift by `c`, preserving the form.
    pub fn shifted(&self, c: f64) -> Result<Metric> {
        match &self.form {
            MetricForm::Additive { table } => {
                let t = table
                    .iter()
                    .map(|r| r.iter().map(|&v| v + c).collect())
                    .collect();
                Metric::additive(t)
            }
            MetricForm::Explicit {
                n,
                inputs,
                outputs,
                table,
            } => Metric::explicit(
                *n,
                *inputs,
                *outputs,
                table.iter().map(|&v| v + c).collect(),
            ),
        }
    }

    /// Entrywise affine map a*q + b, preserving the form.
    pub fn affine(&self, a: f64, b: f64) -> Result<Metric> {
        match &self.form {
            MetricForm::Additive { table } => {
                let t = table
                    .iter()
                    .map(|r| r.iter().map(|&v| a * v + b).collect())
                    .collect();
                Metric::additive(t)
            }
            MetricForm::Explicit {
                n,
                inputs,
                outputs,
                table,
            } => Metric::explicit(
                *n,
                *inputs,
                *outputs,
                table.iter().map(|&v| a * v + b).collect(),
            ),
        }
    }
}

/// Expand an additive metric into an explicit n-letter table of per-letter
/// averages. Values are computed with the same sum-then-divide rule as
/// [`Metric::value`], so the two forms agree bit for bit.
pub fn lift_metric(q: &Metric, n: usize) -> Result<Metric> {
    let table = match q.form() {
        MetricForm::Additive { .. } => {
            let inputs = q.base_inputs();
            let outputs = q.base_outputs();
            let nx = checked_pow(inputs, n)
                .ok_or_else(|| Error::Domain("input word count overflows".into()))?;
            let ny = checked_pow(outputs, n)
                .ok_or_else(|| Error::Domain("output word count overflows".into()))?;
            let size = nx
                .checked_mul(ny)
                .ok_or_else(|| Error::Domain("table size overflows".into()))?;
            if size > DEFAULT_ENTRY_CAP {
                return Err(Error::TooLarge {
                    size,
                    cap: DEFAULT_ENTRY_CAP,
                });
            }
            let mut table = Vec::with_capacity(size);
            for xi in 0..nx {
                let xw = index_to_word(xi, inputs, n);
                for yi in 0..ny {
                    let yw = index_to_word(yi, outputs, n);
                    table.push(q.value(&xw, &yw));
                }
            }
            table
        }
        MetricForm::Explicit { .. } => {
            return Err(Error::Unsupported(
                "lift_metric expects a single-letter additive metric".into(),
            ))
        }
    };
    Metric::explicit(n, q.base_inputs(), q.base_outputs(), table)
}

/// Single-letter erasures-only metric 1{W(y|x) > 0}; the support test is an
/// exact comparison with zero.
pub fn erasures_metric(w: &Dmc) -> Metric {
    let table = w
        .rows()
        .iter()
        .map(|r| r.iter().map(|&p| if p > 0.0 { 1.0 } else { 0.0 }).collect())
        .collect();
    Metric::additive(table).expect("indicator table is always valid")
}

/// Explicit n-letter erasures-only metric 1{W_n(y|x) > 0}.
pub fn erasures_metric_n(wn: &NLetterChannel) -> Result<Metric> {
    let ny = wn.num_output_words();
    let mut table = Vec::with_capacity(wn.num_input_words() * ny);
    for x in 0..wn.num_input_words() {
        for y in 0..ny {
            table.push(if wn.prob_by_index(x, y) > 0.0 { 1.0 } else { 0.0 });
        }
    }
    Metric::explicit(wn.n(), wn.base_inputs(), wn.base_outputs(), table)
}

/// Metric whose value is the letterwise law V(y|x) itself. Non-negative by
/// construction, which is what the pointwise tail bound needs.
pub fn mml_metric(v: &Dmc) -> Metric {
    Metric::additive(v.rows().to_vec()).expect("stochastic table is a valid metric")
}

/// log2 W(y|x) with zeros clipped to [`LOG_ZERO_SURROGATE`]. The returned
/// flag reports whether any entry was clipped.
pub fn log_likelihood_metric(w: &Dmc) -> (Metric, bool) {
    let mut clipped = false;
    let table: Vec<Vec<f64>> = w
        .rows()
        .iter()
        .map(|r| {
            r.iter()
                .map(|&p| {
                    if p > 0.0 {
                        p.log2()
                    } else {
                        clipped = true;
                        LOG_ZERO_SURROGATE
                    }
                })
                .collect()
        })
        .collect();
    (
        Metric::additive(table).expect("log table is rectangular and finite"),
        clipped,
    )
}

/// A codebook of M words of length n. Duplicate words are allowed; the
/// max-metric decoder then never sees a unique maximiser for them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CodebookSchema", into = "CodebookSchema")]
pub struct Codebook {
    n: usize,
    words: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct CodebookSchema {
    n: usize,
    words: Vec<Vec<usize>>,
}

impl TryFrom<CodebookSchema> for Codebook {
    type Error = Error;
    fn try_from(s: CodebookSchema) -> Result<Self> {
        Codebook::new(s.n, s.words)
    }
}

impl From<Codebook> for CodebookSchema {
    fn from(c: Codebook) -> Self {
        CodebookSchema {
            n: c.n,
            words: c.words,
        }
    }
}

impl Codebook {
    pub fn new(n: usize, words: Vec<Vec<usize>>) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::Dimension("codebook needs at least one word".into()));
        }
        for (i, w) in words.iter().enumerate() {
            if w.len() != n {
                return Err(Error::Dimension(format!(
                    "word {i} has length {}, expected {n}",
                    w.len()
                )));
            }
        }
        Ok(Codebook { n, words })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.words.len()
    }

    pub fn word(&self, m: usize) -> &[usize] {
        &self.words[m]
    }

    pub fn words(&self) -> &[Vec<usize>] {
        &self.words
    }

    pub fn max_symbol(&self) -> usize {
        self.words
            .iter()
            .flat_map(|w| w.iter().cloned())
            .max()
            .unwrap_or(0)
    }

    pub fn has_duplicates(&self) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        self.words.iter().any(|w| !seen.insert(w.clone()))
    }
}

/// Symbol counts of a word over an alphabet of the given size.
pub fn composition(word: &[usize], alphabet: usize) -> Vec<usize> {
    let mut c = vec![0usize; alphabet];
    for &s in word {
        c[s] += 1;
    }
    c
}

/// Number of words with the given composition, n! / prod(c_i!).
pub fn type_class_size(comp: &[usize]) -> BigInt {
    multinomial_big(comp.iter().sum(), comp)
}

/// All words of the given composition, in lexicographic order. Guarded by
/// `cap` because the class size grows as a multinomial.
pub fn type_class_words(comp: &[usize], cap: usize) -> Result<Vec<Vec<usize>>> {
    let n: usize = comp.iter().sum();
    let size = type_class_size(comp);
    if size > BigInt::from(cap) {
        return Err(Error::TooLarge {
            size: cap + 1,
            cap,
        });
    }
    let mut out = Vec::new();
    let mut word = Vec::with_capacity(n);
    let mut remaining = comp.to_vec();
    fn rec(
        word: &mut Vec<usize>,
        remaining: &mut [usize],
        n: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        if word.len() == n {
            out.push(word.clone());
            return;
        }
        for s in 0..remaining.len() {
            if remaining[s] > 0 {
                remaining[s] -= 1;
                word.push(s);
                rec(word, remaining, n, out);
                word.pop();
                remaining[s] += 1;
            }
        }
    }
    rec(&mut word, &mut remaining, n, &mut out);
    Ok(out)
}

/// An input distribution over n-letter words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistSchema", into = "DistSchema")]
pub struct InputDistribution {
    n: usize,
    num_symbols: usize,
    form: DistForm,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistForm {
    /// Dense vector over all |X|^n words.
    Dense(Vec<f64>),
    /// Product of a single-letter pmf.
    Iid(Vec<f64>),
    /// Uniform over the composition class of the given counts.
    UniformType(Vec<usize>),
    /// Equal mass 1/M on each word occurrence of a codebook; duplicated
    /// words accumulate their multiplicity.
    UniformCodebook(Codebook),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum DistSchema {
    Dense {
        n: usize,
        inputs: usize,
        probs: Vec<f64>,
    },
    Iid {
        n: usize,
        pmf: Vec<f64>,
    },
    UniformType {
        composition: Vec<usize>,
    },
    UniformCodebook {
        inputs: usize,
        codebook: Codebook,
    },
}

impl TryFrom<DistSchema> for InputDistribution {
    type Error = Error;
    fn try_from(s: DistSchema) -> Result<Self> {
        match s {
            DistSchema::Dense { n, inputs, probs } => InputDistribution::dense(n, inputs, probs),
            DistSchema::Iid { n, pmf } => InputDistribution::iid(n, pmf),
            DistSchema::UniformType { composition } => InputDistribution::uniform_type(composition),
            DistSchema::UniformCodebook { inputs, codebook } => {
                InputDistribution::uniform_codebook(inputs, codebook)
            }
        }
    }
}

impl From<InputDistribution> for DistSchema {
    fn from(d: InputDistribution) -> Self {
        let (n, inputs) = (d.n, d.num_symbols);
        match d.form {
            DistForm::Dense(probs) => DistSchema::Dense { n, inputs, probs },
            DistForm::Iid(pmf) => DistSchema::Iid { n, pmf },
            DistForm::UniformType(composition) => DistSchema::UniformType { composition },
            DistForm::UniformCodebook(codebook) => DistSchema::UniformCodebook { inputs, codebook },
        }
    }
}

fn validate_pmf(pmf: &[f64]) -> Result<()> {
    let mut sum = 0.0;
    for (i, &p) in pmf.iter().enumerate() {
        if !(p >= 0.0) {
            return Err(Error::NegativeEntry {
                row: 0,
                col: i,
                value: p,
            });
        }
        sum += p;
    }
    // same decimal-boundary fudge as the channel row check
    if (sum - 1.0).abs() > STOCHASTIC_TOL * (1.0 + 1e-6) {
        return Err(Error::NotStochastic {
            row: 0,
            sum,
            tol: STOCHASTIC_TOL,
        });
    }
    Ok(())
}

impl InputDistribution {
    pub fn dense(n: usize, num_symbols: usize, probs: Vec<f64>) -> Result<Self> {
        let expect = checked_pow(num_symbols, n)
            .ok_or_else(|| Error::Domain("word count overflows".into()))?;
        if probs.len() != expect {
            return Err(Error::Dimension(format!(
                "expected {expect} probabilities, got {}",
                probs.len()
            )));
        }
        validate_pmf(&probs)?;
        Ok(InputDistribution {
            n,
            num_symbols,
            form: DistForm::Dense(probs),
        })
    }

    pub fn iid(n: usize, pmf: Vec<f64>) -> Result<Self> {
        if n == 0 || pmf.is_empty() {
            return Err(Error::Dimension("empty iid distribution".into()));
        }
        validate_pmf(&pmf)?;
        Ok(InputDistribution {
            num_symbols: pmf.len(),
            n,
            form: DistForm::Iid(pmf),
        })
    }

    pub fn uniform_iid(n: usize, num_symbols: usize) -> Result<Self> {
        Self::iid(n, vec![1.0 / num_symbols as f64; num_symbols])
    }

    pub fn uniform_type(composition: Vec<usize>) -> Result<Self> {
        let n: usize = composition.iter().sum();
        if n == 0 || composition.is_empty() {
            return Err(Error::Dimension("empty composition".into()));
        }
        Ok(InputDistribution {
            n,
            num_symbols: composition.len(),
            form: DistForm::UniformType(composition),
        })
    }

    pub fn uniform_codebook(num_symbols: usize, codebook: Codebook) -> Result<Self> {
        if codebook.max_symbol() >= num_symbols {
            return Err(Error::Domain(format!(
                "codebook symbol {} outside alphabet of size {num_symbols}",
                codebook.max_symbol()
            )));
        }
        Ok(InputDistribution {
            n: codebook.n(),
            num_symbols,
            form: DistForm::UniformCodebook(codebook),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    pub fn form(&self) -> &DistForm {
        &self.form
    }

    pub fn iid_pmf(&self) -> Option<&[f64]> {
        match &self.form {
            DistForm::Iid(p) => Some(p),
            _ => None,
        }
    }

    /// Probability of a single word.
    pub fn prob(&self, word: &[usize]) -> f64 {
        debug_assert_eq!(word.len(), self.n);
        match &self.form {
            DistForm::Dense(probs) => probs[word_to_index(word, self.num_symbols)],
            DistForm::Iid(pmf) => word.iter().map(|&s| pmf[s]).product(),
            DistForm::UniformType(comp) => {
                if composition(word, self.num_symbols) == *comp {
                    let size = type_class_size(comp);
                    big_ratio_to_f64(&BigInt::from(1), &size)
                } else {
                    0.0
                }
            }
            DistForm::UniformCodebook(cb) => {
                let mult = cb.words().iter().filter(|w| w.as_slice() == word).count();
                mult as f64 / cb.size() as f64
            }
        }
    }

    /// Distinct support words with their masses, in a deterministic order.
    /// Fails when the support cannot be enumerated within `cap` words.
    pub fn support(&self, cap: usize) -> Result<Vec<(Vec<usize>, f64)>> {
        match &self.form {
            DistForm::Dense(probs) => {
                let mut out = Vec::new();
                for (i, &p) in probs.iter().enumerate() {
                    if p > 0.0 {
                        out.push((index_to_word(i, self.num_symbols, self.n), p));
                    }
                }
                Ok(out)
            }
            DistForm::Iid(pmf) => {
                let total = checked_pow(self.num_symbols, self.n)
                    .ok_or_else(|| Error::TooLarge { size: usize::MAX, cap })?;
                if total > cap {
                    return Err(Error::TooLarge { size: total, cap });
                }
                let mut out = Vec::new();
                for i in 0..total {
                    let w = index_to_word(i, self.num_symbols, self.n);
                    let p: f64 = w.iter().map(|&s| pmf[s]).product();
                    if p > 0.0 {
                        out.push((w, p));
                    }
                }
                Ok(out)
            }
            DistForm::UniformType(comp) => {
                let words = type_class_words(comp, cap)?;
                let size = type_class_size(comp);
                let p = big_ratio_to_f64(&BigInt::from(1), &size);
                Ok(words.into_iter().map(|w| (w, p)).collect())
            }
            DistForm::UniformCodebook(cb) => {
                // group duplicates so the mass of a word is multiplicity / M,
                // computed with a single division
                let m = cb.size() as f64;
                let mut seen: Vec<(Vec<usize>, usize)> = Vec::new();
                for w in cb.words() {
                    match seen.iter_mut().find(|(sw, _)| sw == w) {
                        Some((_, count)) => *count += 1,
                        None => seen.push((w.clone(), 1)),
                    }
                }
                Ok(seen
                    .into_iter()
                    .map(|(w, count)| (w, count as f64 / m))
                    .collect())
            }
        }
    }
}

/// Joint symbol counts of an (x, y) word pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointComposition {
    pub counts: Vec<Vec<usize>>,
}

impl JointComposition {
    pub fn new(counts: Vec<Vec<usize>>) -> Result<Self> {
        if counts.is_empty() || counts[0].is_empty() {
            return Err(Error::Dimension("empty joint composition".into()));
        }
        let cols = counts[0].len();
        if counts.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged joint composition".into()));
        }
        Ok(JointComposition { counts })
    }

    pub fn of_pair(x: &[usize], y: &[usize], inputs: usize, outputs: usize) -> Self {
        let mut counts = vec![vec![0usize; outputs]; inputs];
        for (&xi, &yi) in x.iter().zip(y) {
            counts[xi][yi] += 1;
        }
        JointComposition { counts }
    }

    pub fn n(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn x_marginal(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn y_marginal(&self) -> Vec<usize> {
        let cols = self.counts[0].len();
        (0..cols)
            .map(|y| self.counts.iter().map(|r| r[y]).sum())
            .collect()
    }
}

/// Probability that a word drawn uniformly from the composition class of
/// `comp` forms the joint composition `j` with the fixed word `y`:
///
/// ```text
/// prod_y C(n_y; J(., y))  /  C(n; comp)
/// ```
///
/// where the factors are multinomial coefficients and n_y counts symbol y
/// in `y`. Both marginals of `j` must match, otherwise the count is not
/// defined and an error is returned. Arithmetic is exact big-integer, with
/// a single conversion to f64 at the end.
pub fn conditional_type_prob(
    comp: &[usize],
    y: &[usize],
    j: &JointComposition,
    num_outputs: usize,
) -> Result<f64> {
    let n: usize = comp.iter().sum();
    if y.len() != n {
        return Err(Error::Dimension(format!(
            "y has length {}, composition expects {n}",
            y.len()
        )));
    }
    if j.counts.len() != comp.len() || j.counts[0].len() != num_outputs {
        return Err(Error::Dimension("joint composition shape mismatch".into()));
    }
    if j.x_marginal() != comp {
        return Err(Error::Precondition(
            "joint composition x-marginal differs from input composition".into(),
        ));
    }
    let y_comp = composition(y, num_outputs);
    if j.y_marginal() != y_comp {
        return Err(Error::Precondition(
            "joint composition y-marginal differs from the received word".into(),
        ));
    }
    let mut numerator = BigInt::from(1);
    for yv in 0..num_outputs {
        let col: Vec<usize> = j.counts.iter().map(|r| r[yv]).collect();
        numerator *= multinomial_big(y_comp[yv], &col);
    }
    let denominator = multinomial_big(n, comp);
    Ok(big_ratio_to_f64(&numerator, &denominator))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dmc_validation() {
        assert!(Dmc::new(vec![vec![0.5, 0.5], vec![0.3, 0.7]]).is_ok());
        assert!(matches!(
            Dmc::new(vec![vec![0.5, 0.6]]),
            Err(Error::NotStochastic { .. })
        ));
        assert!(matches!(
            Dmc::new(vec![vec![1.5, -0.5]]),
            Err(Error::NegativeEntry { .. })
        ));
    }

    #[test]
    fn power_indexing_is_lexicographic() {
        let w = Dmc::bsc(0.1).unwrap();
        let w2 = NLetterChannel::power(&w, 2).unwrap();
        // index 1 = word (0, 1): rightmost letter varies fastest
        assert!((w2.prob(&[0, 1], &[0, 0]) - 0.9 * 0.1).abs() < 1e-15);
        assert!((w2.prob_by_index(1, 0) - 0.9 * 0.1).abs() < 1e-15);
        assert!((w2.prob(&[0, 0], &[0, 0]) - 0.81).abs() < 1e-15);
    }

    #[test]
    fn power_respects_cap() {
        let w = Dmc::bsc(0.1).unwrap();
        assert!(matches!(
            NLetterChannel::power_with_cap(&w, 4, 100),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn metric_value_additive_vs_lifted() {
        let q = Metric::additive(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let q3 = lift_metric(&q, 3).unwrap();
        for xi in 0..8 {
            for yi in 0..8 {
                let x = index_to_word(xi, 2, 3);
                let y = index_to_word(yi, 2, 3);
                assert_eq!(q.value(&x, &y).to_bits(), q3.value(&x, &y).to_bits());
            }
        }
        assert_eq!(q3.bound(), 1.0);
    }

    #[test]
    fn erasures_metric_is_indicator() {
        let w = Dmc::new(vec![vec![1.0, 0.0], vec![0.3, 0.7]]).unwrap();
        let q = erasures_metric(&w);
        let t = q.additive_table().unwrap();
        assert_eq!(t[0], vec![1.0, 0.0]);
        assert_eq!(t[1], vec![1.0, 1.0]);
        assert!(q.is_non_negative());
    }

    #[test]
    fn log_metric_clips_zeros() {
        let (q, clipped) = log_likelihood_metric(&Dmc::new(vec![vec![1.0, 0.0]]).unwrap());
        assert!(clipped);
        let t = q.additive_table().unwrap();
        assert_eq!(t[0][0], 0.0);
        assert_eq!(t[0][1], LOG_ZERO_SURROGATE);
        let (_, clipped) = log_likelihood_metric(&Dmc::bsc(0.1).unwrap());
        assert!(!clipped);
    }

    #[test]
    fn uniform_type_probabilities() {
        let d = InputDistribution::uniform_type(vec![2, 1]).unwrap();
        assert_eq!(d.n(), 3);
        // |T(2,1)| = 3
        assert!((d.prob(&[0, 0, 1]) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.prob(&[1, 1, 0]), 0.0);
        let support = d.support(100).unwrap();
        assert_eq!(support.len(), 3);
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn codebook_distribution_accumulates_duplicates() {
        let cb = Codebook::new(2, vec![vec![0, 0], vec![1, 1], vec![0, 0]]).unwrap();
        assert!(cb.has_duplicates());
        let d = InputDistribution::uniform_codebook(2, cb).unwrap();
        assert!((d.prob(&[0, 0]) - 2.0 / 3.0).abs() < 1e-15);
        let support = d.support(10).unwrap();
        assert_eq!(support.len(), 2);
    }

    #[test]
    fn conditional_type_prob_sums_to_one() {
        // comp (2,2), y fixed with two zeros and two ones: sum over all
        // feasible joint compositions must be exactly 1
        let comp = vec![2usize, 2];
        let y = vec![0usize, 1, 0, 1];
        let mut total = 0.0;
        let mut feasible = 0;
        for j00 in 0..=2usize {
            for j01 in 0..=(2 - j00) {
                let j10 = 2 - j00;
                let j11 = 2 - j01;
                if j01 + j11 != 2 {
                    continue;
                }
                let j = JointComposition::new(vec![vec![j00, j01], vec![j10, j11]]).unwrap();
                if j.x_marginal() == comp && j.y_marginal() == vec![2, 2] {
                    total += conditional_type_prob(&comp, &y, &j, 2).unwrap();
                    feasible += 1;
                }
            }
        }
        assert!(feasible > 1);
        assert!((total - 1.0).abs() < 1e-9, "total {total}");
    }

    #[test]
    fn conditional_type_prob_rejects_marginal_mismatch() {
        let comp = vec![2usize, 2];
        let y = vec![0usize, 1, 0, 1];
        let j = JointComposition::new(vec![vec![2, 1], vec![0, 1]]).unwrap();
        assert!(matches!(
            conditional_type_prob(&comp, &y, &j, 2),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn json_schemas_round_trip() {
        let w = Dmc::bsc(0.1).unwrap();
        let s = serde_json::to_string(&w).unwrap();
        assert!(s.contains("\"inputs\":2"));
        let back: Dmc = serde_json::from_str(&s).unwrap();
        assert_eq!(w, back);

        let q = Metric::additive(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = serde_json::to_string(&q).unwrap();
        assert!(s.contains("\"kind\":\"additive\""));
        let back: Metric = serde_json::from_str(&s).unwrap();
        assert_eq!(q, back);

        let cb = Codebook::new(2, vec![vec![0, 0], vec![1, 1]]).unwrap();
        let back: Codebook = serde_json::from_str(&serde_json::to_string(&cb).unwrap()).unwrap();
        assert_eq!(cb, back);

        let d = InputDistribution::iid(3, vec![0.25, 0.75]).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.contains("\"kind\":\"iid\""));
        let back: InputDistribution = serde_json::from_str(&s).unwrap();
        assert_eq!(d, back);

        // malformed: declared dimensions disagree with rows
        let bad = r#"{"inputs":2,"outputs":2,"rows":[[0.5,0.5]]}"#;
        assert!(serde_json::from_str::<Dmc>(bad).is_err());
    }
}
