//! Python bindings for the core library. Objects are built from the same
//! JSON documents the CLI consumes (or from small convenience
//! constructors); report-shaped results come back as JSON strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use mmcap_core::exactprob::{self, DecodeRule};
use mmcap_core::model::{self, NLetterChannel};
use mmcap_core::spectrum::{self, ChannelModel, Statistic};
use mmcap_core::{lmrate, mcdecode};

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn from_json<T: serde::de::DeserializeOwned>(json: &str) -> PyResult<T> {
    serde_json::from_str(json).map_err(value_err)
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(value_err)
}

/// Memoryless channel: row-stochastic matrix W(y|x).
#[pyclass(frozen)]
struct Channel {
    inner: model::Dmc,
}

#[pymethods]
impl Channel {
    #[new]
    fn new(json: &str) -> PyResult<Self> {
        Ok(Channel {
            inner: from_json(json)?,
        })
    }

    #[staticmethod]
    fn bsc(flip: f64) -> PyResult<Self> {
        Ok(Channel {
            inner: model::Dmc::bsc(flip).map_err(value_err)?,
        })
    }

    #[getter]
    fn inputs(&self) -> usize {
        self.inner.num_inputs()
    }

    #[getter]
    fn outputs(&self) -> usize {
        self.inner.num_outputs()
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Channel(inputs={}, outputs={})",
            self.inner.num_inputs(),
            self.inner.num_outputs()
        )
    }
}

/// Decoding metric: additive per-letter table, or an explicit n-letter one.
#[pyclass(frozen)]
struct Metric {
    inner: model::Metric,
}

#[pymethods]
impl Metric {
    #[new]
    fn new(json: &str) -> PyResult<Self> {
        Ok(Metric {
            inner: from_json(json)?,
        })
    }

    #[staticmethod]
    fn additive(table: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Metric {
            inner: model::Metric::additive(table).map_err(value_err)?,
        })
    }

    /// Per-letter average for additive metrics, table lookup otherwise.
    fn value(&self, x: Vec<usize>, y: Vec<usize>) -> PyResult<f64> {
        if x.len() != y.len() {
            return Err(value_err("word lengths differ"));
        }
        Ok(self.inner.value(&x, &y))
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }
}

/// Fixed list of equal-length input words.
#[pyclass(frozen)]
struct Codebook {
    inner: model::Codebook,
}

#[pymethods]
impl Codebook {
    #[new]
    fn new(json: &str) -> PyResult<Self> {
        Ok(Codebook {
            inner: from_json(json)?,
        })
    }

    #[staticmethod]
    fn from_words(n: usize, words: Vec<Vec<usize>>) -> PyResult<Self> {
        Ok(Codebook {
            inner: model::Codebook::new(n, words).map_err(value_err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn __len__(&self) -> usize {
        self.inner.size()
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }
}

/// Probability measure over length-n input words.
#[pyclass(frozen)]
struct InputDistribution {
    inner: model::InputDistribution,
}

#[pymethods]
impl InputDistribution {
    #[new]
    fn new(json: &str) -> PyResult<Self> {
        Ok(InputDistribution {
            inner: from_json(json)?,
        })
    }

    #[staticmethod]
    fn iid(n: usize, pmf: Vec<f64>) -> PyResult<Self> {
        Ok(InputDistribution {
            inner: model::InputDistribution::iid(n, pmf).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn uniform_iid(n: usize, symbols: usize) -> PyResult<Self> {
        Ok(InputDistribution {
            inner: model::InputDistribution::uniform_iid(n, symbols).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn uniform_codebook(symbols: usize, codebook: &Codebook) -> PyResult<Self> {
        Ok(InputDistribution {
            inner: model::InputDistribution::uniform_codebook(symbols, codebook.inner.clone())
                .map_err(value_err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }
}

fn decode_rule(tau: Option<f64>) -> DecodeRule {
    match tau {
        Some(tau) => DecodeRule::Threshold { tau },
        None => DecodeRule::MaxMetric,
    }
}

/// Mismatch (LM) rate in bits per use.
#[pyfunction]
fn lm_rate(channel: &Channel, metric: &Metric) -> PyResult<f64> {
    Ok(lmrate::lm_rate(&channel.inner, &metric.inner)
        .map_err(value_err)?
        .value)
}

/// Full rate solution (value, optimizers, residuals) as JSON.
#[pyfunction]
fn lm_rate_report(channel: &Channel, metric: &Metric) -> PyResult<String> {
    to_json(&lmrate::lm_rate(&channel.inner, &metric.inner).map_err(value_err)?)
}

/// Shannon capacity in bits per use.
#[pyfunction]
fn matched_capacity(channel: &Channel) -> PyResult<f64> {
    Ok(lmrate::matched_capacity(&channel.inner)
        .map_err(value_err)?
        .value)
}

/// The log-likelihood metric of a channel; decoding with it is maximum
/// likelihood.
#[pyfunction]
fn matched_metric(channel: &Channel) -> PyResult<Metric> {
    let (q, _) = model::log_likelihood_metric(&channel.inner);
    Ok(Metric { inner: q })
}

/// Erasures-only rate at block length n (defaults to the distribution's).
#[pyfunction]
#[pyo3(signature = (channel, input, n=None))]
fn eo_rate(channel: &Channel, input: &InputDistribution, n: Option<usize>) -> PyResult<f64> {
    let n = n.unwrap_or_else(|| input.inner.n());
    lmrate::eo_rate(&channel.inner, &input.inner, n).map_err(value_err)
}

/// Exact average error probability; max-metric decoding, or threshold
/// decoding when tau is given (per-letter).
#[pyfunction]
#[pyo3(signature = (channel, codebook, metric, tau=None))]
fn exact_pe(
    channel: &Channel,
    codebook: &Codebook,
    metric: &Metric,
    tau: Option<f64>,
) -> PyResult<f64> {
    let wn = NLetterChannel::power(&channel.inner, codebook.inner.n()).map_err(value_err)?;
    exactprob::exact_pe(&wn, &codebook.inner, &metric.inner, decode_rule(tau)).map_err(value_err)
}

/// Tail mass mu{x: q(x, y) >= c} with the per-letter threshold c.
#[pyfunction]
fn phi(c: f64, input: &InputDistribution, y: Vec<usize>, metric: &Metric) -> PyResult<f64> {
    exactprob::phi(c, &input.inner, &y, &metric.inner).map_err(value_err)
}

/// Exact tail identity between the decoding error and the phi event;
/// returns the comparison report as JSON.
#[pyfunction]
#[pyo3(signature = (channel, codebook, metric, tau=None, tolerance=1e-12))]
fn check_lemma1(
    channel: &Channel,
    codebook: &Codebook,
    metric: &Metric,
    tau: Option<f64>,
    tolerance: f64,
) -> PyResult<String> {
    let wn = NLetterChannel::power(&channel.inner, codebook.inner.n()).map_err(value_err)?;
    let rep = exactprob::check_lemma1(
        &wn,
        &codebook.inner,
        &metric.inner,
        decode_rule(tau),
        tolerance,
    )
    .map_err(value_err)?;
    to_json(&rep)
}

/// Monte Carlo decoding simulation; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (channel, codebook, metric, trials, seed, tau=None))]
fn simulate_pe(
    channel: &Channel,
    codebook: &Codebook,
    metric: &Metric,
    trials: usize,
    seed: u64,
    tau: Option<f64>,
) -> PyResult<String> {
    let rep = mcdecode::simulate_pe(
        &channel.inner,
        &codebook.inner,
        &metric.inner,
        trials,
        seed,
        decode_rule(tau),
    )
    .map_err(value_err)?;
    to_json(&rep)
}

/// Seeded iid samples of a per-block statistic, sorted ascending. `stat` is
/// one of "info-density", "metric-value", "neg-log-phi", "neg-log-phi-tau"
/// (the last needs tau). The input defaults to uniform iid.
#[pyfunction]
#[pyo3(signature = (stat, channel, n, trials, seed, metric=None, input=None, tau=None))]
#[allow(clippy::too_many_arguments)]
fn sample_statistic(
    stat: &str,
    channel: &Channel,
    n: usize,
    trials: usize,
    seed: u64,
    metric: Option<&Metric>,
    input: Option<&InputDistribution>,
    tau: Option<f64>,
) -> PyResult<Vec<f64>> {
    let statistic = match stat {
        "info-density" => Statistic::InfoDensity,
        "metric-value" => Statistic::MetricValue,
        "neg-log-phi" => Statistic::NegLogPhi,
        "neg-log-phi-tau" => Statistic::NegLogPhiAtTau {
            tau: tau.ok_or_else(|| value_err("neg-log-phi-tau needs tau"))?,
        },
        other => return Err(value_err(format!("unknown statistic {other:?}"))),
    };
    let q = match (metric, statistic) {
        (Some(m), _) => m.inner.clone(),
        (None, Statistic::InfoDensity) => model::Metric::additive(vec![
            vec![0.0; channel.inner.num_outputs()];
            channel.inner.num_inputs()
        ])
        .map_err(value_err)?,
        (None, _) => return Err(value_err("this statistic needs a metric")),
    };
    let p = match input {
        Some(p) => p.inner.clone(),
        None => model::InputDistribution::uniform_iid(n, channel.inner.num_inputs())
            .map_err(value_err)?,
    };
    let model = ChannelModel::Single(channel.inner.clone());
    let samples = spectrum::sample_statistic(statistic, &p, &model, &q, n, trials, seed)
        .map_err(value_err)?;
    Ok(samples.values)
}

#[pymodule]
fn mmcap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Channel>()?;
    m.add_class::<Metric>()?;
    m.add_class::<Codebook>()?;
    m.add_class::<InputDistribution>()?;
    m.add_function(wrap_pyfunction!(lm_rate, m)?)?;
    m.add_function(wrap_pyfunction!(lm_rate_report, m)?)?;
    m.add_function(wrap_pyfunction!(matched_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(matched_metric, m)?)?;
    m.add_function(wrap_pyfunction!(eo_rate, m)?)?;
    m.add_function(wrap_pyfunction!(exact_pe, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(check_lemma1, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_pe, m)?)?;
    m.add_function(wrap_pyfunction!(sample_statistic, m)?)?;
    Ok(())
}
