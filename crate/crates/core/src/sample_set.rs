//! Point collections with provenance metadata.

use crate::error::{Error, Result};
use crate::numerics::rng::RNG_NAME;

/// Provenance carried by every sample set: the seed that produced it, the
/// generator name, a free-form source tag, and (for labeled or sampled data)
/// a class label and yield counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleMeta {
    pub seed: u64,
    pub source: String,
    pub rng_name: String,
    pub class_label: Option<u32>,
    /// Sampling attempts (for sets produced by an accept/reject procedure).
    pub attempts: u64,
    /// Accepted samples; equals N for plain generated sets.
    pub successes: u64,
    /// Set when the acceptance rate dropped below one half.
    pub low_yield: bool,
}

impl SampleMeta {
    pub fn new(seed: u64, source: impl Into<String>) -> Self {
        Self {
            seed,
            source: source.into(),
            rng_name: RNG_NAME.to_string(),
            class_label: None,
            attempts: 0,
            successes: 0,
            low_yield: false,
        }
    }

    pub fn with_label(mut self, label: u32) -> Self {
        self.class_label = Some(label);
        self
    }
}

/// N points in an ambient space of dimension D, stored row-major.
#[derive(Debug, Clone)]
pub struct SampleSet {
    dim: usize,
    data: Vec<f64>,
    pub meta: SampleMeta,
}

impl SampleSet {
    /// Empty set of a fixed dimension.
    pub fn empty(dim: usize, meta: SampleMeta) -> Self {
        Self {
            dim,
            data: Vec::new(),
            meta,
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, meta: SampleMeta) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if dim == 0 && !rows.is_empty() {
            return Err(Error::invalid("sample rows must be nonempty"));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::invalid("inconsistent sample dimensions"));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("sample entries must be finite"));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data, meta })
    }

    pub fn from_flat(n: usize, dim: usize, data: Vec<f64>, meta: SampleMeta) -> Result<Self> {
        if data.len() != n * dim {
            return Err(Error::invalid(format!(
                "flat sample data of length {} does not match {n} x {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sample entries must be finite"));
        }
        Ok(Self { dim, data, meta })
    }

    pub fn n_samples(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.dim, "pushed row has wrong dimension");
        self.data.extend_from_slice(row);
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// New set containing the rows picked out by `indices`, same metadata.
    pub fn subset(&self, indices: &[usize]) -> SampleSet {
        let mut out = SampleSet::empty(self.dim, self.meta.clone());
        for &i in indices {
            out.push_row(self.row(i));
        }
        out
    }

    /// True when every coordinate lies in `[0, 1]`.
    pub fn in_unit_cube(&self) -> bool {
        self.data.iter().all(|&v| (0.0..=1.0).contains(&v))
    }
}
