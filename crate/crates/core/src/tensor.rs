//! Dense coordinate-basis tensors with an index signature.

use std::fmt;
use std::ops::{Index, IndexMut};

use ndarray::{ArrayD, Dimension, IxDyn};
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    Upper,
    Lower,
}

/// Symmetry of a tensor under exchange of two slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryKind {
    Symmetric,
    Antisymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSymmetry {
    pub slots: (usize, usize),
    pub kind: SymmetryKind,
}

/// A dense array with every extent equal to `dim`, a variance tag per slot and
/// a list of symmetries it is declared to satisfy.
///
/// The declared symmetries are metadata: they are not enforced on write, but
/// [`TensorBlock::symmetry_violation`] reports how far the data is from them.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorBlock {
    name: String,
    signature: Vec<Variance>,
    dim: usize,
    symmetries: Vec<SlotSymmetry>,
    #[serde(with = "flat_array")]
    data: ArrayD<f64>,
}

mod flat_array {
    use ndarray::{ArrayD, IxDyn};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Flat {
        shape: Vec<usize>,
        values: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(a: &ArrayD<f64>, s: S) -> Result<S::Ok, S::Error> {
        Flat {
            shape: a.shape().to_vec(),
            values: a.iter().copied().collect(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ArrayD<f64>, D::Error> {
        let flat = Flat::deserialize(d)?;
        ArrayD::from_shape_vec(IxDyn(&flat.shape), flat.values).map_err(serde::de::Error::custom)
    }
}

impl TensorBlock {
    pub fn zeros(name: impl Into<String>, signature: &[Variance], dim: usize) -> Self {
        let shape = vec![dim; signature.len()];
        Self {
            name: name.into(),
            signature: signature.to_vec(),
            dim,
            symmetries: Vec::new(),
            data: ArrayD::zeros(IxDyn(&shape)),
        }
    }

    /// Builds a tensor by evaluating `f` on every multi-index.
    pub fn from_fn(
        name: impl Into<String>,
        signature: &[Variance],
        dim: usize,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Self {
        let mut t = Self::zeros(name, signature, dim);
        for (idx, v) in t.data.indexed_iter_mut() {
            *v = f(idx.slice());
        }
        t
    }

    pub fn with_symmetry(mut self, a: usize, b: usize, kind: SymmetryKind) -> Self {
        assert!(a < self.rank() && b < self.rank() && a != b);
        self.symmetries.push(SlotSymmetry { slots: (a, b), kind });
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn signature(&self) -> &[Variance] {
        &self.signature
    }

    pub fn rank(&self) -> usize {
        self.signature.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn symmetries(&self) -> &[SlotSymmetry] {
        &self.symmetries
    }

    pub fn data(&self) -> &ArrayD<f64> {
        &self.data
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().copied()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[IxDyn(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        self.data[IxDyn(idx)] = value;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Number of entries with magnitude strictly above `threshold`.
    pub fn count_above(&self, threshold: f64) -> usize {
        self.data.iter().filter(|v| v.abs() > threshold).count()
    }

    /// Elementwise maximum of `|self - other|`.
    pub fn max_abs_diff(&self, other: &TensorBlock) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(other.data.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn check_same_shape(&self, other: &TensorBlock) -> Result<()> {
        if self.signature != other.signature || self.dim != other.dim {
            return Err(GeometryError::shape(self.describe_shape(), other.describe_shape()));
        }
        Ok(())
    }

    /// Checks rank, extent and variance pattern.
    pub fn expect_signature(&self, signature: &[Variance], dim: usize) -> Result<()> {
        if self.signature != signature || self.dim != dim {
            let mut want = TensorBlock::zeros("", signature, dim);
            want.name = "expected".into();
            return Err(GeometryError::shape(want.describe_shape(), self.describe_shape()));
        }
        Ok(())
    }

    fn describe_shape(&self) -> String {
        let sig: String = self
            .signature
            .iter()
            .map(|v| match v {
                Variance::Upper => '^',
                Variance::Lower => '_',
            })
            .collect();
        format!("rank-{} [{}] over dim {}", self.rank(), sig, self.dim)
    }

    /// Largest deviation from any declared symmetry.
    pub fn symmetry_violation(&self) -> f64 {
        let mut worst = 0.0_f64;
        for sym in &self.symmetries {
            let (a, b) = sym.slots;
            for (idx, &v) in self.data.indexed_iter() {
                let mut swapped = idx.slice().to_vec();
                swapped.swap(a, b);
                let w = self.data[IxDyn(&swapped)];
                let dev = match sym.kind {
                    SymmetryKind::Symmetric => (v - w).abs(),
                    SymmetryKind::Antisymmetric => (v + w).abs(),
                };
                worst = worst.max(dev);
            }
        }
        worst
    }

    /// Elementwise linear combination `a·self + b·other`, keeping self's metadata.
    pub fn combine(&self, a: f64, other: &TensorBlock, b: f64) -> Result<TensorBlock> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        out.data.zip_mut_with(&other.data, |x, y| *x = a * *x + b * y);
        Ok(out)
    }

    /// Tolerance scale: `max(1, max_abs)`.
    pub fn scale(&self) -> f64 {
        self.max_abs().max(1.0)
    }
}

impl<const N: usize> Index<[usize; N]> for TensorBlock {
    type Output = f64;
    fn index(&self, idx: [usize; N]) -> &f64 {
        &self.data[IxDyn(&idx)]
    }
}

impl<const N: usize> IndexMut<[usize; N]> for TensorBlock {
    fn index_mut(&mut self, idx: [usize; N]) -> &mut f64 {
        &mut self.data[IxDyn(&idx)]
    }
}

impl fmt::Debug for TensorBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TensorBlock({} {}, max|·|={:.3e}, nonzero={})",
            self.name,
            self.describe_shape(),
            self.max_abs(),
            self.count_above(0.0)
        )
    }
}
