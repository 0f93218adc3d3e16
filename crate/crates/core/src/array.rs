//! Real-valued arrays over a [`Shape`].
//!
//! Values are stored in the shape's canonical cell order (x-major
//! lexicographic), so a `ShapedArray` is simultaneously the array and its
//! vectorization: [`ShapedArray::values`] is the vectorized form and
//! [`ShapedArray::new`] maps a vector back onto the shape.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::shape::Shape;
use crate::topology::IndexPair;

#[derive(Clone, Debug)]
pub struct ShapedArray {
    shape: Arc<Shape>,
    values: Vec<f64>,
}

impl ShapedArray {
    /// Wraps a value vector over a shape. The vector length must equal the
    /// number of cells; entry `i` belongs to `shape.points()[i]`.
    pub fn new(shape: impl Into<Arc<Shape>>, values: Vec<f64>) -> Result<Self> {
        let shape = shape.into();
        if values.len() != shape.len() {
            return Err(Error::LengthMismatch {
                expected: shape.len(),
                got: values.len(),
            });
        }
        Ok(ShapedArray { shape, values })
    }

    pub fn from_fn(shape: impl Into<Arc<Shape>>, mut f: impl FnMut(IndexPair) -> f64) -> Self {
        let shape = shape.into();
        let values = shape.points().iter().map(|&p| f(p)).collect();
        ShapedArray { shape, values }
    }

    pub fn constant(shape: impl Into<Arc<Shape>>, value: f64) -> Self {
        let shape = shape.into();
        let values = vec![value; shape.len()];
        ShapedArray { shape, values }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn shape_arc(&self) -> &Arc<Shape> {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The values in canonical cell order; this is the vectorization.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, p: IndexPair) -> Option<f64> {
        self.shape.position(p).map(|i| self.values[i])
    }

    /// Restricts the array to a subset of its shape.
    pub fn restrict(&self, sub: &Arc<Shape>) -> Result<ShapedArray> {
        if !sub.is_subset_of(&self.shape) {
            return Err(Error::ShapeMismatch {
                context: "restriction target is not a subset of the array's shape",
            });
        }
        let values = sub
            .points()
            .iter()
            .map(|&p| self.values[self.shape.position(p).unwrap()])
            .collect();
        Ok(ShapedArray {
            shape: Arc::clone(sub),
            values,
        })
    }

    pub fn plus(&self, other: &ShapedArray) -> Result<ShapedArray> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn minus(&self, other: &ShapedArray) -> Result<ShapedArray> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scaled(&self, factor: f64) -> ShapedArray {
        ShapedArray {
            shape: Arc::clone(&self.shape),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    fn zip_with(&self, other: &ShapedArray, f: impl Fn(f64, f64) -> f64) -> Result<ShapedArray> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                context: "arrays live on different shapes",
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(ShapedArray {
            shape: Arc::clone(&self.shape),
            values,
        })
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
