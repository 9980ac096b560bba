//! Named parameter collections. A `BTreeMap` keeps iteration order stable,
//! which the determinism contract depends on.

use std::collections::BTreeMap;

use super::{Matrix, NumError, SeededRng};

/// Named parameter tensors with deterministic iteration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    map: BTreeMap<String, Matrix>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn insert(&mut self, name: &str, m: Matrix) {
        self.map.insert(name.to_string(), m);
    }

    pub fn get(&self, name: &str) -> &Matrix {
        self.map
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name:?}"))
    }

    pub fn try_get(&self, name: &str) -> Option<&Matrix> {
        self.map.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Matrix {
        self.map
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter {name:?}"))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Matrix)> {
        self.map.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(|k| k.as_str())
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Total element count across all tensors.
    pub fn num_values(&self) -> usize {
        self.map.values().map(|m| m.len()).sum()
    }

    /// Σ‖θ‖² over every tensor.
    pub fn sum_squares(&self) -> f64 {
        self.map.values().map(|m| m.sum_squares()).sum()
    }

    /// Glorot-uniform matrix: entries uniform in ±√(6/(rows+cols)), drawn
    /// row-major from `rng`. Biases should use [`Matrix::zeros`] instead.
    pub fn glorot(rows: usize, cols: usize, rng: &mut SeededRng) -> Matrix {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        Matrix::from_fn(rows, cols, |_, _| rng.uniform(-limit, limit))
    }

    /// A set with the same names and shapes, all zeros.
    pub fn zeros_like(&self) -> ParamSet {
        let mut out = ParamSet::new();
        for (name, m) in self.iter() {
            out.insert(name, Matrix::zeros(m.rows(), m.cols()));
        }
        out
    }

    pub fn check_finite(&self, op: &'static str) -> Result<(), NumError> {
        for m in self.map.values() {
            m.check_finite(op)?;
        }
        Ok(())
    }

    /// Little-endian byte image of every tensor in name order; two sets are
    /// bit-identical iff their images are equal.
    pub fn byte_image(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for (name, m) in self.iter() {
            out.extend_from_slice(name.as_bytes());
            out.push(0);
            for v in m.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }
}

impl FromIterator<(String, Matrix)> for ParamSet {
    fn from_iter<T: IntoIterator<Item = (String, Matrix)>>(iter: T) -> Self {
        ParamSet {
            map: iter.into_iter().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_iteration_order() {
        let mut p = ParamSet::new();
        p.insert("z", Matrix::zeros(1, 1));
        p.insert("a", Matrix::zeros(1, 1));
        p.insert("m", Matrix::zeros(1, 1));
        let names: Vec<&str> = p.names().collect();
        assert_eq!(names, vec!["a", "m", "z"]);
    }

    #[test]
    fn glorot_bounds_and_determinism() {
        let mut r1 = SeededRng::new(5);
        let mut r2 = SeededRng::new(5);
        let a = ParamSet::glorot(4, 6, &mut r1);
        let b = ParamSet::glorot(4, 6, &mut r2);
        assert_eq!(a, b);
        let limit = (6.0 / 10.0f64).sqrt();
        assert!(a.data().iter().all(|v| v.abs() < limit));
    }

    #[test]
    fn byte_image_detects_any_change() {
        let mut p = ParamSet::new();
        p.insert("w", Matrix::from_vec(1, 2, vec![1.0, 2.0]));
        let before = p.byte_image();
        p.get_mut("w").set(0, 1, 2.0 + 1e-15);
        assert_ne!(before, p.byte_image());
    }
}
