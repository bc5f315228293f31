use crate::{Error, Result};

/// Dense rank-1/2/3 array of `f64`, row-major.
///
/// The shape is explicit and every public operation preserves the invariant
/// that `shape.iter().product() == data.len()` and that all elements are
/// finite (checked via `debug_assert` after each operation).
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor from a shape and row-major data.
    pub fn new(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.len() > 3 {
            return Err(Error::InvalidArgument(format!(
                "tensor rank must be 1..=3, got shape {shape:?}"
            )));
        }
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument(format!(
                "tensor dimensions must be positive, got shape {shape:?}"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::shape(
                "Tensor::new",
                format!("shape {shape:?} implies {expected} elements, got {}", data.len()),
            ));
        }
        let t = Tensor { shape: shape.to_vec(), data };
        t.debug_check_finite("Tensor::new");
        Ok(t)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![0.0; len] }
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let len = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![value; len] }
    }

    /// Rank-2 identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("from_rows: no rows".into()));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::shape("from_rows", "ragged rows".into()));
            }
            data.extend_from_slice(r);
        }
        Tensor::new(&[rows.len(), cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn debug_check_finite(&self, op: &str) {
        debug_assert!(self.is_finite(), "non-finite values after {op}");
        let _ = op;
    }

    /// Rank-2 accessor.
    #[inline]
    pub fn at2(&self, r: usize, c: usize) -> f64 {
        debug_assert_eq!(self.rank(), 2);
        self.data[r * self.shape[1] + c]
    }

    #[inline]
    pub fn set2(&mut self, r: usize, c: usize, v: f64) {
        debug_assert_eq!(self.rank(), 2);
        self.data[r * self.shape[1] + c] = v;
    }

    /// Rank-3 accessor.
    #[inline]
    pub fn at3(&self, a: usize, b: usize, c: usize) -> f64 {
        debug_assert_eq!(self.rank(), 3);
        self.data[(a * self.shape[1] + b) * self.shape[2] + c]
    }

    #[inline]
    pub fn set3(&mut self, a: usize, b: usize, c: usize, v: f64) {
        debug_assert_eq!(self.rank(), 3);
        self.data[(a * self.shape[1] + b) * self.shape[2] + c] = v;
    }

    /// Applies `f` to every element.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        let out = Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        };
        out.debug_check_finite("map");
        out
    }

    fn zip_with(&self, other: &Tensor, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::shape(
                op,
                format!("{:?} vs {:?}", self.shape, other.shape),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        let out = Tensor { shape: self.shape.clone(), data };
        out.debug_check_finite(op);
        Ok(out)
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// Elementwise (Hadamard) product.
    pub fn hadamard(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "hadamard", |a, b| a * b)
    }

    pub fn scale(&self, k: f64) -> Tensor {
        self.map(|v| v * k)
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::shape(
                "add_assign",
                format!("{:?} vs {:?}", self.shape, other.shape),
            ));
        }
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
        self.debug_check_finite("add_assign");
        Ok(())
    }

    /// Adds a rank-1 bias row-wise to a rank-2 tensor.
    pub fn add_bias_rows(&self, bias: &Tensor) -> Result<Tensor> {
        if self.rank() != 2 || bias.rank() != 1 || self.shape[1] != bias.shape[0] {
            return Err(Error::shape(
                "add_bias_rows",
                format!("{:?} with bias {:?}", self.shape, bias.shape),
            ));
        }
        let mut out = self.clone();
        let cols = self.shape[1];
        for r in 0..self.shape[0] {
            for c in 0..cols {
                out.data[r * cols + c] += bias.data[c];
            }
        }
        out.debug_check_finite("add_bias_rows");
        Ok(out)
    }

    /// Rank-2 transpose.
    pub fn transpose(&self) -> Tensor {
        assert_eq!(self.rank(), 2, "transpose requires a rank-2 tensor");
        let (rows, cols) = (self.shape[0], self.shape[1]);
        let mut data = vec![0.0; self.data.len()];
        for r in 0..rows {
            for c in 0..cols {
                data[c * rows + r] = self.data[r * cols + c];
            }
        }
        Tensor { shape: vec![cols, rows], data }
    }

    /// Sums a rank-2 tensor over its rows, yielding a rank-1 tensor of column sums.
    pub fn column_sums(&self) -> Tensor {
        assert_eq!(self.rank(), 2, "column_sums requires a rank-2 tensor");
        let (rows, cols) = (self.shape[0], self.shape[1]);
        let mut data = vec![0.0; cols];
        for r in 0..rows {
            for c in 0..cols {
                data[c] += self.data[r * cols + c];
            }
        }
        Tensor { shape: vec![cols], data }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Extracts step `t` of a rank-3 `[batch, steps, dim]` tensor as a rank-2
    /// `[batch, dim]` tensor.
    pub fn step_slice(&self, t: usize) -> Tensor {
        assert_eq!(self.rank(), 3, "step_slice requires a rank-3 tensor");
        let (batch, steps, dim) = (self.shape[0], self.shape[1], self.shape[2]);
        assert!(t < steps, "step {t} out of range {steps}");
        let mut data = Vec::with_capacity(batch * dim);
        for b in 0..batch {
            let start = (b * steps + t) * dim;
            data.extend_from_slice(&self.data[start..start + dim]);
        }
        Tensor { shape: vec![batch, dim], data }
    }

    /// Writes a rank-2 `[batch, dim]` tensor into step `t` of `self`
    /// (`[batch, steps, dim]`).
    pub fn set_step_slice(&mut self, t: usize, slice: &Tensor) {
        assert_eq!(self.rank(), 3);
        assert_eq!(slice.rank(), 2);
        let (batch, steps, dim) = (self.shape[0], self.shape[1], self.shape[2]);
        assert_eq!(slice.shape(), &[batch, dim]);
        assert!(t < steps);
        for b in 0..batch {
            let dst = (b * steps + t) * dim;
            let src = b * dim;
            self.data[dst..dst + dim].copy_from_slice(&slice.data[src..src + dim]);
        }
    }

    /// Reverses a rank-3 tensor along its time (middle) axis.
    pub fn reverse_time(&self) -> Tensor {
        assert_eq!(self.rank(), 3, "reverse_time requires a rank-3 tensor");
        let (batch, steps, dim) = (self.shape[0], self.shape[1], self.shape[2]);
        let mut out = Tensor::zeros(&self.shape);
        for b in 0..batch {
            for t in 0..steps {
                let src = (b * steps + t) * dim;
                let dst = (b * steps + (steps - 1 - t)) * dim;
                out.data[dst..dst + dim].copy_from_slice(&self.data[src..src + dim]);
            }
        }
        out
    }

    /// Concatenates two rank-3 tensors along the feature (last) axis.
    pub fn concat_features(&self, other: &Tensor) -> Result<Tensor> {
        if self.rank() != 3
            || other.rank() != 3
            || self.shape[0] != other.shape[0]
            || self.shape[1] != other.shape[1]
        {
            return Err(Error::shape(
                "concat_features",
                format!("{:?} vs {:?}", self.shape, other.shape),
            ));
        }
        let (batch, steps) = (self.shape[0], self.shape[1]);
        let (da, db) = (self.shape[2], other.shape[2]);
        let mut out = Tensor::zeros(&[batch, steps, da + db]);
        for b in 0..batch {
            for t in 0..steps {
                let dst = (b * steps + t) * (da + db);
                let sa = (b * steps + t) * da;
                let sb = (b * steps + t) * db;
                out.data[dst..dst + da].copy_from_slice(&self.data[sa..sa + da]);
                out.data[dst + da..dst + da + db].copy_from_slice(&other.data[sb..sb + db]);
            }
        }
        Ok(out)
    }

    /// Concatenates two rank-2 tensors along the column axis.
    pub fn concat_cols(&self, other: &Tensor) -> Result<Tensor> {
        if self.rank() != 2 || other.rank() != 2 || self.shape[0] != other.shape[0] {
            return Err(Error::shape(
                "concat_cols",
                format!("{:?} vs {:?}", self.shape, other.shape),
            ));
        }
        let rows = self.shape[0];
        let (ca, cb) = (self.shape[1], other.shape[1]);
        let mut out = Tensor::zeros(&[rows, ca + cb]);
        for r in 0..rows {
            out.data[r * (ca + cb)..r * (ca + cb) + ca]
                .copy_from_slice(&self.data[r * ca..(r + 1) * ca]);
            out.data[r * (ca + cb) + ca..(r + 1) * (ca + cb)]
                .copy_from_slice(&other.data[r * cb..(r + 1) * cb]);
        }
        Ok(out)
    }

    /// Gathers rows (axis 0) of a rank-2/3 tensor in the given order.
    pub fn gather_rows(&self, indices: &[usize]) -> Tensor {
        assert!(self.rank() >= 2, "gather_rows requires rank >= 2");
        let row_len: usize = self.shape[1..].iter().product();
        let mut shape = self.shape.clone();
        shape[0] = indices.len();
        let mut data = Vec::with_capacity(indices.len() * row_len);
        for &i in indices {
            assert!(i < self.shape[0], "row {i} out of range {}", self.shape[0]);
            data.extend_from_slice(&self.data[i * row_len..(i + 1) * row_len]);
        }
        Tensor { shape, data }
    }

    /// Splits a rank-2 tensor into two column blocks at `at`.
    pub fn split_cols(&self, at: usize) -> (Tensor, Tensor) {
        assert_eq!(self.rank(), 2, "split_cols requires a rank-2 tensor");
        let (rows, cols) = (self.shape[0], self.shape[1]);
        assert!(at > 0 && at < cols, "split point {at} out of range for {cols} columns");
        let mut left = Tensor::zeros(&[rows, at]);
        let mut right = Tensor::zeros(&[rows, cols - at]);
        for r in 0..rows {
            left.data[r * at..(r + 1) * at]
                .copy_from_slice(&self.data[r * cols..r * cols + at]);
            right.data[r * (cols - at)..(r + 1) * (cols - at)]
                .copy_from_slice(&self.data[r * cols + at..(r + 1) * cols]);
        }
        (left, right)
    }

    /// Reinterprets the tensor with a new shape of identical element count.
    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        let expected: usize = shape.iter().product();
        if expected != self.data.len() || shape.is_empty() || shape.len() > 3 {
            return Err(Error::shape(
                "reshape",
                format!("{:?} -> {shape:?}", self.shape),
            ));
        }
        Ok(Tensor { shape: shape.to_vec(), data: self.data.clone() })
    }
}

/// Standard rank-2 matrix product.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.rank() != 2 || b.rank() != 2 {
        return Err(Error::shape(
            "matmul",
            format!("requires rank-2 operands, got {:?} and {:?}", a.shape, b.shape),
        ));
    }
    if a.shape[1] != b.shape[0] {
        return Err(Error::shape(
            "matmul",
            format!("inner dimensions differ: {:?} x {:?}", a.shape, b.shape),
        ));
    }
    let (m, k, n) = (a.shape[0], a.shape[1], b.shape[1]);
    let mut data = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let aip = a.data[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let brow = &b.data[p * n..(p + 1) * n];
            let crow = &mut data[i * n..(i + 1) * n];
            for (cv, &bv) in crow.iter_mut().zip(brow.iter()) {
                *cv += aip * bv;
            }
        }
    }
    let out = Tensor { shape: vec![m, n], data };
    out.debug_check_finite("matmul");
    Ok(out)
}

/// Pointwise activation functions used by the models.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
}

#[inline]
pub(crate) fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Applies the activation elementwise; shape is preserved.
pub fn activation(x: &Tensor, kind: Activation) -> Tensor {
    match kind {
        Activation::Sigmoid => x.map(sigmoid),
        Activation::Tanh => x.map(f64::tanh),
        Activation::Relu => x.map(|v| v.max(0.0)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_identity() {
        let a = Tensor::identity(2);
        let b = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c, b);
    }

    #[test]
    fn matmul_hand_case() {
        // [[1,2]] x [[3],[4]] = [[11]]
        let a = Tensor::new(&[1, 2], vec![1.0, 2.0]).unwrap();
        let b = Tensor::new(&[2, 1], vec![3.0, 4.0]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.data(), &[11.0]);
    }

    #[test]
    fn matmul_zero_annihilation() {
        let a = Tensor::zeros(&[2, 2]);
        let b = Tensor::from_rows(&[vec![5.0, -1.0], vec![2.0, 7.0]]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert!(c.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matmul_shape_mismatch_names_both_shapes() {
        let a = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[2, 2]);
        let err = matmul(&a, &b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2, 3]") && msg.contains("[2, 2]"), "{msg}");
    }

    #[test]
    fn activation_fixed_points() {
        let x = Tensor::new(&[1], vec![0.0]).unwrap();
        assert_eq!(activation(&x, Activation::Sigmoid).data()[0], 0.5);
        assert_eq!(activation(&x, Activation::Tanh).data()[0], 0.0);
        let y = Tensor::new(&[2], vec![-3.2, 3.2]).unwrap();
        let r = activation(&y, Activation::Relu);
        assert_eq!(r.data(), &[0.0, 3.2]);
    }

    #[test]
    fn activation_ranges() {
        let mut rng = crate::numeric::RngState::new(11);
        let vals: Vec<f64> = (0..200).map(|_| rng.uniform(-50.0, 50.0)).collect();
        let x = Tensor::new(&[200], vals).unwrap();
        for v in activation(&x, Activation::Sigmoid).data() {
            assert!(*v > 0.0 && *v < 1.0);
        }
        for v in activation(&x, Activation::Tanh).data() {
            assert!(*v > -1.0 && *v < 1.0);
        }
    }

    #[test]
    fn matmul_associativity_on_random_triples() {
        let mut rng = crate::numeric::RngState::new(3);
        for _ in 0..20 {
            let dims: Vec<usize> = (0..4).map(|_| 1 + (rng.below(6) as usize)).collect();
            let mk = |r: usize, c: usize, rng: &mut crate::numeric::RngState| {
                let data = (0..r * c).map(|_| rng.uniform(-1.0, 1.0)).collect();
                Tensor::new(&[r, c], data).unwrap()
            };
            let a = mk(dims[0], dims[1], &mut rng);
            let b = mk(dims[1], dims[2], &mut rng);
            let c = mk(dims[2], dims[3], &mut rng);
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            for (l, r) in left.data().iter().zip(right.data().iter()) {
                let scale = l.abs().max(r.abs()).max(1.0);
                assert!((l - r).abs() / scale < 1e-9, "associativity violated: {l} vs {r}");
            }
        }
    }

    #[test]
    fn step_slice_round_trip() {
        let t = Tensor::new(&[2, 3, 2], (0..12).map(|v| v as f64).collect()).unwrap();
        let s1 = t.step_slice(1);
        assert_eq!(s1.shape(), &[2, 2]);
        assert_eq!(s1.data(), &[2.0, 3.0, 8.0, 9.0]);
        let mut u = Tensor::zeros(&[2, 3, 2]);
        u.set_step_slice(1, &s1);
        assert_eq!(u.step_slice(1), s1);
    }

    #[test]
    fn reverse_time_is_involution() {
        let t = Tensor::new(&[1, 4, 2], (0..8).map(|v| v as f64).collect()).unwrap();
        assert_eq!(t.reverse_time().reverse_time(), t);
        assert_eq!(t.reverse_time().step_slice(0), t.step_slice(3));
    }

    #[test]
    fn new_rejects_bad_shapes() {
        assert!(Tensor::new(&[2, 2], vec![1.0; 3]).is_err());
        assert!(Tensor::new(&[], vec![]).is_err());
        assert!(Tensor::new(&[1, 2, 3, 4], vec![0.0; 24]).is_err());
        assert!(Tensor::new(&[0, 2], vec![]).is_err());
    }
}
