use super::TimeSeries;
use crate::numeric::Tensor;
use crate::{Error, Result};

/// Aligned (input window, target window) pairs cut from a series.
/// Inputs are `[num_windows, in_len, 1]`, targets `[num_windows, out_len]`,
/// and each target window immediately follows its input window.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowedDataset {
    inputs: Tensor,
    targets: Tensor,
    starts: Vec<usize>,
}

impl WindowedDataset {
    pub fn from_tensors(inputs: Tensor, targets: Tensor, starts: Vec<usize>) -> Result<Self> {
        if inputs.rank() != 3 || targets.rank() != 2 || inputs.shape()[2] != 1 {
            return Err(Error::shape(
                "WindowedDataset",
                format!("inputs {:?}, targets {:?}", inputs.shape(), targets.shape()),
            ));
        }
        if inputs.shape()[0] != targets.shape()[0] || inputs.shape()[0] != starts.len() {
            return Err(Error::shape(
                "WindowedDataset",
                format!(
                    "{} inputs, {} targets, {} starts",
                    inputs.shape()[0],
                    targets.shape()[0],
                    starts.len()
                ),
            ));
        }
        Ok(WindowedDataset { inputs, targets, starts })
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn input_len(&self) -> usize {
        self.inputs.shape()[1]
    }

    pub fn output_len(&self) -> usize {
        self.targets.shape()[1]
    }

    pub fn inputs(&self) -> &Tensor {
        &self.inputs
    }

    pub fn targets(&self) -> &Tensor {
        &self.targets
    }

    pub fn starts(&self) -> &[usize] {
        &self.starts
    }
}

/// Cuts fixed-length windows: window `i` reads `in_len` values starting at
/// `i * stride` and targets the following `out_len` values. The window count
/// is `floor((len - in_len - out_len) / stride) + 1`.
pub fn make_windows(
    series: &TimeSeries,
    in_len: usize,
    out_len: usize,
    stride: usize,
) -> Result<WindowedDataset> {
    if in_len == 0 || out_len == 0 || stride == 0 {
        return Err(Error::InvalidArgument(
            "make_windows: in_len, out_len and stride must be positive".into(),
        ));
    }
    let len = series.len();
    if len < in_len + out_len {
        return Err(Error::Data(format!(
            "make_windows: series of {len} points cannot fit one {in_len}+{out_len} window"
        )));
    }
    let num = (len - in_len - out_len) / stride + 1;
    let values = series.values();

    let mut inputs = Vec::with_capacity(num * in_len);
    let mut targets = Vec::with_capacity(num * out_len);
    let mut starts = Vec::with_capacity(num);
    for i in 0..num {
        let s = i * stride;
        inputs.extend_from_slice(&values[s..s + in_len]);
        targets.extend_from_slice(&values[s + in_len..s + in_len + out_len]);
        starts.push(s);
    }

    WindowedDataset::from_tensors(
        Tensor::new(&[num, in_len, 1], inputs)?,
        Tensor::new(&[num, out_len], targets)?,
        starts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(n: usize) -> TimeSeries {
        TimeSeries::from_values((0..n).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn window_count_for_len_25() {
        let ds = make_windows(&series(25), 10, 10, 1).unwrap();
        assert_eq!(ds.len(), 6);
    }

    #[test]
    fn boundary_single_window() {
        let ds = make_windows(&series(20), 10, 10, 1).unwrap();
        assert_eq!(ds.len(), 1);
    }

    #[test]
    fn first_window_contents() {
        let ds = make_windows(&series(25), 10, 10, 1).unwrap();
        let expected_in: Vec<f64> = (0..10).map(|v| v as f64).collect();
        let expected_out: Vec<f64> = (10..20).map(|v| v as f64).collect();
        assert_eq!(&ds.inputs().data()[..10], expected_in.as_slice());
        assert_eq!(&ds.targets().data()[..10], expected_out.as_slice());
        assert_eq!(ds.starts()[0], 0);
    }

    #[test]
    fn too_short_series_rejected() {
        assert!(make_windows(&series(19), 10, 10, 1).is_err());
    }

    #[test]
    fn every_window_rereads_from_source() {
        let src = series(40);
        let ds = make_windows(&src, 7, 3, 2).unwrap();
        for (i, &s) in ds.starts().iter().enumerate() {
            for j in 0..7 {
                assert_eq!(ds.inputs().at3(i, j, 0), src.values()[s + j]);
            }
            for j in 0..3 {
                assert_eq!(ds.targets().at2(i, j), src.values()[s + 7 + j]);
            }
        }
    }

    #[test]
    fn count_formula_matches_brute_force_enumeration() {
        for len in 2..=100usize {
            let src = series(len);
            for in_len in 1..=20usize {
                for out_len in 1..=20usize {
                    for stride in 1..=5usize {
                        // Brute force: walk starts until the window no longer fits.
                        let mut brute = 0usize;
                        let mut s = 0usize;
                        while s + in_len + out_len <= len {
                            brute += 1;
                            s += stride;
                        }
                        match make_windows(&src, in_len, out_len, stride) {
                            Ok(ds) => assert_eq!(
                                ds.len(),
                                brute,
                                "len={len} in={in_len} out={out_len} stride={stride}"
                            ),
                            Err(_) => assert_eq!(
                                brute, 0,
                                "len={len} in={in_len} out={out_len} stride={stride}"
                            ),
                        }
                    }
                }
            }
        }
    }
}
