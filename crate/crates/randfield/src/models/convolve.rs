//! Causal linear-field generation: truncated two-dimensional convolution of
//! an innovation array with a coefficient kernel, by direct summation or by
//! FFT. The two paths agree to well below 1e-10 absolute and the direct path
//! is the oracle for the FFT path.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::lattice::FieldArray;
use crate::models::CoefficientFamily;

/// Evaluation path for the convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolvePath {
    Direct,
    Fft,
    /// Direct for small kernels, FFT once the kernel side reaches 12.
    Auto,
}

/// Realizes `Z_{i,j} = sum_{0 <= r,s <= b} a_{r,s} eps_{i-r,j-s}` on the
/// sub-window of the innovation array where the full kernel fits.
///
/// The output origin is the innovation origin shifted up by `b` on both
/// axes; an innovation margin smaller than `b` is a precondition error.
pub fn generate_linear_field(
    family: &CoefficientFamily,
    innovations: &FieldArray,
    b: usize,
    path: ConvolvePath,
) -> Result<FieldArray> {
    if innovations.rows() <= b || innovations.cols() <= b {
        return Err(Error::Precondition(format!(
            "innovation extent {}x{} leaves no room for truncation radius {b}",
            innovations.rows(),
            innovations.cols()
        )));
    }
    let side = b + 1;
    let mut kernel = vec![0.0; side * side];
    for r in 0..side {
        for s in 0..side {
            kernel[r * side + s] = family.coefficient(r as i64, s as i64);
        }
    }
    let use_fft = match path {
        ConvolvePath::Direct => false,
        ConvolvePath::Fft => true,
        ConvolvePath::Auto => side >= 12,
    };
    if use_fft {
        fft_convolve(innovations, &kernel, b)
    } else {
        direct_convolve(innovations, &kernel, b)
    }
}

fn output_frame(innovations: &FieldArray, b: usize) -> ((i64, i64), usize, usize) {
    (
        (
            innovations.origin().0 + b as i64,
            innovations.origin().1 + b as i64,
        ),
        innovations.rows() - b,
        innovations.cols() - b,
    )
}

fn direct_convolve(innovations: &FieldArray, kernel: &[f64], b: usize) -> Result<FieldArray> {
    let (origin, rows, cols) = output_frame(innovations, b);
    let side = b + 1;
    let in_cols = innovations.cols();
    let eps = innovations.as_slice();
    let mut values = Vec::with_capacity(rows * cols);
    for rr in b..innovations.rows() {
        for cc in b..in_cols {
            let mut acc = 0.0;
            for kr in 0..side {
                let row = &eps[(rr - kr) * in_cols..(rr - kr) * in_cols + in_cols];
                let krow = &kernel[kr * side..kr * side + side];
                for (ks, a) in krow.iter().enumerate() {
                    acc += a * row[cc - ks];
                }
            }
            values.push(acc);
        }
    }
    FieldArray::from_values(origin, rows, cols, values)
}

fn fft_convolve(innovations: &FieldArray, kernel: &[f64], b: usize) -> Result<FieldArray> {
    let (origin, rows, cols) = output_frame(innovations, b);
    let side = b + 1;
    // Padding to the input size already prevents wrap-around on the valid
    // region (indices >= b never reach back past 0); powers of two keep the
    // transforms fast.
    let p1 = innovations.rows().next_power_of_two();
    let p2 = innovations.cols().next_power_of_two();

    let mut field = vec![Complex::new(0.0, 0.0); p1 * p2];
    for (idx, &v) in innovations.as_slice().iter().enumerate() {
        let (r, c) = (idx / innovations.cols(), idx % innovations.cols());
        field[r * p2 + c] = Complex::new(v, 0.0);
    }
    let mut kbuf = vec![Complex::new(0.0, 0.0); p1 * p2];
    for r in 0..side {
        for s in 0..side {
            kbuf[r * p2 + s] = Complex::new(kernel[r * side + s], 0.0);
        }
    }

    let mut planner = FftPlanner::<f64>::new();
    fft_2d(&mut field, p1, p2, &mut planner, true);
    fft_2d(&mut kbuf, p1, p2, &mut planner, true);
    for (f, k) in field.iter_mut().zip(&kbuf) {
        *f *= *k;
    }
    fft_2d(&mut field, p1, p2, &mut planner, false);

    let scale = 1.0 / (p1 * p2) as f64;
    let mut values = Vec::with_capacity(rows * cols);
    for rr in b..innovations.rows() {
        for cc in b..innovations.cols() {
            values.push(field[rr * p2 + cc].re * scale);
        }
    }
    FieldArray::from_values(origin, rows, cols, values)
}

/// In-place 2D FFT: rows, transpose, rows again, transpose back.
fn fft_2d(
    buf: &mut Vec<Complex<f64>>,
    rows: usize,
    cols: usize,
    planner: &mut FftPlanner<f64>,
    forward: bool,
) {
    let row_fft = if forward {
        planner.plan_fft_forward(cols)
    } else {
        planner.plan_fft_inverse(cols)
    };
    for row in buf.chunks_exact_mut(cols) {
        row_fft.process(row);
    }
    let mut t = transpose(buf, rows, cols);
    let col_fft = if forward {
        planner.plan_fft_forward(rows)
    } else {
        planner.plan_fft_inverse(rows)
    };
    for row in t.chunks_exact_mut(rows) {
        col_fft.process(row);
    }
    *buf = transpose(&t, cols, rows);
}

fn transpose(buf: &[Complex<f64>], rows: usize, cols: usize) -> Vec<Complex<f64>> {
    let mut out = vec![Complex::new(0.0, 0.0); buf.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = buf[r * cols + c];
        }
    }
    out
}
