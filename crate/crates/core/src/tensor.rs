//! Dense row-major tensors of complex values and single-axis contraction.
//!
//! A tensor with axis sizes `shape = [s_1, …, s_n]` and value width `w` is stored flat as
//! `s_1 × ⋯ × s_n × w`, the value components innermost.

use num_complex::Complex64;
use rayon::prelude::*;
use std::ops::Mul;

const PAR_THRESHOLD: usize = 1 << 14;

/// Applies `mat` (row-major, `rows × shape[axis]`) along `axis`.
///
/// Returns the new flat data; the caller replaces `shape[axis]` by `rows`.
pub fn contract_axis<T>(
    data: &[Complex64],
    shape: &[usize],
    width: usize,
    axis: usize,
    mat: &[T],
    rows: usize,
) -> Vec<Complex64>
where
    T: Copy + Send + Sync,
    Complex64: Mul<T, Output = Complex64>,
{
    let cols = shape[axis];
    debug_assert_eq!(mat.len(), rows * cols);
    debug_assert_eq!(data.len(), shape.iter().product::<usize>() * width);
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product::<usize>() * width;
    let mut out = vec![Complex64::new(0.0, 0.0); outer * rows * inner];
    if out.is_empty() {
        return out;
    }
    let kernel = |o: usize, block: &mut [Complex64]| {
        let src = &data[o * cols * inner..(o + 1) * cols * inner];
        for r in 0..rows {
            let dst = &mut block[r * inner..(r + 1) * inner];
            let row = &mat[r * cols..(r + 1) * cols];
            for (c, &m) in row.iter().enumerate() {
                let s = &src[c * inner..(c + 1) * inner];
                for (d, &v) in dst.iter_mut().zip(s) {
                    *d += v * m;
                }
            }
        }
    };
    let work = outer * rows * cols * inner;
    if work >= PAR_THRESHOLD && outer > 1 {
        out.par_chunks_mut(rows * inner)
            .enumerate()
            .for_each(|(o, block)| kernel(o, block));
    } else {
        for (o, block) in out.chunks_mut(rows * inner).enumerate() {
            kernel(o, block);
        }
    }
    out
}

/// Applies one matrix per axis in turn; `mats[a]` has `rows[a]` rows.
pub fn contract_all<T>(
    data: Vec<Complex64>,
    shape: &[usize],
    width: usize,
    mats: &[Vec<T>],
    rows: &[usize],
) -> Vec<Complex64>
where
    T: Copy + Send + Sync,
    Complex64: Mul<T, Output = Complex64>,
{
    let mut cur = data;
    let mut sh = shape.to_vec();
    for axis in 0..shape.len() {
        cur = contract_axis(&cur, &sh, width, axis, &mats[axis], rows[axis]);
        sh[axis] = rows[axis];
    }
    cur
}

/// Splits a flat position into per-axis indices.
pub fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for a in (0..shape.len()).rev() {
        idx[a] = flat % shape[a];
        flat /= shape[a];
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn contract_matches_naive_loop() {
        // shape 2×3, width 2
        let shape = [2, 3];
        let data: Vec<Complex64> = (0..12).map(|i| Complex64::new(i as f64, -(i as f64) / 2.0)).collect();
        let mat = vec![1.0, 2.0, 0.5, -1.0, 0.0, 3.0]; // 2×3 on axis 1
        let out = contract_axis(&data, &shape, 2, 1, &mat, 2);
        for a in 0..2 {
            for r in 0..2 {
                for w in 0..2 {
                    let mut want = c(0.0);
                    for col in 0..3 {
                        want += data[(a * 3 + col) * 2 + w] * mat[r * 3 + col];
                    }
                    assert_eq!(out[(a * 2 + r) * 2 + w], want);
                }
            }
        }
    }

    #[test]
    fn contract_all_is_kronecker_product() {
        let shape = [2, 2];
        let data: Vec<Complex64> = [1.0, 2.0, 3.0, 4.0].iter().map(|&x| c(x)).collect();
        let a = vec![Complex64::new(0.0, 1.0), c(1.0)]; // 1×2
        let b = vec![c(2.0), c(-1.0), c(0.0), c(1.0)]; // 2×2
        let out = contract_all(data.clone(), &shape, 1, &[a.clone(), b.clone()], &[1, 2]);
        for j in 0..2 {
            let mut want = c(0.0);
            for i0 in 0..2 {
                for i1 in 0..2 {
                    want += a[i0] * b[j * 2 + i1] * data[i0 * 2 + i1];
                }
            }
            assert_eq!(out[j], want);
        }
    }

    #[test]
    fn unflatten_inverts_row_major() {
        let shape = [3, 4, 5];
        assert_eq!(unflatten(0, &shape), vec![0, 0, 0]);
        assert_eq!(unflatten(4 * 5 + 2 * 5 + 3, &shape), vec![1, 2, 3]);
    }
}
