//! Multi-lane matrix-vector products.
//!
//! Vectors are stored node-major: component `j` of lane `r` lives at
//! `x[j * lanes + r]`. Each output element is accumulated from `0.0` in
//! ascending column order with separate multiply and add (never fused), so
//! results are bit-identical regardless of lane count, blocking, or the
//! instruction set selected at runtime.

const ROW_BLOCK: usize = 4;
const LANE_BLOCK: usize = 8;

pub(crate) fn dense_mul_lanes(n: usize, m: &[f64], x: &[f64], y: &mut [f64], lanes: usize) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("avx2") {
            // SAFETY: the required feature was detected above.
            unsafe { dense_avx2(n, m, x, y, lanes) };
            return;
        }
    }
    dense_generic(n, m, x, y, lanes);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn dense_avx2(n: usize, m: &[f64], x: &[f64], y: &mut [f64], lanes: usize) {
    dense_generic(n, m, x, y, lanes);
}

#[inline(always)]
fn dense_generic(n: usize, m: &[f64], x: &[f64], y: &mut [f64], lanes: usize) {
    let mut i0 = 0;
    while i0 < n {
        if n - i0 >= ROW_BLOCK {
            lane_sweep::<ROW_BLOCK>(n, m, x, y, lanes, i0);
            i0 += ROW_BLOCK;
        } else {
            lane_sweep::<1>(n, m, x, y, lanes, i0);
            i0 += 1;
        }
    }
}

#[inline(always)]
fn lane_sweep<const R: usize>(n: usize, m: &[f64], x: &[f64], y: &mut [f64], lanes: usize, i0: usize) {
    let mut r0 = 0;
    while r0 < lanes {
        match lanes - r0 {
            w if w >= LANE_BLOCK => {
                dense_block::<R, LANE_BLOCK>(n, m, x, y, lanes, i0, r0);
                r0 += LANE_BLOCK;
            }
            w if w >= 4 => {
                dense_block::<R, 4>(n, m, x, y, lanes, i0, r0);
                r0 += 4;
            }
            w if w >= 2 => {
                dense_block::<R, 2>(n, m, x, y, lanes, i0, r0);
                r0 += 2;
            }
            _ => {
                dense_block::<R, 1>(n, m, x, y, lanes, i0, r0);
                r0 += 1;
            }
        }
    }
}

#[inline(always)]
fn dense_block<const R: usize, const L: usize>(
    n: usize,
    m: &[f64],
    x: &[f64],
    y: &mut [f64],
    lanes: usize,
    i0: usize,
    r0: usize,
) {
    let mut acc = [[0.0f64; L]; R];
    let rows: [&[f64]; R] = std::array::from_fn(|k| &m[(i0 + k) * n..(i0 + k + 1) * n]);
    for j in 0..n {
        let xs: &[f64; L] = x[j * lanes + r0..j * lanes + r0 + L].try_into().unwrap();
        for k in 0..R {
            let a = rows[k][j];
            for l in 0..L {
                acc[k][l] += a * xs[l];
            }
        }
    }
    for k in 0..R {
        y[(i0 + k) * lanes + r0..(i0 + k) * lanes + r0 + L].copy_from_slice(&acc[k]);
    }
}

pub(crate) fn sparse_mul_lanes(row_ptr: &[usize], cols: &[u32], vals: &[f64], x: &[f64], y: &mut [f64], lanes: usize) {
    let n = row_ptr.len() - 1;
    if lanes == 1 {
        for i in 0..n {
            let mut acc = 0.0;
            for k in row_ptr[i]..row_ptr[i + 1] {
                acc += vals[k] * x[cols[k] as usize];
            }
            y[i] = acc;
        }
        return;
    }
    for i in 0..n {
        let out = &mut y[i * lanes..(i + 1) * lanes];
        out.fill(0.0);
        for k in row_ptr[i]..row_ptr[i + 1] {
            let a = vals[k];
            let c = cols[k] as usize;
            let xs = &x[c * lanes..(c + 1) * lanes];
            for (o, &v) in out.iter_mut().zip(xs) {
                *o += a * v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(n: usize, m: &[f64], x: &[f64], lanes: usize) -> Vec<f64> {
        let mut y = vec![0.0; n * lanes];
        for i in 0..n {
            for r in 0..lanes {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += m[i * n + j] * x[j * lanes + r];
                }
                y[i * lanes + r] = acc;
            }
        }
        y
    }

    fn pseudo(k: usize) -> f64 {
        ((k as f64 * 0.618_033_988_75).fract() - 0.5) * 3.0
    }

    #[test]
    fn dense_matches_naive_bitwise_for_odd_shapes() {
        for &(n, lanes) in &[(1, 1), (3, 1), (5, 9), (9, 17), (12, 8), (13, 3)] {
            let m: Vec<f64> = (0..n * n).map(pseudo).collect();
            let x: Vec<f64> = (0..n * lanes).map(|k| pseudo(k + 1000)).collect();
            let mut y = vec![f64::NAN; n * lanes];
            dense_mul_lanes(n, &m, &x, &mut y, lanes);
            assert_eq!(y, naive(n, &m, &x, lanes), "n={n} lanes={lanes}");
        }
    }

    #[test]
    fn lane_results_do_not_depend_on_lane_count() {
        let n = 11;
        let m: Vec<f64> = (0..n * n).map(pseudo).collect();
        let lanes = 19;
        let x: Vec<f64> = (0..n * lanes).map(|k| pseudo(k + 7)).collect();
        let mut y = vec![0.0; n * lanes];
        dense_mul_lanes(n, &m, &x, &mut y, lanes);
        for r in 0..lanes {
            let xr: Vec<f64> = (0..n).map(|j| x[j * lanes + r]).collect();
            let mut yr = vec![0.0; n];
            dense_mul_lanes(n, &m, &xr, &mut yr, 1);
            for i in 0..n {
                assert_eq!(yr[i].to_bits(), y[i * lanes + r].to_bits());
            }
        }
    }
}
