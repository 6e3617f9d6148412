//! Finite-difference weights on arbitrary grids (Fornberg's recursion).

/// Weights `w[k][j]` such that `f^{(k)}(x0) ≈ Σ_j w[k][j] f(x[j])`, `k ≤ max_order`.
pub fn fornberg_weights(x0: f64, x: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let m = max_order;
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - x0;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// First and second derivatives of sampled data.
///
/// Five-point stencils in the interior, three-point stencils at the two
/// outermost nodes on each side. With `even_at_start` the data is treated as
/// even about `x[0]` (axis of symmetry) and the first nodes use reflected
/// values, which keeps the full order there.
pub fn derivatives(x: &[f64], f: &[f64], even_at_start: bool) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    assert_eq!(n, f.len());
    assert!(n >= 3, "need at least three nodes");
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 0..n {
        let (xs, fs): (Vec<f64>, Vec<f64>) = if even_at_start && i < 2 && n >= 5 {
            // reflect across x[0]
            let mut pts = Vec::with_capacity(5);
            for k in -2i64..=2 {
                let j = i as i64 + k;
                if j >= 0 {
                    pts.push((x[j as usize], f[j as usize]));
                } else {
                    let r = (-j) as usize;
                    pts.push((2.0 * x[0] - x[r], f[r]));
                }
            }
            pts.into_iter().unzip()
        } else if i >= 2 && i + 2 < n {
            (x[i - 2..=i + 2].to_vec(), f[i - 2..=i + 2].to_vec())
        } else if i == 0 {
            (x[0..3].to_vec(), f[0..3].to_vec())
        } else if i + 1 == n {
            (x[n - 3..n].to_vec(), f[n - 3..n].to_vec())
        } else {
            (x[i - 1..=i + 1].to_vec(), f[i - 1..=i + 1].to_vec())
        };
        let w = fornberg_weights(x[i], &xs, 2);
        // weights sum to zero; differencing against f[i] first limits round-off
        d1[i] = w[1].iter().zip(&fs).map(|(a, b)| a * (b - f[i])).sum();
        d2[i] = w[2].iter().zip(&fs).map(|(a, b)| a * (b - f[i])).sum();
    }
    (d1, d2)
}
