//! Finite-difference weights on uniform grids.

/// Fornberg's recursion: weights for the `order`-th derivative at `x0` from
/// values at `nodes`.
pub fn fornberg_weights(x0: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Derivative of uniformly sampled `values` at every node, using a
/// `width`-point window that is centered in the interior and shifted
/// inward near the ends.
pub fn differentiate(values: &[f64], step: f64, order: usize, width: usize) -> Vec<f64> {
    let n = values.len();
    assert!(width <= n && width > order);
    let half = width / 2;
    let scale = step.powi(order as i32);
    // Weights depend only on the offset of the node within its window.
    let offsets: Vec<Vec<f64>> = (0..width)
        .map(|p| {
            let nodes: Vec<f64> = (0..width).map(|k| k as f64).collect();
            fornberg_weights(p as f64, &nodes, order)
        })
        .collect();
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(half).min(n - width);
            let w = &offsets[i - start];
            w.iter()
                .zip(&values[start..start + width])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / scale
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_five_point_weights() {
        let nodes = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let w1 = fornberg_weights(0.0, &nodes, 1);
        let expect1 = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        let w2 = fornberg_weights(0.0, &nodes, 2);
        let expect2 = [
            -1.0 / 12.0,
            16.0 / 12.0,
            -30.0 / 12.0,
            16.0 / 12.0,
            -1.0 / 12.0,
        ];
        for k in 0..5 {
            assert!((w1[k] - expect1[k]).abs() < 1e-14);
            assert!((w2[k] - expect2[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_on_polynomials() {
        // Width-7 third derivative is exact for degree <= 6.
        let h = 0.1;
        let f: Vec<f64> = (0..20)
            .map(|i| {
                let x = i as f64 * h;
                x.powi(5) - 2.0 * x.powi(3) + x
            })
            .collect();
        let d3 = differentiate(&f, h, 3, 7);
        for (i, v) in d3.iter().enumerate() {
            let x = i as f64 * h;
            let exact = 60.0 * x * x - 12.0;
            assert!(
                (v - exact).abs() < 1e-7 * exact.abs().max(1.0),
                "{i}: {v} vs {exact}"
            );
        }
    }
}
