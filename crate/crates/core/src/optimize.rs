//! Derivative-free minimization (Nelder–Mead simplex).

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexOptions {
    pub max_iter: usize,
    /// Stop once both the spread of values and the simplex diameter fall below these.
    pub f_tol: f64,
    pub x_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { max_iter: 4000, f_tol: 1e-16, x_tol: 1e-11 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Minimizes `f` from `x0` with initial per-coordinate steps `step`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: &[f64], opts: SimplexOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step[i];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| sanitize(f(p))).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iter = 0;
    while iter < opts.max_iter {
        iter += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let f_spread = vals[n] - vals[0];
        let x_spread =
            pts[1..].iter().flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max);
        if f_spread <= opts.f_tol && x_spread <= opts.x_tol {
            break;
        }

        let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&pts[n]).map(|(c, w)| c + t * (w - c)).collect() };

        let xr = along(-alpha);
        let fr = sanitize(f(&xr));
        if fr < vals[0] {
            let xe = along(-gamma);
            let fe = sanitize(f(&xe));
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let x = along(-rho);
            let v = sanitize(f(&x));
            (x, v)
        } else {
            let x = along(rho);
            let v = sanitize(f(&x));
            (x, v)
        };
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        // Shrink toward the best point.
        for i in 1..=n {
            let p: Vec<f64> = pts[0].iter().zip(&pts[i]).map(|(b, x)| b + sigma * (x - b)).collect();
            vals[i] = sanitize(f(&p));
            pts[i] = p;
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    Minimum { x: pts[best].clone(), value: vals[best], iterations: iter }
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], &[0.1, 0.1], SimplexOptions::default());
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn quadratic_in_three_dimensions() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + 0.5 * (x[2] - 2.0).powi(2);
        let m = nelder_mead(f, &[0.0, 0.0, 0.0], &[0.5, 0.5, 0.5], SimplexOptions::default());
        for (a, b) in m.x.iter().zip([0.3, -1.0, 2.0]) {
            assert!((a - b).abs() < 1e-7);
        }
    }
}
