//! Derivative-free minimizers used by [`crate::calibration`].

/// Outcome of a minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub n_iterations: usize,
    pub converged: bool,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`.
/// Stops when the bracket is narrower than `tol`.
pub fn golden_section<F>(f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Minimum
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut n = 0;
    while (b - a).abs() > tol && n < max_iter {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        n += 1;
    }
    let (x, value) = if fc < fd { (c, fc) } else { (d, fd) };
    Minimum {
        x: vec![x],
        value,
        n_iterations: n,
        converged: (b - a).abs() <= tol,
    }
}

/// Nelder–Mead simplex search from `start`, with initial edge `step` along
/// each axis.
///
/// Converges when every vertex lies within `tol` (Euclidean) of the best one.
/// Non-finite objective values are treated as `+∞`.
pub fn nelder_mead<F>(f: F, start: &[f64], step: f64, tol: f64, max_iter: usize) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), eval(start)));
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += step;
        let v = eval(&x);
        simplex.push((x, v));
    }
    let along =
        |from: &[f64], to: &[f64], t: f64| -> Vec<f64> { from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect() };
    let diameter = |s: &[(Vec<f64>, f64)]| {
        s[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&s[0].0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    };

    let mut iter = 0;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if diameter(&simplex) < tol || iter >= max_iter {
            break;
        }
        iter += 1;
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflected = along(&centroid, &worst.0, -1.0);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(&centroid, &worst.0, -2.0);
            let fe = eval(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
            continue;
        }
        let (contracted, fk) = if fr < worst.1 {
            let x = along(&centroid, &reflected, 0.5);
            let v = eval(&x);
            (x, v)
        } else {
            let x = along(&centroid, &worst.0, 0.5);
            let v = eval(&x);
            (x, v)
        };
        if fk < worst.1.min(fr) {
            simplex[n] = (contracted, fk);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = along(&best, &vertex.0, 0.5);
            let v = eval(&x);
            *vertex = (x, v);
        }
    }
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        converged: diameter_ok(tol, &simplex, &x),
        x,
        value,
        n_iterations: iter,
    }
}

fn diameter_ok(tol: f64, rest: &[(Vec<f64>, f64)], best: &[f64]) -> bool {
    rest.iter()
        .all(|(x, _)| x.iter().zip(best).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_parabola() {
        let m = golden_section(|x| (x - 1.25).powi(2) + 3.0, -10.0, 10.0, 1e-10, 500);
        assert!(m.converged);
        assert!((m.x[0] - 1.25).abs() < 1e-7);
        assert!((m.value - 3.0).abs() < 1e-15);
    }

    #[test]
    fn golden_section_budget() {
        let m = golden_section(|x| x * x, -1.0, 1.0, 1e-12, 5);
        assert!(!m.converged);
        assert_eq!(m.n_iterations, 5);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let rosen = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let m = nelder_mead(rosen, &[-1.2, 1.0], 0.1, 1e-10, 5000);
        assert!(m.converged, "{m:?}");
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn nelder_mead_quadratic_4d_and_determinism() {
        let target = [0.3, -1.0, 2.0, 0.5];
        let f = |x: &[f64]| {
            x.iter()
                .zip(&target)
                .enumerate()
                .map(|(i, (a, b))| (i + 1) as f64 * (a - b).powi(2))
                .sum()
        };
        let m = nelder_mead(f, &[0.0; 4], 0.5, 1e-9, 2000);
        assert!(m.converged);
        for (a, b) in m.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-8);
        }
        assert_eq!(m, nelder_mead(f, &[0.0; 4], 0.5, 1e-9, 2000));
    }

    #[test]
    fn nelder_mead_survives_nan_regions() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 2.0).powi(2) };
        let m = nelder_mead(f, &[0.5], 1.0, 1e-9, 1000);
        assert!((m.x[0] - 2.0).abs() < 1e-8);
    }
}
