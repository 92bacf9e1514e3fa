//! Small unconstrained quasi-Newton minimizer used by the likelihood fits.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when one iteration improves the objective by less than this.
    pub f_tol: f64,
    pub g_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            max_iter: 2000,
            f_tol: 1e-10,
            g_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// BFGS with Armijo backtracking. `fg` returns the objective and its gradient;
/// it may return a non-finite objective to reject a trial point.
pub fn bfgs<F>(x0: &[f64], opts: BfgsOptions, mut fg: F) -> BfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut f, g0) = fg(x.as_slice());
    let mut g = DVector::from_vec(g0);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut converged = false;
    let mut it = 0;
    while it < opts.max_iter {
        it += 1;
        if g.norm() < opts.g_tol {
            converged = true;
            break;
        }
        let mut dir = -(&h * &g);
        let mut slope = g.dot(&dir);
        if slope >= 0.0 {
            h = DMatrix::identity(n, n);
            dir = -g.clone();
            slope = -g.norm_squared();
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xt = &x + &dir * t;
            let (ft, gt) = fg(xt.as_slice());
            if ft.is_finite() && ft <= f + 1e-4 * t * slope {
                accepted = Some((xt, ft, DVector::from_vec(gt)));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            // no descent possible at machine precision
            converged = true;
            break;
        };
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (&s * s.transpose()) * (rho * rho * yhy + rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        let improvement = f - fn_;
        x = xn;
        f = fn_;
        g = gn;
        if improvement.abs() < opts.f_tol * (1.0 + f.abs()) {
            converged = true;
            break;
        }
    }
    BfgsResult {
        x: x.as_slice().to_vec(),
        f,
        iterations: it,
        converged,
    }
}
