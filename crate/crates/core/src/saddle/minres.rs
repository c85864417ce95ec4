use crate::fem::SparseOperator;
use crate::{Error, Result};

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Unpreconditioned MINRES for symmetric (possibly indefinite) systems.
///
/// Stops when ‖b − Kx‖ ≤ `tol`·‖b‖; `NonConvergence` after `max_iter` steps.
pub fn minres(k: &SparseOperator, b: &[f64], x0: Option<&[f64]>, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = x0.map_or_else(|| vec![0.0; n], |v| v.to_vec());
    let kx = k.matvec(&x);
    let r0: Vec<f64> = b.iter().zip(&kx).map(|(a, c)| a - c).collect();
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut beta = norm(&r0);
    if beta <= tol * bnorm {
        return Ok(x);
    }
    let mut v_old = vec![0.0; n];
    let mut v: Vec<f64> = r0.iter().map(|r| r / beta).collect();
    let (mut w_old, mut w_oold) = (vec![0.0; n], vec![0.0; n]);
    let mut eta = beta;
    let (mut c_old, mut c) = (1.0f64, 1.0f64);
    let (mut s_old, mut s) = (0.0f64, 0.0f64);
    for it in 0..max_iter {
        let kv = k.matvec(&v);
        let alpha: f64 = v.iter().zip(&kv).map(|(a, b)| a * b).sum();
        let mut v_new: Vec<f64> = (0..n).map(|i| kv[i] - alpha * v[i] - beta * v_old[i]).collect();
        let beta_new = norm(&v_new);
        // QR update with Givens rotations
        let delta = c * alpha - c_old * s * beta;
        let rho1 = (delta * delta + beta_new * beta_new).sqrt();
        let rho2 = s * alpha + c_old * c * beta;
        let rho3 = s_old * beta;
        s_old = s;
        c_old = c;
        if rho1 == 0.0 {
            return Err(Error::NonConvergence(format!("MINRES breakdown at iteration {it}")));
        }
        c = delta / rho1;
        s = beta_new / rho1;
        let w: Vec<f64> = (0..n).map(|i| (v[i] - rho3 * w_oold[i] - rho2 * w_old[i]) / rho1).collect();
        for i in 0..n {
            x[i] += c * eta * w[i];
        }
        eta *= -s;
        w_oold = std::mem::replace(&mut w_old, w);
        if eta.abs() <= tol * bnorm {
            // confirm with the true residual
            let r = k.matvec(&x);
            let res = norm(&b.iter().zip(&r).map(|(a, c)| a - c).collect::<Vec<_>>());
            if res <= tol * bnorm * 10.0 {
                return Ok(x);
            }
        }
        if beta_new == 0.0 {
            break;
        }
        for vi in v_new.iter_mut() {
            *vi /= beta_new;
        }
        v_old = std::mem::replace(&mut v, v_new);
        beta = beta_new;
    }
    Err(Error::NonConvergence(format!("MINRES did not reach {tol:e} in {max_iter} iterations")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_indefinite_system() {
        let k = SparseOperator::from_triplets(
            3,
            3,
            vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (0, 2, 1.0), (2, 0, 1.0)],
            true,
        );
        let x = minres(&k, &[6.0, 7.0, 1.0], None, 1e-12, 50).unwrap();
        let r = k.matvec(&x);
        for (a, b) in r.iter().zip([6.0, 7.0, 1.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn budget_exhaustion_reported() {
        let n = 50;
        let trip = (0..n).map(|i| (i, i, 1.0 + i as f64)).collect();
        let k = SparseOperator::from_triplets(n, n, trip, true);
        let b = vec![1.0; n];
        assert!(matches!(minres(&k, &b, None, 1e-14, 3), Err(Error::NonConvergence(_))));
    }
}
