use super::{Mat, NumericsError};

/// Base step of the central-difference stencils; coordinate `i` uses
/// `step·(1 + |q_i|)`.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

fn checked<E: From<NumericsError>>(
    f: &mut impl FnMut(&[f64]) -> Result<f64, E>,
    q: &[f64],
) -> Result<f64, E> {
    let v = f(q)?;
    if !v.is_finite() {
        return Err(NumericsError::NonFinite {
            value: v,
            at: format!("stencil point {q:?}"),
        }
        .into());
    }
    Ok(v)
}

/// Central-difference gradient.
pub fn fd_grad<E: From<NumericsError>>(
    mut f: impl FnMut(&[f64]) -> Result<f64, E>,
    q: &[f64],
    step: f64,
) -> Result<Vec<f64>, E> {
    let mut x = q.to_vec();
    let mut grad = Vec::with_capacity(q.len());
    for i in 0..q.len() {
        let h = step * (1.0 + q[i].abs());
        x[i] = q[i] + h;
        let fp = checked(&mut f, &x)?;
        x[i] = q[i] - h;
        let fm = checked(&mut f, &x)?;
        x[i] = q[i];
        grad.push((fp - fm) / (2.0 * h));
    }
    Ok(grad)
}

/// Central-difference Hessian, symmetrized. Diagonal entries use the
/// three-point second difference, off-diagonal entries the four-point
/// mixed stencil.
pub fn fd_hess<E: From<NumericsError>>(
    mut f: impl FnMut(&[f64]) -> Result<f64, E>,
    q: &[f64],
    step: f64,
) -> Result<Mat, E> {
    let n = q.len();
    let h: Vec<f64> = q.iter().map(|v| step * (1.0 + v.abs())).collect();
    let mut x = q.to_vec();
    let f0 = checked(&mut f, &x)?;
    let mut hess = Mat::zeros(n, n);
    for i in 0..n {
        x[i] = q[i] + h[i];
        let fp = checked(&mut f, &x)?;
        x[i] = q[i] - h[i];
        let fm = checked(&mut f, &x)?;
        x[i] = q[i];
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| -> Result<f64, E> {
                x[i] = q[i] + si * h[i];
                x[j] = q[j] + sj * h[j];
                let v = checked(&mut f, &x);
                x[i] = q[i];
                x[j] = q[j];
                v
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)?
                + corner(-1.0, -1.0)?)
                / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess.symmetrized())
}
