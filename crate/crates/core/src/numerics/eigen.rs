use super::{Mat, NumericsError};

/// All eigenvalues of the symmetric part of `m`, ascending, by cyclic Jacobi
/// rotations until the off-diagonal Frobenius norm is at most `1e-12`
/// (relative to the matrix scale when it exceeds one).
pub fn eigenvalues_sym(m: &Mat) -> Result<Vec<f64>, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::Dimension(format!(
            "eigenvalues of {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let mut a = m.symmetrized();
    let scale = a.frobenius_sq().sqrt().max(1.0);
    let off = |a: &Mat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    for _sweep in 0..100 {
        if off(&a) <= 1e-12 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Least eigenvalue of the symmetric part of `m`.
pub fn min_eigen_sym(m: &Mat) -> Result<f64, NumericsError> {
    let eig = eigenvalues_sym(m)?;
    eig.first()
        .copied()
        .ok_or_else(|| NumericsError::Dimension("empty matrix".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        assert_eq!(min_eigen_sym(&Mat::identity(2)).unwrap(), 1.0);
        let m = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!((min_eigen_sym(&m).unwrap() - 1.0).abs() < 1e-14);
        let one = Mat::from_rows(&[vec![-0.75]]);
        assert_eq!(min_eigen_sym(&one).unwrap(), -0.75);
    }

    #[test]
    fn non_square_is_an_error() {
        assert!(min_eigen_sym(&Mat::zeros(2, 3)).is_err());
    }

    #[test]
    fn three_by_three_spectrum() {
        // tridiagonal (2,-1) matrix: eigenvalues 2 - 2cos(kπ/4)
        let m = Mat::from_rows(&[
            vec![2.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ]);
        let eig = eigenvalues_sym(&m).unwrap();
        for (k, e) in eig.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / 4.0).cos();
            assert!((e - exact).abs() < 1e-12);
        }
    }
}
