use std::collections::BinaryHeap;

use super::NumericsError;

/// Tolerances for [`quad`]. The estimate is accepted once the summed
/// Gauss/Kronrod error is below `max(abs_tol, rel_tol·|result|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 1 << 14,
        }
    }
}

impl QuadSpec {
    pub fn with_tolerance(tol: f64) -> QuadSpec {
        QuadSpec {
            abs_tol: tol,
            rel_tol: tol,
            ..QuadSpec::default()
        }
    }

    fn validate(&self) -> Result<(), NumericsError> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(NumericsError::BadTolerance(format!(
                "abs_tol={} rel_tol={} must be positive",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(NumericsError::BadTolerance("max_subdivisions = 0".into()));
        }
        Ok(())
    }
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208980304206,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn sample<E: From<NumericsError>>(
    f: &mut impl FnMut(f64) -> Result<f64, E>,
    t: f64,
) -> Result<f64, E> {
    let v = f(t)?;
    if !v.is_finite() {
        return Err(NumericsError::NonFinite {
            value: v,
            at: format!("integrand at t = {t}"),
        }
        .into());
    }
    Ok(v)
}

fn gk21<E: From<NumericsError>>(
    f: &mut impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
) -> Result<Segment, E> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = sample(f, center)?;
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let s = sample(f, center - dx)? + sample(f, center + dx)?;
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Ok(Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    })
}

/// Adaptive Gauss–Kronrod (G10/K21) integration of a fallible integrand over
/// `[a, b]`. The segment with the largest error estimate is bisected until
/// the tolerance in `spec` is met. `a == b` yields exactly `0`.
pub fn quad<E: From<NumericsError>>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    spec: &QuadSpec,
) -> Result<f64, E> {
    spec.validate()?;
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(NumericsError::NonFinite {
            value: if a.is_finite() { b } else { a },
            at: "integration limit".into(),
        }
        .into());
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let first = gk21(&mut f, lo, hi)?;
    let mut total = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut subdivisions = 0;

    while error > spec.abs_tol.max(spec.rel_tol * total.abs()) {
        if subdivisions >= spec.max_subdivisions {
            return Err(NumericsError::QuadNonConvergence {
                a,
                b,
                subdivisions,
                error,
            }
            .into());
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Segment can no longer be split in double precision.
            return Err(NumericsError::QuadNonConvergence {
                a,
                b,
                subdivisions,
                error,
            }
            .into());
        }
        let left = gk21(&mut f, worst.a, mid)?;
        let right = gk21(&mut f, mid, worst.b)?;
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
    }
    // Re-sum to shed the drift of the running updates.
    let total: f64 = heap.iter().map(|s| s.value).sum();
    Ok(sign * total)
}

/// [`quad`] for an infallible integrand.
pub fn quad_plain(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    spec: &QuadSpec,
) -> Result<f64, NumericsError> {
    quad(|t| Ok::<f64, NumericsError>(f(t)), a, b, spec)
}
