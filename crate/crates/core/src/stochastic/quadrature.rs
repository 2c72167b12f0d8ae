//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("integration interval [{0}, {1}] is not finite")]
    NonFinite(f64, f64),
    #[error("integrand returned a non-finite value at x = {0}")]
    BadValue(f64),
    #[error("tolerance not reached after {0} subdivisions (error estimate {1:e})")]
    NoConvergence(usize, f64),
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd Kronrod nodes (XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_SEGMENTS: usize = 2000;

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Segment, QuadratureError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut eval = |x: f64| {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadratureError::BadValue(x))
        }
    };
    let fc = eval(c)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = eval(c - dx)? + eval(c + dx)?;
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Ok(Segment {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    })
}

/// Integrates `f` over `[a, b]` until the summed error estimate is below
/// `max(abs_tol, rel_tol * |integral|)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64, QuadratureError> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(QuadratureError::NonFinite(a, b));
    }
    if a == b {
        return Ok(0.0);
    }
    let (a, b, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut segments = vec![kronrod(&mut f, a, b)?];
    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let err: f64 = segments.iter().map(|s| s.error).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(sign * total);
        }
        if segments.len() >= MAX_SEGMENTS {
            return Err(QuadratureError::NoConvergence(segments.len(), err));
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval exhausted at machine precision; accept as is
            segments.push(seg);
            let err: f64 = segments.iter().map(|s| s.error).sum();
            return Err(QuadratureError::NoConvergence(segments.len(), err));
        }
        segments.push(kronrod(&mut f, seg.a, mid)?);
        segments.push(kronrod(&mut f, mid, seg.b)?);
    }
}

/// Like [`integrate`] but splits `[a, b]` at the given interior points
/// first (kinks and jumps of the integrand). Points outside the interval
/// are ignored.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64, QuadratureError> {
    let mut points: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > a && *x < b)
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut edges = Vec::with_capacity(points.len() + 2);
    edges.push(a);
    edges.extend(points);
    edges.push(b);
    let pieces = (edges.len() - 1) as f64;
    let mut total = 0.0;
    for w in edges.windows(2) {
        total += integrate(&mut f, w[0], w[1], abs_tol / pieces, rel_tol)?;
    }
    Ok(total)
}
