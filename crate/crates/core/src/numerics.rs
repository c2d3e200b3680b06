//! Small numerical utilities shared across the crate: quadrature, scalar
//! root finding, summary statistics, and resampling.

/// Adaptive Simpson quadrature on `[a, b]`.
///
/// Handles integrands with mildly singular derivatives at the endpoints
/// (e.g. `sin(pi * t^p)` with `p < 1`) by recursive bisection.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Bisection root finder; `f(lo)` and `f(hi)` must bracket a sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64, iters: usize) -> f64 {
    let mut flo = f(lo);
    debug_assert!(flo * f(hi) <= 0.0, "bisect: root not bracketed");
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo) < tol {
            return mid;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    0.5 * (lo + hi)
}

/// Newton iteration with bisection fallback inside a bracket.
pub fn newton_bracketed<F, G>(f: &F, df: &G, lo: f64, hi: f64, tol: f64, iters: usize) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    let mut x = 0.5 * (lo + hi);
    let mut flo = f(lo);
    for _ in 0..iters {
        let fx = f(x);
        if fx.abs() < tol {
            return x;
        }
        if flo * fx < 0.0 {
            hi = x;
        } else {
            lo = x;
            flo = fx;
        }
        let d = df(x);
        let step = if d != 0.0 { fx / d } else { f64::INFINITY };
        let cand = x - step;
        x = if cand.is_finite() && cand > lo && cand < hi {
            cand
        } else {
            0.5 * (lo + hi)
        };
    }
    x
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (divides by n).
pub fn std_pop(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Sample standard deviation (divides by n - 1).
pub fn std_sample(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Empirical quantile with linear interpolation on sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// Linear interpolation of a periodic signal sampled at `src_rate` onto
/// `n_out` samples covering one period `duration`.
pub fn resample_periodic(samples: &[f64], duration: f64, n_out: usize) -> Vec<f64> {
    let n = samples.len();
    assert!(n >= 2 && n_out >= 1 && duration > 0.0);
    let src_dt = duration / n as f64;
    let out_dt = duration / n_out as f64;
    (0..n_out)
        .map(|j| {
            let t = j as f64 * out_dt;
            let pos = t / src_dt;
            let i = pos.floor() as usize;
            let frac = pos - i as f64;
            let a = samples[i % n];
            let b = samples[(i + 1) % n];
            a * (1.0 - frac) + b * frac
        })
        .collect()
}

/// Relative L2 distance ||a - b|| / ||b||, with an absolute fallback when
/// ||b|| is tiny.
pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (x - y) * (x - y);
        den += y * y;
    }
    (num / den.max(1e-300)).sqrt()
}
