//! Golden-section minimization over `r > 0`.

const INV_PHI: f64 = 0.618_033_988_749_894_9;
const R_MIN: f64 = 1e-12;
const R_MAX: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Minimum {
    pub argmin: f64,
    pub value: f64,
    /// False when the grid pre-check found more than one descent and the
    /// grid fallback was used.
    pub unimodal: bool,
}

/// Bracket `(a, b, c)` with `f(b) <= f(a), f(c)`, found by doubling or halving from `start`.
/// Returns `None` when the descent runs into `R_MIN` or `R_MAX`.
pub fn bracket<F: Fn(f64) -> f64>(f: &F, start: f64) -> Option<(f64, f64, f64)> {
    let mut b = start;
    let mut fb = f(b);
    let (mut a, mut c) = (b / 2.0, b * 2.0);
    let (mut fa, mut fc) = (f(a), f(c));
    while fa < fb {
        if a < R_MIN {
            return None;
        }
        (c, fc, b, fb) = (b, fb, a, fa);
        a = b / 2.0;
        fa = f(a);
    }
    while fc < fb {
        if c > R_MAX {
            return None;
        }
        (a, b, fb) = (b, c, fc);
        c = b * 2.0;
        fc = f(c);
    }
    Some((a, b, c))
}

/// Golden-section search on `[a, c]` until the interval is below `rel_tol` relative width.
pub fn golden_section<F: Fn(f64) -> f64>(
    f: &F,
    mut a: f64,
    mut c: f64,
    rel_tol: f64,
) -> (f64, f64) {
    let mut x1 = c - INV_PHI * (c - a);
    let mut x2 = a + INV_PHI * (c - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..500 {
        if (c - a) <= rel_tol * (x1.abs() + x2.abs()) {
            break;
        }
        if f1 <= f2 {
            c = x2;
            (x2, f2) = (x1, f1);
            x1 = c - INV_PHI * (c - a);
            f1 = f(x1);
        } else {
            a = x1;
            (x1, f1) = (x2, f2);
            x2 = a + INV_PHI * (c - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn log_grid(a: f64, c: f64, points: usize) -> Vec<f64> {
    let (la, lc) = (a.ln(), c.ln());
    (0..points)
        .map(|i| (la + (lc - la) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// True when the values only fall and then only rise.
fn single_descent(values: &[f64]) -> bool {
    let mut rising = false;
    for w in values.windows(2) {
        let step = w[1] - w[0];
        let scale = w[0].abs().max(w[1].abs()).max(1e-300);
        if step > 1e-13 * scale {
            rising = true;
        } else if step < -1e-13 * scale && rising {
            return false;
        }
    }
    true
}

/// Minimum of `f` over `r > 0`.
///
/// Brackets from `r = 1` by doubling/halving, checks unimodality on a
/// log-spaced grid covering the bracket and `[1e-3, 1e3]`, and refines by golden-section search.
/// When the check fails the best point of a fine grid is refined instead.
/// If the descent runs to the edge of `[1e-12, 1e12]` the edge value is
/// returned.
pub fn minimize_positive<F: Fn(f64) -> f64>(f: F) -> Minimum {
    let Some((a, _, c)) = bracket(&f, 1.0) else {
        let (lo, hi) = (f(R_MIN), f(R_MAX));
        let (argmin, value) = if lo <= hi { (R_MIN, lo) } else { (R_MAX, hi) };
        return Minimum {
            argmin,
            value,
            unimodal: true,
        };
    };
    let grid = log_grid(a.min(1e-3), c.max(1e3), 257);
    let values: Vec<f64> = grid.iter().map(|&r| f(r)).collect();
    if single_descent(&values) {
        let (argmin, value) = golden_section(&f, a, c, 1e-12);
        return Minimum {
            argmin,
            value,
            unimodal: true,
        };
    }
    let fine = log_grid(a.min(1e-6), c.max(1e6), 4001);
    let best = (0..fine.len())
        .min_by(|&i, &j| f(fine[i]).total_cmp(&f(fine[j])))
        .expect("nonempty grid");
    let lo = fine[best.saturating_sub(1)];
    let hi = fine[(best + 1).min(fine.len() - 1)];
    let (argmin, value) = golden_section(&f, lo, hi, 1e-12);
    Minimum {
        argmin,
        value,
        unimodal: false,
    }
}
