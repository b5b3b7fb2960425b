//! Scalar maximisation: coarse scan followed by golden-section refinement.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    /// The maximiser sits on an end of the search interval.
    pub at_boundary: bool,
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`,
/// stopping once the bracket is narrower than `tol`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximises `f` over `[lo, hi]`: evaluates `points` equally spaced nodes,
/// then refines by golden section between the neighbours of the best node.
///
/// The result is never worse than the best scanned node.
pub fn scan_and_refine(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    points: usize,
    tol: f64,
) -> Maximum {
    debug_assert!(points >= 2 && lo < hi);
    let step = (hi - lo) / (points - 1) as f64;
    let node = |i: usize| {
        if i == points - 1 {
            hi
        } else {
            lo + step * i as f64
        }
    };

    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for i in 0..points {
        let value = f(node(i));
        // strict: first of equal maxima wins
        if value > best_value {
            best = i;
            best_value = value;
        }
    }

    let a = node(best.saturating_sub(1));
    let b = node((best + 1).min(points - 1));
    let (mut x, mut value) = golden_section_max(&f, a, b, tol);
    for (edge, edge_value) in [(lo, f(lo)), (hi, f(hi))] {
        if (edge == a || edge == b) && edge_value > value {
            x = edge;
            value = edge_value;
        }
    }
    if best_value > value {
        x = node(best);
        value = best_value;
    }
    let at_boundary = (x - lo).abs() <= tol || (hi - x).abs() <= tol;
    Maximum {
        x,
        value,
        at_boundary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3).powi(2) + 2.0, 0.0, 1.0, 1e-10);
        // flat top: location is only resolvable to ~sqrt(eps)
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-15);
    }

    #[test]
    fn scan_handles_interior_and_edges() {
        let m = scan_and_refine(|s| s - 0.5 * s * s, 0.0, 2.0, 65, 1e-8);
        assert!((m.x - 1.0).abs() < 1e-7);
        assert!(!m.at_boundary);

        let m = scan_and_refine(|s| -s, 0.0, 2.0, 65, 1e-8);
        assert_eq!(m.x, 0.0);
        assert!(m.at_boundary);

        let m = scan_and_refine(|s| s, 0.0, 2.0, 65, 1e-8);
        assert_eq!(m.x, 2.0);
        assert!(m.at_boundary);
    }

    #[test]
    fn scan_escapes_local_maximum() {
        // two bumps; the taller one is near 1.6
        let f =
            |s: f64| (-(s - 0.4).powi(2) / 0.01).exp() + 2.0 * (-(s - 1.6).powi(2) / 0.01).exp();
        let m = scan_and_refine(f, 0.0, 2.0, 65, 1e-9);
        assert!((m.x - 1.6).abs() < 1e-6);
    }
}
