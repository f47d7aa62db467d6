//! Cox–de Boor evaluation of B-spline basis functions on an arbitrary
//! nondecreasing knot vector.

/// Index `k` of the knot interval `[t_k, t_{k+1})` holding `x`. The right end
/// of the knot vector belongs to the last non-empty interval. `None` outside
/// `[t_0, t_last]`.
fn knot_interval(knots: &[f64], x: f64) -> Option<usize> {
    let first = *knots.first()?;
    let last = *knots.last()?;
    if !(x >= first && x <= last) {
        return None;
    }
    if x == last {
        return (0..knots.len() - 1).rev().find(|&k| knots[k] < knots[k + 1]);
    }
    // Largest k with t_k <= x; t_{k+1} > x follows.
    let k = knots.partition_point(|&t| t <= x) - 1;
    Some(k)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Values of all `knots.len() - degree - 1` basis functions of the given
/// degree at `x`; all zeros outside the knot span.
pub fn basis(knots: &[f64], degree: usize, x: f64) -> Vec<f64> {
    basis_with_degree_below(knots, degree, x).0
}

/// Basis values and their derivatives with respect to `x`.
pub fn basis_with_derivative(knots: &[f64], degree: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let (values, lower) = basis_with_degree_below(knots, degree, x);
    let n = values.len();
    let mut deriv = vec![0.0; n];
    if degree > 0 {
        let p = degree as f64;
        for i in 0..n {
            deriv[i] = p * ratio(lower[i], knots[i + degree] - knots[i])
                - p * ratio(lower[i + 1], knots[i + degree + 1] - knots[i + 1]);
        }
    }
    (values, deriv)
}

/// Runs the recursion up to `degree`, returning the degree-`degree` values and
/// the degree-`degree - 1` values (empty when `degree == 0`).
fn basis_with_degree_below(knots: &[f64], degree: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(knots.len() >= degree + 2, "knot vector too short for degree {degree}");
    let mut b = vec![0.0; knots.len() - 1];
    if let Some(k) = knot_interval(knots, x) {
        b[k] = 1.0;
    }
    let mut lower = Vec::new();
    for d in 1..=degree {
        if d == degree {
            lower = b.clone();
        }
        let n = knots.len() - 1 - d;
        let mut next = vec![0.0; n];
        for (i, slot) in next.iter_mut().enumerate() {
            *slot = ratio(x - knots[i], knots[i + d] - knots[i]) * b[i]
                + ratio(knots[i + d + 1] - x, knots[i + d + 1] - knots[i + 1]) * b[i + 1];
        }
        b = next;
    }
    (b, lower)
}

/// The `degree + 1` basis functions that can be nonzero on knot interval
/// `[t_span, t_{span+1})`, i.e. functions `span - degree ..= span`, written
/// into `values`, with their derivatives in `derivs`. Requires
/// `degree <= span < knots.len() - degree - 1`.
pub fn local_basis_with_derivative(
    knots: &[f64],
    degree: usize,
    span: usize,
    x: f64,
    values: &mut [f64],
    derivs: &mut [f64],
) {
    debug_assert!(span >= degree && span + degree + 1 < knots.len());
    debug_assert!(values.len() > degree && derivs.len() > degree);
    // Inverted triangle of de Boor; `left[j] = x - t_{span+1-j}`, `right[j] = t_{span+j} - x`.
    let mut left = [0.0f64; 8];
    let mut right = [0.0f64; 8];
    assert!(degree < left.len(), "degree {degree} too large");
    values[0] = 1.0;
    for d in 0..=degree {
        derivs[d] = 0.0;
    }
    for j in 1..=degree {
        if j == degree {
            // Degree-(p-1) values feed the derivative formula.
            let p = degree as f64;
            for r in 0..=degree {
                let i = span - degree + r;
                let lower_left = if r > 0 { ratio(values[r - 1], knots[i + degree] - knots[i]) } else { 0.0 };
                let lower_right = if r < degree {
                    ratio(values[r], knots[i + degree + 1] - knots[i + 1])
                } else {
                    0.0
                };
                derivs[r] = p * (lower_left - lower_right);
            }
        }
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = ratio(values[r], right[r + 1] + left[j - r]);
            values[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        values[j] = saved;
    }
}

/// Knot vector with `degree + 1` copies of each end and `interior` uniformly
/// spaced interior knots.
pub fn clamped_uniform_knots(lo: f64, hi: f64, degree: usize, interior: usize) -> Vec<f64> {
    let mut knots = vec![lo; degree + 1];
    let step = (hi - lo) / (interior + 1) as f64;
    knots.extend((1..=interior).map(|i| lo + step * i as f64));
    knots.extend(std::iter::repeat_n(hi, degree + 1));
    knots
}

/// Uniform grid of `intervals` cells on `[lo, hi]`, extended by `degree`
/// cells on each side so every point of `[lo, hi]` sees a full set of
/// `degree + 1` basis functions.
pub fn extended_uniform_knots(lo: f64, hi: f64, degree: usize, intervals: usize) -> Vec<f64> {
    let step = (hi - lo) / intervals as f64;
    (0..=intervals + 2 * degree)
        .map(|i| lo + step * (i as f64 - degree as f64))
        .collect()
}
