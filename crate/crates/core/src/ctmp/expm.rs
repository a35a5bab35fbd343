//! Matrix exponentials of generators by uniformization.

use nalgebra::DMatrix;

use super::intensity::IntensityMatrix;

const POISSON_TAIL: f64 = 1e-12;
/// Largest uniformized time `γt` handled in a single series; longer spans are
/// split into `2^s` pieces and squared back.
const MAX_SERIES_SPAN: f64 = 20.0;

/// `exp(t·A)` for a matrix with nonnegative off-diagonal entries and
/// nonpositive row sums (a generator or a sub-generator).
pub fn expm_metzler(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "square matrix required");
    assert!(t >= 0.0 && t.is_finite(), "time must be finite and >= 0");
    let gamma = (0..n).map(|i| -a[(i, i)]).fold(0.0f64, f64::max);
    if t == 0.0 || gamma == 0.0 {
        return DMatrix::identity(n, n);
    }
    let mut squarings = 0u32;
    let mut span = gamma * t;
    while span > MAX_SERIES_SPAN {
        span /= 2.0;
        squarings += 1;
    }

    // P = I + A/γ is substochastic and nonnegative.
    let p = DMatrix::identity(n, n) + a / gamma;
    let mut weight = (-span).exp();
    let mut term = DMatrix::identity(n, n);
    let mut result = &term * weight;
    let mut cumulative = weight;
    let mut k = 0usize;
    while 1.0 - cumulative > POISSON_TAIL && k < 10_000 {
        k += 1;
        term = &term * &p;
        weight *= span / k as f64;
        cumulative += weight;
        result += &term * weight;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Transition kernel `exp(t·Q)` of a generator; rows sum to one.
pub fn exact_transition_kernel(generator: &IntensityMatrix, t: f64) -> DMatrix<f64> {
    expm_metzler(generator.matrix(), t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_state(q: f64) -> IntensityMatrix {
        IntensityMatrix::from_rates(2, |_, _| q).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let k = exact_transition_kernel(&two_state(0.7), 0.0);
        assert_eq!(k, DMatrix::identity(2, 2));
    }

    #[test]
    fn two_state_closed_form() {
        for &(q, t) in &[(0.5, 1.0), (2.0, 0.3), (1.0, 40.0), (3.0, 100.0)] {
            let k = exact_transition_kernel(&two_state(q), t);
            let expected = 0.5 * (1.0 + (-2.0 * q * t as f64).exp());
            assert_relative_eq!(k[(0, 0)], expected, epsilon = 1e-11);
            assert_relative_eq!(k[(0, 1)], 1.0 - expected, epsilon = 1e-11);
        }
    }

    #[test]
    fn chapman_kolmogorov_and_row_sums() {
        let gen = IntensityMatrix::from_rates(4, |r, c| 0.1 + 0.3 * ((r * 7 + c * 3) % 5) as f64).unwrap();
        let (t1, t2) = (0.37, 1.9);
        let a = exact_transition_kernel(&gen, t1);
        let b = exact_transition_kernel(&gen, t2);
        let ab = exact_transition_kernel(&gen, t1 + t2);
        assert!(((&a * &b) - &ab).abs().max() < 1e-8);
        for k in [&a, &b, &ab] {
            for r in 0..4 {
                assert!((k.row(r).sum() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sub_generator_decays() {
        // pure death at rate 2 from state 0 with no destination
        let a = DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, 0.0]);
        let e = expm_metzler(&a, 0.5);
        assert_relative_eq!(e[(0, 0)], (-1.0f64).exp(), epsilon = 1e-12);
        assert_relative_eq!(e[(1, 1)], 1.0, epsilon = 1e-11);
    }
}
