//! Adaptive Gauss-Kronrod (7, 15) quadrature.

use crate::scalar::Real;

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
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let center = (a + b) / T::lit(2.0);
    let half = (b - a) / T::lit(2.0);
    let fc = f(center);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kron = kron + pair * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * T::lit(WG[j / 2]);
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Integral of `f` over `[a, b]` to relative tolerance `rel_tol`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, rel_tol: T) -> T {
    let (estimate, error) = kronrod(&f, a, b);
    refine(&f, a, b, estimate, error, rel_tol, estimate.abs(), 50)
}

#[allow(clippy::too_many_arguments)]
fn refine<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    estimate: T,
    error: T,
    rel_tol: T,
    scale: T,
    depth: u32,
) -> T {
    if depth == 0 || error <= rel_tol * scale || error <= T::epsilon() * estimate.abs() {
        return estimate;
    }
    let mid = (a + b) / T::lit(2.0);
    let (left, el) = kronrod(f, a, mid);
    let (right, er) = kronrod(f, mid, b);
    let scale = scale.max((left + right).abs());
    refine(
        f,
        a,
        mid,
        left,
        el,
        rel_tol / T::lit(2.0).sqrt(),
        scale,
        depth - 1,
    ) + refine(
        f,
        mid,
        b,
        right,
        er,
        rel_tol / T::lit(2.0).sqrt(),
        scale,
        depth - 1,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x: f64| 3.0 * x * x - x + 2.0, -1.0, 2.0, 1e-12);
        assert!((v - (8.0 + 1.0 - 1.5 + 6.0)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_tail() {
        let v = integrate(|x: f64| (-x * x).exp(), 0.0, 12.0, 1e-10);
        assert!((v - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn sharp_peak() {
        let v = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10);
        let want = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!(((v - want) / want).abs() < 1e-9);
    }
}
