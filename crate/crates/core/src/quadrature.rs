//! Gauss–Legendre rules and an adaptive Gauss–Kronrod integrator.

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// A Gauss–Legendre rule mapped onto `[a, b]`.
#[derive(Clone, Debug)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        GaussRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights on `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (c + h * x, h * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Integrates over `[a, b]` with one panel per interval between breakpoints.
    pub fn integrate_panels(&self, a: f64, b: f64, breaks: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
        panels(a, b, breaks).into_iter().map(|(lo, hi)| self.integrate(lo, hi, &mut f)).sum()
    }
}

/// Splits `[a, b]` at the breakpoints that fall strictly inside it.
pub fn panels(a: f64, b: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let mut out = Vec::with_capacity(pts.len() + 1);
    let mut lo = a;
    for p in pts {
        out.push((lo, p));
        lo = p;
    }
    out.push((lo, b));
    out
}

// 15-point Kronrod extension of the 7-point Gauss rule (abscissae in
// descending order, the last one is the centre).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Globally adaptive G7K15 integration over `[a, b]`, with the initial
/// partition taken from `breaks`. Stops when the summed error estimate is
/// below `max(abs_tol, rel_tol·|value|)`.
pub fn adaptive(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Integral> {
    const MAX_INTERVALS: usize = 4000;
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let mut intervals: Vec<(f64, f64, f64, f64)> = panels(a, b, breaks)
        .into_iter()
        .map(|(lo, hi)| {
            let (v, e) = gk15(lo, hi, &mut f);
            (lo, hi, v, e)
        })
        .collect();
    let mut evaluations = 15 * intervals.len();
    loop {
        let value: f64 = intervals.iter().map(|iv| iv.2).sum();
        let error: f64 = intervals.iter().map(|iv| iv.3).sum();
        if !value.is_finite() {
            return Err(Error::Numerical(format!("non-finite integrand on [{a}, {b}]")));
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Integral { value, error, evaluations });
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::Numerical(format!(
                "adaptive quadrature on [{a}, {b}] stalled: value {value:.6e}, error {error:.3e}"
            )));
        }
        let (k, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (lo, hi, _, _) = intervals.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::Numerical(format!("interval [{lo}, {hi}] cannot be bisected further")));
        }
        let (v1, e1) = gk15(lo, mid, &mut f);
        let (v2, e2) = gk15(mid, hi, &mut f);
        evaluations += 30;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// Chebyshev interpolant of a smooth function on `[a, b]`.
#[derive(Clone, Debug)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Interpolates `f` at the `n` Chebyshev points of the first kind.
    pub fn fit(a: f64, b: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> Self {
        assert!(n >= 1);
        let pi = std::f64::consts::PI;
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let values: Vec<f64> = (0..n).map(|k| f(mid + half * (pi * (k as f64 + 0.5) / n as f64).cos())).collect();
        let coeffs = (0..n)
            .map(|j| {
                let s: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * (pi * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                    .sum();
                if j == 0 {
                    s / n as f64
                } else {
                    2.0 * s / n as f64
                }
            })
            .collect();
        Chebyshev { a, b, coeffs }
    }

    /// The derivative, as a series of one degree less.
    pub fn derivative(&self) -> Chebyshev {
        let n = self.coeffs.len();
        if n <= 1 {
            return Chebyshev { a: self.a, b: self.b, coeffs: vec![0.0] };
        }
        // c′_{k−1} = c′_{k+1} + 2k c_k, halved for k − 1 = 0
        let mut d = vec![0.0; n + 1];
        for k in (1..n).rev() {
            d[k - 1] = d[k + 1] + 2.0 * k as f64 * self.coeffs[k];
        }
        d[0] *= 0.5;
        d.truncate(n - 1);
        let scale = 2.0 / (self.b - self.a);
        Chebyshev { a: self.a, b: self.b, coeffs: d.into_iter().map(|c| c * scale).collect() }
    }

    /// Clenshaw evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let y = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let t = 2.0 * y * b1 - b2 + c;
            b2 = b1;
            b1 = t;
        }
        y * b1 - b2 + self.coeffs[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_small_rules() {
        let (x, w) = gauss_legendre(2);
        let r = 1.0 / 3f64.sqrt();
        assert!((x[0] + r).abs() < 1e-15 && (x[1] - r).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15);
        let (x, w) = gauss_legendre(3);
        assert!((x[2] - 0.6f64.sqrt()).abs() < 1e-15);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for n in [1usize, 4, 7, 16, 32, 64, 128] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for k in 0..(2 * n).min(40) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} k={k}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn kronrod_rule_is_exact_to_degree_22() {
        for k in 0..=22 {
            let (v, _) = gk15(-1.0, 1.0, &mut |x: f64| x.powi(k));
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((v - exact).abs() < 1e-14, "degree {k}");
        }
        // the embedded Gauss rule is exact to degree 13, so the error estimate vanishes
        let (_, e) = gk15(0.0, 1.0, &mut |x: f64| x.powi(13));
        assert!(e < 1e-15);
    }

    #[test]
    fn adaptive_handles_kinks_and_peaks() {
        let r = adaptive(|x| (x - 0.3).abs(), 0.0, 1.0, &[], 1e-12, 0.0).unwrap();
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-12);
        let r = adaptive(|x| (-(x / 1e-4)).exp(), 0.0, 10.0, &[], 1e-10, 0.0).unwrap();
        assert!((r.value - 1e-4 * (1.0 - (-1e5f64).exp())).abs() < 1e-14);
        let r = adaptive(|x| x.sin(), 0.0, std::f64::consts::PI, &[1.0, 2.0], 1e-12, 0.0).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn panels_respect_breakpoints() {
        assert_eq!(panels(0.0, 1.0, &[0.5, 2.0, -1.0, 0.5]), vec![(0.0, 0.5), (0.5, 1.0)]);
        assert_eq!(panels(0.0, 1.0, &[0.0, 1.0]), vec![(0.0, 1.0)]);
    }

    #[test]
    fn chebyshev_interpolates_smooth_functions() {
        let c = Chebyshev::fit(0.2, 1.7, 24, |x| (3.0 * x).sin() * x.exp());
        for k in 0..50 {
            let x = 0.2 + 1.5 * k as f64 / 49.0;
            assert!((c.eval(x) - (3.0 * x).sin() * x.exp()).abs() < 1e-13);
        }
        let one = Chebyshev::fit(-1.0, 1.0, 1, |_| 2.5);
        assert_eq!(one.eval(0.3), 2.5);
    }

    #[test]
    fn chebyshev_derivatives() {
        let c = Chebyshev::fit(0.2, 1.7, 24, |x| (3.0 * x).sin() * x.exp());
        let (d1, d2) = (c.derivative(), c.derivative().derivative());
        for k in 0..20 {
            let x = 0.25 + 1.4 * k as f64 / 19.0;
            let (s, co, e) = ((3.0 * x).sin(), (3.0 * x).cos(), x.exp());
            assert!((d1.eval(x) - e * (s + 3.0 * co)).abs() < 1e-10);
            assert!((d2.eval(x) - e * (6.0 * co - 8.0 * s)).abs() < 1e-8);
        }
        assert_eq!(Chebyshev::fit(0.0, 1.0, 1, |_| 4.0).derivative().eval(0.5), 0.0);
    }
}
