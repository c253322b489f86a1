//! Cosine integrals.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
// Below this argument the power series of Cin converges without harmful
// cancellation; above it the continued fraction for E₁(ix) is used.
const SERIES_LIMIT: f64 = 4.0;

/// `Cin(x) = ∫₀ˣ (1 − cos t)/t dt`, an entire function with `Cin(0) = 0`.
pub fn cin(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        cin_series(x)
    } else {
        EULER_GAMMA + x.ln() - ci_continued_fraction(x)
    }
}

/// `Ci(x) = γ + ln x − Cin(x)` for `x > 0`.
pub fn ci(x: f64) -> f64 {
    assert!(x > 0.0, "Ci is defined for positive arguments");
    if x <= SERIES_LIMIT {
        EULER_GAMMA + x.ln() - cin_series(x)
    } else {
        ci_continued_fraction(x)
    }
}

fn cin_series(x: f64) -> f64 {
    // Σ_{k≥1} (−1)^{k+1} x^{2k} / (2k (2k)!)
    let x2 = x * x;
    let mut term = 1.0; // (−1)^{k+1} x^{2k} / (2k)!
    let mut sum = 0.0;
    for k in 1..60 {
        let kk = 2.0 * k as f64;
        term *= x2 / (kk * (kk - 1.0));
        if k > 1 {
            term = -term;
        }
        let add = term / kk;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

// Ci(x) = −Re E₁(ix), with E₁ evaluated by the modified Lentz algorithm on
// its continued fraction.
fn ci_continued_fraction(x: f64) -> f64 {
    use num_complex::Complex64;
    const TINY: f64 = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 1..1000 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = (d * a + b).inv();
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
            break;
        }
    }
    let (s, co) = x.sin_cos();
    -(Complex64::new(co, -s) * h).re
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from a 30-digit evaluation.
    const CI: [(f64, f64, f64); 12] = [
        (1e-8, -17.843465079050832637, 2.500000000000178674e-17),
        (1e-3, -6.3305398640805937748, 2.4999998958333356481e-7),
        (0.5, -0.17778407880661290134, 0.061852563148200452525),
        (1.0, 0.33740392290096813466, 0.23981174200056472594),
        (2.0, 0.4229808287748649957, 0.84738201668661317433),
        (3.9, -0.12349934920781514267, 2.0616915672449487467),
        (4.1, -0.15616539182812110957, 2.14436803043991609),
        (10.0, -0.045456433004455372635, 2.9252571909000339173),
        (37.5, -0.0059613240546216416121, 4.2075179219325196334),
        (100.0, -0.0051488251426104921444, 5.1875346760322347208),
        (1e4, -0.000030551916724485212665, 9.7875865887944400819),
        (1e6, -3.4999443892272049264e-7, 14.392726572860245887),
    ];

    #[test]
    fn ci_matches_reference() {
        for (x, want, _) in CI {
            let got = ci(x);
            assert!(((got - want) / want).abs() < 1e-12, "Ci({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn cin_matches_reference() {
        for (x, _, want) in CI {
            let got = cin(x);
            assert!(((got - want) / want).abs() < 1e-12, "Cin({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn branches_agree_at_the_switch() {
        let x = SERIES_LIMIT;
        let series = cin_series(x);
        let cf = EULER_GAMMA + x.ln() - ci_continued_fraction(x);
        assert!((series - cf).abs() < 1e-14);
    }
}
