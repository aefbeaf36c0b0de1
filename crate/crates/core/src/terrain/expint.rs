//! Exponential integrals for positive real arguments.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1e-16;
const MAX_ITER: usize = 200;

/// `E1(x) = integral from x to infinity of exp(-t)/t dt`, for `x > 0`.
///
/// Power series below 1, modified Lentz continued fraction above. Returns NaN
/// for `x <= 0` or NaN input.
pub fn e1(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x <= 1.0 {
        let mut sum = -EULER_GAMMA - x.ln();
        let mut term = 1.0;
        for k in 1..MAX_ITER {
            let kf = k as f64;
            term *= -x / kf;
            let delta = -term / kf;
            sum += delta;
            if delta.abs() < sum.abs() * EPS {
                break;
            }
        }
        sum
    } else {
        let tiny = f64::MIN_POSITIVE / EPS;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let delta = c * d;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// `Ei(-x) = -E1(x)` for `x > 0`.
pub fn ei_neg(x: f64) -> f64 {
    -e1(x)
}
