//! Bessel functions of the first kind for integer order.
//!
//! Small arguments use the ascending power series; larger arguments use
//! Miller's downward recurrence normalised by `J₀ + 2ΣJ₂ₖ = 1`.

use super::AcousticsError;

/// Largest supported order.
pub const MAX_ORDER: u32 = 64;
/// Largest supported argument.
pub const MAX_ARGUMENT: f64 = 50.0;

// Above this the series loses more than ~1e-13 to cancellation (the term
// magnitudes sum to I_n(x)).
const SERIES_LIMIT: f64 = 8.0;

const RESCALE_THRESHOLD: f64 = 1e250;

/// `J_n(x)` for `0 ≤ n ≤ 64`, `0 ≤ x ≤ 50`.
pub fn bessel_j(n: u32, x: f64) -> Result<f64, AcousticsError> {
    check_domain(n, x)?;
    if x <= SERIES_LIMIT {
        Ok(series(n, x))
    } else {
        Ok(miller(n, x))
    }
}

/// `J_n(x)` for any integer order in the supported envelope, using
/// `J₋ₙ = (−1)ⁿ Jₙ`.
pub fn bessel_j_signed(n: i32, x: f64) -> Result<f64, AcousticsError> {
    let value = bessel_j(n.unsigned_abs(), x)?;
    if n < 0 && n % 2 != 0 {
        Ok(-value)
    } else {
        Ok(value)
    }
}

fn check_domain(n: u32, x: f64) -> Result<(), AcousticsError> {
    if n > MAX_ORDER || !(0.0..=MAX_ARGUMENT).contains(&x) {
        return Err(AcousticsError::BesselDomain { order: n as i64, argument: x });
    }
    Ok(())
}

fn series(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    let q = -half * half;
    // (x/2)^n / n!
    let mut term = 1.0;
    for i in 1..=n {
        term *= half / i as f64;
    }
    if term == 0.0 {
        return 0.0;
    }
    let mut sum = term;
    let mut m = 1u32;
    loop {
        term *= q / (m as f64 * (m + n) as f64);
        sum += term;
        // terms alternate and shrink once m exceeds x/2, so the tail is
        // bounded by the next term
        if m as f64 > half && term.abs() <= 1e-17 * sum.abs().max(1e-300) {
            break;
        }
        if term == 0.0 {
            break;
        }
        m += 1;
    }
    sum
}

fn miller(n: u32, x: f64) -> f64 {
    let top = (n as f64).max(x);
    let mut start = (top + 40.0 + 4.0 * top.sqrt()).ceil() as u32;
    if start % 2 == 1 {
        start += 1;
    }
    let two_over_x = 2.0 / x;
    let mut next = 0.0; // J_{k+1}
    let mut current = 1e-300; // J_k
    let mut norm = 0.0;
    let mut wanted = 0.0;
    for k in (1..=start).rev() {
        // J_{k-1} = (2k/x) J_k - J_{k+1}
        let previous = k as f64 * two_over_x * current - next;
        next = current;
        current = previous;
        let order = k - 1;
        if order == n {
            wanted = current;
        }
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * current;
        }
        if current.abs() > RESCALE_THRESHOLD {
            let s = 1.0 / RESCALE_THRESHOLD;
            current *= s;
            next *= s;
            norm *= s;
            wanted *= s;
        }
    }
    norm += current;
    wanted / norm
}
