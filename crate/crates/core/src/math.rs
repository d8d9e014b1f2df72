//! f64 math routed through `std` or `libm` depending on the build.

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("bgsindy-core needs either the `std` or the `libm` feature");

#[cfg(feature = "std")]
mod imp {
    pub fn abs(x: f64) -> f64 {
        x.abs()
    }
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    pub fn exp(x: f64) -> f64 {
        x.exp()
    }
    pub fn ln(x: f64) -> f64 {
        x.ln()
    }
    pub fn sin(x: f64) -> f64 {
        x.sin()
    }
    pub fn cos(x: f64) -> f64 {
        x.cos()
    }
    pub fn round(x: f64) -> f64 {
        x.round()
    }
    pub fn floor(x: f64) -> f64 {
        x.floor()
    }
    pub fn fract(x: f64) -> f64 {
        x.fract()
    }
}

#[cfg(all(not(feature = "std"), feature = "libm"))]
mod imp {
    pub fn abs(x: f64) -> f64 {
        libm::fabs(x)
    }
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    pub fn exp(x: f64) -> f64 {
        libm::exp(x)
    }
    pub fn ln(x: f64) -> f64 {
        libm::log(x)
    }
    pub fn sin(x: f64) -> f64 {
        libm::sin(x)
    }
    pub fn cos(x: f64) -> f64 {
        libm::cos(x)
    }
    pub fn round(x: f64) -> f64 {
        libm::round(x)
    }
    pub fn floor(x: f64) -> f64 {
        libm::floor(x)
    }
    pub fn fract(x: f64) -> f64 {
        x - libm::trunc(x)
    }
}

pub(crate) use imp::{abs, cos, exp, floor, fract, ln, round, sin, sqrt};

/// Integer power by binary exponentiation. Same rounding order regardless of
/// the enabled math backend, so feature matrices are bit-identical across
/// `std` and `libm` builds.
pub(crate) fn powi(x: f64, mut n: u32) -> f64 {
    let mut base = x;
    let mut acc = 1.0;
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        n >>= 1;
        if n > 0 {
            base *= base;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powi_matches_repeated_multiplication() {
        assert_eq!(powi(3.0, 0), 1.0);
        assert_eq!(powi(3.0, 1), 3.0);
        assert_eq!(powi(2.0, 10), 1024.0);
        assert_eq!(powi(-2.0, 3), -8.0);
    }
}
