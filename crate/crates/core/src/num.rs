// f64 helpers that `core` does not provide without std.

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

/// Round half away from zero to one decimal place.
pub fn round1(x: f64) -> f64 {
    libm::round(x * 10.0) / 10.0
}

pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}
