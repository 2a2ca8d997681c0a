// Float helpers that work with and without `std`.

pub(crate) fn sin_cos(x: f64) -> (f64, f64) {
    num_traits::Float::sin_cos(x)
}

pub(crate) fn sqrt(x: f64) -> f64 {
    num_traits::Float::sqrt(x)
}

pub(crate) fn floor(x: f64) -> f64 {
    num_traits::Float::floor(x)
}

pub(crate) fn ceil(x: f64) -> f64 {
    num_traits::Float::ceil(x)
}

pub(crate) fn round(x: f64) -> f64 {
    num_traits::Float::round(x)
}
