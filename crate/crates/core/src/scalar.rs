/// Scalar type for the core math: `f32` or `f64`.
pub trait Scalar:
    nalgebra::RealField + num_traits::FromPrimitive + num_traits::ToPrimitive + Copy
{
    /// Shorthand for lossy conversion from `f64` constants.
    fn from_f64c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant not representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
