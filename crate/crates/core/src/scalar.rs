//! Weight scalar abstraction.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar type usable as a vector weight: f32 or f64.
///
/// `Display` must produce a decimal form that parses back to the identical
/// bit pattern (true for the standard float formatting), so serialized
/// vectors round-trip exactly.
pub trait Weight:
    Float + FromPrimitive + ToPrimitive + FromStr + Display + Debug + Copy + Send + Sync + 'static
{
}

impl<T> Weight for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + FromStr
        + Display
        + Debug
        + Copy
        + Send
        + Sync
        + 'static
{
}
