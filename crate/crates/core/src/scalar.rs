//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All algorithms are written against [`Real`], which is implemented for
//! `f32` and `f64`. Linear algebra goes through `nalgebra`, conversions
//! through `num-traits`.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the whole pipeline: `f32` or `f64`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Width in bytes of the little-endian encoding used by model files.
    const BYTES: usize;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Real")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::of(x as f64)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }

    /// Machine epsilon of the type.
    fn eps() -> Self;

    fn is_finite_value(self) -> bool;

    fn write_le(self, out: &mut Vec<u8>);

    /// Decode from exactly `Self::BYTES` little-endian bytes.
    fn read_le(bytes: &[u8]) -> Self;

    fn parse_str(s: &str) -> Option<Self>;
}

impl Real for f64 {
    const BYTES: usize = 8;

    fn eps() -> Self {
        f64::EPSILON
    }

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        let mut buf = [0u8; 8];
        buf.copy_from_slice(bytes);
        f64::from_le_bytes(buf)
    }

    fn parse_str(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

impl Real for f32 {
    const BYTES: usize = 4;

    fn eps() -> Self {
        f32::EPSILON
    }

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        let mut buf = [0u8; 4];
        buf.copy_from_slice(bytes);
        f32::from_le_bytes(buf)
    }

    fn parse_str(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}
