use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// A binary floating-point format with round-to-nearest-even.
///
/// `mantissa_bits` counts the implicit leading bit. Overflow saturates to
/// `±max_finite`; underflow goes through the format's subnormal range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FpFormat {
    pub mantissa_bits: u32,
    pub exponent_bits: u32,
}

impl FpFormat {
    pub const BINARY64: FpFormat = FpFormat { mantissa_bits: 53, exponent_bits: 11 };
    pub const BINARY32: FpFormat = FpFormat { mantissa_bits: 24, exponent_bits: 8 };
    pub const BINARY16: FpFormat = FpFormat { mantissa_bits: 11, exponent_bits: 5 };

    pub fn name(&self) -> String {
        match *self {
            Self::BINARY64 => "binary64".into(),
            Self::BINARY32 => "binary32".into(),
            Self::BINARY16 => "binary16".into(),
            FpFormat { mantissa_bits, exponent_bits } => format!("p{mantissa_bits}e{exponent_bits}"),
        }
    }

    pub fn is_binary64(&self) -> bool {
        *self == Self::BINARY64
    }

    fn emax(&self) -> i32 {
        (1 << (self.exponent_bits - 1)) - 1
    }

    fn emin(&self) -> i32 {
        1 - self.emax()
    }

    pub fn max_finite(&self) -> f64 {
        let p = self.mantissa_bits as i32;
        (2.0 - pow2(1 - p)) * pow2(self.emax())
    }

    pub fn min_positive_normal(&self) -> f64 {
        pow2(self.emin())
    }

    /// Unit roundoff `2⁻ᵖ`.
    pub fn unit_roundoff(&self) -> f64 {
        pow2(-(self.mantissa_bits as i32))
    }

    /// Rounds `x` to the nearest value representable in this format.
    pub fn round(&self, x: f64) -> f64 {
        if self.mantissa_bits >= 53 && self.exponent_bits >= 11 {
            return x;
        }
        if x == 0.0 || x.is_nan() {
            return x;
        }
        let max = self.max_finite();
        if x.is_infinite() {
            return max.copysign(x);
        }
        let biased = ((x.to_bits() >> 52) & 0x7ff) as i32;
        let exp = if biased == 0 { -1023 } else { biased - 1023 };
        let e = exp.max(self.emin());
        let quantum = e - (self.mantissa_bits as i32 - 1);
        let y = (x * pow2(-quantum)).round_ties_even() * pow2(quantum);
        if y.abs() > max {
            max.copysign(x)
        } else {
            y
        }
    }

    pub fn round_slice(&self, xs: &mut [f64]) {
        if self.is_binary64() {
            return;
        }
        for x in xs {
            *x = self.round(*x);
        }
    }
}

/// Exact power of two for exponents in the binary64 normal range.
fn pow2(e: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Rounds a scalar or each entry of a vector to `f`.
pub fn round_to(x: f64, f: FpFormat) -> f64 {
    f.round(x)
}

pub fn round_vec(x: &[f64], f: FpFormat) -> Vec<f64> {
    x.iter().map(|v| f.round(*v)).collect()
}

impl Default for FpFormat {
    fn default() -> Self {
        Self::BINARY64
    }
}

impl fmt::Display for FpFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for FpFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "binary64" | "fp64" | "f64" | "double" => Ok(Self::BINARY64),
            "binary32" | "fp32" | "f32" | "single" => Ok(Self::BINARY32),
            "binary16" | "fp16" | "f16" | "half" => Ok(Self::BINARY16),
            other => Err(Error::InvalidInput(format!("unknown floating-point format `{other}`"))),
        }
    }
}
