use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unsupported bit width {0}")]
    InvalidBits(u32),

    #[error("value {value} does not fit in {bits} bits")]
    ValueOutOfRange { value: i128, bits: u32 },

    #[error("zero value at index {0} cannot be aligned")]
    ZeroValue(usize),

    #[error("sequence is not strictly increasing at index {0}")]
    NotIncreasing(usize),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("pointer {pointer} at index {index} is out of range for {len} sorted values")]
    PointerOutOfRange { index: usize, pointer: usize, len: usize },

    #[error("shift-and-add overflowed {width} bits")]
    AccumulatorOverflow { width: u32 },

    #[error("shift amount {shift} must be below the word width {bits}")]
    ShiftTooLarge { shift: u32, bits: u32 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),

    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("entry ({row}, {col}) is outside a {rows}x{cols} matrix")]
    IndexOutOfRange { row: usize, col: usize, rows: usize, cols: usize },

    #[error("explicit zero stored at ({row}, {col})")]
    ExplicitZero { row: usize, col: usize },

    #[error("number of products must be positive")]
    NoProducts,

    #[error("exponent {0} is outside the representable range")]
    ExponentOverflow(i64),

    #[error("mantissa width {0} is outside 1..=32")]
    InvalidMantissaBits(u32),

    #[error("mantissa {mantissa} is not normalized to {bits} bits")]
    UnnormalizedMantissa { mantissa: u64, bits: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
