use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Operation needs a square matrix.
    NotSquare { rows: usize, cols: usize },
    DimensionMismatch { expected: usize, found: usize },
    /// The tensor-factor dimensions do not multiply to the matrix side, or a
    /// factor index is out of range.
    BadFactorization,
    NotHermitian { defect: f64 },
    NotUnitary { defect: f64 },
    InvalidDensityMatrix(&'static str),
    /// `2s` must be a positive integer.
    InvalidSpin,
    /// Iteration counts start at one.
    ZeroIterations,
    /// A rotation angle component exceeds π in magnitude.
    AngleOutOfRange { value: f64 },
    /// Dense Pauli-string bases are limited to two qubits.
    DenseBasisScope { qubits: usize },
    /// The dense generalized interaction is limited to three basis operators.
    CombinatorialBlowup { operators: usize },
    TupleLength { expected: usize, found: usize },
    InvalidIndex { index: usize, len: usize },
    /// The compiled gate sequence did not reproduce its target.
    CompilationInvalid { residual: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotSquare { rows, cols } => write!(f, "matrix is {rows}x{cols}, expected square"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::BadFactorization => f.write_str("bad factorization"),
            Error::NotHermitian { defect } => write!(f, "matrix is not Hermitian (defect {defect:e})"),
            Error::NotUnitary { defect } => write!(f, "matrix is not unitary (defect {defect:e})"),
            Error::InvalidDensityMatrix(why) => write!(f, "invalid density matrix: {why}"),
            Error::InvalidSpin => f.write_str("spin must be a positive multiple of 1/2"),
            Error::ZeroIterations => f.write_str("N must be positive"),
            Error::AngleOutOfRange { value } => {
                write!(f, "rotation component {value} exceeds pi in magnitude")
            }
            Error::DenseBasisScope { qubits } => {
                write!(f, "dense basis beyond scope: n = {qubits} (supported n <= 2)")
            }
            Error::CombinatorialBlowup { operators } => write!(
                f,
                "combinatorial blowup: out of scope ({operators}! terms, at most 3 operators supported)"
            ),
            Error::TupleLength { expected, found } => {
                write!(f, "index tuple has length {found}, expected {expected}")
            }
            Error::InvalidIndex { index, len } => write!(f, "index {index} out of range for {len}"),
            Error::CompilationInvalid { residual } => {
                write!(f, "compilation invalid (residual {residual:e})")
            }
        }
    }
}

impl core::error::Error for Error {}
