use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} must be strictly positive")]
    NonPositive(&'static str),
    #[error("{0} must be nonnegative")]
    Negative(&'static str),
    #[error("{0} is not finite")]
    NotFinite(&'static str),
    #[error("inconsistent field: {0}")]
    InconsistentField(String),
    #[error("config: {0}")]
    Config(String),
    #[error("roots are degenerate (margin {margin:.3e})")]
    DegenerateRoots { margin: f64 },
    #[error("gamma^2 is too close to a squared root (|gamma^2 - s^2| = {gap:.3e})")]
    GammaResonance { gap: f64 },
    #[error("imaginary residue {imag:.3e} on real quantity {context}")]
    ImaginaryResidue { context: &'static str, imag: f64 },
    #[error("C1*D1 + C2*D2 vanished at t = {t}")]
    DenominatorVanished { t: f64 },
    #[error("no asymptotic transport limit: slowest roots are not a conjugate or real pair")]
    NoAsymptoticLimit,
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("negative variance {value:.3e} in {entry} at t = {t}")]
    NegativeVariance { entry: &'static str, value: f64, t: f64 },
    #[error("quantity requires the axial case m_x = m_y")]
    NotAxial,
    #[error("cross-check failed: {0}")]
    CrossCheckFailure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Validation-type failures as opposed to numerical ones.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NonPositive(_)
                | Error::Negative(_)
                | Error::NotFinite(_)
                | Error::InconsistentField(_)
                | Error::Config(_)
                | Error::NotAxial
                | Error::InvalidArgument(_)
        )
    }

    pub fn is_consistency(&self) -> bool {
        matches!(self, Error::CrossCheckFailure(_))
    }
}
