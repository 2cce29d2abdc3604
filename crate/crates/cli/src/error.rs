//! CLI error with a machine-parseable category, printed as
//! `error[<category>]: <message>` on exit.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Args,
    Config,
    Io,
    Data,
    Solver,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Args => "args",
            Category::Config => "config",
            Category::Io => "io",
            Category::Data => "data",
            Category::Solver => "solver",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.category.as_str(), self.message)
    }
}

impl CliError {
    pub fn new(category: Category, message: impl Into<String>) -> Self {
        CliError {
            category,
            message: message.into(),
        }
    }

    pub fn args(message: impl Into<String>) -> Self {
        CliError::new(Category::Args, message)
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError::new(Category::Config, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError::new(Category::Io, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError::new(Category::Data, message)
    }
}

impl From<oslalm::Error> for CliError {
    fn from(e: oslalm::Error) -> Self {
        use oslalm::Error as E;
        let category = match &e {
            E::Io { .. } => Category::Io,
            E::MalformedFile { .. } => Category::Data,
            E::InvalidParameter(_)
            | E::InvalidGeometry(_)
            | E::ConfigConflict(_)
            | E::TooManySubsets { .. } => Category::Config,
            E::DimensionMismatch { .. }
            | E::NonFinite(_)
            | E::InvalidSparseStructure(_)
            | E::NegativeDiagonal
            | E::SingularDiagonal { .. }
            | E::EmptyRoi
            | E::TooFewRestarts
            | E::InfeasibleReference
            | E::StepSizeCondition { .. }
            | E::DegenerateSecant => Category::Data,
            E::PowerIterationNoConvergence { .. } => Category::Solver,
        };
        CliError::new(category, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
