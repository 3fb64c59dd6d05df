use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    MalformedCsv(String),
    #[error("unknown rubric item `{0}`")]
    UnknownItem(String),
    #[error("unknown student `{0}`")]
    UnknownStudent(String),
    #[error("duplicate cell for student `{student}`, item `{item}`")]
    DuplicateCell { student: String, item: String },
    #[error("score {raw} for student `{student}`, item `{item}` outside [0, {max_points}]")]
    OutOfRangeScore {
        student: String,
        item: String,
        raw: f64,
        max_points: f64,
    },
    #[error("invalid rubric: {0}")]
    InvalidRubric(String),
    #[error("invalid student list: {0}")]
    InvalidStudent(String),
    #[error("score matrices use different rubrics")]
    RubricMismatch,
}

#[derive(Debug, Error, PartialEq)]
pub enum IrtError {
    #[error("non-finite input to the item characteristic curve")]
    NonFiniteInput,
    #[error("degenerate score matrix: {0}")]
    DegenerateMatrix(String),
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),
    #[error("fit does not cover {0}")]
    CoverageGap(String),
    #[error("ability grid is empty")]
    EmptyGrid,
    #[error("ability grid is not sorted ascending")]
    UnsortedGrid,
}

#[derive(Debug, Error, PartialEq)]
pub enum FilterError {
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("fit does not cover {0}")]
    CoverageGap(String),
    #[error("no decision records")]
    EmptyInput,
}

impl From<IrtError> for FilterError {
    fn from(e: IrtError) -> Self {
        match e {
            IrtError::CoverageGap(what) => FilterError::CoverageGap(what),
            other => FilterError::OutOfRange(other.to_string()),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("regression needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("all x values are identical")]
    DegenerateX,
    #[error("cell ({student}, {item}) is not in the matrix")]
    UnknownCell { student: String, item: String },
    #[error("threshold grid is empty")]
    EmptyGrid,
    #[error("threshold {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("score matrices use different rubrics")]
    RubricMismatch,
    #[error(transparent)]
    Filter(#[from] FilterError),
}

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported schema `{0}`")]
    UnsupportedSchema(String),
}
