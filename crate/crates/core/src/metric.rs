//! Points, databases, metrics and the exact (non-private) distance oracle.
//!
//! Everything in here is a pure function of immutable inputs. The oracle
//! functions touch the raw database and exist for evaluation and for the
//! mechanisms' internal measurements; nothing here adds noise.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when validating symmetry and the triangle inequality of
/// distance matrices read from text.
const MATRIX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("n >= 1 required: a point set must contain at least one point")]
    Empty,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate {value} at position {position} is outside [0, 1]")]
    OutOfRange { position: usize, value: f64 },
    #[error("point sets mix coordinate points and labelled points")]
    MixedRepresentation,
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("coordinate index {index} out of range for dimension {dimension}")]
    CoordinateOutOfRange { index: usize, dimension: usize },
    #[error("point index {index} out of range for {len} points")]
    PointOutOfRange { index: usize, len: usize },
    #[error("{0}")]
    Incompatible(String),
    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = MetricError> = std::result::Result<T, E>;

/// A point of the metric space: either coordinates in the unit cube or an
/// opaque label resolved through a distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Coords(Vec<f64>),
    Label(String),
}

impl Point {
    /// Builds a coordinate point, checking every coordinate lies in `[0, 1]`.
    pub fn coords(coords: Vec<f64>) -> Result<Self> {
        for (position, &value) in coords.iter().enumerate() {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(MetricError::OutOfRange { position, value });
            }
        }
        Ok(Point::Coords(coords))
    }

    pub fn label(label: impl Into<String>) -> Self {
        Point::Label(label.into())
    }

    pub fn as_coords(&self) -> Option<&[f64]> {
        match self {
            Point::Coords(c) => Some(c),
            Point::Label(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            Point::Label(l) => Some(l),
            Point::Coords(_) => None,
        }
    }

    fn shape(&self) -> Shape {
        match self {
            Point::Coords(c) => Shape::Coords(c.len()),
            Point::Label(_) => Shape::Labels,
        }
    }
}

/// The common representation shared by all points of a set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Coords(usize),
    Labels,
}

fn validate_points(points: &[Point]) -> Result<Shape> {
    let first = points.first().ok_or(MetricError::Empty)?;
    let shape = first.shape();
    for p in points {
        match (shape, p) {
            (Shape::Coords(dim), Point::Coords(c)) => {
                if c.len() != dim {
                    return Err(MetricError::DimensionMismatch {
                        expected: dim,
                        got: c.len(),
                    });
                }
                for (position, &value) in c.iter().enumerate() {
                    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                        return Err(MetricError::OutOfRange { position, value });
                    }
                }
            }
            (Shape::Labels, Point::Label(_)) => {}
            _ => return Err(MetricError::MixedRepresentation),
        }
    }
    if shape == Shape::Coords(0) {
        return Err(MetricError::Incompatible(
            "coordinate points need dimension >= 1".into(),
        ));
    }
    Ok(shape)
}

/// The private input: `n >= 1` points sharing one representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    points: Vec<Point>,
    shape: Shape,
}

impl Database {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let shape = validate_points(&points)?;
        Ok(Self { points, shape })
    }

    /// Convenience constructor for coordinate databases.
    pub fn from_coords(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows.into_iter().map(Point::Coords).collect())
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Dimension of a coordinate database, `None` for labelled points.
    pub fn dimension(&self) -> Option<usize> {
        match self.shape {
            Shape::Coords(d) => Some(d),
            Shape::Labels => None,
        }
    }

    /// The neighbouring database with point `index` replaced.
    pub fn replaced(&self, index: usize, replacement: Point) -> Result<Self> {
        if index >= self.points.len() {
            return Err(MetricError::PointOutOfRange {
                index,
                len: self.points.len(),
            });
        }
        let mut points = self.points.clone();
        points[index] = replacement;
        Self::new(points)
    }

    fn coordinate_rows(&self, index: usize) -> Result<impl Iterator<Item = f64> + '_> {
        match self.shape {
            Shape::Coords(dimension) if index < dimension => {
                Ok(self.points.iter().map(move |p| match p {
                    Point::Coords(c) => c[index],
                    Point::Label(_) => unreachable!("validated shape"),
                }))
            }
            Shape::Coords(dimension) => Err(MetricError::CoordinateOutOfRange { index, dimension }),
            Shape::Labels => Err(MetricError::Incompatible(
                "per-coordinate queries need a coordinate database".into(),
            )),
        }
    }
}

/// An ordered list of `k >= 1` distance queries.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    queries: Vec<Point>,
    shape: Shape,
}

impl QuerySet {
    pub fn new(queries: Vec<Point>) -> Result<Self> {
        let shape = validate_points(&queries)?;
        Ok(Self { queries, shape })
    }

    pub fn from_coords(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows.into_iter().map(Point::Coords).collect())
    }

    pub fn queries(&self) -> &[Point] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn dimension(&self) -> Option<usize> {
        match self.shape {
            Shape::Coords(d) => Some(d),
            Shape::Labels => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    L1,
    L2,
    Matrix,
}

/// Pairwise distances between labelled points.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates the metric axioms. The O(m³) triangle check can be turned
    /// off for large inputs.
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>, check_triangle: bool) -> Result<Self> {
        let size = labels.len();
        if size == 0 {
            return Err(MetricError::InvalidMatrix("no labels".into()));
        }
        if rows.len() != size {
            return Err(MetricError::InvalidMatrix(format!(
                "{} labels but {} rows",
                size,
                rows.len()
            )));
        }
        let mut index = HashMap::with_capacity(size);
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(MetricError::InvalidMatrix(format!("duplicate label `{l}`")));
            }
        }
        let mut values = Vec::with_capacity(size * size);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(MetricError::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {size}",
                    row.len()
                )));
            }
            for &v in row {
                if !v.is_finite() || v < 0.0 {
                    return Err(MetricError::InvalidMatrix(format!(
                        "row {i} contains invalid distance {v}"
                    )));
                }
            }
            values.extend_from_slice(row);
        }
        let m = Self {
            labels,
            index,
            values,
        };
        let scale = m.max_entry().max(1.0);
        let tol = MATRIX_TOLERANCE * scale;
        for i in 0..size {
            if m.at(i, i) != 0.0 {
                return Err(MetricError::InvalidMatrix(format!(
                    "nonzero diagonal at {i}"
                )));
            }
            for j in 0..i {
                if (m.at(i, j) - m.at(j, i)).abs() > tol {
                    return Err(MetricError::InvalidMatrix(format!(
                        "asymmetric entries at ({i}, {j})"
                    )));
                }
            }
        }
        if check_triangle {
            for i in 0..size {
                for j in 0..size {
                    let dij = m.at(i, j);
                    for k in 0..size {
                        if dij > m.at(i, k) + m.at(k, j) + tol {
                            return Err(MetricError::InvalidMatrix(format!(
                                "triangle inequality fails: d({0},{1}) > d({0},{2}) + d({2},{1})",
                                m.labels[i], m.labels[j], m.labels[k]
                            )));
                        }
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| MetricError::UnknownLabel(label.to_string()))
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.labels.len() + j]
    }

    fn max_entry(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// A metric on the unit cube (ℓ1 or ℓ2) or over labelled points.
///
/// Distances are reported on a normalized scale with diameter at most one:
/// when the raw diameter `D₀` exceeds one every distance is divided by `D₀`,
/// and [`MetricSpec::scale`] keeps `D₀` so results can be mapped back.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    kind: MetricKind,
    dimension: Option<usize>,
    matrix: Option<Arc<DistanceMatrix>>,
    raw_diameter: f64,
}

impl MetricSpec {
    /// ℓ1 on `[0,1]^dimension`; the raw diameter is `dimension`.
    pub fn l1(dimension: usize) -> Self {
        Self {
            kind: MetricKind::L1,
            dimension: Some(dimension),
            matrix: None,
            raw_diameter: dimension as f64,
        }
    }

    /// ℓ2 on `[0,1]^dimension`; the raw diameter is `sqrt(dimension)`.
    pub fn l2(dimension: usize) -> Self {
        Self {
            kind: MetricKind::L2,
            dimension: Some(dimension),
            matrix: None,
            raw_diameter: (dimension as f64).sqrt(),
        }
    }

    pub fn matrix(matrix: DistanceMatrix) -> Self {
        let raw_diameter = matrix.max_entry();
        Self {
            kind: MetricKind::Matrix,
            dimension: None,
            matrix: Some(Arc::new(matrix)),
            raw_diameter,
        }
    }

    /// Declares the raw diameter of the data domain, e.g. a subset of the
    /// cube with ℓ1 diameter one. The caller vouches for the bound.
    pub fn with_diameter(mut self, raw_diameter: f64) -> Result<Self> {
        if !raw_diameter.is_finite() || raw_diameter <= 0.0 {
            return Err(MetricError::Incompatible(format!(
                "diameter must be positive, got {raw_diameter}"
            )));
        }
        self.raw_diameter = raw_diameter;
        Ok(self)
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn dimension(&self) -> Option<usize> {
        self.dimension
    }

    pub fn distance_matrix(&self) -> Option<&DistanceMatrix> {
        self.matrix.as_deref()
    }

    /// Divisor applied to raw distances (`D₀` when it exceeds one).
    pub fn scale(&self) -> f64 {
        self.raw_diameter.max(1.0)
    }

    /// Diameter after normalization, always `<= 1`.
    pub fn diameter(&self) -> f64 {
        self.raw_diameter / self.scale()
    }

    pub fn raw_diameter(&self) -> f64 {
        self.raw_diameter
    }

    /// Maps a normalized distance back to raw units.
    pub fn denormalize(&self, value: f64) -> f64 {
        value * self.scale()
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        match (self.kind, p) {
            (MetricKind::Matrix, Point::Label(l)) => {
                self.matrix.as_ref().expect("matrix kind").position(l)?;
                Ok(())
            }
            (MetricKind::Matrix, Point::Coords(_)) => Err(MetricError::Incompatible(
                "matrix metric expects labelled points".into(),
            )),
            (_, Point::Coords(c)) => {
                let expected = self.dimension.expect("coordinate kind");
                if c.len() == expected {
                    Ok(())
                } else {
                    Err(MetricError::DimensionMismatch {
                        expected,
                        got: c.len(),
                    })
                }
            }
            (_, Point::Label(_)) => Err(MetricError::Incompatible(
                "coordinate metric expects coordinate points".into(),
            )),
        }
    }

    /// Distance in raw units.
    pub fn raw_distance(&self, a: &Point, b: &Point) -> Result<f64> {
        match (self.kind, a, b) {
            (MetricKind::L1, Point::Coords(x), Point::Coords(y)) => {
                self.check_point(a)?;
                self.check_point(b)?;
                Ok(x.iter().zip(y).map(|(u, v)| (u - v).abs()).sum())
            }
            (MetricKind::L2, Point::Coords(x), Point::Coords(y)) => {
                self.check_point(a)?;
                self.check_point(b)?;
                Ok(x.iter()
                    .zip(y)
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    .sqrt())
            }
            (MetricKind::Matrix, Point::Label(x), Point::Label(y)) => {
                let m = self.matrix.as_ref().expect("matrix kind");
                Ok(m.at(m.position(x)?, m.position(y)?))
            }
            _ => {
                self.check_point(a)?;
                self.check_point(b)?;
                Err(MetricError::MixedRepresentation)
            }
        }
    }

    /// Distance on the normalized scale (diameter `<= 1`).
    pub fn distance(&self, a: &Point, b: &Point) -> Result<f64> {
        Ok(self.raw_distance(a, b)? / self.scale())
    }
}

/// Average normalized distance from `y` to the database points: the exact
/// answer to the distance query `y`.
pub fn avg_distance(db: &Database, y: &Point, metric: &MetricSpec) -> Result<f64> {
    Ok(avg_distance_raw(db, y, metric)? / metric.scale())
}

/// [`avg_distance`] in raw units.
pub fn avg_distance_raw(db: &Database, y: &Point, metric: &MetricSpec) -> Result<f64> {
    metric.check_point(y)?;
    let mut total = 0.0;
    for x in db.points() {
        total += metric.raw_distance(x, y)?;
    }
    Ok(total / db.len() as f64)
}

/// Per-coordinate query value `(1/n) Σ |x_i − t|` (0-based `index`).
/// Convex and 1-Lipschitz in `t`.
pub fn coord_value(db: &Database, index: usize, t: f64) -> Result<f64> {
    let n = db.len() as f64;
    Ok(db
        .coordinate_rows(index)?
        .map(|x| (x - t).abs())
        .sum::<f64>()
        / n)
}

/// Subgradient of [`coord_value`] at `t`: `(1/n) Σ sgn(t − x_i)` with
/// `sgn(0) = 0`, the midpoint of the left and right derivatives.
pub fn coord_subgradient(db: &Database, index: usize, t: f64) -> Result<f64> {
    let n = db.len() as f64;
    let total: f64 = db
        .coordinate_rows(index)?
        .map(|x| {
            if t > x {
                1.0
            } else if t < x {
                -1.0
            } else {
                0.0
            }
        })
        .sum();
    Ok(total / n)
}

/// `|f(db) − f(db')|` where `db'` replaces point `index` with `replacement`.
pub fn sensitivity_probe<F>(
    f: F,
    db: &Database,
    index: usize,
    replacement: &Point,
    metric: &MetricSpec,
) -> Result<f64>
where
    F: Fn(&Database) -> Result<f64>,
{
    metric.check_point(replacement)?;
    let neighbour = db.replaced(index, replacement.clone())?;
    Ok((f(db)? - f(&neighbour)?).abs())
}
