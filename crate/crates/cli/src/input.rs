//! Reading point sets from CSV and Newick files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lensdepth::{parse_newick, MetricSpace, Point, StiefelMode};
use serde::Serialize;

#[derive(Debug)]
pub struct InputError {
    pub path: PathBuf,
    pub line: Option<u64>,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{l}: {}", self.path.display(), self.message),
            None => write!(f, "{}: {}", self.path.display(), self.message),
        }
    }
}

impl std::error::Error for InputError {}

fn input_error(path: &Path, line: Option<u64>, message: impl Into<String>) -> InputError {
    InputError {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Euclidean,
    Sphere,
    StiefelChordal,
    StiefelProcrustes,
    Bhv,
}

/// Frame shape given as `RxC`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> Result<Shape, String> {
        let (r, c) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("shape `{s}` is not RxC"))?;
        let rows = r.trim().parse().map_err(|_| format!("bad row count in `{s}`"))?;
        let cols = c.trim().parse().map_err(|_| format!("bad column count in `{s}`"))?;
        if rows == 0 || cols == 0 || cols > rows {
            return Err(format!("shape `{s}` needs 0 < cols <= rows"));
        }
        Ok(Shape { rows, cols })
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

/// Reads point files of one metric space; tree files share the leaf
/// universe of the first file read.
#[derive(Debug)]
pub struct Loader {
    metric: Metric,
    shape: Shape,
    universe: Option<Vec<String>>,
    space: Option<MetricSpace>,
}

#[derive(Debug, Clone)]
pub struct PointFile {
    pub points: Vec<Point>,
    /// Source line of each point.
    pub lines: Vec<u64>,
}

impl Loader {
    pub fn new(metric: Metric, shape: Shape) -> Loader {
        Loader {
            metric,
            shape,
            universe: None,
            space: None,
        }
    }

    /// The space of the files read so far.
    pub fn space(&self) -> Option<MetricSpace> {
        self.space
    }

    pub fn load(&mut self, path: &Path) -> Result<PointFile, InputError> {
        let file = match self.metric {
            Metric::Bhv => self.load_trees(path)?,
            _ => self.load_csv(path)?,
        };
        if file.points.is_empty() {
            return Err(input_error(path, None, "no points"));
        }
        Ok(file)
    }

    fn settle(&mut self, path: &Path, space: MetricSpace) -> Result<MetricSpace, InputError> {
        match self.space {
            Some(s) if s != space => Err(input_error(path, None, format!("points live in {space}, expected {s}"))),
            _ => {
                self.space = Some(space);
                Ok(space)
            }
        }
    }

    fn load_csv(&mut self, path: &Path) -> Result<PointFile, InputError> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| input_error(path, None, e.to_string()))?;
        let width = reader
            .headers()
            .map_err(|e| input_error(path, e.position().map(|p| p.line()), e.to_string()))?
            .len();
        let space = match self.metric {
            Metric::Euclidean => MetricSpace::Euclidean { dim: width },
            Metric::Sphere => MetricSpace::Sphere { dim: width },
            Metric::StiefelChordal | Metric::StiefelProcrustes => {
                if width != self.shape.rows * self.shape.cols {
                    return Err(input_error(
                        path,
                        Some(1),
                        format!("{width} columns do not flatten a {} frame", self.shape),
                    ));
                }
                MetricSpace::Stiefel {
                    rows: self.shape.rows,
                    cols: self.shape.cols,
                    mode: if self.metric == Metric::StiefelChordal {
                        StiefelMode::Chordal
                    } else {
                        StiefelMode::Procrustes
                    },
                }
            }
            Metric::Bhv => unreachable!("trees are read from Newick"),
        };
        let space = self.settle(path, space)?;
        let mut points = Vec::new();
        let mut lines = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| input_error(path, e.position().map(|p| p.line()), e.to_string()))?;
            let line = record.position().map(|p| p.line());
            let coords = record
                .iter()
                .map(|field| {
                    field
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| input_error(path, line, format!("`{field}` is not a finite number")))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            let p = space
                .point_from_coords(coords)
                .map_err(|e| input_error(path, line, e.to_string()))?;
            points.push(p);
            lines.push(line.unwrap_or(0));
        }
        Ok(PointFile { points, lines })
    }

    fn load_trees(&mut self, path: &Path) -> Result<PointFile, InputError> {
        let text = fs::read_to_string(path).map_err(|e| input_error(path, None, e.to_string()))?;
        let mut points = Vec::new();
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = i as u64 + 1;
            let tree = parse_newick(line, self.universe.as_deref())
                .map_err(|e| input_error(path, Some(lineno), format!("column {}: {e}", e.offset + 1)))?;
            if self.universe.is_none() {
                self.universe = Some(tree.labels().to_vec());
            }
            points.push(Point::tree(tree));
            lines.push(lineno);
        }
        if let Some(u) = &self.universe {
            self.settle(path, MetricSpace::Bhv { leaves: u.len() })?;
        }
        Ok(PointFile { points, lines })
    }
}

/// Coordinates of a point for CSV output (empty for trees).
pub fn coords(p: &Point) -> Vec<f64> {
    match p {
        Point::RealVector(c) | Point::UnitVector(c) => c.clone(),
        Point::Frame(f) => f.data().to_vec(),
        Point::Tree(_) => Vec::new(),
    }
}
