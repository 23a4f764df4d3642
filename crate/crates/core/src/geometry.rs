//! Point clouds, Euclidean distance matrices and point-cloud file I/O.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

/// An ordered list of 3D points, optionally labelled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    points: Vec<Point3>,
    label: Option<String>,
}

impl PointCloud {
    /// Builds a cloud, rejecting empty input and non-finite coordinates.
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::validation("point cloud must contain at least one point"));
        }
        if let Some(i) = points
            .iter()
            .position(|p| p.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::validation(format!(
                "point {i} has a non-finite coordinate: {:?}",
                points[i]
            )));
        }
        Ok(PointCloud {
            points,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    /// Largest pairwise distance between any two points.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.max(euclidean(a, b));
            }
        }
        best
    }
}

#[inline]
pub fn euclidean(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Symmetric matrix of Euclidean distances, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Wraps a full row-major matrix after checking shape, zero diagonal and symmetry.
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::validation(format!(
                "distance matrix needs {n}x{n} entries, got {}",
                entries.len()
            )));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::validation(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..i {
                let (a, b) = (entries[i * n + j], entries[j * n + i]);
                if !a.is_finite() || a < 0.0 || a != b {
                    return Err(Error::validation(format!(
                        "entries ({i},{j}) and ({j},{i}) are not a symmetric non-negative pair"
                    )));
                }
            }
        }
        Ok(DistanceMatrix { n, entries })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Largest entry, i.e. the diameter of the underlying point set.
    pub fn max_distance(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

pub fn pairwise_distances(cloud: &PointCloud) -> DistanceMatrix {
    let pts = cloud.points();
    let n = pts.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(&pts[i], &pts[j]);
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    DistanceMatrix { n, entries }
}

/// On-disk point cloud layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CloudFormat {
    /// One whitespace-separated `x y z` triple per line.
    Xyz,
    /// `x,y,z` rows with an optional header row.
    Csv,
}

impl CloudFormat {
    /// Picks a format from the file extension, defaulting to XYZ.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CloudFormat::Csv,
            _ => CloudFormat::Xyz,
        }
    }
}

impl FromStr for CloudFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xyz" => Ok(CloudFormat::Xyz),
            "csv" => Ok(CloudFormat::Csv),
            other => Err(Error::validation(format!("unknown cloud format '{other}'"))),
        }
    }
}

impl fmt::Display for CloudFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CloudFormat::Xyz => "xyz",
            CloudFormat::Csv => "csv",
        })
    }
}

pub fn load_pointcloud(path: impl AsRef<Path>, format: CloudFormat) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pointcloud(&text, format, path)
}

pub(crate) fn parse_pointcloud(text: &str, format: CloudFormat, path: &Path) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut seen_data_row = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = match format {
            CloudFormat::Xyz => line.split_whitespace().collect(),
            CloudFormat::Csv => line.split(',').map(str::trim).collect(),
        };
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse::<f64>().ok()).collect();
        match parsed {
            Some(v) if v.len() == 3 => {
                seen_data_row = true;
                points.push([v[0], v[1], v[2]]);
            }
            // CSV may carry a single non-numeric header before any data.
            None if format == CloudFormat::Csv && !seen_data_row && points.is_empty() => {
                seen_data_row = true;
            }
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: format!("expected three numeric fields, got '{line}'"),
                })
            }
        }
    }
    if points.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "file contains no points".into(),
        });
    }
    let mut cloud = PointCloud::new(points).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
        cloud.label = Some(stem.to_string());
    }
    Ok(cloud)
}

pub fn save_pointcloud(cloud: &PointCloud, path: impl AsRef<Path>, format: CloudFormat) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_pointcloud(cloud, format)).map_err(|e| Error::io(path, e))
}

pub fn format_pointcloud(cloud: &PointCloud, format: CloudFormat) -> String {
    let mut out = String::with_capacity(cloud.len() * 64);
    if let Some(label) = cloud.label() {
        if format == CloudFormat::Xyz {
            out.push_str(&format!("# {label}\n"));
        }
    }
    if format == CloudFormat::Csv {
        out.push_str("x,y,z\n");
    }
    let sep = match format {
        CloudFormat::Xyz => " ",
        CloudFormat::Csv => ",",
    };
    for p in cloud.points() {
        // `{:?}` prints the shortest representation that round-trips exactly.
        out.push_str(&format!("{:?}{sep}{:?}{sep}{:?}\n", p[0], p[1], p[2]));
    }
    out
}
