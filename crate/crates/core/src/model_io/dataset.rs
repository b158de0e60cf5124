use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{NifError, Result};

/// Sidecar metadata for image datasets, stored next to the CSV as
/// `<file>.meta.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageMeta {
    /// (height, width, channels); CSV pixels are flattened row-major in this order.
    pub image_shape: (usize, usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub feature_names: Vec<String>,
    pub image_shape: Option<(usize, usize, usize)>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<usize>) -> Result<Self> {
        let names = (0..features.ncols()).map(|i| format!("x{i}")).collect();
        Self::with_names(features, labels, names)
    }

    pub fn with_names(
        features: Array2<f64>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(NifError::InvalidDataset("dataset has no samples".into()));
        }
        if labels.len() != features.nrows() {
            return Err(NifError::InvalidDataset(format!(
                "{} labels for {} samples",
                labels.len(),
                features.nrows()
            )));
        }
        if feature_names.len() != features.ncols() {
            return Err(NifError::InvalidDataset(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.ncols()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(NifError::NonFinite("dataset features"));
        }
        Ok(Dataset {
            features,
            labels,
            feature_names,
            image_shape: None,
        })
    }

    pub fn with_image_shape(mut self, shape: (usize, usize, usize)) -> Result<Self> {
        if shape.0 * shape.1 * shape.2 != self.features.ncols() {
            return Err(NifError::InvalidDataset(format!(
                "image shape {shape:?} does not match {} feature columns",
                self.features.ncols()
            )));
        }
        self.image_shape = Some(shape);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    /// Checks labels against a class count.
    pub fn check_labels(&self, class_count: usize) -> Result<()> {
        match self.labels.iter().position(|&l| l >= class_count) {
            Some(i) => Err(NifError::InvalidDataset(format!(
                "sample {i}: label {} outside [0, {class_count})",
                self.labels[i]
            ))),
            None => Ok(()),
        }
    }

    /// Rows selected by index, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.len()) {
            return Err(NifError::IndexOutOfRange(format!("row {bad}")));
        }
        let features = self.features.select(ndarray::Axis(0), rows);
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        let mut out = Dataset::with_names(features, labels, self.feature_names.clone())?;
        out.image_shape = self.image_shape;
        Ok(out)
    }

    /// Serializes as CSV with a trailing `label` column.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.feature_names.join(","));
        out.push_str(",label\n");
        for (row, label) in self.features.outer_iter().zip(&self.labels) {
            for v in row {
                out.push_str(&v.to_string());
                out.push(',');
            }
            out.push_str(&label.to_string());
            out.push('\n');
        }
        out
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Loads a CSV dataset with a header row and a `label` column. If
/// `<path>.meta.json` exists it supplies the image shape.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => NifError::io(path, io),
            other => NifError::Parse(format!("{}: {other:?}", path.display())),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| NifError::Parse(format!("{}: {e}", path.display())))?
        .clone();
    let label_col = headers.iter().position(|h| h == "label").ok_or_else(|| {
        NifError::InvalidDataset(format!("{}: no `label` column", path.display()))
    })?;
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_col)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut flat = Vec::new();
    let mut labels = Vec::new();
    for (row_index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| NifError::Parse(format!("{}: {e}", path.display())))?;
        let line = row_index + 2;
        for (col, field) in record.iter().enumerate() {
            if field.is_empty() {
                return Err(NifError::InvalidDataset(format!(
                    "{}:{line}: missing value in column `{}`",
                    path.display(),
                    &headers[col]
                )));
            }
            if col == label_col {
                let label = field.parse::<usize>().map_err(|_| {
                    NifError::InvalidDataset(format!(
                        "{}:{line}: label `{field}` is not a class index",
                        path.display()
                    ))
                })?;
                labels.push(label);
            } else {
                let v = field.parse::<f64>().map_err(|_| {
                    NifError::InvalidDataset(format!(
                        "{}:{line}: `{field}` is not numeric",
                        path.display()
                    ))
                })?;
                flat.push(v);
            }
        }
    }
    let rows = labels.len();
    let features = Array2::from_shape_vec((rows, names.len()), flat)
        .map_err(|e| NifError::InvalidDataset(e.to_string()))?;
    let dataset = Dataset::with_names(features, labels, names)?;

    let meta_path = sidecar_path(path);
    if meta_path.exists() {
        let text = std::fs::read_to_string(&meta_path).map_err(|e| NifError::io(&meta_path, e))?;
        let meta: ImageMeta = serde_json::from_str(&text)
            .map_err(|e| NifError::Parse(format!("{}: {e}", meta_path.display())))?;
        dataset.with_image_shape(meta.image_shape)
    } else {
        Ok(dataset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn loads_csv_with_label_column_anywhere() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "a,label,b\n1.5,0,2\n-1,2,3e-1\n").unwrap();
        let d = load_dataset(&path).unwrap();
        assert_eq!(d.feature_names, vec!["a", "b"]);
        assert_eq!(d.labels, vec![0, 2]);
        assert_eq!(d.features[[1, 1]], 0.3);
        assert!(d.image_shape.is_none());
        assert!(d.check_labels(3).is_ok());
        assert!(d.check_labels(2).is_err());
    }

    #[test]
    fn rejects_missing_values_and_missing_label() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "a,label\n,0\n").unwrap();
        assert!(matches!(
            load_dataset(&path),
            Err(NifError::InvalidDataset(_))
        ));
        std::fs::write(&path, "a,b\n1,0\n").unwrap();
        assert!(matches!(
            load_dataset(&path),
            Err(NifError::InvalidDataset(_))
        ));
    }

    #[test]
    fn reads_image_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "p0,p1,p2,p3,label").unwrap();
        writeln!(f, "0,1,2,3,1").unwrap();
        std::fs::write(
            dir.path().join("img.csv.meta.json"),
            r#"{"image_shape":[2,2,1]}"#,
        )
        .unwrap();
        let d = load_dataset(&path).unwrap();
        assert_eq!(d.image_shape, Some((2, 2, 1)));
    }

    #[test]
    fn csv_round_trip() {
        let d = Dataset::new(ndarray::array![[0.25, -1.0], [3.0, 1e-7]], vec![1, 0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, d.to_csv()).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), d);
    }
}
