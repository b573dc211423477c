//! Split manifest CSV: `scene_index,sequence_id,frame,split`.

use std::io::Write;
use std::path::Path;

use dsi3d_core::dataset::{SequenceDataset, Split};
use serde::{Deserialize, Serialize};

use super::{create, finish, open};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRow {
    pub scene_index: usize,
    pub sequence_id: u32,
    pub frame: usize,
    pub split: Split,
}

pub fn write_split(path: &Path, dataset: &SequenceDataset) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "scene_index,sequence_id,frame,split").map_err(io)?;
    for (s, split) in dataset.scenes.iter().zip(&dataset.split) {
        writeln!(w, "{},{},{},{}", s.scene_index, s.sequence_id, s.frame, split.as_str()).map_err(io)?;
    }
    finish(path, w)
}

pub fn read_split(path: &Path) -> Result<Vec<SplitRow>> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut rows = Vec::new();
    for (i, row) in rdr.deserialize::<SplitRow>().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            path: path.into(),
            line: i + 2,
            message: e.to_string(),
        })?;
        if row.scene_index != i {
            return Err(Error::Parse {
                path: path.into(),
                line: i + 2,
                message: format!("scene_index {} out of order", row.scene_index),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}
