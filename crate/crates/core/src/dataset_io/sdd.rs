use std::io::BufRead;

use super::{AnnotationRecord, ClassLabel};
use crate::error::{Error, Result};

const FIELDS: usize = 10;

/// Streaming reader over SDD `annotations.txt` rows. Holds one line in
/// memory at a time. Blank lines are skipped.
pub struct SddReader<R> {
    reader: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> SddReader<R> {
    pub fn new(reader: R) -> Self {
        SddReader {
            reader,
            line: 0,
            buf: String::new(),
        }
    }
}

impl<R: BufRead> Iterator for SddReader<R> {
    type Item = Result<AnnotationRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            self.line += 1;
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(Error::parse(self.line, e.to_string()))),
            }
            if self.buf.trim().is_empty() {
                continue;
            }
            return Some(parse_row(&self.buf, self.line));
        }
    }
}

pub fn parse_sdd_annotations<R: BufRead>(reader: R) -> Result<Vec<AnnotationRecord>> {
    SddReader::new(reader).collect()
}

pub fn parse_sdd_str(text: &str) -> Result<Vec<AnnotationRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_row(l, i + 1))
        .collect()
}

fn parse_row(row: &str, line: usize) -> Result<AnnotationRecord> {
    let fields: Vec<&str> = row.split_whitespace().collect();
    if fields.len() != FIELDS {
        return Err(Error::parse(
            line,
            format!("expected {FIELDS} fields, found {}", fields.len()),
        ));
    }
    let int = |i: usize, name: &str| -> Result<i64> {
        fields[i]
            .parse::<i64>()
            .map_err(|_| Error::parse(line, format!("{name}: not an integer: {:?}", fields[i])))
    };
    let flag = |i: usize, name: &str| -> Result<bool> {
        match fields[i] {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(Error::parse(line, format!("{name}: expected 0 or 1, found {other:?}"))),
        }
    };

    let track_id = int(0, "track_id")?;
    let bbox = [int(1, "xmin")?, int(2, "ymin")?, int(3, "xmax")?, int(4, "ymax")?];
    let frame = int(5, "frame")?;
    if track_id < 0 || frame < 0 {
        return Err(Error::parse(line, "track_id and frame must be non-negative"));
    }
    let raw_label = fields[9];
    let label = raw_label
        .strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::parse(line, format!("label must be double-quoted: {raw_label}")))?;
    let class_label =
        ClassLabel::from_sdd(label).ok_or_else(|| Error::parse(line, format!("unknown label {label:?}")))?;

    Ok(AnnotationRecord {
        track_id,
        frame,
        bbox,
        lost: flag(6, "lost")?,
        occluded: flag(7, "occluded")?,
        generated: flag(8, "generated")?,
        class_label,
    })
}
