//! CAD-60 skeleton text dumps.
//!
//! One comma-separated row per frame, terminated by a line reading `END`:
//!
//! | fields | content |
//! |---|---|
//! | 1 | frame number |
//! | 11 x 14 | joints 1-11: 3x3 orientation matrix, orientation confidence, x, y, z, position confidence |
//! | 4 x 4 | joints 12-15: x, y, z, position confidence |
//!
//! Joint order matches [`JOINT_NAMES`](super::JOINT_NAMES). Orientation
//! values are read and dropped. A single trailing empty field (the native
//! files end every row with a comma) is tolerated.

use super::{Frame, Joint, JOINT_COUNT};
use crate::error::{Error, Result};

const ORIENTED_JOINTS: usize = 11;
const ORIENTATION_FIELDS: usize = 10;
const POSITION_FIELDS: usize = 4;
const POSITION_ONLY_JOINTS: usize = JOINT_COUNT - ORIENTED_JOINTS;

pub const CAD60_ROW_FIELDS: usize = 1
    + ORIENTED_JOINTS * (ORIENTATION_FIELDS + POSITION_FIELDS)
    + POSITION_ONLY_JOINTS * POSITION_FIELDS;

const SENTINEL: &str = "END";

#[derive(Clone, Debug, PartialEq)]
pub struct Cad60Recording {
    pub frames: Vec<Frame>,
    /// False when the `END` sentinel was missing.
    pub terminated: bool,
}

pub fn parse_cad60(text: &str, location: &str) -> Result<Cad60Recording> {
    let mut frames = Vec::new();
    let mut terminated = false;
    let mut row = 0usize;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == SENTINEL {
            terminated = true;
            break;
        }
        row += 1;
        let mut fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() == CAD60_ROW_FIELDS + 1 && fields.last() == Some(&"") {
            fields.pop();
        }
        if fields.len() != CAD60_ROW_FIELDS {
            return Err(Error::parse(
                format!("{location} row {row}"),
                format!("expected {CAD60_ROW_FIELDS} fields, found {}", fields.len()),
            ));
        }
        let values = fields
            .iter()
            .enumerate()
            .map(|(col, f)| {
                f.parse::<f64>().map_err(|_| {
                    Error::parse(
                        format!("{location} row {row} field {}", col + 1),
                        format!("not a number: {f:?}"),
                    )
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        frames.push(
            frame_from_row(&values)
                .map_err(|e| Error::parse(format!("{location} row {row}"), e.to_string()))?,
        );
    }
    if frames.is_empty() {
        return Err(Error::parse(location, "no frames before END"));
    }
    if !terminated {
        log::warn!("{location}: missing END sentinel, file may be truncated");
    }
    Ok(Cad60Recording { frames, terminated })
}

fn frame_from_row(values: &[f64]) -> Result<Frame> {
    let mut joints = [Joint::splat(0.0); JOINT_COUNT];
    let mut at = 1;
    for (j, joint) in joints.iter_mut().enumerate() {
        if j < ORIENTED_JOINTS {
            at += ORIENTATION_FIELDS;
        }
        let p = &values[at..at + POSITION_FIELDS];
        *joint = Joint::new(p[0], p[1], p[2], p[3])?;
        at += POSITION_FIELDS;
    }
    debug_assert_eq!(at, CAD60_ROW_FIELDS);
    Ok(Frame::new(joints))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Builds a native row with recognisable values: joint `j` sits at
    /// `(frame*100 + j, -j, 2j)` with confidence 1; orientation fields are 9s.
    pub(crate) fn native_row(frame: usize) -> String {
        let mut fields = vec![frame.to_string()];
        for j in 0..JOINT_COUNT {
            if j < ORIENTED_JOINTS {
                fields.extend(std::iter::repeat_n("9".to_string(), 9));
                fields.push("1".into());
            }
            fields.push(format!("{}", frame * 100 + j));
            fields.push(format!("{}", -(j as i64)));
            fields.push(format!("{}", 2 * j));
            fields.push("1".into());
        }
        fields.join(",") + ","
    }

    #[test]
    fn row_width() {
        assert_eq!(CAD60_ROW_FIELDS, 171);
    }

    #[test]
    fn parses_two_frames() {
        let text = format!("{}\n{}\nEND\n", native_row(1), native_row(2));
        let rec = parse_cad60(&text, "fixture").unwrap();
        assert!(rec.terminated);
        assert_eq!(rec.frames.len(), 2);
        for (f, frame) in rec.frames.iter().enumerate() {
            for (j, joint) in frame.joints.iter().enumerate() {
                assert_eq!(joint.x, ((f + 1) * 100 + j) as f64);
                assert_eq!(joint.y, -(j as f64));
                assert_eq!(joint.z, (2 * j) as f64);
                assert_eq!(joint.confidence, 1.0);
            }
        }
    }

    #[test]
    fn only_sentinel_is_an_error() {
        assert!(matches!(
            parse_cad60("END\n", "x"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn short_row_names_row() {
        let mut row = native_row(1);
        row = row.trim_end_matches(',').to_string();
        let cut = row.rfind(',').unwrap();
        row.truncate(cut);
        let err = parse_cad60(&format!("{row}\nEND\n"), "x").unwrap_err();
        match err {
            Error::Parse { location, .. } => assert_eq!(location, "x row 1"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_numeric_field() {
        let row = native_row(1).replacen("9", "nine", 1);
        assert!(matches!(
            parse_cad60(&format!("{row}\nEND"), "x"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn missing_sentinel_still_returns_frames() {
        let rec = parse_cad60(&native_row(1), "x").unwrap();
        assert!(!rec.terminated);
        assert_eq!(rec.frames.len(), 1);
    }
}
