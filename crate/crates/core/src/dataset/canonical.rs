//! Plain-text interchange format for sequences from any source.
//!
//! ```text
//! frames=<n> label=<label> source=<source id>
//! <60 comma-separated floats>      x n, joint-major: x,y,z,conf per joint
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! reading a written file reproduces the sequence bit for bit.

use std::fmt::Write as _;

use super::{Frame, Joint, SkeletonSequence, ATTRIBUTE_COUNT, JOINT_COUNT};
use crate::error::{Error, Result};

pub const CANONICAL_FIELDS_PER_FRAME: usize = JOINT_COUNT * ATTRIBUTE_COUNT;

const LABEL_KEY: &str = " label=";
const SOURCE_KEY: &str = " source=";

pub fn write_canonical(seq: &SkeletonSequence) -> Result<String> {
    if seq.label.contains(SOURCE_KEY) || seq.label.contains('\n') || seq.source_id.contains('\n') {
        return Err(Error::Label(format!(
            "label {:?} / source {:?} cannot be encoded in a canonical header",
            seq.label, seq.source_id
        )));
    }
    let mut out = format!(
        "frames={} label={} source={}\n",
        seq.len(),
        seq.label,
        seq.source_id
    );
    for frame in seq.frames() {
        let mut first = true;
        for joint in &frame.joints {
            for v in joint.attributes() {
                if !first {
                    out.push(',');
                }
                first = false;
                write!(out, "{v}").expect("write to String");
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn is_canonical(text: &str) -> bool {
    text.trim_start().starts_with("frames=")
}

pub fn read_canonical(text: &str, location: &str) -> Result<SkeletonSequence> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(location, "empty canonical file"))?;
    let (count, label, source) = parse_header(header).ok_or_else(|| {
        Error::parse(
            format!("{location} header"),
            format!("malformed header {header:?}"),
        )
    })?;

    let mut frames = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let row = i + 1;
        if row > count {
            return Err(Error::parse(
                location,
                format!("header declares {count} frames but more lines follow"),
            ));
        }
        let values = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| {
                    Error::parse(
                        format!("{location} frame {row}"),
                        format!("not a number: {f:?}"),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != CANONICAL_FIELDS_PER_FRAME {
            return Err(Error::parse(
                format!("{location} frame {row}"),
                format!(
                    "expected {CANONICAL_FIELDS_PER_FRAME} fields, found {}",
                    values.len()
                ),
            ));
        }
        let mut joints = [Joint::splat(0.0); JOINT_COUNT];
        for (j, joint) in joints.iter_mut().enumerate() {
            let a = &values[j * ATTRIBUTE_COUNT..(j + 1) * ATTRIBUTE_COUNT];
            *joint = Joint::new(a[0], a[1], a[2], a[3])
                .map_err(|e| Error::parse(format!("{location} frame {row}"), e.to_string()))?;
        }
        frames.push(Frame::new(joints));
    }
    if frames.len() != count {
        return Err(Error::parse(
            location,
            format!("header declares {count} frames, found {}", frames.len()),
        ));
    }
    SkeletonSequence::new(frames, label, source)
}

fn parse_header(header: &str) -> Option<(usize, String, String)> {
    let rest = header.trim_end().strip_prefix("frames=")?;
    let label_at = rest.find(LABEL_KEY)?;
    let count = rest[..label_at].parse().ok()?;
    let rest = &rest[label_at + LABEL_KEY.len()..];
    let source_at = rest.find(SOURCE_KEY)?;
    Some((
        count,
        rest[..source_at].to_string(),
        rest[source_at + SOURCE_KEY.len()..].to_string(),
    ))
}
