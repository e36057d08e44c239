//! Directory-tree corpora: `<root>/<activity>/<recording file>`.
//!
//! The activity directory name is the raw label. Files may be native CAD-60
//! dumps or canonical sequences; the format is sniffed from the first line.
//! Directories and files are visited in sorted path order.

use std::fs;
use std::path::{Path, PathBuf};

use super::canonical::{is_canonical, read_canonical};
use super::{parse_cad60, LabelMap, SkeletonSequence};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Corpus {
    pub sequences: Vec<SkeletonSequence>,
    pub labels: LabelMap,
}

/// Lower-cases and turns underscores into spaces, so `Talking_On_Phone`
/// and `talking on phone` name the same activity.
pub fn normalize_label_text(raw: &str) -> String {
    raw.trim()
        .replace('_', " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    entries.retain(|p| {
        p.file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| !n.starts_with('.'))
    });
    entries.sort();
    Ok(entries)
}

pub fn load_sequence_file(path: &Path, label: &str, source_id: &str) -> Result<SkeletonSequence> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let location = path.display().to_string();
    if is_canonical(&text) {
        let seq = read_canonical(&text, &location)?;
        SkeletonSequence::new(seq.frames().to_vec(), label, source_id)
    } else {
        let rec = parse_cad60(&text, &location)?;
        SkeletonSequence::new(rec.frames, label, source_id)
    }
}

pub fn load_corpus(root: &Path, map: &LabelMap) -> Result<Corpus> {
    if !root.is_dir() {
        return Err(Error::Corpus(format!(
            "{} is not a directory",
            root.display()
        )));
    }
    let mut sequences = Vec::new();
    for dir in sorted_entries(root)? {
        if !dir.is_dir() {
            continue;
        }
        let dir_name = dir.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let label = map.consolidate(&normalize_label_text(dir_name));
        for file in sorted_entries(&dir)? {
            if !file.is_file() {
                continue;
            }
            let file_name = file
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default();
            let source_id = format!("{dir_name}/{file_name}");
            sequences.push(load_sequence_file(&file, &label, &source_id)?);
        }
    }
    if sequences.is_empty() {
        return Err(Error::Corpus(format!(
            "no recordings found under {}",
            root.display()
        )));
    }
    let mut labels = map.clone();
    labels.finalize(sequences.iter().map(|s| s.label.as_str()));
    log::info!(
        "loaded {} recordings in {} classes from {}",
        sequences.len(),
        labels.classes().len(),
        root.display()
    );
    Ok(Corpus { sequences, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::cad60::tests::native_row;

    fn write(dir: &Path, rel: &str, body: &str) {
        let p = dir.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, body).unwrap();
    }

    #[test]
    fn merges_directory_labels() {
        let tmp = tempfile::tempdir().unwrap();
        let rec = format!("{}\n{}\nEND\n", native_row(1), native_row(2));
        write(tmp.path(), "talking on the phone/a.txt", &rec);
        write(tmp.path(), "talking_on_phone/b.txt", &rec);
        write(tmp.path(), "cooking/c.txt", &rec);
        let corpus = load_corpus(tmp.path(), &LabelMap::default_map()).unwrap();
        assert_eq!(corpus.labels.classes(), &["cooking", "talking"]);
        assert_eq!(corpus.sequences.len(), 3);
        assert!(corpus.sequences.iter().all(|s| s.len() == 2));

        let again = load_corpus(tmp.path(), &LabelMap::default_map()).unwrap();
        assert_eq!(again.labels.classes(), corpus.labels.classes());
        let ids: Vec<_> = corpus.sequences.iter().map(|s| &s.source_id).collect();
        let ids2: Vec<_> = again.sequences.iter().map(|s| &s.source_id).collect();
        assert_eq!(ids, ids2);
    }

    #[test]
    fn empty_root_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_corpus(tmp.path(), &LabelMap::default_map()),
            Err(Error::Corpus(_))
        ));
    }

    #[test]
    fn bad_file_is_named() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "eating/broken.txt", "1,2,3\nEND\n");
        let err = load_corpus(tmp.path(), &LabelMap::default_map()).unwrap_err();
        assert!(err.to_string().contains("broken.txt"), "{err}");
    }
}
