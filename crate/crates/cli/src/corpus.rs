//! Loading files and family-labelled corpora from disk.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ncdkit::Sample;

/// Default manifest name looked up inside a corpus directory.
pub const MANIFEST_NAME: &str = "families.tsv";

/// Expands directories to their regular files sorted by name; plain files
/// pass through in argument order.
pub fn expand_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        let meta = fs::metadata(p).with_context(|| format!("cannot read {}", p.display()))?;
        if meta.is_dir() {
            out.extend(dir_files(p)?);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn dir_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))? {
        let entry = entry.with_context(|| format!("cannot list {}", dir.display()))?;
        if entry.file_type()?.is_file() {
            files.push(entry.path());
        }
    }
    files.sort();
    Ok(files)
}

/// Reads a file as a sample whose id is the file name.
pub fn load_sample(path: &Path) -> Result<Sample> {
    let data = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    if data.is_empty() {
        bail!("{} is empty", path.display());
    }
    let id = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    Ok(Sample::new(id, data)?.with_source(path.display().to_string()))
}

/// Parses a manifest: one `<file name> <family>` pair per line, separated by
/// a tab or spaces, `#` starting a comment line.
pub fn parse_manifest(text: &str, origin: &Path) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((file, family)) = line.split_once(char::is_whitespace) else {
            bail!("{}:{}: expected `<file> <family>`", origin.display(), i + 1);
        };
        let family = family.trim();
        if map.insert(file.to_string(), family.to_string()).is_some() {
            bail!("{}:{}: `{file}` listed twice", origin.display(), i + 1);
        }
    }
    Ok(map)
}

/// A corpus directory with every file labelled by the manifest.
pub struct Corpus {
    pub samples: Vec<Sample>,
    pub paths: Vec<PathBuf>,
}

pub fn load_corpus(dir: &Path, manifest: Option<&Path>) -> Result<Corpus> {
    let manifest_path = manifest.map_or_else(|| dir.join(MANIFEST_NAME), Path::to_path_buf);
    let text = fs::read_to_string(&manifest_path)
        .with_context(|| format!("cannot read family manifest {}", manifest_path.display()))?;
    let mut families = parse_manifest(&text, &manifest_path)?;
    let manifest_canon = manifest_path.canonicalize().ok();

    let mut samples = Vec::new();
    let mut paths = Vec::new();
    for path in dir_files(dir)? {
        if path.canonicalize().ok() == manifest_canon {
            continue;
        }
        let sample = load_sample(&path)?;
        let Some(family) = families.remove(&sample.id) else {
            bail!("{} has no entry in {}", path.display(), manifest_path.display());
        };
        samples.push(sample.with_family(family));
        paths.push(path);
    }
    if let Some(name) = families.keys().next() {
        bail!("{} lists `{name}`, which is not a file in {}", manifest_path.display(), dir.display());
    }
    Ok(Corpus { samples, paths })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_accepts_tabs_spaces_and_comments() {
        let m = parse_manifest("# header\na.bin\tfamA\nb.bin   fam B\n\n", Path::new("m")).unwrap();
        assert_eq!(m["a.bin"], "famA");
        assert_eq!(m["b.bin"], "fam B");
    }

    #[test]
    fn manifest_errors_carry_line() {
        let e = parse_manifest("a.bin famA\nlonely\n", Path::new("m")).unwrap_err();
        assert!(e.to_string().contains("m:2"), "{e}");
        let e = parse_manifest("a x\na y\n", Path::new("m")).unwrap_err();
        assert!(e.to_string().contains("twice"));
    }

    #[test]
    fn directory_expansion_is_sorted() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["c", "a", "b"] {
            fs::write(dir.path().join(name), name).unwrap();
        }
        fs::create_dir(dir.path().join("sub")).unwrap();
        let files = expand_paths(&[dir.path().to_path_buf()]).unwrap();
        let names: Vec<_> = files.iter().map(|p| p.file_name().unwrap().to_str().unwrap()).collect();
        assert_eq!(names, ["a", "b", "c"]);
    }

    #[test]
    fn unlisted_file_is_named() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("x.bin"), "xx").unwrap();
        fs::write(dir.path().join("y.bin"), "yy").unwrap();
        fs::write(dir.path().join(MANIFEST_NAME), "x.bin fx\n").unwrap();
        let e = load_corpus(dir.path(), None).err().unwrap();
        assert!(e.to_string().contains("y.bin"), "{e}");
    }
}
