//! Seed TSV format: `surface<TAB>entity_type<TAB>provenance<TAB>source`,
//! UTF-8, '#'-prefixed comment lines skipped.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{BuildReport, SeedEntry, SeedLexicon};
use crate::corpus::TextConfig;
use crate::error::{Error, Result};
use crate::types::{EntityTypeRegistry, Provenance};

pub fn load_lexicon(
    path: impl AsRef<Path>,
    registry: &EntityTypeRegistry,
    cfg: &TextConfig,
) -> Result<(SeedLexicon, BuildReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut entries = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let row = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::BadColumnCount {
                path: path.to_path_buf(),
                row,
                expected: 4,
                found: cols.len(),
            });
        }
        let surface = cols[0].trim();
        if surface.is_empty() {
            return Err(Error::EmptySurface {
                path: path.to_path_buf(),
                row,
            });
        }
        let entity_type = registry.require(cols[1])?;
        let provenance = Provenance::parse(cols[2]).ok_or_else(|| Error::BadProvenance {
            path: path.to_path_buf(),
            row,
            value: cols[2].to_string(),
        })?;
        entries.push(SeedEntry::new(
            surface,
            entity_type,
            provenance,
            cols[3].trim(),
            cfg,
        )?);
    }

    let version = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    SeedLexicon::from_entries(entries, version)
}

/// Writes the lexicon in the seed TSV format, sorted, with a comment header.
pub fn save_lexicon_tsv(lexicon: &SeedLexicon, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# surface\tentity_type\tprovenance\tsource").map_err(|e| Error::io(path, e))?;
    for e in lexicon.entries() {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            e.surface,
            e.entity_type.name(),
            e.provenance,
            e.source
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
