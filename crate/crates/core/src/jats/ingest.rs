use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::{
    extract_inline_refs, merge_metadata, parse_nxml, FileList, FileListRow, JatsError, ParseWarning,
    PartialMetadata, RejectedRow,
};
use crate::corpus::ArticleRecord;

const IMAGE_EXTENSIONS: &[&str] = &["jpg", "jpeg", "png", "gif", "tif", "tiff", "webp"];

/// An unpacked article package: one nXML file plus its image files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackageLayout {
    pub root_dir: PathBuf,
    pub nxml_path: PathBuf,
    pub image_paths: Vec<PathBuf>,
}

impl PackageLayout {
    /// Scan a package directory. The first `.nxml` file (by name) is the article.
    pub fn discover(root_dir: &Path) -> Result<Self, JatsError> {
        let mut nxml = Vec::new();
        let mut images = Vec::new();
        for entry in fs::read_dir(root_dir)? {
            let path = entry?.path();
            if !path.is_file() {
                continue;
            }
            let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
            match ext.as_deref() {
                Some("nxml") => nxml.push(path),
                Some(e) if IMAGE_EXTENSIONS.contains(&e) => images.push(path),
                _ => {}
            }
        }
        nxml.sort();
        images.sort();
        let nxml_path = nxml
            .into_iter()
            .next()
            .ok_or_else(|| JatsError::MissingNxml(root_dir.display().to_string()))?;
        Ok(PackageLayout { root_dir: root_dir.to_path_buf(), nxml_path, image_paths: images })
    }

    /// Find the image file a `<graphic xlink:href>` refers to: exact file name
    /// first, then matching file stem.
    fn resolve_image(&self, href: &str) -> Option<&Path> {
        let href_name = Path::new(href).file_name()?.to_str()?;
        let href_stem = Path::new(href_name).file_stem()?.to_str()?;
        self.image_paths
            .iter()
            .find(|p| p.file_name().and_then(|n| n.to_str()) == Some(href_name))
            .or_else(|| self.image_paths.iter().find(|p| p.file_stem().and_then(|s| s.to_str()) == Some(href_stem)))
            .map(PathBuf::as_path)
    }
}

/// Local stand-in for bibliographic web-service records, keyed by accession id.
#[derive(Debug, Clone, Default)]
pub struct EntrezSource {
    records: HashMap<String, PartialMetadata>,
}

impl EntrezSource {
    /// Load a JSON array of partial metadata records.
    pub fn from_json(bytes: &[u8]) -> Result<Self, JatsError> {
        let list: Vec<PartialMetadata> = serde_json::from_slice(bytes)?;
        let records = list
            .into_iter()
            .filter_map(|m| m.accession_id.clone().map(|id| (id, m)))
            .collect();
        Ok(EntrezSource { records })
    }

    pub fn load(path: &Path) -> Result<Self, JatsError> {
        Self::from_json(&fs::read(path)?)
    }

    pub fn get(&self, accession_id: &str) -> Option<&PartialMetadata> {
        self.records.get(accession_id)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PackageWarning {
    pub accession_id: String,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct IngestReport {
    pub records: Vec<ArticleRecord>,
    pub rejects: Vec<RejectedRow>,
    pub warnings: Vec<PackageWarning>,
    pub unresolved_refs: usize,
}

pub struct IngestedArticle {
    pub record: ArticleRecord,
    pub warnings: Vec<String>,
    pub unresolved_refs: usize,
}

/// Parse one package into an article record. Image paths become relative to
/// `relative_to` when the referenced file exists in the package.
pub fn ingest_package(
    layout: &PackageLayout,
    row: Option<&FileListRow>,
    entrez: Option<&PartialMetadata>,
    relative_to: &Path,
) -> Result<IngestedArticle, JatsError> {
    let bytes = fs::read(&layout.nxml_path)?;
    let parsed = parse_nxml(&bytes)?;
    let mut warnings: Vec<String> = parsed.warnings.iter().map(describe).collect();

    let refs = extract_inline_refs(&parsed.full_text, &parsed.figures, &parsed.figure_labels, &parsed.xrefs);
    let mut figures = refs.figures;
    for fig in &mut figures {
        match layout.resolve_image(&fig.image_path) {
            Some(p) => {
                let rel = p.strip_prefix(relative_to).unwrap_or(p);
                fig.image_path = rel.to_string_lossy().replace('\\', "/");
            }
            None => warnings.push(format!("figure {} image `{}` not found in package", fig.figure_id, fig.image_path)),
        }
    }

    let file_meta = row.map(PartialMetadata::from);
    let metadata = merge_metadata(Some(&parsed.metadata), file_meta.as_ref(), entrez)?;
    Ok(IngestedArticle {
        record: ArticleRecord { metadata, full_text: parsed.full_text, figures },
        warnings,
        unresolved_refs: refs.unresolved,
    })
}

fn describe(w: &ParseWarning) -> String {
    match w {
        ParseWarning::MissingCaption { figure_id } => format!("figure {figure_id} has no caption"),
        ParseWarning::MissingGraphic { figure_id } => format!("figure {figure_id} has no graphic"),
        ParseWarning::MissingFigureId { generated } => format!("figure without id, assigned {generated}"),
        ParseWarning::UnknownEntity { entity } => format!("unresolved entity in `{entity}`"),
    }
}

/// Package directory for a file-list row: `<root>/<accession_id>`, falling
/// back to the archive name without its `.tar.gz` suffix.
fn package_dir(root: &Path, row: &FileListRow) -> Option<PathBuf> {
    let by_id = root.join(&row.accession_id);
    if by_id.is_dir() {
        return Some(by_id);
    }
    let name = Path::new(&row.archive_path).file_name()?.to_str()?;
    let stem = name.trim_end_matches(".tar.gz").trim_end_matches(".tgz");
    let by_archive = root.join(stem);
    by_archive.is_dir().then_some(by_archive)
}

/// Ingest every package listed in the file list. Packages are parsed in
/// parallel; output order follows the file list. Packages that fail to
/// parse are reported as warnings and skipped.
pub fn ingest_corpus(file_list: &FileList, packages_root: &Path, entrez: Option<&EntrezSource>) -> IngestReport {
    let results: Vec<Result<IngestedArticle, PackageWarning>> = file_list
        .rows
        .par_iter()
        .map(|row| {
            let fail = |message: String| PackageWarning { accession_id: row.accession_id.clone(), message };
            let dir = package_dir(packages_root, row).ok_or_else(|| fail("package directory not found".into()))?;
            let layout = PackageLayout::discover(&dir).map_err(|e| fail(e.to_string()))?;
            let entrez_rec = entrez.and_then(|e| e.get(&row.accession_id));
            ingest_package(&layout, Some(row), entrez_rec, packages_root).map_err(|e| fail(e.to_string()))
        })
        .collect();

    let mut report = IngestReport { rejects: file_list.rejects.clone(), ..Default::default() };
    for r in results {
        match r {
            Ok(a) => {
                let id = a.record.metadata.accession_id.clone();
                report.warnings.extend(a.warnings.into_iter().map(|message| PackageWarning {
                    accession_id: id.clone(),
                    message,
                }));
                report.unresolved_refs += a.unresolved_refs;
                report.records.push(a.record);
            }
            Err(w) => report.warnings.push(w),
        }
    }
    report
}
