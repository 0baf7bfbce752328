use std::borrow::Cow;

use chrono::NaiveDate;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::Serialize;

use super::{JatsError, PartialMetadata};
use crate::corpus::{FigureEntry, License, Section};

/// An explicit `<xref ref-type="fig">` inside a body paragraph. Offsets are
/// byte positions into the normalized paragraph text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FigXref {
    pub paragraph_index: usize,
    pub start: usize,
    pub end: usize,
    pub rid: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParseWarning {
    MissingCaption { figure_id: String },
    MissingGraphic { figure_id: String },
    MissingFigureId { generated: String },
    UnknownEntity { entity: String },
}

/// Output of [`parse_nxml`]: partial metadata, body text and figures without
/// inline references.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParsedNxml {
    pub metadata: PartialMetadata,
    pub full_text: Vec<Section>,
    pub figures: Vec<FigureEntry>,
    /// `<label>` of each figure, parallel to `figures`.
    pub figure_labels: Vec<Option<String>>,
    pub xrefs: Vec<FigXref>,
    pub warnings: Vec<ParseWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    ArticleTitle,
    Journal,
    ArticleId(IdKind),
    Year,
    Month,
    Day,
    Volume,
    Issue,
    FirstPage,
    Abstract,
    Keyword,
    License,
    LicenseRef,
    Reference,
    SectionTitle,
    Paragraph,
    FigureLabel,
    FigureCaption,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum IdKind {
    Pmc,
    Pmid,
    Other,
}

enum Capture {
    /// Discards text, e.g. figure or table bodies nested inside a paragraph.
    Sink,
    Text(Field, String),
}

struct Open {
    name: String,
    pushed_capture: bool,
    xref: Option<(String, usize)>,
}

#[derive(Default)]
struct FigureDraft {
    id: String,
    label: Option<String>,
    caption: Option<String>,
    graphic: Option<String>,
}

#[derive(Default)]
struct State {
    meta: PartialMetadata,
    sections: Vec<Section>,
    section_owner: Vec<usize>,
    sec_stack: Vec<(usize, String)>,
    sec_counter: usize,
    paragraph_count: usize,
    pending_xrefs: Vec<(usize, usize, String)>,
    xrefs: Vec<FigXref>,
    figures: Vec<FigureEntry>,
    labels: Vec<Option<String>>,
    fig_stack: Vec<FigureDraft>,
    warnings: Vec<ParseWarning>,
    pub_date: Option<(Option<i32>, Option<u32>, Option<u32>)>,
    pub_date_done: bool,
    in_pub_date: bool,
    volume: Option<String>,
    issue: Option<String>,
    fpage: Option<String>,
    license_url: Option<String>,
    license_text: Option<String>,
    seen_abstract: bool,
    has_body: bool,
}

/// Append text collapsing whitespace runs to single spaces.
fn push_normalized(buf: &mut String, text: &str) {
    for c in text.chars() {
        if c.is_whitespace() {
            if !buf.is_empty() && !buf.ends_with(' ') {
                buf.push(' ');
            }
        } else {
            buf.push(c);
        }
    }
}

fn resolve_entity(name: &str) -> Option<&'static str> {
    if let Some(v) = quick_xml::escape::resolve_predefined_entity(name) {
        return Some(v);
    }
    Some(match name {
        "nbsp" | "thinsp" | "ensp" | "emsp" => " ",
        "ndash" => "\u{2013}",
        "mdash" => "\u{2014}",
        "hellip" => "\u{2026}",
        "deg" => "\u{b0}",
        "plusmn" => "\u{b1}",
        "times" => "\u{d7}",
        "micro" => "\u{b5}",
        "alpha" => "\u{3b1}",
        "beta" => "\u{3b2}",
        "gamma" => "\u{3b3}",
        "le" => "\u{2264}",
        "ge" => "\u{2265}",
        _ => return None,
    })
}

fn attr(e: &BytesStart<'_>, local: &[u8]) -> Option<String> {
    e.attributes().flatten().find(|a| a.key.local_name().as_ref() == local).map(|a| {
        a.unescape_value()
            .map(Cow::into_owned)
            .unwrap_or_else(|_| String::from_utf8_lossy(&a.value).into_owned())
    })
}

impl State {
    fn within(&self, stack: &[Open], name: &str) -> bool {
        stack.iter().any(|o| o.name == name)
    }

    fn parent_is(stack: &[Open], name: &str) -> bool {
        stack.last().is_some_and(|o| o.name == name)
    }

    /// Decide what an opening element captures, given the open-element stack.
    fn capture_for(&mut self, stack: &[Open], captures: &[Capture], e: &BytesStart<'_>, name: &str) -> Option<Capture> {
        let in_meta = self.within(stack, "article-meta");
        let in_body = self.within(stack, "body");
        let innermost_is = |f: Field| matches!(captures.last(), Some(Capture::Text(g, _)) if *g == f);
        let in_sink = matches!(captures.last(), Some(Capture::Sink));
        let text = |f| Some(Capture::Text(f, String::new()));

        match name {
            "fig" => {
                let id = attr(e, b"id").unwrap_or_else(|| {
                    let generated = format!("fig{}", self.figures.len() + self.fig_stack.len() + 1);
                    self.warnings.push(ParseWarning::MissingFigureId { generated: generated.clone() });
                    generated
                });
                self.fig_stack.push(FigureDraft { id, ..Default::default() });
                Some(Capture::Sink)
            }
            "table-wrap" | "supplementary-material" | "boxed-text" if in_body => Some(Capture::Sink),
            "label" if Self::parent_is(stack, "fig") => text(Field::FigureLabel),
            "caption" if Self::parent_is(stack, "fig") => text(Field::FigureCaption),
            _ if in_sink => None,
            "article-title" if in_meta && Self::parent_is(stack, "title-group") && self.meta.title.is_none() => {
                text(Field::ArticleTitle)
            }
            "journal-title" if self.within(stack, "journal-meta") && self.meta.journal.is_none() => {
                text(Field::Journal)
            }
            "article-id" if in_meta => {
                let kind = match attr(e, b"pub-id-type").as_deref() {
                    Some("pmc") | Some("pmcid") => IdKind::Pmc,
                    Some("pmid") => IdKind::Pmid,
                    _ => IdKind::Other,
                };
                text(Field::ArticleId(kind))
            }
            "pub-date" if in_meta && !self.pub_date_done => {
                self.in_pub_date = true;
                self.pub_date = Some((None, None, None));
                None
            }
            "year" if self.in_pub_date => text(Field::Year),
            "month" if self.in_pub_date => text(Field::Month),
            "day" if self.in_pub_date => text(Field::Day),
            "volume" if Self::parent_is(stack, "article-meta") => text(Field::Volume),
            "issue" if Self::parent_is(stack, "article-meta") => text(Field::Issue),
            "fpage" if Self::parent_is(stack, "article-meta") => text(Field::FirstPage),
            "abstract" if in_meta && !self.seen_abstract => {
                let kind = attr(e, b"abstract-type");
                if matches!(kind.as_deref(), Some("graphical") | Some("teaser") | Some("toc")) {
                    return None;
                }
                self.seen_abstract = true;
                text(Field::Abstract)
            }
            "kwd" if in_meta => text(Field::Keyword),
            "license" if in_meta => {
                self.license_url = attr(e, b"href");
                text(Field::License)
            }
            "license_ref" if in_meta => text(Field::LicenseRef),
            "ref" if self.within(stack, "ref-list") => text(Field::Reference),
            "sec" if in_body => {
                self.sec_counter += 1;
                self.sec_stack.push((self.sec_counter, String::new()));
                None
            }
            "title" if in_body && Self::parent_is(stack, "sec") => text(Field::SectionTitle),
            "p" if in_body && !innermost_is(Field::Paragraph) && !self.within(stack, "caption") => {
                text(Field::Paragraph)
            }
            _ => None,
        }
    }

    fn finish_capture(&mut self, field: Field, raw: String) {
        let value = raw.trim().to_string();
        match field {
            Field::ArticleTitle => self.meta.title = Some(value).filter(|v| !v.is_empty()),
            Field::Journal => self.meta.journal = Some(value).filter(|v| !v.is_empty()),
            Field::ArticleId(IdKind::Pmc) => {
                let id = if value.starts_with("PMC") { value } else { format!("PMC{value}") };
                self.meta.accession_id = Some(id);
            }
            Field::ArticleId(IdKind::Pmid) => self.meta.pmid = Some(value),
            Field::ArticleId(IdKind::Other) => {}
            Field::Year | Field::Month | Field::Day => {
                if let Some(d) = self.pub_date.as_mut() {
                    match field {
                        Field::Year => d.0 = value.parse().ok(),
                        Field::Month => d.1 = value.parse().ok(),
                        _ => d.2 = value.parse().ok(),
                    }
                }
            }
            Field::Volume => self.volume = Some(value),
            Field::Issue => self.issue = Some(value),
            Field::FirstPage => self.fpage = Some(value),
            Field::Abstract => self.meta.abstract_text = Some(value).filter(|v| !v.is_empty()),
            Field::Keyword => {
                if !value.is_empty() {
                    self.meta.keywords.push(value);
                }
            }
            Field::License => self.license_text = Some(value),
            Field::LicenseRef => {
                if self.license_url.is_none() {
                    self.license_url = Some(value);
                }
            }
            Field::Reference => {
                if !value.is_empty() {
                    self.meta.citing_refs.push(value);
                }
            }
            Field::SectionTitle => {
                if let Some(top) = self.sec_stack.last_mut() {
                    top.1 = value;
                }
            }
            Field::Paragraph => {
                let pending = std::mem::take(&mut self.pending_xrefs);
                if value.is_empty() {
                    return;
                }
                // Leading whitespace is never written, so offsets only need clamping.
                let idx = self.paragraph_count;
                self.paragraph_count += 1;
                let len = value.len();
                for (start, end, rid) in pending {
                    self.xrefs.push(FigXref {
                        paragraph_index: idx,
                        start: start.min(len),
                        end: end.min(len),
                        rid,
                    });
                }
                let (owner, title) = self.sec_stack.last().cloned().unwrap_or((0, String::new()));
                if self.section_owner.last() != Some(&owner) {
                    self.section_owner.push(owner);
                    self.sections.push(Section { section_title: title, paragraphs: Vec::new() });
                }
                self.sections.last_mut().expect("section pushed").paragraphs.push(value);
            }
            Field::FigureLabel => {
                if let Some(f) = self.fig_stack.last_mut() {
                    f.label = Some(value);
                }
            }
            Field::FigureCaption => {
                if let Some(f) = self.fig_stack.last_mut() {
                    f.caption = Some(value);
                }
            }
        }
    }

    fn close_element(&mut self, name: &str) {
        match name {
            "fig" => {
                if let Some(draft) = self.fig_stack.pop() {
                    let caption = draft.caption.unwrap_or_default();
                    if caption.is_empty() {
                        self.warnings.push(ParseWarning::MissingCaption { figure_id: draft.id.clone() });
                    }
                    let image_path = match draft.graphic {
                        Some(g) if !g.is_empty() => g,
                        _ => {
                            self.warnings.push(ParseWarning::MissingGraphic { figure_id: draft.id.clone() });
                            draft.id.clone()
                        }
                    };
                    self.figures.push(FigureEntry {
                        figure_id: draft.id,
                        image_path,
                        caption,
                        inline_refs: Vec::new(),
                    });
                    self.labels.push(draft.label.filter(|l| !l.is_empty()));
                }
            }
            "pub-date" if self.in_pub_date => {
                self.in_pub_date = false;
                if let Some((Some(y), m, d)) = self.pub_date {
                    if let Some(date) = NaiveDate::from_ymd_opt(y, m.unwrap_or(1), d.unwrap_or(1)) {
                        self.meta.publication_date = Some(date);
                        self.pub_date_done = true;
                    }
                }
            }
            "sec" if !self.sec_stack.is_empty() => {
                self.sec_stack.pop();
            }
            _ => {}
        }
    }

    fn graphic(&mut self, e: &BytesStart<'_>) {
        if let Some(f) = self.fig_stack.last_mut() {
            if f.graphic.is_none() {
                f.graphic = attr(e, b"href");
            }
        }
    }

    fn into_output(mut self) -> ParsedNxml {
        if let Some(journal) = &self.meta.journal {
            let mut citation = journal.clone();
            if let Some(d) = self.meta.publication_date {
                citation.push_str(&format!(". {}", d.format("%Y")));
            }
            if let Some(v) = &self.volume {
                citation.push_str(&format!(";{v}"));
                if let Some(i) = &self.issue {
                    citation.push_str(&format!("({i})"));
                }
            }
            if let Some(p) = &self.fpage {
                citation.push_str(&format!(":{p}"));
            }
            self.meta.citation = Some(citation);
        }
        self.meta.license = self
            .license_url
            .as_deref()
            .and_then(License::from_url)
            .or_else(|| self.license_text.filter(|t| !t.is_empty()).map(|t| License::parse(&t)));
        ParsedNxml {
            metadata: self.meta,
            full_text: self.sections,
            figures: self.figures,
            figure_labels: self.labels,
            xrefs: self.xrefs,
            warnings: self.warnings,
        }
    }
}

fn malformed(pos: u64, message: impl Into<String>) -> JatsError {
    JatsError::MalformedXml { position: pos, message: message.into() }
}

/// Parse one JATS article with a streaming reader. Figures are returned
/// without inline references; see [`super::extract_inline_refs`].
pub fn parse_nxml(xml_bytes: &[u8]) -> Result<ParsedNxml, JatsError> {
    let mut reader = Reader::from_reader(xml_bytes);
    reader.config_mut().check_end_names = true;

    let mut st = State::default();
    let mut stack: Vec<Open> = Vec::new();
    let mut captures: Vec<Capture> = Vec::new();
    let mut saw_root = false;
    let mut root_closed = false;
    let mut buf = Vec::new();

    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| malformed(reader.error_position() as u64, e.to_string()))?;
        let pos = reader.buffer_position() as u64;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                if root_closed {
                    return Err(malformed(pos, "content after root element"));
                }
                saw_root = true;
                let is_empty = matches!(event, Event::Empty(_));
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                if name == "body" {
                    st.has_body = true;
                }
                if name == "graphic" {
                    st.graphic(e);
                }
                // An xref start offset is the current paragraph length.
                let xref = if name == "xref" && attr(e, b"ref-type").as_deref() == Some("fig") {
                    match captures.last() {
                        Some(Capture::Text(Field::Paragraph, buf)) => attr(e, b"rid").map(|r| (r, buf.len())),
                        _ => None,
                    }
                } else {
                    None
                };
                let cap = st.capture_for(&stack, &captures, e, &name);
                if let Some(Capture::Text(_, b)) = captures.last_mut() {
                    // Separate block-level children (e.g. caption title and p).
                    if matches!(name.as_str(), "p" | "title" | "sec" | "list-item") && !b.is_empty() && !b.ends_with(' ') {
                        b.push(' ');
                    }
                }
                let pushed = cap.is_some();
                if let Some(c) = cap {
                    captures.push(c);
                }
                let open = Open { name, pushed_capture: pushed, xref };
                if is_empty {
                    close(&mut st, &mut captures, open);
                    if stack.is_empty() {
                        root_closed = true;
                    }
                } else {
                    stack.push(open);
                }
            }
            Event::End(_) => {
                let open = stack.pop().ok_or_else(|| malformed(pos, "unbalanced end tag"))?;
                close(&mut st, &mut captures, open);
                if stack.is_empty() {
                    root_closed = true;
                }
            }
            Event::Text(t) => {
                let text = match t.unescape_with(resolve_entity) {
                    Ok(s) => s.into_owned(),
                    Err(_) => {
                        let raw = String::from_utf8_lossy(&t).into_owned();
                        st.warnings.push(ParseWarning::UnknownEntity { entity: raw.clone() });
                        raw
                    }
                };
                if stack.is_empty() {
                    if !text.trim().is_empty() {
                        return Err(malformed(pos, "text outside root element"));
                    }
                    continue;
                }
                if let Some(Capture::Text(_, b)) = captures.last_mut() {
                    push_normalized(b, &text);
                }
            }
            Event::CData(t) => {
                if let Some(Capture::Text(_, b)) = captures.last_mut() {
                    push_normalized(b, &String::from_utf8_lossy(&t));
                }
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }

    if !saw_root {
        return Err(malformed(0, "no root element"));
    }
    if !stack.is_empty() {
        return Err(malformed(xml_bytes.len() as u64, format!("unclosed element <{}>", stack.last().unwrap().name)));
    }
    if !st.has_body {
        return Err(JatsError::MissingBody);
    }
    Ok(st.into_output())
}

fn close(st: &mut State, captures: &mut Vec<Capture>, open: Open) {
    if let Some((rid, start)) = open.xref {
        if let Some(Capture::Text(Field::Paragraph, b)) = captures.last() {
            let end = b.trim_end().len();
            for r in rid.split_whitespace() {
                st.pending_xrefs.push((start, end, r.to_string()));
            }
        }
    }
    if open.pushed_capture {
        if let Some(Capture::Text(field, text)) = captures.pop() {
            st.finish_capture(field, text);
        }
    }
    st.close_element(&open.name);
}
