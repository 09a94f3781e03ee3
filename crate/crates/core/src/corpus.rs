//! Citation-context extraction from JATS-like full-text XML.
//!
//! Supported subset:
//!
//! ```text
//! article
//!   front/article-meta: article-id[@pub-id-type], pub-date/year
//!   body: p (with inline xref[@ref-type="bibr"][@rid])
//!   back/ref-list/ref[@id]: element-citation | mixed-citation
//!       pub-id[@pub-id-type="pmid"|"pmcid"], person-group/name/(surname, given-names),
//!       source, year, volume, fpage
//! ```
//!
//! Everything outside the subset is ignored.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use regex::Regex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("document has no <body>")]
    MissingBody,
    #[error("document has no front-matter publication year")]
    MissingYear,
    #[error("document has no usable identifier")]
    MissingIdentifier,
}

/// The reference cannot be given an identifier and is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("reference has neither a PubMed identifier nor complete metadata")]
pub struct Unidentifiable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CitationKind {
    Pmid,
    Pmcid,
    MetaKey,
}

impl CitationKind {
    pub fn tag(self) -> &'static str {
        match self {
            CitationKind::Pmid => "pmid",
            CitationKind::Pmcid => "pmcid",
            CitationKind::MetaKey => "meta",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "pmid" => Some(CitationKind::Pmid),
            "pmcid" => Some(CitationKind::Pmcid),
            "meta" => Some(CitationKind::MetaKey),
            _ => None,
        }
    }
}

/// Canonical identifier of a publication, rendered as `<kind>:<value>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CitationId {
    kind: CitationKind,
    value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid citation identifier `{0}`")]
pub struct InvalidCitationId(pub String);

impl CitationId {
    pub fn new(kind: CitationKind, value: impl Into<String>) -> Result<Self, InvalidCitationId> {
        let value = value.into();
        let ok = match kind {
            CitationKind::Pmid | CitationKind::Pmcid => is_digits(&value),
            CitationKind::MetaKey => is_meta_key(&value),
        };
        if ok {
            Ok(Self { kind, value })
        } else {
            Err(InvalidCitationId(format!("{}:{}", kind.tag(), value)))
        }
    }

    pub fn pmid(value: &str) -> Result<Self, InvalidCitationId> {
        Self::new(CitationKind::Pmid, value)
    }

    pub fn kind(&self) -> CitationKind {
        self.kind
    }

    pub fn value(&self) -> &str {
        &self.value
    }

    /// Vocabulary surface, e.g. `CITE:pmid:17081983`.
    pub fn token_surface(&self) -> String {
        format!("CITE:{self}")
    }

    /// In-text placeholder, e.g. `⟦CITE:pmid:17081983⟧`.
    pub fn placeholder(&self) -> String {
        format!("⟦CITE:{self}⟧")
    }

    /// Parses a vocabulary surface (`CITE:pmid:1`).
    pub fn from_token_surface(surface: &str) -> Option<Self> {
        surface.strip_prefix("CITE:")?.parse().ok()
    }
}

impl fmt::Display for CitationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.tag(), self.value)
    }
}

impl FromStr for CitationId {
    type Err = InvalidCitationId;

    /// Accepts `pmid:123`, `pmcid:456`, `meta:<key>`, or a bare digit string
    /// (read as a PMID).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if is_digits(s) {
            return Self::pmid(s);
        }
        let (tag, value) = s.split_once(':').ok_or_else(|| InvalidCitationId(s.to_string()))?;
        let kind = CitationKind::from_tag(tag).ok_or_else(|| InvalidCitationId(s.to_string()))?;
        Self::new(kind, value)
    }
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

fn is_meta_key(s: &str) -> bool {
    let parts: Vec<&str> = s.split('_').collect();
    parts.len() == 5
        && parts
            .iter()
            .all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()))
}

/// Bibliographic metadata of one reference-list entry.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RefMetadata {
    pub first_author_given: String,
    pub first_author_surname: String,
    pub venue: String,
    pub year: Option<i32>,
    pub volume: String,
    pub first_page: String,
    pub pmid: Option<String>,
    pub pmcid: Option<String>,
}

/// Lowercase, ASCII-fold, keep only ASCII letters and digits.
pub fn normalize_key_component(s: &str) -> String {
    deunicode::deunicode(s)
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Builds the `fa_ve_yr_vo_fp` key (first author, venue, year, volume,
/// first page) for references without a PubMed identifier.
pub fn build_meta_key(m: &RefMetadata) -> Result<String, Unidentifiable> {
    let fa = normalize_key_component(&format!("{}{}", m.first_author_given, m.first_author_surname));
    let ve = normalize_key_component(&m.venue);
    let yr = m.year.filter(|y| *y > 0).map(|y| y.to_string()).unwrap_or_default();
    let vo = normalize_key_component(&m.volume);
    let fp = normalize_key_component(&m.first_page);
    let parts = [fa, ve, yr, vo, fp];
    if parts.iter().any(String::is_empty) {
        return Err(Unidentifiable);
    }
    Ok(parts.join("_"))
}

/// PMID, then PMCID, then the metadata key.
pub fn resolve_identifier(m: &RefMetadata) -> Result<CitationId, Unidentifiable> {
    if let Some(id) = m.pmid.as_deref().and_then(|p| CitationId::new(CitationKind::Pmid, p).ok()) {
        return Ok(id);
    }
    if let Some(id) = m.pmcid.as_deref().and_then(|p| CitationId::new(CitationKind::Pmcid, p).ok()) {
        return Ok(id);
    }
    let key = build_meta_key(m)?;
    Ok(CitationId { kind: CitationKind::MetaKey, value: key })
}

/// A piece of paragraph text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Text(String),
    /// Inline bibliographic cross-reference to a reference-list label.
    Marker(String),
}

#[derive(Debug, Clone)]
pub struct RawDocument {
    pub doc_id: CitationId,
    pub pub_year: i32,
    pub paragraphs: Vec<Vec<Segment>>,
    pub references: BTreeMap<String, RefMetadata>,
}

impl RawDocument {
    pub fn markers(&self) -> impl Iterator<Item = &str> {
        self.paragraphs.iter().flatten().filter_map(|s| match s {
            Segment::Marker(rid) => Some(rid.as_str()),
            Segment::Text(_) => None,
        })
    }

    pub fn marker_count(&self) -> usize {
        self.markers().count()
    }

    /// Markers whose label has no reference-list entry.
    pub fn dangling_markers(&self) -> Vec<&str> {
        self.markers().filter(|rid| !self.references.contains_key(*rid)).collect()
    }
}

/// A citing paragraph with resolved citations replaced by placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitingSpan {
    pub doc_id: CitationId,
    pub pub_year: i32,
    pub text: String,
}

#[derive(Debug, Error)]
#[error("line {line}: {msg}")]
pub struct SpanParseError {
    pub line: usize,
    pub msg: String,
}

impl CitingSpan {
    /// `doc_id \t pub_year \t text`
    pub fn to_tsv_line(&self) -> String {
        let text: String = self
            .text
            .chars()
            .map(|c| if matches!(c, '\t' | '\n' | '\r') { ' ' } else { c })
            .collect();
        format!("{}\t{}\t{}", self.doc_id, self.pub_year, text)
    }

    pub fn from_tsv_line(line: &str, line_no: usize) -> Result<Self, SpanParseError> {
        let err = |msg: &str| SpanParseError { line: line_no, msg: msg.to_string() };
        let mut fields = line.splitn(3, '\t');
        let doc_id = fields.next().ok_or_else(|| err("missing doc id"))?;
        let year = fields.next().ok_or_else(|| err("missing year"))?;
        let text = fields.next().ok_or_else(|| err("missing text"))?;
        Ok(Self {
            doc_id: doc_id.parse().map_err(|e: InvalidCitationId| err(&e.to_string()))?,
            pub_year: year.parse().map_err(|_| err("bad year"))?,
            text: text.to_string(),
        })
    }
}

pub static PLACEHOLDER_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"⟦CITE:(pmid|pmcid|meta):([^⟧ ]+)⟧").unwrap());

// --- minimal DOM -----------------------------------------------------------

#[derive(Debug)]
enum Node {
    Element(Element),
    Text(String),
}

#[derive(Debug)]
struct Element {
    name: String,
    attrs: Vec<(String, String)>,
    children: Vec<Node>,
}

impl Element {
    fn attr(&self, key: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn child_elements(&self) -> impl Iterator<Item = &Element> {
        self.children.iter().filter_map(|n| match n {
            Node::Element(e) => Some(e),
            Node::Text(_) => None,
        })
    }

    fn child(&self, name: &str) -> Option<&Element> {
        self.child_elements().find(|e| e.name == name)
    }

    /// Depth-first, document order.
    fn descendants<'a>(&'a self, name: &'a str) -> Vec<&'a Element> {
        let mut out = Vec::new();
        self.collect_descendants(name, &mut out);
        out
    }

    fn collect_descendants<'a>(&'a self, name: &str, out: &mut Vec<&'a Element>) {
        for e in self.child_elements() {
            if e.name == name {
                out.push(e);
            }
            e.collect_descendants(name, out);
        }
    }

    fn first_descendant(&self, name: &str) -> Option<&Element> {
        for e in self.child_elements() {
            if e.name == name {
                return Some(e);
            }
            if let Some(found) = e.first_descendant(name) {
                return Some(found);
            }
        }
        None
    }

    fn text(&self) -> String {
        let mut s = String::new();
        self.collect_text(&mut s);
        s
    }

    fn collect_text(&self, out: &mut String) {
        for n in &self.children {
            match n {
                Node::Text(t) => out.push_str(t),
                Node::Element(e) => e.collect_text(out),
            }
        }
    }
}

fn element_from_start(e: &BytesStart<'_>) -> Result<Element, CorpusError> {
    let bad = |e: &dyn fmt::Display| CorpusError::MalformedXml(e.to_string());
    let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
    let mut attrs = Vec::new();
    for a in e.attributes() {
        let a = a.map_err(|e| bad(&e))?;
        let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
        let value = a.unescape_value().map_err(|e| bad(&e))?.into_owned();
        attrs.push((key, value));
    }
    Ok(Element { name, attrs, children: Vec::new() })
}

fn parse_dom(xml: &[u8]) -> Result<Element, CorpusError> {
    let bad = |e: &dyn fmt::Display| CorpusError::MalformedXml(e.to_string());
    let text = std::str::from_utf8(xml).map_err(|e| bad(&e))?;
    let mut reader = Reader::from_str(text);
    let mut stack: Vec<Element> = Vec::new();
    let mut root: Option<Element> = None;

    let push_text = |stack: &mut Vec<Element>, t: &str| {
        if let Some(top) = stack.last_mut() {
            if let Some(Node::Text(prev)) = top.children.last_mut() {
                prev.push_str(t);
            } else {
                top.children.push(Node::Text(t.to_string()));
            }
        }
    };

    loop {
        match reader.read_event().map_err(|e| bad(&e))? {
            Event::Start(e) => {
                if root.is_some() {
                    return Err(CorpusError::MalformedXml("content after root element".into()));
                }
                stack.push(element_from_start(&e)?);
            }
            Event::Empty(e) => {
                let el = element_from_start(&e)?;
                match stack.last_mut() {
                    Some(top) => top.children.push(Node::Element(el)),
                    None if root.is_none() => root = Some(el),
                    None => return Err(CorpusError::MalformedXml("content after root element".into())),
                }
            }
            Event::End(_) => {
                let el = stack.pop().ok_or_else(|| CorpusError::MalformedXml("unbalanced end tag".into()))?;
                match stack.last_mut() {
                    Some(top) => top.children.push(Node::Element(el)),
                    None => root = Some(el),
                }
            }
            Event::Text(t) => {
                let s = t.xml_content().map_err(|e| bad(&e))?;
                push_text(&mut stack, &s);
            }
            Event::CData(t) => {
                let s = t.decode().map_err(|e| bad(&e))?;
                push_text(&mut stack, &s);
            }
            Event::GeneralRef(r) => {
                let resolved = if r.is_char_ref() {
                    r.resolve_char_ref().map_err(|e| bad(&e))?.map(String::from)
                } else {
                    let name = r.decode().map_err(|e| bad(&e))?;
                    quick_xml::escape::resolve_xml_entity(&name)
                        .or_else(|| quick_xml::escape::resolve_html5_entity(&name))
                        .map(String::from)
                };
                let s = resolved.ok_or_else(|| CorpusError::MalformedXml("unknown entity reference".into()))?;
                push_text(&mut stack, &s);
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !stack.is_empty() {
        return Err(CorpusError::MalformedXml("unexpected end of input".into()));
    }
    root.ok_or_else(|| CorpusError::MalformedXml("no root element".into()))
}

// --- document extraction ---------------------------------------------------

/// Elements whose text never belongs to running prose.
fn is_skipped(name: &str) -> bool {
    matches!(
        name,
        "fig" | "table-wrap" | "disp-formula" | "inline-formula" | "tex-math" | "supplementary-material"
    ) || name.starts_with("mml:")
}

fn first_digits(s: &str) -> Option<i32> {
    let start = s.find(|c: char| c.is_ascii_digit())?;
    let digits: String = s[start..].chars().take_while(|c| c.is_ascii_digit()).collect();
    digits.parse().ok()
}

/// Parses one XML document of the supported subset.
pub fn parse_document(xml: &[u8]) -> Result<RawDocument, CorpusError> {
    let root = parse_dom(xml)?;
    let front = root.first_descendant("front");
    let meta = front.and_then(|f| f.first_descendant("article-meta"));

    let pub_year = meta
        .map(|m| m.descendants("pub-date"))
        .unwrap_or_default()
        .into_iter()
        .filter_map(|d| d.child("year").and_then(|y| first_digits(&y.text())))
        .min()
        .ok_or(CorpusError::MissingYear)?;

    let doc_id = front.zip(meta).and_then(|(f, m)| document_id(f, m)).ok_or(CorpusError::MissingIdentifier)?;

    let body = root.first_descendant("body").ok_or(CorpusError::MissingBody)?;
    let mut paragraphs = Vec::new();
    collect_paragraphs(body, &mut paragraphs);

    let mut references = BTreeMap::new();
    if let Some(back) = root.first_descendant("back") {
        for ref_list in back.descendants("ref-list") {
            for r in ref_list.child_elements().filter(|e| e.name == "ref") {
                if let Some(id) = r.attr("id") {
                    references.entry(id.to_string()).or_insert_with(|| parse_ref(r));
                }
            }
        }
    }

    Ok(RawDocument { doc_id, pub_year, paragraphs, references })
}

fn document_id(front: &Element, meta: &Element) -> Option<CitationId> {
    let ids: Vec<(&str, String)> = meta
        .child_elements()
        .filter(|e| e.name == "article-id")
        .map(|e| (e.attr("pub-id-type").unwrap_or(""), e.text().trim().to_string()))
        .collect();
    let find = |types: &[&str]| ids.iter().find(|(t, _)| types.contains(t)).map(|(_, v)| v.clone());

    let mut m = RefMetadata {
        pmid: find(&["pmid"]),
        pmcid: find(&["pmc", "pmcid"]).map(|v| strip_pmc(&v)),
        ..Default::default()
    };
    if m.pmid.is_none() && m.pmcid.is_none() {
        if let Some(name) = meta.first_descendant("contrib").and_then(|c| c.first_descendant("name")) {
            fill_name(&mut m, name);
        }
        m.venue = front
            .first_descendant("journal-title")
            .map(|e| e.text())
            .unwrap_or_default();
        m.year = meta
            .descendants("pub-date")
            .into_iter()
            .filter_map(|d| d.child("year").and_then(|y| first_digits(&y.text())))
            .min();
        m.volume = meta.child("volume").map(|e| e.text()).unwrap_or_default();
        m.first_page = meta.child("fpage").map(|e| e.text()).unwrap_or_default();
    }
    resolve_identifier(&m).ok()
}

fn strip_pmc(v: &str) -> String {
    let v = v.trim();
    match v.get(..3) {
        Some(p) if p.eq_ignore_ascii_case("pmc") => v[3..].to_string(),
        _ => v.to_string(),
    }
}

fn fill_name(m: &mut RefMetadata, name: &Element) {
    m.first_author_surname = name.child("surname").map(|e| e.text()).unwrap_or_default();
    m.first_author_given = name.child("given-names").map(|e| e.text()).unwrap_or_default();
}

fn parse_ref(r: &Element) -> RefMetadata {
    let cit = r
        .child_elements()
        .find(|e| matches!(e.name.as_str(), "element-citation" | "mixed-citation" | "citation"));
    let Some(cit) = cit else {
        return RefMetadata::default();
    };
    let mut m = RefMetadata::default();
    for pid in cit.descendants("pub-id") {
        let v = pid.text().trim().to_string();
        match pid.attr("pub-id-type") {
            Some("pmid") if m.pmid.is_none() => m.pmid = Some(v),
            Some("pmcid" | "pmc") if m.pmcid.is_none() => m.pmcid = Some(strip_pmc(&v)),
            _ => {}
        }
    }
    let groups = cit.descendants("person-group");
    let author_group = groups
        .iter()
        .find(|g| g.attr("person-group-type").is_none_or(|t| t == "author"))
        .copied();
    let first_name = match author_group {
        Some(g) => g.child_elements().find(|e| e.name == "name" || e.name == "string-name"),
        None => cit.child_elements().find(|e| e.name == "name" || e.name == "string-name"),
    };
    if let Some(name) = first_name {
        fill_name(&mut m, name);
    }
    let field = |n: &str| cit.first_descendant(n).map(|e| e.text()).unwrap_or_default();
    m.venue = field("source");
    m.year = cit.first_descendant("year").and_then(|y| first_digits(&y.text()));
    m.volume = field("volume");
    m.first_page = field("fpage");
    m
}

fn collect_paragraphs(el: &Element, out: &mut Vec<Vec<Segment>>) {
    for child in el.child_elements() {
        if is_skipped(&child.name) {
            continue;
        }
        if child.name == "p" {
            let mut segs = Vec::new();
            collect_segments(child, &mut segs);
            out.push(segs);
        } else {
            collect_paragraphs(child, out);
        }
    }
}

fn push_text_segment(segs: &mut Vec<Segment>, t: &str) {
    if let Some(Segment::Text(prev)) = segs.last_mut() {
        prev.push_str(t);
    } else {
        segs.push(Segment::Text(t.to_string()));
    }
}

fn collect_segments(el: &Element, segs: &mut Vec<Segment>) {
    for node in &el.children {
        match node {
            Node::Text(t) => push_text_segment(segs, t),
            Node::Element(e) if e.name == "xref" && e.attr("ref-type") == Some("bibr") => {
                for rid in e.attr("rid").unwrap_or("").split_whitespace() {
                    segs.push(Segment::Marker(rid.to_string()));
                }
            }
            Node::Element(e) if is_skipped(&e.name) => {}
            Node::Element(e) => collect_segments(e, segs),
        }
    }
}

/// Turns citing paragraphs into spans with `⟦CITE:kind:value⟧` placeholders.
///
/// Markers that are dangling or unidentifiable are removed from the text;
/// paragraphs without a resolvable marker are dropped.
pub fn extract_citing_spans(doc: &RawDocument) -> Vec<CitingSpan> {
    let resolved: BTreeMap<&str, CitationId> = doc
        .references
        .iter()
        .filter_map(|(rid, m)| resolve_identifier(m).ok().map(|id| (rid.as_str(), id)))
        .collect();

    let mut spans = Vec::new();
    for para in &doc.paragraphs {
        let mut text = String::new();
        let mut placeholders = 0;
        for seg in para {
            match seg {
                Segment::Text(t) => text.push_str(t),
                Segment::Marker(rid) => {
                    if let Some(id) = resolved.get(rid.as_str()) {
                        text.push(' ');
                        text.push_str(&id.placeholder());
                        text.push(' ');
                        placeholders += 1;
                    }
                }
            }
        }
        if placeholders == 0 {
            continue;
        }
        let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
        spans.push(CitingSpan { doc_id: doc.doc_id.clone(), pub_year: doc.pub_year, text });
    }
    spans
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(given: &str, surname: &str, venue: &str, year: i32, vol: &str, page: &str) -> RefMetadata {
        RefMetadata {
            first_author_given: given.into(),
            first_author_surname: surname.into(),
            venue: venue.into(),
            year: Some(year),
            volume: vol.into(),
            first_page: page.into(),
            pmid: None,
            pmcid: None,
        }
    }

    #[test]
    fn meta_key_basic() {
        let m = meta("Jane", "Doe", "Cell", 2006, "127", "635");
        assert_eq!(build_meta_key(&m).unwrap(), "janedoe_cell_2006_127_635");
    }

    #[test]
    fn meta_key_folds_diacritics_and_punctuation() {
        let m = meta("Jane", "Müller", "J. Biol. Chem.", 1999, "274 ", "e12");
        assert_eq!(build_meta_key(&m).unwrap(), "janemuller_jbiolchem_1999_274_e12");
    }

    #[test]
    fn meta_key_missing_component() {
        let m = meta("Jane", "Doe", "", 2006, "127", "635");
        assert_eq!(build_meta_key(&m), Err(Unidentifiable));
        let mut m = meta("Jane", "Doe", "Cell", 2006, "127", "635");
        m.year = None;
        assert_eq!(build_meta_key(&m), Err(Unidentifiable));
        let m = meta("", "", "Cell", 2006, "127", "635");
        assert_eq!(build_meta_key(&m), Err(Unidentifiable));
    }

    #[test]
    fn identifier_precedence() {
        let mut m = meta("Jane", "Doe", "Cell", 2006, "127", "635");
        m.pmid = Some("17081983".into());
        m.pmcid = Some("123".into());
        assert_eq!(resolve_identifier(&m).unwrap(), CitationId::pmid("17081983").unwrap());
        m.pmid = None;
        assert_eq!(resolve_identifier(&m).unwrap().kind(), CitationKind::Pmcid);
        m.pmcid = None;
        assert_eq!(resolve_identifier(&m).unwrap().kind(), CitationKind::MetaKey);
        m.venue.clear();
        assert_eq!(resolve_identifier(&m), Err(Unidentifiable));
    }

    #[test]
    fn citation_id_text_forms() {
        let id: CitationId = "17081983".parse().unwrap();
        assert_eq!(id.to_string(), "pmid:17081983");
        assert_eq!(id.token_surface(), "CITE:pmid:17081983");
        assert_eq!(CitationId::from_token_surface("CITE:pmcid:42").unwrap().kind(), CitationKind::Pmcid);
        assert!("pmid:12a".parse::<CitationId>().is_err());
        assert!("meta:a_b_c".parse::<CitationId>().is_err());
        assert!("meta:janedoe_cell_2006_127_635".parse::<CitationId>().is_ok());
    }

    const DOC: &str = r#"<?xml version="1.0"?>
<article>
  <front><article-meta>
    <article-id pub-id-type="pmid">999</article-id>
    <pub-date pub-type="ppub"><year>2012</year></pub-date>
    <pub-date pub-type="epub"><year>2011</year></pub-date>
  </article-meta></front>
  <body>
    <p>Kinases act <xref ref-type="bibr" rid="r1">1</xref>, <xref ref-type="bibr" rid="r2">2</xref> and
       others <xref ref-type="bibr" rid="r3">3</xref>. See <xref ref-type="fig" rid="f1">Fig. 1</xref>.</p>
    <p>Nothing cited here &amp; there.</p>
  </body>
  <back><ref-list>
    <ref id="r1"><element-citation><pub-id pub-id-type="pmid">17081983</pub-id></element-citation></ref>
    <ref id="r2"><mixed-citation><person-group person-group-type="author"><name><surname>Doe</surname><given-names>Jane</given-names></name></person-group>
      <source>Cell</source> <year>2006</year>; <volume>127</volume>: <fpage>635</fpage></mixed-citation></ref>
    <ref id="r3"><element-citation><source>Nowhere</source></element-citation></ref>
  </ref-list></back>
</article>"#;

    #[test]
    fn parse_and_extract() {
        let doc = parse_document(DOC.as_bytes()).unwrap();
        assert_eq!(doc.pub_year, 2011);
        assert_eq!(doc.doc_id.to_string(), "pmid:999");
        assert_eq!(doc.paragraphs.len(), 2);
        assert_eq!(doc.marker_count(), 3);
        assert_eq!(doc.references.len(), 3);
        assert!(doc.dangling_markers().is_empty());
        let spans = extract_citing_spans(&doc);
        assert_eq!(spans.len(), 1);
        assert_eq!(
            spans[0].text,
            "Kinases act ⟦CITE:pmid:17081983⟧ , ⟦CITE:meta:janedoe_cell_2006_127_635⟧ and others . See Fig. 1."
        );
    }

    #[test]
    fn truncated_xml_is_malformed() {
        let cut = &DOC.as_bytes()[..DOC.len() / 2];
        assert!(matches!(parse_document(cut), Err(CorpusError::MalformedXml(_))));
    }

    #[test]
    fn missing_body() {
        let xml = r#"<article><front><article-meta><article-id pub-id-type="pmid">1</article-id>
            <pub-date><year>2010</year></pub-date></article-meta></front></article>"#;
        assert!(matches!(parse_document(xml.as_bytes()), Err(CorpusError::MissingBody)));
    }

    #[test]
    fn empty_ref_list_makes_every_marker_dangling() {
        let xml = r#"<article><front><article-meta><article-id pub-id-type="pmc">PMC77</article-id>
            <pub-date><year>2010</year></pub-date></article-meta></front>
            <body><p>A <xref ref-type="bibr" rid="b1"/> B <xref ref-type="bibr" rid="b2 b3">2,3</xref>.</p></body>
            <back><ref-list/></back></article>"#;
        let doc = parse_document(xml.as_bytes()).unwrap();
        assert_eq!(doc.doc_id.to_string(), "pmcid:77");
        assert!(doc.references.is_empty());
        assert_eq!(doc.dangling_markers(), vec!["b1", "b2", "b3"]);
        assert!(extract_citing_spans(&doc).is_empty());
    }

    #[test]
    fn span_tsv_round_trip() {
        let span = CitingSpan {
            doc_id: CitationId::pmid("5").unwrap(),
            pub_year: 2014,
            text: "a\tb\nc ⟦CITE:pmid:1⟧".into(),
        };
        let line = span.to_tsv_line();
        assert_eq!(line, "pmid:5\t2014\ta b c ⟦CITE:pmid:1⟧");
        let back = CitingSpan::from_tsv_line(&line, 1).unwrap();
        assert_eq!(back.text, "a b c ⟦CITE:pmid:1⟧");
    }

    proptest::proptest! {
        #[test]
        fn key_normalization_is_idempotent(s in "\\PC{0,24}") {
            let once = normalize_key_component(&s);
            proptest::prop_assert_eq!(normalize_key_component(&once), once);
        }

        #[test]
        fn pmid_always_wins(pmid in "[0-9]{1,9}", venue in "[a-zA-Z ]{0,8}", pmc in proptest::option::of("[0-9]{1,6}")) {
            let m = RefMetadata { pmid: Some(pmid.clone()), pmcid: pmc, venue, ..Default::default() };
            let id = resolve_identifier(&m).unwrap();
            proptest::prop_assert_eq!(id.kind(), CitationKind::Pmid);
            proptest::prop_assert_eq!(id.value(), pmid.as_str());
        }
    }
}
