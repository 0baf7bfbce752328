//! Deliberately naive reference implementations used to check the indexed
//! and optimized code paths.

use std::collections::{BTreeMap, HashMap, HashSet};

pub fn naive_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// BM25 computed straight from the raw documents for every query.
pub fn naive_bm25(
    docs: &[(String, String)],
    query: &str,
    k1: f64,
    b: f64,
    min_df: usize,
) -> Vec<(String, f64)> {
    NaiveCorpus::new(docs).bm25(query, k1, b, min_df)
}

/// Documents tokenized once, scored from scratch per query.
pub struct NaiveCorpus {
    keys: Vec<String>,
    toks: Vec<Vec<String>>,
}

impl NaiveCorpus {
    pub fn new(docs: &[(String, String)]) -> Self {
        NaiveCorpus {
            keys: docs.iter().map(|(k, _)| k.clone()).collect(),
            toks: docs.iter().map(|(_, t)| naive_tokens(t)).collect(),
        }
    }

    pub fn bm25(&self, query: &str, k1: f64, b: f64, min_df: usize) -> Vec<(String, f64)> {
        let toks = &self.toks;
        let n = toks.len() as f64;
        let avg = toks.iter().map(Vec::len).sum::<usize>() as f64 / n;
        let terms: Vec<(String, usize)> = naive_tokens(query)
            .into_iter()
            .map(|q| {
                let df = toks.iter().filter(|t| t.contains(&q)).count();
                (q, df)
            })
            .collect();
        let mut out = Vec::new();
        for (i, key) in self.keys.iter().enumerate() {
            let mut score = 0.0;
            for (q, df) in &terms {
                let (q, df) = (q.as_str(), *df);
                if df < min_df.max(1) {
                    continue;
                }
                let tf = toks[i].iter().filter(|t| t.as_str() == q).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                let idf = (1.0 + (n - df as f64 + 0.5) / (df as f64 + 0.5)).ln();
                let len = toks[i].len() as f64;
                score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / avg));
            }
            if score > 0.0 {
                out.push((key.clone(), score));
            }
        }
        out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        out
    }
}

pub fn naive_vocab(docs: &[(String, String)], min_df: usize) -> HashSet<String> {
    let mut df: HashMap<String, usize> = HashMap::new();
    for (_, t) in docs {
        let uniq: HashSet<String> = naive_tokens(t).into_iter().collect();
        for w in uniq {
            *df.entry(w).or_default() += 1;
        }
    }
    df.into_iter().filter(|(_, d)| *d >= min_df).map(|(w, _)| w).collect()
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
    let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Exhaustive top-k by cosine, ties by key.
pub fn brute_knn(rows: &[Vec<f32>], keys: &[String], q: &[f32], k: usize) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> = rows.iter().zip(keys).map(|(r, key)| (key.clone(), cosine(r, q))).collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Symmetric InfoNCE by the textbook definition: mean of the two directional
/// cross-entropies over softmax(sim / τ).
pub fn naive_info_nce(img: &[Vec<f64>], txt: &[Vec<f64>], tau: f64) -> f64 {
    let n = img.len();
    let sim = |i: usize, j: usize| img[i].iter().zip(&txt[j]).map(|(a, b)| a * b).sum::<f64>() / tau;
    let mut i2t = 0.0;
    let mut t2i = 0.0;
    for i in 0..n {
        let row: f64 = (0..n).map(|j| sim(i, j).exp()).sum();
        i2t += -(sim(i, i).exp() / row).ln();
        let col: f64 = (0..n).map(|j| sim(j, i).exp()).sum();
        t2i += -(sim(i, i).exp() / col).ln();
    }
    (i2t + t2i) / (2.0 * n as f64)
}

/// Recall@k by full sort of each query's similarity row.
pub fn naive_recall(queries: &[Vec<f64>], targets: &[Vec<f64>], k: usize) -> f64 {
    let mut hits = 0;
    for (i, q) in queries.iter().enumerate() {
        let mut order: Vec<(usize, f64)> =
            targets.iter().enumerate().map(|(j, t)| (j, q.iter().zip(t).map(|(a, b)| a * b).sum())).collect();
        order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        if order.iter().take(k).any(|(j, _)| *j == i) {
            hits += 1;
        }
    }
    hits as f64 / queries.len() as f64
}

/// Counts recovered from raw nXML by plain string scanning.
#[derive(Debug, Default)]
pub struct NxmlScan {
    pub paragraph_count: usize,
    pub refs_per_figure: BTreeMap<String, usize>,
}

fn between<'a>(s: &'a str, open: &str, close: &str) -> &'a str {
    let start = s.find(open).map(|i| i + open.len()).unwrap_or(0);
    let end = s[start..].find(close).map(|i| start + i).unwrap_or(s.len());
    &s[start..end]
}

fn attr<'a>(tag: &'a str, name: &str) -> Option<&'a str> {
    let key = format!("{name}=\"");
    let i = tag.find(&key)? + key.len();
    Some(&tag[i..i + tag[i..].find('"')?])
}

fn open_at(s: &str, i: usize, name: &str) -> bool {
    let rest = &s[i..];
    rest.starts_with('<')
        && rest[1..].starts_with(name)
        && matches!(rest.as_bytes().get(1 + name.len()), Some(b' ') | Some(b'>'))
}

fn drop_elements(s: &str, names: &[&str]) -> String {
    let mut out = String::new();
    let mut i = 0;
    'outer: while i < s.len() {
        for name in names {
            if open_at(s, i, name) {
                let close = format!("</{name}>");
                i += s[i..].find(&close).expect("closed element") + close.len();
                continue 'outer;
            }
        }
        let c = s[i..].chars().next().unwrap();
        out.push(c);
        i += c.len_utf8();
    }
    out
}

fn decode_entities(s: &str) -> String {
    let mut out = String::new();
    let mut rest = s;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        let end = rest[i..].find(';').map(|e| i + e).expect("entity end");
        let ent = &rest[i + 1..end];
        let c = match ent {
            "amp" => '&',
            "lt" => '<',
            "gt" => '>',
            "quot" => '"',
            "apos" => '\'',
            _ if ent.starts_with("#x") => char::from_u32(u32::from_str_radix(&ent[2..], 16).unwrap()).unwrap(),
            _ if ent.starts_with('#') => char::from_u32(ent[1..].parse().unwrap()).unwrap(),
            _ => '?',
        };
        out.push(c);
        rest = &rest[end + 1..];
    }
    out.push_str(rest);
    out
}

const MARK_OPEN: char = '\u{1}';
const MARK_CLOSE: char = '\u{2}';

/// Paragraph text with each figure xref collapsed to `\u{1}rid\u{2}`.
fn marked_text(par: &str) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < par.len() {
        if open_at(par, i, "xref") {
            let tag_end = i + par[i..].find('>').unwrap();
            let tag = &par[i..=tag_end];
            let close = tag_end + par[tag_end..].find("</xref>").unwrap();
            if attr(tag, "ref-type") == Some("fig") {
                out.push(MARK_OPEN);
                out.push_str(attr(tag, "rid").unwrap());
                out.push(MARK_CLOSE);
            }
            i = close + "</xref>".len();
        } else if par[i..].starts_with('<') {
            i += par[i..].find('>').unwrap() + 1;
        } else {
            let c = par[i..].chars().next().unwrap();
            out.push(c);
            i += c.len_utf8();
        }
    }
    decode_entities(&out)
}

fn sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut i = 0;
    while i < chars.len() {
        cur.push(chars[i]);
        if ".!?".contains(chars[i]) {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            if j > i + 1 && j < chars.len() && chars[j].is_uppercase() {
                out.push(std::mem::take(&mut cur));
                i = j;
                continue;
            }
        }
        i += 1;
    }
    out.push(cur);
    out
}

/// Figure numbers written as `Fig N`, `Fig. N` or `Figure N`, outside xref markers.
fn textual_mentions(sentence: &str) -> Vec<u32> {
    let chars: Vec<char> = sentence.chars().collect();
    let mut found = Vec::new();
    let mut depth = 0;
    let mut i = 0;
    while i < chars.len() {
        match chars[i] {
            MARK_OPEN => depth += 1,
            MARK_CLOSE => depth -= 1,
            _ => {}
        }
        let boundary = i == 0 || !chars[i - 1].is_alphanumeric();
        if depth == 0 && boundary && (chars[i] == 'F' || chars[i] == 'f') && chars[i + 1..].starts_with(&['i', 'g']) {
            let mut j = i + 3;
            if chars.get(j..).unwrap_or(&[]).starts_with(&['u', 'r', 'e']) {
                j += 3;
            } else if chars.get(j) == Some(&'.') {
                j += 1;
            }
            while chars.get(j).is_some_and(|c| c.is_whitespace()) {
                j += 1;
            }
            let digits: String = chars.get(j..).unwrap_or(&[]).iter().take_while(|c| c.is_ascii_digit()).collect();
            if !digits.is_empty() {
                found.push(digits.parse().unwrap());
            }
        }
        i += 1;
    }
    found
}

fn marked_ids(sentence: &str) -> Vec<String> {
    sentence
        .split(MARK_OPEN)
        .skip(1)
        .map(|s| s.split(MARK_CLOSE).next().unwrap().to_string())
        .collect()
}

pub fn scan_nxml(xml: &str) -> NxmlScan {
    let body = between(xml, "<body>", "</body>");
    let mut number_to_id: HashMap<u32, String> = HashMap::new();
    let mut ids = Vec::new();
    let mut rest = body;
    while let Some(i) = rest.find("<fig id=\"") {
        let tag = &rest[i..i + rest[i..].find('>').unwrap()];
        let id = attr(tag, "id").unwrap().to_string();
        let fig = &rest[i..i + rest[i..].find("</fig>").unwrap()];
        let label = between(fig, "<label>", "</label>");
        let n: String = label.chars().filter(char::is_ascii_digit).collect();
        number_to_id.insert(n.parse().unwrap(), id.clone());
        ids.push(id);
        rest = &rest[i + 1..];
    }

    let kept = drop_elements(body, &["fig", "table-wrap", "supplementary-material", "boxed-text"]);
    let mut scan = NxmlScan::default();
    for id in &ids {
        scan.refs_per_figure.insert(id.clone(), 0);
    }
    let mut rest = kept.as_str();
    while let Some(i) = rest.find("<p>") {
        let par = between(&rest[i..], "<p>", "</p>");
        rest = &rest[i + 3..];
        let text = marked_text(par);
        if text.trim().is_empty() {
            continue;
        }
        scan.paragraph_count += 1;
        for s in sentences(&text) {
            let mut figs: HashSet<String> = marked_ids(&s).into_iter().collect();
            figs.extend(textual_mentions(&s).into_iter().filter_map(|n| number_to_id.get(&n).cloned()));
            for f in figs {
                *scan.refs_per_figure.get_mut(&f).unwrap() += 1;
            }
        }
    }
    scan
}
