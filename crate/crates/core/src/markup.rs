//! A small owned element tree shared by the XML and HTML front ends.
//!
//! Both parsers lower their input into [`Element`] so that table walking is
//! written once. Element and attribute names are stored lower-cased and
//! keep any namespace prefix (`ce:table`); lookups accept either the
//! qualified or the local name.

use quick_xml::events::Event;
use quick_xml::Reader;
use scraper::Html;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Element(Element),
    Text(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Element {
    pub name: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<Node>,
}

fn local(name: &str) -> &str {
    name.rsplit_once(':').map_or(name, |(_, l)| l)
}

/// True when `name` equals `wanted`, or when `wanted` carries no prefix and
/// equals the local part of `name`.
pub fn name_matches(name: &str, wanted: &str) -> bool {
    if name.eq_ignore_ascii_case(wanted) {
        return true;
    }
    !wanted.contains(':') && local(name).eq_ignore_ascii_case(wanted)
}

impl Element {
    pub fn new(name: impl Into<String>) -> Self {
        Element {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn is_any(&self, names: &[String]) -> bool {
        names.iter().any(|n| name_matches(&self.name, n))
    }

    pub fn attr(&self, wanted: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| name_matches(k, wanted))
            .map(|(_, v)| v.as_str())
    }

    pub fn child_elements(&self) -> impl Iterator<Item = &Element> {
        self.children.iter().filter_map(|c| match c {
            Node::Element(e) => Some(e),
            Node::Text(_) => None,
        })
    }

    /// Pre-order walk over descendant elements that match `names`, not
    /// descending into a match and never crossing an element that matches
    /// `stop`.
    pub fn find_outermost<'a>(&'a self, names: &[String], stop: &[String], out: &mut Vec<&'a Element>) {
        for child in self.child_elements() {
            if child.is_any(names) {
                out.push(child);
            } else if !child.is_any(stop) {
                child.find_outermost(names, stop, out);
            }
        }
    }

    /// Text content with every element boundary treated as a word break and
    /// all whitespace runs collapsed to a single space.
    pub fn flat_text(&self) -> String {
        let mut raw = String::new();
        self.collect_text(&mut raw);
        collapse_whitespace(&raw)
    }

    fn collect_text(&self, out: &mut String) {
        for child in &self.children {
            match child {
                Node::Text(t) => out.push_str(t),
                Node::Element(e) => {
                    out.push(' ');
                    e.collect_text(out);
                    out.push(' ');
                }
            }
        }
    }
}

pub fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split(char::is_whitespace).filter(|w| !w.is_empty()) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct MarkupError(pub String);

fn entity(name: &str) -> Option<&'static str> {
    Some(match name {
        "lt" => "<",
        "gt" => ">",
        "amp" => "&",
        "apos" => "'",
        "quot" => "\"",
        "nbsp" => "\u{a0}",
        "thinsp" => "\u{2009}",
        "ensp" => "\u{2002}",
        "emsp" => "\u{2003}",
        "plusmn" | "pm" => "±",
        "minus" => "−",
        "ndash" => "–",
        "mdash" => "—",
        "times" => "×",
        "middot" | "centerdot" => "·",
        "sdot" => "⋅",
        "micro" => "µ",
        "deg" => "°",
        "le" => "≤",
        "ge" => "≥",
        "infin" => "∞",
        "alpha" => "α",
        "beta" => "β",
        "gamma" => "γ",
        "delta" => "δ",
        "kappa" => "κ",
        "lambda" => "λ",
        "mu" => "μ",
        "tau" => "τ",
        "sup1" => "¹",
        "sup2" => "²",
        "sup3" => "³",
        "frac12" | "half" => "½",
        "dagger" => "†",
        "Dagger" => "‡",
        "sect" => "§",
        "para" => "¶",
        "prime" => "′",
        "rsquo" => "’",
        "lsquo" => "‘",
        "rdquo" => "”",
        "ldquo" => "“",
        "hellip" => "…",
        "prop" => "∝",
        _ => return None,
    })
}

/// Parse an XML document. Invalid UTF-8 is replaced, not rejected.
pub fn parse_xml(bytes: &[u8]) -> Result<Element, MarkupError> {
    let text = String::from_utf8_lossy(bytes);
    let mut reader = Reader::from_str(&text);
    reader.config_mut().trim_text(false);

    let mut stack: Vec<Element> = vec![Element::new("#document")];
    loop {
        let event = reader
            .read_event()
            .map_err(|e| MarkupError(format!("at byte {}: {e}", reader.buffer_position())))?;
        match event {
            Event::Start(start) => {
                stack.push(element_from_start(&start)?);
            }
            Event::Empty(start) => {
                let el = element_from_start(&start)?;
                push_child(&mut stack, Node::Element(el));
            }
            Event::End(_) => {
                let el = stack.pop().expect("end event always follows a start");
                if stack.is_empty() {
                    return Err(MarkupError("unbalanced end tag".into()));
                }
                push_child(&mut stack, Node::Element(el));
            }
            Event::Text(t) => {
                let s = t
                    .unescape_with(entity)
                    .map_err(|e| MarkupError(format!("bad text escape: {e}")))?;
                push_child(&mut stack, Node::Text(s.into_owned()));
            }
            Event::CData(c) => {
                let s = String::from_utf8_lossy(&c.into_inner()).into_owned();
                push_child(&mut stack, Node::Text(s));
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if stack.len() != 1 {
        let open = &stack[stack.len() - 1].name;
        return Err(MarkupError(format!("unexpected end of input inside <{open}>")));
    }
    let root = stack.pop().unwrap_or_default();
    if root.child_elements().next().is_none() {
        return Err(MarkupError("document has no root element".into()));
    }
    Ok(root)
}

fn element_from_start(start: &quick_xml::events::BytesStart<'_>) -> Result<Element, MarkupError> {
    let name = String::from_utf8_lossy(start.name().as_ref()).to_lowercase();
    let mut el = Element::new(name);
    for attr in start.attributes() {
        let attr = attr.map_err(|e| MarkupError(format!("bad attribute: {e}")))?;
        let key = String::from_utf8_lossy(attr.key.as_ref()).to_lowercase();
        let value = attr
            .unescape_value_with(entity)
            .map_err(|e| MarkupError(format!("bad attribute value: {e}")))?;
        el.attrs.push((key, value.into_owned()));
    }
    Ok(el)
}

fn push_child(stack: &mut [Element], node: Node) {
    if let Some(top) = stack.last_mut() {
        top.children.push(node);
    }
}

/// Parse an HTML document with the browser recovery rules of html5ever.
pub fn parse_html(bytes: &[u8]) -> Element {
    let text = String::from_utf8_lossy(bytes);
    let doc = Html::parse_document(&text);
    let mut root = Element::new("#document");
    for child in doc.tree.root().children() {
        lower_html(child, &mut root);
    }
    root
}

fn lower_html(node: ego_tree::NodeRef<'_, scraper::Node>, parent: &mut Element) {
    match node.value() {
        scraper::Node::Element(e) => {
            let mut el = Element::new(e.name().to_lowercase());
            el.attrs = e
                .attrs()
                .map(|(k, v)| (k.to_lowercase(), v.to_string()))
                .collect();
            for child in node.children() {
                lower_html(child, &mut el);
            }
            parent.children.push(Node::Element(el));
        }
        scraper::Node::Text(t) => parent.children.push(Node::Text(t.to_string())),
        _ => {
            for child in node.children() {
                lower_html(child, parent);
            }
        }
    }
}
