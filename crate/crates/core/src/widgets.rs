//! HTML emission for structure, layout, style and atom constructs, and the
//! style schemes that parameterize them.
//!
//! Every byte produced here is part of the output contract described in
//! `docs/output-contract.md`. Construct bodies arrive already rendered; any
//! string taken from a page definition or from data is escaped here exactly
//! once.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use thiserror::Error;

use crate::ast::{AstError, AtomKind, AtomSpec, OptionSpec};
use crate::xml::{push_escaped, SourcePos, XmlNode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("duplicate scheme {0:?}")]
    DuplicateScheme(String),
    #[error("{}<Scheme> requires attribute \"name\"", .0.map(|p| format!("{p}: ")).unwrap_or_default())]
    MissingName(Option<SourcePos>),
    #[error("expected root element <Schemes>, found <{0}>")]
    UnexpectedRoot(String),
}

impl SchemeError {
    pub fn pos(&self) -> Option<SourcePos> {
        match self {
            SchemeError::MissingName(pos) => *pos,
            _ => None,
        }
    }
}

/// Engine defaults used for any variable a scheme leaves undefined.
pub const BUILTIN_VARS: [(&str, &str); 5] = [
    ("box.border.color", "#808080"),
    ("page.background", "#ffffff"),
    ("supertitle.color", "#000000"),
    ("text.color", "#000000"),
    ("title.color", "#000000"),
];

/// A named set of global style variables keyed `element.attribute`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StyleScheme {
    pub name: String,
    pub vars: BTreeMap<String, String>,
}

static BUILTIN: LazyLock<StyleScheme> = LazyLock::new(|| StyleScheme {
    name: "builtin".into(),
    vars: BUILTIN_VARS
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect(),
});

impl StyleScheme {
    pub fn builtin() -> &'static StyleScheme {
        &BUILTIN
    }

    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            vars: BTreeMap::new(),
        }
    }

    pub fn with_var(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.vars.insert(key.into(), value.into());
        self
    }

    /// Value of `key`, falling back to the built-in table. Unknown keys with
    /// no built-in default yield `""`.
    pub fn get(&self, key: &str) -> &str {
        self.vars
            .get(key)
            .or_else(|| BUILTIN.vars.get(key))
            .map(String::as_str)
            .unwrap_or("")
    }

    /// The page stylesheet derived from this scheme.
    pub fn stylesheet(&self) -> String {
        let rules = [
            ("body", "background-color", "page.background"),
            (".ooml-text", "color", "text.color"),
            (".ooml-title", "color", "title.color"),
            (".ooml-supertitle", "color", "supertitle.color"),
            (".ooml-panel-title", "color", "title.color"),
        ];
        let mut css = String::from("<style>");
        for (selector, property, key) in rules {
            css.push_str(selector);
            css.push('{');
            css.push_str(property);
            css.push(':');
            push_escaped(&mut css, self.get(key));
            css.push('}');
        }
        css.push_str("</style>");
        css
    }
}

/// Schemes keyed by domain name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SchemeSet {
    schemes: BTreeMap<String, StyleScheme>,
}

impl SchemeSet {
    pub fn get(&self, name: &str) -> Option<&StyleScheme> {
        self.schemes.get(name)
    }

    pub fn len(&self) -> usize {
        self.schemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schemes.is_empty()
    }

    pub fn insert(&mut self, scheme: StyleScheme) -> Result<(), SchemeError> {
        if self.schemes.contains_key(&scheme.name) {
            return Err(SchemeError::DuplicateScheme(scheme.name));
        }
        self.schemes.insert(scheme.name.clone(), scheme);
        Ok(())
    }
}

/// Loads a `<Schemes>` document. Each attribute of an element inside a
/// `<Scheme>` becomes a variable named by the element path and the attribute,
/// so `<box><border color="#ccc"/></box>` sets `box.border.color`.
pub fn load_schemes(xml: &XmlNode) -> Result<SchemeSet, SchemeError> {
    if xml.name != "Schemes" {
        return Err(SchemeError::UnexpectedRoot(xml.name.clone()));
    }
    let mut set = SchemeSet::default();
    for scheme_el in xml.children_named("Scheme") {
        let name = scheme_el
            .attr("name")
            .ok_or(SchemeError::MissingName(scheme_el.pos))?;
        let mut scheme = StyleScheme::new(name);
        let mut stack: Vec<(String, &XmlNode)> = scheme_el
            .children
            .iter()
            .rev()
            .map(|c| (c.name.clone(), c))
            .collect();
        while let Some((prefix, element)) = stack.pop() {
            for (attr, value) in &element.attrs {
                scheme
                    .vars
                    .insert(format!("{prefix}.{attr}"), value.clone());
            }
            for child in element.children.iter().rev() {
                stack.push((format!("{prefix}.{}", child.name), child));
            }
        }
        set.insert(scheme)?;
    }
    Ok(set)
}

/// The scheme for `domain`, else the one named `default`, else the built-in.
pub fn select_scheme<'a>(schemes: &'a SchemeSet, domain: &str) -> &'a StyleScheme {
    schemes
        .get(domain)
        .or_else(|| schemes.get("default"))
        .unwrap_or_else(|| StyleScheme::builtin())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    ListV,
    ListH,
    LeftRight,
}

pub fn render_layout(kind: Layout, cells: &[String]) -> Result<String, AstError> {
    let mut out = String::new();
    match kind {
        Layout::ListV => {
            out.push_str(r#"<table class="ooml-listv">"#);
            for cell in cells {
                out.push_str("<tr><td>");
                out.push_str(cell);
                out.push_str("</td></tr>");
            }
            out.push_str("</table>");
        }
        Layout::ListH => {
            out.push_str(r#"<table class="ooml-listh"><tr>"#);
            for cell in cells {
                out.push_str("<td>");
                out.push_str(cell);
                out.push_str("</td>");
            }
            out.push_str("</tr></table>");
        }
        Layout::LeftRight => {
            let [left, right] = cells else {
                return Err(AstError::Arity {
                    construct: "LeftRight".into(),
                    expected: 2,
                    found: cells.len(),
                    pos: None,
                });
            };
            out.push_str(r#"<table class="ooml-leftright" width="100%"><tr><td align="left">"#);
            out.push_str(left);
            out.push_str(r#"</td><td align="right">"#);
            out.push_str(right);
            out.push_str("</td></tr></table>");
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Text,
    Title,
    SuperTitle,
    Box,
    Panel,
    NoBox,
}

fn push_box(out: &mut String, border: &str, body: &str) {
    out.push_str(r#"<div class="ooml-box" style="border:1px solid "#);
    push_escaped(out, border);
    out.push_str(r#"">"#);
    out.push_str(body);
    out.push_str("</div>");
}

/// Wraps a rendered body in style markup. Colors for text constructs come
/// from the page stylesheet; box borders are inline.
pub fn render_style(
    kind: Style,
    title: Option<&str>,
    body: &str,
    scheme: &StyleScheme,
) -> Result<String, AstError> {
    let mut out = String::new();
    let (open, close) = match kind {
        Style::Text => (r#"<p class="ooml-text">"#, "</p>"),
        Style::Title => (r#"<h2 class="ooml-title">"#, "</h2>"),
        Style::SuperTitle => (r#"<h1 class="ooml-supertitle">"#, "</h1>"),
        Style::Box => {
            push_box(&mut out, scheme.get("box.border.color"), body);
            return Ok(out);
        }
        Style::NoBox => {
            push_box(&mut out, "transparent", body);
            return Ok(out);
        }
        Style::Panel => {
            let title = title.ok_or_else(|| AstError::MissingAttr {
                construct: "Panel".into(),
                attr: "title",
                pos: None,
            })?;
            out.push_str(r#"<div class="ooml-panel-title">"#);
            push_escaped(&mut out, title);
            out.push_str("</div>");
            push_box(&mut out, scheme.get("box.border.color"), body);
            return Ok(out);
        }
    };
    out.push_str(open);
    out.push_str(body);
    out.push_str(close);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Structure<'a> {
    Header,
    Menu,
    MenuItem { link: &'a str },
    Content,
    Footer,
    Form { action: &'a str },
}

pub fn render_structure(kind: &Structure<'_>, body: &str) -> String {
    let mut out = String::new();
    let close = match kind {
        Structure::Header => {
            out.push_str(r#"<div class="ooml-header">"#);
            "</div>"
        }
        Structure::Menu => {
            out.push_str(r#"<div class="ooml-menu">"#);
            "</div>"
        }
        Structure::Content => {
            out.push_str(r#"<div class="ooml-content">"#);
            "</div>"
        }
        Structure::Footer => {
            out.push_str(r#"<div class="ooml-footer">"#);
            "</div>"
        }
        Structure::MenuItem { link } => {
            out.push_str(r#"<a class="ooml-menuitem" href=""#);
            push_escaped(&mut out, link);
            out.push_str(r#"">"#);
            "</a>"
        }
        Structure::Form { action } => {
            out.push_str(r#"<form method="get" action=""#);
            push_escaped(&mut out, action);
            out.push_str(r#"">"#);
            "</form>"
        }
    };
    out.push_str(body);
    out.push_str(close);
    out
}

/// USPS codes for the 50 states and the District of Columbia.
pub const STATE_CODES: [&str; 51] = [
    "AK", "AL", "AR", "AZ", "CA", "CO", "CT", "DC", "DE", "FL", "GA", "HI", "IA", "ID", "IL", "IN",
    "KS", "KY", "LA", "MA", "MD", "ME", "MI", "MN", "MO", "MS", "MT", "NC", "ND", "NE", "NH", "NJ",
    "NM", "NV", "NY", "OH", "OK", "OR", "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VA", "VT", "WA",
    "WI", "WV", "WY",
];

/// The option list an atom renders with: built-in tables for
/// `AtomYesNo`/`AtomSelectState`, the declared `<Option>`s otherwise.
pub fn atom_options(spec: &AtomSpec) -> Vec<OptionSpec> {
    match spec.kind {
        AtomKind::AtomYesNo => vec![OptionSpec::new("Y", "Yes"), OptionSpec::new("N", "No")],
        AtomKind::AtomSelectState => STATE_CODES
            .iter()
            .map(|c| OptionSpec::new(*c, *c))
            .collect(),
        _ => spec.options.clone(),
    }
}

fn push_name(out: &mut String, prop: &str) {
    out.push_str(r#" name=""#);
    push_escaped(out, prop);
    out.push('"');
}

fn push_select(out: &mut String, prop: &str, options: &[OptionSpec], value: &str) {
    out.push_str("<select");
    push_name(out, prop);
    out.push('>');
    for opt in options {
        out.push_str(r#"<option value=""#);
        push_escaped(out, &opt.id);
        out.push('"');
        if opt.id == value {
            out.push_str(r#" selected="selected""#);
        }
        out.push('>');
        push_escaped(out, &opt.label);
        out.push_str("</option>");
    }
    out.push_str("</select>");
}

/// Renders a form control. `value` is the current data value at the atom's
/// prop path; the control's name is the prop path text.
pub fn render_atom(spec: &AtomSpec, value: &str) -> String {
    let mut out = String::new();
    let prop = spec
        .prop
        .as_ref()
        .map(ToString::to_string)
        .unwrap_or_default();
    let decorate = !matches!(spec.kind, AtomKind::AtomHidden | AtomKind::AtomSubmit);
    if decorate {
        if let Some(label) = &spec.label {
            out.push_str("<em>");
            push_escaped(&mut out, label);
            out.push_str("</em><br>");
        }
    }
    match spec.kind {
        AtomKind::AtomInputField | AtomKind::AtomHidden => {
            let kind = if spec.kind == AtomKind::AtomHidden {
                "hidden"
            } else {
                "text"
            };
            out.push_str(r#"<input type=""#);
            out.push_str(kind);
            out.push('"');
            push_name(&mut out, &prop);
            out.push_str(r#" value=""#);
            push_escaped(&mut out, value);
            out.push_str(r#"">"#);
        }
        AtomKind::AtomPassword => {
            out.push_str(r#"<input type="password""#);
            push_name(&mut out, &prop);
            out.push('>');
        }
        AtomKind::AtomTextArea => {
            out.push_str("<textarea");
            push_name(&mut out, &prop);
            out.push('>');
            push_escaped(&mut out, value);
            out.push_str("</textarea>");
        }
        AtomKind::AtomCheckBox => {
            out.push_str(r#"<input type="checkbox""#);
            push_name(&mut out, &prop);
            out.push_str(r#" value="Y""#);
            if value == "Y" {
                out.push_str(r#" checked="checked""#);
            }
            out.push('>');
        }
        AtomKind::AtomSubmit => out.push_str(&render_submit(spec.label.as_deref().unwrap_or(""))),
        AtomKind::DropDownList | AtomKind::AtomYesNo | AtomKind::AtomSelectState => {
            push_select(&mut out, &prop, &atom_options(spec), value)
        }
        AtomKind::RadioList => {
            for opt in &spec.options {
                out.push_str(r#"<input type="radio""#);
                push_name(&mut out, &prop);
                out.push_str(r#" value=""#);
                push_escaped(&mut out, &opt.id);
                out.push('"');
                if opt.id == value {
                    out.push_str(r#" checked="checked""#);
                }
                out.push('>');
                push_escaped(&mut out, &opt.label);
            }
        }
    }
    out
}

pub fn render_submit(label: &str) -> String {
    let mut out = String::from(r#"<input type="submit" value=""#);
    push_escaped(&mut out, label);
    out.push_str(r#"">"#);
    out
}
