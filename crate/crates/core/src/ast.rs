//! The OOML construct tree: compilation from XML, page and macro tables, and
//! a lint pass over a loaded site.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::path::DotPath;
use crate::xml::{SourcePos, XmlNode};

fn loc(pos: &Option<SourcePos>) -> String {
    pos.map(|p| format!("{p}: ")).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AstError {
    #[error("{}unknown construct <{name}>", loc(pos))]
    UnknownConstruct {
        name: String,
        pos: Option<SourcePos>,
    },
    #[error("{}<{construct}> requires attribute {attr:?}", loc(pos))]
    MissingAttr {
        construct: String,
        attr: &'static str,
        pos: Option<SourcePos>,
    },
    #[error("{}<{construct} {attr}={path:?}> is not a valid dot path", loc(pos))]
    BadPath {
        construct: String,
        attr: &'static str,
        path: String,
        pos: Option<SourcePos>,
    },
    #[error(
        "{}<{construct}> expects exactly {expected} sub-elements, found {found}",
        loc(pos)
    )]
    Arity {
        construct: String,
        expected: usize,
        found: usize,
        pos: Option<SourcePos>,
    },
    #[error("{}<{construct}> does not accept content here", loc(pos))]
    UnexpectedContent {
        construct: String,
        pos: Option<SourcePos>,
    },
    #[error("{}macro definitions cannot be nested inside a body", loc(pos))]
    NestedMacro { pos: Option<SourcePos> },
    #[error("{}duplicate option id {id:?}", loc(pos))]
    DuplicateOption { id: String, pos: Option<SourcePos> },
    #[error("{}expected root element <{expected}>, found <{found}>", loc(pos))]
    UnexpectedRoot {
        expected: &'static str,
        found: String,
        pos: Option<SourcePos>,
    },
    #[error("duplicate page {0:?}")]
    DuplicatePage(String),
    #[error("duplicate macro {0:?}")]
    DuplicateMacro(String),
}

impl AstError {
    pub fn pos(&self) -> Option<SourcePos> {
        match self {
            AstError::UnknownConstruct { pos, .. }
            | AstError::MissingAttr { pos, .. }
            | AstError::BadPath { pos, .. }
            | AstError::Arity { pos, .. }
            | AstError::UnexpectedContent { pos, .. }
            | AstError::NestedMacro { pos }
            | AstError::DuplicateOption { pos, .. }
            | AstError::UnexpectedRoot { pos, .. } => *pos,
            AstError::DuplicatePage(_) | AstError::DuplicateMacro(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomKind {
    AtomInputField,
    AtomPassword,
    AtomHidden,
    AtomTextArea,
    AtomSelectState,
    AtomYesNo,
    DropDownList,
    RadioList,
    AtomCheckBox,
    AtomSubmit,
}

impl AtomKind {
    pub const ALL: [AtomKind; 10] = [
        AtomKind::AtomInputField,
        AtomKind::AtomPassword,
        AtomKind::AtomHidden,
        AtomKind::AtomTextArea,
        AtomKind::AtomSelectState,
        AtomKind::AtomYesNo,
        AtomKind::DropDownList,
        AtomKind::RadioList,
        AtomKind::AtomCheckBox,
        AtomKind::AtomSubmit,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            AtomKind::AtomInputField => "AtomInputField",
            AtomKind::AtomPassword => "AtomPassword",
            AtomKind::AtomHidden => "AtomHidden",
            AtomKind::AtomTextArea => "AtomTextArea",
            AtomKind::AtomSelectState => "AtomSelectState",
            AtomKind::AtomYesNo => "AtomYesNo",
            AtomKind::DropDownList => "DropDownList",
            AtomKind::RadioList => "RadioList",
            AtomKind::AtomCheckBox => "AtomCheckBox",
            AtomKind::AtomSubmit => "AtomSubmit",
        }
    }

    /// Accepts the atom tag names plus `InputField`, the spelling used in
    /// page listings for `AtomInputField`.
    pub fn from_tag(tag: &str) -> Option<Self> {
        if tag == "InputField" {
            return Some(AtomKind::AtomInputField);
        }
        Self::ALL.into_iter().find(|k| k.tag() == tag)
    }

    /// Kinds whose options come from `<Option>` children.
    pub fn takes_options(self) -> bool {
        matches!(self, AtomKind::DropDownList | AtomKind::RadioList)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptionSpec {
    pub id: String,
    pub label: String,
}

impl OptionSpec {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomSpec {
    pub kind: AtomKind,
    pub label: Option<String>,
    /// Data path and CGI name of the control. Absent only for `AtomSubmit`.
    pub prop: Option<DotPath>,
    pub options: Vec<OptionSpec>,
}

/// A compiled construct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OomlNode {
    Page {
        name: String,
        body: Vec<OomlNode>,
    },
    Header(Vec<OomlNode>),
    Menu(Vec<OomlNode>),
    MenuItem {
        link: String,
        body: Vec<OomlNode>,
    },
    Content(Vec<OomlNode>),
    Footer(Vec<OomlNode>),
    Title(Vec<OomlNode>),
    SuperTitle(Vec<OomlNode>),
    Text(Vec<OomlNode>),
    Form {
        action: String,
        body: Vec<OomlNode>,
    },
    Submit {
        label: String,
    },
    /// `args` is the `<Call>` element itself with its attributes removed: a
    /// virtual parent for `<Param>` lookups and the forest `<Continue/>`
    /// interprets. It stays uncompiled.
    Call {
        name: String,
        args: XmlNode,
    },
    Param(DotPath),
    Continue,
    Value(DotPath),
    Ifeq {
        select: DotPath,
        value: String,
        body: Vec<OomlNode>,
    },
    Ifne {
        select: DotPath,
        value: String,
        body: Vec<OomlNode>,
    },
    Block {
        base: DotPath,
        body: Vec<OomlNode>,
    },
    ForEach {
        select: DotPath,
        body: Vec<OomlNode>,
    },
    ListV(Vec<OomlNode>),
    ListH(Vec<OomlNode>),
    LeftRight(Box<OomlNode>, Box<OomlNode>),
    Box(Vec<OomlNode>),
    Panel {
        title: String,
        body: Vec<OomlNode>,
    },
    NoBox(Vec<OomlNode>),
    Atom(AtomSpec),
    RawText(String),
}

impl OomlNode {
    /// Tag name of the construct, used in diagnostics and error trails.
    pub fn tag(&self) -> &'static str {
        match self {
            OomlNode::Page { .. } => "Page",
            OomlNode::Header(_) => "Header",
            OomlNode::Menu(_) => "Menu",
            OomlNode::MenuItem { .. } => "MenuItem",
            OomlNode::Content(_) => "Content",
            OomlNode::Footer(_) => "Footer",
            OomlNode::Title(_) => "Title",
            OomlNode::SuperTitle(_) => "SuperTitle",
            OomlNode::Text(_) => "Text",
            OomlNode::Form { .. } => "Form",
            OomlNode::Submit { .. } => "Submit",
            OomlNode::Call { .. } => "Call",
            OomlNode::Param(_) => "Param",
            OomlNode::Continue => "Continue",
            OomlNode::Value(_) => "Value",
            OomlNode::Ifeq { .. } => "Ifeq",
            OomlNode::Ifne { .. } => "Ifne",
            OomlNode::Block { .. } => "Block",
            OomlNode::ForEach { .. } => "ForEach",
            OomlNode::ListV(_) => "ListV",
            OomlNode::ListH(_) => "ListH",
            OomlNode::LeftRight(..) => "LeftRight",
            OomlNode::Box(_) => "Box",
            OomlNode::Panel { .. } => "Panel",
            OomlNode::NoBox(_) => "NoBox",
            OomlNode::Atom(spec) => spec.kind.tag(),
            OomlNode::RawText(_) => "#text",
        }
    }

    /// Child constructs evaluated as this node's body. Empty for leaves and
    /// for `LeftRight`, whose two parts are held separately.
    pub fn body(&self) -> &[OomlNode] {
        match self {
            OomlNode::Page { body, .. }
            | OomlNode::MenuItem { body, .. }
            | OomlNode::Form { body, .. }
            | OomlNode::Ifeq { body, .. }
            | OomlNode::Ifne { body, .. }
            | OomlNode::Block { body, .. }
            | OomlNode::ForEach { body, .. }
            | OomlNode::Panel { body, .. }
            | OomlNode::Header(body)
            | OomlNode::Menu(body)
            | OomlNode::Content(body)
            | OomlNode::Footer(body)
            | OomlNode::Title(body)
            | OomlNode::SuperTitle(body)
            | OomlNode::Text(body)
            | OomlNode::ListV(body)
            | OomlNode::ListH(body)
            | OomlNode::Box(body)
            | OomlNode::NoBox(body) => body,
            _ => &[],
        }
    }

    /// Converts back to the XML form `compile` accepts.
    pub fn to_xml(&self) -> XmlNode {
        fn with_body(node: XmlNode, body: &[OomlNode]) -> XmlNode {
            let mut node = node;
            for child in body {
                match child {
                    OomlNode::RawText(t) if node.children.is_empty() && node.text.is_empty() => {
                        node.text = t.clone()
                    }
                    OomlNode::RawText(t) => {
                        if !node.text.is_empty() {
                            node.text.push(' ');
                        }
                        node.text.push_str(t);
                    }
                    other => node.children.push(other.to_xml()),
                }
            }
            node
        }
        let el = XmlNode::new(self.tag());
        match self {
            OomlNode::Page { name, body } => with_body(el.with_attr("name", name), body),
            OomlNode::MenuItem { link, body } => with_body(el.with_attr("link", link), body),
            OomlNode::Form { action, body } => with_body(el.with_attr("action", action), body),
            OomlNode::Submit { label } => el.with_attr("label", label),
            OomlNode::Call { name, args } => {
                let mut call = args.clone();
                call.name = "Call".into();
                call.attrs.insert(0, ("macro".into(), name.clone()));
                call
            }
            OomlNode::Param(select) | OomlNode::Value(select) => {
                el.with_attr("select", select.to_string())
            }
            OomlNode::Continue => el,
            OomlNode::Ifeq {
                select,
                value,
                body,
            }
            | OomlNode::Ifne {
                select,
                value,
                body,
            } => with_body(
                el.with_attr("select", select.to_string())
                    .with_attr("value", value),
                body,
            ),
            OomlNode::Block { base, body } => {
                with_body(el.with_attr("base", base.to_string()), body)
            }
            OomlNode::ForEach { select, body } => {
                with_body(el.with_attr("select", select.to_string()), body)
            }
            OomlNode::LeftRight(left, right) => {
                with_body(el, &[(**left).clone(), (**right).clone()])
            }
            OomlNode::Panel { title, body } => with_body(el.with_attr("title", title), body),
            OomlNode::Atom(spec) => {
                let mut el = el;
                if let Some(label) = &spec.label {
                    el.set_attr("label", label);
                }
                if let Some(prop) = &spec.prop {
                    el.set_attr("prop", prop.to_string());
                }
                for opt in &spec.options {
                    el.children.push(
                        XmlNode::new("Option")
                            .with_attr("id", &opt.id)
                            .with_attr("label", &opt.label),
                    );
                }
                el
            }
            OomlNode::RawText(t) => XmlNode::new("Text").with_text(t),
            _ => with_body(el, self.body()),
        }
    }
}

impl fmt::Display for OomlNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::xml::serialize_xml(&self.to_xml()))
    }
}

fn required<'a>(xml: &'a XmlNode, attr: &'static str) -> Result<&'a str, AstError> {
    xml.attr(attr).ok_or_else(|| AstError::MissingAttr {
        construct: xml.name.clone(),
        attr,
        pos: xml.pos,
    })
}

fn path_attr(xml: &XmlNode, attr: &'static str) -> Result<DotPath, AstError> {
    let raw = required(xml, attr)?;
    DotPath::parse(raw).map_err(|_| AstError::BadPath {
        construct: xml.name.clone(),
        attr,
        path: raw.to_string(),
        pos: xml.pos,
    })
}

fn no_content(xml: &XmlNode) -> Result<(), AstError> {
    if xml.children.is_empty() && xml.text.is_empty() {
        Ok(())
    } else {
        Err(AstError::UnexpectedContent {
            construct: xml.name.clone(),
            pos: xml.pos,
        })
    }
}

/// Compiles the text and child elements of `xml` into a body. The element's
/// text, if any, comes first.
pub fn compile_body(xml: &XmlNode) -> Result<Vec<OomlNode>, AstError> {
    let mut body = Vec::with_capacity(xml.children.len() + 1);
    if !xml.text.is_empty() {
        body.push(OomlNode::RawText(xml.text.clone()));
    }
    for child in &xml.children {
        body.push(compile(child)?);
    }
    Ok(body)
}

/// Compiles one construct element. `<Call>` argument forests are kept raw.
pub fn compile(xml: &XmlNode) -> Result<OomlNode, AstError> {
    let body = || compile_body(xml);
    let node = match xml.name.as_str() {
        "Page" => OomlNode::Page {
            name: required(xml, "name")?.to_string(),
            body: body()?,
        },
        "Header" => OomlNode::Header(body()?),
        "Menu" => OomlNode::Menu(body()?),
        "MenuItem" => OomlNode::MenuItem {
            link: required(xml, "link")?.to_string(),
            body: body()?,
        },
        "Content" => OomlNode::Content(body()?),
        "Footer" => OomlNode::Footer(body()?),
        "Title" => OomlNode::Title(body()?),
        "SuperTitle" => OomlNode::SuperTitle(body()?),
        "Text" => OomlNode::Text(body()?),
        "Form" => OomlNode::Form {
            action: required(xml, "action")?.to_string(),
            body: body()?,
        },
        "Submit" => {
            no_content(xml)?;
            OomlNode::Submit {
                label: required(xml, "label")?.to_string(),
            }
        }
        "Call" => {
            let name = required(xml, "macro")?.to_string();
            let mut args = xml.clone();
            args.attrs.clear();
            OomlNode::Call { name, args }
        }
        "Param" => {
            no_content(xml)?;
            OomlNode::Param(path_attr(xml, "select")?)
        }
        "Continue" => {
            no_content(xml)?;
            OomlNode::Continue
        }
        "Value" => {
            no_content(xml)?;
            OomlNode::Value(path_attr(xml, "select")?)
        }
        "Ifeq" | "Ifne" => {
            let select = path_attr(xml, "select")?;
            let value = required(xml, "value")?.to_string();
            let body = body()?;
            if xml.name == "Ifeq" {
                OomlNode::Ifeq {
                    select,
                    value,
                    body,
                }
            } else {
                OomlNode::Ifne {
                    select,
                    value,
                    body,
                }
            }
        }
        "Block" => OomlNode::Block {
            base: path_attr(xml, "base")?,
            body: body()?,
        },
        "ForEach" => OomlNode::ForEach {
            select: path_attr(xml, "select")?,
            body: body()?,
        },
        "ListV" => OomlNode::ListV(body()?),
        "ListH" => OomlNode::ListH(body()?),
        "LeftRight" => {
            let mut parts = body()?;
            if parts.len() != 2 {
                return Err(AstError::Arity {
                    construct: xml.name.clone(),
                    expected: 2,
                    found: parts.len(),
                    pos: xml.pos,
                });
            }
            let right = parts.pop().unwrap();
            let left = parts.pop().unwrap();
            OomlNode::LeftRight(Box::new(left), Box::new(right))
        }
        "Box" => OomlNode::Box(body()?),
        "Panel" => OomlNode::Panel {
            title: required(xml, "title")?.to_string(),
            body: body()?,
        },
        "NoBox" => OomlNode::NoBox(body()?),
        "Macro" => return Err(AstError::NestedMacro { pos: xml.pos }),
        other => match AtomKind::from_tag(other) {
            Some(kind) => OomlNode::Atom(compile_atom(kind, xml)?),
            None => {
                return Err(AstError::UnknownConstruct {
                    name: other.to_string(),
                    pos: xml.pos,
                })
            }
        },
    };
    Ok(node)
}

fn compile_atom(kind: AtomKind, xml: &XmlNode) -> Result<AtomSpec, AstError> {
    let prop = match kind {
        AtomKind::AtomSubmit => None,
        _ => Some(path_attr(xml, "prop")?),
    };
    let label = match kind {
        AtomKind::AtomSubmit => Some(required(xml, "label")?.to_string()),
        _ => xml.attr("label").map(str::to_string),
    };
    if !xml.text.is_empty() {
        return Err(AstError::UnexpectedContent {
            construct: xml.name.clone(),
            pos: xml.pos,
        });
    }
    let mut options: Vec<OptionSpec> = Vec::new();
    for child in &xml.children {
        if child.name != "Option" || !kind.takes_options() {
            return Err(AstError::UnexpectedContent {
                construct: xml.name.clone(),
                pos: child.pos,
            });
        }
        let id = required(child, "id")?.to_string();
        let label = child.attr("label").unwrap_or(&id).to_string();
        if options.iter().any(|o| o.id == id) {
            return Err(AstError::DuplicateOption { id, pos: child.pos });
        }
        options.push(OptionSpec { id, label });
    }
    Ok(AtomSpec {
        kind,
        label,
        prop,
        options,
    })
}

/// Page definitions keyed by page name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PageSet {
    pages: BTreeMap<String, Vec<OomlNode>>,
}

impl PageSet {
    pub fn get(&self, name: &str) -> Option<&[OomlNode]> {
        self.pages.get(name).map(Vec::as_slice)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.pages.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[OomlNode])> {
        self.pages.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.pages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pages.is_empty()
    }

    pub fn insert(&mut self, name: String, body: Vec<OomlNode>) -> Result<(), AstError> {
        if self.pages.contains_key(&name) {
            return Err(AstError::DuplicatePage(name));
        }
        self.pages.insert(name, body);
        Ok(())
    }
}

/// Macro bodies keyed by macro name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MacroTable {
    macros: BTreeMap<String, Vec<OomlNode>>,
}

impl MacroTable {
    pub fn get(&self, name: &str) -> Option<&[OomlNode]> {
        self.macros.get(name).map(Vec::as_slice)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.macros.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[OomlNode])> {
        self.macros.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.macros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.macros.is_empty()
    }

    pub fn insert(&mut self, name: String, body: Vec<OomlNode>) -> Result<(), AstError> {
        if self.macros.contains_key(&name) {
            return Err(AstError::DuplicateMacro(name));
        }
        self.macros.insert(name, body);
        Ok(())
    }

    /// Moves every macro of `other` into `self`; names must not collide.
    pub fn merge(&mut self, other: MacroTable) -> Result<(), AstError> {
        for (name, body) in other.macros {
            self.insert(name, body)?;
        }
        Ok(())
    }
}

fn expect_root(xml: &XmlNode, expected: &'static str) -> Result<(), AstError> {
    if xml.name == expected {
        Ok(())
    } else {
        Err(AstError::UnexpectedRoot {
            expected,
            found: xml.name.clone(),
            pos: xml.pos,
        })
    }
}

/// Loads a `<Pages>` document. `<Macro>` children are skipped here and picked
/// up by [`load_macros`].
pub fn load_pages(xml: &XmlNode) -> Result<PageSet, AstError> {
    expect_root(xml, "Pages")?;
    let mut pages = PageSet::default();
    for child in &xml.children {
        match child.name.as_str() {
            "Page" => {
                let name = required(child, "name")?;
                if name.is_empty() {
                    return Err(AstError::MissingAttr {
                        construct: "Page".into(),
                        attr: "name",
                        pos: child.pos,
                    });
                }
                pages.insert(name.to_string(), compile_body(child)?)?;
            }
            "Macro" => {}
            other => {
                return Err(AstError::UnknownConstruct {
                    name: other.to_string(),
                    pos: child.pos,
                })
            }
        }
    }
    Ok(pages)
}

/// Loads macros from a `<Macros>` document or from the `<Macro>` children of
/// a `<Pages>` document.
pub fn load_macros(xml: &XmlNode) -> Result<MacroTable, AstError> {
    let inline = xml.name == "Pages";
    if !inline {
        expect_root(xml, "Macros")?;
    }
    let mut table = MacroTable::default();
    for child in &xml.children {
        match child.name.as_str() {
            "Macro" => {
                let name = required(child, "name")?;
                table.insert(name.to_string(), compile_body(child)?)?;
            }
            "Page" if inline => {}
            other => {
                return Err(AstError::UnknownConstruct {
                    name: other.to_string(),
                    pos: child.pos,
                })
            }
        }
    }
    Ok(table)
}

/// A non-fatal finding from [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// `page NAME` or `macro NAME`, followed by the construct trail.
    pub context: String,
    pub message: String,
    pub pos: Option<SourcePos>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(pos) = self.pos {
            write!(f, "{pos}: ")?;
        }
        write!(f, "{}: {}", self.context, self.message)
    }
}

struct Lint<'a> {
    macros: &'a MacroTable,
    in_macro: bool,
    found: Vec<Diagnostic>,
}

impl Lint<'_> {
    fn report(&mut self, trail: &[&str], message: String, pos: Option<SourcePos>) {
        self.found.push(Diagnostic {
            context: trail.join(" > "),
            message,
            pos,
        });
    }

    fn walk<'n>(&mut self, nodes: &'n [OomlNode], in_menu: bool, trail: &mut Vec<&'n str>) {
        for node in nodes {
            trail.push(node.tag());
            match node {
                OomlNode::Call { name, args } => {
                    if !self.macros.contains(name) {
                        self.report(trail, format!("call to undefined macro {name:?}"), args.pos);
                    }
                    self.walk_forest(args, trail);
                }
                OomlNode::Continue if !self.in_macro => {
                    self.report(trail, "<Continue/> outside a macro body".into(), None)
                }
                OomlNode::Param(p) if !self.in_macro => self.report(
                    trail,
                    format!("<Param select={:?}> outside a macro body", p.to_string()),
                    None,
                ),
                OomlNode::MenuItem { link, body } => {
                    if !in_menu && !self.in_macro {
                        self.report(
                            trail,
                            format!("<MenuItem link={link:?}> outside a <Menu>"),
                            None,
                        );
                    }
                    self.walk(body, in_menu, trail);
                }
                OomlNode::Menu(body) => self.walk(body, true, trail),
                OomlNode::LeftRight(left, right) => {
                    self.walk(std::slice::from_ref(left), in_menu, trail);
                    self.walk(std::slice::from_ref(right), in_menu, trail);
                }
                other => self.walk(other.body(), in_menu, trail),
            }
            trail.pop();
        }
    }

    // Argument forests are not compiled until continued, so only nested
    // calls are checked.
    fn walk_forest(&mut self, args: &XmlNode, trail: &[&str]) {
        for node in args.descendants().into_iter().skip(1) {
            if node.name != "Call" {
                continue;
            }
            if let Some(name) = node.attr("macro") {
                if !self.macros.contains(name) {
                    self.report(trail, format!("call to undefined macro {name:?}"), node.pos);
                }
            }
        }
    }
}

/// Lints a loaded site. Findings are warnings; nothing here prevents
/// rendering.
pub fn validate(pages: &PageSet, macros: &MacroTable) -> Vec<Diagnostic> {
    let mut lint = Lint {
        macros,
        in_macro: false,
        found: Vec::new(),
    };
    for (name, body) in pages.iter() {
        let head = format!("page {name}");
        let mut trail = vec![head.as_str()];
        lint.walk(body, false, &mut trail);
    }
    lint.in_macro = true;
    for (name, body) in macros.iter() {
        let head = format!("macro {name}");
        let mut trail = vec![head.as_str()];
        lint.walk(body, false, &mut trail);
    }
    lint.found
}
