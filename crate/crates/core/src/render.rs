//! Evaluation of compiled constructs against a `Screen` document.
//!
//! Dynamic-data selects resolve against the current data base, which starts at
//! the Screen's `<Data>` section and is re-aimed by `<Block>` and `<ForEach>`.
//! Selects whose first segment is `Input` or `Config` always resolve against
//! those Screen sections instead.
//!
//! A `<Call>` pushes a macro frame: its argument forest becomes the frame that
//! `<Param>` reads, and also the continuation that `<Continue/>` interprets.
//! Continued code runs with the caller's frame and continuation but the
//! current data base, so a `<Block>` wrapped around `<Continue/>` re-aims it.

use std::fmt;

use thiserror::Error;

use crate::ast::{compile_body, AstError, AtomSpec, MacroTable, OomlNode, PageSet};
use crate::path::{resolve, resolve_first_text, DotPath, NodeSet};
use crate::widgets::{self, Layout, Structure, Style, StyleScheme};
use crate::xml::{push_escaped, XmlNode, EMPTY_NODE};

/// Maximum number of nested macro frames.
pub const MAX_DEPTH: usize = 64;

/// Screen sections addressable by an absolute select.
const RESERVED_ROOTS: [&str; 2] = ["Input", "Config"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderErrorKind {
    #[error("page {0:?} not found")]
    PageNotFound(String),
    #[error("unknown macro {0:?}")]
    UnknownMacro(String),
    #[error("macro {name:?} exceeds the maximum call depth of {limit}")]
    DepthExceeded { name: String, limit: usize },
    #[error("continued code does not compile: {0}")]
    Continue(AstError),
    #[error(transparent)]
    Construct(AstError),
}

/// An evaluation failure and the chain of constructs it occurred in,
/// outermost first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderError {
    pub kind: RenderErrorKind,
    pub trail: Vec<String>,
}

impl RenderError {
    fn new(kind: RenderErrorKind) -> Self {
        Self {
            kind,
            trail: Vec::new(),
        }
    }
}

impl From<RenderErrorKind> for RenderError {
    fn from(kind: RenderErrorKind) -> Self {
        Self::new(kind)
    }
}

impl fmt::Display for RenderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if !self.trail.is_empty() {
            write!(f, " (in {})", self.trail.join(" > "))?;
        }
        Ok(())
    }
}

impl std::error::Error for RenderError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.kind)
    }
}

fn within<T>(
    result: Result<T, RenderError>,
    label: impl FnOnce() -> String,
) -> Result<T, RenderError> {
    result.map_err(|mut e| {
        e.trail.insert(0, label());
        e
    })
}

/// Code handed to a macro by its caller, with the caller's own frame.
#[derive(Debug, Clone, Copy)]
pub struct Continuation<'a> {
    pub forest: &'a XmlNode,
    pub arg_frame: Option<&'a XmlNode>,
    pub outer: Option<&'a Continuation<'a>>,
}

/// Per-frame evaluation state. Scope changes produce a new context.
#[derive(Debug, Clone, Copy)]
pub struct RenderContext<'a> {
    /// The Screen envelope.
    pub data_root: &'a XmlNode,
    /// The Screen's `<Data>` section; atoms resolve their props here.
    pub data_section: &'a XmlNode,
    /// Base for relative selects.
    pub data_base: &'a XmlNode,
    /// Current macro's argument forest, as a virtual parent node.
    pub arg_frame: Option<&'a XmlNode>,
    pub continuation: Option<&'a Continuation<'a>>,
    pub depth: usize,
    pub scheme: &'a StyleScheme,
}

impl<'a> RenderContext<'a> {
    pub fn new(screen: &'a XmlNode, scheme: &'a StyleScheme) -> Self {
        let data = screen.child("Data").unwrap_or(&EMPTY_NODE);
        Self {
            data_root: screen,
            data_section: data,
            data_base: data,
            arg_frame: None,
            continuation: None,
            depth: 0,
            scheme,
        }
    }

    fn with_base(&self, base: &'a XmlNode) -> Self {
        Self {
            data_base: base,
            ..*self
        }
    }

    fn is_absolute(path: &DotPath) -> bool {
        RESERVED_ROOTS.contains(&path.first())
    }

    /// Nodes a dynamic-data select refers to.
    pub fn lookup(&self, select: &DotPath) -> NodeSet<'a> {
        if Self::is_absolute(select) {
            resolve(self.data_root, select)
        } else {
            resolve(self.data_base, select)
        }
    }

    /// Text a dynamic-data select refers to, `""` when absent.
    pub fn lookup_text(&self, select: &DotPath) -> &'a str {
        if Self::is_absolute(select) {
            resolve_first_text(self.data_root, select)
        } else {
            resolve_first_text(self.data_base, select)
        }
    }

    /// Current value of an atom's prop, resolved from the Data section root.
    pub fn prop_text(&self, prop: &DotPath) -> &'a str {
        self.with_base(self.data_section).lookup_text(prop)
    }
}

/// Evaluates constructs, collecting non-fatal warnings.
pub struct Renderer<'s> {
    macros: &'s MacroTable,
    warnings: Vec<String>,
}

impl<'s> Renderer<'s> {
    pub fn new(macros: &'s MacroTable) -> Self {
        Self {
            macros,
            warnings: Vec::new(),
        }
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn into_warnings(self) -> Vec<String> {
        self.warnings
    }

    fn warn(&mut self, message: String) {
        log::debug!("{message}");
        self.warnings.push(message);
    }

    pub fn eval_all<'a>(
        &mut self,
        nodes: &'a [OomlNode],
        ctx: &RenderContext<'a>,
        out: &mut String,
    ) -> Result<(), RenderError>
    where
        's: 'a,
    {
        nodes.iter().try_for_each(|n| self.eval(n, ctx, out))
    }

    fn eval_to_string<'a>(
        &mut self,
        nodes: &'a [OomlNode],
        ctx: &RenderContext<'a>,
    ) -> Result<String, RenderError>
    where
        's: 'a,
    {
        let mut buf = String::new();
        self.eval_all(nodes, ctx, &mut buf)?;
        Ok(buf)
    }

    /// Evaluates one construct, appending its HTML to `out`.
    pub fn eval<'a>(
        &mut self,
        node: &'a OomlNode,
        ctx: &RenderContext<'a>,
        out: &mut String,
    ) -> Result<(), RenderError>
    where
        's: 'a,
    {
        let result = self.dispatch(node, ctx, out);
        match node {
            OomlNode::RawText(_) | OomlNode::Value(_) | OomlNode::Param(_) => result,
            OomlNode::Call { name, .. } => within(result, || format!("Call[{name}]")),
            other => within(result, || other.tag().to_string()),
        }
    }

    fn dispatch<'a>(
        &mut self,
        node: &'a OomlNode,
        ctx: &RenderContext<'a>,
        out: &mut String,
    ) -> Result<(), RenderError>
    where
        's: 'a,
    {
        let structure =
            |kind: Structure<'a>, this: &mut Self, body: &'a [OomlNode], out: &mut String| {
                let inner = this.eval_to_string(body, ctx)?;
                out.push_str(&widgets::render_structure(&kind, &inner));
                Ok(())
            };
        let style = |kind: Style,
                     title: Option<&str>,
                     this: &mut Self,
                     body: &'a [OomlNode],
                     out: &mut String| {
            let inner = this.eval_to_string(body, ctx)?;
            let html = widgets::render_style(kind, title, &inner, ctx.scheme)
                .map_err(RenderErrorKind::Construct)?;
            out.push_str(&html);
            Ok(())
        };
        match node {
            OomlNode::Page { body, .. } => self.eval_all(body, ctx, out),
            OomlNode::Header(body) => structure(Structure::Header, self, body, out),
            OomlNode::Menu(body) => structure(Structure::Menu, self, body, out),
            OomlNode::MenuItem { link, body } => {
                structure(Structure::MenuItem { link }, self, body, out)
            }
            OomlNode::Content(body) => structure(Structure::Content, self, body, out),
            OomlNode::Footer(body) => structure(Structure::Footer, self, body, out),
            OomlNode::Form { action, body } => {
                structure(Structure::Form { action }, self, body, out)
            }
            OomlNode::Text(body) => style(Style::Text, None, self, body, out),
            OomlNode::Title(body) => style(Style::Title, None, self, body, out),
            OomlNode::SuperTitle(body) => style(Style::SuperTitle, None, self, body, out),
            OomlNode::Box(body) => style(Style::Box, None, self, body, out),
            OomlNode::NoBox(body) => style(Style::NoBox, None, self, body, out),
            OomlNode::Panel { title, body } => style(Style::Panel, Some(title), self, body, out),
            OomlNode::ListV(body) => self.eval_layout(Layout::ListV, body, ctx, out),
            OomlNode::ListH(body) => self.eval_layout(Layout::ListH, body, ctx, out),
            OomlNode::LeftRight(left, right) => {
                let cells = [
                    self.eval_to_string(std::slice::from_ref(left), ctx)?,
                    self.eval_to_string(std::slice::from_ref(right), ctx)?,
                ];
                let html = widgets::render_layout(Layout::LeftRight, &cells)
                    .map_err(RenderErrorKind::Construct)?;
                out.push_str(&html);
                Ok(())
            }
            OomlNode::Submit { label } => {
                out.push_str(&widgets::render_submit(label));
                Ok(())
            }
            OomlNode::Atom(spec) => {
                self.eval_atom(spec, ctx, out);
                Ok(())
            }
            OomlNode::RawText(text) => {
                push_escaped(out, text);
                Ok(())
            }
            OomlNode::Value(select) => {
                self.eval_value(select, ctx, out);
                Ok(())
            }
            OomlNode::Param(select) => {
                self.eval_param(select, ctx, out);
                Ok(())
            }
            OomlNode::Continue => self.eval_continue(ctx, out),
            OomlNode::Ifeq {
                select,
                value,
                body,
            } => self.eval_if(true, select, value, body, ctx, out),
            OomlNode::Ifne {
                select,
                value,
                body,
            } => self.eval_if(false, select, value, body, ctx, out),
            OomlNode::Block { base, body } => self.eval_block(base, body, ctx, out),
            OomlNode::ForEach { select, body } => self.eval_foreach(select, body, ctx, out),
            OomlNode::Call { name, args } => self.eval_call(name, args, ctx, out),
        }
    }

    fn eval_layout<'a>(
        &mut self,
        kind: Layout,
        body: &'a [OomlNode],
        ctx: &RenderContext<'a>,
        out: &mut String,
    ) -> Result<(), RenderError>
    where
        's: 'a,
    {
        let cells = body
            .iter()
            .map(|child| self.eval_to_string(std::slice::from_ref(child), ctx))
            .collect::<Result<Vec<_>, _>>()?;
        let html = widgets::render_layout(kind, &cells).map_err(RenderErrorKind::Construct)?;
        out.push_str(&html);
        Ok(())
    }

    fn eval_atom(&mut self, spec: &AtomSpec, ctx: &RenderContext<'_>, out: &mut String) {
        let value = spec.prop.as_ref().map(|p| ctx.prop_text(p)).unwrap_or("");
        out.push_str(&widgets::render_atom(spec, value));
    }

    /// Emits the escaped text at `select`, or nothing when absent.
    pub fn eval_value(&mut self, select: &DotPath, ctx: &RenderContext<'_>, out: &mut String) {
        push_escaped(out, ctx.lookup_text(select));
    }

    /// Emits the escaped text at `select` within the current macro's
    /// arguments.
    pub fn eval_param(&mut self, select: &DotPath, ctx: &RenderContext<'_>, out: &mut String) {
        match ctx.arg_frame {
            Some(frame) => push_escaped(out, resolve_first_text(frame, select)),
            None => self.warn(format!("<Param select=\"{select}\"> used outside a macro")),
        }
    }

    fn eval_continue<'a>(
        &mut self,
        ctx: &RenderContext<'a>,
        out: &mut String,
    ) -> Result<(), RenderError>
    where
        's: 'a,
    {
        let Some(cont) = ctx.continuation else {
            self.warn("<Continue/> used outside a macro".into());
            return Ok(());
        };
        let code = compile_body(cont.forest).map_err(RenderErrorKind::Continue)?;
        let inner = RenderContext {
            arg_frame: cont.arg_frame,
            continuation: cont.outer,
            ..*ctx
        };
        self.eval_all(&code, &inner, out)
    }

    fn eval_if<'a>(
        &mut self,
        equal: bool,
        select: &DotPath,
        value: &str,
        body: &'a [OomlNode],
        ctx: &RenderContext<'a>,
        out: &mut String,
    ) -> Result<(), RenderError>
    where
        's: 'a,
    {
        if (ctx.lookup_text(select) == value) == equal {
            self.eval_all(body, ctx, out)?;
        }
        Ok(())
    }

    fn eval_block<'a>(
        &mut self,
        base: &DotPath,
        body: &'a [OomlNode],
        ctx: &RenderContext<'a>,
        out: &mut String,
    ) -> Result<(), RenderError>
    where
        's: 'a,
    {
        let node = ctx.lookup(base).first().unwrap_or(&EMPTY_NODE);
        self.eval_all(body, &ctx.with_base(node), out)
    }

    fn eval_foreach<'a>(
        &mut self,
        select: &DotPath,
        body: &'a [OomlNode],
        ctx: &RenderContext<'a>,
        out: &mut String,
    ) -> Result<(), RenderError>
    where
        's: 'a,
    {
        for node in ctx.lookup(select) {
            self.eval_all(body, &ctx.with_base(node), out)?;
        }
        Ok(())
    }

    fn eval_call<'a>(
        &mut self,
        name: &str,
        args: &'a XmlNode,
        ctx: &RenderContext<'a>,
        out: &mut String,
    ) -> Result<(), RenderError>
    where
        's: 'a,
    {
        let body = self
            .macros
            .get(name)
            .ok_or_else(|| RenderErrorKind::UnknownMacro(name.to_string()))?;
        if ctx.depth >= MAX_DEPTH {
            return Err(RenderErrorKind::DepthExceeded {
                name: name.to_string(),
                limit: MAX_DEPTH,
            }
            .into());
        }
        let cont = Continuation {
            forest: args,
            arg_frame: ctx.arg_frame,
            outer: ctx.continuation,
        };
        let inner = RenderContext {
            arg_frame: Some(args),
            continuation: Some(&cont),
            depth: ctx.depth + 1,
            ..*ctx
        };
        self.eval_all(body, &inner, out)
    }
}

fn strip_tags(html: &str) -> String {
    let mut out = String::with_capacity(html.len());
    let mut in_tag = false;
    for c in html.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => in_tag = false,
            c if !in_tag => out.push(c),
            _ => {}
        }
    }
    out
}

/// Renders a complete HTML document for page `name`.
///
/// The head title is the text of the page's first `<Header>`, or the page
/// name when it has none.
pub fn render_page(
    name: &str,
    screen: &XmlNode,
    pages: &PageSet,
    macros: &MacroTable,
    scheme: &StyleScheme,
) -> Result<String, RenderError> {
    render_page_with_warnings(name, screen, pages, macros, scheme).map(|(html, _)| html)
}

/// Like [`render_page`], also returning non-fatal warnings.
pub fn render_page_with_warnings(
    name: &str,
    screen: &XmlNode,
    pages: &PageSet,
    macros: &MacroTable,
    scheme: &StyleScheme,
) -> Result<(String, Vec<String>), RenderError> {
    let body = pages
        .get(name)
        .ok_or_else(|| RenderErrorKind::PageNotFound(name.to_string()))?;
    let ctx = RenderContext::new(screen, scheme);
    let mut renderer = Renderer::new(macros);
    let page_label = || format!("Page[{name}]");

    let title = match body.iter().find(|n| matches!(n, OomlNode::Header(_))) {
        Some(header) => {
            let html = within(renderer.eval_to_string(header.body(), &ctx), page_label)?;
            strip_tags(&html)
        }
        None => crate::xml::escape_html(name),
    };
    let content = within(renderer.eval_to_string(body, &ctx), page_label)?;

    let mut out = String::with_capacity(content.len() + 256);
    out.push_str("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>");
    out.push_str(title.trim());
    out.push_str("</title>\n");
    out.push_str(&scheme.stylesheet());
    out.push_str("\n</head>\n<body>\n");
    out.push_str(&content);
    out.push_str("\n</body>\n</html>\n");
    Ok((out, renderer.into_warnings()))
}
