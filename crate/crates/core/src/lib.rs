//! OOML: a markup language for describing web page structure.
//!
//! Pages are written as XML built from a closed set of constructs (structure,
//! layout, style, atoms, macros, conditionals, loops and data blocks) and
//! rendered to HTML against a `Screen` document holding request configuration,
//! CGI input and application data.
//!
//! ```
//! use ooml::{parse_xml, Site, StyleScheme};
//!
//! let pages = parse_xml(br#"<Pages>
//!   <Page name="hello.html">
//!     <Header>Hello</Header>
//!     <Text>Hi, <Value select="Input.Name"/></Text>
//!   </Page>
//! </Pages>"#).unwrap();
//! let site = Site::from_xml(&pages, None, None).unwrap();
//! let screen = ooml::build_screen(
//!     "hello.html",
//!     "127.0.0.1",
//!     "",
//!     &ooml::parse_query("Name=Joe").unwrap(),
//!     None,
//! );
//! let html = site.render("hello.html", &screen).unwrap();
//! assert!(html.contains(r#"<p class="ooml-text">Hi,Joe</p>"#));
//! ```

pub mod ast;
pub mod gateway;
pub mod path;
pub mod render;
pub mod site;
pub mod widgets;
pub mod xml;

pub use ast::{
    compile, load_macros, load_pages, validate, AstError, AtomKind, AtomSpec, Diagnostic,
    MacroTable, OomlNode, OptionSpec, PageSet,
};
pub use gateway::{
    build_screen, data_section, handle_request, page_name, params_to_xml,
    params_to_xml_with_diagnostics, parse_query, render_screen, GatewayError, HttpServer,
    QueryParams, Request, Response, ScreenInputs, ServeError, ServerConfig, ServerHandle, LOCAL_IP,
};
pub use path::{resolve, resolve_first_text, DotPath, NodeSet, PathError};
pub use render::{render_page, RenderError, RenderErrorKind, MAX_DEPTH};
pub use site::{load_xml_file, LiveSite, LoadError, LoadErrorKind, Site, SiteSource};
pub use widgets::{load_schemes, select_scheme, SchemeError, SchemeSet, StyleScheme};
pub use xml::{escape_html, parse_xml, serialize_xml, SourcePos, XmlError, XmlNode};
