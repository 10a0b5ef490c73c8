//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits non-zero if any criterion fails.
//!
//! Randomized criteria use fixed seeds so failures reproduce.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use ooml::render::RenderErrorKind;
use ooml::{
    build_screen, params_to_xml, parse_query, parse_xml, render_screen, resolve,
    resolve_first_text, DotPath, QueryParams, ScreenInputs, Site, SiteSource, XmlNode,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture_site() -> Site {
    let dir = fixtures();
    SiteSource {
        pages: dir.join("pages.xml"),
        macros: Some(dir.join("macros.xml")),
        schemes: Some(dir.join("schemes.xml")),
    }
    .load()
    .expect("fixture site loads")
}

fn xml(text: &str) -> XmlNode {
    parse_xml(text.as_bytes()).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

fn html_unescape(text: &str) -> String {
    text.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&amp;", "&")
}

/// Percent-encodes everything but RFC 3986 unreserved characters; spaces
/// become `+` or `%20` depending on `plus`.
fn urlencode(text: &str, plus: bool) -> String {
    let mut out = String::new();
    for b in text.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => {
                out.push(b as char)
            }
            b' ' if plus => out.push('+'),
            _ => write!(out, "%{b:02X}").unwrap(),
        }
    }
    out
}

/// The `<body>` content of a rendered document.
fn body_of(html: &str) -> &str {
    let start = html.find("<body>\n").expect("body open") + "<body>\n".len();
    let end = html.rfind("\n</body>").expect("body close");
    &html[start..end]
}

/// Renders `body` as the only page of a throwaway site.
fn render_fragment(
    body: &str,
    macros: &str,
    data: Option<&str>,
    query: &str,
    domain: &str,
    schemes: Option<&str>,
) -> Result<String, ooml::RenderError> {
    let pages = xml(&format!(
        "<Pages><Page name=\"t.html\">{body}</Page>{macros}</Pages>"
    ));
    let schemes = schemes.map(xml);
    let site = Site::from_xml(&pages, None, schemes.as_ref()).expect("fragment compiles");
    let screen = build_screen(
        "t.html",
        "127.0.0.1",
        domain,
        &parse_query(query).unwrap(),
        data.map(xml),
    );
    site.render("t.html", &screen)
        .map(|html| body_of(&html).to_string())
}

fn in_order(haystack: &str, needles: &[&str]) -> Result<(), String> {
    let mut at = 0;
    for needle in needles {
        match haystack[at..].find(needle) {
            Some(i) => at += i + needle.len(),
            None => return Err(format!("missing (in order): {needle}")),
        }
    }
    Ok(())
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1 ---------------------------------------------------------------------

fn golden_page() -> Outcome {
    let mut outputs = Vec::new();
    let mut slowest = Duration::ZERO;
    for _ in 0..3 {
        let t = Instant::now();
        let site = fixture_site();
        let inputs = ScreenInputs {
            page: "search.html",
            client_ip: "127.0.0.1",
            domain: "",
            params: QueryParams::default(),
            data_file: None,
        };
        let html = render_screen(&site, &inputs).map_err(|e| e.to_string())?;
        slowest = slowest.max(t.elapsed());
        outputs.push(html);
    }
    check(outputs.iter().all(|o| *o == outputs[0]), || {
        "output differs between runs".into()
    })?;
    let html = &outputs[0];
    in_order(
        html,
        &[
            "<title>Search</title>",
            r#"<a class="ooml-menuitem" href="index.html">"#,
            r#"<a class="ooml-menuitem" href="search.html">"#,
            r#"<a class="ooml-menuitem" href="help.html">"#,
            r#"<h2 class="ooml-title">Customer Search</h2>"#,
            r#"<form method="get" action="results.html">"#,
            r#"<input type="text" name="Customer.FirstName" value="">"#,
            r#"<input type="text" name="Customer.LastName" value="">"#,
            r#"<input type="text" name="Customer.Address.State" value="">"#,
            r#"<input type="text" name="Customer.Address.Zip" value="">"#,
            r#"<input type="submit" value="Find">"#,
            "</form>",
            "OoML © 2008",
        ],
    )?;
    check(html.matches("class=\"ooml-menuitem\"").count() == 3, || {
        "expected 3 menu anchors".into()
    })?;
    check(html.matches("type=\"text\"").count() == 4, || {
        "expected 4 text inputs".into()
    })?;
    check(slowest < Duration::from_millis(50), || {
        format!("slowest run {slowest:?}")
    })?;
    Ok(format!("3 identical runs, slowest {slowest:?}"))
}

// 2 ---------------------------------------------------------------------

/// `(value, selected)` for each `<option>` in the first `<select>`.
fn options(html: &str) -> Vec<(String, bool)> {
    html.split("<option value=\"")
        .skip(1)
        .map(|chunk| {
            let end = chunk.find('"').unwrap();
            let tag_end = chunk.find('>').unwrap();
            (
                html_unescape(&chunk[..end]),
                chunk[..tag_end].contains("selected=\"selected\""),
            )
        })
        .collect()
}

fn dropdown(opts: &[(&str, &str)]) -> String {
    let mut s = String::from(r#"<DropDownList label="Phone Type:" prop="Customer.Phone.Type">"#);
    for (id, label) in opts {
        write!(
            s,
            r#"<Option id="{}" label="{}"/>"#,
            xml_escape(id),
            xml_escape(label)
        )
        .unwrap();
    }
    s + "</DropDownList>"
}

fn atom_selection() -> Outcome {
    let listing = dropdown(&[("", ""), ("H", "Home"), ("W", "Work")]);
    let with_type = "<Data><Customer><Phone><Type>H</Type></Phone></Customer></Data>";
    let out =
        render_fragment(&listing, "", Some(with_type), "", "", None).map_err(|e| e.to_string())?;
    check(
        out.contains(r#"<select name="Customer.Phone.Type">"#),
        || out.clone(),
    )?;
    check(
        out.contains(r#"<option value="H" selected="selected">Home</option>"#)
            && out.matches("selected=\"selected\"").count() == 1,
        || format!("Home not uniquely selected: {out}"),
    )?;
    let out = render_fragment(&listing, "", None, "", "", None).map_err(|e| e.to_string())?;
    let sel: Vec<_> = options(&out).into_iter().filter(|o| o.1).collect();
    check(sel == [(String::new(), true)], || {
        format!("absent Type: {out}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pool = ["", "H", "W", "M", "O", "x&y", "\"q\"", "<b>"];
    for case in 0..200 {
        let mut ids = pool.to_vec();
        ids.shuffle(&mut rng);
        ids.truncate(rng.gen_range(1..=pool.len()));
        let opts: Vec<(&str, &str)> = ids.iter().map(|id| (*id, "label")).collect();
        let value = if rng.gen_bool(0.2) {
            None
        } else {
            Some(*pool.choose(&mut rng).unwrap())
        };
        let data = value.map(|v| {
            format!(
                "<Data><Customer><Phone><Type>{}</Type></Phone></Customer></Data>",
                xml_escape(v)
            )
        });
        let out = render_fragment(&dropdown(&opts), "", data.as_deref(), "", "", None)
            .map_err(|e| format!("case {case}: {e}"))?;
        let rendered = options(&out);
        let expected_value = value.unwrap_or("");
        let selected: Vec<_> = rendered
            .iter()
            .filter(|o| o.1)
            .map(|o| o.0.as_str())
            .collect();
        let expected: Vec<&str> = ids
            .iter()
            .copied()
            .filter(|id| *id == expected_value)
            .collect();
        check(rendered.len() == ids.len(), || {
            format!("case {case}: option count {out}")
        })?;
        check(selected == expected, || {
            format!("case {case}: value {value:?} ids {ids:?} selected {selected:?}")
        })?;
    }
    Ok("listing + absent case + 200 fuzz cases".into())
}

// 3 ---------------------------------------------------------------------

const NAMES: [&str; 3] = ["a", "b", "c"];

fn random_tree(rng: &mut ChaCha8Rng, name: &str, depth: usize) -> XmlNode {
    let mut node = XmlNode::new(name);
    if depth < 5 {
        for _ in 0..rng.gen_range(0..=4) {
            let child = NAMES.choose(rng).unwrap();
            node.children.push(random_tree(rng, child, depth + 1));
        }
    }
    node
}

/// Every node below `base` paired with its name chain, in document order.
fn enumerate<'a>(
    base: &'a XmlNode,
    chain: &mut Vec<&'a str>,
    out: &mut Vec<(Vec<&'a str>, &'a XmlNode)>,
) {
    for child in &base.children {
        chain.push(&child.name);
        out.push((chain.clone(), child));
        enumerate(child, chain, out);
        chain.pop();
    }
}

fn oracle<'a>(base: &'a XmlNode, segments: &[String]) -> Vec<&'a XmlNode> {
    let mut all = Vec::new();
    enumerate(base, &mut Vec::new(), &mut all);
    all.into_iter()
        .filter(|(chain, _)| {
            chain.len() == segments.len() && chain.iter().zip(segments).all(|(a, b)| *a == b)
        })
        .map(|(_, n)| n)
        .collect()
}

fn ptrs<'a>(nodes: impl IntoIterator<Item = &'a XmlNode>) -> Vec<*const XmlNode> {
    nodes.into_iter().map(|n| n as *const XmlNode).collect()
}

fn random_path(rng: &mut ChaCha8Rng) -> DotPath {
    let len = rng.gen_range(1..=3);
    DotPath::from_segments((0..len).map(|_| *NAMES.choose(rng).unwrap())).unwrap()
}

fn path_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checks = 0;
    for tree_no in 0..1000 {
        let tree = random_tree(&mut rng, "root", 0);
        for _ in 0..4 {
            let p = random_path(&mut rng);
            let q = random_path(&mut rng);
            let pq = DotPath::from_segments(p.segments().iter().chain(q.segments())).unwrap();
            let whole = ptrs(resolve(&tree, &pq));
            let stepwise: Vec<_> = resolve(&tree, &p)
                .iter()
                .flat_map(|n| ptrs(resolve(n, &q)))
                .collect();
            check(whole == stepwise, || {
                format!("tree {tree_no}: concatenation law fails for {p} . {q}")
            })?;
            check(whole == ptrs(oracle(&tree, pq.segments())), || {
                format!("tree {tree_no}: oracle mismatch for {pq}")
            })?;
            checks += 1;
        }
    }
    Ok(format!("1000 trees, {checks} path pairs, 0 violations"))
}

// 4 ---------------------------------------------------------------------

fn random_data(rng: &mut ChaCha8Rng, name: &str, depth: usize) -> String {
    let values = ["", "x", "NJ", "nj", "NY", "a b"];
    if depth == 3 || rng.gen_bool(0.3) {
        return format!("<{name}>{}</{name}>", values.choose(rng).unwrap());
    }
    let children: String = (0..rng.gen_range(1..=3))
        .map(|_| {
            let name = *NAMES.choose(rng).unwrap();
            random_data(rng, name, depth + 1)
        })
        .collect();
    format!("<{name}>{children}</{name}>")
}

fn control_flow() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let values = ["", "x", "NJ", "nj", "NY", "a b"];
    let mut absent = 0;
    for case in 0..500 {
        let data = format!("<Data>{}</Data>", random_data(&mut rng, "a", 0));
        let data_node = xml(&data);
        let mut chains = Vec::new();
        enumerate(&data_node, &mut Vec::new(), &mut chains);
        let select = if rng.gen_bool(0.7) {
            DotPath::from_segments(chains.choose(&mut rng).unwrap().0.iter().copied()).unwrap()
        } else {
            random_path(&mut rng)
        };
        let value = *values.choose(&mut rng).unwrap();
        let first = oracle(&data_node, select.segments()).first().copied();
        let actual = first.map_or("", |n| n.text.as_str());
        absent += first.is_none() as usize;
        let body = format!(
            r#"<Ifeq select="{select}" value="{value}"><Text>EQ</Text></Ifeq><Ifne select="{select}" value="{value}"><Text>NE</Text></Ifne>"#
        );
        let out =
            render_fragment(&body, "", Some(&data), "", "", None).map_err(|e| e.to_string())?;
        let expected = if actual == value { "EQ" } else { "NE" };
        check(
            out == format!(r#"<p class="ooml-text">{expected}</p>"#),
            || format!("case {case}: {select}={value:?} (actual {actual:?}) rendered {out}"),
        )?;
    }
    Ok(format!(
        "500 triples ({absent} with absent node), exactly one branch each"
    ))
}

// 5 ---------------------------------------------------------------------

#[derive(Clone)]
enum Gen {
    Text(String),
    Title(String),
    Value,
    Box(Vec<Gen>),
    ListV(Vec<Gen>),
    IfNj(Vec<Gen>),
    Call(usize),
}

fn gen_body(rng: &mut ChaCha8Rng, depth: usize, callable: usize) -> Vec<Gen> {
    (0..rng.gen_range(1..=3))
        .map(|_| gen_node(rng, depth, callable))
        .collect()
}

fn gen_node(rng: &mut ChaCha8Rng, depth: usize, callable: usize) -> Gen {
    let word = ["alpha", "beta", "gamma", "delta"][rng.gen_range(0..4)].to_string();
    let pick = if depth >= 3 {
        rng.gen_range(0..3)
    } else {
        rng.gen_range(0..7)
    };
    match pick {
        0 => Gen::Text(word),
        1 => Gen::Title(word),
        2 => Gen::Value,
        3 => Gen::Box(gen_body(rng, depth + 1, callable)),
        // Layout cells hold exactly one child each, so keep them call-free.
        4 => Gen::ListV(
            (0..rng.gen_range(1..=3))
                .map(|_| Gen::Box(gen_body(rng, depth + 1, callable)))
                .collect(),
        ),
        5 => Gen::IfNj(gen_body(rng, depth + 1, callable)),
        _ if callable > 0 => Gen::Call(rng.gen_range(0..callable)),
        _ => Gen::Text(word),
    }
}

/// Serializes a body; with `inline`, calls are replaced by the callee body.
fn emit(body: &[Gen], inline: Option<&[Vec<Gen>]>, out: &mut String) {
    for node in body {
        match node {
            Gen::Text(w) => write!(out, "<Text>{w}</Text>").unwrap(),
            Gen::Title(w) => write!(out, "<Title>{w}</Title>").unwrap(),
            Gen::Value => out.push_str(r#"<Value select="Customer.Address.State"/>"#),
            Gen::Box(b) => wrap("Box", "", b, inline, out),
            Gen::ListV(b) => wrap("ListV", "", b, inline, out),
            Gen::IfNj(b) => wrap(
                "Ifeq",
                r#" select="Customer.Address.State" value="NJ""#,
                b,
                inline,
                out,
            ),
            Gen::Call(i) => match inline {
                Some(defs) => emit(&defs[*i], inline, out),
                None => write!(out, r#"<Call macro="M{i}"/>"#).unwrap(),
            },
        }
    }
}

fn wrap(tag: &str, attrs: &str, body: &[Gen], inline: Option<&[Vec<Gen>]>, out: &mut String) {
    write!(out, "<{tag}{attrs}>").unwrap();
    emit(body, inline, out);
    write!(out, "</{tag}>").unwrap();
}

const CUSTOMER: &str = "<Data><Customer><Address><State>NJ</State></Address></Customer></Data>";

const CONTENT_MACROS: &str = r#"
<Macro name="Content">
  <Box>
    <Title>Help Desk Application</Title>
    <Continue/>
  </Box>
</Macro>
<Macro name="CustomerSearchForm">
  <Title>Customer Search</Title>
  <Form action="results.html">
    <InputField label="First Name:" prop="Customer.FirstName"/>
    <InputField label="Last Name:" prop="Customer.LastName"/>
    <InputField label="State:" prop="Customer.Address.State"/>
    <InputField label="Zip:" prop="Customer.Address.Zip"/>
    <Submit label="Find"/>
  </Form>
</Macro>
<Macro name="CustomerSearchResults"><Text>No results yet.</Text></Macro>
<Macro name="CustomerSearchHelp"><Text>All fields are optional.</Text></Macro>"#;

fn macro_semantics() -> Outcome {
    // (a) inlining equivalence
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut defs: Vec<Vec<Gen>> = Vec::new();
    for i in 0..100 {
        defs.push(gen_body(&mut rng, 0, i));
    }
    let mut macros = String::new();
    for (i, body) in defs.iter().enumerate() {
        write!(macros, r#"<Macro name="M{i}">"#).unwrap();
        emit(body, None, &mut macros);
        macros.push_str("</Macro>");
    }
    let mut calls = 0;
    for (i, body) in defs.iter().enumerate() {
        let mut inlined = String::new();
        emit(body, Some(&defs), &mut inlined);
        let called = render_fragment(
            &format!(r#"<Call macro="M{i}"/>"#),
            &macros,
            Some(CUSTOMER),
            "",
            "",
            None,
        )
        .map_err(|e| format!("M{i}: {e}"))?;
        let direct = render_fragment(&inlined, "", Some(CUSTOMER), "", "", None)
            .map_err(|e| format!("M{i} inlined: {e}"))?;
        check(called == direct, || {
            format!("M{i}: call {called}\ninlined {direct}")
        })?;
        calls += body.iter().filter(|g| matches!(g, Gen::Call(_))).count();
    }

    // (b) Content / Continue
    let out = render_fragment(
        r#"<Call macro="Content"><Call macro="CustomerSearchForm"/><Call macro="CustomerSearchResults"/><Call macro="CustomerSearchHelp"/></Call>"#,
        CONTENT_MACROS,
        None,
        "",
        "",
        None,
    )
    .map_err(|e| e.to_string())?;
    let each = |name: &str| {
        render_fragment(
            &format!(r#"<Call macro="{name}"/>"#),
            CONTENT_MACROS,
            None,
            "",
            "",
            None,
        )
        .unwrap()
    };
    let expected = format!(
        r#"<div class="ooml-box" style="border:1px solid #808080"><h2 class="ooml-title">Help Desk Application</h2>{}{}{}</div>"#,
        each("CustomerSearchForm"),
        each("CustomerSearchResults"),
        each("CustomerSearchHelp")
    );
    check(out == expected, || {
        format!("Continue output\n{out}\nexpected\n{expected}")
    })?;

    // (c) runaway recursion stops at the depth limit on a modest stack
    let result = std::thread::Builder::new()
        .stack_size(1 << 20)
        .spawn(|| {
            render_fragment(
                r#"<Call macro="Loop"/>"#,
                r#"<Macro name="Loop"><Box><Call macro="Loop"/></Box></Macro>"#,
                None,
                "",
                "",
                None,
            )
        })
        .unwrap()
        .join()
        .map_err(|_| "recursion panicked".to_string())?;
    match result {
        Err(e) => {
            check(
                e.kind
                    == (RenderErrorKind::DepthExceeded {
                        name: "Loop".into(),
                        limit: 64,
                    }),
                || format!("unexpected error {e}"),
            )?;
            check(e.to_string().contains("64"), || {
                format!("message lacks depth: {e}")
            })?;
        }
        Ok(_) => return Err("self-recursive macro rendered".into()),
    }
    Ok(format!(
        "100 macros ({calls} nested calls) inline-equal, Continue order, depth 64 enforced"
    ))
}

// 6 ---------------------------------------------------------------------

fn random_segment(rng: &mut ChaCha8Rng) -> String {
    const FIRST: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz_";
    const REST: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_-";
    let mut s = String::new();
    s.push(*FIRST.choose(rng).unwrap() as char);
    for _ in 0..rng.gen_range(0..6) {
        s.push(*REST.choose(rng).unwrap() as char);
    }
    s
}

fn random_value(rng: &mut ChaCha8Rng) -> String {
    let pool = [
        "a", "Z", "7", " ", "&", "=", "+", "%", "%20", "<", ">", "\"", "'", "#", "?", "/", ".",
        "é", "中", "😀", "\t", "NJ", "a=b&c=d",
    ];
    (0..rng.gen_range(0..8))
        .map(|_| *pool.choose(rng).unwrap())
        .collect()
}

fn cgi_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..300 {
        let prop = (0..rng.gen_range(1..=4))
            .map(|_| random_segment(&mut rng))
            .collect::<Vec<_>>()
            .join(".");
        let value = random_value(&mut rng);
        let out = render_fragment(
            &format!(r#"<AtomInputField label="L" prop="{prop}"/>"#),
            "",
            None,
            "",
            "",
            None,
        )
        .map_err(|e| e.to_string())?;
        let start = out.find("name=\"").ok_or("no name attribute")? + 6;
        let name = html_unescape(&out[start..start + out[start..].find('"').unwrap()]);
        check(name == prop, || {
            format!("case {case}: name {name:?} != prop {prop:?}")
        })?;
        let query = format!("{name}={}", urlencode(&value, rng.gen_bool(0.5)));
        let params = parse_query(&query).map_err(|e| format!("case {case}: {e}"))?;
        let screen = XmlNode::new("Screen").with_child(params_to_xml(&params));
        let path = DotPath::parse(&format!("Input.{prop}")).unwrap();
        let got = resolve_first_text(&screen, &path);
        check(got == value, || {
            format!("case {case}: {query}: got {got:?}, want {value:?}")
        })?;
    }
    Ok("300 (prop, value) pairs round-trip exactly".into())
}

// 7 ---------------------------------------------------------------------

struct ServerProcess(Child);

impl Drop for ServerProcess {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn http_get(port: u16, target: &str) -> Result<(u16, Vec<u8>), String> {
    let mut stream = TcpStream::connect(("127.0.0.1", port)).map_err(|e| e.to_string())?;
    stream
        .set_read_timeout(Some(Duration::from_secs(10)))
        .unwrap();
    write!(
        stream,
        "GET {target} HTTP/1.1\r\nHost: 127.0.0.1\r\nConnection: close\r\n\r\n"
    )
    .map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    stream.read_to_end(&mut buf).map_err(|e| e.to_string())?;
    let split = buf
        .windows(4)
        .position(|w| w == b"\r\n\r\n")
        .ok_or("no header end")?;
    let head = String::from_utf8_lossy(&buf[..split]).to_string();
    let status = head
        .split(' ')
        .nth(1)
        .and_then(|s| s.parse().ok())
        .ok_or("bad status line")?;
    Ok((status, buf[split + 4..].to_vec()))
}

fn construct_coverage() -> Result<(), String> {
    let constructs = [
        "Page",
        "Header",
        "Menu",
        "MenuItem",
        "Content",
        "Footer",
        "Form",
        "Submit",
        "Text",
        "Title",
        "SuperTitle",
        "Box",
        "Panel",
        "NoBox",
        "ListV",
        "ListH",
        "LeftRight",
        "Call",
        "Macro",
        "Param",
        "Continue",
        "Value",
        "Ifeq",
        "Ifne",
        "Block",
        "ForEach",
        "AtomInputField",
        "AtomPassword",
        "AtomHidden",
        "AtomTextArea",
        "AtomSelectState",
        "AtomYesNo",
        "DropDownList",
        "RadioList",
        "AtomCheckBox",
        "AtomSubmit",
    ];
    let mut seen = std::collections::BTreeSet::new();
    for file in ["pages.xml", "macros.xml"] {
        let doc = parse_xml(&std::fs::read(fixtures().join(file)).unwrap()).unwrap();
        seen.extend(doc.descendants().into_iter().map(|n| n.name.clone()));
    }
    let missing: Vec<_> = constructs.iter().filter(|c| !seen.contains(**c)).collect();
    check(missing.is_empty(), || {
        format!("fixture site lacks {missing:?}")
    })?;
    let pages = fixture_site().pages.len();
    check(pages >= 5, || format!("fixture site has {pages} pages"))
}

fn server_cli_equivalence() -> Outcome {
    construct_coverage()?;
    let bin = env!("CARGO_BIN_EXE_ooml");
    let dir = fixtures();
    let site_args = |cmd: &mut Command| {
        cmd.arg("--pages")
            .arg(dir.join("pages.xml"))
            .arg("--macros")
            .arg(dir.join("macros.xml"))
            .arg("--schemes")
            .arg(dir.join("schemes.xml"))
            .arg("--domain")
            .arg("example.com");
    };
    let mut serve = Command::new(bin);
    serve
        .args(["serve", "--bind", "127.0.0.1", "--port", "0", "--data-dir"])
        .arg(dir.join("data"));
    site_args(&mut serve);
    let mut child = serve
        .stderr(Stdio::piped())
        .stdout(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let stderr = child.stderr.take().unwrap();
    let server = ServerProcess(child);
    let mut line = String::new();
    BufReader::new(stderr)
        .read_line(&mut line)
        .map_err(|e| e.to_string())?;
    let port: u16 = line
        .trim()
        .trim_end_matches('/')
        .rsplit(':')
        .next()
        .and_then(|p| p.parse().ok())
        .ok_or_else(|| format!("no port in {line:?}"))?;

    let pages = [
        "index.html",
        "search.html",
        "results.html",
        "profile.html",
        "help.html",
    ];
    let keys = [
        "Name",
        "Customer.Address.State",
        "Customer.Phone.Type",
        "X",
        "Customer.Person.FirstName",
    ];
    let vals = [
        "NJ",
        "NY",
        "Joe",
        "H",
        "<script>alert(1)</script>",
        "a&b",
        "100",
        "",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..20 {
        let page = *pages.choose(&mut rng).unwrap();
        let query = (0..rng.gen_range(0..=3))
            .map(|_| {
                let k = keys.choose(&mut rng).unwrap();
                format!("{k}={}", urlencode(vals.choose(&mut rng).unwrap(), true))
            })
            .collect::<Vec<_>>()
            .join("&");
        let (status, body) = http_get(port, &format!("/{page}?{query}"))?;
        check(status == 200, || {
            format!("case {case}: GET /{page}?{query} -> {status}")
        })?;

        let mut render = Command::new(bin);
        render.args(["render", "--page", page, "--query", &query]);
        site_args(&mut render);
        let data = dir.join("data").join(format!("{page}.xml"));
        if data.is_file() {
            render.arg("--data").arg(data);
        }
        let output = render.output().map_err(|e| e.to_string())?;
        check(output.status.success(), || {
            String::from_utf8_lossy(&output.stderr).to_string()
        })?;
        check(output.stdout == body, || {
            format!("case {case}: /{page}?{query} differs between server and CLI")
        })?;
    }
    drop(server);
    Ok("fixture site covers every construct; 20 random (page, query) pairs byte-equal".into())
}

// 8 ---------------------------------------------------------------------

const ALLOWED_TAGS: &[&str] = &[
    "html", "head", "meta", "title", "style", "body", "div", "p", "h1", "h2", "table", "tr", "td",
    "a", "form", "input", "em", "br", "select", "option", "textarea",
];

fn valid_entity(rest: &str) -> bool {
    ["amp;", "lt;", "gt;", "quot;"]
        .iter()
        .any(|e| rest.starts_with(e))
}

/// Walks `html` as a tag stream: every tag must be an expected element and
/// every `&` in text or attribute values must start an entity.
fn scan_html(html: &str) -> Result<(), String> {
    let b = html.as_bytes();
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b'<' if html[i..].starts_with("<!DOCTYPE") => i += html[i..].find('>').unwrap() + 1,
            b'<' if html[i..].starts_with("<style>") => {
                i += html[i..].find("</style>").ok_or("unclosed style")? + 8
            }
            b'<' => {
                i += 1;
                if b.get(i) == Some(&b'/') {
                    i += 1;
                }
                let start = i;
                while i < b.len() && b[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                let name = html[start..i].to_ascii_lowercase();
                if !ALLOWED_TAGS.contains(&name.as_str()) {
                    return Err(format!(
                        "unexpected element <{name}> near {:?}",
                        &html[start.saturating_sub(20)..(i + 20).min(html.len())]
                    ));
                }
                // attributes: name="value" pairs
                loop {
                    while b.get(i) == Some(&b' ') {
                        i += 1;
                    }
                    match b.get(i) {
                        Some(b'>') => {
                            i += 1;
                            break;
                        }
                        Some(c) if c.is_ascii_alphabetic() => {
                            while b[i].is_ascii_alphanumeric() || b[i] == b'-' {
                                i += 1;
                            }
                            if b.get(i) != Some(&b'=') || b.get(i + 1) != Some(&b'"') {
                                return Err(format!("unquoted attribute in <{name}>"));
                            }
                            i += 2;
                            let end = i + html[i..].find('"').ok_or("unterminated attribute")?;
                            let value = &html[i..end];
                            if value.contains('<') || value.contains('>') {
                                return Err(format!(
                                    "raw angle bracket in attribute of <{name}>: {value:?}"
                                ));
                            }
                            for (j, _) in value.match_indices('&') {
                                if !valid_entity(&value[j + 1..]) {
                                    return Err(format!("bare & in attribute: {value:?}"));
                                }
                            }
                            i = end + 1;
                        }
                        other => return Err(format!("malformed tag <{name}> at {other:?}")),
                    }
                }
            }
            b'>' => {
                return Err(format!(
                    "raw > in text near {:?}",
                    &html[i.saturating_sub(30)..i]
                ))
            }
            b'&' if !valid_entity(&html[i + 1..]) => {
                return Err(format!(
                    "bare & in text near {:?}",
                    &html[i..(i + 20).min(html.len())]
                ))
            }
            _ => i += 1,
        }
    }
    Ok(())
}

fn safety() -> Outcome {
    let payloads = [
        "<script>alert(1)</script>",
        "\"><script>alert(1)</script>",
        "'><ScRiPt src=x>",
        "a & b",
        "&amp; &lt;",
        "</textarea><script>x</script>",
        "\" onmouseover=\"alert(1)",
        "</title><script>",
        "&#60;script&#62;",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pick = |rng: &mut ChaCha8Rng| -> String {
        (0..rng.gen_range(1..=3))
            .map(|_| *payloads.choose(rng).unwrap())
            .collect::<Vec<_>>()
            .join(" ")
    };
    for case in 0..200 {
        let p: Vec<String> = (0..10).map(|_| pick(&mut rng)).collect();
        let a: Vec<String> = p.iter().map(|s| xml_escape(s)).collect();
        let page = format!(
            r#"<Header>{h}</Header>
<Menu><MenuItem link="{link}">{t}</MenuItem></Menu>
<Content>
  <Panel title="{title}"><Text><Value select="Customer.Name"/></Text></Panel>
  <Form action="{action}">
    <AtomInputField label="{label}" prop="Customer.Name"/>
    <AtomHidden prop="Customer.Notes"/>
    <AtomTextArea label="{label}" prop="Customer.Notes"/>
    <DropDownList label="{label}" prop="Customer.Name"><Option id="{id}" label="{olabel}"/></DropDownList>
    <RadioList prop="Customer.Notes"><Option id="{id}" label="{olabel}"/></RadioList>
    <Submit label="{submit}"/>
  </Form>
  <Ifeq select="Customer.Name" value="{id}"><Text>{t}</Text></Ifeq>
  <Title><Value select="Input.Q"/></Title>
</Content>
<Footer>{t}</Footer>"#,
            h = a[0],
            link = a[1],
            t = a[2],
            title = a[3],
            action = a[4],
            label = a[5],
            id = a[6],
            olabel = a[7],
            submit = a[8],
        );
        let data = format!(
            "<Data><Customer><Name>{}</Name><Notes>{}</Notes></Customer></Data>",
            a[9],
            xml_escape(&pick(&mut rng))
        );
        let query = format!("Q={}", urlencode(&pick(&mut rng), true));
        let pages = xml(&format!(
            "<Pages><Page name=\"t.html\">{page}</Page></Pages>"
        ));
        let site = Site::from_xml(&pages, None, None).map_err(|e| e.to_string())?;
        let screen = build_screen(
            "t.html",
            "127.0.0.1",
            "",
            &parse_query(&query).unwrap(),
            Some(xml(&data)),
        );
        let html = site.render("t.html", &screen).map_err(|e| e.to_string())?;
        scan_html(&html).map_err(|e| format!("case {case}: {e}"))?;
        check(!html.to_ascii_lowercase().contains("<script"), || {
            format!("case {case}: script tag")
        })?;
    }
    Ok("200 fuzzed pages, no unexpected element or bare markup".into())
}

// 9 ---------------------------------------------------------------------

const STYLED: &str = r#"<Text>t</Text><Title>t</Title><SuperTitle>s</SuperTitle><Box>b</Box><Panel title="p">b</Panel><NoBox>n</NoBox>"#;

fn scheme_selection() -> Outcome {
    let schemes = std::fs::read_to_string(fixtures().join("schemes.xml")).unwrap();
    let doc = xml(&schemes);
    // Expected colors read straight from the scheme file.
    let color = |scheme: &str, path: &[&str]| -> String {
        let s = doc
            .children
            .iter()
            .find(|c| c.attr("name") == Some(scheme))
            .unwrap();
        let mut node = s;
        for seg in &path[..path.len() - 1] {
            node = node.child(seg).unwrap();
        }
        node.attr(path[path.len() - 1]).unwrap().to_string()
    };
    let pages = xml(&format!(
        "<Pages><Page name=\"t.html\">{STYLED}</Page></Pages>"
    ));
    let with = Site::from_xml(&pages, None, Some(&doc)).map_err(|e| e.to_string())?;
    let without = Site::from_xml(&pages, None, None).map_err(|e| e.to_string())?;
    let render = |site: &Site, domain: &str| {
        site.render(
            "t.html",
            &build_screen("t.html", "127.0.0.1", domain, &QueryParams::default(), None),
        )
    };

    for (domain, scheme) in [
        ("example.com", "example.com"),
        ("unknown.org", "default"),
        ("", "default"),
    ] {
        let html = render(&with, domain).map_err(|e| e.to_string())?;
        for (var, expect) in [
            (
                "body{background-color:",
                color(scheme, &["page", "background"]),
            ),
            (".ooml-text{color:", color(scheme, &["text", "color"])),
            (".ooml-title{color:", color(scheme, &["title", "color"])),
            (
                "border:1px solid ",
                color(scheme, &["box", "border", "color"]),
            ),
        ] {
            check(html.contains(&format!("{var}{expect}")), || {
                format!("{domain:?}: expected {var}{expect}")
            })?;
        }
    }
    for domain in ["example.com", "unknown.org", ""] {
        let html = render(&without, domain).map_err(|e| e.to_string())?;
        for needle in [
            "body{background-color:#ffffff}",
            ".ooml-text{color:#000000}",
            "border:1px solid #808080",
            r#"<p class="ooml-text">t</p>"#,
            r#"<h2 class="ooml-title">t</h2>"#,
            r#"<h1 class="ooml-supertitle">s</h1>"#,
            r#"<div class="ooml-panel-title">p</div>"#,
            "border:1px solid transparent",
        ] {
            check(html.contains(needle), || {
                format!("built-in defaults: missing {needle}")
            })?;
        }
    }
    Ok("example.com, default fallback and built-in totality".into())
}

// 10 --------------------------------------------------------------------

fn throughput() -> Outcome {
    let site = fixture_site();
    let screen = build_screen(
        "search.html",
        "127.0.0.1",
        "",
        &QueryParams::default(),
        None,
    );
    let first = site
        .render("search.html", &screen)
        .map_err(|e| e.to_string())?;
    let t = Instant::now();
    for _ in 0..10_000 {
        let html = site
            .render("search.html", &screen)
            .map_err(|e| e.to_string())?;
        debug_assert_eq!(html.len(), first.len());
    }
    let elapsed = t.elapsed();
    check(elapsed < Duration::from_secs(10), || {
        format!("10,000 renders took {elapsed:?}")
    })?;
    Ok(format!("10,000 renders in {elapsed:.2?}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("golden page", golden_page),
        ("atom selection", atom_selection),
        ("path algebra", path_algebra),
        ("control-flow complementarity", control_flow),
        ("macro semantics", macro_semantics),
        ("CGI round-trip", cgi_round_trip),
        ("server/CLI equivalence", server_cli_equivalence),
        ("escaping safety", safety),
        ("scheme selection", scheme_selection),
        ("throughput smoke", throughput),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("[PASS] {:>2}. {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2}. {name}: {detail}", n + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
