//! GEXF / DOT / CSV views of a retweet graph for external tools.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{self, Write};

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{adjacency, RetweetGraph};
use crate::diffusion::DangerCategory;
use crate::error::{Error, Result};

const GEXF_NS: &str = "http://www.gexf.net/1.2draft";

fn category_of<'a>(
    g: &RetweetGraph,
    categories: &'a BTreeMap<String, DangerCategory>,
) -> Result<Vec<&'a DangerCategory>> {
    g.nodes()
        .iter()
        .map(|id| {
            categories
                .get(id)
                .ok_or_else(|| Error::invalid(format!("no danger category for node {id:?}")))
        })
        .collect()
}

/// Renders a GEXF 1.2 document: directed weighted edges, plus node
/// attributes `dac` (N/M/V) and `original_tweets`.
pub fn export_gexf(
    g: &RetweetGraph,
    categories: &BTreeMap<String, DangerCategory>,
) -> Result<String> {
    let cats = category_of(g, categories)?;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<gexf xmlns=\"{GEXF_NS}\" version=\"1.2\">");
    out.push_str("  <graph mode=\"static\" defaultedgetype=\"directed\">\n");
    out.push_str("    <attributes class=\"node\">\n");
    out.push_str("      <attribute id=\"0\" title=\"dac\" type=\"string\"/>\n");
    out.push_str("      <attribute id=\"1\" title=\"original_tweets\" type=\"integer\"/>\n");
    out.push_str("    </attributes>\n");
    out.push_str("    <nodes>\n");
    for (i, id) in g.nodes().iter().enumerate() {
        let id = escape(id.as_str());
        let _ = writeln!(out, "      <node id=\"{id}\" label=\"{id}\">");
        let _ = writeln!(
            out,
            "        <attvalues><attvalue for=\"0\" value=\"{}\"/><attvalue for=\"1\" value=\"{}\"/></attvalues>",
            cats[i],
            g.original(i)
        );
        out.push_str("      </node>\n");
    }
    out.push_str("    </nodes>\n");
    out.push_str("    <edges>\n");
    for (k, (u, v, w)) in g.edges().enumerate() {
        let _ = writeln!(
            out,
            "      <edge id=\"{k}\" source=\"{}\" target=\"{}\" weight=\"{w}\"/>",
            escape(g.nodes()[u].as_str()),
            escape(g.nodes()[v].as_str()),
        );
    }
    out.push_str("    </edges>\n");
    out.push_str("  </graph>\n");
    out.push_str("</gexf>\n");
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedGexf {
    pub graph: RetweetGraph,
    pub categories: BTreeMap<String, DangerCategory>,
}

fn attrs(e: &BytesStart<'_>) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    for a in e.attributes() {
        let a = a.map_err(|err| Error::Parse(format!("gexf attribute: {err}")))?;
        let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
        let value = a
            .unescape_value()
            .map_err(|err| Error::Parse(format!("gexf attribute value: {err}")))?
            .into_owned();
        out.insert(key, value);
    }
    Ok(out)
}

fn required<'a>(map: &'a HashMap<String, String>, key: &str, tag: &str) -> Result<&'a str> {
    map.get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::Parse(format!("<{tag}> without {key}")))
}

/// Reads back a document written by [`export_gexf`].
pub fn parse_gexf(doc: &str) -> Result<ParsedGexf> {
    let mut reader = Reader::from_str(doc);
    reader.config_mut().trim_text(true);

    let mut attr_titles: HashMap<String, String> = HashMap::new();
    let mut nodes: Vec<String> = Vec::new();
    let mut original: Vec<u64> = Vec::new();
    let mut categories = BTreeMap::new();
    let mut raw_edges: Vec<(String, String, u64)> = Vec::new();
    let mut current: Option<String> = None;

    loop {
        let event = reader
            .read_event()
            .map_err(|e| Error::Parse(format!("gexf: {e}")))?;
        let (e, is_empty) = match &event {
            Event::Start(e) => (e, false),
            Event::Empty(e) => (e, true),
            Event::End(e) => {
                if e.name().as_ref() == b"node" {
                    current = None;
                }
                continue;
            }
            Event::Eof => break,
            _ => continue,
        };
        match e.name().as_ref() {
            b"attribute" => {
                let a = attrs(e)?;
                attr_titles.insert(
                    required(&a, "id", "attribute")?.to_string(),
                    required(&a, "title", "attribute")?.to_string(),
                );
            }
            b"node" => {
                let a = attrs(e)?;
                let id = required(&a, "id", "node")?.to_string();
                nodes.push(id.clone());
                original.push(0);
                if !is_empty {
                    current = Some(id);
                }
            }
            b"attvalue" => {
                let node = current
                    .as_ref()
                    .ok_or_else(|| Error::Parse("<attvalue> outside <node>".into()))?;
                let a = attrs(e)?;
                let key = required(&a, "for", "attvalue")?;
                let value = required(&a, "value", "attvalue")?;
                match attr_titles.get(key).map(String::as_str) {
                    Some("dac") => {
                        categories.insert(node.clone(), value.parse()?);
                    }
                    Some("original_tweets") => {
                        *original.last_mut().expect("inside a node") = value
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad original_tweets {value:?}")))?;
                    }
                    _ => {}
                }
            }
            b"edge" => {
                let a = attrs(e)?;
                let w = a.get("weight").map_or("1", String::as_str);
                let w: f64 = w
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad edge weight {w:?}")))?;
                if w < 0.0 || w.fract() != 0.0 {
                    return Err(Error::Parse(format!("edge weight {w} is not a count")));
                }
                raw_edges.push((
                    required(&a, "source", "edge")?.to_string(),
                    required(&a, "target", "edge")?.to_string(),
                    w as u64,
                ));
            }
            _ => {}
        }
    }

    let pos: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut edges = Vec::with_capacity(raw_edges.len());
    for (s, t, w) in &raw_edges {
        let (Some(&u), Some(&v)) = (pos.get(s.as_str()), pos.get(t.as_str())) else {
            return Err(Error::Parse(format!("edge {s:?} -> {t:?} names an unknown node")));
        };
        edges.push((u, v, *w));
    }
    let graph = RetweetGraph::from_parts(nodes, original, edges)?;
    Ok(ParsedGexf { graph, categories })
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn export_dot(
    g: &RetweetGraph,
    categories: &BTreeMap<String, DangerCategory>,
) -> Result<String> {
    let cats = category_of(g, categories)?;
    let mut out = String::from("digraph retweets {\n");
    for (i, id) in g.nodes().iter().enumerate() {
        let _ = writeln!(
            out,
            "  {} [dac=\"{}\", original_tweets={}];",
            dot_quote(id),
            cats[i],
            g.original(i)
        );
    }
    for (u, v, w) in g.edges() {
        let _ = writeln!(
            out,
            "  {} -> {} [weight={w}];",
            dot_quote(&g.nodes()[u]),
            dot_quote(&g.nodes()[v])
        );
    }
    out.push_str("}\n");
    Ok(out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Nonzero adjacency entries as `row,col,value` with node ids.
pub fn write_adjacency_csv<W: Write>(g: &RetweetGraph, mut w: W) -> io::Result<()> {
    writeln!(w, "row,col,value")?;
    for (r, c, v) in adjacency(g).entries() {
        writeln!(
            w,
            "{},{},{}",
            csv_field(&g.nodes()[r]),
            csv_field(&g.nodes()[c]),
            v
        )?;
    }
    Ok(())
}
