//! The JSON strategy file format (`psgraph_version` 1), its loader with
//! located diagnostics, export back to the format, and DOT rendering.
//!
//! ```json
//! {"psgraph_version": 1, "name": "intro-v1",
//!  "goaltypes": [{"name": "imp", "features": [{"ftype": "top_level_symbol", "args": ["-->"]}]}],
//!  "tactics": [{"name": "impI", "inputs": ["imp"], "outputs": ["other"], "impl": {"builtin": "impI"}}],
//!  "graph": {"vertices": [{"id": "a", "kind": "wire", "type": "imp"},
//!                         {"id": "t", "kind": "tactic", "tactic": "impI"}, ...],
//!            "edges": [{"source": "a", "target": "t", "port": "in1"}, ...],
//!            "inputs": ["a"], "outputs": ["b"]}}
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combinators::{Choice, ChoiceKind, GraphTactic};
use crate::data::{Datum, GoalId};
use crate::eval::{node_signature, EvalConfig, EvalOrder, Fuel, Strategy};
use crate::goaltype::{Feature, GoalType};
use crate::prover::{builtin, Scripted, Sequent};
use crate::registry::StrategyRegistry;
use crate::stringgraph::{check_well_formed, NodeData, Port, StringGraph, VertexId, VertexKind, Violation};
use crate::tactic::{Context, TacticSignature, TypedTactic};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    pub psgraph_version: u32,
    /// Registry key; defaults to the file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub goaltypes: Vec<GoalTypeDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tactics: Vec<TacticDecl>,
    pub graph: GraphSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalTypeDecl {
    pub name: String,
    #[serde(default)]
    pub features: Vec<Feature>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TacticDecl {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(rename = "impl")]
    pub implementation: TacticImpl,
    /// Evaluation order and fuel for graph-backed implementations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<EvalOrder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuel: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TacticImpl {
    /// A named prover primitive.
    Builtin(String),
    /// A registered strategy used as a graph tactic.
    Graph(String),
    Or([String; 2]),
    OrElse([String; 2]),
    /// A lookup table of goal → evaluations.
    Scripted(Vec<ScriptEntry>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEntry {
    pub goal: Sequent,
    /// Each evaluation is a list of subgoals.
    pub evaluations: Vec<Vec<Sequent>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: Vec<VertexSpec>,
    pub edges: Vec<EdgeSpec>,
    /// Boundary order; defaults to sorted vertex ids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum VertexSpec {
    Wire {
        id: String,
        #[serde(rename = "type")]
        ty: String,
    },
    Tactic {
        id: String,
        tactic: String,
    },
    Merge {
        id: String,
    },
    /// Only in debugger snapshots, never in strategy files.
    Goals {
        id: String,
        goals: Vec<u64>,
    },
}

impl VertexSpec {
    pub fn id(&self) -> &str {
        match self {
            VertexSpec::Wire { id, .. }
            | VertexSpec::Tactic { id, .. }
            | VertexSpec::Merge { id }
            | VertexSpec::Goals { id, .. } => id,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// A problem found while loading, with a JSON path into the file and,
/// where it can be found, a line and column.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: String,
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, "{l}:{c}: ")?;
        }
        write!(f, "{sev}[{}]", self.kind)?;
        if !self.path.is_empty() {
            write!(f, " at {}", self.path)?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{origin}: {}", render(.diagnostics))]
    Invalid { origin: String, diagnostics: Vec<Diagnostic> },
    #[error("unknown strategy {0}")]
    UnknownStrategy(String),
    #[error("strategy {0} is already registered")]
    Duplicate(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

fn render(ds: &[Diagnostic]) -> String {
    ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

impl LoadError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            LoadError::Invalid { diagnostics, .. } => diagnostics,
            _ => &[],
        }
    }
}

/// A strategy together with the file it was loaded from.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub file: StrategyFile,
    pub strategy: Arc<Strategy>,
    pub warnings: Vec<Diagnostic>,
}

struct Diags<'a> {
    text: &'a str,
    out: Vec<Diagnostic>,
}

impl Diags<'_> {
    fn push(&mut self, severity: Severity, kind: &str, path: impl Into<String>, near: Option<&str>, msg: String) {
        let (line, column) = match near.and_then(|n| locate(self.text, n)) {
            Some((l, c)) => (Some(l), Some(c)),
            None => (None, None),
        };
        self.out.push(Diagnostic { severity, kind: kind.into(), path: path.into(), line, column, message: msg });
    }

    fn error(&mut self, kind: &str, path: impl Into<String>, near: Option<&str>, msg: String) {
        self.push(Severity::Error, kind, path, near, msg)
    }

    fn has_errors(&self) -> bool {
        self.out.iter().any(|d| d.severity == Severity::Error)
    }
}

/// Line and column (from 1) of the vertex declaration with id `needle`,
/// else of the first occurrence of `"needle"` as a JSON string.
fn locate(text: &str, needle: &str) -> Option<(usize, usize)> {
    let quoted = serde_json::to_string(needle).ok()?;
    let as_id = text.match_indices("\"id\"").find_map(|(i, k)| {
        let rest = text[i + k.len()..].trim_start().strip_prefix(':')?.trim_start();
        rest.starts_with(&quoted).then_some(i)
    });
    let at = as_id.or_else(|| text.find(&quoted))?;
    let before = &text[..at];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Some((line, column))
}

fn violation_vertex(v: &Violation) -> &VertexId {
    match v {
        Violation::DanglingEdge { source, .. }
        | Violation::NodeToNode { source, .. }
        | Violation::UnexpectedPortLabel { source, .. } => source,
        Violation::FanIn { wire, .. }
        | Violation::FanOut { wire, .. }
        | Violation::Circle { wire }
        | Violation::UnknownType { wire, .. } => wire,
        Violation::ChainType { from, .. } => from,
        Violation::MissingPortLabel { node, .. }
        | Violation::PortDirection { node, .. }
        | Violation::DuplicatePort { node, .. }
        | Violation::Arity { node, .. }
        | Violation::MissingPort { node, .. }
        | Violation::PortType { node, .. }
        | Violation::UnknownMap { node, .. }
        | Violation::MergeShape { node }
        | Violation::GoalNodeShape { node } => node,
    }
}

fn vertex_path(spec: &GraphSpec, id: &str) -> String {
    match spec.vertices.iter().position(|v| v.id() == id) {
        Some(i) => format!("graph.vertices[{i}]"),
        None => "graph".into(),
    }
}

/// Parses and validates a strategy file. `origin` names the file in
/// messages and supplies the registry key when the file has no `name`.
/// Graph-tactic references resolve against `registry`.
pub fn load_str(text: &str, origin: &str, registry: &StrategyRegistry) -> Result<Loaded, LoadError> {
    let invalid = |diagnostics| LoadError::Invalid { origin: origin.to_owned(), diagnostics };
    let file: StrategyFile = match serde_json::from_str(text) {
        Ok(f) => f,
        Err(e) => {
            return Err(invalid(vec![Diagnostic {
                severity: Severity::Error,
                kind: "parse".into(),
                path: String::new(),
                line: Some(e.line()),
                column: Some(e.column()),
                message: e.to_string(),
            }]))
        }
    };
    let mut d = Diags { text, out: vec![] };
    match build(&file, origin, registry, &mut d) {
        Some(strategy) if !d.has_errors() => {
            Ok(Loaded { file, strategy: Arc::new(strategy), warnings: d.out })
        }
        _ => Err(invalid(d.out)),
    }
}

fn build(file: &StrategyFile, origin: &str, registry: &StrategyRegistry, d: &mut Diags) -> Option<Strategy> {
    if file.psgraph_version != FORMAT_VERSION {
        d.error(
            "version",
            "psgraph_version",
            None,
            format!("unsupported format version {} (expected {FORMAT_VERSION})", file.psgraph_version),
        );
        return None;
    }
    let name = file.name.clone().unwrap_or_else(|| origin.to_owned());
    let ctx = build_context(file, registry, d);
    let graph = build_graph(&file.graph, d, false);

    let mut probe = Strategy::new(name.clone(), graph.clone(), Arc::new(ctx.clone()));
    for v in check_well_formed(&graph, &probe.wf_signature()) {
        let at = violation_vertex(&v).as_str().to_owned();
        d.error(v.kind(), vertex_path(&file.graph, &at), Some(&at), v.to_string());
    }
    check_tactic_nodes(&graph, &ctx, &file.tactics, &file.graph, d);

    let ids = |given: &Option<Vec<String>>| given.as_ref().map(|v| v.iter().map(VertexId::new).collect::<Vec<_>>());
    let (ins, outs) = (ids(&file.graph.inputs), ids(&file.graph.outputs));
    if ins.is_some() || outs.is_some() {
        let ins = ins.unwrap_or_else(|| probe.inputs.clone());
        let outs = outs.unwrap_or_else(|| probe.outputs.clone());
        match Strategy::with_boundary(name, graph, ins, outs, probe.ctx.clone()) {
            Ok(s) => probe = s,
            Err(e) => d.error("boundary", "graph", None, e.to_string()),
        }
    }
    Some(probe)
}

fn build_context(file: &StrategyFile, registry: &StrategyRegistry, d: &mut Diags) -> Context {
    let mut ctx = Context::default();
    for (i, gt) in file.goaltypes.iter().enumerate() {
        let path = format!("goaltypes[{i}]");
        if gt.name == "any" || file.goaltypes[..i].iter().any(|o| o.name == gt.name) {
            d.error("duplicate-type", &path, Some(&gt.name), format!("goal type {} declared twice", gt.name));
            continue;
        }
        for (j, f) in gt.features.iter().enumerate() {
            if let Err(e) = ctx.types.features.check(f) {
                d.error("feature", format!("{path}.features[{j}]"), Some(&f.ftype), e.to_string());
            }
        }
        if let Err(e) = ctx.types.insert(GoalType::new(gt.name.clone(), gt.features.iter().cloned())) {
            d.error("feature", &path, Some(&gt.name), e.to_string());
        }
    }

    // Goal types of referenced strategies are visible unless redeclared.
    for t in &file.tactics {
        let refs: &[String] = match &t.implementation {
            TacticImpl::Graph(s) => std::slice::from_ref(s),
            TacticImpl::Or(p) | TacticImpl::OrElse(p) => p,
            _ => &[],
        };
        for r in refs {
            if let Ok(l) = registry.get(r) {
                ctx.extend_from(&Context { types: l.strategy.ctx.types.clone(), ..Default::default() });
            }
        }
    }

    for (i, t) in file.tactics.iter().enumerate() {
        let path = format!("tactics[{i}]");
        let sig = TacticSignature { inputs: t.inputs.clone(), outputs: t.outputs.clone() };
        let mut ok = true;
        for (field, names) in [("inputs", &t.inputs), ("outputs", &t.outputs)] {
            for (j, n) in names.iter().enumerate() {
                if !ctx.types.contains(n) {
                    d.error("unknown-type", format!("{path}.{field}[{j}]"), Some(n), format!("undeclared goal type {n}"));
                    ok = false;
                }
            }
        }
        if t.inputs.is_empty() {
            d.error("signature", &path, Some(&t.name), format!("tactic {} has no inputs", t.name));
            ok = false;
        }
        if ctx.tactics.get(&t.name, &sig).is_some() {
            d.error("duplicate-tactic", &path, Some(&t.name), format!("tactic {} declared twice at {sig}", t.name));
            ok = false;
        }
        if !ok {
            continue;
        }
        let ipath = format!("{path}.impl");
        let mut config = EvalConfig::default();
        if let Some(o) = t.order {
            config.order = o;
        }
        if let Some(f) = t.fuel {
            config.fuel = Fuel::Steps(f);
        }
        let graph_tactic = |d: &mut Diags, s: &str| -> Option<Arc<GraphTactic>> {
            match registry.get(s) {
                Ok(l) => Some(Arc::new(GraphTactic::new(t.name.clone(), l.strategy.clone(), config))),
                Err(e) => {
                    d.error("unknown-strategy", &ipath, Some(s), e.to_string());
                    None
                }
            }
        };
        let tactic: Option<Arc<dyn TypedTactic>> = match &t.implementation {
            TacticImpl::Builtin(b) => match builtin(b) {
                Some(p) => match ctx.add_atomic(&t.name, sig.clone(), p) {
                    Ok(()) => None,
                    Err(e) => {
                        d.error("feature", &ipath, Some(b), e.to_string());
                        None
                    }
                },
                None => {
                    d.error("unknown-builtin", &ipath, Some(b), format!("no builtin primitive {b}"));
                    None
                }
            },
            TacticImpl::Scripted(entries) => {
                let table = entries.iter().map(|e| (e.goal.clone(), e.evaluations.clone())).collect();
                let p = Arc::new(Scripted { name: t.name.clone(), table });
                if let Err(e) = ctx.add_atomic(&t.name, sig.clone(), p) {
                    d.error("feature", &ipath, None, e.to_string());
                }
                None
            }
            TacticImpl::Graph(s) => graph_tactic(d, s).map(|g| g as Arc<dyn TypedTactic>),
            TacticImpl::Or([a, b]) | TacticImpl::OrElse([a, b]) => {
                let kind = if matches!(t.implementation, TacticImpl::Or(_)) { ChoiceKind::Or } else { ChoiceKind::OrElse };
                match (graph_tactic(d, a), graph_tactic(d, b)) {
                    (Some(l), Some(r)) => match Choice::new(t.name.clone(), kind, l, r) {
                        Ok(c) => Some(Arc::new(c)),
                        Err(e) => {
                            d.error("signature", &ipath, Some(&t.name), e.to_string());
                            None
                        }
                    },
                    _ => None,
                }
            }
        };
        if let Some(tac) = tactic {
            if *tac.signature() != sig {
                d.error(
                    "signature",
                    &ipath,
                    Some(&t.name),
                    format!("{} is declared at {sig} but its graph has signature {}", t.name, tac.signature()),
                );
            } else {
                ctx.tactics.register(tac);
            }
        }
    }
    ctx
}

fn build_graph(spec: &GraphSpec, d: &mut Diags, allow_goals: bool) -> StringGraph {
    let mut g = StringGraph::new();
    for (i, v) in spec.vertices.iter().enumerate() {
        let path = format!("graph.vertices[{i}]");
        let id = VertexId::new(v.id());
        if g.contains(&id) {
            d.error("duplicate-vertex", &path, Some(v.id()), format!("vertex {id} declared twice"));
            continue;
        }
        let kind = match v {
            VertexSpec::Wire { ty, .. } => VertexKind::Wire(Datum::sym(ty)),
            VertexSpec::Tactic { tactic, .. } => VertexKind::Node(NodeData::Tactic(Datum::sym(tactic))),
            VertexSpec::Merge { .. } => VertexKind::Node(NodeData::Merge),
            VertexSpec::Goals { goals, .. } if allow_goals => {
                VertexKind::Node(NodeData::Goals(Datum::goals(goals.iter().map(|n| GoalId(*n)))))
            }
            VertexSpec::Goals { .. } => {
                d.error("goal-node", &path, Some(v.id()), "strategy files cannot hold goal nodes".into());
                continue;
            }
        };
        g.add_vertex(id, kind);
    }
    for (i, e) in spec.edges.iter().enumerate() {
        let port = match &e.port {
            None => None,
            Some(p) => match Port::parse(p) {
                Some(p) => Some(p),
                None => {
                    d.error("bad-port", format!("graph.edges[{i}].port"), Some(p), format!("bad port label {p:?}"));
                    continue;
                }
            },
        };
        g.add_edge(e.source.as_str(), e.target.as_str(), port);
    }
    g
}

fn check_tactic_nodes(g: &StringGraph, ctx: &Context, decls: &[TacticDecl], spec: &GraphSpec, d: &mut Diags) {
    for (id, k) in g.vertices() {
        let VertexKind::Node(NodeData::Tactic(Datum::Sym(name))) = k else { continue };
        let path = vertex_path(spec, id.as_str());
        let declared = ctx.tactics.signatures(name);
        if declared.is_empty() && decls.iter().any(|t| t.name == *name) {
            // Its declaration was already reported.
            continue;
        }
        if declared.is_empty() {
            d.error("unknown-tactic", path, Some(id.as_str()), format!("{id} uses undeclared tactic {name}"));
            continue;
        }
        let Some(used) = node_signature(g, id) else { continue };
        if ctx.tactics.get(name, &used).is_none() {
            let list = declared.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("; ");
            let kind = if declared.iter().any(|s| s.inputs.len() == used.inputs.len() && s.outputs.len() == used.outputs.len()) {
                "port-type"
            } else {
                "arity"
            };
            d.error(kind, path, Some(id.as_str()), format!("{id} uses {name} at {used}, declared at {list}"));
        }
    }
}

/// The graph a [`GraphSpec`] describes, goal nodes included. Only
/// syntactic problems are reported; well-formedness is not checked.
pub fn graph_from_spec(spec: &GraphSpec) -> Result<StringGraph, Vec<Diagnostic>> {
    let mut d = Diags { text: "", out: vec![] };
    let g = build_graph(spec, &mut d, true);
    if d.has_errors() {
        Err(d.out)
    } else {
        Ok(g)
    }
}

/// A graph in file form: vertices sorted by id, edges sorted.
pub fn graph_spec(g: &StringGraph, inputs: &[VertexId], outputs: &[VertexId]) -> GraphSpec {
    let text = |d: &Datum| d.as_sym().map(str::to_owned).unwrap_or_else(|| d.to_string());
    let vertices = g
        .vertices()
        .map(|(id, k)| {
            let id = id.as_str().to_owned();
            match k {
                VertexKind::Wire(t) => VertexSpec::Wire { id, ty: text(t) },
                VertexKind::Node(NodeData::Tactic(t)) => VertexSpec::Tactic { id, tactic: text(t) },
                VertexKind::Node(NodeData::Merge) => VertexSpec::Merge { id },
                VertexKind::Node(NodeData::Goals(gs)) => VertexSpec::Goals {
                    id,
                    goals: gs.as_goal_list().unwrap_or_default().into_iter().map(|GoalId(n)| n).collect(),
                },
            }
        })
        .collect();
    let mut edges: Vec<EdgeSpec> = g
        .edges()
        .iter()
        .map(|e| EdgeSpec {
            source: e.source.as_str().to_owned(),
            target: e.target.as_str().to_owned(),
            port: e.port.as_ref().map(|p| p.to_string()),
        })
        .collect();
    edges.sort();
    let names = |vs: &[VertexId]| Some(vs.iter().map(|v| v.as_str().to_owned()).collect());
    GraphSpec { vertices, edges, inputs: names(inputs), outputs: names(outputs) }
}

/// The file for a loaded strategy, with its graph in canonical form.
pub fn export(l: &Loaded) -> StrategyFile {
    let s = &l.strategy;
    StrategyFile {
        name: Some(s.name.clone()),
        graph: graph_spec(&s.graph, &s.inputs, &s.outputs),
        ..l.file.clone()
    }
}

pub fn export_json(l: &Loaded) -> String {
    serde_json::to_string_pretty(&export(l)).expect("strategy files serialize")
}

/// Graphviz rendering: tactics as boxes, merges as dots, wires as labelled
/// points, goal nodes as notes.
pub fn export_dot(s: &Strategy) -> String {
    let mut out = format!("digraph {:?} {{\n  rankdir=TB;\n", s.name);
    let boundary: BTreeSet<&VertexId> = s.inputs.iter().chain(&s.outputs).collect();
    for (id, k) in s.graph.vertices() {
        let attrs = match k {
            VertexKind::Wire(t) if boundary.contains(id) => format!("shape=plaintext, label={:?}", t.to_string()),
            VertexKind::Wire(t) => format!("shape=point, xlabel={:?}", t.to_string()),
            VertexKind::Node(NodeData::Tactic(t)) => format!("shape=box, label={:?}", t.to_string()),
            VertexKind::Node(NodeData::Merge) => "shape=circle, width=0.15, label=\"\"".to_owned(),
            VertexKind::Node(NodeData::Goals(gs)) => format!("shape=note, label={:?}", gs.to_string()),
        };
        out.push_str(&format!("  {:?} [{attrs}];\n", id.as_str()));
    }
    for e in s.graph.edges() {
        let label = e.port.as_ref().map(|p| format!(" [taillabel={:?}]", p.to_string())).unwrap_or_default();
        out.push_str(&format!("  {:?} -> {:?}{label};\n", e.source.as_str(), e.target.as_str()));
    }
    out.push_str("}\n");
    out
}
