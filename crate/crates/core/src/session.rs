//! Batch runs reported per output wire, and the interactive debug session
//! driven by newline-delimited JSON requests.
//!
//! Requests: `{"cmd":"step"}` (optionally `"branch":k`), `{"cmd":"backtrack"}`,
//! `{"cmd":"finish"}`, `{"cmd":"snapshot"}`. Every successful reply is a
//! [`Snapshot`]; failures are `{"error":code, "message":...}`.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{
    eval_to_enf, output_sequents, successors, EvalConfig, EvalError, EvalState, GoalRecord, Leaf, Strategy,
    TraceEntry,
};
use crate::prover::Sequent;
use crate::strategy_file::{graph_spec, GraphSpec};

/// Trace entries included in each snapshot.
pub const TRACE_TAIL: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputGoals {
    pub wire: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub goals: Vec<Sequent>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnfResult {
    pub steps: usize,
    pub outputs: Vec<OutputGoals>,
}

impl EnfResult {
    /// Goals per wire type, outputs of equal type concatenated in output
    /// order. This is how results are printed.
    pub fn by_type(&self) -> Vec<(String, Vec<Sequent>)> {
        let mut out: Vec<(String, Vec<Sequent>)> = Vec::new();
        for o in &self.outputs {
            match out.iter_mut().find(|(t, _)| *t == o.ty) {
                Some((_, gs)) => gs.extend(o.goals.iter().cloned()),
                None => out.push((o.ty.clone(), o.goals.clone())),
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub strategy: String,
    pub goal: Sequent,
    pub results: Vec<EnfResult>,
    /// Branches cut off by fuel.
    pub fuel_exhausted: usize,
    /// Branches where a goal had nowhere to go.
    pub failed: usize,
    /// Whether enumeration stopped at the result limit.
    pub truncated: bool,
}

impl RunReport {
    pub fn success(&self) -> bool {
        !self.results.is_empty()
    }
}

fn list(gs: &[Sequent]) -> String {
    gs.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.results.is_empty() {
            return writeln!(
                f,
                "no ENF for {} under {} ({} failed branches, {} out of fuel)",
                self.goal, self.strategy, self.failed, self.fuel_exhausted
            );
        }
        let n = self.results.len();
        for (i, r) in self.results.iter().enumerate() {
            if n > 1 {
                writeln!(f, "ENF {} of {n} ({} steps):", i + 1, r.steps)?;
            }
            for (ty, gs) in r.by_type() {
                let indent = if n > 1 { "  " } else { "" };
                writeln!(f, "{indent}{ty}: [{}]", list(&gs))?;
            }
        }
        if self.truncated {
            writeln!(f, "(stopped after {n} results)")?;
        }
        Ok(())
    }
}

pub fn enf_result(s: &EvalState, strategy: &Strategy) -> EnfResult {
    let outputs = output_sequents(s, strategy)
        .into_iter()
        .zip(strategy.outputs.iter().zip(strategy.output_types()))
        .map(|(goals, (w, ty))| OutputGoals { wire: w.as_str().to_owned(), ty, goals })
        .collect();
    EnfResult { steps: s.steps(), outputs }
}

/// Evaluates `goal` on the first input of `strategy`, collecting at most
/// `max_results` ENF results.
pub fn run(
    strategy: Arc<Strategy>,
    goal: Sequent,
    config: EvalConfig,
    max_results: usize,
) -> Result<RunReport, EvalError> {
    let root = EvalState::seed(&strategy, 1, goal.clone())?;
    let mut tree = eval_to_enf(strategy.clone(), root, config);
    let mut report = RunReport {
        strategy: strategy.name.clone(),
        goal,
        results: vec![],
        fuel_exhausted: 0,
        failed: 0,
        truncated: false,
    };
    for leaf in tree.by_ref() {
        match leaf? {
            Leaf::Enf(s) => {
                if report.results.len() == max_results {
                    report.truncated = true;
                    break;
                }
                report.results.push(enf_result(&s, &strategy));
            }
            Leaf::FuelExhausted(_) => report.fuel_exhausted += 1,
        }
    }
    report.failed = tree.failed;
    Ok(report)
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("no step possible from this state")]
    NoStep,
    #[error("nothing to backtrack to")]
    HistoryEmpty,
    #[error("the session has finished; backtrack to resume")]
    Finished,
    #[error("branch {branch} requested but only {open_branches} open")]
    NoSuchBranch { branch: usize, open_branches: usize },
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("evaluation failed: {0}")]
    Eval(String),
}

impl ProtocolError {
    pub fn code(&self) -> &'static str {
        match self {
            ProtocolError::NoStep => "no_step",
            ProtocolError::HistoryEmpty => "history_empty",
            ProtocolError::Finished => "finished",
            ProtocolError::NoSuchBranch { .. } => "no_such_branch",
            ProtocolError::BadRequest(_) => "bad_request",
            ProtocolError::Eval(_) => "eval",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({"error": self.code(), "message": self.to_string()});
        if let ProtocolError::NoSuchBranch { open_branches, .. } = self {
            v["open_branches"] = (*open_branches).into();
        }
        v
    }
}

impl From<EvalError> for ProtocolError {
    fn from(e: EvalError) -> Self {
        ProtocolError::Eval(e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "lowercase", deny_unknown_fields)]
pub enum Request {
    Step {
        #[serde(default)]
        branch: Option<usize>,
    },
    Backtrack,
    Finish,
    Snapshot,
}

/// Where a goal node sits: the wire directly downstream of it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalPosition {
    pub node: String,
    pub wire: String,
    pub wire_type: String,
    pub goals: Vec<GoalRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub session: u64,
    pub step_no: usize,
    pub graph: GraphSpec,
    pub goal_positions: Vec<GoalPosition>,
    pub open_branches: usize,
    pub is_enf: bool,
    pub finished: bool,
    pub history_depth: usize,
    pub trace_tail: Vec<TraceEntry>,
    /// Present once the session is finished: the goals left in the graph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remaining_subgoals: Option<Vec<GoalRecord>>,
}

static SESSION_IDS: AtomicU64 = AtomicU64::new(1);

/// One stepping session over one evaluation tree. The cursor is always a
/// state of that tree; `history` holds its ancestors.
pub struct DebugSession {
    pub id: u64,
    strategy: Arc<Strategy>,
    config: EvalConfig,
    current: EvalState,
    children: Option<Vec<EvalState>>,
    history: Vec<EvalState>,
    finished: bool,
}

impl DebugSession {
    pub fn new(strategy: Arc<Strategy>, goal: Sequent, config: EvalConfig) -> Result<Self, EvalError> {
        let root = EvalState::seed(&strategy, 1, goal)?;
        Ok(DebugSession {
            id: SESSION_IDS.fetch_add(1, Ordering::Relaxed),
            strategy,
            config,
            current: root,
            children: None,
            history: vec![],
            finished: false,
        })
    }

    pub fn state(&self) -> &EvalState {
        &self.current
    }

    fn children(&mut self) -> Result<&[EvalState], ProtocolError> {
        if self.children.is_none() {
            let s = &self.current;
            let kids = if s.is_enf() || !self.config.fuel.allows(s.steps()) {
                vec![]
            } else {
                successors(&self.strategy, s, &self.config)?.collect::<Result<Vec<_>, _>>()?
            };
            self.children = Some(kids);
        }
        Ok(self.children.as_deref().unwrap_or_default())
    }

    pub fn snapshot(&mut self) -> Result<Snapshot, ProtocolError> {
        let open_branches = if self.finished { 0 } else { self.children()?.len() };
        let s = &self.current;
        let g = &s.graph;
        let goal_positions = s
            .goal_nodes()
            .into_iter()
            .map(|(n, gs)| {
                let wire = g.successor(&n).map(|e| e.target.clone());
                let wire_type = wire.as_ref().and_then(|w| g.wire_type(w)).map(|t| t.to_string()).unwrap_or_default();
                GoalPosition {
                    node: n.as_str().to_owned(),
                    wire: wire.map(|w| w.as_str().to_owned()).unwrap_or_default(),
                    wire_type,
                    goals: gs.iter().map(|id| record(s, *id)).collect(),
                }
            })
            .collect::<Vec<_>>();
        let remaining_subgoals =
            self.finished.then(|| goal_positions.iter().flat_map(|p| p.goals.iter().cloned()).collect());
        let tail_from = s.trace.len().saturating_sub(TRACE_TAIL);
        Ok(Snapshot {
            session: self.id,
            step_no: s.steps(),
            graph: graph_spec(g, &self.strategy.inputs, &self.strategy.outputs),
            goal_positions,
            open_branches,
            is_enf: s.is_enf(),
            finished: self.finished,
            history_depth: self.history.len(),
            trace_tail: s.trace[tail_from..].to_vec(),
            remaining_subgoals,
        })
    }

    /// Takes branch `branch` (default 0) of the next step.
    pub fn step(&mut self, branch: Option<usize>) -> Result<Snapshot, ProtocolError> {
        if self.finished {
            return Err(ProtocolError::Finished);
        }
        let k = branch.unwrap_or(0);
        let open = self.children()?.len();
        if open == 0 {
            return Err(ProtocolError::NoStep);
        }
        if k >= open {
            return Err(ProtocolError::NoSuchBranch { branch: k, open_branches: open });
        }
        let mut kids = self.children.take().unwrap_or_default();
        let next = kids.swap_remove(k);
        self.history.push(std::mem::replace(&mut self.current, next));
        self.snapshot()
    }

    /// Returns to the state before the last step (or before `finish`).
    pub fn backtrack(&mut self) -> Result<Snapshot, ProtocolError> {
        if self.finished {
            self.finished = false;
            return self.snapshot();
        }
        let prev = self.history.pop().ok_or(ProtocolError::HistoryEmpty)?;
        self.current = prev;
        self.children = None;
        self.snapshot()
    }

    /// Stops evaluating; the goals still in the graph are reported as the
    /// remaining subgoals.
    pub fn finish(&mut self) -> Result<Snapshot, ProtocolError> {
        if self.finished {
            return Err(ProtocolError::Finished);
        }
        self.finished = true;
        self.snapshot()
    }

    pub fn handle(&mut self, req: Request) -> Result<Snapshot, ProtocolError> {
        match req {
            Request::Step { branch } => self.step(branch),
            Request::Backtrack => self.backtrack(),
            Request::Finish => self.finish(),
            Request::Snapshot => self.snapshot(),
        }
    }

    /// One protocol line in, one JSON line out.
    pub fn handle_line(&mut self, line: &str) -> String {
        let reply = serde_json::from_str::<Request>(line)
            .map_err(|e| ProtocolError::BadRequest(e.to_string()))
            .and_then(|r| self.handle(r));
        match reply {
            Ok(snap) => serde_json::to_string(&snap).expect("snapshots serialize"),
            Err(e) => e.to_json().to_string(),
        }
    }
}

fn record(s: &EvalState, id: crate::data::GoalId) -> GoalRecord {
    GoalRecord { id: id.to_string(), goal: s.proof.goal(id).map(|g| g.to_string()).unwrap_or_default() }
}

/// Serves one session over a line stream until end of input.
pub fn serve_lines<R: BufRead, W: Write>(session: &mut DebugSession, input: R, mut output: W) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(output, "{}", session.handle_line(&line))?;
        output.flush()?;
    }
    Ok(())
}

pub fn serve_connection(session: &mut DebugSession, stream: TcpStream) -> std::io::Result<()> {
    let reader = BufReader::new(stream.try_clone()?);
    serve_lines(session, reader, stream)
}

/// Accepts connections one at a time, each with a fresh session from
/// `new_session`. Stops after `max_connections` if given.
pub fn serve_tcp(
    listener: &TcpListener,
    mut new_session: impl FnMut() -> Result<DebugSession, EvalError>,
    max_connections: Option<usize>,
) -> std::io::Result<()> {
    let mut served = 0;
    for stream in listener.incoming() {
        let stream = stream?;
        match new_session() {
            Ok(mut s) => serve_connection(&mut s, stream)?,
            Err(e) => {
                let mut stream = stream;
                writeln!(stream, "{}", ProtocolError::from(e).to_json())?;
            }
        }
        served += 1;
        if max_connections.is_some_and(|m| served >= m) {
            break;
        }
    }
    Ok(())
}
