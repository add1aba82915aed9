use std::collections::BTreeMap;
use std::sync::atomic::Ordering;
use std::sync::Arc;

use psgraph::combinators::{repeat, then, unfold_in_strategy, Choice, ChoiceKind, GraphTactic, MAX_DEPTH};
use psgraph::eval::{eval_to_enf, output_sequents, EvalConfig, EvalState, Leaf, Strategy};
use psgraph::prover::{builtin, parse_sequent, Primitive, Scripted, Sequent};
use psgraph::registry::StrategyRegistry;
use psgraph::session::run;
use psgraph::stringgraph::{is_isomorphic, StringGraph, VertexId};
use psgraph::tactic::{Context, Counted, TacticError, TacticSignature, TypedTactic};

fn s(src: &str) -> Sequent {
    parse_sequent(src).unwrap()
}

/// Multiset of goals per output, over all ENF results.
fn outcomes(st: &Arc<Strategy>, goal: &str) -> Vec<Vec<Vec<String>>> {
    let root = EvalState::seed(st, 1, s(goal)).unwrap();
    let mut out: Vec<Vec<Vec<String>>> = eval_to_enf(st.clone(), root, EvalConfig { check: true, ..Default::default() })
        .filter_map(|l| match l.unwrap() {
            Leaf::Enf(e) => Some(
                output_sequents(&e, st)
                    .into_iter()
                    .map(|gs| {
                        let mut v: Vec<String> = gs.iter().map(|g| g.to_string()).collect();
                        v.sort();
                        v
                    })
                    .collect(),
            ),
            Leaf::FuelExhausted(_) => None,
        })
        .collect();
    out.sort();
    out
}

/// in(any) -> t -> out(any) with `t` the given primitive.
fn single(name: &str, prim: Arc<dyn Primitive>) -> Arc<Strategy> {
    let mut ctx = Context::default();
    ctx.add_atomic(name, TacticSignature::new(&["any"], &["any"]), prim).unwrap();
    let mut g = StringGraph::new();
    g.add_wire("in", "any");
    g.add_tactic("t", name);
    g.add_wire("out", "any");
    g.connect_in("in", "t", 1);
    g.connect_out("t", 1, "out");
    Arc::new(Strategy::new(name, g, Arc::new(ctx)))
}

fn script(name: &str, goal: &str, evals: &[&[&str]]) -> Arc<dyn Primitive> {
    let table = vec![(s(goal), evals.iter().map(|e| e.iter().map(|g| s(g)).collect()).collect())];
    Arc::new(Scripted { name: name.into(), table })
}

/// A strategy whose single tactic node `c` is `tactic`.
fn wrap(tactic: Arc<dyn TypedTactic>) -> Arc<Strategy> {
    let mut ctx = Context::default();
    ctx.tactics.register(tactic.clone());
    let mut g = StringGraph::new();
    g.add_wire("in", "any");
    g.add_tactic("c", tactic.name());
    g.add_wire("out", "any");
    g.connect_in("in", "c", 1);
    g.connect_out("c", 1, "out");
    Arc::new(Strategy::new("wrapped", g, Arc::new(ctx)))
}

fn gt(name: &str, st: Arc<Strategy>) -> Arc<GraphTactic> {
    Arc::new(GraphTactic::new(name, st, EvalConfig::default()))
}

#[test]
fn or_is_the_union_of_disjoint_results() {
    let g = single("g", script("g", "P", &[&["Q1"], &["Q2"]]));
    let h = single("h", script("h", "P", &[&["R1"]]));
    let or = Choice::new("or", ChoiceKind::Or, gt("g", g.clone()), gt("h", h.clone())).unwrap();
    let n = |t: &dyn TypedTactic| t.apply(1, &s("P"), 0).map(Result::unwrap).count();
    assert_eq!(n(&*gt("g", g)), 2);
    assert_eq!(n(&*gt("h", h)), 1);
    assert_eq!(n(&or), 3);
    let st = wrap(Arc::new(or));
    assert_eq!(outcomes(&st, "P"), vec![vec![vec!["⊢ Q1"]], vec![vec!["⊢ Q2"]], vec![vec!["⊢ R1"]]]);
}

#[test]
fn or_drops_results_both_sides_share() {
    let g = single("g", script("g", "P", &[&["Q1"], &["Q2"]]));
    let h = single("h", script("h", "P", &[&["Q2"], &["R1"]]));
    let or = Choice::new("or", ChoiceKind::Or, gt("g", g), gt("h", h)).unwrap();
    assert_eq!(or.apply(1, &s("P"), 0).count(), 3);
}

#[test]
fn or_evaluates_right_only_after_left() {
    let (g_prim, g_calls) = Counted::new(script("g", "P", &[&["Q1"]]));
    let (h_prim, h_calls) = Counted::new(script("h", "P", &[&["R1"]]));
    let or = Choice::new(
        "or",
        ChoiceKind::Or,
        gt("g", single("g", Arc::new(g_prim))),
        gt("h", single("h", Arc::new(h_prim))),
    )
    .unwrap();
    let mut it = or.apply(1, &s("P"), 0);
    assert!(it.next().is_some());
    assert_eq!(g_calls.load(Ordering::SeqCst), 1);
    assert_eq!(h_calls.load(Ordering::SeqCst), 0);
    assert!(it.next().is_some());
    assert_eq!(h_calls.load(Ordering::SeqCst), 1);
}

#[test]
fn orelse_short_circuits() {
    let (h_prim, h_calls) = Counted::new(script("h", "P", &[&["R1"]]));
    let h = gt("h", single("h", Arc::new(h_prim)));
    let g = gt("g", single("g", script("g", "P", &[&["Q1"]])));
    let orelse = Choice::new("orelse", ChoiceKind::OrElse, g, h.clone()).unwrap();
    let st = wrap(Arc::new(orelse));
    assert_eq!(outcomes(&st, "P"), vec![vec![vec!["⊢ Q1"]]]);
    assert_eq!(h_calls.load(Ordering::SeqCst), 0);

    // With the left side failing, the right one runs.
    let failing = gt("f", single("f", builtin("fail").unwrap()));
    let orelse = Choice::new("orelse", ChoiceKind::OrElse, failing, h).unwrap();
    assert_eq!(outcomes(&wrap(Arc::new(orelse)), "P"), vec![vec![vec!["⊢ R1"]]]);
    assert!(h_calls.load(Ordering::SeqCst) > 0);
}

#[test]
fn choice_needs_equal_signatures() {
    let g = gt("g", single("g", builtin("id").unwrap()));
    let reg = StrategyRegistry::bundled();
    let v1 = gt("v1", reg.get("intro-v1").unwrap().strategy.clone());
    assert!(matches!(Choice::new("c", ChoiceKind::Or, g, v1), Err(TacticError::SignatureMismatch(_))));
}

#[test]
fn graph_tactic_matches_direct_evaluation() {
    let reg = StrategyRegistry::bundled();
    let v2 = reg.get("intro-v2").unwrap().strategy.clone();
    let t = gt("intro", v2.clone());
    for goal in ["A --> B & C", "A & (B --> C)", "A"] {
        let direct: Vec<Vec<Vec<String>>> = outcomes(&v2, goal);
        let mut via: Vec<Vec<Vec<String>>> = t
            .apply(1, &s(goal), 0)
            .map(|e| {
                e.unwrap()
                    .into_iter()
                    .map(|gs| {
                        let mut v: Vec<String> = gs.iter().map(|g| g.to_string()).collect();
                        v.sort();
                        v
                    })
                    .collect()
            })
            .collect();
        via.sort();
        assert_eq!(direct, via, "{goal}");
    }
}

#[test]
fn graph_tactic_rejects_goals_of_other_types() {
    let reg = StrategyRegistry::bundled();
    let induct = gt("ind", reg.get("induct").unwrap().strategy.clone());
    assert_eq!(induct.apply(1, &s("A --> B"), 0).count(), 0);
}

#[test]
fn nesting_stops_at_depth_limit() {
    let reg = StrategyRegistry::bundled();
    let t = gt("intro", reg.get("intro-v2").unwrap().strategy.clone());
    let r: Vec<_> = t.apply(1, &s("A"), MAX_DEPTH).collect();
    assert_eq!(r, vec![Err(TacticError::RecursionLimit(MAX_DEPTH))]);
}

fn outer_v2() -> (StrategyRegistry, Arc<Strategy>) {
    let mut reg = StrategyRegistry::bundled();
    let text = r#"{
      "psgraph_version": 1, "name": "outer",
      "tactics": [{"name": "intro", "inputs": ["any"], "outputs": ["other"], "impl": {"graph": "intro-v2"}}],
      "graph": {
        "vertices": [{"id": "goal", "kind": "wire", "type": "any"},
                     {"id": "intro", "kind": "tactic", "tactic": "intro"},
                     {"id": "done", "kind": "wire", "type": "other"}],
        "edges": [{"source": "goal", "target": "intro", "port": "in1"},
                  {"source": "intro", "target": "done", "port": "out1"}]}}"#;
    let st = reg.load_str(text, "outer").unwrap().strategy.clone();
    (reg, st)
}

#[test]
fn unfold_then_evaluate_equals_graph_tactic_evaluation() {
    let (_, outer) = outer_v2();
    let unfolded = unfold_in_strategy(&outer, &VertexId::new("intro")).unwrap();
    assert_eq!(unfolded.len(), 1);
    let inner = Arc::new(unfolded.into_iter().next().unwrap());
    // The boundary is kept and the tactic node is gone.
    assert_eq!(inner.inputs, outer.inputs);
    assert_eq!(inner.outputs, outer.outputs);
    assert!(!inner.graph.contains(&VertexId::new("intro")));
    for goal in ["A --> B & C", "A --> B & (!x. P x)", "(A --> B) & (C --> D & E)", "A"] {
        assert_eq!(outcomes(&outer, goal), outcomes(&inner, goal), "{goal}");
    }
}

#[test]
fn unfold_of_choice_gives_one_strategy_per_operand() {
    let g = gt("g", single("g", script("g", "P", &[&["Q1"]])));
    let h = gt("h", single("h", script("h", "P", &[&["R1"]])));
    let st = wrap(Arc::new(Choice::new("or", ChoiceKind::Or, g, h).unwrap()));
    let us = unfold_in_strategy(&st, &VertexId::new("c")).unwrap();
    let mut got: Vec<_> = us.into_iter().flat_map(|u| outcomes(&Arc::new(u), "P")).collect();
    got.sort();
    assert_eq!(got, outcomes(&st, "P"));
}

#[test]
fn unfold_of_atomic_tactic_is_empty() {
    let reg = StrategyRegistry::bundled();
    let v1 = reg.get("intro-v1").unwrap().strategy.clone();
    assert!(unfold_in_strategy(&v1, &VertexId::new("impI")).unwrap().is_empty());
}

const V2_OPEN: &str = r#"{
  "psgraph_version": 1, "name": "intro-v2-open",
  "goaltypes": [
    {"name": "imp", "features": [{"ftype": "top_level_symbol", "args": ["-->"]}]},
    {"name": "conj", "features": [{"ftype": "top_level_symbol", "args": ["&"]}]},
    {"name": "other", "features": [
      {"ftype": "top_level_symbol", "args": ["&"], "polarity": "negative"},
      {"ftype": "top_level_symbol", "args": ["-->"], "polarity": "negative"}]}],
  "tactics": [
    {"name": "split", "inputs": ["any"], "outputs": ["imp", "conj", "other"], "impl": {"builtin": "id"}},
    {"name": "impI", "inputs": ["imp"], "outputs": ["any"], "impl": {"builtin": "impI"}},
    {"name": "conjI", "inputs": ["conj"], "outputs": ["any"], "impl": {"builtin": "conjI"}}],
  "graph": {
    "vertices": [
      {"id": "in", "kind": "wire", "type": "any"},
      {"id": "split", "kind": "tactic", "tactic": "split"},
      {"id": "imp", "kind": "wire", "type": "imp"},
      {"id": "conj", "kind": "wire", "type": "conj"},
      {"id": "other", "kind": "wire", "type": "other"},
      {"id": "impI", "kind": "tactic", "tactic": "impI"},
      {"id": "impI_any", "kind": "wire", "type": "any"},
      {"id": "conjI", "kind": "tactic", "tactic": "conjI"},
      {"id": "conjI_any", "kind": "wire", "type": "any"}],
    "edges": [
      {"source": "in", "target": "split", "port": "in1"},
      {"source": "split", "target": "imp", "port": "out1"},
      {"source": "split", "target": "conj", "port": "out2"},
      {"source": "split", "target": "other", "port": "out3"},
      {"source": "imp", "target": "impI", "port": "in1"},
      {"source": "impI", "target": "impI_any", "port": "out1"},
      {"source": "conj", "target": "conjI", "port": "in1"},
      {"source": "conjI", "target": "conjI_any", "port": "out1"}],
    "outputs": ["impI_any", "conjI_any", "other"]}}"#;

#[test]
fn repeat_closes_the_loop_of_v2() {
    let mut reg = StrategyRegistry::bundled();
    let open = reg.load_str(V2_OPEN, "open").unwrap().strategy.clone();
    let looped = repeat(&open, &[("impI_any".into(), "in".into()), ("conjI_any".into(), "in".into())]).unwrap();
    let v2 = reg.get("intro-v2").unwrap().strategy.clone();
    assert!(is_isomorphic(&looped.graph, &v2.graph));
    assert_eq!(looped.outputs, vec![VertexId::new("other")]);
    let looped = Arc::new(looped);
    for goal in ["A --> B & C", "A & B & C"] {
        assert_eq!(outcomes(&looped, goal), outcomes(&v2, goal));
    }
}

#[test]
fn repeat_rejects_mistyped_loops() {
    let mut reg = StrategyRegistry::bundled();
    let open = reg.load_str(V2_OPEN, "open").unwrap().strategy.clone();
    assert!(repeat(&open, &[("other".into(), "in".into())]).is_err());
    assert!(repeat(&open, &[("nope".into(), "in".into())]).is_err());
}

#[test]
fn then_composes_evaluations() {
    let reg = StrategyRegistry::bundled();
    let v1 = reg.get("intro-v1").unwrap().strategy.clone();
    let pre = single("id", builtin("id").unwrap());
    let both = Arc::new(then(&pre, &v1).unwrap());
    assert_eq!(both.inputs.len(), 1);
    assert_eq!(both.outputs.len(), 3);
    assert_eq!(both.output_types(), v1.output_types());
    for goal in ["A --> B", "A & B", "C"] {
        assert_eq!(outcomes(&both, goal), outcomes(&v1, goal));
    }
}

#[test]
fn then_needs_matching_arity() {
    let reg = StrategyRegistry::bundled();
    let v1 = reg.get("intro-v1").unwrap().strategy.clone();
    let post = single("id", builtin("id").unwrap());
    assert!(then(&v1, &post).is_err());
}

#[test]
fn then_is_associative_up_to_isomorphism() {
    let a = single("a", builtin("id").unwrap());
    let b = single("b", builtin("id").unwrap());
    let c = single("c", builtin("id").unwrap());
    let left = then(&then(&a, &b).unwrap(), &c).unwrap();
    let right = then(&a, &then(&b, &c).unwrap()).unwrap();
    assert!(is_isomorphic(&left.graph, &right.graph));
}

#[test]
fn graph_tactic_in_file_reports_through_wrapper() {
    let (reg, outer) = outer_v2();
    let r = run(outer, s("A --> B & C"), EvalConfig::default(), 10).unwrap();
    let by: BTreeMap<_, _> = r.results[0].by_type().into_iter().collect();
    let mut goals: Vec<String> = by["other"].iter().map(|g| g.to_string()).collect();
    goals.sort();
    assert_eq!(goals, vec!["A ⊢ B", "A ⊢ C"]);
    assert!(reg.get("outer").is_ok());
}
