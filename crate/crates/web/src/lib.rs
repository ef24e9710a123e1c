//! Browser bindings for the code explorer page in `www/`.
//!
//! Each exported function takes plain strings and numbers and returns JSON.
//! The plain `*_json` functions are what the native tests exercise.

use easyrepair::repair::{availability_profile, AVAILABILITY_MAX_N};
use easyrepair::{CodeId, ErasurePattern, LinearCode, RepairEngine};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct CodeView {
    id: String,
    n: usize,
    k: usize,
    generator: Vec<String>,
    parity_check: Vec<String>,
    zero_nodes: Vec<usize>,
}

#[derive(Serialize)]
struct PlanView {
    erased: Vec<usize>,
    correctable: bool,
    complete: bool,
    plan: String,
    residual: Vec<usize>,
}

#[derive(Serialize)]
struct NodeView {
    node: usize,
    trivial: bool,
    counts: Vec<usize>,
}

#[derive(Serialize)]
struct AvailabilityView {
    r: usize,
    nodes: Vec<NodeView>,
    t: Vec<usize>,
}

fn build(id: &str) -> Result<LinearCode, String> {
    let id: CodeId = id.trim().parse().map_err(|e| format!("{e}"))?;
    id.build().map_err(|e| e.to_string())
}

fn rows(text: String) -> Vec<String> {
    text.lines().skip(1).map(str::to_owned).collect()
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn parse_indices(csv: &str, n: usize) -> Result<Vec<usize>, String> {
    csv.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let i: usize = s.parse().map_err(|_| format!("bad node index {s:?}"))?;
            if i >= n {
                Err(format!("node {i} out of range for n = {n}"))
            } else {
                Ok(i)
            }
        })
        .collect()
}

pub fn code_json(id: &str) -> Result<String, String> {
    let code = build(id)?;
    let engine = RepairEngine::new(&code).map_err(|e| e.to_string())?;
    to_json(&CodeView {
        id: code.id.to_string(),
        n: code.n(),
        k: code.k(),
        generator: rows(code.generator.to_text()),
        parity_check: rows(code.parity_check().to_text()),
        zero_nodes: (0..code.n()).filter(|&i| engine.is_zero_node(i)).collect(),
    })
}

/// `r = 0` asks for the sequential easy-repair plan.
pub fn plan_json(id: &str, erased: &str, r: usize) -> Result<String, String> {
    let code = build(id)?;
    let erased = parse_indices(erased, code.n())?;
    let engine = RepairEngine::new(&code).map_err(|e| e.to_string())?;
    let pattern = ErasurePattern::new(code.n(), erased).map_err(|e| e.to_string())?;
    let correctable = engine.is_correctable(&pattern).map_err(|e| e.to_string())?;
    let result = if r == 0 {
        engine.easy_repair_plan(&pattern)
    } else {
        engine.parallel_repair_plan(&pattern, r)
    }
    .map_err(|e| e.to_string())?;
    let view = match result {
        Ok(plan) => PlanView {
            erased: pattern.erased().to_vec(),
            correctable,
            complete: true,
            plan: plan.to_string(),
            residual: Vec::new(),
        },
        Err(f) => PlanView {
            erased: pattern.erased().to_vec(),
            correctable,
            complete: false,
            plan: f.partial.to_string(),
            residual: f.residual.erased().to_vec(),
        },
    };
    to_json(&view)
}

pub fn availability_json(id: &str, r: usize) -> Result<String, String> {
    let code = build(id)?;
    if code.n() > AVAILABILITY_MAX_N {
        return Err(format!(
            "availability is computed exactly only up to {AVAILABILITY_MAX_N} nodes"
        ));
    }
    let profile = availability_profile(&code, r).map_err(|e| e.to_string())?;
    to_json(&AvailabilityView {
        r,
        nodes: profile
            .nodes
            .into_iter()
            .map(|a| NodeView {
                node: a.node,
                trivial: a.trivial,
                counts: a.counts,
            })
            .collect(),
        t: profile.code_level.iter().map(|&(_, t)| t).collect(),
    })
}

#[wasm_bindgen]
pub fn code_view(id: &str) -> Result<String, JsValue> {
    code_json(id).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn repair_plan(id: &str, erased: &str, r: u32) -> Result<String, JsValue> {
    plan_json(id, erased, r as usize).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn availability(id: &str, r: u32) -> Result<String, JsValue> {
    availability_json(id, r as usize).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn code_view_of_simplex() {
        let v = parse(&code_json("simplex:3").unwrap());
        assert_eq!(v["n"], 7);
        assert_eq!(v["generator"][0], "1001101");
        assert_eq!(v["parity_check"].as_array().unwrap().len(), 4);
        let um = parse(&code_json("um:2:1").unwrap());
        assert_eq!(um["zero_nodes"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn plans() {
        let v = parse(&plan_json("simplex:3", "0,1,3,5", 0).unwrap());
        assert_eq!(v["complete"], true);
        assert!(v["plan"].as_str().unwrap().contains("repair 0 <- 2+4"));
        let v = parse(&plan_json("simplex:3", "2,4,5,6", 0).unwrap());
        assert_eq!(v["correctable"], false);
        assert_eq!(v["complete"], false);
        let v = parse(&plan_json("simplex:3", "0,1,2", 2).unwrap());
        assert!(v["plan"].as_str().unwrap().starts_with("# mode: parallel r=2"));
    }

    #[test]
    fn availability_of_c1() {
        let v = parse(&availability_json("c1:4", 2).unwrap());
        assert_eq!(v["t"][1], 3);
        assert!(availability_json("simplex:6", 2).is_err());
    }

    #[test]
    fn input_errors() {
        assert!(code_json("nonsense").is_err());
        assert!(plan_json("simplex:2", "7", 0).is_err());
        assert!(plan_json("simplex:2", "x", 0).is_err());
    }
}
