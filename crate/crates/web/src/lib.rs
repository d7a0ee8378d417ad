//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes instance text in the CLI's format and returns a JSON
//! string, or throws the error message.

pub mod ops;

use wasm_bindgen::prelude::*;

fn to_js(result: Result<serde_json::Value, String>) -> Result<String, JsError> {
    result.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn solve(instance: &str, mode: &str) -> Result<String, JsError> {
    to_js(ops::solve(instance, mode))
}

#[wasm_bindgen]
pub fn simulate(instance: &str, items: u32, seed: u32) -> Result<String, JsError> {
    to_js(ops::simulate(instance, items.into(), seed.into()))
}

#[wasm_bindgen]
pub fn mincost(instance: &str, mode: &str) -> Result<String, JsError> {
    to_js(ops::mincost(instance, mode))
}
