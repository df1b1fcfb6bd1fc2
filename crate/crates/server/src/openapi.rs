use serde_json::{json, Map, Value};

use crate::routes::ROUTES;

fn path_params(path: &str) -> Vec<Value> {
    path.split('/')
        .filter_map(|seg| seg.strip_prefix('{')?.strip_suffix('}'))
        .map(|name| {
            json!({
                "name": name,
                "in": "path",
                "required": true,
                "schema": { "type": "string", "pattern": "^[0-9a-f]{32}$" }
            })
        })
        .collect()
}

fn query_params(operation: &str) -> Vec<Value> {
    let names: &[&str] = match operation {
        "validation_queue" | "export_queue" => &["expert"],
        "metrics" => &["from", "to"],
        _ => &[],
    };
    names
        .iter()
        .map(|n| json!({ "name": n, "in": "query", "required": true, "schema": { "type": "string" } }))
        .collect()
}

fn content(kind: &str) -> Value {
    if kind.contains('/') {
        json!({ kind: { "schema": { "type": "string" } } })
    } else if let Some(item) = kind.strip_suffix("[]") {
        json!({ "application/json": { "schema": {
            "type": "array",
            "items": { "$ref": format!("#/components/schemas/{item}") }
        } } })
    } else {
        json!({ "application/json": { "schema": { "$ref": format!("#/components/schemas/{kind}") } } })
    }
}

fn schema_names() -> Vec<&'static str> {
    let mut names: Vec<&str> = ROUTES
        .iter()
        .flat_map(|r| [r.request, Some(r.response)])
        .flatten()
        .filter(|k| !k.contains('/'))
        .map(|k| k.trim_end_matches("[]"))
        .chain(["ApiError"])
        .collect();
    names.sort_unstable();
    names.dedup();
    names
}

/// OpenAPI 3.1 description generated from the routing table.
pub fn openapi() -> Value {
    let mut paths = Map::new();
    for r in ROUTES {
        let mut op = json!({
            "operationId": r.operation,
            "summary": r.summary,
            "description": format!("Roles: {}.", r.roles),
            "responses": {
                "200": { "description": "OK", "content": content(r.response) },
                "default": { "description": "Error", "content": content("ApiError") }
            }
        });
        let params: Vec<Value> = path_params(r.path)
            .into_iter()
            .chain(query_params(r.operation))
            .collect();
        if !params.is_empty() {
            op["parameters"] = Value::Array(params);
        }
        if let Some(req) = r.request {
            op["requestBody"] = json!({ "required": true, "content": content(req) });
        }
        paths
            .entry(r.path)
            .or_insert_with(|| json!({}))
            .as_object_mut()
            .expect("object")
            .insert(r.method.to_ascii_lowercase(), op);
    }
    let schemas: Map<String, Value> = schema_names()
        .into_iter()
        .map(|n| (n.to_string(), json!({ "type": "object" })))
        .collect();
    json!({
        "openapi": "3.1.0",
        "info": {
            "title": "expert-mind",
            "version": env!("CARGO_PKG_VERSION"),
            "description": "Capture, validate, retrieve and erase expert knowledge. Errors carry {code, message}; 401 bad token, 403 forbidden or consent denial, 404 unknown id, 409 conflict, 422 invalid input."
        },
        "components": {
            "securitySchemes": { "bearer": { "type": "http", "scheme": "bearer" } },
            "schemas": schemas
        },
        "security": [{ "bearer": [] }],
        "paths": paths
    })
}
