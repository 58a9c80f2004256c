//! Tree file format:
//! `{"nodes":[{"id":0,"children":[..],"h":0.5,"response":"r00001"}],"roots":[..]}`.
//!
//! Leaves name their response by id string; internal nodes carry a height.
//! Files are validated against the tree invariants on load.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tgslmm_core::tree::NodeSpec;
use tgslmm_core::ResponseTree;

use crate::error::{CliError, CliResult};
use crate::io::write_json;

#[derive(Debug, Serialize, Deserialize)]
struct TreeFileNode {
    id: usize,
    #[serde(default)]
    children: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    response: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TreeFile {
    nodes: Vec<TreeFileNode>,
    roots: Vec<usize>,
}

pub fn save_tree(path: &Path, tree: &ResponseTree, response_ids: &[String]) -> CliResult<()> {
    let nodes = tree
        .nodes
        .iter()
        .map(|node| TreeFileNode {
            id: node.id,
            children: node.children.clone(),
            h: node.h,
            response: node.response.map(|r| response_ids[r].clone()),
        })
        .collect();
    write_json(path, &TreeFile { nodes, roots: tree.root_ids.clone() })
}

/// Loads and validates a tree over the given responses. Weights are not
/// computed here; the fit pipeline derives them from the heights.
pub fn load_tree(path: &Path, response_ids: &[String]) -> CliResult<ResponseTree> {
    let raw = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: TreeFile = serde_json::from_str(&raw)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;

    let index_of: HashMap<&str, usize> =
        response_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();

    let n = file.nodes.len();
    let mut specs: Vec<Option<NodeSpec>> = (0..n).map(|_| None).collect();
    for node in file.nodes {
        if node.id >= n {
            return Err(CliError::Data(format!(
                "{}: node id {} out of range (ids must be 0..{})",
                path.display(),
                node.id,
                n
            )));
        }
        let response = match node.response {
            Some(name) => Some(*index_of.get(name.as_str()).ok_or_else(|| {
                CliError::Data(format!("{}: unknown response id {name:?}", path.display()))
            })?),
            None => None,
        };
        let spec = NodeSpec { children: node.children, h: node.h, response };
        if specs[node.id].replace(spec).is_some() {
            return Err(CliError::Data(format!("{}: duplicate node id {}", path.display(), node.id)));
        }
    }
    let specs: Vec<NodeSpec> = specs
        .into_iter()
        .enumerate()
        .map(|(id, s)| s.ok_or_else(|| CliError::Data(format!("{}: missing node id {id}", path.display()))))
        .collect::<CliResult<_>>()?;

    ResponseTree::from_nodes(specs, file.roots, response_ids.len())
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
