//! Response hierarchy: agglomerative clustering of response columns,
//! node heights, and the group weights that define the tree-lasso penalty.
//!
//! Every node `v` of the hierarchy carries a group `G_v` (the responses at
//! the leaves under `v`) and a weight `w_v` derived from the node heights:
//!
//! - internal node: `w_v = (1 − h_v) · Π_{m ∈ Ancestors(v)} h_m`
//! - leaf:          `w_v = Π_{m ∈ Ancestors(v)} h_m`
//!
//! with `Ancestors(v)` excluding `v` itself and an empty product equal to 1.
//! Along any root-to-leaf path these weights sum to exactly 1, which is the
//! telescoping identity the tests pin down.

use ndarray::ArrayView2;

use crate::dataset::EffectMatrix;
use crate::error::{Error, Result};

/// One node of a [`ResponseTree`].
#[derive(Debug, Clone)]
pub struct TreeNode {
    pub id: usize,
    /// Child node ids; empty for a leaf.
    pub children: Vec<usize>,
    /// Response index for a leaf, `None` for internal nodes.
    pub response: Option<usize>,
    /// Height in `[0, 1]`; internal nodes only.
    pub h: Option<f64>,
    /// Sorted response indices of the descendant leaves (`G_v`).
    pub group: Vec<usize>,
    /// Penalty weight `w_v`; set by [`compute_weights`].
    pub weight: Option<f64>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// A hierarchy (forest allowed) over `k` responses.
#[derive(Debug, Clone)]
pub struct ResponseTree {
    pub nodes: Vec<TreeNode>,
    pub root_ids: Vec<usize>,
    pub k: usize,
}

/// Node description accepted by [`ResponseTree::from_nodes`]: children ids,
/// optional height, optional leaf response index.
#[derive(Debug, Clone)]
pub struct NodeSpec {
    pub children: Vec<usize>,
    pub h: Option<f64>,
    pub response: Option<usize>,
}

impl ResponseTree {
    /// Builds and validates a tree from raw node descriptions.
    ///
    /// Groups are recomputed from the children lists, never trusted from
    /// the caller. Validation enforces: every node reachable from exactly
    /// one root, leaves are exactly the responses `0..k` (each once),
    /// internal nodes have at least 2 children, and heights lie in `[0,1]`.
    pub fn from_nodes(specs: Vec<NodeSpec>, root_ids: Vec<usize>, k: usize) -> Result<Self> {
        let n_nodes = specs.len();
        if k == 0 {
            return Err(Error::EmptyData("ResponseTree with k = 0 responses".into()));
        }
        if root_ids.is_empty() {
            return Err(Error::InvalidTree("no roots given".into()));
        }
        let mut parent_count = vec![0usize; n_nodes];
        for (id, spec) in specs.iter().enumerate() {
            for &c in &spec.children {
                if c >= n_nodes {
                    return Err(Error::InvalidTree(format!("node {id} references missing child {c}")));
                }
                if c == id {
                    return Err(Error::InvalidTree(format!("node {id} is its own child")));
                }
                parent_count[c] += 1;
            }
            if spec.children.len() == 1 {
                return Err(Error::InvalidTree(format!("internal node {id} has a single child")));
            }
            if spec.children.is_empty() {
                if spec.response.is_none() {
                    return Err(Error::InvalidTree(format!("leaf {id} has no response index")));
                }
            } else if spec.response.is_some() {
                return Err(Error::InvalidTree(format!("internal node {id} carries a response index")));
            }
            if let Some(h) = spec.h {
                if !(0.0..=1.0).contains(&h) || !h.is_finite() {
                    return Err(Error::InvalidTree(format!("node {id} height {h} outside [0, 1]")));
                }
            }
        }
        for &r in &root_ids {
            if r >= n_nodes {
                return Err(Error::InvalidTree(format!("root id {r} out of range")));
            }
            if parent_count[r] != 0 {
                return Err(Error::InvalidTree(format!("root {r} has a parent")));
            }
        }
        for (id, &count) in parent_count.iter().enumerate() {
            let is_root = root_ids.contains(&id);
            if !is_root && count != 1 {
                return Err(Error::InvalidTree(format!(
                    "node {id} has {count} parents (expected 1, or listed as root)"
                )));
            }
        }

        let mut nodes: Vec<TreeNode> = specs
            .into_iter()
            .enumerate()
            .map(|(id, s)| TreeNode {
                id,
                children: s.children,
                response: s.response,
                h: s.h,
                group: Vec::new(),
                weight: None,
            })
            .collect();

        // Fill groups bottom-up and confirm leaves cover 0..k exactly once.
        let mut seen = vec![false; k];
        let order = topo_order(&nodes, &root_ids)?;
        for &id in order.iter().rev() {
            if nodes[id].is_leaf() {
                let r = nodes[id].response.unwrap();
                if r >= k {
                    return Err(Error::InvalidTree(format!("leaf {id} response {r} out of range (k = {k})")));
                }
                if seen[r] {
                    return Err(Error::InvalidTree(format!("response {r} appears on two leaves")));
                }
                seen[r] = true;
                nodes[id].group = vec![r];
            } else {
                let mut group = Vec::new();
                for c in nodes[id].children.clone() {
                    group.extend_from_slice(&nodes[c].group);
                }
                group.sort_unstable();
                group.dedup();
                let total: usize = nodes[id].children.iter().map(|&c| nodes[c].group.len()).sum();
                if group.len() != total {
                    return Err(Error::InvalidTree(format!("children of node {id} share responses")));
                }
                nodes[id].group = group;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidTree(format!("response {missing} has no leaf")));
        }

        Ok(ResponseTree { nodes, root_ids, k })
    }

    /// The degenerate forest of `k` isolated leaves (a plain lasso penalty
    /// once weights are computed: every leaf weight is 1).
    pub fn all_leaves(k: usize) -> Result<Self> {
        let specs = (0..k)
            .map(|c| NodeSpec { children: vec![], h: None, response: Some(c) })
            .collect();
        let tree = ResponseTree::from_nodes(specs, (0..k).collect(), k)?;
        compute_weights(tree)
    }

    pub fn n_internal(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_leaf()).count()
    }

    /// Parent-before-child traversal order over the whole forest.
    pub fn topological_order(&self) -> Vec<usize> {
        topo_order(&self.nodes, &self.root_ids).expect("validated tree")
    }

    pub fn weights_computed(&self) -> bool {
        self.nodes.iter().all(|n| n.weight.is_some())
    }
}

fn topo_order(nodes: &[TreeNode], roots: &[usize]) -> Result<Vec<usize>> {
    let mut order = Vec::with_capacity(nodes.len());
    let mut stack: Vec<usize> = roots.to_vec();
    let mut visited = vec![false; nodes.len()];
    while let Some(id) = stack.pop() {
        if visited[id] {
            return Err(Error::InvalidTree(format!("node {id} reachable twice")));
        }
        visited[id] = true;
        order.push(id);
        for &c in &nodes[id].children {
            stack.push(c);
        }
    }
    if let Some(unreached) = visited.iter().position(|v| !v) {
        return Err(Error::InvalidTree(format!("node {unreached} unreachable from roots")));
    }
    Ok(order)
}

/// Pearson correlation between two equal-length slices; 0 if either is
/// constant.
fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    // (saa·sbb).sqrt() keeps r at exactly 1 for identical columns.
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Agglomerative clustering of the response columns of `Y`.
///
/// Dissimilarity is `1 − |pearson|` with average linkage. Merge heights are
/// normalized to `[0, 1]` by the largest merge dissimilarity and become the
/// internal node heights; merges with normalized height above `cut` are
/// discarded, leaving a forest. Ties are broken by the lowest original
/// column index of the clusters involved, so the result is deterministic.
pub fn cluster_responses(y: ArrayView2<'_, f64>, cut: f64) -> Result<ResponseTree> {
    let (n, k) = y.dim();
    if k == 0 || n == 0 {
        return Err(Error::EmptyData("cluster_responses needs a nonempty Y".into()));
    }
    if !(0.0..=1.0).contains(&cut) {
        return Err(Error::InvalidConfig(format!("cut must lie in [0, 1], got {cut}")));
    }
    for ((i, j), v) in y.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { field: "Y".into(), row: i, col: j });
        }
    }

    let cols: Vec<Vec<f64>> = (0..k).map(|c| y.column(c).to_vec()).collect();

    // Active cluster state: node id, representative (lowest member column),
    // member count. Dissimilarities kept in a dense k_active map keyed by
    // node id pairs.
    struct Cluster {
        node: usize,
        rep: usize,
        size: usize,
    }

    let mut specs: Vec<NodeSpec> = (0..k)
        .map(|c| NodeSpec { children: vec![], h: None, response: Some(c) })
        .collect();
    let mut active: Vec<Cluster> = (0..k).map(|c| Cluster { node: c, rep: c, size: 1 }).collect();

    let mut diss: Vec<Vec<f64>> = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in (a + 1)..k {
            let d = 1.0 - pearson(&cols[a], &cols[b]).abs();
            diss[a][b] = d;
            diss[b][a] = d;
        }
    }
    // Indexed by position in `active`; rebuilt as clusters merge.
    let mut dist: Vec<Vec<f64>> = diss;

    let mut raw_heights: Vec<f64> = Vec::with_capacity(k.saturating_sub(1));
    let mut merge_children: Vec<(usize, usize)> = Vec::with_capacity(k.saturating_sub(1));

    while active.len() > 1 {
        // Scan pairs in representative order; strict `<` keeps the first
        // (lowest-index) pair among ties.
        let mut order: Vec<usize> = (0..active.len()).collect();
        order.sort_unstable_by_key(|&i| active[i].rep);
        let mut best: Option<(usize, usize, f64)> = None;
        for oi in 0..order.len() {
            for oj in (oi + 1)..order.len() {
                let (i, j) = (order[oi], order[oj]);
                let d = dist[i][j];
                if best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((i, j, d));
                }
            }
        }
        let (i, j, d) = best.unwrap();
        let (i, j) = if active[i].rep < active[j].rep { (i, j) } else { (j, i) };

        let node_id = specs.len();
        specs.push(NodeSpec {
            children: vec![active[i].node, active[j].node],
            h: None, // heights assigned after normalization
            response: None,
        });
        raw_heights.push(d);
        merge_children.push((active[i].node, active[j].node));

        let si = active[i].size as f64;
        let sj = active[j].size as f64;
        let merged = Cluster {
            node: node_id,
            rep: active[i].rep.min(active[j].rep),
            size: active[i].size + active[j].size,
        };
        // Average linkage: d(new, other) = (|A| d(A,o) + |B| d(B,o)) / (|A|+|B|).
        let mut new_row: Vec<f64> = Vec::with_capacity(active.len() - 1);
        for (m, _) in active.iter().enumerate() {
            if m == i || m == j {
                continue;
            }
            new_row.push((si * dist[i][m] + sj * dist[j][m]) / (si + sj));
        }
        let (hi, lo) = (i.max(j), i.min(j));
        active.remove(hi);
        active.remove(lo);
        dist.remove(hi);
        dist.remove(lo);
        for row in dist.iter_mut() {
            row.remove(hi);
            row.remove(lo);
        }
        for (row, &d_new) in dist.iter_mut().zip(&new_row) {
            row.push(d_new);
        }
        new_row.push(0.0);
        dist.push(new_row);
        active.push(merged);
    }

    // Normalize merge heights to [0, 1]; an all-zero dendrogram (identical
    // columns) keeps every height at 0.
    let max_h = raw_heights.iter().fold(0.0f64, |m, &v| m.max(v));
    for (idx, &(_, _)) in merge_children.iter().enumerate() {
        let h = if max_h > 0.0 { (raw_heights[idx] / max_h).clamp(0.0, 1.0) } else { 0.0 };
        specs[k + idx].h = Some(h);
    }

    // Cut: drop internal nodes above the cut; their children become roots.
    let keep: Vec<bool> = (0..specs.len())
        .map(|id| id < k || specs[id].h.unwrap() <= cut)
        .collect();
    let mut is_child_of_kept = vec![false; specs.len()];
    for id in k..specs.len() {
        if keep[id] {
            for &c in &specs[id].children {
                is_child_of_kept[c] = true;
            }
        }
    }
    // Remap kept nodes to contiguous ids.
    let mut remap = vec![usize::MAX; specs.len()];
    let mut kept_specs: Vec<NodeSpec> = Vec::new();
    for (id, spec) in specs.iter().enumerate() {
        if keep[id] {
            remap[id] = kept_specs.len();
            kept_specs.push(spec.clone());
        }
    }
    for spec in kept_specs.iter_mut() {
        for c in spec.children.iter_mut() {
            *c = remap[*c];
        }
    }
    let roots: Vec<usize> = (0..specs.len())
        .filter(|&id| keep[id] && !is_child_of_kept[id])
        .map(|id| remap[id])
        .collect();

    let tree = ResponseTree::from_nodes(kept_specs, roots, k)?;
    compute_weights(tree)
}

/// Fills every node weight from the heights.
///
/// Errors with [`Error::MissingHeight`] if an internal node has no height.
pub fn compute_weights(mut tree: ResponseTree) -> Result<ResponseTree> {
    for node in &tree.nodes {
        if !node.is_leaf() && node.h.is_none() {
            return Err(Error::MissingHeight { node: node.id });
        }
    }
    let order = tree.topological_order();
    // ancestor_product[v] = Π_{m ∈ Ancestors(v)} h_m, filled parent-first.
    let mut anc = vec![1.0f64; tree.nodes.len()];
    for &id in &order {
        let node = &tree.nodes[id];
        if let Some(h) = node.h {
            let prod = anc[id] * h;
            for &c in &node.children {
                anc[c] = prod;
            }
        }
    }
    for (node, &prod) in tree.nodes.iter_mut().zip(&anc) {
        let w = match node.h {
            Some(h) if !node.is_leaf() => (1.0 - h) * prod,
            _ => prod,
        };
        node.weight = Some(w);
    }
    Ok(tree)
}

/// Tree-lasso penalty `λ · Σ_j Σ_v w_v ‖β[j, G_v]‖₂`, summed over all nodes
/// (leaves included).
pub fn penalty_value(tree: &ResponseTree, beta: &EffectMatrix, lambda: f64) -> Result<f64> {
    penalty_value_raw(tree, beta.beta.view(), lambda)
}

pub(crate) fn penalty_value_raw(tree: &ResponseTree, beta: ArrayView2<'_, f64>, lambda: f64) -> Result<f64> {
    if beta.ncols() != tree.k {
        return Err(Error::dim("penalty_value responses", tree.k, beta.ncols()));
    }
    let mut total = 0.0;
    for node in &tree.nodes {
        let w = node.weight.ok_or(Error::MissingWeight { node: node.id })?;
        if w == 0.0 {
            continue;
        }
        for j in 0..beta.nrows() {
            let mut sq = 0.0;
            for &c in &node.group {
                let v = beta[[j, c]];
                sq += v * v;
            }
            total += w * sq.sqrt();
        }
    }
    Ok(lambda * total)
}

/// Leaf weights indexed by response, in response order.
pub(crate) fn leaf_weights(tree: &ResponseTree) -> Result<Vec<f64>> {
    let mut out = vec![0.0; tree.k];
    for node in &tree.nodes {
        if node.is_leaf() {
            let w = node.weight.ok_or(Error::MissingWeight { node: node.id })?;
            out[node.response.unwrap()] = w;
        }
    }
    Ok(out)
}
