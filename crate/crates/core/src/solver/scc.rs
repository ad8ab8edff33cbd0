use crate::graph::SecModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClusterKind {
    /// No edge leaves the cluster.
    Leave,
    NonLeave,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    /// Vertex indices in increasing order.
    pub vertices: Vec<usize>,
    pub kind: ClusterKind,
    /// Clusters reached by an edge leaving this one.
    pub successors: Vec<usize>,
}

/// The condensation DAG. Clusters are listed so that every cluster comes after
/// all of its successors.
#[derive(Clone, Debug, PartialEq)]
pub struct Condensation {
    pub clusters: Vec<Cluster>,
    pub cluster_of: Vec<usize>,
}

/// Tarjan's algorithm over all edges of `m`, iterative so deep graphs do not
/// exhaust the stack.
pub fn stratify(m: &SecModel) -> Condensation {
    let n = m.vertices.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &m.edges {
        if !adj[e.source].contains(&e.target) {
            adj[e.source].push(e.target);
        }
    }

    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut cluster_of = vec![UNSEEN; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        // (vertex, position of the next neighbour to visit)
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < adj[v].len() {
                let w = adj[v][*pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut group = Vec::new();
                loop {
                    let w = stack.pop().expect("vertex on stack");
                    on_stack[w] = false;
                    cluster_of[w] = groups.len();
                    group.push(w);
                    if w == v {
                        break;
                    }
                }
                group.sort_unstable();
                groups.push(group);
            }
        }
    }

    let clusters = groups
        .into_iter()
        .enumerate()
        .map(|(c, vertices)| {
            let mut successors: Vec<usize> =
                vertices.iter().flat_map(|&v| adj[v].iter().map(|&w| cluster_of[w])).filter(|&d| d != c).collect();
            successors.sort_unstable();
            successors.dedup();
            let kind = if successors.is_empty() { ClusterKind::Leave } else { ClusterKind::NonLeave };
            Cluster { vertices, kind, successors }
        })
        .collect();
    Condensation { clusters, cluster_of }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeLabel, SecEdge, Vertex};
    use crate::scenario::PayoffPair;

    fn model(n: usize, arcs: &[(usize, usize)]) -> SecModel {
        SecModel {
            vertices: (0..n).map(|i| Vertex::single(format!("v{i}"))).collect(),
            types: vec!["t".into()],
            edges: arcs
                .iter()
                .map(|&(source, target)| SecEdge {
                    source,
                    target,
                    label: EdgeLabel {
                        ty: "t".into(),
                        type_prob: 1.0,
                        user: "u".into(),
                        defender: "v".into(),
                        tran_p: 1.0,
                        weight: PayoffPair::ZERO,
                    },
                })
                .collect(),
        }
    }

    #[test]
    fn self_loops_form_one_leave() {
        let c = stratify(&model(1, &[(0, 0), (0, 0)]));
        assert_eq!(c.clusters, vec![Cluster { vertices: vec![0], kind: ClusterKind::Leave, successors: vec![] }]);
    }

    #[test]
    fn cycle_with_exit() {
        // A=0, B=1, C=2
        let c = stratify(&model(3, &[(0, 1), (1, 0), (0, 2), (2, 2)]));
        assert_eq!(c.clusters.len(), 2);
        assert_eq!(c.clusters[0].vertices, vec![2]);
        assert_eq!(c.clusters[0].kind, ClusterKind::Leave);
        assert_eq!(c.clusters[1].vertices, vec![0, 1]);
        assert_eq!(c.clusters[1].kind, ClusterKind::NonLeave);
        assert_eq!(c.clusters[1].successors, vec![0]);
    }

    #[test]
    fn successors_precede_predecessors() {
        let c = stratify(&model(5, &[(0, 1), (1, 2), (2, 1), (3, 0), (3, 4), (4, 2)]));
        for (i, cl) in c.clusters.iter().enumerate() {
            assert!(cl.successors.iter().all(|&s| s < i));
        }
    }
}
