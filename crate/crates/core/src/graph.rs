//! Code graph traversal: every universe follows one source-to-sink path.

use crate::error::EnumerateError;
use crate::spec::{Block, CodeGraph, GraphNode, IMPLICIT_BLOCK};

/// Returns `Err(node)` naming a node on a cycle.
pub(crate) fn check_acyclic(graph: &CodeGraph) -> Result<(), usize> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    fn visit(g: &CodeGraph, n: usize, marks: &mut [Mark]) -> Result<(), usize> {
        match marks[n] {
            Mark::Done => return Ok(()),
            Mark::Active => return Err(n),
            Mark::New => {}
        }
        marks[n] = Mark::Active;
        for c in g.children(n) {
            visit(g, c, marks)?;
        }
        marks[n] = Mark::Done;
        Ok(())
    }
    let mut marks = vec![Mark::New; graph.nodes.len()];
    for n in 0..graph.nodes.len() {
        visit(graph, n, &mut marks)?;
    }
    Ok(())
}

/// Enumerates every maximal source-to-sink path of the code graph.
///
/// Without a graph the single path is every block in file order. Children are
/// visited in edge declaration order, so the output order is deterministic.
/// Code before the first marker is prepended to every path when the graph does
/// not mention it.
pub fn enumerate_paths(
    graph: Option<&CodeGraph>,
    blocks: &[Block],
) -> Result<Vec<Vec<GraphNode>>, EnumerateError> {
    let Some(graph) = graph else {
        return Ok(vec![blocks
            .iter()
            .map(|b| GraphNode {
                block: b.name.clone(),
                version: None,
            })
            .collect()]);
    };

    if let Err(n) = check_acyclic(graph) {
        return Err(EnumerateError::Graph(format!(
            "cycle through `{}`",
            graph.nodes[n]
        )));
    }
    let sources = graph.sources();
    if sources.len() != 1 {
        return Err(EnumerateError::Graph(format!(
            "expected one source block, found {}",
            sources.len()
        )));
    }

    let prefix: Vec<GraphNode> = blocks
        .iter()
        .filter(|b| b.name == IMPLICIT_BLOCK && !graph.contains_block(IMPLICIT_BLOCK))
        .map(|b| GraphNode {
            block: b.name.clone(),
            version: None,
        })
        .collect();

    let mut paths = Vec::new();
    let mut stack = vec![sources[0]];
    walk(graph, &mut stack, &mut paths);

    paths
        .into_iter()
        .map(|p| {
            let mut path = prefix.clone();
            for n in p {
                let node = graph.nodes[n].clone();
                if path.iter().any(|m| m.block == node.block) {
                    return Err(EnumerateError::Graph(format!(
                        "block `{}` appears twice on one path",
                        node.block
                    )));
                }
                path.push(node);
            }
            Ok(path)
        })
        .collect()
}

fn walk(graph: &CodeGraph, stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let node = *stack.last().expect("non-empty");
    let mut leaf = true;
    for child in graph.children(node) {
        leaf = false;
        stack.push(child);
        walk(graph, stack, out);
        stack.pop();
    }
    if leaf {
        out.push(stack.clone());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse_spec;

    fn names(paths: &[Vec<GraphNode>]) -> Vec<Vec<String>> {
        paths
            .iter()
            .map(|p| p.iter().map(|n| n.to_string()).collect())
            .collect()
    }

    fn spec_with_graph(edges: &str, blocks: &str) -> crate::MultiverseSpec {
        let src = format!("# --- (BOBA_CONFIG)\n{{\"graph\": [{edges}]}}\n{blocks}");
        parse_spec(&src, "g.py").unwrap()
    }

    #[test]
    fn linear_chain() {
        let spec = spec_with_graph(r#""A->B->C""#, "# --- (A)\n# --- (B)\n# --- (C)\n");
        let paths = enumerate_paths(spec.graph.as_ref(), &spec.blocks).unwrap();
        assert_eq!(names(&paths), vec![vec!["A", "B", "C"]]);
    }

    #[test]
    fn diamond_gives_two_paths() {
        let spec = spec_with_graph(
            r#""A->B1->C", "A->B2->C""#,
            "# --- (A)\n# --- (B1)\n# --- (B2)\n# --- (C)\n",
        );
        let paths = enumerate_paths(spec.graph.as_ref(), &spec.blocks).unwrap();
        assert_eq!(
            names(&paths),
            vec![vec!["A", "B1", "C"], vec!["A", "B2", "C"]]
        );
    }

    #[test]
    fn descendant_of_one_version_only() {
        let spec = spec_with_graph(
            r#""A->model:bayesian->prior->C", "A->model:frequentist->C""#,
            "# --- (A)\n# --- (model) bayesian\n# --- (model) frequentist\n# --- (prior)\n# --- (C)\n",
        );
        let paths = enumerate_paths(spec.graph.as_ref(), &spec.blocks).unwrap();
        assert_eq!(
            names(&paths),
            vec![
                vec!["A", "model:bayesian", "prior", "C"],
                vec!["A", "model:frequentist", "C"]
            ]
        );
    }

    #[test]
    fn implicit_start_is_prepended() {
        let spec = spec_with_graph(r#""A->B""#, "# --- (A)\n# --- (B)\n");
        let mut blocks = spec.blocks.clone();
        blocks.insert(0, crate::Block { name: IMPLICIT_BLOCK.into(), versions: vec![] });
        let paths = enumerate_paths(spec.graph.as_ref(), &blocks).unwrap();
        assert_eq!(names(&paths), vec![vec![IMPLICIT_BLOCK, "A", "B"]]);
    }

    #[test]
    fn no_graph_is_file_order() {
        let spec = parse_spec("x\n# --- (A)\n# --- (M) a\n# --- (M) b\n", "a.py").unwrap();
        let paths = enumerate_paths(None, &spec.blocks).unwrap();
        assert_eq!(names(&paths), vec![vec![IMPLICIT_BLOCK, "A", "M"]]);
    }

    #[test]
    fn rechecks_cycles_and_sources() {
        let g = CodeGraph {
            nodes: ["A", "B"]
                .iter()
                .map(|b| GraphNode { block: b.to_string(), version: None })
                .collect(),
            edges: vec![(0, 1), (1, 0)],
            line: 1,
        };
        assert!(matches!(enumerate_paths(Some(&g), &[]), Err(EnumerateError::Graph(_))));
        let g = CodeGraph { edges: vec![], ..g };
        assert!(matches!(enumerate_paths(Some(&g), &[]), Err(EnumerateError::Graph(_))));
    }

    #[test]
    fn repeated_block_on_path_rejected() {
        let spec = spec_with_graph(
            r#""A->M:a->M:b""#,
            "# --- (A)\n# --- (M) a\n# --- (M) b\n",
        );
        assert!(enumerate_paths(spec.graph.as_ref(), &spec.blocks).is_err());
    }
}
