//! Text format for marked trees:
//!
//! ```text
//! vertices 3
//! edge 0 1
//! edge 1 2
//! mark 0 0
//! mark 1 1
//! mark 2 2
//! ```
//!
//! Edges keep their file order; marks may appear in any order but must cover
//! `0..=M` exactly once. [`write_tree`] emits the canonical form, which
//! [`parse_tree`] reads back unchanged.

use std::fmt::Write as _;

use super::MarkedTree;
use crate::error::{Error, Result};

pub fn write_tree(tree: &MarkedTree) -> String {
    let mut out = String::new();
    writeln!(out, "vertices {}", tree.vertex_count()).unwrap();
    for &(u, v) in tree.edges() {
        writeln!(out, "edge {u} {v}").unwrap();
    }
    for (i, &v) in tree.marks().iter().enumerate() {
        writeln!(out, "mark {i} {v}").unwrap();
    }
    out
}

pub fn parse_tree(text: &str) -> Result<MarkedTree> {
    let mut vertex_count = None;
    let mut edges = Vec::new();
    let mut marks: Vec<Option<usize>> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| Error::Parse { line, message };
        let fields: Vec<&str> = raw.split_whitespace().collect();
        let Some((&keyword, args)) = fields.split_first() else {
            continue;
        };
        let numbers = args
            .iter()
            .map(|a| a.parse::<usize>().map_err(|_| err(format!("expected a nonnegative integer, found `{a}`"))))
            .collect::<Result<Vec<_>>>()?;
        let arity = |k: usize| {
            if numbers.len() == k {
                Ok(())
            } else {
                Err(err(format!("`{keyword}` takes {k} argument(s), found {}", numbers.len())))
            }
        };
        match keyword {
            "vertices" => {
                arity(1)?;
                if vertex_count.is_some() {
                    return Err(err("repeated `vertices` line".into()));
                }
                if line != 1 {
                    return Err(err("`vertices` must be the first line".into()));
                }
                vertex_count = Some(numbers[0]);
            }
            "edge" => {
                arity(2)?;
                if vertex_count.is_none() {
                    return Err(err("`edge` before `vertices`".into()));
                }
                edges.push((numbers[0], numbers[1]));
            }
            "mark" => {
                arity(2)?;
                if vertex_count.is_none() {
                    return Err(err("`mark` before `vertices`".into()));
                }
                let (i, v) = (numbers[0], numbers[1]);
                if i >= marks.len() {
                    marks.resize(i + 1, None);
                }
                if marks[i].replace(v).is_some() {
                    return Err(err(format!("mark {i} assigned twice")));
                }
            }
            other => return Err(err(format!("unknown keyword `{other}`"))),
        }
    }
    let vertex_count = vertex_count.ok_or(Error::Parse {
        line: 1,
        message: "missing `vertices` line".into(),
    })?;
    let marks = marks
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            m.ok_or_else(|| Error::Parse {
                line: text.lines().count(),
                message: format!("mark {i} missing"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MarkedTree::new(vertex_count, edges, marks)
}
