//! Builds a tiny two-frame hypothesis space by hand, decodes it, and prints
//! the max-marginal of every edge and vertex.

use anyhow::Result;
use segcascade::inference::{best_path_edges, max_marginals};
use segcascade::lattice::{FstBuilder, LabelAlphabet};

fn main() -> Result<()> {
    let mut alphabet = LabelAlphabet::new();
    let a = alphabet.intern("a")?;
    let b = alphabet.intern("b")?;

    // Three vertices at times 0, 1, 2; every label over every span.
    let mut builder = FstBuilder::new(2);
    let v0 = builder.add_vertex(0);
    let v1 = builder.add_vertex(1);
    let v2 = builder.add_vertex(2);
    builder.mark_initial(v0)?;
    builder.mark_final(v2)?;
    builder.add_edge(v0, v1, a, 1.0)?;
    builder.add_edge(v0, v1, b, 0.0)?;
    builder.add_edge(v1, v2, a, 2.0)?;
    builder.add_edge(v1, v2, b, 3.0)?;
    builder.add_edge(v0, v2, a, 2.5)?;
    builder.add_edge(v0, v2, b, 1.0)?;
    let fst = builder.build();

    let (path, score) = best_path_edges(&fst)?;
    println!("best path (score {score}):");
    for &e in &path {
        let seg = fst.segment(e);
        println!("  frames {}..{}  label {}", seg.start, seg.end, alphabet.name(seg.label));
    }

    let mm = max_marginals(&fst)?;
    println!("\nedge max-marginals (best score through each edge):");
    for id in 0..fst.num_edges() as u32 {
        let seg = fst.segment(id);
        println!(
            "  ({}, {}, {})  gamma = {}",
            seg.start,
            seg.end,
            alphabet.name(seg.label),
            mm.edge[id as usize]
        );
    }
    println!("\nvertex max-marginals:");
    for (id, v) in fst.vertices().iter().enumerate() {
        println!("  time {}  gamma = {}", v.time, mm.vertex[id]);
    }
    Ok(())
}
