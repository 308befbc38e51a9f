//! Segment lattices encoded as acyclic weighted FSTs.
//!
//! A hypothesis for an utterance of `T` frames is a sequence of labeled
//! segments. Vertices carry frame boundaries (time stamps between 0 and `T`)
//! and an edge from a vertex at time `u` to a vertex at time `v` is a segment
//! covering frames `u+1 ..= v`, so consecutive edges along a path share a
//! boundary and a complete path from time 0 to time `T` tiles the utterance.
//!
//! Time stamps strictly increase along every edge, which makes every lattice
//! acyclic by construction. Input and output symbols coincide (the machines
//! are acceptors used as transducers), so each edge stores one label.

use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Interned label identifier.
pub type Label = u32;

/// Bidirectional mapping between label names and dense identifiers.
///
/// Identifiers index rows of transition tables and columns of posterior
/// matrices, so every component of a system must share one alphabet.
#[derive(Clone, Debug, Default)]
pub struct LabelAlphabet {
    names: Vec<String>,
    index: HashMap<String, Label>,
}

impl LabelAlphabet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an alphabet from names in order; identifiers follow that order.
    pub fn from_names<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut alphabet = Self::new();
        for name in names {
            alphabet.intern(name.as_ref())?;
        }
        Ok(alphabet)
    }

    /// Returns the identifier for `name`, adding it if unseen.
    pub fn intern(&mut self, name: &str) -> Result<Label> {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::InvalidInput(format!(
                "label name '{name}' is empty or contains whitespace"
            )));
        }
        match self.index.entry(name.to_string()) {
            Entry::Occupied(e) => Ok(*e.get()),
            Entry::Vacant(e) => {
                let id = self.names.len() as Label;
                self.names.push(name.to_string());
                e.insert(id);
                Ok(id)
            }
        }
    }

    pub fn id(&self, name: &str) -> Option<Label> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<Label> {
        self.id(name).ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    pub fn name(&self, id: Label) -> &str {
        &self.names[id as usize]
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// A labeled segment: frames `start+1 ..= end` carrying one label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Segment {
    /// Boundary before the first frame of the segment.
    pub start: u32,
    /// Boundary after the last frame of the segment.
    pub end: u32,
    pub label: Label,
}

impl Segment {
    pub fn new(start: u32, end: u32, label: Label) -> Self {
        Segment { start, end, label }
    }

    /// Number of frames covered.
    pub fn duration(&self) -> u32 {
        self.end - self.start
    }
}

/// A connected sequence of segments; a full-utterance hypothesis when it
/// starts at boundary 0 and ends at boundary `T`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SegmentPath {
    segments: Vec<Segment>,
}

impl SegmentPath {
    /// Validates that consecutive segments share a boundary and that every
    /// segment covers at least one frame.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        for pair in segments.windows(2) {
            if pair[0].end != pair[1].start {
                return Err(Error::InvalidInput(format!(
                    "segments ({},{}) and ({},{}) are not connected",
                    pair[0].start, pair[0].end, pair[1].start, pair[1].end
                )));
            }
        }
        if let Some(seg) = segments.iter().find(|s| s.end <= s.start) {
            return Err(Error::InvalidInput(format!(
                "segment ({},{}) covers no frames",
                seg.start, seg.end
            )));
        }
        Ok(SegmentPath { segments })
    }

    pub fn empty() -> Self {
        SegmentPath { segments: Vec::new() }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.segments.iter().map(|s| s.label).collect()
    }

    /// Boundary where the path starts, or `None` for an empty path.
    pub fn start(&self) -> Option<u32> {
        self.segments.first().map(|s| s.start)
    }

    /// Boundary where the path ends, or `None` for an empty path.
    pub fn end(&self) -> Option<u32> {
        self.segments.last().map(|s| s.end)
    }

    /// The label of each frame `1 ..= end`, for paths starting at 0.
    pub fn frame_labels(&self) -> Result<Vec<Label>> {
        if self.start() != Some(0) {
            return Err(Error::InvalidInput(
                "frame labels require a path starting at boundary 0".into(),
            ));
        }
        let mut labels = Vec::with_capacity(self.end().unwrap_or(0) as usize);
        for seg in &self.segments {
            labels.extend(std::iter::repeat(seg.label).take(seg.duration() as usize));
        }
        Ok(labels)
    }
}

/// Lattice vertex: a frame boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub time: u32,
}

/// Weighted lattice edge; `label` serves as both input and output symbol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub tail: u32,
    pub head: u32,
    pub label: Label,
    pub weight: f64,
}

impl Edge {
    pub fn input_symbol(&self) -> Label {
        self.label
    }

    pub fn output_symbol(&self) -> Label {
        self.label
    }
}

/// Acyclic weighted FST over segment hypotheses.
#[derive(Clone, Debug, Default)]
pub struct Fst {
    num_frames: u32,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    initial: Vec<u32>,
    finals: Vec<u32>,
    adj: Vec<Vec<u32>>,
    radj: Vec<Vec<u32>>,
}

impl Fst {
    /// The lattice with no vertices at all, produced when pruning removes
    /// every complete path.
    pub fn empty(num_frames: u32) -> Self {
        Fst { num_frames, ..Default::default() }
    }

    pub fn num_frames(&self) -> u32 {
        self.num_frames
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn vertex(&self, id: u32) -> &Vertex {
        &self.vertices[id as usize]
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edge(&self, id: u32) -> &Edge {
        &self.edges[id as usize]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Sorted initial vertex ids.
    pub fn initial(&self) -> &[u32] {
        &self.initial
    }

    /// Sorted final vertex ids.
    pub fn finals(&self) -> &[u32] {
        &self.finals
    }

    pub fn is_initial(&self, v: u32) -> bool {
        self.initial.binary_search(&v).is_ok()
    }

    pub fn is_final(&self, v: u32) -> bool {
        self.finals.binary_search(&v).is_ok()
    }

    /// Outgoing edge ids of `v`, ascending.
    pub fn out_edges(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    /// Incoming edge ids of `v`, ascending.
    pub fn in_edges(&self, v: u32) -> &[u32] {
        &self.radj[v as usize]
    }

    /// The segment covered by edge `id`.
    pub fn segment(&self, id: u32) -> Segment {
        let e = &self.edges[id as usize];
        Segment::new(self.vertices[e.tail as usize].time, self.vertices[e.head as usize].time, e.label)
    }

    /// Replaces every edge weight; `weights` must match the edge count.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Fst> {
        if weights.len() != self.edges.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} edges",
                weights.len(),
                self.edges.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::NonFinite(format!("edge weight {w}")));
        }
        let mut fst = self.clone();
        for (edge, w) in fst.edges.iter_mut().zip(weights) {
            edge.weight = *w;
        }
        Ok(fst)
    }

    /// Segments of a path given by edge ids; errors if the edges do not form
    /// a connected initial-to-final path.
    pub fn path(&self, edge_ids: &[u32]) -> Result<SegmentPath> {
        if edge_ids.is_empty() {
            return Ok(SegmentPath::empty());
        }
        let first = &self.edges[edge_ids[0] as usize];
        if !self.is_initial(first.tail) {
            return Err(Error::InvalidInput("path does not start at an initial vertex".into()));
        }
        let mut at = first.tail;
        let mut segments = Vec::with_capacity(edge_ids.len());
        for &id in edge_ids {
            let e = &self.edges[id as usize];
            if e.tail != at {
                return Err(Error::InvalidInput("path edges are not connected".into()));
            }
            segments.push(self.segment(id));
            at = e.head;
        }
        if !self.is_final(at) {
            return Err(Error::InvalidInput("path does not end at a final vertex".into()));
        }
        SegmentPath::new(segments)
    }

    /// Sum of edge weights along a path given by edge ids.
    pub fn path_weight(&self, edge_ids: &[u32]) -> f64 {
        edge_ids.iter().map(|&id| self.edges[id as usize].weight).sum()
    }

    /// Looks up the edge ids of a segment path, following lattice structure;
    /// `None` if any segment is missing or disconnected in the lattice.
    pub fn find_path(&self, path: &SegmentPath) -> Option<Vec<u32>> {
        let first = path.segments().first()?;
        let mut at = *self
            .initial
            .iter()
            .find(|&&v| self.vertices[v as usize].time == first.start)?;
        let mut ids = Vec::with_capacity(path.len());
        for seg in path.segments() {
            let id = *self.adj[at as usize].iter().find(|&&id| {
                let e = &self.edges[id as usize];
                e.label == seg.label && self.vertices[e.head as usize].time == seg.end
            })?;
            ids.push(id);
            at = self.edges[id as usize].head;
        }
        if self.is_final(at) {
            Some(ids)
        } else {
            None
        }
    }

    /// Checks the full lattice contract: nonempty initial and final sets
    /// (unless the lattice is entirely empty), times within the frame count,
    /// and strictly increasing times along edges.
    pub fn validate(&self) -> Result<()> {
        if self.vertices.is_empty() {
            return Ok(());
        }
        if self.initial.is_empty() {
            return Err(Error::InvalidFst("no initial vertex".into()));
        }
        if self.finals.is_empty() {
            return Err(Error::InvalidFst("no final vertex".into()));
        }
        if let Some(v) = self.vertices.iter().find(|v| v.time > self.num_frames) {
            return Err(Error::InvalidFst(format!(
                "vertex time {} exceeds frame count {}",
                v.time, self.num_frames
            )));
        }
        for e in &self.edges {
            let (t0, t1) = (self.vertices[e.tail as usize].time, self.vertices[e.head as usize].time);
            if t1 <= t0 {
                return Err(Error::InvalidFst(format!(
                    "edge from time {t0} to time {t1} does not advance"
                )));
            }
            if !e.weight.is_finite() {
                return Err(Error::NonFinite("edge weight".into()));
            }
        }
        Ok(())
    }
}

/// Incremental construction of an [`Fst`].
#[derive(Debug, Default)]
pub struct FstBuilder {
    num_frames: u32,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    initial: Vec<u32>,
    finals: Vec<u32>,
}

impl FstBuilder {
    pub fn new(num_frames: u32) -> Self {
        FstBuilder { num_frames, ..Default::default() }
    }

    pub fn add_vertex(&mut self, time: u32) -> u32 {
        let id = self.vertices.len() as u32;
        self.vertices.push(Vertex { time });
        id
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn add_edge(&mut self, tail: u32, head: u32, label: Label, weight: f64) -> Result<u32> {
        let get = |v: u32| -> Result<u32> {
            self.vertices
                .get(v as usize)
                .map(|vert| vert.time)
                .ok_or_else(|| Error::InvalidFst(format!("edge references undeclared vertex {v}")))
        };
        let (t0, t1) = (get(tail)?, get(head)?);
        if t1 <= t0 {
            return Err(Error::InvalidFst(format!(
                "edge from time {t0} to time {t1} does not advance"
            )));
        }
        if !weight.is_finite() {
            return Err(Error::NonFinite("edge weight".into()));
        }
        let id = self.edges.len() as u32;
        self.edges.push(Edge { tail, head, label, weight });
        Ok(id)
    }

    pub fn mark_initial(&mut self, v: u32) -> Result<()> {
        if v as usize >= self.vertices.len() {
            return Err(Error::InvalidFst(format!("initial marker references undeclared vertex {v}")));
        }
        if let Err(pos) = self.initial.binary_search(&v) {
            self.initial.insert(pos, v);
        }
        Ok(())
    }

    pub fn mark_final(&mut self, v: u32) -> Result<()> {
        if v as usize >= self.vertices.len() {
            return Err(Error::InvalidFst(format!("final marker references undeclared vertex {v}")));
        }
        if let Err(pos) = self.finals.binary_search(&v) {
            self.finals.insert(pos, v);
        }
        Ok(())
    }

    pub fn build(self) -> Fst {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        let mut radj = vec![Vec::new(); self.vertices.len()];
        for (id, e) in self.edges.iter().enumerate() {
            adj[e.tail as usize].push(id as u32);
            radj[e.head as usize].push(id as u32);
        }
        Fst {
            num_frames: self.num_frames,
            vertices: self.vertices,
            edges: self.edges,
            initial: self.initial,
            finals: self.finals,
            adj,
            radj,
        }
    }
}

/// Builds the dense hypothesis space for `num_frames` frames: one vertex per
/// boundary, and an edge for every label and every segment of duration 1 to
/// `max_duration`. All weights start at 0.
///
/// The edge count is `num_labels * sum over t of min(t, max_duration)`.
pub fn build_hypothesis_space(num_frames: u32, num_labels: usize, max_duration: u32) -> Result<Fst> {
    if num_frames == 0 {
        return Err(Error::InvalidInput("hypothesis space needs at least one frame".into()));
    }
    if num_labels == 0 {
        return Err(Error::InvalidInput("empty label alphabet".into()));
    }
    if max_duration == 0 {
        return Err(Error::InvalidInput("max duration must be positive".into()));
    }
    let mut builder = FstBuilder::new(num_frames);
    for t in 0..=num_frames {
        builder.add_vertex(t);
    }
    for t in 1..=num_frames {
        for s in t.saturating_sub(max_duration)..t {
            for label in 0..num_labels {
                builder.add_edge(s, t, label as Label, 0.0)?;
            }
        }
    }
    builder.mark_initial(0)?;
    builder.mark_final(num_frames)?;
    Ok(builder.build())
}

/// Vertices in a topological order, deterministic across runs: ascending
/// time stamp, ties broken by ascending vertex id. Errors on a cycle.
pub fn topological_order(fst: &Fst) -> Result<Vec<u32>> {
    let n = fst.num_vertices();
    let mut indegree: Vec<usize> = (0..n).map(|v| fst.in_edges(v as u32).len()).collect();
    let mut heap = BinaryHeap::new();
    for (v, &d) in indegree.iter().enumerate() {
        if d == 0 {
            heap.push(std::cmp::Reverse((fst.vertex(v as u32).time, v as u32)));
        }
    }
    let mut order = Vec::with_capacity(n);
    while let Some(std::cmp::Reverse((_, v))) = heap.pop() {
        order.push(v);
        for &e in fst.out_edges(v) {
            let head = fst.edge(e).head;
            indegree[head as usize] -= 1;
            if indegree[head as usize] == 0 {
                heap.push(std::cmp::Reverse((fst.vertex(head).time, head)));
            }
        }
    }
    if order.len() != n {
        return Err(Error::Cycle);
    }
    Ok(order)
}

/// Removes every vertex and edge that does not lie on some complete path
/// from an initial to a final vertex. Vertex and edge ids are recompacted in
/// ascending order of their old ids; weights are untouched.
pub fn trim(fst: &Fst) -> Fst {
    let n = fst.num_vertices();
    let mut forward = vec![false; n];
    let mut stack: Vec<u32> = fst.initial().to_vec();
    for &v in &stack {
        forward[v as usize] = true;
    }
    while let Some(v) = stack.pop() {
        for &e in fst.out_edges(v) {
            let head = fst.edge(e).head;
            if !forward[head as usize] {
                forward[head as usize] = true;
                stack.push(head);
            }
        }
    }
    let mut backward = vec![false; n];
    let mut stack: Vec<u32> = fst.finals().to_vec();
    for &v in &stack {
        backward[v as usize] = true;
    }
    while let Some(v) = stack.pop() {
        for &e in fst.in_edges(v) {
            let tail = fst.edge(e).tail;
            if !backward[tail as usize] {
                backward[tail as usize] = true;
                stack.push(tail);
            }
        }
    }

    let keep: Vec<bool> = (0..n).map(|v| forward[v] && backward[v]).collect();
    let mut remap = vec![u32::MAX; n];
    let mut builder = FstBuilder::new(fst.num_frames());
    for v in 0..n {
        if keep[v] {
            remap[v] = builder.add_vertex(fst.vertex(v as u32).time);
        }
    }
    for e in fst.edges() {
        if keep[e.tail as usize] && keep[e.head as usize] {
            builder
                .add_edge(remap[e.tail as usize], remap[e.head as usize], e.label, e.weight)
                .expect("trim preserves edge validity");
        }
    }
    for &v in fst.initial() {
        if keep[v as usize] {
            builder.mark_initial(remap[v as usize]).expect("kept vertex");
        }
    }
    for &v in fst.finals() {
        if keep[v as usize] {
            builder.mark_final(remap[v as usize]).expect("kept vertex");
        }
    }
    builder.build()
}

/// Writes a lattice in the line-oriented text format:
///
/// ```text
/// #frames <T>
/// v <id> <time>
/// e <id> <tail> <head> <label> <weight>
/// i <vertex-id>
/// f <vertex-id>
/// ```
///
/// Weights carry 17 significant digits so that reading the file back
/// reproduces them bit for bit.
pub fn write_lattice<W: Write>(fst: &Fst, alphabet: &LabelAlphabet, out: &mut W) -> Result<()> {
    writeln!(out, "#frames {}", fst.num_frames())?;
    for (id, v) in fst.vertices().iter().enumerate() {
        writeln!(out, "v {} {}", id, v.time)?;
    }
    for (id, e) in fst.edges().iter().enumerate() {
        writeln!(
            out,
            "e {} {} {} {} {:.16e}",
            id,
            e.tail,
            e.head,
            alphabet.name(e.label),
            e.weight
        )?;
    }
    for &v in fst.initial() {
        writeln!(out, "i {v}")?;
    }
    for &v in fst.finals() {
        writeln!(out, "f {v}")?;
    }
    Ok(())
}

/// Reads the format produced by [`write_lattice`]. Labels must already be
/// present in `alphabet`; errors carry 1-based line numbers.
pub fn read_lattice<R: BufRead>(input: R, alphabet: &LabelAlphabet) -> Result<Fst> {
    let mut builder: Option<FstBuilder> = None;
    let mut vertex_count = 0u32;
    let mut edge_count = 0u32;
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_ascii_whitespace();
        let tag = fields.next().expect("nonempty line");
        let mut next = |what: &str| -> Result<&str> {
            fields.next().ok_or_else(|| Error::parse(lineno, format!("missing {what}")))
        };
        fn num<T: std::str::FromStr>(lineno: usize, what: &str, s: &str) -> Result<T> {
            s.parse().map_err(|_| Error::parse(lineno, format!("bad {what} '{s}'")))
        }
        if tag == "#frames" {
            if builder.is_some() {
                return Err(Error::parse(lineno, "duplicate #frames header"));
            }
            builder = Some(FstBuilder::new(num(lineno, "frame count", next("frame count")?)?));
            continue;
        }
        let b = builder
            .as_mut()
            .ok_or_else(|| Error::parse(lineno, "expected #frames header first"))?;
        match tag {
            "v" => {
                let id: u32 = num(lineno, "vertex id", next("vertex id")?)?;
                if id != vertex_count {
                    return Err(Error::parse(lineno, format!("vertex id {id}, expected {vertex_count}")));
                }
                let time: u32 = num(lineno, "time stamp", next("time stamp")?)?;
                b.add_vertex(time);
                vertex_count += 1;
            }
            "e" => {
                let id: u32 = num(lineno, "edge id", next("edge id")?)?;
                if id != edge_count {
                    return Err(Error::parse(lineno, format!("edge id {id}, expected {edge_count}")));
                }
                let tail: u32 = num(lineno, "tail vertex", next("tail vertex")?)?;
                let head: u32 = num(lineno, "head vertex", next("head vertex")?)?;
                let name = next("label")?;
                let label = alphabet
                    .id(name)
                    .ok_or_else(|| Error::parse(lineno, format!("unknown label '{name}'")))?;
                let weight: f64 = num(lineno, "weight", next("weight")?)?;
                if !weight.is_finite() {
                    return Err(Error::parse(lineno, "non-finite edge weight"));
                }
                b.add_edge(tail, head, label, weight)
                    .map_err(|e| Error::parse(lineno, e.to_string()))?;
                edge_count += 1;
            }
            "i" => {
                let v: u32 = num(lineno, "vertex id", next("vertex id")?)?;
                b.mark_initial(v).map_err(|e| Error::parse(lineno, e.to_string()))?;
            }
            "f" => {
                let v: u32 = num(lineno, "vertex id", next("vertex id")?)?;
                b.mark_final(v).map_err(|e| Error::parse(lineno, e.to_string()))?;
            }
            _ => return Err(Error::parse(lineno, format!("unknown record '{tag}'"))),
        }
        if fields.next().is_some() {
            return Err(Error::parse(lineno, "trailing fields"));
        }
    }
    let b = builder.ok_or_else(|| Error::parse(0, "empty lattice file (missing #frames)"))?;
    Ok(b.build())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> LabelAlphabet {
        LabelAlphabet::from_names(["a", "b", "c"]).unwrap()
    }

    #[test]
    fn hypothesis_space_edge_count_matches_closed_form() {
        for (t, l, d) in [(2u32, 2usize, 2u32), (5, 3, 2), (7, 4, 30), (10, 2, 3)] {
            let fst = build_hypothesis_space(t, l, d).unwrap();
            let expected: usize = (1..=t).map(|i| i.min(d) as usize).sum::<usize>() * l;
            assert_eq!(fst.num_edges(), expected, "T={t} L={l} D={d}");
            assert_eq!(fst.num_vertices(), t as usize + 1);
            assert_eq!(fst.initial(), &[0]);
            assert_eq!(fst.finals(), &[t]);
            fst.validate().unwrap();
        }
    }

    #[test]
    fn two_frame_space_has_three_vertices_and_six_edges() {
        let fst = build_hypothesis_space(2, 2, 2).unwrap();
        assert_eq!(fst.num_vertices(), 3);
        assert_eq!(fst.num_edges(), 6);
        let mut segs: Vec<(u32, u32, Label)> =
            (0..fst.num_edges() as u32).map(|e| (fst.segment(e).start, fst.segment(e).end, fst.segment(e).label)).collect();
        segs.sort_unstable();
        assert_eq!(
            segs,
            vec![(0, 1, 0), (0, 1, 1), (0, 2, 0), (0, 2, 1), (1, 2, 0), (1, 2, 1)]
        );
    }

    #[test]
    fn hypothesis_space_rejects_degenerate_inputs() {
        assert!(build_hypothesis_space(0, 2, 2).is_err());
        assert!(build_hypothesis_space(2, 0, 2).is_err());
        assert!(build_hypothesis_space(2, 2, 0).is_err());
    }

    #[test]
    fn builder_rejects_non_advancing_edges() {
        let mut b = FstBuilder::new(2);
        let v0 = b.add_vertex(1);
        let v1 = b.add_vertex(1);
        assert!(b.add_edge(v0, v1, 0, 0.0).is_err());
        let v2 = b.add_vertex(0);
        assert!(b.add_edge(v0, v2, 0, 0.0).is_err());
        assert!(b.add_edge(v0, 9, 0, 0.0).is_err());
        assert!(b.add_edge(v0, v1, 0, f64::NAN).is_err());
    }

    #[test]
    fn topological_order_is_time_then_id() {
        let mut b = FstBuilder::new(3);
        let v2 = b.add_vertex(2);
        let v0 = b.add_vertex(0);
        let v1 = b.add_vertex(1);
        let v3 = b.add_vertex(3);
        b.add_edge(v0, v1, 0, 0.0).unwrap();
        b.add_edge(v1, v2, 0, 0.0).unwrap();
        b.add_edge(v2, v3, 0, 0.0).unwrap();
        b.mark_initial(v0).unwrap();
        b.mark_final(v3).unwrap();
        let fst = b.build();
        assert_eq!(topological_order(&fst).unwrap(), vec![v0, v1, v2, v3]);
    }

    #[test]
    fn single_vertex_orders_trivially() {
        let mut b = FstBuilder::new(1);
        let v = b.add_vertex(0);
        b.mark_initial(v).unwrap();
        b.mark_final(v).unwrap();
        assert_eq!(topological_order(&b.build()).unwrap(), vec![0]);
    }

    #[test]
    fn trim_drops_dead_ends_and_unreachable_vertices() {
        let mut b = FstBuilder::new(3);
        let v0 = b.add_vertex(0);
        let v1 = b.add_vertex(1);
        let dead = b.add_vertex(2);
        let unreachable = b.add_vertex(1);
        let v3 = b.add_vertex(3);
        b.add_edge(v0, v1, 0, 1.0).unwrap();
        b.add_edge(v1, v3, 1, 2.0).unwrap();
        b.add_edge(v0, dead, 0, 5.0).unwrap();
        b.add_edge(unreachable, v3, 2, 3.0).unwrap();
        b.mark_initial(v0).unwrap();
        b.mark_final(v3).unwrap();
        let fst = b.build();
        let trimmed = trim(&fst);
        assert_eq!(trimmed.num_vertices(), 3);
        assert_eq!(trimmed.num_edges(), 2);
        assert_eq!(trimmed.initial().len(), 1);
        assert_eq!(trimmed.finals().len(), 1);
        let weights: Vec<f64> = trimmed.edges().iter().map(|e| e.weight).collect();
        assert_eq!(weights, vec![1.0, 2.0]);
        trimmed.validate().unwrap();
    }

    #[test]
    fn trim_of_unconnected_lattice_is_empty() {
        let mut b = FstBuilder::new(2);
        let v0 = b.add_vertex(0);
        let v1 = b.add_vertex(1);
        b.add_edge(v0, v1, 0, 0.0).unwrap();
        b.mark_initial(v0).unwrap();
        let fst = b.build();
        let trimmed = trim(&fst);
        assert_eq!(trimmed.num_vertices(), 0);
        assert!(trimmed.is_empty());
    }

    #[test]
    fn lattice_round_trips_bit_for_bit() {
        let alphabet = abc();
        let mut fst = build_hypothesis_space(3, 3, 2).unwrap();
        let weights: Vec<f64> = (0..fst.num_edges())
            .map(|i| (i as f64 * 0.37 - 1.0) / 3.0)
            .collect();
        fst = fst.with_weights(&weights).unwrap();
        let mut buf = Vec::new();
        write_lattice(&fst, &alphabet, &mut buf).unwrap();
        let back = read_lattice(buf.as_slice(), &alphabet).unwrap();
        assert_eq!(back.num_frames(), fst.num_frames());
        assert_eq!(back.num_vertices(), fst.num_vertices());
        assert_eq!(back.initial(), fst.initial());
        assert_eq!(back.finals(), fst.finals());
        for (a, b) in fst.edges().iter().zip(back.edges()) {
            assert_eq!(a.tail, b.tail);
            assert_eq!(a.head, b.head);
            assert_eq!(a.label, b.label);
            assert_eq!(a.weight.to_bits(), b.weight.to_bits(), "weights must round-trip exactly");
        }
    }

    #[test]
    fn empty_lattice_round_trips() {
        let alphabet = abc();
        let fst = Fst::empty(7);
        let mut buf = Vec::new();
        write_lattice(&fst, &alphabet, &mut buf).unwrap();
        let back = read_lattice(buf.as_slice(), &alphabet).unwrap();
        assert_eq!(back.num_frames(), 7);
        assert_eq!(back.num_vertices(), 0);
        assert_eq!(back.num_edges(), 0);
    }

    #[test]
    fn read_reports_line_numbers() {
        let alphabet = abc();
        let text = "#frames 2\nv 0 0\nv 1 2\ne 0 0 9 a 1.0\n";
        match read_lattice(text.as_bytes(), &alphabet) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = "#frames 2\nv 0 0\nv 1 2\ne 0 0 1 z 1.0\n";
        match read_lattice(text.as_bytes(), &alphabet) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("unknown label"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = "v 0 0\n";
        assert!(read_lattice(text.as_bytes(), &alphabet).is_err());
    }

    #[test]
    fn path_lookup_follows_lattice_structure() {
        let fst = build_hypothesis_space(3, 2, 2).unwrap();
        let path = SegmentPath::new(vec![
            Segment::new(0, 2, 1),
            Segment::new(2, 3, 0),
        ])
        .unwrap();
        let ids = fst.find_path(&path).unwrap();
        assert_eq!(fst.path(&ids).unwrap(), path);
        let missing = SegmentPath::new(vec![Segment::new(0, 3, 0)]).unwrap();
        assert!(fst.find_path(&missing).is_none(), "duration 3 exceeds max duration 2");
    }

    #[test]
    fn segment_paths_must_connect() {
        assert!(SegmentPath::new(vec![Segment::new(0, 2, 0), Segment::new(3, 4, 1)]).is_err());
        assert!(SegmentPath::new(vec![Segment::new(2, 2, 0)]).is_err());
        let path = SegmentPath::new(vec![Segment::new(0, 2, 0), Segment::new(2, 4, 1)]).unwrap();
        assert_eq!(path.frame_labels().unwrap(), vec![0, 0, 1, 1]);
    }
}
