use super::algorithm::{AlgorithmGraph, Block, BlockKind, Dependency, PortRef, SELF_BLOCK};
use super::ModelError;

/// Replaces every super block by its body, recursively. Children are renamed
/// `parent/child` and inherit the parent's period and constraint when they have none.
pub fn flatten(g: &AlgorithmGraph) -> Result<AlgorithmGraph, ModelError> {
    if !g.has_super_blocks() {
        return Ok(g.clone());
    }
    let mut out = AlgorithmGraph {
        name: g.name.clone(),
        period_stu: g.period_stu,
        ports: g.ports.clone(),
        dtypes: g.dtypes.clone(),
        blocks: Vec::new(),
        deps: Vec::new(),
    };
    let mut spliced = Vec::new();
    for b in &g.blocks {
        match (&b.kind, &b.body) {
            (BlockKind::Super, Some(body)) => {
                let inner = flatten(body)?;
                let s = Splice::new(b, inner)?;
                out.blocks.extend(s.children.iter().cloned());
                spliced.push(s);
            }
            _ => out.blocks.push(b.clone()),
        }
    }
    let find = |name: &str| spliced.iter().find(|s| s.name == name);

    for dep in &g.deps {
        match dep {
            Dependency::Data { from, to } => {
                let sources = match find(&from.block) {
                    Some(s) => match s.output_source(&from.port) {
                        Source::Child(p) => vec![p],
                        Source::Boundary(port) => g
                            .feed_of(&from.block, &port)
                            .map(|p| resolve_source(&spliced, g, p))
                            .unwrap_or_default(),
                    },
                    None => vec![from.clone()],
                };
                let sinks = match find(&to.block) {
                    Some(s) => s.input_sinks(&to.port),
                    None => vec![to.clone()],
                };
                for src in &sources {
                    for dst in &sinks {
                        out.deps.push(Dependency::data(src.clone(), dst.clone()));
                    }
                }
            }
            Dependency::Precedence { from, to } => {
                let froms = find(from).map_or_else(|| vec![from.clone()], |s| s.child_names());
                let tos = find(to).map_or_else(|| vec![to.clone()], |s| s.child_names());
                for a in &froms {
                    for b in &tos {
                        out.deps.push(Dependency::precedence(a.clone(), b.clone()));
                    }
                }
            }
        }
    }
    for s in &spliced {
        out.deps.extend(s.internal.iter().cloned());
    }
    dedup_in_order(&mut out.deps);
    Ok(out)
}

/// Producer of a super block output as seen from outside, following
/// pass-through chains across nested boundaries.
fn resolve_source(spliced: &[Splice], g: &AlgorithmGraph, p: &PortRef) -> Vec<PortRef> {
    match spliced.iter().find(|s| s.name == p.block) {
        None => vec![p.clone()],
        Some(s) => match s.output_source(&p.port) {
            Source::Child(c) => vec![c],
            Source::Boundary(port) => g
                .feed_of(&p.block, &port)
                .map(|q| resolve_source(spliced, g, q))
                .unwrap_or_default(),
        },
    }
}

fn dedup_in_order(deps: &mut Vec<Dependency>) {
    let mut seen = std::collections::HashSet::new();
    deps.retain(|d| seen.insert(d.clone()));
}

enum Source {
    Child(PortRef),
    /// The output is wired straight to this boundary input.
    Boundary(String),
}

struct Splice {
    name: String,
    children: Vec<Block>,
    internal: Vec<Dependency>,
    /// (boundary input port, child sink)
    sinks: Vec<(String, PortRef)>,
    /// (boundary output port, producer inside the body)
    sources: Vec<(String, PortRef)>,
}

impl Splice {
    fn new(block: &Block, body: AlgorithmGraph) -> Result<Self, ModelError> {
        let prefix = format!("{}/", block.name);
        let rename = |p: &PortRef| PortRef::new(format!("{prefix}{}", p.block), p.port.clone());
        let children = body
            .blocks
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.name = format!("{prefix}{}", c.name);
                if c.period_stu.is_none() {
                    c.period_stu = block.period_stu.or(body.period_stu);
                }
                if c.constraint.is_none() {
                    c.constraint = block.constraint.clone();
                }
                c
            })
            .collect();
        let mut internal = Vec::new();
        let mut sinks = Vec::new();
        let mut sources = Vec::new();
        for dep in &body.deps {
            match dep {
                Dependency::Data { from, to } => match (from.is_boundary(), to.is_boundary()) {
                    (false, false) => internal.push(Dependency::data(rename(from), rename(to))),
                    (true, false) => sinks.push((from.port.clone(), rename(to))),
                    (false, true) => sources.push((to.port.clone(), rename(from))),
                    (true, true) => {
                        sources.push((to.port.clone(), PortRef::new(SELF_BLOCK, from.port.clone())))
                    }
                },
                Dependency::Precedence { from, to } => internal.push(Dependency::precedence(
                    format!("{prefix}{from}"),
                    format!("{prefix}{to}"),
                )),
            }
        }
        for p in block.inputs() {
            let used = sinks.iter().any(|(n, _)| n == &p.name)
                || sources
                    .iter()
                    .any(|(_, s)| s.is_boundary() && s.port == p.name);
            if !used {
                return Err(ModelError::FlattenDangling {
                    block: block.name.clone(),
                    port: p.name.clone(),
                });
            }
        }
        for p in block.outputs() {
            if !sources.iter().any(|(n, _)| n == &p.name) {
                return Err(ModelError::FlattenDangling {
                    block: block.name.clone(),
                    port: p.name.clone(),
                });
            }
        }
        Ok(Self {
            name: block.name.clone(),
            children,
            internal,
            sinks,
            sources,
        })
    }

    fn input_sinks(&self, port: &str) -> Vec<PortRef> {
        self.sinks
            .iter()
            .filter(|(n, _)| n == port)
            .map(|(_, p)| p.clone())
            .collect()
    }

    fn output_source(&self, port: &str) -> Source {
        let src = self
            .sources
            .iter()
            .find(|(n, _)| n == port)
            .map(|(_, p)| p.clone())
            .expect("checked in Splice::new");
        if src.is_boundary() {
            Source::Boundary(src.port)
        } else {
            Source::Child(src)
        }
    }

    fn child_names(&self) -> Vec<String> {
        self.children.iter().map(|c| c.name.clone()).collect()
    }
}
