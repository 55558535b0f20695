//! Expansion of a flat graph into block instances over one hyperperiod.

use std::collections::{BTreeMap, HashMap};

use super::AdequationError;
use crate::model::{is_intra, AlgorithmGraph, BlockKind, Dependency};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Inst {
    pub block: usize,
    pub k: u32,
    pub id: String,
    pub release: u64,
    /// Period of the block when it has one.
    pub period: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Link {
    Data {
        from_port: String,
        to_port: String,
        dtype: String,
        width: u32,
    },
    Precedence,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Pred {
    pub inst: usize,
    pub link: Link,
}

/// Value carried into the next repetition by a delay block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Carry {
    pub producer: usize,
    pub delay: usize,
    pub link: Link,
}

pub(crate) struct Problem<'a> {
    pub flat: &'a AlgorithmGraph,
    pub insts: Vec<Inst>,
    pub preds: Vec<Vec<Pred>>,
    pub carries: Vec<Carry>,
    /// Known up front only for periodic graphs.
    pub hyperperiod: Option<u64>,
    pub periods: BTreeMap<String, u64>,
    /// First instance index of each block.
    pub first: Vec<usize>,
    pub count: Vec<u32>,
}

pub(crate) fn instance_id(name: &str, k: u32, count: u32) -> String {
    if count == 1 {
        name.to_string()
    } else {
        format!("{name}#{k}")
    }
}

impl<'a> Problem<'a> {
    pub fn new(flat: &'a AlgorithmGraph) -> Result<Self, AdequationError> {
        if flat.has_super_blocks() {
            return Err(AdequationError::NotFlat);
        }
        let mut periods = BTreeMap::new();
        for b in &flat.blocks {
            if let Some(p) = flat.period_of(b) {
                periods.insert(b.name.clone(), p);
            }
        }
        let mut distinct: Vec<u64> = periods.values().copied().collect();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.windows(2).any(|w| w[1] % w[0] != 0) {
            return Err(AdequationError::NonHarmonic { periods: distinct });
        }
        let hyperperiod = distinct.last().copied();

        let index: HashMap<&str, usize> = flat
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| (b.name.as_str(), i))
            .collect();
        let mut insts = Vec::new();
        let mut first = Vec::with_capacity(flat.blocks.len());
        let mut count = Vec::with_capacity(flat.blocks.len());
        for (bi, b) in flat.blocks.iter().enumerate() {
            let period = periods.get(&b.name).copied();
            let n = match (period, hyperperiod) {
                (Some(p), Some(h)) => u32::try_from(h / p).map_err(|_| AdequationError::PeriodOverflow {
                    subject: b.name.clone(),
                    end: h,
                    bound: p,
                })?,
                _ => 1,
            };
            first.push(insts.len());
            count.push(n);
            for k in 0..n {
                insts.push(Inst {
                    block: bi,
                    k,
                    id: instance_id(&b.name, k, n),
                    release: period.map_or(0, |p| p * u64::from(k)),
                    period,
                });
            }
        }

        let mut preds = vec![Vec::new(); insts.len()];
        let mut carries = Vec::new();
        for dep in &flat.deps {
            let (Some(&a), Some(&b)) = (index.get(dep.from_block()), index.get(dep.to_block())) else {
                continue;
            };
            let link = match dep {
                Dependency::Data { from, to } => {
                    let Some(port) = flat.blocks[a]
                        .outputs()
                        .find(|p| p.name == from.port)
                    else {
                        continue;
                    };
                    Link::Data {
                        from_port: from.port.clone(),
                        to_port: to.port.clone(),
                        dtype: port.dtype.clone(),
                        width: port.width,
                    }
                }
                Dependency::Precedence { .. } => Link::Precedence,
            };
            let (na, nb) = (count[a], count[b]);
            if is_intra(flat, dep) {
                for k in 0..nb {
                    let j = (u64::from(k) * u64::from(na) / u64::from(nb)) as u32;
                    preds[first[b] + k as usize].push(Pred {
                        inst: first[a] + j as usize,
                        link: link.clone(),
                    });
                }
            } else {
                debug_assert_eq!(flat.blocks[b].kind, BlockKind::Delay);
                if na != nb {
                    return Err(AdequationError::DelayRateMismatch {
                        delay: flat.blocks[b].name.clone(),
                    });
                }
                for k in 1..nb {
                    preds[first[b] + k as usize].push(Pred {
                        inst: first[a] + (k - 1) as usize,
                        link: link.clone(),
                    });
                }
                carries.push(Carry {
                    producer: first[a] + (na - 1) as usize,
                    delay: first[b],
                    link,
                });
            }
        }
        Ok(Self {
            flat,
            insts,
            preds,
            carries,
            hyperperiod,
            periods,
            first,
            count,
        })
    }

    pub fn block_of(&self, inst: usize) -> &'a crate::model::Block {
        &self.flat.blocks[self.insts[inst].block]
    }

    pub fn find(&self, id: &str) -> Option<usize> {
        self.insts.iter().position(|i| i.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Block, Port, PortRef};

    fn graph(pa: u64, pb: u64) -> AlgorithmGraph {
        AlgorithmGraph::new("g")
            .with_block(
                Block::new("a", BlockKind::Sensor)
                    .with_port(Port::output("o", "int8", 1, 1))
                    .with_period(pa),
            )
            .with_block(
                Block::new("b", BlockKind::Actuator)
                    .with_port(Port::input("i", "int8", 1, 1))
                    .with_period(pb),
            )
            .with_dep(Dependency::data(PortRef::new("a", "o"), PortRef::new("b", "i")))
    }

    #[test]
    fn faster_producer_feeds_aligned_instance() {
        let g = graph(10, 20);
        let p = Problem::new(&g).unwrap();
        assert_eq!(p.hyperperiod, Some(20));
        assert_eq!(p.insts.len(), 3);
        assert_eq!(p.insts[1].id, "a#1");
        assert_eq!(p.insts[1].release, 10);
        assert_eq!(p.preds[2], vec![Pred { inst: 0, link: p.preds[2][0].link.clone() }]);
    }

    #[test]
    fn slower_producer_feeds_every_consumer() {
        let g = graph(20, 5);
        let p = Problem::new(&g).unwrap();
        let firsts: Vec<usize> = (0..4).map(|k| p.preds[1 + k][0].inst).collect();
        assert_eq!(firsts, vec![0, 0, 0, 0]);
    }

    #[test]
    fn non_harmonic_periods_are_rejected() {
        assert!(matches!(
            Problem::new(&graph(4, 6)),
            Err(AdequationError::NonHarmonic { .. })
        ));
    }
}
