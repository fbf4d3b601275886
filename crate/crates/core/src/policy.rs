//! Cache and routing decisions, per GoP, plus their JSON document form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::model::{ItemKey, Source};

/// Cache contents of one GoP: `cached[n][i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GopCache {
    pub cached: Vec<Vec<bool>>,
}

impl GopCache {
    pub fn empty(sbs: usize, items: usize) -> Self {
        GopCache {
            cached: vec![vec![false; items]; sbs],
        }
    }

    pub fn is_cached(&self, n: usize, i: usize) -> bool {
        self.cached[n][i]
    }

    pub fn used_kbit(&self, inst: &Instance, n: usize) -> u64 {
        self.cached[n]
            .iter()
            .zip(&inst.items)
            .filter(|(c, _)| **c)
            .map(|(_, it)| it.size_kbit)
            .sum()
    }

    pub fn used_mbit(&self, inst: &Instance, n: usize) -> f64 {
        self.cached[n]
            .iter()
            .zip(&inst.items)
            .filter(|(c, _)| **c)
            .map(|(_, it)| it.size)
            .sum()
    }
}

/// Routing decisions of one GoP: `source[u * items + i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GopRouting {
    pub items: usize,
    pub source: Vec<Source>,
}

impl GopRouting {
    pub fn empty(users: usize, items: usize) -> Self {
        GopRouting {
            items,
            source: vec![Source::None; users * items],
        }
    }

    pub fn users(&self) -> usize {
        self.source.len().checked_div(self.items).unwrap_or(0)
    }

    pub fn get(&self, u: usize, i: usize) -> Source {
        self.source[u * self.items + i]
    }

    pub fn set(&mut self, u: usize, i: usize, s: Source) {
        self.source[u * self.items + i] = s;
    }

    /// Delay consumed by user `u` on the items of one video.
    pub fn video_delay(&self, inst: &Instance, u: usize, v: usize) -> f64 {
        inst.layout[v]
            .items
            .iter()
            .map(|&i| match self.get(u, i) {
                Source::None => 0.0,
                Source::Sbs(n) => inst.delay(u, Some(n), i),
                Source::Mbs => inst.delay(u, None, i),
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachePolicy {
    pub gops: Vec<GopCache>,
}

impl CachePolicy {
    pub fn empty(inst: &Instance) -> Self {
        CachePolicy {
            gops: vec![GopCache::empty(inst.sbs(), inst.len()); inst.gops],
        }
    }

    pub fn is_cached(&self, inst: &Instance, n: usize, key: &ItemKey) -> bool {
        inst.index_of(key)
            .is_some_and(|i| self.gops[key.g].is_cached(n, i))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingPolicy {
    pub gops: Vec<GopRouting>,
}

impl RoutingPolicy {
    pub fn empty(inst: &Instance) -> Self {
        RoutingPolicy {
            gops: vec![GopRouting::empty(inst.users(), inst.len()); inst.gops],
        }
    }

    pub fn source(&self, inst: &Instance, u: usize, key: &ItemKey) -> Source {
        inst.index_of(key)
            .map_or(Source::None, |i| self.gops[key.g].get(u, i))
    }
}

/// Joint caching and routing decisions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policies {
    pub cache: CachePolicy,
    pub routing: RoutingPolicy,
}

impl Policies {
    pub fn empty(inst: &Instance) -> Self {
        Policies {
            cache: CachePolicy::empty(inst),
            routing: RoutingPolicy::empty(inst),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub sbs: usize,
    pub items: Vec<ItemKey>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteEntry {
    pub user: usize,
    pub key: ItemKey,
    pub source: Source,
}

/// Sparse, key-addressed form of [`Policies`] used on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyDocument {
    pub cache: Vec<CacheEntry>,
    pub routing: Vec<RouteEntry>,
}

impl PolicyDocument {
    pub fn from_policies(inst: &Instance, policies: &Policies) -> Self {
        let cache = (0..inst.sbs())
            .map(|n| CacheEntry {
                sbs: inst.sbs_ids[n],
                items: policies
                    .cache
                    .gops
                    .iter()
                    .enumerate()
                    .flat_map(|(g, gc)| {
                        gc.cached[n]
                            .iter()
                            .enumerate()
                            .filter(|(_, c)| **c)
                            .map(move |(i, _)| inst.key(g, i))
                    })
                    .collect(),
            })
            .collect();
        let mut routing = Vec::new();
        for (g, gr) in policies.routing.gops.iter().enumerate() {
            for u in 0..inst.users() {
                for i in 0..inst.len() {
                    let s = gr.get(u, i);
                    if s.is_delivered() {
                        routing.push(RouteEntry {
                            user: inst.user_ids[u],
                            key: inst.key(g, i),
                            source: match s {
                                Source::Sbs(n) => Source::Sbs(inst.sbs_ids[n]),
                                other => other,
                            },
                        });
                    }
                }
            }
        }
        PolicyDocument { cache, routing }
    }

    /// Rebuilds dense policies; unknown keys or duplicate routes are errors.
    pub fn to_policies(&self, inst: &Instance) -> Result<Policies> {
        let mut p = Policies::empty(inst);
        let local_sbs = |id: usize| inst.sbs_ids.iter().position(|&s| s == id);
        let local_user = |id: usize| inst.user_ids.iter().position(|&s| s == id);
        for entry in &self.cache {
            let n = local_sbs(entry.sbs)
                .ok_or_else(|| Error::OutOfBounds(format!("unknown SBS {}", entry.sbs)))?;
            for key in &entry.items {
                let i = inst
                    .index_of(key)
                    .ok_or_else(|| Error::OutOfBounds(format!("unknown item {key:?}")))?;
                p.cache.gops[key.g].cached[n][i] = true;
            }
        }
        for r in &self.routing {
            let u = local_user(r.user)
                .ok_or_else(|| Error::OutOfBounds(format!("unknown user {}", r.user)))?;
            let i = inst
                .index_of(&r.key)
                .ok_or_else(|| Error::OutOfBounds(format!("unknown item {:?}", r.key)))?;
            let source = match r.source {
                Source::Sbs(id) => Source::Sbs(
                    local_sbs(id).ok_or_else(|| Error::OutOfBounds(format!("unknown SBS {id}")))?,
                ),
                other => other,
            };
            let slot = &mut p.routing.gops[r.key.g];
            if slot.get(u, i).is_delivered() {
                return Err(Error::Invalid(format!(
                    "user {} receives {:?} from more than one source",
                    r.user, r.key
                )));
            }
            slot.set(u, i, source);
        }
        Ok(p)
    }
}
