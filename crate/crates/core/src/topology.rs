//! Physical substrate: nodes, servers, directed links and the admissible
//! path catalog.
//!
//! A [`NetworkModel`] is immutable once built. Paths are enumerated with a
//! loop-free k-shortest-paths search (Yen) over propagation delay; equal
//! delays are broken by the lexicographic order of the node sequence so the
//! catalog is a pure function of the model and the [`CatalogConfig`].

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{LinkId, NodeId, PathId, ServerId};
use crate::scalar::{self, Scalar};

/// Mean Earth radius in km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Signal speed in fibre: 2/3 of the speed of light, km/s.
pub const FIBRE_SPEED_KM_S: f64 = 299_792.458 * 2.0 / 3.0;

/// The 7-node edge network with a Frankfurt cloud.
pub const NET7: &str = include_str!("../../../topologies/net7.topo");
/// The 44-node edge network with a North Virginia cloud.
pub const NET44: &str = include_str!("../../../topologies/net44.topo");

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("malformed topology document: {0}")]
    Parse(String),
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: usize },
    #[error("{kind} ids must be contiguous from 0, missing {missing}")]
    NonContiguous { kind: &'static str, missing: usize },
    #[error("{kind} {id} refers to unknown node {node}")]
    DanglingEndpoint { kind: &'static str, id: usize, node: usize },
    #[error("{kind} {id} has non-positive capacity {capacity}")]
    NonPositiveCapacity { kind: &'static str, id: usize, capacity: f64 },
    #[error("link {id} is a self-loop on node {node}")]
    SelfLoop { id: usize, node: usize },
    #[error("parallel links from node {src} to node {dst}")]
    ParallelLink { src: usize, dst: usize },
    #[error("link {id} has invalid delay {delay}")]
    InvalidDelay { id: usize, delay: f64 },
    #[error("link {id} has no delay_ms and an endpoint lacks coordinates")]
    MissingDelay { id: usize },
    #[error("no path from {src} to {dst}")]
    Unreachable { src: NodeId, dst: NodeId },
    #[error("path catalog has not been built")]
    NoCatalog,
}

/// Latitude/longitude in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Self {
        GeoPoint { lat, lon }
    }
}

/// Great-circle distance between two points, in km.
pub fn haversine_km<S: Scalar>(a: GeoPoint, b: GeoPoint) -> S {
    let (lat1, lon1) = (S::lit(a.lat).to_radians(), S::lit(a.lon).to_radians());
    let (lat2, lon2) = (S::lit(b.lat).to_radians(), S::lit(b.lon).to_radians());
    let two = S::lit(2.0);
    let h = ((lat2 - lat1) / two).sin().powi(2)
        + lat1.cos() * lat2.cos() * ((lon2 - lon1) / two).sin().powi(2);
    // clamp guards asin against rounding slightly above 1 at antipodes
    two * S::lit(EARTH_RADIUS_KM) * h.sqrt().min(S::one()).asin()
}

/// One-way propagation delay in ms over fibre between two points.
pub fn haversine_delay<S: Scalar>(a: GeoPoint, b: GeoPoint) -> S {
    haversine_km::<S>(a, b) / S::lit(FIBRE_SPEED_KM_S) * S::lit(1000.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub location: Option<GeoPoint>,
    pub is_cloud: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Server<S> {
    pub id: ServerId,
    pub node: NodeId,
    /// Processing capacity in units.
    pub capacity_max: S,
    pub is_cloud: bool,
    /// Activation cost when running idle, $/h.
    pub idle_energy_cost: S,
    /// $/h per unit of utilization.
    pub utilization_cost_slope: S,
    /// Fixed maintenance cost, $/h.
    pub fixed_maintenance_cost: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link<S> {
    pub id: LinkId,
    pub src: NodeId,
    pub dst: NodeId,
    /// Bandwidth in units; infinite for links touching a cloud node.
    pub capacity_max: S,
    /// Propagation delay in ms.
    pub prop_delay: S,
}

impl<S: Scalar> Link<S> {
    /// False for the uncapacitated links that reach the cloud. Those links
    /// are excluded from capacity checks and utilization averages.
    pub fn is_capacitated(&self) -> bool {
        self.capacity_max.is_finite()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Path<S> {
    pub id: PathId,
    pub nodes: Vec<NodeId>,
    pub links: Vec<LinkId>,
    /// All servers of the traversed nodes, in node order.
    pub servers: Vec<ServerId>,
    /// For each entry of `servers`, the position of its node in `nodes`.
    pub server_node_pos: Vec<usize>,
    pub total_prop_delay: S,
    pub traverses_cloud: bool,
}

impl<S> Path<S> {
    pub fn src(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn dst(&self) -> NodeId {
        *self.nodes.last().expect("paths are non-empty")
    }

    /// Position of `server` in the ordered server list, if on the path.
    pub fn server_index(&self, server: ServerId) -> Option<usize> {
        self.servers.iter().position(|&x| x == server)
    }

    /// Position of the node hosting `server`, if on the path.
    pub fn node_pos_of(&self, server: ServerId) -> Option<usize> {
        self.server_index(server).map(|i| self.server_node_pos[i])
    }

    pub fn contains_link(&self, link: LinkId) -> bool {
        self.links.contains(&link)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogConfig {
    /// Edge-only shortest paths per (src, dst).
    pub k_edge: usize,
    /// Add one path through a cloud node per (src, dst).
    pub include_cloud_path: bool,
    /// Candidate synchronization paths per ordered node pair.
    pub k_sync: usize,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        CatalogConfig { k_edge: 3, include_cloud_path: true, k_sync: 3 }
    }
}

/// Deduplicated path set with its two indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PathCatalog<S> {
    pub paths: Vec<Path<S>>,
    /// Admissible chain paths per ordered pair of edge nodes.
    pub sfc_index: BTreeMap<(NodeId, NodeId), Vec<PathId>>,
    /// Synchronization candidates per ordered pair of server-hosting nodes.
    pub sync_index: BTreeMap<(NodeId, NodeId), Vec<PathId>>,
    pub config: Option<CatalogConfig>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkModel<S> {
    nodes: Vec<Node>,
    servers: Vec<Server<S>>,
    links: Vec<Link<S>>,
    servers_at: Vec<Vec<ServerId>>,
    catalog: PathCatalog<S>,
}

impl<S: Scalar> NetworkModel<S> {
    /// Builds a model from already-validated parts. Links touching a cloud
    /// node are made uncapacitated.
    pub fn new(
        nodes: Vec<Node>,
        servers: Vec<Server<S>>,
        mut links: Vec<Link<S>>,
    ) -> Result<Self, TopologyError> {
        check_contiguous("node", nodes.iter().map(|n| n.id.0))?;
        check_contiguous("server", servers.iter().map(|s| s.id.0))?;
        check_contiguous("link", links.iter().map(|l| l.id.0))?;
        let mut servers_at = vec![Vec::new(); nodes.len()];
        for s in &servers {
            if s.node.0 >= nodes.len() {
                return Err(TopologyError::DanglingEndpoint { kind: "server", id: s.id.0, node: s.node.0 });
            }
            if !(s.capacity_max > S::zero()) {
                return Err(TopologyError::NonPositiveCapacity {
                    kind: "server",
                    id: s.id.0,
                    capacity: s.capacity_max.as_f64(),
                });
            }
            servers_at[s.node.0].push(s.id);
        }
        let mut seen = BTreeSet::new();
        for l in links.iter_mut() {
            for end in [l.src, l.dst] {
                if end.0 >= nodes.len() {
                    return Err(TopologyError::DanglingEndpoint { kind: "link", id: l.id.0, node: end.0 });
                }
            }
            if l.src == l.dst {
                return Err(TopologyError::SelfLoop { id: l.id.0, node: l.src.0 });
            }
            if !seen.insert((l.src, l.dst)) {
                return Err(TopologyError::ParallelLink { src: l.src.0, dst: l.dst.0 });
            }
            if !(l.capacity_max > S::zero()) {
                return Err(TopologyError::NonPositiveCapacity {
                    kind: "link",
                    id: l.id.0,
                    capacity: l.capacity_max.as_f64(),
                });
            }
            if !(l.prop_delay >= S::zero()) || !l.prop_delay.is_finite() {
                return Err(TopologyError::InvalidDelay { id: l.id.0, delay: l.prop_delay.as_f64() });
            }
            if nodes[l.src.0].is_cloud || nodes[l.dst.0].is_cloud {
                l.capacity_max = S::infinity();
            }
        }
        Ok(NetworkModel { nodes, servers, links, servers_at, catalog: PathCatalog::default() })
    }

    /// Builds the path catalog and returns the indexed model.
    pub fn with_catalog(mut self, config: CatalogConfig) -> Result<Self, TopologyError> {
        self.catalog = build_path_catalog(&self, config)?;
        Ok(self)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn servers(&self) -> &[Server<S>] {
        &self.servers
    }

    pub fn links(&self) -> &[Link<S>] {
        &self.links
    }

    pub fn paths(&self) -> &[Path<S>] {
        &self.catalog.paths
    }

    pub fn catalog(&self) -> &PathCatalog<S> {
        &self.catalog
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn server(&self, id: ServerId) -> &Server<S> {
        &self.servers[id.0]
    }

    pub fn link(&self, id: LinkId) -> &Link<S> {
        &self.links[id.0]
    }

    pub fn path(&self, id: PathId) -> &Path<S> {
        &self.catalog.paths[id.0]
    }

    pub fn servers_at(&self, node: NodeId) -> &[ServerId] {
        &self.servers_at[node.0]
    }

    /// Nodes that are not cloud nodes, in id order.
    pub fn edge_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(|n| !n.is_cloud).map(|n| n.id)
    }

    pub fn edge_node_count(&self) -> usize {
        self.edge_nodes().count()
    }

    /// Links between two edge nodes.
    pub fn edge_link_count(&self) -> usize {
        self.links
            .iter()
            .filter(|l| !self.nodes[l.src.0].is_cloud && !self.nodes[l.dst.0].is_cloud)
            .count()
    }

    /// Admissible chain paths from `src` to `dst`, shortest delay first.
    pub fn sfc_paths(&self, src: NodeId, dst: NodeId) -> Result<&[PathId], TopologyError> {
        if self.catalog.config.is_none() {
            return Err(TopologyError::NoCatalog);
        }
        self.catalog
            .sfc_index
            .get(&(src, dst))
            .map(Vec::as_slice)
            .ok_or(TopologyError::Unreachable { src, dst })
    }

    /// Candidate synchronization paths from `n` to `m`, shortest delay first.
    pub fn sync_paths_between(&self, n: NodeId, m: NodeId) -> Result<&[PathId], TopologyError> {
        if self.catalog.config.is_none() {
            return Err(TopologyError::NoCatalog);
        }
        self.catalog
            .sync_index
            .get(&(n, m))
            .map(Vec::as_slice)
            .ok_or(TopologyError::Unreachable { src: n, dst: m })
    }
}

fn check_contiguous(kind: &'static str, ids: impl Iterator<Item = usize>) -> Result<(), TopologyError> {
    let ids: Vec<usize> = ids.collect();
    let mut seen = vec![false; ids.len()];
    for &id in &ids {
        if id >= ids.len() {
            // some smaller id must be missing
            let missing = (0..ids.len()).find(|i| !ids.contains(i)).unwrap_or(ids.len());
            return Err(TopologyError::NonContiguous { kind, missing });
        }
        if seen[id] {
            return Err(TopologyError::DuplicateId { kind, id });
        }
        seen[id] = true;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Document format

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyDoc {
    nodes: Vec<NodeRec>,
    #[serde(default)]
    servers: Vec<ServerRec>,
    #[serde(default)]
    links: Vec<LinkRec>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRec {
    id: usize,
    lat: Option<f64>,
    lon: Option<f64>,
    #[serde(default)]
    cloud: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ServerRec {
    id: usize,
    node: usize,
    capacity: f64,
    cloud: Option<bool>,
    #[serde(default)]
    e_idle: f64,
    #[serde(default)]
    alpha_u: f64,
    #[serde(default)]
    k_fixed: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkRec {
    src: usize,
    dst: usize,
    capacity: f64,
    delay_ms: Option<f64>,
}

/// Parses a topology document. Missing link delays are filled from node
/// coordinates with [`haversine_delay`]. The path catalog is not built.
pub fn parse_topology<S: Scalar>(text: &str) -> Result<NetworkModel<S>, TopologyError> {
    let doc: TopologyDoc = toml::from_str(text).map_err(|e| TopologyError::Parse(e.to_string()))?;
    let nodes: Vec<Node> = doc
        .nodes
        .iter()
        .map(|n| Node {
            id: NodeId(n.id),
            location: match (n.lat, n.lon) {
                (Some(lat), Some(lon)) => Some(GeoPoint::new(lat, lon)),
                _ => None,
            },
            is_cloud: n.cloud,
        })
        .collect();
    check_contiguous("node", nodes.iter().map(|n| n.id.0))?;
    let mut by_id = nodes.clone();
    by_id.sort_by_key(|n| n.id);

    let mut servers = Vec::with_capacity(doc.servers.len());
    for s in &doc.servers {
        let node = by_id.get(s.node).ok_or(TopologyError::DanglingEndpoint {
            kind: "server",
            id: s.id,
            node: s.node,
        })?;
        servers.push(Server {
            id: ServerId(s.id),
            node: NodeId(s.node),
            capacity_max: S::lit(s.capacity),
            is_cloud: s.cloud.unwrap_or(node.is_cloud),
            idle_energy_cost: S::lit(s.e_idle),
            utilization_cost_slope: S::lit(s.alpha_u),
            fixed_maintenance_cost: S::lit(s.k_fixed),
        });
    }
    servers.sort_by_key(|s| s.id);

    let mut links = Vec::with_capacity(doc.links.len());
    for (i, l) in doc.links.iter().enumerate() {
        for end in [l.src, l.dst] {
            if end >= by_id.len() {
                return Err(TopologyError::DanglingEndpoint { kind: "link", id: i, node: end });
            }
        }
        let delay = match l.delay_ms {
            Some(d) => S::lit(d),
            None => match (by_id[l.src].location, by_id[l.dst].location) {
                (Some(a), Some(b)) => haversine_delay(a, b),
                _ => return Err(TopologyError::MissingDelay { id: i }),
            },
        };
        links.push(Link {
            id: LinkId(i),
            src: NodeId(l.src),
            dst: NodeId(l.dst),
            capacity_max: S::lit(l.capacity),
            prop_delay: delay,
        });
    }
    NetworkModel::new(by_id, servers, links)
}

/// Parses a topology document and builds its path catalog.
pub fn load_topology<S: Scalar>(text: &str, config: CatalogConfig) -> Result<NetworkModel<S>, TopologyError> {
    parse_topology(text)?.with_catalog(config)
}

// ---------------------------------------------------------------------------
// Path search

/// Candidate path during search: ordered by delay, then node sequence.
#[derive(Clone, Debug)]
struct Route<S> {
    delay: S,
    nodes: Vec<NodeId>,
    links: Vec<LinkId>,
}

impl<S: Scalar> Route<S> {
    fn key_cmp(&self, other: &Self) -> Ordering {
        scalar::cmp(self.delay, other.delay).then_with(|| self.nodes.cmp(&other.nodes))
    }
}

impl<S: Scalar> PartialEq for Route<S> {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}
impl<S: Scalar> Eq for Route<S> {}
impl<S: Scalar> PartialOrd for Route<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Scalar> Ord for Route<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

struct Graph<'a, S> {
    model: &'a NetworkModel<S>,
    /// Outgoing (neighbor, link) per node, sorted by neighbor.
    adj: Vec<Vec<(NodeId, LinkId)>>,
}

impl<'a, S: Scalar> Graph<'a, S> {
    fn new(model: &'a NetworkModel<S>) -> Self {
        let mut adj = vec![Vec::new(); model.nodes.len()];
        for l in &model.links {
            adj[l.src.0].push((l.dst, l.id));
        }
        for a in adj.iter_mut() {
            a.sort();
        }
        Graph { model, adj }
    }

    fn delay_of(&self, links: &[LinkId]) -> S {
        links.iter().fold(S::zero(), |acc, l| acc + self.model.links[l.0].prop_delay)
    }

    /// Dijkstra keyed on (delay, node sequence).
    fn shortest(
        &self,
        src: NodeId,
        dst: NodeId,
        banned_nodes: &BTreeSet<NodeId>,
        banned_links: &BTreeSet<LinkId>,
        allow: &dyn Fn(NodeId) -> bool,
    ) -> Option<Route<S>> {
        if banned_nodes.contains(&src) || !allow(src) {
            return None;
        }
        let mut settled = vec![false; self.adj.len()];
        let mut heap = BinaryHeap::new();
        heap.push(Reverse(Route { delay: S::zero(), nodes: vec![src], links: vec![] }));
        while let Some(Reverse(route)) = heap.pop() {
            let u = *route.nodes.last().unwrap();
            if settled[u.0] {
                continue;
            }
            settled[u.0] = true;
            if u == dst {
                return Some(route);
            }
            for &(v, l) in &self.adj[u.0] {
                if settled[v.0] || banned_nodes.contains(&v) || banned_links.contains(&l) || !allow(v) {
                    continue;
                }
                let mut next = route.clone();
                next.delay = route.delay + self.model.links[l.0].prop_delay;
                next.nodes.push(v);
                next.links.push(l);
                heap.push(Reverse(next));
            }
        }
        None
    }

    /// Yen's loop-free k shortest paths.
    fn k_shortest(&self, src: NodeId, dst: NodeId, k: usize, allow: &dyn Fn(NodeId) -> bool) -> Vec<Route<S>> {
        let none_n = BTreeSet::new();
        let none_l = BTreeSet::new();
        let Some(first) = self.shortest(src, dst, &none_n, &none_l, allow) else {
            return Vec::new();
        };
        let mut accepted = vec![first];
        let mut candidates: BTreeSet<Route<S>> = BTreeSet::new();
        while accepted.len() < k {
            let last = accepted.last().unwrap().clone();
            for i in 0..last.nodes.len() - 1 {
                let spur = last.nodes[i];
                let root_nodes = &last.nodes[..=i];
                let root_links = &last.links[..i];
                let mut banned_links = BTreeSet::new();
                for p in &accepted {
                    if p.nodes.len() > i && &p.nodes[..=i] == root_nodes {
                        banned_links.insert(p.links[i]);
                    }
                }
                let banned_nodes: BTreeSet<NodeId> = root_nodes[..i].iter().copied().collect();
                if let Some(spur_route) = self.shortest(spur, dst, &banned_nodes, &banned_links, allow) {
                    let mut links = root_links.to_vec();
                    links.extend_from_slice(&spur_route.links);
                    let mut nodes = root_nodes[..i].to_vec();
                    nodes.extend_from_slice(&spur_route.nodes);
                    let route = Route { delay: self.delay_of(&links), nodes, links };
                    if !accepted.iter().any(|a| a.links == route.links) {
                        candidates.insert(route);
                    }
                }
            }
            match candidates.pop_first() {
                Some(next) => accepted.push(next),
                None => break,
            }
        }
        accepted
    }

    /// Shortest simple path from `src` to `dst` through some cloud node,
    /// built from two legs meeting at the cloud node.
    fn via_cloud(&self, src: NodeId, dst: NodeId) -> Option<Route<S>> {
        let any = |_: NodeId| true;
        let none_l = BTreeSet::new();
        let mut best: Option<Route<S>> = None;
        for c in self.model.nodes.iter().filter(|n| n.is_cloud).map(|n| n.id) {
            if c == src || c == dst {
                continue;
            }
            let mut options = Vec::new();
            // head leg first, tail leg avoids it
            let ban_dst: BTreeSet<NodeId> = [dst].into();
            if let Some(head) = self.shortest(src, c, &ban_dst, &none_l, &any) {
                let ban: BTreeSet<NodeId> = head.nodes[..head.nodes.len() - 1].iter().copied().collect();
                if let Some(tail) = self.shortest(c, dst, &ban, &none_l, &any) {
                    options.push((head, tail));
                }
            }
            // tail leg first, head leg avoids it
            let ban_src: BTreeSet<NodeId> = [src].into();
            if let Some(tail) = self.shortest(c, dst, &ban_src, &none_l, &any) {
                let ban: BTreeSet<NodeId> = tail.nodes[1..].iter().copied().collect();
                if let Some(head) = self.shortest(src, c, &ban, &none_l, &any) {
                    options.push((head, tail));
                }
            }
            for (head, tail) in options {
                let mut nodes = head.nodes.clone();
                nodes.extend_from_slice(&tail.nodes[1..]);
                let mut links = head.links.clone();
                links.extend_from_slice(&tail.links);
                let route = Route { delay: self.delay_of(&links), nodes, links };
                if best.as_ref().map_or(true, |b| route < *b) {
                    best = Some(route);
                }
            }
        }
        best
    }
}

struct CatalogBuilder<'a, S> {
    model: &'a NetworkModel<S>,
    paths: Vec<Path<S>>,
    by_links: HashMap<Vec<LinkId>, PathId>,
}

impl<S: Scalar> CatalogBuilder<'_, S> {
    fn intern(&mut self, route: Route<S>) -> PathId {
        if let Some(&id) = self.by_links.get(&route.links) {
            return id;
        }
        let id = PathId(self.paths.len());
        let mut servers = Vec::new();
        let mut server_node_pos = Vec::new();
        for (pos, n) in route.nodes.iter().enumerate() {
            for &x in self.model.servers_at(*n) {
                servers.push(x);
                server_node_pos.push(pos);
            }
        }
        let traverses_cloud = route.nodes.iter().any(|n| self.model.nodes[n.0].is_cloud);
        self.by_links.insert(route.links.clone(), id);
        self.paths.push(Path {
            id,
            nodes: route.nodes,
            links: route.links,
            servers,
            server_node_pos,
            total_prop_delay: route.delay,
            traverses_cloud,
        });
        id
    }
}

/// Enumerates admissible chain paths for every connected ordered pair of
/// edge nodes and synchronization candidates for every connected ordered
/// pair of server-hosting nodes.
pub fn build_path_catalog<S: Scalar>(
    model: &NetworkModel<S>,
    config: CatalogConfig,
) -> Result<PathCatalog<S>, TopologyError> {
    let graph = Graph::new(model);
    let mut builder = CatalogBuilder { model, paths: Vec::new(), by_links: HashMap::new() };
    let edge_only = |n: NodeId| !model.nodes[n.0].is_cloud;
    let any = |_: NodeId| true;

    let mut sfc_index = BTreeMap::new();
    let edge: Vec<NodeId> = model.edge_nodes().collect();
    for &src in &edge {
        for &dst in &edge {
            if src == dst {
                continue;
            }
            let mut routes = graph.k_shortest(src, dst, config.k_edge, &edge_only);
            if config.include_cloud_path {
                if let Some(r) = graph.via_cloud(src, dst) {
                    routes.push(r);
                }
            }
            if routes.is_empty() {
                // reported by `sfc_paths` when a chain asks for the pair
                continue;
            }
            routes.sort();
            let ids = routes.into_iter().map(|r| builder.intern(r)).collect();
            sfc_index.insert((src, dst), ids);
        }
    }

    let mut sync_index = BTreeMap::new();
    let hosts: Vec<NodeId> = model.nodes.iter().map(|n| n.id).filter(|n| !model.servers_at(*n).is_empty()).collect();
    for &n in &hosts {
        for &m in &hosts {
            if n == m {
                continue;
            }
            let routes = graph.k_shortest(n, m, config.k_sync.max(1), &any);
            if !routes.is_empty() {
                let ids = routes.into_iter().map(|r| builder.intern(r)).collect();
                sync_index.insert((n, m), ids);
            }
        }
    }

    Ok(PathCatalog { paths: builder.paths, sfc_index, sync_index, config: Some(config) })
}
