"""Walker-delta constellation geometry, link budgets, and route schedules.

Circular orbits on evenly spaced planes; positions are computed in an
Earth-fixed frame (spherical Earth, no perturbations). Inter-satellite links
follow the +grid pattern (in-plane fore/aft plus the same slot in adjacent
planes); ground-satellite links exist whenever elevation clears the mast
angle. Link capacity comes from a Shannon capacity with square-law path loss;
its parameters are calibration knobs pinned to reproduce Mbit/s-scale links,
not an RF budget claim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

R_EARTH_KM = 6371.0
MU_KM3_S2 = 3.986004418e5
OMEGA_EARTH_RAD_S = 7.2921159e-5
C_LIGHT_KM_S = 299792.458


class DomainError(ValueError):
    pass


class NoRoute(RuntimeError):
    pass


@dataclass
class ConstellationConfig:
    planes: int = 32
    sats_per_plane: int = 50
    altitude_km: float = 1150.0
    inclination_deg: float = 53.0
    phasing_offset: float = 0.5  # fraction of in-plane spacing between planes

    @property
    def total_sats(self) -> int:
        return self.planes * self.sats_per_plane

    @property
    def radius_km(self) -> float:
        return R_EARTH_KM + self.altitude_km

    @property
    def mean_motion_rad_s(self) -> float:
        return math.sqrt(MU_KM3_S2 / self.radius_km**3)

    @property
    def orbital_period_s(self) -> float:
        return 2.0 * math.pi / self.mean_motion_rad_s


@dataclass
class GroundStation:
    latitude_deg: float
    longitude_deg: float
    min_elevation_deg: float = 25.0
    name: str = ""

    def __post_init__(self):
        if not -90.0 <= self.latitude_deg <= 90.0:
            raise ValueError("latitude out of range")
        if not -180.0 <= self.longitude_deg <= 180.0:
            raise ValueError("longitude out of range")

    def ecef_km(self) -> np.ndarray:
        lat = math.radians(self.latitude_deg)
        lon = math.radians(self.longitude_deg)
        return R_EARTH_KM * np.array(
            [math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)]
        )


@dataclass
class LinkBudget:
    bandwidth_hz: float = 250e6
    snr_ref: float = 0.09
    ref_distance_km: float = 1150.0


def link_capacity_bps(distance_km: float, budget: LinkBudget) -> float:
    """Shannon capacity with square-law path loss against a reference SNR."""
    if distance_km <= 0:
        raise DomainError(f"distance must be positive, got {distance_km}")
    snr = budget.snr_ref * (budget.ref_distance_km / distance_km) ** 2
    return budget.bandwidth_hz * math.log2(1.0 + snr)


def sat_position_km(cfg: ConstellationConfig, plane: int, slot: int, t_s: float) -> np.ndarray:
    """Earth-fixed position of one satellite at time t."""
    if not (0 <= plane < cfg.planes and 0 <= slot < cfg.sats_per_plane):
        raise IndexError("plane/slot out of range")
    a = cfg.radius_km
    inc = math.radians(cfg.inclination_deg)
    raan = 2.0 * math.pi * plane / cfg.planes
    u = 2.0 * math.pi * (slot + cfg.phasing_offset * plane) / cfg.sats_per_plane
    u += cfg.mean_motion_rad_s * t_s
    x_orb, y_orb = a * math.cos(u), a * math.sin(u)
    x1, y1, z1 = x_orb, y_orb * math.cos(inc), y_orb * math.sin(inc)
    cr, sr = math.cos(raan), math.sin(raan)
    x, y, z = x1 * cr - y1 * sr, x1 * sr + y1 * cr, z1
    theta = OMEGA_EARTH_RAD_S * t_s
    ct, st = math.cos(theta), math.sin(theta)
    return np.array([x * ct + y * st, -x * st + y * ct, z])


def all_positions_km(cfg: ConstellationConfig, t_s: float) -> np.ndarray:
    """(total_sats, 3) Earth-fixed positions; row index = plane*S + slot."""
    P, S = cfg.planes, cfg.sats_per_plane
    plane = np.repeat(np.arange(P), S)
    slot = np.tile(np.arange(S), P)
    a = cfg.radius_km
    inc = math.radians(cfg.inclination_deg)
    raan = 2.0 * np.pi * plane / P
    u = 2.0 * np.pi * (slot + cfg.phasing_offset * plane) / S + cfg.mean_motion_rad_s * t_s
    x_orb, y_orb = a * np.cos(u), a * np.sin(u)
    x1, y1, z1 = x_orb, y_orb * math.cos(inc), y_orb * math.sin(inc)
    cr, sr = np.cos(raan), np.sin(raan)
    x, y, z = x1 * cr - y1 * sr, x1 * sr + y1 * cr, z1
    theta = OMEGA_EARTH_RAD_S * t_s
    ct, st = math.cos(theta), math.sin(theta)
    return np.stack([x * ct + y * st, -x * st + y * ct, z], axis=1)


def elevation_deg(gs_ecef: np.ndarray, sat_ecef: np.ndarray) -> float:
    """Elevation of a satellite above the station's local horizon."""
    up = gs_ecef / np.linalg.norm(gs_ecef)
    rel = sat_ecef - gs_ecef
    rel = rel / np.linalg.norm(rel)
    s = float(np.dot(up, rel))
    return math.degrees(math.asin(max(-1.0, min(1.0, s))))


def gsl_visible(gs: GroundStation, sat_ecef: np.ndarray) -> Tuple[bool, float]:
    elev = elevation_deg(gs.ecef_km(), sat_ecef)
    return elev >= gs.min_elevation_deg, elev


@dataclass
class TopologySnapshot:
    time_s: float
    node_ids: List[int]
    positions: Dict[int, np.ndarray]
    edges: List[Tuple[int, int, float, int, float]]  # u, v, km, prop_us, bps
    ground_ids: List[int]

    def adjacency(self) -> Dict[int, List[Tuple[int, int]]]:
        """node -> sorted [(neighbor, prop_delay_us)]."""
        adj: Dict[int, List[Tuple[int, int]]] = {n: [] for n in self.node_ids}
        for u, v, _km, prop_us, _bps in self.edges:
            adj[u].append((v, prop_us))
            adj[v].append((u, prop_us))
        for lst in adj.values():
            lst.sort()
        return adj


GROUND_ID_BASE = 1
SAT_ID_BASE = 1000


def sat_id(cfg: ConstellationConfig, plane: int, slot: int) -> int:
    return SAT_ID_BASE + plane * cfg.sats_per_plane + slot


def build_topology(
    cfg: ConstellationConfig,
    ground: Sequence[GroundStation],
    t_s: float,
    budget: LinkBudget | None = None,
) -> TopologySnapshot:
    budget = budget or LinkBudget()
    P, S = cfg.planes, cfg.sats_per_plane
    pos = all_positions_km(cfg, t_s)

    node_ids: List[int] = []
    positions: Dict[int, np.ndarray] = {}
    ground_ids: List[int] = []
    for gi, gs in enumerate(ground):
        nid = GROUND_ID_BASE + gi
        node_ids.append(nid)
        ground_ids.append(nid)
        positions[nid] = gs.ecef_km()
    for p in range(P):
        for s in range(S):
            nid = sat_id(cfg, p, s)
            node_ids.append(nid)
            positions[nid] = pos[p * S + s]

    edges: List[Tuple[int, int, float, int, float]] = []

    def add_edge(u: int, v: int, du: np.ndarray, dv: np.ndarray) -> None:
        km = float(np.linalg.norm(du - dv))
        prop_us = int(round(km / C_LIGHT_KM_S * 1e6))
        edges.append((u, v, km, prop_us, link_capacity_bps(km, budget)))

    # +grid ISLs: fore/aft in plane, same slot in the next plane (wrapping).
    for p in range(P):
        for s in range(S):
            u = sat_id(cfg, p, s)
            v_in = sat_id(cfg, p, (s + 1) % S)
            add_edge(u, v_in, pos[p * S + s], pos[p * S + (s + 1) % S])
            v_x = sat_id(cfg, (p + 1) % P, s)
            add_edge(u, v_x, pos[p * S + s], pos[((p + 1) % P) * S + s])

    # GSLs by visibility.
    for gi, gs in enumerate(ground):
        gid = GROUND_ID_BASE + gi
        g = positions[gid]
        up = g / np.linalg.norm(g)
        rel = pos - g
        dist = np.linalg.norm(rel, axis=1)
        sin_elev = (rel @ up) / dist
        min_sin = math.sin(math.radians(gs.min_elevation_deg))
        for idx in np.nonzero(sin_elev >= min_sin)[0]:
            p, s = divmod(int(idx), S)
            add_edge(gid, sat_id(cfg, p, s), g, pos[idx])

    return TopologySnapshot(t_s, node_ids, positions, edges, ground_ids)


def dijkstra(snapshot: TopologySnapshot, src: int, dst: int) -> List[int]:
    """Minimum propagation-delay path; ties broken toward smaller node ids."""
    if src == dst:
        return [src]
    adj = snapshot.adjacency()
    if src not in adj or dst not in adj:
        raise NoRoute(f"{src} or {dst} not in topology")
    dist: Dict[int, int] = {src: 0}
    pred: Dict[int, int] = {}
    done: set = set()
    heap: List[Tuple[int, int]] = [(0, src)]
    while heap:
        d, u = heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == dst:
            break
        for v, w in adj[u]:
            if v in done:
                continue
            nd = d + w
            old = dist.get(v)
            if old is None or nd < old or (nd == old and u < pred[v]):
                dist[v] = nd
                pred[v] = u
                heappush(heap, (nd, v))
    if dst not in done:
        raise NoRoute(f"no path {src} -> {dst}")
    path = [dst]
    while path[-1] != src:
        path.append(pred[path[-1]])
    path.reverse()
    return path


@dataclass
class RouteSchedule:
    """Dijkstra routes recomputed every dt; consecutive equal paths merged."""

    dt_s: float
    entries: List[Tuple[float, Optional[List[int]]]] = field(default_factory=list)

    def path_at(self, t_s: float) -> Optional[List[int]]:
        current: Optional[List[int]] = None
        for start, path in self.entries:
            if start > t_s:
                break
            current = path
        return current

    @property
    def handovers(self) -> int:
        return max(0, len(self.entries) - 1)


def route_schedule(
    cfg: ConstellationConfig,
    ground: Sequence[GroundStation],
    t_end_s: float,
    dt_s: float = 10.0,
    budget: LinkBudget | None = None,
    src_gi: int = 0,
    dst_gi: int = 1,
) -> Tuple[RouteSchedule, List[TopologySnapshot]]:
    budget = budget or LinkBudget()
    schedule = RouteSchedule(dt_s)
    snapshots: List[TopologySnapshot] = []
    src = GROUND_ID_BASE + src_gi
    dst = GROUND_ID_BASE + dst_gi
    t = 0.0
    prev: Optional[List[int]] = ["sentinel"]  # type: ignore[list-item]
    while t < t_end_s:
        snap = build_topology(cfg, ground, t, budget)
        snapshots.append(snap)
        try:
            path: Optional[List[int]] = dijkstra(snap, src, dst)
        except NoRoute:
            path = None
        if path != prev:
            schedule.entries.append((t, path))
            prev = path
        t += dt_s
    return schedule, snapshots


def export_route_trace(
    cfg: ConstellationConfig,
    ground: Sequence[GroundStation],
    schedule: RouteSchedule,
    snapshots: List[TopologySnapshot],
) -> dict:
    """Serialize a schedule to the JSON trace consumed by the simulator."""
    dt_us = int(schedule.dt_s * 1e6)
    used_nodes: set = set()
    used_links: set = set()
    for _, path in schedule.entries:
        if path:
            used_nodes.update(path)
            used_links.update(
                tuple(sorted(pair)) for pair in zip(path, path[1:])
            )

    edge_props: Dict[Tuple[int, int], Dict[int, Tuple[int, float]]] = {
        lk: {} for lk in used_links
    }
    for k, snap in enumerate(snapshots):
        t_us = int(k * dt_us)
        emap = {tuple(sorted((u, v))): (prop, bps) for u, v, _km, prop, bps in snap.edges}
        for lk in used_links:
            if lk in emap:
                edge_props[lk][t_us] = emap[lk]

    links = []
    for (a, b) in sorted(used_links):
        props = edge_props[(a, b)]
        up_points: List[Tuple[int, int]] = []
        prop_points: List[Tuple[int, int]] = []
        cap_points: List[Tuple[int, float]] = []
        for k in range(len(snapshots)):
            t_us = int(k * dt_us)
            path = schedule.path_at(k * schedule.dt_s)
            on_path = bool(path) and (a, b) in (
                tuple(sorted(pair)) for pair in zip(path, path[1:])
            )
            known = props.get(t_us)
            up = 1 if (on_path and known is not None) else 0
            if not up_points or up_points[-1][1] != up:
                up_points.append((t_us, up))
            if known is not None:
                prop, bps = known
                if not prop_points or prop_points[-1][1] != prop:
                    prop_points.append((t_us, prop))
                if not cap_points or cap_points[-1][1] != bps:
                    cap_points.append((t_us, bps))
        links.append(
            {
                "a": a,
                "b": b,
                "up_trace": up_points,
                "prop_delay_trace": prop_points,
                "capacity_trace": cap_points,
            }
        )

    intervals = [
        {"from_us": int(start * 1e6), "path": path}
        for start, path in schedule.entries
    ]
    return {
        "type": "route_trace",
        "dt_us": dt_us,
        "ground_ids": [GROUND_ID_BASE + i for i in range(len(ground))],
        "ground": [
            {"id": GROUND_ID_BASE + i, "lat": g.latitude_deg, "lon": g.longitude_deg,
             "name": g.name or f"gs{i}"}
            for i, g in enumerate(ground)
        ],
        "nodes": sorted(used_nodes),
        "intervals": intervals,
        "duration_us": int(len(snapshots) * dt_us),
        "links": links,
    }


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dphi = p2 - p1
    dlmb = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlmb / 2) ** 2
    return 2.0 * R_EARTH_KM * math.asin(math.sqrt(a))
