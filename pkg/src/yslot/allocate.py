"""Integer slot allocation per path model and pattern.

Pipeline per group, in pattern placement order:

1. Candidate budget structures: the plain serialized budget, plus the two
   overlap orientations when a feeder's first-hop burst and the terminal
   node's own burst do not interfere (the feeder hops can share the
   terminal's slots, or vice versa).
2. Relaxed optimum per structure (adjunct-variable solve) - the TUB side.
3. Integer optimum per structure by greedy marginal-gain allocation, then
   the early-window step: slots of unblocked downstream transmitters are
   hidden inside the window left by previously placed groups, or, when the
   window exceeds what can be hidden, the group splits into a window part
   and a post-window part.
4. The best structure by integer product wins; TUB is the same structure's
   relaxed product, so TUB >= COM holds by relaxed feasibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .pathmodel import (PathModel, PatternSpec, enumerate_path_models,
                        patterns_for)
from .relax import (GroupChain, Origin, RelaxedSolution, StructuredRelax, Use,
                    budget_terms, solve_plain_structure, solve_rider_feeders,
                    solve_rider_terminal)
from .timeline import GroupPlan, PlacedBurst, place_plans
from .topology import ConflictSet, Topology, derive_conflicts

TxLink = tuple[int, int]
EntryKey = tuple[int, int, int]  # (origin node, packet k, link)


@lru_cache(maxsize=1 << 16)
def _log1m_pow(q: float, v: int) -> float:
    """log(1 - q^v); -inf at v = 0."""
    if v <= 0:
        return -math.inf
    return math.log1p(-(q ** v))


def _gain(q: float, v: int) -> float:
    """Marginal log-product gain of the (v+1)-th slot; +inf for the first."""
    if v == 0:
        return math.inf
    return _log1m_pow(q, v + 1) - _log1m_pow(q, v)


@dataclass(frozen=True)
class Entry:
    node: int
    k: int
    link: int
    q: float

    @property
    def key(self) -> EntryKey:
        return (self.node, self.k, self.link)

    @property
    def use_key(self) -> TxLink:
        return (self.node, self.link)


@dataclass(frozen=True)
class Structure:
    """One serialized-budget layout for a group (plain or overlap orientation)."""

    kind: str                  # plain | rider-terminal | rider-feeders
    label: str                 # plain | case1 | case2 | caseA | caseB
    uses: tuple[Use, ...]      # budget uses, chain order
    riders: tuple[Use, ...]    # free-riding uses (share host slots)
    hosts: tuple[TxLink, ...]  # use keys whose slots host the riders

    def entries(self) -> list[Entry]:
        return [Entry(u.node, k, u.link, u.q)
                for u in self.uses for k in range(1, u.weight + 1)]

    def rider_entries(self) -> list[Entry]:
        return [Entry(u.node, k, u.link, u.q)
                for u in self.riders for k in range(1, u.weight + 1)]

    def use_keys(self) -> set[TxLink]:
        return {(u.node, u.link) for u in self.uses}


def build_group_chain(model: PathModel, label: str, budget: float) -> GroupChain:
    topo = model.topology
    origins = []
    for node in model.group(label):
        route = tuple((lid, topo.links[lid].loss) for lid in model.route(node))
        origins.append(Origin(node, topo.rates[node], route))
    return GroupChain(label=label, origins=tuple(origins), budget=float(budget))


def candidate_structures(model: PathModel, chain: GroupChain,
                         conflicts: ConflictSet) -> list[Structure]:
    """Plain budget always; overlap orientations when feeders qualify.

    A feeder is an origin whose first-hop link carries no other packets and
    whose first-hop transmission does not conflict with the terminal node's
    own transmission, so the two bursts may share slots.
    """
    all_uses = tuple(Use(o.node, link, q, o.rate)
                     for o in chain.origins for link, q in o.route)
    plain = Structure("plain", "plain", all_uses, (), ())

    terminal = chain.origins[-1]
    if len(terminal.route) != 1 or len(chain.origins) == 1:
        return [plain]
    gw_link, gw_q = terminal.route[0]
    term_tx: TxLink = (terminal.node, gw_link)
    mult = dict(budget_terms(chain))

    feeders = []
    for o in chain.origins[:-1]:
        fh_link, fh_q = o.route[0]
        if mult[fh_link] != o.rate:
            continue
        if conflicts.conflict((o.node, fh_link), term_tx):
            continue
        feeders.append(Use(o.node, fh_link, fh_q, o.rate))
    if not feeders:
        return [plain]

    term_use = Use(terminal.node, gw_link, gw_q, terminal.rate)
    feeder_keys = tuple((f.node, f.link) for f in feeders)
    single = len(feeders) == 1
    rider_feed = Structure(
        "rider-feeders", "case1" if single else "caseB",
        tuple(u for u in all_uses if (u.node, u.link) not in feeder_keys),
        tuple(feeders), (term_tx,))
    rider_term = Structure(
        "rider-terminal", "case2" if single else "caseA",
        tuple(u for u in all_uses if (u.node, u.link) != term_tx),
        (term_use,), feeder_keys)
    return [plain, rider_feed, rider_term]


def predicted_case(chain: GroupChain, structures: list[Structure]) -> str | None:
    """Predicted overlap winner by the loss-rate rule: favor the side that
    frees budget share for the lossier link (single-feeder chains only)."""
    riders = [s for s in structures if s.kind == "rider-feeders"]
    if not riders or len(riders[0].riders) != 1:
        return None
    feeder = riders[0].riders[0]
    gw_q = chain.origins[-1].route[0][1]
    return "case1" if gw_q >= feeder.q else "case2"


def _relax_structure(st: Structure, budget: float) -> StructuredRelax:
    uses = list(st.uses)
    if st.kind == "plain":
        return solve_plain_structure(uses, budget)
    if st.kind == "rider-terminal":
        feeders = [u for u in uses if (u.node, u.link) in st.hosts]
        return solve_rider_terminal(uses, feeders, st.riders[0], budget)
    terminal = next(u for u in uses if (u.node, u.link) == st.hosts[0])
    return solve_rider_feeders(uses, terminal, list(st.riders), budget)


def _greedy_int(st: Structure, budget: int,
                ) -> tuple[dict[EntryKey, int], dict[EntryKey, int]]:
    """Greedy marginal-gain integer allocation; exact for separable chains.

    Every host slot carries one rider slot, so a host entry's marginal adds
    the best rider marginal; ties go to the earliest entry (upstream first).
    """
    entries = st.entries()
    riders = st.rider_entries()
    hosts = set(st.hosts)
    vals = {e.key: 0 for e in entries}
    rvals = {r.key: 0 for r in riders}

    def best_rider() -> tuple[float, Entry] | None:
        best = None
        for r in riders:
            g = _gain(r.q, rvals[r.key])
            if best is None or g > best[0]:
                best = (g, r)
        return best

    for _ in range(max(0, budget)):
        rb = best_rider() if riders else None
        chosen, chosen_gain = None, -math.inf
        for e in entries:
            g = _gain(e.q, vals[e.key])
            if rb is not None and e.use_key in hosts:
                g = g + rb[0]
            if g > chosen_gain:
                chosen, chosen_gain = e, g
        if chosen is None:
            break
        vals[chosen.key] += 1
        if rb is not None and chosen.use_key in hosts:
            rvals[rb[1].key] += 1
    return vals, rvals


def _restrict(st: Structure, keep: set[TxLink]) -> Structure:
    return Structure(st.kind, st.label,
                     tuple(u for u in st.uses if (u.node, u.link) in keep),
                     st.riders, st.hosts)


def _route_links(chain: GroupChain) -> list[int]:
    """Chain links ordered upstream first (deepest from the gateway)."""
    depth: dict[int, int] = {}
    for o in chain.origins:
        for idx, (link, _) in enumerate(o.route):
            depth[link] = max(depth.get(link, 0), len(o.route) - idx)
    return sorted(depth, key=lambda l: (-depth[l], l))


def _transmitter_map(model: PathModel, chain: GroupChain) -> dict[TxLink, TxLink]:
    """(origin, link) -> (tx node, link) for every route step of the group."""
    out = {}
    for o in chain.origins:
        for tx, link in model.transmitters(o.node):
            out[(o.node, link)] = (tx, link)
    return out


def early_window(placed: list[tuple[int, TxLink]],
                 group_txs, conflicts: ConflictSet) -> int:
    """First slot from which nothing already placed conflicts with any of
    the group's transmitters; 0 when there is no conflicting burst."""
    a = 0
    for slot, txlink in placed:
        if slot + 1 <= a:
            continue
        if any(conflicts.conflict(txlink, g) for g in group_txs):
            a = slot + 1
    return a


def _real_window(placed: list[tuple[float, float, TxLink]],
                 group_txs, conflicts: ConflictSet) -> float:
    a = 0.0
    for start, end, txlink in placed:
        if end <= a:
            continue
        if any(conflicts.conflict(txlink, g) for g in group_txs):
            a = end
    return a


def _blocked_uses(chain: GroupChain, model: PathModel, window, placed,
                  conflicts: ConflictSet, real: bool) -> set[TxLink]:
    """Use keys whose transmitter conflicts with anything inside the window."""
    txmap = _transmitter_map(model, chain)
    blocked: set[TxLink] = set()
    for use_key, txlink in txmap.items():
        for item in placed:
            if real:
                start, _end, other = item
                inside = start < window
            else:
                slot, other = item
                inside = slot < window
            if inside and conflicts.conflict(other, txlink):
                blocked.add(use_key)
                break
    return blocked


def _hideable_uses(chain: GroupChain, st: Structure,
                   blocked: set[TxLink]) -> list[TxLink]:
    """Budget uses that may move into the window, in fill order (upstream
    link first, downstream origin first within a link).  A hop qualifies
    only if every upstream hop of the same packet qualifies, so the packet
    can reach its transmitter inside the window."""
    use_keys = st.use_keys()
    hosts = set(st.hosts)
    order = {l: i for i, l in enumerate(_route_links(chain))}
    pos = {o.node: i for i, o in enumerate(chain.origins)}
    out = []
    for o in chain.origins:
        for link, _ in o.route:
            key = (o.node, link)
            if key in blocked or key not in use_keys or key in hosts:
                break
            out.append(key)
    out.sort(key=lambda key: (order[key[1]], -pos[key[0]], key[0]))
    return out


def _classify_case(hide_order: list[TxLink], capacities: dict[TxLink, float],
                   window) -> str:
    """Window-regime label (c1-c5) from the hide capacities in fill order."""
    if window <= 0:
        return ""
    caps = [capacities.get(k, 0) for k in hide_order]
    if caps and window <= caps[0]:
        return "c1"
    if len(caps) > 1 and window <= caps[1]:
        return "c2"
    total = 0.0
    for i, c in enumerate(caps):
        total += c
        if window <= total:
            return "c3" if i <= 1 else "c4"
    return "c5"


@dataclass
class GroupInteger:
    structure: Structure
    serialized: dict[EntryKey, int]
    early: dict[EntryKey, int]
    rider: dict[EntryKey, int]
    product: float
    regime: str   # none | hide | split
    label: str

    def totals(self) -> dict[EntryKey, int]:
        out: dict[EntryKey, int] = {}
        for src in (self.serialized, self.early, self.rider):
            for key, v in src.items():
                out[key] = out.get(key, 0) + v
        return out


def _chain_product(chain: GroupChain, totals: dict[EntryKey, int]) -> float:
    log_m = 0.0
    for o in chain.origins:
        for k in range(1, o.rate + 1):
            for link, q in o.route:
                log_m += _log1m_pow(q, totals.get((o.node, k, link), 0))
    return math.exp(log_m) if log_m > -math.inf else 0.0


def _fill_window(chain: GroupChain, tentative: dict[EntryKey, int],
                 hide_order: list[TxLink], window: int) -> dict[EntryKey, int]:
    """Hide up to `window` tentative slots following the fill order; a hop
    enters the window only if its packet's upstream hops already did."""
    rates = {o.node: o.rate for o in chain.origins}
    routes = {o.node: [link for link, _ in o.route] for o in chain.origins}
    early: dict[EntryKey, int] = {}
    remaining = window
    for node, link in hide_order:
        upstream = routes[node][:routes[node].index(link)]
        for k in range(1, rates[node] + 1):
            if remaining <= 0:
                break
            if any(early.get((node, k, up), 0) == 0 for up in upstream):
                continue
            take = min(tentative.get((node, k, link), 0), remaining)
            if take > 0:
                early[(node, k, link)] = take
                remaining -= take
    return early


def _drop_uncausal(chain: GroupChain, early: dict[EntryKey, int],
                   hide_set: set[TxLink]) -> dict[EntryKey, int]:
    """Drop window slots whose packet cannot be present there (an upstream
    hop got none).  Only starved budgets ever trigger this."""
    out: dict[EntryKey, int] = {}
    for o in chain.origins:
        links = []
        for link, _ in o.route:
            if (o.node, link) not in hide_set:
                break
            links.append(link)
        for k in range(1, o.rate + 1):
            for link in links:
                v = early.get((o.node, k, link), 0)
                if v <= 0:
                    break
                out[(o.node, k, link)] = v
    return out


def assign_early_slots(chain: GroupChain, st: Structure,
                       tentative: dict[EntryKey, int], rider: dict[EntryKey, int],
                       window: int, hide_order: list[TxLink],
                       budget: int) -> GroupInteger:
    """Early-window step.  Hiding into the window preserves the budget-T
    optimum when the hideable slots cover the window (cases c1-c4);
    otherwise the window part and post-window part are solved separately
    with budgets `window` and `budget - window` (case c5).  Both
    regimes are optimal for the constraint set (serialized sum <= budget -
    window, early sum <= window, early only on hideable hops)."""
    use_caps: dict[TxLink, float] = {key: 0 for key in hide_order}
    for (node, k, link), v in tentative.items():
        if (node, link) in use_caps:
            use_caps[(node, link)] += v

    gi: GroupInteger | None = None
    if window <= 0:
        gi = GroupInteger(st, dict(tentative), {}, dict(rider), 0.0, "none", "")
    elif sum(use_caps.values()) >= window:
        early = _fill_window(chain, tentative, hide_order, window)
        if sum(early.values()) == window:
            serialized = {k: v - early.get(k, 0) for k, v in tentative.items()}
            gi = GroupInteger(st, serialized, early, dict(rider), 0.0, "hide",
                              _classify_case(hide_order, use_caps, window))

    if gi is None:
        hide_set = set(hide_order)
        st_non = _restrict(st, st.use_keys() - hide_set)
        vals_non, rider_non = _greedy_int(st_non, budget - window)
        st_hide = Structure("plain", "plain",
                            tuple(u for u in st.uses if (u.node, u.link) in hide_set),
                            (), ())
        vals_hide, _ = _greedy_int(st_hide, window)
        early = _drop_uncausal(chain, vals_hide, hide_set)
        gi = GroupInteger(st, vals_non, early, rider_non, 0.0, "split", "c5")

    gi.product = _chain_product(chain, gi.totals())
    return gi


def round_allocation(relaxed: RelaxedSolution | GroupChain, budget: int,
                     chain: GroupChain | None = None) -> dict[EntryKey, int]:
    """Integer slot map for one chain, summing exactly to the budget and
    maximizing the delivery product.  Greedy marginal-gain allocation is
    provably optimal for the separable concave objective and lands within
    one slot of the relaxed solution on every entry."""
    if isinstance(relaxed, GroupChain):
        chain = relaxed
    if chain is None:
        raise ValueError("round_allocation needs the GroupChain")
    uses = tuple(Use(o.node, link, q, o.rate)
                 for o in chain.origins for link, q in o.route)
    st = Structure("plain", "plain", uses, (), ())
    vals, _ = _greedy_int(st, budget)
    return vals


# ---------------------------------------------------------------------------
# pattern orchestration


@dataclass
class SlotAllocation:
    model: PathModel
    pattern: PatternSpec
    entries: dict[tuple[int, int, int, bool], int]  # (node, k, link, early) -> count
    per_node: dict[int, float]
    com_product: float
    feasible: bool


@dataclass
class PatternSolution:
    model: PathModel
    pattern: PatternSpec
    cycle_slots: int
    tub_product: float
    com_product: float
    allocation: SlotAllocation
    tub_entries: dict[str, float]
    com_entries: dict[str, int]
    windows: dict[str, int]
    windows_real: dict[str, float]
    case_labels: dict[str, str]
    predicted: dict[str, str]
    plans: list[GroupPlan]
    feasible: bool

    @property
    def window(self) -> int:
        return max(self.windows.values(), default=0)

    @property
    def case_label(self) -> str:
        parts = [f"{g}:{lab}" for g, lab in sorted(self.case_labels.items()) if lab]
        return ";".join(parts) if parts else "-"


def entry_name(node: int, link: int, k: int, rate: int, early: bool) -> str:
    mark = "s'" if early else "s"
    if rate > 1:
        return f"{mark}[{node},{link},{k}]"
    return f"{mark}[{node},{link}]"


def _serial_order(chain: GroupChain, st: Structure) -> list[EntryKey]:
    """Burst order: upstream links first, upstream origins first within a
    link; a rider-hosting terminal burst moves to the front so its riders
    (the feeders' first hops) precede the feeders' later hops."""
    order = {l: i for i, l in enumerate(_route_links(chain))}
    pos = {o.node: i for i, o in enumerate(chain.origins)}
    keys = [(u.node, k, u.link) for u in st.uses for k in range(1, u.weight + 1)]
    keys.sort(key=lambda e: (order[e[2]], pos[e[0]], e[1]))
    if st.kind == "rider-feeders":
        term = [e for e in keys if (e[0], e[2]) in st.hosts]
        keys = term + [e for e in keys if (e[0], e[2]) not in st.hosts]
    return keys


def _rider_assignment(st: Structure, gi: GroupInteger,
                      serial_keys: list[EntryKey],
                      ) -> dict[EntryKey, list[tuple[int, int, int, int]]]:
    """Distribute rider counts over host burst slots in stream order."""
    queue = [[key, gi.rider[key]] for key in
             sorted(gi.rider, key=lambda e: (e[0], e[1], e[2])) if gi.rider[key] > 0]
    out: dict[EntryKey, list[tuple[int, int, int, int]]] = {}
    qi = 0
    for key in serial_keys:
        if (key[0], key[2]) not in st.hosts:
            continue
        room = gi.serialized.get(key, 0)
        while room > 0 and qi < len(queue):
            (rnode, rk, rlink), remaining = queue[qi]
            take = min(room, remaining)
            out.setdefault(key, []).append((rnode, rk, rlink, take))
            room -= take
            queue[qi][1] -= take
            if queue[qi][1] == 0:
                qi += 1
    return out


def _build_plan(chain: GroupChain, st: Structure, gi: GroupInteger,
                window: int, hide_order: list[TxLink]) -> GroupPlan:
    serial_keys = _serial_order(chain, st)
    riders = _rider_assignment(st, gi, serial_keys)
    serialized = tuple(
        PlacedBurst(n, k, l, gi.serialized[(n, k, l)], False,
                    tuple(riders.get((n, k, l), ())))
        for n, k, l in serial_keys if gi.serialized.get((n, k, l), 0) > 0)
    rates = {o.node: o.rate for o in chain.origins}
    early = tuple(PlacedBurst(n, k, l, gi.early[(n, k, l)], True, ())
                  for n, l in hide_order for k in range(1, rates[n] + 1)
                  if gi.early.get((n, k, l), 0) > 0)
    return GroupPlan(chain.label, window, early, serialized)


@dataclass
class _RealGroup:
    serialized: dict[TxLink, float]   # per-use totals (rate-weighted)
    early: dict[TxLink, float]
    rider: dict[TxLink, float]
    intervals: list[tuple[float, float, TxLink]]


def _real_stage(chain: GroupChain, st: Structure, relaxed: StructuredRelax,
                window: float, hide_order: list[TxLink], budget: float,
                model: PathModel) -> _RealGroup:
    """Real-valued mirror of the early-window step, for the TUB slot table."""
    rates = {o.node: o.rate for o in chain.origins}
    use_keys = [(u.node, u.link) for u in st.uses]
    rider_keys = [(u.node, u.link) for u in st.riders]
    totals = {k: relaxed.values[k] * rates[k[0]] for k in use_keys}
    rider_totals = {k: relaxed.values[k] * rates[k[0]] for k in rider_keys}

    early: dict[TxLink, float] = {}
    if window > 1e-12:
        caps = {k: totals[k] for k in hide_order}
        if sum(caps.values()) + 1e-9 >= window:
            remaining = window
            for key in hide_order:
                take = min(caps[key], remaining)
                if take > 1e-12:
                    early[key] = take
                    remaining -= take
                if remaining <= 1e-12:
                    break
        else:
            # window exceeds the hideable mass: split solve (case c5)
            hide_set = set(hide_order)
            non_hide = {k for k in use_keys if k not in hide_set}
            if budget - window > 1e-9 and non_hide:
                sub = _relax_structure(_restrict(st, non_hide), budget - window)
                totals = {k: sub.values[k] * rates[k[0]] for k in non_hide}
                rider_totals = {k: sub.values[k] * rates[k[0]] for k in rider_keys}
            else:
                totals = {k: 0.0 for k in non_hide}
                rider_totals = {k: 0.0 for k in rider_keys}
            hide_uses = [u for u in st.uses if (u.node, u.link) in hide_set]
            if hide_uses:
                sub_h = solve_plain_structure(hide_uses, window)
                for u in hide_uses:
                    key = (u.node, u.link)
                    totals[key] = 0.0
                    early[key] = sub_h.values[key] * u.weight

    serialized = {k: max(0.0, totals.get(k, 0.0) - early.get(k, 0.0))
                  for k in use_keys}

    txmap = _transmitter_map(model, chain)
    intervals: list[tuple[float, float, TxLink]] = []
    cursor = 0.0
    for key in hide_order:
        e = early.get(key, 0.0)
        if e > 1e-12:
            intervals.append((cursor, cursor + e, txmap[key]))
            cursor += e
    order = {l: i for i, l in enumerate(_route_links(chain))}
    pos = {o.node: i for i, o in enumerate(chain.origins)}
    serial_keys = sorted(use_keys, key=lambda kk: (order[kk[1]], pos[kk[0]]))
    if st.kind == "rider-feeders":
        serial_keys = ([k for k in serial_keys if k in st.hosts]
                       + [k for k in serial_keys if k not in st.hosts])
    cursor = window
    host_spans: list[tuple[float, float]] = []
    for key in serial_keys:
        length = serialized.get(key, 0.0)
        if length > 1e-12:
            intervals.append((cursor, cursor + length, txmap[key]))
            if key in st.hosts:
                host_spans.append((cursor, cursor + length))
            cursor += length
    if host_spans:
        lo = min(s[0] for s in host_spans)
        hi = max(s[1] for s in host_spans)
        for rk in rider_keys:
            intervals.append((lo, hi, txmap[rk]))

    return _RealGroup(serialized, early, rider_totals, intervals)


def com_probability(alloc: SlotAllocation, model: PathModel,
                    ) -> tuple[dict[int, float], float]:
    """Per-node delivery probability and the overall product.

    A packet's M multiplies (1 - q_j^{total slots}) over its route links;
    zero slots on any route link means it cannot be delivered.
    """
    topo = model.topology
    totals: dict[EntryKey, int] = {}
    for (node, k, link, _early), v in alloc.entries.items():
        key = (node, k, link)
        totals[key] = totals.get(key, 0) + v
    per_node: dict[int, float] = {}
    for node in topo.nodes:
        log_m = 0.0
        for k in range(1, topo.rates[node] + 1):
            for link in model.route(node):
                q = topo.links[link].loss
                log_m += _log1m_pow(q, totals.get((node, k, link), 0))
        per_node[node] = math.exp(log_m) if log_m > -math.inf else 0.0
    product = math.prod(per_node.values())
    return per_node, product


def _resolve_pattern(model: PathModel, pattern) -> PatternSpec:
    specs = patterns_for(model)
    if pattern is None:
        return specs[0]
    if isinstance(pattern, PatternSpec):
        return pattern
    matches = [s for s in specs if s.pattern_id == pattern]
    if not matches:
        raise ValueError(f"model {model.name} has no pattern {pattern}")
    return matches[0]


def solve_pattern(model: PathModel, pattern: PatternSpec | int | None = None,
                  cycle_slots: int | None = None) -> PatternSolution:
    topo = model.topology
    T = int(cycle_slots if cycle_slots is not None else topo.cycle_slots)
    spec = _resolve_pattern(model, pattern)
    conflicts = derive_conflicts(topo)
    routes = dict(model.routes)
    rates = topo.rates

    placed_int: list[tuple[int, TxLink]] = []
    placed_real: list[tuple[float, float, TxLink]] = []
    plans: list[GroupPlan] = []
    tub = 1.0
    windows: dict[str, int] = {}
    windows_real: dict[str, float] = {}
    case_labels: dict[str, str] = {}
    predicted: dict[str, str] = {}
    tub_entries: dict[str, float] = {}
    entries: dict[tuple[int, int, int, bool], int] = {}

    for label in spec.placement:
        chain = build_group_chain(model, label, T)
        structures = candidate_structures(model, chain, conflicts)
        group_txs = model.group_transmissions(label)
        a_int = early_window(placed_int, group_txs, conflicts)
        a_real = _real_window(placed_real, group_txs, conflicts)
        windows[label], windows_real[label] = a_int, a_real
        blocked = _blocked_uses(chain, model, a_int, placed_int, conflicts,
                                real=False)

        best: tuple[Structure, StructuredRelax, GroupInteger,
                    list[TxLink]] | None = None
        for st in structures:
            relaxed = _relax_structure(st, float(T))
            hide_order = _hideable_uses(chain, st, blocked)
            tentative, rider = _greedy_int(st, T)
            gi = assign_early_slots(chain, st, tentative, rider, a_int,
                                    hide_order, T)
            if best is None or gi.product > best[2].product:
                best = (st, relaxed, gi, hide_order)
        st, relaxed, gi, hide_order = best
        pred = predicted_case(chain, structures)
        if pred:
            predicted[label] = pred
        lab = st.label if st.label != "plain" else ""
        if gi.label:
            lab = f"{lab}+{gi.label}" if lab else gi.label
        case_labels[label] = lab
        tub *= relaxed.product

        blocked_r = _blocked_uses(chain, model, a_real, placed_real, conflicts,
                                  real=True)
        hide_order_r = _hideable_uses(chain, st, blocked_r)
        rg = _real_stage(chain, st, relaxed, a_real, hide_order_r, float(T), model)
        placed_real.extend(rg.intervals)
        for o in chain.origins:
            for link, _q in o.route:
                key = (o.node, link)
                s_pp = rg.serialized.get(key, 0.0) / o.rate
                e_pp = (rg.early.get(key, 0.0) + rg.rider.get(key, 0.0)) / o.rate
                for k in range(1, o.rate + 1):
                    tub_entries[entry_name(o.node, link, k, o.rate, False)] = s_pp
                    tub_entries[entry_name(o.node, link, k, o.rate, True)] = e_pp

        plan = _build_plan(chain, st, gi, a_int, hide_order)
        plans.append(plan)
        for unit in place_plans(topo, routes, [plan]):
            placed_int.append((unit.slot, (unit.tx, unit.link)))
        for key, v in gi.serialized.items():
            if v > 0:
                entries[(key[0], key[1], key[2], False)] = v
        for src in (gi.early, gi.rider):
            for key, v in src.items():
                if v > 0:
                    k4 = (key[0], key[1], key[2], True)
                    entries[k4] = entries.get(k4, 0) + v

    alloc = SlotAllocation(model, spec, entries, {}, 0.0, True)
    per_node, com = com_probability(alloc, model)
    alloc.per_node = per_node
    alloc.com_product = com
    alloc.feasible = com > 0.0

    com_entries: dict[str, int] = {}
    for node in topo.nodes:
        for link in model.route(node):
            for k in range(1, rates[node] + 1):
                name_s = entry_name(node, link, k, rates[node], False)
                name_e = entry_name(node, link, k, rates[node], True)
                com_entries[name_s] = entries.get((node, k, link, False), 0)
                com_entries[name_e] = entries.get((node, k, link, True), 0)
                tub_entries.setdefault(name_s, 0.0)
                tub_entries.setdefault(name_e, 0.0)

    return PatternSolution(
        model=model, pattern=spec, cycle_slots=T, tub_product=tub,
        com_product=com, allocation=alloc, tub_entries=tub_entries,
        com_entries=com_entries, windows=windows, windows_real=windows_real,
        case_labels=case_labels, predicted=predicted, plans=plans,
        feasible=alloc.feasible)


def solution_timeline(solution: PatternSolution):
    """Materialize a solved pattern into its verified slot-by-slot timeline."""
    from .timeline import build_timeline
    topo = solution.model.topology
    return build_timeline(topo, dict(solution.model.routes), solution.plans,
                          derive_conflicts(topo), solution.cycle_slots)


def optimize(topology: Topology, cycle_slots: int | None = None,
             no_sep_branch: int | None = None) -> list[PatternSolution]:
    """Solve every (model, pattern); rank by COM desc, ties by TUB then name."""
    solutions = []
    for model in enumerate_path_models(topology, no_sep_branch):
        for spec in patterns_for(model):
            solutions.append(solve_pattern(model, spec, cycle_slots))
    solutions.sort(key=lambda s: (-s.com_product, -s.tub_product, s.model.name,
                                  s.model.no_sep_branch, s.pattern.pattern_id))
    return solutions
