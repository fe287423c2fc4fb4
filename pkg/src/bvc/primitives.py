"""Distributed building blocks: leader election with BFS tree and
bipartition, pipelined tree aggregation, and parallel alternating-path BFS.

All of these are node programs for the round-synchronous engine. The leader
election floods the minimum id together with hop distances and detects
termination with an echo whose certificates are keyed to the exact
(leader, distance, parent) a node currently holds: a certificate for a
non-minimal leader can never complete because the true minimum node never
adopts a larger id, so the first DONE broadcast is always genuine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .graph import SIDE_A, SIDE_B, BipartiteGraph, Matching, SubgraphView
from .runtime import Msg, NodeProgram, RoundStats, id_bits, run

INF = math.inf

_STATUS = 0
_DONE = 1


@dataclass
class BfsTree:
    root: int
    parent: dict[int, int | None]
    depth: dict[int, int]
    height: int


@dataclass
class BfsForest:
    """Per-component BFS trees plus the derived two-sided bipartition."""

    trees: dict[int, BfsTree]
    root_of: dict[int, int]
    side: dict[int, str]

    def children(self) -> dict[int, tuple[int, ...]]:
        kids: dict[int, list[int]] = {v: [] for v in self.root_of}
        for tree in self.trees.values():
            for v, p in tree.parent.items():
                if p is not None:
                    kids[p].append(v)
        return {v: tuple(sorted(c)) for v, c in kids.items()}

    def tree_of(self, v: int) -> BfsTree:
        return self.trees[self.root_of[v]]


class LeaderBfsProgram(NodeProgram):
    """Min-id leader election with BFS tree, echo termination, and a final
    DONE broadcast carrying the tree height."""

    def init(self, ctx):
        return {
            "lead": ctx.node,
            "dist": 0,
            "parent": ctx.node,  # own id encodes "no parent"
            "complete": False,
            "height": 0,
            "nbr": {},
            "sent": None,
            "tree_height": 0,
            "done": False,
        }

    def _recompute(self, ctx, st):
        best = (st["lead"], st["dist"])
        parent = st["parent"]
        for u in sorted(st["nbr"]):
            lu, du, _child, _cu, _hu = st["nbr"][u]
            cand = (lu, du + 1)
            if cand < best:
                best = cand
                parent = u
        if best < (st["lead"], st["dist"]):
            st["lead"], st["dist"] = best
            st["parent"] = parent
            st["complete"] = False

        nbr = st["nbr"]
        lead, dist = st["lead"], st["dist"]
        children = [
            u
            for u, (lu, du, child, _cu, _hu) in nbr.items()
            if child and lu == lead and du == dist + 1
        ]
        resolved = all(
            u in nbr and nbr[u][0] == lead and nbr[u][1] <= dist + 1
            for u in ctx.neighbors
        )
        st["complete"] = resolved and all(nbr[c][3] for c in children)
        st["height"] = max((nbr[c][4] + 1 for c in children), default=0)
        return children

    def step(self, ctx, st, inbox, rnd, rng):
        idw = id_bits(ctx.n)
        done_received = None
        for u, msg in inbox.items():
            vals = msg.values
            if vals[0] == _STATUS:
                if len(vals) == 6:
                    st["nbr"][u] = (vals[1], vals[2], vals[3], vals[4], vals[5])
                else:
                    st["nbr"][u] = (vals[1], vals[2], 0, 0, 0)
            else:
                done_received = vals[1]

        children = self._recompute(ctx, st)
        out = {}

        if done_received is not None and not st["done"]:
            st["done"] = True
            st["tree_height"] = done_received
            for c in children:
                out[c] = Msg((_DONE, 1), (done_received, idw))
            return st, out, True

        if st["lead"] == ctx.node and st["complete"]:
            st["done"] = True
            st["tree_height"] = st["height"]
            for c in children:
                out[c] = Msg((_DONE, 1), (st["height"], idw))
            return st, out, True

        status = (st["lead"], st["dist"], st["parent"], int(st["complete"]), st["height"])
        if status != st["sent"]:
            st["sent"] = status
            # Only the parent needs the certificate fields; keeping the
            # other statuses narrow lets every frame fit the bandwidth.
            short = Msg((_STATUS, 1), (status[0], idw), (status[1], idw), (0, 1))
            full = Msg(
                (_STATUS, 1),
                (status[0], idw),
                (status[1], idw),
                (1, 1),
                (status[3], 1),
                (status[4], idw),
            )
            for u in ctx.neighbors:
                out[u] = full if u == st["parent"] else short
        return st, out, False, None

    def output(self, ctx, st):
        return {
            "leader": st["lead"],
            "parent": None if st["parent"] == ctx.node else st["parent"],
            "depth": st["dist"],
            "height": st["tree_height"],
            "side": SIDE_A if st["dist"] % 2 == 0 else SIDE_B,
        }


def elect_leader_and_bfs(
    graph: BipartiteGraph,
    view: SubgraphView | None = None,
    *,
    seed: int = 0,
    bandwidth: int | None = None,
    phase: str = "elect-bfs",
) -> tuple[BfsForest, RoundStats]:
    """Per-component leader (the minimum id), BFS tree, and bipartition."""
    outputs, stats = run(
        LeaderBfsProgram(), graph, view, seed=seed, bandwidth=bandwidth, phase=phase
    )
    trees: dict[int, BfsTree] = {}
    root_of: dict[int, int] = {}
    side: dict[int, str] = {}
    for v, out in outputs.items():
        root = out["leader"]
        root_of[v] = root
        side[v] = out["side"]
        tree = trees.get(root)
        if tree is None:
            tree = trees[root] = BfsTree(root, {}, {}, 0)
        tree.parent[v] = out["parent"]
        tree.depth[v] = out["depth"]
        tree.height = out["height"]
    return BfsForest(trees, root_of, side), stats


# ---------------------------------------------------------------------------
# Pipelined aggregation over a BFS tree
# ---------------------------------------------------------------------------

_COMBINERS = {
    "sum": lambda a, b: a + b,
    "min": min,
    "max": max,
}


class AggregateProgram(NodeProgram):
    """Convergecast of k values with pipelining, then pipelined broadcast.

    Inputs per node: (parent, depth, height, children, values). Value j
    climbs one tree level per slot; the root rebroadcasts each result as
    soon as it is final. A slot is one round unless messages fragment, in
    which case everything stretches by the same factor.
    """

    def __init__(self, k: int, combine: str, value_width: int):
        if combine not in _COMBINERS:
            raise ValueError(f"unknown combine {combine!r}")
        self.k = k
        self.fn = _COMBINERS[combine]
        self.combine = combine
        self.vw = value_width

    def _period(self, ctx):
        jw = id_bits(self.k)
        nbits = 1 + jw + self.vw
        return max(1, -(-nbits // ctx.bandwidth)), jw

    def _slot(self, rnd, period):
        return (rnd - 1) // period + 1

    def _slot_start(self, slot, period):
        return (slot - 1) * period + 1

    def init(self, ctx):
        parent, depth, height, children, values = ctx.input
        if len(values) != self.k:
            raise ValueError("every node must hold exactly k values")
        return {
            "parent": parent,
            "depth": depth,
            "height": height,
            "children": children,
            "partial": list(values),
            "results": [None] * self.k,
            "up_next": 0,
            "down_sent": 0,
        }

    def step(self, ctx, st, inbox, rnd, rng):
        period, jw = self._period(ctx)
        slot = self._slot(rnd, period)
        h, dp = st["height"], st["depth"]
        out = {}

        for u, msg in inbox.items():
            tag, j, value = msg.values
            if tag == 0:
                st["partial"][j] = self.fn(st["partial"][j], value)
            else:
                st["results"][j] = value
                for c in st["children"]:
                    out[c] = Msg((1, 1), (j, jw), (value, self.vw))
                st["down_sent"] = j + 1

        if st["parent"] is not None:
            # Value j climbs at slot (h - dp) + j + 1.
            j = slot - 1 - (h - dp)
            if j == st["up_next"] and 0 <= j < self.k:
                out[st["parent"]] = Msg((0, 1), (j, jw), (st["partial"][j], self.vw))
                st["up_next"] = j + 1
        else:
            j = slot - 1 - (h + 1)
            if j == st["down_sent"] and 0 <= j < self.k:
                st["results"][j] = st["partial"][j]
                for c in st["children"]:
                    out[c] = Msg((1, 1), (j, jw), (st["partial"][j], self.vw))
                st["down_sent"] = j + 1

        finished = all(r is not None for r in st["results"])
        if finished and (st["parent"] is None or not st["children"] or st["down_sent"] >= self.k):
            return st, out, True

        # Wake at the next slot with scheduled work, or on mail.
        wake = None
        if st["parent"] is not None and st["up_next"] < self.k:
            wake = self._slot_start((h - dp) + st["up_next"] + 1, period)
        elif st["parent"] is None and st["down_sent"] < self.k:
            wake = self._slot_start((h + 1) + st["down_sent"] + 1, period)
        if wake is not None and wake <= rnd:
            wake = rnd + 1
        return st, out, False, wake

    def output(self, ctx, st):
        return tuple(st["results"])


def pipelined_aggregate(
    graph: BipartiteGraph,
    forest: BfsForest,
    values: dict[int, tuple],
    *,
    combine: str = "sum",
    value_width: int | None = None,
    seed: int = 0,
    bandwidth: int | None = None,
    view: SubgraphView | None = None,
    phase: str = "aggregate",
) -> tuple[dict[int, tuple], RoundStats]:
    """Aggregate k values per node over each component's BFS tree and
    broadcast the componentwise results back to every node."""
    k = len(next(iter(values.values())))
    vw = value_width if value_width is not None else 2 * id_bits(graph.n)
    kids = forest.children()
    inputs = {}
    for v in graph.node_ids:
        tree = forest.tree_of(v)
        inputs[v] = (tree.parent[v], tree.depth[v], tree.height, kids[v], values[v])
    program = AggregateProgram(k, combine, vw)
    return run(
        program, graph, view, seed=seed, bandwidth=bandwidth, inputs=inputs, phase=phase
    )


# ---------------------------------------------------------------------------
# Alternating-path BFS
# ---------------------------------------------------------------------------

@dataclass
class AlternatingLayering:
    """Shortest alternating-path levels from the free in-view A-side nodes.

    Nodes absent from `level` were not reached within the depth limit.
    """

    level: dict[int, int]
    k: int
    neighbor_levels: dict[int, dict[int, int | None]] = field(default_factory=dict)

    def level_of(self, v: int) -> int | float:
        return self.level.get(v, INF)


class AltBfsProgram(NodeProgram):
    """Layered exploration of the orientation that alternates non-matching
    and matching edges, to a fixed depth, followed by one exchange in which
    every node announces its level to all neighbors.

    Input per node: its matching partner (or None; callers pass None when
    the matching edge is not in the current view). Level 0 is exactly the
    set of free in-view A-nodes. One BFS hop takes one round: the level
    message always fits a single frame because its width is at most
    id_bits(n) + 3 <= bandwidth.
    """

    def __init__(self, depth_limit: int):
        self.limit = depth_limit

    def init(self, ctx):
        partner = ctx.input
        level = 0 if ctx.in_view and ctx.side == SIDE_A and partner is None else None
        return {"partner": partner, "level": level, "nbr_levels": {}, "announced": False}

    def step(self, ctx, st, inbox, rnd, rng):
        lw = id_bits(self.limit + 3)
        announce_round = self.limit + 3
        out = {}

        if rnd >= announce_round:
            for u, msg in inbox.items():
                lv = msg.values[1]
                st["nbr_levels"][u] = None if lv == self.limit + 1 else lv
            if not st["announced"]:
                st["announced"] = True
                lv = st["level"] if st["level"] is not None else self.limit + 1
                msg = Msg((1, 1), (lv, lw))
                for u in ctx.neighbors:
                    out[u] = msg
                if not ctx.neighbors:
                    return st, out, True
                return st, out, False, None
            if len(st["nbr_levels"]) == len(ctx.neighbors):
                return st, out, True
            return st, out, False, None

        for u, msg in inbox.items():
            if msg.values[0] != 0 or st["level"] is not None or not ctx.in_view:
                continue
            sender_level = msg.values[1]
            if sender_level % 2 == 0:
                # Offer over a non-matching in-view edge onto a B-node.
                if ctx.side != SIDE_B or st["partner"] == u or u not in ctx.view_neighbors:
                    continue
                st["level"] = sender_level + 1
                if st["partner"] is not None and st["level"] < self.limit:
                    out[st["partner"]] = Msg((0, 1), (st["level"], lw))
            else:
                # Offer over the matching edge onto this node.
                if st["partner"] != u:
                    continue
                st["level"] = sender_level + 1
                if st["level"] < self.limit:
                    msg_out = Msg((0, 1), (st["level"], lw))
                    for w in ctx.view_neighbors:
                        if w != st["partner"]:
                            out[w] = msg_out

        if rnd == 1 and st["level"] == 0 and self.limit > 0:
            msg_out = Msg((0, 1), (0, lw))
            for w in ctx.view_neighbors:
                out[w] = msg_out

        return st, out, False, announce_round if rnd < announce_round else None

    def output(self, ctx, st):
        return {"level": st["level"], "nbr_levels": dict(st["nbr_levels"])}


def alternating_bfs(
    graph: BipartiteGraph,
    view: SubgraphView,
    matching: Matching,
    depth_limit: int,
    *,
    seed: int = 0,
    bandwidth: int | None = None,
    phase: str = "alt-bfs",
) -> tuple[AlternatingLayering, RoundStats]:
    """Distributed alternating BFS; levels match the sequential oracle."""
    inputs = {v: matching.partner_of(v) for v in graph.node_ids}
    outputs, stats = run(
        AltBfsProgram(depth_limit),
        graph,
        view,
        seed=seed,
        bandwidth=bandwidth,
        inputs=inputs,
        phase=phase,
    )
    level = {v: out["level"] for v, out in outputs.items() if out["level"] is not None}
    nbr = {v: out["nbr_levels"] for v, out in outputs.items()}
    return AlternatingLayering(level, depth_limit // 2, nbr), stats


def witness_check(
    graph: BipartiteGraph,
    view: SubgraphView,
    matching: Matching,
    forest: BfsForest,
    *,
    seed: int = 0,
    bandwidth: int | None = None,
) -> tuple[int | None, AlternatingLayering, RoundStats]:
    """Full-depth layering plus an aggregated minimum over the levels of
    free in-view B-nodes: afterwards every node knows the length of the
    shortest augmenting path, or that none exists (returned as None)."""
    from .runtime import derive_seed, id_bits

    stats = RoundStats()
    layering, bfs_stats = alternating_bfs(
        graph,
        view,
        matching,
        graph.n + 1,
        seed=derive_seed(seed, 7),
        bandwidth=bandwidth,
        phase="reachability",
    )
    stats.add_sequential(bfs_stats)
    width = id_bits(graph.n) + 2
    sentinel = (1 << width) - 1
    base = view.base
    values = {}
    for v in graph.node_ids:
        lv = layering.level.get(v)
        is_witness = (
            lv is not None
            and lv % 2 == 1
            and base.side[v] == SIDE_B
            and not matching.is_matched(v)
            and view.contains_node(v)
        )
        values[v] = (lv if is_witness else sentinel,)
    mins, agg_stats = pipelined_aggregate(
        graph,
        forest,
        values,
        combine="min",
        value_width=width,
        seed=derive_seed(seed, 8),
        bandwidth=bandwidth,
        view=view,
        phase="witness-check",
    )
    stats.add_sequential(agg_stats)
    shortest = min((mins[v][0] for v in graph.node_ids), default=sentinel)
    return (None if shortest == sentinel else shortest), layering, stats
