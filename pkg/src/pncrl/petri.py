"""Petri net core: net structure, markings, firing semantics, bounded
reachability analysis, and JSON (de)serialization.

Markings are immutable values; firing returns a new marking. Reachability
is breadth-first with a canonical token-vector key, so graphs are
deterministic and usable as golden fixtures.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class PetriNetError(Exception):
    """Base class for Petri net errors."""


class NetValidationError(PetriNetError):
    """Structural problem in a net definition.

    `path` locates the offending element (e.g. "arcs[3].weight").
    """

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class UnknownIdentifierError(PetriNetError):
    """A place or transition id that does not exist in the net."""


class NotEnabledError(PetriNetError):
    """Attempt to fire a disabled transition; names a deficient place."""

    def __init__(self, transition: str, place: str, have: int, need: int):
        super().__init__(
            f"transition {transition!r} is not enabled: place {place!r} "
            f"holds {have} token(s), needs {need}"
        )
        self.transition = transition
        self.place = place


@dataclass(frozen=True)
class Marking:
    """Immutable token assignment over a net's places (declaration order)."""

    places: tuple[str, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.places) != len(self.counts):
            raise ValueError("places and counts differ in length")
        if any(c < 0 for c in self.counts):
            raise ValueError("token counts must be non-negative")

    def __getitem__(self, place: str) -> int:
        try:
            return self.counts[self.places.index(place)]
        except ValueError:
            raise UnknownIdentifierError(f"unknown place {place!r}") from None

    @property
    def tokens(self) -> dict[str, int]:
        return dict(zip(self.places, self.counts))

    def total(self) -> int:
        return sum(self.counts)

    def __repr__(self):
        inside = ", ".join(f"{p}:{c}" for p, c in zip(self.places, self.counts) if c)
        return f"Marking({inside or 'empty'})"


class PetriNet:
    """Bipartite place/transition net with weighted arcs.

    Arcs are given as (source, target) or (source, target, weight) with
    exactly one endpoint a place and the other a transition. Duplicate
    arcs are rejected. Instances are immutable after construction.
    """

    def __init__(
        self,
        places: Sequence[str] | Mapping[str, int],
        transitions: Sequence[str],
        arcs: Iterable[tuple],
        initial_tokens: Mapping[str, int] | None = None,
    ):
        if isinstance(places, Mapping):
            place_ids = list(places.keys())
            tokens = dict(places)
        else:
            place_ids = list(places)
            tokens = {}
        if initial_tokens:
            tokens.update(initial_tokens)

        if len(set(place_ids)) != len(place_ids):
            raise NetValidationError("duplicate place id", "places")
        if len(set(transitions)) != len(transitions):
            raise NetValidationError("duplicate transition id", "transitions")
        overlap = set(place_ids) & set(transitions)
        if overlap:
            raise NetValidationError(
                f"ids used as both place and transition: {sorted(overlap)}", "places"
            )

        self.places: tuple[str, ...] = tuple(place_ids)
        self.transitions: tuple[str, ...] = tuple(transitions)
        self._place_index = {p: i for i, p in enumerate(self.places)}
        self._transition_set = set(self.transitions)

        self.arcs: dict[tuple[str, str], int] = {}
        for i, arc in enumerate(arcs):
            if len(arc) == 2:
                src, tgt = arc
                weight = 1
            else:
                src, tgt, weight = arc
            path = f"arcs[{i}]"
            if not isinstance(weight, int) or weight < 1:
                raise NetValidationError(f"weight must be >= 1, got {weight!r}", f"{path}.weight")
            src_is_place = src in self._place_index
            tgt_is_place = tgt in self._place_index
            src_is_trans = src in self._transition_set
            tgt_is_trans = tgt in self._transition_set
            if not (src_is_place or src_is_trans):
                raise NetValidationError(f"unknown endpoint {src!r}", f"{path}.from")
            if not (tgt_is_place or tgt_is_trans):
                raise NetValidationError(f"unknown endpoint {tgt!r}", f"{path}.to")
            if src_is_place == tgt_is_place:
                kind = "place" if src_is_place else "transition"
                raise NetValidationError(
                    f"arc {src!r} -> {tgt!r} connects two {kind}s", path
                )
            if (src, tgt) in self.arcs:
                raise NetValidationError(f"duplicate arc {src!r} -> {tgt!r}", path)
            self.arcs[(src, tgt)] = weight

        for p in tokens:
            if p not in self._place_index:
                raise NetValidationError(f"marking of unknown place {p!r}", "places")
            if tokens[p] < 0:
                raise NetValidationError(f"negative marking of {p!r}", "places")

        self.initial_marking = Marking(
            self.places, tuple(tokens.get(p, 0) for p in self.places)
        )

        # per-transition (place index, weight) lists, in place order
        self._inputs: dict[str, list[tuple[int, int]]] = {t: [] for t in self.transitions}
        self._outputs: dict[str, list[tuple[int, int]]] = {t: [] for t in self.transitions}
        for (src, tgt), w in self.arcs.items():
            if src in self._place_index:
                self._inputs[tgt].append((self._place_index[src], w))
            else:
                self._outputs[src].append((self._place_index[tgt], w))

    def _check_transition(self, t: str):
        if t not in self._transition_set:
            raise UnknownIdentifierError(f"unknown transition {t!r}")

    def _check_marking(self, m: Marking):
        if m.places != self.places:
            raise ValueError("marking does not belong to this net")

    def marking(self, tokens: Mapping[str, int]) -> Marking:
        """Build a marking of this net; unlisted places get 0 tokens."""
        for p in tokens:
            if p not in self._place_index:
                raise UnknownIdentifierError(f"unknown place {p!r}")
        return Marking(self.places, tuple(tokens.get(p, 0) for p in self.places))

    def is_enabled(self, m: Marking, t: str) -> bool:
        self._check_transition(t)
        self._check_marking(m)
        return all(m.counts[i] >= w for i, w in self._inputs[t])

    def fire(self, m: Marking, t: str) -> Marking:
        self._check_transition(t)
        self._check_marking(m)
        for i, w in self._inputs[t]:
            if m.counts[i] < w:
                raise NotEnabledError(t, self.places[i], m.counts[i], w)
        counts = list(m.counts)
        for i, w in self._inputs[t]:
            counts[i] -= w
        for i, w in self._outputs[t]:
            counts[i] += w
        return Marking(self.places, tuple(counts))

    def enabled_transitions(self, m: Marking) -> list[str]:
        """Enabled transitions in declaration order."""
        return [t for t in self.transitions if self.is_enabled(m, t)]


@dataclass
class ReachabilityGraph:
    """Bounded breadth-first closure of firing from the initial marking."""

    root: Marking
    nodes: list[Marking]
    edges: list[tuple[Marking, str, Marking]]
    truncated: bool
    deadlocks: list[Marking] = field(default_factory=list)
    max_tokens_per_place: int = 0

    @property
    def one_safe(self) -> bool:
        return self.max_tokens_per_place <= 1

    @property
    def deadlock_free(self) -> bool:
        return not self.deadlocks


def reachability(net: PetriNet, node_bound: int) -> ReachabilityGraph:
    """Explore markings breadth-first from M0, up to `node_bound` nodes.

    Hitting the bound sets `truncated` instead of raising; edges into
    unexplored markings are still recorded once the target is known.
    """
    if node_bound < 1:
        raise ValueError("node_bound must be >= 1")
    root = net.initial_marking
    seen: dict[tuple[int, ...], Marking] = {root.counts: root}
    order: list[Marking] = [root]
    edges: list[tuple[Marking, str, Marking]] = []
    deadlocks: list[Marking] = []
    truncated = False
    queue = deque([root])
    while queue:
        m = queue.popleft()
        enabled = net.enabled_transitions(m)
        if not enabled:
            deadlocks.append(m)
        for t in enabled:
            m2 = net.fire(m, t)
            if m2.counts not in seen:
                if len(seen) >= node_bound:
                    truncated = True
                    continue
                seen[m2.counts] = m2
                order.append(m2)
                queue.append(m2)
            edges.append((m, t, seen[m2.counts]))
    max_tokens = max((max(m.counts) for m in order if m.counts), default=0)
    return ReachabilityGraph(
        root=root,
        nodes=order,
        edges=edges,
        truncated=truncated,
        deadlocks=deadlocks,
        max_tokens_per_place=max_tokens,
    )


# --- JSON interchange -------------------------------------------------------
#
# Document shape:
#   {"places": [{"id": str, "tokens": uint}],
#    "transitions": [str],
#    "arcs": [{"from": str, "to": str, "weight": uint >= 1}]}
# Arrays are emitted in declaration order, so serialize/parse round-trips
# modulo whitespace.


def parse_net(text: str) -> PetriNet:
    """Parse a net from its JSON document; diagnostics carry element paths."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetValidationError(f"invalid JSON: {exc}", "$") from exc
    if not isinstance(doc, dict):
        raise NetValidationError("top level must be an object", "$")
    for key in ("places", "transitions", "arcs"):
        if key not in doc or not isinstance(doc[key], list):
            raise NetValidationError(f"missing or non-array field {key!r}", "$")

    tokens: dict[str, int] = {}
    place_ids: list[str] = []
    for i, entry in enumerate(doc["places"]):
        path = f"places[{i}]"
        if not isinstance(entry, dict) or "id" not in entry:
            raise NetValidationError("place entry must be an object with 'id'", path)
        pid = entry["id"]
        if not isinstance(pid, str):
            raise NetValidationError("place id must be a string", f"{path}.id")
        count = entry.get("tokens", 0)
        if not isinstance(count, int) or count < 0:
            raise NetValidationError(f"tokens must be a non-negative integer, got {count!r}", f"{path}.tokens")
        place_ids.append(pid)
        tokens[pid] = count

    for i, tid in enumerate(doc["transitions"]):
        if not isinstance(tid, str):
            raise NetValidationError("transition id must be a string", f"transitions[{i}]")

    arcs: list[tuple[str, str, int]] = []
    for i, entry in enumerate(doc["arcs"]):
        path = f"arcs[{i}]"
        if not isinstance(entry, dict) or "from" not in entry or "to" not in entry:
            raise NetValidationError("arc entry must be an object with 'from' and 'to'", path)
        weight = entry.get("weight", 1)
        if not isinstance(weight, int) or weight < 1:
            raise NetValidationError(f"weight must be an integer >= 1, got {weight!r}", f"{path}.weight")
        arcs.append((entry["from"], entry["to"], weight))

    return PetriNet(place_ids, list(doc["transitions"]), arcs, initial_tokens=tokens)


def serialize_net(net: PetriNet, indent: int | None = 2) -> str:
    doc = {
        "places": [
            {"id": p, "tokens": net.initial_marking[p]} for p in net.places
        ],
        "transitions": list(net.transitions),
        "arcs": [
            {"from": src, "to": tgt, "weight": w}
            for (src, tgt), w in net.arcs.items()
        ],
    }
    return json.dumps(doc, indent=indent)


# --- Traffic-light net ------------------------------------------------------

SIGNAL_GROUPS = ("swne", "we", "sn", "wnes")


def traffic_light_net() -> PetriNet:
    """Mutual-exclusion signal net for the 4-way junction.

    Per group g: Red_g (1 token) and Green_g places, RtoG_g consuming
    Red_g + Safe and producing Green_g, GtoR_g consuming Green_g and
    producing Red_g + Safe. The shared Safe place (1 token) admits at
    most one green group at a time.
    """
    places: dict[str, int] = {}
    for g in SIGNAL_GROUPS:
        places[f"Red_{g}"] = 1
        places[f"Green_{g}"] = 0
    places["Safe"] = 1

    transitions = [f"RtoG_{g}" for g in SIGNAL_GROUPS] + [
        f"GtoR_{g}" for g in SIGNAL_GROUPS
    ]

    arcs: list[tuple[str, str]] = []
    for g in SIGNAL_GROUPS:
        arcs += [
            (f"Red_{g}", f"RtoG_{g}"),
            ("Safe", f"RtoG_{g}"),
            (f"RtoG_{g}", f"Green_{g}"),
            (f"Green_{g}", f"GtoR_{g}"),
            (f"GtoR_{g}", f"Red_{g}"),
            (f"GtoR_{g}", "Safe"),
        ]
    return PetriNet(places, transitions, arcs)
