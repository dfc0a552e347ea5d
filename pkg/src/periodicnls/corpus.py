"""Built-in periodicity cells used by tests and the CLI examples."""
from __future__ import annotations

from .graphs import CompactGraph, Edge
from .periodic import PeriodicSpec


def ladder_spec() -> PeriodicSpec:
    """Rungs joined by parallel rails; all edges unit length."""
    cell = CompactGraph(
        ["a", "b", "a2", "b2"],
        [
            Edge("rung", "a", "b", 1.0),
            Edge("top", "a", "a2", 1.0),
            Edge("bottom", "b", "b2", 1.0),
        ],
    )
    return PeriodicSpec(
        cell=cell,
        donors=frozenset({"a2", "b2"}),
        receivers=frozenset({"a", "b"}),
        sigma=(("a2", "a"), ("b2", "b")),
        name="ladder",
    )


def circles_and_segments_spec() -> PeriodicSpec:
    """Alternating circles (two parallel unit edges) and unit segments."""
    cell = CompactGraph(
        ["v", "w", "x"],
        [
            Edge("circle_up", "v", "w", 1.0),
            Edge("circle_down", "v", "w", 1.0),
            Edge("segment", "w", "x", 1.0),
        ],
    )
    return PeriodicSpec(
        cell=cell,
        donors=frozenset({"x"}),
        receivers=frozenset({"v"}),
        sigma=(("x", "v"),),
        name="circles-and-segments",
    )


def pendant_spec() -> PeriodicSpec:
    """A line with a dangling unit edge at every junction (terminal edges)."""
    cell = CompactGraph(
        ["s", "s2", "t"],
        [
            Edge("spine", "s", "s2", 1.0),
            Edge("pendant", "s", "t", 1.0),
        ],
    )
    return PeriodicSpec(
        cell=cell,
        donors=frozenset({"s2"}),
        receivers=frozenset({"s"}),
        sigma=(("s2", "s"),),
        name="pendant",
    )


def signpost_spec(gamma: float = 0.5, beta: float = 0.5, delta: float = 0.5) -> PeriodicSpec:
    """A line with, at each junction, a bridge of length 2*beta carrying a
    circle of length 2*gamma; consecutive junctions are delta apart."""
    cell = CompactGraph(
        ["q", "s", "s2"],
        [
            Edge("circle", "q", "q", 2.0 * gamma),
            Edge("bridge", "q", "s", 2.0 * beta),
            Edge("horizontal", "s", "s2", delta),
        ],
    )
    return PeriodicSpec(
        cell=cell,
        donors=frozenset({"s2"}),
        receivers=frozenset({"s"}),
        sigma=(("s2", "s"),),
        name="signpost",
    )


def star_like_spec() -> PeriodicSpec:
    """Donor and receiver sets overlap in a fixed point of the pasting map;
    the glued copies all share one vertex, so the diameter stays bounded."""
    cell = CompactGraph(
        ["x", "y", "z"],
        [
            Edge("e1", "x", "y", 1.0),
            Edge("e2", "y", "z", 1.0),
            Edge("e3", "z", "x", 1.0),
        ],
    )
    return PeriodicSpec(
        cell=cell,
        donors=frozenset({"x"}),
        receivers=frozenset({"x"}),
        sigma=(("x", "x"),),
        name="star-like",
    )


def non_bijective_spec() -> PeriodicSpec:
    """Two donors pasted onto the same receiver (sigma not injective)."""
    cell = CompactGraph(
        ["c", "s", "t", "r"],
        [
            Edge("arm_s", "c", "s", 1.0),
            Edge("arm_t", "c", "t", 1.0),
            Edge("arm_r", "c", "r", 1.0),
        ],
    )
    return PeriodicSpec(
        cell=cell,
        donors=frozenset({"s", "t"}),
        receivers=frozenset({"r"}),
        sigma=(("s", "r"), ("t", "r")),
        name="non-bijective",
    )


BUILTIN = {
    "ladder": ladder_spec,
    "circles-and-segments": circles_and_segments_spec,
    "pendant": pendant_spec,
    "signpost": signpost_spec,
    "star-like": star_like_spec,
    "non-bijective": non_bijective_spec,
}
