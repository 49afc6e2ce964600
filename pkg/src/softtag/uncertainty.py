"""Uncertainty calculi over finite tag frames.

Implements the four representations an annotator's knowledge can take:
additive probability, maxitive possibility, graded (fuzzy) membership and
granule-based (rough) approximation, plus the conversions from set
constraints and ordinal plausibility judgments into possibility degrees.

All types are immutable values and every operation is a pure function, so
everything here is safe to share across threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    DuplicateTag,
    EmptyConstraint,
    FrameMismatch,
    UnknownRank,
    UnknownTag,
)

#: Absolute tolerance for all degree comparisons (64-bit floats throughout).
TOL = 1e-9


class World(enum.Enum):
    """Whether the frame is assumed exhaustive (closed) or extensible (open)."""

    CLOSED = "closed"
    OPEN = "open"


@dataclass(frozen=True)
class Frame:
    """Finite, ordered reference set of tags.

    Iteration order is the insertion order of ``elements``, so every
    reduction over a frame is deterministic.
    """

    elements: tuple[str, ...]
    world: World = World.CLOSED

    def __post_init__(self) -> None:
        if not isinstance(self.elements, tuple):
            object.__setattr__(self, "elements", tuple(self.elements))
        seen = set()
        for tag in self.elements:
            if not tag or not isinstance(tag, str):
                raise ValueError("frame elements must be non-empty strings")
            if tag in seen:
                raise DuplicateTag(tag)
            seen.add(tag)

    def __contains__(self, tag: str) -> bool:
        return tag in self.elements

    def __iter__(self) -> Iterator[str]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def check_tags(self, tags: Iterable[str]) -> None:
        """Raise UnknownTag for the first tag outside the frame."""
        known = set(self.elements)
        for tag in tags:
            if tag not in known:
                raise UnknownTag(f"{tag!r} is not in the frame")

    def subset(self, members: Iterable[str]) -> "TagSubset":
        return TagSubset(self, frozenset(members))


@dataclass(frozen=True)
class TagSubset:
    """A plain subset of a frame (an event, or a set constraint).

    Empty subsets are constructible under either world assumption: events
    range over the full powerset.  The closed-world ban on empty
    *information* is enforced where a subset is used as a constraint
    (`from_set_constraint`) or as an annotation (validate_record).
    """

    frame: Frame
    members: frozenset[str]

    def __post_init__(self) -> None:
        if not isinstance(self.members, frozenset):
            object.__setattr__(self, "members", frozenset(self.members))
        self.frame.check_tags(self.members)

    def __contains__(self, tag: str) -> bool:
        return tag in self.members

    def __len__(self) -> int:
        return len(self.members)

    def complement(self) -> "TagSubset":
        return TagSubset(self.frame, frozenset(self.frame.elements) - self.members)


def _clean_degrees(frame: Frame, degrees: Mapping[str, float], what: str) -> dict[str, float]:
    """Validate a tag->degree map and drop exact zeros (missing reads as 0)."""
    frame.check_tags(degrees)
    cleaned = {}
    for tag in frame.elements:  # frame order keeps reprs deterministic
        if tag not in degrees:
            continue
        value = float(degrees[tag])
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{what} for {tag!r} outside [0,1]: {value}")
        if value != 0.0:
            cleaned[tag] = value
    return cleaned


@dataclass(frozen=True)
class ProbabilityDistribution:
    """Additive degree assignment over a frame; weights sum to 1."""

    frame: Frame
    weights: Mapping[str, float]

    def __post_init__(self) -> None:
        cleaned = _clean_degrees(self.frame, self.weights, "probability")
        total = sum(cleaned.values())
        if abs(total - 1.0) > TOL:
            raise ValueError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "weights", cleaned)

    def weight(self, tag: str) -> float:
        return self.weights.get(tag, 0.0)


@dataclass(frozen=True)
class PossibilityDistribution:
    """Maxitive degree assignment over a frame.

    Degree 1 everywhere encodes complete ignorance.  A distribution whose
    maximum degree falls short of 1 is *subnormal*; it is preserved as-is
    (never renormalized) and exposed through `is_subnormal`, because a
    subnormal annotation carries the annotator's global doubt.
    """

    frame: Frame
    degrees: Mapping[str, float]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "degrees", _clean_degrees(self.frame, self.degrees, "possibility")
        )

    def degree(self, tag: str) -> float:
        return self.degrees.get(tag, 0.0)

    @property
    def max_degree(self) -> float:
        return max(self.degrees.values(), default=0.0)

    @property
    def is_normal(self) -> bool:
        return abs(self.max_degree - 1.0) <= TOL

    @property
    def is_subnormal(self) -> bool:
        return not self.is_normal

    @classmethod
    def ignorance(cls, frame: Frame) -> "PossibilityDistribution":
        return cls(frame, {tag: 1.0 for tag in frame})


@dataclass(frozen=True)
class OrdinalScale:
    """Ordered plausibility levels with a numeric reading per rank.

    Ranks run consecutively from 1; the numeric map is strictly increasing,
    anchored at 0 for the lowest rank and 1 for the highest.
    """

    levels: tuple[tuple[int, str], ...]
    numeric_map: Mapping[int, float]

    def __post_init__(self) -> None:
        if not isinstance(self.levels, tuple):
            object.__setattr__(self, "levels", tuple(tuple(l) for l in self.levels))
        ranks = [rank for rank, _ in self.levels]
        if not ranks or ranks != list(range(1, len(ranks) + 1)):
            raise ValueError("ranks must run consecutively from 1")
        numeric = {int(r): float(v) for r, v in self.numeric_map.items()}
        if sorted(numeric) != ranks:
            raise ValueError("numeric map must cover exactly the scale's ranks")
        values = [numeric[r] for r in ranks]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("numeric map must be strictly increasing")
        if values[0] != 0.0 or values[-1] != 1.0:
            raise ValueError("numeric map must run from 0 to 1")
        object.__setattr__(self, "numeric_map", numeric)

    @property
    def ranks(self) -> Sequence[int]:
        return [rank for rank, _ in self.levels]

    @property
    def top_rank(self) -> int:
        return self.levels[-1][0]

    def degree(self, rank: int) -> float:
        try:
            return self.numeric_map[rank]
        except KeyError:
            raise UnknownRank(f"rank {rank} not on the scale") from None

    def label(self, rank: int) -> str:
        for r, label in self.levels:
            if r == rank:
                return label
        raise UnknownRank(f"rank {rank} not on the scale")

    @classmethod
    def default(cls) -> "OrdinalScale":
        """The 4-level plausibility scale, equally spaced onto [0,1]."""
        return cls(
            levels=(
                (1, "definitely excluded"),
                (2, "may apply, but unlikely"),
                (3, "not unplausible"),
                (4, "completely plausible"),
            ),
            numeric_map={1: 0.0, 2: 1 / 3, 3: 2 / 3, 4: 1.0},
        )


@dataclass(frozen=True)
class FuzzyTagSet:
    """Graded membership over a frame (Zadeh connectives: min/max/1-x)."""

    frame: Frame
    membership: Mapping[str, float]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "membership", _clean_degrees(self.frame, self.membership, "membership")
        )

    def grade(self, tag: str) -> float:
        return self.membership.get(tag, 0.0)

    def support(self) -> TagSubset:
        return TagSubset(self.frame, frozenset(self.membership))

    def _check_frame(self, other: "FuzzyTagSet") -> None:
        if self.frame != other.frame:
            raise FrameMismatch("fuzzy sets over different frames")

    def union(self, other: "FuzzyTagSet") -> "FuzzyTagSet":
        self._check_frame(other)
        tags = set(self.membership) | set(other.membership)
        return FuzzyTagSet(
            self.frame, {t: max(self.grade(t), other.grade(t)) for t in tags}
        )

    def intersection(self, other: "FuzzyTagSet") -> "FuzzyTagSet":
        self._check_frame(other)
        tags = set(self.membership) | set(other.membership)
        return FuzzyTagSet(
            self.frame, {t: min(self.grade(t), other.grade(t)) for t in tags}
        )

    def complement(self) -> "FuzzyTagSet":
        return FuzzyTagSet(self.frame, {t: 1.0 - self.grade(t) for t in self.frame})


@dataclass(frozen=True)
class IndiscernibilityPartition:
    """Partition of a frame into granules of mutually indistinguishable tags."""

    frame: Frame
    granules: tuple[frozenset[str], ...]

    def __post_init__(self) -> None:
        granules = tuple(frozenset(g) for g in self.granules)
        object.__setattr__(self, "granules", granules)
        seen: set[str] = set()
        for granule in granules:
            if not granule:
                raise ValueError("granules must be non-empty")
            self.frame.check_tags(granule)
            if seen & granule:
                raise ValueError("granules must be pairwise disjoint")
            seen |= granule
        if seen != set(self.frame.elements):
            raise ValueError("granules must cover the frame")

    @classmethod
    def identity(cls, frame: Frame) -> "IndiscernibilityPartition":
        return cls(frame, tuple(frozenset([tag]) for tag in frame))


@dataclass(frozen=True)
class RoughTagSet:
    """Lower/upper approximation pair of a subset under a partition."""

    lower: TagSubset
    upper: TagSubset

    def __post_init__(self) -> None:
        if self.lower.frame != self.upper.frame:
            raise FrameMismatch("approximations over different frames")
        if not self.lower.members <= self.upper.members:
            raise ValueError("lower approximation must be within the upper")

    @property
    def boundary(self) -> TagSubset:
        return TagSubset(self.lower.frame, self.upper.members - self.lower.members)


class CombineMode(enum.Enum):
    CONJUNCTIVE = "conjunctive"
    DISJUNCTIVE = "disjunctive"


def possibility_of_event(dist: PossibilityDistribution, event: TagSubset) -> float:
    """Possibility of an event: the max degree over its members (0 if empty)."""
    dist.frame.check_tags(event.members)
    return max((dist.degree(tag) for tag in event.members), default=0.0)


def probability_of_event(dist: ProbabilityDistribution, event: TagSubset) -> float:
    """Probability of an event: the sum of its members' weights."""
    dist.frame.check_tags(event.members)
    return sum(dist.weight(tag) for tag in event.members)


def from_set_constraint(constraint: TagSubset) -> PossibilityDistribution:
    """Possibility distribution of a set constraint: 1 on members, 0 elsewhere.

    An empty constraint is rejected under a closed world; under an open
    world it degenerates to the all-zero distribution (the true tag would
    lie outside the frame).
    """
    if not constraint.members and constraint.frame.world is World.CLOSED:
        raise EmptyConstraint("empty constraint under a closed world")
    return PossibilityDistribution(
        constraint.frame, {tag: 1.0 for tag in constraint.members}
    )


def from_ordinal(
    frame: Frame,
    entries: Iterable[tuple[str, int]],
    scale: OrdinalScale,
) -> PossibilityDistribution:
    """Read ordinal plausibility judgments as possibility degrees.

    Tags not listed take the lowest rank (definitely excluded).  A judgment
    without a top-rank entry yields a subnormal distribution, returned
    as-is.  An empty entry list is rejected under a closed world.
    """
    degrees: dict[str, float] = {}
    for tag, rank in entries:
        frame.check_tags([tag])
        if tag in degrees:
            raise DuplicateTag(f"{tag!r} rated twice")
        degrees[tag] = scale.degree(rank)
    if not any(v > 0.0 for v in degrees.values()) and frame.world is World.CLOSED:
        raise EmptyConstraint("every tag excluded under a closed world")
    return PossibilityDistribution(frame, degrees)


def combine_possibility(
    d1: PossibilityDistribution,
    d2: PossibilityDistribution,
    mode: CombineMode = CombineMode.CONJUNCTIVE,
) -> tuple[PossibilityDistribution, float]:
    """Combine two opinions pointwise (min or max), without renormalizing.

    Returns the combined distribution and the degree of conflict, which is
    always 1 minus the height of the *conjunctive* combination: identical
    opinions conflict exactly by their shared subnormality.
    """
    if d1.frame != d2.frame:
        raise FrameMismatch("distributions over different frames")
    tags = set(d1.degrees) | set(d2.degrees)
    conjunctive = {t: min(d1.degree(t), d2.degree(t)) for t in tags}
    conflict = 1.0 - max(conjunctive.values(), default=0.0)
    if mode is CombineMode.CONJUNCTIVE:
        combined = conjunctive
    else:
        combined = {t: max(d1.degree(t), d2.degree(t)) for t in tags}
    return PossibilityDistribution(d1.frame, combined), conflict


def rough_approximations(
    partition: IndiscernibilityPartition, a: TagSubset
) -> RoughTagSet:
    """Approximate a subset by whole granules of the partition.

    The lower approximation unions the granules fully inside ``a``; the
    upper unions every granule touching it, so lower <= a <= upper.
    """
    if partition.frame != a.frame:
        raise FrameMismatch("subset and partition over different frames")
    lower: set[str] = set()
    upper: set[str] = set()
    for granule in partition.granules:
        if granule <= a.members:
            lower |= granule
        if granule & a.members:
            upper |= granule
    return RoughTagSet(
        lower=TagSubset(a.frame, frozenset(lower)),
        upper=TagSubset(a.frame, frozenset(upper)),
    )
