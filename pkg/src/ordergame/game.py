"""The order-guessing game itself.

Three parties A, B, C are arranged in a hidden order (an element of S3),
each applies a local map to a system passed down the line, and afterwards
they jointly guess the order from whatever they can observe.  This module
holds the permutation type, the uniform prior over the six orders, the
success-probability functional and the two warm-up games (two parties, and
three parties exchanging a trit).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Mapping

PARTIES = ("A", "B", "C")


class NotADistribution(ValueError):
    """An outcome distribution does not sum to one."""


@dataclass(frozen=True, order=True)
class Perm3:
    """A hidden order: the parties listed first-mover first."""

    order: tuple[str, str, str]

    def __post_init__(self):
        if sorted(self.order) != sorted(PARTIES):
            raise ValueError(f"not an ordering of {PARTIES}: {self.order}")

    @property
    def name(self) -> str:
        return "".join(self.order)

    @property
    def composition_name(self) -> str:
        """Function-composition spelling: last mover written first, lowercase."""
        return "".join(p.lower() for p in reversed(self.order))

    def apply(self, party: str) -> str:
        """Image of a party label under this permutation (A,B,C) -> order."""
        return self.order[PARTIES.index(party)]

    def compose(self, other: "Perm3") -> "Perm3":
        """self after other, as bijections of the party labels."""
        return Perm3(tuple(self.apply(p) for p in other.order))

    def inverse(self) -> "Perm3":
        inv = [None, None, None]
        for i, p in enumerate(self.order):
            inv[PARTIES.index(p)] = PARTIES[i]
        return Perm3(tuple(inv))

    def __str__(self) -> str:
        return self.name


IDENTITY = Perm3(("A", "B", "C"))


def all_orders() -> list[Perm3]:
    """The six orders, lexicographic in the party labels."""
    out = []
    for first in PARTIES:
        for second in PARTIES:
            for third in PARTIES:
                if len({first, second, third}) == 3:
                    out.append(Perm3((first, second, third)))
    return out


@dataclass(frozen=True)
class OrderPrior:
    """Probability weights over the six orders."""

    weights: Mapping[Perm3, Fraction | float]

    def __post_init__(self):
        total = sum(self.weights.values())
        if isinstance(total, Fraction):
            ok = total == 1
        else:
            ok = abs(float(total) - 1.0) <= 1e-12
        if not ok or set(self.weights) != set(all_orders()):
            raise NotADistribution("prior must put weight on all six orders and sum to 1")

    @classmethod
    def uniform(cls) -> "OrderPrior":
        return cls({pi: Fraction(1, 6) for pi in all_orders()})

    def __getitem__(self, pi: Perm3):
        return self.weights[pi]


@dataclass
class ScenarioResult:
    """One solved scenario: the headline probability plus its evidence."""

    scenario: str
    probability: Fraction | float
    strategy: str
    certificate: dict = field(default_factory=dict)

    def __post_init__(self):
        p = float(self.probability)
        if not 0.0 <= p <= 1.0 + 1e-9:
            raise ValueError(f"probability out of range: {self.probability}")

    @property
    def probability_float(self) -> float:
        return float(self.probability)

    @property
    def probability_exact(self) -> str | None:
        if isinstance(self.probability, Fraction):
            f = self.probability
            return f"{f.numerator}/{f.denominator}"
        if isinstance(self.probability, int):
            return f"{self.probability}/1"
        return None


Outcome = Hashable


def deterministic(outcome: Outcome) -> dict[Outcome, Fraction]:
    """Point distribution on a single outcome."""
    return {outcome: Fraction(1)}


def success_probability(
    outputs: Mapping[Perm3, Mapping[Outcome, Fraction | float]],
    decoder: Mapping[Outcome, Perm3] | Callable[[Outcome], Perm3],
    prior: OrderPrior | None = None,
):
    """Average probability that the decoded outcome names the true order.

    ``outputs[pi]`` is the outcome distribution produced when the true order
    is ``pi``; the decoder maps each outcome to a guessed order.
    """
    prior = prior or OrderPrior.uniform()
    decode = decoder if callable(decoder) else decoder.__getitem__
    total = 0
    for pi in all_orders():
        dist = outputs[pi]
        mass = sum(dist.values())
        if isinstance(mass, Fraction):
            if mass != 1:
                raise NotADistribution(f"distribution for {pi} sums to {mass}")
        elif abs(float(mass) - 1.0) > 1e-12:
            raise NotADistribution(f"distribution for {pi} sums to {mass}")
        hit = sum(p for outcome, p in dist.items() if decode(outcome) == pi)
        total = total + prior[pi] * hit
    return total


def optimal_decoder(outputs: Mapping[Perm3, Outcome]) -> dict[Outcome, Perm3]:
    """Best guess per outcome for deterministic outputs.

    Each distinct outcome is decoded to one order that produces it; ties are
    resolved toward the lexicographically smallest order, which never changes
    the success count.
    """
    table: dict[Outcome, Perm3] = {}
    for pi in all_orders():
        outcome = outputs[pi]
        if outcome not in table or pi < table[outcome]:
            table[outcome] = pi
    return table


def deterministic_success(outputs: Mapping[Perm3, Outcome], prior: OrderPrior | None = None):
    """success_probability for deterministic outputs under the optimal decoder."""
    dists = {pi: deterministic(outcome) for pi, outcome in outputs.items()}
    return success_probability(dists, optimal_decoder(outputs), prior)


# ---------------------------------------------------------------------------
# warm-up games
# ---------------------------------------------------------------------------


def two_party_game() -> ScenarioResult:
    """Alice always sends 1, Bob negates: two players always win."""
    alice = lambda x: 1
    bob = lambda x: 1 - x
    ba = bob(alice(0))   # Alice first
    ab = alice(bob(0))   # Bob first
    assert (ba, ab) == (0, 1)
    outputs = {"AB": ba, "BA": ab}
    return ScenarioResult(
        scenario="two-party",
        probability=Fraction(1),
        strategy="input 0; a(x)=1, b(x)=1-x; read the final bit",
        certificate={"transcript": {"ba(0)": ba, "ab(0)": ab}, "outputs": outputs},
    )


def trit_game() -> ScenarioResult:
    """Three players exchanging a trit: record the input, forward input+1 mod 3."""
    runs = {}
    for pi in all_orders():
        state = 0
        records = {}
        for party in pi.order:
            records[party] = state
            state = (state + 1) % 3
        # each party's record equals its (0-based) position in the line
        decoded = tuple(sorted(records, key=records.__getitem__))
        assert decoded == pi.order and state == 0
        runs[pi.name] = {"records": records, "final_state": state}
    return ScenarioResult(
        scenario="trit",
        probability=Fraction(1),
        strategy="trit input 0; every party records its input and forwards input+1 mod 3",
        certificate={"runs": runs},
    )
