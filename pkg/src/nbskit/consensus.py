"""Replay of the name-selection procedure: two survey rounds, then citations.

Round 1 keeps any option reaching at least 50% of the valid votes. Without
such an option the two highest-ranking real names escalate to round 2, where
a one-sample chi-square on reconstructed counts decides whether the majority
preference is significant. Still-unsettled names go to citation arbitration:
vetoed candidates are discarded, a surveyed survivor with at least 10 indexed
articles wins on count, otherwise expert-supplied candidates join the pool.

Every decision carries an ordered audit trail; identical inputs produce
byte-identical decisions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ArbitrationError, DataFormatError, ValidationError
from .stats import chi_square_one_sample

CITATION_THRESHOLD = 10


@dataclass(frozen=True)
class VoteOption:
    name: str
    percent: float
    aggregate: bool = False  # bucket of sub-threshold write-ins ("Others")


@dataclass(frozen=True)
class VoteTally:
    nbs: str
    round: int
    options: tuple[VoteOption, ...]
    total_valid: int | None = None

    def __post_init__(self):
        if self.round not in (1, 2):
            raise ValidationError(f"{self.nbs}: survey round must be 1 or 2")
        if any(o.percent < 0 for o in self.options):
            raise ValidationError(f"{self.nbs}: vote percentages must be non-negative")
        if self.round == 2:
            if len(self.options) != 2:
                raise ValidationError(f"{self.nbs}: a round-2 tally carries exactly 2 options")
            if self.total_valid is None or self.total_valid < 1:
                raise ValidationError(f"{self.nbs}: round-2 tallies need a positive total of valid votes")


@dataclass(frozen=True)
class CitationCount:
    candidate: str
    count: int
    source: str  # Surveyed | ExpertSupplied
    vetoed: bool = False
    veto_reason: str = ""

    def __post_init__(self):
        if self.count < 0:
            raise ValidationError(f"citation count for {self.candidate!r} must be >= 0")
        if self.source not in ("Surveyed", "ExpertSupplied"):
            raise ValidationError(f"unknown citation source {self.source!r}")
        if self.vetoed and not self.veto_reason.strip():
            raise ValidationError(f"vetoed candidate {self.candidate!r} needs a veto reason")


@dataclass(frozen=True)
class Escalation:
    """Round outcome that hands the decision to the next stage."""

    finalists: tuple[str, ...] = ()


@dataclass(frozen=True)
class AuditStep:
    stage: str
    rule: str
    outcome: str


@dataclass(frozen=True)
class NameDecision:
    nbs: str
    final_name: str
    path: str  # Round1 | Round2 | CitationArbitration | ExpertOverride
    audit: tuple[AuditStep, ...]


@dataclass(frozen=True)
class ConsensusData:
    round1: Mapping[str, VoteTally]
    round2: Mapping[str, VoteTally]
    citations: Mapping[str, tuple[CitationCount, ...]]


def round1_select(tally: VoteTally) -> str | Escalation:
    """Majority rule: the unique real option at >= 50% wins, else escalate the top two.

    Aggregate buckets never win and never escalate; they stand for write-ins
    below the individual reporting threshold.
    """
    if tally.round != 1:
        raise ValidationError(f"{tally.nbs}: round1_select needs a round-1 tally")
    candidates = [o for o in tally.options if not o.aggregate]
    if not candidates:
        raise ArbitrationError(f"{tally.nbs}: tally has no real options")
    winners = [o for o in candidates if o.percent >= 50.0]
    if len(winners) > 1:
        raise ArbitrationError(
            f"{tally.nbs}: {len(winners)} options reach 50% of valid votes; majority is ambiguous"
        )
    if winners:
        return winners[0].name
    ranked = sorted(candidates, key=lambda o: -o.percent)  # stable: listed order breaks ties
    return Escalation(finalists=tuple(o.name for o in ranked[:2]))


def reconstruct_counts(percentage_a: float, percentage_b: float, total_valid: int) -> tuple[int, int]:
    """Back out integer counts from reported percentages of the valid votes.

    a is the nearest integer to percentage_a/100 x total; b takes the rest,
    so a + b always equals the reported total.
    """
    if total_valid < 1:
        raise ValidationError("total_valid must be at least 1")
    a = math.floor(percentage_a / 100.0 * total_valid + 0.5)
    if a < 0 or a > total_valid:
        raise ArbitrationError(
            f"reconstructed count {a} outside [0, {total_valid}] "
            f"(percentages {percentage_a}/{percentage_b})"
        )
    return a, total_valid - a


def round2_test(tally: VoteTally, alpha: float = 0.05) -> str | Escalation:
    """Chi-square the reconstructed counts; a significant majority wins, else escalate."""
    if tally.round != 2:
        raise ValidationError(f"{tally.nbs}: round2_test needs a round-2 tally")
    first, second = tally.options
    majority, minority = (first, second) if first.percent >= second.percent else (second, first)
    assert tally.total_valid is not None
    a, b = reconstruct_counts(majority.percent, minority.percent, tally.total_valid)
    result = chi_square_one_sample(a, b)
    if result.p_value < alpha:
        return majority.name
    return Escalation(finalists=(majority.name, minority.name))


def citation_arbitrate(candidates: Sequence[CitationCount]) -> tuple[str, str, tuple[AuditStep, ...]]:
    """Pick a final name from citation counts; returns (name, path, audit steps).

    Vetoes are recorded acts of expert judgement, so any veto marks the
    outcome ExpertOverride even when the count rule alone would have decided.
    """
    if not candidates:
        raise ArbitrationError("citation arbitration without candidates")
    steps: list[AuditStep] = []
    survivors = [c for c in candidates if not c.vetoed]
    for c in candidates:
        if c.vetoed:
            steps.append(AuditStep("citation", "discard vetoed candidate", f"{c.candidate!r}: {c.veto_reason}"))
    if not survivors:
        raise ArbitrationError("every candidate is vetoed; no name can be adopted")
    any_veto = len(survivors) < len(candidates)

    surveyed_hits = [c for c in survivors if c.source == "Surveyed" and c.count >= CITATION_THRESHOLD]
    if surveyed_hits:
        best = max(surveyed_hits, key=lambda c: c.count)
        ties = [c for c in surveyed_hits if c.count == best.count]
        winner = ties[0]
        if len(ties) > 1:
            steps.append(AuditStep("citation", "tie on citation count", f"first-listed candidate {winner.candidate!r} wins"))
        steps.append(
            AuditStep(
                "citation",
                f"surveyed candidate with >= {CITATION_THRESHOLD} articles, maximum count",
                f"{winner.candidate!r} ({winner.count} documents)",
            )
        )
        return winner.candidate, ("ExpertOverride" if any_veto else "CitationArbitration"), tuple(steps)

    if not any(c.source == "ExpertSupplied" for c in survivors):
        raise ArbitrationError(
            f"no surveyed candidate reaches {CITATION_THRESHOLD} articles and no expert-supplied "
            "candidates exist; the name cannot be determined"
        )
    best = max(survivors, key=lambda c: c.count)
    ties = [c for c in survivors if c.count == best.count]
    winner = ties[0]
    if len(ties) > 1:
        steps.append(AuditStep("citation", "tie on citation count", f"first-listed candidate {winner.candidate!r} wins"))
    steps.append(
        AuditStep(
            "citation",
            "no surveyed candidate reaches the article threshold; "
            "maximum count among all candidates including expert-supplied",
            f"{winner.candidate!r} ({winner.count} documents, {winner.source})",
        )
    )
    return winner.candidate, "ExpertOverride", tuple(steps)


def resolve_name(nbs: str, data: ConsensusData, alpha: float = 0.05) -> NameDecision:
    """Compose the three stages for one NBS, recording every step."""
    audit: list[AuditStep] = []
    tally1 = data.round1.get(nbs)
    if tally1 is None:
        raise ArbitrationError(f"{nbs}: no round-1 tally")
    outcome1 = round1_select(tally1)
    if isinstance(outcome1, str):
        share = next(o.percent for o in tally1.options if o.name == outcome1)
        audit.append(AuditStep("round1", "option with >= 50% of valid votes", f"{outcome1!r} ({share}%)"))
        return NameDecision(nbs=nbs, final_name=outcome1, path="Round1", audit=tuple(audit))
    audit.append(
        AuditStep("round1", "no option reached 50% of valid votes",
                  "escalating the two highest-ranking names: " + ", ".join(repr(f) for f in outcome1.finalists))
    )

    tally2 = data.round2.get(nbs)
    if tally2 is None:
        raise ArbitrationError(f"{nbs}: escalated past round 1 but no round-2 tally exists")
    first, second = tally2.options
    majority, minority = (first, second) if first.percent >= second.percent else (second, first)
    assert tally2.total_valid is not None
    a, b = reconstruct_counts(majority.percent, minority.percent, tally2.total_valid)
    chi = chi_square_one_sample(a, b)
    outcome2 = round2_test(tally2, alpha=alpha)
    if isinstance(outcome2, str):
        audit.append(
            AuditStep("round2", f"chi-square on reconstructed counts ({a}, {b}), p < {alpha}",
                      f"{outcome2!r} (X2={chi.statistic:.2f}, p={chi.p_value:.2g})")
        )
        return NameDecision(nbs=nbs, final_name=outcome2, path="Round2", audit=tuple(audit))
    audit.append(
        AuditStep("round2", f"chi-square on reconstructed counts ({a}, {b}), p >= {alpha}",
                  f"no significant preference (X2={chi.statistic:.2f}, p={chi.p_value:.2g}); "
                  "escalating to citation arbitration")
    )

    candidates = data.citations.get(nbs)
    if not candidates:
        raise ArbitrationError(f"{nbs}: escalated past round 2 but no citation data exists")
    name, path, steps = citation_arbitrate(candidates)
    audit.extend(steps)
    return NameDecision(nbs=nbs, final_name=name, path=path, audit=tuple(audit))


def resolve_all(data: ConsensusData, alpha: float = 0.05) -> list[NameDecision]:
    from .catalogue import nbs_sort_key

    return [resolve_name(nbs, data, alpha=alpha) for nbs in sorted(data.round1, key=nbs_sort_key)]


# --- loading ---------------------------------------------------------------

def _load_json(path: Path):
    if not path.is_file():
        raise DataFormatError("file not found", source=str(path))
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc}", source=str(path), line=exc.lineno) from exc


def load_consensus_data(path: str | Path) -> ConsensusData:
    """Read round1.json, round2.json and citations.json from a directory."""
    root = Path(path)
    round1: dict[str, VoteTally] = {}
    for item in _load_json(root / "round1.json"):
        options = tuple(
            VoteOption(name=o["name"], percent=float(o["percent"]), aggregate=bool(o.get("aggregate", False)))
            for o in item["options"]
        )
        round1[item["nbs"]] = VoteTally(nbs=item["nbs"], round=1, options=options)
    round2: dict[str, VoteTally] = {}
    for item in _load_json(root / "round2.json"):
        options = tuple(
            VoteOption(name=o["name"], percent=float(o["percent"])) for o in item["options"]
        )
        round2[item["nbs"]] = VoteTally(
            nbs=item["nbs"], round=2, options=options, total_valid=int(item["total_valid"])
        )
    citations: dict[str, tuple[CitationCount, ...]] = {}
    for item in _load_json(root / "citations.json"):
        citations[item["nbs"]] = tuple(
            CitationCount(
                candidate=c["candidate"],
                count=int(c["count"]),
                source=c["source"],
                vetoed=bool(c.get("vetoed", False)),
                veto_reason=c.get("veto_reason", ""),
            )
            for c in item["candidates"]
        )
    return ConsensusData(round1=round1, round2=round2, citations=citations)
