"""The common NBS catalogue: entries, classification tree, facet baseline, crosswalk, exclusions.

A loaded :class:`Catalogue` is an immutable snapshot. All structural invariants
are checked at load time; downstream modules may assume they hold. Reloading
produces a new snapshot, so concurrent readers are always safe.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataFormatError, UnknownIdError, ValidationError

NAME_PROVENANCES = ("Round1", "Round2", "CitationArbitration", "ExpertOverride")
FACET_KINDS = ("UrbanChallenge", "EcosystemService")
ES_CATEGORIES = ("Provisioning", "Regulating", "Cultural", "Supporting")
EXCLUSION_REASONS = (
    "BenefitNotSolution",
    "InspiredNotEmploying",
    "PlanningManagementApproach",
    "TooIntensiveNotInNature",
    "CategoryNotSolution",
    "NoAssessment",
    "NotCrossProject",
)

_NBS_ID = re.compile(r"^NBS([1-9]\d*)$")


def nbs_sort_key(nbs_id: str) -> int:
    """Numeric ordering key for catalogue ids ('NBS2' sorts before 'NBS10')."""
    m = _NBS_ID.match(nbs_id)
    if not m:
        raise UnknownIdError(f"malformed NBS id: {nbs_id!r}")
    return int(m.group(1))


@dataclass(frozen=True)
class TaxonomyNode:
    """One category of the three-level classification tree.

    ``question`` is the yes/no discriminator asked when this node is a
    candidate child during :meth:`Taxonomy.classify`.
    """

    code: str
    parent: str | None
    level: int
    question: str


@dataclass(frozen=True)
class NbsEntry:
    """One of the 32 catalogue solutions."""

    id: str
    final_name: str
    aliases: tuple[str, ...]
    description: str
    taxonomy_leaf: str
    project_labels: Mapping[str, tuple[str, ...]]
    name_provenance: str
    taxonomy_inferred: bool = False


@dataclass(frozen=True)
class FacetDef:
    """A baseline urban challenge or ecosystem service."""

    id: str
    kind: str
    label: str
    es_category: str | None = None


@dataclass(frozen=True)
class CrosswalkRule:
    """Maps one project facet label onto a baseline facet."""

    project: str
    project_facet_label: str
    baseline_facet: str
    inferred: bool = False


@dataclass(frozen=True)
class ExclusionRecord:
    """An item dropped during common-list construction, with its reason."""

    item_name: str
    project: str
    reason: str


class Taxonomy:
    """The classification tree plus the question-driven classification walk."""

    def __init__(self, nodes: Sequence[TaxonomyNode]):
        self._nodes: dict[str, TaxonomyNode] = {}
        self._children: dict[str | None, list[str]] = {}
        for node in nodes:
            if node.code in self._nodes:
                raise ValidationError(f"duplicate taxonomy code {node.code!r}")
            self._nodes[node.code] = node
            self._children.setdefault(node.parent, []).append(node.code)
        self._validate()

    def _validate(self) -> None:
        roots = self._children.get(None, [])
        if not roots:
            raise ValidationError("taxonomy has no root nodes")
        for node in self._nodes.values():
            if not node.question.strip():
                raise ValidationError(f"taxonomy node {node.code!r} has an empty question")
            if node.parent is not None:
                parent = self._nodes.get(node.parent)
                if parent is None:
                    raise ValidationError(f"taxonomy node {node.code!r} references unknown parent {node.parent!r}")
                if node.level != parent.level + 1:
                    raise ValidationError(f"taxonomy node {node.code!r} level {node.level} inconsistent with parent")
            elif node.level != 1:
                raise ValidationError(f"root taxonomy node {node.code!r} must be level 1")
            if not 1 <= node.level <= 3:
                raise ValidationError(f"taxonomy node {node.code!r} has level {node.level} outside 1..3")
        # every node must be reachable from a root (no orphan cycles)
        seen: set[str] = set()
        stack = list(roots)
        while stack:
            code = stack.pop()
            if code in seen:
                raise ValidationError(f"taxonomy contains a cycle through {code!r}")
            seen.add(code)
            stack.extend(self._children.get(code, []))
        if seen != set(self._nodes):
            orphans = sorted(set(self._nodes) - seen)
            raise ValidationError(f"taxonomy nodes unreachable from the roots: {orphans}")

    def node(self, code: str) -> TaxonomyNode:
        try:
            return self._nodes[code]
        except KeyError:
            raise UnknownIdError(f"unknown taxonomy code {code!r}") from None

    def __contains__(self, code: str) -> bool:
        return code in self._nodes

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(self._nodes)

    def children(self, code: str | None) -> tuple[str, ...]:
        if code is not None:
            self.node(code)
        return tuple(self._children.get(code, ()))

    def roots(self) -> tuple[str, ...]:
        return tuple(self._children[None])

    def is_leaf(self, code: str) -> bool:
        return not self._children.get(self.node(code).code)

    def leaves(self) -> tuple[str, ...]:
        return tuple(c for c in self._nodes if self.is_leaf(c))

    def path_to_root(self, code: str) -> tuple[str, ...]:
        """Codes from the root down to ``code`` (inclusive)."""
        chain: list[str] = []
        current: str | None = code
        while current is not None:
            node = self.node(current)
            chain.append(node.code)
            current = node.parent
        return tuple(reversed(chain))

    def ancestor_at_level(self, code: str, level: int) -> str:
        for c in self.path_to_root(code):
            if self.node(c).level == level:
                return c
        raise UnknownIdError(f"{code!r} has no ancestor at level {level}")

    def descends_from(self, code: str, ancestor: str) -> bool:
        return ancestor in self.path_to_root(code)

    def classify(self, answers: Iterable[bool]) -> str:
        """Walk the tree on a root-to-leaf sequence of yes/no answers.

        At each internal node the candidate children are interrogated in
        catalogue order: "yes" descends into the child whose question was
        asked, "no" moves on to the next candidate. The last candidate needs
        no answer - it is implied by "no" to its predecessor. The walk is a
        pure function of the answers; surplus or missing answers raise.
        """
        remaining = list(answers)
        current: str | None = None
        while True:
            candidates = self.children(current)
            if not candidates:
                break
            chosen: str | None = None
            for index, candidate in enumerate(candidates):
                if index == len(candidates) - 1:
                    chosen = candidate
                    break
                if not remaining:
                    raise ValidationError(
                        f"incomplete answer sequence: tree not yet at a leaf (stopped above {candidate!r})"
                    )
                if remaining.pop(0):
                    chosen = candidate
                    break
            current = chosen
        if remaining:
            raise ValidationError(f"{len(remaining)} surplus answer(s) after reaching leaf {current!r}")
        assert current is not None
        return current

    def answers_to(self, leaf: str) -> tuple[bool, ...]:
        """The canonical yes/no answer sequence that classifies to ``leaf``.

        Inverse of :meth:`classify`: one "no" per elder sibling asked before
        the target child, one "yes" if the target child's own question is
        asked (it is not when the target is the last candidate).
        """
        if not self.is_leaf(leaf):
            raise ValidationError(f"{leaf!r} is not a leaf")
        answers: list[bool] = []
        current: str | None = None
        for next_code in self.path_to_root(leaf):
            candidates = self.children(current)
            position = candidates.index(next_code)
            answers.extend([False] * min(position, len(candidates) - 1))
            if position < len(candidates) - 1:
                answers.append(True)
            current = next_code
        return tuple(answers)


@dataclass(frozen=True)
class Catalogue:
    """Validated, immutable snapshot of the whole bundled dataset."""

    entries: tuple[NbsEntry, ...]
    taxonomy: Taxonomy
    facets: tuple[FacetDef, ...]
    crosswalk: tuple[CrosswalkRule, ...]
    exclusions: tuple[ExclusionRecord, ...]
    _by_id: Mapping[str, NbsEntry] = field(repr=False, default_factory=dict)
    _facet_by_id: Mapping[str, FacetDef] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {e.id: e for e in self.entries})
        object.__setattr__(self, "_facet_by_id", {f.id: f for f in self.facets})

    def entry(self, nbs_id: str) -> NbsEntry:
        try:
            return self._by_id[nbs_id]
        except KeyError:
            raise UnknownIdError(f"unknown NBS id {nbs_id!r}") from None

    def __contains__(self, nbs_id: str) -> bool:
        return nbs_id in self._by_id

    @property
    def nbs_ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.entries)

    def facet(self, facet_id: str) -> FacetDef:
        try:
            return self._facet_by_id[facet_id]
        except KeyError:
            raise UnknownIdError(f"unknown facet id {facet_id!r}") from None

    def facet_ids(self, kind: str | None = None, es_category: str | None = None) -> tuple[str, ...]:
        out = []
        for f in self.facets:
            if kind is not None and f.kind != kind:
                continue
            if es_category is not None and f.es_category != es_category:
                continue
            out.append(f.id)
        return tuple(out)

    def crosswalk_map(self) -> dict[tuple[str, str], str]:
        return {(r.project, r.project_facet_label): r.baseline_facet for r in self.crosswalk}

    def projects(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for entry in self.entries:
            for project in entry.project_labels:
                seen.setdefault(project, None)
        return tuple(seen)

    def taxonomy_members(self, code: str) -> tuple[str, ...]:
        """All entry ids whose leaf equals ``code`` or descends from it, in id order."""
        self.taxonomy.node(code)
        members = [
            e.id for e in self.entries if self.taxonomy.descends_from(e.taxonomy_leaf, code)
        ]
        return tuple(sorted(members, key=nbs_sort_key))


def classify(taxonomy: Taxonomy, answers: Iterable[bool]) -> str:
    """Module-level alias for :meth:`Taxonomy.classify`."""
    return taxonomy.classify(answers)


# --- loading ---------------------------------------------------------------

_ENTRY_FIELDS = {
    "id", "final_name", "aliases", "description", "taxonomy_leaf",
    "project_labels", "name_provenance", "taxonomy_inferred",
}


def _read_csv(path: Path, required: Sequence[str]) -> list[dict[str, str]]:
    if not path.is_file():
        raise DataFormatError("file not found", source=str(path))
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise DataFormatError(f"missing columns {missing}", source=str(path), line=1)
        rows = []
        for i, row in enumerate(reader, start=2):
            if any(v is None for v in row.values()):
                raise DataFormatError("short row", source=str(path), line=i)
            rows.append(row)
        return rows


def _load_entries(path: Path) -> tuple[NbsEntry, ...]:
    if not path.is_file():
        raise DataFormatError("file not found", source=str(path))
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc}", source=str(path), line=exc.lineno) from exc
    if not isinstance(raw, list):
        raise DataFormatError("top level must be a list of entries", source=str(path))
    entries = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise DataFormatError(f"entry #{i} is not an object", source=str(path))
        unknown = set(item) - _ENTRY_FIELDS
        if unknown:
            raise DataFormatError(f"entry #{i} has unknown fields {sorted(unknown)}", source=str(path))
        try:
            labels = {
                str(project): tuple(str(x) for x in names)
                for project, names in dict(item["project_labels"]).items()
            }
            entries.append(
                NbsEntry(
                    id=str(item["id"]),
                    final_name=str(item["final_name"]),
                    aliases=tuple(str(a) for a in item.get("aliases", [])),
                    description=str(item.get("description", "")),
                    taxonomy_leaf=str(item["taxonomy_leaf"]),
                    project_labels=labels,
                    name_provenance=str(item["name_provenance"]),
                    taxonomy_inferred=bool(item.get("taxonomy_inferred", False)),
                )
            )
        except KeyError as exc:
            raise DataFormatError(f"entry #{i} missing field {exc}", source=str(path)) from exc
    return tuple(entries)


def _load_taxonomy(path: Path) -> Taxonomy:
    nodes = []
    for row in _read_csv(path, ["code", "parent", "level", "question"]):
        try:
            level = int(row["level"])
        except ValueError as exc:
            raise DataFormatError(f"non-integer level {row['level']!r}", source=str(path)) from exc
        nodes.append(
            TaxonomyNode(
                code=row["code"],
                parent=row["parent"] or None,
                level=level,
                question=row["question"],
            )
        )
    return Taxonomy(nodes)


def _load_facets(path: Path) -> tuple[FacetDef, ...]:
    facets = []
    for row in _read_csv(path, ["id", "kind", "es_category", "label"]):
        facets.append(
            FacetDef(
                id=row["id"],
                kind=row["kind"],
                es_category=row["es_category"] or None,
                label=row["label"],
            )
        )
    return tuple(facets)


def _load_crosswalk(path: Path) -> tuple[CrosswalkRule, ...]:
    rules = []
    for row in _read_csv(path, ["project", "project_facet_label", "baseline_facet", "inferred"]):
        rules.append(
            CrosswalkRule(
                project=row["project"],
                project_facet_label=row["project_facet_label"],
                baseline_facet=row["baseline_facet"],
                inferred=row["inferred"].strip().lower() in ("1", "true", "yes"),
            )
        )
    return tuple(rules)


def _load_exclusions(path: Path) -> tuple[ExclusionRecord, ...]:
    records = []
    for row in _read_csv(path, ["item_name", "project", "reason"]):
        records.append(
            ExclusionRecord(item_name=row["item_name"], project=row["project"], reason=row["reason"])
        )
    return tuple(records)


def _validate_catalogue(cat: Catalogue) -> None:
    seen_ids: set[str] = set()
    for entry in cat.entries:
        if not _NBS_ID.match(entry.id):
            raise ValidationError(f"malformed NBS id {entry.id!r}")
        if entry.id in seen_ids:
            raise ValidationError(f"duplicate NBS id {entry.id!r}")
        seen_ids.add(entry.id)
        if entry.taxonomy_leaf not in cat.taxonomy:
            raise ValidationError(f"{entry.id}: taxonomy leaf {entry.taxonomy_leaf!r} does not exist")
        if not cat.taxonomy.is_leaf(entry.taxonomy_leaf):
            raise ValidationError(f"{entry.id}: {entry.taxonomy_leaf!r} is not a leaf of the taxonomy")
        contributing = [p for p, names in entry.project_labels.items() if names]
        if len(contributing) < 2:
            raise ValidationError(
                f"{entry.id}: must carry source labels from at least 2 projects, has {len(contributing)}"
            )
        if entry.name_provenance not in NAME_PROVENANCES:
            raise ValidationError(f"{entry.id}: unknown name provenance {entry.name_provenance!r}")

    facet_ids: set[str] = set()
    n_uc = n_es = 0
    for facet in cat.facets:
        if facet.id in facet_ids:
            raise ValidationError(f"duplicate facet id {facet.id!r}")
        facet_ids.add(facet.id)
        if facet.kind not in FACET_KINDS:
            raise ValidationError(f"facet {facet.id}: unknown kind {facet.kind!r}")
        if facet.kind == "UrbanChallenge":
            n_uc += 1
            if facet.es_category is not None:
                raise ValidationError(f"facet {facet.id}: urban challenges carry no ES category")
        else:
            n_es += 1
            if facet.es_category not in ES_CATEGORIES:
                raise ValidationError(f"facet {facet.id}: ES category {facet.es_category!r} invalid")
    if (n_uc, n_es) != (10, 19):
        raise ValidationError(f"baseline must hold 10 urban challenges and 19 ecosystem services, got {n_uc}/{n_es}")

    seen_rules: set[tuple[str, str]] = set()
    for rule in cat.crosswalk:
        key = (rule.project, rule.project_facet_label)
        if key in seen_rules:
            raise ValidationError(f"crosswalk maps {key} twice")
        seen_rules.add(key)
        if rule.baseline_facet not in facet_ids:
            raise ValidationError(f"crosswalk {key} targets unknown facet {rule.baseline_facet!r}")

    for record in cat.exclusions:
        if record.reason not in EXCLUSION_REASONS:
            raise ValidationError(f"exclusion {record.item_name!r}: unknown reason {record.reason!r}")


def load_catalogue(path: str | Path) -> Catalogue:
    """Load and validate a catalogue directory.

    Expects ``entries.json``, ``taxonomy.csv``, ``facets.csv``,
    ``crosswalk.csv`` and ``exclusions.csv`` under ``path``. Raises
    :class:`DataFormatError` on parse problems and :class:`ValidationError`
    naming the violated invariant otherwise.
    """
    root = Path(path)
    cat = Catalogue(
        entries=_load_entries(root / "entries.json"),
        taxonomy=_load_taxonomy(root / "taxonomy.csv"),
        facets=_load_facets(root / "facets.csv"),
        crosswalk=_load_crosswalk(root / "crosswalk.csv"),
        exclusions=_load_exclusions(root / "exclusions.csv"),
    )
    _validate_catalogue(cat)
    return cat


def bundled_data_dir() -> Path:
    """Directory holding the bundled dataset shipped inside the package."""
    return Path(__file__).resolve().parent / "data"


def load_bundled_catalogue() -> Catalogue:
    return load_catalogue(bundled_data_dir() / "catalogue")
