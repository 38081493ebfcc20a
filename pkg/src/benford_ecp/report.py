"""Dataset analysis report: statistics, critical values, ECPs and conformity classes."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .statistics import StatisticKind


@dataclass
class StatisticRow:
    kind: str
    value: float
    critical: dict[str, float]
    significant: dict[str, bool]
    ecp: float
    ecp_method: str
    clamped: str
    ecp_std_error: float | None = None
    approximate: bool = False

    @property
    def label(self) -> str:
        return StatisticKind(self.kind).label


@dataclass
class AnalysisReport:
    label: str
    n: int
    skipped: int
    parse_failures: int
    contaminant: str
    seed: int
    counts: dict[str, int]
    rows: list[StatisticRow]
    mad_class: str
    ssd_class: str
    settings: dict = field(default_factory=dict)

    def __post_init__(self):
        kinds = [r.kind for r in self.rows]
        if len(kinds) != len(set(kinds)):
            raise ValueError("each statistic carries exactly one ECP estimate")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "AnalysisReport":
        data = dict(data)
        data["rows"] = [StatisticRow(**r) for r in data["rows"]]
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "AnalysisReport":
        return cls.from_dict(json.loads(text))

    def render_text(self) -> str:
        levels = sorted(self.rows[0].critical, key=float) if self.rows else []
        out = [
            f"dataset: {self.label}",
            f"n = {self.n} (skipped {self.skipped}, unparseable {self.parse_failures})",
            f"contaminant: {self.contaminant}   seed: {self.seed}",
            "digit counts: " + " ".join(f"{d}:{c}" for d, c in self.counts.items()),
            "",
        ]
        head = f"{'statistic':<12}{'value':>12}" + "".join(f"{'crit ' + lv:>12}" for lv in levels)
        out.append(head + f"{'ECP':>10}  method")
        for r in self.rows:
            marks = "".join("*" if r.significant[lv] else "" for lv in levels)
            line = f"{r.label:<12}{_fmt(r.value) + marks:>12}"
            line += "".join(f"{_fmt(r.critical[lv]):>12}" for lv in levels)
            ecp = f"{100 * r.ecp:.2f}%"
            note = r.ecp_method
            if r.clamped != "none":
                note += f", {r.clamped}"
            if r.approximate:
                note += ", approximate"
            if r.ecp_std_error is not None:
                note += f", se {100 * r.ecp_std_error:.2f}pp"
            out.append(f"{line}{ecp:>10}  {note}")
        out += [
            "",
            "* per level exceeded, in the column order above",
            f"MAD conformity: {self.mad_class}",
            f"SSD conformity: {self.ssd_class}",
        ]
        return "\n".join(out) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.4f}" if x >= 0.1 else f"{x:.6f}"
