"""Run reports: JSON document, tab-separated table, and matplotlib figures."""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

PASS_COLOR, FAIL_COLOR = "#3b7d3b", "#b03a2e"


def to_jsonable(x):
    """Witnesses are arbitrary python values; make them serializable and stable."""
    if isinstance(x, (str, int, float, bool)) or x is None:
        return x
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in sorted(x.items(), key=lambda kv: repr(kv[0]))}
    if isinstance(x, (frozenset, set)):
        return sorted((to_jsonable(v) for v in x), key=repr)
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    return repr(x)


@dataclass
class Result:
    name: str
    ok: bool
    witness: object = None
    detail: str = ""
    elapsed: float = 0.0

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "status": "PASS" if self.ok else "FAIL",
            "witness": to_jsonable(self.witness),
            "detail": self.detail,
            "elapsed_s": round(self.elapsed, 4),
        }


@dataclass
class RunReport:
    command: str
    inputs: dict = field(default_factory=dict)  # file -> sha256
    results: list = field(default_factory=list)
    output: object = None
    elapsed: float = 0.0
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def add(self, result: Result) -> Result:
        self.results.append(result)
        return result

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    def finish(self) -> "RunReport":
        self.elapsed = time.perf_counter() - self._t0
        self.results.sort(key=lambda r: r.name)
        return self

    def as_dict(self, timings: bool = True) -> dict:
        doc = {
            "command": self.command,
            "inputs": dict(sorted(self.inputs.items())),
            "ok": self.ok,
            "results": [r.as_dict() for r in self.results],
            "output": to_jsonable(self.output),
        }
        if timings:
            doc["elapsed_s"] = round(self.elapsed, 4)
        else:
            for r in doc["results"]:
                r.pop("elapsed_s")
        return doc

    def write_json(self, path, timings: bool = True) -> None:
        Path(path).write_text(json.dumps(self.as_dict(timings), indent=2) + "\n")

    def write_tsv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, delimiter="\t", lineterminator="\n")
            out.writerow(["check", "status", "elapsed_s", "detail", "witness"])
            for r in self.results:
                d = r.as_dict()
                out.writerow([d["name"], d["status"], d["elapsed_s"], d["detail"], json.dumps(d["witness"])])


def plot_results(report: RunReport, path) -> None:
    """Horizontal bars of per-check run time, coloured by outcome."""
    rows = report.results
    fig, ax = plt.subplots(figsize=(7, 0.35 * len(rows) + 1.2))
    ax.barh(
        [r.name for r in rows],
        [max(r.elapsed, 1e-4) for r in rows],
        color=[PASS_COLOR if r.ok else FAIL_COLOR for r in rows],
    )
    ax.invert_yaxis()
    ax.set_xscale("log")
    ax.set_xlabel("seconds")
    ax.set_title(f"{report.command}: {sum(r.ok for r in rows)}/{len(rows)} pass")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_hasse(w, path, title: str = "") -> None:
    """Hasse diagram of a poset; strict-relation covers drawn solid, other covers dashed."""
    import networkx as nx

    p = w.base
    strict = p.strict()
    covers = [
        (u, v) for u, v in strict if not any((u, x) in strict and (x, v) in strict for x in p.elements)
    ]
    g = nx.DiGraph()
    g.add_nodes_from(p.elements)
    g.add_edges_from(covers)
    level = {}
    for e in nx.topological_sort(g):
        level[e] = max((level[u] + 1 for u, _ in g.in_edges(e)), default=0)
    by_level: dict = {}
    for e in p.elements:
        by_level.setdefault(level[e], []).append(e)
    pos = {e: (i - (len(row) - 1) / 2, lv) for lv, row in by_level.items() for i, e in enumerate(row)}
    fig, ax = plt.subplots(figsize=(4, 0.8 * (max(by_level, default=0) + 2)))
    for u, v in covers:
        style = "-" if (u, v) in w.prec else "--"
        ax.plot(*zip(pos[u], pos[v]), style, color="0.3", lw=1)
    for e, (x, y) in pos.items():
        ax.annotate(str(e), (x, y), ha="center", va="center", fontsize=8,
                    bbox=dict(boxstyle="round", fc="white", ec="0.3"))
    ax.set_axis_off()
    ax.set_title(title or f"{len(p.elements)} elements")
    ax.margins(0.2)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_sequence(values, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6, 2.5))
    ax.step(range(len(values)), values, where="mid", color=PASS_COLOR)
    ax.plot(range(len(values)), values, "o", color=PASS_COLOR, ms=3)
    ax.set_xlabel("position")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
